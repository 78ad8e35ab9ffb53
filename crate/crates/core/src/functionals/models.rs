//! Closed model manifolds as finite atlases with a partition of unity.
//!
//! Spheres use hyperspherical charts whose degenerate sets are coordinate
//! subspheres of the ambient Euclidean space. Permuting the ambient
//! coordinates moves that set around. Chart weights are sums of squares of
//! ambient coordinates that vanish on the chart's degenerate set and add up
//! to `|x|^2 = 1`, so weighted integrands stay trigonometric polynomials
//! times the integrand and product Gauss-Legendre converges quickly.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::jet::Jet;
use crate::tensor_lab::{
    flat, s3xs1, s4_round, ConformalField, MetricChart, Point, ScalarFn, DIM,
};

/// Map from chart coordinates to ambient coordinates, on jets.
pub type AmbientMap = Arc<dyn Fn(&[Jet; DIM]) -> Vec<Jet> + Send + Sync>;
/// Partition-of-unity weight as a function of ambient coordinates.
pub type WeightFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// A function on the model given in ambient coordinates.
pub type AmbientFn = Arc<dyn Fn(&[Jet]) -> Jet + Send + Sync>;

/// One chart of an atlas together with its integration box and weight.
#[derive(Clone)]
pub struct AtlasChart {
    pub chart: MetricChart,
    /// Coordinate box integrated over; normally the chart domain.
    pub bounds: [(f64, f64); DIM],
    pub ambient: AmbientMap,
    pub weight: WeightFn,
}

impl AtlasChart {
    pub fn ambient_point(&self, p: &Point) -> Vec<f64> {
        (self.ambient)(&Jet::seed(*p, 0)).iter().map(Jet::value).collect()
    }
}

/// A closed Riemannian 4-manifold prepared for product quadrature.
#[derive(Clone)]
pub struct ClosedModel {
    pub name: String,
    pub charts: Vec<AtlasChart>,
    pub euler_char: i32,
    /// Gauss-Legendre nodes per axis and chart.
    pub n_q: usize,
    /// Yamabe constant used by the Sobolev check, when known.
    pub yamabe: Option<f64>,
}

/// Default number of quadrature nodes per axis.
pub const DEFAULT_NQ: usize = 24;

/// `(cos t1, sin t1 cos t2, .., sin t1 .. sin t_{n-1})` on jets.
fn sphere_embedding(theta: &[Jet]) -> Vec<Jet> {
    let n = theta.len();
    let mut out = Vec::with_capacity(n + 1);
    let mut prod = Jet::constant(1.0, theta[0].order());
    for (k, t) in theta.iter().enumerate() {
        out.push(&prod * &t.cos());
        prod = &prod * &t.sin();
        if k == n - 1 {
            out.push(prod.clone());
        }
    }
    out
}

/// Places `phi[m]` at ambient slot `perm[m]`.
fn permute(phi: Vec<Jet>, perm: &[usize]) -> Vec<Jet> {
    let mut out = phi.clone();
    for (m, v) in phi.into_iter().enumerate() {
        out[perm[m]] = v;
    }
    out
}

/// Weights `psi_i = sum_{m in groups[i]} x_m^2`; the groups partition the
/// ambient coordinates so the weights sum to one on the unit sphere.
fn square_weights(groups: Vec<Vec<usize>>) -> Vec<WeightFn> {
    groups
        .into_iter()
        .map(|g| Arc::new(move |x: &[f64]| g.iter().map(|&m| x[m] * x[m]).sum::<f64>()) as WeightFn)
        .collect()
}

const S4_PERMS: [[usize; 5]; 3] = [[0, 1, 2, 3, 4], [2, 3, 4, 0, 1], [4, 0, 1, 2, 3]];
const S3_PERMS: [[usize; 4]; 2] = [[0, 1, 2, 3], [2, 3, 0, 1]];

fn s4_atlas(radius: f64, field_for: impl Fn(MetricChart, &AmbientMap) -> MetricChart) -> Vec<AtlasChart> {
    // chart i degenerates where ambient slots perm[3] and perm[4] vanish;
    // each weight below vanishes there
    let weights = square_weights(vec![vec![3, 4], vec![0, 1], vec![2]]);
    S4_PERMS
        .iter()
        .zip(weights)
        .map(|(perm, weight)| {
            let perm = *perm;
            let ambient: AmbientMap = Arc::new(move |x: &[Jet; DIM]| permute(sphere_embedding(x), &perm));
            let base = s4_round(radius);
            let bounds = base.domain;
            let chart = field_for(base, &ambient);
            AtlasChart { chart, bounds, ambient, weight }
        })
        .collect()
}

impl ClosedModel {
    /// Round sphere of the given radius.
    pub fn round_s4(radius: f64, n_q: usize) -> Self {
        ClosedModel {
            name: format!("s4_round({radius})"),
            charts: s4_atlas(radius, |c, _| c),
            euler_char: 2,
            n_q,
            yamabe: Some(12.0 * (8.0 * PI * PI / 3.0).sqrt()),
        }
    }

    /// `e^{2w} g_round` for a smooth `w` given on the ambient `R^5`.
    pub fn conformal_s4(w: AmbientFn, label: &str, n_q: usize) -> Self {
        let charts = s4_atlas(1.0, |c, ambient| {
            let ambient = ambient.clone();
            let w = w.clone();
            let wf = move |x: &[Jet; DIM]| w(&ambient(x));
            let field = ConformalField { base: c.field.clone(), w: Arc::new(wf) as Arc<dyn ScalarFn> };
            MetricChart::new(format!("conformal({}, {label})", c.name), c.domain, Arc::new(field))
        });
        ClosedModel {
            name: format!("conformal_s4({label})"),
            charts,
            euler_char: 2,
            n_q,
            yamabe: Some(12.0 * (8.0 * PI * PI / 3.0).sqrt()),
        }
    }

    /// `S^3(r3) x S^1` with circle length `length`.
    pub fn s3xs1(r3: f64, length: f64, n_q: usize) -> Self {
        let weights = square_weights(vec![vec![2, 3], vec![0, 1]]);
        let charts = S3_PERMS
            .iter()
            .zip(weights)
            .map(|(perm, weight)| {
                let perm = *perm;
                let ambient: AmbientMap = Arc::new(move |x: &[Jet; DIM]| {
                    let mut y = permute(sphere_embedding(&x[..3]), &perm);
                    y.push(x[3].clone());
                    y
                });
                let chart = s3xs1(r3, length);
                AtlasChart { bounds: chart.domain, chart, ambient, weight }
            })
            .collect();
        let vol = 2.0 * PI * PI * r3.powi(3) * length;
        ClosedModel {
            name: format!("s3xs1({r3}, {length})"),
            charts,
            euler_char: 0,
            n_q,
            yamabe: Some(6.0 / (r3 * r3) * vol.sqrt()),
        }
    }

    /// Flat torus `R^4 / (side Z)^4`.
    pub fn flat_torus(side: f64, n_q: usize) -> Self {
        let mut chart = flat();
        chart.domain = [(-side, 2.0 * side); DIM];
        chart.name = format!("flat_torus({side})");
        let ambient: AmbientMap = Arc::new(|x: &[Jet; DIM]| x.to_vec());
        ClosedModel {
            name: format!("flat_torus({side})"),
            charts: vec![AtlasChart {
                chart,
                bounds: [(0.0, side); DIM],
                ambient,
                weight: Arc::new(|_| 1.0),
            }],
            euler_char: 0,
            n_q,
            yamabe: Some(0.0),
        }
    }

    /// Looks up `s4_round(r)`, `s3xs1(r, L)` or `flat_torus(L)`.
    pub fn by_name(spec: &str, n_q: usize) -> Option<Self> {
        let spec = spec.trim();
        let (head, rest) = spec.split_once('(').unwrap_or((spec, ")"));
        let args: Vec<f64> = rest
            .strip_suffix(')')?
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse::<f64>().ok())
            .collect::<Option<_>>()?;
        match (head.trim(), args.as_slice()) {
            ("s4_round" | "s4", []) => Some(Self::round_s4(1.0, n_q)),
            ("s4_round" | "s4", [r]) if *r > 0.0 => Some(Self::round_s4(*r, n_q)),
            ("s3xs1", []) => Some(Self::s3xs1(1.0, 2.0 * PI, n_q)),
            ("s3xs1", [r, l]) if *r > 0.0 && *l > 0.0 => Some(Self::s3xs1(*r, *l, n_q)),
            ("flat_torus" | "torus", []) => Some(Self::flat_torus(1.0, n_q)),
            ("flat_torus" | "torus", [l]) if *l > 0.0 => Some(Self::flat_torus(*l, n_q)),
            _ => None,
        }
    }

    pub fn with_nq(mut self, n_q: usize) -> Self {
        self.n_q = n_q;
        self
    }

    /// Largest `|sum_i psi_i - 1|` over points given in the coordinates of
    /// the first chart.
    pub fn partition_defect(&self, points: &[Point]) -> f64 {
        points
            .iter()
            .map(|p| {
                let x = self.charts[0].ambient_point(p);
                let s: f64 = self.charts.iter().map(|c| (c.weight)(&x)).sum();
                (s - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}


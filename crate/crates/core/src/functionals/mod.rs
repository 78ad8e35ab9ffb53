//! Global integrals over closed model manifolds by product Gauss-Legendre
//! quadrature, and the arithmetic consequences of a lower bound on the
//! sigma_2 mass.

mod models;
mod quadrature;

use std::f64::consts::PI;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::jet::Jet;
use crate::tensor_lab::{CurvatureBundle, Convention, Point, TensorError, DIM};

pub use models::{AmbientFn, AmbientMap, AtlasChart, ClosedModel, WeightFn, DEFAULT_NQ};
pub use quadrature::{gauss_legendre, gauss_legendre_on, integrate_1d};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FunctionalError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("integrand is not finite at {point:?} in chart `{chart}`")]
    QuadratureOverflow { chart: String, point: Point },
    #[error("sigma_2 mass {0} is outside (0, 16 pi^2]")]
    MassOutOfRange(f64),
    #[error("radial profile is not finite at r = {0}")]
    NonFiniteProfile(f64),
    #[error("radii must be positive and strictly increasing")]
    InvalidRadii,
    #[error("model `{0}` has no Yamabe constant")]
    MissingYamabe(String),
}

pub type Result<T, E = FunctionalError> = std::result::Result<T, E>;

/// Nodes whose partition weight is below this are skipped. A chart weight
/// bounds the smallest metric eigenvalue ratio from below, so evaluated
/// nodes keep a condition number under `1e7`; the skipped mass is below
/// `1e-10` of any integral here.
pub const WEIGHT_CUTOFF: f64 = 1e-7;

/// Everything known at one quadrature node.
pub struct Node<'a> {
    pub chart_index: usize,
    pub point: Point,
    pub ambient: &'a [f64],
    pub bundle: &'a CurvatureBundle,
}

fn thread_count() -> usize {
    std::env::var("CGLAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Sums `f` against the Riemannian measure and the partition of unity.
///
/// Each chart is split into slabs along its first axis; slabs are evaluated
/// in parallel and their partial sums added in a fixed order, so the result
/// does not depend on the number of threads.
pub fn integrate_many<const K: usize>(
    model: &ClosedModel,
    f: &(dyn Fn(&Node) -> Result<[f64; K]> + Sync),
) -> Result<[f64; K]> {
    use rayon::prelude::*;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .expect("thread pool");
    let mut total = [0.0; K];
    for (ci, atlas) in model.charts.iter().enumerate() {
        let axes: Vec<(Vec<f64>, Vec<f64>)> =
            atlas.bounds.iter().map(|(a, b)| gauss_legendre_on(model.n_q, *a, *b)).collect();
        // the innermost axis can reuse one curvature evaluation when the
        // metric does not depend on it
        let reuse = atlas.chart.field.ignores(DIM - 1);
        let slab = |i0: usize| -> Result<[f64; K]> {
            let mut acc = [0.0; K];
            for i1 in 0..model.n_q {
                for i2 in 0..model.n_q {
                    let mut cached: Option<(CurvatureBundle, f64)> = None;
                    for i3 in 0..model.n_q {
                        let idx = [i0, i1, i2, i3];
                        let p: Point = std::array::from_fn(|a| axes[a].0[idx[a]]);
                        let wq: f64 = (0..DIM).map(|a| axes[a].1[idx[a]]).product();
                        let ambient = atlas.ambient_point(&p);
                        let psi = (atlas.weight)(&ambient);
                        if psi < WEIGHT_CUTOFF {
                            continue;
                        }
                        let (bundle, det) = match cached.take() {
                            Some((mut b, det)) => {
                                b.point = p;
                                (b, det)
                            }
                            None => {
                                let b = CurvatureBundle::from_metric_jet(&atlas.chart.metric_jet(&p, 2)?)?;
                                let det = nalgebra::Matrix4::from_fn(|i, j| b.metric[i][j]).determinant();
                                (b, det)
                            }
                        };
                        let node = Node { chart_index: ci, point: p, ambient: &ambient, bundle: &bundle };
                        let vals = f(&node)?;
                        let scale = wq * psi * det.sqrt();
                        for k in 0..K {
                            if !vals[k].is_finite() {
                                return Err(FunctionalError::QuadratureOverflow {
                                    chart: atlas.chart.name.clone(),
                                    point: p,
                                });
                            }
                            acc[k] += scale * vals[k];
                        }
                        if reuse {
                            cached = Some((bundle, det));
                        }
                    }
                }
            }
            Ok(acc)
        };
        let partials: Vec<Result<[f64; K]>> = pool.install(|| (0..model.n_q).into_par_iter().map(slab).collect());
        for part in partials {
            let part = part?;
            for k in 0..K {
                total[k] += part[k];
            }
        }
    }
    Ok(total)
}

/// `int f dvol` for a pointwise function of the curvature.
pub fn integrate_scalar(model: &ClosedModel, f: &(dyn Fn(&CurvatureBundle) -> f64 + Sync)) -> Result<f64> {
    Ok(integrate_many::<1>(model, &|n| Ok([f(n.bundle)]))?[0])
}

pub fn volume(model: &ClosedModel) -> Result<f64> {
    integrate_scalar(model, &|_| 1.0)
}

/// Both sides of `8 pi^2 chi = int |W|^2/4 + int sigma_2(Ric - R g/6)`.
#[derive(Clone, Debug, Serialize)]
pub struct GaussBonnetReport {
    pub model: String,
    pub chi: i32,
    /// `8 pi^2 chi`.
    pub lhs: f64,
    /// `int |W|^2` with `|W|^2 = W_ijkl W^ijkl`.
    pub weyl_energy: f64,
    /// `int |W|^2 / 4`.
    pub weyl_term: f64,
    /// `int sigma_2(Ric - R g / 6)`.
    pub sigma2_term: f64,
    /// Same integral through `R^2/24 - |E|^2/2`.
    pub sigma2_by_decomposition: f64,
    pub residual: f64,
    pub volume: f64,
}

impl GaussBonnetReport {
    pub fn relative_residual(&self) -> f64 {
        self.residual / self.lhs.abs().max(1.0)
    }

    /// `{model, chi, weyl_energy, sigma2_mass, gb_residual, volume}`.
    pub fn to_json(&self) -> Value {
        json!({
            "model": self.model,
            "chi": self.chi,
            "weyl_energy": self.weyl_energy,
            "sigma2_mass": self.sigma2_term,
            "gb_residual": self.residual,
            "volume": self.volume,
        })
    }
}

pub fn gauss_bonnet_check(model: &ClosedModel) -> Result<GaussBonnetReport> {
    let [vol, w2, s2, s2_dec] = integrate_many::<4>(model, &|n| {
        let b = n.bundle;
        Ok([1.0, b.weyl_norm_sq(), b.sigma(Convention::WeylSchouten, 2)?, b.sigma2_from_decomposition()])
    })?;
    let lhs = 8.0 * PI * PI * model.euler_char as f64;
    Ok(GaussBonnetReport {
        model: model.name.clone(),
        chi: model.euler_char,
        lhs,
        weyl_energy: w2,
        weyl_term: 0.25 * w2,
        sigma2_term: s2,
        sigma2_by_decomposition: s2_dec,
        residual: (lhs - 0.25 * w2 - s2).abs(),
        volume: vol,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SobolevReport {
    /// `Y (int u^4)^{1/2}`.
    pub lhs: f64,
    /// `6 int |grad u|^2 + int R u^2`.
    pub rhs: f64,
    pub satisfied: bool,
}

/// Relative slack allowed in the Sobolev comparison; it absorbs quadrature
/// error in the equality case.
pub const SOBOLEV_REL_TOL: f64 = 1e-9;

/// Evaluates both sides of `Y (int u^4)^{1/2} <= 6 int |grad u|^2 + int R u^2`
/// for `u` given on ambient coordinates.
pub fn sobolev_yamabe_check(model: &ClosedModel, u: &AmbientFn) -> Result<SobolevReport> {
    let y = model.yamabe.ok_or_else(|| FunctionalError::MissingYamabe(model.name.clone()))?;
    let [u4, grad2, ru2] = integrate_many::<3>(model, &|n| {
        let atlas = &model.charts[n.chart_index];
        let uj = u(&(atlas.ambient)(&Jet::seed(n.point, 1)));
        let du = uj.grad();
        let gi = &n.bundle.metric_inv;
        let g2: f64 = (0..DIM).flat_map(|i| (0..DIM).map(move |j| (i, j))).map(|(i, j)| gi[i][j] * du[i] * du[j]).sum();
        let v = uj.value();
        Ok([v.powi(4), g2, n.bundle.scalar * v * v])
    })?;
    let lhs = y * u4.sqrt();
    let rhs = 6.0 * grad2 + ru2;
    Ok(SobolevReport { lhs, rhs, satisfied: lhs <= rhs + SOBOLEV_REL_TOL * rhs.abs().max(lhs.abs()) })
}

/// Consequences of `int sigma_2 >= a0` for a Yamabe metric of volume
/// `8 pi^2 / 3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MassBounds {
    pub a0: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub e_budget: f64,
}

pub fn bounds_from_mass(a0: f64) -> Result<MassBounds> {
    if !(a0 > 0.0 && a0 <= 16.0 * PI * PI) {
        return Err(FunctionalError::MassOutOfRange(a0));
    }
    Ok(MassBounds { a0, r_min: 3.0 / PI * a0.sqrt(), r_max: 12.0, e_budget: 32.0 * PI * PI - 2.0 * a0 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VolumeRow {
    pub r: f64,
    /// Geodesic distance from the origin.
    pub s: f64,
    pub vol: f64,
    /// `vol / s^4`.
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VolumeGrowth {
    pub rows: Vec<VolumeRow>,
    pub ratio_min: f64,
    pub ratio_max: f64,
}

impl VolumeGrowth {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,s,vol,ratio\n");
        for row in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", row.r, row.s, row.vol, row.ratio));
        }
        out
    }

    pub fn is_nonincreasing(&self, tol: f64) -> bool {
        self.rows.windows(2).all(|w| w[1].ratio <= w[0].ratio + tol)
    }
}

/// Geodesic balls about the origin of `e^{2w(|x|)} dx^2`.
pub fn volume_growth_radial(w: &dyn Fn(f64) -> f64, radii: &[f64]) -> Result<VolumeGrowth> {
    if radii.is_empty() || radii[0] <= 0.0 || radii.windows(2).any(|p| p[1] <= p[0]) {
        return Err(FunctionalError::InvalidRadii);
    }
    let checked = |r: f64| -> Result<f64> {
        let v = w(r);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(FunctionalError::NonFiniteProfile(r))
        }
    };
    checked(0.0)?;
    let mut rows = Vec::with_capacity(radii.len());
    let (mut s, mut vol, mut prev) = (0.0, 0.0, 0.0);
    for &r in radii {
        // probe the panel endpoints so that non-finite values surface as errors
        checked(r)?;
        let width = 0.02 * r.max(1.0);
        s += integrate_1d(&|rho| w(rho).exp(), prev, r, width);
        vol += 2.0 * PI * PI * integrate_1d(&|rho| (4.0 * w(rho)).exp() * rho.powi(3), prev, r, width);
        if !(s.is_finite() && vol.is_finite()) {
            return Err(FunctionalError::NonFiniteProfile(r));
        }
        rows.push(VolumeRow { r, s, vol, ratio: vol / s.powi(4) });
        prev = r;
    }
    let ratio_min = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let ratio_max = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(VolumeGrowth { rows, ratio_min, ratio_max })
}

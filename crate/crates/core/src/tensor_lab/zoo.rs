//! Built-in charts, addressable by name.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::jet::Jet;

use super::chart::{MetricChart, MetricField};
use super::conformal::ConformalField;
use super::expr::Expr;
use super::{Result, TensorError, DIM};

fn diagonal(entries: [Jet; DIM]) -> [[Jet; DIM]; DIM] {
    let order = entries[0].order();
    let mut out: [[Jet; DIM]; DIM] = std::array::from_fn(|_| std::array::from_fn(|_| Jet::zero(order)));
    for (i, e) in entries.into_iter().enumerate() {
        out[i][i] = e;
    }
    out
}

/// Euclidean metric.
pub struct FlatField;

impl MetricField for FlatField {
    fn metric(&self, x: &[Jet; DIM]) -> [[Jet; DIM]; DIM] {
        let o = x[0].order();
        diagonal(std::array::from_fn(|_| Jet::constant(1.0, o)))
    }

    fn ignores(&self, _axis: usize) -> bool {
        true
    }
}

/// Round sphere of radius `radius` in hyperspherical angles
/// `(theta1, theta2, theta3, theta4)`.
pub struct RoundS4Field {
    pub radius: f64,
}

impl MetricField for RoundS4Field {
    fn metric(&self, x: &[Jet; DIM]) -> [[Jet; DIM]; DIM] {
        let a2 = self.radius * self.radius;
        let s1 = x[0].sin();
        let s2 = x[1].sin();
        let s3 = x[2].sin();
        let w1 = (&s1 * &s1).scale(a2);
        let w2 = &w1 * &(&s2 * &s2);
        let w3 = &w2 * &(&s3 * &s3);
        diagonal([Jet::constant(a2, x[0].order()), w1, w2, w3])
    }

    fn ignores(&self, axis: usize) -> bool {
        axis == 3
    }
}

/// `S^3(r3) x S^1` in coordinates `(theta1, theta2, theta3, phi)`.
pub struct S3xS1Field {
    pub r3: f64,
}

impl MetricField for S3xS1Field {
    fn metric(&self, x: &[Jet; DIM]) -> [[Jet; DIM]; DIM] {
        let r2 = self.r3 * self.r3;
        let s1 = x[0].sin();
        let s2 = x[1].sin();
        let w1 = (&s1 * &s1).scale(r2);
        let w2 = &w1 * &(&s2 * &s2);
        let o = x[0].order();
        diagonal([Jet::constant(r2, o), w1, w2, Jet::constant(1.0, o)])
    }

    fn ignores(&self, axis: usize) -> bool {
        axis >= 2
    }
}

/// The cylinder `dt^2 + g_{S^3}` in coordinates `(t, theta1, theta2, theta3)`.
pub struct CylinderField;

impl MetricField for CylinderField {
    fn metric(&self, x: &[Jet; DIM]) -> [[Jet; DIM]; DIM] {
        let o = x[0].order();
        let s1 = x[1].sin();
        let s2 = x[2].sin();
        let w1 = &s1 * &s1;
        let w2 = &w1 * &(&s2 * &s2);
        diagonal([Jet::constant(1.0, o), Jet::constant(1.0, o), w1, w2])
    }

    fn ignores(&self, axis: usize) -> bool {
        axis <= 1
    }
}

/// One component `a + b.x + x^T C x + d sin(k.x + phase)` of a perturbation.
#[derive(Clone, Debug)]
struct PerturbTerm {
    a: f64,
    b: [f64; DIM],
    c: [[f64; DIM]; DIM],
    d: f64,
    k: [f64; DIM],
    phase: f64,
}

impl PerturbTerm {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let mut u = || rng.gen_range(-1.0..1.0);
        let mut t = PerturbTerm {
            a: u(),
            b: std::array::from_fn(|_| u()),
            c: [[0.0; DIM]; DIM],
            d: u(),
            k: [0.0; DIM],
            phase: 0.0,
        };
        for i in 0..DIM {
            for j in i..DIM {
                t.c[i][j] = u();
            }
        }
        t.k = std::array::from_fn(|_| 2.0 * u());
        t.phase = PI * (u() + 1.0);
        // on [-1, 1]^4 each monomial is bounded by 1, so this caps |P| at 1
        let total = t.a.abs()
            + t.b.iter().map(|v| v.abs()).sum::<f64>()
            + t.c.iter().flatten().map(|v| v.abs()).sum::<f64>()
            + t.d.abs();
        t.a /= total;
        t.b.iter_mut().for_each(|v| *v /= total);
        t.c.iter_mut().flatten().for_each(|v| *v /= total);
        t.d /= total;
        t
    }

    fn eval(&self, x: &[Jet; DIM]) -> Jet {
        let o = x[0].order();
        let mut s = Jet::constant(self.a, o);
        let mut arg = Jet::constant(self.phase, o);
        for i in 0..DIM {
            s += x[i].scale(self.b[i]);
            arg += x[i].scale(self.k[i]);
            for j in i..DIM {
                if self.c[i][j] != 0.0 {
                    s += (&x[i] * &x[j]).scale(self.c[i][j]);
                }
            }
        }
        s + arg.sin().scale(self.d)
    }
}

/// `delta + amplitude * P(x)` on `[-1, 1]^4` with a seeded random symmetric
/// perturbation satisfying `|P_ij| <= 1` there.
pub struct PerturbedFlatField {
    pub seed: u64,
    pub amplitude: f64,
    terms: Vec<PerturbTerm>,
}

impl PerturbedFlatField {
    pub fn new(seed: u64, amplitude: f64) -> Result<Self> {
        if !(0.0..0.25).contains(&amplitude) {
            return Err(TensorError::UnknownChart(format!(
                "perturbed_flat amplitude must lie in [0, 0.25), got {amplitude}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terms = (0..10).map(|_| PerturbTerm::random(&mut rng)).collect();
        Ok(PerturbedFlatField { seed, amplitude, terms })
    }
}

impl MetricField for PerturbedFlatField {
    fn metric(&self, x: &[Jet; DIM]) -> [[Jet; DIM]; DIM] {
        let o = x[0].order();
        let mut out: [[Jet; DIM]; DIM] = std::array::from_fn(|_| std::array::from_fn(|_| Jet::zero(o)));
        let mut t = 0;
        for i in 0..DIM {
            for j in i..DIM {
                let mut v = self.terms[t].eval(x).scale(self.amplitude);
                t += 1;
                if i == j {
                    v = v + 1.0;
                }
                out[i][j] = v.clone();
                out[j][i] = v;
            }
        }
        out
    }
}

/// The embedding of hyperspherical angles into the unit sphere of `R^5`.
pub fn hyperspherical_embedding(theta: &[f64; DIM]) -> [f64; 5] {
    let [t1, t2, t3, t4] = *theta;
    let (s1, c1) = t1.sin_cos();
    let (s2, c2) = t2.sin_cos();
    let (s3, c3) = t3.sin_cos();
    let (s4, c4) = t4.sin_cos();
    [c1, s1 * c2, s1 * s2 * c3, s1 * s2 * s3 * c4, s1 * s2 * s3 * s4]
}

pub fn flat() -> MetricChart {
    MetricChart::new("flat", [(-10.0, 10.0); DIM], Arc::new(FlatField))
}

pub fn s4_round(radius: f64) -> MetricChart {
    MetricChart::new(
        format!("s4_round({radius})"),
        [(0.0, PI), (0.0, PI), (0.0, PI), (0.0, 2.0 * PI)],
        Arc::new(RoundS4Field { radius }),
    )
}

pub fn s3xs1(r3: f64, length: f64) -> MetricChart {
    MetricChart::new(
        format!("s3xs1({r3}, {length})"),
        [(0.0, PI), (0.0, PI), (0.0, 2.0 * PI), (0.0, length)],
        Arc::new(S3xS1Field { r3 }),
    )
}

pub fn cylinder() -> MetricChart {
    MetricChart::new("cylinder", [(-20.0, 20.0), (0.0, PI), (0.0, PI), (0.0, 2.0 * PI)], Arc::new(CylinderField))
}

pub fn perturbed_flat(seed: u64, amplitude: f64) -> Result<MetricChart> {
    Ok(MetricChart::new(
        format!("perturbed_flat({seed}, {amplitude})"),
        [(-1.0, 1.0); DIM],
        Arc::new(PerturbedFlatField::new(seed, amplitude)?),
    ))
}

pub fn conformal(base: MetricChart, w: Expr) -> MetricChart {
    let name = format!("conformal({}, {})", base.name, w.source());
    let field = ConformalField { base: base.field.clone(), w: Arc::new(w) };
    MetricChart::new(name, base.domain, Arc::new(field))
}

/// Splits `a, b(c, d), e` at top-level commas.
fn split_args(s: &str) -> Option<Vec<&str>> {
    let mut depth = 0i32;
    let mut start = 0;
    let mut out = Vec::new();
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return None;
                }
            }
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return None;
    }
    out.push(s[start..].trim());
    Some(out)
}

/// Looks up a chart such as `s4_round(1)` or `conformal(cylinder, log(sech(t)))`.
pub fn chart_by_name(spec: &str) -> Result<MetricChart> {
    let spec = spec.trim();
    let unknown = || TensorError::UnknownChart(spec.to_string());
    let (head, args) = match spec.find('(') {
        Some(i) => {
            if !spec.ends_with(')') {
                return Err(unknown());
            }
            (spec[..i].trim(), split_args(&spec[i + 1..spec.len() - 1]).ok_or_else(unknown)?)
        }
        None => (spec, Vec::new()),
    };
    let num = |s: &str| s.parse::<f64>().map_err(|_| unknown());
    match (head, args.as_slice()) {
        ("flat", []) => Ok(flat()),
        ("cylinder", []) => Ok(cylinder()),
        ("s4_round", []) => Ok(s4_round(1.0)),
        ("s4_round", [r]) => {
            let r = num(r)?;
            if r > 0.0 {
                Ok(s4_round(r))
            } else {
                Err(unknown())
            }
        }
        ("s3xs1", [r, l]) => {
            let (r, l) = (num(r)?, num(l)?);
            if r > 0.0 && l > 0.0 {
                Ok(s3xs1(r, l))
            } else {
                Err(unknown())
            }
        }
        ("perturbed_flat", [seed, amp]) => {
            let seed = seed.parse::<u64>().map_err(|_| unknown())?;
            perturbed_flat(seed, num(amp)?)
        }
        ("conformal", [base, w]) => Ok(conformal(chart_by_name(base)?, Expr::parse(w)?)),
        _ => Err(unknown()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_resolve() {
        for name in [
            "flat",
            "cylinder",
            "s4_round(2)",
            "s3xs1(1, 6.283185307179586)",
            "perturbed_flat(7, 0.1)",
            "conformal(cylinder, log(sech(t)))",
            "conformal(conformal(flat, 0.1*x0), x1^2)",
        ] {
            assert!(chart_by_name(name).is_ok(), "{name}");
        }
        for bad in ["sphere", "s4_round(-1)", "s4_round(1", "perturbed_flat(1, 0.3)", "conformal(flat)"] {
            assert!(chart_by_name(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn perturbation_is_bounded_and_positive() {
        let chart = perturbed_flat(3, 0.24).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..200 {
            let p: [f64; DIM] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let g = chart.metric_value(&p);
            for i in 0..DIM {
                for j in 0..DIM {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    assert!((g[i][j] - delta).abs() <= 0.24 + 1e-12);
                    assert_eq!(g[i][j], g[j][i]);
                }
            }
            assert!(super::super::check_metric(&g, p).is_ok());
        }
    }

    #[test]
    fn embedding_lands_on_unit_sphere() {
        let x = hyperspherical_embedding(&[0.3, 1.2, 2.5, 4.0]);
        let n: f64 = x.iter().map(|v| v * v).sum();
        assert!((n - 1.0).abs() < 1e-15);
    }
}

use std::fmt;
use std::sync::Arc;

use crate::jet::{Jet, MAX_ORDER};

use super::fd;
use super::{Point, Result, Tensor2, TensorError, DIM};

/// A metric given as a function of coordinate jets.
///
/// Evaluating on seeded jets yields exact Taylor coefficients, which is how
/// the analytic scheme obtains derivatives of `g`. Implementations that only
/// know a few derivatives report that through `max_order`.
pub trait MetricField: Send + Sync {
    fn metric(&self, x: &[Jet; DIM]) -> [[Jet; DIM]; DIM];

    /// Highest derivative order of `g` that `metric` reproduces exactly.
    fn max_order(&self) -> usize {
        MAX_ORDER
    }

    /// True when the metric does not depend on coordinate `axis`.
    fn ignores(&self, _axis: usize) -> bool {
        false
    }
}

type ValueFn = dyn Fn(Point) -> Tensor2 + Send + Sync;
type FirstFn = dyn Fn(Point) -> [Tensor2; DIM] + Send + Sync;
type SecondFn = dyn Fn(Point) -> [[Tensor2; DIM]; DIM] + Send + Sync;

/// A metric described by plain closures for `g`, `d_a g` and `d_a d_b g`.
///
/// Only the supplied derivatives are available, so such a chart cannot feed
/// the fourth-order Bach pipeline.
#[derive(Clone)]
pub struct FnField {
    g: Arc<ValueFn>,
    dg: Option<Arc<FirstFn>>,
    ddg: Option<Arc<SecondFn>>,
}

impl FnField {
    pub fn new(g: impl Fn(Point) -> Tensor2 + Send + Sync + 'static) -> Self {
        FnField { g: Arc::new(g), dg: None, ddg: None }
    }

    pub fn with_first(mut self, dg: impl Fn(Point) -> [Tensor2; DIM] + Send + Sync + 'static) -> Self {
        self.dg = Some(Arc::new(dg));
        self
    }

    pub fn with_second(
        mut self,
        ddg: impl Fn(Point) -> [[Tensor2; DIM]; DIM] + Send + Sync + 'static,
    ) -> Self {
        self.ddg = Some(Arc::new(ddg));
        self
    }
}

impl MetricField for FnField {
    fn metric(&self, x: &[Jet; DIM]) -> [[Jet; DIM]; DIM] {
        let order = x[0].order().min(self.max_order());
        let p: Point = std::array::from_fn(|a| x[a].value());
        let g = (self.g)(p);
        let dg = if order >= 1 { self.dg.as_ref().map(|f| f(p)) } else { None };
        let ddg = if order >= 2 { self.ddg.as_ref().map(|f| f(p)) } else { None };
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let mut coeffs = vec![g[i][j]];
                if let Some(dg) = &dg {
                    coeffs.extend((0..DIM).map(|a| dg[a][i][j]));
                }
                if let Some(ddg) = &ddg {
                    for k in 1 + DIM..crate::jet::term_count(2) {
                        let e = crate::jet::exponent(k);
                        let mut ab = (0..DIM).flat_map(|a| std::iter::repeat(a).take(e[a] as usize));
                        let (a, b) = (ab.next().unwrap(), ab.next().unwrap());
                        let sym = if a == b { 0.5 } else { 1.0 };
                        coeffs.push(sym * ddg[a][b][i][j]);
                    }
                }
                let local = Jet::from_coeffs(order, &coeffs);
                // re-expand around the actual jet arguments so that callers
                // passing non-seed jets still get a correct composition
                compose_linear(&local, x)
            })
        })
    }

    fn max_order(&self) -> usize {
        match (&self.dg, &self.ddg) {
            (None, _) => 0,
            (Some(_), None) => 1,
            (Some(_), Some(_)) => 2,
        }
    }
}

/// Substitutes `x - x(0)` into a polynomial given by local Taylor data.
fn compose_linear(local: &Jet, x: &[Jet; DIM]) -> Jet {
    let order = local.order().min(x[0].order());
    let mut out = Jet::constant(local.value(), order);
    if order == 0 {
        return out;
    }
    let dx: [Jet; DIM] = std::array::from_fn(|a| x[a].truncate(order) - x[a].value());
    for k in 1..crate::jet::term_count(order) {
        let c = local.coeffs()[k];
        if c == 0.0 {
            continue;
        }
        let e = crate::jet::exponent(k);
        let mut term = Jet::constant(c, order);
        for a in 0..DIM {
            for _ in 0..e[a] {
                term = &term * &dx[a];
            }
        }
        out += term;
    }
    out
}

/// How derivatives of the metric are obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DerivScheme {
    /// Exact Taylor coefficients from the field.
    Analytic,
    /// Central differences with step `h` up to second order and `h_high`
    /// for third and fourth derivatives.
    FiniteDifference { h: f64, h_high: f64 },
}

/// Metric components and their derivatives at a point as jets.
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub point: Point,
    pub order: usize,
    pub g: [[Jet; DIM]; DIM],
}

impl MetricJet {
    pub fn value(&self) -> Tensor2 {
        std::array::from_fn(|i| std::array::from_fn(|j| self.g[i][j].value()))
    }
}

/// A coordinate patch of a Riemannian 4-manifold.
#[derive(Clone)]
pub struct MetricChart {
    pub name: String,
    pub domain: [(f64, f64); DIM],
    pub field: Arc<dyn MetricField>,
    pub scheme: DerivScheme,
}

impl fmt::Debug for MetricChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricChart")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("scheme", &self.scheme)
            .finish()
    }
}

impl MetricChart {
    pub fn new(name: impl Into<String>, domain: [(f64, f64); DIM], field: Arc<dyn MetricField>) -> Self {
        MetricChart { name: name.into(), domain, field, scheme: DerivScheme::Analytic }
    }

    pub fn min_extent(&self) -> f64 {
        self.domain.iter().map(|(a, b)| b - a).fold(f64::INFINITY, f64::min)
    }

    /// Switches to finite differences with explicit steps.
    pub fn with_fd_steps(mut self, h: f64, h_high: f64) -> Result<Self> {
        let limit = 1e-2 * self.min_extent();
        for step in [h, h_high] {
            if !(step > 0.0 && step < limit) {
                return Err(TensorError::InvalidStep { chart: self.name.clone(), h: step });
            }
        }
        self.scheme = DerivScheme::FiniteDifference { h, h_high };
        Ok(self)
    }

    /// Finite differences with the default steps: `1e-4` of the smallest
    /// extent for second derivatives, `1e-3` for the fourth-order pipeline.
    pub fn with_default_fd(self) -> Self {
        let e = self.min_extent();
        self.with_fd_steps(1e-4 * e, 1e-3 * e * 0.999)
            .expect("default steps satisfy the step bound")
    }

    pub fn with_analytic(mut self) -> Self {
        self.scheme = DerivScheme::Analytic;
        self
    }

    /// Distance from `p` to the boundary required by the scheme for
    /// derivatives up to `order`.
    pub fn margin(&self, order: usize) -> f64 {
        match self.scheme {
            DerivScheme::Analytic => 0.0,
            DerivScheme::FiniteDifference { h, h_high } => {
                if order <= 2 {
                    2.0 * h
                } else {
                    4.0 * h_high
                }
            }
        }
    }

    pub fn contains(&self, p: &Point, margin: f64) -> bool {
        p.iter().zip(&self.domain).all(|(x, (a, b))| x.is_finite() && *x > a + margin && *x < b - margin)
    }

    pub fn check_point(&self, p: &Point, order: usize) -> Result<()> {
        let margin = self.margin(order);
        if self.contains(p, margin) {
            Ok(())
        } else {
            Err(TensorError::PointOutsideDomain { chart: self.name.clone(), point: *p, margin })
        }
    }

    pub fn metric_value(&self, p: &Point) -> Tensor2 {
        let g = self.field.metric(&Jet::seed(*p, 0));
        std::array::from_fn(|i| std::array::from_fn(|j| g[i][j].value()))
    }

    /// Metric jet of the requested order at `p`.
    pub fn metric_jet(&self, p: &Point, order: usize) -> Result<MetricJet> {
        self.check_point(p, order)?;
        let g = match self.scheme {
            DerivScheme::Analytic => {
                let available = self.field.max_order();
                if order > available {
                    return Err(TensorError::DerivativeUnavailable {
                        chart: self.name.clone(),
                        available,
                        required: order,
                    });
                }
                self.field.metric(&Jet::seed(*p, order))
            }
            DerivScheme::FiniteDifference { h, h_high } => {
                let step = if order <= 2 { h } else { h_high };
                fd::metric_jet(|q| self.metric_value(q), p, step, order)
            }
        };
        Ok(MetricJet { point: *p, order, g })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Poly;

    impl MetricField for Poly {
        fn metric(&self, x: &[Jet; DIM]) -> [[Jet; DIM]; DIM] {
            std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    let base = if i == j { 1.0 } else { 0.0 };
                    (&x[0] * &x[1]).scale(0.1 * (i + j) as f64) + base
                })
            })
        }
    }

    #[test]
    fn fd_step_bound_enforced() {
        let c = MetricChart::new("poly", [(-1.0, 1.0); 4], Arc::new(Poly));
        assert!(c.clone().with_fd_steps(0.0, 1e-3).is_err());
        assert!(c.clone().with_fd_steps(1e-4, 0.02).is_err());
        assert!(c.with_fd_steps(1e-4, 1e-3).is_ok());
    }

    #[test]
    fn margins_follow_scheme() {
        let c = MetricChart::new("poly", [(-1.0, 1.0); 4], Arc::new(Poly)).with_fd_steps(1e-3, 5e-3).unwrap();
        let p = [1.0 - 3e-3, 0.0, 0.0, 0.0];
        assert!(c.metric_jet(&p, 2).is_ok());
        assert!(matches!(c.metric_jet(&p, 4), Err(TensorError::PointOutsideDomain { .. })));
        let analytic = c.with_analytic();
        assert!(matches!(analytic.metric_jet(&[1.0, 0.0, 0.0, 0.0], 0), Err(TensorError::PointOutsideDomain { .. })));
    }

    #[test]
    fn closure_field_reports_available_order() {
        let field = FnField::new(|p| {
            let mut g = [[0.0; 4]; 4];
            for i in 0..4 {
                g[i][i] = 1.0 + p[0] * p[0];
            }
            g
        })
        .with_first(|p| {
            let mut d = [[[0.0; 4]; 4]; 4];
            for i in 0..4 {
                d[0][i][i] = 2.0 * p[0];
            }
            d
        })
        .with_second(|_| {
            let mut d = [[[[0.0; 4]; 4]; 4]; 4];
            for i in 0..4 {
                d[0][0][i][i] = 2.0;
            }
            d
        });
        let chart = MetricChart::new("closure", [(-1.0, 1.0); 4], Arc::new(field));
        let j = chart.metric_jet(&[0.3, 0.0, 0.0, 0.0], 2).unwrap();
        assert!((j.g[1][1].partial([1, 0, 0, 0]) - 0.6).abs() < 1e-15);
        assert!((j.g[1][1].second(0, 0) - 2.0).abs() < 1e-15);
        assert!(matches!(
            chart.metric_jet(&[0.3, 0.0, 0.0, 0.0], 4),
            Err(TensorError::DerivativeUnavailable { available: 2, required: 4, .. })
        ));
    }
}

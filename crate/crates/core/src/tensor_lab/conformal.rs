use std::sync::Arc;

use crate::jet::Jet;

use super::chart::{MetricChart, MetricField};
use super::curvature::curvature;
use super::{Point, Result, Tensor2, DIM};

/// A scalar function evaluated on coordinate jets.
pub trait ScalarFn: Send + Sync {
    fn eval(&self, x: &[Jet; DIM]) -> Jet;
}

impl<F> ScalarFn for F
where
    F: Fn(&[Jet; DIM]) -> Jet + Send + Sync,
{
    fn eval(&self, x: &[Jet; DIM]) -> Jet {
        self(x)
    }
}

/// The metric `e^{2w} g_0`.
#[derive(Clone)]
pub struct ConformalField {
    pub base: Arc<dyn MetricField>,
    pub w: Arc<dyn ScalarFn>,
}

impl MetricField for ConformalField {
    fn metric(&self, x: &[Jet; DIM]) -> [[Jet; DIM]; DIM] {
        let factor = self.w.eval(x).scale(2.0).exp();
        let g0 = self.base.metric(x);
        std::array::from_fn(|i| std::array::from_fn(|j| &g0[i][j] * &factor))
    }

    fn max_order(&self) -> usize {
        self.base.max_order()
    }
}

/// Schouten tensor `(Ric - R g/6)/2` of `e^{2w} g_0` from the
/// transformation law
/// `A = -Hess_0 w + dw (x) dw - |dw|_0^2 g_0 / 2 + A_0`.
pub fn conformal_schouten(chart0: &MetricChart, w: &dyn ScalarFn, p: &Point) -> Result<Tensor2> {
    let base = curvature(chart0, p, false)?;
    let wj = w.eval(&Jet::seed(*p, 2));
    let dw = wj.grad();
    let grad_sq: f64 = (0..DIM)
        .flat_map(|i| (0..DIM).map(move |j| (i, j)))
        .map(|(i, j)| base.metric_inv[i][j] * dw[i] * dw[j])
        .sum();
    Ok(std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let hess = wj.second(i, j) - (0..DIM).map(|k| base.christoffel[k][i][j] * dw[k]).sum::<f64>();
            -hess + dw[i] * dw[j] - 0.5 * grad_sq * base.metric[i][j] + base.schouten_std[i][j]
        })
    }))
}

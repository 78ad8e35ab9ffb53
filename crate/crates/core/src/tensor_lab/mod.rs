//! Pointwise Riemannian tensor algebra on explicit four-dimensional charts.
//!
//! Curvature follows the convention in which the round sphere has
//! `Rm_{ijkl} = g_ik g_jl - g_il g_jk`, the Ricci tensor is the contraction
//! `Ric_jl = g^{ik} Rm_{ijkl}` and `Rm = W + 1/2 E (x) g + R/24 g (x) g`
//! with `(x)` the Kulkarni-Nomizu product.
//!
//! Two normalisations of the Schouten tensor are in use and every `sigma_k`
//! call names one explicitly, see [`Convention`].

mod algebra;
mod chart;
mod conformal;
mod covariant;
mod curvature;
mod expr;
mod fd;
mod zoo;

pub use algebra::{
    check_metric, elementary_symmetric, eigenvalues_wrt, hodge_blocks, inverse, kulkarni_nomizu,
    norm2_sq, norm4_sq, sigma_k, HodgeBlocks, OrthonormalFrame, CONDITION_LIMIT,
};
pub use chart::{DerivScheme, FnField, MetricChart, MetricField, MetricJet};
pub use conformal::{conformal_schouten, ConformalField, ScalarFn};
pub use covariant::{
    bach_via_e, bach_via_weyl, bachflat_identity_integrands, BachFlatIntegrands, CurvatureJets,
    I27Terms,
};
pub use curvature::{christoffel, curvature, CurvatureBundle};
pub use expr::Expr;
pub use zoo::{
    chart_by_name, conformal as conformal_chart, cylinder, flat, hyperspherical_embedding, perturbed_flat, s3xs1, s4_round,
    CylinderField, FlatField, PerturbedFlatField, RoundS4Field, S3xS1Field,
};

use thiserror::Error;

/// Dimension of every chart handled here.
pub const DIM: usize = 4;

/// Symmetric (or general) 2-tensor components at a point.
pub type Tensor2 = [[f64; DIM]; DIM];
/// Covariant 4-tensor components at a point.
pub type Tensor4 = [[[[f64; DIM]; DIM]; DIM]; DIM];
/// Christoffel symbols `gamma[k][i][j]` of the second kind.
pub type Christoffel = [[[f64; DIM]; DIM]; DIM];
/// A point in coordinate space.
pub type Point = [f64; DIM];

/// Normalisation of the Schouten tensor.
///
/// `WeylSchouten` is `A = Ric - R g / 6`, the form entering the
/// Gauss-Bonnet-Chern integrand `sigma_2(A) = R^2/24 - |E|^2/2`.
/// `Schouten` is half of it and is the one transforming as
/// `A = -Hess w + dw (x) dw - |dw|^2 g / 2 + A_0` under `g = e^{2w} g_0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    WeylSchouten,
    Schouten,
}

impl Convention {
    /// Factor relative to `Ric - R g / 6`.
    pub fn factor(self) -> f64 {
        match self {
            Convention::WeylSchouten => 1.0,
            Convention::Schouten => 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("point {point:?} is outside chart `{chart}` (required margin {margin})")]
    PointOutsideDomain { chart: String, point: Point, margin: f64 },
    #[error("metric is singular at {point:?} (condition number {condition:e})")]
    SingularMetric { point: Point, condition: f64 },
    #[error("chart `{chart}` provides derivatives up to order {available}, order {required} required")]
    DerivativeUnavailable { chart: String, available: usize, required: usize },
    #[error("finite-difference step {h} is invalid for chart `{chart}`")]
    InvalidStep { chart: String, h: f64 },
    #[error("unknown chart `{0}`")]
    UnknownChart(String),
    #[error("expression error: {0}")]
    Expression(String),
    #[error("sigma_k is defined for 1 <= k <= 4, got k = {0}")]
    InvalidSigmaOrder(usize),
}

pub type Result<T, E = TensorError> = std::result::Result<T, E>;

pub(crate) fn zero2() -> Tensor2 {
    [[0.0; DIM]; DIM]
}

pub(crate) fn zero4() -> Tensor4 {
    [[[[0.0; DIM]; DIM]; DIM]; DIM]
}

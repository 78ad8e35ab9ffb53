//! Radial `sigma_2` analysis on the cylinder `R x S^3`.
//!
//! A metric `g = e^{2w(t)} (dt^2 + g_{S^3})` has, with `A` the Schouten
//! tensor `(Ric - R g / 6) / 2`,
//!
//! ```text
//! sigma_2(A) = -c_sigma w'' (1 - w'^2) e^{-4w},   R = 6 (1 - w'^2 - w'') e^{-2w}
//! ```
//!
//! with `c_sigma = 3/2`; the round sphere `w = log sech t` has `sigma_2 = 3/2`.

mod geometry;
mod interpolate;
mod lemma;
mod profile;
mod shoot;

pub use geometry::{
    bishop_gromov_radial, cone_deviation, cylinder_bundle, BishopGromovReport, BishopGromovRow, ConeDeviation, BG_TOL,
};
pub use interpolate::{interpolate_prop63, Interpolant};
pub use lemma::{
    calibrate_c4, calibration_profiles, c4_for, diagnostics, lemma65_check, random_admissible_profiles, simpson, NeckDiagnostics,
    C4_MARGIN, C4_UNIT, CALIBRATION_SEED,
};
pub use profile::{Provenance, RadialProfile};
pub use shoot::{shoot, ShootParams};

use thiserror::Error;

use crate::tensor_lab::TensorError;

/// Coefficient of the radial `sigma_2` formula.
pub const C_SIGMA: f64 = 1.5;

/// `|w'|` beyond `1 - BLOWUP_TOL` counts as leaving the admissible region.
pub const BLOWUP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NeckError {
    #[error("|w'| = {w_prime} is too close to 1")]
    DegenerateGradient { w_prime: f64 },
    #[error("|w'| reached 1 near t = {t}")]
    GradientBlowup { t: f64 },
    #[error("step error estimate {estimate:e} exceeds the bound at t = {t}")]
    StepTooLarge { t: f64, estimate: f64 },
    #[error("profile is not admissible at t = {t}: {reason}")]
    NotAdmissible { t: f64, reason: String },
    #[error("profiles live on different grids")]
    GridMismatch,
    #[error("Ricci curvature has eigenvalue {min_eigenvalue:e} < 0 at t = {t}")]
    RicciNotNonnegative { t: f64, min_eigenvalue: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

pub type Result<T> = std::result::Result<T, NeckError>;

/// `sigma_2` of the Schouten tensor of `e^{2w} g_cyl` at a point with
/// `w' = wp`, `w'' = wpp`. The formula does not depend on `t` itself.
pub fn sigma2_radial(w: f64, wp: f64, wpp: f64, c_sigma: f64) -> Result<f64> {
    let gap = 1.0 - wp * wp;
    if gap.abs() <= f64::EPSILON {
        return Err(NeckError::DegenerateGradient { w_prime: wp });
    }
    Ok(-c_sigma * wpp * gap * (-4.0 * w).exp())
}

/// Scalar curvature of `e^{2w} g_cyl`.
pub fn scalar_radial(w: f64, wp: f64, wpp: f64) -> f64 {
    6.0 * (1.0 - wp * wp - wpp) * (-2.0 * w).exp()
}

/// Intrinsic diameter `pi e^w` of the slice `{t} x S^3`.
pub fn slice_diameter(w: f64) -> f64 {
    std::f64::consts::PI * w.exp()
}

use std::f64::consts::{LN_2, PI};
use std::sync::Arc;

use serde::Serialize;

use crate::jet::Jet;
use crate::tensor_lab::{curvature, eigenvalues_wrt, ConformalField, CurvatureBundle, CylinderField, MetricChart, DIM};

use super::{NeckError, RadialProfile, Result};

/// Best conical fit of a profile over one sub-annulus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConeDeviation {
    /// `max |w - o t - c| + |w' - o|` at the best `c` and orientation `o`.
    pub deviation: f64,
    /// `+1` when the cone opens towards `t -> +inf`, `-1` otherwise.
    pub orientation: i8,
    pub offset: f64,
}

/// Distance of `w` from a flat cone `w = +-t + c` in a `C^1` grid sense on
/// `[ta, tb]`, which must have length `log 2` (a dyadic annulus in
/// `r = e^t`). Both orientations are tried: `e^{2w} g_cyl` with `w = t + c`
/// is the cone seen from its tip, `w = -t + c` the same cone with `t`
/// reversed.
pub fn cone_deviation(profile: &RadialProfile, ta: f64, tb: f64) -> Result<ConeDeviation> {
    if ((tb - ta) - LN_2).abs() > 1e-9 {
        return Err(NeckError::InvalidInput(format!("annulus [{ta}, {tb}] does not have length log 2")));
    }
    let eps = 1e-9 * profile.h;
    if ta < profile.t0 - eps || tb > profile.t_end() + eps {
        return Err(NeckError::InvalidInput(format!(
            "annulus [{ta}, {tb}] leaves the profile range [{}, {}]",
            profile.t0,
            profile.t_end()
        )));
    }
    let sub = profile
        .restrict(ta, tb)
        .ok_or_else(|| NeckError::InvalidInput(format!("annulus [{ta}, {tb}] holds fewer than two grid points")))?;
    Ok(fit(&sub))
}

fn fit(sub: &RadialProfile) -> ConeDeviation {
    let mut best = ConeDeviation { deviation: f64::INFINITY, orientation: 1, offset: 0.0 };
    for o in [1i8, -1] {
        let of = o as f64;
        let v: Vec<f64> = (0..sub.len()).map(|i| sub.w[i] - of * sub.t(i)).collect();
        let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
        // the midrange minimises the sup distance to a constant
        let c = 0.5 * (lo + hi);
        let dev = (0..sub.len()).map(|i| (v[i] - c).abs() + (sub.wp[i] - of).abs()).fold(0.0, f64::max);
        if dev < best.deviation {
            best = ConeDeviation { deviation: dev, orientation: o, offset: c };
        }
    }
    best
}

/// Largest [`cone_deviation`] over `[t0 + k log 2, t0 + (k+1) log 2]`.
pub(crate) fn dyadic_cone_deviation(profile: &RadialProfile) -> Option<f64> {
    let mut worst: Option<f64> = None;
    let mut k = 0.0;
    loop {
        let ta = profile.t0 + k * LN_2;
        let tb = ta + LN_2;
        if tb > profile.t_end() + 1e-9 * profile.h {
            break;
        }
        if let Some(sub) = profile.restrict(ta, tb) {
            let d = fit(&sub).deviation;
            worst = Some(worst.map_or(d, |w| w.max(d)));
        }
        k += 1.0;
    }
    worst
}

/// Curvature of `e^{2w} g_cyl` at cylinder time `t` through the tensor
/// pipeline, with `w` replaced by its second-order Taylor polynomial (which
/// is all the curvature sees).
pub fn cylinder_bundle(w: f64, wp: f64, wpp: f64, t: f64) -> Result<CurvatureBundle> {
    let local = move |x: &[Jet; DIM]| {
        let d = x[0].clone() - t;
        (&d * &d).scale(0.5 * wpp) + d.scale(wp) + w
    };
    let field = ConformalField { base: Arc::new(CylinderField), w: Arc::new(local) };
    let domain = [(t - 1.0, t + 1.0), (0.0, PI), (0.0, PI), (0.0, 2.0 * PI)];
    let chart = MetricChart::new("radial", domain, Arc::new(field));
    Ok(curvature(&chart, &[t, 1.1, 1.9, 0.5], false)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BishopGromovRow {
    pub t: f64,
    /// Distance from the cone tip at `t = -inf`.
    pub rho: f64,
    /// `Vol(S_rho) = 2 pi^2 e^{3w}`.
    pub area: f64,
    pub ratio: f64,
    /// Smallest eigenvalue of `Ric` relative to `g`.
    pub ricci_min: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BishopGromovReport {
    pub rows: Vec<BishopGromovRow>,
    /// Largest relative increase between consecutive ratios.
    pub max_increase: f64,
    pub nonincreasing: bool,
}

/// Relative tolerance on the ratio sequence.
pub const BG_TOL: f64 = 1e-8;

/// Geodesic sphere areas about the tip of `e^{2w} g_cyl` (equivalently the
/// origin of `R^4`, `r = e^t`) and the ratio `Vol(S_rho) / rho^3` at every
/// `stride`-th grid point.
///
/// Below the first grid point the profile is continued as the cone
/// `w(t0) + w'(t0) (t - t0)`, which needs `w'(t0) > 0`. Ricci curvature is
/// checked at every reported row before monotonicity is asserted.
pub fn bishop_gromov_radial(profile: &RadialProfile, stride: usize) -> Result<BishopGromovReport> {
    let stride = stride.max(1);
    if !(profile.wp[0] > 0.0) {
        return Err(NeckError::InvalidInput(format!(
            "w'(t0) = {} must be positive to close the profile with a cone",
            profile.wp[0]
        )));
    }
    let h = profile.h;
    let f: Vec<f64> = profile.w.iter().map(|w| w.exp()).collect();
    let df: Vec<f64> = f.iter().zip(&profile.wp).map(|(f, wp)| f * wp).collect();
    let mut rho = f[0] / profile.wp[0];
    let mut rows = Vec::new();
    for i in 0..profile.len() {
        if i > 0 {
            // trapezoid with the endpoint derivative correction
            rho += 0.5 * h * (f[i - 1] + f[i]) + h * h / 12.0 * (df[i - 1] - df[i]);
        }
        if i % stride != 0 && i + 1 != profile.len() {
            continue;
        }
        let t = profile.t(i);
        let b = cylinder_bundle(profile.w[i], profile.wp[i], profile.wpp[i], t)?;
        let ev = eigenvalues_wrt(&b.ricci, &b.metric)?;
        let ricci_min = ev.iter().copied().fold(f64::INFINITY, f64::min);
        if ricci_min < -1e-9 * (1.0 + b.scalar.abs()) {
            return Err(NeckError::RicciNotNonnegative { t, min_eigenvalue: ricci_min });
        }
        let area = 2.0 * PI * PI * (3.0 * profile.w[i]).exp();
        rows.push(BishopGromovRow { t, rho, area, ratio: area / rho.powi(3), ricci_min });
    }
    let max_increase = rows
        .windows(2)
        .map(|p| (p[1].ratio - p[0].ratio) / p[0].ratio)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(BishopGromovReport { nonincreasing: max_increase <= BG_TOL, max_increase, rows })
}

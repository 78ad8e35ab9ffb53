use super::{NeckError, Provenance, RadialProfile, Result};

/// A harmonic-mean interpolant together with its curvature minima.
#[derive(Clone, Debug, PartialEq)]
pub struct Interpolant {
    pub profile: RadialProfile,
    pub sigma2_min: f64,
    pub scalar_min: f64,
}

fn admissible(p: &RadialProfile) -> Result<()> {
    for i in 0..p.len() {
        let t = p.t(i);
        if !(p.wp[i].abs() < 1.0) || !(p.scalar(i) > 0.0) || !(p.sigma2(i)? > 0.0) {
            return Err(NeckError::NotAdmissible { t, reason: "needs |w'| < 1, R > 0 and sigma_2 > 0".into() });
        }
    }
    Ok(())
}

/// `e^{-w_s} = (1 - s) e^{-w1} + s e^{-w2}` pointwise on a shared grid.
pub fn interpolate_prop63(w1: &RadialProfile, w2: &RadialProfile, s: f64) -> Result<Interpolant> {
    if !(0.0..=1.0).contains(&s) {
        return Err(NeckError::InvalidInput(format!("interpolation parameter {s} outside [0, 1]")));
    }
    let same_grid = w1.len() == w2.len()
        && (w1.t0 - w2.t0).abs() <= 1e-12 * w1.t0.abs().max(1.0)
        && (w1.h - w2.h).abs() <= 1e-12 * w1.h
        && w1.c_sigma == w2.c_sigma;
    if !same_grid {
        return Err(NeckError::GridMismatch);
    }
    admissible(w1)?;
    admissible(w2)?;

    let profile = if s == 0.0 {
        w1.clone()
    } else if s == 1.0 {
        w2.clone()
    } else {
        let mut p = w1.clone();
        p.provenance = Provenance::Interpolated;
        for i in 0..w1.len() {
            // u = e^{-w}: u' = -w' u, u'' = (w'^2 - w'') u
            let jet = |p: &RadialProfile| {
                let u = (-p.w[i]).exp();
                [u, -p.wp[i] * u, (p.wp[i] * p.wp[i] - p.wpp[i]) * u]
            };
            let (a, b) = (jet(w1), jet(w2));
            let u: [f64; 3] = std::array::from_fn(|k| (1.0 - s) * a[k] + s * b[k]);
            let q = u[1] / u[0];
            p.w[i] = -u[0].ln();
            p.wp[i] = -q;
            p.wpp[i] = q * q - u[2] / u[0];
        }
        p
    };
    Ok(Interpolant { sigma2_min: profile.sigma2_min()?, scalar_min: profile.scalar_min(), profile })
}

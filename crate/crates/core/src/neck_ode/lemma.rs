use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::geometry::dyadic_cone_deviation;
use super::{shoot, NeckError, RadialProfile, Result, ShootParams};

/// Calibrated constant of the lower bound `max w >= log(a)/2 + c4` for
/// `sigma_2 >= 1`, see [`calibrate_c4`]. Frozen from
/// `calibrate_c4(&calibration_profiles(1.0), 1.0)`.
pub const C4_UNIT: f64 = -0.275_644_7;

/// Safety margin subtracted from the smallest observed `max w - log(a)/2`.
pub const C4_MARGIN: f64 = 1e-3;

/// Seed of the frozen calibration run.
pub const CALIBRATION_SEED: u64 = 0x6c65_6d6d_6136_35;

/// `c4` for `sigma_2 >= c3`: replacing `w` by `w + log(c3)/4` turns such a
/// profile into one with `sigma_2 >= 1` and moves the slack by `log(c3)/4`.
pub fn c4_for(c3: f64) -> f64 {
    C4_UNIT + 0.25 * c3.ln()
}

/// Composite Simpson rule on a uniform grid; an odd number of intervals
/// ends with the three-eighths rule.
pub fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len().saturating_sub(1);
    match n {
        0 => 0.0,
        1 => 0.5 * h * (f[0] + f[1]),
        2 => h / 3.0 * (f[0] + 4.0 * f[1] + f[2]),
        _ => {
            let even = if n % 2 == 0 { n } else { n - 3 };
            let mut s = f[0] + f[even];
            for i in 1..even {
                s += if i % 2 == 1 { 4.0 * f[i] } else { 2.0 * f[i] };
            }
            let mut total = h / 3.0 * s;
            if even < n {
                let g = &f[even..];
                total += 3.0 * h / 8.0 * (g[0] + 3.0 * g[1] + 3.0 * g[2] + g[3]);
            }
            total
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeckDiagnostics {
    pub c3: f64,
    pub c4: f64,
    pub sigma2_min: f64,
    pub scalar_min: f64,
    /// `a = int e^{4w} dt`.
    pub mass: f64,
    pub w_max: f64,
    pub t_max: f64,
    /// `w_max - (log(a)/2 + c4)`.
    pub lemma65_slack: f64,
    /// Largest cone deviation over the dyadic sub-annuli, when the profile
    /// spans at least one.
    pub cone_dev: Option<f64>,
    pub admissible: bool,
}

impl NeckDiagnostics {
    pub fn to_json(&self) -> Value {
        json!({
            "c3": self.c3,
            "c4": self.c4,
            "mass": self.mass,
            "w_max": self.w_max,
            "t_max": self.t_max,
            "sigma2_min": self.sigma2_min,
            "R_min": self.scalar_min,
            "lemma65_slack": self.lemma65_slack,
            "cone_dev": self.cone_dev,
            "admissible": self.admissible,
        })
    }
}

/// Diagnostics without the admissibility precondition; `admissible` records
/// whether it holds.
pub fn diagnostics(profile: &RadialProfile, c3: f64, c4: f64) -> NeckDiagnostics {
    let e4w: Vec<f64> = profile.w.iter().map(|w| (4.0 * w).exp()).collect();
    let mass = simpson(&e4w, profile.h);
    let (t_max, w_max) = profile.max_w();
    NeckDiagnostics {
        c3,
        c4,
        sigma2_min: profile.sigma2_min().unwrap_or(f64::NAN),
        scalar_min: profile.scalar_min(),
        mass,
        w_max,
        t_max,
        lemma65_slack: w_max - (0.5 * mass.ln() + c4),
        cone_dev: dyadic_cone_deviation(profile),
        admissible: profile.check_admissible(c3).is_ok(),
    }
}

/// Mass, maximum and slack of the bound `max w >= log(a)/2 + c4` for an
/// admissible profile with `sigma_2 >= c3`.
pub fn lemma65_check(profile: &RadialProfile, c3: f64, c4: f64) -> Result<NeckDiagnostics> {
    if !(c3 > 0.0) {
        return Err(NeckError::InvalidInput(format!("c3 = {c3} must be positive")));
    }
    profile.check_admissible(c3)?;
    Ok(diagnostics(profile, c3, c4))
}

/// Smallest observed `max w - log(a)/2` minus [`C4_MARGIN`].
pub fn calibrate_c4(profiles: &[RadialProfile], c3: f64) -> f64 {
    profiles
        .iter()
        .map(|p| {
            let d = diagnostics(p, c3, 0.0);
            d.lemma65_slack
        })
        .fold(f64::INFINITY, f64::min)
        - C4_MARGIN
}

/// Shot profiles with `sigma_2` constant in `[c3, 3 c3]`, alternating two
/// families.
///
/// Generic runs take random data at `t = 0` on `[0, L]`; runs that leave the
/// admissible region are retried on a shorter interval ending before the
/// exit time. Peaked runs start at the maximum (`w' = 0`) with first
/// integral `E = w'^2/2 - w'^4/4 + (k/4) e^{4w}`, `k = sigma_2 / c_sigma`,
/// log-uniform in `[1e-4, 1/4]`, and cover nearly all of the mass on both
/// sides. Low-energy peaked runs are where `max w - log(a)/2` gets smallest.
pub fn random_admissible_profiles(seed: u64, count: usize, c3: f64) -> Vec<RadialProfile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let target = c3 * rng.gen_range(1.0..3.0);
        let params = if out.len() % 2 == 1 {
            peaked(target, 10f64.powf(rng.gen_range(-4.0..(0.25f64).log10())))
        } else {
            let w0 = rng.gen_range(-1.5..0.5) - 0.25 * c3.ln();
            ShootParams::new(target, w0, rng.gen_range(-0.95..0.95), (0.0, rng.gen_range(0.5..12.0)), 5e-3)
        };
        out.extend(shoot_admissible(params, c3));
    }
    out
}

/// Run starting at its maximum with first integral `energy`, long enough
/// for the tails (decaying like `e^{-4 sqrt(2E) |t|}`) to carry no mass.
fn peaked(target: f64, energy: f64) -> ShootParams {
    let k = target / super::C_SIGMA;
    let half = 3.0 / energy.sqrt();
    ShootParams::new(target, 0.25 * (4.0 * energy / k).ln(), 0.0, (-half, half), (half / 10_000.0).min(5e-3))
}

fn shoot_admissible(mut params: ShootParams, c3: f64) -> Option<RadialProfile> {
    loop {
        match shoot(&params) {
            Ok(p) => return p.check_admissible(c3).is_ok().then_some(p),
            Err(NeckError::GradientBlowup { t } | NeckError::StepTooLarge { t, .. })
                if t > params.interval.0 + 0.25 =>
            {
                params.interval.1 = params.interval.0 + 0.9 * (t - params.interval.0);
            }
            Err(_) => return None,
        }
    }
}

/// The calibration set: 400 random profiles from [`CALIBRATION_SEED`] plus
/// peaked runs with `sigma_2 = c3` exactly and energies `1e-4 .. 1/4`, the
/// direction in which `max w - log(a)/2` decreases.
pub fn calibration_profiles(c3: f64) -> Vec<RadialProfile> {
    let mut out = random_admissible_profiles(CALIBRATION_SEED, 400, c3);
    for e in [1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.25] {
        out.extend(shoot_admissible(peaked(c3, e), c3));
    }
    out
}

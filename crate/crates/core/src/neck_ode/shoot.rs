use super::profile::grid;
use super::{NeckError, Provenance, RadialProfile, Result, BLOWUP_TOL, C_SIGMA};

/// Initial-value problem for `sigma_2(w) = target` on an interval.
#[derive(Clone, Debug, PartialEq)]
pub struct ShootParams {
    pub target: f64,
    /// `w` and `w'` at the anchor.
    pub w0: f64,
    pub wp0: f64,
    pub interval: (f64, f64),
    pub step: f64,
    /// Where the data is imposed; defaults to the point of the interval
    /// closest to `t = 0`. Snapped to the grid.
    pub anchor: Option<f64>,
    pub c_sigma: f64,
    /// Largest accepted step-doubling error estimate per step.
    pub step_tol: f64,
}

impl Default for ShootParams {
    fn default() -> Self {
        ShootParams {
            target: 1.0,
            w0: 0.25 * 1.5f64.ln(),
            wp0: 0.0,
            interval: (0.0, 5.0),
            step: 1e-3,
            anchor: None,
            c_sigma: C_SIGMA,
            step_tol: 1e-6,
        }
    }
}

impl ShootParams {
    pub fn new(target: f64, w0: f64, wp0: f64, interval: (f64, f64), step: f64) -> Self {
        ShootParams { target, w0, wp0, interval, step, ..Default::default() }
    }
}

type State = [f64; 2];

struct Rhs {
    k: f64,
}

impl Rhs {
    /// `(w, w') -> (w', w'')` with `w'' = -(target / c_sigma) e^{4w} / (1 - w'^2)`.
    fn eval(&self, y: &State) -> Option<State> {
        let gap = 1.0 - y[1] * y[1];
        if !(gap > 0.0) || !y[0].is_finite() {
            return None;
        }
        Some([y[1], -self.k * (4.0 * y[0]).exp() / gap])
    }

    fn rk4(&self, y: &State, h: f64) -> Option<State> {
        let add = |a: &State, b: &State, s: f64| [a[0] + s * b[0], a[1] + s * b[1]];
        let k1 = self.eval(y)?;
        let k2 = self.eval(&add(y, &k1, h / 2.0))?;
        let k3 = self.eval(&add(y, &k2, h / 2.0))?;
        let k4 = self.eval(&add(y, &k3, h))?;
        let out = [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        (out[0].is_finite() && out[1].is_finite()).then_some(out)
    }

    /// Time until `|w'|` reaches 1 if the current rate persists, or `None`
    /// when `|w'|` is not growing in the direction of integration.
    fn time_to_pole(&self, y: &State, dir: f64) -> Option<f64> {
        let d = self.eval(y)?[1] * dir;
        (y[1] * d > 0.0).then(|| (1.0 - y[1].abs()) / d.abs())
    }
}

/// Integrates `w'' = -(target / c_sigma) e^{4w} / (1 - w'^2)` with classical
/// RK4 on a uniform grid, in both directions from the anchor.
///
/// Each step is checked against two half steps. A failed check close to the
/// pole `|w'| = 1` is reported as [`NeckError::GradientBlowup`], anywhere else
/// as [`NeckError::StepTooLarge`].
pub fn shoot(p: &ShootParams) -> Result<RadialProfile> {
    if !(p.target > 0.0) {
        return Err(NeckError::InvalidInput(format!("target {} must be positive", p.target)));
    }
    if !(p.wp0.abs() < 1.0) {
        return Err(NeckError::InvalidInput(format!("|w'0| = {} must be below 1", p.wp0.abs())));
    }
    let (a, b) = p.interval;
    let (n, h) = grid(a, b, p.step)?;
    let anchor = p.anchor.unwrap_or(0.0).clamp(a, b);
    let ia = ((anchor - a) / h).round() as usize;
    let rhs = Rhs { k: p.target / p.c_sigma };

    let mut w = vec![0.0; n + 1];
    let mut wp = vec![0.0; n + 1];
    w[ia] = p.w0;
    wp[ia] = p.wp0;
    let t_of = |i: usize| a + i as f64 * h;

    let step = |y: &State, t: f64, dir: f64| -> Result<State> {
        let hs = dir * h;
        let full = rhs.rk4(y, hs);
        let half = rhs.rk4(y, hs / 2.0).and_then(|m| rhs.rk4(&m, hs / 2.0));
        let estimate = match (&full, &half) {
            (Some(f), Some(g)) => (f[0] - g[0]).abs().max((f[1] - g[1]).abs()),
            _ => f64::INFINITY,
        };
        if estimate > p.step_tol {
            if let Some(tau) = rhs.time_to_pole(y, dir) {
                // |w'| ~ 1 - c sqrt(t* - t) near the pole, so t* - t = tau / 2
                if tau / 2.0 < 2.0 * h {
                    return Err(NeckError::GradientBlowup { t: t + dir * tau / 2.0 });
                }
            }
            return Err(NeckError::StepTooLarge { t, estimate });
        }
        let y = full.expect("finite estimate implies a full step");
        if y[1].abs() > 1.0 - BLOWUP_TOL {
            return Err(NeckError::GradientBlowup { t: t + dir * h });
        }
        Ok(y)
    };

    for i in (0..ia).rev() {
        let y = step(&[w[i + 1], wp[i + 1]], t_of(i + 1), -1.0)?;
        w[i] = y[0];
        wp[i] = y[1];
    }
    for i in ia..n {
        let y = step(&[w[i], wp[i]], t_of(i), 1.0)?;
        w[i + 1] = y[0];
        wp[i + 1] = y[1];
    }
    let wpp = w
        .iter()
        .zip(&wp)
        .map(|(w, wp)| rhs.eval(&[*w, *wp]).map(|d| d[1]).unwrap_or(f64::NAN))
        .collect();
    Ok(RadialProfile { t0: a, h, w, wp, wpp, c_sigma: p.c_sigma, provenance: Provenance::OdeSolution })
}

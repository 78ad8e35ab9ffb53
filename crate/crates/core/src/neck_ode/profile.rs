use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{scalar_radial, sigma2_radial, slice_diameter, NeckError, Result, C_SIGMA};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    OdeSolution,
    Interpolated,
}

/// A conformal factor `w(t)` sampled on the uniform grid `t0 + i h`.
///
/// First and second derivatives are stored alongside the values; they come
/// from the closed form, from the ODE right-hand side or from the
/// interpolation formula, never from differencing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub t0: f64,
    pub h: f64,
    pub w: Vec<f64>,
    pub wp: Vec<f64>,
    pub wpp: Vec<f64>,
    /// Coefficient used when evaluating `sigma_2` on this profile.
    pub c_sigma: f64,
    pub provenance: Provenance,
}

/// Number of steps and the adjusted step for `[t0, t1]`.
pub(crate) fn grid(t0: f64, t1: f64, h: f64) -> Result<(usize, f64)> {
    if !(t1 > t0) || !(h > 0.0) || !h.is_finite() || !t1.is_finite() || !t0.is_finite() {
        return Err(NeckError::InvalidInput(format!("bad grid [{t0}, {t1}] with step {h}")));
    }
    let n = ((t1 - t0) / h).round().max(1.0);
    if n > 1e8 {
        return Err(NeckError::InvalidInput(format!("{n} steps requested")));
    }
    Ok((n as usize, (t1 - t0) / n))
}

fn log_cosh(s: f64) -> f64 {
    let a = s.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl RadialProfile {
    /// Samples `f(t) = (w, w', w'')` on `[t0, t1]`.
    pub fn closed_form(f: impl Fn(f64) -> (f64, f64, f64), t0: f64, t1: f64, h: f64) -> Result<Self> {
        let (n, h) = grid(t0, t1, h)?;
        let mut p = RadialProfile {
            t0,
            h,
            w: Vec::with_capacity(n + 1),
            wp: Vec::with_capacity(n + 1),
            wpp: Vec::with_capacity(n + 1),
            c_sigma: C_SIGMA,
            provenance: Provenance::ClosedForm,
        };
        for i in 0..=n {
            let (w, wp, wpp) = f(t0 + i as f64 * h);
            p.w.push(w);
            p.wp.push(wp);
            p.wpp.push(wpp);
        }
        Ok(p)
    }

    /// `w = shift + log sech (t - center)`; with `shift = log(3/2)/4` this is
    /// the `sigma_2 = 1` round sphere.
    pub fn sech(shift: f64, center: f64, t0: f64, t1: f64, h: f64) -> Result<Self> {
        Self::closed_form(
            |t| {
                let s = t - center;
                let th = s.tanh();
                let sech = 1.0 / s.cosh();
                (shift - log_cosh(s), -th, -sech * sech)
            },
            t0,
            t1,
            h,
        )
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.h
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.len() - 1)
    }

    pub fn sigma2(&self, i: usize) -> Result<f64> {
        sigma2_radial(self.w[i], self.wp[i], self.wpp[i], self.c_sigma)
    }

    pub fn scalar(&self, i: usize) -> f64 {
        scalar_radial(self.w[i], self.wp[i], self.wpp[i])
    }

    pub fn slice_diameter(&self, i: usize) -> f64 {
        slice_diameter(self.w[i])
    }

    /// Grid points `lo..=hi` as a new profile.
    pub fn slice(&self, lo: usize, hi: usize) -> Self {
        assert!(lo < hi && hi < self.len(), "slice {lo}..={hi} of {}", self.len());
        RadialProfile {
            t0: self.t(lo),
            h: self.h,
            w: self.w[lo..=hi].to_vec(),
            wp: self.wp[lo..=hi].to_vec(),
            wpp: self.wpp[lo..=hi].to_vec(),
            c_sigma: self.c_sigma,
            provenance: self.provenance,
        }
    }

    /// The grid points inside `[ta, tb]`, up to rounding.
    pub fn restrict(&self, ta: f64, tb: f64) -> Option<Self> {
        let eps = 1e-9 * self.h;
        let lo = ((ta - self.t0 - eps) / self.h).ceil().max(0.0) as usize;
        let hi = (((tb - self.t0 + eps) / self.h).floor() as isize).min(self.len() as isize - 1);
        (hi > lo as isize).then(|| self.slice(lo, hi as usize))
    }

    /// `w + c`; `sigma_2` scales by `e^{-4c}`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.w.iter_mut().for_each(|w| *w += c);
        out
    }

    /// `|w'| < 1`, `R > 0` and `sigma_2 >= c3` at every grid point, with a
    /// relative allowance of `1e-9` on the last test.
    pub fn check_admissible(&self, c3: f64) -> Result<()> {
        let floor = c3 - 1e-9 * c3.abs().max(1.0);
        for i in 0..self.len() {
            let t = self.t(i);
            if !(self.wp[i].abs() < 1.0) {
                return Err(NeckError::NotAdmissible { t, reason: format!("|w'| = {}", self.wp[i].abs()) });
            }
            let r = self.scalar(i);
            if !(r > 0.0) {
                return Err(NeckError::NotAdmissible { t, reason: format!("R = {r}") });
            }
            let s = self.sigma2(i)?;
            if !(s >= floor) {
                return Err(NeckError::NotAdmissible { t, reason: format!("sigma_2 = {s} < {c3}") });
            }
        }
        Ok(())
    }

    /// Smallest `sigma_2` on the grid.
    pub fn sigma2_min(&self) -> Result<f64> {
        (0..self.len()).try_fold(f64::INFINITY, |m, i| Ok(m.min(self.sigma2(i)?)))
    }

    pub fn scalar_min(&self) -> f64 {
        (0..self.len()).map(|i| self.scalar(i)).fold(f64::INFINITY, f64::min)
    }

    /// Largest value of `w`, refined between grid points with the cubic
    /// Hermite interpolant of `w'`. Returns `(t, w)`.
    pub fn max_w(&self) -> (f64, f64) {
        let k = (0..self.len()).fold(0, |best, i| if self.w[i] > self.w[best] { i } else { best });
        let mut best = (self.t(k), self.w[k]);
        for i in [k.checked_sub(1), Some(k)].into_iter().flatten() {
            if i + 1 >= self.len() {
                continue;
            }
            if self.wp[i] >= 0.0 && self.wp[i + 1] <= 0.0 && self.wp[i] != self.wp[i + 1] {
                let (s, w) = self.hermite_peak(i);
                if w > best.1 {
                    best = (self.t(i) + s * self.h, w);
                }
            }
        }
        best
    }

    /// Zero of the Hermite cubic for `w'` on `[t_i, t_{i+1}]` (as a fraction
    /// `s` of the step) and `w` there.
    fn hermite_peak(&self, i: usize) -> (f64, f64) {
        let h = self.h;
        let (p0, p1) = (self.wp[i], self.wp[i + 1]);
        let (m0, m1) = (self.wpp[i] * h, self.wpp[i + 1] * h);
        // p(s) = a + b s + c s^2 + d s^3
        let (a, b) = (p0, m0);
        let c = 3.0 * (p1 - p0) - 2.0 * m0 - m1;
        let d = 2.0 * (p0 - p1) + m0 + m1;
        let p = |s: f64| a + s * (b + s * (c + s * d));
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if p(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = 0.5 * (lo + hi);
        let integral = h * s * (a + s * (b / 2.0 + s * (c / 3.0 + s * d / 4.0)));
        (s, self.w[i] + integral)
    }

    /// Trace with columns `t,w,w',sigma2,R,slice_diam`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,w,w',sigma2,R,slice_diam\n");
        for i in 0..self.len() {
            let s = self.sigma2(i).unwrap_or(f64::NAN);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                self.t(i),
                self.w[i],
                self.wp[i],
                s,
                self.scalar(i),
                self.slice_diameter(i)
            );
        }
        out
    }
}

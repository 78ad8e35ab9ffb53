//! Truncated multivariate Taylor series in four variables.
//!
//! A [`Jet`] of order `n` stores the Taylor coefficients `c_a = D^a f(p) / a!`
//! of a function at a fixed point `p` for every multi-index `a` with
//! `|a| <= n`. Arithmetic is exact up to rounding: the order-`n` jet of a
//! product, quotient or composition depends only on the order-`n` jets of
//! the operands. Differentiation lowers the order by one.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use smallvec::SmallVec;

/// Number of independent variables.
pub const NVARS: usize = 4;
/// Highest supported truncation order.
pub const MAX_ORDER: usize = 4;

const TERMS: [usize; MAX_ORDER + 1] = [1, 5, 15, 35, 70];

/// Number of Taylor coefficients of a jet of the given order.
pub fn term_count(order: usize) -> usize {
    TERMS[order]
}

struct Tables {
    exps: Vec<[u8; NVARS]>,
    /// Dense lookup `index[((e0 * 5 + e1) * 5 + e2) * 5 + e3]`.
    index: Vec<u16>,
    /// `(i, j, k)` with `exps[i] + exps[j] = exps[k]`, sorted by `|exps[k]|`.
    mul: Vec<(u16, u16, u16)>,
    mul_end: [usize; MAX_ORDER + 1],
    /// `raise[a][k]` is the index of `exps[k] + e_a`, for `|exps[k]| < MAX_ORDER`.
    raise: [Vec<usize>; NVARS],
}

fn degree(e: &[u8; NVARS]) -> usize {
    e.iter().map(|&v| v as usize).sum()
}

fn dense(e: &[u8; NVARS]) -> usize {
    ((e[0] as usize * 5 + e[1] as usize) * 5 + e[2] as usize) * 5 + e[3] as usize
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut exps = Vec::with_capacity(TERMS[MAX_ORDER]);
        for deg in 0..=MAX_ORDER {
            for a in (0..=deg).rev() {
                for b in (0..=deg - a).rev() {
                    for c in (0..=deg - a - b).rev() {
                        let d = deg - a - b - c;
                        exps.push([a as u8, b as u8, c as u8, d as u8]);
                    }
                }
            }
        }
        let mut index = vec![u16::MAX; 625];
        for (i, e) in exps.iter().enumerate() {
            index[dense(e)] = i as u16;
        }

        let mut mul = Vec::new();
        for (i, ei) in exps.iter().enumerate() {
            for (j, ej) in exps.iter().enumerate() {
                if degree(ei) + degree(ej) > MAX_ORDER {
                    continue;
                }
                let sum = [ei[0] + ej[0], ei[1] + ej[1], ei[2] + ej[2], ei[3] + ej[3]];
                mul.push((i as u16, j as u16, index[dense(&sum)]));
            }
        }
        mul.sort_by_key(|&(_, _, k)| (degree(&exps[k as usize]), k));
        let mut mul_end = [0; MAX_ORDER + 1];
        for (n, end) in mul_end.iter_mut().enumerate() {
            *end = mul
                .iter()
                .take_while(|&&(_, _, k)| degree(&exps[k as usize]) <= n)
                .count();
        }

        let raise = std::array::from_fn(|a| {
            (0..TERMS[MAX_ORDER - 1])
                .map(|k| {
                    let mut e = exps[k];
                    e[a] += 1;
                    index[dense(&e)] as usize
                })
                .collect()
        });

        Tables { exps, index, mul, mul_end, raise }
    })
}

/// Multi-index of the `k`-th coefficient in the internal graded ordering.
pub fn exponent(k: usize) -> [u8; NVARS] {
    tables().exps[k]
}

fn factorial(n: u8) -> f64 {
    (1..=n as u32).product::<u32>() as f64
}

/// Truncated Taylor series in four variables.
#[derive(Clone, PartialEq)]
pub struct Jet {
    order: u8,
    c: SmallVec<[f64; 15]>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("order", &self.order)
            .field("coeffs", &self.c.as_slice())
            .finish()
    }
}

impl Jet {
    pub fn zero(order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        Jet { order: order as u8, c: SmallVec::from_elem(0.0, TERMS[order]) }
    }

    pub fn constant(value: f64, order: usize) -> Self {
        let mut j = Jet::zero(order);
        j.c[0] = value;
        j
    }

    /// The coordinate function `x_var` expanded about `value`.
    pub fn variable(value: f64, var: usize, order: usize) -> Self {
        let mut j = Jet::constant(value, order);
        if order > 0 {
            j.c[1 + var] = 1.0;
        }
        j
    }

    /// Seeds the four coordinate functions at `p`.
    pub fn seed(p: [f64; NVARS], order: usize) -> [Jet; NVARS] {
        std::array::from_fn(|a| Jet::variable(p[a], a, order))
    }

    /// Builds a jet from coefficients in the internal ordering; missing
    /// trailing coefficients are zero.
    pub fn from_coeffs(order: usize, coeffs: &[f64]) -> Self {
        let mut j = Jet::zero(order);
        let n = coeffs.len().min(j.c.len());
        j.c[..n].copy_from_slice(&coeffs[..n]);
        j
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    /// Taylor coefficient `D^a f / a!` of the multi-index `a`.
    pub fn coeff(&self, exp: [u8; NVARS]) -> f64 {
        if degree(&exp) > self.order() {
            return 0.0;
        }
        self.c[tables().index[dense(&exp)] as usize]
    }

    /// Partial derivative `D^a f` at the expansion point.
    pub fn partial(&self, exp: [u8; NVARS]) -> f64 {
        self.coeff(exp) * exp.iter().map(|&e| factorial(e)).product::<f64>()
    }

    pub fn grad(&self) -> [f64; NVARS] {
        std::array::from_fn(|a| if self.order > 0 { self.c[1 + a] } else { 0.0 })
    }

    /// Second partial derivative `d_a d_b f`.
    pub fn second(&self, a: usize, b: usize) -> f64 {
        if self.order < 2 {
            return 0.0;
        }
        let v = self.c[tables().raise[b][1 + a]];
        if a == b { 2.0 * v } else { v }
    }

    /// Drops all terms above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order());
        Jet { order: order as u8, c: SmallVec::from_slice(&self.c[..TERMS[order]]) }
    }

    /// Partial derivative with respect to `var`; the result has one order less.
    ///
    /// Panics on an order-zero jet: its derivative is not determined.
    pub fn derivative(&self, var: usize) -> Self {
        assert!(self.order > 0, "cannot differentiate an order-0 jet");
        let t = tables();
        let order = self.order() - 1;
        let mut out = Jet::zero(order);
        for k in 0..TERMS[order] {
            let up = t.raise[var][k];
            out.c[k] = (t.exps[k][var] as f64 + 1.0) * self.c[up];
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        Jet { order: self.order, c: self.c.iter().map(|v| v * s).collect() }
    }

    fn zip(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Self {
        let order = self.order.min(other.order);
        let n = TERMS[order as usize];
        Jet { order, c: (0..n).map(|k| f(self.c[k], other.c[k])).collect() }
    }

    fn mul_jet(&self, other: &Jet) -> Self {
        let t = tables();
        let order = self.order().min(other.order());
        let mut out = Jet::zero(order);
        for &(i, j, k) in &t.mul[..t.mul_end[order]] {
            out.c[k as usize] += self.c[i as usize] * other.c[j as usize];
        }
        out
    }

    /// `f(self)` given the derivatives `f^(k)(a)`, `k = 0..=order`, of a
    /// univariate `f` at the constant term `a`.
    pub fn compose(&self, derivs: &[f64]) -> Self {
        let n = self.order();
        assert!(derivs.len() > n, "need {} derivatives, got {}", n + 1, derivs.len());
        let mut h = self.clone();
        h.c[0] = 0.0;
        let mut out = Jet::constant(derivs[n] / factorial(n as u8), n);
        for k in (0..n).rev() {
            out = out.mul_jet(&h);
            out.c[0] += derivs[k] / factorial(k as u8);
        }
        out
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        self.compose(&[e; MAX_ORDER + 1])
    }

    pub fn ln(&self) -> Self {
        let a = self.value();
        let d: [f64; MAX_ORDER + 1] =
            std::array::from_fn(|k| if k == 0 { a.ln() } else { power_coeff(-1.0, k - 1) * a.powi(-(k as i32)) });
        self.compose(&d)
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose(&[s, c, -s, -c, s])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose(&[c, -s, -c, s, c])
    }

    pub fn sinh(&self) -> Self {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose(&[s, c, s, c, s])
    }

    pub fn cosh(&self) -> Self {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose(&[c, s, c, s, c])
    }

    pub fn tanh(&self) -> Self {
        &self.sinh() / &self.cosh()
    }

    pub fn sech(&self) -> Self {
        self.cosh().recip()
    }

    /// `self^p` for real `p`; the constant term must be positive unless `p`
    /// is a nonnegative integer.
    pub fn powf(&self, p: f64) -> Self {
        let a = self.value();
        let d: [f64; MAX_ORDER + 1] = std::array::from_fn(|k| power_coeff(p, k) * a.powf(p - k as f64));
        self.compose(&d)
    }

    pub fn powi(&self, n: i32) -> Self {
        if n >= 0 {
            let mut out = Jet::constant(1.0, self.order());
            for _ in 0..n {
                out = out.mul_jet(self);
            }
            out
        } else {
            self.powi(-n).recip()
        }
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    pub fn recip(&self) -> Self {
        let a = self.value();
        let d: [f64; MAX_ORDER + 1] =
            std::array::from_fn(|k| power_coeff(-1.0, k) * a.powi(-(k as i32) - 1));
        self.compose(&d)
    }
}

/// Falling factorial `p (p-1) ... (p-k+1)`.
fn power_coeff(p: f64, k: usize) -> f64 {
    (0..k).map(|i| p - i as f64).product()
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<&Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, rhs)
            }
        }
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                (&self).$m(rhs)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                self.$m(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, |a, b| a.zip(b, |x, y| x + y));
forward_binop!(Sub, sub, |a, b| a.zip(b, |x, y| x - y));
forward_binop!(Mul, mul, |a, b| a.mul_jet(b));
forward_binop!(Div, div, |a, b| a.mul_jet(&b.recip()));

impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        let mut out = self.clone();
        out.c[0] += rhs;
        out
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.c[0] -= rhs;
        self
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        if rhs.order < self.order {
            *self = self.truncate(rhs.order());
        }
        for (a, b) in self.c.iter_mut().zip(rhs.c.iter()) {
            *a += b;
        }
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        if rhs.order < self.order {
            *self = self.truncate(rhs.order());
        }
        for (a, b) in self.c.iter_mut().zip(rhs.c.iter()) {
            *a -= b;
        }
    }
}

impl AddAssign<Jet> for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self += &rhs;
    }
}

impl SubAssign<Jet> for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self -= &rhs;
    }
}

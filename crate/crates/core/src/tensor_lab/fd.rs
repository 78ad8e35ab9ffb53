//! Central finite differences turned into Taylor jets.
//!
//! A mixed partial `D^a g` is estimated with the tensor product of the
//! one-dimensional second-order central stencils for each axis, so every
//! estimate carries an `O(h^2)` truncation error.

use std::collections::HashMap;

use crate::jet::{exponent, term_count, Jet};

use super::{Point, Tensor2, DIM};

/// `(offset, weight)` pairs of the central stencil for the `m`-th derivative
/// (times `h^m`).
fn stencil(m: u8) -> &'static [(i8, f64)] {
    match m {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        4 => &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
        _ => unreachable!("derivative order above four"),
    }
}

fn factorial(n: u8) -> f64 {
    (1..=n as u32).product::<u32>() as f64
}

/// Estimates the order-`order` jet of `g` at `p` from samples on the grid
/// `p + h * Z^4`.
pub(crate) fn metric_jet(g: impl Fn(&Point) -> Tensor2, p: &Point, h: f64, order: usize) -> [[Jet; DIM]; DIM] {
    let mut cache: HashMap<[i8; DIM], Tensor2> = HashMap::new();
    let mut sample = |off: [i8; DIM]| -> Tensor2 {
        *cache.entry(off).or_insert_with(|| {
            let q: Point = std::array::from_fn(|a| p[a] + off[a] as f64 * h);
            g(&q)
        })
    };

    let n = term_count(order);
    let mut coeffs = vec![[[0.0; DIM]; DIM]; n];
    for (k, slot) in coeffs.iter_mut().enumerate() {
        let e = exponent(k);
        let deg: i32 = e.iter().map(|&v| v as i32).sum();
        let scale = h.powi(-deg) / e.iter().map(|&v| factorial(v)).product::<f64>();
        let [s0, s1, s2, s3] = e.map(stencil);
        for &(o0, w0) in s0 {
            for &(o1, w1) in s1 {
                for &(o2, w2) in s2 {
                    for &(o3, w3) in s3 {
                        let w = w0 * w1 * w2 * w3 * scale;
                        let v = sample([o0, o1, o2, o3]);
                        for i in 0..DIM {
                            for j in 0..DIM {
                                slot[i][j] += w * v[i][j];
                            }
                        }
                    }
                }
            }
        }
    }

    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let c: Vec<f64> = coeffs.iter().map(|t| t[i][j]).collect();
            Jet::from_coeffs(order, &c)
        })
    })
}

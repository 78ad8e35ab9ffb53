use nalgebra::{Matrix3, Matrix4, SymmetricEigen};

use super::{zero4, Point, Result, Tensor2, Tensor4, TensorError, DIM};

/// Metrics whose condition number exceeds this are rejected as singular.
pub const CONDITION_LIMIT: f64 = 1e8;

fn to_matrix(t: &Tensor2) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| t[i][j])
}

fn from_matrix(m: &Matrix4<f64>) -> Tensor2 {
    std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]))
}

/// Rejects metrics that are not positive definite or are too badly
/// conditioned for the identity checks to be meaningful.
pub fn check_metric(g: &Tensor2, point: Point) -> Result<()> {
    let m = to_matrix(g);
    let asym = (m - m.transpose()).amax();
    if !asym.is_finite() || asym > 1e-12 * m.amax().max(1.0) {
        return Err(TensorError::SingularMetric { point, condition: f64::INFINITY });
    }
    let eig = SymmetricEigen::new(m).eigenvalues;
    let lo = eig.min();
    let hi = eig.max();
    if !(lo > 0.0) || !hi.is_finite() {
        return Err(TensorError::SingularMetric { point, condition: f64::INFINITY });
    }
    let condition = hi / lo;
    if condition > CONDITION_LIMIT {
        return Err(TensorError::SingularMetric { point, condition });
    }
    Ok(())
}

pub fn inverse(g: &Tensor2) -> Result<Tensor2> {
    to_matrix(g)
        .try_inverse()
        .map(|m| from_matrix(&m))
        .ok_or(TensorError::SingularMetric { point: [f64::NAN; DIM], condition: f64::INFINITY })
}

/// `(h (x) k)_{ijkl} = h_ik k_jl + h_jl k_ik - h_il k_jk - h_jk k_il`.
pub fn kulkarni_nomizu(h: &Tensor2, k: &Tensor2) -> Tensor4 {
    let mut out = zero4();
    for i in 0..DIM {
        for j in 0..DIM {
            for a in 0..DIM {
                for b in 0..DIM {
                    out[i][j][a][b] =
                        h[i][a] * k[j][b] + h[j][b] * k[i][a] - h[i][b] * k[j][a] - h[j][a] * k[i][b];
                }
            }
        }
    }
    out
}

/// `|t|^2 = g^{ia} g^{jb} t_ij t_ab`.
pub fn norm2_sq(t: &Tensor2, ginv: &Tensor2) -> f64 {
    let mut raised = [[0.0; DIM]; DIM];
    for i in 0..DIM {
        for j in 0..DIM {
            raised[i][j] = (0..DIM)
                .flat_map(|a| (0..DIM).map(move |b| (a, b)))
                .map(|(a, b)| ginv[i][a] * ginv[j][b] * t[a][b])
                .sum();
        }
    }
    (0..DIM).flat_map(|i| (0..DIM).map(move |j| (i, j))).map(|(i, j)| raised[i][j] * t[i][j]).sum()
}

/// Full contraction `t_{ijkl} t^{ijkl}`.
pub fn norm4_sq(t: &Tensor4, ginv: &Tensor2) -> f64 {
    // |T|^2 = sum M_PQ (G M G)_PQ with M the 16x16 flattening and G = g^-1 (x) g^-1
    type M16 = nalgebra::SMatrix<f64, 16, 16>;
    let m = M16::from_fn(|p, q| t[p / 4][p % 4][q / 4][q % 4]);
    let g = M16::from_fn(|p, q| ginv[p / 4][q / 4] * ginv[p % 4][q % 4]);
    let gmg = g * m * g;
    m.component_mul(&gmg).sum()
}

/// An oriented `g`-orthonormal frame `e_a = F^i_a d_i` built from the
/// Cholesky factor of `g`; it has the orientation of the coordinates.
#[derive(Clone, Debug)]
pub struct OrthonormalFrame {
    f: Matrix4<f64>,
}

impl OrthonormalFrame {
    pub fn new(g: &Tensor2) -> Result<Self> {
        let chol = to_matrix(g)
            .cholesky()
            .ok_or(TensorError::SingularMetric { point: [f64::NAN; DIM], condition: f64::INFINITY })?;
        let l = chol.l();
        let f = l
            .transpose()
            .try_inverse()
            .ok_or(TensorError::SingularMetric { point: [f64::NAN; DIM], condition: f64::INFINITY })?;
        Ok(OrthonormalFrame { f })
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.f
    }

    pub fn tensor2(&self, t: &Tensor2) -> Tensor2 {
        from_matrix(&(self.f.transpose() * to_matrix(t) * self.f))
    }

    pub fn tensor4(&self, t: &Tensor4) -> Tensor4 {
        let mut cur = *t;
        for slot in 0..4 {
            let mut out = zero4();
            for i in 0..DIM {
                for j in 0..DIM {
                    for k in 0..DIM {
                        for l in 0..DIM {
                            let idx = [i, j, k, l];
                            let mut s = 0.0;
                            for m in 0..DIM {
                                let mut src = idx;
                                src[slot] = m;
                                s += self.f[(m, idx[slot])] * cur[src[0]][src[1]][src[2]][src[3]];
                            }
                            out[i][j][k][l] = s;
                        }
                    }
                }
            }
            cur = out;
        }
        cur
    }

    /// Components of a covector-valued tensor of any rank stored flat,
    /// index `a_0 * 4^{r-1} + ...`.
    pub fn flat(&self, t: &[f64], rank: usize) -> Vec<f64> {
        let mut cur = t.to_vec();
        for slot in 0..rank {
            let stride = DIM.pow((rank - 1 - slot) as u32);
            let mut out = vec![0.0; cur.len()];
            for (idx, o) in out.iter_mut().enumerate() {
                let a = (idx / stride) % DIM;
                let base = idx - a * stride;
                *o = (0..DIM).map(|m| self.f[(m, a)] * cur[base + m * stride]).sum();
            }
            cur = out;
        }
        cur
    }
}

/// Eigenvalues of `g^{-1} a` in ascending order.
pub fn eigenvalues_wrt(a: &Tensor2, g: &Tensor2) -> Result<[f64; DIM]> {
    let frame = OrthonormalFrame::new(g)?;
    let on = to_matrix(&frame.tensor2(a));
    let sym = (on + on.transpose()) * 0.5;
    let mut ev: [f64; DIM] = std::array::from_fn(|i| SymmetricEigen::new(sym).eigenvalues[i]);
    ev.sort_by(|x, y| x.total_cmp(y));
    Ok(ev)
}

/// `k`-th elementary symmetric polynomial of four numbers (`k = 0` gives 1).
pub fn elementary_symmetric(lams: &[f64; DIM], k: usize) -> f64 {
    // e_k via the recurrence on prefixes
    let mut e = [1.0, 0.0, 0.0, 0.0, 0.0];
    for &l in lams {
        for j in (1..=DIM).rev() {
            e[j] += l * e[j - 1];
        }
    }
    e.get(k).copied().unwrap_or(0.0)
}

/// `sigma_k` of the eigenvalues of `g^{-1} a`.
pub fn sigma_k(a: &Tensor2, g: &Tensor2, k: usize) -> Result<f64> {
    if !(1..=DIM).contains(&k) {
        return Err(TensorError::InvalidSigmaOrder(k));
    }
    check_metric(g, [f64::NAN; DIM])?;
    Ok(elementary_symmetric(&eigenvalues_wrt(a, g)?, k))
}

/// The Weyl tensor acting on 2-forms, split by the Hodge star.
///
/// Components are taken in an oriented orthonormal frame, 2-forms in the
/// lexicographic basis `e01, e02, e03, e12, e13, e23`, and
/// `W(e_c ^ e_d) = sum_{a<b} W_abcd e_a ^ e_b`.
#[derive(Clone, Debug)]
pub struct HodgeBlocks {
    pub plus: Matrix3<f64>,
    pub minus: Matrix3<f64>,
    /// `Lambda^- -> Lambda^+` block; zero for an honest Weyl tensor.
    pub mixed: Matrix3<f64>,
}

const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Splits an orthonormal-frame curvature-type tensor into its self-dual and
/// anti-self-dual blocks.
pub fn hodge_blocks(w_on: &Tensor4) -> HodgeBlocks {
    let m = nalgebra::Matrix6::from_fn(|r, c| {
        let (a, b) = PAIRS[r];
        let (p, q) = PAIRS[c];
        w_on[a][b][p][q]
    });
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // *e01 = e23, *e02 = -e13, *e03 = e12
    let plus_basis = nalgebra::Matrix6x3::from_columns(&[
        nalgebra::Vector6::new(s, 0.0, 0.0, 0.0, 0.0, s),
        nalgebra::Vector6::new(0.0, s, 0.0, 0.0, -s, 0.0),
        nalgebra::Vector6::new(0.0, 0.0, s, s, 0.0, 0.0),
    ]);
    let minus_basis = nalgebra::Matrix6x3::from_columns(&[
        nalgebra::Vector6::new(s, 0.0, 0.0, 0.0, 0.0, -s),
        nalgebra::Vector6::new(0.0, s, 0.0, 0.0, s, 0.0),
        nalgebra::Vector6::new(0.0, 0.0, s, -s, 0.0, 0.0),
    ]);
    HodgeBlocks {
        plus: plus_basis.transpose() * m * plus_basis,
        minus: minus_basis.transpose() * m * minus_basis,
        mixed: plus_basis.transpose() * m * minus_basis,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity() -> Tensor2 {
        std::array::from_fn(|i| std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 }))
    }

    #[test]
    fn kulkarni_nomizu_of_metric_with_itself() {
        let g: Tensor2 = [[2.0, 0.3, 0.0, 0.1], [0.3, 1.5, 0.2, 0.0], [0.0, 0.2, 1.0, -0.1], [0.1, 0.0, -0.1, 3.0]];
        let gg = kulkarni_nomizu(&g, &g);
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        let expect = 2.0 * (g[i][k] * g[j][l] - g[i][l] * g[j][k]);
                        assert!((gg[i][j][k][l] - expect).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn kulkarni_nomizu_identity_hand_expansion() {
        let id = identity();
        let t = kulkarni_nomizu(&id, &id);
        // (0,1,0,1): h00 k11 + h11 k00 - 0 - 0 = 2
        assert_eq!(t[0][1][0][1], 2.0);
        // (0,1,1,0): 0 + 0 - h00 k11 - h11 k00 = -2
        assert_eq!(t[0][1][1][0], -2.0);
        // (0,2,1,3): all deltas vanish
        assert_eq!(t[0][2][1][3], 0.0);
    }

    #[test]
    fn elementary_symmetric_small_cases() {
        let l = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(elementary_symmetric(&l, 0), 1.0);
        assert_eq!(elementary_symmetric(&l, 1), 10.0);
        assert_eq!(elementary_symmetric(&l, 2), 35.0);
        assert_eq!(elementary_symmetric(&l, 3), 50.0);
        assert_eq!(elementary_symmetric(&l, 4), 24.0);
        assert_eq!(elementary_symmetric(&l, 5), 0.0);
    }

    #[test]
    fn singular_and_ill_conditioned_metrics_rejected() {
        let mut g = identity();
        g[3][3] = 0.0;
        assert!(matches!(check_metric(&g, [0.0; 4]), Err(TensorError::SingularMetric { .. })));
        g[3][3] = 1e-9;
        assert!(matches!(check_metric(&g, [0.0; 4]), Err(TensorError::SingularMetric { .. })));
        g[3][3] = 1e-7;
        assert!(check_metric(&g, [0.0; 4]).is_ok());
        assert_eq!(sigma_k(&identity(), &identity(), 0), Err(TensorError::InvalidSigmaOrder(0)));
    }

    #[test]
    fn frame_is_orthonormal_and_oriented() {
        let g: Tensor2 = [[2.0, 0.3, 0.0, 0.1], [0.3, 1.5, 0.2, 0.0], [0.0, 0.2, 1.0, -0.1], [0.1, 0.0, -0.1, 3.0]];
        let fr = OrthonormalFrame::new(&g).unwrap();
        let on = fr.tensor2(&g);
        for i in 0..4 {
            for j in 0..4 {
                assert!((on[i][j] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        assert!(fr.matrix().determinant() > 0.0);
    }
}

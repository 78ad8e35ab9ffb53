//! Curvature as jets, covariant derivatives, and the fourth-order
//! quantities built from them: the Bach tensor in both of its forms and the
//! pointwise integrands of the Bach-flat identities.

use nalgebra::Matrix3;

use crate::jet::Jet;

use super::algebra::{check_metric, hodge_blocks, OrthonormalFrame};
use super::chart::{MetricChart, MetricJet};
use super::curvature::CurvatureBundle;
use super::{zero2, zero4, Point, Result, Tensor2, Tensor4, DIM};

/// Covariant tensor with jet components, flattened base-4 with the first
/// index most significant.
#[derive(Clone, Debug)]
struct JetTensor {
    rank: usize,
    d: Vec<Jet>,
}

impl JetTensor {
    fn from_fn(rank: usize, f: impl Fn(usize) -> Jet) -> Self {
        JetTensor { rank, d: (0..DIM.pow(rank as u32)).map(f).collect() }
    }

    fn values(&self) -> Vec<f64> {
        self.d.iter().map(Jet::value).collect()
    }

    /// `(nabla T)_{a i_1 .. i_r}`; the new index comes first.
    fn nabla(&self, gamma: &[Jet]) -> JetTensor {
        let n = self.d.len();
        let r = self.rank;
        let mut out = Vec::with_capacity(DIM * n);
        for a in 0..DIM {
            for idx in 0..n {
                let mut v = self.d[idx].derivative(a);
                for s in 0..r {
                    let stride = DIM.pow((r - 1 - s) as u32);
                    let i = (idx / stride) % DIM;
                    let base = idx - i * stride;
                    for m in 0..DIM {
                        let gam = &gamma[m * 16 + a * 4 + i];
                        if gam.value() == 0.0 && gam.coeffs().iter().all(|c| *c == 0.0) {
                            continue;
                        }
                        v -= gam * &self.d[base + m * stride];
                    }
                }
                out.push(v);
            }
        }
        JetTensor { rank: r + 1, d: out }
    }
}

type JetMatrix = [[Jet; DIM]; DIM];

fn matmul(a: &JetMatrix, b: &JetMatrix) -> JetMatrix {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut s = &a[i][0] * &b[0][j];
            for k in 1..DIM {
                s += &a[i][k] * &b[k][j];
            }
            s
        })
    })
}

/// Inverse of a jet matrix by Newton iteration from the inverse of its value.
fn invert(g: &JetMatrix, order: usize) -> Result<JetMatrix> {
    let g0: Tensor2 = std::array::from_fn(|i| std::array::from_fn(|j| g[i][j].value()));
    let inv0 = super::algebra::inverse(&g0)?;
    let mut x: JetMatrix = std::array::from_fn(|i| std::array::from_fn(|j| Jet::constant(inv0[i][j], order)));
    let mut correct = 0;
    while correct < order {
        let gx = matmul(g, &x);
        let two_minus: JetMatrix = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let id = if i == j { 2.0 } else { 0.0 };
                -&gx[i][j] + id
            })
        });
        x = matmul(&x, &two_minus);
        correct = 2 * correct + 1;
    }
    Ok(x)
}

/// Curvature of a metric as jets: the order-`n` metric jet gives
/// Christoffel symbols to order `n - 1` and curvature to order `n - 2`.
#[derive(Clone, Debug)]
pub struct CurvatureJets {
    pub point: Point,
    pub order: usize,
    g: JetTensor,
    ginv: JetTensor,
    /// `gamma[k][i][j]` flattened.
    gamma: Vec<Jet>,
    rm: JetTensor,
    ric: JetTensor,
    scalar: Jet,
    e: JetTensor,
    w: JetTensor,
}

impl CurvatureJets {
    pub fn new(mj: &MetricJet) -> Result<Self> {
        let n = mj.order;
        assert!(n >= 2, "curvature jets need a metric jet of order >= 2");
        let ginv_m = invert(&mj.g, n)?;
        let g = JetTensor::from_fn(2, |k| mj.g[k / 4][k % 4].clone());
        let ginv = JetTensor::from_fn(2, |k| ginv_m[k / 4][k % 4].clone());

        let dg: Vec<Vec<Jet>> = (0..DIM).map(|a| g.d.iter().map(|x| x.derivative(a)).collect()).collect();
        let gamma: Vec<Jet> = (0..64)
            .map(|f| {
                let (k, i, j) = (f / 16, (f / 4) % 4, f % 4);
                let mut s = Jet::zero(n - 1);
                for l in 0..DIM {
                    let first = (&dg[i][j * 4 + l] + &dg[j][i * 4 + l] - &dg[l][i * 4 + j]).scale(0.5);
                    s += &ginv.d[k * 4 + l] * &first;
                }
                s
            })
            .collect();

        let dgamma: Vec<Vec<Jet>> = (0..DIM).map(|a| gamma.iter().map(|x| x.derivative(a)).collect()).collect();
        let gi = |k: usize, i: usize, j: usize| k * 16 + i * 4 + j;
        let up: Vec<Jet> = (0..256)
            .map(|f| {
                let (m, i, j, k) = (f / 64, (f / 16) % 4, (f / 4) % 4, f % 4);
                let mut s = &dgamma[i][gi(m, j, k)] - &dgamma[j][gi(m, i, k)];
                for q in 0..DIM {
                    s += &gamma[gi(m, i, q)] * &gamma[gi(q, j, k)];
                    s -= &gamma[gi(m, j, q)] * &gamma[gi(q, i, k)];
                }
                s
            })
            .collect();
        let rm = JetTensor::from_fn(4, |f| {
            let (i, j, k, l) = (f / 64, (f / 16) % 4, (f / 4) % 4, f % 4);
            let mut s = Jet::zero(n - 2);
            for m in 0..DIM {
                s += &g.d[k * 4 + m] * &up[m * 64 + i * 16 + j * 4 + l];
            }
            s
        });
        let ric = JetTensor::from_fn(2, |f| {
            let (j, l) = (f / 4, f % 4);
            let mut s = Jet::zero(n - 2);
            for i in 0..DIM {
                for k in 0..DIM {
                    s += &ginv.d[i * 4 + k] * &rm.d[i * 64 + j * 16 + k * 4 + l];
                }
            }
            s
        });
        let mut scalar = Jet::zero(n - 2);
        for f in 0..16 {
            scalar += &ginv.d[f] * &ric.d[f];
        }
        let e = JetTensor::from_fn(2, |f| &ric.d[f] - &(&g.d[f] * &scalar).scale(0.25));
        let kn = |h: &JetTensor, k: &JetTensor, i: usize, j: usize, a: usize, b: usize| {
            &h.d[i * 4 + a] * &k.d[j * 4 + b] + &h.d[j * 4 + b] * &k.d[i * 4 + a]
                - &h.d[i * 4 + b] * &k.d[j * 4 + a]
                - &h.d[j * 4 + a] * &k.d[i * 4 + b]
        };
        let w = JetTensor::from_fn(4, |f| {
            let (i, j, k, l) = (f / 64, (f / 16) % 4, (f / 4) % 4, f % 4);
            let eg = kn(&e, &g, i, j, k, l).scale(0.5);
            let gg = &kn(&g, &g, i, j, k, l) * &scalar.scale(1.0 / 24.0);
            &rm.d[f] - &eg - &gg
        });
        Ok(CurvatureJets { point: mj.point, order: n, g, ginv, gamma, rm, ric, scalar, e, w })
    }

    fn ginv_values(&self) -> Tensor2 {
        let v = self.ginv.values();
        std::array::from_fn(|i| std::array::from_fn(|j| v[i * 4 + j]))
    }

    /// The pointwise bundle (without Bach) from the jet values.
    pub fn bundle(&self) -> CurvatureBundle {
        let gv = self.g.values();
        let g: Tensor2 = std::array::from_fn(|i| std::array::from_fn(|j| gv[i * 4 + j]));
        let mut gamma = [[[0.0; DIM]; DIM]; DIM];
        for (f, x) in self.gamma.iter().enumerate() {
            gamma[f / 16][(f / 4) % 4][f % 4] = x.value();
        }
        let mut rm = zero4();
        for (f, x) in self.rm.d.iter().enumerate() {
            rm[f / 64][(f / 16) % 4][(f / 4) % 4][f % 4] = x.value();
        }
        CurvatureBundle::from_riemann(self.point, g, self.ginv_values(), gamma, rm)
    }

    pub fn scalar_curvature(&self) -> f64 {
        self.scalar.value()
    }

    /// Riemann tensor values from the jet pipeline.
    pub fn riemann(&self) -> Vec<f64> {
        self.rm.values()
    }

    /// Ricci tensor values from the jet pipeline.
    pub fn ricci(&self) -> Vec<f64> {
        self.ric.values()
    }
}

/// The two expressions for the Bach tensor evaluated on the same jets.
#[derive(Clone, Debug)]
pub(crate) struct BachForms {
    pub weyl_form: Tensor2,
    pub e_form: Tensor2,
}

fn raise2(ginv: &Tensor2, x: &[f64]) -> Tensor2 {
    let mut xu = zero2();
    for k in 0..DIM {
        for l in 0..DIM {
            let mut s = 0.0;
            for a in 0..DIM {
                for b in 0..DIM {
                    s += ginv[k][a] * ginv[l][b] * x[a * 4 + b];
                }
            }
            xu[k][l] = s;
        }
    }
    xu
}

/// `W_{ikjl} X^{kl}` for a symmetric `X` given with lower indices.
fn weyl_contract(w: &[f64], ginv: &Tensor2, x: &[f64]) -> Tensor2 {
    let xu = raise2(ginv, x);
    let mut out = zero2();
    for i in 0..DIM {
        for j in 0..DIM {
            let mut s = 0.0;
            for k in 0..DIM {
                for l in 0..DIM {
                    s += w[i * 64 + k * 16 + j * 4 + l] * xu[k][l];
                }
            }
            out[i][j] = s;
        }
    }
    out
}

pub(crate) fn bach_from_jets(cj: &CurvatureJets) -> BachForms {
    assert!(cj.order >= 4, "Bach tensor needs a metric jet of order 4");
    let ginv = cj.ginv_values();
    let gv = cj.g.values();
    let w = cj.w.values();
    let ric = cj.ric.values();
    let e = cj.e.values();
    let r = cj.scalar.value();

    // divergence form: nabla^k nabla^l W_{kijl} + R^{kl} W_{kijl} / 2
    let nnw = cj.w.nabla(&cj.gamma).nabla(&cj.gamma).values();
    let ric_up = raise2(&ginv, &ric);
    let mut weyl_form = zero2();
    for i in 0..DIM {
        for j in 0..DIM {
            let mut s = 0.0;
            for k in 0..DIM {
                for l in 0..DIM {
                    s += 0.5 * ric_up[k][l] * w[k * 64 + i * 16 + j * 4 + l];
                    for a in 0..DIM {
                        for b in 0..DIM {
                            // nnw index: [a][b][k][i][j][l]
                            s += ginv[k][a] * ginv[l][b] * nnw[((((a * 4 + b) * 4 + k) * 4 + i) * 4 + j) * 4 + l];
                        }
                    }
                }
            }
            weyl_form[i][j] = s;
        }
    }

    // trace-free Ricci form
    let nne = cj.e.nabla(&cj.gamma).nabla(&cj.gamma).values();
    let nr = JetTensor { rank: 0, d: vec![cj.scalar.clone()] };
    let nnr = nr.nabla(&cj.gamma).nabla(&cj.gamma).values();
    let lap_r: f64 = (0..16).map(|f| ginv[f / 4][f % 4] * nnr[f]).sum();
    let ew = weyl_contract(&w, &ginv, &e);
    let e_sq: f64 = {
        let mut s = 0.0;
        for a in 0..DIM {
            for b in 0..DIM {
                for c in 0..DIM {
                    for d in 0..DIM {
                        s += ginv[a][c] * ginv[b][d] * e[a * 4 + b] * e[c * 4 + d];
                    }
                }
            }
        }
        s
    };
    let mut e_form = zero2();
    for i in 0..DIM {
        for j in 0..DIM {
            let mut lap_e = 0.0;
            let mut ee = 0.0;
            for a in 0..DIM {
                for b in 0..DIM {
                    lap_e += ginv[a][b] * nne[((a * 4 + b) * 4 + i) * 4 + j];
                    ee += ginv[a][b] * e[i * 4 + a] * e[j * 4 + b];
                }
            }
            let hess_r = 0.5 * (nnr[i * 4 + j] + nnr[j * 4 + i]);
            e_form[i][j] = -0.5 * lap_e + hess_r / 6.0 - lap_r / 24.0 * gv[i * 4 + j] - ew[i][j] + ee
                - 0.25 * e_sq * gv[i * 4 + j]
                + r * e[i * 4 + j] / 6.0;
        }
    }
    BachForms { weyl_form, e_form }
}

fn bach_forms(chart: &MetricChart, p: &Point) -> Result<BachForms> {
    let mj = chart.metric_jet(p, 4)?;
    check_metric(&mj.value(), *p)?;
    Ok(bach_from_jets(&CurvatureJets::new(&mj)?))
}

/// Bach tensor as the double divergence of the Weyl tensor plus the
/// Ricci-Weyl contraction.
pub fn bach_via_weyl(chart: &MetricChart, p: &Point) -> Result<Tensor2> {
    Ok(bach_forms(chart, p)?.weyl_form)
}

/// Bach tensor rewritten through the trace-free Ricci tensor.
pub fn bach_via_e(chart: &MetricChart, p: &Point) -> Result<Tensor2> {
    Ok(bach_forms(chart, p)?.e_form)
}

/// The four terms whose integrals make up the Weyl-energy form of the
/// Bach-flat identity.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct I27Terms {
    /// `72 det W+`.
    pub det_w_plus: f64,
    /// `72 det W-`.
    pub det_w_minus: f64,
    /// `-R |W|^2 / 2`.
    pub scalar_weyl: f64,
    /// `2 W_ijkl E^ik E^jl`.
    pub weyl_ee: f64,
}

impl I27Terms {
    pub fn sum(&self) -> f64 {
        self.det_w_plus + self.det_w_minus + self.scalar_weyl + self.weyl_ee
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct BachFlatIntegrands {
    /// `3(|nabla E|^2 - |nabla R|^2/12) + 6 tr E^3 + R|E|^2 - 6 W_ijkl E^ik E^jl`.
    pub i26: f64,
    pub i27: I27Terms,
    /// `|W+|^2` and `|W-|^2` as Frobenius norms of the 3x3 blocks;
    /// `|W|^2 = 4 (|W+|^2 + |W-|^2)`.
    pub w_plus_sq: f64,
    pub w_minus_sq: f64,
    /// Largest entry of the block mixing self-dual and anti-self-dual forms.
    pub mixed_block: f64,
}

/// Pointwise integrands of the Bach-flat identities at `p`.
pub fn bachflat_identity_integrands(chart: &MetricChart, p: &Point) -> Result<BachFlatIntegrands> {
    let mj = chart.metric_jet(p, 3)?;
    check_metric(&mj.value(), *p)?;
    let cj = CurvatureJets::new(&mj)?;
    let gv = cj.g.values();
    let g: Tensor2 = std::array::from_fn(|i| std::array::from_fn(|j| gv[i * 4 + j]));
    let e = cj.e.values();
    let w = cj.w.values();
    let r = cj.scalar.value();

    let ne = cj.e.nabla(&cj.gamma).values();
    let dr: Vec<f64> = (0..DIM).map(|a| cj.scalar.derivative(a).value()).collect();

    let frame = OrthonormalFrame::new(&g)?;
    let e_on = frame.flat(&e, 2);
    let ne_on = frame.flat(&ne, 3);
    let dr_on = frame.flat(&dr, 1);
    let w_on_flat = frame.flat(&w, 4);
    let mut w_on: Tensor4 = zero4();
    for (f, v) in w_on_flat.iter().enumerate() {
        w_on[f / 64][(f / 16) % 4][(f / 4) % 4][f % 4] = *v;
    }

    let grad_e_sq: f64 = ne_on.iter().map(|x| x * x).sum();
    let grad_r_sq: f64 = dr_on.iter().map(|x| x * x).sum();
    let em = nalgebra::Matrix4::from_fn(|i, j| e_on[i * 4 + j]);
    let tr_e3 = (em * em * em).trace();
    let e_sq: f64 = e_on.iter().map(|x| x * x).sum();
    let mut wee = 0.0;
    let mut w_sq = 0.0;
    for i in 0..DIM {
        for j in 0..DIM {
            for k in 0..DIM {
                for l in 0..DIM {
                    let wv = w_on[i][j][k][l];
                    wee += wv * e_on[i * 4 + k] * e_on[j * 4 + l];
                    w_sq += wv * wv;
                }
            }
        }
    }
    let i26 = 3.0 * (grad_e_sq - grad_r_sq / 12.0) + 6.0 * tr_e3 + r * e_sq - 6.0 * wee;

    let blocks = hodge_blocks(&w_on);
    let det = |m: &Matrix3<f64>| m.determinant();
    let i27 = I27Terms {
        det_w_plus: 72.0 * det(&blocks.plus),
        det_w_minus: 72.0 * det(&blocks.minus),
        scalar_weyl: -0.5 * r * w_sq,
        weyl_ee: 2.0 * wee,
    };
    Ok(BachFlatIntegrands {
        i26,
        i27,
        w_plus_sq: blocks.plus.norm_squared(),
        w_minus_sq: blocks.minus.norm_squared(),
        mixed_block: blocks.mixed.amax(),
    })
}


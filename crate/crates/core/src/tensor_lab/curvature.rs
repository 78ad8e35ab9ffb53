use serde_json::{json, Value};

use super::algebra::{check_metric, elementary_symmetric, eigenvalues_wrt, inverse, kulkarni_nomizu, norm2_sq, norm4_sq};
use super::chart::{MetricChart, MetricJet};
use super::covariant::{bach_from_jets, CurvatureJets};
use super::{zero2, zero4, Christoffel, Convention, Point, Result, Tensor2, Tensor4, TensorError, DIM};

/// Every pointwise curvature quantity of a metric at one point.
#[derive(Clone, Debug)]
pub struct CurvatureBundle {
    pub point: Point,
    pub metric: Tensor2,
    pub metric_inv: Tensor2,
    /// `christoffel[k][i][j]`.
    pub christoffel: Christoffel,
    pub riemann: Tensor4,
    pub ricci: Tensor2,
    pub scalar: f64,
    pub traceless_ricci: Tensor2,
    pub weyl: Tensor4,
    /// `Ric - R g / 6`.
    pub schouten_ws: Tensor2,
    /// `(Ric - R g / 6) / 2`.
    pub schouten_std: Tensor2,
    pub bach: Option<Tensor2>,
}

fn derivs(mj: &MetricJet) -> (Tensor2, [Tensor2; DIM], [[Tensor2; DIM]; DIM]) {
    let g = mj.value();
    let dg = std::array::from_fn(|a| {
        std::array::from_fn(|i| std::array::from_fn(|j| mj.g[i][j].grad()[a]))
    });
    let ddg = std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            std::array::from_fn(|i| std::array::from_fn(|j| mj.g[i][j].second(a, b)))
        })
    });
    (g, dg, ddg)
}

fn christoffel_from(ginv: &Tensor2, dg: &[Tensor2; DIM]) -> Christoffel {
    let mut gamma = [[[0.0; DIM]; DIM]; DIM];
    for i in 0..DIM {
        for j in i..DIM {
            let first: [f64; DIM] = std::array::from_fn(|l| 0.5 * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]));
            for k in 0..DIM {
                let v: f64 = (0..DIM).map(|l| ginv[k][l] * first[l]).sum();
                gamma[k][i][j] = v;
                gamma[k][j][i] = v;
            }
        }
    }
    gamma
}

/// Christoffel symbols of the second kind at `p`.
pub fn christoffel(chart: &MetricChart, p: &Point) -> Result<Christoffel> {
    let mj = chart.metric_jet(p, 1)?;
    let g = mj.value();
    check_metric(&g, *p)?;
    let ginv = inverse(&g)?;
    let dg = std::array::from_fn(|a| {
        std::array::from_fn(|i| std::array::from_fn(|j| mj.g[i][j].grad()[a]))
    });
    Ok(christoffel_from(&ginv, &dg))
}

/// Curvature at `p`; with `want_bach` the fourth-order pipeline also
/// produces the Bach tensor.
pub fn curvature(chart: &MetricChart, p: &Point, want_bach: bool) -> Result<CurvatureBundle> {
    if want_bach {
        let mj = chart.metric_jet(p, 4)?;
        check_metric(&mj.value(), *p)?;
        let cj = CurvatureJets::new(&mj)?;
        let mut bundle = cj.bundle();
        bundle.bach = Some(bach_from_jets(&cj).weyl_form);
        Ok(bundle)
    } else {
        CurvatureBundle::from_metric_jet(&chart.metric_jet(p, 2)?)
    }
}

impl CurvatureBundle {
    /// Curvature from a metric jet of order at least two, using plain
    /// floating-point second derivatives.
    pub fn from_metric_jet(mj: &MetricJet) -> Result<Self> {
        assert!(mj.order >= 2, "curvature needs second derivatives of the metric");
        let (g, dg, ddg) = derivs(mj);
        check_metric(&g, mj.point)?;
        let ginv = inverse(&g)?;
        let gamma = christoffel_from(&ginv, &dg);

        // d_a Gamma^k_ij = d_a g^{kl} Gamma_lij + g^{kl} d_a Gamma_lij
        let mut dgamma = [[[[0.0; DIM]; DIM]; DIM]; DIM];
        for a in 0..DIM {
            let mut dginv = zero2();
            for k in 0..DIM {
                for l in 0..DIM {
                    let mut s = 0.0;
                    for m in 0..DIM {
                        for n in 0..DIM {
                            s -= ginv[k][m] * dg[a][m][n] * ginv[n][l];
                        }
                    }
                    dginv[k][l] = s;
                }
            }
            for i in 0..DIM {
                for j in 0..DIM {
                    let first: [f64; DIM] =
                        std::array::from_fn(|l| 0.5 * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]));
                    let dfirst: [f64; DIM] =
                        std::array::from_fn(|l| 0.5 * (ddg[a][i][j][l] + ddg[a][j][i][l] - ddg[a][l][i][j]));
                    for k in 0..DIM {
                        dgamma[a][k][i][j] = (0..DIM).map(|l| dginv[k][l] * first[l] + ginv[k][l] * dfirst[l]).sum();
                    }
                }
            }
        }

        // R^m_{ijk} = d_i G^m_jk - d_j G^m_ik + G^m_ip G^p_jk - G^m_jp G^p_ik
        let mut up = zero4();
        for m in 0..DIM {
            for i in 0..DIM {
                for j in 0..DIM {
                    for k in 0..DIM {
                        let mut s = dgamma[i][m][j][k] - dgamma[j][m][i][k];
                        for q in 0..DIM {
                            s += gamma[m][i][q] * gamma[q][j][k] - gamma[m][j][q] * gamma[q][i][k];
                        }
                        up[m][i][j][k] = s;
                    }
                }
            }
        }
        let mut rm = zero4();
        for i in 0..DIM {
            for j in 0..DIM {
                for k in 0..DIM {
                    for l in 0..DIM {
                        rm[i][j][k][l] = (0..DIM).map(|m| g[k][m] * up[m][i][j][l]).sum();
                    }
                }
            }
        }
        Ok(Self::from_riemann(mj.point, g, ginv, gamma, rm))
    }

    /// Completes the bundle from the full curvature tensor.
    pub fn from_riemann(point: Point, g: Tensor2, ginv: Tensor2, christoffel: Christoffel, riemann: Tensor4) -> Self {
        let mut ricci = zero2();
        for j in 0..DIM {
            for l in 0..DIM {
                let mut s = 0.0;
                for i in 0..DIM {
                    for k in 0..DIM {
                        s += ginv[i][k] * riemann[i][j][k][l];
                    }
                }
                ricci[j][l] = s;
            }
        }
        // symmetrise away rounding noise
        for j in 0..DIM {
            for l in j + 1..DIM {
                let m = 0.5 * (ricci[j][l] + ricci[l][j]);
                ricci[j][l] = m;
                ricci[l][j] = m;
            }
        }
        let scalar: f64 = (0..DIM).flat_map(|j| (0..DIM).map(move |l| (j, l))).map(|(j, l)| ginv[j][l] * ricci[j][l]).sum();
        let map2 = |f: &dyn Fn(usize, usize) -> f64| -> Tensor2 { std::array::from_fn(|i| std::array::from_fn(|j| f(i, j))) };
        let traceless_ricci = map2(&|i, j| ricci[i][j] - 0.25 * scalar * g[i][j]);
        let schouten_ws = map2(&|i, j| ricci[i][j] - scalar / 6.0 * g[i][j]);
        let schouten_std = map2(&|i, j| 0.5 * schouten_ws[i][j]);
        let eg = kulkarni_nomizu(&traceless_ricci, &g);
        let gg = kulkarni_nomizu(&g, &g);
        let mut weyl = zero4();
        for i in 0..DIM {
            for j in 0..DIM {
                for k in 0..DIM {
                    for l in 0..DIM {
                        weyl[i][j][k][l] =
                            riemann[i][j][k][l] - 0.5 * eg[i][j][k][l] - scalar / 24.0 * gg[i][j][k][l];
                    }
                }
            }
        }
        CurvatureBundle {
            point,
            metric: g,
            metric_inv: ginv,
            christoffel,
            riemann,
            ricci,
            scalar,
            traceless_ricci,
            weyl,
            schouten_ws,
            schouten_std,
            bach: None,
        }
    }

    pub fn schouten(&self, conv: Convention) -> &Tensor2 {
        match conv {
            Convention::WeylSchouten => &self.schouten_ws,
            Convention::Schouten => &self.schouten_std,
        }
    }

    /// `[sigma_1, .., sigma_4]` of the chosen Schouten tensor.
    pub fn sigmas(&self, conv: Convention) -> Result<[f64; DIM]> {
        let ev = eigenvalues_wrt(self.schouten(conv), &self.metric)?;
        Ok(std::array::from_fn(|k| elementary_symmetric(&ev, k + 1)))
    }

    pub fn sigma(&self, conv: Convention, k: usize) -> Result<f64> {
        if !(1..=DIM).contains(&k) {
            return Err(TensorError::InvalidSigmaOrder(k));
        }
        Ok(self.sigmas(conv)?[k - 1])
    }

    /// `W_ijkl W^ijkl`.
    pub fn weyl_norm_sq(&self) -> f64 {
        norm4_sq(&self.weyl, &self.metric_inv)
    }

    pub fn traceless_ricci_norm_sq(&self) -> f64 {
        norm2_sq(&self.traceless_ricci, &self.metric_inv)
    }

    /// `R^2/24 - |E|^2/2`, the second symmetric function of `Ric - R g/6`
    /// computed without eigenvalues.
    pub fn sigma2_from_decomposition(&self) -> f64 {
        self.scalar * self.scalar / 24.0 - 0.5 * self.traceless_ricci_norm_sq()
    }

    /// `max |Rm - W - A_ws (x) g / 2|`.
    pub fn decomposition_residual(&self) -> f64 {
        let ag = kulkarni_nomizu(&self.schouten_ws, &self.metric);
        let mut worst: f64 = 0.0;
        for i in 0..DIM {
            for j in 0..DIM {
                for k in 0..DIM {
                    for l in 0..DIM {
                        let r = self.riemann[i][j][k][l] - self.weyl[i][j][k][l] - 0.5 * ag[i][j][k][l];
                        worst = worst.max(r.abs());
                    }
                }
            }
        }
        worst
    }

    /// Largest single trace of the Weyl tensor over any pair of slots.
    pub fn weyl_trace_residual(&self) -> f64 {
        let w = &self.weyl;
        let gi = &self.metric_inv;
        let mut worst: f64 = 0.0;
        for slots in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
            for x in 0..DIM {
                for y in 0..DIM {
                    let mut s = 0.0;
                    for a in 0..DIM {
                        for b in 0..DIM {
                            let mut idx = [0; 4];
                            let free: Vec<usize> = (0..4).filter(|&t| t != slots.0 && t != slots.1).collect();
                            idx[slots.0] = a;
                            idx[slots.1] = b;
                            idx[free[0]] = x;
                            idx[free[1]] = y;
                            s += gi[a][b] * w[idx[0]][idx[1]][idx[2]][idx[3]];
                        }
                    }
                    worst = worst.max(s.abs());
                }
            }
        }
        worst
    }

    /// `{point, R, E, W, sigma, bach}` with `sigma` for `Ric - R g/6` and
    /// tensors flattened in row-major index order.
    pub fn to_json(&self) -> Value {
        let flat2 = |t: &Tensor2| t.iter().flatten().copied().collect::<Vec<f64>>();
        let w: Vec<f64> = self.weyl.iter().flatten().flatten().flatten().copied().collect();
        let sigma = self.sigmas(Convention::WeylSchouten).map(|s| s.to_vec()).unwrap_or_default();
        json!({
            "point": self.point,
            "R": self.scalar,
            "E": flat2(&self.traceless_ricci),
            "W": w,
            "sigma": sigma,
            "bach": self.bach.as_ref().map(flat2),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_lab::zoo;

    #[test]
    fn sphere_curvature_from_fast_path() {
        let chart = zoo::s4_round(1.0);
        let b = curvature(&chart, &[0.7, 1.1, 2.0, 0.4], false).unwrap();
        assert!((b.scalar - 12.0).abs() < 1e-10);
        assert!(b.traceless_ricci_norm_sq() < 1e-18);
        assert!(b.weyl_norm_sq() < 1e-18);
        assert!((b.sigma(Convention::WeylSchouten, 2).unwrap() - 6.0).abs() < 1e-10);
        assert!(b.decomposition_residual() < 1e-12);
    }

    #[test]
    fn json_shape() {
        let chart = zoo::flat();
        let b = curvature(&chart, &[0.0; 4], false).unwrap();
        let v = b.to_json();
        assert_eq!(v["E"].as_array().unwrap().len(), 16);
        assert_eq!(v["W"].as_array().unwrap().len(), 256);
        assert_eq!(v["sigma"].as_array().unwrap().len(), 4);
        assert!(v["bach"].is_null());
    }
}

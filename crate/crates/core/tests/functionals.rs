use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use cglab_core::functionals::{
    bounds_from_mass, gauss_bonnet_check, integrate_scalar, sobolev_yamabe_check, volume, volume_growth_radial,
    AmbientFn, ClosedModel, FunctionalError,
};
use cglab_core::tensor_lab::Point;
use cglab_core::Jet;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn sphere_volume_and_total_scalar_curvature() {
    let m = ClosedModel::round_s4(1.0, 16);
    let vol = volume(&m).unwrap();
    assert!(rel(vol, 8.0 * PI * PI / 3.0) < 1e-7, "{vol}");
    let total_r = integrate_scalar(&m, &|b| b.scalar).unwrap();
    assert!(rel(total_r, 32.0 * PI * PI) < 1e-7);
}

#[test]
fn torus_volume() {
    let m = ClosedModel::flat_torus(1.5, 4);
    assert!(rel(volume(&m).unwrap(), 1.5f64.powi(4)) < 1e-14);
}

#[test]
fn gauss_bonnet_on_the_sphere() {
    let start = Instant::now();
    let r = gauss_bonnet_check(&ClosedModel::round_s4(1.0, 24)).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert!(rel(r.sigma2_term, 16.0 * PI * PI) < 1e-7, "{}", r.sigma2_term);
    assert!(r.weyl_energy.abs() < 1e-9);
    assert!(r.relative_residual() < 1e-7);
    assert!(rel(r.sigma2_by_decomposition, r.sigma2_term) < 1e-10);
    assert!(elapsed < 30.0, "took {elapsed:.1}s");
}

#[test]
fn gauss_bonnet_on_torus_and_product() {
    let t = gauss_bonnet_check(&ClosedModel::flat_torus(2.0, 4)).unwrap();
    assert_eq!(t.weyl_energy, 0.0);
    assert_eq!(t.sigma2_term, 0.0);
    assert_eq!(t.residual, 0.0);
    let p = gauss_bonnet_check(&ClosedModel::s3xs1(1.0, 2.0 * PI, 16)).unwrap();
    assert!(p.residual < 1e-7, "{:?}", p);
    assert!(p.weyl_energy.abs() < 1e-9);
    assert!(rel(p.volume, 4.0 * PI.powi(3)) < 1e-8);
    let json = p.to_json();
    for key in ["model", "chi", "weyl_energy", "sigma2_mass", "gb_residual", "volume"] {
        assert!(json.get(key).is_some(), "{key}");
    }
}

#[test]
fn quadrature_converges_when_nodes_double() {
    let coarse = gauss_bonnet_check(&ClosedModel::s3xs1(1.0, 3.0, 12)).unwrap();
    let fine = gauss_bonnet_check(&ClosedModel::s3xs1(1.0, 3.0, 24)).unwrap();
    assert!(rel(coarse.volume, fine.volume) < 1e-8);
    let c = gauss_bonnet_check(&ClosedModel::round_s4(1.0, 12)).unwrap();
    let f = gauss_bonnet_check(&ClosedModel::round_s4(1.0, 24)).unwrap();
    assert!(rel(c.sigma2_term, f.sigma2_term) < 1e-6, "{} {}", c.sigma2_term, f.sigma2_term);
}

#[test]
fn partition_of_unity_sums_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pts: Vec<Point> = (0..500)
        .map(|_| [rng.gen_range(0.0..PI), rng.gen_range(0.0..PI), rng.gen_range(0.0..PI), rng.gen_range(0.0..2.0 * PI)])
        .collect();
    for m in [ClosedModel::round_s4(1.0, 8), ClosedModel::s3xs1(1.0, 2.0, 8)] {
        assert!(m.partition_defect(&pts) < 1e-12);
    }
}

fn bump() -> AmbientFn {
    Arc::new(|x: &[Jet]| (&x[0] * &x[1]).scale(0.3) + x[2].scale(0.2) - (&x[4] * &x[4]).scale(0.1))
}

#[test]
fn weyl_and_sigma2_energies_are_conformally_invariant() {
    let round = gauss_bonnet_check(&ClosedModel::round_s4(1.0, 16)).unwrap();
    let bent = gauss_bonnet_check(&ClosedModel::conformal_s4(bump(), "bump", 16)).unwrap();
    assert!(rel(bent.sigma2_term, round.sigma2_term) < 1e-6, "{} vs {}", bent.sigma2_term, round.sigma2_term);
    assert!(bent.weyl_energy.abs() < 1e-6);
    // the volume does change
    assert!(rel(bent.volume, round.volume) > 1e-3);
}

#[test]
fn sobolev_equality_for_constants_and_strict_for_harmonics() {
    let m = ClosedModel::round_s4(1.0, 16);
    let one: AmbientFn = Arc::new(|x: &[Jet]| Jet::constant(1.0, x[0].order()));
    let r = sobolev_yamabe_check(&m, &one).unwrap();
    assert!(rel(r.lhs, r.rhs) < 1e-8 && r.satisfied);
    assert!(rel(r.rhs, 32.0 * PI * PI) < 1e-8);
    let zero: AmbientFn = Arc::new(|x: &[Jet]| Jet::zero(x[0].order()));
    let z = sobolev_yamabe_check(&m, &zero).unwrap();
    assert_eq!((z.lhs, z.rhs), (0.0, 0.0));
    assert!(z.satisfied);
    let harmonic: AmbientFn = Arc::new(|x: &[Jet]| x[2].clone());
    let h = sobolev_yamabe_check(&m, &harmonic).unwrap();
    assert!(h.satisfied && h.lhs < h.rhs * (1.0 - 1e-3));
    // a perturbation of the constant stays on the right side too
    let near: AmbientFn = Arc::new(|x: &[Jet]| x[1].scale(0.1) + 1.0);
    assert!(sobolev_yamabe_check(&m, &near).unwrap().satisfied);
}

#[test]
fn mass_bounds_at_paper_values() {
    let b = bounds_from_mass(16.0 * PI * PI).unwrap();
    assert!((b.r_min - 12.0).abs() < 1e-13);
    assert!(b.e_budget.abs() < 1e-12);
    let q = bounds_from_mass(16.0 * PI * PI * 0.75).unwrap();
    assert!((q.r_min - 12.0 * 3f64.sqrt() / 2.0).abs() < 1e-13);
    assert!((q.e_budget - 8.0 * PI * PI).abs() < 1e-12);
    let tiny = bounds_from_mass(1e-12).unwrap();
    assert!(tiny.r_min < 1e-5 && (tiny.e_budget - 32.0 * PI * PI).abs() < 1e-10);
    for bad in [0.0, -1.0, 16.0 * PI * PI * 1.0001, f64::NAN] {
        assert!(matches!(bounds_from_mass(bad), Err(FunctionalError::MassOutOfRange(_))));
    }
}

proptest! {
    #[test]
    fn mass_bounds_are_monotone(a in 1e-6f64..157.0, b in 1e-6f64..157.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (x, y) = (bounds_from_mass(lo).unwrap(), bounds_from_mass(hi).unwrap());
        prop_assert!(x.r_min <= y.r_min);
        prop_assert!(x.e_budget >= y.e_budget);
        prop_assert!(y.r_min <= y.r_max);
    }
}

#[test]
fn euclidean_volume_growth() {
    let radii: Vec<f64> = (1..=20).map(|k| 0.5 * k as f64).collect();
    let g = volume_growth_radial(&|_| 0.0, &radii).unwrap();
    for row in &g.rows {
        assert!(rel(row.ratio, PI * PI / 2.0) < 1e-12);
        assert!(rel(row.s, row.r) < 1e-14);
    }
    let c = volume_growth_radial(&|_| 0.7, &radii).unwrap();
    for row in &c.rows {
        assert!(rel(row.ratio, PI * PI / 2.0) < 1e-12);
    }
    assert!(g.to_csv().starts_with("r,s,vol,ratio\n"));
}

#[test]
fn spherical_volume_growth_decreases() {
    let radii: Vec<f64> = (1..=40).map(|k| 0.25 * k as f64).collect();
    let g = volume_growth_radial(&|r| (2.0 / (1.0 + r * r)).ln(), &radii).unwrap();
    assert!(g.ratio_max <= PI * PI / 2.0);
    assert!(g.rows.windows(2).all(|w| w[1].ratio < w[0].ratio));
    // closed form on the unit sphere: s = 2 atan r, vol = (8 pi^2/3)(1 - cos s)^2 (2 + cos s) / 4
    for row in &g.rows {
        let s = 2.0 * row.r.atan();
        let vol = 8.0 * PI * PI / 3.0 * (1.0 - s.cos()).powi(2) * (2.0 + s.cos()) / 4.0;
        assert!(rel(row.s, s) < 1e-12);
        assert!(rel(row.vol, vol) < 1e-10, "{} vs {}", row.vol, vol);
    }
}

#[test]
fn volume_growth_input_errors() {
    assert!(matches!(volume_growth_radial(&|_| 0.0, &[1.0, 0.5]), Err(FunctionalError::InvalidRadii)));
    assert!(matches!(volume_growth_radial(&|_| 0.0, &[]), Err(FunctionalError::InvalidRadii)));
    assert!(matches!(
        volume_growth_radial(&|r| if r > 1.0 { f64::NAN } else { 0.0 }, &[0.5, 2.0]),
        Err(FunctionalError::NonFiniteProfile(_))
    ));
}

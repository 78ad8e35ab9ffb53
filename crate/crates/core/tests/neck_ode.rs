use std::f64::consts::{LN_2, PI};
use std::sync::Arc;

use cglab_core::functionals::volume_growth_radial;
use cglab_core::neck_ode::*;
use cglab_core::tensor_lab::{curvature, Convention, ConformalField, CylinderField, MetricChart, DIM};
use cglab_core::Jet;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sphere_shift() -> f64 {
    0.25 * 1.5f64.ln()
}

fn sech_point(shift: f64, t: f64) -> (f64, f64, f64) {
    (shift - t.cosh().ln(), -t.tanh(), -1.0 / t.cosh().powi(2))
}

#[test]
fn radial_sigma2_examples() {
    for t in [-3.0, -0.4, 0.0, 1.7, 6.0] {
        let (w, wp, wpp) = sech_point(0.0, t);
        // 1 - tanh^2 loses digits as t grows
        assert!((sigma2_radial(w, wp, wpp, C_SIGMA).unwrap() - 1.5).abs() < 1e-9);
        let (w, wp, wpp) = sech_point(sphere_shift(), t);
        assert!((sigma2_radial(w, wp, wpp, C_SIGMA).unwrap() - 1.0).abs() < 1e-9);
    }
    assert_eq!(sigma2_radial(0.3, 0.2, 0.0, C_SIGMA).unwrap(), 0.0);
    assert!(matches!(sigma2_radial(0.0, 1.0, -1.0, C_SIGMA), Err(NeckError::DegenerateGradient { .. })));
    assert!(matches!(sigma2_radial(0.0, -1.0, -1.0, C_SIGMA), Err(NeckError::DegenerateGradient { .. })));
}

#[test]
fn radial_scalar_examples() {
    assert_eq!(scalar_radial(0.0, 0.0, 0.0), 6.0);
    for t in [-2.0, 0.0, 0.5, 3.0] {
        let (w, wp, wpp) = sech_point(0.0, t);
        assert!((scalar_radial(w, wp, wpp) - 12.0).abs() < 1e-10);
    }
    for t in [-1.0, 2.0] {
        assert_eq!(scalar_radial(t, 1.0, 0.0), 0.0);
    }
}

/// `sigma_2` of the Schouten tensor of `e^{2w} g_cyl`, where `w` is the
/// quadratic with the given value and derivatives at `t`, from the tensor
/// pipeline.
fn tensor_sigma2(w: f64, wp: f64, wpp: f64, t: f64, theta: [f64; 3]) -> f64 {
    let local = move |x: &[Jet; DIM]| {
        let d = x[0].clone() - t;
        (&d * &d).scale(0.5 * wpp) + d.scale(wp) + w
    };
    let field = ConformalField { base: Arc::new(CylinderField), w: Arc::new(local) };
    let chart = MetricChart::new("oracle", [(t - 2.0, t + 2.0), (0.0, PI), (0.0, PI), (0.0, 2.0 * PI)], Arc::new(field));
    let b = curvature(&chart, &[t, theta[0], theta[1], theta[2]], false).unwrap();
    b.sigma(Convention::Schouten, 2).unwrap()
}

fn oracle_disagreement(c_sigma: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(63);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let t = rng.gen_range(-10.0..10.0);
        let w = rng.gen_range(-1.0..1.0);
        let wp = rng.gen_range(-0.95..0.95);
        let wpp = rng.gen_range(-3.0..1.0);
        let theta = [rng.gen_range(0.3..2.8), rng.gen_range(0.3..2.8), rng.gen_range(0.0..6.0)];
        let oracle = tensor_sigma2(w, wp, wpp, t, theta);
        let radial = sigma2_radial(w, wp, wpp, c_sigma).unwrap();
        worst = worst.max((oracle - radial).abs());
    }
    worst
}

#[test]
fn radial_sigma2_matches_tensor_oracle() {
    let err = oracle_disagreement(C_SIGMA);
    assert!(err < 1e-8, "{err}");
}

#[test]
fn printed_coefficient_fails_the_oracle() {
    assert!(oracle_disagreement(2.0 / 3.0) > 1e-2);
}

#[test]
fn tensor_curvature_helper_sees_the_round_sphere() {
    let (w, wp, wpp) = sech_point(0.0, 0.8);
    let b = cylinder_bundle(w, wp, wpp, 0.8).unwrap();
    assert!((b.scalar - 12.0).abs() < 1e-9);
    assert!(b.weyl_norm_sq() < 1e-18);
}

fn sech_sup_error(p: &RadialProfile) -> f64 {
    (0..p.len()).map(|i| (p.w[i] - sech_point(sphere_shift(), p.t(i)).0).abs()).fold(0.0, f64::max)
}

#[test]
fn shooting_recovers_the_sphere() {
    let p = shoot(&ShootParams::default()).unwrap();
    assert_eq!(p.provenance, Provenance::OdeSolution);
    assert_eq!(p.len(), 5001);
    assert!(sech_sup_error(&p) < 1e-6, "{}", sech_sup_error(&p));
    // the equation holds with w'' taken from differences of w'
    for i in 1..p.len() - 1 {
        let wpp = (p.wp[i + 1] - p.wp[i - 1]) / (2.0 * p.h);
        let s = sigma2_radial(p.w[i], p.wp[i], wpp, C_SIGMA).unwrap();
        assert!((s - 1.0).abs() < 1e-6, "t={} sigma2={s}", p.t(i));
    }
}

#[test]
fn rk4_convergence_order() {
    let run = |h: f64| {
        let mut params = ShootParams::default();
        params.step = h;
        params.step_tol = 1.0;
        sech_sup_error(&shoot(&params).unwrap())
    };
    // the error is largest near t = 5 where |w'| approaches 1; coarser
    // steps are still pre-asymptotic there
    let (e1, e2, e3) = (run(0.025), run(0.0125), run(0.00625));
    let order = (e1 / e2).log2();
    assert!(order >= 3.5, "order {order} ({e1:e}, {e2:e})");
    assert!(e1 / e2 >= 12.0 && e2 / e3 >= 12.0, "{e1:e} {e2:e} {e3:e}");
}

#[test]
fn shooting_symmetric_data_gives_even_profile() {
    let params = ShootParams { interval: (-5.0, 5.0), ..Default::default() };
    let p = shoot(&params).unwrap();
    let n = p.len();
    assert_eq!(n % 2, 1);
    for i in 0..n / 2 {
        assert!((p.w[i] - p.w[n - 1 - i]).abs() < 1e-9);
        assert!((p.wp[i] + p.wp[n - 1 - i]).abs() < 1e-9);
    }
}

#[test]
fn steep_initial_gradient_blows_up_at_once() {
    let params = ShootParams { wp0: 0.999, interval: (-5.0, 5.0), ..Default::default() };
    match shoot(&params) {
        Err(NeckError::GradientBlowup { t }) => assert!(t <= 0.0 && t > -2e-3, "{t}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn shooting_rejects_bad_input() {
    for params in [
        ShootParams { target: 0.0, ..Default::default() },
        ShootParams { wp0: 1.0, ..Default::default() },
        ShootParams { interval: (1.0, 1.0), ..Default::default() },
        ShootParams { step: -1e-3, ..Default::default() },
    ] {
        assert!(matches!(shoot(&params), Err(NeckError::InvalidInput(_))), "{params:?}");
    }
}

#[test]
fn coarse_step_near_the_pole_is_reported() {
    // w' = 0.9 at the anchor with large w: the first backward step runs into the pole
    let params = ShootParams { w0: 1.0, wp0: 0.9, interval: (-1.0, 1.0), step: 0.05, ..Default::default() };
    assert!(matches!(shoot(&params), Err(NeckError::GradientBlowup { .. } | NeckError::StepTooLarge { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn shot_profiles_are_concave(target in 0.2f64..4.0, w0 in -1.5f64..0.3, wp0 in -0.9f64..0.9, len in 0.5f64..6.0) {
        let params = ShootParams::new(target, w0, wp0, (0.0, len), 5e-3);
        if let Ok(p) = shoot(&params) {
            prop_assert!(p.wp.windows(2).all(|d| d[1] < d[0]));
            // at most one interior critical point, and it is the maximum
            let turns = p.wp.windows(2).filter(|d| d[0] > 0.0 && d[1] <= 0.0).count();
            prop_assert!(turns <= 1);
            let (t_max, _) = p.max_w();
            prop_assert!(t_max >= p.t0 && t_max <= p.t_end());
            for i in 0..p.len() {
                prop_assert!((p.sigma2(i).unwrap() - target).abs() < 1e-9 * target);
            }
        }
    }
}

#[test]
fn full_sphere_mass_and_maximum() {
    // the mass outside [-8, 8] is below 1e-13
    let p = RadialProfile::sech(sphere_shift(), 0.0, -8.0, 8.0, 1e-3).unwrap();
    let d = lemma65_check(&p, 1.0, C4_UNIT).unwrap();
    assert!((d.mass - 2.0).abs() < 1e-6, "{}", d.mass);
    assert!((d.w_max - sphere_shift()).abs() < 1e-9);
    assert!(d.t_max.abs() < 1e-9);
    // the sphere alone requires c4 <= w_max - log(2)/2 = -0.2452
    let need = sphere_shift() - 0.5 * 2f64.ln();
    assert!((need + 0.245).abs() < 1e-3);
    assert!(C4_UNIT <= need);
    assert!((d.lemma65_slack - (need - C4_UNIT)).abs() < 1e-6);
    // maximum between grid points
    let q = RadialProfile::sech(sphere_shift(), 0.00037, -8.0, 8.0, 1e-2).unwrap();
    assert!((q.max_w().1 - sphere_shift()).abs() < 1e-9);
    assert!((q.max_w().0 - 0.00037).abs() < 1e-6);
}

#[test]
fn truncation_and_shift_of_the_bound() {
    let p = RadialProfile::sech(sphere_shift(), 0.0, -8.0, 8.0, 1e-3).unwrap();
    let full = diagnostics(&p, 1.0, C4_UNIT);
    let half = diagnostics(&p.restrict(0.0, 8.0).unwrap(), 1.0, C4_UNIT);
    assert!((half.w_max - full.w_max).abs() < 1e-15);
    assert!(half.mass < full.mass);
    assert!(half.lemma65_slack > full.lemma65_slack);
    // w -> w + c: max w moves by c, log(a)/2 by 2c
    for c in [-0.7, 0.4] {
        let s = diagnostics(&p.shifted(c), 1.0, C4_UNIT);
        assert!((s.w_max - full.w_max - c).abs() < 1e-12);
        assert!((0.5 * s.mass.ln() - 0.5 * full.mass.ln() - 2.0 * c).abs() < 1e-9);
        assert!((s.lemma65_slack - (s.w_max - 0.5 * s.mass.ln() - C4_UNIT)).abs() < 1e-12);
        assert!((s.lemma65_slack - full.lemma65_slack + c).abs() < 1e-9);
    }
}

#[test]
fn lemma_bound_holds_on_fresh_random_profiles() {
    let profiles = random_admissible_profiles(2024, 100, 1.0);
    assert_eq!(profiles.len(), 100);
    for p in &profiles {
        let d = lemma65_check(p, 1.0, C4_UNIT).unwrap();
        assert!(d.lemma65_slack >= 0.0, "{d:?}");
        assert!(d.mass > 0.0 && d.sigma2_min >= 1.0 - 1e-9);
    }
    // and for sigma_2 >= 5 with the shifted constant
    for p in random_admissible_profiles(77, 30, 5.0) {
        assert!(lemma65_check(&p, 5.0, c4_for(5.0)).unwrap().lemma65_slack >= 0.0);
    }
}

#[test]
fn frozen_constant_matches_calibration() {
    let c4 = calibrate_c4(&calibration_profiles(1.0), 1.0);
    assert!((c4 - C4_UNIT).abs() < 1e-6, "{c4}");
    // low-energy solutions approach max w - log(a)/2 = -log(3)/4 from above
    let inf = -0.25 * 3f64.ln();
    assert!(C4_UNIT < inf && C4_UNIT > inf - 2.0 * C4_MARGIN);
}

#[test]
fn lemma_check_rejects_inadmissible_profiles() {
    let p = RadialProfile::sech(sphere_shift(), 0.0, -3.0, 3.0, 1e-2).unwrap();
    assert!(matches!(lemma65_check(&p, 1.5, C4_UNIT), Err(NeckError::NotAdmissible { .. })));
    let bent = RadialProfile::closed_form(|t| (0.1 * t * t, 0.2 * t, 0.2), -1.0, 1.0, 1e-2).unwrap();
    assert!(matches!(lemma65_check(&bent, 0.1, C4_UNIT), Err(NeckError::NotAdmissible { .. })));
    assert!(!diagnostics(&bent, 0.1, C4_UNIT).admissible);
}

#[test]
fn simpson_rule_is_exact_on_cubics() {
    let h = 0.1;
    for n in [2usize, 3, 6, 7, 10] {
        let f: Vec<f64> = (0..=n).map(|i| (i as f64 * h).powi(3) - 2.0 * (i as f64 * h)).collect();
        let b = n as f64 * h;
        let exact = b.powi(4) / 4.0 - b * b;
        assert!((simpson(&f, h) - exact).abs() < 1e-13, "n={n}");
    }
}

#[test]
fn interpolation_endpoints_and_idempotence() {
    let a = RadialProfile::sech(sphere_shift(), 0.0, -4.0, 4.0, 1e-2).unwrap();
    let b = RadialProfile::sech(sphere_shift() - 0.3, 0.7, -4.0, 4.0, 1e-2).unwrap();
    assert_eq!(interpolate_prop63(&a, &b, 0.0).unwrap().profile, a);
    assert_eq!(interpolate_prop63(&a, &b, 1.0).unwrap().profile, b);
    let same = interpolate_prop63(&a, &a, 0.37).unwrap().profile;
    assert_eq!(same.provenance, Provenance::Interpolated);
    for i in 0..a.len() {
        assert!((same.w[i] - a.w[i]).abs() < 1e-14);
        assert!((same.wp[i] - a.wp[i]).abs() < 1e-14);
        assert!((same.wpp[i] - a.wpp[i]).abs() < 1e-13);
    }
    let mid = interpolate_prop63(&a, &b, 0.5).unwrap();
    assert!(mid.sigma2_min > 0.0 && mid.scalar_min > 0.0);
}

#[test]
fn interpolation_derivatives_are_consistent() {
    let a = RadialProfile::sech(sphere_shift(), -0.5, -4.0, 4.0, 1e-3).unwrap();
    let b = RadialProfile::sech(-0.2, 1.0, -4.0, 4.0, 1e-3).unwrap();
    let m = interpolate_prop63(&a, &b, 0.3).unwrap().profile;
    for i in (1..m.len() - 1).step_by(50) {
        let d1 = (m.w[i + 1] - m.w[i - 1]) / (2.0 * m.h);
        let d2 = (m.wp[i + 1] - m.wp[i - 1]) / (2.0 * m.h);
        assert!((d1 - m.wp[i]).abs() < 1e-5 && (d2 - m.wpp[i]).abs() < 1e-5);
    }
}

fn random_admissible_on(rng: &mut ChaCha8Rng, interval: (f64, f64), h: f64) -> RadialProfile {
    loop {
        let target = rng.gen_range(0.3..3.0);
        let params = ShootParams {
            anchor: Some(rng.gen_range(interval.0..interval.1)),
            ..ShootParams::new(target, rng.gen_range(-1.0..0.3), rng.gen_range(-0.8..0.8), interval, h)
        };
        if let Ok(p) = shoot(&params) {
            if p.check_admissible(0.0).is_ok() {
                return p;
            }
        }
    }
}

#[test]
fn interpolants_of_random_pairs_stay_admissible() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let a = random_admissible_on(&mut rng, (0.0, 3.0), 1e-2);
        let b = random_admissible_on(&mut rng, (0.0, 3.0), 1e-2);
        for s in [0.25, 0.5, 0.75] {
            let m = interpolate_prop63(&a, &b, s).unwrap();
            assert!(m.sigma2_min > 1e-6 && m.scalar_min > 1e-6, "{} {}", m.sigma2_min, m.scalar_min);
        }
    }
}

#[test]
fn interpolation_input_errors() {
    let a = RadialProfile::sech(0.0, 0.0, -2.0, 2.0, 1e-2).unwrap();
    let b = RadialProfile::sech(0.0, 0.0, -2.0, 2.5, 1e-2).unwrap();
    assert!(matches!(interpolate_prop63(&a, &b, 0.5), Err(NeckError::GridMismatch)));
    let flat = RadialProfile::closed_form(|_| (0.0, 0.0, 0.0), -2.0, 2.0, 1e-2).unwrap();
    assert!(matches!(interpolate_prop63(&a, &flat, 0.5), Err(NeckError::NotAdmissible { .. })));
    assert!(matches!(interpolate_prop63(&a, &a, 1.5), Err(NeckError::InvalidInput(_))));
}

#[test]
fn cone_deviation_examples() {
    let cone = RadialProfile::closed_form(|t| (t + 5.0, 1.0, 0.0), 0.0, 3.0, 1e-3).unwrap();
    let d = cone_deviation(&cone, 1.0, 1.0 + LN_2).unwrap();
    assert!(d.deviation < 1e-12 && d.orientation == 1 && (d.offset - 5.0).abs() < 1e-12);

    let sech = RadialProfile::sech(0.0, 0.0, 0.0, 8.0, 1e-3).unwrap();
    let near = cone_deviation(&sech, 2.0, 2.0 + LN_2).unwrap();
    let far = cone_deviation(&sech, 4.0, 4.0 + LN_2).unwrap();
    assert!(far.deviation > 0.0 && far.deviation < near.deviation);
    assert_eq!(far.orientation, -1);
    assert!((far.offset - LN_2).abs() < 1e-3);
    let at3 = cone_deviation(&sech, 3.0, 3.0 + LN_2).unwrap();
    assert!(at3.deviation < 2e-2, "{}", at3.deviation);

    let cylinder = RadialProfile::closed_form(|_| (0.0, 0.0, 0.0), 0.0, 3.0, 1e-3).unwrap();
    assert!(cone_deviation(&cylinder, 0.5, 0.5 + LN_2).unwrap().deviation >= 1.0);

    assert!(cone_deviation(&cylinder, 0.5, 1.5).is_err());
    assert!(cone_deviation(&cylinder, 2.8, 2.8 + LN_2).is_err());
}

#[test]
fn cone_deviation_shrinks_along_the_sphere_end() {
    let sech = RadialProfile::sech(0.0, 0.0, 0.0, 12.0, 1e-3).unwrap();
    let devs: Vec<f64> = (1..10).map(|k| cone_deviation(&sech, k as f64, k as f64 + LN_2).unwrap().deviation).collect();
    assert!(devs.windows(2).all(|d| d[1] < d[0]));
    // w + t - log 2 = -log(1 + e^{-2t}) and w' + 1 = 1 - tanh t decay like e^{-2t}
    assert!((devs[8] / devs[7] * 2f64.exp() - 1.0).abs() < 0.05);
}

#[test]
fn bishop_gromov_on_flat_space() {
    let cone = RadialProfile::closed_form(|t| (t, 1.0, 0.0), -3.0, 3.0, 1e-3).unwrap();
    let r = bishop_gromov_radial(&cone, 100).unwrap();
    for row in &r.rows {
        assert!((row.ratio / (2.0 * PI * PI) - 1.0).abs() < 1e-10);
        assert!((row.rho - row.t.exp()).abs() < 1e-10 * row.rho);
    }
    assert!(r.nonincreasing);
}

#[test]
fn bishop_gromov_on_the_sphere() {
    // starting far out keeps the conical continuation below t0 accurate
    let sphere = RadialProfile::sech(0.0, 0.0, -14.0, 8.0, 1e-3).unwrap();
    let r = bishop_gromov_radial(&sphere, 200).unwrap();
    assert!(r.nonincreasing);
    assert!(r.rows.windows(2).all(|p| p[1].ratio < p[0].ratio));
    for row in &r.rows {
        // geodesic distance from the pole and sphere area 2 pi^2 sin^3 rho
        let rho = 2.0 * row.t.exp().atan();
        assert!((row.rho - rho).abs() < 1e-9, "{} vs {rho}", row.rho);
        let ratio = 2.0 * PI * PI * (rho.sin() / rho).powi(3);
        assert!((row.ratio - ratio).abs() < 1e-8 * ratio);
        // far out Ric = 3 e^{2w} g_cyl is a cancellation of O(1) coordinate terms
        if row.t.abs() <= 6.0 {
            assert!((row.ricci_min - 3.0).abs() < 1e-8, "{} at {}", row.ricci_min, row.t);
        }
    }
    // same geodesic radius as the functionals module for w = log(2 / (1 + r^2))
    let radii: Vec<f64> = r.rows.iter().map(|row| row.t.exp()).collect();
    let g = volume_growth_radial(&|r: f64| (2.0 / (1.0 + r * r)).ln(), &radii).unwrap();
    for (a, b) in g.rows.iter().zip(&r.rows) {
        assert!((a.s - b.rho).abs() < 1e-8);
    }
}

#[test]
fn bishop_gromov_along_shot_profiles() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut checked = 0;
    while checked < 10 {
        let params = ShootParams {
            anchor: Some(-2.0),
            ..ShootParams::new(1.0, rng.gen_range(-1.0..0.1), rng.gen_range(0.1..0.9), (-2.0, 4.0), 1e-3)
        };
        let Ok(p) = shoot(&params) else { continue };
        let r = bishop_gromov_radial(&p, 50).unwrap();
        assert!(r.rows.iter().all(|row| row.ricci_min >= 0.0));
        assert!(r.nonincreasing, "{}", r.max_increase);
        checked += 1;
    }
}

#[test]
fn bishop_gromov_refuses_negative_ricci() {
    // w'' > 0 with w' > 0 bends the wrong way
    let p = RadialProfile::closed_form(|t| (0.5 * t + t * t, 0.5 + 2.0 * t, 2.0), 0.0, 0.2, 1e-3).unwrap();
    assert!(matches!(bishop_gromov_radial(&p, 10), Err(NeckError::RicciNotNonnegative { .. })));
    let falling = RadialProfile::sech(0.0, 0.0, 1.0, 3.0, 1e-3).unwrap();
    assert!(matches!(bishop_gromov_radial(&falling, 10), Err(NeckError::InvalidInput(_))));
}

#[test]
fn trace_and_diagnostics_formats() {
    let p = shoot(&ShootParams { interval: (0.0, 0.25), step: 0.05, ..Default::default() }).unwrap();
    let csv = p.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,w,w',sigma2,R,slice_diam"));
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first.len(), 6);
    assert!((first[3] - 1.0).abs() < 1e-12);
    assert!((first[5] - PI * sphere_shift().exp()).abs() < 1e-12);
    assert_eq!(csv.lines().count(), 7);

    let d = diagnostics(&shoot(&ShootParams::default()).unwrap(), 1.0, C4_UNIT);
    let json = d.to_json();
    for key in ["c3", "mass", "w_max", "lemma65_slack", "cone_dev", "admissible"] {
        assert!(json.get(key).is_some(), "{key}");
    }
    assert_eq!(json["admissible"], true);
    assert!(json["cone_dev"].as_f64().unwrap() > 0.0);
}

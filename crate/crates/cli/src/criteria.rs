//! The acceptance criteria, one function each.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use cglab_bubble::{run_suite, ExtractionConfig};
use cglab_core::functionals::{bounds_from_mass, gauss_bonnet_check, ClosedModel};
use cglab_core::neck_ode::{
    bishop_gromov_radial, interpolate_prop63, lemma65_check, random_admissible_profiles, shoot, sigma2_radial,
    NeckError, RadialProfile, ShootParams, C4_UNIT, C_SIGMA,
};
use cglab_core::tensor_lab::{
    bach_via_e, bach_via_weyl, bachflat_identity_integrands, curvature, perturbed_flat, s3xs1, ConformalField,
    Convention, CylinderField, MetricChart, Point, Tensor2, DIM,
};
use cglab_core::Jet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

/// Knobs of the acceptance run. Tolerances are fixed by the criteria and
/// are not configurable.
#[derive(Clone, Debug)]
pub struct SuiteConfig {
    /// Coefficient of the radial `sigma_2` formula under test.
    pub c_sigma: f64,
    /// Gauss-Legendre nodes per axis for the closed-model integrals.
    pub n_q: usize,
    /// Finite-difference step for the Bach comparison.
    pub fd_step: f64,
    /// Added to every internal seed.
    pub seed: u64,
    pub extraction: ExtractionConfig,
    /// Criteria to run (1..=10); empty means all.
    pub only: Vec<u32>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { c_sigma: C_SIGMA, n_q: 24, fd_step: 1e-3, seed: 0, extraction: ExtractionConfig::default(), only: Vec::new() }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.extraction.validate()?;
        if !(self.c_sigma > 0.0) {
            return Err(CliError::Config(format!("c_sigma = {} must be positive", self.c_sigma)));
        }
        if self.n_q < 2 {
            return Err(CliError::Config(format!("n_q = {} must be at least 2", self.n_q)));
        }
        if !(self.fd_step > 0.0) {
            return Err(CliError::Config(format!("fd step {} must be positive", self.fd_step)));
        }
        if let Some(k) = self.only.iter().find(|k| !(1..=10).contains(*k)) {
            return Err(CliError::Config(format!("criterion {k} does not exist (1..=10)")));
        }
        Ok(())
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(salt))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub values: Value,
}

impl Outcome {
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        format!("criterion {:>2}: {verdict}  {} ({:.2} s): {}", self.id, self.name, self.seconds, self.detail)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteSummary {
    pub passed: bool,
    pub failed: Vec<u32>,
    pub seconds: f64,
    pub criteria: Vec<Outcome>,
}

impl SuiteSummary {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("summary serialises")
    }
}

type Check = fn(&SuiteConfig) -> Result<(bool, String, Value), String>;

pub const CRITERIA: [(u32, &str, Check); 10] = [
    (1, "Gauss-Bonnet-Chern on the round S^4", gauss_bonnet_s4),
    (2, "S^3 x S^1 is sigma_2-flat and Bach-flat", product_model),
    (3, "two Bach formulas agree", bach_forms),
    (4, "radial sigma_2 matches the tensor oracle", radial_oracle),
    (5, "shooting recovers the round sphere", closed_form_recovery),
    (6, "max w - log(a)/2 bound on admissible profiles", lemma_bound),
    (7, "harmonic-mean interpolants stay admissible", interpolation),
    (8, "Bishop-Gromov ratio is nonincreasing", bishop_gromov),
    (9, "bubble trees recover planted trees", bubble_recovery),
    (10, "mass bounds at eps = 0, 1/4, 1/2", mass_bounds),
];

pub fn run_one(id: u32, config: &SuiteConfig) -> Outcome {
    let &(id, name, check) = CRITERIA.iter().find(|c| c.0 == id).expect("criterion id in 1..=10");
    let start = Instant::now();
    let (passed, detail, values) = match check(config) {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}"), Value::Null),
    };
    Outcome { id, name, passed, detail, seconds: start.elapsed().as_secs_f64(), values }
}

/// Validates the configuration, then runs the selected criteria in order.
pub fn run_suite_criteria(config: &SuiteConfig, mut on_done: impl FnMut(&Outcome)) -> Result<SuiteSummary, CliError> {
    config.validate()?;
    let start = Instant::now();
    let mut criteria = Vec::new();
    for &(id, _, _) in &CRITERIA {
        if config.only.is_empty() || config.only.contains(&id) {
            let o = run_one(id, config);
            on_done(&o);
            criteria.push(o);
        }
    }
    let failed: Vec<u32> = criteria.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    Ok(SuiteSummary { passed: failed.is_empty(), failed, seconds: start.elapsed().as_secs_f64(), criteria })
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn random_point(chart: &MetricChart, rng: &mut ChaCha8Rng, inset: f64) -> Point {
    std::array::from_fn(|a| {
        let (lo, hi) = chart.domain[a];
        let pad = inset * (hi - lo);
        rng.gen_range(lo + pad..hi - pad)
    })
}

fn max_diff(a: &Tensor2, b: &Tensor2) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn gauss_bonnet_s4(c: &SuiteConfig) -> Result<(bool, String, Value), String> {
    let start = Instant::now();
    let r = gauss_bonnet_check(&ClosedModel::round_s4(1.0, c.n_q)).map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    let target = 16.0 * PI * PI;
    let rel = (r.sigma2_term - target).abs() / target;
    let passed = rel < 1e-7 && r.weyl_energy.abs() < 1e-9 && r.relative_residual() < 1e-7 && secs < 30.0;
    let detail = format!(
        "n_q = {}: |int sigma_2 - 16 pi^2| / 16 pi^2 = {rel:.2e} (< 1e-7), int |W|^2 = {:.2e} (< 1e-9), residual {:.2e} (< 1e-7), {secs:.1} s (< 30 s)",
        c.n_q,
        r.weyl_energy.abs(),
        r.relative_residual()
    );
    Ok((passed, detail, json!({"report": r.to_json(), "sigma2_rel_error": rel, "seconds": secs})))
}

fn product_model(c: &SuiteConfig) -> Result<(bool, String, Value), String> {
    let chart = s3xs1(1.0, 2.0 * PI);
    let mut rng = c.rng(2);
    let (mut s2, mut i26) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let p = random_point(&chart, &mut rng, 0.1);
        let b = curvature(&chart, &p, false).map_err(err)?;
        s2 = s2.max(b.sigma(Convention::WeylSchouten, 2).map_err(err)?.abs());
        i26 = i26.max(bachflat_identity_integrands(&chart, &p).map_err(err)?.i26.abs());
    }
    let passed = s2 < 1e-8 && i26 < 1e-8;
    let detail = format!("100 points: max |sigma_2| = {s2:.2e}, max |i26| = {i26:.2e} (both < 1e-8)");
    Ok((passed, detail, json!({"max_sigma2": s2, "max_i26": i26})))
}

fn bach_forms(c: &SuiteConfig) -> Result<(bool, String, Value), String> {
    let mut rng = c.rng(3);
    let (mut fd, mut analytic) = (0.0f64, 0.0f64);
    for k in 0..20 {
        let exact = perturbed_flat(c.seed.wrapping_add(k), 0.2).map_err(err)?;
        let chart = exact.clone().with_fd_steps(c.fd_step, c.fd_step).map_err(err)?;
        let p = random_point(&exact, &mut rng, 0.1);
        fd = fd.max(max_diff(&bach_via_weyl(&chart, &p).map_err(err)?, &bach_via_e(&chart, &p).map_err(err)?));
        analytic = analytic.max(max_diff(&bach_via_weyl(&exact, &p).map_err(err)?, &bach_via_e(&exact, &p).map_err(err)?));
    }
    let passed = fd < 1e-5 && analytic < 1e-9;
    let detail = format!(
        "20 perturbed charts: finite differences (h = {}) {fd:.2e} (< 1e-5), analytic {analytic:.2e} (< 1e-9)",
        c.fd_step
    );
    Ok((passed, detail, json!({"fd": fd, "analytic": analytic})))
}

/// `sigma_2` of the Schouten tensor of `e^{2w} g_cyl` for the quadratic `w`
/// with the given jet at `t`, computed by the tensor pipeline.
fn tensor_sigma2(w: f64, wp: f64, wpp: f64, t: f64, theta: [f64; 3]) -> Result<f64, String> {
    let local = move |x: &[Jet; DIM]| {
        let d = x[0].clone() - t;
        (&d * &d).scale(0.5 * wpp) + d.scale(wp) + w
    };
    let field = ConformalField { base: Arc::new(CylinderField), w: Arc::new(local) };
    let chart = MetricChart::new("oracle", [(t - 2.0, t + 2.0), (0.0, PI), (0.0, PI), (0.0, 2.0 * PI)], Arc::new(field));
    let b = curvature(&chart, &[t, theta[0], theta[1], theta[2]], false).map_err(err)?;
    b.sigma(Convention::Schouten, 2).map_err(err)
}

/// Largest `|radial - tensor|` over 100 random jets.
pub fn oracle_disagreement(c_sigma: f64, seed: u64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let t = rng.gen_range(-10.0..10.0);
        let w = rng.gen_range(-1.0..1.0);
        let wp = rng.gen_range(-0.95..0.95);
        let wpp = rng.gen_range(-3.0..1.0);
        let theta = [rng.gen_range(0.3..2.8), rng.gen_range(0.3..2.8), rng.gen_range(0.0..6.0)];
        let oracle = tensor_sigma2(w, wp, wpp, t, theta)?;
        let radial = sigma2_radial(w, wp, wpp, c_sigma).map_err(err)?;
        worst = worst.max((oracle - radial).abs());
    }
    Ok(worst)
}

fn radial_oracle(c: &SuiteConfig) -> Result<(bool, String, Value), String> {
    let seed = c.seed.wrapping_add(4);
    let agreement = oracle_disagreement(c.c_sigma, seed)?;
    let control = oracle_disagreement(2.0 / 3.0, seed)?;
    let passed = agreement < 1e-8 && !(control < 1e-8);
    let detail = format!(
        "c_sigma = {}: max |delta| = {agreement:.2e} (< 1e-8); control c_sigma = 2/3: {control:.2e} (must fail)",
        c.c_sigma
    );
    Ok((passed, detail, json!({"c_sigma": c.c_sigma, "disagreement": agreement, "control_disagreement": control})))
}

fn sech_sup_error(p: &RadialProfile) -> f64 {
    let shift = 0.25 * 1.5f64.ln();
    (0..p.len()).map(|i| (p.w[i] - (shift - p.t(i).cosh().ln())).abs()).fold(0.0, f64::max)
}

fn closed_form_recovery(c: &SuiteConfig) -> Result<(bool, String, Value), String> {
    let base = ShootParams { c_sigma: c.c_sigma, ..ShootParams::default() };
    let sup = sech_sup_error(&shoot(&base).map_err(err)?);
    let run = |h: f64| -> Result<f64, String> {
        let params = ShootParams { step: h, step_tol: 1.0, ..base.clone() };
        Ok(sech_sup_error(&shoot(&params).map_err(err)?))
    };
    let (e1, e2) = (run(0.025)?, run(0.0125)?);
    let order = (e1 / e2).log2();
    let passed = sup < 1e-6 && order >= 3.5;
    let detail = format!("sup error on [0, 5] at h = 1e-3: {sup:.2e} (< 1e-6); observed order {order:.2} (>= 3.5)");
    Ok((passed, detail, json!({"sup_error": sup, "order": order, "errors": [e1, e2]})))
}

fn lemma_bound(c: &SuiteConfig) -> Result<(bool, String, Value), String> {
    let profiles = random_admissible_profiles(c.seed.wrapping_add(6), 100, 1.0);
    let mut min_slack = f64::INFINITY;
    for p in &profiles {
        min_slack = min_slack.min(lemma65_check(p, 1.0, C4_UNIT).map_err(err)?.lemma65_slack);
    }
    let shift = 0.25 * 1.5f64.ln();
    let sphere = RadialProfile::sech(shift, 0.0, -8.0, 8.0, 1e-3).map_err(err)?;
    let d = lemma65_check(&sphere, 1.0, C4_UNIT).map_err(err)?;
    let (mass_err, wmax_err) = ((d.mass - 2.0).abs(), (d.w_max - shift).abs());
    let passed = profiles.len() >= 100 && min_slack >= 0.0 && mass_err < 1e-6 && wmax_err < 1e-9;
    let detail = format!(
        "{} profiles, c4 = {C4_UNIT}: min slack {min_slack:.4} (>= 0); sphere |a - 2| = {mass_err:.2e} (< 1e-6), |w_max - log(3/2)/4| = {wmax_err:.2e} (< 1e-9)",
        profiles.len()
    );
    Ok((passed, detail, json!({"profiles": profiles.len(), "min_slack": min_slack, "sphere": d.to_json()})))
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

fn interpolation(c: &SuiteConfig) -> Result<(bool, String, Value), String> {
    let mut rng = c.rng(7);
    let (mut s2_min, mut r_min) = (f64::INFINITY, f64::INFINITY);
    let mut endpoints_exact = true;
    for _ in 0..50 {
        let a = random_admissible_on(&mut rng, (0.0, 3.0), 1e-2);
        let b = random_admissible_on(&mut rng, (0.0, 3.0), 1e-2);
        endpoints_exact &= interpolate_prop63(&a, &b, 0.0).map_err(err)?.profile == a;
        endpoints_exact &= interpolate_prop63(&a, &b, 1.0).map_err(err)?.profile == b;
        for s in [0.25, 0.5, 0.75] {
            let m = interpolate_prop63(&a, &b, s).map_err(err)?;
            s2_min = s2_min.min(m.sigma2_min);
            r_min = r_min.min(m.scalar_min);
        }
    }
    let passed = s2_min > 1e-6 && r_min > 1e-6 && endpoints_exact;
    let detail = format!(
        "50 pairs at s = 1/4, 1/2, 3/4: min sigma_2 = {s2_min:.3e}, min R = {r_min:.3e} (> 1e-6); endpoints exact: {endpoints_exact}"
    );
    Ok((passed, detail, json!({"sigma2_min": s2_min, "scalar_min": r_min, "endpoints_exact": endpoints_exact})))
}

fn bishop_gromov(c: &SuiteConfig) -> Result<(bool, String, Value), String> {
    let sphere = RadialProfile::sech(0.0, 0.0, -14.0, 8.0, 1e-3).map_err(err)?;
    let s = bishop_gromov_radial(&sphere, 200).map_err(err)?;
    let mut rng = c.rng(8);
    let (mut checked, mut attempts, mut worst, mut all) = (0, 0, s.max_increase, s.nonincreasing);
    while checked < 10 && attempts < 1000 {
        attempts += 1;
        let params = ShootParams {
            anchor: Some(-2.0),
            ..ShootParams::new(1.0, rng.gen_range(-1.0..0.1), rng.gen_range(0.1..0.9), (-2.0, 4.0), 1e-3)
        };
        let Ok(p) = shoot(&params) else { continue };
        match bishop_gromov_radial(&p, 50) {
            Ok(r) => {
                worst = worst.max(r.max_increase);
                all &= r.nonincreasing;
                checked += 1;
            }
            Err(NeckError::RicciNotNonnegative { .. }) => continue,
            Err(e) => return Err(err(e)),
        }
    }
    let passed = all && checked == 10;
    let detail = format!(
        "sphere and {checked} shot profiles ({attempts} attempts): largest relative increase {worst:.2e} (<= 1e-8)"
    );
    Ok((passed, detail, json!({"profiles": checked, "attempts": attempts, "max_increase": worst})))
}

fn bubble_recovery(c: &SuiteConfig) -> Result<(bool, String, Value), String> {
    let report = run_suite(&c.extraction);
    let n = report.cases.len();
    let passed = report.all_passed() && n >= 20 && report.seconds < 60.0;
    let failing: Vec<&str> = report.cases.iter().filter(|k| !k.passed()).map(|k| k.name.as_str()).collect();
    let mut detail = format!(
        "{}/{n} planted scenarios recovered in both modes with identical results and count bounds (>= 20 cases), {:.2} s (< 60 s)",
        report.recovered, report.seconds
    );
    if !failing.is_empty() {
        detail.push_str(&format!("; failing: {}", failing.join(", ")));
    }
    Ok((passed, detail, json!({"cases": report.cases, "recovered": report.recovered, "seconds": report.seconds})))
}

fn mass_bounds(_: &SuiteConfig) -> Result<(bool, String, Value), String> {
    let mut worst_r: f64 = 0.0;
    let mut worst_e: f64 = 0.0;
    let mut rows = Vec::new();
    for eps in [0.0, 0.25, 0.5] {
        let b = bounds_from_mass(16.0 * PI * PI * (1.0 - eps)).map_err(err)?;
        let r_exp = 12.0 * (1.0 - eps as f64).sqrt();
        let e_exp = 32.0 * PI * PI * eps;
        worst_r = worst_r.max((b.r_min - r_exp).abs() / r_exp);
        worst_e = worst_e.max((b.e_budget - e_exp).abs() / (32.0 * PI * PI));
        rows.push(json!({"eps": eps, "r_min": b.r_min, "e_budget": b.e_budget}));
    }
    // a few rounding steps separate the two sides
    let tol = 8.0 * f64::EPSILON;
    let passed = worst_r <= tol && worst_e <= tol;
    let detail = format!(
        "relative deviation of R_min {worst_r:.1e}, of E_budget (scaled by 32 pi^2) {worst_e:.1e} (<= 8 ulp)"
    );
    Ok((passed, detail, json!({"rows": rows})))
}

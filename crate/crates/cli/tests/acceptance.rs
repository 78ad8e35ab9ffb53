use std::io::Write;

use cglab::criteria::{run_one, run_suite_criteria, SuiteConfig};
use cglab::CliError;
use cglab_bubble::ExtractionConfig;

// Written to the process stdout directly so the verdicts show up without
// `--nocapture`.
fn report(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

#[test]
fn acceptance_criteria() {
    let summary = run_suite_criteria(&SuiteConfig::default(), |o| report(&o.line())).unwrap();
    assert_eq!(summary.criteria.len(), 10);
    report(&format!("acceptance: {} of 10 criteria pass in {:.1} s", 10 - summary.failed.len(), summary.seconds));
    assert!(summary.passed, "failing criteria: {:?}", summary.failed);
}

#[test]
fn printed_radial_coefficient_fails_the_oracle_criterion() {
    let config = SuiteConfig { c_sigma: 2.0 / 3.0, ..SuiteConfig::default() };
    let o = run_one(4, &config);
    assert!(!o.passed, "{}", o.line());
    assert!(o.values["disagreement"].as_f64().unwrap() > 1e-2);
}

#[test]
fn inconsistent_neck_threshold_is_rejected_before_running() {
    let config = SuiteConfig {
        extraction: ExtractionConfig { delta: 0.1, delta0: 0.2, ..ExtractionConfig::default() },
        ..SuiteConfig::default()
    };
    let mut ran = 0;
    let r = run_suite_criteria(&config, |_| ran += 1);
    assert!(matches!(r, Err(CliError::Bubble(_))));
    assert_eq!(ran, 0);
    let unknown = SuiteConfig { only: vec![11], ..SuiteConfig::default() };
    assert!(matches!(run_suite_criteria(&unknown, |_| ()), Err(CliError::Config(_))));
}

#[test]
fn selected_criteria_run_alone_and_serialise() {
    let config = SuiteConfig { only: vec![10, 2], ..SuiteConfig::default() };
    let s = run_suite_criteria(&config, |_| ()).unwrap();
    assert_eq!(s.criteria.iter().map(|o| o.id).collect::<Vec<_>>(), [2, 10]);
    assert!(s.passed);
    let v = s.to_json();
    assert_eq!(v["passed"], true);
    assert_eq!(v["criteria"][1]["values"]["rows"][1]["eps"], 0.25);
}

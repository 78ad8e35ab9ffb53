use std::path::PathBuf;
use std::process::{Command, Output};

use cglab::{cmd_curvature, gen_scenario, CliError};
use cglab_bubble::{planted_shape, Scenario};
use serde_json::Value;

fn cglab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cglab")).args(args).env("CGLAB_THREADS", "1").output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cglab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn lines(o: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&o.stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn curvature_of_flat_space_is_zero() {
    let o = cglab(&["curvature", "flat", "--point", "0,0,0,0"]);
    assert!(o.status.success());
    let b = &lines(&o)[0];
    assert_eq!(b["point"], serde_json::json!([0.0, 0.0, 0.0, 0.0]));
    for key in ["R", "E", "W", "sigma"] {
        let zero = match &b[key] {
            Value::Array(v) => v.iter().all(|x| x.as_f64() == Some(0.0)),
            x => x.as_f64() == Some(0.0),
        };
        assert!(zero, "{key}: {}", b[key]);
    }
}

#[test]
fn curvature_of_the_round_sphere_and_the_product() {
    let o = cglab(&["curvature", "s4_round(1)", "--point", "1.0,1.2,1.4,1.6", "--point", "2.0,0.5,2.5,1.0"]);
    assert!(o.status.success());
    let recs = lines(&o);
    assert_eq!(recs.len(), 2);
    for b in &recs {
        assert!((b["R"].as_f64().unwrap() - 12.0).abs() < 1e-9);
    }
    let o = cglab(&["curvature", "s3xs1(1,1)", "--point", "1.3,0.7,2.0,0.4"]);
    let b = &lines(&o)[0];
    assert!(b["sigma"][1].as_f64().unwrap().abs() < 1e-10, "{}", b["sigma"]);
    assert!((b["R"].as_f64().unwrap() - 6.0).abs() < 1e-10);
}

#[test]
fn unknown_chart_is_an_error() {
    assert!(matches!(cmd_curvature("klein_bottle", &[], false), Err(CliError::Tensor(_))));
    let o = cglab(&["curvature", "klein_bottle"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown chart"));
}

#[test]
fn random_scenarios_are_byte_stable() {
    let (a, b) = (scratch("r87a.json"), scratch("r87b.json"));
    for p in [&a, &b] {
        assert!(cglab(&["gen-scenario", "random(8,7)", "--out", p.to_str().unwrap()]).status.success());
    }
    let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(x, y);
    let sc = Scenario::from_json(std::str::from_utf8(&x).unwrap()).unwrap();
    assert_eq!(sc.planted.len(), 8);
    assert_eq!(gen_scenario("random( 8 , 7 )").unwrap().to_json().as_bytes(), &x[..]);
}

#[test]
fn templates() {
    let s = gen_scenario("single").unwrap();
    assert_eq!(s.planted.len(), 1);
    assert!(s.planted[0].parent.is_none());
    let chain = gen_scenario("nested_chain").unwrap();
    let betas: Vec<f64> = chain.planted.iter().map(|b| b.beta).collect();
    assert_eq!(betas, [1.0, 2.0, 3.0]);
    // a child sits at the parent's scale from its center and is smaller
    for (i, b) in chain.planted.iter().enumerate().skip(1) {
        let p = &chain.planted[chain.parent_index(i).unwrap()];
        assert_eq!(b.gamma, p.beta);
        assert!(b.beta > b.gamma);
    }
    assert_eq!(planted_shape(&gen_scenario("exotic_triple").unwrap()).canonical(), planted_shape(&cglab_bubble::exotic_triple()).canonical());
    for bad in ["double", "random(0,1)", "random(3)", "random(200,1)"] {
        assert!(gen_scenario(bad).is_err(), "{bad}");
    }
}

#[test]
fn bubbletree_emits_json_dot_and_trace() {
    let path = scratch("nested.json");
    assert!(cglab(&["gen-scenario", "nested_chain", "--out", path.to_str().unwrap()]).status.success());
    let p = path.to_str().unwrap();
    let json_out = cglab(&["bubbletree", "--scenario", p, "--mode", "numeric"]);
    assert!(json_out.status.success());
    let tree: Value = serde_json::from_slice(&json_out.stdout).unwrap();
    assert_eq!(tree["mode"], "numeric");
    assert_eq!(tree["roots"][0]["children"][0]["children"][0]["kind"], "leaf");
    let dot = cglab(&["bubbletree", "--scenario", p, "--emit", "dot"]);
    let dot = String::from_utf8(dot.stdout).unwrap();
    assert!(dot.starts_with("digraph") && dot.contains("ambient -> n2"));
    let trace = cglab(&["bubbletree", "--scenario", p, "--emit", "trace"]);
    assert!(serde_json::from_slice::<Value>(&trace.stdout).unwrap().as_array().unwrap().len() >= 3);
    let again = cglab(&["bubbletree", "--scenario", p, "--mode", "numeric"]);
    assert_eq!(again.stdout, json_out.stdout);
    let bad = cglab(&["bubbletree", "--scenario", p, "--delta", "0.1", "--delta0", "0.3"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn gauss_bonnet_neck_and_interpolation_commands() {
    let gb = cglab(&["gauss-bonnet", "s4_round(1)", "--nq", "16"]);
    let v: Value = serde_json::from_slice(&gb.stdout).unwrap();
    assert_eq!(v["chi"], 2);
    assert!(v["gb_residual"].as_f64().unwrap() < 1e-9);
    assert_eq!(cglab(&["gauss-bonnet", "rp4"]).status.code(), Some(2));

    let csv = scratch("sphere.csv");
    let ode = cglab(&["neck-ode", "--t-range=-6,6", "--csv", csv.to_str().unwrap()]);
    let v: Value = serde_json::from_slice(&ode.stdout).unwrap();
    let d = &v["diagnostics"];
    assert!((d["mass"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert!((d["w_max"].as_f64().unwrap() - 0.25 * 1.5f64.ln()).abs() < 1e-9);
    assert!(d["lemma65_slack"].as_f64().unwrap() >= 0.0);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 12002);

    let mid = cglab(&["interpolate", "--s", "0.5"]);
    let v: Value = serde_json::from_slice(&mid.stdout).unwrap();
    assert!(v["sigma2_min"].as_f64().unwrap() > 0.0 && v["R_min"].as_f64().unwrap() > 0.0);
}

#[test]
fn suite_exit_codes() {
    let ok = cglab(&["suite"]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let v: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["criteria"].as_array().unwrap().len(), 10);
    assert_eq!(String::from_utf8_lossy(&ok.stderr).lines().filter(|l| l.contains(": PASS")).count(), 10);

    let report = scratch("control.json");
    let control = cglab(&["suite", "--c-sigma", "0.6666666666666666", "--only", "4", "--report", report.to_str().unwrap()]);
    assert_eq!(control.status.code(), Some(1));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["failed"], serde_json::json!([4]));

    let bad = cglab(&["suite", "--delta", "0.1", "--delta0", "0.2"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(bad.stdout.is_empty());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("delta0"));
}

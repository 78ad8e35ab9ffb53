//! Library side of the `cglab` binary: the subcommands as plain functions
//! and the acceptance criteria in [`criteria`].

pub mod criteria;

use cglab_bubble::{
    build_tree, exotic_triple, nested_chain, random_scenario, separable_pair, single, BubbleError, BubbleTree,
    ExtractionConfig, Scenario,
};
use cglab_core::functionals::{gauss_bonnet_check, ClosedModel, FunctionalError};
use cglab_core::neck_ode::{c4_for, diagnostics, interpolate_prop63, shoot, Interpolant, NeckError, RadialProfile, ShootParams};
use cglab_core::tensor_lab::{chart_by_name, curvature, Point, TensorError};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Neck(#[from] NeckError),
    #[error(transparent)]
    Bubble(#[from] BubbleError),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("unknown scenario template `{0}`")]
    UnknownTemplate(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

pub type Result<T> = std::result::Result<T, CliError>;

/// One curvature bundle per point; without points, the center of the
/// chart's coordinate box.
pub fn cmd_curvature(chart: &str, points: &[Point], bach: bool) -> Result<Vec<Value>> {
    let chart = chart_by_name(chart)?;
    let center: Point = std::array::from_fn(|a| 0.5 * (chart.domain[a].0 + chart.domain[a].1));
    let points = if points.is_empty() { vec![center] } else { points.to_vec() };
    points.iter().map(|p| Ok(curvature(&chart, p, bach)?.to_json())).collect()
}

pub fn cmd_gauss_bonnet(model: &str, n_q: usize) -> Result<Value> {
    let m = ClosedModel::by_name(model, n_q).ok_or_else(|| CliError::UnknownModel(model.to_string()))?;
    Ok(gauss_bonnet_check(&m)?.to_json())
}

/// Shoots one profile and reports its diagnostics; `c4` defaults to the
/// calibrated constant for `c3`.
pub fn cmd_neck_ode(params: &ShootParams, c3: f64, c4: Option<f64>) -> Result<(RadialProfile, Value)> {
    let p = shoot(params)?;
    let d = diagnostics(&p, c3, c4.unwrap_or_else(|| c4_for(c3)));
    let report = json!({
        "target": params.target,
        "interval": [p.t0, p.t_end()],
        "step": p.h,
        "points": p.len(),
        "diagnostics": d.to_json(),
    });
    Ok((p, report))
}

/// Interpolates between two shifted `log sech` profiles on a shared grid.
pub fn cmd_interpolate(
    a: (f64, f64),
    b: (f64, f64),
    range: (f64, f64),
    step: f64,
    s: f64,
) -> Result<(Interpolant, Value)> {
    let pa = RadialProfile::sech(a.0, a.1, range.0, range.1, step)?;
    let pb = RadialProfile::sech(b.0, b.1, range.0, range.1, step)?;
    let m = interpolate_prop63(&pa, &pb, s)?;
    let report = json!({
        "s": s,
        "first": {"shift": a.0, "center": a.1},
        "second": {"shift": b.0, "center": b.1},
        "sigma2_min": m.sigma2_min,
        "R_min": m.scalar_min,
    });
    Ok((m, report))
}

pub fn cmd_bubbletree(scenario: &Scenario, config: &ExtractionConfig) -> Result<BubbleTree> {
    config.validate()?;
    Ok(build_tree(scenario, config)?)
}

/// Eight roots, three children each, depth at most two.
pub const RANDOM_MAX_BUBBLES: usize = 104;

/// `single`, `separable_pair`, `nested_chain`, `exotic_triple` or
/// `random(n, seed)`.
pub fn gen_scenario(template: &str) -> Result<Scenario> {
    let t = template.trim();
    let unknown = || CliError::UnknownTemplate(t.to_string());
    match t {
        "single" => return Ok(single()),
        "separable_pair" => return Ok(separable_pair()),
        "nested_chain" => return Ok(nested_chain()),
        "exotic_triple" => return Ok(exotic_triple()),
        _ => {}
    }
    let args = t.strip_prefix("random").and_then(|r| r.trim().strip_prefix('(')).and_then(|r| r.strip_suffix(')'));
    let args: Vec<&str> = args.ok_or_else(unknown)?.split(',').map(str::trim).collect();
    match args.as_slice() {
        [n, seed] => {
            let n: usize = n.parse().map_err(|_| unknown())?;
            let seed: u64 = seed.parse().map_err(|_| unknown())?;
            if !(1..=RANDOM_MAX_BUBBLES).contains(&n) {
                return Err(CliError::Config(format!("random scenarios hold 1 to {RANDOM_MAX_BUBBLES} bubbles, got {n}")));
            }
            Ok(random_scenario(n, seed))
        }
        _ => Err(unknown()),
    }
}

pub fn read_file(path: &str) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_string(), source })
}

pub fn write_file(path: &str, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_string(), source })
}

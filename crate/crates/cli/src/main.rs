use std::io::Write;
use std::process::ExitCode;

use cglab::criteria::{run_suite_criteria, SuiteConfig};
use cglab::{
    cmd_bubbletree, cmd_curvature, cmd_gauss_bonnet, cmd_interpolate, cmd_neck_ode, gen_scenario, read_file, write_file,
    CliError,
};
use cglab_bubble::{ExtractionConfig, Mode, Scenario};
use cglab_core::neck_ode::{ShootParams, C_SIGMA};
use cglab_core::tensor_lab::Point;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "cglab", version, about = "Curvature, radial sigma_2 and bubble-tree workbench on four-manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Curvature bundle of a named chart at the given points, one JSON line each.
    Curvature {
        /// e.g. flat, s4_round(1), s3xs1(1,1), perturbed_flat(3,0.2), conformal(cylinder,log(sech(t)))
        chart: String,
        /// Coordinates `x0,x1,x2,x3`; repeatable. Defaults to the center of the chart.
        #[arg(long = "point", value_parser = parse_point, allow_hyphen_values = true)]
        points: Vec<Point>,
        /// Also compute the Bach tensor.
        #[arg(long)]
        bach: bool,
    },
    /// Both sides of the Gauss-Bonnet-Chern formula on a closed model.
    GaussBonnet {
        /// s4_round(r), s3xs1(r,L) or flat_torus(L)
        #[arg(default_value = "s4_round(1)")]
        model: String,
        /// Gauss-Legendre nodes per axis.
        #[arg(long, default_value_t = 24)]
        nq: usize,
    },
    /// Shoots the radial sigma_2 equation and reports neck diagnostics.
    NeckOde {
        #[arg(long, default_value_t = 1.0)]
        target: f64,
        /// w at the anchor (default: log(3/2)/4, the round sphere).
        #[arg(long, allow_hyphen_values = true)]
        w0: Option<f64>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        wp0: f64,
        /// Interval `a,b`.
        #[arg(long, value_parser = parse_pair, default_value = "0,5", allow_hyphen_values = true)]
        t_range: (f64, f64),
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        /// Where the data are imposed (default: the point closest to 0).
        #[arg(long, allow_hyphen_values = true)]
        anchor: Option<f64>,
        /// Coefficient of the radial sigma_2 formula.
        #[arg(long, default_value_t = C_SIGMA)]
        coefficient: f64,
        /// Largest accepted step-doubling error per step.
        #[arg(long, default_value_t = 1e-6)]
        step_tol: f64,
        /// Lower bound c3 on sigma_2 for the diagnostics.
        #[arg(long, default_value_t = 1.0)]
        c3: f64,
        /// Constant of the max w bound (default: calibrated for c3).
        #[arg(long, allow_hyphen_values = true)]
        c4: Option<f64>,
        /// Write the profile as CSV here.
        #[arg(long)]
        csv: Option<String>,
    },
    /// Harmonic-mean interpolation between two log-sech profiles.
    Interpolate {
        /// First profile `shift,center`.
        #[arg(long, value_parser = parse_pair, default_value = "0.1013662770270411,0", allow_hyphen_values = true)]
        first: (f64, f64),
        /// Second profile `shift,center`.
        #[arg(long, value_parser = parse_pair, default_value = "-0.2,0.7", allow_hyphen_values = true)]
        second: (f64, f64),
        #[arg(long, value_parser = parse_pair, default_value = "-4,4", allow_hyphen_values = true)]
        t_range: (f64, f64),
        #[arg(long, default_value_t = 1e-2)]
        step: f64,
        /// Interpolation parameter in [0, 1].
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[arg(long)]
        csv: Option<String>,
    },
    /// Extracts the bubble tree of a scenario file.
    Bubbletree {
        #[arg(long)]
        scenario: String,
        #[command(flatten)]
        extraction: ExtractionArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Limit)]
        mode: ModeArg,
        /// Override the scenario's epsilon.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Override the scenario's atom seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Emit::Json)]
        emit: Emit,
        /// Write the output here instead of stdout.
        #[arg(long)]
        out: Option<String>,
    },
    /// Writes a planted scenario.
    GenScenario {
        /// single, separable_pair, nested_chain, exotic_triple or random(n,seed)
        template: String,
        #[arg(long)]
        out: Option<String>,
    },
    /// Runs the acceptance criteria; exit code 1 when any fails, 2 on a bad configuration.
    Suite {
        /// Coefficient of the radial sigma_2 formula under test.
        #[arg(long, default_value_t = C_SIGMA)]
        c_sigma: f64,
        #[arg(long, default_value_t = 24)]
        nq: usize,
        /// Finite-difference step for the Bach comparison.
        #[arg(long, default_value_t = 1e-3)]
        fd_step: f64,
        /// Added to every internal seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        extraction: ExtractionArgs,
        /// Run only these criteria (comma separated).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
        /// Write the summary JSON here as well as to stdout.
        #[arg(long)]
        report: Option<String>,
    },
}

#[derive(Args)]
struct ExtractionArgs {
    /// Energy quantum: a bubble captures delta/2.
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Energy bound on a neck annulus.
    #[arg(long, default_value_t = 0.1)]
    delta0: f64,
    /// Halo multiplier K.
    #[arg(long, default_value_t = 10.0)]
    halo_k: f64,
    /// Ratio beyond which a numeric quantity counts as divergent.
    #[arg(long, default_value_t = 100.0)]
    sep_threshold: f64,
    /// Outer neck radius towards a parent is its scale over this.
    #[arg(long, default_value_t = 2.0)]
    neck_divisor: f64,
    /// Outer neck radius towards the ambient manifold.
    #[arg(long, default_value_t = 0.25)]
    sigma: f64,
    /// Scale against which the final roots are grouped.
    #[arg(long, default_value_t = 1.0)]
    ambient_scale: f64,
    /// Adjacency radius of annulus atoms, relative to the outer radius.
    #[arg(long, default_value_t = 1.0)]
    edge_factor: f64,
    /// Lightest annulus component counted as a separate piece.
    #[arg(long, default_value_t = 0.01)]
    component_min_energy: f64,
    /// Largest atom count in the inner shell of a neck.
    #[arg(long, default_value_t = 64)]
    shell_atom_bound: usize,
}

impl ExtractionArgs {
    fn config(&self, mode: Mode) -> ExtractionConfig {
        ExtractionConfig {
            delta: self.delta,
            delta0: self.delta0,
            halo_k: self.halo_k,
            sep_threshold: self.sep_threshold,
            mode,
            neck_divisor: self.neck_divisor,
            sigma: self.sigma,
            ambient_scale: self.ambient_scale,
            edge_factor: self.edge_factor,
            component_min_energy: self.component_min_energy,
            shell_atom_bound: self.shell_atom_bound,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Limit,
    Numeric,
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Json,
    Dot,
    Trace,
}

fn parse_floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"))).collect()
}

fn parse_point(s: &str) -> Result<Point, String> {
    let v = parse_floats(s)?;
    v.try_into().map_err(|v: Vec<f64>| format!("a point has 4 coordinates, got {}", v.len()))
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    match parse_floats(s)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        v => Err(format!("expected two comma-separated numbers, got {}", v.len())),
    }
}

fn emit(out: Option<&str>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json serialises") + "\n"
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Curvature { chart, points, bach } => {
            let mut text = String::new();
            for b in cmd_curvature(&chart, &points, bach)? {
                text.push_str(&serde_json::to_string(&b).expect("json serialises"));
                text.push('\n');
            }
            emit(None, &text)?;
        }
        Command::GaussBonnet { model, nq } => emit(None, &pretty(&cmd_gauss_bonnet(&model, nq)?))?,
        Command::NeckOde { target, w0, wp0, t_range, step, anchor, coefficient, step_tol, c3, c4, csv } => {
            let defaults = ShootParams::default();
            let params = ShootParams {
                target,
                w0: w0.unwrap_or(defaults.w0),
                wp0,
                interval: t_range,
                step,
                anchor,
                c_sigma: coefficient,
                step_tol,
            };
            let (profile, report) = cmd_neck_ode(&params, c3, c4)?;
            if let Some(path) = csv {
                write_file(&path, &profile.to_csv())?;
            }
            emit(None, &pretty(&report))?;
        }
        Command::Interpolate { first, second, t_range, step, s, csv } => {
            let (m, report) = cmd_interpolate(first, second, t_range, step, s)?;
            if let Some(path) = csv {
                write_file(&path, &m.profile.to_csv())?;
            }
            emit(None, &pretty(&report))?;
        }
        Command::Bubbletree { scenario, extraction, mode, epsilon, seed, emit: what, out } => {
            let mut sc = Scenario::from_json(&read_file(&scenario)?)?;
            if let Some(e) = epsilon {
                sc.epsilon = e;
            }
            if let Some(s) = seed {
                sc.seed = s;
            }
            sc.validate()?;
            let mode = match mode {
                ModeArg::Limit => Mode::Limit,
                ModeArg::Numeric => Mode::Numeric,
            };
            let tree = cmd_bubbletree(&sc, &extraction.config(mode))?;
            let text = match what {
                Emit::Json => pretty(&tree.to_json()),
                Emit::Dot => tree.to_dot(),
                Emit::Trace => pretty(&tree.trace_json()),
            };
            emit(out.as_deref(), &text)?;
        }
        Command::GenScenario { template, out } => emit(out.as_deref(), &gen_scenario(&template)?.to_json())?,
        Command::Suite { c_sigma, nq, fd_step, seed, extraction, only, report } => {
            let config = SuiteConfig { c_sigma, n_q: nq, fd_step, seed, extraction: extraction.config(Mode::Limit), only };
            let summary = run_suite_criteria(&config, |o| eprintln!("{}", o.line()))?;
            let text = pretty(&summary.to_json());
            if let Some(path) = report {
                write_file(&path, &text)?;
            }
            emit(None, &text)?;
            if !summary.passed {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var("CGLAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

//! The `hpe` command line: `solve` runs an oracle on a generated or loaded
//! problem, `check` validates parameters without iterating.
//!
//! Exit codes: 0 converged (or feasible for `check`), 2 iteration limit or
//! divergence, 3 step inequality or certificate identity violated, 4 invalid
//! configuration, arguments or input files.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{HpeError, Result};
use crate::format::{read_problem, write_problem, write_trace_csv};
use crate::hpe::{parameter_condition, parameter_condition_label, StopReason, Variant};
use crate::oracles::fbf_sigma_bar_window;
use crate::problems::{GeneratorSpec, ProblemInstance, ProblemOperator};
use crate::runner::{self, Analysis, OracleKind, Overrides, Plan};

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_MAX_ITERS: i32 = 2;
pub const EXIT_STEP_VIOLATION: i32 = 3;
pub const EXIT_INVALID: i32 = 4;

/// Environment variable that replaces the generator seed.
pub const SEED_ENV: &str = "HPE_SEED";

#[derive(Parser, Debug)]
#[command(name = "hpe", version, about = "Inertial hybrid proximal-extragradient solver for monotone inclusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the solver and write the trace and summary.
    Solve(RunArgs),
    /// Validate parameters and report step bounds without iterating.
    Check(RunArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// Problem file (TOML).
    #[arg(long, conflicts_with = "generate", value_name = "FILE")]
    problem: Option<PathBuf>,
    /// Generator spec, e.g. `quadratic,n=10,cond=100,seed=7`.
    #[arg(long, value_name = "NAME,KEY=VAL,...")]
    generate: Option<String>,
    /// Certificate oracle: ipp, fb or fbf.
    #[arg(long, default_value = "ipp")]
    oracle: OracleKind,
    /// Inertial weight.
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Relative-error tolerance of the step test.
    #[arg(long, allow_negative_numbers = true)]
    sigma: Option<f64>,
    /// Constant step size.
    #[arg(long, allow_negative_numbers = true)]
    c: Option<f64>,
    /// standard or relaxed.
    #[arg(long)]
    variant: Option<Variant>,
    /// Iteration limit [default: 50000].
    #[arg(long)]
    max_iters: Option<usize>,
    /// Stop once the inclusion residual falls below this [default: 1e-10].
    #[arg(long)]
    tol: Option<f64>,
    /// Trace CSV output path.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
    /// Summary JSON output path.
    #[arg(long, value_name = "FILE")]
    summary: Option<PathBuf>,
    /// Abort with exit 3 when a certificate fails the step test [default: on].
    #[arg(long, value_enum)]
    enforce_step_inequality: Option<Switch>,
    /// Also save the loaded or generated problem as TOML.
    #[arg(long, value_name = "FILE")]
    save_problem: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            alpha: self.alpha,
            sigma: self.sigma,
            c: self.c,
            variant: self.variant,
            max_iters: self.max_iters,
            tol: self.tol,
            enforce_step_inequality: self.enforce_step_inequality.map(|s| s == Switch::On),
        }
    }

    fn has_problem(&self) -> bool {
        self.problem.is_some() || self.generate.is_some()
    }

    fn load(&self, env_seed: Option<&str>) -> Result<(ProblemInstance, String)> {
        match (&self.problem, &self.generate) {
            (Some(path), _) => Ok((read_problem(path)?, path.display().to_string())),
            (None, Some(spec)) => {
                let mut spec: GeneratorSpec = spec.parse()?;
                if let Some(seed) = env_seed {
                    spec.seed = seed.trim().parse().map_err(|_| {
                        HpeError::Parse(format!("{SEED_ENV} must be an unsigned integer, got '{seed}'"))
                    })?;
                }
                Ok((spec.generate()?, spec.to_string()))
            }
            (None, None) => Err(HpeError::InvalidArgument("give --problem FILE or --generate SPEC".into())),
        }
    }
}

/// Exit code for a failed run.
pub fn exit_code_for(err: &HpeError) -> i32 {
    match err {
        HpeError::StepViolation { .. } | HpeError::IdentityViolation { .. } => EXIT_STEP_VIOLATION,
        HpeError::NonFinite { .. } => EXIT_MAX_ITERS,
        _ => EXIT_INVALID,
    }
}

pub fn exit_code_for_stop(reason: StopReason) -> i32 {
    match reason {
        StopReason::Converged => EXIT_CONVERGED,
        StopReason::MaxIterations => EXIT_MAX_ITERS,
    }
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub problem: String,
    pub source: String,
    pub dimension: usize,
    pub seed: Option<u64>,
    pub oracle: OracleKind,
    pub variant: Option<&'static str>,
    pub alpha: Option<f64>,
    pub sigma: Option<f64>,
    pub c: Option<f64>,
    /// `None` when the oracle has no finite step bound.
    pub c_max: Option<f64>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub exit_code: i32,
    pub stop_reason: Option<&'static str>,
    pub iterations: usize,
    pub error: Option<String>,
    pub final_v_norm: Option<f64>,
    pub final_eps: Option<f64>,
    pub mu_violations: Option<usize>,
    pub analysis: Option<Analysis>,
}

impl Summary {
    fn new(problem: &ProblemInstance, source: &str, oracle: OracleKind) -> Self {
        Summary {
            problem: problem.metadata.name.clone(),
            source: source.to_string(),
            dimension: problem.metadata.dimension,
            seed: problem.metadata.seed,
            oracle,
            variant: None,
            alpha: None,
            sigma: None,
            c: None,
            c_max: None,
            max_iters: None,
            tol: None,
            exit_code: EXIT_INVALID,
            stop_reason: None,
            iterations: 0,
            error: None,
            final_v_norm: None,
            final_eps: None,
            mu_violations: None,
            analysis: None,
        }
    }

    fn record_plan(&mut self, plan: &Plan) {
        let cfg = &plan.config;
        self.variant = Some(cfg.variant.as_str());
        self.alpha = Some(cfg.alpha);
        self.sigma = Some(cfg.sigma);
        self.c = Some(cfg.c_lower);
        self.c_max = plan.c_max.is_finite().then_some(plan.c_max);
        self.max_iters = Some(cfg.max_iters);
        self.tol = Some(cfg.residual_tol);
    }
}

fn write_json(path: &PathBuf, summary: &Summary) -> Result<()> {
    let text = serde_json::to_string_pretty(summary).map_err(|e| HpeError::Parse(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn cmd_solve(args: &RunArgs, env_seed: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (problem, source) = match args.load(env_seed) {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INVALID;
        }
    };
    if let Some(path) = &args.save_problem {
        if let Err(e) = write_problem(path, &problem) {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INVALID;
        }
    }
    let mut summary = Summary::new(&problem, &source, args.oracle);
    let code = solve_into(&problem, args, &mut summary, out);
    summary.exit_code = code;
    if let Some(msg) = &summary.error {
        let _ = writeln!(err, "error: {msg}");
    }
    if let Some(path) = &args.summary {
        if let Err(e) = write_json(path, &summary) {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INVALID;
        }
    }
    code
}

fn solve_into(problem: &ProblemInstance, args: &RunArgs, summary: &mut Summary, out: &mut dyn Write) -> i32 {
    let plan = match runner::plan(&problem.operator, args.oracle, &args.overrides()) {
        Ok(p) => p,
        Err(e) => {
            summary.error = Some(e.to_string());
            return exit_code_for(&e);
        }
    };
    summary.record_plan(&plan);
    let result = runner::build_oracle(&problem.operator, &plan).and_then(|oracle| {
        let init = crate::hpe::InitialPoints::from_start(problem.start.clone());
        crate::hpe::run(oracle.as_ref(), &plan.config, init, problem.known_solution.as_ref())
    });
    let result = match result {
        Ok(r) => r,
        Err(e) => {
            summary.error = Some(e.to_string());
            return exit_code_for(&e);
        }
    };
    if let Some(path) = &args.trace {
        let written =
            File::create(path).map_err(HpeError::from).and_then(|f| write_trace_csv(BufWriter::new(f), &result.trace));
        if let Err(e) = written {
            summary.error = Some(format!("writing trace: {e}"));
            return EXIT_INVALID;
        }
    }
    summary.stop_reason = Some(result.stop_reason.as_str());
    summary.iterations = result.iterations;
    if let Some(last) = result.trace.last() {
        summary.final_v_norm = Some(last.v_sq.sqrt());
        summary.final_eps = Some(last.eps);
    }
    match runner::analyze(problem, &plan, &result) {
        Ok(a) => {
            summary.mu_violations = a.mu.as_ref().map(|m| m.violations.len());
            let _ = writeln!(
                out,
                "{} after {} iterations; inclusion residual {:.3e}",
                result.stop_reason.as_str(),
                result.iterations,
                a.final_residual
            );
            if let Some(d) = a.distance_to_known {
                let _ = writeln!(out, "distance to known solution {d:.3e}");
            }
            summary.analysis = Some(a);
        }
        Err(e) => {
            summary.error = Some(e.to_string());
            return EXIT_INVALID;
        }
    }
    exit_code_for_stop(result.stop_reason)
}

fn cmd_check(args: &RunArgs, env_seed: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let ov = args.overrides();
    let variant = ov.variant.unwrap_or(Variant::Standard);
    let alpha = ov.alpha.unwrap_or(match args.oracle {
        OracleKind::Ipp => runner::IPP_DEFAULT_ALPHA,
        OracleKind::Fb => runner::FB_DEFAULT_ALPHA,
        OracleKind::Fbf => runner::FBF_DEFAULT_ALPHA,
    });
    let mut feasible = true;

    let window = fbf_sigma_bar_window(alpha);
    let sigma = ov.sigma.unwrap_or(match (args.oracle, &window) {
        (OracleKind::Ipp, _) => runner::IPP_DEFAULT_SIGMA,
        (OracleKind::Fb, _) => runner::FB_DEFAULT_SIGMA,
        (OracleKind::Fbf, Ok((lo, hi))) => crate::oracles::fbf_induced_sigma(alpha, 0.5 * (lo + hi)),
        (OracleKind::Fbf, Err(_)) => 0.0,
    });

    let value = parameter_condition(alpha, sigma, variant);
    let ok = alpha >= 0.0 && sigma >= 0.0 && value < 1.0;
    feasible &= ok;
    let _ = writeln!(out, "variant: {}", variant.as_str());
    let _ = writeln!(out, "alpha = {alpha}, sigma = {sigma}");
    let _ = writeln!(
        out,
        "{} = {value} {} 1 ({})",
        parameter_condition_label(variant).trim_end_matches(" < 1"),
        if value < 1.0 { "<" } else { ">=" },
        if ok { "feasible" } else { "infeasible" }
    );

    match &window {
        Ok((lo, hi)) => {
            let mid = 0.5 * (lo + hi);
            let _ = writeln!(
                out,
                "fbf sigma_bar window: ({lo}, {hi}); midpoint {mid} induces sigma = {}",
                crate::oracles::fbf_induced_sigma(alpha, mid)
            );
        }
        Err(e) => {
            let _ = writeln!(out, "fbf sigma_bar window: empty ({e})");
            if args.oracle == OracleKind::Fbf {
                feasible = false;
            }
        }
    }
    if args.oracle == OracleKind::Fbf && variant == Variant::Relaxed {
        let _ = writeln!(out, "fbf supports the standard variant only");
        feasible = false;
    }

    if args.has_problem() {
        match args.load(env_seed) {
            Ok((problem, source)) => {
                let _ = writeln!(
                    out,
                    "problem: {} ({source}), dimension {}",
                    problem.metadata.name, problem.metadata.dimension
                );
                report_step_bounds(&problem, sigma, alpha, out);
                if feasible {
                    match runner::plan(&problem.operator, args.oracle, &ov) {
                        Ok(plan) => {
                            let _ = writeln!(out, "{} step c = {}", plan.oracle, plan.config.c_lower);
                        }
                        Err(e) => {
                            let _ = writeln!(out, "{} configuration rejected: {e}", args.oracle);
                            feasible = false;
                        }
                    }
                }
            }
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return EXIT_INVALID;
            }
        }
    }

    let _ = writeln!(out, "{}", if feasible { "feasible" } else { "infeasible" });
    if feasible {
        EXIT_CONVERGED
    } else {
        EXIT_INVALID
    }
}

fn report_step_bounds(problem: &ProblemInstance, sigma: f64, alpha: f64, out: &mut dyn Write) {
    let a = match &problem.operator {
        ProblemOperator::Split { a, .. } => Some(a),
        ProblemOperator::Single(t) if t.is_single_valued() => Some(t),
        ProblemOperator::Single(_) => None,
    };
    let _ = writeln!(out, "ipp max step: unbounded");
    match a.and_then(|a| a.gamma()) {
        Some(g) => {
            let _ = writeln!(out, "fb max step 2*gamma*sigma^2 = {}", 2.0 * g * sigma * sigma);
        }
        None => {
            let _ = writeln!(out, "fb max step: n/a (no declared gamma)");
        }
    }
    match a.and_then(|a| a.beta()) {
        Some(beta) => match crate::oracles::derive_fbf_params(alpha, beta, None) {
            Ok(p) => {
                let _ = writeln!(out, "fbf max step sigma/beta = {}", p.c_max);
            }
            Err(e) => {
                let _ = writeln!(out, "fbf max step: n/a ({e})");
            }
        },
        None => {
            let _ = writeln!(out, "fbf max step: n/a (no declared beta)");
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, env_seed: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_CONVERGED };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{rendered}") } else { write!(out, "{rendered}") };
            return code;
        }
    };
    match &cli.command {
        Command::Solve(a) => cmd_solve(a, env_seed, out, err),
        Command::Check(a) => cmd_check(a, env_seed, out, err),
    }
}

/// Entry point for the binary: reads `std::env`, writes to the real streams.
pub fn main_from_env() -> i32 {
    let seed = std::env::var(SEED_ENV).ok();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), seed.as_deref(), &mut stdout.lock(), &mut stderr.lock())
}

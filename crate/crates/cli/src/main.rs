use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use weakprox::algorithm::{self, StepRule};
use weakprox::envelope::{self, ProxQuery};
use weakprox::fixedpoint::{self, SigmaPolicy};
use weakprox::problems;
use weakprox::CheckReport;
use weakprox_cli::acceptance::{self, SuiteOptions, DEFAULT_SEED};
use weakprox_cli::bench;
use weakprox_cli::config::{load_config, ExperimentConfig, SequenceSource};
use weakprox_cli::output::{self, RunSummary};
use weakprox_cli::OUT_DIR_ENV;

#[derive(Parser)]
#[command(
    name = "weakprox",
    version,
    about = "Inexact proximal point method for weakly convex functions"
)]
struct Cli {
    /// Directory for output files when no explicit path is given.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "weakprox-out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the proximal point method and write the iteration trace as CSV.
    Run(RunArgs),
    /// Evaluate P_λf(x), e_λf(x) and ∇e_λf(x).
    Prox(ProxArgs),
    /// Solve one inner fixed-point problem.
    Inner(InnerArgs),
    /// Sweep ε against the subgradient baseline.
    Bench(BenchArgs),
    /// Run a named checker and print its report.
    Check(CheckArgs),
    /// Run the acceptance suite.
    Accept(AcceptArgs),
}

#[derive(Args, Clone)]
struct ExperimentArgs {
    /// JSON configuration; the flags below override individual fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    /// Comma-separated coordinates.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    /// Constant value or a file of values, one per step.
    #[arg(long)]
    gamma: Option<String>,
    /// Constant value or a file of values, one per step.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    lambda_bar: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x_bar: Option<Vec<f64>>,
    #[arg(long)]
    delta: Option<f64>,
    /// Explicit relaxation σ (default 1/L²).
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    inner_tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ExperimentArgs {
    fn build(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => load_config(path)?,
            None => {
                let missing = |what: &str| anyhow::anyhow!("--{what} is required without --config");
                ExperimentConfig {
                    problem: self.problem.clone().ok_or_else(|| missing("problem"))?,
                    dimension: None,
                    x0: self.x0.clone().ok_or_else(|| missing("x0"))?,
                    gamma: SequenceSource::from_arg(
                        self.gamma.as_deref().ok_or_else(|| missing("gamma"))?,
                    ),
                    lambda: SequenceSource::from_arg(
                        self.lambda.as_deref().ok_or_else(|| missing("lambda"))?,
                    ),
                    lambda_bar: self.lambda_bar.ok_or_else(|| missing("lambda-bar"))?,
                    x_bar: None,
                    delta: self.delta.ok_or_else(|| missing("delta"))?,
                    sigma: None,
                    eps: self.eps.ok_or_else(|| missing("eps"))?,
                    max_iter: 1000,
                    inner_tol: algorithm::DEFAULT_INNER_TOL,
                    seed: 0,
                    out: None,
                    base_dir: None,
                }
            }
        };
        if self.config.is_some() {
            if let Some(v) = &self.problem {
                c.problem = v.clone();
            }
            if let Some(v) = &self.x0 {
                c.x0 = v.clone();
            }
            if let Some(v) = &self.gamma {
                c.gamma = SequenceSource::from_arg(v);
            }
            if let Some(v) = &self.lambda {
                c.lambda = SequenceSource::from_arg(v);
            }
            if let Some(v) = self.lambda_bar {
                c.lambda_bar = v;
            }
            if let Some(v) = self.delta {
                c.delta = v;
            }
            if let Some(v) = self.eps {
                c.eps = v;
            }
        }
        if let Some(v) = &self.x_bar {
            c.x_bar = Some(v.clone());
        }
        if let Some(v) = self.sigma {
            c.sigma = Some(v);
        }
        if let Some(v) = self.max_iter {
            c.max_iter = v;
        }
        if let Some(v) = self.inner_tol {
            c.inner_tol = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        Ok(c)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Trace CSV path (default: <out-dir>/run_<problem>.csv).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProxArgs {
    #[arg(long)]
    problem: String,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Vec<f64>,
    #[arg(long)]
    lambda: f64,
    /// Radius of the ball searched for the minimizer.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Also evaluate the grid oracle at this pitch.
    #[arg(long)]
    grid_step: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct InnerArgs {
    #[arg(long)]
    problem: String,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Vec<f64>,
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x_bar: Option<Vec<f64>>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Verify the recovered point against the grid oracle at this pitch.
    #[arg(long)]
    grid_step: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[arg(long, value_delimiter = ',', default_value = "1e-1,1e-2,1e-3")]
    eps_list: Vec<f64>,
    /// Baseline step rule.
    #[arg(long, value_enum, default_value_t = RuleKind::Diminishing)]
    rule: RuleKind,
    /// Baseline step constant c.
    #[arg(long, default_value_t = 0.1)]
    rule_c: f64,
    #[arg(long, default_value_t = bench::DEFAULT_BASELINE_STEPS)]
    baseline_steps: usize,
    /// Table CSV path (default: <out-dir>/bench_<problem>.csv).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleKind {
    Constant,
    Diminishing,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckName {
    WeakConvexity,
    LowerEstimator,
    DcConvexity,
    ProxLipschitz,
    Contraction,
    EnvelopeConvexity,
    Fejer,
    Summability,
    Schedule,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(value_enum)]
    name: CheckName,
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
}

#[derive(Args)]
struct AcceptArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Report path (default: <out-dir>/acceptance.json).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Misdeclare the modulus of one zoo instance (exercises the failure path).
    #[arg(long, hide = true)]
    corrupt_rho: bool,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn cmd_run(args: &RunArgs, out_dir: &Path) -> Result<ExitCode> {
    let config = args.experiment.build()?;
    let exp = config.resolve()?;
    let report = exp.run()?;
    let path = args
        .out
        .clone()
        .or(config.out.clone())
        .unwrap_or_else(|| out_dir.join(format!("run_{}.csv", config.problem)));
    let mut w = create(&path)?;
    output::write_trace(&report, &mut w)?;
    w.flush()?;
    print_json(&RunSummary::from(&report))?;
    if let Some(msg) = &report.failure {
        eprintln!("run stopped early: {msg}");
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ProxOutput {
    prox: envelope::ProxResult,
    grid: Option<envelope::ProxResult>,
}

fn cmd_prox(args: &ProxArgs) -> Result<ExitCode> {
    let (p, _) = problems::by_id(&args.problem, args.x.len())?;
    let q = ProxQuery::new(&p, args.lambda, &args.x, args.radius);
    let prox = envelope::prox(&q, args.tol)?;
    let grid = args
        .grid_step
        .map(|step| envelope::prox_grid_oracle(&q, step))
        .transpose()?;
    print_json(&ProxOutput { prox, grid })?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct InnerOutput {
    constants: fixedpoint::ContractionConstants,
    result: fixedpoint::InnerSolveResult,
    verification: Option<CheckReport>,
}

fn cmd_inner(args: &InnerArgs) -> Result<ExitCode> {
    let (p, xs) = problems::by_id(&args.problem, args.x.len())?;
    let policy = args
        .sigma
        .map_or(SigmaPolicy::InverseLipschitzSquared, SigmaPolicy::Explicit);
    let cc = fixedpoint::derive_constants(args.gamma, args.lambda, p.rho(), args.delta, policy)?;
    let x_bar = args.x_bar.clone().unwrap_or(xs.x_bar);
    let result = fixedpoint::solve_fixed_point(&args.x, &cc, &p, &x_bar, args.tol, args.max_iter)?;
    let verification = args
        .grid_step
        .map(|step| fixedpoint::verify_prox_identity(&result, &p, &cc, args.tol, step))
        .transpose()?;
    let failed = verification.as_ref().is_some_and(|v| !v.passed);
    print_json(&InnerOutput {
        constants: cc,
        result,
        verification,
    })?;
    Ok(if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_bench(args: &BenchArgs, out_dir: &Path) -> Result<ExitCode> {
    let config = args.experiment.build()?;
    let exp = config.resolve()?;
    let rule = match args.rule {
        RuleKind::Constant => StepRule::Constant(args.rule_c),
        RuleKind::Diminishing => StepRule::Diminishing(args.rule_c),
    };
    let rows = bench::bench(&exp, &args.eps_list, rule, args.baseline_steps)?;
    let path = args
        .out
        .clone()
        .unwrap_or_else(|| out_dir.join(format!("bench_{}.csv", config.problem)));
    let mut w = create(&path)?;
    bench::write_bench(&rows, &mut w)?;
    w.flush()?;
    bench::write_bench(&rows, io::stdout().lock())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(args: &CheckArgs) -> Result<ExitCode> {
    let config = args.experiment.build()?;
    let seed = config.seed;
    let n = args.samples;
    let report = match args.name {
        CheckName::Schedule => {
            let (p, _) = problems::by_id(&config.problem, config.x0.len())?;
            let schedule = algorithm::Schedule {
                gamma: seq(&config.gamma)?,
                lambda: seq(&config.lambda)?,
                lambda_bar: config.lambda_bar,
                rho: p.rho(),
            };
            algorithm::validate_schedule(&schedule, config.max_iter)
        }
        _ => {
            let exp = config.resolve()?;
            let p = &exp.problem;
            let (gamma, lambda) = exp.schedule.at(0)?;
            let loc = &exp.locality;
            match args.name {
                CheckName::WeakConvexity => problems::check_weak_convexity(p, n, seed)?,
                CheckName::LowerEstimator => problems::check_quadratic_lower_estimator(p, n, seed)?,
                CheckName::DcConvexity => problems::dc_decomposition(p).check_convexity(n, seed)?,
                CheckName::ProxLipschitz => {
                    envelope::check_prox_lipschitz(p, gamma, &loc.x_bar, loc.delta, n, seed, 1e-12)?
                }
                CheckName::Contraction => {
                    let cc = fixedpoint::derive_constants(
                        gamma,
                        lambda,
                        p.rho(),
                        loc.delta,
                        exp.options.sigma_policy,
                    )?;
                    fixedpoint::check_contraction(p, &cc, &loc.x_bar, &exp.x0, n, seed, 1e-12)?
                }
                CheckName::EnvelopeConvexity => algorithm::check_envelope_convexity(
                    p, gamma, &loc.x_bar, loc.delta, n, seed, 1e-12,
                )?,
                CheckName::Fejer => algorithm::check_fejer(&exp.run()?, p, loc, n, seed),
                CheckName::Summability => algorithm::check_summability(&exp.run()?),
                CheckName::Schedule => unreachable!(),
            }
        }
    };
    print_json(&report)?;
    Ok(if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn seq(s: &SequenceSource) -> Result<algorithm::StepSequence> {
    Ok(match s {
        SequenceSource::Constant(v) => algorithm::StepSequence::Constant(*v),
        SequenceSource::List(v) => algorithm::StepSequence::Explicit(v.clone()),
        SequenceSource::File(p) => {
            algorithm::StepSequence::Explicit(weakprox_cli::config::read_sequence(p)?)
        }
    })
}

fn cmd_accept(args: &AcceptArgs, out_dir: &Path) -> Result<ExitCode> {
    let report = acceptance::run_suite(SuiteOptions {
        seed: args.seed,
        corrupt_rho: args.corrupt_rho,
    });
    for c in &report.criteria {
        println!("{}", c.summary_line());
    }
    let path = args
        .out
        .clone()
        .unwrap_or_else(|| out_dir.join("acceptance.json"));
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    writeln!(w)?;
    w.flush()?;
    let over_budget: Vec<_> = report
        .criteria
        .iter()
        .filter(|c| !c.within_budget())
        .map(|c| c.id.as_str())
        .collect();
    if !over_budget.is_empty() {
        eprintln!("over runtime budget: {}", over_budget.join(", "));
    }
    if !report.passed {
        bail!("acceptance suite failed (report: {})", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(a) => cmd_run(a, &cli.out_dir),
        Command::Prox(a) => cmd_prox(a),
        Command::Inner(a) => cmd_inner(a),
        Command::Bench(a) => cmd_bench(a, &cli.out_dir),
        Command::Check(a) => cmd_check(a),
        Command::Accept(a) => cmd_accept(a, &cli.out_dir),
    }
}

//! Acceptance suite: one entry per criterion, each with a runtime budget.
//!
//! The JSON report contains outcomes only (no timings), so two runs with the
//! same seed serialize to identical bytes.

use std::time::{Duration, Instant};

use serde::Serialize;
use weakprox::algorithm::{
    self, check_envelope_convexity, check_fejer, check_summability, pair_argmin, pair_bound,
    LocalityConfig, RunOptions, Schedule, Termination, DESCENT_SLACK,
};
use weakprox::envelope::{self, ProxQuery};
use weakprox::fixedpoint::{self, SigmaPolicy};
use weakprox::problems::{self, Problem, Region, StationaryPoint};
use weakprox::{child_rng, CheckReport};

use crate::bench::{self, DEFAULT_BASELINE_RULE, DEFAULT_BASELINE_STEPS};
use crate::config::{Experiment, ExperimentConfig, SequenceSource};
use crate::HarnessError;

pub const DEFAULT_SEED: u64 = 20240229;

/// `(id, title, budget in seconds)`
pub const CRITERIA: [(&str, &str, f64); 11] = [
    (
        "Z0",
        "zoo certification (weak convexity, lower estimator, DC split)",
        2.0,
    ),
    ("C1", "example1 prox and envelope fixture", 0.1),
    ("C2", "envelope gradient vs central differences", 1.0),
    ("C3", "contraction of the relaxed map", 2.0),
    ("C4", "inner solver closed form and prox identity", 1.0),
    ("C5", "per-iteration descent, Fejér and summability", 5.0),
    ("C6", "iteration count under the complexity bound", 10.0),
    ("C7", "convergence to the certified minimizer", 5.0),
    ("C8", "numerical prox vs grid oracle", 30.0),
    ("C9", "pair-argmin helper vs brute force", 2.0),
    ("C10", "negative controls", 1.0),
];

#[derive(Debug, Clone, Copy, Default)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Misdeclares the modulus of example1 (test hook for Z0).
    pub corrupt_rho: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: String,
    pub title: String,
    pub passed: bool,
    pub detail: String,
    pub budget_secs: f64,
    pub checks: Vec<CheckReport>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl CriterionResult {
    pub fn within_budget(&self) -> bool {
        self.elapsed.as_secs_f64() < self.budget_secs
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{} {:<4} {} ({:.3}s / {}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.elapsed.as_secs_f64(),
            self.budget_secs,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub corrupt_rho: bool,
    pub passed: bool,
    pub criteria: Vec<CriterionResult>,
}

struct Outcome {
    passed: bool,
    detail: String,
    checks: Vec<CheckReport>,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
            checks: Vec::new(),
        }
    }

    fn with_checks(mut self, checks: Vec<CheckReport>) -> Self {
        self.passed &= checks.iter().all(|c| c.passed);
        self.checks = checks;
        self
    }
}

pub fn run_suite(opts: SuiteOptions) -> SuiteReport {
    let criteria: Vec<_> = CRITERIA
        .iter()
        .map(|(id, _, _)| run_criterion(id, opts).expect("listed criterion"))
        .collect();
    SuiteReport {
        seed: opts.seed,
        corrupt_rho: opts.corrupt_rho,
        passed: criteria.iter().all(|c| c.passed),
        criteria,
    }
}

/// Runs a single criterion; `None` for an unknown id.
pub fn run_criterion(id: &str, opts: SuiteOptions) -> Option<CriterionResult> {
    let (id, title, budget) = CRITERIA.iter().find(|c| c.0 == id)?;
    let start = Instant::now();
    let outcome = match *id {
        "Z0" => zoo_certification(opts),
        "C1" => example1_fixture(),
        "C2" => gradient_check(opts.seed),
        "C3" => contraction(opts.seed),
        "C4" => inner_exactness(),
        "C5" => per_iteration(opts.seed),
        "C6" => complexity(),
        "C7" => convergence(),
        "C8" => oracle_equivalence(opts.seed),
        "C9" => pair_helper(opts.seed),
        "C10" => negative_controls(opts.seed),
        _ => unreachable!(),
    };
    let elapsed = start.elapsed();
    let outcome = outcome.unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
    Some(CriterionResult {
        id: id.to_string(),
        title: title.to_string(),
        passed: outcome.passed,
        detail: outcome.detail,
        budget_secs: *budget,
        checks: outcome.checks,
        elapsed,
    })
}

type Criterion = Result<Outcome, HarnessError>;

fn zoo(corrupt_rho: bool) -> Vec<(Problem, StationaryPoint)> {
    let (e1, s1) = problems::make_example1();
    let e1 = if corrupt_rho { e1.with_rho(0.5) } else { e1 };
    vec![
        (e1, s1),
        problems::make_quadratic(&[0.0, 0.0]),
        problems::make_abs_quadratic(),
    ]
}

fn zoo_certification(opts: SuiteOptions) -> Criterion {
    let mut checks = Vec::new();
    for (p, _) in zoo(opts.corrupt_rho) {
        for mut c in [
            problems::check_weak_convexity(&p, 2000, opts.seed)?,
            problems::check_quadratic_lower_estimator(&p, 2000, opts.seed)?,
            problems::dc_decomposition(&p).check_convexity(2000, opts.seed)?,
        ] {
            c.name = format!("{}/{}", p.name(), c.name);
            checks.push(c);
        }
    }
    let failed: Vec<_> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.clone())
        .collect();
    let detail = if failed.is_empty() {
        format!("{} checks passed", checks.len())
    } else {
        format!("failed: {}", failed.join(", "))
    };
    Ok(Outcome::new(true, detail).with_checks(checks))
}

fn example1_fixture() -> Criterion {
    let (p, _) = problems::make_example1();
    let lambda = 0.1;
    let mut worst: f64 = 0.0;
    for x in [0.95, 1.05, 1.0 + 0.19] {
        let point = [x];
        let q = ProxQuery::new(&p, lambda, &point, 0.5);
        let expected_e = 1.0 + (x - 1.0) * (x - 1.0) / (2.0 * lambda);
        for r in [
            envelope::prox(&q, 1e-12)?,
            envelope::numerical_prox(&q, 1e-12)?,
        ] {
            worst = worst
                .max((r.y[0] - 1.0).abs())
                .max((r.envelope_value - expected_e).abs());
        }
    }
    Ok(Outcome::new(
        worst <= 1e-8,
        format!("max deviation {worst:.2e} (tol 1e-8)"),
    ))
}

fn gradient_check(seed: u64) -> Criterion {
    let h = 1e-6;
    let cases: [(Problem, f64, Region); 3] = [
        (
            problems::make_example1().0,
            0.2,
            Region::interval(-2.5, 2.5),
        ),
        (
            problems::make_abs_quadratic().0,
            0.2,
            Region::interval(-2.5, 2.5),
        ),
        (
            problems::make_quadratic(&[0.0, 0.0]).0,
            0.5,
            Region::Box {
                lower: vec![-5.0; 2],
                upper: vec![5.0; 2],
            },
        ),
    ];
    let mut worst: f64 = 0.0;
    for (p, lambda, sampling) in &cases {
        let mut rng = child_rng(seed, &format!("gradient_check/{}", p.name()));
        let e = |x: &[f64]| envelope::envelope_value(&ProxQuery::new(p, *lambda, x, 3.0), 1e-13);
        for _ in 0..20 {
            let x = sampling.sample(&mut rng);
            let g = envelope::envelope_gradient(&ProxQuery::new(p, *lambda, &x, 3.0), 1e-13)?;
            let mut err_sq = 0.0;
            for i in 0..x.len() {
                let mut plus = x.clone();
                let mut minus = x.clone();
                plus[i] += h;
                minus[i] -= h;
                let fd = (e(&plus)? - e(&minus)?) / (2.0 * h);
                err_sq += (g[i] - fd) * (g[i] - fd);
            }
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            worst = worst.max(err_sq.sqrt() / norm.max(1.0));
        }
    }
    Ok(Outcome::new(
        worst <= 1e-5,
        format!("max relative error {worst:.2e} over 60 points (tol 1e-5)"),
    ))
}

fn contraction(seed: u64) -> Criterion {
    let (p, xs) = problems::make_example1();
    let cc = fixedpoint::derive_constants(0.1, 0.25, p.rho(), 0.2, SigmaPolicy::default())?;
    let report = fixedpoint::check_contraction(&p, &cc, &xs.x_bar, &[1.05], 1000, seed, 1e-12)?;
    Ok(Outcome::new(true, report.note.clone()).with_checks(vec![report]))
}

fn inner_exactness() -> Criterion {
    let (p, xs) = problems::make_example1();
    let cc = fixedpoint::derive_constants(0.1, 0.25, p.rho(), 0.2, SigmaPolicy::default())?;
    let r = fixedpoint::solve_fixed_point(&[1.05], &cc, &p, &xs.x_bar, 1e-10, None)?;
    let dz = (r.z[0] - 1.02).abs();
    let dy = (r.y[0] - 1.0).abs();
    let identity = fixedpoint::verify_prox_identity(&r, &p, &cc, 1e-10, 1e-6)?;
    Ok(Outcome::new(
        dz <= 1e-8 && dy <= 1e-8,
        format!(
            "z = {:.12}, y = {:.12}, {} inner iterations",
            r.z[0], r.y[0], r.inner_iterations
        ),
    )
    .with_checks(vec![identity]))
}

struct ZooRun {
    problem: Problem,
    stationary: StationaryPoint,
    x0: Vec<f64>,
    schedule: Schedule,
    locality: LocalityConfig,
}

impl ZooRun {
    fn new(
        problem: Problem,
        stationary: StationaryPoint,
        x0: Vec<f64>,
        gamma: f64,
        lambda: f64,
        delta: f64,
    ) -> Result<Self, HarnessError> {
        let schedule = Schedule::constant(gamma, lambda, 1.5 * gamma, problem.rho());
        let locality = LocalityConfig::derive(
            stationary.x_bar.clone(),
            delta,
            &schedule,
            1,
            SigmaPolicy::default(),
        )?;
        Ok(Self {
            problem,
            stationary,
            x0,
            schedule,
            locality,
        })
    }

    fn run(&self, eps: f64) -> Result<algorithm::RunReport, HarnessError> {
        let opts = RunOptions::new(eps, 10_000).with_f_star(self.stationary.min_value);
        Ok(algorithm::run(
            &self.problem,
            &self.x0,
            &self.schedule,
            &self.locality,
            &opts,
        )?)
    }
}

fn example1_run() -> Result<ZooRun, HarnessError> {
    let (p, s) = problems::make_example1();
    ZooRun::new(p, s, vec![1.05], 0.1, 0.25, 0.2)
}

fn abs_quadratic_run() -> Result<ZooRun, HarnessError> {
    let (p, s) = problems::make_abs_quadratic();
    ZooRun::new(p, s, vec![1.15], 0.2, 0.45, 0.4)
}

fn quadratic_run() -> Result<ZooRun, HarnessError> {
    let (p, s) = problems::make_quadratic(&[0.0, 0.0]);
    let mut run = ZooRun::new(p, s, vec![0.0, 0.0], 0.2, 0.45, 1.0)?;
    run.x0 = vec![0.6 * run.locality.beta, -0.5 * run.locality.beta];
    Ok(run)
}

fn per_iteration(seed: u64) -> Criterion {
    let mut checks = Vec::new();
    let mut min_gap = f64::INFINITY;
    let mut steps = 0;
    for zr in [example1_run()?, abs_quadratic_run()?, quadratic_run()?] {
        let report = zr.run(1e-8)?;
        steps += report.records.len();
        for rec in &report.records {
            min_gap = min_gap.min(rec.descent_gap);
        }
        for mut c in [
            check_fejer(&report, &zr.problem, &zr.locality, 20, seed),
            check_summability(&report),
        ] {
            c.name = format!("{}/{}", zr.problem.name(), c.name);
            checks.push(c);
        }
    }
    Ok(Outcome::new(
        min_gap >= -DESCENT_SLACK,
        format!("min descent gap {min_gap:.2e} over {steps} steps"),
    )
    .with_checks(checks))
}

fn bench_experiment(zr: &ZooRun) -> Result<Experiment, HarnessError> {
    let (gamma, lambda) = zr.schedule.at(0)?;
    let config = ExperimentConfig {
        problem: zr.problem.name().to_string(),
        dimension: None,
        x0: zr.x0.clone(),
        gamma: SequenceSource::Constant(gamma),
        lambda: SequenceSource::Constant(lambda),
        lambda_bar: zr.schedule.lambda_bar,
        x_bar: None,
        delta: zr.locality.delta,
        sigma: None,
        eps: 1e-3,
        max_iter: 10_000,
        inner_tol: algorithm::DEFAULT_INNER_TOL,
        seed: 0,
        out: None,
        base_dir: None,
    };
    config.resolve()
}

fn complexity() -> Criterion {
    let mut rows_ok = 0;
    let mut total = 0;
    let mut detail = Vec::new();
    for zr in [example1_run()?, abs_quadratic_run()?] {
        let exp = bench_experiment(&zr)?;
        let rows = bench::bench(
            &exp,
            &[1e-1, 1e-2, 1e-3],
            DEFAULT_BASELINE_RULE,
            DEFAULT_BASELINE_STEPS,
        )?;
        for r in &rows {
            total += 1;
            let ok = r.prox_termination == Termination::StepBelowEps
                && r.bound_t.is_some_and(|b| (r.t_prox as f64) < b);
            rows_ok += ok as usize;
        }
        detail.push(format!(
            "{}: T = {:?}",
            zr.problem.name(),
            rows.iter().map(|r| r.t_prox).collect::<Vec<_>>()
        ));
    }
    Ok(Outcome::new(
        rows_ok == total,
        format!(
            "{rows_ok}/{total} rows under the bound; {}",
            detail.join("; ")
        ),
    ))
}

fn convergence() -> Criterion {
    let mut passed = true;
    let mut detail = Vec::new();
    for zr in [example1_run()?, abs_quadratic_run()?] {
        let r = zr.run(1e-8)?;
        let err = (r.x_final[0] - 1.0).abs();
        passed &= err <= 1e-6 && r.termination == Termination::StepBelowEps;
        detail.push(format!(
            "{}: |x − 1| = {err:.2e}, T = {}",
            zr.problem.name(),
            r.iterations
        ));
    }
    Ok(Outcome::new(passed, detail.join("; ")))
}

fn oracle_equivalence(seed: u64) -> Criterion {
    let (p, _) = problems::make_abs_quadratic();
    let mut rng = child_rng(seed, "oracle_equivalence");
    let xs = Region::interval(-2.5, 2.5);
    let gammas = Region::interval(0.005, 0.445);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let x = xs.sample(&mut rng);
        let gamma = gammas.sample(&mut rng)[0];
        let q = ProxQuery::new(&p, gamma, &x, 1.5);
        let numerical = envelope::numerical_prox(&q, 1e-12)?;
        let grid = envelope::prox_grid_oracle(&q, 1e-5)?;
        worst = worst.max((numerical.y[0] - grid.y[0]).abs());
    }
    Ok(Outcome::new(
        worst <= 1e-5,
        format!("max |Δy| = {worst:.2e} over 50 draws (tol 1e-5)"),
    ))
}

fn pair_helper(seed: u64) -> Criterion {
    let mut rng = child_rng(seed, "pair_argmin");
    let unit = Region::interval(0.0, 1.0);
    let mut draw = || unit.sample(&mut rng)[0];
    let mut premise_cases = 0;
    let mut mismatches = 0;
    let mut failures = 0;
    for _ in 0..1000 {
        let len = 2 + (draw() * 19.0).floor().min(18.0) as usize;
        let tau = if draw() < 0.5 { 1.0 } else { 2.0 };
        let z: Vec<f64> = (0..len).map(|_| 2.0 * draw()).collect();
        let total: f64 = z.iter().map(|v| v.powf(tau)).sum();
        let bound_lambda = total * (0.5 + draw());

        let mut best = (f64::INFINITY, 0);
        for j in 0..len - 1 {
            let s = z[j].powf(tau) + z[j + 1].powf(tau);
            if s < best.0 {
                best = (s, j + 1);
            }
        }
        if pair_argmin(&z, tau) != Some(best.1) {
            mismatches += 1;
        }
        let report = pair_bound(&z, bound_lambda, tau)?;
        if report.premise_met {
            premise_cases += 1;
        }
        if !report.passed || report.premise_met != (total <= bound_lambda) {
            failures += 1;
        }
    }
    Ok(Outcome::new(
        mismatches == 0 && failures == 0,
        format!(
            "{mismatches} argmin mismatches, {failures} bound failures, premise held in {premise_cases}/1000"
        ),
    ))
}

fn negative_controls(seed: u64) -> Criterion {
    let mut rejected = Vec::new();
    let s1 = algorithm::validate_schedule(&Schedule::constant(0.25, 0.45, 0.3, 2.0), 1);
    rejected.push(("γ = 0.25, λ = 0.45, ρ = 2", !s1.passed));
    let s2 = algorithm::validate_schedule(&Schedule::constant(0.2, 0.6, 0.3, 2.0), 1);
    rejected.push(("λ = 0.6, ρ = 2", !s2.passed));
    let sigma = fixedpoint::derive_constants(0.25, 0.6, 1.0, 1.0, SigmaPolicy::Explicit(0.2));
    rejected.push(("σ = 0.2 at L = 64/15", sigma.is_err()));
    let (p, xs) = problems::make_example1();
    let local = check_envelope_convexity(&p, 0.1, &xs.x_bar, 0.2, 200, seed, 1e-12)?;
    let wide = check_envelope_convexity(&p, 0.1, &xs.x_bar, 2.0, 200, seed, 1e-12)?;
    rejected.push(("envelope convexity on B[1, 2]", !wide.passed));
    let missed: Vec<_> = rejected.iter().filter(|r| !r.1).map(|r| r.0).collect();
    let mut outcome = Outcome::new(
        missed.is_empty() && local.passed,
        if missed.is_empty() {
            format!(
                "all {} controls rejected; B[1, 0.2] accepted",
                rejected.len()
            )
        } else {
            format!("not rejected: {}", missed.join(", "))
        },
    );
    outcome.checks = vec![local, wide];
    Ok(outcome)
}

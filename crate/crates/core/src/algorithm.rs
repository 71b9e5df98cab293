//! Outer proximal point driver and its instrumentation.
//!
//! Each outer step solves the implicit equation
//! `zᵏ = xᵏ − (λₖ − γₖ)∇e_{γₖ}f(zᵏ)` with the contraction solver and sets
//! `xᵏ⁺¹ = zᵏ − γₖ(λₖ − γₖ)⁻¹(xᵏ − zᵏ)`, which equals `P_{λₖ}f(xᵏ)`. Every
//! step is recorded with the quantities needed to audit the descent bound
//!
//! ```text
//! ‖xᵏ − xᵏ⁺¹‖²/(2λₖ) ≤ f(xᵏ) − f(xᵏ⁺¹)
//! ```
//!
//! and the Fejér-type inequality
//! `‖xᵏ⁺¹ − x‖² ≤ ‖xᵏ − x‖² + 2λₖ(f(x) − f(xᵏ⁺¹))` for `x ∈ B[x̄, β]`.
//! The run stops once `‖xᵏ⁺¹ − xᵏ‖ ≤ ε`, which happens after fewer than
//! `2 + (2/ρ)(f(x⁰) − f*)ε⁻²` steps.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envelope::{self, ProxQuery};
use crate::fixedpoint::{self, ContractionConstants, SigmaPolicy};
use crate::linalg;
use crate::problems::Problem;
use crate::report::{child_rng, sample_ball, CheckReport};
use crate::{Error, Result};

pub const DEFAULT_INNER_TOL: f64 = 1e-10;

/// Slack on the recorded descent gap.
pub const DESCENT_SLACK: f64 = 1e-8;

/// Slack on the Fejér inequality, scaled by `1 + ‖x‖²`.
pub const FEJER_SLACK: f64 = 1e-8;

/// Slack on the summability bound.
pub const SUMMABILITY_SLACK: f64 = 1e-8;

/// Slack allowed on `xᵏ ∈ B[x̄, β]`.
pub const CONFINEMENT_SLACK: f64 = 1e-6;

/// Constant or explicitly listed step parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepSequence {
    Constant(f64),
    Explicit(Vec<f64>),
}

impl StepSequence {
    /// Value at step `k`, or `None` past the end of an explicit list.
    pub fn at(&self, k: usize) -> Option<f64> {
        match self {
            StepSequence::Constant(v) => Some(*v),
            StepSequence::Explicit(v) => v.get(k).copied(),
        }
    }
}

/// Step parameters `{γₖ}`, `{λₖ}` with floor `λ̄`, for modulus `ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub gamma: StepSequence,
    pub lambda: StepSequence,
    pub lambda_bar: f64,
    pub rho: f64,
}

impl Schedule {
    pub fn constant(gamma: f64, lambda: f64, lambda_bar: f64, rho: f64) -> Self {
        Self {
            gamma: StepSequence::Constant(gamma),
            lambda: StepSequence::Constant(lambda),
            lambda_bar,
            rho,
        }
    }

    pub fn at(&self, k: usize) -> Result<(f64, f64)> {
        match (self.gamma.at(k), self.lambda.at(k)) {
            (Some(g), Some(l)) => Ok((g, l)),
            _ => Err(Error::Configuration(format!(
                "step sequences are shorter than the horizon (no entry for k = {k})"
            ))),
        }
    }

    /// Error for the first `k < horizon` violating `0 < λ̄ < 2γₖ < λₖ < 1/ρ`.
    pub fn check(&self, horizon: usize) -> Result<()> {
        let report = validate_schedule(self, horizon);
        if report.passed {
            return Ok(());
        }
        if report.note.starts_with("missing") {
            return Err(Error::Configuration(report.note));
        }
        let k = report.witness.first().copied().unwrap_or(0.0) as usize;
        let inequality = INEQUALITIES[report.witness.get(1).copied().unwrap_or(0.0) as usize];
        Err(Error::Schedule {
            k,
            inequality,
            detail: report.note,
        })
    }
}

const INEQUALITIES: [&str; 4] = ["0 < λ̄", "λ̄ < 2γ", "2γ < λ", "λ < 1/ρ"];

/// Checks `0 < λ̄ < 2γₖ < λₖ < 1/ρ` for `k < horizon` (at least `k = 0`).
///
/// Violations are `lhs − rhs` of the strict inequalities; equality is
/// reported as the smallest positive violation. The witness is
/// `[k, inequality index, lhs, rhs]` for the first violation found.
pub fn validate_schedule(s: &Schedule, horizon: usize) -> CheckReport {
    let mut report = CheckReport {
        name: "schedule".to_string(),
        passed: true,
        worst_violation: f64::NEG_INFINITY,
        slack: 0.0,
        witness: Vec::new(),
        samples_used: 0,
        premise_met: true,
        note: String::new(),
    };
    let inv_rho = if s.rho > 0.0 {
        1.0 / s.rho
    } else {
        f64::INFINITY
    };
    for k in 0..horizon.max(1) {
        let (gamma, lambda) = match s.at(k) {
            Ok(pair) => pair,
            Err(_) => {
                report.passed = false;
                report.worst_violation = f64::MAX;
                report.note = format!("missing step parameters for k = {k}");
                report.witness = alloc::vec![k as f64];
                return report;
            }
        };
        report.samples_used += 1;
        let chain = [
            (0.0, s.lambda_bar),
            (s.lambda_bar, 2.0 * gamma),
            (2.0 * gamma, lambda),
            (lambda, inv_rho),
        ];
        for (i, (lhs, rhs)) in chain.into_iter().enumerate() {
            // λ < 1/ρ is evaluated as λρ < 1 so that ρ = 0 is handled
            let holds = if i == 3 {
                lambda * s.rho < 1.0
            } else {
                lhs < rhs
            };
            let gap = if holds {
                lhs - rhs
            } else {
                (lhs - rhs).max(f64::MIN_POSITIVE)
            };
            let gap = if gap.is_nan() { f64::MAX } else { gap };
            report.worst_violation = report.worst_violation.max(gap);
            if !holds && report.passed {
                report.passed = false;
                report.witness = alloc::vec![k as f64, i as f64, lhs, rhs];
                report.note = format!(
                    "{} fails at k = {k} (lhs = {lhs}, rhs = {rhs})",
                    INEQUALITIES[i]
                );
            }
        }
    }
    report
}

/// Reference point `x̄`, envelope-convexity radius `δ`, and iterate radius `β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityConfig {
    pub x_bar: Vec<f64>,
    pub delta: f64,
    pub beta: f64,
}

impl LocalityConfig {
    pub fn new(x_bar: Vec<f64>, delta: f64, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < delta) {
            return Err(Error::Parameter(format!(
                "0 < β < δ is required (β = {beta}, δ = {delta})"
            )));
        }
        Ok(Self { x_bar, delta, beta })
    }

    /// Takes `β` as the smallest admissible radius over the first `horizon`
    /// steps of the schedule.
    pub fn derive(
        x_bar: Vec<f64>,
        delta: f64,
        schedule: &Schedule,
        horizon: usize,
        policy: SigmaPolicy,
    ) -> Result<Self> {
        schedule.check(horizon)?;
        let mut beta = f64::INFINITY;
        let mut seen = Vec::new();
        for k in 0..horizon.max(1) {
            let pair = schedule.at(k)?;
            if seen.contains(&pair) {
                continue;
            }
            seen.push(pair);
            let cc = fixedpoint::derive_constants(pair.0, pair.1, schedule.rho, delta, policy)?;
            beta = beta.min(cc.beta);
        }
        Self::new(x_bar, delta, beta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub eps: f64,
    pub max_iter: usize,
    pub inner_tol: f64,
    pub inner_max_iter: Option<usize>,
    pub sigma_policy: SigmaPolicy,
    /// Certified value of `f` at the local minimizer, if known.
    pub f_star: Option<f64>,
}

impl RunOptions {
    pub fn new(eps: f64, max_iter: usize) -> Self {
        Self {
            eps,
            max_iter,
            inner_tol: DEFAULT_INNER_TOL,
            inner_max_iter: None,
            sigma_policy: SigmaPolicy::default(),
            f_star: None,
        }
    }

    pub fn with_f_star(mut self, f_star: Option<f64>) -> Self {
        self.f_star = f_star;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub x_k: Vec<f64>,
    pub z_k: Vec<f64>,
    pub x_next: Vec<f64>,
    pub f_x_k: f64,
    pub f_x_next: f64,
    pub step_norm: f64,
    pub inner_iterations: usize,
    pub inner_residual: f64,
    /// `f(xᵏ) − f(xᵏ⁺¹) − ‖xᵏ − xᵏ⁺¹‖²/(2λₖ)`; nonnegative up to inner error.
    pub descent_gap: f64,
    /// Fejér inequality at `x ∈ {xᵏ, xᵏ⁺¹, x̄}`.
    pub fejer_ok: bool,
    pub gamma_k: f64,
    pub lambda_k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    StepBelowEps,
    MaxIter,
    LocalityViolation,
    InnerFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    /// Number of outer steps performed (`records.len()`).
    pub iterations: usize,
    pub x0: Vec<f64>,
    pub f_x0: f64,
    pub x_final: Vec<f64>,
    pub f_final: f64,
    pub eps: f64,
    pub rho: f64,
    /// Certified minimum when supplied, else the smallest recorded value.
    pub f_star_estimate: f64,
    pub f_star_certified: Option<f64>,
    /// False when some iterate has a value below the certified minimum, i.e.
    /// the infimum over `B[x̄, β]` is not attained at the certified point.
    pub f_star_consistent: bool,
    pub sum_sq_steps: f64,
    /// `2 + (2/ρ)(f(x⁰) − f*)ε⁻²`.
    pub complexity_bound: Option<f64>,
    pub failure: Option<String>,
}

fn fejer_holds(x: &[f64], rec: &IterationRecord, f_x: f64) -> bool {
    fejer_violation(x, rec, f_x) <= FEJER_SLACK
}

/// `(‖xᵏ⁺¹ − x‖² − ‖xᵏ − x‖² − 2λₖ(f(x) − f(xᵏ⁺¹)))/(1 + ‖x‖²)`
fn fejer_violation(x: &[f64], rec: &IterationRecord, f_x: f64) -> f64 {
    let lhs = linalg::dist_sq(&rec.x_next, x);
    let rhs = linalg::dist_sq(&rec.x_k, x) + 2.0 * rec.lambda_k * (f_x - rec.f_x_next);
    (lhs - rhs) / (1.0 + linalg::norm_sq(x))
}

struct Trace {
    records: Vec<IterationRecord>,
    x0: Vec<f64>,
    f_x0: f64,
}

impl Trace {
    fn finish(
        self,
        termination: Termination,
        eps: f64,
        rho: f64,
        f_star: Option<f64>,
        failure: Option<String>,
    ) -> RunReport {
        let (x_final, f_final) = match self.records.last() {
            Some(r) => (r.x_next.clone(), r.f_x_next),
            None => (self.x0.clone(), self.f_x0),
        };
        let min_recorded = self
            .records
            .iter()
            .map(|r| r.f_x_next)
            .fold(self.f_x0, f64::min);
        let f_star_estimate = f_star.unwrap_or(min_recorded);
        let f_star_consistent = f_star.is_none_or(|c| min_recorded >= c - 1e-12);
        let sum_sq_steps = self.records.iter().map(|r| r.step_norm * r.step_norm).sum();
        RunReport {
            iterations: self.records.len(),
            records: self.records,
            termination,
            x0: self.x0,
            f_x0: self.f_x0,
            x_final,
            f_final,
            eps,
            rho,
            f_star_estimate,
            f_star_certified: f_star,
            f_star_consistent,
            sum_sq_steps,
            complexity_bound: complexity_bound(rho, self.f_x0, f_star_estimate, eps).ok(),
            failure,
        }
    }
}

/// Runs the proximal point method from `x0 ∈ B[x̄, β]`.
///
/// Inner-solver failures and locality violations end the run with the
/// corresponding [`Termination`] and keep the trace; only violated
/// preconditions are returned as errors.
pub fn run(
    problem: &Problem,
    x0: &[f64],
    schedule: &Schedule,
    locality: &LocalityConfig,
    opts: &RunOptions,
) -> Result<RunReport> {
    if !(opts.eps.is_finite() && opts.eps > 0.0) {
        return Err(Error::Parameter(format!(
            "ε > 0 is required, got {}",
            opts.eps
        )));
    }
    if x0.len() != problem.dimension() || locality.x_bar.len() != problem.dimension() {
        return Err(Error::Parameter(format!(
            "x0 and x̄ must have dimension {}",
            problem.dimension()
        )));
    }
    if schedule.rho < problem.rho() {
        return Err(Error::Parameter(format!(
            "schedule modulus ρ = {} is below the problem's ρ = {}",
            schedule.rho,
            problem.rho()
        )));
    }
    schedule.check(opts.max_iter)?;
    let d0 = linalg::dist(x0, &locality.x_bar);
    if d0 > locality.beta {
        return Err(Error::Precondition(format!(
            "x0 ∈ B[x̄, β] is required: ‖x0 − x̄‖ = {d0:e} > β = {:e}",
            locality.beta
        )));
    }

    let f_bar = problem.value(&locality.x_bar);
    let mut trace = Trace {
        records: Vec::new(),
        x0: x0.to_vec(),
        f_x0: problem.value(x0),
    };
    let mut x = x0.to_vec();
    let mut f_x = trace.f_x0;
    let mut termination = Termination::MaxIter;
    let mut failure = None;

    for k in 0..opts.max_iter {
        let (gamma, lambda) = schedule.at(k)?;
        let cc = fixedpoint::derive_constants(
            gamma,
            lambda,
            schedule.rho,
            locality.delta,
            opts.sigma_policy,
        )?;
        let inner = match fixedpoint::solve_fixed_point(
            &x,
            &cc,
            problem,
            &locality.x_bar,
            opts.inner_tol,
            opts.inner_max_iter,
        ) {
            Ok(inner) => inner,
            Err(e) => {
                termination = match e {
                    Error::LocalityViolation { .. } => Termination::LocalityViolation,
                    _ => Termination::InnerFailure,
                };
                failure = Some(e.to_string());
                break;
            }
        };
        let x_next = inner.y;
        let f_next = problem.value(&x_next);
        let step = linalg::dist(&x, &x_next);
        let mut rec = IterationRecord {
            k,
            x_k: x,
            z_k: inner.z,
            x_next,
            f_x_k: f_x,
            f_x_next: f_next,
            step_norm: step,
            inner_iterations: inner.inner_iterations,
            inner_residual: inner.residual,
            descent_gap: f_x - f_next - step * step / (2.0 * lambda),
            fejer_ok: true,
            gamma_k: gamma,
            lambda_k: lambda,
        };
        rec.fejer_ok = fejer_holds(&rec.x_k, &rec, rec.f_x_k)
            && fejer_holds(&rec.x_next, &rec, rec.f_x_next)
            && fejer_holds(&locality.x_bar, &rec, f_bar);
        x = rec.x_next.clone();
        f_x = f_next;
        trace.records.push(rec);

        let d = linalg::dist(&x, &locality.x_bar);
        if d > locality.beta + CONFINEMENT_SLACK {
            termination = Termination::LocalityViolation;
            failure = Some(
                Error::LocalityViolation {
                    distance: d,
                    radius: locality.beta + CONFINEMENT_SLACK,
                    what: "iterate xᵏ⁺¹ ∈ B[x̄, β]",
                }
                .to_string(),
            );
            break;
        }
        if step <= opts.eps {
            termination = Termination::StepBelowEps;
            break;
        }
    }
    Ok(trace.finish(termination, opts.eps, schedule.rho, opts.f_star, failure))
}

/// Checks the Fejér inequality along the trace for `samples` seeded points of
/// `B[x̄, β]` plus `x = xᵏ` and `x = xᵏ⁺¹` at every step.
pub fn check_fejer(
    report: &RunReport,
    problem: &Problem,
    locality: &LocalityConfig,
    samples: usize,
    seed: u64,
) -> CheckReport {
    let name = "fejer";
    let mut rng = child_rng(seed, name);
    let mut tracker = CheckReport::tracker(name, FEJER_SLACK);
    let mut points: Vec<Vec<f64>> = (0..samples)
        .map(|_| sample_ball(&mut rng, &locality.x_bar, locality.beta))
        .collect();
    points.push(locality.x_bar.clone());
    for rec in &report.records {
        let mut own = alloc::vec![rec.x_k.clone(), rec.x_next.clone()];
        for x in points.iter().chain(own.iter_mut().map(|p| &*p)) {
            let f_x = problem.value(x);
            tracker.observe(fejer_violation(x, rec, f_x), || {
                let mut w = alloc::vec![rec.k as f64];
                w.extend_from_slice(x);
                w
            });
        }
    }
    tracker.finish()
}

/// Checks `Σₖ‖xᵏ − xᵏ⁺¹‖² ≤ (2/ρ)(f(x⁰) − f(x_final))` and that the partial
/// sums are nondecreasing and stay under the bound.
pub fn check_summability(report: &RunReport) -> CheckReport {
    let mut tracker = CheckReport::tracker("summability", SUMMABILITY_SLACK);
    let bound = 2.0 / report.rho * (report.f_x0 - report.f_final);
    let mut partial = 0.0;
    let mut previous = 0.0;
    for rec in &report.records {
        partial += rec.step_norm * rec.step_norm;
        let monotone = previous - partial;
        tracker.observe((partial - bound).max(monotone), || {
            alloc::vec![rec.k as f64, partial, bound]
        });
        previous = partial;
    }
    if report.records.is_empty() {
        tracker.observe(-bound.max(0.0), Vec::new);
    }
    tracker.note(format!("sum {:e}, bound {bound:e}", report.sum_sq_steps));
    tracker.finish()
}

/// `2 + (2/ρ)(f0 − f*)ε⁻²`.
pub fn complexity_bound(rho: f64, f0: f64, f_star: f64, eps: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::Parameter(format!(
            "ρ > 0 is required for the complexity bound, got {rho}"
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("ε > 0 is required, got {eps}")));
    }
    if !(f0.is_finite() && f_star.is_finite()) || f0 < f_star - 1e-12 {
        return Err(Error::Parameter(format!(
            "f(x⁰) ≥ f* is required (f(x⁰) = {f0}, f* = {f_star})"
        )));
    }
    Ok(2.0 + 2.0 / rho * (f0 - f_star).max(0.0) / (eps * eps))
}

/// 1-based `m(k) = argmin_{j ∈ 1..k−1} (zʲ)^τ + (zʲ⁺¹)^τ`, first index on ties.
pub fn pair_argmin(z: &[f64], tau: f64) -> Option<usize> {
    if z.len() < 2 {
        return None;
    }
    let mut best = (f64::INFINITY, 0);
    for j in 0..z.len() - 1 {
        let s = libm::pow(z[j], tau) + libm::pow(z[j + 1], tau);
        if s < best.0 {
            best = (s, j);
        }
    }
    Some(best.1 + 1)
}

/// For nonnegative `z¹..zᵏ` with `Σ(zʲ)^τ ≤ λ`, checks
/// `max{z^{m(k)}, z^{m(k)+1}} ≤ (2λ/(k − 1))^{1/τ}`.
///
/// When the premise fails the report passes vacuously with
/// `premise_met = false`.
pub fn pair_bound(z: &[f64], bound_lambda: f64, tau: f64) -> Result<CheckReport> {
    if z.len() < 2 {
        return Err(Error::Parameter(format!(
            "k ≥ 2 is required, got a sequence of length {}",
            z.len()
        )));
    }
    if !(tau > 0.0 && bound_lambda > 0.0) || z.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::Parameter(
            "τ > 0, λ > 0 and nonnegative terms are required".into(),
        ));
    }
    let k = z.len();
    let mut tracker = CheckReport::tracker("pair_bound", 1e-12);
    let total: f64 = z.iter().map(|v| libm::pow(*v, tau)).sum();
    if total > bound_lambda {
        tracker.note(format!(
            "premise Σ(zʲ)^τ = {total:e} > λ = {bound_lambda:e}"
        ));
        let mut report = tracker.finish();
        report.premise_met = false;
        return Ok(report);
    }
    let m = pair_argmin(z, tau).expect("k ≥ 2");
    let lhs = z[m - 1].max(z[m]);
    let rhs = libm::pow(2.0 * bound_lambda / (k - 1) as f64, 1.0 / tau);
    tracker.observe(lhs - rhs, || alloc::vec![m as f64, lhs, rhs]);
    tracker.note(format!("m(k) = {m}"));
    Ok(tracker.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "c")]
pub enum StepRule {
    Constant(f64),
    /// `c/√(k + 1)`
    Diminishing(f64),
}

impl StepRule {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            StepRule::Constant(c) => *c,
            StepRule::Diminishing(c) => c / libm::sqrt((k + 1) as f64),
        }
    }
}

/// Subgradient method `xᵏ⁺¹ = xᵏ − tₖvᵏ`, `vᵏ ∈ ∂f(xᵏ)`, for comparison.
///
/// Produces the same report shape as [`run`] (with `γₖ = λₖ = tₖ` in the
/// records and `zᵏ = xᵏ`); nothing is asserted about descent or Fejér
/// behaviour. Stops when a step is at most `eps` or after `steps` steps.
pub fn subgradient_baseline(
    problem: &Problem,
    x0: &[f64],
    steps: usize,
    rule: StepRule,
    eps: f64,
    f_star: Option<f64>,
) -> Result<RunReport> {
    let mut trace = Trace {
        records: Vec::new(),
        x0: x0.to_vec(),
        f_x0: problem.value(x0),
    };
    let mut x = x0.to_vec();
    let mut f_x = trace.f_x0;
    let mut termination = Termination::MaxIter;
    let mut failure = None;
    for k in 0..steps {
        let t = rule.at(k);
        let v = match problem.subgradient(&x) {
            Ok(v) => v,
            Err(e) => {
                termination = Termination::InnerFailure;
                failure = Some(e.to_string());
                break;
            }
        };
        let x_next = linalg::axpy(&x, -t, &v);
        let f_next = problem.value(&x_next);
        let step = linalg::dist(&x, &x_next);
        let mut rec = IterationRecord {
            k,
            z_k: x.clone(),
            x_k: x,
            x_next,
            f_x_k: f_x,
            f_x_next: f_next,
            step_norm: step,
            inner_iterations: 0,
            inner_residual: 0.0,
            descent_gap: f_x - f_next - step * step / (2.0 * t),
            fejer_ok: true,
            gamma_k: t,
            lambda_k: t,
        };
        rec.fejer_ok =
            fejer_holds(&rec.x_k, &rec, rec.f_x_k) && fejer_holds(&rec.x_next, &rec, rec.f_x_next);
        x = rec.x_next.clone();
        f_x = f_next;
        trace.records.push(rec);
        if step <= eps {
            termination = Termination::StepBelowEps;
            break;
        }
    }
    Ok(trace.finish(termination, eps, problem.rho(), f_star, failure))
}

/// Sampled check that `e_γf` is convex on `B[x̄, δ]`: the secant inequality
/// for `e_γf` and monotonicity of `∇e_γf`, both with slack `1e−8`.
///
/// An empirical check, not a certificate.
pub fn check_envelope_convexity(
    problem: &Problem,
    gamma: f64,
    x_bar: &[f64],
    delta: f64,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<CheckReport> {
    if gamma * problem.rho() >= 1.0 {
        return Err(Error::Parameter(format!(
            "γρ < 1 is required (γ = {gamma}, ρ = {})",
            problem.rho()
        )));
    }
    let name = "envelope_convexity";
    let mut rng = child_rng(seed, name);
    let mut tracker = CheckReport::tracker(name, 1e-8);
    let eval = |x: &[f64]| envelope::prox(&ProxQuery::new(problem, gamma, x, delta), tol);
    for _ in 0..samples {
        let u = sample_ball(&mut rng, x_bar, delta);
        let v = sample_ball(&mut rng, x_bar, delta);
        let alpha: f64 = rng.random_range(0.0..=1.0);
        let mid = linalg::lerp(alpha, &u, &v);
        let eu = eval(&u)?;
        let ev = eval(&v)?;
        let em = eval(&mid)?;
        let secant =
            em.envelope_value - (alpha * eu.envelope_value + (1.0 - alpha) * ev.envelope_value);
        let monotone = -linalg::dot(
            &linalg::sub(&eu.gradient, &ev.gradient),
            &linalg::sub(&u, &v),
        );
        tracker.observe(secant.max(monotone), || {
            let mut w = u.clone();
            w.extend_from_slice(&v);
            w.push(alpha);
            w
        });
    }
    Ok(tracker.finish())
}

/// Constants for step `k` of a schedule (convenience for callers that audit
/// individual steps).
pub fn step_constants(
    schedule: &Schedule,
    k: usize,
    delta: f64,
    policy: SigmaPolicy,
) -> Result<ContractionConstants> {
    let (gamma, lambda) = schedule.at(k)?;
    fixedpoint::derive_constants(gamma, lambda, schedule.rho, delta, policy)
}

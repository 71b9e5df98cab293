//! Contraction solver for the implicit proximal step.
//!
//! For `0 < 2γ < λ < 1/ρ` and a point `x` near a stationary point `x̄`, the
//! step equation `z = x − (λ − γ)∇e_γf(z)` is rewritten as the fixed point of
//!
//! ```text
//! S(z) = z + (λ − γ)∇e_γf(z)          Φ(z) = z − σ(S(z) − x)
//! ```
//!
//! When `e_γf` is convex on `B[x̄, δ]`, `S` is strongly monotone (modulus 1)
//! and `L`-Lipschitz with `L = 1 + ((λ − γ)/γ)(1 + 1/(1 − γρ))`, so `Φ` is a
//! contraction with factor `√κ`, `κ = 1 − 2σ + σ²L²`, for any `0 < σ < 2/L²`.
//! The point `y = z − γ(λ − γ)⁻¹(x − z)` recovered from the fixed point is
//! `P_λf(x)`.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::envelope::{self, ProxQuery};
use crate::linalg;
use crate::problems::Problem;
use crate::report::{child_rng, sample_ball, CheckReport};
use crate::{Error, Result};

/// `β` is taken as this fraction of its strict upper bound.
pub const BETA_SAFETY: f64 = 0.9;

/// Prox evaluations inside `S` run this much tighter than the outer tolerance.
const PROX_TOL_FACTOR: f64 = 1e-3;

/// Steps shorter than this are too close to rounding noise to enter the
/// observed contraction ratio.
const RATIO_STEP_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum SigmaPolicy {
    /// `σ = 1/L²`, the minimizer of `κ(σ)`, giving `κ = 1 − 1/L²`.
    #[default]
    InverseLipschitzSquared,
    Explicit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionConstants {
    /// Lipschitz bound `L` of `S`.
    pub lipschitz: f64,
    pub sigma: f64,
    pub kappa: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub rho: f64,
    pub delta: f64,
}

impl ContractionConstants {
    /// Contraction factor `√κ` of `Φ`.
    pub fn contraction_factor(&self) -> f64 {
        libm::sqrt(self.kappa)
    }

    /// Iterations after which the contraction guarantees a residual below
    /// `tol` from any start in `B[x̄, δ]`, plus a margin of 10.
    pub fn default_max_iter(&self, tol: f64) -> usize {
        let ratio = tol / (self.sigma * 2.0 * self.delta);
        if ratio >= 1.0 {
            return 10;
        }
        let n = libm::ceil(libm::log(ratio) / libm::log(self.contraction_factor()));
        n as usize + 10
    }
}

/// `L = 1 + ((λ − γ)/γ)(1 + 1/(1 − γρ))`.
pub fn lipschitz_constant(gamma: f64, lambda: f64, rho: f64) -> f64 {
    1.0 + ((lambda - gamma) / gamma) * (1.0 + 1.0 / (1.0 - gamma * rho))
}

/// `κ = 1 − 2σ + σ²L²`.
pub fn kappa(sigma: f64, lipschitz: f64) -> f64 {
    1.0 - 2.0 * sigma + sigma * sigma * lipschitz * lipschitz
}

/// Computes `L`, `σ`, `κ` and `β = 0.9·min{δ, (δ/σ)(1 − √κ)}`.
pub fn derive_constants(
    gamma: f64,
    lambda: f64,
    rho: f64,
    delta: f64,
    policy: SigmaPolicy,
) -> Result<ContractionConstants> {
    check_step_pair(0, gamma, lambda, rho)?;
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::Parameter(format!(
            "δ > 0 is required, got δ = {delta}"
        )));
    }
    let lipschitz = lipschitz_constant(gamma, lambda, rho);
    let sigma_max = 2.0 / (lipschitz * lipschitz);
    let sigma = match policy {
        SigmaPolicy::InverseLipschitzSquared => 1.0 / (lipschitz * lipschitz),
        SigmaPolicy::Explicit(s) => {
            if !(s > 0.0 && s < sigma_max) {
                return Err(Error::Parameter(format!(
                    "0 < σ < 2/L² violated: σ = {s}, L = {lipschitz:.6}, 2/L² = {sigma_max:.6}"
                )));
            }
            s
        }
    };
    let kappa = kappa(sigma, lipschitz);
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::Parameter(format!(
            "0 < κ < 1 violated: κ = {kappa} (σ = {sigma}, L = {lipschitz})"
        )));
    }
    let bound = f64::min(delta, delta / sigma * (1.0 - libm::sqrt(kappa)));
    Ok(ContractionConstants {
        lipschitz,
        sigma,
        kappa,
        beta: BETA_SAFETY * bound,
        gamma,
        lambda,
        rho,
        delta,
    })
}

/// Checks `0 < 2γ < λ < 1/ρ` for one step, reporting index `k`.
pub(crate) fn check_step_pair(k: usize, gamma: f64, lambda: f64, rho: f64) -> Result<()> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::Schedule {
            k,
            inequality: "0 < γ",
            detail: format!("γ = {gamma}"),
        });
    }
    if 2.0 * gamma >= lambda {
        return Err(Error::Schedule {
            k,
            inequality: "2γ < λ",
            detail: format!("2γ = {}, λ = {lambda}", 2.0 * gamma),
        });
    }
    if lambda * rho >= 1.0 {
        return Err(Error::Schedule {
            k,
            inequality: "λ < 1/ρ",
            detail: format!("λ = {lambda}, 1/ρ = {}", 1.0 / rho),
        });
    }
    Ok(())
}

fn gamma_gradient(
    z: &[f64],
    cc: &ContractionConstants,
    problem: &Problem,
    tol: f64,
) -> Result<Vec<f64>> {
    envelope::envelope_gradient(&ProxQuery::new(problem, cc.gamma, z, cc.delta), tol)
}

/// `S(z) = z + (λ − γ)∇e_γf(z)`; `tol` is passed to the prox evaluation.
pub fn s_map(
    z: &[f64],
    cc: &ContractionConstants,
    problem: &Problem,
    tol: f64,
) -> Result<Vec<f64>> {
    let grad = gamma_gradient(z, cc, problem, tol)?;
    Ok(linalg::axpy(z, cc.lambda - cc.gamma, &grad))
}

/// `Φ(z) = σx − σS(z) + z`.
pub fn phi_map(
    z: &[f64],
    x: &[f64],
    cc: &ContractionConstants,
    problem: &Problem,
    tol: f64,
) -> Result<Vec<f64>> {
    let s = s_map(z, cc, problem, tol)?;
    Ok(linalg::axpy(z, -cc.sigma, &linalg::sub(&s, x)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerSolveResult {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    /// `y = z − γ(λ − γ)⁻¹(x − z)`, the approximation of `P_λf(x)`.
    pub y: Vec<f64>,
    pub inner_iterations: usize,
    /// `‖S(z) − x‖` at the returned `z`.
    pub residual: f64,
    /// Largest ratio of consecutive Φ step lengths seen during the solve.
    pub contraction_ratio_observed: f64,
}

/// Iterates `z ← Φ(z)` from `z₀ = x` until `‖S(z) − x‖ ≤ tol`.
///
/// Requires `x ∈ B[x̄, β]`. Fails with [`Error::LocalityViolation`] if an
/// iterate leaves `B[x̄, δ]` (which means β or δ is misconfigured for the
/// instance) and with [`Error::Nonconvergence`] after `max_iter` steps
/// (default [`ContractionConstants::default_max_iter`]).
pub fn solve_fixed_point(
    x: &[f64],
    cc: &ContractionConstants,
    problem: &Problem,
    x_bar: &[f64],
    tol: f64,
    max_iter: Option<usize>,
) -> Result<InnerSolveResult> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Parameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let start_dist = linalg::dist(x, x_bar);
    if start_dist > cc.beta {
        return Err(Error::Precondition(format!(
            "x ∈ B[x̄, β] is required: ‖x − x̄‖ = {start_dist:e} > β = {:e}",
            cc.beta
        )));
    }
    let max_iter = max_iter.unwrap_or_else(|| cc.default_max_iter(tol));
    let prox_tol = tol * PROX_TOL_FACTOR;

    let mut z = x.to_vec();
    let mut iterations = 0;
    let mut prev_step: Option<f64> = None;
    let mut ratio_max: f64 = 0.0;
    let residual = loop {
        let s = s_map(&z, cc, problem, prox_tol)?;
        let r = linalg::sub(&s, x);
        let residual = linalg::norm(&r);
        if residual <= tol {
            break residual;
        }
        if iterations >= max_iter {
            return Err(Error::Nonconvergence {
                iterations,
                residual,
                best: z,
            });
        }
        let next = linalg::axpy(&z, -cc.sigma, &r);
        let step = linalg::dist(&next, &z);
        if let Some(prev) = prev_step {
            if prev > RATIO_STEP_FLOOR * (1.0 + linalg::norm(&z)) {
                ratio_max = ratio_max.max(step / prev);
            }
        }
        prev_step = Some(step);
        z = next;
        iterations += 1;
        let d = linalg::dist(&z, x_bar);
        if d > cc.delta {
            return Err(Error::LocalityViolation {
                distance: d,
                radius: cc.delta,
                what: "inner iterate z ∈ B[x̄, δ]",
            });
        }
    };

    let z_dist = linalg::dist(&z, x_bar);
    if z_dist >= cc.delta - tol {
        return Err(Error::LocalityViolation {
            distance: z_dist,
            radius: cc.delta - tol,
            what: "fixed point z ∈ B(x̄, δ)",
        });
    }
    let y = recover_prox_point(x, &z, cc);
    let y_dist = linalg::dist(&y, x_bar);
    let y_radius = cc.beta + tol * cc.lambda / (cc.lambda - cc.gamma);
    if y_dist > y_radius {
        return Err(Error::LocalityViolation {
            distance: y_dist,
            radius: y_radius,
            what: "recovered point y ∈ B[x̄, β]",
        });
    }
    Ok(InnerSolveResult {
        x: x.to_vec(),
        z,
        y,
        inner_iterations: iterations,
        residual,
        contraction_ratio_observed: ratio_max,
    })
}

/// `y = z − γ(λ − γ)⁻¹(x − z)`.
pub fn recover_prox_point(x: &[f64], z: &[f64], cc: &ContractionConstants) -> Vec<f64> {
    let c = cc.gamma / (cc.lambda - cc.gamma);
    z.iter().zip(x).map(|(zi, xi)| zi - c * (xi - zi)).collect()
}

/// Recomputes `P_λf(x)` independently and checks
/// `‖y − P_λf(x)‖ ≤ 10·tol/(1 − λρ) + resolution`.
///
/// Uses the grid oracle with pitch `grid_step` in dimensions one and two and
/// the dispatched prox otherwise.
pub fn verify_prox_identity(
    result: &InnerSolveResult,
    problem: &Problem,
    cc: &ContractionConstants,
    tol: f64,
    grid_step: f64,
) -> Result<CheckReport> {
    let search = 2.0 * cc.beta + tol + grid_step;
    let q = ProxQuery::new(problem, cc.lambda, &result.x, search);
    let (reference, resolution) = if problem.dimension() <= 2 {
        (envelope::prox_grid_oracle(&q, grid_step)?.y, grid_step)
    } else {
        (envelope::prox(&q, tol * PROX_TOL_FACTOR)?.y, tol)
    };
    let bound = 10.0 * tol / (1.0 - cc.lambda * cc.rho);
    let mut tracker = CheckReport::tracker("prox_identity", resolution);
    tracker.observe(linalg::dist(&result.y, &reference) - bound, || {
        let mut w = result.y.clone();
        w.extend_from_slice(&reference);
        w
    });
    Ok(tracker.finish())
}

/// Sampled check of `‖Φ(z) − Φ(w)‖ ≤ √κ‖z − w‖` for `z, w ∈ B[x̄, δ]`.
pub fn check_contraction(
    problem: &Problem,
    cc: &ContractionConstants,
    x_bar: &[f64],
    x: &[f64],
    pairs: usize,
    seed: u64,
    tol: f64,
) -> Result<CheckReport> {
    let name = "phi_contraction";
    let mut rng = child_rng(seed, name);
    let mut tracker = CheckReport::tracker(name, 1e-9);
    let factor = cc.contraction_factor();
    let mut max_ratio: f64 = 0.0;
    for _ in 0..pairs {
        let z = sample_ball(&mut rng, x_bar, cc.delta);
        let w = sample_ball(&mut rng, x_bar, cc.delta);
        let den = linalg::dist(&z, &w);
        if den == 0.0 {
            continue;
        }
        let pz = phi_map(&z, x, cc, problem, tol)?;
        let pw = phi_map(&w, x, cc, problem, tol)?;
        let ratio = linalg::dist(&pz, &pw) / den;
        max_ratio = max_ratio.max(ratio);
        tracker.observe(ratio - factor, || {
            let mut v = z.clone();
            v.extend_from_slice(&w);
            v
        });
    }
    tracker.note(format!("max ratio {max_ratio:.9}, √κ = {factor:.9}"));
    Ok(tracker.finish())
}

//! Proximal operator `P_λf`, Moreau envelope `e_λf` and its gradient.
//!
//! ```text
//! e_λf(x) = min_y f(y) + ‖y − x‖²/(2λ)      P_λf(x) = argmin of the same
//! ∇e_λf(x) = (x − P_λf(x))/λ
//! ```
//!
//! For a ρ-weakly convex `f` and `λρ < 1` the subproblem is
//! `(1/λ − ρ)`-strongly convex, so the prox is single valued on the search
//! ball. Evaluation dispatches to the instance's closed form when it is valid
//! at `(λ, x)` and otherwise to a numerical solver. An exhaustive grid oracle
//! is provided for testing in dimensions one and two.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::problems::Problem;
use crate::report::{child_rng, sample_ball, CheckReport};
use crate::{Error, Result};

/// Iteration cap of the numerical prox solver.
pub const MAX_SOLVER_ITERATIONS: usize = 100_000;

/// Largest number of grid points the grid oracle will evaluate.
pub const MAX_GRID_POINTS: u64 = 200_000_000;

/// A request to evaluate `P_λf(x)`, searching in `B[x, search_radius]`.
#[derive(Debug, Clone, Copy)]
pub struct ProxQuery<'a> {
    pub problem: &'a Problem,
    pub lambda: f64,
    pub x: &'a [f64],
    pub search_radius: f64,
}

impl<'a> ProxQuery<'a> {
    pub fn new(problem: &'a Problem, lambda: f64, x: &'a [f64], search_radius: f64) -> Self {
        Self {
            problem,
            lambda,
            x,
            search_radius,
        }
    }

    fn validate(&self) -> Result<()> {
        let rho = self.problem.rho();
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::Parameter(format!(
                "prox parameter must satisfy λ > 0, got {}",
                self.lambda
            )));
        }
        if self.lambda * rho >= 1.0 {
            return Err(Error::Parameter(format!(
                "λρ < 1 is required for a single-valued prox (λ = {}, ρ = {rho})",
                self.lambda
            )));
        }
        if !(self.search_radius.is_finite() && self.search_radius > 0.0) {
            return Err(Error::Parameter(format!(
                "search radius must be positive, got {}",
                self.search_radius
            )));
        }
        if self.x.len() != self.problem.dimension() {
            return Err(Error::Parameter(format!(
                "point has dimension {}, problem has dimension {}",
                self.x.len(),
                self.problem.dimension()
            )));
        }
        if !self.problem.region().contains(self.x) {
            return Err(Error::Precondition(format!(
                "prox argument {:?} lies outside the problem region",
                self.x
            )));
        }
        Ok(())
    }

    /// Subproblem objective `f(y) + ‖y − x‖²/(2λ)`.
    pub fn objective(&self, y: &[f64]) -> f64 {
        self.problem.value(y) + linalg::dist_sq(y, self.x) / (2.0 * self.lambda)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProxMethod {
    Analytic,
    Numerical,
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxResult {
    pub y: Vec<f64>,
    pub envelope_value: f64,
    pub gradient: Vec<f64>,
    pub method: ProxMethod,
    /// Optimality measure in gradient units: 0 for the closed form, the final
    /// bracket width over λ for 1-D bisection, the subproblem subgradient norm
    /// for the n-D solver, and the grid pitch over λ for the grid oracle.
    pub residual: f64,
}

impl ProxResult {
    fn from_point(q: &ProxQuery<'_>, y: Vec<f64>, method: ProxMethod, residual: f64) -> Self {
        let envelope_value = q.objective(&y);
        let gradient = linalg::scale(1.0 / q.lambda, &linalg::sub(q.x, &y));
        Self {
            y,
            envelope_value,
            gradient,
            method,
            residual,
        }
    }
}

/// Evaluates `P_λf(x)` together with `e_λf(x)` and `∇e_λf(x)`.
pub fn prox(q: &ProxQuery<'_>, tol: f64) -> Result<ProxResult> {
    q.validate()?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Parameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if let Some(analytic) = q.problem.analytic_prox() {
        if analytic.is_valid(q.lambda, q.x) {
            let y = analytic.eval(q.lambda, q.x);
            return Ok(ProxResult::from_point(q, y, ProxMethod::Analytic, 0.0));
        }
    }
    numerical_prox(q, tol)
}

pub fn envelope_value(q: &ProxQuery<'_>, tol: f64) -> Result<f64> {
    prox(q, tol).map(|r| r.envelope_value)
}

pub fn envelope_gradient(q: &ProxQuery<'_>, tol: f64) -> Result<Vec<f64>> {
    prox(q, tol).map(|r| r.gradient)
}

/// Numerical path, bypassing any closed form.
pub fn numerical_prox(q: &ProxQuery<'_>, tol: f64) -> Result<ProxResult> {
    q.validate()?;
    if q.problem.dimension() == 1 {
        bisection_prox(q, tol)
    } else {
        subgradient_prox(q, tol)
    }
}

/// Subgradient of the subproblem at `y`: `v(y) + (y − x)/λ`.
fn subproblem_subgradient(q: &ProxQuery<'_>, y: &[f64]) -> Result<Vec<f64>> {
    let v = q.problem.subgradient(y)?;
    Ok(v.iter()
        .zip(y.iter().zip(q.x))
        .map(|(vi, (yi, xi))| vi + (yi - xi) / q.lambda)
        .collect())
}

/// One-dimensional solver: bisection on the sign of the subproblem
/// subgradient. Strong convexity makes any subgradient selection increasing,
/// so a negative value at `y` puts the minimizer to the right of `y`. Works
/// for kinked minimizers where a single subgradient never vanishes.
fn bisection_prox(q: &ProxQuery<'_>, tol: f64) -> Result<ProxResult> {
    let x = q.x[0];
    let (region_lo, region_hi) = q.problem.region().bounds_1d();
    let mut a = f64::max(x - q.search_radius, region_lo);
    let mut b = f64::min(x + q.search_radius, region_hi);
    let g = |y: f64| subproblem_subgradient(q, &[y]).map(|v| v[0]);

    let mut ga = g(a)?;
    let mut gb = g(b)?;
    if ga > 0.0 || gb < 0.0 {
        return Err(Error::NoMinimizerInBall {
            radius: q.search_radius,
        });
    }
    if ga == 0.0 {
        return Ok(ProxResult::from_point(
            q,
            vec![a],
            ProxMethod::Numerical,
            0.0,
        ));
    }
    if gb == 0.0 {
        return Ok(ProxResult::from_point(
            q,
            vec![b],
            ProxMethod::Numerical,
            0.0,
        ));
    }

    let target = tol * q.lambda;
    let mut iterations = 0;
    while b - a > target {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            // bracket is down to adjacent floats
            break;
        }
        let gm = g(mid)?;
        let fuzz = 1e-12 * (1.0 + libm::fabs(ga) + libm::fabs(gb));
        if gm < ga - fuzz || gm > gb + fuzz {
            return Err(Error::NotStronglyConvex { at: mid });
        }
        if gm == 0.0 {
            return Ok(ProxResult::from_point(
                q,
                vec![mid],
                ProxMethod::Numerical,
                0.0,
            ));
        }
        if gm < 0.0 {
            a = mid;
            ga = gm;
        } else {
            b = mid;
            gb = gm;
        }
        iterations += 1;
        if iterations >= MAX_SOLVER_ITERATIONS {
            return Err(Error::Nonconvergence {
                iterations,
                residual: (b - a) / q.lambda,
                best: vec![0.5 * (a + b)],
            });
        }
    }
    let residual = (b - a) / q.lambda;
    Ok(ProxResult::from_point(
        q,
        vec![0.5 * (a + b)],
        ProxMethod::Numerical,
        residual,
    ))
}

/// n-dimensional solver: fixed-step subgradient iteration on the strongly
/// convex subproblem with step `1/(1/λ + ρ)`, started at `x`. Converges
/// linearly when `f` is smooth near the prox; for nonsmooth `f` it reports
/// nonconvergence rather than returning an inaccurate point.
fn subgradient_prox(q: &ProxQuery<'_>, tol: f64) -> Result<ProxResult> {
    let step = 1.0 / (1.0 / q.lambda + q.problem.rho());
    let mut y = q.x.to_vec();
    let mut best = (f64::INFINITY, y.clone());
    for _ in 0..MAX_SOLVER_ITERATIONS {
        let g = subproblem_subgradient(q, &y)?;
        let residual = linalg::norm(&g);
        if residual < best.0 {
            best = (residual, y.clone());
        }
        if residual <= tol {
            return Ok(ProxResult::from_point(
                q,
                y,
                ProxMethod::Numerical,
                residual,
            ));
        }
        y = linalg::axpy(&y, -step, &g);
        if linalg::dist(&y, q.x) > q.search_radius || !q.problem.region().contains(&y) {
            return Err(Error::NoMinimizerInBall {
                radius: q.search_radius,
            });
        }
    }
    Err(Error::Nonconvergence {
        iterations: MAX_SOLVER_ITERATIONS,
        residual: best.0,
        best: best.1,
    })
}

/// Exhaustive grid minimization of the subproblem over `B[x, search_radius]`
/// with pitch `step`, followed by one ternary-search refinement per
/// coordinate around the best grid point. Independent of [`prox`]; meant as
/// a test oracle.
pub fn prox_grid_oracle(q: &ProxQuery<'_>, step: f64) -> Result<ProxResult> {
    q.validate()?;
    let n = q.problem.dimension();
    if n > 2 {
        return Err(Error::UnsupportedDimension { dimension: n });
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Parameter(format!(
            "grid step must be positive, got {step}"
        )));
    }
    let r = q.search_radius;
    let per_axis = libm::floor(2.0 * r / step) as u64 + 1;
    if per_axis.saturating_pow(n as u32) > MAX_GRID_POINTS {
        return Err(Error::Parameter(format!(
            "grid with pitch {step} over radius {r} exceeds {MAX_GRID_POINTS} points"
        )));
    }

    let mut best = (f64::INFINITY, q.x.to_vec());
    let mut point = q.x.to_vec();
    let coord = |i: u64, axis: usize| q.x[axis] - r + i as f64 * step;
    if n == 1 {
        for i in 0..per_axis {
            point[0] = coord(i, 0);
            let h = q.objective(&point);
            if h < best.0 {
                best = (h, point.clone());
            }
        }
    } else {
        for i in 0..per_axis {
            point[0] = coord(i, 0);
            for j in 0..per_axis {
                point[1] = coord(j, 1);
                if linalg::dist_sq(&point, q.x) > r * r {
                    continue;
                }
                let h = q.objective(&point);
                if h < best.0 {
                    best = (h, point.clone());
                }
            }
        }
    }
    if !best.0.is_finite() {
        return Err(Error::NoMinimizerInBall { radius: r });
    }

    let mut y = best.1;
    for axis in 0..n {
        let lo = f64::max(y[axis] - step, q.x[axis] - r);
        let hi = f64::min(y[axis] + step, q.x[axis] + r);
        y = ternary_refine(q, y, axis, lo, hi);
    }
    Ok(ProxResult::from_point(
        q,
        y,
        ProxMethod::Grid,
        step / q.lambda,
    ))
}

fn ternary_refine(q: &ProxQuery<'_>, start: Vec<f64>, axis: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut probe = start.clone();
    let mut eval = |t: f64| {
        probe[axis] = t;
        q.objective(&probe)
    };
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        let third = (hi - lo) / 3.0;
        let (m1, m2) = (lo + third, hi - third);
        if !(m1 < m2) {
            break;
        }
        if eval(m1) <= eval(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let mid = 0.5 * (lo + hi);
    let start_value = q.objective(&start);
    if eval(mid) <= start_value {
        let mut y = start;
        y[axis] = mid;
        y
    } else {
        start
    }
}

/// Sampled check of `‖P_γf(u) − P_γf(v)‖ ≤ ‖u − v‖/(1 − γρ)` on
/// `B[center, radius]`.
///
/// `center` is expected to be a stationary point (so `P_γf(center) = center`);
/// the prox is then searched within `radius·(1 + 1/(1 − γρ))` of each sample.
pub fn check_prox_lipschitz(
    p: &Problem,
    gamma: f64,
    center: &[f64],
    radius: f64,
    pairs: usize,
    seed: u64,
    tol: f64,
) -> Result<CheckReport> {
    let rho = p.rho();
    if gamma * rho >= 1.0 {
        return Err(Error::Parameter(format!(
            "γρ < 1 is required (γ = {gamma}, ρ = {rho})"
        )));
    }
    let constant = 1.0 / (1.0 - gamma * rho);
    let search = radius * (1.0 + constant) + tol;
    let name = "prox_lipschitz";
    let mut rng = child_rng(seed, name);
    let mut tracker = CheckReport::tracker(name, 1e-8);
    let mut max_ratio: f64 = 0.0;
    for _ in 0..pairs {
        let u = sample_ball(&mut rng, center, radius);
        let v = sample_ball(&mut rng, center, radius);
        let pu = prox(&ProxQuery::new(p, gamma, &u, search), tol)?.y;
        let pv = prox(&ProxQuery::new(p, gamma, &v, search), tol)?.y;
        let num = linalg::dist(&pu, &pv);
        let den = linalg::dist(&u, &v);
        if den > 0.0 {
            max_ratio = max_ratio.max(num / den);
        }
        tracker.observe(num - constant * den, || {
            let mut w = u.clone();
            w.extend_from_slice(&v);
            w
        });
    }
    tracker.note(format!("max ratio {max_ratio:.6}, bound {constant:.6}"));
    Ok(tracker.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_abs_quadratic, make_example1, make_quadratic};
    use approx::assert_abs_diff_eq;

    #[test]
    fn example1_prox_is_one_near_the_kink() {
        let (p, _) = make_example1();
        let r = prox(&ProxQuery::new(&p, 0.1, &[1.05], 0.2), 1e-12).unwrap();
        assert_eq!(r.method, ProxMethod::Analytic);
        assert_eq!(r.y, [1.0]);
        assert_abs_diff_eq!(r.envelope_value, 1.0125, epsilon = 1e-14);
        assert_abs_diff_eq!(r.gradient[0], 0.5, epsilon = 1e-12);
        let at_min = envelope_value(&ProxQuery::new(&p, 0.1, &[1.0], 0.2), 1e-12).unwrap();
        assert_eq!(at_min, 1.0);
    }

    #[test]
    fn numerical_path_agrees_with_closed_form_on_example1() {
        let (p, _) = make_example1();
        for x in [0.85, 0.95, 1.0, 1.05, 1.19] {
            let point = [x];
            let q = ProxQuery::new(&p, 0.1, &point, 0.3);
            let n = numerical_prox(&q, 1e-12).unwrap();
            let a = prox(&q, 1e-12).unwrap();
            assert_eq!(a.method, ProxMethod::Analytic);
            assert!((n.y[0] - a.y[0]).abs() < 1e-7, "x = {x}: {n:?}");
        }
    }

    #[test]
    fn quadratic_closed_form() {
        let (p, _) = make_quadratic(&[0.0]);
        let r = prox(&ProxQuery::new(&p, 1.0, &[2.0], 2.0), 1e-12).unwrap();
        assert_eq!(r.y, [1.0]);
    }

    #[test]
    fn quadratic_numerical_matches_analytic_in_two_dimensions() {
        let (p, _) = make_quadratic(&[0.5, -1.0]);
        let x = [1.5, 0.25];
        let q = ProxQuery::new(&p, 0.4, &x, 2.0);
        let n = numerical_prox(&q, 1e-11).unwrap();
        let a = prox(&q, 1e-11).unwrap();
        assert_eq!(n.method, ProxMethod::Numerical);
        assert!(linalg::dist(&n.y, &a.y) < 1e-7);
        assert!(n.residual <= 1e-11);
    }

    #[test]
    fn abs_quadratic_matches_grid() {
        let (p, _) = make_abs_quadratic();
        let q = ProxQuery::new(&p, 0.1, &[1.2], 1.0);
        let num = prox(&q, 1e-12).unwrap();
        let grid = prox_grid_oracle(&q, 1e-6).unwrap();
        assert_eq!(num.method, ProxMethod::Numerical);
        assert_eq!(grid.method, ProxMethod::Grid);
        assert!((num.y[0] - grid.y[0]).abs() < 1e-5);
        assert!((num.envelope_value - grid.envelope_value).abs() < 1e-8);
    }

    #[test]
    fn grid_oracle_reproduces_closed_forms() {
        let (p, _) = make_example1();
        let r = prox_grid_oracle(&ProxQuery::new(&p, 0.1, &[1.05], 0.2), 1e-6).unwrap();
        assert!((r.y[0] - 1.0).abs() <= 1e-6);
        let (p, _) = make_quadratic(&[0.0]);
        let r = prox_grid_oracle(&ProxQuery::new(&p, 1.0, &[2.0], 1.5), 1e-6).unwrap();
        assert!((r.y[0] - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn grid_oracle_two_dimensional() {
        let (p, _) = make_quadratic(&[0.0, 0.0]);
        let r = prox_grid_oracle(&ProxQuery::new(&p, 1.0, &[0.4, -0.2], 0.5), 1e-3).unwrap();
        assert!(linalg::dist(&r.y, &[0.2, -0.1]) < 1e-6, "{r:?}");
    }

    #[test]
    fn grid_oracle_rejects_three_dimensions() {
        let (p, _) = make_quadratic(&[0.0, 0.0, 0.0]);
        let q = ProxQuery::new(&p, 1.0, &[0.0, 0.0, 0.0], 1.0);
        assert_eq!(
            prox_grid_oracle(&q, 0.1),
            Err(Error::UnsupportedDimension { dimension: 3 })
        );
    }

    #[test]
    fn rejects_lambda_rho_at_least_one() {
        let (p, _) = make_example1();
        let q = ProxQuery::new(&p, 0.5, &[1.0], 0.2);
        assert!(matches!(prox(&q, 1e-10), Err(Error::Parameter(_))));
    }

    #[test]
    fn detects_non_strongly_convex_subproblem() {
        use crate::problems::{Problem, Region};
        use alloc::sync::Arc;
        // f = −4x² declared with ρ = 0: the subproblem for λ = 1 is concave
        let p = Problem::new(
            "misdeclared",
            0.0,
            Region::interval(-5.0, 5.0),
            Arc::new(|x: &[f64]| -4.0 * x[0] * x[0]),
            Arc::new(|x: &[f64]| vec![-8.0 * x[0]]),
        )
        .unwrap();
        let q = ProxQuery::new(&p, 1.0, &[0.3], 1.0);
        assert!(prox(&q, 1e-10).is_err());
    }

    #[test]
    fn prox_lipschitz_checks() {
        let (p, _) = make_example1();
        let r = check_prox_lipschitz(&p, 0.1, &[1.0], 0.2, 1000, 5, 1e-12).unwrap();
        assert!(r.passed);
        assert_eq!(r.worst_violation.max(0.0), 0.0);
        let (p, _) = make_quadratic(&[0.0]);
        let r = check_prox_lipschitz(&p, 1.0, &[0.0], 1.0, 200, 5, 1e-12).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.note.starts_with("max ratio 0.5"), "{}", r.note);
        let (p, _) = make_abs_quadratic();
        let r = check_prox_lipschitz(&p, 0.1, &[1.0], 0.1, 300, 5, 1e-12).unwrap();
        assert!(r.passed, "{r:?}");
    }
}

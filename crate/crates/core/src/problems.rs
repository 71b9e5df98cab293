//! Weakly convex objectives, the instance zoo, and sampled certification of
//! weak convexity.
//!
//! A function `f` is ρ-weakly convex on a region `U` when the approximate
//! secant inequality
//!
//! ```text
//! f(αx + (1−α)y) ≤ αf(x) + (1−α)f(y) + ρα(1−α)/2 ‖x − y‖²
//! ```
//!
//! holds for all `x, y ∈ U`, `α ∈ [0, 1]`. Equivalently `f + (ρ/2)‖·‖²` is
//! convex, which yields the DC decomposition `f = ξ − (ρ/2)‖·‖²`.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::report::{child_rng, sample_ball, CheckReport};
use crate::{Error, Result};

/// Slack used by the sampled convexity checks.
pub const CHECK_SLACK: f64 = 1e-10;

/// Modulus stored for convex instances so that `1/ρ` stays finite.
pub const CONVEX_RHO_EFF: f64 = 1e-6;

/// Instance ids understood by [`by_id`].
pub const ZOO_IDS: [&str; 3] = ["example1", "quadratic", "abs-quadratic"];

pub type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type SubgradientFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type ProxFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;
pub type ProxValidityFn = Arc<dyn Fn(f64, &[f64]) -> bool + Send + Sync>;

/// Closed region on which weak convexity is claimed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl Region {
    pub fn interval(lower: f64, upper: f64) -> Self {
        Region::Box {
            lower: vec![lower],
            upper: vec![upper],
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Region::Box { lower, .. } => lower.len(),
            Region::Ball { center, .. } => center.len(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dimension() {
            return false;
        }
        match self {
            Region::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi),
            Region::Ball { center, radius } => linalg::dist(x, center) <= *radius,
        }
    }

    /// Rejects empty or degenerate regions (zero width along some axis).
    pub fn validate(&self) -> Result<()> {
        match self {
            Region::Box { lower, upper } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    return Err(Error::Configuration(
                        "box region needs matching, non-empty bounds".to_string(),
                    ));
                }
                for (i, (lo, hi)) in lower.iter().zip(upper).enumerate() {
                    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                        return Err(Error::Configuration(alloc::format!(
                            "box region is empty or degenerate along axis {i} ([{lo}, {hi}])"
                        )));
                    }
                }
                Ok(())
            }
            Region::Ball { center, radius } => {
                if center.is_empty() || !linalg::is_finite(center) {
                    return Err(Error::Configuration(
                        "ball region needs a finite center".into(),
                    ));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::Configuration(alloc::format!(
                        "ball region radius must be positive, got {radius}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Uniform sample from the region.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Region::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(lo, hi)| rng.random_range(*lo..=*hi))
                .collect(),
            Region::Ball { center, radius } => sample_ball(rng, center, *radius),
        }
    }

    /// Extent of a one-dimensional region.
    pub(crate) fn bounds_1d(&self) -> (f64, f64) {
        match self {
            Region::Box { lower, upper } => (lower[0], upper[0]),
            Region::Ball { center, radius } => (center[0] - radius, center[0] + radius),
        }
    }
}

/// Closed-form proximal map together with the set of `(λ, x)` where it is
/// known to be valid.
#[derive(Clone)]
pub struct AnalyticProx {
    eval: ProxFn,
    valid: ProxValidityFn,
}

impl AnalyticProx {
    pub fn new(eval: ProxFn, valid: ProxValidityFn) -> Self {
        Self { eval, valid }
    }

    pub fn is_valid(&self, lambda: f64, x: &[f64]) -> bool {
        (self.valid)(lambda, x)
    }

    pub fn eval(&self, lambda: f64, x: &[f64]) -> Vec<f64> {
        (self.eval)(lambda, x)
    }
}

/// A ρ-weakly convex function with value and subgradient oracles.
///
/// Problems are immutable once built and cheap to clone (oracles are
/// reference counted), so they can be shared across threads.
#[derive(Clone)]
pub struct Problem {
    name: String,
    dimension: usize,
    rho: f64,
    region: Region,
    value: ValueFn,
    subgradient: SubgradientFn,
    analytic_prox: Option<AnalyticProx>,
    lower_bound: f64,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dimension", &self.dimension)
            .field("rho", &self.rho)
            .field("region", &self.region)
            .field("analytic_prox", &self.analytic_prox.is_some())
            .field("lower_bound", &self.lower_bound)
            .finish()
    }
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        rho: f64,
        region: Region,
        value: ValueFn,
        subgradient: SubgradientFn,
    ) -> Result<Self> {
        region.validate()?;
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::Parameter(alloc::format!(
                "weak-convexity modulus must satisfy ρ ≥ 0, got {rho}"
            )));
        }
        Ok(Self {
            name: name.into(),
            dimension: region.dimension(),
            rho,
            region,
            value,
            subgradient,
            analytic_prox: None,
            lower_bound: f64::NEG_INFINITY,
        })
    }

    pub fn with_analytic_prox(mut self, prox: AnalyticProx) -> Self {
        self.analytic_prox = Some(prox);
        self
    }

    pub fn with_lower_bound(mut self, lower_bound: f64) -> Self {
        self.lower_bound = lower_bound;
        self
    }

    /// Same oracles with a different declared modulus. Used to probe the
    /// checkers with a misdeclared ρ.
    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    pub fn analytic_prox(&self) -> Option<&AnalyticProx> {
        self.analytic_prox.as_ref()
    }

    /// `f(x)`, or `+∞` outside the region (and for wrong-length input).
    pub fn value(&self, x: &[f64]) -> f64 {
        if self.region.contains(x) {
            (self.value)(x)
        } else {
            f64::INFINITY
        }
    }

    /// One element of `∂f(x)`.
    pub fn subgradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.region.contains(x) {
            return Err(Error::Instance(alloc::format!(
                "{}: subgradient queried outside the region at {x:?}",
                self.name
            )));
        }
        let v = (self.subgradient)(x);
        if v.len() != self.dimension || !linalg::is_finite(&v) {
            return Err(Error::Instance(alloc::format!(
                "{}: subgradient oracle returned a non-finite vector {v:?} at {x:?}",
                self.name
            )));
        }
        Ok(v)
    }
}

/// Reference stationary point `x̄` (with `0 ∈ ∂f(x̄)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryPoint {
    pub x_bar: Vec<f64>,
    /// Whether stationarity is known analytically for the instance.
    pub certified: bool,
    /// `f(x̄)` when `x̄` is a certified local minimizer.
    pub min_value: Option<f64>,
}

/// Secant-inequality check of ρ-weak convexity on `p.region()`.
pub fn check_weak_convexity(p: &Problem, samples: usize, seed: u64) -> Result<CheckReport> {
    check_secant(
        "weak_convexity",
        |x| p.value(x),
        p.region(),
        p.rho(),
        samples,
        seed,
    )
}

/// Shared secant sampler: `h(αx+(1−α)y) ≤ αh(x)+(1−α)h(y) + ρα(1−α)/2‖x−y‖²`.
pub(crate) fn check_secant(
    name: &str,
    h: impl Fn(&[f64]) -> f64,
    region: &Region,
    rho: f64,
    samples: usize,
    seed: u64,
) -> Result<CheckReport> {
    region.validate()?;
    if samples == 0 {
        return Err(Error::Configuration("samples must be at least 1".into()));
    }
    let mut rng = child_rng(seed, name);
    let mut tracker = CheckReport::tracker(name, CHECK_SLACK);
    for _ in 0..samples {
        let x = region.sample(&mut rng);
        let y = region.sample(&mut rng);
        let alpha: f64 = rng.random_range(0.0..=1.0);
        let mid = linalg::lerp(alpha, &x, &y);
        let lhs = h(&mid);
        let rhs = alpha * h(&x)
            + (1.0 - alpha) * h(&y)
            + 0.5 * rho * alpha * (1.0 - alpha) * linalg::dist_sq(&x, &y);
        tracker.observe(lhs - rhs, || {
            let mut w = x.clone();
            w.extend_from_slice(&y);
            w.push(alpha);
            w
        });
    }
    Ok(tracker.finish())
}

/// Checks `f(y) ≥ f(x) + ⟨v, y−x⟩ − (ρ/2)‖y−x‖²` with `v = p.subgradient(x)`.
pub fn check_quadratic_lower_estimator(
    p: &Problem,
    samples: usize,
    seed: u64,
) -> Result<CheckReport> {
    p.region().validate()?;
    if samples == 0 {
        return Err(Error::Configuration("samples must be at least 1".into()));
    }
    let name = "quadratic_lower_estimator";
    let mut rng = child_rng(seed, name);
    let mut tracker = CheckReport::tracker(name, CHECK_SLACK);
    for _ in 0..samples {
        let x = p.region().sample(&mut rng);
        let y = p.region().sample(&mut rng);
        let v = p.subgradient(&x)?;
        let d = linalg::sub(&y, &x);
        let estimate = p.value(&x) + linalg::dot(&v, &d) - 0.5 * p.rho() * linalg::norm_sq(&d);
        tracker.observe(estimate - p.value(&y), || {
            let mut w = x.clone();
            w.extend_from_slice(&y);
            w
        });
    }
    Ok(tracker.finish())
}

/// `f = ξ − (ρ/2)‖·‖²` with `ξ = f + (ρ/2)‖·‖²` convex.
#[derive(Debug, Clone)]
pub struct DcDecomposition {
    problem: Problem,
    rho: f64,
}

pub fn dc_decomposition(p: &Problem) -> DcDecomposition {
    DcDecomposition {
        problem: p.clone(),
        rho: p.rho(),
    }
}

impl DcDecomposition {
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Convex part `ξ(x) = f(x) + (ρ/2)‖x‖²`.
    pub fn xi(&self, x: &[f64]) -> f64 {
        self.problem.value(x) + 0.5 * self.rho * linalg::norm_sq(x)
    }

    /// `ξ(x) − (ρ/2)‖x‖²`, which equals `f(x)` up to rounding.
    pub fn reconstruct(&self, x: &[f64]) -> f64 {
        self.xi(x) - 0.5 * self.rho * linalg::norm_sq(x)
    }

    /// Sampled secant check that `ξ` is convex on the problem region.
    pub fn check_convexity(&self, samples: usize, seed: u64) -> Result<CheckReport> {
        check_secant(
            "dc_convexity",
            |x| self.xi(x),
            self.problem.region(),
            0.0,
            samples,
            seed,
        )
    }
}

/// `f(x) = max{2 − x², x²}` on `[−3, 3]`, ρ = 2, stationary at `x̄ = 1`.
///
/// `∂f(1) = [−2, 2]` contains 0, and since `λ⁻¹(x − 1) ∈ ∂f(1)` whenever
/// `|x − 1| ≤ 2λ`, the prox is `P_λf(x) = 1` on `B[1, 2λ]` (stated for
/// `λ ≤ 1/4`). At the kinks `x = ±1` the subgradient oracle returns 0.
pub fn make_example1() -> (Problem, StationaryPoint) {
    let value: ValueFn = Arc::new(|x: &[f64]| {
        let s = x[0] * x[0];
        f64::max(2.0 - s, s)
    });
    let subgradient: SubgradientFn = Arc::new(|x: &[f64]| {
        let s = x[0] * x[0];
        if s > 1.0 {
            vec![2.0 * x[0]]
        } else if s < 1.0 {
            vec![-2.0 * x[0]]
        } else {
            vec![0.0]
        }
    });
    let prox = AnalyticProx::new(
        Arc::new(|_lambda: f64, _x: &[f64]| vec![1.0]),
        Arc::new(|lambda: f64, x: &[f64]| {
            lambda > 0.0 && lambda <= 0.25 && libm::fabs(x[0] - 1.0) <= 2.0 * lambda
        }),
    );
    let problem = Problem::new(
        "example1",
        2.0,
        Region::interval(-3.0, 3.0),
        value,
        subgradient,
    )
    .expect("valid instance")
    .with_analytic_prox(prox)
    .with_lower_bound(1.0);
    let stationary = StationaryPoint {
        x_bar: vec![1.0],
        certified: true,
        min_value: Some(1.0),
    };
    (problem, stationary)
}

/// `f(x) = ½‖x − c‖²` on the box `c ± 10`.
///
/// Convex, so ρ = 0 is exact; the stored modulus is [`CONVEX_RHO_EFF`].
/// The prox is `(x + λc)/(1 + λ)` and `x̄ = c` is the global minimizer.
pub fn make_quadratic(c: &[f64]) -> (Problem, StationaryPoint) {
    let center = c.to_vec();
    let region = Region::Box {
        lower: c.iter().map(|v| v - 10.0).collect(),
        upper: c.iter().map(|v| v + 10.0).collect(),
    };
    let cv = center.clone();
    let value: ValueFn = Arc::new(move |x: &[f64]| 0.5 * linalg::dist_sq(x, &cv));
    let cs = center.clone();
    let subgradient: SubgradientFn = Arc::new(move |x: &[f64]| linalg::sub(x, &cs));
    let cp = center.clone();
    let prox = AnalyticProx::new(
        Arc::new(move |lambda: f64, x: &[f64]| {
            x.iter()
                .zip(&cp)
                .map(|(xi, ci)| (xi + lambda * ci) / (1.0 + lambda))
                .collect()
        }),
        Arc::new(|lambda: f64, _x: &[f64]| lambda > 0.0),
    );
    let problem = Problem::new("quadratic", CONVEX_RHO_EFF, region, value, subgradient)
        .expect("valid instance")
        .with_analytic_prox(prox)
        .with_lower_bound(0.0);
    let stationary = StationaryPoint {
        x_bar: center,
        certified: true,
        min_value: Some(0.0),
    };
    (problem, stationary)
}

/// `f(x) = |x² − 1|` on `[−3, 3]`, ρ = 2, stationary at `x̄ = 1`.
///
/// Composite of the convex Lipschitz `|·|` with the smooth `x² − 1`;
/// `f + x² = max{2x² − 1, 1}` is convex. `∂f(1) = [−2, 2]`; the oracle returns
/// 0 at `x = ±1`. No closed-form prox is attached.
pub fn make_abs_quadratic() -> (Problem, StationaryPoint) {
    let value: ValueFn = Arc::new(|x: &[f64]| libm::fabs(x[0] * x[0] - 1.0));
    let subgradient: SubgradientFn = Arc::new(|x: &[f64]| {
        let s = x[0] * x[0];
        if s > 1.0 {
            vec![2.0 * x[0]]
        } else if s < 1.0 {
            vec![-2.0 * x[0]]
        } else {
            vec![0.0]
        }
    });
    let problem = Problem::new(
        "abs-quadratic",
        2.0,
        Region::interval(-3.0, 3.0),
        value,
        subgradient,
    )
    .expect("valid instance")
    .with_lower_bound(0.0);
    let stationary = StationaryPoint {
        x_bar: vec![1.0],
        certified: true,
        min_value: Some(0.0),
    };
    (problem, stationary)
}

/// Looks up a zoo instance by id. `quadratic` is centered at the origin of
/// ℝ^`dimension`; the other instances are one-dimensional.
pub fn by_id(id: &str, dimension: usize) -> Result<(Problem, StationaryPoint)> {
    match id {
        "example1" | "abs-quadratic" if dimension != 1 => Err(Error::Configuration(
            alloc::format!("instance {id} is one-dimensional, got dimension {dimension}"),
        )),
        "example1" => Ok(make_example1()),
        "abs-quadratic" => Ok(make_abs_quadratic()),
        "quadratic" if dimension == 0 => Err(Error::Configuration(
            "quadratic instance needs dimension >= 1".into(),
        )),
        "quadratic" => Ok(make_quadratic(&vec![0.0; dimension])),
        other => Err(Error::Configuration(alloc::format!(
            "unknown problem id {other:?} (expected one of {ZOO_IDS:?})"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example1_values() {
        let (p, xs) = make_example1();
        assert_eq!(p.value(&[1.0]), 1.0);
        assert_eq!(p.value(&[0.0]), 2.0);
        assert_eq!(p.subgradient(&[1.0]).unwrap(), [0.0]);
        assert_eq!(p.rho(), 2.0);
        assert_eq!(xs.x_bar, [1.0]);
        assert!(xs.certified);
        assert_eq!(p.lower_bound(), 1.0);
        assert_eq!(p.value(&[3.5]), f64::INFINITY);
    }

    #[test]
    fn example1_declared_rho_passes() {
        let (p, _) = make_example1();
        let r = check_weak_convexity(&p, 10_000, 3).unwrap();
        assert!(r.passed, "{r:?}");
        let r = check_quadratic_lower_estimator(&p, 10_000, 3).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn example1_with_rho_one_fails() {
        let (p, _) = make_example1();
        let r = check_weak_convexity(&p.with_rho(1.0), 10_000, 3).unwrap();
        assert!(!r.passed);
        assert_eq!(r.witness.len(), 3);
        // the witness really violates the inequality
        let (x, y, a) = (r.witness[0], r.witness[1], r.witness[2]);
        let f = |t: f64| f64::max(2.0 - t * t, t * t);
        let gap = f(a * x + (1.0 - a) * y)
            - (a * f(x) + (1.0 - a) * f(y) + 0.5 * a * (1.0 - a) * (x - y) * (x - y));
        assert!((gap - r.worst_violation).abs() < 1e-12);
        assert!(gap > 0.0);
    }

    #[test]
    fn secant_violation_at_symmetric_triple() {
        // x = −1, y = 1, α = ½: f(0) = 2 > 1 + ρ/2 for ρ = 1
        let f = |t: f64| f64::max(2.0 - t * t, t * t);
        let rhs = 0.5 * f(-1.0) + 0.5 * f(1.0) + 0.5 * 1.0 * 0.25 * 4.0;
        assert!(f(0.0) > rhs);
    }

    #[test]
    fn affine_lower_estimator_is_tight() {
        let p = Problem::new(
            "affine",
            0.0,
            Region::Box {
                lower: vec![-1.0, -1.0],
                upper: vec![1.0, 1.0],
            },
            Arc::new(|x: &[f64]| 2.0 * x[0] - x[1] + 0.5),
            Arc::new(|_: &[f64]| vec![2.0, -1.0]),
        )
        .unwrap();
        let r = check_quadratic_lower_estimator(&p, 1000, 1).unwrap();
        assert!(r.passed);
        assert!(r.worst_violation.abs() < 1e-14);
    }

    #[test]
    fn concave_quadratic_fails_lower_estimator() {
        let p = Problem::new(
            "neg-sq",
            1.0,
            Region::interval(-2.0, 2.0),
            Arc::new(|x: &[f64]| -x[0] * x[0]),
            Arc::new(|x: &[f64]| vec![-2.0 * x[0]]),
        )
        .unwrap();
        // x = 0, y = 2: −4 ≥ 0 + 0 − 2 is false
        let v = p.subgradient(&[0.0]).unwrap();
        assert!(p.value(&[2.0]) < p.value(&[0.0]) + v[0] * 2.0 - 0.5 * 4.0);
        let r = check_quadratic_lower_estimator(&p, 1000, 1).unwrap();
        assert!(!r.passed);
    }

    #[test]
    fn half_norm_squared_is_convex() {
        let (p, _) = make_quadratic(&[0.0, 0.0]);
        let r = check_weak_convexity(&p.with_rho(0.0), 2000, 9).unwrap();
        assert!(r.passed);
    }

    #[test]
    fn non_finite_subgradient_is_an_instance_error() {
        let p = Problem::new(
            "bad",
            0.0,
            Region::interval(-1.0, 1.0),
            Arc::new(|_: &[f64]| 0.0),
            Arc::new(|_: &[f64]| vec![f64::NAN]),
        )
        .unwrap();
        assert!(matches!(
            check_quadratic_lower_estimator(&p, 10, 0),
            Err(Error::Instance(_))
        ));
    }

    #[test]
    fn degenerate_region_is_rejected() {
        assert!(matches!(
            Region::interval(1.0, 1.0).validate(),
            Err(Error::Configuration(_))
        ));
        let (p, _) = make_example1();
        assert!(matches!(
            check_weak_convexity(&p, 0, 0),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn dc_decomposition_values() {
        let (p, _) = make_example1();
        let dc = dc_decomposition(&p);
        assert_eq!(dc.rho(), 2.0);
        assert_eq!(dc.xi(&[0.0]), 2.0);
        assert_eq!(dc.xi(&[1.0]), 2.0);
        assert_eq!(dc.xi(&[2.0]), 8.0);
        assert_eq!(dc.reconstruct(&[1.5]), 2.25);
        assert!(dc.check_convexity(5000, 4).unwrap().passed);
    }

    #[test]
    fn dc_of_convex_is_identity() {
        let (p, _) = make_quadratic(&[0.3]);
        let p = p.with_rho(0.0);
        let dc = dc_decomposition(&p);
        for x in [-1.0, 0.0, 0.3, 2.5] {
            assert_eq!(dc.xi(&[x]), p.value(&[x]));
        }
    }

    #[test]
    fn quadratic_instance() {
        let (p, xs) = make_quadratic(&[1.0, -2.0]);
        let c = [1.0, -2.0];
        assert_eq!(p.value(&c), 0.0);
        assert_eq!(p.subgradient(&c).unwrap(), [0.0, 0.0]);
        let y = p.analytic_prox().unwrap().eval(1.0, &[2.0, -4.0]);
        assert_eq!(y, [1.5, -3.0]);
        assert_eq!(p.rho(), CONVEX_RHO_EFF);
        assert_eq!(xs.x_bar, c);
    }

    #[test]
    fn abs_quadratic_instance() {
        let (p, _) = make_abs_quadratic();
        assert_eq!(p.value(&[1.0]), 0.0);
        assert_eq!(p.value(&[0.0]), 1.0);
        assert!(p.analytic_prox().is_none());
    }

    #[test]
    fn lookup_by_id() {
        for id in ZOO_IDS {
            let (p, _) = by_id(id, 1).unwrap();
            assert_eq!(p.name(), id);
        }
        assert_eq!(by_id("quadratic", 3).unwrap().0.dimension(), 3);
        assert!(by_id("example1", 2).is_err());
        assert!(by_id("rosenbrock", 1).is_err());
    }
}

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Outcome of a sampled (empirical) check.
///
/// `worst_violation` is the largest observed value of `lhs − rhs` for the
/// inequality under test; `passed` holds exactly when it is at most `slack`.
/// `witness` is the flattened input that produced the worst violation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub worst_violation: f64,
    pub slack: f64,
    pub witness: Vec<f64>,
    pub samples_used: usize,
    /// False when the check is conditional and its premise did not hold
    /// (the report is then vacuously passing).
    pub premise_met: bool,
    pub note: String,
}

impl CheckReport {
    pub(crate) fn tracker(name: &str, slack: f64) -> ViolationTracker {
        ViolationTracker {
            name: name.into(),
            slack,
            worst: f64::NEG_INFINITY,
            witness: Vec::new(),
            samples: 0,
            note: String::new(),
        }
    }
}

/// Accumulates the worst violation over a sampled check.
pub(crate) struct ViolationTracker {
    name: String,
    slack: f64,
    worst: f64,
    witness: Vec<f64>,
    samples: usize,
    note: String,
}

impl ViolationTracker {
    pub fn observe(&mut self, violation: f64, witness: impl FnOnce() -> Vec<f64>) {
        self.samples += 1;
        // NaN counts as a violation
        if violation > self.worst || violation.is_nan() && !self.worst.is_nan() {
            self.worst = violation;
            self.witness = witness();
        }
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.note = note.into();
    }

    pub fn finish(self) -> CheckReport {
        let worst = if self.samples == 0 { 0.0 } else { self.worst };
        CheckReport {
            name: self.name,
            passed: worst <= self.slack,
            worst_violation: worst,
            slack: self.slack,
            witness: self.witness,
            samples_used: self.samples,
            premise_met: true,
            note: self.note,
        }
    }
}

/// Deterministic RNG stream for the check called `name`.
///
/// All checks share the run seed but draw from distinct ChaCha streams keyed
/// by a hash of their name, so adding a check never shifts another check's
/// samples.
pub fn child_rng(seed: u64, name: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(name.as_bytes()));
    rng
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Uniform sample from the closed Euclidean ball `B[center, radius]`.
pub(crate) fn sample_ball<R: Rng>(rng: &mut R, center: &[f64], radius: f64) -> Vec<f64> {
    let n = center.len();
    if n == 1 {
        return alloc::vec![center[0] + radius * rng.random_range(-1.0..=1.0)];
    }
    // Gaussian direction (Box-Muller) and radius u^(1/n)
    let mut dir: Vec<f64> = (0..n).map(|_| standard_normal(rng)).collect();
    let len = crate::linalg::norm(&dir);
    if len == 0.0 {
        return center.to_vec();
    }
    let r = radius * libm::pow(rng.random::<f64>(), 1.0 / n as f64);
    for d in &mut dir {
        *d *= r / len;
    }
    crate::linalg::axpy(center, 1.0, &dir)
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn child_streams_are_reproducible_and_distinct() {
        let a: u64 = child_rng(7, "fejer").random();
        let b: u64 = child_rng(7, "fejer").random();
        let c: u64 = child_rng(7, "summability").random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn ball_samples_stay_inside() {
        let mut rng = child_rng(1, "ball");
        for n in 1..4 {
            let center = alloc::vec![0.5; n];
            for _ in 0..500 {
                let p = sample_ball(&mut rng, &center, 0.3);
                assert!(crate::linalg::dist(&p, &center) <= 0.3 + 1e-15);
            }
        }
    }

    #[test]
    fn tracker_reports_worst() {
        let mut t = CheckReport::tracker("t", 0.0);
        t.observe(-1.0, || alloc::vec![1.0]);
        t.observe(0.5, || alloc::vec![2.0]);
        t.observe(0.1, || alloc::vec![3.0]);
        let r = t.finish();
        assert!(!r.passed);
        assert_eq!(r.worst_violation, 0.5);
        assert_eq!(r.witness, [2.0]);
        assert_eq!(r.samples_used, 3);
    }
}

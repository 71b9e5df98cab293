//! JSON experiment configuration.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use weakprox::algorithm::{LocalityConfig, RunOptions, Schedule, StepSequence};
use weakprox::fixedpoint::{self, SigmaPolicy};
use weakprox::linalg;
use weakprox::problems::{self, Problem, StationaryPoint};

use crate::HarnessError;

/// A step parameter given inline (constant or list) or as a path to a file of
/// whitespace- or comma-separated values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SequenceSource {
    Constant(f64),
    List(Vec<f64>),
    File(PathBuf),
}

impl SequenceSource {
    /// Parses a CLI argument: a number, or otherwise a file path.
    pub fn from_arg(s: &str) -> Self {
        match s.trim().parse::<f64>() {
            Ok(v) => SequenceSource::Constant(v),
            Err(_) => SequenceSource::File(PathBuf::from(s)),
        }
    }

    fn resolve(&self, base: Option<&Path>) -> Result<StepSequence, HarnessError> {
        match self {
            SequenceSource::Constant(v) => Ok(StepSequence::Constant(*v)),
            SequenceSource::List(v) => Ok(StepSequence::Explicit(v.clone())),
            SequenceSource::File(p) => {
                let path = match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.clone(),
                };
                Ok(StepSequence::Explicit(read_sequence(&path)?))
            }
        }
    }
}

pub fn read_sequence(path: &Path) -> Result<Vec<f64>, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut values = Vec::new();
    for (i, token) in text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .enumerate()
    {
        let v = token.parse::<f64>().map_err(|_| {
            HarnessError::Invalid(format!(
                "{}: entry {} ({token:?}) is not a number",
                path.display(),
                i + 1
            ))
        })?;
        values.push(v);
    }
    if values.is_empty() {
        return Err(HarnessError::Invalid(format!(
            "{}: sequence file is empty",
            path.display()
        )));
    }
    Ok(values)
}

fn default_inner_tol() -> f64 {
    weakprox::algorithm::DEFAULT_INNER_TOL
}

fn default_max_iter() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: String,
    /// Only used by the `quadratic` instance; defaults to `x0.len()`.
    #[serde(default)]
    pub dimension: Option<usize>,
    pub x0: Vec<f64>,
    pub gamma: SequenceSource,
    pub lambda: SequenceSource,
    pub lambda_bar: f64,
    /// Defaults to the instance's stationary point.
    #[serde(default)]
    pub x_bar: Option<Vec<f64>>,
    pub delta: f64,
    /// Explicit relaxation σ; `1/L²` when absent.
    #[serde(default)]
    pub sigma: Option<f64>,
    pub eps: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_inner_tol")]
    pub inner_tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Directory that relative sequence files are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn sigma_policy(&self) -> SigmaPolicy {
        match self.sigma {
            Some(s) => SigmaPolicy::Explicit(s),
            None => SigmaPolicy::InverseLipschitzSquared,
        }
    }

    /// Resolves files and checks every precondition of a run.
    pub fn resolve(&self) -> Result<Experiment, HarnessError> {
        let dimension = self.dimension.unwrap_or(self.x0.len());
        let (problem, stationary) = problems::by_id(&self.problem, dimension)?;
        if self.x0.len() != problem.dimension() {
            return Err(HarnessError::Invalid(format!(
                "x0 has {} coordinates, problem {} has dimension {}",
                self.x0.len(),
                self.problem,
                problem.dimension()
            )));
        }
        let base = self.base_dir.as_deref();
        let schedule = Schedule {
            gamma: self.gamma.resolve(base)?,
            lambda: self.lambda.resolve(base)?,
            lambda_bar: self.lambda_bar,
            rho: problem.rho(),
        };
        schedule.check(self.max_iter)?;
        let policy = self.sigma_policy();
        // surfaces σ and δ errors before the β derivation below
        let (g0, l0) = schedule.at(0)?;
        fixedpoint::derive_constants(g0, l0, schedule.rho, self.delta, policy)?;
        let x_bar = self
            .x_bar
            .clone()
            .unwrap_or_else(|| stationary.x_bar.clone());
        if x_bar.len() != problem.dimension() {
            return Err(HarnessError::Invalid(format!(
                "x_bar has {} coordinates, expected {}",
                x_bar.len(),
                problem.dimension()
            )));
        }
        let locality = LocalityConfig::derive(x_bar, self.delta, &schedule, self.max_iter, policy)?;
        let d = linalg::dist(&self.x0, &locality.x_bar);
        if d > locality.beta {
            return Err(HarnessError::Invalid(format!(
                "x0 ∈ B[x̄, β] is required: ‖x0 − x̄‖ = {d:e} exceeds β = {:e}",
                locality.beta
            )));
        }
        if !(self.eps > 0.0) {
            return Err(HarnessError::Invalid(format!(
                "ε > 0 is required, got {}",
                self.eps
            )));
        }
        let mut options = RunOptions::new(self.eps, self.max_iter);
        options.inner_tol = self.inner_tol;
        options.sigma_policy = policy;
        options.f_star = stationary.min_value;
        Ok(Experiment {
            problem,
            stationary,
            x0: self.x0.clone(),
            schedule,
            locality,
            options,
        })
    }
}

/// A validated configuration, ready to run.
pub struct Experiment {
    pub problem: Problem,
    pub stationary: StationaryPoint,
    pub x0: Vec<f64>,
    pub schedule: Schedule,
    pub locality: LocalityConfig,
    pub options: RunOptions,
}

impl Experiment {
    pub fn run(&self) -> Result<weakprox::algorithm::RunReport, HarnessError> {
        Ok(weakprox::algorithm::run(
            &self.problem,
            &self.x0,
            &self.schedule,
            &self.locality,
            &self.options,
        )?)
    }
}

/// Reads a configuration and validates it.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut config = parse_config(&text)?;
    config.base_dir = path.parent().map(Path::to_path_buf);
    config.resolve()?;
    Ok(config)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, HarnessError> {
    serde_json::from_str(text).map_err(|e| HarnessError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "problem": "example1",
        "x0": [1.05],
        "gamma": 0.1,
        "lambda": 0.25,
        "lambda_bar": 0.15,
        "delta": 0.2,
        "eps": 1e-8
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.inner_tol, 1e-10);
        assert_eq!(c.sigma_policy(), SigmaPolicy::InverseLipschitzSquared);
        assert_eq!(c.max_iter, 1000);
        let e = c.resolve().unwrap();
        assert_eq!(e.locality.x_bar, vec![1.0]);
        assert_eq!(e.options.f_star, Some(1.0));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("\"eps\"", "\"epsilon\": 1, \"eps\"");
        match parse_config(&text) {
            Err(HarnessError::Parse { line, .. }) => assert!(line >= 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn lambda_above_inverse_rho_cites_the_inequality() {
        let text = MINIMAL.replace("\"lambda\": 0.25", "\"lambda\": 0.6");
        let err = parse_config(&text)
            .unwrap()
            .resolve()
            .err()
            .expect("rejected");
        assert!(err.to_string().contains("λ < 1/ρ"), "{err}");
    }

    #[test]
    fn sigma_above_bound_cites_the_inequality() {
        // L = 64/15 for γ = 0.25, λ = 0.6, ρ = 1; example1 has ρ = 2 so use the
        // constants directly
        let err = fixedpoint::derive_constants(0.25, 0.6, 1.0, 1.0, SigmaPolicy::Explicit(0.2))
            .unwrap_err();
        let msg = HarnessError::from(err).to_string();
        assert!(
            msg.contains("σ < 2/L²") && msg.contains("0.109863"),
            "{msg}"
        );
        let text = MINIMAL.replace("\"delta\"", "\"sigma\": 0.2, \"delta\"");
        let err = parse_config(&text)
            .unwrap()
            .resolve()
            .err()
            .expect("rejected");
        assert!(err.to_string().contains("σ < 2/L²"), "{err}");
    }

    #[test]
    fn start_outside_beta_is_reported() {
        let text = MINIMAL.replace("[1.05]", "[1.3]");
        let err = parse_config(&text)
            .unwrap()
            .resolve()
            .err()
            .expect("rejected");
        assert!(err.to_string().contains("x0 ∈ B[x̄, β]"), "{err}");
    }

    #[test]
    fn sequence_arguments() {
        assert_eq!(
            SequenceSource::from_arg("0.25"),
            SequenceSource::Constant(0.25)
        );
        assert_eq!(
            SequenceSource::from_arg("steps.txt"),
            SequenceSource::File(PathBuf::from("steps.txt"))
        );
    }
}

//! ε-sweeps comparing the proximal point method with a subgradient baseline.

use std::io::Write;
use std::thread;

use serde::Serialize;
use weakprox::algorithm::{self, RunOptions, StepRule, Termination};

use crate::config::Experiment;
use crate::HarnessError;

pub const DEFAULT_BASELINE_STEPS: usize = 200_000;
pub const DEFAULT_BASELINE_RULE: StepRule = StepRule::Diminishing(0.1);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub eps: f64,
    #[serde(rename = "T_prox")]
    pub t_prox: usize,
    #[serde(rename = "bound_T")]
    pub bound_t: Option<f64>,
    #[serde(rename = "T_subgrad")]
    pub t_subgrad: usize,
    pub f_final_prox: f64,
    pub f_final_subgrad: f64,
    #[serde(skip)]
    pub prox_termination: Termination,
}

fn bench_row(
    exp: &Experiment,
    eps: f64,
    rule: StepRule,
    baseline_steps: usize,
) -> Result<BenchRow, HarnessError> {
    let options = RunOptions {
        eps,
        ..exp.options.clone()
    };
    let prox = algorithm::run(
        &exp.problem,
        &exp.x0,
        &exp.schedule,
        &exp.locality,
        &options,
    )?;
    let baseline = algorithm::subgradient_baseline(
        &exp.problem,
        &exp.x0,
        baseline_steps,
        rule,
        eps,
        options.f_star,
    )?;
    Ok(BenchRow {
        eps,
        t_prox: prox.iterations,
        bound_t: prox.complexity_bound,
        t_subgrad: baseline.iterations,
        f_final_prox: prox.f_final,
        f_final_subgrad: baseline.f_final,
        prox_termination: prox.termination,
    })
}

/// One row per ε, computed concurrently and returned in input order.
pub fn bench(
    exp: &Experiment,
    eps_list: &[f64],
    rule: StepRule,
    baseline_steps: usize,
) -> Result<Vec<BenchRow>, HarnessError> {
    if let Some(bad) = eps_list.iter().find(|e| !(**e > 0.0)) {
        return Err(HarnessError::Invalid(format!(
            "ε > 0 is required, got {bad}"
        )));
    }
    exp.schedule.check(exp.options.max_iter)?;
    thread::scope(|s| {
        let handles: Vec<_> = eps_list
            .iter()
            .map(|&eps| s.spawn(move || bench_row(exp, eps, rule, baseline_steps)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("bench worker panicked"))
            .collect()
    })
}

pub fn write_bench<W: Write>(rows: &[BenchRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn experiment(problem: &str, x0: f64) -> Experiment {
        let text = format!(
            r#"{{"problem": "{problem}", "x0": [{x0}], "gamma": 0.1, "lambda": 0.25,
                "lambda_bar": 0.15, "delta": 0.2, "eps": 1e-3}}"#
        );
        parse_config(&text).unwrap().resolve().unwrap()
    }

    #[test]
    fn example1_rows_respect_bound() {
        let exp = experiment("example1", 1.05);
        let rows = bench(&exp, &[1e-1, 1e-2, 1e-3], DEFAULT_BASELINE_RULE, 100_000).unwrap();
        assert_eq!(
            rows.iter().map(|r| r.eps).collect::<Vec<_>>(),
            [1e-1, 1e-2, 1e-3]
        );
        for r in &rows {
            assert!((r.t_prox as f64) < r.bound_t.unwrap());
            assert_eq!(r.prox_termination, Termination::StepBelowEps);
        }
        // from the same start the baseline needs more steps at ε = 1e−2
        assert!(rows[1].t_subgrad > rows[1].t_prox);
    }

    #[test]
    fn stationary_start_takes_one_step() {
        let exp = experiment("example1", 1.0);
        let rows = bench(&exp, &[1e-1, 1e-2, 1e-3], DEFAULT_BASELINE_RULE, 10).unwrap();
        assert!(rows.iter().all(|r| r.t_prox == 1));
    }

    #[test]
    fn csv_header() {
        let exp = experiment("example1", 1.0);
        let rows = bench(&exp, &[1e-1], DEFAULT_BASELINE_RULE, 10).unwrap();
        let mut buf = Vec::new();
        write_bench(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "eps,T_prox,bound_T,T_subgrad,f_final_prox,f_final_subgrad"
        );
    }
}

//! CSV traces and JSON summaries.

use std::io::Write;

use serde::Serialize;
use weakprox::algorithm::{RunReport, Termination};

use crate::HarnessError;

pub const TRACE_COLUMNS: [&str; 10] = [
    "k",
    "x_k",
    "f_x_next",
    "step_norm",
    "inner_iterations",
    "inner_residual",
    "descent_gap",
    "fejer_ok",
    "gamma_k",
    "lambda_k",
];

fn join_point(x: &[f64]) -> String {
    x.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

pub fn write_trace<W: Write>(report: &RunReport, out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_COLUMNS)?;
    for r in &report.records {
        w.write_record([
            r.k.to_string(),
            join_point(&r.x_k),
            r.f_x_next.to_string(),
            r.step_norm.to_string(),
            r.inner_iterations.to_string(),
            r.inner_residual.to_string(),
            r.descent_gap.to_string(),
            r.fejer_ok.to_string(),
            r.gamma_k.to_string(),
            r.lambda_k.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub termination: Termination,
    #[serde(rename = "T")]
    pub t: usize,
    pub sum_sq_steps: f64,
    pub complexity_bound: Option<f64>,
    pub x_final: Vec<f64>,
}

impl From<&RunReport> for RunSummary {
    fn from(r: &RunReport) -> Self {
        Self {
            termination: r.termination,
            t: r.iterations,
            sum_sq_steps: r.sum_sq_steps,
            complexity_bound: r.complexity_bound,
            x_final: r.x_final.clone(),
        }
    }
}

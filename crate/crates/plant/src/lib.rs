//! Discrete-time model of the high-voltage hardware and a bounded search for
//! violations of its convergence property.
//!
//! Everything is generic over the scalar type; the aliases fix it to `f64`.

mod model;
mod monitor;
mod search;
mod settle;

use std::io::Write;

pub use model::{Discrete, PlantModel, State};
pub use monitor::Monitor;
pub use search::{
    exhaustive_programs, find_violation, programs, random_programs, search, simulate, InputProgram, Sample,
    SearchConfig, SearchReport, Verdict,
};
pub use settle::{estimate_settling_time, settling_time};

pub type Real = f64;
pub type Plant = PlantModel<Real>;
pub type PHwMonitor = Monitor<Real>;

#[derive(Debug, thiserror::Error)]
pub enum PlantError {
    #[error("invalid plant model: {0}")]
    InvalidModel(String),
    #[error("step {step} s is too large for the plant's time constants")]
    StepTooLarge { step: f64 },
    #[error("output does not settle within the simulation horizon")]
    NonConvergence,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Writes samples as `t,u,y,E` rows.
pub fn write_csv(out: impl Write, samples: &[Sample]) -> Result<(), PlantError> {
    let mut w = csv::Writer::from_writer(out);
    for s in samples {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

/// `{result, steps, elapsed}` summary of a search.
pub fn summary_json(report: &SearchReport) -> serde_json::Value {
    let steps = match report.verdict {
        Verdict::ValidWithinBound { steps } | Verdict::Violation { step: steps, .. } => steps,
    };
    let result = if report.verdict.is_valid() { "valid_within_bound" } else { "violation" };
    let mut v = serde_json::json!({
        "result": result,
        "steps": steps,
        "programs": report.programs,
        "elapsed": report.elapsed,
    });
    if let (Verdict::Violation { sample, .. }, Some((i, p))) = (&report.verdict, &report.program) {
        v["violation"] = serde_json::json!({ "program": i, "inputs": p.values, "sample": sample });
    }
    v
}

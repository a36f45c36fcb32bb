use std::time::Instant;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::model::{PlantModel, State};
use crate::monitor::Monitor;
use crate::PlantError;

/// Discrete input values, held for `dwell` seconds each. The last value is
/// held forever.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InputProgram {
    pub values: Vec<u8>,
}

impl InputProgram {
    pub fn constant(v: u8) -> Self {
        InputProgram { values: vec![v] }
    }

    /// Input value at step `k`.
    pub fn at(&self, k: u64, steps_per_dwell: u64) -> u8 {
        let i = (k / steps_per_dwell.max(1)) as usize;
        self.values[i.min(self.values.len() - 1)]
    }
}

/// Every sequence of `len` values over `0..=max_value`.
pub fn exhaustive_programs(len: usize, max_value: u8) -> Vec<InputProgram> {
    let mut out = vec![InputProgram { values: Vec::new() }];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..=max_value).map(move |v| {
                    let mut values = p.values.clone();
                    values.push(v);
                    InputProgram { values }
                })
            })
            .collect();
    }
    out
}

pub fn random_programs(count: usize, len: usize, max_value: u8, seed: u64) -> Vec<InputProgram> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| InputProgram { values: (0..len).map(|_| rng.gen_range(0..=max_value)).collect() })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub u: f64,
    pub y: f64,
    #[serde(rename = "E")]
    pub e: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Verdict {
    ValidWithinBound { steps: u64 },
    Violation { step: u64, sample: Sample },
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::ValidWithinBound { .. })
    }
}

/// Simulates `program` from rest for `max_steps` steps, checking the monitor
/// after every step. `record` receives every `every`-th sample and the
/// violating one.
pub fn simulate<T: Float>(
    model: &PlantModel<T>,
    monitor: &Monitor<T>,
    program: &InputProgram,
    dwell: T,
    max_steps: u64,
    every: u64,
    mut record: impl FnMut(Sample),
) -> Result<Verdict, PlantError> {
    let d = model.discretize()?;
    let per_dwell = (dwell / model.step).round().to_u64().unwrap_or(u64::MAX);
    // whole steps, so that 0.3668 s is exactly 366800 steps of 1 us
    let settle = (monitor.settle / model.step).round().to_u64().unwrap_or(u64::MAX);
    let volts = |v: u8| T::from(v).unwrap() * model.input_gain;
    let mut s = State::rest();
    let mut prev = T::zero();
    let mut changed_at = 0u64;
    let sample = |k: u64, u: T, y: T| Sample {
        t: (T::from(k).unwrap() * model.step).to_f64().unwrap(),
        u: u.to_f64().unwrap(),
        y: y.to_f64().unwrap(),
        e: monitor.error(u, y).to_f64().unwrap(),
    };
    for k in 0..max_steps {
        let u = volts(program.at(k, per_dwell));
        if u != prev {
            changed_at = k;
            prev = u;
        }
        s = d.step(s, u);
        // the state now describes time (k + 1) * step
        let y = s.output();
        let bad = k + 1 - changed_at >= settle && monitor.error(u, y) > T::zero();
        if bad || (every > 0 && (k + 1) % every == 0) {
            record(sample(k + 1, u, y));
        }
        if bad {
            return Ok(Verdict::Violation { step: k + 1, sample: sample(k + 1, u, y) });
        }
    }
    Ok(Verdict::ValidWithinBound { steps: max_steps })
}

pub fn find_violation<T: Float>(
    model: &PlantModel<T>,
    monitor: &Monitor<T>,
    program: &InputProgram,
    dwell: T,
    max_steps: u64,
) -> Result<Verdict, PlantError> {
    simulate(model, monitor, program, dwell, max_steps, 0, |_| {})
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchConfig {
    pub max_steps: u64,
    /// Seconds between input changes.
    pub dwell: f64,
    /// Length of the exhaustively enumerated programs.
    pub exhaustive_len: usize,
    pub random_programs: usize,
    pub random_len: usize,
    pub seed: u64,
    /// Largest discrete input value.
    pub max_value: u8,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_steps: 1_000_000,
            dwell: 1.0,
            exhaustive_len: 3,
            random_programs: 16,
            random_len: 8,
            seed: 0,
            max_value: 2,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchReport {
    #[serde(flatten)]
    pub verdict: Verdict,
    pub programs: usize,
    /// Index and values of the violating program.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub program: Option<(usize, InputProgram)>,
    pub elapsed: f64,
}

pub fn programs(cfg: &SearchConfig) -> Vec<InputProgram> {
    let mut all = exhaustive_programs(cfg.exhaustive_len, cfg.max_value);
    all.extend(random_programs(cfg.random_programs, cfg.random_len, cfg.max_value, cfg.seed));
    all
}

/// Runs every program; the violation of the lowest-numbered program wins.
pub fn search<T: Float + Send + Sync>(
    model: &PlantModel<T>,
    monitor: &Monitor<T>,
    cfg: &SearchConfig,
) -> Result<SearchReport, PlantError> {
    let start = Instant::now();
    let progs = programs(cfg);
    let dwell = T::from(cfg.dwell).unwrap();
    let verdicts: Vec<Verdict> = progs
        .par_iter()
        .map(|p| find_violation(model, monitor, p, dwell, cfg.max_steps))
        .collect::<Result<_, _>>()?;
    let first = verdicts.iter().position(|v| !v.is_valid());
    let verdict = match first {
        Some(i) => verdicts[i].clone(),
        None => Verdict::ValidWithinBound { steps: cfg.max_steps },
    };
    Ok(SearchReport {
        verdict,
        programs: progs.len(),
        program: first.map(|i| (i, progs[i].clone())),
        elapsed: start.elapsed().as_secs_f64(),
    })
}

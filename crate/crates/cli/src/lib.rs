//! `hvc`: checks the controller model's assertions, searches the plant for
//! convergence violations and simulates the plant.
//!
//! Exit status: 0 when everything passes, 1 on a failed assertion or a plant
//! violation, 2 when a state bound was exceeded, 3 on usage, configuration
//! or I/O errors.

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand};
use hvc_core::check::{confirm_counterexample, Counterexample, Outcome, Verdict};
use hvc_core::lts::ExplorationLimits;
use hvc_core::report;
use hvc_model::{build, Instantiation, Mutant, Profile, TimeScale, ASSERTIONS};
use hvc_plant::{InputProgram, PHwMonitor, Plant, SearchConfig};

use crate::config::Config;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_BOUND: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "hvc", version, about = "Verification of the high-voltage controller model and plant")]
pub struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Time scale of the model: `desk` (5 ms per tock) or `paper` (2 ms).
    #[arg(long, global = true)]
    pub profile: Option<String>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write a JSON report here.
    #[arg(long, global = true)]
    pub json: Option<PathBuf>,
    /// Write a `t,u,y,E` plant trace here.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check assertions by name, or `all`.
    Check {
        names: Vec<String>,
        #[arg(long)]
        max_states: Option<usize>,
        /// Per-compilation time budget in seconds.
        #[arg(long)]
        wall_clock: Option<u64>,
        /// A mutant name, or a script whose definitions replace the model's.
        #[arg(long)]
        model: Option<String>,
        /// Directory for counterexample files.
        #[arg(long)]
        counterexamples: Option<PathBuf>,
    },
    /// Bounded search for violations of the plant convergence property.
    #[command(name = "findviolation")]
    FindViolation {
        #[arg(long)]
        max_steps: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        dwell: Option<f64>,
        #[arg(long)]
        band: Option<f64>,
    },
    /// Simulate the plant under an input program.
    SimPlant {
        /// Input values in {0, 1, 2}, one per dwell period, e.g. `2,0`.
        #[arg(long, default_value = "2")]
        input: String,
        #[arg(long)]
        max_steps: Option<u64>,
        #[arg(long)]
        dwell: Option<f64>,
        #[arg(long)]
        band: Option<f64>,
        /// Record every n-th step.
        #[arg(long)]
        every: Option<u64>,
    },
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

/// Runs the command line `args` (program name first), writing the report to
/// `out`. Returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let profile: Profile = cli.profile.clone().or(cfg.profile.clone()).unwrap_or_else(|| "desk".into()).parse()?;
    let threads = cli.threads.or(cfg.threads).unwrap_or(0);
    let json = cli.json.clone().or(cfg.output.json.clone());
    let csv = cli.csv.clone().or(cfg.output.csv.clone());
    match cli.command {
        Command::Check { names, max_states, wall_clock, model, counterexamples } => {
            let names = if names.is_empty() { cfg.check.assertions.clone().unwrap_or_default() } else { names };
            let limits = ExplorationLimits {
                max_states: max_states.or(cfg.check.max_states).unwrap_or(ExplorationLimits::default().max_states),
                wall_clock: wall_clock.or(cfg.check.wall_clock_secs).map(Duration::from_secs),
                threads,
            };
            let run = CheckRun {
                profile,
                names,
                limits,
                model: model.or(cfg.check.model.clone()),
                cex_dir: counterexamples.or(cfg.check.counterexamples.clone()).unwrap_or_else(|| "counterexamples".into()),
                json,
            };
            check(&run, out)
        }
        Command::FindViolation { max_steps, seed, dwell, band } => {
            let d = SearchConfig::default();
            let p = &cfg.plant;
            let search = SearchConfig {
                max_steps: max_steps.or(p.max_steps).unwrap_or(d.max_steps),
                dwell: dwell.or(p.dwell).unwrap_or(d.dwell),
                exhaustive_len: p.exhaustive_len.unwrap_or(d.exhaustive_len),
                random_programs: p.random_programs.unwrap_or(d.random_programs),
                random_len: p.random_len.unwrap_or(d.random_len),
                seed: seed.or(p.seed).unwrap_or(d.seed),
                max_value: d.max_value,
            };
            let every = p.sample_every.unwrap_or(1000);
            find_violation(&search, band, every, threads, json, csv, out)
        }
        Command::SimPlant { input, max_steps, dwell, band, every } => {
            let p = &cfg.plant;
            let values = input
                .split(',')
                .map(|v| v.trim().parse::<u8>().ok().filter(|v| *v <= 2))
                .collect::<Option<Vec<u8>>>()
                .ok_or_else(|| Failure(format!("bad input program `{input}`; expected values in 0..2")))?;
            let sim = SimRun {
                program: InputProgram { values },
                max_steps: max_steps.or(p.max_steps).unwrap_or(1_000_000),
                dwell: dwell.or(p.dwell).unwrap_or(1.0),
                band,
                every: every.or(p.sample_every).unwrap_or(1000).max(1),
            };
            sim_plant(&sim, json, csv, out)
        }
    }
}

struct CheckRun {
    profile: Profile,
    names: Vec<String>,
    limits: ExplorationLimits,
    model: Option<String>,
    cex_dir: PathBuf,
    json: Option<PathBuf>,
}

/// Loads a model variant: a file on disk, or one of the bundled mutants.
fn load_variant(spec: &str) -> Result<(String, String), Failure> {
    let path = Path::new(spec);
    if path.is_file() {
        let name = path.file_stem().map_or(spec.to_string(), |s| s.to_string_lossy().into_owned());
        return Ok((name, std::fs::read_to_string(path)?));
    }
    let m = Mutant::from_name(spec).ok_or_else(|| {
        let known: Vec<&str> = Mutant::ALL.iter().map(|m| m.name()).collect();
        Failure(format!("no model file or mutant named `{spec}` (mutants: {})", known.join(", ")))
    })?;
    Ok((m.name().to_string(), m.source().to_string()))
}

fn check(run: &CheckRun, out: &mut dyn Write) -> Result<i32, Failure> {
    let names: Vec<String> = if run.names.is_empty() || run.names.iter().any(|n| n == "all") {
        ASSERTIONS.iter().map(|s| s.to_string()).collect()
    } else {
        run.names.clone()
    };
    let variant = run.model.as_deref().map(load_variant).transpose()?;
    let overrides: Vec<(&str, &str)> = variant.iter().map(|(n, s)| (n.as_str(), s.as_str())).collect();
    let model = build(&Instantiation::default(), TimeScale::of(run.profile), &overrides)?;
    for n in &names {
        model.assertion(n)?;
    }

    let mut verdicts = Vec::new();
    for n in &names {
        verdicts.push(model.check(n, &run.limits)?);
    }
    writeln!(out, "{}", report::table(&verdicts))?;
    let details = report::details(&verdicts);
    if !details.is_empty() {
        writeln!(out, "{details}")?;
    }

    let mut files = Vec::new();
    for v in &verdicts {
        if let Some(ce) = v.outcome.counterexample() {
            let confirmed = confirm_counterexample(&model.env, model.assertion(&v.name)?, ce)?;
            let path = write_counterexample(run, variant.as_ref().map(|v| v.0.as_str()), v, ce, confirmed)?;
            writeln!(
                out,
                "{}: counterexample written to {} ({})",
                v.name,
                path.display(),
                if confirmed { "replays on the model" } else { "DOES NOT REPLAY" }
            )?;
            files.push(serde_json::json!({ "assertion": v.name, "path": path, "replays": confirmed }));
        }
    }

    if let Some(path) = &run.json {
        let doc = serde_json::json!({
            "profile": profile_name(run.profile),
            "model": variant.as_ref().map(|v| v.0.clone()),
            "verdicts": report::json(&verdicts),
            "counterexamples": files,
        });
        write_json(path, &doc)?;
    }
    Ok(exit_status(&verdicts))
}

fn profile_name(p: Profile) -> &'static str {
    match p {
        Profile::Paper => "paper",
        Profile::Desk => "desk",
    }
}

pub fn exit_status(verdicts: &[Verdict]) -> i32 {
    if verdicts.iter().any(|v| v.outcome.is_fail()) {
        EXIT_FAIL
    } else if verdicts.iter().any(|v| matches!(v.outcome, Outcome::Error { .. })) {
        EXIT_ERROR
    } else if verdicts.iter().any(|v| matches!(v.outcome, Outcome::BoundExceeded { .. })) {
        EXIT_BOUND
    } else {
        EXIT_PASS
    }
}

/// One label per line after a short header.
fn write_counterexample(
    run: &CheckRun,
    variant: Option<&str>,
    v: &Verdict,
    ce: &Counterexample,
    confirmed: bool,
) -> Result<PathBuf, Failure> {
    std::fs::create_dir_all(&run.cex_dir)?;
    let stem = match variant {
        Some(m) => format!("{}-{}", m, v.name),
        None => v.name.clone(),
    };
    let path = run.cex_dir.join(format!("{stem}.trace"));
    let mut text = String::new();
    let _ = writeln!(text, "# assertion: {} ({})", v.name, v.kind);
    let _ = writeln!(text, "# model: {}", variant.unwrap_or("standard"));
    let _ = writeln!(text, "# profile: {}", profile_name(run.profile));
    let _ = writeln!(text, "# replays: {confirmed}");
    match ce {
        Counterexample::Refinement { trace } => {
            let _ = writeln!(text, "# the specification refuses the last event");
            for l in trace {
                let _ = writeln!(text, "{l}");
            }
        }
        Counterexample::Deadlock { trace, cycle } => {
            for l in trace {
                let _ = writeln!(text, "{l}");
            }
            let _ = writeln!(text, "# then forever:");
            for l in cycle {
                let _ = writeln!(text, "{l}");
            }
        }
    }
    std::fs::write(&path, text)?;
    Ok(path)
}

fn write_json(path: &Path, doc: &serde_json::Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn find_violation(
    cfg: &SearchConfig,
    band: Option<f64>,
    every: u64,
    threads: usize,
    json: Option<PathBuf>,
    csv: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    let plant = Plant::identified();
    let mut monitor = PHwMonitor::standard();
    if let Some(b) = band {
        monitor = monitor.with_band(b);
    }
    let pool = ExplorationLimits { threads, ..Default::default() }.pool();
    let report = pool.install(|| hvc_plant::search(&plant, &monitor, cfg))?;
    let result = if report.verdict.is_valid() { "Valid within bound" } else { "Violation" };
    let elapsed = format!("{:.3}", report.elapsed);
    let steps = cfg.max_steps.to_string();
    let w = [steps.len().max(23), result.len().max(6), report.programs.to_string().len().max(8), elapsed.len().max(11)];
    writeln!(out, "{:<a$} | {:<b$} | {:>c$} | {:>d$}", "Maximum violation steps", "Result", "Programs", "Elapsed (s)", a = w[0], b = w[1], c = w[2], d = w[3])?;
    writeln!(out, "{}", w.iter().map(|n| "-".repeat(*n)).collect::<Vec<_>>().join("-+-"))?;
    writeln!(out, "{:<a$} | {:<b$} | {:>c$} | {:>d$}", steps, result, report.programs, elapsed, a = w[0], b = w[1], c = w[2], d = w[3])?;
    if let (hvc_plant::Verdict::Violation { step, sample }, Some((i, p))) = (&report.verdict, &report.program) {
        writeln!(out, "program {i} {:?}: E = {:.6} > 0 at step {step} (t = {:.6} s)", p.values, sample.e, sample.t)?;
    }
    if let Some(path) = json {
        write_json(&path, &hvc_plant::summary_json(&report))?;
    }
    if let Some(path) = csv {
        // the violating program, otherwise the last one searched
        let program = match &report.program {
            Some((_, p)) => p.clone(),
            None => hvc_plant::programs(cfg).pop().unwrap_or(InputProgram::constant(0)),
        };
        let mut samples = Vec::new();
        hvc_plant::simulate(&plant, &monitor, &program, cfg.dwell, cfg.max_steps, every, |s| samples.push(s))?;
        hvc_plant::write_csv(std::fs::File::create(&path)?, &samples)?;
    }
    Ok(if report.verdict.is_valid() { EXIT_PASS } else { EXIT_FAIL })
}

struct SimRun {
    program: InputProgram,
    max_steps: u64,
    dwell: f64,
    band: Option<f64>,
    every: u64,
}

fn sim_plant(run: &SimRun, json: Option<PathBuf>, csv: Option<PathBuf>, out: &mut dyn Write) -> Result<i32, Failure> {
    let plant = Plant::identified();
    let mut monitor = PHwMonitor::standard();
    if let Some(b) = run.band {
        monitor = monitor.with_band(b);
    }
    let start = Instant::now();
    let mut samples = Vec::new();
    let verdict = hvc_plant::simulate(&plant, &monitor, &run.program, run.dwell, run.max_steps, run.every, |s| {
        samples.push(s)
    })?;
    let elapsed = start.elapsed().as_secs_f64();
    match &csv {
        Some(path) => hvc_plant::write_csv(std::fs::File::create(path)?, &samples)?,
        None => hvc_plant::write_csv(&mut *out, &samples)?,
    }
    if csv.is_some() {
        match &verdict {
            hvc_plant::Verdict::ValidWithinBound { steps } => writeln!(out, "valid within {steps} steps")?,
            hvc_plant::Verdict::Violation { step, sample } => {
                writeln!(out, "violation at step {step} (t = {:.6} s, E = {:.6})", sample.t, sample.e)?
            }
        }
        for u in [1.0, 2.0] {
            match hvc_plant::estimate_settling_time(&plant, monitor.band, u) {
                Ok(t) => writeln!(out, "band entry after a step from rest to {} V: {t:.6} s", u * plant.input_gain)?,
                Err(e) => writeln!(out, "step from rest to {} V: {e}", u * plant.input_gain)?,
            }
        }
    }
    if let Some(path) = json {
        let steps = match verdict {
            hvc_plant::Verdict::ValidWithinBound { steps } | hvc_plant::Verdict::Violation { step: steps, .. } => steps,
        };
        let result = if verdict.is_valid() { "valid_within_bound" } else { "violation" };
        write_json(&path, &serde_json::json!({ "result": result, "steps": steps, "elapsed": elapsed }))?;
    }
    Ok(if verdict.is_valid() { EXIT_PASS } else { EXIT_FAIL })
}

use std::fmt::Write;

use crate::check::{Counterexample, Verdict};
use crate::event::Label;

pub fn format_trace(trace: &[Label]) -> String {
    let parts: Vec<String> = trace.iter().map(Label::to_string).collect();
    format!("<{}>", parts.join(", "))
}

/// Plain-text results table, one row per verdict.
pub fn table(verdicts: &[Verdict]) -> String {
    let header = ["Assertion", "Result", "Compilation (s)", "Verification (s)", "Total (s)", "States", "Transitions"];
    let rows: Vec<[String; 7]> = verdicts
        .iter()
        .map(|v| {
            [
                v.name.clone(),
                v.outcome.short().to_string(),
                format!("{:.3}", v.compile_secs),
                format!("{:.3}", v.verify_secs),
                format!("{:.3}", v.elapsed_secs),
                v.states.to_string(),
                v.transitions.to_string(),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for r in &rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[&str]| {
        for (i, (c, w)) in cells.iter().zip(widths).enumerate() {
            if i > 0 {
                out.push_str(" | ");
            }
            if i >= 2 {
                let _ = write!(out, "{c:>w$}");
            } else {
                let _ = write!(out, "{c:<w$}");
            }
        }
        out.push('\n');
    };
    line(&mut out, &header);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&rule.join("-+-"));
    out.push('\n');
    for r in &rows {
        let cells: Vec<&str> = r.iter().map(String::as_str).collect();
        line(&mut out, &cells);
    }
    out
}

/// Counterexamples and witnesses, one block per verdict that has one.
pub fn details(verdicts: &[Verdict]) -> String {
    let mut out = String::new();
    for v in verdicts {
        match &v.outcome {
            crate::check::Outcome::Pass { witness: Some(w) } => {
                let _ = writeln!(out, "{}: witness {}", v.name, format_trace(w));
            }
            crate::check::Outcome::Fail { counterexample: Some(ce) } => match ce {
                Counterexample::Refinement { trace } => {
                    let _ = writeln!(out, "{}: counterexample {}", v.name, format_trace(trace));
                }
                Counterexample::Deadlock { trace, cycle } => {
                    let _ = writeln!(
                        out,
                        "{}: deadlock after {} then {} forever",
                        v.name,
                        format_trace(trace),
                        format_trace(cycle)
                    );
                }
            },
            crate::check::Outcome::Error { message } => {
                let _ = writeln!(out, "{}: error: {message}", v.name);
            }
            crate::check::Outcome::BoundExceeded { states } => {
                let _ = writeln!(out, "{}: bound exceeded after {states} states", v.name);
            }
            _ => {}
        }
    }
    out
}

pub fn json(verdicts: &[Verdict]) -> serde_json::Value {
    serde_json::to_value(verdicts).expect("verdicts serialize")
}

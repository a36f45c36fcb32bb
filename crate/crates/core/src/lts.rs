//! Explicit labelled transition systems compiled from process terms.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};
use serde::Serialize;

use crate::env::Env;
use crate::error::{Error, Result};
use crate::event::Label;
use crate::semantics::transitions;
use crate::term::Proc;

#[derive(Clone, Debug)]
pub struct ExplorationLimits {
    pub max_states: usize,
    pub wall_clock: Option<Duration>,
    /// Worker threads; 0 means one per available core.
    pub threads: usize,
}

impl Default for ExplorationLimits {
    fn default() -> Self {
        ExplorationLimits { max_states: 5_000_000, wall_clock: None, threads: 0 }
    }
}

impl ExplorationLimits {
    pub fn pool(&self) -> rayon::ThreadPool {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .stack_size(64 << 20)
            .build()
            .expect("thread pool")
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct LtsStats {
    pub states: usize,
    pub transitions: usize,
    pub elapsed_secs: f64,
}

/// State 0 is the initial state. Edges are stored per state as
/// `(label index, target)` pairs.
pub struct Lts {
    labels: Vec<Label>,
    offsets: Vec<usize>,
    edges: Vec<(u32, u32)>,
    terms: Vec<Proc>,
    pub stats: LtsStats,
}

impl Lts {
    pub fn compile(env: &Env, root: &Proc, limits: &ExplorationLimits) -> Result<Lts> {
        let pool = limits.pool();
        pool.install(|| Lts::compile_in_pool(env, root, limits))
    }

    fn compile_in_pool(env: &Env, root: &Proc, limits: &ExplorationLimits) -> Result<Lts> {
        let start = Instant::now();
        let mut ids: FxHashMap<Proc, u32> = FxHashMap::default();
        let mut label_ids: FxHashMap<Label, u32> = FxHashMap::default();
        let mut lts = Lts {
            labels: Vec::new(),
            offsets: vec![0],
            edges: Vec::new(),
            terms: vec![root.clone()],
            stats: LtsStats::default(),
        };
        ids.insert(root.clone(), 0);
        let mut level_start = 0usize;
        while level_start < lts.terms.len() {
            let level_end = lts.terms.len();
            let succs: Vec<Vec<(Label, Proc)>> = lts.terms[level_start..level_end]
                .par_iter()
                .map(|p| transitions(env, p))
                .collect::<Result<_>>()?;
            for ts in succs {
                for (label, target) in ts {
                    let next = lts.labels.len() as u32;
                    let l = *label_ids.entry(label).or_insert_with(|| {
                        lts.labels.push(label);
                        next
                    });
                    let t = match ids.get(&target) {
                        Some(&t) => t,
                        None => {
                            let t = lts.terms.len() as u32;
                            if lts.terms.len() >= limits.max_states {
                                return Err(Error::BoundExceeded { states: lts.terms.len() });
                            }
                            ids.insert(target.clone(), t);
                            lts.terms.push(target);
                            t
                        }
                    };
                    lts.edges.push((l, t));
                }
                lts.offsets.push(lts.edges.len());
            }
            level_start = level_end;
            if let Some(budget) = limits.wall_clock {
                if start.elapsed() > budget {
                    return Err(Error::TimeExceeded { states: lts.terms.len() });
                }
            }
        }
        lts.stats = LtsStats {
            states: lts.terms.len(),
            transitions: lts.edges.len(),
            elapsed_secs: start.elapsed().as_secs_f64(),
        };
        Ok(lts)
    }

    pub fn num_states(&self) -> usize {
        self.terms.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.edges.len()
    }

    pub fn term(&self, s: u32) -> &Proc {
        &self.terms[s as usize]
    }

    pub fn label(&self, id: u32) -> Label {
        self.labels[id as usize]
    }

    pub fn edges(&self, s: u32) -> impl Iterator<Item = (Label, u32)> + '_ {
        let range = self.offsets[s as usize]..self.offsets[s as usize + 1];
        self.edges[range].iter().map(move |&(l, t)| (self.labels[l as usize], t))
    }

    pub fn is_terminated(&self, s: u32) -> bool {
        self.terms[s as usize].is_omega()
    }

    /// States reachable from `set` through `tau` and termination edges.
    pub fn closure(&self, set: &[u32]) -> Vec<u32> {
        let mut seen: FxHashSet<u32> = set.iter().copied().collect();
        let mut stack: Vec<u32> = set.to_vec();
        while let Some(s) = stack.pop() {
            for (l, t) in self.edges(s) {
                if l.is_internal() && seen.insert(t) {
                    stack.push(t);
                }
            }
        }
        let mut out: Vec<u32> = seen.into_iter().collect();
        out.sort_unstable();
        out
    }

    /// Whether the observable trace is one of this LTS's traces.
    pub fn has_trace(&self, trace: &[Label]) -> bool {
        let mut current = self.closure(&[0]);
        for &l in trace {
            let mut next: Vec<u32> = current
                .iter()
                .flat_map(|&s| self.edges(s).filter(move |(m, _)| *m == l).map(|(_, t)| t))
                .collect();
            next.sort_unstable();
            next.dedup();
            if next.is_empty() {
                return false;
            }
            current = self.closure(&next);
        }
        true
    }

    pub fn to_json(&self) -> serde_json::Value {
        let transitions: Vec<(u32, String, u32)> = (0..self.num_states() as u32)
            .flat_map(|s| self.edges(s).map(move |(l, t)| (s, l.to_string(), t)))
            .collect();
        serde_json::json!({
            "initial": 0,
            "states": self.num_states(),
            "transitions": transitions,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::*;
    use crate::value::Value;

    #[test]
    fn recursion_closes_the_state_space() {
        let mut env = Env::new();
        env.declare_channel("a", vec![]);
        env.define("P", vec![], event("a", call("P", vec![])));
        let lts = Lts::compile(&env, &call("P", vec![]), &ExplorationLimits::default()).unwrap();
        assert_eq!(lts.num_states(), 1);
        assert_eq!(lts.num_transitions(), 2);
        assert!(lts.has_trace(&[Label::Tock, Label::event("a", Value::Unit), Label::Tock]));
    }

    #[test]
    fn state_bound_is_enforced() {
        let mut env = Env::new();
        env.declare_channel("a", vec![]);
        env.define("C", vec![crate::Sym::new("n")], event("a", call("C", vec![crate::Expr::bin(
            crate::BinOp::Add,
            crate::Expr::var("n"),
            crate::Expr::int(1),
        )])));
        let limits = ExplorationLimits { max_states: 50, ..Default::default() };
        let r = Lts::compile(&env, &call("C", vec![crate::Expr::int(0)]), &limits);
        assert!(matches!(r, Err(Error::BoundExceeded { .. })));
    }
}

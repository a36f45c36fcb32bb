//! Assertion checking over compiled LTSs.

use std::collections::VecDeque;
use std::time::Instant;

use rustc_hash::{FxHashMap, FxHashSet};
use serde::Serialize;

use crate::env::Env;
use crate::error::{Error, Result};
use crate::event::{Event, Label};
use crate::lts::{ExplorationLimits, Lts};
use crate::semantics::transitions;
use crate::term::Proc;

#[derive(Clone)]
pub enum Property {
    /// `Spec [T= Impl`
    TraceRefinement { spec: Proc, imp: Proc },
    /// No reachable state where only time can pass, forever.
    DeadlockFree(Proc),
    /// Some reachable state performs the event.
    Reaches(Proc, Event),
}

#[derive(Clone)]
pub struct Assertion {
    pub name: String,
    pub property: Property,
}

impl Assertion {
    pub fn kind(&self) -> &'static str {
        match self.property {
            Property::TraceRefinement { .. } => "trace refinement",
            Property::DeadlockFree(_) => "deadlock freedom",
            Property::Reaches(..) => "reachability",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Counterexample {
    /// `trace` is an implementation trace; its last label is refused by the
    /// specification.
    Refinement { trace: Vec<Label> },
    /// After `trace` the process can only let time pass; `cycle` repeats.
    Deadlock { trace: Vec<Label>, cycle: Vec<Label> },
}

impl Counterexample {
    pub fn trace(&self) -> &[Label] {
        match self {
            Counterexample::Refinement { trace } | Counterexample::Deadlock { trace, .. } => trace,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Outcome {
    Pass {
        #[serde(skip_serializing_if = "Option::is_none")]
        witness: Option<Vec<Label>>,
    },
    Fail {
        #[serde(skip_serializing_if = "Option::is_none")]
        counterexample: Option<Counterexample>,
    },
    BoundExceeded { states: usize },
    Error { message: String },
}

impl Outcome {
    pub fn is_pass(&self) -> bool {
        matches!(self, Outcome::Pass { .. })
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Outcome::Fail { .. })
    }

    pub fn short(&self) -> &'static str {
        match self {
            Outcome::Pass { .. } => "Pass",
            Outcome::Fail { .. } => "Fail",
            Outcome::BoundExceeded { .. } => "Bound",
            Outcome::Error { .. } => "Error",
        }
    }

    pub fn counterexample(&self) -> Option<&Counterexample> {
        match self {
            Outcome::Fail { counterexample } => counterexample.as_ref(),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub name: String,
    pub kind: String,
    #[serde(flatten)]
    pub outcome: Outcome,
    pub states: usize,
    pub transitions: usize,
    pub compile_secs: f64,
    pub verify_secs: f64,
    pub elapsed_secs: f64,
}

/// Deterministic view of an LTS over observable labels, built on demand.
pub struct NormalForm<'a> {
    lts: &'a Lts,
    nodes: Vec<Vec<u32>>,
    ids: FxHashMap<Vec<u32>, u32>,
    after: FxHashMap<(u32, Label), Option<u32>>,
}

impl<'a> NormalForm<'a> {
    pub fn new(lts: &'a Lts) -> NormalForm<'a> {
        let mut nf = NormalForm { lts, nodes: Vec::new(), ids: FxHashMap::default(), after: FxHashMap::default() };
        let init = lts.closure(&[0]);
        nf.intern(init);
        nf
    }

    fn intern(&mut self, set: Vec<u32>) -> u32 {
        if let Some(&id) = self.ids.get(&set) {
            return id;
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(set.clone());
        self.ids.insert(set, id);
        id
    }

    pub fn initial(&self) -> u32 {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node reached by `label`, or `None` if the label is refused.
    pub fn after(&mut self, node: u32, label: Label) -> Option<u32> {
        if let Some(&r) = self.after.get(&(node, label)) {
            return r;
        }
        let lts = self.lts;
        let mut targets: Vec<u32> = self.nodes[node as usize]
            .iter()
            .flat_map(|&s| lts.edges(s).filter(move |(l, _)| *l == label).map(|(_, t)| t))
            .collect();
        let r = if targets.is_empty() {
            None
        } else {
            targets.sort_unstable();
            targets.dedup();
            let closed = lts.closure(&targets);
            Some(self.intern(closed))
        };
        self.after.insert((node, label), r);
        r
    }

    /// Observable labels accepted at `node`.
    pub fn offers(&self, node: u32) -> Vec<Label> {
        let mut labels: Vec<Label> = self.nodes[node as usize]
            .iter()
            .flat_map(|&s| self.lts.edges(s).map(|(l, _)| l))
            .filter(|l| l.is_observable())
            .collect();
        labels.sort();
        labels.dedup();
        labels
    }

    /// Fully expands the normal form; returns the number of nodes.
    pub fn expand(&mut self) -> usize {
        let mut i = 0;
        while i < self.nodes.len() {
            let mut labels: Vec<Label> = self.nodes[i]
                .iter()
                .flat_map(|&s| self.lts.edges(s).map(|(l, _)| l))
                .filter(|l| l.is_observable())
                .collect();
            labels.sort();
            labels.dedup();
            for l in labels {
                self.after(i as u32, l);
            }
            i += 1;
        }
        self.nodes.len()
    }
}

fn walk_back<K: Copy + Eq + std::hash::Hash>(parents: &FxHashMap<K, Option<(K, Label)>>, mut k: K) -> Vec<Label> {
    let mut trace = Vec::new();
    while let Some(Some((prev, l))) = parents.get(&k) {
        if l.is_observable() {
            trace.push(*l);
        }
        k = *prev;
    }
    trace.reverse();
    trace
}

/// Checks `spec [T= imp` and returns the shortest counterexample, if any.
pub fn trace_refinement(spec: &Lts, imp: &Lts) -> (Option<Counterexample>, usize) {
    let mut nf = NormalForm::new(spec);
    let start = (0u32, nf.initial());
    let mut parents: FxHashMap<(u32, u32), Option<((u32, u32), Label)>> = FxHashMap::default();
    parents.insert(start, None);
    let mut queue = VecDeque::from([start]);
    while let Some((s, n)) = queue.pop_front() {
        for (l, t) in imp.edges(s) {
            let next = if l.is_internal() {
                (t, n)
            } else {
                match nf.after(n, l) {
                    Some(m) => (t, m),
                    None => {
                        let mut trace = walk_back(&parents, (s, n));
                        trace.push(l);
                        return (Some(Counterexample::Refinement { trace }), parents.len());
                    }
                }
            };
            if !parents.contains_key(&next) {
                parents.insert(next, Some(((s, n), l)));
                queue.push_back(next);
            }
        }
    }
    (None, parents.len())
}

/// How far back the search looks for recently performed events.
const RECENT: usize = 64;

/// Depth-first search for a counterexample over the product of `imp`, unfolded
/// on the fly, and the normal form of `spec`. Successors are tried `tock`
/// first, then internal moves, then visible events, most recently performed
/// first. Long stretches of steady behaviour are therefore reached before the
/// environment's choices are enumerated. Finds a counterexample if one exists
/// within `max_states` product states; it need not be the shortest.
pub fn refinement_search(
    env: &Env,
    spec: &Lts,
    imp: &Proc,
    max_states: usize,
) -> Result<(Option<Counterexample>, usize)> {
    type Frame = (u32, Vec<(Label, Proc)>, usize, Option<Label>);
    let ordered = |p: &Proc, stack: &[Frame]| -> Result<Vec<(Label, Proc)>> {
        let mut ts = transitions(env, p)?;
        let recent: Vec<Label> = stack.iter().rev().take(RECENT).filter_map(|f| f.3).collect();
        ts.sort_by_key(|(l, _)| match l {
            Label::Tock => (0, 0),
            Label::Event(_) => (2, recent.iter().position(|r| r == l).unwrap_or(RECENT)),
            _ => (1, 0),
        });
        Ok(ts)
    };
    let mut nf = NormalForm::new(spec);
    let mut visited: FxHashSet<(Proc, u32)> = FxHashSet::default();
    visited.insert((imp.clone(), nf.initial()));
    // frames: (spec node, successors, next successor, label that led here)
    let mut stack: Vec<Frame> = vec![(nf.initial(), ordered(imp, &[])?, 0, None)];
    while let Some(top) = stack.last_mut() {
        let n = top.0;
        let Some((l, t)) = top.1.get(top.2).cloned() else {
            stack.pop();
            continue;
        };
        top.2 += 1;
        let m = if l.is_internal() {
            n
        } else {
            match nf.after(n, l) {
                Some(m) => m,
                None => {
                    let mut trace: Vec<Label> =
                        stack.iter().filter_map(|f| f.3).filter(|l| l.is_observable()).collect();
                    trace.push(l);
                    return Ok((Some(Counterexample::Refinement { trace }), visited.len()));
                }
            }
        };
        if visited.insert((t.clone(), m)) {
            if visited.len() > max_states {
                return Err(Error::BoundExceeded { states: visited.len() });
            }
            let succ = ordered(&t, &stack)?;
            stack.push((m, succ, 0, Some(l)));
        }
    }
    Ok((None, visited.len()))
}

/// Whether `p` can perform the observable `trace`, unfolding it on the fly.
/// Works on processes too large to compile.
pub fn replays(env: &Env, p: &Proc, trace: &[Label]) -> Result<bool> {
    let closure = |mut todo: Vec<Proc>| -> Result<FxHashSet<Proc>> {
        let mut seen: FxHashSet<Proc> = todo.iter().cloned().collect();
        while let Some(q) = todo.pop() {
            for (l, t) in transitions(env, &q)? {
                if l.is_internal() && seen.insert(t.clone()) {
                    todo.push(t);
                }
            }
        }
        Ok(seen)
    };
    let mut current = closure(vec![p.clone()])?;
    for &l in trace {
        let mut next = Vec::new();
        for q in &current {
            next.extend(transitions(env, q)?.into_iter().filter(|(m, _)| *m == l).map(|(_, t)| t));
        }
        if next.is_empty() {
            return Ok(false);
        }
        current = closure(next)?;
    }
    Ok(true)
}

/// Re-checks a counterexample independently of the search that found it: a
/// refinement counterexample must be a trace of the implementation whose
/// last event, and only that one, the specification refuses.
pub fn confirm_counterexample(env: &Env, assertion: &Assertion, ce: &Counterexample) -> Result<bool> {
    match (&assertion.property, ce) {
        (Property::TraceRefinement { spec, imp }, Counterexample::Refinement { trace }) => {
            let Some((last, prefix)) = trace.split_last() else { return Ok(false) };
            let spec = Lts::compile(env, spec, &ExplorationLimits::default())?;
            let mut nf = NormalForm::new(&spec);
            let mut n = nf.initial();
            for &l in prefix {
                match nf.after(n, l) {
                    Some(m) => n = m,
                    None => return Ok(false),
                }
            }
            Ok(nf.after(n, *last).is_none() && replays(env, imp, trace)?)
        }
        (Property::DeadlockFree(p), Counterexample::Deadlock { trace, cycle }) => {
            let mut full = trace.clone();
            full.extend_from_slice(cycle);
            Ok(replays(env, p, &full)?)
        }
        _ => Ok(false),
    }
}

/// BFS tree of an LTS from its initial state, with the visiting order.
fn bfs(lts: &Lts) -> (FxHashMap<u32, Option<(u32, Label)>>, Vec<u32>) {
    let mut parents = FxHashMap::default();
    parents.insert(0u32, None);
    let mut order = vec![0u32];
    let mut i = 0;
    while i < order.len() {
        let s = order[i];
        for (l, t) in lts.edges(s) {
            if !parents.contains_key(&t) {
                parents.insert(t, Some((s, l)));
                order.push(t);
            }
        }
        i += 1;
    }
    (parents, order)
}

/// A state is idle if it is not terminated and can do nothing but `tock`.
fn is_idle(lts: &Lts, s: u32) -> bool {
    !lts.is_terminated(s) && lts.edges(s).all(|(l, _)| l == Label::Tock)
}

/// Finds a reachable state from which only time can pass forever, or a
/// reachable non-terminated state without transitions.
pub fn timed_deadlock(lts: &Lts) -> Option<Counterexample> {
    let n = lts.num_states() as u32;
    // Greatest fixpoint: idle states all of whose successors are idle.
    let mut stuck: Vec<bool> = (0..n).map(|s| is_idle(lts, s)).collect();
    let mut preds: FxHashMap<u32, Vec<u32>> = FxHashMap::default();
    let mut work = Vec::new();
    for s in 0..n {
        if stuck[s as usize] {
            for (_, t) in lts.edges(s) {
                preds.entry(t).or_default().push(s);
                if !stuck[t as usize] {
                    work.push(s);
                }
            }
        }
    }
    while let Some(s) = work.pop() {
        if !stuck[s as usize] {
            continue;
        }
        stuck[s as usize] = false;
        if let Some(ps) = preds.get(&s) {
            work.extend(ps.iter().copied().filter(|&p| stuck[p as usize]));
        }
    }
    if !stuck.iter().any(|&b| b) {
        return None;
    }
    let (parents, order) = bfs(lts);
    let target = order.into_iter().find(|&s| stuck[s as usize])?;
    let trace = walk_back(&parents, target);
    let cycle = if lts.edges(target).next().is_some() { vec![Label::Tock] } else { Vec::new() };
    Some(Counterexample::Deadlock { trace, cycle })
}

/// Shortest observable trace ending with `event`, if the event is reachable.
pub fn reachability(lts: &Lts, event: Event) -> Option<Vec<Label>> {
    let (parents, order) = bfs(lts);
    let target = Label::Event(event);
    let s = order.into_iter().find(|&s| lts.edges(s).any(|(l, _)| l == target))?;
    let mut trace = walk_back(&parents, s);
    trace.push(target);
    Some(trace)
}

/// Every reachable state can eventually let time pass or terminate.
pub fn timelock_free(lts: &Lts) -> bool {
    let n = lts.num_states() as u32;
    let mut ok: Vec<bool> =
        (0..n).map(|s| lts.is_terminated(s) || lts.edges(s).any(|(l, _)| l == Label::Tock)).collect();
    loop {
        let mut changed = false;
        for s in 0..n {
            if !ok[s as usize] && lts.edges(s).any(|(_, t)| ok[t as usize]) {
                ok[s as usize] = true;
                changed = true;
            }
        }
        if !changed {
            return ok.into_iter().all(|b| b);
        }
    }
}

fn outcome_of_error(e: Error) -> Outcome {
    match e {
        Error::BoundExceeded { states } | Error::TimeExceeded { states } => Outcome::BoundExceeded { states },
        e => Outcome::Error { message: e.to_string() },
    }
}

/// Checks one assertion.
pub fn check(env: &Env, assertion: &Assertion, limits: &ExplorationLimits) -> Verdict {
    let start = Instant::now();
    let mut states = 0;
    let mut transitions = 0;
    let mut compiled = None;
    let outcome = (|| -> Result<Outcome> {
        Ok(match &assertion.property {
            Property::TraceRefinement { spec, imp } => {
                let spec_lts = Lts::compile(env, spec, limits)?;
                let imp_lts = match Lts::compile(env, imp, limits) {
                    Ok(lts) => lts,
                    Err(Error::BoundExceeded { .. } | Error::TimeExceeded { .. }) => {
                        // too large to compile: look for a counterexample on the fly
                        compiled = Some(Instant::now());
                        let (ce, n) = refinement_search(env, &spec_lts, imp, limits.max_states)?;
                        states = n + spec_lts.num_states();
                        return Ok(match ce {
                            Some(ce) => Outcome::Fail { counterexample: Some(ce) },
                            None => Outcome::Pass { witness: None },
                        });
                    }
                    Err(e) => return Err(e),
                };
                compiled = Some(Instant::now());
                states = imp_lts.num_states() + spec_lts.num_states();
                transitions = imp_lts.num_transitions() + spec_lts.num_transitions();
                match trace_refinement(&spec_lts, &imp_lts).0 {
                    None => Outcome::Pass { witness: None },
                    Some(ce) => Outcome::Fail { counterexample: Some(ce) },
                }
            }
            Property::DeadlockFree(p) => {
                let lts = Lts::compile(env, p, limits)?;
                compiled = Some(Instant::now());
                states = lts.num_states();
                transitions = lts.num_transitions();
                match timed_deadlock(&lts) {
                    None => Outcome::Pass { witness: None },
                    Some(ce) => Outcome::Fail { counterexample: Some(ce) },
                }
            }
            Property::Reaches(p, e) => {
                let lts = Lts::compile(env, p, limits)?;
                compiled = Some(Instant::now());
                states = lts.num_states();
                transitions = lts.num_transitions();
                match reachability(&lts, *e) {
                    Some(w) => Outcome::Pass { witness: Some(w) },
                    None => Outcome::Fail { counterexample: None },
                }
            }
        })
    })()
    .unwrap_or_else(outcome_of_error);
    let end = Instant::now();
    let compiled = compiled.unwrap_or(end);
    Verdict {
        name: assertion.name.clone(),
        kind: assertion.kind().to_string(),
        outcome,
        states,
        transitions,
        compile_secs: (compiled - start).as_secs_f64(),
        verify_secs: (end - compiled).as_secs_f64(),
        elapsed_secs: (end - start).as_secs_f64(),
    }
}

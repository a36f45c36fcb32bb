//! Operational semantics of tock-CSP.
//!
//! `tock` is synchronised by every parallel composition, permitted by
//! prefixes and external choice (without resolving it), and refused by
//! `USTOP`. The terminated state `Ω` lets time pass while the other side of
//! a parallel composition is still running.

use std::sync::Arc;

use crate::env::Env;
use crate::error::{Error, Result};
use crate::event::Label;
use crate::expr::bool_of;
use crate::term::*;
use crate::value::Value;

const MAX_UNFOLD_DEPTH: usize = 100;

pub type Transition = (Label, Proc);

/// All transitions of `p`, sorted and without duplicates.
pub fn transitions(env: &Env, p: &Proc) -> Result<Vec<Transition>> {
    let mut out = Vec::new();
    trans(env, p, 0, &mut out)?;
    out.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.structural_hash().cmp(&b.1.structural_hash())));
    out.dedup();
    Ok(out)
}

/// Labels `p` can perform next.
pub fn initials(env: &Env, p: &Proc) -> Result<Vec<Label>> {
    let mut ls: Vec<Label> = transitions(env, p)?.into_iter().map(|(l, _)| l).collect();
    ls.dedup();
    Ok(ls)
}

/// Successors of `p` under `label`.
pub fn step(env: &Env, p: &Proc, label: Label) -> Result<Vec<Proc>> {
    Ok(transitions(env, p)?.into_iter().filter(|(l, _)| *l == label).map(|(_, q)| q).collect())
}

/// Transitions of a component. Composite components are memoized: most of
/// a large system is unchanged from one state to the next.
fn sub(env: &Env, p: &Proc, depth: usize) -> Result<Arc<[Transition]>> {
    let memoize = !matches!(
        p.kind(),
        Kind::Skip | Kind::Stop | Kind::UStop | Kind::Omega | Kind::Wait(_) | Kind::Prefix { .. } | Kind::Run(_)
    );
    if memoize {
        if let Some(ts) = env.memo_get(p) {
            return Ok(ts);
        }
    }
    let mut out = Vec::new();
    trans(env, p, depth, &mut out)?;
    let out: Arc<[Transition]> = out.into();
    if memoize {
        env.memo_put(p.clone(), out.clone());
    }
    Ok(out)
}

/// In a parallel composition a terminated side only lets time pass.
fn par_side(env: &Env, p: &Proc, depth: usize) -> Result<Arc<[Transition]>> {
    if p.is_omega() {
        Ok(Arc::new([(Label::Tock, p.clone())]))
    } else {
        sub(env, p, depth)
    }
}

fn trans(env: &Env, p: &Proc, depth: usize, out: &mut Vec<Transition>) -> Result<()> {
    match p.kind() {
        Kind::Skip => out.push((Label::Tick, omega())),
        Kind::Stop => out.push((Label::Tock, p.clone())),
        Kind::UStop | Kind::Omega => {}
        Kind::Wait(e) => {
            let n = int_of(e.eval(env)?)?;
            if n <= 0 {
                out.push((Label::Tick, omega()));
            } else {
                out.push((Label::Tock, wait_n(n - 1)));
            }
        }
        Kind::Prefix { channel, field, cont } => {
            let domain = env.domain(*channel)?;
            match field {
                Field::None => {
                    if !domain.contains(&Value::Unit) {
                        return Err(Error::TypeError(format!("channel `{channel}` carries data")));
                    }
                    out.push((Label::event(*channel, Value::Unit), cont.clone()));
                }
                Field::Out(e) => {
                    let v = e.eval(env)?;
                    if !domain.contains(&v) {
                        return Err(Error::DomainError { channel: channel.to_string(), value: v.to_string() });
                    }
                    out.push((Label::event(*channel, v), cont.clone()));
                }
                Field::In { var, restrict } => {
                    for &v in domain.iter() {
                        let locals = [(*var, v)];
                        if let Some(r) = restrict {
                            if !bool_of(r.eval_in(env, &locals)?)? {
                                continue;
                            }
                        }
                        out.push((Label::event(*channel, v), cont.subst(&locals)));
                    }
                }
            }
            out.push((Label::Tock, p.clone()));
        }
        Kind::If(c, a, b) => {
            let branch = if bool_of(c.eval(env)?)? { a } else { b };
            trans(env, branch, depth, out)?;
        }
        Kind::ExtChoice(a, b) => {
            let ta = sub(env, a, depth)?;
            let tb = sub(env, b, depth)?;
            for (l, a2) in ta.iter() {
                match l {
                    Label::Tock => {
                        for (_, b2) in tb.iter().filter(|(l, _)| *l == Label::Tock) {
                            out.push((Label::Tock, ext_choice(a2.clone(), b2.clone())));
                        }
                    }
                    Label::Tau => out.push((Label::Tau, ext_choice(a2.clone(), b.clone()))),
                    _ => out.push((*l, a2.clone())),
                }
            }
            for (l, b2) in tb.iter() {
                match l {
                    Label::Tock => {}
                    Label::Tau => out.push((Label::Tau, ext_choice(a.clone(), b2.clone()))),
                    _ => out.push((*l, b2.clone())),
                }
            }
        }
        Kind::IntChoice(a, b) => {
            out.push((Label::Tau, a.clone()));
            out.push((Label::Tau, b.clone()));
        }
        Kind::Seq(a, b) => {
            for (l, a2) in sub(env, a, depth)?.iter().cloned() {
                match l {
                    Label::Tick => out.push((Label::Tau, b.clone())),
                    _ => out.push((l, seq(a2, b.clone()))),
                }
            }
        }
        Kind::Hide(a, x) => {
            for (l, a2) in sub(env, a, depth)?.iter().cloned() {
                match l {
                    Label::Tick => out.push((Label::Tick, omega())),
                    _ if x.contains(&l) => out.push((Label::Tau, Proc::from_kind(Kind::Hide(a2, x.clone())))),
                    _ => out.push((l, Proc::from_kind(Kind::Hide(a2, x.clone())))),
                }
            }
        }
        Kind::Project(a, x) => {
            for (l, a2) in sub(env, a, depth)?.iter().cloned() {
                match l {
                    Label::Tick => out.push((Label::Tick, omega())),
                    Label::Tau => out.push((Label::Tau, Proc::from_kind(Kind::Project(a2, x.clone())))),
                    _ if x.contains(&l) => out.push((l, Proc::from_kind(Kind::Project(a2, x.clone())))),
                    _ => out.push((Label::Tau, Proc::from_kind(Kind::Project(a2, x.clone())))),
                }
            }
        }
        Kind::Par(a, x, b) => {
            if a.is_omega() && b.is_omega() {
                out.push((Label::Tick, omega()));
                return Ok(());
            }
            let ta = par_side(env, a, depth)?;
            let tb = par_side(env, b, depth)?;
            let mk = |l: Proc, r: Proc| Proc::from_kind(Kind::Par(l, x.clone(), r));
            for (l, a2) in ta.iter() {
                match l {
                    Label::Tick => out.push((Label::Tau, mk(omega(), b.clone()))),
                    Label::Tau => out.push((Label::Tau, mk(a2.clone(), b.clone()))),
                    Label::Event(_) if !x.contains(l) => out.push((*l, mk(a2.clone(), b.clone()))),
                    _ => {
                        for (_, b2) in tb.iter().filter(|(m, _)| m == l) {
                            out.push((*l, mk(a2.clone(), b2.clone())));
                        }
                    }
                }
            }
            for (l, b2) in tb.iter() {
                match l {
                    Label::Tick => out.push((Label::Tau, mk(a.clone(), omega()))),
                    Label::Tau => out.push((Label::Tau, mk(a.clone(), b2.clone()))),
                    Label::Event(_) if !x.contains(l) => out.push((*l, mk(a.clone(), b2.clone()))),
                    _ => {}
                }
            }
        }
        Kind::Rename(a, r) => {
            for (l, a2) in sub(env, a, depth)?.iter().cloned() {
                let next = || Proc::from_kind(Kind::Rename(a2.clone(), r.clone()));
                match l {
                    Label::Tick => out.push((Label::Tick, omega())),
                    Label::Event(e) => match r.targets(e.channel) {
                        Some(ts) => {
                            for &t in ts {
                                out.push((Label::event(t, e.value), next()));
                            }
                        }
                        None => out.push((l, next())),
                    },
                    _ => out.push((l, next())),
                }
            }
        }
        Kind::Interrupt(a, b) => {
            let ta = sub(env, a, depth)?;
            let tb = sub(env, b, depth)?;
            for (l, a2) in ta.iter() {
                match l {
                    Label::Tick => out.push((Label::Tick, omega())),
                    Label::Tock => {
                        for (_, b2) in tb.iter().filter(|(m, _)| *m == Label::Tock) {
                            out.push((Label::Tock, interrupt(a2.clone(), b2.clone())));
                        }
                    }
                    _ => out.push((*l, interrupt(a2.clone(), b.clone()))),
                }
            }
            for (l, b2) in tb.iter() {
                match l {
                    Label::Tick => out.push((Label::Tick, omega())),
                    Label::Tock => {}
                    Label::Tau => out.push((Label::Tau, interrupt(a.clone(), b2.clone()))),
                    Label::Event(_) => out.push((*l, b2.clone())),
                }
            }
        }
        Kind::Exception(a, x, b) => {
            for (l, a2) in sub(env, a, depth)?.iter().cloned() {
                match l {
                    Label::Tick => out.push((Label::Tick, omega())),
                    Label::Event(_) if x.contains(&l) => out.push((l, b.clone())),
                    _ => out.push((l, Proc::from_kind(Kind::Exception(a2, x.clone(), b.clone())))),
                }
            }
        }
        Kind::Call(name, args) => {
            if depth >= MAX_UNFOLD_DEPTH {
                return Err(Error::UnguardedRecursion(name.to_string()));
            }
            let body = env.unfold(*name, args)?;
            let mut mine = Vec::new();
            trans(env, &body, depth + 1, &mut mine)?;
            // Keep the call as the state name when the body loops on itself.
            for (_, t) in &mut mine {
                if *t == body {
                    *t = p.clone();
                }
            }
            out.extend_from_slice(&mine);
        }
        Kind::TimedPriority(a) => {
            let ta = sub(env, a, depth)?;
            let urgent = ta.iter().any(|(l, _)| l.is_internal());
            for (l, a2) in ta.iter().cloned() {
                match l {
                    Label::Tick => out.push((Label::Tick, omega())),
                    Label::Tock if urgent => {}
                    _ => out.push((l, timed_priority(a2))),
                }
            }
        }
        Kind::Run(x) => {
            out.push((Label::Tock, p.clone()));
            for e in env.enumerate(x)? {
                out.push((Label::Event(e), p.clone()));
            }
        }
    }
    Ok(())
}

fn int_of(v: Value) -> Result<i64> {
    v.as_int().ok_or_else(|| Error::TypeError(format!("expected int, got {v}")))
}

//! Static, channel-level alphabets of process terms.
//!
//! The result over-approximates the channels a process can ever perform: it
//! follows every branch regardless of data, and a hidden or projected set
//! only removes a channel when it covers the whole channel.

use std::collections::BTreeSet;

use rustc_hash::FxHashMap;

use crate::env::Env;
use crate::error::{Error, Result};
use crate::event::EventSet;
use crate::symbol::Sym;
use crate::term::{Kind, Proc};

pub type Alphabet = BTreeSet<Sym>;

/// Channels whose events `p` may perform visibly.
pub fn channel_alphabet(env: &Env, p: &Proc) -> Result<Alphabet> {
    // Least fixpoint over the named processes reachable from `p`.
    let mut named: FxHashMap<Sym, Alphabet> = FxHashMap::default();
    loop {
        let mut pending = Vec::new();
        let top = walk(env, p, &named, &mut pending)?;
        let mut changed = false;
        let mut i = 0;
        while i < pending.len() {
            let name = pending[i];
            i += 1;
            let def = env.def(name).ok_or_else(|| Error::UnboundName(name.to_string()))?;
            let a = walk(env, &def.body, &named, &mut pending)?;
            let entry = named.entry(name).or_default();
            if !a.is_subset(entry) {
                entry.extend(a);
                changed = true;
            }
        }
        if !changed {
            return Ok(top);
        }
    }
}

fn covers(env: &Env, set: &EventSet, c: Sym) -> bool {
    set.channel_list().contains(&c)
        || env.domain(c).is_ok_and(|dom| {
            dom.iter().all(|v| set.event_list().iter().any(|e| e.channel == c && e.value == *v))
        })
}

fn set_channels(set: &EventSet) -> Alphabet {
    set.channel_list().iter().copied().chain(set.event_list().iter().map(|e| e.channel)).collect()
}

fn walk(env: &Env, p: &Proc, named: &FxHashMap<Sym, Alphabet>, pending: &mut Vec<Sym>) -> Result<Alphabet> {
    let mut w = |q: &Proc| walk(env, q, named, pending);
    Ok(match p.kind() {
        Kind::Skip | Kind::Stop | Kind::UStop | Kind::Omega | Kind::Wait(_) => Alphabet::new(),
        Kind::Run(x) => set_channels(x),
        Kind::Prefix { channel, cont, .. } => {
            let mut a = w(cont)?;
            a.insert(*channel);
            a
        }
        Kind::If(_, p, q)
        | Kind::ExtChoice(p, q)
        | Kind::IntChoice(p, q)
        | Kind::Seq(p, q)
        | Kind::Par(p, _, q)
        | Kind::Interrupt(p, q)
        | Kind::Exception(p, _, q) => {
            let mut a = w(p)?;
            a.extend(w(q)?);
            a
        }
        Kind::TimedPriority(p) => w(p)?,
        Kind::Hide(p, x) => w(p)?.into_iter().filter(|&c| !covers(env, x, c)).collect(),
        Kind::Project(p, x) => {
            let keep = set_channels(x);
            w(p)?.into_iter().filter(|c| keep.contains(c)).collect()
        }
        Kind::Rename(p, r) => w(p)?
            .into_iter()
            .flat_map(|c| r.targets(c).map_or_else(|| vec![c], <[Sym]>::to_vec))
            .collect(),
        Kind::Call(name, _) => {
            if !pending.contains(name) {
                pending.push(*name);
            }
            named.get(name).cloned().unwrap_or_default()
        }
    })
}

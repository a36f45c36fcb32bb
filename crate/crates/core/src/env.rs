use std::sync::Arc;

use dashmap::DashMap;
use rustc_hash::{FxBuildHasher, FxHashMap};

use crate::error::{Error, Result};
use crate::event::{Event, EventSet};
use crate::expr::{Expr, Globals};
use crate::symbol::Sym;
use crate::semantics::Transition;
use crate::term::{call, Proc};
use crate::value::Value;

pub type NativeFn = Arc<dyn Fn(&[Value]) -> Result<Value> + Send + Sync>;

#[derive(Clone)]
pub enum FnBody {
    Expr(Expr),
    Native(NativeFn),
}

#[derive(Clone)]
pub struct FnDef {
    pub params: Vec<Sym>,
    pub body: FnBody,
}

#[derive(Clone)]
pub struct ProcDef {
    pub params: Vec<Sym>,
    pub body: Proc,
}

/// Definitions, channel declarations and data types of a model.
#[derive(Default)]
pub struct Env {
    defs: FxHashMap<Sym, ProcDef>,
    functions: FxHashMap<Sym, FnDef>,
    constants: FxHashMap<Sym, Value>,
    types: FxHashMap<Sym, Arc<[Value]>>,
    channels: FxHashMap<Sym, Arc<[Value]>>,
    channel_order: Vec<Sym>,
    sets: FxHashMap<Sym, EventSet>,
    unfolded: DashMap<(Sym, Vec<Value>), Proc, FxBuildHasher>,
    memo: DashMap<Proc, Arc<[Transition]>, FxBuildHasher>,
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    /// Declares a channel. A channel without data has the domain `{()}`.
    pub fn declare_channel(&mut self, name: impl Into<Sym>, domain: Vec<Value>) {
        let name = name.into();
        let domain: Arc<[Value]> = if domain.is_empty() { Arc::from([Value::Unit]) } else { domain.into() };
        if self.channels.insert(name, domain).is_none() {
            self.channel_order.push(name);
        }
    }

    pub fn declare_type(&mut self, name: impl Into<Sym>, values: Vec<Value>) {
        self.types.insert(name.into(), values.into());
    }

    /// Declares an enumeration and registers each member as a constant.
    pub fn declare_enum(&mut self, name: &str, members: &[&str]) {
        let values: Vec<Value> = members.iter().map(|m| Value::Enum(Sym::new(m))).collect();
        for (m, v) in members.iter().zip(&values) {
            self.constants.insert(Sym::new(m), *v);
        }
        self.declare_type(name, values);
    }

    pub fn define_constant(&mut self, name: impl Into<Sym>, v: Value) {
        self.constants.insert(name.into(), v);
    }

    pub fn define_function(&mut self, name: impl Into<Sym>, params: Vec<Sym>, body: Expr) {
        self.functions.insert(name.into(), FnDef { params, body: FnBody::Expr(body) });
    }

    pub fn define_native(
        &mut self,
        name: impl Into<Sym>,
        arity: usize,
        f: impl Fn(&[Value]) -> Result<Value> + Send + Sync + 'static,
    ) {
        let params = (0..arity).map(|i| Sym::new(&format!("_{i}"))).collect();
        self.functions.insert(name.into(), FnDef { params, body: FnBody::Native(Arc::new(f)) });
    }

    /// Adds or replaces a process definition.
    pub fn define(&mut self, name: impl Into<Sym>, params: Vec<Sym>, body: Proc) {
        self.defs.insert(name.into(), ProcDef { params, body });
        self.unfolded.clear();
        self.memo.clear();
    }

    pub fn define_event_set(&mut self, name: impl Into<Sym>, set: EventSet) {
        self.sets.insert(name.into(), set);
    }

    pub fn event_set(&self, name: Sym) -> Option<&EventSet> {
        self.sets.get(&name)
    }

    pub fn def(&self, name: Sym) -> Option<&ProcDef> {
        self.defs.get(&name)
    }

    pub fn has_def(&self, name: &str) -> bool {
        self.defs.contains_key(&Sym::new(name))
    }

    pub fn is_function(&self, name: Sym) -> bool {
        self.functions.contains_key(&name)
    }

    pub fn is_channel(&self, name: Sym) -> bool {
        self.channels.contains_key(&name)
    }

    pub fn type_values(&self, name: Sym) -> Option<Arc<[Value]>> {
        self.types.get(&name).cloned()
    }

    pub fn constant_value(&self, name: Sym) -> Option<Value> {
        self.constants.get(&name).copied()
    }

    pub fn domain(&self, channel: Sym) -> Result<&Arc<[Value]>> {
        self.channels.get(&channel).ok_or_else(|| Error::UnboundName(channel.to_string()))
    }

    /// Channels in declaration order.
    pub fn channel_names(&self) -> &[Sym] {
        &self.channel_order
    }

    /// Channels whose name is `prefix` or starts with `prefix` followed by
    /// `.` or `::`.
    pub fn channels_with_prefix(&self, prefix: &str) -> Vec<Sym> {
        self.channel_order
            .iter()
            .copied()
            .filter(|c| {
                let s = c.as_str();
                s == prefix
                    || s.strip_prefix(prefix)
                        .is_some_and(|rest| rest.starts_with('.') || rest.starts_with("::"))
            })
            .collect()
    }

    /// All events of a set, channels expanded over their domains.
    pub fn enumerate(&self, set: &EventSet) -> Result<Vec<Event>> {
        let mut out = Vec::new();
        for &c in set.channel_list() {
            for &v in self.domain(c)?.iter() {
                out.push(Event::new(c, v));
            }
        }
        out.extend_from_slice(set.event_list());
        Ok(out)
    }

    /// Every event the declared channels can carry.
    pub fn all_events(&self) -> Vec<Event> {
        let mut out = Vec::new();
        for &c in &self.channel_order {
            for &v in self.channels[&c].iter() {
                out.push(Event::new(c, v));
            }
        }
        out
    }

    pub fn process(&self, name: &str) -> Result<Proc> {
        let s = Sym::new(name);
        let def = self.defs.get(&s).ok_or_else(|| Error::UnboundName(name.to_string()))?;
        if !def.params.is_empty() {
            return Err(Error::Arity { name: name.to_string(), expected: def.params.len(), got: 0 });
        }
        Ok(call(s, Vec::new()))
    }

    /// Body of a call with its parameters instantiated.
    pub fn unfold(&self, name: Sym, args: &[Expr]) -> Result<Proc> {
        let vals = args.iter().map(|a| a.eval(self)).collect::<Result<Vec<_>>>()?;
        let key = (name, vals);
        if let Some(p) = self.unfolded.get(&key) {
            return Ok(p.clone());
        }
        let def = self.defs.get(&name).ok_or_else(|| Error::UnboundName(name.to_string()))?;
        if def.params.len() != key.1.len() {
            return Err(Error::Arity { name: name.to_string(), expected: def.params.len(), got: key.1.len() });
        }
        let bindings: Vec<(Sym, Value)> = def.params.iter().copied().zip(key.1.iter().copied()).collect();
        let body = def.body.subst(&bindings);
        self.unfolded.insert(key, body.clone());
        Ok(body)
    }
}

/// Memoized transitions of named processes. The table is dropped when it
/// grows past `MEMO_LIMIT` entries.
const MEMO_LIMIT: usize = 1 << 18;

impl Env {
    pub(crate) fn memo_get(&self, p: &Proc) -> Option<Arc<[Transition]>> {
        self.memo.get(p).map(|t| t.clone())
    }

    pub(crate) fn memo_put(&self, p: Proc, ts: Arc<[Transition]>) {
        if self.memo.len() >= MEMO_LIMIT {
            self.memo.clear();
        }
        self.memo.insert(p, ts);
    }
}

impl Globals for Env {
    fn constant(&self, name: Sym) -> Option<Value> {
        self.constants.get(&name).copied()
    }

    fn call(&self, name: Sym, args: &[Value]) -> Result<Value> {
        let f = self.functions.get(&name).ok_or_else(|| Error::UnboundName(name.to_string()))?;
        if f.params.len() != args.len() {
            return Err(Error::Arity { name: name.to_string(), expected: f.params.len(), got: args.len() });
        }
        match &f.body {
            FnBody::Native(native) => native(args),
            FnBody::Expr(body) => {
                let locals: Vec<(Sym, Value)> = f.params.iter().copied().zip(args.iter().copied()).collect();
                body.eval_in(self, &locals)
            }
        }
    }
}

//! Process terms.
//!
//! Terms are immutable and shared. Every node caches its structural hash so
//! that state tables can hash and compare large terms cheaply.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rustc_hash::FxHasher;

use crate::event::{EventSet, EventSetRef};
use crate::expr::Expr;
use crate::symbol::Sym;
use crate::value::Value;

/// Data part of a prefix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Field {
    None,
    Out(Expr),
    /// Input binding `var`, optionally restricted by a predicate over it.
    In { var: Sym, restrict: Option<Expr> },
}

/// Channel-level renaming. Each source channel maps to one or more targets.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Renaming {
    pairs: Vec<(Sym, Vec<Sym>)>,
}

impl Renaming {
    pub fn new(pairs: impl IntoIterator<Item = (Sym, Sym)>) -> Renaming {
        let mut out: Vec<(Sym, Vec<Sym>)> = Vec::new();
        for (from, to) in pairs {
            match out.iter_mut().find(|(f, _)| *f == from) {
                Some((_, targets)) => {
                    if !targets.contains(&to) {
                        targets.push(to)
                    }
                }
                None => out.push((from, vec![to])),
            }
        }
        out.sort_by_key(|(f, _)| *f);
        Renaming { pairs: out }
    }

    pub fn targets(&self, channel: Sym) -> Option<&[Sym]> {
        self.pairs
            .binary_search_by_key(&channel, |(f, _)| *f)
            .ok()
            .map(|i| self.pairs[i].1.as_slice())
    }

    pub fn pairs(&self) -> impl Iterator<Item = (Sym, Sym)> + '_ {
        self.pairs.iter().flat_map(|(f, ts)| ts.iter().map(move |t| (*f, *t)))
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Kind {
    Skip,
    Stop,
    UStop,
    /// The terminated process.
    Omega,
    Wait(Expr),
    Prefix { channel: Sym, field: Field, cont: Proc },
    If(Expr, Proc, Proc),
    ExtChoice(Proc, Proc),
    IntChoice(Proc, Proc),
    Seq(Proc, Proc),
    Hide(Proc, EventSetRef),
    Project(Proc, EventSetRef),
    Par(Proc, EventSetRef, Proc),
    Rename(Proc, Arc<Renaming>),
    Interrupt(Proc, Proc),
    Exception(Proc, EventSetRef, Proc),
    Call(Sym, Arc<[Expr]>),
    TimedPriority(Proc),
    Run(EventSetRef),
}

struct Node {
    hash: u64,
    /// Conservative bloom filter of variable names occurring in the term.
    vars: u64,
    kind: Kind,
}

#[derive(Clone)]
pub struct Proc(Arc<Node>);

impl PartialEq for Proc {
    fn eq(&self, other: &Proc) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.hash == other.0.hash && self.0.kind == other.0.kind)
    }
}

impl Eq for Proc {}

impl Hash for Proc {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash)
    }
}

fn var_bit(s: Sym) -> u64 {
    let mut h = FxHasher::default();
    s.hash(&mut h);
    1u64 << (h.finish() % 64)
}

fn expr_vars(e: &Expr) -> u64 {
    match e {
        Expr::Const(_) | Expr::Name(_) => 0,
        Expr::Var(x) => var_bit(*x),
        Expr::Unary(_, a) | Expr::Member(a, _) => expr_vars(a),
        Expr::Binary(_, a, b) => expr_vars(a) | expr_vars(b),
        Expr::If(c, a, b) => expr_vars(c) | expr_vars(a) | expr_vars(b),
        Expr::Call(_, args) => args.iter().fold(0, |m, a| m | expr_vars(a)),
    }
}

fn kind_vars(k: &Kind) -> u64 {
    match k {
        Kind::Skip | Kind::Stop | Kind::UStop | Kind::Omega | Kind::Run(_) => 0,
        Kind::Wait(e) => expr_vars(e),
        Kind::Prefix { field, cont, .. } => {
            let f = match field {
                Field::None => 0,
                Field::Out(e) => expr_vars(e),
                Field::In { restrict, .. } => restrict.as_ref().map_or(0, expr_vars),
            };
            f | cont.0.vars
        }
        Kind::If(e, p, q) => expr_vars(e) | p.0.vars | q.0.vars,
        Kind::ExtChoice(p, q)
        | Kind::IntChoice(p, q)
        | Kind::Seq(p, q)
        | Kind::Par(p, _, q)
        | Kind::Interrupt(p, q)
        | Kind::Exception(p, _, q) => p.0.vars | q.0.vars,
        Kind::Hide(p, _) | Kind::Project(p, _) | Kind::Rename(p, _) | Kind::TimedPriority(p) => p.0.vars,
        Kind::Call(_, args) => args.iter().fold(0, |m, a| m | expr_vars(a)),
    }
}

impl Proc {
    pub fn from_kind(kind: Kind) -> Proc {
        let mut h = FxHasher::default();
        kind.hash(&mut h);
        let vars = kind_vars(&kind);
        Proc(Arc::new(Node { hash: h.finish(), vars, kind }))
    }

    pub fn kind(&self) -> &Kind {
        &self.0.kind
    }

    pub fn structural_hash(&self) -> u64 {
        self.0.hash
    }

    pub fn has_free_vars(&self) -> bool {
        self.0.vars != 0
    }

    pub fn is_omega(&self) -> bool {
        matches!(self.kind(), Kind::Omega)
    }

    /// Substitutes values for free variables.
    pub fn subst(&self, bindings: &[(Sym, Value)]) -> Proc {
        let mask = bindings.iter().fold(0, |m, (x, _)| m | var_bit(*x));
        self.subst_masked(bindings, mask)
    }

    fn subst_masked(&self, b: &[(Sym, Value)], mask: u64) -> Proc {
        if self.0.vars & mask == 0 {
            return self.clone();
        }
        let s = |p: &Proc| p.subst_masked(b, mask);
        let k = match self.kind() {
            Kind::Skip | Kind::Stop | Kind::UStop | Kind::Omega | Kind::Run(_) => return self.clone(),
            Kind::Wait(e) => Kind::Wait(e.subst(b)),
            Kind::Prefix { channel, field, cont } => match field {
                Field::None => Kind::Prefix { channel: *channel, field: Field::None, cont: s(cont) },
                Field::Out(e) => Kind::Prefix { channel: *channel, field: Field::Out(e.subst(b)), cont: s(cont) },
                Field::In { var, restrict } => {
                    let inner: Vec<(Sym, Value)> = b.iter().filter(|(x, _)| x != var).copied().collect();
                    let field = Field::In { var: *var, restrict: restrict.as_ref().map(|r| r.subst(&inner)) };
                    Kind::Prefix { channel: *channel, field, cont: cont.subst(&inner) }
                }
            },
            Kind::If(e, p, q) => Kind::If(e.subst(b), s(p), s(q)),
            Kind::ExtChoice(p, q) => Kind::ExtChoice(s(p), s(q)),
            Kind::IntChoice(p, q) => Kind::IntChoice(s(p), s(q)),
            Kind::Seq(p, q) => Kind::Seq(s(p), s(q)),
            Kind::Hide(p, x) => Kind::Hide(s(p), x.clone()),
            Kind::Project(p, x) => Kind::Project(s(p), x.clone()),
            Kind::Par(p, x, q) => Kind::Par(s(p), x.clone(), s(q)),
            Kind::Rename(p, r) => Kind::Rename(s(p), r.clone()),
            Kind::Interrupt(p, q) => Kind::Interrupt(s(p), s(q)),
            Kind::Exception(p, x, q) => Kind::Exception(s(p), x.clone(), s(q)),
            Kind::Call(n, args) => Kind::Call(*n, args.iter().map(|a| a.subst(b)).collect()),
            Kind::TimedPriority(p) => Kind::TimedPriority(s(p)),
        };
        normalize(k)
    }
}

/// Local simplifications applied by every constructor.
fn normalize(k: Kind) -> Proc {
    match k {
        Kind::Seq(p, q) => seq(p, q),
        Kind::Wait(Expr::Const(Value::Int(n))) if n <= 0 => skip(),
        Kind::TimedPriority(p) => timed_priority(p),
        k => Proc::from_kind(k),
    }
}

pub fn skip() -> Proc {
    Proc::from_kind(Kind::Skip)
}

pub fn stop() -> Proc {
    Proc::from_kind(Kind::Stop)
}

pub fn ustop() -> Proc {
    Proc::from_kind(Kind::UStop)
}

pub fn omega() -> Proc {
    Proc::from_kind(Kind::Omega)
}

pub fn wait(d: Expr) -> Proc {
    normalize(Kind::Wait(d))
}

pub fn wait_n(d: i64) -> Proc {
    wait(Expr::int(d))
}

pub fn prefix(channel: impl Into<Sym>, field: Field, cont: Proc) -> Proc {
    Proc::from_kind(Kind::Prefix { channel: channel.into(), field, cont })
}

pub fn event(channel: impl Into<Sym>, cont: Proc) -> Proc {
    prefix(channel, Field::None, cont)
}

pub fn output(channel: impl Into<Sym>, e: Expr, cont: Proc) -> Proc {
    prefix(channel, Field::Out(e), cont)
}

pub fn input(channel: impl Into<Sym>, var: &str, cont: Proc) -> Proc {
    prefix(channel, Field::In { var: Sym::new(var), restrict: None }, cont)
}

pub fn if_then_else(c: Expr, p: Proc, q: Proc) -> Proc {
    Proc::from_kind(Kind::If(c, p, q))
}

pub fn ext_choice(p: Proc, q: Proc) -> Proc {
    Proc::from_kind(Kind::ExtChoice(p, q))
}

pub fn int_choice(p: Proc, q: Proc) -> Proc {
    Proc::from_kind(Kind::IntChoice(p, q))
}

pub fn seq(p: Proc, q: Proc) -> Proc {
    match p.kind() {
        Kind::Skip => q,
        Kind::UStop | Kind::Stop => p,
        _ => Proc::from_kind(Kind::Seq(p, q)),
    }
}

pub fn hide(p: Proc, x: EventSet) -> Proc {
    if x.is_empty() {
        return p;
    }
    Proc::from_kind(Kind::Hide(p, Arc::new(x)))
}

pub fn project(p: Proc, x: EventSet) -> Proc {
    Proc::from_kind(Kind::Project(p, Arc::new(x)))
}

pub fn par(p: Proc, x: EventSet, q: Proc) -> Proc {
    Proc::from_kind(Kind::Par(p, Arc::new(x), q))
}

pub fn interleave(p: Proc, q: Proc) -> Proc {
    par(p, EventSet::empty(), q)
}

pub fn rename(p: Proc, r: Renaming) -> Proc {
    Proc::from_kind(Kind::Rename(p, Arc::new(r)))
}

pub fn interrupt(p: Proc, q: Proc) -> Proc {
    Proc::from_kind(Kind::Interrupt(p, q))
}

pub fn exception(p: Proc, x: EventSet, q: Proc) -> Proc {
    Proc::from_kind(Kind::Exception(p, Arc::new(x), q))
}

pub fn call(name: impl Into<Sym>, args: Vec<Expr>) -> Proc {
    Proc::from_kind(Kind::Call(name.into(), args.into()))
}

pub fn timed_priority(p: Proc) -> Proc {
    match p.kind() {
        Kind::Omega | Kind::UStop | Kind::TimedPriority(_) => p,
        _ => Proc::from_kind(Kind::TimedPriority(p)),
    }
}

/// `TRUN(X)`: offers every event of `X` and `tock` forever.
pub fn trun(x: EventSet) -> Proc {
    Proc::from_kind(Kind::Run(Arc::new(x)))
}

/// `EndBy(P, d)`: `P` must terminate within `d` time units.
pub fn end_by(p: Proc, d: Expr) -> Proc {
    interrupt(p, seq(wait(d), ustop()))
}

/// `ADeadline(S, E, d)`: events of `S` may happen freely, an event of `E`
/// must happen within `d` time units.
pub fn a_deadline(s: EventSet, e: EventSet, d: Expr) -> Proc {
    exception(end_by(trun(s), d), e, skip())
}

impl fmt::Debug for Proc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Proc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            Kind::Skip => f.write_str("SKIP"),
            Kind::Stop => f.write_str("STOP"),
            Kind::UStop => f.write_str("USTOP"),
            Kind::Omega => f.write_str("Ω"),
            Kind::Wait(e) => write!(f, "WAIT({e})"),
            Kind::Prefix { channel, field, cont } => {
                match field {
                    Field::None => write!(f, "{channel}")?,
                    Field::Out(e) => write!(f, "{channel}!{e}")?,
                    Field::In { var, .. } => write!(f, "{channel}?{var}")?,
                }
                write!(f, " -> {cont}")
            }
            Kind::If(c, p, q) => write!(f, "(if {c} then {p} else {q})"),
            Kind::ExtChoice(p, q) => write!(f, "({p} [] {q})"),
            Kind::IntChoice(p, q) => write!(f, "({p} |~| {q})"),
            Kind::Seq(p, q) => write!(f, "({p} ; {q})"),
            Kind::Hide(p, x) => write!(f, "({p} \\ {x})"),
            Kind::Project(p, x) => write!(f, "({p} |\\ {x})"),
            Kind::Par(p, x, q) if x.is_empty() => write!(f, "({p} ||| {q})"),
            Kind::Par(p, x, q) => write!(f, "({p} [|{x}|] {q})"),
            Kind::Rename(p, r) => {
                write!(f, "{p}[[")?;
                for (i, (a, b)) in r.pairs().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a} <- {b}")?;
                }
                f.write_str("]]")
            }
            Kind::Interrupt(p, q) => write!(f, "({p} /\\ {q})"),
            Kind::Exception(p, x, q) => write!(f, "({p} [|{x}|> {q})"),
            Kind::Call(n, args) if args.is_empty() => write!(f, "{n}"),
            Kind::Call(n, args) => {
                write!(f, "{n}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Kind::TimedPriority(p) => write!(f, "timed_priority({p})"),
            Kind::Run(x) => write!(f, "TRUN({x})"),
        }
    }
}

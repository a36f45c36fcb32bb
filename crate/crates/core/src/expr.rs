use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::symbol::Sym;
use crate::value::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }
}

/// Data expressions.
///
/// `Var` is a variable bound by a process parameter, an input prefix or a
/// function parameter. `Name` is resolved in the environment: an enum
/// member, a constant or a zero-argument function.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(Value),
    Var(Sym),
    Name(Sym),
    Unary(UnOp, Arc<Expr>),
    Binary(BinOp, Arc<Expr>, Arc<Expr>),
    If(Arc<Expr>, Arc<Expr>, Arc<Expr>),
    Call(Sym, Arc<[Expr]>),
    Member(Arc<Expr>, Arc<[Value]>),
}

/// Resolution of global names during evaluation.
pub trait Globals {
    fn constant(&self, name: Sym) -> Option<Value>;
    fn call(&self, name: Sym, args: &[Value]) -> Result<Value>;
}

impl Expr {
    pub fn int(i: i64) -> Expr {
        Expr::Const(Value::Int(i))
    }

    pub fn bool(b: bool) -> Expr {
        Expr::Const(Value::Bool(b))
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(Sym::new(name))
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Arc::new(a), Arc::new(b))
    }

    pub fn is_closed(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Name(_) => true,
            Expr::Var(_) => false,
            Expr::Unary(_, a) | Expr::Member(a, _) => a.is_closed(),
            Expr::Binary(_, a, b) => a.is_closed() && b.is_closed(),
            Expr::If(c, a, b) => c.is_closed() && a.is_closed() && b.is_closed(),
            Expr::Call(_, args) => args.iter().all(Expr::is_closed),
        }
    }

    /// Replaces free occurrences of the given variables by constants.
    pub fn subst(&self, bindings: &[(Sym, Value)]) -> Expr {
        if self.is_closed() {
            return self.clone();
        }
        match self {
            Expr::Var(x) => match bindings.iter().rev().find(|(n, _)| n == x) {
                Some((_, v)) => Expr::Const(*v),
                None => self.clone(),
            },
            Expr::Const(_) | Expr::Name(_) => self.clone(),
            Expr::Unary(op, a) => Expr::Unary(*op, Arc::new(a.subst(bindings))),
            Expr::Binary(op, a, b) => Expr::Binary(*op, Arc::new(a.subst(bindings)), Arc::new(b.subst(bindings))),
            Expr::If(c, a, b) => Expr::If(
                Arc::new(c.subst(bindings)),
                Arc::new(a.subst(bindings)),
                Arc::new(b.subst(bindings)),
            ),
            Expr::Call(f, args) => Expr::Call(*f, args.iter().map(|a| a.subst(bindings)).collect()),
            Expr::Member(a, set) => Expr::Member(Arc::new(a.subst(bindings)), set.clone()),
        }
    }

    pub fn eval(&self, g: &dyn Globals) -> Result<Value> {
        self.eval_in(g, &[])
    }

    pub fn eval_in(&self, g: &dyn Globals, locals: &[(Sym, Value)]) -> Result<Value> {
        match self {
            Expr::Const(v) => Ok(*v),
            Expr::Var(x) => locals
                .iter()
                .rev()
                .find(|(n, _)| n == x)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::UnboundName(x.to_string())),
            Expr::Name(n) => match g.constant(*n) {
                Some(v) => Ok(v),
                None => g.call(*n, &[]),
            },
            Expr::Unary(op, a) => {
                let v = a.eval_in(g, locals)?;
                match (op, v) {
                    (UnOp::Neg, Value::Int(i)) => Ok(Value::Int(-i)),
                    (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
                    _ => Err(Error::TypeError(format!("cannot apply {op:?} to {v}"))),
                }
            }
            Expr::Binary(BinOp::And, a, b) => {
                if !bool_of(a.eval_in(g, locals)?)? {
                    return Ok(Value::Bool(false));
                }
                Ok(Value::Bool(bool_of(b.eval_in(g, locals)?)?))
            }
            Expr::Binary(BinOp::Or, a, b) => {
                if bool_of(a.eval_in(g, locals)?)? {
                    return Ok(Value::Bool(true));
                }
                Ok(Value::Bool(bool_of(b.eval_in(g, locals)?)?))
            }
            Expr::Binary(op, a, b) => binary(*op, a.eval_in(g, locals)?, b.eval_in(g, locals)?),
            Expr::If(c, a, b) => {
                if bool_of(c.eval_in(g, locals)?)? {
                    a.eval_in(g, locals)
                } else {
                    b.eval_in(g, locals)
                }
            }
            Expr::Call(f, args) => {
                let vals = args.iter().map(|a| a.eval_in(g, locals)).collect::<Result<Vec<_>>>()?;
                g.call(*f, &vals)
            }
            Expr::Member(a, set) => {
                let v = a.eval_in(g, locals)?;
                Ok(Value::Bool(set.contains(&v)))
            }
        }
    }
}

pub fn bool_of(v: Value) -> Result<bool> {
    v.as_bool().ok_or_else(|| Error::TypeError(format!("expected bool, got {v}")))
}

fn binary(op: BinOp, a: Value, b: Value) -> Result<Value> {
    use Value::Int;
    let r = match (op, a, b) {
        (BinOp::Eq, a, b) => Value::Bool(a == b),
        (BinOp::Ne, a, b) => Value::Bool(a != b),
        (BinOp::Add, Int(x), Int(y)) => Int(x + y),
        (BinOp::Sub, Int(x), Int(y)) => Int(x - y),
        (BinOp::Mul, Int(x), Int(y)) => Int(x * y),
        (BinOp::Div | BinOp::Mod, Int(_), Int(0)) => return Err(Error::DivisionByZero),
        (BinOp::Div, Int(x), Int(y)) => Int(x / y),
        (BinOp::Mod, Int(x), Int(y)) => Int(x.rem_euclid(y)),
        (BinOp::Lt, Int(x), Int(y)) => Value::Bool(x < y),
        (BinOp::Le, Int(x), Int(y)) => Value::Bool(x <= y),
        (BinOp::Gt, Int(x), Int(y)) => Value::Bool(x > y),
        (BinOp::Ge, Int(x), Int(y)) => Value::Bool(x >= y),
        _ => return Err(Error::TypeError(format!("cannot apply `{}` to {a} and {b}", op.symbol()))),
    };
    Ok(r)
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Var(x) | Expr::Name(x) => write!(f, "{x}"),
            Expr::Unary(UnOp::Neg, a) => write!(f, "-{a}"),
            Expr::Unary(UnOp::Not, a) => write!(f, "not {a}"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::If(c, a, b) => write!(f, "(if {c} then {a} else {b})"),
            Expr::Call(n, args) => {
                write!(f, "{n}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Expr::Member(a, set) => {
                write!(f, "member({a}, {{")?;
                for (i, v) in set.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("})")
            }
        }
    }
}

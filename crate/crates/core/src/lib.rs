//! tock-CSP process kernel, LTS construction and refinement checking.

pub mod alphabet;
pub mod check;
pub mod env;
pub mod error;
pub mod event;
pub mod expr;
pub mod lts;
pub mod parse;
pub mod report;
pub mod semantics;
pub mod symbol;
pub mod term;
pub mod value;

pub use env::Env;
pub use error::{Error, Result};
pub use event::{Event, EventSet, Label};
pub use expr::{BinOp, Expr};
pub use symbol::Sym;
pub use term::Proc;
pub use value::Value;

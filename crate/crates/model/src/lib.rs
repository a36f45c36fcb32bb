//! The high-voltage controller case study: software model, platform
//! mapping, hardware abstraction, the P1 system interface, specifications
//! and the assertion registry.

mod instantiation;
mod model;
mod mutant;

pub use instantiation::{duty2volt, Instantiation, Profile, TimeScale};
pub use model::{build, Model, ModelError, ASSERTIONS};
pub use mutant::Mutant;

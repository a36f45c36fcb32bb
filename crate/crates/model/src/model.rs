use hvc_core::check::{self, Assertion, Verdict};
use hvc_core::lts::ExplorationLimits;
use hvc_core::parse::parse_script;
use hvc_core::{Env, Value};

use crate::instantiation::{Instantiation, TimeScale};

pub const SOFTWARE: &str = include_str!("../models/software.csp");
pub const PLATFORM: &str = include_str!("../models/platform.csp");
pub const MAPPING: &str = include_str!("../models/mapping.csp");
pub const IMPL_P1: &str = include_str!("../models/impl_p1.csp");
pub const SPECS: &str = include_str!("../models/specs.csp");
pub const ASSERTION_SCRIPT: &str = include_str!("../models/assertions.csp");

/// Registered assertions in report order.
pub const ASSERTIONS: [&str; 10] = [
    "P1",
    "P2",
    "P3",
    "P4",
    "Reach_Init",
    "Reach_Wait24VPower",
    "Reach_ClosedLoop",
    "Reach_ErrorMode",
    "Reach_Watchdog_s0",
    "Reach_Watchdog_s1",
];

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid instantiation: {0}")]
    Instantiation(String),
    #[error("in {script}: {source}")]
    Script { script: String, source: hvc_core::Error },
    #[error(transparent)]
    Core(#[from] hvc_core::Error),
}

pub struct Model {
    pub env: Env,
    pub assertions: Vec<Assertion>,
    pub instantiation: Instantiation,
    pub scale: TimeScale,
}

impl Model {
    pub fn assertion(&self, name: &str) -> Result<&Assertion, ModelError> {
        self.assertions
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| hvc_core::Error::UnknownAssertion(name.to_string()).into())
    }

    pub fn check(&self, name: &str, limits: &ExplorationLimits) -> Result<Verdict, ModelError> {
        Ok(check::check(&self.env, self.assertion(name)?, limits))
    }
}

/// Loads the full model. `overrides` are extra scripts, such as mutants,
/// whose definitions replace the standard ones.
pub fn build(inst: &Instantiation, scale: TimeScale, overrides: &[(&str, &str)]) -> Result<Model, ModelError> {
    inst.validate()?;
    scale.validate(inst)?;
    let mut env = Env::new();
    let tick = scale.tick_ms as i64;
    env.define_native("ms", 1, move |a| Ok(Value::Int(ceil_div(int(&a[0])?, tick))));
    env.define_native("s", 1, move |a| Ok(Value::Int(ceil_div(int(&a[0])? * 1000, tick))));
    let volt2duty: Vec<i64> = (0..=inst.core_real_max).map(|v| inst.volt2duty(v).unwrap()).collect();
    env.define_native("volt2duty", 1, move |a| {
        let v = int(&a[0])?;
        volt2duty
            .get(v as usize)
            .map(|&d| Value::Int(d))
            .ok_or_else(|| hvc_core::Error::DomainError { channel: "volt2duty".into(), value: v.to_string() })
    });

    // Scripts are parsed as one unit so that later definitions override
    // earlier ones and forward references resolve.
    let mut src = scale.prelude(inst);
    for part in [SOFTWARE, PLATFORM, MAPPING, IMPL_P1, SPECS] {
        src.push_str(part);
        src.push('\n');
    }
    for (_, text) in overrides {
        src.push_str(text);
        src.push('\n');
    }
    src.push_str(ASSERTION_SCRIPT);
    let assertions = parse_script(&mut env, &src).map_err(|e| ModelError::Script {
        script: if overrides.is_empty() {
            "model".to_string()
        } else {
            overrides.iter().map(|o| o.0).collect::<Vec<_>>().join(", ")
        },
        source: e,
    })?;
    Ok(Model { env, assertions, instantiation: inst.clone(), scale })
}

fn int(v: &Value) -> hvc_core::Result<i64> {
    v.as_int().ok_or_else(|| hvc_core::Error::TypeError(format!("expected an integer, got {v}")))
}

fn ceil_div(a: i64, b: i64) -> i64 {
    (a + b - 1).div_euclid(b)
}

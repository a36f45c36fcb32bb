/// Faulty variants of the model. Each one is a script whose definitions
/// replace those of the same name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mutant {
    /// supplyVoltCheck never calls disableHV.
    NoDisableHv,
    /// disableHV does not reset mSetPoint.
    NoMSetPointReset,
    /// Evolution waits 3200 ms instead of 370 ms.
    SlowEvolution,
}

impl Mutant {
    pub const ALL: [Mutant; 3] = [Mutant::NoDisableHv, Mutant::NoMSetPointReset, Mutant::SlowEvolution];

    pub fn name(self) -> &'static str {
        match self {
            Mutant::NoDisableHv => "no-disable-hv",
            Mutant::NoMSetPointReset => "no-msetpoint-reset",
            Mutant::SlowEvolution => "slow-evolution",
        }
    }

    pub fn source(self) -> &'static str {
        match self {
            Mutant::NoDisableHv => include_str!("../../../mutants/no-disable-hv.csp"),
            Mutant::NoMSetPointReset => include_str!("../../../mutants/no-msetpoint-reset.csp"),
            Mutant::SlowEvolution => include_str!("../../../mutants/slow-evolution.csp"),
        }
    }

    /// Accepts the bare name or a path such as `mutants/no-disable-hv.csp`.
    pub fn from_name(s: &str) -> Option<Mutant> {
        let base = s.rsplit('/').next().unwrap_or(s);
        let base = base.strip_suffix(".csp").unwrap_or(base);
        Mutant::ALL.into_iter().find(|m| m.name() == base)
    }
}

use std::fmt::Write;

use crate::model::ModelError;

/// Data domains and constants of the software model.
#[derive(Clone, Debug, PartialEq)]
pub struct Instantiation {
    /// `core_real` is `{0..core_real_max}`.
    pub core_real_max: i64,
    pub core_nat_max: i64,
    pub core_int_max: i64,
    pub duty: Vec<i64>,
    pub cycle_ms: u32,
    pub ramp_step: i64,
    /// Distance of the over and under voltage limits from the ramped
    /// setpoint.
    pub limit_margin: i64,
}

impl Default for Instantiation {
    fn default() -> Self {
        Instantiation {
            core_real_max: 2,
            core_nat_max: 1,
            core_int_max: 1,
            duty: vec![0, 40, 80],
            cycle_ms: 10,
            ramp_step: 1,
            limit_margin: 2,
        }
    }
}

pub fn duty2volt(x: i64) -> i64 {
    match x {
        0..=19 => 0,
        20..=60 => 1,
        61..=100 => 2,
        _ => 0,
    }
}

impl Instantiation {
    pub fn full_duty(mut self) -> Self {
        self.duty = (0..=100).collect();
        self
    }

    /// Duty cycle emitted for a target voltage: the member of the duty
    /// domain in the voltage's band that is closest to 40 times the voltage.
    pub fn volt2duty(&self, v: i64) -> Option<i64> {
        self.duty.iter().copied().filter(|&d| duty2volt(d) == v).min_by_key(|&d| ((d - 40 * v).abs(), d))
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.core_real_max < 0 || self.core_nat_max < 0 || self.core_int_max < 0 {
            return Err(ModelError::Instantiation("domains must be non-empty".into()));
        }
        for v in 0..=self.core_real_max {
            if self.volt2duty(v).is_none() {
                return Err(ModelError::Instantiation(format!("duty domain has no value for voltage {v}")));
            }
        }
        if self.duty.iter().any(|d| !(0..=100).contains(d)) {
            return Err(ModelError::Instantiation("duty values must lie in 0..100".into()));
        }
        if self.ramp_step <= 0 {
            return Err(ModelError::Instantiation("rampStep must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    /// 2 ms per time unit; every duration of the model is exact.
    Paper,
    /// 5 ms per time unit; delays that do not divide are rounded up.
    Desk,
}

impl std::str::FromStr for Profile {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Profile::Paper),
            "desk" => Ok(Profile::Desk),
            _ => Err(ModelError::Instantiation(format!("unknown profile `{s}` (expected paper or desk)"))),
        }
    }
}

/// Conversion of physical durations to time units.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TimeScale {
    pub tick_ms: u32,
}

impl TimeScale {
    pub fn of(profile: Profile) -> TimeScale {
        match profile {
            Profile::Paper => TimeScale { tick_ms: 2 },
            Profile::Desk => TimeScale { tick_ms: 5 },
        }
    }

    /// Time units covering `ms`, rounded up.
    pub fn ticks(&self, ms: u64) -> u64 {
        ms.div_ceil(self.tick_ms as u64)
    }

    pub fn exact(&self, ms: u64) -> bool {
        ms % self.tick_ms as u64 == 0
    }

    pub fn cycle(&self, inst: &Instantiation) -> u64 {
        self.ticks(inst.cycle_ms as u64)
    }

    /// Watchdog delays: before the first check, from `s0` to `s1`, and from
    /// `s1` back to `s0`. The last two always add up to one cycle so that
    /// the watchdog keeps its phase relative to the state machine.
    pub fn watchdog(&self, inst: &Instantiation) -> (u64, u64, u64) {
        let check = 2 / self.tick_ms as u64;
        (self.ticks(4), check, self.cycle(inst) - check)
    }

    pub fn validate(&self, inst: &Instantiation) -> Result<(), ModelError> {
        if self.tick_ms == 0 {
            return Err(ModelError::Instantiation("tick_ms must be positive".into()));
        }
        // Deadlines are never rounded.
        for ms in [inst.cycle_ms as u64, 3000] {
            if !self.exact(ms) {
                return Err(ModelError::Instantiation(format!("{ms} ms is not a whole number of {} ms ticks", self.tick_ms)));
            }
        }
        Ok(())
    }

    /// Declarations shared by every script: data types, constants and the
    /// clamping functions.
    pub fn prelude(&self, inst: &Instantiation) -> String {
        let (wd_init, wd_check, wd_cycle) = self.watchdog(inst);
        let duty: Vec<String> = inst.duty.iter().map(i64::to_string).collect();
        let mut s = String::new();
        let _ = writeln!(s, "nametype core_real = {{0..{}}}", inst.core_real_max);
        let _ = writeln!(s, "nametype core_nat = {{0..{}}}", inst.core_nat_max);
        let _ = writeln!(s, "nametype core_int = {{0..{}}}", inst.core_int_max);
        let _ = writeln!(s, "nametype duty = {{{}}}", duty.join(", "));
        s.push_str("datatype Power = Power_On | Power_Off\n");
        s.push_str("datatype State = Init | Wait24Vpower | ClosedLoop | ErrorMode\n");
        let _ = writeln!(s, "overLimitF(x) = if x > {0} then {0} else x", inst.core_real_max);
        s.push_str("underLimitF(x) = if x < 0 then 0 else x\n");
        let _ = writeln!(s, "rampStep = {}", inst.ramp_step);
        let _ = writeln!(s, "LIMIT_MARGIN = {}", inst.limit_margin);
        let _ = writeln!(s, "CYCLE = {}", self.cycle(inst));
        let _ = writeln!(s, "WD_INIT = {wd_init}");
        let _ = writeln!(s, "WD_CHECK = {wd_check}");
        let _ = writeln!(s, "WD_CYCLE = {wd_cycle}");
        s
    }
}

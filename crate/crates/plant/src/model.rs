use num_traits::Float;

use crate::PlantError;

/// `G(s) = Kp / ((1 + Tp1 s)(1 + Tp2 s))` driven through a fixed input gain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantModel<T> {
    pub kp: T,
    pub tp1: T,
    pub tp2: T,
    /// Simulation step in seconds.
    pub step: T,
    /// Volts per unit of the discrete input value.
    pub input_gain: T,
}

impl<T: Float> PlantModel<T> {
    pub fn identified() -> Self {
        let c = |x: f64| T::from(x).unwrap();
        PlantModel { kp: c(1.1196), tp1: c(0.087821), tp2: c(0.02042), step: c(1e-6), input_gain: c(5.0) }
    }

    pub fn with_step(self, step: T) -> Self {
        PlantModel { step, ..self }
    }

    /// Exact zero-order-hold discretization. The plant is taken as two first
    /// order lags in series, `x1` driven by the input and `x2 = y` by `x1`.
    pub fn discretize(&self) -> Result<Discrete<T>, PlantError> {
        let ten = T::from(10.0).unwrap();
        if !(self.tp1 > T::zero() && self.tp2 > T::zero()) {
            return Err(PlantError::InvalidModel("time constants must be positive".into()));
        }
        if !(self.step > T::zero()) {
            return Err(PlantError::InvalidModel("step must be positive".into()));
        }
        if self.tp1 == self.tp2 {
            return Err(PlantError::InvalidModel("time constants must differ".into()));
        }
        if self.step > self.tp1.min(self.tp2) / ten {
            return Err(PlantError::StepTooLarge { step: self.step.to_f64().unwrap() });
        }
        let h = self.step;
        // 1 - exp(-h/T), accurate for h << T
        let e1 = -(-h / self.tp1).exp_m1();
        let e2 = -(-h / self.tp2).exp_m1();
        let a21 = self.tp1 * (e2 - e1) / (self.tp1 - self.tp2);
        Ok(Discrete {
            a11: T::one() - e1,
            a21,
            a22: T::one() - e2,
            b1: self.kp * e1,
            b2: self.kp * (e2 - a21),
        })
    }
}

/// `x1' = a11 x1 + b1 u`, `x2' = a21 x1 + a22 x2 + b2 u`, `y = x2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Discrete<T> {
    pub a11: T,
    pub a21: T,
    pub a22: T,
    pub b1: T,
    pub b2: T,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct State<T> {
    pub x1: T,
    pub x2: T,
}

impl<T: Float> Discrete<T> {
    /// Output of the stepper for input `u` held for one step.
    pub fn step(&self, s: State<T>, u: T) -> State<T> {
        State { x1: self.a11 * s.x1 + self.b1 * u, x2: self.a21 * s.x1 + self.a22 * s.x2 + self.b2 * u }
    }

    /// Steady-state output per unit input, `C (I - A)^-1 B`.
    pub fn dc_gain(&self) -> T {
        let one = T::one();
        let x1 = self.b1 / (one - self.a11);
        (self.a21 * x1 + self.b2) / (one - self.a22)
    }
}

impl<T: Float> State<T> {
    pub fn rest() -> Self {
        State { x1: T::zero(), x2: T::zero() }
    }

    pub fn output(&self) -> T {
        self.x2
    }
}

use num_traits::Float;

/// Convergence property of the hardware: once `settle` seconds have passed
/// since the input last changed, `E(t) <= 0` where
/// `E(t) = |u(t) - y(t)| - band * max(u(t), 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Monitor<T> {
    pub band: T,
    pub settle: T,
}

impl<T: Float> Monitor<T> {
    pub fn standard() -> Self {
        Monitor { band: T::from(0.15).unwrap(), settle: T::from(0.3668).unwrap() }
    }

    pub fn with_band(self, band: T) -> Self {
        Monitor { band, ..self }
    }

    /// `u` and `y` in volts.
    pub fn error(&self, u: T, y: T) -> T {
        (u - y).abs() - self.band * u.max(T::one())
    }
}

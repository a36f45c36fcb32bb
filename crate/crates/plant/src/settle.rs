use num_traits::Float;

use crate::model::{PlantModel, State};
use crate::PlantError;

/// Earliest time after an input step from `from` to `to` volts, starting in
/// the steady state for `from`, from which the output stays within
/// `band * max(to, 1)` of `to`.
pub fn settling_time<T: Float>(model: &PlantModel<T>, band: T, from: T, to: T) -> Result<T, PlantError> {
    let d = model.discretize()?;
    let width = band * to.max(T::one());
    let outside = |s: &State<T>| (to - s.output()).abs() > width;
    let y0 = model.kp * from;
    let mut s = State { x1: y0, x2: y0 };
    // Past this horizon both lags have decayed by e^-10.
    let horizon = T::from(10.0).unwrap() * (model.tp1 + model.tp2);
    let steps = (horizon / model.step).ceil().to_u64().unwrap();
    let mut last_outside = outside(&s).then_some(0u64);
    for k in 1..=steps {
        s = d.step(s, to);
        if outside(&s) {
            last_outside = Some(k);
        }
    }
    if outside(&s) {
        return Err(PlantError::NonConvergence);
    }
    Ok(last_outside.map_or(T::zero(), |k| T::from(k + 1).unwrap() * model.step))
}

/// Settling time of a step from rest to `u` input units.
pub fn estimate_settling_time<T: Float>(model: &PlantModel<T>, band: T, u: T) -> Result<T, PlantError> {
    settling_time(model, band, T::zero(), u * model.input_gain)
}

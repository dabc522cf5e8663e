//! Second-order system with an exponential nonlinearity and a disturbance in
//! the first channel, before and after the matching transformation.

use super::PlantError;

/// Largest |x₁| accepted before `e^{x₁}` is considered unsafe.
pub const EXPONENT_LIMIT: f64 = 20.0;

fn guarded_exp(x1: f64) -> Result<f64, PlantError> {
    if !(x1.abs() <= EXPONENT_LIMIT) {
        return Err(PlantError::ExponentOverflow(x1));
    }
    Ok(x1.exp())
}

/// ẋ₁ = x₂ + e^{x₁} + d, ẋ₂ = −2x₁ − x₂ + u. `d_dot` is unused here and only
/// kept so both forms share a signature.
pub fn example_mismatched_deriv(state: [f64; 2], u: f64, d: f64, _d_dot: f64) -> Result<[f64; 2], PlantError> {
    let [x1, x2] = state;
    let ex = guarded_exp(x1)?;
    Ok([x2 + ex + d, -2.0 * x1 - x2 + u])
}

/// Matched form: ẋ̃₁ = x̃₂, ẋ̃₂ = f(x̃) + u + d + ḋ with
/// f(x̃) = −2x̃₁ − x̃₂ + e^{x̃₁} + x̃₂·e^{x̃₁}.
///
/// Substituting x₂ = x̃₂ − e^{x̃₁} − d leaves `d`, not `e^{x̃₁}·d`: the
/// `e^{x̃₁}·d` terms from ẋ₁ and from the substitution cancel.
pub fn example_transformed_deriv(state: [f64; 2], u: f64, d: f64, d_dot: f64) -> Result<[f64; 2], PlantError> {
    let [x1, x2] = state;
    let ex = guarded_exp(x1)?;
    let drift = -2.0 * x1 - x2 + ex + x2 * ex;
    let matched_disturbance = d + d_dot;
    Ok([x2, drift + (u + matched_disturbance)])
}

/// Initial condition of the matched form consistent with `(x₁, x₂)`.
pub fn example_to_matched(state: [f64; 2], d: f64) -> Result<[f64; 2], PlantError> {
    let ex = guarded_exp(state[0])?;
    Ok([state[0], state[1] + ex + d])
}

//! Settling-time formulas for finite-time stable dynamics and a regularised
//! simulation of the scalar system `ė = −k·sgn(e)|e|^α` to check them.

use thiserror::Error;

use crate::plant::sgn;
use crate::sim::rk4_step;

#[derive(Debug, Error, PartialEq)]
pub enum FiniteTimeError {
    #[error("invalid finite-time spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteTimeSpec {
    /// Gain k > 0.
    pub k: f64,
    /// Exponent in (0, 1).
    pub alpha: f64,
    /// Initial error.
    pub e0: f64,
    /// Lyapunov decay constant, c > 1.
    pub c: f64,
    /// Initial Lyapunov value V(x₀) ≥ 0.
    pub v0: f64,
}

impl FiniteTimeSpec {
    /// Spec for the scalar system with `V₀ = e₀²/2` and `c = 2`.
    pub fn scalar(k: f64, alpha: f64, e0: f64) -> Result<Self, FiniteTimeError> {
        let spec = Self { k, alpha, e0, c: 2.0, v0: 0.5 * e0 * e0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), FiniteTimeError> {
        let bad = |msg: String| Err(FiniteTimeError::InvalidSpec(msg));
        if !(self.k > 0.0) {
            return bad(format!("k must be positive, got {}", self.k));
        }
        check_exponent(self.alpha)?;
        if !self.e0.is_finite() {
            return bad(format!("e0 must be finite, got {}", self.e0));
        }
        if !(self.c > 1.0) {
            return bad(format!("c must exceed 1, got {}", self.c));
        }
        if !(self.v0 >= 0.0) {
            return bad(format!("V0 must be non-negative, got {}", self.v0));
        }
        Ok(())
    }
}

fn check_exponent(alpha: f64) -> Result<(), FiniteTimeError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(FiniteTimeError::InvalidSpec(format!("exponent must be in (0, 1), got {alpha}")))
    }
}

/// `t_f = |e₀|^{1−α} / ((1−α)·k)`.
pub fn closed_form_settling_time(spec: &FiniteTimeSpec) -> f64 {
    spec.e0.abs().powf(1.0 - spec.alpha) / ((1.0 - spec.alpha) * spec.k)
}

/// Effective exponent `(1 + α)/2` of the observer error bound.
pub fn alpha_tilde(alpha: f64) -> f64 {
    0.5 * (1.0 + alpha)
}

/// Upper bound `V₀^{1−α} / (c(1−α))` on the settling time.
pub fn lyapunov_error_bound(spec: &FiniteTimeSpec, alpha_eff: f64) -> Result<f64, FiniteTimeError> {
    check_exponent(alpha_eff)?;
    if !(spec.c > 1.0) {
        return Err(FiniteTimeError::InvalidSpec(format!("c must exceed 1, got {}", spec.c)));
    }
    if !(spec.v0 >= 0.0) {
        return Err(FiniteTimeError::InvalidSpec(format!("V0 must be non-negative, got {}", spec.v0)));
    }
    Ok(spec.v0.powf(1.0 - alpha_eff) / (spec.c * (1.0 - alpha_eff)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteTimeRun {
    pub times: Vec<f64>,
    pub errors: Vec<f64>,
    /// First time the state was pinned at zero.
    pub settling_time: Option<f64>,
}

/// One-step capture radius `(k·dt)^{1/(1−α)}`.
pub fn capture_band(k: f64, alpha: f64, dt: f64) -> f64 {
    (k * dt).powf(1.0 / (1.0 - alpha))
}

/// RK4 integration of `ė = −k·sgn(e)|e|^α`. Once the state enters the
/// capture band, or a step would cross zero, it is pinned at zero.
///
/// Integration stops at the pin or at twice the analytic settling time.
pub fn simulate_finite_time_scalar(spec: &FiniteTimeSpec, dt: f64) -> Result<FiniteTimeRun, FiniteTimeError> {
    if !(spec.k > 0.0) || !spec.e0.is_finite() {
        return Err(FiniteTimeError::InvalidSpec(format!("k = {}, e0 = {}", spec.k, spec.e0)));
    }
    check_exponent(spec.alpha)?;
    if !(dt > 0.0) {
        return Err(FiniteTimeError::InvalidSpec(format!("dt must be positive, got {dt}")));
    }
    let (k, alpha) = (spec.k, spec.alpha);
    let band = capture_band(k, alpha, dt);
    let horizon = 2.0 * closed_form_settling_time(spec) + dt;
    let rhs = |_t: f64, e: &[f64]| vec![-k * sgn(e[0]) * e[0].abs().powf(alpha)];

    let mut times = vec![0.0];
    let mut errors = vec![spec.e0];
    if spec.e0.abs() < band {
        errors[0] = 0.0;
        return Ok(FiniteTimeRun { times, errors, settling_time: Some(0.0) });
    }
    let mut e = spec.e0;
    let mut step = 0usize;
    while (step as f64) * dt < horizon {
        let t = step as f64 * dt;
        let next = rk4_step(rhs, &[e], t, dt).expect("scalar field is finite")[0];
        step += 1;
        let t_next = step as f64 * dt;
        if next.abs() < band || sgn(next) != sgn(e) {
            times.push(t_next);
            errors.push(0.0);
            return Ok(FiniteTimeRun { times, errors, settling_time: Some(t_next) });
        }
        e = next;
        times.push(t_next);
        errors.push(e);
    }
    Ok(FiniteTimeRun { times, errors, settling_time: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(k: f64, alpha: f64, e0: f64) -> FiniteTimeSpec {
        FiniteTimeSpec::scalar(k, alpha, e0).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(closed_form_settling_time(&spec(1.0, 0.5, 1.0)), 2.0);
        assert_eq!(closed_form_settling_time(&spec(1.0, 0.5, 0.0)), 0.0);
        assert_eq!(closed_form_settling_time(&spec(2.0, 0.5, 4.0)), 2.0);
    }

    #[test]
    fn lyapunov_bound_examples() {
        let zero = FiniteTimeSpec { k: 1.0, alpha: 0.5, e0: 0.0, c: 2.0, v0: 0.0 };
        assert_eq!(lyapunov_error_bound(&zero, 0.75).unwrap(), 0.0);
        let unit = FiniteTimeSpec { v0: 1.0, ..zero };
        assert!((lyapunov_error_bound(&unit, 0.75).unwrap() - 2.0).abs() < 1e-15);
        let s = spec(1.0, 0.5, 1.0);
        let bound = lyapunov_error_bound(&s, alpha_tilde(s.alpha)).unwrap();
        assert!((bound - 1.681_792_830_507_429).abs() < 1e-12, "{bound}");
    }

    #[test]
    fn lyapunov_bound_enforces_c_above_one() {
        let s = FiniteTimeSpec { k: 1.0, alpha: 0.5, e0: 1.0, c: 0.5, v0: 0.5 };
        assert!(lyapunov_error_bound(&s, 0.75).is_err());
        assert!(s.validate().is_err());
        assert!(lyapunov_error_bound(&spec(1.0, 0.5, 1.0), 1.0).is_err());
    }

    #[test]
    fn simulated_settling_matches_closed_form() {
        let run = simulate_finite_time_scalar(&spec(1.0, 0.5, 1.0), 1e-5).unwrap();
        let ts = run.settling_time.unwrap();
        assert!((1.95..=2.05).contains(&ts), "{ts}");
    }

    #[test]
    fn negative_initial_error_mirrors() {
        let pos = simulate_finite_time_scalar(&spec(1.0, 0.5, 1.0), 1e-4).unwrap();
        let neg = simulate_finite_time_scalar(&spec(1.0, 0.5, -1.0), 1e-4).unwrap();
        assert_eq!(pos.settling_time, neg.settling_time);
        assert!(pos.errors.iter().zip(&neg.errors).all(|(a, b)| *a == -*b));
    }

    #[test]
    fn near_linear_exponent() {
        let s = spec(1.0, 0.99, 1.0);
        let predicted = closed_form_settling_time(&s);
        assert!((predicted - 100.0).abs() < 1e-9);
        let run = simulate_finite_time_scalar(&s, 1e-4 * predicted).unwrap();
        let ts = run.settling_time.unwrap();
        assert!((ts - predicted).abs() < 0.05 * predicted, "{ts}");
    }

    #[test]
    fn zero_initial_error_is_settled() {
        let run = simulate_finite_time_scalar(&spec(1.0, 0.5, 0.0), 1e-3).unwrap();
        assert_eq!(run.settling_time, Some(0.0));
    }
}

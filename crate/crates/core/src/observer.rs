//! Extended state observers for a plant of relative degree ρ: the linear
//! bandwidth-parameterised ESO, the saturation-like nonlinear ESO, and a
//! `fal`-based ESO for comparison.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::sim::SimTrace;

/// Largest relative degree accepted by the gain schedules.
pub const MAX_RHO: usize = 12;

/// Innovations `ω₀·e` are clamped to this magnitude before any power is taken.
pub const INNOVATION_CLAMP: f64 = 1e6;

#[derive(Debug, Error, PartialEq)]
pub enum ObserverError {
    #[error("relative degree must be in 1..={MAX_RHO}, got {0}")]
    RelativeDegree(usize),
    #[error("invalid observer gains: {0}")]
    InvalidGains(String),
    #[error("trace is missing channel {0}")]
    MissingChannel(String),
    #[error("unknown observer kind {0:?}")]
    UnknownKind(String),
}

/// Coefficients `a_i = (ρ+1)! / (i!(ρ+1−i)!)`, `i = 1..=ρ+1`, of `(s+1)^{ρ+1}`.
pub fn binomial_coeffs(rho: usize) -> Result<Vec<f64>, ObserverError> {
    if rho == 0 || rho > MAX_RHO {
        return Err(ObserverError::RelativeDegree(rho));
    }
    let n = rho as u64 + 1;
    let mut coeffs = Vec::with_capacity(rho + 1);
    let mut c: u64 = 1;
    for i in 1..=n {
        c = c * (n + 1 - i) / i;
        coeffs.push(c as f64);
    }
    Ok(coeffs)
}

fn check_bandwidth(omega0: f64) -> Result<(), ObserverError> {
    if omega0 > 0.0 && omega0.is_finite() {
        Ok(())
    } else {
        Err(ObserverError::InvalidGains(format!("omega0 must be positive, got {omega0}")))
    }
}

/// Nonlinear-observer schedule `β_i = a_i·ω₀^{i−1}`.
pub fn nleso_gains(omega0: f64, rho: usize) -> Result<Vec<f64>, ObserverError> {
    check_bandwidth(omega0)?;
    Ok(binomial_coeffs(rho)?.into_iter().enumerate().map(|(i, a)| a * omega0.powi(i as i32)).collect())
}

/// Linear-observer schedule `β_i = a_i·ω₀^i`.
pub fn leso_gains(omega0: f64, rho: usize) -> Result<Vec<f64>, ObserverError> {
    check_bandwidth(omega0)?;
    Ok(binomial_coeffs(rho)?.into_iter().enumerate().map(|(i, a)| a * omega0.powi(i as i32 + 1)).collect())
}

/// Han's `fal`: linear with slope `δ^{α−1}` inside `|e| ≤ δ`, `|e|^α·sgn(e)` outside.
pub fn fal(e: f64, alpha: f64, delta: f64) -> f64 {
    if e.abs() <= delta {
        e / delta.powf(1.0 - alpha)
    } else {
        e.abs().powf(alpha) * e.signum()
    }
}

/// Tuning of the nonlinear observer.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverGains {
    pub omega0: f64,
    pub rho: usize,
    /// Binomial coefficients a₁..a_{ρ+1}.
    pub a: Vec<f64>,
    /// β_i = a_i·ω₀^{i−1}.
    pub beta: Vec<f64>,
    /// Attenuation factors, strictly decreasing.
    pub c: Vec<f64>,
    pub k_alpha: f64,
    pub alpha: f64,
    pub k_beta: f64,
    /// Exponent of the high-gain term.
    pub beta_exp: f64,
}

impl ObserverGains {
    pub fn new(
        omega0: f64,
        rho: usize,
        c: Vec<f64>,
        k_alpha: f64,
        alpha: f64,
        k_beta: f64,
        beta_exp: f64,
    ) -> Result<Self, ObserverError> {
        let a = binomial_coeffs(rho)?;
        let beta = nleso_gains(omega0, rho)?;
        let gains = Self { omega0, rho, a, beta, c, k_alpha, alpha, k_beta, beta_exp };
        gains.validate()?;
        Ok(gains)
    }

    /// ω₀ = 35, ρ = 2 and the tuned nonlinearity of the reference experiments.
    pub fn nominal() -> Self {
        Self::new(35.0, 2, vec![0.5, 0.125, 0.0625], 0.99927, 0.301361, 0.38, 0.305151)
            .expect("reference tuning is valid")
    }

    /// Same nonlinearity, different bandwidth.
    pub fn with_omega0(&self, omega0: f64) -> Result<Self, ObserverError> {
        Self::new(omega0, self.rho, self.c.clone(), self.k_alpha, self.alpha, self.k_beta, self.beta_exp)
    }

    pub fn validate(&self) -> Result<(), ObserverError> {
        let invalid = |msg: String| Err(ObserverError::InvalidGains(msg));
        check_bandwidth(self.omega0)?;
        let n = self.rho + 1;
        if self.a.len() != n || self.beta.len() != n || self.c.len() != n {
            return invalid(format!("a, beta and c need {n} entries"));
        }
        if self.a != binomial_coeffs(self.rho)? {
            return invalid("a does not match the binomial row".into());
        }
        if self.c.iter().any(|&c| !(c > 0.0)) || self.c.windows(2).any(|w| w[1] >= w[0]) {
            return invalid(format!("c must be positive and strictly decreasing, got {:?}", self.c));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return invalid(format!("alpha must be in (0, 1), got {}", self.alpha));
        }
        if !(self.k_alpha > 0.0) || !(self.k_beta > 0.0) || !(self.beta_exp > 0.0) {
            return invalid("K_alpha, K_beta and beta must be positive".into());
        }
        Ok(())
    }

    /// Shared factor `K_α|z|^α·sgn(z) + K_β|z|^β·z` of every channel.
    fn shaped(&self, z: f64) -> f64 {
        let z = z.clamp(-INNOVATION_CLAMP, INNOVATION_CLAMP);
        let m = z.abs();
        self.k_alpha * m.powf(self.alpha) * z.signum() + self.k_beta * m.powf(self.beta_exp) * z
    }
}

/// `𝒢_i(ω₀e) = c_i (K_α|ω₀e|^α sgn(ω₀e) + K_β|ω₀e|^β·ω₀e)`, `i` counted from 1.
pub fn g_nonlinear(e: f64, g: &ObserverGains, i: usize) -> f64 {
    assert!((1..=g.rho + 1).contains(&i), "channel {i} outside 1..={}", g.rho + 1);
    if e == 0.0 {
        return 0.0;
    }
    g.c[i - 1] * g.shaped(g.omega0 * e)
}

/// Estimated states x̂₁..x̂_ρ and the extended state x̂_{ρ+1}.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverState {
    pub xhat: Vec<f64>,
}

impl ObserverState {
    pub fn zeros(rho: usize) -> Self {
        Self { xhat: vec![0.0; rho + 1] }
    }
}

/// Integrator chain with input entering channel ρ, plus per-channel corrections.
fn chain_deriv(xhat: &[f64], u: f64, b: f64, correction: impl Fn(usize) -> f64) -> Vec<f64> {
    let n = xhat.len();
    let mut out: Vec<f64> = (0..n)
        .map(|i| {
            let next = if i + 1 < n { xhat[i + 1] } else { 0.0 };
            next + correction(i)
        })
        .collect();
    out[n - 2] += b * u;
    out
}

pub fn nleso_deriv(xhat: &[f64], y: f64, u: f64, b: f64, g: &ObserverGains) -> Vec<f64> {
    debug_assert_eq!(xhat.len(), g.rho + 1);
    let innovation = y - xhat[0];
    let shaped = if innovation == 0.0 { 0.0 } else { g.shaped(g.omega0 * innovation) };
    chain_deriv(xhat, u, b, |i| g.beta[i] * g.c[i] * shaped)
}

pub fn leso_deriv(xhat: &[f64], y: f64, u: f64, b: f64, gains: &[f64]) -> Vec<f64> {
    debug_assert_eq!(xhat.len(), gains.len());
    let innovation = y - xhat[0];
    chain_deriv(xhat, u, b, |i| gains[i] * innovation)
}

/// `fal` ESO: `β_i·fal(e, α_i, δ)` with `α_i = 2^{1−i}` on the linear gain schedule.
pub fn fal_eso_deriv(xhat: &[f64], y: f64, u: f64, b: f64, gains: &[f64], delta: f64) -> Vec<f64> {
    let innovation = y - xhat[0];
    chain_deriv(xhat, u, b, |i| gains[i] * fal(innovation, 0.5f64.powi(i as i32), delta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObserverKind {
    Leso,
    Nleso,
    Fal,
}

impl fmt::Display for ObserverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObserverKind::Leso => "leso",
            ObserverKind::Nleso => "nleso",
            ObserverKind::Fal => "fal",
        })
    }
}

impl FromStr for ObserverKind {
    type Err = ObserverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "leso" => Ok(ObserverKind::Leso),
            "nleso" => Ok(ObserverKind::Nleso),
            "fal" => Ok(ObserverKind::Fal),
            _ => Err(ObserverError::UnknownKind(s.to_string())),
        }
    }
}

/// A configured observer ready to be evaluated inside a simulation.
#[derive(Debug, Clone, PartialEq)]
pub enum Eso {
    Linear { gains: Vec<f64> },
    Nonlinear(ObserverGains),
    Fal { gains: Vec<f64>, delta: f64 },
}

impl Eso {
    /// Builds an observer of `kind` with bandwidth taken from `gains.omega0`.
    pub fn build(kind: ObserverKind, gains: &ObserverGains, fal_delta: f64) -> Result<Self, ObserverError> {
        gains.validate()?;
        Ok(match kind {
            ObserverKind::Leso => Eso::Linear { gains: leso_gains(gains.omega0, gains.rho)? },
            ObserverKind::Nleso => Eso::Nonlinear(gains.clone()),
            ObserverKind::Fal => {
                if !(fal_delta > 0.0) {
                    return Err(ObserverError::InvalidGains(format!("fal delta must be positive, got {fal_delta}")));
                }
                Eso::Fal { gains: leso_gains(gains.omega0, gains.rho)?, delta: fal_delta }
            }
        })
    }

    pub fn kind(&self) -> ObserverKind {
        match self {
            Eso::Linear { .. } => ObserverKind::Leso,
            Eso::Nonlinear(_) => ObserverKind::Nleso,
            Eso::Fal { .. } => ObserverKind::Fal,
        }
    }

    /// Number of observer states, ρ + 1.
    pub fn order(&self) -> usize {
        match self {
            Eso::Linear { gains } | Eso::Fal { gains, .. } => gains.len(),
            Eso::Nonlinear(g) => g.rho + 1,
        }
    }

    pub fn derivative(&self, xhat: &[f64], y: f64, u: f64, b: f64) -> Vec<f64> {
        match self {
            Eso::Linear { gains } => leso_deriv(xhat, y, u, b, gains),
            Eso::Nonlinear(g) => nleso_deriv(xhat, y, u, b, g),
            Eso::Fal { gains, delta } => fal_eso_deriv(xhat, y, u, b, gains, *delta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeakingVariant {
    /// `a_i·c_i·K_α·ω₀^{α+i−1}·|e₀|^α`
    Nonlinear,
    /// `a_i·ω₀^i·|e₀|`
    Linear,
}

/// ω₀-dependent magnification of an initial innovation `e₀` in channel `i`.
pub fn peaking_term(omega0: f64, i: usize, g: &ObserverGains, e0: f64, variant: PeakingVariant) -> f64 {
    assert!((1..=g.rho + 1).contains(&i), "channel {i} outside 1..={}", g.rho + 1);
    let a = g.a[i - 1];
    match variant {
        PeakingVariant::Nonlinear => {
            a * g.c[i - 1] * g.k_alpha * omega0.powf(g.alpha + i as f64 - 1.0) * e0.abs().powf(g.alpha)
        }
        PeakingVariant::Linear => a * omega0.powi(i as i32) * e0.abs(),
    }
}

/// One estimation-error channel `e_i = x_i − x̂_i` with summary statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorChannel {
    pub index: usize,
    pub series: Vec<f64>,
    pub max_abs: f64,
    pub final_value: f64,
    /// First time after which `|e_i|` stays inside the band; `None` if it never does.
    pub settle_time: Option<f64>,
}

/// Errors `x_i − x̂_i` for every `xhat{i}` channel in `trace`.
pub fn estimation_errors(trace: &SimTrace, band: f64) -> Result<Vec<ErrorChannel>, ObserverError> {
    let mut out = Vec::new();
    for i in 1.. {
        let hat_name = format!("xhat{i}");
        let Some(hat) = trace.channel(&hat_name) else {
            if i == 1 {
                return Err(ObserverError::MissingChannel(hat_name));
            }
            break;
        };
        let truth_name = format!("x{i}");
        let truth = trace.channel(&truth_name).ok_or(ObserverError::MissingChannel(truth_name))?;
        let series: Vec<f64> = truth.iter().zip(hat).map(|(x, h)| x - h).collect();
        let max_abs = series.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        let final_value = series.last().copied().unwrap_or(0.0);
        let settle_time = match series.iter().rposition(|e| e.abs() > band) {
            None => trace.times().first().copied(),
            Some(k) if k + 1 < series.len() => Some(trace.times()[k + 1]),
            Some(_) => None,
        };
        out.push(ErrorChannel { index: i, series, max_abs, final_value, settle_time });
    }
    Ok(out)
}

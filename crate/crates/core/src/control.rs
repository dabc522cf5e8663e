//! The ADRC loop: tracking differentiator, nonlinear state-error feedback,
//! disturbance cancellation, and the assembled closed-loop model around the
//! motor.

use thiserror::Error;

use crate::observer::Eso;
use crate::plant::{
    equivalent_input_disturbance, load_torque, pmdc_brunovsky_deriv, pmdc_physical_deriv, to_brunovsky, PhysicalState,
    PlantParams,
};
use crate::sim::{gaussian_noise, saturate, step_signal, NoiseSpec, System};

#[derive(Debug, Error, PartialEq)]
pub enum ControlError {
    #[error("input gain b must be nonzero")]
    ZeroInputGain,
    #[error("invalid controller parameters: {0}")]
    InvalidParams(String),
}

/// Nonlinear state-error feedback gains, two error channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InlsefParams {
    pub k11: f64,
    pub k12: f64,
    pub k21: f64,
    pub k22: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl InlsefParams {
    /// Tuning paired with the nonlinear observer.
    pub fn tuned_nleso() -> Self {
        Self {
            k11: 1.95599,
            k12: 1.22208,
            k21: 0.50231,
            k22: 3.2652,
            mu1: 4.92537,
            mu2: 3.74434,
            alpha1: 0.693947,
            alpha2: 0.770208,
        }
    }

    /// Tuning paired with the linear observer.
    pub fn tuned_leso() -> Self {
        Self {
            k11: 1.76353,
            k12: 0.719549,
            k21: 0.762186,
            k22: 3.04664,
            mu1: 8.69763,
            mu2: 2.35869,
            alpha1: 0.688673,
            alpha2: 0.644945,
        }
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        let gains = [self.k11, self.k12, self.k21, self.k22, self.mu1, self.mu2];
        if gains.iter().any(|g| !(*g > 0.0)) {
            return Err(ControlError::InvalidParams("INLSEF gains must be positive".into()));
        }
        for a in [self.alpha1, self.alpha2] {
            if !(a > 0.0 && a < 1.0) {
                return Err(ControlError::InvalidParams(format!("INLSEF exponent {a} outside (0, 1)")));
            }
        }
        Ok(())
    }
}

/// Second-order nonlinear differentiator parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SondParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// rad/s
    pub sigma: f64,
}

impl Default for SondParams {
    fn default() -> Self {
        Self::nominal()
    }
}

impl SondParams {
    pub fn nominal() -> Self {
        Self { a: 0.97893, b: 5.58718, c: 8.38639, sigma: 26.5 }
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        if [self.a, self.b, self.c, self.sigma].iter().any(|p| !(*p > 0.0)) {
            return Err(ControlError::InvalidParams("differentiator parameters must be positive".into()));
        }
        Ok(())
    }
}

/// Tracked reference and its derivative.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TdState {
    pub r_hat: f64,
    pub r_dot_hat: f64,
}

/// ż₁ = z₂, ż₂ = −σ²(a·tanh(b(z₁ − r)) + c·tanh(z₂/σ)).
pub fn sond_deriv(td: TdState, r: f64, p: &SondParams) -> TdState {
    let s2 = p.sigma * p.sigma;
    TdState {
        r_hat: td.r_dot_hat,
        r_dot_hat: -s2 * (p.a * (p.b * (td.r_hat - r)).tanh() + p.c * (td.r_dot_hat / p.sigma).tanh()),
    }
}

fn shaped_channel(e: f64, k1: f64, k2: f64, mu: f64, alpha: f64) -> f64 {
    if e == 0.0 {
        return 0.0;
    }
    let gain = k1 + k2 / (1.0 + (mu * e * e).exp());
    gain * e.abs().powf(alpha) * e.signum()
}

/// `Σ_i [k_i1 + k_i2 / (1 + exp(μ_i e_i²))]·|e_i|^{α_i}·sgn(e_i)`.
pub fn inlsef(e1: f64, e2: f64, p: &InlsefParams) -> f64 {
    shaped_channel(e1, p.k11, p.k12, p.mu1, p.alpha1) + shaped_channel(e2, p.k21, p.k22, p.mu2, p.alpha2)
}

/// Disturbance-cancelling law `v = u₀ − x̂₃/b`.
pub fn adrc_control(u0: f64, xhat_ext: f64, b: f64) -> Result<f64, ControlError> {
    if b == 0.0 {
        return Err(ControlError::ZeroInputGain);
    }
    Ok(u0 - xhat_ext / b)
}

/// Step input `amplitude·1(t ≥ t_on)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepInput {
    pub amplitude: f64,
    pub t_on: f64,
}

impl StepInput {
    pub fn at(&self, t: f64) -> f64 {
        step_signal(self.amplitude, self.t_on, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlMode {
    /// Full loop: TD, INLSEF and disturbance cancellation.
    Adrc,
    /// Constant plant voltage from t = 0; the observer still runs.
    OpenLoop { voltage: f64 },
}

/// Everything needed to evaluate the closed-loop vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopConfig {
    /// Parameters of the simulated (possibly perturbed) motor.
    pub plant: PlantParams,
    /// Input gain used by observer and controller; nominal even when the plant is perturbed.
    pub b: f64,
    pub observer: Eso,
    pub inlsef: InlsefParams,
    pub sond: SondParams,
    pub td_bypass: bool,
    pub reference: StepInput,
    /// External torque at the gearbox output.
    pub disturbance: StepInput,
    pub noise: Option<NoiseSpec>,
    pub limiter: (f64, f64),
    pub mode: ControlMode,
}

/// Instantaneous signals of the loop at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopSignals {
    pub y: f64,
    pub yn: f64,
    pub r: f64,
    pub r_hat: f64,
    pub r_dot_hat: f64,
    pub u0: f64,
    /// Commanded voltage before the limiter.
    pub v_cmd: f64,
    /// Plant input after the limiter.
    pub v: f64,
    pub load: f64,
}

/// Closed loop in the state order
/// `[ω, i, x̂₁..x̂_{ρ+1}, r̂, r̂']`. The observer and controller work in the
/// gearbox-output frame `y = ω/N`.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    cfg: LoopConfig,
}

impl ClosedLoop {
    pub fn new(cfg: LoopConfig) -> Result<Self, ControlError> {
        if cfg.b == 0.0 || !cfg.b.is_finite() {
            return Err(ControlError::ZeroInputGain);
        }
        cfg.inlsef.validate()?;
        cfg.sond.validate()?;
        if !(cfg.limiter.0 < cfg.limiter.1) {
            return Err(ControlError::InvalidParams(format!("limiter {:?} needs lo < hi", cfg.limiter)));
        }
        Ok(Self { cfg })
    }

    pub fn config(&self) -> &LoopConfig {
        &self.cfg
    }

    fn observer_range(&self) -> std::ops::Range<usize> {
        2..2 + self.cfg.observer.order()
    }

    fn td_index(&self) -> usize {
        2 + self.cfg.observer.order()
    }

    /// Initial full state from plant and observer initial conditions; the TD starts at rest.
    pub fn initial_state(&self, plant: PhysicalState, xhat: &[f64]) -> Vec<f64> {
        let mut x = vec![plant.omega, plant.current];
        let order = self.cfg.observer.order();
        x.extend((0..order).map(|i| xhat.get(i).copied().unwrap_or(0.0)));
        x.extend([0.0, 0.0]);
        x
    }

    pub fn signals(&self, t: f64, state: &[f64]) -> LoopSignals {
        let cfg = &self.cfg;
        let omega = state[0];
        let y = omega / cfg.plant.gear_ratio;
        let yn = y + cfg.noise.as_ref().map_or(0.0, |n| gaussian_noise(n, t));
        let r = cfg.reference.at(t);
        let td = self.td_index();
        let (r_hat, r_dot_hat) = if cfg.td_bypass { (r, 0.0) } else { (state[td], state[td + 1]) };
        let xhat = &state[self.observer_range()];
        let (u0, v_cmd) = match cfg.mode {
            ControlMode::Adrc => {
                let u0 = inlsef(r_hat - xhat[0], r_dot_hat - xhat[1], &cfg.inlsef);
                (u0, u0 - xhat[xhat.len() - 1] / cfg.b)
            }
            ControlMode::OpenLoop { voltage } => (0.0, voltage),
        };
        let v = saturate(v_cmd, cfg.limiter.0, cfg.limiter.1);
        let load = load_torque(omega, cfg.disturbance.at(t), &cfg.plant);
        LoopSignals { y, yn, r, r_hat, r_dot_hat, u0, v_cmd, v, load }
    }
}

/// Full closed-loop derivative at `(t, state)`.
pub fn closed_loop_deriv(system: &ClosedLoop, t: f64, state: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; system.dimension()];
    system.derivative(t, state, &mut out);
    out
}

impl System for ClosedLoop {
    fn dimension(&self) -> usize {
        4 + self.cfg.observer.order()
    }

    fn derivative(&self, t: f64, state: &[f64], out: &mut [f64]) {
        let cfg = &self.cfg;
        let s = self.signals(t, state);
        let plant = pmdc_physical_deriv(PhysicalState { omega: state[0], current: state[1] }, s.v, s.load, &cfg.plant);
        out[0] = plant.omega;
        out[1] = plant.current;

        let obs = self.observer_range();
        let dxhat = cfg.observer.derivative(&state[obs.clone()], s.yn, s.v, cfg.b);
        out[obs].copy_from_slice(&dxhat);

        let td = self.td_index();
        let dtd = sond_deriv(TdState { r_hat: state[td], r_dot_hat: state[td + 1] }, s.r, &cfg.sond);
        out[td] = dtd.r_hat;
        out[td + 1] = dtd.r_dot_hat;
    }

    fn state_names(&self) -> Vec<String> {
        let mut names = vec!["omega".to_string(), "current".to_string()];
        names.extend((1..=self.cfg.observer.order()).map(|i| format!("xhat{i}")));
        names.extend(["rhat".to_string(), "rhat_dot".to_string()]);
        names
    }

    fn channel_names(&self) -> Vec<String> {
        let order = self.cfg.observer.order();
        let mut names: Vec<String> = ["x1", "x2", "x3"].map(String::from).to_vec();
        names.extend((1..=order).map(|i| format!("xhat{i}")));
        names.extend(
            ["u0", "v", "y", "yn", "r", "TL", "d", "v_cmd", "rhat", "rhat_dot", "omega", "current"].map(String::from),
        );
        names
    }

    /// Ground truth in the output frame: `x1 = ω/N`, `x2 = ω̇/N`, and the
    /// generalized disturbance `x3 = ÿ − b·v` seen by the observer, with the
    /// impulsive part of ṪL left out.
    fn record(&self, t: f64, state: &[f64], row: &mut Vec<f64>) {
        let cfg = &self.cfg;
        let p = &cfg.plant;
        let s = self.signals(t, state);
        let physical = PhysicalState { omega: state[0], current: state[1] };
        let chain = to_brunovsky(physical, s.load, p);
        let d = equivalent_input_disturbance(s.load, 0.0, p);
        let accel_rate = pmdc_brunovsky_deriv(chain, s.v, d, p).x2;
        let n = p.gear_ratio;
        row.extend_from_slice(&[chain.x1 / n, chain.x2 / n, accel_rate / n - cfg.b * s.v]);
        row.extend_from_slice(&state[self.observer_range()]);
        row.extend_from_slice(&[
            s.u0,
            s.v,
            s.y,
            s.yn,
            s.r,
            s.load,
            d,
            s.v_cmd,
            s.r_hat,
            s.r_dot_hat,
            state[0],
            state[1],
        ]);
    }
}

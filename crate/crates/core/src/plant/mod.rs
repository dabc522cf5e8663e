//! Permanent-magnet DC motor with Coulomb friction, in physical
//! (current/velocity) coordinates and in the integral-chain form used for
//! observer design.

mod example;
mod transform;

pub use example::{example_mismatched_deriv, example_to_matched, example_transformed_deriv, EXPONENT_LIMIT};
pub use transform::{
    example_cross_model_gap, example_trace, pmdc_cross_model_gap, pmdc_trace, verify_brunovsky_transform,
    ExampleSignals, ExampleTransform, MatchedTransform, PmdcTransform, TorqueProfile, TransformResidual,
    VoltageProfile,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlantError {
    #[error("plant parameter {name} must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("uncertainty {name} = {value} outside {range}")]
    UncertaintyRange { name: &'static str, value: f64, range: &'static str },
    #[error("|x1| = {0} exceeds the exponent guard")]
    ExponentOverflow(f64),
    #[error("trace is missing channel {0}")]
    MissingChannel(String),
    #[error("trace has {0} rows, at least 5 are needed for central differences")]
    TraceTooShort(usize),
}

/// Physical constants of the motor and gearbox.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantParams {
    /// Armature resistance R (ohm).
    pub resistance: f64,
    /// Armature inductance L (H).
    pub inductance: f64,
    /// Torque constant Kt (N·m/A).
    pub torque_constant: f64,
    /// Back-EMF constant Kb (V·s/rad).
    pub back_emf_constant: f64,
    /// Gearbox ratio N; output velocity is motor velocity / N.
    pub gear_ratio: f64,
    /// Equivalent inertia seen at the rotor (kg·m²).
    pub inertia: f64,
    /// Equivalent viscous damping at the rotor (N·m·s/rad).
    pub damping: f64,
    /// Coulomb friction torque Fc (N·m), applied through the gearbox.
    pub coulomb_friction: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self::nominal()
    }
}

impl PlantParams {
    /// The motor used throughout the reference experiments.
    pub fn nominal() -> Self {
        Self {
            resistance: 0.1557,
            inductance: 0.82,
            torque_constant: 1.1882,
            back_emf_constant: 1.185,
            gear_ratio: 3.0,
            inertia: 0.2752,
            damping: 0.3922,
            coulomb_friction: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        let fields = [
            ("resistance", self.resistance),
            ("inductance", self.inductance),
            ("torque_constant", self.torque_constant),
            ("back_emf_constant", self.back_emf_constant),
            ("gear_ratio", self.gear_ratio),
            ("inertia", self.inertia),
            ("damping", self.damping),
            ("coulomb_friction", self.coulomb_friction),
        ];
        for (name, value) in fields {
            // Fc = 0 is allowed so smooth-load checks can switch friction off.
            let ok = if name == "coulomb_friction" { value >= 0.0 } else { value > 0.0 };
            if !ok || !value.is_finite() {
                return Err(PlantError::NonPositive { name, value });
            }
        }
        Ok(())
    }

    /// Input gain Kt / (Jeq·L) of the integral-chain model.
    pub fn input_gain(&self) -> f64 {
        self.torque_constant / (self.inertia * self.inductance)
    }

    /// Input gain seen at the gearbox output `y = ω/N`: Kt / (Jeq·L·N).
    pub fn output_input_gain(&self) -> f64 {
        self.input_gain() / self.gear_ratio
    }

    /// Coefficient of x̃₁ in the integral-chain model, (beq·R + Kt·Kb)/(Jeq·L).
    pub fn stiffness_coeff(&self) -> f64 {
        (self.damping * self.resistance + self.torque_constant * self.back_emf_constant)
            / (self.inertia * self.inductance)
    }

    /// Coefficient of x̃₂ in the integral-chain model, R/L + beq/Jeq.
    pub fn damping_coeff(&self) -> f64 {
        self.resistance / self.inductance + self.damping / self.inertia
    }
}

/// Relative parameter perturbations: `p = p̄ (1 + Δ·δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UncertaintySpec {
    pub delta_j_rel: f64,
    pub delta_b_rel: f64,
    pub delta_r_rel: f64,
    pub sign_j: f64,
    pub sign_b: f64,
    pub sign_r: f64,
}

impl UncertaintySpec {
    /// Δ_J = 0.2, Δ_b = 0.4, Δ_R = 0.5, every δ = −1.
    pub fn nominal() -> Self {
        Self { delta_j_rel: 0.2, delta_b_rel: 0.4, delta_r_rel: 0.5, sign_j: -1.0, sign_b: -1.0, sign_r: -1.0 }
    }

    pub fn is_nominal(&self) -> bool {
        self.delta_j_rel * self.sign_j == 0.0
            && self.delta_b_rel * self.sign_b == 0.0
            && self.delta_r_rel * self.sign_r == 0.0
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        for (name, value) in
            [("delta_J", self.delta_j_rel), ("delta_b", self.delta_b_rel), ("delta_R", self.delta_r_rel)]
        {
            if !(0.0..1.0).contains(&value) {
                return Err(PlantError::UncertaintyRange { name, value, range: "[0, 1)" });
            }
        }
        for (name, value) in [("sign_J", self.sign_j), ("sign_b", self.sign_b), ("sign_R", self.sign_r)] {
            if !(-1.0..=1.0).contains(&value) {
                return Err(PlantError::UncertaintyRange { name, value, range: "[-1, 1]" });
            }
        }
        Ok(())
    }
}

pub fn apply_uncertainty(p: &PlantParams, u: &UncertaintySpec) -> Result<PlantParams, PlantError> {
    u.validate()?;
    let perturbed = PlantParams {
        inertia: p.inertia * (1.0 + u.delta_j_rel * u.sign_j),
        damping: p.damping * (1.0 + u.delta_b_rel * u.sign_b),
        resistance: p.resistance * (1.0 + u.delta_r_rel * u.sign_r),
        ..*p
    };
    perturbed.validate()?;
    Ok(perturbed)
}

/// Motor-side angular velocity and armature current.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhysicalState {
    pub omega: f64,
    pub current: f64,
}

/// Integral-chain coordinates: motor velocity and its rate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BrunovskyState {
    pub x1: f64,
    pub x2: f64,
}

/// Sign with `sgn(0) = 0`.
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Newton/Kirchhoff motor equations.
pub fn pmdc_physical_deriv(state: PhysicalState, v: f64, load: f64, p: &PlantParams) -> PhysicalState {
    PhysicalState {
        omega: (p.torque_constant * state.current - load - p.damping * state.omega) / p.inertia,
        current: (-p.resistance * state.current + v - p.back_emf_constant * state.omega) / p.inductance,
    }
}

/// Load torque at the rotor, `(Text + Fc·sgn(ω)) / N`.
pub fn load_torque(omega: f64, external: f64, p: &PlantParams) -> f64 {
    (external + p.coulomb_friction * sgn(omega)) / p.gear_ratio
}

/// Motor dynamics with load and input lumped into the input channel.
pub fn pmdc_brunovsky_deriv(state: BrunovskyState, v: f64, d: f64, p: &PlantParams) -> BrunovskyState {
    BrunovskyState {
        x1: state.x2,
        x2: -p.damping_coeff() * state.x2 - p.stiffness_coeff() * state.x1 + p.input_gain() * (v + d),
    }
}

/// Input-referred equivalent of a load torque, `−(L/Kt)·ṪL − (R/Kt)·TL`.
pub fn equivalent_input_disturbance(load: f64, load_rate: f64, p: &PlantParams) -> f64 {
    -(p.inductance / p.torque_constant) * load_rate - (p.resistance / p.torque_constant) * load
}

/// Maps physical coordinates to the integral chain: x̃₁ = ω, x̃₂ = ω̇.
pub fn to_brunovsky(state: PhysicalState, load: f64, p: &PlantParams) -> BrunovskyState {
    BrunovskyState { x1: state.omega, x2: pmdc_physical_deriv(state, 0.0, load, p).omega }
}

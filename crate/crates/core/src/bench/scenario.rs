//! Declarative experiment descriptions, the built-in registry, and the flat
//! `key = value` scenario file format.

use std::fmt;
use std::str::FromStr;

use crate::control::{ControlMode, InlsefParams, SondParams, StepInput};
use crate::observer::{ObserverGains, ObserverKind};
use crate::plant::{PlantParams, UncertaintySpec};
use crate::sim::TimeGrid;

use super::ConfigError;

pub const DEFAULT_DT: f64 = 1e-4;
pub const DEFAULT_HORIZON: f64 = 10.0;
pub const DEFAULT_NOISE_VARIANCE: f64 = 36e-6;
pub const DEFAULT_NOISE_PERIOD: f64 = 1e-3;
pub const DEFAULT_FAL_DELTA: f64 = 0.01;
/// Initial x̂₁ of the peaking experiments.
pub const PEAKING_XHAT1: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverConfig {
    pub kind: ObserverKind,
    pub gains: ObserverGains,
    /// Linear-zone width of the `fal` observer; ignored by the others.
    pub fal_delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    pub inlsef: InlsefParams,
    pub sond: SondParams,
    pub td_bypass: bool,
    pub mode: ControlMode,
}

impl ControllerConfig {
    /// Reference tuning paired with each observer kind.
    pub fn nominal(kind: ObserverKind) -> Self {
        let inlsef = match kind {
            ObserverKind::Nleso => InlsefParams::tuned_nleso(),
            ObserverKind::Leso | ObserverKind::Fal => InlsefParams::tuned_leso(),
        };
        Self { inlsef, sond: SondParams::nominal(), td_bypass: false, mode: ControlMode::Adrc }
    }
}

/// Measurement-noise level; the stream seed comes from [`ScenarioConfig::seed`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseLevel {
    pub variance: f64,
    pub sample_period: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InitialConditions {
    /// Motor-side velocity (rad/s).
    pub omega: f64,
    pub current: f64,
    pub xhat: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    /// Nominal plant; the controller's input gain is always derived from it.
    pub plant: PlantParams,
    pub uncertainty: UncertaintySpec,
    pub observer: ObserverConfig,
    pub controller: ControllerConfig,
    pub reference: StepInput,
    /// External torque at the gearbox output (N·m).
    pub disturbance: StepInput,
    pub noise: Option<NoiseLevel>,
    pub grid: TimeGrid,
    pub initial: InitialConditions,
    pub limiter: (f64, f64),
    pub seed: u64,
}

impl ScenarioConfig {
    /// Nominal tracking run: unit reference step at t = 0, no disturbance,
    /// no noise, observer starting at zero.
    pub fn nominal(kind: ObserverKind) -> Self {
        Self {
            name: format!("nominal-{kind}"),
            plant: PlantParams::nominal(),
            uncertainty: UncertaintySpec::default(),
            observer: ObserverConfig { kind, gains: ObserverGains::nominal(), fal_delta: DEFAULT_FAL_DELTA },
            controller: ControllerConfig::nominal(kind),
            reference: StepInput { amplitude: 1.0, t_on: 0.0 },
            disturbance: StepInput::default(),
            noise: None,
            grid: TimeGrid::new(0.0, DEFAULT_HORIZON, DEFAULT_DT).expect("default grid"),
            initial: InitialConditions::default(),
            limiter: (-12.0, 12.0),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.trim().is_empty() {
            return Err(ConfigError::Invalid("scenario name must not be empty".into()));
        }
        self.plant.validate()?;
        self.uncertainty.validate()?;
        self.observer.gains.validate()?;
        if self.observer.gains.rho != 2 {
            return Err(ConfigError::Invalid("the motor loop needs relative degree 2".into()));
        }
        if self.observer.kind == ObserverKind::Fal && !(self.observer.fal_delta > 0.0) {
            return Err(ConfigError::Invalid("observer.fal_delta must be positive".into()));
        }
        self.controller.inlsef.validate()?;
        self.controller.sond.validate()?;
        if !(self.limiter.0 < self.limiter.1) {
            return Err(ConfigError::Invalid(format!("limiter {:?} needs lo < hi", self.limiter)));
        }
        if let Some(noise) = self.noise {
            crate::sim::NoiseSpec::new(self.seed, noise.variance, noise.sample_period)?.check_grid(self.grid.dt())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioFamily {
    Peaking,
    Disturbance,
    Noise,
    Uncertainty,
    /// Constant 6 V input, no controller in the loop.
    OpenLoop,
}

impl ScenarioFamily {
    pub const ALL: [ScenarioFamily; 5] = [
        ScenarioFamily::Peaking,
        ScenarioFamily::Disturbance,
        ScenarioFamily::Noise,
        ScenarioFamily::Uncertainty,
        ScenarioFamily::OpenLoop,
    ];

    pub fn description(&self) -> &'static str {
        match self {
            ScenarioFamily::Peaking => "unit reference step, xhat1(0) = 0.5",
            ScenarioFamily::Disturbance => "peaking setup plus 2 N.m external torque at t = 5 s",
            ScenarioFamily::Noise => "peaking setup with Gaussian output noise, variance 36e-6",
            ScenarioFamily::Uncertainty => "peaking setup on a plant with J, b, R reduced by 20/40/50 %",
            ScenarioFamily::OpenLoop => "6 V constant input, observer only",
        }
    }
}

impl fmt::Display for ScenarioFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScenarioFamily::Peaking => "peaking",
            ScenarioFamily::Disturbance => "disturbance",
            ScenarioFamily::Noise => "noise",
            ScenarioFamily::Uncertainty => "uncertainty",
            ScenarioFamily::OpenLoop => "open-loop",
        })
    }
}

impl FromStr for ScenarioFamily {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|f| f.to_string() == s).ok_or_else(|| ConfigError::UnknownScenario(s.to_string()))
    }
}

pub fn builtin(family: ScenarioFamily, kind: ObserverKind) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::nominal(kind);
    cfg.name = format!("{family}-{kind}");
    cfg.initial.xhat = [PEAKING_XHAT1, 0.0, 0.0];
    match family {
        ScenarioFamily::Peaking => {}
        ScenarioFamily::Disturbance => cfg.disturbance = StepInput { amplitude: 2.0, t_on: 5.0 },
        ScenarioFamily::Noise => {
            cfg.noise = Some(NoiseLevel { variance: DEFAULT_NOISE_VARIANCE, sample_period: DEFAULT_NOISE_PERIOD });
        }
        ScenarioFamily::Uncertainty => cfg.uncertainty = UncertaintySpec::nominal(),
        ScenarioFamily::OpenLoop => {
            cfg.initial.xhat = [0.0; 3];
            cfg.reference = StepInput::default();
            cfg.controller.mode = ControlMode::OpenLoop { voltage: 6.0 };
        }
    }
    cfg
}

/// Every built-in scenario for the linear and nonlinear observers.
pub fn builtin_suite() -> Vec<ScenarioConfig> {
    ScenarioFamily::ALL
        .into_iter()
        .flat_map(|f| [builtin(f, ObserverKind::Nleso), builtin(f, ObserverKind::Leso)])
        .collect()
}

/// Splits a built-in name, `family` (nonlinear observer) or `family-kind`.
pub fn parse_builtin_name(name: &str) -> Result<(ScenarioFamily, ObserverKind), ConfigError> {
    if let Ok(family) = name.parse::<ScenarioFamily>() {
        return Ok((family, ObserverKind::Nleso));
    }
    let unknown = || ConfigError::UnknownScenario(name.to_string());
    let (family, kind) = name.rsplit_once('-').ok_or_else(unknown)?;
    let family = family.parse::<ScenarioFamily>().map_err(|_| unknown())?;
    let kind = kind.parse::<ObserverKind>().map_err(|_| unknown())?;
    Ok((family, kind))
}

pub fn builtin_by_name(name: &str) -> Result<ScenarioConfig, ConfigError> {
    let (family, kind) = parse_builtin_name(name)?;
    Ok(builtin(family, kind))
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    value.parse::<f64>().map_err(|_| ConfigError::BadValue { key: key.to_string(), value: value.to_string() })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::BadValue { key: key.to_string(), value: value.to_string() }),
    }
}

/// Parses a scenario file.
///
/// The optional `base` key selects a built-in scenario to start from; every
/// other key overrides one field. Observer gains are recomputed after all
/// keys are applied, so `observer.omega0` may appear anywhere.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or_else(|| ConfigError::Syntax { line: lineno + 1, text: raw.to_string() })?;
        entries.push((key.trim().to_string(), value.trim().to_string()));
    }

    let mut cfg = match entries.iter().find(|(k, _)| k == "base") {
        Some((_, base)) => builtin_by_name(base)?,
        None => ScenarioConfig::nominal(ObserverKind::Nleso),
    };
    let mut grid = (cfg.grid.t0(), cfg.grid.tf(), cfg.grid.dt());
    let mut gains = cfg.observer.gains.clone();
    let mut noise = cfg.noise;
    let mut open_loop_voltage = match cfg.controller.mode {
        ControlMode::OpenLoop { voltage } => Some(voltage),
        ControlMode::Adrc => None,
    };
    let mut mode_name: Option<String> = None;

    for (key, value) in &entries {
        let num = || parse_f64(key, value);
        match key.as_str() {
            "base" => {}
            "name" => cfg.name = value.clone(),
            "seed" => {
                cfg.seed =
                    value.parse().map_err(|_| ConfigError::BadValue { key: key.clone(), value: value.clone() })?
            }
            "plant.R" => cfg.plant.resistance = num()?,
            "plant.L" => cfg.plant.inductance = num()?,
            "plant.Kt" => cfg.plant.torque_constant = num()?,
            "plant.Kb" => cfg.plant.back_emf_constant = num()?,
            "plant.N" => cfg.plant.gear_ratio = num()?,
            "plant.Jeq" => cfg.plant.inertia = num()?,
            "plant.beq" => cfg.plant.damping = num()?,
            "plant.Fc" => cfg.plant.coulomb_friction = num()?,
            "uncertainty.delta_J" => cfg.uncertainty.delta_j_rel = num()?,
            "uncertainty.delta_b" => cfg.uncertainty.delta_b_rel = num()?,
            "uncertainty.delta_R" => cfg.uncertainty.delta_r_rel = num()?,
            "uncertainty.sign_J" => cfg.uncertainty.sign_j = num()?,
            "uncertainty.sign_b" => cfg.uncertainty.sign_b = num()?,
            "uncertainty.sign_R" => cfg.uncertainty.sign_r = num()?,
            "observer.kind" => {
                cfg.observer.kind =
                    value.parse().map_err(|_| ConfigError::BadValue { key: key.clone(), value: value.clone() })?
            }
            "observer.omega0" => gains.omega0 = num()?,
            "observer.k_alpha" => gains.k_alpha = num()?,
            "observer.alpha" => gains.alpha = num()?,
            "observer.k_beta" => gains.k_beta = num()?,
            "observer.beta" => gains.beta_exp = num()?,
            "observer.c1" => gains.c[0] = num()?,
            "observer.c2" => gains.c[1] = num()?,
            "observer.c3" => gains.c[2] = num()?,
            "observer.fal_delta" => cfg.observer.fal_delta = num()?,
            "controller.k11" => cfg.controller.inlsef.k11 = num()?,
            "controller.k12" => cfg.controller.inlsef.k12 = num()?,
            "controller.k21" => cfg.controller.inlsef.k21 = num()?,
            "controller.k22" => cfg.controller.inlsef.k22 = num()?,
            "controller.mu1" => cfg.controller.inlsef.mu1 = num()?,
            "controller.mu2" => cfg.controller.inlsef.mu2 = num()?,
            "controller.alpha1" => cfg.controller.inlsef.alpha1 = num()?,
            "controller.alpha2" => cfg.controller.inlsef.alpha2 = num()?,
            "controller.td_bypass" => cfg.controller.td_bypass = parse_bool(key, value)?,
            "controller.mode" => mode_name = Some(value.clone()),
            "controller.open_loop_voltage" => open_loop_voltage = Some(num()?),
            "td.a" => cfg.controller.sond.a = num()?,
            "td.b" => cfg.controller.sond.b = num()?,
            "td.c" => cfg.controller.sond.c = num()?,
            "td.sigma" => cfg.controller.sond.sigma = num()?,
            "reference.amplitude" => cfg.reference.amplitude = num()?,
            "reference.t_on" => cfg.reference.t_on = num()?,
            "disturbance.amplitude" => cfg.disturbance.amplitude = num()?,
            "disturbance.t_on" => cfg.disturbance.t_on = num()?,
            "noise.variance" => {
                let variance = num()?;
                let period = noise.map_or(DEFAULT_NOISE_PERIOD, |n| n.sample_period);
                noise = Some(NoiseLevel { variance, sample_period: period });
            }
            "noise.sample_period" => {
                let period = num()?;
                let variance = noise.map_or(DEFAULT_NOISE_VARIANCE, |n| n.variance);
                noise = Some(NoiseLevel { variance, sample_period: period });
            }
            "noise.enabled" => {
                if !parse_bool(key, value)? {
                    noise = None;
                } else if noise.is_none() {
                    noise = Some(NoiseLevel { variance: DEFAULT_NOISE_VARIANCE, sample_period: DEFAULT_NOISE_PERIOD });
                }
            }
            "grid.t0" => grid.0 = num()?,
            "grid.tf" => grid.1 = num()?,
            "grid.dt" => grid.2 = num()?,
            "initial.omega" => cfg.initial.omega = num()?,
            "initial.current" => cfg.initial.current = num()?,
            "initial.xhat1" => cfg.initial.xhat[0] = num()?,
            "initial.xhat2" => cfg.initial.xhat[1] = num()?,
            "initial.xhat3" => cfg.initial.xhat[2] = num()?,
            "limiter.lo" => cfg.limiter.0 = num()?,
            "limiter.hi" => cfg.limiter.1 = num()?,
            _ => return Err(ConfigError::UnknownKey(key.clone())),
        }
    }

    cfg.controller.mode = match mode_name.as_deref() {
        Some("adrc") => ControlMode::Adrc,
        Some("open-loop") => ControlMode::OpenLoop { voltage: open_loop_voltage.unwrap_or(6.0) },
        Some(other) => return Err(ConfigError::BadValue { key: "controller.mode".into(), value: other.to_string() }),
        None => match (cfg.controller.mode, open_loop_voltage) {
            (ControlMode::OpenLoop { .. }, Some(voltage)) => ControlMode::OpenLoop { voltage },
            (mode, _) => mode,
        },
    };
    cfg.observer.gains =
        ObserverGains::new(gains.omega0, gains.rho, gains.c, gains.k_alpha, gains.alpha, gains.k_beta, gains.beta_exp)?;
    cfg.noise = noise.filter(|n| n.variance > 0.0);
    cfg.grid = TimeGrid::new(grid.0, grid.1, grid.2)?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_names_round_trip() {
        for cfg in builtin_suite() {
            let again = builtin_by_name(&cfg.name).unwrap();
            assert_eq!(again, cfg);
            assert!(cfg.validate().is_ok(), "{}", cfg.name);
        }
        assert_eq!(builtin_by_name("peaking").unwrap().observer.kind, ObserverKind::Nleso);
        assert!(builtin_by_name("peaking-kalman").is_err());
        assert!(builtin_by_name("nothing").is_err());
    }

    #[test]
    fn builtin_settings() {
        let p = builtin(ScenarioFamily::Peaking, ObserverKind::Leso);
        assert_eq!(p.initial.xhat, [0.5, 0.0, 0.0]);
        assert_eq!(p.controller.inlsef, InlsefParams::tuned_leso());
        let d = builtin(ScenarioFamily::Disturbance, ObserverKind::Nleso);
        assert_eq!(d.disturbance, StepInput { amplitude: 2.0, t_on: 5.0 });
        let n = builtin(ScenarioFamily::Noise, ObserverKind::Nleso);
        assert_eq!(n.noise.unwrap().variance, 36e-6);
        let u = builtin(ScenarioFamily::Uncertainty, ObserverKind::Nleso);
        assert_eq!(u.uncertainty, UncertaintySpec::nominal());
        assert_eq!(u.grid.steps(), 100_000);
    }

    #[test]
    fn parses_file_with_base_and_overrides() {
        let text = "\
# custom run
base = disturbance-leso
name = my-run
observer.kind = nleso
observer.omega0 = 20   # lower bandwidth
disturbance.amplitude = 1.5
grid.dt = 2e-4
seed = 9
";
        let cfg = parse_scenario(text).unwrap();
        assert_eq!(cfg.name, "my-run");
        assert_eq!(cfg.observer.kind, ObserverKind::Nleso);
        assert_eq!(cfg.observer.gains.beta, vec![3.0, 60.0, 400.0]);
        assert_eq!(cfg.disturbance.amplitude, 1.5);
        assert_eq!(cfg.disturbance.t_on, 5.0);
        assert_eq!(cfg.grid.dt(), 2e-4);
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn unknown_keys_are_errors() {
        assert!(matches!(
            parse_scenario("observer.gamma = 3"),
            Err(ConfigError::UnknownKey(k)) if k == "observer.gamma"
        ));
        assert!(matches!(parse_scenario("just text"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(parse_scenario("grid.dt = fast"), Err(ConfigError::BadValue { .. })));
        assert!(parse_scenario("grid.dt = 0.3").is_err());
        assert!(parse_scenario("observer.c2 = 0.9").is_err());
    }

    #[test]
    fn open_loop_mode_from_file() {
        let cfg = parse_scenario("controller.mode = open-loop\ncontroller.open_loop_voltage = 4").unwrap();
        assert_eq!(cfg.controller.mode, ControlMode::OpenLoop { voltage: 4.0 });
        let cfg = parse_scenario("base = open-loop-leso\ncontroller.open_loop_voltage = 3").unwrap();
        assert_eq!(cfg.controller.mode, ControlMode::OpenLoop { voltage: 3.0 });
    }

    #[test]
    fn noise_period_must_fit_grid() {
        assert!(parse_scenario("noise.variance = 1e-6\nnoise.sample_period = 1.5e-4").is_err());
        let cfg = parse_scenario("noise.variance = 1e-6").unwrap();
        assert_eq!(cfg.noise.unwrap().sample_period, DEFAULT_NOISE_PERIOD);
        assert!(parse_scenario("base = noise\nnoise.enabled = false").unwrap().noise.is_none());
    }
}

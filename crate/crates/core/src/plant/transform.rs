//! Numeric checks that a mismatched model and its integral-chain form
//! describe the same trajectories.

use super::example::{example_mismatched_deriv, example_to_matched, example_transformed_deriv};
use super::{
    equivalent_input_disturbance, load_torque, pmdc_brunovsky_deriv, pmdc_physical_deriv, to_brunovsky, BrunovskyState,
    PhysicalState, PlantError, PlantParams,
};
use crate::sim::{integrate, SimError, SimTrace, System, TimeGrid};

/// Maps logged rows of a mismatched-model trace into matched coordinates.
pub trait MatchedTransform {
    /// Channels read from the trace, in the order passed to the other methods.
    fn required_channels(&self) -> &'static [&'static str];

    /// (x̃₁, x̃₂) for one row.
    fn matched_state(&self, row: &[f64]) -> Result<[f64; 2], PlantError>;

    /// ẋ̃₂ predicted by the matched model for one row.
    fn matched_rate(&self, row: &[f64]) -> Result<f64, PlantError>;
}

/// Transform of the exponential example; reads `x1, x2, u, d, d_dot`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExampleTransform;

impl MatchedTransform for ExampleTransform {
    fn required_channels(&self) -> &'static [&'static str] {
        &["x1", "x2", "u", "d", "d_dot"]
    }

    fn matched_state(&self, row: &[f64]) -> Result<[f64; 2], PlantError> {
        example_to_matched([row[0], row[1]], row[3])
    }

    fn matched_rate(&self, row: &[f64]) -> Result<f64, PlantError> {
        let matched = self.matched_state(row)?;
        Ok(example_transformed_deriv(matched, row[2], row[3], row[4])?[1])
    }
}

/// Transform of the motor model; reads `omega, current, v, TL, TL_dot`.
#[derive(Debug, Clone, Copy)]
pub struct PmdcTransform {
    pub params: PlantParams,
}

impl MatchedTransform for PmdcTransform {
    fn required_channels(&self) -> &'static [&'static str] {
        &["omega", "current", "v", "TL", "TL_dot"]
    }

    fn matched_state(&self, row: &[f64]) -> Result<[f64; 2], PlantError> {
        let s = to_brunovsky(PhysicalState { omega: row[0], current: row[1] }, row[3], &self.params);
        Ok([s.x1, s.x2])
    }

    fn matched_rate(&self, row: &[f64]) -> Result<f64, PlantError> {
        let [x1, x2] = self.matched_state(row)?;
        let d = equivalent_input_disturbance(row[3], row[4], &self.params);
        Ok(pmdc_brunovsky_deriv(BrunovskyState { x1, x2 }, row[2], d, &self.params).x2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformResidual {
    /// max |Δx₁/Δt − x̃₂| over interior grid points.
    pub first_equation: f64,
    /// max |Δx̃₂/Δt − ẋ̃₂(model)| over interior grid points.
    pub second_equation: f64,
    pub tolerance: f64,
}

impl TransformResidual {
    pub fn passed(&self) -> bool {
        self.first_equation < self.tolerance && self.second_equation < self.tolerance
    }
}

/// Compares central differences of a mismatched-model trace against the
/// matched model evaluated on the same rows.
pub fn verify_brunovsky_transform<T: MatchedTransform + ?Sized>(
    trace: &SimTrace,
    transform: &T,
    tolerance: f64,
) -> Result<TransformResidual, PlantError> {
    if trace.len() < 5 {
        return Err(PlantError::TraceTooShort(trace.len()));
    }
    let columns = transform
        .required_channels()
        .iter()
        .map(|&name| trace.channel(name).ok_or_else(|| PlantError::MissingChannel(name.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let row = |k: usize| columns.iter().map(|c| c[k]).collect::<Vec<f64>>();

    let matched = (0..trace.len()).map(|k| transform.matched_state(&row(k))).collect::<Result<Vec<_>, _>>()?;
    let times = trace.times();
    let mut first: f64 = 0.0;
    let mut second: f64 = 0.0;
    for k in 1..trace.len() - 1 {
        let span = times[k + 1] - times[k - 1];
        let dx1 = (matched[k + 1][0] - matched[k - 1][0]) / span;
        let dx2 = (matched[k + 1][1] - matched[k - 1][1]) / span;
        first = first.max((dx1 - matched[k][1]).abs());
        second = second.max((dx2 - transform.matched_rate(&row(k))?).abs());
    }
    Ok(TransformResidual { first_equation: first, second_equation: second, tolerance })
}

/// Time-varying input pair for the transform checks: returns `(u, d, ḋ)`.
pub type ExampleSignals = fn(f64) -> (f64, f64, f64);

struct ExampleMismatched {
    signals: ExampleSignals,
}

impl System for ExampleMismatched {
    fn dimension(&self) -> usize {
        2
    }

    fn derivative(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let (u, d, dd) = (self.signals)(t);
        let dx = example_mismatched_deriv([x[0], x[1]], u, d, dd).unwrap_or([f64::NAN; 2]);
        out.copy_from_slice(&dx);
    }

    fn channel_names(&self) -> Vec<String> {
        ["x1", "x2", "u", "d", "d_dot"].map(String::from).to_vec()
    }

    fn record(&self, t: f64, x: &[f64], row: &mut Vec<f64>) {
        let (u, d, dd) = (self.signals)(t);
        row.extend_from_slice(&[x[0], x[1], u, d, dd]);
    }
}

struct ExampleMatched {
    signals: ExampleSignals,
}

impl System for ExampleMatched {
    fn dimension(&self) -> usize {
        2
    }

    fn derivative(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let (u, d, dd) = (self.signals)(t);
        let dx = example_transformed_deriv([x[0], x[1]], u, d, dd).unwrap_or([f64::NAN; 2]);
        out.copy_from_slice(&dx);
    }
}

/// Integrates the mismatched example, logging `x1, x2, u, d, d_dot`.
pub fn example_trace(signals: ExampleSignals, initial: [f64; 2], grid: &TimeGrid) -> Result<SimTrace, SimError> {
    integrate(&ExampleMismatched { signals }, grid, &initial)
}

/// Integrates both forms of the example from consistent initial conditions
/// and returns max |x̃₁(t) − x₁(t)|.
pub fn example_cross_model_gap(signals: ExampleSignals, initial: [f64; 2], grid: &TimeGrid) -> Result<f64, SimError> {
    let mismatched = example_trace(signals, initial, grid)?;
    let (_, d0, _) = signals(grid.t0());
    let matched_initial = example_to_matched(initial, d0).map_err(|e| SimError::InvalidGrid(e.to_string()))?;
    let matched = integrate(&ExampleMatched { signals }, grid, &matched_initial)?;
    Ok(max_gap(mismatched.channel("x1").unwrap(), matched.channel("x1").unwrap()))
}

/// External torque at the gearbox output and its rate: returns `(Text, Ṫext)`.
pub type TorqueProfile = fn(f64) -> (f64, f64);
pub type VoltageProfile = fn(f64) -> f64;

struct PmdcPhysical {
    params: PlantParams,
    torque: TorqueProfile,
    voltage: VoltageProfile,
}

impl PmdcPhysical {
    fn load(&self, t: f64, omega: f64) -> (f64, f64) {
        let (text, text_rate) = (self.torque)(t);
        // Friction-free loads only have a smooth rate.
        (load_torque(omega, text, &self.params), text_rate / self.params.gear_ratio)
    }
}

impl System for PmdcPhysical {
    fn dimension(&self) -> usize {
        2
    }

    fn derivative(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let (tl, _) = self.load(t, x[0]);
        let d = pmdc_physical_deriv(PhysicalState { omega: x[0], current: x[1] }, (self.voltage)(t), tl, &self.params);
        out[0] = d.omega;
        out[1] = d.current;
    }

    fn state_names(&self) -> Vec<String> {
        vec!["omega".into(), "current".into()]
    }

    fn channel_names(&self) -> Vec<String> {
        ["omega", "current", "v", "TL", "TL_dot"].map(String::from).to_vec()
    }

    fn record(&self, t: f64, x: &[f64], row: &mut Vec<f64>) {
        let (tl, tl_rate) = self.load(t, x[0]);
        row.extend_from_slice(&[x[0], x[1], (self.voltage)(t), tl, tl_rate]);
    }
}

struct PmdcMatched {
    params: PlantParams,
    torque: TorqueProfile,
    voltage: VoltageProfile,
}

impl System for PmdcMatched {
    fn dimension(&self) -> usize {
        2
    }

    fn derivative(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let (text, text_rate) = (self.torque)(t);
        let n = self.params.gear_ratio;
        let d = equivalent_input_disturbance(text / n, text_rate / n, &self.params);
        let dx = pmdc_brunovsky_deriv(BrunovskyState { x1: x[0], x2: x[1] }, (self.voltage)(t), d, &self.params);
        out[0] = dx.x1;
        out[1] = dx.x2;
    }
}

/// Integrates the motor in physical coordinates, logging
/// `omega, current, v, TL, TL_dot`. Intended for friction-free parameters.
pub fn pmdc_trace(
    params: PlantParams,
    torque: TorqueProfile,
    voltage: VoltageProfile,
    initial: PhysicalState,
    grid: &TimeGrid,
) -> Result<SimTrace, SimError> {
    integrate(&PmdcPhysical { params, torque, voltage }, grid, &[initial.omega, initial.current])
}

/// Integrates the physical and integral-chain motor models with a smooth load
/// (`Fc` forced to zero) and returns max |ω(t) − x̃₁(t)|.
pub fn pmdc_cross_model_gap(
    params: PlantParams,
    torque: TorqueProfile,
    voltage: VoltageProfile,
    initial: PhysicalState,
    grid: &TimeGrid,
) -> Result<f64, SimError> {
    let params = PlantParams { coulomb_friction: 0.0, ..params };
    let physical = pmdc_trace(params, torque, voltage, initial, grid)?;
    let (text0, _) = torque(grid.t0());
    let b0 = to_brunovsky(initial, text0 / params.gear_ratio, &params);
    let matched = integrate(&PmdcMatched { params, torque, voltage }, grid, &[b0.x1, b0.x2])?;
    Ok(max_gap(physical.channel("omega").unwrap(), matched.channel("x1").unwrap()))
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

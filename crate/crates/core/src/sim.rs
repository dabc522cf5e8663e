//! Fixed-step integration, traces, and the small signal helpers shared by
//! every model in the crate.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

/// Any state component beyond this magnitude marks the run as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e9;

const GRID_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("invalid noise spec: {0}")]
    InvalidNoise(String),
    #[error("non-finite derivative in {channel} at t = {time}")]
    NonFiniteDerivative { channel: String, time: f64 },
    #[error("initial state has {got} entries, system dimension is {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("integration diverged after t = {last_valid_time}: {reason}")]
    Diverged { last_valid_time: f64, reason: String, trace: Box<SimTrace> },
}

/// Uniform simulation grid `t0, t0 + dt, ..., tf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    tf: f64,
    dt: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, tf: f64, dt: f64) -> Result<Self, SimError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(SimError::InvalidGrid(format!("dt must be positive, got {dt}")));
        }
        if !(tf > t0) || !t0.is_finite() || !tf.is_finite() {
            return Err(SimError::InvalidGrid(format!("need tf > t0, got [{t0}, {tf}]")));
        }
        let ratio = (tf - t0) / dt;
        let steps = ratio.round();
        if ((ratio - steps) / ratio).abs() > GRID_TOLERANCE {
            return Err(SimError::InvalidGrid(format!("(tf - t0) / dt = {ratio} is not an integer")));
        }
        Ok(Self { t0, tf, dt, steps: steps as usize })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn tf(&self) -> f64 {
        self.tf
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of integration steps; the grid has `steps() + 1` points.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }
}

/// Time-indexed record of named channels on a uniform grid.
#[derive(Clone, PartialEq)]
pub struct SimTrace {
    times: Vec<f64>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl fmt::Debug for SimTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SimTrace")
            .field("rows", &self.times.len())
            .field("t_first", &self.times.first())
            .field("t_last", &self.times.last())
            .field("names", &self.names)
            .finish()
    }
}

impl SimTrace {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let columns = vec![Vec::new(); names.len()];
        Self { times: Vec::new(), names, columns }
    }

    /// Builds a trace from whole columns. Every column must match `times` in length.
    pub fn from_columns(times: Vec<f64>, channels: Vec<(String, Vec<f64>)>) -> Result<Self, SimError> {
        let mut trace = Self { times, names: Vec::new(), columns: Vec::new() };
        for (name, data) in channels {
            trace.add_channel(name, data)?;
        }
        Ok(trace)
    }

    pub fn push_row(&mut self, t: f64, row: &[f64]) {
        assert_eq!(row.len(), self.names.len(), "row width must match channel count");
        self.times.push(t);
        for (col, &v) in self.columns.iter_mut().zip(row) {
            col.push(v);
        }
    }

    pub fn add_channel(&mut self, name: impl Into<String>, data: Vec<f64>) -> Result<(), SimError> {
        let name = name.into();
        if data.len() != self.times.len() {
            return Err(SimError::InvalidGrid(format!(
                "channel {name} has {} samples, trace has {}",
                data.len(),
                self.times.len()
            )));
        }
        self.names.push(name);
        self.columns.push(data);
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.columns[i].as_slice())
    }

    /// Grid spacing, or `None` for traces with fewer than two rows.
    pub fn dt(&self) -> Option<f64> {
        match self.times.as_slice() {
            [a, b, ..] => Some(b - a),
            _ => None,
        }
    }

    pub fn row(&self, k: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[k]).collect()
    }
}

/// Something that can be integrated by [`integrate`].
pub trait System {
    fn dimension(&self) -> usize;

    fn derivative(&self, t: f64, state: &[f64], out: &mut [f64]);

    fn state_names(&self) -> Vec<String> {
        (1..=self.dimension()).map(|i| format!("x{i}")).collect()
    }

    /// Names of the logged channels, in the order written by [`System::record`].
    fn channel_names(&self) -> Vec<String> {
        self.state_names()
    }

    fn record(&self, _t: f64, state: &[f64], row: &mut Vec<f64>) {
        row.extend_from_slice(state);
    }
}

fn check_finite(values: &[f64], t: f64) -> Result<(), SimError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(SimError::NonFiniteDerivative { channel: format!("state[{i}]"), time: t }),
        None => Ok(()),
    }
}

/// One classical fourth-order Runge-Kutta step.
pub fn rk4_step<F>(mut deriv: F, state: &[f64], t: f64, dt: f64) -> Result<Vec<f64>, SimError>
where
    F: FnMut(f64, &[f64]) -> Vec<f64>,
{
    let n = state.len();
    let half = 0.5 * dt;
    let offset = |k: &[f64], h: f64| -> Vec<f64> { state.iter().zip(k).map(|(x, d)| x + h * d).collect() };

    let k1 = deriv(t, state);
    check_finite(&k1, t)?;
    let k2 = deriv(t + half, &offset(&k1, half));
    check_finite(&k2, t + half)?;
    let k3 = deriv(t + half, &offset(&k2, half));
    check_finite(&k3, t + half)?;
    let k4 = deriv(t + dt, &offset(&k3, dt));
    check_finite(&k4, t + dt)?;

    Ok((0..n).map(|i| state[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect())
}

/// Integrates `system` over `grid`, logging one row per grid point.
///
/// On divergence (a non-finite derivative or any state beyond
/// [`DIVERGENCE_LIMIT`]) the rows recorded so far are returned inside
/// [`SimError::Diverged`].
pub fn integrate<S: System + ?Sized>(system: &S, grid: &TimeGrid, initial: &[f64]) -> Result<SimTrace, SimError> {
    let n = system.dimension();
    if initial.len() != n {
        return Err(SimError::DimensionMismatch { expected: n, got: initial.len() });
    }
    let names = system.state_names();
    let mut trace = SimTrace::new(system.channel_names());
    let mut state = initial.to_vec();
    let mut row = Vec::new();

    let diverged = |trace: SimTrace, last_valid_time: f64, reason: String| SimError::Diverged {
        last_valid_time,
        reason,
        trace: Box::new(trace),
    };

    for k in 0..=grid.steps() {
        let t = grid.time(k);
        row.clear();
        system.record(t, &state, &mut row);
        trace.push_row(t, &row);
        if k == grid.steps() {
            break;
        }
        let deriv = |tt: f64, x: &[f64]| {
            let mut out = vec![0.0; n];
            system.derivative(tt, x, &mut out);
            out
        };
        let next = match rk4_step(deriv, &state, t, grid.dt()) {
            Ok(next) => next,
            Err(SimError::NonFiniteDerivative { channel, time }) => {
                let channel = channel
                    .trim_start_matches("state[")
                    .trim_end_matches(']')
                    .parse::<usize>()
                    .ok()
                    .and_then(|i| names.get(i).cloned())
                    .unwrap_or(channel);
                return Err(diverged(trace, t, format!("non-finite derivative of {channel} at t = {time}")));
            }
            Err(e) => return Err(e),
        };
        if let Some(i) = next.iter().position(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT) {
            return Err(diverged(trace, t, format!("|{}| exceeded {DIVERGENCE_LIMIT:e}", names[i])));
        }
        state = next;
    }
    Ok(trace)
}

/// Zero-order-hold Gaussian measurement noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub seed: u64,
    pub variance: f64,
    pub sample_period: f64,
}

impl NoiseSpec {
    pub fn new(seed: u64, variance: f64, sample_period: f64) -> Result<Self, SimError> {
        if !(variance >= 0.0) || !variance.is_finite() {
            return Err(SimError::InvalidNoise(format!("variance must be >= 0, got {variance}")));
        }
        if !(sample_period > 0.0) || !sample_period.is_finite() {
            return Err(SimError::InvalidNoise(format!("sample period must be positive, got {sample_period}")));
        }
        Ok(Self { seed, variance, sample_period })
    }

    /// Checks that the hold period is an integer multiple of (and at least) `dt`.
    pub fn check_grid(&self, dt: f64) -> Result<(), SimError> {
        let ratio = self.sample_period / dt;
        if ratio < 1.0 - GRID_TOLERANCE || (ratio - ratio.round()).abs() > 1e-6 * ratio {
            return Err(SimError::InvalidNoise(format!(
                "sample period {} is not an integer multiple of dt = {dt}",
                self.sample_period
            )));
        }
        Ok(())
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    fn sample_index(&self, t: f64) -> u64 {
        let k = (t / self.sample_period + 1e-9).floor();
        if k > 0.0 {
            k as u64
        } else {
            0
        }
    }
}

/// Noise value at time `t`: draw number `floor(t / sample_period)` of the
/// seeded stream, held constant until the next sample instant.
pub fn gaussian_noise(spec: &NoiseSpec, t: f64) -> f64 {
    if spec.variance == 0.0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(spec.sample_index(t));
    Normal::new(0.0, spec.std_dev()).expect("std dev validated at construction").sample(&mut rng)
}

pub fn saturate(u: f64, lo: f64, hi: f64) -> f64 {
    debug_assert!(lo < hi);
    u.clamp(lo, hi)
}

pub fn step_signal(amplitude: f64, t_on: f64, t: f64) -> f64 {
    if t < t_on {
        0.0
    } else {
        amplitude
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Decay;

    impl System for Decay {
        fn dimension(&self) -> usize {
            1
        }
        fn derivative(&self, _t: f64, x: &[f64], out: &mut [f64]) {
            out[0] = -x[0];
        }
    }

    struct Oscillator;

    impl System for Oscillator {
        fn dimension(&self) -> usize {
            2
        }
        fn derivative(&self, _t: f64, x: &[f64], out: &mut [f64]) {
            out[0] = x[1];
            out[1] = -x[0];
        }
    }

    struct Constant;

    impl System for Constant {
        fn dimension(&self) -> usize {
            1
        }
        fn derivative(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
            out[0] = 0.0;
        }
    }

    struct Blowup;

    impl System for Blowup {
        fn dimension(&self) -> usize {
            1
        }
        fn derivative(&self, _t: f64, x: &[f64], out: &mut [f64]) {
            out[0] = 50.0 * x[0];
        }
    }

    #[test]
    fn rk4_zero_derivative_is_identity() {
        let x = rk4_step(|_, _| vec![0.0], &[1.0], 0.0, 0.37).unwrap();
        assert_eq!(x, vec![1.0]);
    }

    #[test]
    fn rk4_growth_matches_exponential() {
        let x = rk4_step(|_, x| vec![x[0]], &[1.0], 0.0, 0.1).unwrap();
        assert!((x[0] - 0.1f64.exp()).abs() < 1e-7);
    }

    #[test]
    fn rk4_decay_hundred_steps() {
        let mut x = vec![1.0];
        for k in 0..100 {
            x = rk4_step(|_, x| vec![-x[0]], &x, k as f64 * 0.01, 0.01).unwrap();
        }
        assert!((x[0] - (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn rk4_reports_non_finite_channel() {
        let err = rk4_step(|_, _| vec![0.0, f64::NAN], &[1.0, 1.0], 2.5, 0.1).unwrap_err();
        match err {
            SimError::NonFiniteDerivative { channel, time } => {
                assert_eq!(channel, "state[1]");
                assert_eq!(time, 2.5);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rk4_fourth_order_convergence() {
        let max_err = |dt: f64| {
            let grid = TimeGrid::new(0.0, 1.0, dt).unwrap();
            let trace = integrate(&Decay, &grid, &[1.0]).unwrap();
            trace
                .times()
                .iter()
                .zip(trace.channel("x1").unwrap())
                .map(|(t, x)| (x - (-t).exp()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = max_err(0.1) / max_err(0.05);
        assert!((14.0..=18.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn integrate_constant_system() {
        let grid = TimeGrid::new(0.0, 1.0, 0.1).unwrap();
        let trace = integrate(&Constant, &grid, &[5.0]).unwrap();
        assert_eq!(trace.len(), 11);
        assert!(trace.channel("x1").unwrap().iter().all(|&x| x == 5.0));
        assert!((trace.times()[10] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn integrate_oscillator_returns_after_one_period() {
        let period = 2.0 * std::f64::consts::PI;
        let grid = TimeGrid::new(0.0, period, period / 10_000.0).unwrap();
        let trace = integrate(&Oscillator, &grid, &[1.0, 0.0]).unwrap();
        let last = trace.row(trace.len() - 1);
        assert!((last[0] - 1.0).abs() < 1e-6 && last[1].abs() < 1e-6, "{last:?}");
    }

    #[test]
    fn integrate_rejects_wrong_dimension() {
        let grid = TimeGrid::new(0.0, 1.0, 0.1).unwrap();
        assert!(matches!(
            integrate(&Oscillator, &grid, &[1.0]),
            Err(SimError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn integrate_flags_divergence_with_truncated_trace() {
        let grid = TimeGrid::new(0.0, 10.0, 0.01).unwrap();
        match integrate(&Blowup, &grid, &[1.0]) {
            Err(SimError::Diverged { last_valid_time, trace, .. }) => {
                assert!(last_valid_time > 0.0 && last_valid_time < 1.0);
                assert!(trace.len() < grid.steps());
                assert_eq!(*trace.times().last().unwrap(), last_valid_time);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(0.0, 1.0, 0.0).is_err());
        assert!(TimeGrid::new(1.0, 1.0, 0.1).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0.3).is_err());
        assert_eq!(TimeGrid::new(0.0, 10.0, 1e-4).unwrap().steps(), 100_000);
    }

    #[test]
    fn noise_zero_variance_is_silent() {
        let spec = NoiseSpec::new(3, 0.0, 1e-3).unwrap();
        assert!((0..1000).all(|k| gaussian_noise(&spec, k as f64 * 1.3e-3) == 0.0));
    }

    #[test]
    fn noise_statistics() {
        let spec = NoiseSpec::new(42, 36e-6, 1e-3).unwrap();
        let n = 1_000_000;
        let samples: Vec<f64> = (0..n).map(|k| gaussian_noise(&spec, k as f64 * 1e-3)).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 3.0 * 6e-3 / 1000.0, "mean {mean}");
        assert!((var - 36e-6).abs() < 0.05 * 36e-6, "variance {var}");
    }

    #[test]
    fn noise_is_reproducible_and_held() {
        let spec = NoiseSpec::new(7, 36e-6, 1e-3).unwrap();
        let a: Vec<f64> = (0..500).map(|k| gaussian_noise(&spec, k as f64 * 1e-4)).collect();
        let b: Vec<f64> = (0..500).map(|k| gaussian_noise(&spec, k as f64 * 1e-4)).collect();
        assert_eq!(a, b);
        for chunk in a.chunks(10) {
            assert!(chunk.iter().all(|&v| v == chunk[0]));
        }
        assert_ne!(a[0], a[10]);
    }

    #[test]
    fn noise_grid_compatibility() {
        let spec = NoiseSpec::new(0, 1.0, 1e-3).unwrap();
        assert!(spec.check_grid(1e-4).is_ok());
        assert!(spec.check_grid(3e-4).is_err());
        assert!(spec.check_grid(2e-3).is_err());
        assert!(NoiseSpec::new(0, -1.0, 1e-3).is_err());
    }

    #[test]
    fn saturation_and_steps() {
        assert_eq!(saturate(5.0, -12.0, 12.0), 5.0);
        assert_eq!(saturate(26.0, -12.0, 12.0), 12.0);
        assert_eq!(saturate(-16.0, -12.0, 12.0), -12.0);
        assert_eq!(step_signal(2.0, 5.0, 4.999), 0.0);
        assert_eq!(step_signal(2.0, 5.0, 5.0), 2.0);
        assert_eq!(step_signal(1.0, 0.0, 3.0), 1.0);
    }
}

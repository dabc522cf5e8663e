//! Trapezoidal performance integrals, channel extrema and report comparison.

use std::collections::BTreeMap;

use crate::sim::SimTrace;

use super::{MetricsError, MetricsReport};

/// Relative band used for settling diagnostics.
pub const SETTLING_BAND: f64 = 0.02;

/// Channels summarised in every report.
pub const PEAK_CHANNELS: [&str; 9] = ["y", "xhat1", "xhat2", "xhat3", "x1", "x2", "x3", "u0", "v"];

fn channel<'a>(trace: &'a SimTrace, name: &str) -> Result<&'a [f64], MetricsError> {
    trace.channel(name).ok_or_else(|| MetricsError::MissingChannel(name.to_string()))
}

fn trapezoid(times: &[f64], f: impl Fn(usize) -> f64) -> Result<f64, MetricsError> {
    if times.len() < 2 {
        return Err(MetricsError::BadGrid);
    }
    let mut sum = 0.0;
    let mut prev = f(0);
    for k in 1..times.len() {
        let cur = f(k);
        sum += 0.5 * (prev + cur) * (times[k] - times[k - 1]);
        prev = cur;
    }
    Ok(sum)
}

/// `∫ t·|r − y| dt` over the trace horizon.
pub fn itae(trace: &SimTrace, r_channel: &str, y_channel: &str) -> Result<f64, MetricsError> {
    let r = channel(trace, r_channel)?;
    let y = channel(trace, y_channel)?;
    let t = trace.times();
    trapezoid(t, |k| t[k] * (r[k] - y[k]).abs())
}

/// `∫ u² dt` over the trace horizon.
pub fn isu(trace: &SimTrace, u_channel: &str) -> Result<f64, MetricsError> {
    let u = channel(trace, u_channel)?;
    trapezoid(trace.times(), |k| u[k] * u[k])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPeak {
    pub min: f64,
    pub t_min: f64,
    pub max: f64,
    pub t_max: f64,
}

impl ChannelPeak {
    /// Signed value of largest magnitude.
    pub fn extremum(&self) -> f64 {
        if self.min.abs() > self.max.abs() {
            self.min
        } else {
            self.max
        }
    }
}

/// Global min/max of each channel; ties keep the earliest time.
pub fn peak_metrics(trace: &SimTrace, channels: &[&str]) -> Result<BTreeMap<String, ChannelPeak>, MetricsError> {
    let times = trace.times();
    if times.is_empty() {
        return Err(MetricsError::BadGrid);
    }
    let mut out = BTreeMap::new();
    for &name in channels {
        let data = channel(trace, name)?;
        let mut peak = ChannelPeak { min: data[0], t_min: times[0], max: data[0], t_max: times[0] };
        for (k, &x) in data.iter().enumerate().skip(1) {
            if x < peak.min {
                peak.min = x;
                peak.t_min = times[k];
            }
            if x > peak.max {
                peak.max = x;
                peak.t_max = times[k];
            }
        }
        out.insert(name.to_string(), peak);
    }
    Ok(out)
}

fn band(target: f64) -> f64 {
    SETTLING_BAND * target.abs().max(f64::MIN_POSITIVE)
}

/// First time the channel enters the 2% band around `target`.
pub fn settling_entry(trace: &SimTrace, name: &str, target: f64) -> Result<Option<f64>, MetricsError> {
    let data = channel(trace, name)?;
    let tol = band(target);
    Ok(data.iter().position(|x| (x - target).abs() <= tol).map(|k| trace.times()[k]))
}

/// Time after which the channel stays inside the 2% band around `target`.
pub fn settling_final(trace: &SimTrace, name: &str, target: f64) -> Result<Option<f64>, MetricsError> {
    let data = channel(trace, name)?;
    let tol = band(target);
    Ok(match data.iter().rposition(|x| (x - target).abs() > tol) {
        None => trace.times().first().copied(),
        Some(k) if k + 1 < data.len() => Some(trace.times()[k + 1]),
        Some(_) => None,
    })
}

/// Ratios `a / b` per metric; values below one favour `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub itae_ratio: f64,
    pub isu_ratio: f64,
    /// Ratio of largest-magnitude excursions per channel.
    pub peak_ratios: BTreeMap<String, f64>,
}

impl Comparison {
    pub fn a_better_itae(&self) -> bool {
        self.itae_ratio < 1.0
    }

    pub fn a_better_isu(&self) -> bool {
        self.isu_ratio < 1.0
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == b {
        1.0
    } else {
        a / b
    }
}

/// Compares two reports from the same scenario family.
pub fn compare(a: &MetricsReport, b: &MetricsReport) -> Result<Comparison, MetricsError> {
    if a.family != b.family {
        return Err(MetricsError::Incompatible(format!("family '{}' vs '{}'", a.family, b.family)));
    }
    let mut peak_ratios = BTreeMap::new();
    for (name, pa) in &a.peaks {
        if let Some(pb) = b.peaks.get(name) {
            peak_ratios.insert(name.clone(), ratio(pa.extremum().abs(), pb.extremum().abs()));
        }
    }
    Ok(Comparison { itae_ratio: ratio(a.itae, b.itae), isu_ratio: ratio(a.isu, b.isu), peak_ratios })
}

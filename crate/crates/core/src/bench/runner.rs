use std::collections::BTreeMap;
use std::io::Write;

use crate::control::{ClosedLoop, LoopConfig};
use crate::finite_time::{alpha_tilde, lyapunov_error_bound, FiniteTimeSpec};
use crate::observer::{Eso, ObserverKind};
use crate::plant::{apply_uncertainty, PhysicalState};
use crate::sim::{integrate, NoiseSpec, SimError, SimTrace};

use super::metrics::{isu, itae, peak_metrics, settling_entry, settling_final, PEAK_CHANNELS};
use super::{BenchError, ConfigError, MetricsError, MetricsReport, ScenarioConfig};

/// Column order of the CSV trace (after `t`).
pub const CSV_COLUMNS: [&str; 13] = ["x1", "x2", "x3", "xhat1", "xhat2", "xhat3", "u0", "v", "y", "yn", "r", "TL", "d"];

const E1_SMALL: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub config: ScenarioConfig,
    pub trace: SimTrace,
    pub report: MetricsReport,
}

/// Assembles the closed loop. The simulated plant carries the uncertainty;
/// observer and controller keep the nominal input gain, expressed in the
/// output frame because they only see `y = ω/N`.
pub fn build_loop(cfg: &ScenarioConfig) -> Result<ClosedLoop, ConfigError> {
    cfg.validate()?;
    let plant = apply_uncertainty(&cfg.plant, &cfg.uncertainty)?;
    let observer = Eso::build(cfg.observer.kind, &cfg.observer.gains, cfg.observer.fal_delta)?;
    let noise = match cfg.noise {
        Some(n) => Some(NoiseSpec::new(cfg.seed, n.variance, n.sample_period)?),
        None => None,
    };
    Ok(ClosedLoop::new(LoopConfig {
        plant,
        b: cfg.plant.output_input_gain(),
        observer,
        inlsef: cfg.controller.inlsef,
        sond: cfg.controller.sond,
        td_bypass: cfg.controller.td_bypass,
        reference: cfg.reference,
        disturbance: cfg.disturbance,
        noise,
        limiter: cfg.limiter,
        mode: cfg.controller.mode,
    })?)
}

/// Family tag: reports are comparable iff their exogenous signals match.
fn family_tag(cfg: &ScenarioConfig) -> String {
    let noise = cfg.noise.map_or("none".to_string(), |n| format!("{:?}/{:?}", n.variance, n.sample_period));
    format!(
        "ref={:?}@{:?} text={:?}@{:?} noise={} t={:?}..{:?}",
        cfg.reference.amplitude,
        cfg.reference.t_on,
        cfg.disturbance.amplitude,
        cfg.disturbance.t_on,
        noise,
        cfg.grid.t0(),
        cfg.grid.tf(),
    )
}

/// Integrates one scenario. Divergence is not an error: the truncated trace
/// is returned with `report.diverged` set.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioRun, BenchError> {
    let system = build_loop(cfg)?;
    let initial = system
        .initial_state(PhysicalState { omega: cfg.initial.omega, current: cfg.initial.current }, &cfg.initial.xhat);
    let (trace, diverged) = match integrate(&system, &cfg.grid, &initial) {
        Ok(trace) => (trace, false),
        Err(SimError::Diverged { trace, .. }) => (*trace, true),
        Err(e) => return Err(BenchError::Sim(e)),
    };
    let report = report_for(cfg, &trace, diverged)?;
    Ok(ScenarioRun { config: cfg.clone(), trace, report })
}

fn report_for(cfg: &ScenarioConfig, trace: &SimTrace, diverged: bool) -> Result<MetricsReport, MetricsError> {
    let (itae, isu, isu_command) = if trace.len() >= 2 {
        (itae(trace, "r", "y")?, isu(trace, "v")?, isu(trace, "v_cmd")?)
    } else {
        (0.0, 0.0, 0.0)
    };
    let peaks = peak_metrics(trace, &PEAK_CHANNELS)?;
    let target = cfg.reference.amplitude;
    let mut settling = BTreeMap::new();
    for ch in ["y", "xhat1"] {
        settling.insert(ch.to_string(), (settling_entry(trace, ch, target)?, settling_final(trace, ch, target)?));
    }

    let x1 = trace.channel("x1").ok_or_else(|| MetricsError::MissingChannel("x1".into()))?;
    let xhat1 = trace.channel("xhat1").ok_or_else(|| MetricsError::MissingChannel("xhat1".into()))?;
    let e1_small_time = x1.iter().zip(xhat1).position(|(x, h)| (x - h).abs() < E1_SMALL).map(|k| trace.times()[k]);
    let e1_bound = match cfg.observer.kind {
        ObserverKind::Nleso => {
            let e0 = x1[0] - xhat1[0];
            let spec = FiniteTimeSpec { k: 1.0, alpha: cfg.observer.gains.alpha, e0, c: 2.0, v0: 0.5 * e0 * e0 };
            lyapunov_error_bound(&spec, alpha_tilde(spec.alpha)).ok()
        }
        _ => None,
    };

    Ok(MetricsReport {
        scenario: cfg.name.clone(),
        family: family_tag(cfg),
        observer: cfg.observer.kind.to_string(),
        itae,
        isu,
        isu_command,
        peaks,
        settling,
        e1_small_time,
        e1_bound,
        diverged,
        rows: trace.len(),
        t_end: trace.times().last().copied().unwrap_or(cfg.grid.t0()),
    })
}

/// Writes `t` plus [`CSV_COLUMNS`], one row per grid point, LF endings.
pub fn write_trace_csv<W: Write>(trace: &SimTrace, mut out: W) -> Result<(), BenchError> {
    let cols: Vec<&[f64]> = CSV_COLUMNS
        .iter()
        .map(|name| trace.channel(name).ok_or_else(|| MetricsError::MissingChannel(name.to_string())))
        .collect::<Result<_, _>>()?;
    let mut line = String::from("t");
    for name in CSV_COLUMNS {
        line.push(',');
        line.push_str(name);
    }
    line.push('\n');
    out.write_all(line.as_bytes())?;
    for (k, t) in trace.times().iter().enumerate() {
        line.clear();
        line.push_str(&format!("{t:.10e}"));
        for col in &cols {
            line.push_str(&format!(",{:.10e}", col[k]));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{builtin, ScenarioFamily};

    fn short(mut cfg: ScenarioConfig, tf: f64) -> ScenarioConfig {
        cfg.grid = crate::sim::TimeGrid::new(0.0, tf, cfg.grid.dt()).unwrap();
        cfg
    }

    #[test]
    fn short_run_produces_report() {
        let cfg = short(builtin(ScenarioFamily::Peaking, ObserverKind::Nleso), 0.05);
        let run = run_scenario(&cfg).unwrap();
        assert_eq!(run.trace.len(), 501);
        assert!(!run.report.diverged);
        assert!(run.report.itae >= 0.0 && run.report.isu >= 0.0);
        assert!(run.report.e1_bound.is_some());
        assert_eq!(run.report.peaks["xhat1"].max, 0.5);
    }

    #[test]
    fn uncertainty_reaches_the_simulated_plant() {
        let cfg = builtin(ScenarioFamily::Uncertainty, ObserverKind::Leso);
        let sys = build_loop(&cfg).unwrap();
        let p = sys.config().plant;
        assert!((p.inertia - 0.8 * cfg.plant.inertia).abs() < 1e-15);
        assert!((p.damping - 0.6 * cfg.plant.damping).abs() < 1e-15);
        assert!((p.resistance - 0.5 * cfg.plant.resistance).abs() < 1e-15);
        assert_eq!(sys.config().b, cfg.plant.output_input_gain());
    }

    #[test]
    fn csv_layout() {
        let cfg = short(builtin(ScenarioFamily::Noise, ObserverKind::Leso), 0.001);
        let run = run_scenario(&cfg).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&run.trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.split('\n').collect();
        assert_eq!(lines[0], "t,x1,x2,x3,xhat1,xhat2,xhat3,u0,v,y,yn,r,TL,d");
        assert_eq!(lines.len(), 11 + 2);
        assert_eq!(lines.last(), Some(&""));
        assert!(!text.contains('\r'));
        assert_eq!(lines[1].split(',').count(), 14);
        assert!(lines[1].starts_with("0.0000000000e0,"));
    }
}

//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use adrc_core::bench::{builtin, builtin_suite, run_scenario, ScenarioFamily, ScenarioRun};
use adrc_core::finite_time::{closed_form_settling_time, simulate_finite_time_scalar, FiniteTimeSpec};
use adrc_core::observer::{leso_gains, nleso_gains, peaking_term, ObserverGains, ObserverKind, PeakingVariant};
use adrc_core::plant::{
    example_trace, pmdc_cross_model_gap, verify_brunovsky_transform, ExampleTransform, PhysicalState, PlantParams,
};
use adrc_core::sim::TimeGrid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn run(family: ScenarioFamily, kind: ObserverKind) -> ScenarioRun {
    run_scenario(&builtin(family, kind)).expect("built-in scenario runs")
}

fn channel<'a>(run: &'a ScenarioRun, name: &str) -> &'a [f64] {
    run.trace.channel(name).expect("channel logged")
}

fn gains() -> Outcome {
    let n = nleso_gains(35.0, 2).unwrap();
    let l = leso_gains(35.0, 2).unwrap();
    let ok = n == [3.0, 105.0, 1225.0] && l == [105.0, 3675.0, 42875.0];
    outcome(ok, format!("nleso {n:?}, leso {l:?}"))
}

fn peaking_arithmetic() -> Outcome {
    let g = ObserverGains::new(35.0, 2, vec![0.5, 0.125, 1.0 / 16.0], 0.99927, 0.3, 0.38, 0.305151).unwrap();
    let nl = peaking_term(35.0, 3, &g, 1.0, PeakingVariant::Nonlinear);
    let lin = peaking_term(35.0, 3, &g, 1.0, PeakingVariant::Linear);
    let ok = (nl - 222.4521).abs() <= 0.05 && lin == 42875.0;
    outcome(ok, format!("nonlinear {nl:.5} (target 222.4521 +/- 0.05), linear {lin}"))
}

fn finite_time() -> Outcome {
    let spec = FiniteTimeSpec::scalar(1.0, 0.5, 1.0).unwrap();
    let tf = closed_form_settling_time(&spec);
    let ts = simulate_finite_time_scalar(&spec, 1e-5).unwrap().settling_time.unwrap_or(f64::INFINITY);
    let single = (ts - tf).abs() <= 0.03 * tf;

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let cases = 200;
    for _ in 0..cases {
        let k = rng.random_range(0.5..=5.0);
        let alpha = rng.random_range(0.2..=0.8);
        let mag: f64 = rng.random_range(0.1..=10.0);
        let e0 = if rng.random::<bool>() { mag } else { -mag };
        let spec = FiniteTimeSpec::scalar(k, alpha, e0).unwrap();
        let tf = closed_form_settling_time(&spec);
        let ts = simulate_finite_time_scalar(&spec, 1e-4 * tf).unwrap().settling_time.unwrap_or(f64::INFINITY);
        worst = worst.max(ts / tf);
    }
    let grid = worst <= 1.03;
    outcome(single && grid, format!("t_s {ts:.5} vs t_f {tf}; worst t_s/t_f over {cases} random cases {worst:.5}"))
}

fn open_loop_convergence() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for kind in [ObserverKind::Nleso, ObserverKind::Leso] {
        let r = run(ScenarioFamily::OpenLoop, kind);
        let t = r.trace.times();
        let x1 = channel(&r, "x1");
        let xhat1 = channel(&r, "xhat1");
        let y = channel(&r, "y");
        let steady = y[y.len() - 1].abs();
        let err = t
            .iter()
            .zip(x1.iter().zip(xhat1))
            .filter(|(s, _)| **s > 3.0)
            .map(|(_, (a, b))| (a - b).abs())
            .fold(0.0, f64::max);
        ok &= err < 0.01 * steady;
        detail.push(format!("{kind}: max err {err:.3e} vs 1% of {steady:.4}"));
    }
    outcome(ok, detail.join("; "))
}

fn peaking_reduction() -> Outcome {
    let n = run(ScenarioFamily::Peaking, ObserverKind::Nleso).report;
    let l = run(ScenarioFamily::Peaking, ObserverKind::Leso).report;
    let r1 = n.peaks["xhat1"].min.abs() / l.peaks["xhat1"].min.abs();
    let r2 = n.peaks["xhat2"].extremum().abs() / l.peaks["xhat2"].extremum().abs();
    let r3 = l.peaks["xhat3"].extremum().abs() / n.peaks["xhat3"].extremum().abs();
    let ok = r1 <= 0.3 && r2 <= 0.5 && r3 >= 5.0;
    outcome(
        ok,
        format!(
            "xhat1 min {:.4} vs {:.4} (ratio {r1:.3} <= 0.3); xhat2 {:.3} vs {:.3} (ratio {r2:.3} <= 0.5); xhat3 leso/nleso {r3:.2} >= 5",
            n.peaks["xhat1"].min,
            l.peaks["xhat1"].min,
            n.peaks["xhat2"].extremum(),
            l.peaks["xhat2"].extremum()
        ),
    )
}

/// Last time after the step at which `|y − 1|` exceeds 2%, relative to the step.
fn recovery_time(r: &ScenarioRun, t_step: f64) -> f64 {
    let t = r.trace.times();
    let y = channel(r, "y");
    t.iter()
        .zip(y)
        .filter(|(s, v)| **s >= t_step && (*v - 1.0).abs() > 0.02)
        .map(|(s, _)| s - t_step)
        .fold(0.0, f64::max)
}

fn disturbance_orderings() -> Outcome {
    let n = run(ScenarioFamily::Disturbance, ObserverKind::Nleso);
    let l = run(ScenarioFamily::Disturbance, ObserverKind::Leso);
    let itae = n.report.itae / l.report.itae;
    let isu = n.report.isu / l.report.isu;
    let (rn, rl) = (recovery_time(&n, 5.0), recovery_time(&l, 5.0));
    let ok = itae < 0.5 && isu < 1.0 && rn <= 2.0 && rl <= 2.0;
    outcome(
        ok,
        format!(
            "itae {:.6}/{:.6} = {itae:.4} (< 0.5); isu {:.5}/{:.5} = {isu:.4} (< 1); back in 2% band after {rn:.4} s / {rl:.4} s (<= 2)",
            n.report.itae, l.report.itae, n.report.isu, l.report.isu
        ),
    )
}

fn output_variance(r: &ScenarioRun) -> f64 {
    let window: Vec<f64> = r
        .trace
        .times()
        .iter()
        .zip(channel(r, "y"))
        .filter(|(t, _)| (6.0..=10.0).contains(*t))
        .map(|(_, y)| *y)
        .collect();
    let mean = window.iter().sum::<f64>() / window.len() as f64;
    window.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / window.len() as f64
}

fn noise_ordering() -> Outcome {
    let vn = output_variance(&run(ScenarioFamily::Noise, ObserverKind::Nleso));
    let vl = output_variance(&run(ScenarioFamily::Noise, ObserverKind::Leso));
    outcome(vn < vl, format!("var(y) on [6, 10]: nleso {vn:.4e}, leso {vl:.4e}"))
}

fn transform_residual() -> Outcome {
    fn sine(t: f64) -> (f64, f64, f64) {
        (0.0, t.sin(), t.cos())
    }
    fn torque(t: f64) -> (f64, f64) {
        (0.5 * t.sin(), 0.5 * t.cos())
    }
    fn voltage(t: f64) -> f64 {
        6.0 + (3.0 * t).sin()
    }
    let grid = TimeGrid::new(0.0, 1.0, 1e-4).unwrap();
    let trace = example_trace(sine, [0.0, -1.0], &grid).unwrap();
    let res = verify_brunovsky_transform(&trace, &ExampleTransform, 1e-3).unwrap();
    let gap = pmdc_cross_model_gap(
        PlantParams { coulomb_friction: 0.0, ..PlantParams::nominal() },
        torque,
        voltage,
        PhysicalState { omega: 0.2, current: 0.5 },
        &grid,
    )
    .unwrap();
    let ok = res.passed() && gap < 1e-4;
    outcome(
        ok,
        format!(
            "residuals {:.3e}, {:.3e} (< 1e-3); motor cross-model gap {gap:.3e} (< 1e-4)",
            res.first_equation, res.second_equation
        ),
    )
}

fn saturation_and_determinism() -> Outcome {
    let mut worst = 0.0f64;
    let mut identical = true;
    for cfg in builtin_suite() {
        let a = run_scenario(&cfg).unwrap();
        let b = run_scenario(&cfg).unwrap();
        worst = channel(&a, "v").iter().fold(worst, |m, v| m.max(v.abs()));
        identical &= a.trace == b.trace && a.report == b.report;
    }
    outcome(worst <= 12.0 && identical, format!("max |v| {worst} (<= 12); repeated runs identical: {identical}"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("gain schedules", gains),
        ("peaking-term arithmetic", peaking_arithmetic),
        ("finite-time settling", finite_time),
        ("open-loop observer convergence", open_loop_convergence),
        ("peaking reduction", peaking_reduction),
        ("disturbance orderings", disturbance_orderings),
        ("noise suppression", noise_ordering),
        ("transform residual", transform_residual),
        ("saturation and determinism", saturation_and_determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {} {name}: {verdict} ({}) [{:.1} s]", i + 1, o.detail, start.elapsed().as_secs_f64());
        failures += usize::from(!o.passed);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

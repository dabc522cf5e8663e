use adrc_core::bench::{builtin, builtin_suite, compare, parse_scenario, run_scenario, MetricsReport, ScenarioFamily};
use adrc_core::observer::ObserverKind;
use adrc_core::plant::{apply_uncertainty, UncertaintySpec};

#[test]
fn builtin_suite_runs_without_divergence() {
    for cfg in builtin_suite() {
        let run = run_scenario(&cfg).unwrap();
        assert!(!run.report.diverged, "{}", cfg.name);
        assert_eq!(run.trace.len(), 100_001, "{}", cfg.name);
        assert!(run.report.itae >= 0.0 && run.report.isu >= 0.0);
    }
}

#[test]
fn metrics_are_deterministic() {
    let cfg = builtin(ScenarioFamily::Noise, ObserverKind::Nleso);
    let a = run_scenario(&cfg).unwrap();
    let b = run_scenario(&cfg).unwrap();
    assert_eq!(a.report, b.report);
    assert_eq!(a.trace, b.trace);

    let mut other = cfg.clone();
    other.seed = 7;
    assert_ne!(run_scenario(&other).unwrap().report.itae, a.report.itae);
}

#[test]
fn disturbance_step_dips_the_output() {
    let run = run_scenario(&builtin(ScenarioFamily::Disturbance, ObserverKind::Leso)).unwrap();
    let t = run.trace.times();
    let y = run.trace.channel("y").unwrap();
    let before = y[t.iter().position(|&s| s >= 4.99).unwrap()];
    let (k_min, y_min) = y.iter().enumerate().filter(|(k, _)| t[*k] >= 5.0).fold((0, f64::INFINITY), |acc, (k, &v)| {
        if v < acc.1 {
            (k, v)
        } else {
            acc
        }
    });
    assert!(y_min < before - 0.01, "{y_min} vs {before}");
    assert!(t[k_min] > 5.0 && t[k_min] < 6.0);
}

#[test]
fn uncertainty_scenario_perturbs_plant() {
    let cfg = builtin(ScenarioFamily::Uncertainty, ObserverKind::Nleso);
    let perturbed = apply_uncertainty(&cfg.plant, &UncertaintySpec::nominal()).unwrap();
    assert!((perturbed.inertia / cfg.plant.inertia - 0.8).abs() < 1e-12);
    assert!((perturbed.damping / cfg.plant.damping - 0.6).abs() < 1e-12);
    assert!((perturbed.resistance / cfg.plant.resistance - 0.5).abs() < 1e-12);
}

#[test]
fn nleso_report_carries_finite_time_diagnostics() {
    let run = run_scenario(&builtin(ScenarioFamily::Peaking, ObserverKind::Nleso)).unwrap();
    let r = &run.report;
    assert!(r.e1_small_time.is_some_and(f64::is_finite));
    assert!(r.e1_bound.is_some_and(|b| b > 0.0));
}

#[test]
fn reports_round_trip_and_compare() {
    let a = run_scenario(&builtin(ScenarioFamily::Peaking, ObserverKind::Nleso)).unwrap().report;
    let b = run_scenario(&builtin(ScenarioFamily::Peaking, ObserverKind::Leso)).unwrap().report;
    assert_eq!(MetricsReport::parse(&a.to_text()).unwrap(), a);
    assert_eq!(MetricsReport::parse(&b.to_json()).unwrap(), b);

    let same = compare(&a, &a).unwrap();
    assert_eq!(same.itae_ratio, 1.0);
    assert_eq!(same.isu_ratio, 1.0);
    assert!(same.peak_ratios.values().all(|&r| r == 1.0));

    let d = run_scenario(&builtin(ScenarioFamily::Disturbance, ObserverKind::Nleso)).unwrap().report;
    assert!(compare(&a, &d).is_err());
}

#[test]
fn scenario_file_runs() {
    let cfg = parse_scenario("base = peaking-leso\nname = short\ngrid.tf = 0.5\nobserver.omega0 = 20\n").unwrap();
    let run = run_scenario(&cfg).unwrap();
    assert_eq!(run.trace.len(), 5001);
    assert_eq!(run.report.scenario, "short");
}

#[test]
fn fal_observer_closes_the_loop() {
    let mut cfg = builtin(ScenarioFamily::Peaking, ObserverKind::Fal);
    cfg.grid = adrc_core::sim::TimeGrid::new(0.0, 5.0, 1e-4).unwrap();
    let run = run_scenario(&cfg).unwrap();
    assert!(!run.report.diverged);
    let y = run.trace.channel("y").unwrap();
    assert!((y[y.len() - 1] - 1.0).abs() < 0.02);
}

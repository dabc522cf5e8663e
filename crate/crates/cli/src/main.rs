use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use adrc_core::bench::{
    builtin, compare, parse_builtin_name, parse_scenario, run_scenario, write_trace_csv, BenchError, ConfigError,
    MetricsReport, ScenarioConfig, ScenarioFamily,
};
use adrc_core::finite_time::{
    alpha_tilde, closed_form_settling_time, lyapunov_error_bound, simulate_finite_time_scalar, FiniteTimeSpec,
};
use adrc_core::observer::ObserverKind;
use adrc_core::plant::{
    example_cross_model_gap, example_trace, pmdc_cross_model_gap, pmdc_trace, verify_brunovsky_transform,
    ExampleTransform, PhysicalState, PlantParams, PmdcTransform,
};
use adrc_core::sim::TimeGrid;

const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGED: u8 = 3;
const EXIT_ASSERTION: u8 = 4;

#[derive(Parser)]
#[command(name = "adrc-bench", version, about = "Run and compare extended-state-observer experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a built-in scenario or a scenario file.
    Run {
        /// Built-in name (see list-scenarios) or path to a `key = value` file.
        #[arg(long)]
        scenario: String,
        /// Observer: leso, nleso or fal.
        #[arg(long)]
        observer: Option<ObserverKind>,
        #[arg(long)]
        omega0: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for `<name>.csv`, `<name>.report.txt` and `<name>.report.json`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the report as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Compare two reports (text or JSON). Ratios are a / b.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Fail with exit code 4 unless itae(a)/itae(b) is below this.
        #[arg(long)]
        max_itae_ratio: Option<f64>,
        /// Fail with exit code 4 unless isu(a)/isu(b) is below this.
        #[arg(long)]
        max_isu_ratio: Option<f64>,
        /// `channel=limit` bound on a peak ratio; repeatable.
        #[arg(long = "max-peak-ratio", value_parser = parse_peak_bound)]
        max_peak_ratio: Vec<(String, f64)>,
    },
    /// List the built-in scenarios.
    ListScenarios,
    /// Check the matched-form transformation on the worked example and the motor.
    VerifyTransform {
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
    },
    /// Settling time of e' = -k sgn(e)|e|^alpha: closed form, simulation and Lyapunov bound.
    FiniteTime {
        #[arg(long)]
        k: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        e0: f64,
        #[arg(long, default_value_t = 2.0)]
        c: f64,
        /// Step size; defaults to 1e-4 of the closed-form settling time.
        #[arg(long)]
        dt: Option<f64>,
    },
}

fn parse_peak_bound(s: &str) -> Result<(String, f64), String> {
    let (ch, v) = s.split_once('=').ok_or("expected channel=limit")?;
    let v = v.parse::<f64>().map_err(|e| e.to_string())?;
    Ok((ch.to_string(), v))
}

enum Failure {
    Config(String),
    Diverged(String),
    Assertion(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Sim(e) => Failure::Diverged(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Config(format!("{}: {e}", path.display()))
}

fn load_scenario(spec: &str, observer: Option<ObserverKind>) -> Result<ScenarioConfig, Failure> {
    if let Ok((family, kind)) = parse_builtin_name(spec) {
        return Ok(builtin(family, observer.unwrap_or(kind)));
    }
    let path = Path::new(spec);
    if !path.is_file() {
        return Err(ConfigError::UnknownScenario(spec.to_string()).into());
    }
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut cfg = parse_scenario(&text)?;
    if let Some(kind) = observer {
        cfg.observer.kind = kind;
    }
    Ok(cfg)
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    scenario: &str,
    observer: Option<ObserverKind>,
    omega0: Option<f64>,
    dt: Option<f64>,
    seed: Option<u64>,
    out: Option<&Path>,
    json: bool,
) -> Result<(), Failure> {
    let mut cfg = load_scenario(scenario, observer)?;
    if let Some(w) = omega0 {
        cfg.observer.gains = cfg.observer.gains.with_omega0(w).map_err(|e| Failure::Config(e.to_string()))?;
    }
    if let Some(dt) = dt {
        cfg.grid = TimeGrid::new(cfg.grid.t0(), cfg.grid.tf(), dt).map_err(|e| Failure::Config(e.to_string()))?;
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    cfg.validate()?;

    let run = run_scenario(&cfg)?;
    let report = &run.report;
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let csv = dir.join(format!("{}.csv", cfg.name));
        let file = fs::File::create(&csv).map_err(|e| io_err(&csv, e))?;
        write_trace_csv(&run.trace, std::io::BufWriter::new(file))?;
        let txt = dir.join(format!("{}.report.txt", cfg.name));
        fs::write(&txt, report.to_text()).map_err(|e| io_err(&txt, e))?;
        let js = dir.join(format!("{}.report.json", cfg.name));
        fs::write(&js, report.to_json()).map_err(|e| io_err(&js, e))?;
    }
    let body = if json { report.to_json() } else { report.to_text() };
    print!("{body}");
    let _ = std::io::stdout().flush();
    if report.diverged {
        return Err(Failure::Diverged(format!("{} diverged at t = {}", cfg.name, report.t_end)));
    }
    Ok(())
}

fn read_report(path: &Path) -> Result<MetricsReport, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    MetricsReport::parse(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn cmd_compare(
    a: &Path,
    b: &Path,
    max_itae: Option<f64>,
    max_isu: Option<f64>,
    peak_bounds: &[(String, f64)],
) -> Result<(), Failure> {
    let ra = read_report(a)?;
    let rb = read_report(b)?;
    let cmp = compare(&ra, &rb).map_err(|e| Failure::Config(e.to_string()))?;
    println!("a: {}", ra.scenario);
    println!("b: {}", rb.scenario);
    println!("itae_ratio: {:?}", cmp.itae_ratio);
    println!("isu_ratio: {:?}", cmp.isu_ratio);
    for (ch, r) in &cmp.peak_ratios {
        println!("peak_ratio.{ch}: {r:?}");
    }
    println!("a_better_itae: {}", cmp.a_better_itae());
    println!("a_better_isu: {}", cmp.a_better_isu());

    let mut failed = Vec::new();
    if let Some(limit) = max_itae {
        if cmp.itae_ratio.is_nan() || cmp.itae_ratio >= limit {
            failed.push(format!("itae_ratio {} >= {limit}", cmp.itae_ratio));
        }
    }
    if let Some(limit) = max_isu {
        if cmp.isu_ratio.is_nan() || cmp.isu_ratio >= limit {
            failed.push(format!("isu_ratio {} >= {limit}", cmp.isu_ratio));
        }
    }
    for (ch, limit) in peak_bounds {
        match cmp.peak_ratios.get(ch) {
            Some(r) if *r <= *limit => {}
            Some(r) => failed.push(format!("peak_ratio.{ch} {r} > {limit}")),
            None => return Err(Failure::Config(format!("no peak channel '{ch}' in both reports"))),
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Assertion(failed.join("; ")))
    }
}

fn cmd_list() {
    for family in ScenarioFamily::ALL {
        for kind in [ObserverKind::Nleso, ObserverKind::Leso] {
            println!("{:<22} {}", format!("{family}-{kind}"), family.description());
        }
    }
}

fn sine_signals(t: f64) -> (f64, f64, f64) {
    (0.0, t.sin(), t.cos())
}

fn smooth_torque(t: f64) -> (f64, f64) {
    (0.5 * t.sin(), 0.5 * t.cos())
}

fn wobbling_voltage(t: f64) -> f64 {
    6.0 + (3.0 * t).sin()
}

fn cmd_verify_transform(tolerance: f64) -> Result<(), Failure> {
    let cfg_err = |e: &dyn std::fmt::Display| Failure::Config(e.to_string());
    let grid = TimeGrid::new(0.0, 1.0, 1e-4).map_err(|e| cfg_err(&e))?;
    let start = [0.0, -1.0];
    let trace = example_trace(sine_signals, start, &grid).map_err(|e| cfg_err(&e))?;
    let ex = verify_brunovsky_transform(&trace, &ExampleTransform, tolerance).map_err(|e| cfg_err(&e))?;
    let ex_gap = example_cross_model_gap(sine_signals, start, &grid).map_err(|e| cfg_err(&e))?;

    let plant = PlantParams { coulomb_friction: 0.0, ..PlantParams::nominal() };
    let x0 = PhysicalState { omega: 0.2, current: 0.5 };
    let trace = pmdc_trace(plant, smooth_torque, wobbling_voltage, x0, &grid).map_err(|e| cfg_err(&e))?;
    let motor =
        verify_brunovsky_transform(&trace, &PmdcTransform { params: plant }, tolerance).map_err(|e| cfg_err(&e))?;
    let motor_gap = pmdc_cross_model_gap(plant, smooth_torque, wobbling_voltage, x0, &grid).map_err(|e| cfg_err(&e))?;

    println!("example.first_equation: {:?}", ex.first_equation);
    println!("example.second_equation: {:?}", ex.second_equation);
    println!("example.cross_model_gap: {ex_gap:?}");
    println!("motor.first_equation: {:?}", motor.first_equation);
    println!("motor.second_equation: {:?}", motor.second_equation);
    println!("motor.cross_model_gap: {motor_gap:?}");
    println!("tolerance: {tolerance:?}");
    let ok = ex.passed() && motor.passed() && ex_gap < tolerance && motor_gap < tolerance;
    println!("passed: {ok}");
    if ok {
        Ok(())
    } else {
        Err(Failure::Assertion("transform residual above tolerance".into()))
    }
}

fn cmd_finite_time(k: f64, alpha: f64, e0: f64, c: f64, dt: Option<f64>) -> Result<(), Failure> {
    let spec = FiniteTimeSpec { k, alpha, e0, c, v0: 0.5 * e0 * e0 };
    spec.validate().map_err(|e| Failure::Config(e.to_string()))?;
    let tf = closed_form_settling_time(&spec);
    let dt = dt.unwrap_or(if tf > 0.0 { 1e-4 * tf } else { 1e-4 });
    let run = simulate_finite_time_scalar(&spec, dt).map_err(|e| Failure::Config(e.to_string()))?;
    let bound = lyapunov_error_bound(&spec, alpha_tilde(alpha)).map_err(|e| Failure::Config(e.to_string()))?;
    println!("closed_form_settling_time: {tf:?}");
    match run.settling_time {
        Some(ts) => println!("simulated_settling_time: {ts:?}"),
        None => println!("simulated_settling_time: none"),
    }
    println!("dt: {dt:?}");
    println!("lyapunov_error_bound: {bound:?}");
    println!("alpha_tilde: {:?}", alpha_tilde(alpha));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, observer, omega0, dt, seed, out, json } => {
            cmd_run(&scenario, observer, omega0, dt, seed, out.as_deref(), json)
        }
        Command::Compare { a, b, max_itae_ratio, max_isu_ratio, max_peak_ratio } => {
            cmd_compare(&a, &b, max_itae_ratio, max_isu_ratio, &max_peak_ratio)
        }
        Command::ListScenarios => {
            cmd_list();
            Ok(())
        }
        Command::VerifyTransform { tolerance } => cmd_verify_transform(tolerance),
        Command::FiniteTime { k, alpha, e0, c, dt } => cmd_finite_time(k, alpha, e0, c, dt),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Diverged(msg)) => {
            eprintln!("diverged: {msg}");
            ExitCode::from(EXIT_DIVERGED)
        }
        Err(Failure::Assertion(msg)) => {
            eprintln!("assertion failed: {msg}");
            ExitCode::from(EXIT_ASSERTION)
        }
    }
}

//! DVPP fast-frequency control simulator.
//!
//! Subcommands:
//! - `run`: execute one scenario, write the trace CSV and metrics JSON
//! - `compare`: run the same scenario under SPF/DPF/ADPF side by side
//! - `bode`: magnitude curves of the participation factors
//! - `validate`: check a config and report the pole radii of every block

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dvpp_core::control::DesiredBehavior;
use dvpp_core::plants::{self, PUBLISHED_SAMPLE_TIME};
use dvpp_core::scenario::{compute_metrics, config::load_scenario, EpsilonSpec, VariantKind};
use dvpp_core::tf::{DcGain, RationalZ, Stability};

#[derive(Parser)]
#[command(
    name = "dvpp",
    version,
    about = "Dynamic virtual power plant frequency-control simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and persist trace and metrics.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for trace.csv and metrics.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the scenario under several participation kinds.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated list out of: spf, dpf, adpf.
        #[arg(long, default_value = "spf,dpf,adpf")]
        kinds: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit participation-factor magnitude curves as CSV.
    Bode {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
        /// Points per decade of the log-spaced grid.
        #[arg(long, default_value_t = 20)]
        points_per_decade: usize,
    },
    /// Validate a config and report block stability.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Command) -> dvpp_core::Result<()> {
    match cmd {
        Command::Run { config, out } => run_cmd(&config, &out),
        Command::Compare { config, kinds, out } => compare_cmd(&config, &kinds, &out),
        Command::Bode {
            config,
            out,
            points_per_decade,
        } => bode_cmd(&config, &out, points_per_decade),
        Command::Validate { config } => validate_cmd(&config),
    }
}

fn run_cmd(config: &PathBuf, out: &PathBuf) -> dvpp_core::Result<()> {
    let scenario = load_scenario(config)?;
    let trace = scenario.run()?;
    std::fs::create_dir_all(out)?;
    let trace_path = out.join("trace.csv");
    trace.write_csv_file(&trace_path)?;
    let window = scenario.first_event_time().unwrap_or(0.0);
    let metrics = compute_metrics(&trace, window, None, EpsilonSpec::default())?;
    let metrics_path = out.join("metrics.json");
    std::fs::write(
        &metrics_path,
        serde_json::to_string_pretty(&metrics).expect("metrics serialize"),
    )?;
    println!("scenario '{}': {} samples", scenario.name, trace.len());
    print_metrics(&scenario.name, &metrics);
    println!("trace:   {}", trace_path.display());
    println!("metrics: {}", metrics_path.display());
    Ok(())
}

fn compare_cmd(config: &PathBuf, kinds: &str, out: &PathBuf) -> dvpp_core::Result<()> {
    let scenario = load_scenario(config)?;
    let kinds: Vec<VariantKind> = kinds
        .split(',')
        .map(VariantKind::parse)
        .collect::<dvpp_core::Result<_>>()?;
    let report = scenario.compare(&kinds)?;
    std::fs::create_dir_all(out)?;
    let mut summary = serde_json::Map::new();
    for (kind, (trace, metrics)) in &report.variants {
        let path = out.join(format!("trace_{}.csv", kind.label()));
        trace.write_csv_file(&path)?;
        summary.insert(
            kind.label().to_string(),
            serde_json::to_value(metrics).expect("metrics serialize"),
        );
        print_metrics(kind.label(), metrics);
    }
    let summary_path = out.join("comparison.json");
    std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&serde_json::Value::Object(summary)).expect("serialize"),
    )?;
    println!("comparison: {}", summary_path.display());
    Ok(())
}

fn print_metrics(label: &str, m: &dvpp_core::scenario::Metrics) {
    let recovery = match m.recovery_s {
        Some(r) => format!("{r:.3} s"),
        None => "not recovered".to_string(),
    };
    println!(
        "[{label}] rms_matching_error = {:.6e} pu, nadir = {:.6e} pu, recovery = {recovery}",
        m.rms_matching_error, m.nadir_pu
    );
    println!(
        "[{label}] unit tracking rms (w, p, s) = {:.3e}, {:.3e}, {:.3e} pu",
        m.tracking_rms[0], m.tracking_rms[1], m.tracking_rms[2]
    );
}

fn bode_cmd(config: &PathBuf, out: &PathBuf, points_per_decade: usize) -> dvpp_core::Result<()> {
    let scenario = load_scenario(config)?;
    let factors = scenario.participation_factors()?;
    let nyquist = std::f64::consts::PI / scenario.sample_time;
    let omega_min = 1e-3_f64;
    let omega_max = nyquist * 0.999;
    let decades = (omega_max / omega_min).log10();
    let n = (decades * points_per_decade as f64).ceil() as usize;
    let omegas: Vec<f64> = (0..=n)
        .map(|k| omega_min * 10f64.powf(k as f64 * decades / n as f64))
        .map(|w| w.min(omega_max))
        .collect();
    let responses: Vec<Vec<f64>> = factors
        .iter()
        .map(|f| {
            f.freq_response(&omegas)
                .map(|pts| pts.iter().map(|p| p.magnitude()).collect())
        })
        .collect::<dvpp_core::Result<_>>()?;
    let mut csv = String::from("omega_rad_s,mag_w,mag_p,mag_s\n");
    for (k, &w) in omegas.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            w, responses[0][k], responses[1][k], responses[2][k]
        ));
    }
    std::fs::write(out, csv)?;
    println!(
        "wrote {} frequency points over [{omega_min}, {omega_max:.3}] rad/s to {}",
        omegas.len(),
        out.display()
    );
    Ok(())
}

fn validate_cmd(config: &PathBuf) -> dvpp_core::Result<()> {
    let scenario = load_scenario(config)?;
    println!("config ok: scenario '{}'", scenario.name);
    if scenario.sample_time != PUBLISHED_SAMPLE_TIME {
        println!(
            "warning: sample time {} s differs from the 10 ms the plant coefficients were published for",
            scenario.sample_time
        );
    }

    let t = scenario.sample_time;
    let desired = DesiredBehavior::new(scenario.droop_d, scenario.desired_tau, t)?;
    let mut blocks: Vec<(String, RationalZ)> = vec![("T_des".into(), desired.realized.clone())];
    let factors = scenario.participation_factors()?;
    for (unit, factor) in scenario.units.iter().zip(&factors) {
        blocks.push((format!("m_{}", unit.name), factor.clone()));
        blocks.push((
            format!("m_{} * T_des", unit.name),
            factor.multiply(&desired.realized)?,
        ));
    }
    blocks.push((
        "P_pv (simulation)".into(),
        plants::make_pv_plant(t)?.tf().clone(),
    ));
    blocks.push((
        "P_wind (simulation)".into(),
        plants::make_wind_plant(t)?.tf().clone(),
    ));
    blocks.push(("P_pv (published)".into(), plants::published_pv(t)?));
    blocks.push(("P_wind (published)".into(), plants::published_wind(t)?));

    println!(
        "{:<24} {:>12} {:>14} {:>18}",
        "block", "poles", "max |pole|", "dc gain"
    );
    for (name, tf) in &blocks {
        let analysis = tf.poles();
        let radius = analysis.spectral_radius();
        let dc = match tf.dc_gain() {
            DcGain::Value(v) => format!("{v:.6}"),
            DcGain::NearIntegrator { .. } => "near-integrator".into(),
        };
        let marker = match analysis.stability {
            Stability::Stable => "",
            Stability::Marginal => "  [marginal]",
            Stability::Unstable => "  [UNSTABLE]",
        };
        println!(
            "{:<24} {:>12} {:>14.9} {:>18}{marker}",
            name,
            analysis.poles.len(),
            radius,
            dc
        );
    }

    let euler = t * scenario.grid.d / (2.0 * scenario.grid.h);
    println!(
        "grid: H = {} s, d = {} pu, forward-Euler factor T*d/2H = {euler:.6} (< 2 required)",
        scenario.grid.h, scenario.grid.d
    );
    println!("validation passed");
    Ok(())
}

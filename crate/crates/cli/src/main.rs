//! `quadest` command-line pipeline: simulate, synthesize, estimate, fit,
//! evaluate and compare, composed through CSV files.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use quadest::eval::{align, comparison_report, error_metrics, MetricsReport};
use quadest::logio::{self, EstimateTable, FromKv, KvMap, LogHeader};
use quadest::scenario::{self, Scenario};
use quadest::{
    fit_k1, run_filter, run_generic, simulate, synthesize, ErrorKind, EstimateTrajectory,
    FilterConfig, GenericConfig, NoiseConfig, TruthState, VehicleParams,
};

#[derive(Parser)]
#[command(name = "quadest", version, about = "Drag-aware quadrotor attitude and velocity estimation pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set sigma_ax=0.1`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Drag,
    Generic,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a maneuver into a truth CSV.
    Simulate {
        /// Script file with one `duration,wx,wy,wz` segment per line.
        #[arg(long, conflicts_with = "scenario")]
        script: Option<PathBuf>,
        /// Builtin scenario: hover, figure8 or reversal.
        #[arg(long)]
        scenario: Option<String>,
        /// Length of a builtin scenario (s).
        #[arg(long, default_value_t = scenario::PAPER_DURATION)]
        duration: f64,
        /// Output step (s).
        #[arg(long, default_value_t = scenario::DEFAULT_DT)]
        dt: f64,
        /// Vehicle parameters (`m`, `k1`, `g`, `thrust`).
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate an IMU log from a truth CSV.
    Synthesize {
        #[arg(long)]
        truth: PathBuf,
        /// Sensor noise model.
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Vehicle parameters used for the accelerometer model.
        #[arg(long)]
        vehicle: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the drag filter or the generic baseline over an IMU log.
    Estimate {
        #[arg(long)]
        imu: PathBuf,
        #[arg(long, value_enum, default_value_t = Which::Drag)]
        which: Which,
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Identify the rotor-drag coefficient from an IMU log and truth.
    Fit {
        #[arg(long)]
        imu: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Vehicle parameters; only the mass is used.
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Error metrics of one estimate CSV against truth.
    Evaluate {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        est: PathBuf,
        /// Report destination (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-step errors and 3σ bounds for plotting.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Side-by-side metrics of two estimate CSVs against the same truth.
    Compare {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reference run: 120 s figure-eight, default noise, both estimators,
    /// drag fit and comparison report, all written to one directory.
    PaperScenario {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = scenario::PAPER_DURATION)]
        duration: f64,
    },
}

enum Failure {
    Usage(String),
    Core(quadest::Error),
}

impl From<quadest::Error> for Failure {
    fn from(e: quadest::Error) -> Self {
        Failure::Core(e)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Core(e) => match e.kind() {
                ErrorKind::Data => 2,
                ErrorKind::Numerical => 3,
            },
        }
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn load<T: FromKv + fmt::Debug>(args: &ConfigArgs, base: &[&str]) -> Result<(T, String)> {
    let mut kv = match &args.config {
        Some(path) => KvMap::read(path)?,
        None => {
            let mut kv = KvMap::empty("<defaults>");
            for b in base {
                kv.set(b)?;
            }
            kv
        }
    };
    for s in &args.set {
        kv.set(s).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let value = T::from_kv(kv)?;
    let fp = logio::fingerprint(format!("{value:?}").as_bytes());
    Ok((value, fp))
}

fn vehicle_from(path: Option<&Path>) -> Result<VehicleParams> {
    let args = ConfigArgs {
        config: path.map(Path::to_path_buf),
        set: Vec::new(),
    };
    Ok(load::<VehicleParams>(&args, &[])?.0)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => logio::write_text(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn estimate(log: &quadest::ImuLog, which: Which, cfg: &ConfigArgs) -> Result<(EstimateTrajectory, String)> {
    Ok(match which {
        Which::Drag => {
            let (c, fp) = load::<FilterConfig>(cfg, &["k1=0.57", "m=0.42"])?;
            (run_filter(log, &c)?, fp)
        }
        Which::Generic => {
            let (c, fp) = load::<GenericConfig>(cfg, &[])?;
            (run_generic(log, &c)?, fp)
        }
    })
}

fn metrics(truth: &quadest::TruthTrajectory, est: &EstimateTrajectory, label: &str) -> Result<(MetricsReport, quadest::PairedSeries)> {
    let ps = align(truth, est)?;
    Ok((error_metrics(&ps, label)?, ps))
}

fn fit_text(fit: &quadest::FitResult) -> String {
    format!(
        "k1={:.16e}\nk1_over_m={:.16e}\nresidual_rms={:.16e}\nr2={:.16e}\ncount={}\n",
        fit.k1, fit.k1_over_m, fit.residual_rms, fit.r2, fit.count
    )
}

fn simulate_cmd(
    script: Option<&Path>,
    name: Option<&str>,
    duration: f64,
    dt: f64,
    cfg: &ConfigArgs,
    out: &Path,
) -> Result<()> {
    let (params, fp) = load::<VehicleParams>(cfg, &[])?;
    let (script, x0) = match (script, name) {
        (Some(path), None) => (logio::read_script(path)?, TruthState::default()),
        (None, Some(name)) => {
            let sc = Scenario::builtin(name, duration).map_err(|e| Failure::Usage(e.to_string()))?;
            (sc.script, sc.x0)
        }
        _ => return Err(Failure::Usage("simulate needs --script or --scenario".into())),
    };
    let traj = simulate(&script, &params, dt, x0)?;
    let header = LogHeader::sim(logio::rate_hint(&traj.times()), fp);
    logio::write_truth_csv(&traj, &header, out)?;
    Ok(())
}

fn paper_scenario(dir: &Path, seed: u64, duration: f64) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| quadest::Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let sc = scenario::figure_eight(duration)?;
    let params = VehicleParams::default();
    let truth = simulate(&sc.script, &params, sc.dt, sc.x0)?;
    let noise = NoiseConfig::default().with_seed(seed);
    let log = synthesize(&truth, &params, &noise)?;
    let fcfg = FilterConfig::matched_to(&noise);
    let gcfg = GenericConfig::default();
    let drag = run_filter(&log, &fcfg)?;
    let generic = run_generic(&log, &gcfg)?;
    let fit = fit_k1(&log, &truth, params.m)?;

    let rate = logio::rate_hint(&truth.times());
    let fp = |v: &dyn fmt::Debug| logio::fingerprint(format!("{v:?}").as_bytes());
    logio::write_truth_csv(&truth, &LogHeader::sim(rate, fp(&params)), &dir.join("truth.csv"))?;
    logio::write_imu_csv(&log, &LogHeader::sim(rate, fp(&noise)), &dir.join("imu.csv"))?;
    logio::write_estimates_csv(
        &EstimateTable::from_trajectory(&drag),
        &LogHeader::sim(rate, fp(&fcfg)),
        &dir.join("drag.csv"),
    )?;
    logio::write_estimates_csv(
        &EstimateTable::from_trajectory(&generic),
        &LogHeader::sim(rate, fp(&gcfg)),
        &dir.join("generic.csv"),
    )?;
    let (ma, pa) = metrics(&truth, &drag, "drag")?;
    let (mb, pb) = metrics(&truth, &generic, "generic")?;
    logio::write_text(&dir.join("drag_errors.csv"), &logio::eval_to_csv(&pa, &LogHeader::sim(rate, fp(&fcfg))))?;
    logio::write_text(&dir.join("generic_errors.csv"), &logio::eval_to_csv(&pb, &LogHeader::sim(rate, fp(&gcfg))))?;
    let report = comparison_report(&ma, &mb);
    logio::write_text(&dir.join("comparison.txt"), &report)?;
    logio::write_text(&dir.join("fit.txt"), &fit_text(&fit))?;
    print!("{}{}", ma.to_text(), mb.to_text());
    println!("k1 fit {:.4} N s/m", fit.k1);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            script,
            scenario,
            duration,
            dt,
            cfg,
            out,
        } => simulate_cmd(script.as_deref(), scenario.as_deref(), duration, dt, &cfg, &out),
        Command::Synthesize {
            truth,
            cfg,
            vehicle,
            seed,
            out,
        } => {
            let (_, traj) = logio::read_truth_csv(&truth)?;
            let (mut noise, _) = load::<NoiseConfig>(&cfg, &[])?;
            if let Some(s) = seed {
                noise.seed = s;
            }
            let params = vehicle_from(vehicle.as_deref())?;
            let log = synthesize(&traj, &params, &noise)?;
            let fp = logio::fingerprint(format!("{noise:?}{params:?}").as_bytes());
            logio::write_imu_csv(&log, &LogHeader::sim(logio::rate_hint(&log.times()), fp), &out)?;
            Ok(())
        }
        Command::Estimate { imu, which, cfg, out } => {
            let (input, log) = logio::read_imu_csv(&imu)?;
            let (est, fp) = estimate(&log, which, &cfg)?;
            let header = LogHeader {
                fingerprint: fp,
                tags: Vec::new(),
                ..input
            };
            logio::write_estimates_csv(&EstimateTable::from_trajectory(&est), &header, &out)?;
            Ok(())
        }
        Command::Fit { imu, truth, cfg, out } => {
            let (_, log) = logio::read_imu_csv(&imu)?;
            let (_, traj) = logio::read_truth_csv(&truth)?;
            let (params, _) = load::<VehicleParams>(&cfg, &[])?;
            let fit = fit_k1(&log, &traj, params.m)?;
            emit(out.as_deref(), &fit_text(&fit))
        }
        Command::Evaluate { truth, est, out, csv } => {
            let (_, traj) = logio::read_truth_csv(&truth)?;
            let (header, table) = logio::read_estimates_csv(&est)?;
            let (m, ps) = metrics(&traj, &table.to_trajectory(), table.kind.name())?;
            if let Some(path) = csv {
                logio::write_text(&path, &logio::eval_to_csv(&ps, &header))?;
            }
            let mut text = m.to_text();
            for (k, v) in m.to_kv() {
                text.push_str(&format!("{k}={v:.16e}\n"));
            }
            emit(out.as_deref(), &text)
        }
        Command::Compare { truth, a, b, out } => {
            let (_, traj) = logio::read_truth_csv(&truth)?;
            let (_, ta) = logio::read_estimates_csv(&a)?;
            let (_, tb) = logio::read_estimates_csv(&b)?;
            let (la, lb) = if ta.kind == tb.kind {
                (format!("{}_a", ta.kind.name()), format!("{}_b", tb.kind.name()))
            } else {
                (ta.kind.name().to_string(), tb.kind.name().to_string())
            };
            let (ma, _) = metrics(&traj, &ta.to_trajectory(), &la)?;
            let (mb, _) = metrics(&traj, &tb.to_trajectory(), &lb)?;
            emit(out.as_deref(), &comparison_report(&ma, &mb))
        }
        Command::PaperScenario { out, seed, duration } => paper_scenario(&out, seed, duration),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

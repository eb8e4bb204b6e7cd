//! Command-line front end: `run`, `compare`, `suite`, `steer` and `serve`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use mmray_core::config::{ConfigError, ScenarioConfig, INCH};
use mmray_core::coverage::CoverageError;
use mmray_core::materials::{MaterialError, MaterialTable};
use mmray_core::report::{
    cdf_csv, cdf_table_csv, compare_maps, coverage_csv, coverage_from_csv, run_scenario, scenario_steering, summary_json,
    CsvError, RunError, RunOptions, ScenarioRun, PRESETS,
};
use mmray_core::scene::SceneError;
use mmray_core::steering::{analyze, SteeringQuery, SteeringReport};

/// Environment variable naming a material table that replaces the built-in one.
pub const MATERIALS_ENV: &str = "MMRAY_MATERIALS";

#[derive(Debug, Parser)]
#[command(name = "mmray", version, about = "28 GHz indoor coverage simulator for passive reflectors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario file and write its artifacts.
    Run {
        config: PathBuf,
        /// Output directory (also accepted as `--out`).
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        sim: SimFlags,
    },
    /// Compare two run directories (`a − b`).
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Also write the comparison as JSON into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        outage_threshold_dbm: Option<f64>,
    },
    /// Run every shipped scenario and write a cross-scenario CDF table.
    Suite {
        out_dir: Option<PathBuf>,
        /// Read scenario files from this directory instead of the built-in presets.
        #[arg(long)]
        scenarios: Option<PathBuf>,
        #[command(flatten)]
        sim: SimFlags,
    },
    /// Steering and sizing analytics for a flat reflector.
    Steer(SteerArgs),
    /// Start the planner HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory of static planner UI assets to serve at `/`.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SimFlags {
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every core. Never changes results.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=8))]
    pub max_order: Option<u8>,
    #[arg(long, allow_negative_numbers = true)]
    pub outage_threshold_dbm: Option<f64>,
    /// Also write every traced path to `paths.csv`.
    #[arg(long)]
    pub dump_paths: bool,
}

impl SimFlags {
    fn options(&self) -> RunOptions {
        RunOptions {
            workers: self.workers,
            max_order: self.max_order.map(usize::from),
            outage_threshold_dbm: self.outage_threshold_dbm,
            dump_paths: self.dump_paths,
        }
    }

    fn out_dir(&self, positional: Option<PathBuf>) -> Result<PathBuf, CliError> {
        positional
            .or_else(|| self.out.clone())
            .ok_or_else(|| CliError::Usage("an output directory is required (positional or --out)".into()))
    }
}

#[derive(Debug, Clone, Args)]
pub struct SteerArgs {
    /// Take reflector, antenna and distance from a scenario file.
    pub scenario: Option<PathBuf>,
    /// Reflector area in m².
    #[arg(long, conflicts_with_all = ["side_in", "scenario"])]
    pub area_m2: Option<f64>,
    /// Side of a square reflector in inches.
    #[arg(long, conflicts_with = "scenario")]
    pub side_in: Option<f64>,
    /// Angle between the reflector normal and the incoming beam.
    #[arg(long, default_value_t = 45.0)]
    pub alpha_deg: f64,
    #[arg(long, default_value_t = 26.0)]
    pub hpbw_e_deg: f64,
    #[arg(long, default_value_t = 24.0)]
    pub hpbw_h_deg: f64,
    #[arg(long, default_value_t = 5.0)]
    pub distance_m: f64,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Config { path: String, source: ConfigError },
    #[error("{0}")]
    Materials(#[from] MaterialError),
    #[error("{scenario}: {source}")]
    Run { scenario: String, source: RunError },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: CsvError },
    #[error("{0}")]
    Grid(CoverageError),
    #[error("service: {0}")]
    Service(std::io::Error),
}

impl CliError {
    /// Process exit status: 2 for invalid input, 3 for a geometry conflict,
    /// 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } | CliError::Materials(_) => 2,
            CliError::Run { source: RunError::Scene(SceneError::Invalid(_)), .. } => 2,
            CliError::Run { source: RunError::Scene(SceneError::Conflict(_)), .. } => 3,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

/// Material table from `MMRAY_MATERIALS`, or the built-in ITU table.
pub fn load_materials() -> Result<MaterialTable, CliError> {
    match std::env::var_os(MATERIALS_ENV) {
        Some(path) if !path.is_empty() => Ok(MaterialTable::from_path(Path::new(&path))?),
        _ => Ok(MaterialTable::itu_defaults()),
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    ScenarioConfig::from_json(&text).map_err(|source| CliError::Config { path: path.display().to_string(), source })
}

/// Write `coverage.csv`, `cdf.csv`, `summary.json` and, when present, `paths.csv`.
pub fn write_artifacts(run: &ScenarioRun, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files = vec![
        ("coverage.csv", coverage_csv(&run.map)),
        ("cdf.csv", cdf_csv(&run.cdf)),
        ("summary.json", summary_json(&run.summary)),
    ];
    if let Some(paths) = &run.paths_csv {
        files.push(("paths.csv", paths.clone()));
    }
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).map_err(io_err(&path))?;
    }
    Ok(())
}

/// Parse arguments and execute; returns the process exit status.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Run { config, out_dir, sim } => {
            let dir = sim.out_dir(out_dir)?;
            let cfg = load_config(&config)?;
            let materials = load_materials()?;
            let run = run_scenario(&cfg, &materials, &sim.options())
                .map_err(|source| CliError::Run { scenario: cfg.name.clone(), source })?;
            write_artifacts(&run, &dir)?;
            print_run(out, &run);
            Ok(())
        }
        Command::Compare { a, b, out: json_dir, outage_threshold_dbm } => compare(&a, &b, json_dir.as_deref(), outage_threshold_dbm, out),
        Command::Suite { out_dir, scenarios, sim } => {
            let dir = sim.out_dir(out_dir)?;
            suite(&dir, scenarios.as_deref(), &sim.options(), out)
        }
        Command::Steer(args) => steer(&args, out),
        Command::Serve { port, host, ui_dir, workers } => {
            let materials = load_materials()?;
            let runtime = tokio::runtime::Runtime::new().map_err(CliError::Service)?;
            runtime
                .block_on(crate::service::serve(&host, port, materials, workers, ui_dir))
                .map_err(CliError::Service)
        }
    }
}

fn print_run(out: &mut dyn Write, run: &ScenarioRun) {
    let s = &run.summary;
    let std = s.std_db.map_or("n/a".to_string(), |v| format!("{v:.2} dB"));
    let _ = writeln!(
        out,
        "{}: median {:.2} dBm, std {std}, top-left outage {:.3} @ {} dBm, paths {}",
        s.scenario,
        s.median_dbm,
        s.outage["top_left"],
        s.outage_threshold_dbm,
        s.path_counts.total()
    );
}

/// Configs for the suite: built-in presets, or same-named files in `dir`.
fn suite_configs(dir: Option<&Path>) -> Result<Vec<ScenarioConfig>, CliError> {
    PRESETS
        .iter()
        .map(|(name, text)| match dir {
            Some(d) => load_config(&d.join(format!("{name}.json"))),
            None => ScenarioConfig::from_json(text).map_err(|source| CliError::Config { path: format!("<preset {name}>"), source }),
        })
        .collect()
}

pub fn suite(dir: &Path, scenarios: Option<&Path>, options: &RunOptions, out: &mut dyn Write) -> Result<(), CliError> {
    let configs = suite_configs(scenarios)?;
    let materials = load_materials()?;
    let mut curves = Vec::new();
    let mut medians = Vec::new();
    for cfg in &configs {
        let run = run_scenario(cfg, &materials, options).map_err(|source| CliError::Run { scenario: cfg.name.clone(), source })?;
        write_artifacts(&run, &dir.join(&cfg.name))?;
        print_run(out, &run);
        medians.push((cfg.name.clone(), run.summary.median_dbm));
        curves.push((cfg.name.clone(), run.cdf));
    }
    let table = dir.join("cdf_table.csv");
    fs::write(&table, cdf_table_csv(&curves)).map_err(io_err(&table))?;
    if let Some(&(_, base)) = medians.iter().find(|(n, _)| n == "baseline") {
        let _ = writeln!(out, "\nmedian gain over baseline:");
        for (name, m) in medians.iter().filter(|(n, _)| n != "baseline") {
            let _ = writeln!(out, "  {name:<16} {:+7.2} dB", m - base);
        }
    }
    Ok(())
}

#[derive(serde::Deserialize)]
struct SummaryHead {
    scenario: Option<String>,
    floor_dbm: Option<f64>,
    outage_threshold_dbm: Option<f64>,
}

/// Fallback floor when a run directory has no readable summary:
/// 0 dBm with 17 dBi horns at both ends and a 185 dB budget.
const DEFAULT_FLOOR_DBM: f64 = -151.0;

fn load_run_dir(dir: &Path) -> Result<(mmray_core::coverage::CoverageMap, Option<f64>), CliError> {
    let head: Option<SummaryHead> =
        fs::read_to_string(dir.join("summary.json")).ok().and_then(|t| serde_json::from_str(&t).ok());
    let name = head
        .as_ref()
        .and_then(|h| h.scenario.clone())
        .unwrap_or_else(|| dir.file_name().map_or("run".into(), |n| n.to_string_lossy().into_owned()));
    let floor = head.as_ref().and_then(|h| h.floor_dbm).unwrap_or(DEFAULT_FLOOR_DBM);
    let path = dir.join("coverage.csv");
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let map = coverage_from_csv(&name, &text, floor).map_err(|source| CliError::Csv { path: path.display().to_string(), source })?;
    Ok((map, head.and_then(|h| h.outage_threshold_dbm)))
}

fn compare(a: &Path, b: &Path, json_dir: Option<&Path>, threshold: Option<f64>, out: &mut dyn Write) -> Result<(), CliError> {
    let (map_a, t_a) = load_run_dir(a)?;
    let (map_b, _) = load_run_dir(b)?;
    let threshold = threshold.or(t_a).unwrap_or(-80.0);
    let c = compare_maps(&map_a, &map_b, threshold).map_err(CliError::Grid)?;
    let _ = writeln!(out, "{} vs {}", c.a, c.b);
    let _ = writeln!(out, "  median gain       {:+.2} dB", c.median_gain_db);
    match c.std_delta_db {
        Some(d) => writeln!(out, "  std delta         {d:+.2} dB"),
        None => writeln!(out, "  std delta         n/a"),
    }
    .ok();
    for (region, d) in &c.outage_delta {
        let _ = writeln!(out, "  outage delta {region:<12} {d:+.3} @ {threshold} dBm");
    }
    if let Some(dir) = json_dir {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let path = dir.join("compare.json");
        let text = serde_json::to_string_pretty(&c).expect("comparison serializes") + "\n";
        fs::write(&path, text).map_err(io_err(&path))?;
    }
    Ok(())
}

fn steer(args: &SteerArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let report: SteeringReport = match &args.scenario {
        Some(path) => {
            let cfg = load_config(path)?;
            scenario_steering(&cfg).ok_or_else(|| CliError::Usage(format!("{}: scenario has no reflector", path.display())))?
        }
        None => {
            let area = match (args.area_m2, args.side_in) {
                (Some(a), _) => a,
                (None, Some(s)) => (s * INCH).powi(2),
                (None, None) => (24.0 * INCH).powi(2),
            };
            if !(area > 0.0) || !(args.distance_m > 0.0) || !(0.0..90.0).contains(&args.alpha_deg) {
                return Err(CliError::Usage("need area > 0, distance > 0 and 0 <= alpha < 90".into()));
            }
            analyze(SteeringQuery {
                reflector_area_m2: area,
                normal_offset_deg: args.alpha_deg,
                hpbw_e_deg: args.hpbw_e_deg,
                hpbw_h_deg: args.hpbw_h_deg,
                distance_m: args.distance_m,
            })
        }
    };
    if args.json {
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        return Ok(());
    }
    let q = &report.query;
    let rows = [
        ("reflector area", format!("{:.4} m²", q.reflector_area_m2)),
        ("normal offset α", format!("{:.2}°", q.normal_offset_deg)),
        ("distance", format!("{:.3} m", q.distance_m)),
        ("HPBW E / H", format!("{:.1}° / {:.1}°", q.hpbw_e_deg, q.hpbw_h_deg)),
        ("effective area", format!("{:.4} m²", report.effective_area_m2)),
        ("deflection 2α", format!("{:.2}°", report.deflection_deg)),
        ("footprint E × H", format!("{:.3} m × {:.3} m", report.footprint_e_m, report.footprint_h_m)),
        ("recommended side", format!("{:.3} m", report.recommended_side_m)),
        ("center-weighted side", format!("{:.3} m", report.recommended_side_center_weighted_m)),
    ];
    for (k, v) in rows {
        let _ = writeln!(out, "{k:<22} {v}");
    }
    Ok(())
}

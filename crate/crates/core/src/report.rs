//! Scenario runs and their artifacts: coverage and CDF tables, summaries,
//! per-path dumps, cross-scenario comparisons and the shipped presets.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Mutex;

use serde::Serialize;
use thiserror::Error;

use crate::config::ScenarioConfig;
use crate::coverage::{
    cdf, compute_coverage_with, outage_fraction, region_mean_dbm, uniformity, CdfCurve, CoverageError, CoverageMap,
    PathCounts, Quadrant, ReceiverAntenna, ReceiverGrid, Region,
};
use crate::geometry::Vec3;
use crate::materials::MaterialTable;
use crate::raytracer::{PathComponent, TraceSettings};
use crate::scene::{build_scene, reflector_spec, SceneError};
use crate::steering::{analyze, SteeringQuery, SteeringReport};

/// Version of the JSON artifacts and service payloads.
pub const SCHEMA_VERSION: u32 = 1;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shipped scenario presets, in suite order.
pub const PRESETS: [(&str, &str); 9] = [
    ("baseline", include_str!("../../../scenarios/baseline.json")),
    ("flat12_az45", include_str!("../../../scenarios/flat12_az45.json")),
    ("flat24_az45", include_str!("../../../scenarios/flat24_az45.json")),
    ("flat33_az45", include_str!("../../../scenarios/flat33_az45.json")),
    ("cylinder", include_str!("../../../scenarios/cylinder.json")),
    ("sphere", include_str!("../../../scenarios/sphere.json")),
    ("curved5_az45", include_str!("../../../scenarios/curved5_az45.json")),
    ("curved10_az45", include_str!("../../../scenarios/curved10_az45.json")),
    ("flat24_az30", include_str!("../../../scenarios/flat24_az30.json")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
}

/// Overrides applied on top of a scenario file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunOptions {
    /// Worker threads for the grid sweep; 0 uses every core.
    pub workers: usize,
    pub max_order: Option<usize>,
    pub outage_threshold_dbm: Option<f64>,
    pub dump_paths: bool,
}

impl RunOptions {
    pub fn apply(&self, cfg: &ScenarioConfig) -> ScenarioConfig {
        let mut cfg = cfg.clone();
        if let Some(k) = self.max_order {
            cfg.sim.max_order = k;
        }
        if let Some(t) = self.outage_threshold_dbm {
            cfg.sim.outage_threshold_dbm = t;
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub config: ScenarioConfig,
    pub map: CoverageMap,
    pub cdf: CdfCurve,
    pub summary: Summary,
    /// `paths.csv` contents when requested.
    pub paths_csv: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSummary {
    pub cols: usize,
    pub rows: usize,
    pub cell_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema: u32,
    pub version: &'static str,
    pub scenario: String,
    pub median_dbm: f64,
    /// Population standard deviation over cells with at least one path.
    pub std_db: Option<f64>,
    pub spread_db: f64,
    pub floor_dbm: f64,
    pub outage_threshold_dbm: f64,
    /// Outage fraction per quadrant plus `all` for the whole grid.
    pub outage: BTreeMap<&'static str, f64>,
    pub right_half_mean_dbm: f64,
    pub top_left_mean_dbm: f64,
    pub no_path_cells: usize,
    pub path_counts: PathCounts,
    pub grid: GridSummary,
    pub steering: Option<SteeringReport>,
}

/// Steering analytics for the configured reflector as seen from the Tx.
pub fn scenario_steering(cfg: &ScenarioConfig) -> Option<SteeringReport> {
    let spec = reflector_spec(cfg)?;
    let to_tx = cfg.tx_position() - spec.placement.position;
    let alpha = spec.placement.normal().angle_to(to_tx);
    Some(analyze(SteeringQuery {
        reflector_area_m2: spec.shape.aperture_area(),
        normal_offset_deg: alpha.to_degrees(),
        hpbw_e_deg: cfg.rf.tx_antenna.hpbw_e_deg,
        hpbw_h_deg: cfg.rf.tx_antenna.hpbw_h_deg,
        distance_m: to_tx.norm(),
    }))
}

pub fn summarize(cfg: &ScenarioConfig, map: &CoverageMap, curve: &CdfCurve) -> Summary {
    let grid = &map.grid;
    let threshold = cfg.sim.outage_threshold_dbm;
    let mut outage: BTreeMap<&'static str, f64> =
        Quadrant::ALL.iter().map(|q| (q.name(), outage_fraction(map, threshold, &q.region(grid)))).collect();
    outage.insert("all", outage_fraction(map, threshold, &Region::whole(grid)));
    Summary {
        schema: SCHEMA_VERSION,
        version: VERSION,
        scenario: map.scenario_id.clone(),
        median_dbm: curve.median(),
        std_db: uniformity(map).ok(),
        spread_db: curve.spread_db(),
        floor_dbm: map.floor_dbm,
        outage_threshold_dbm: threshold,
        outage,
        right_half_mean_dbm: region_mean_dbm(map, &Region::right_half(grid)),
        top_left_mean_dbm: region_mean_dbm(map, &Quadrant::TopLeft.region(grid)),
        no_path_cells: map.power_dbm.iter().filter(|p| p.is_none()).count(),
        path_counts: map.counts,
        grid: GridSummary { cols: grid.cols(), rows: grid.rows(), cell_m: grid.cell },
        steering: scenario_steering(cfg),
    }
}

/// Build, sweep and summarize one scenario.
pub fn run_scenario(cfg: &ScenarioConfig, materials: &MaterialTable, options: &RunOptions) -> Result<ScenarioRun, RunError> {
    let cfg = options.apply(cfg);
    let scene = build_scene(&cfg, materials)?;
    let grid = ReceiverGrid::from_config(&cfg)?;
    let antenna = ReceiverAntenna::from_config(&cfg);
    let settings = TraceSettings { max_order: cfg.sim.max_order, max_path_loss_db: cfg.sim.max_path_loss_db, diffuse: true };
    let dump: Mutex<Vec<(usize, String)>> = Mutex::new(Vec::new());
    let map = compute_coverage_with(&cfg.name, &scene, &grid, &antenna, settings, options.workers, |cell, paths| {
        if options.dump_paths {
            let rows = path_rows(cell, grid.cell_center(cell), paths);
            dump.lock().expect("path dump lock").push((cell, rows));
        }
    })?;
    let paths_csv = options.dump_paths.then(|| {
        let mut rows = dump.into_inner().expect("path dump lock");
        rows.sort_by_key(|(cell, _)| *cell);
        let mut out = String::from("cell,x_m,y_m,kind,order,delay_ns,power_dbm,facets\n");
        rows.iter().for_each(|(_, r)| out.push_str(r));
        out
    });
    let curve = cdf(&map);
    let summary = summarize(&cfg, &map, &curve);
    Ok(ScenarioRun { config: cfg, map, cdf: curve, summary, paths_csv })
}

fn path_rows(cell: usize, at: Vec3, paths: &[PathComponent]) -> String {
    let mut out = String::new();
    for p in paths {
        let ids: Vec<String> = p.facet_ids().iter().map(|id| id.to_string()).collect();
        let _ = writeln!(
            out,
            "{cell},{:.2},{:.2},{},{},{:.4},{:.2},{}",
            at.x,
            at.y,
            p.kind.name(),
            p.kind.order(),
            p.delay_s * 1e9,
            p.power_dbm,
            ids.join(";")
        );
    }
    out
}

/// Power as written to CSV: two decimals, then read back.
pub fn round_dbm(v: f64) -> f64 {
    format!("{v:.2}").parse().expect("formatted float parses")
}

pub fn coverage_csv(map: &CoverageMap) -> String {
    let mut out = String::from("x_m,y_m,power_dbm\n");
    for (i, p) in map.power_dbm.iter().enumerate() {
        let c = map.grid.cell_center(i);
        match p {
            Some(v) => writeln!(out, "{:.2},{:.2},{v:.2}", c.x, c.y),
            None => writeln!(out, "{:.2},{:.2},NA", c.x, c.y),
        }
        .expect("write to string");
    }
    out
}

pub fn cdf_csv(curve: &CdfCurve) -> String {
    let mut out = String::from("power_dbm,prob\n");
    for (p, q) in curve.power_dbm.iter().zip(&curve.prob) {
        writeln!(out, "{p:.2},{q:.6}").expect("write to string");
    }
    out
}

/// One column per scenario: the k-th smallest cell power at probability k/N.
pub fn cdf_table_csv(curves: &[(String, CdfCurve)]) -> String {
    let mut out = String::from("prob");
    for (name, _) in curves {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    let n = curves.iter().map(|(_, c)| c.power_dbm.len()).max().unwrap_or(0);
    for k in 1..=n {
        let p = k as f64 / n as f64;
        let _ = write!(out, "{p:.6}");
        for (_, c) in curves {
            let _ = write!(out, ",{:.2}", c.quantile(p));
        }
        out.push('\n');
    }
    out
}

pub fn summary_json(summary: &Summary) -> String {
    let mut s = serde_json::to_string_pretty(summary).expect("summary serializes");
    s.push('\n');
    s
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CsvError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("coverage table is empty")]
    Empty,
    #[error("coverage table is not a regular grid: {0}")]
    Irregular(String),
}

/// Rebuild a coverage map from `coverage.csv`. Heights are not stored, so
/// the grid sits at `z = 0`; `NA` cells become markers at `floor_dbm`.
pub fn coverage_from_csv(scenario_id: &str, text: &str, floor_dbm: f64) -> Result<CoverageMap, CsvError> {
    let mut cells = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| CsvError::Line { line: i + 1, message };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(bad(format!("expected 3 fields, got {}", fields.len())));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}")));
        let power = match fields[2].trim() {
            "NA" => None,
            s => Some(num(s)?),
        };
        cells.push((num(fields[0])?, num(fields[1])?, power));
    }
    if cells.is_empty() {
        return Err(CsvError::Empty);
    }
    let distinct = |key: fn(&(f64, f64, Option<f64>)) -> f64| {
        let mut v: Vec<f64> = cells.iter().map(key).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let (xs, ys) = (distinct(|c| c.0), distinct(|c| c.1));
    let cell = match (xs.len(), ys.len()) {
        (_, n) if n > 1 => ys[1] - ys[0],
        (n, _) if n > 1 => xs[1] - xs[0],
        _ => return Err(CsvError::Irregular("a single cell does not define a pitch".into())),
    };
    let origin = Vec3::new(xs[0] - 0.5 * cell, ys[0] - 0.5 * cell, 0.0);
    let grid = ReceiverGrid::new(origin, xs.len() as f64 * cell, ys.len() as f64 * cell, cell)
        .map_err(|e| CsvError::Irregular(e.to_string()))?;
    if grid.len() != cells.len() {
        return Err(CsvError::Irregular(format!("{} rows for a {}x{} grid", cells.len(), grid.cols(), grid.rows())));
    }
    for (i, c) in cells.iter().enumerate() {
        let center = grid.cell_center(i);
        if (center.x - c.0).abs() > 0.006 || (center.y - c.1).abs() > 0.006 {
            return Err(CsvError::Irregular(format!("row {} is out of grid order", i + 2)));
        }
    }
    Ok(CoverageMap {
        scenario_id: scenario_id.to_string(),
        grid,
        power_dbm: cells.into_iter().map(|c| c.2).collect(),
        floor_dbm,
        counts: PathCounts::default(),
    })
}

/// Differences `a − b` between two maps on the same grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub median_gain_db: f64,
    pub std_delta_db: Option<f64>,
    pub outage_threshold_dbm: f64,
    pub outage_delta: BTreeMap<&'static str, f64>,
}

pub fn compare_maps(a: &CoverageMap, b: &CoverageMap, threshold_dbm: f64) -> Result<Comparison, CoverageError> {
    let gain = crate::coverage::median_gain(a, b)?;
    let grid = &a.grid;
    let mut outage_delta: BTreeMap<&'static str, f64> = Quadrant::ALL
        .iter()
        .map(|q| {
            let r = q.region(grid);
            (q.name(), outage_fraction(a, threshold_dbm, &r) - outage_fraction(b, threshold_dbm, &r))
        })
        .collect();
    let whole = Region::whole(grid);
    outage_delta.insert("all", outage_fraction(a, threshold_dbm, &whole) - outage_fraction(b, threshold_dbm, &whole));
    let std_delta_db = match (uniformity(a), uniformity(b)) {
        (Ok(x), Ok(y)) => Some(x - y),
        _ => None,
    };
    Ok(Comparison {
        a: a.scenario_id.clone(),
        b: b.scenario_id.clone(),
        median_gain_db: gain,
        std_delta_db,
        outage_threshold_dbm: threshold_dbm,
        outage_delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_map(values: Vec<Option<f64>>) -> CoverageMap {
        let grid = ReceiverGrid::new(Vec3::new(0.0, 0.5, 1.5), 0.6, 0.9, 0.3).unwrap();
        CoverageMap { scenario_id: "t".into(), grid, power_dbm: values, floor_dbm: -151.0, counts: PathCounts::default() }
    }

    #[test]
    fn presets_parse_and_carry_their_names() {
        for (name, text) in PRESETS {
            let cfg = ScenarioConfig::from_json(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(cfg.name, name);
        }
        assert!(preset("flat24_az45").is_some());
        assert!(preset("nope").is_none());
    }

    #[test]
    fn coverage_csv_uses_two_decimals_and_na() {
        let map = small_map(vec![Some(-70.004), None, Some(-52.226), Some(-80.0), Some(-81.5), Some(-60.0)]);
        let csv = coverage_csv(&map);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x_m,y_m,power_dbm");
        assert_eq!(lines[1], "0.15,0.65,-70.00");
        assert_eq!(lines[2], "0.45,0.65,NA");
        assert_eq!(lines[3], "0.15,0.95,-52.23");
        assert_eq!(lines.len(), 7);
    }

    #[test]
    fn coverage_csv_round_trips() {
        let map = small_map(vec![Some(-70.0), None, Some(-52.23), Some(-80.0), Some(-81.5), Some(-60.0)]);
        let back = coverage_from_csv("t", &coverage_csv(&map), -151.0).unwrap();
        assert_eq!(back.grid.cols(), 2);
        assert_eq!(back.grid.rows(), 3);
        assert_eq!(back.power_dbm, map.power_dbm);
    }

    #[test]
    fn coverage_csv_rejects_garbage() {
        assert!(matches!(coverage_from_csv("t", "x_m,y_m,power_dbm\n0.1,0.2\n", -151.0), Err(CsvError::Line { line: 2, .. })));
        assert_eq!(coverage_from_csv("t", "x_m,y_m,power_dbm\n", -151.0), Err(CsvError::Empty));
    }

    #[test]
    fn comparing_a_map_with_itself_is_all_zero() {
        let map = small_map(vec![Some(-70.0), None, Some(-52.23), Some(-80.0), Some(-81.5), Some(-60.0)]);
        let c = compare_maps(&map, &map, -80.0).unwrap();
        assert_eq!(c.median_gain_db, 0.0);
        assert_eq!(c.std_delta_db, Some(0.0));
        assert!(c.outage_delta.values().all(|&d| d == 0.0));
    }

    #[test]
    fn cdf_table_has_one_column_per_scenario() {
        let a = cdf(&small_map(vec![Some(-70.0); 6]));
        let b = cdf(&small_map(vec![Some(-60.0); 6]));
        let t = cdf_table_csv(&[("a".into(), a), ("b".into(), b)]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "prob,a,b");
        assert_eq!(lines[6], "1.000000,-70.00,-60.00");
    }

    #[test]
    fn rounding_matches_csv_text() {
        for v in [-52.225, -52.235, -0.005, -151.0, -66.985] {
            assert_eq!(round_dbm(v).to_string().parse::<f64>().unwrap(), format!("{v:.2}").parse::<f64>().unwrap());
        }
    }

    #[test]
    fn steering_block_follows_the_reflector() {
        let cfg = ScenarioConfig::from_json(preset("flat24_az45").unwrap()).unwrap();
        let s = scenario_steering(&cfg).unwrap();
        assert!((s.query.normal_offset_deg - 45.0).abs() < 1e-9);
        assert!((s.query.distance_m - 5.0).abs() < 1e-9);
        assert!((s.effective_area_m2 - 0.262769).abs() < 1e-6);
        let base = ScenarioConfig::from_json(preset("baseline").unwrap()).unwrap();
        assert!(scenario_steering(&base).is_none());
    }
}

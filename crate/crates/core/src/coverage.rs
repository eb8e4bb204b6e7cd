//! Receiver-grid sweeps and coverage statistics.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::antenna::AntennaPattern;
use crate::config::{RxAim, ScenarioConfig};
use crate::geometry::Vec3;
use crate::raytracer::{dbm_to_mw, mw_to_dbm, PathComponent, PathKind, Receiver, TraceSettings, Tracer};
use crate::scene::{aim_point, Scene};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverageError {
    #[error("grid {0}: extent {1} m is not a positive multiple of the cell size {2} m")]
    Extent(&'static str, f64, f64),
    #[error("coverage maps are on different grids")]
    GridMismatch,
    #[error("every cell is a no-path marker")]
    AllMarkers,
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Rectangular receiver grid in the horizontal plane. Row 0 is nearest the
/// corner (smallest `y`); column 0 is nearest the inner wall (smallest `x`).
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverGrid {
    /// Corner of cell (0, 0) with the smallest `x` and `y`.
    pub origin: Vec3,
    pub x_extent: f64,
    pub y_extent: f64,
    pub cell: f64,
    cols: usize,
    rows: usize,
}

impl ReceiverGrid {
    pub fn new(origin: Vec3, x_extent: f64, y_extent: f64, cell: f64) -> Result<ReceiverGrid, CoverageError> {
        let count = |name, extent: f64| {
            let ratio = extent / cell;
            let n = ratio.round();
            if !(cell > 0.0) || n < 1.0 || (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
                Err(CoverageError::Extent(name, extent, cell))
            } else {
                Ok(n as usize)
            }
        };
        Ok(ReceiverGrid { origin, x_extent, y_extent, cell, cols: count("x", x_extent)?, rows: count("y", y_extent)? })
    }

    pub fn from_config(cfg: &ScenarioConfig) -> Result<ReceiverGrid, CoverageError> {
        let g = &cfg.geometry.grid;
        ReceiverGrid::new(Vec3::new(0.0, g.offset, g.rx_height), g.x_extent, g.y_extent, g.cell)
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index / self.cols, index % self.cols)
    }

    pub fn cell_center(&self, index: usize) -> Vec3 {
        let (row, col) = self.row_col(index);
        self.origin + Vec3::new((col as f64 + 0.5) * self.cell, (row as f64 + 0.5) * self.cell, 0.0)
    }

    fn same_shape(&self, other: &ReceiverGrid) -> bool {
        self.rows == other.rows && self.cols == other.cols && (self.origin - other.origin).norm() < 1e-9 && (self.cell - other.cell).abs() < 1e-12
    }
}

/// How each receiver's antenna is built from its position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReceiverAntenna {
    Isotropic,
    /// Horn aimed at a fixed point.
    HornAt { spec: crate::antenna::HornSpec, target: Vec3 },
    /// Horn aimed along a fixed direction.
    HornAlong { spec: crate::antenna::HornSpec, direction: Vec3 },
}

impl ReceiverAntenna {
    pub fn from_config(cfg: &ScenarioConfig) -> ReceiverAntenna {
        match cfg.rf.rx_aim {
            RxAim::Anchor => ReceiverAntenna::HornAt { spec: cfg.rf.rx_antenna, target: aim_point(cfg) },
            RxAim::Direction(direction) => ReceiverAntenna::HornAlong { spec: cfg.rf.rx_antenna, direction },
        }
    }

    pub fn at(&self, position: Vec3) -> AntennaPattern {
        let horn = |spec: &crate::antenna::HornSpec, dir: Vec3| spec.aimed(dir).unwrap_or(AntennaPattern::Isotropic);
        match self {
            ReceiverAntenna::Isotropic => AntennaPattern::Isotropic,
            ReceiverAntenna::HornAt { spec, target } => horn(spec, *target - position),
            ReceiverAntenna::HornAlong { spec, direction } => horn(spec, *direction),
        }
    }

    pub fn boresight_gain_dbi(&self) -> f64 {
        match self {
            ReceiverAntenna::Isotropic => 0.0,
            ReceiverAntenna::HornAt { spec, .. } | ReceiverAntenna::HornAlong { spec, .. } => spec.gain_dbi,
        }
    }
}

/// Per-kind path tallies over a whole map.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PathCounts {
    pub los: usize,
    pub specular: usize,
    pub diffuse: usize,
}

impl PathCounts {
    pub fn total(&self) -> usize {
        self.los + self.specular + self.diffuse
    }

    fn add(&mut self, kind: PathKind) {
        match kind {
            PathKind::Los => self.los += 1,
            PathKind::Specular(_) => self.specular += 1,
            PathKind::Diffuse => self.diffuse += 1,
        }
    }
}

/// Received power per grid cell; `None` marks a cell with no surviving path.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageMap {
    pub scenario_id: String,
    pub grid: ReceiverGrid,
    pub power_dbm: Vec<Option<f64>>,
    pub floor_dbm: f64,
    pub counts: PathCounts,
}

impl CoverageMap {
    /// Cell power with markers replaced by the floor.
    pub fn value_or_floor(&self, index: usize) -> f64 {
        self.power_dbm[index].unwrap_or(self.floor_dbm)
    }

    pub fn values_or_floor(&self) -> Vec<f64> {
        (0..self.power_dbm.len()).map(|i| self.value_or_floor(i)).collect()
    }
}

/// Non-coherent power sum of a set of paths, in dBm; `None` for no paths.
pub fn noncoherent_sum_dbm(paths: &[PathComponent]) -> Option<f64> {
    if paths.is_empty() {
        return None;
    }
    Some(mw_to_dbm(paths.iter().map(|p| dbm_to_mw(p.power_dbm)).sum()))
}

/// Trace every grid cell and sum its paths non-coherently. `workers`
/// sets the thread count (0 = all cores); results do not depend on it.
pub fn compute_coverage(
    scenario_id: &str,
    scene: &Scene,
    grid: &ReceiverGrid,
    antenna: &ReceiverAntenna,
    settings: TraceSettings,
    workers: usize,
) -> Result<CoverageMap, CoverageError> {
    compute_coverage_with(scenario_id, scene, grid, antenna, settings, workers, |_, _| {})
}

/// [`compute_coverage`] that also hands every cell's paths to `inspect`.
pub fn compute_coverage_with(
    scenario_id: &str,
    scene: &Scene,
    grid: &ReceiverGrid,
    antenna: &ReceiverAntenna,
    settings: TraceSettings,
    workers: usize,
    inspect: impl Fn(usize, &[PathComponent]) + Sync,
) -> Result<CoverageMap, CoverageError> {
    let tracer = Tracer::new(scene, settings);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CoverageError::Pool(e.to_string()))?;
    let cells: Vec<(Option<f64>, PathCounts)> = pool.install(|| {
        (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let position = grid.cell_center(i);
                let rx = Receiver { position, antenna: antenna.at(position) };
                let paths = tracer.trace(&rx);
                inspect(i, &paths);
                let mut counts = PathCounts::default();
                paths.iter().for_each(|p| counts.add(p.kind));
                (noncoherent_sum_dbm(&paths), counts)
            })
            .collect()
    });
    let mut counts = PathCounts::default();
    for (_, c) in &cells {
        counts.los += c.los;
        counts.specular += c.specular;
        counts.diffuse += c.diffuse;
    }
    let tx = scene.tx();
    Ok(CoverageMap {
        scenario_id: scenario_id.to_string(),
        grid: grid.clone(),
        power_dbm: cells.into_iter().map(|(p, _)| p).collect(),
        floor_dbm: tx.power_dbm + tx.antenna.boresight_gain_dbi() + antenna.boresight_gain_dbi() - settings.max_path_loss_db,
        counts,
    })
}

/// Empirical CDF: ascending powers with probabilities `k/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfCurve {
    pub power_dbm: Vec<f64>,
    pub prob: Vec<f64>,
}

impl CdfCurve {
    /// Smallest value whose cumulative probability reaches `p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.power_dbm.len();
        let k = ((p * n as f64).ceil() as usize).clamp(1, n);
        self.power_dbm[k - 1]
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    /// Width of the central 90 % of the distribution, in dB.
    pub fn spread_db(&self) -> f64 {
        self.quantile(0.95) - self.quantile(0.05)
    }
}

pub fn cdf(map: &CoverageMap) -> CdfCurve {
    let mut v = map.values_or_floor();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let prob = (1..=v.len()).map(|k| k as f64 / n).collect();
    CdfCurve { power_dbm: v, prob }
}

pub fn median_dbm(map: &CoverageMap) -> f64 {
    cdf(map).median()
}

/// `median(a) − median(b)` in dB.
pub fn median_gain(a: &CoverageMap, b: &CoverageMap) -> Result<f64, CoverageError> {
    if !a.grid.same_shape(&b.grid) {
        return Err(CoverageError::GridMismatch);
    }
    Ok(median_dbm(a) - median_dbm(b))
}

/// Rectangular block of grid cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub rows: (usize, usize),
    pub cols: (usize, usize),
}

impl Region {
    pub fn whole(grid: &ReceiverGrid) -> Region {
        Region { rows: (0, grid.rows()), cols: (0, grid.cols()) }
    }

    pub fn cells(&self, grid: &ReceiverGrid) -> impl Iterator<Item = usize> {
        let cols = self.cols;
        let width = grid.cols();
        (self.rows.0..self.rows.1).flat_map(move |r| (cols.0..cols.1).map(move |c| r * width + c))
    }

    pub fn len(&self) -> usize {
        (self.rows.1 - self.rows.0) * (self.cols.1 - self.cols.0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Columns from the middle of the grid to the outer side.
    pub fn right_half(grid: &ReceiverGrid) -> Region {
        Region { rows: (0, grid.rows()), cols: (grid.cols().div_ceil(2), grid.cols()) }
    }
}

/// Corner blocks: the quarter of rows nearest (top) or farthest (bottom)
/// from the corner, crossed with the 40 % of columns on either side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrant {
    TopLeft,
    TopRight,
    BottomLeft,
    BottomRight,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [Quadrant::TopLeft, Quadrant::TopRight, Quadrant::BottomLeft, Quadrant::BottomRight];

    pub fn name(&self) -> &'static str {
        match self {
            Quadrant::TopLeft => "top_left",
            Quadrant::TopRight => "top_right",
            Quadrant::BottomLeft => "bottom_left",
            Quadrant::BottomRight => "bottom_right",
        }
    }

    pub fn region(&self, grid: &ReceiverGrid) -> Region {
        let nr = ((grid.rows() as f64 * 0.25).round() as usize).max(1);
        let nc = ((grid.cols() as f64 * 0.4).round() as usize).max(1);
        let rows = match self {
            Quadrant::TopLeft | Quadrant::TopRight => (0, nr),
            _ => (grid.rows() - nr, grid.rows()),
        };
        let cols = match self {
            Quadrant::TopLeft | Quadrant::BottomLeft => (0, nc),
            _ => (grid.cols() - nc, grid.cols()),
        };
        Region { rows, cols }
    }
}

/// Fraction of region cells below `threshold_dbm`; markers count as outage.
pub fn outage_fraction(map: &CoverageMap, threshold_dbm: f64, region: &Region) -> f64 {
    if region.is_empty() {
        return 0.0;
    }
    let out = region.cells(&map.grid).filter(|&i| map.power_dbm[i].is_none_or(|p| p < threshold_dbm)).count();
    out as f64 / region.len() as f64
}

/// Arithmetic mean of cell dBm values over a region, markers at the floor.
pub fn region_mean_dbm(map: &CoverageMap, region: &Region) -> f64 {
    region.cells(&map.grid).map(|i| map.value_or_floor(i)).sum::<f64>() / region.len() as f64
}

/// Population standard deviation of cell dBm values, markers excluded.
pub fn uniformity(map: &CoverageMap) -> Result<f64, CoverageError> {
    let v: Vec<f64> = map.power_dbm.iter().flatten().copied().collect();
    if v.is_empty() {
        return Err(CoverageError::AllMarkers);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    Ok((v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt())
}

//! Planner HTTP service: `POST /simulate` and `GET /scenarios`.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use serde_json::Value;
use tower_http::services::ServeDir;

use mmray_core::config::{ConfigError, ScenarioConfig};
use mmray_core::materials::MaterialTable;
use mmray_core::report::{round_dbm, run_scenario, RunError, RunOptions, ScenarioRun, Summary, PRESETS, SCHEMA_VERSION};
use mmray_core::scene::SceneError;
use mmray_core::steering::SteeringReport;

#[derive(Debug, Clone)]
pub struct AppState {
    pub materials: Arc<MaterialTable>,
    pub workers: usize,
}

pub fn router(state: AppState) -> Router {
    Router::new().route("/simulate", post(simulate)).route("/scenarios", get(scenarios)).with_state(state)
}

/// Bind and serve until the process is stopped. With `ui_dir`, static
/// files from it are served for every other path.
pub async fn serve(
    host: &str,
    port: u16,
    materials: MaterialTable,
    workers: usize,
    ui_dir: Option<PathBuf>,
) -> std::io::Result<()> {
    let mut app = router(AppState { materials: Arc::new(materials), workers });
    if let Some(dir) = ui_dir {
        app = app.fallback_service(ServeDir::new(dir));
    }
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, format!("{host}:{port}: {e}")))?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    println!("mmray planner service listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app).await
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub error: String,
    pub field: Option<String>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn invalid(e: &ConfigError) -> ApiError {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            body: ErrorBody { error: e.to_string(), field: e.field().map(str::to_string) },
        }
    }
}

impl From<RunError> for ApiError {
    fn from(e: RunError) -> Self {
        match &e {
            RunError::Scene(SceneError::Invalid(c)) => ApiError::invalid(c),
            _ => ApiError { status: StatusCode::UNPROCESSABLE_ENTITY, body: ErrorBody { error: e.to_string(), field: None } },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

#[derive(Debug, Serialize)]
pub struct GridBody {
    pub cols: usize,
    pub rows: usize,
    pub cell_m: f64,
    /// Cell-center coordinates; values are ordered row by row.
    pub x_m: Vec<f64>,
    pub y_m: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct CdfBody {
    pub power_dbm: Vec<f64>,
    pub prob: Vec<f64>,
}

/// One simulated map, with powers rounded exactly as in `coverage.csv`.
#[derive(Debug, Serialize)]
pub struct MapBody {
    pub scenario: String,
    pub grid: GridBody,
    pub power_dbm: Vec<Option<f64>>,
    pub cdf: CdfBody,
    pub summary: Summary,
}

#[derive(Debug, Serialize)]
pub struct SimulateResponse {
    pub schema: u32,
    #[serde(flatten)]
    pub map: MapBody,
    pub steering: Option<SteeringReport>,
    pub baseline: Option<MapBody>,
    /// Median of this map minus the median of the paired baseline.
    pub gain_db: Option<f64>,
    pub timing_ms: f64,
}

fn map_body(run: ScenarioRun) -> MapBody {
    let grid = &run.map.grid;
    let x_m = (0..grid.cols()).map(|c| round_dbm(grid.cell_center(grid.index(0, c)).x)).collect();
    let y_m = (0..grid.rows()).map(|r| round_dbm(grid.cell_center(grid.index(r, 0)).y)).collect();
    MapBody {
        scenario: run.map.scenario_id.clone(),
        grid: GridBody { cols: grid.cols(), rows: grid.rows(), cell_m: grid.cell, x_m, y_m },
        power_dbm: run.map.power_dbm.iter().map(|p| p.map(round_dbm)).collect(),
        cdf: CdfBody { power_dbm: run.cdf.power_dbm.iter().copied().map(round_dbm).collect(), prob: run.cdf.prob.clone() },
        summary: run.summary,
    }
}

/// Split the request into the scenario config and the `baseline` flag.
fn parse_request(body: &[u8]) -> Result<(ScenarioConfig, bool), ApiError> {
    let mut value: Value =
        serde_json::from_slice(body).map_err(|e| ApiError::invalid(&ConfigError::Syntax(e.to_string())))?;
    let baseline = match value.as_object_mut().and_then(|o| o.remove("baseline")) {
        None | Some(Value::Null) => false,
        Some(Value::Bool(b)) => b,
        Some(_) => {
            return Err(ApiError::invalid(&ConfigError::Field { field: "baseline".into(), message: "expected a boolean".into() }))
        }
    };
    let cfg = ScenarioConfig::from_value(&value).map_err(|e| ApiError::invalid(&e))?;
    Ok((cfg, baseline))
}

/// Run a request body to completion; blocking.
pub fn simulate_blocking(body: &[u8], materials: &MaterialTable, workers: usize) -> Result<SimulateResponse, ApiError> {
    let started = Instant::now();
    let (cfg, want_baseline) = parse_request(body)?;
    let options = RunOptions { workers, ..RunOptions::default() };
    let run = run_scenario(&cfg, materials, &options)?;
    let steering = run.summary.steering;
    let baseline = if want_baseline {
        let mut base = cfg.clone();
        base.reflector = None;
        base.name = format!("{}_baseline", cfg.name);
        Some(run_scenario(&base, materials, &options)?)
    } else {
        None
    };
    let gain_db = baseline.as_ref().map(|b| run.summary.median_dbm - b.summary.median_dbm);
    Ok(SimulateResponse {
        schema: SCHEMA_VERSION,
        map: map_body(run),
        steering,
        baseline: baseline.map(map_body),
        gain_db,
        timing_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

async fn simulate(State(state): State<AppState>, body: Bytes) -> Result<Json<SimulateResponse>, ApiError> {
    let materials = state.materials.clone();
    tokio::task::spawn_blocking(move || simulate_blocking(&body, &materials, state.workers))
        .await
        .map_err(|e| ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            body: ErrorBody { error: format!("simulation task failed: {e}"), field: None },
        })?
        .map(Json)
}

#[derive(Debug, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub config: Value,
}

#[derive(Debug, Serialize)]
pub struct ScenarioList {
    pub schema: u32,
    pub scenarios: Vec<Preset>,
}

async fn scenarios() -> Json<ScenarioList> {
    let scenarios = PRESETS
        .iter()
        .map(|(name, text)| Preset { name, config: serde_json::from_str(text).expect("presets are valid JSON") })
        .collect();
    Json(ScenarioList { schema: SCHEMA_VERSION, scenarios })
}

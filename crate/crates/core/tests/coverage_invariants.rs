use std::sync::Mutex;

use proptest::prelude::*;

use mmray_core::config::ScenarioConfig;
use mmray_core::coverage::{cdf, compute_coverage, compute_coverage_with, noncoherent_sum_dbm, CoverageMap, ReceiverAntenna, ReceiverGrid};
use mmray_core::geometry::Vec3;
use mmray_core::materials::MaterialTable;
use mmray_core::raytracer::{PathComponent, TraceSettings};
use mmray_core::report::{preset, run_scenario, RunOptions};
use mmray_core::scene::{build_scene, Scene};

fn config(name: &str) -> ScenarioConfig {
    ScenarioConfig::from_json(preset(name).unwrap()).unwrap()
}

fn settings(cfg: &ScenarioConfig) -> TraceSettings {
    TraceSettings { max_order: cfg.sim.max_order, max_path_loss_db: cfg.sim.max_path_loss_db, diffuse: true }
}

fn map(name: &str) -> CoverageMap {
    run_scenario(&config(name), &MaterialTable::itu_defaults(), &RunOptions::default()).unwrap().map
}

#[test]
fn worker_count_does_not_change_the_map() {
    let cfg = config("curved5_az45");
    let scene = build_scene(&cfg, &MaterialTable::itu_defaults()).unwrap();
    let grid = ReceiverGrid::from_config(&cfg).unwrap();
    let antenna = ReceiverAntenna::from_config(&cfg);
    let one = compute_coverage("a", &scene, &grid, &antenna, settings(&cfg), 1).unwrap();
    let four = compute_coverage("a", &scene, &grid, &antenna, settings(&cfg), 4).unwrap();
    let bits = |m: &CoverageMap| m.power_dbm.iter().map(|p| p.map(f64::to_bits)).collect::<Vec<_>>();
    assert_eq!(bits(&one), bits(&four));
    assert_eq!(one.counts, four.counts);
}

#[test]
fn unobstructing_reflectors_never_lose_power() {
    let base = map("baseline");
    for name in ["flat12_az45", "flat24_az45", "flat33_az45", "curved5_az45", "curved10_az45", "cylinder", "sphere"] {
        let m = map(name);
        for i in 0..m.power_dbm.len() {
            let (with, without) = (m.value_or_floor(i), base.value_or_floor(i));
            assert!(with >= without - 0.1, "{name} cell {i}: {with:.3} < baseline {without:.3}");
        }
    }
}

/// Per-cell power of the baseline paths that no facet of `blocker`'s
/// reflector obstructs.
fn unblocked_baseline(base: &Scene, blocker: &Scene, cfg: &ScenarioConfig) -> Vec<Option<f64>> {
    let grid = ReceiverGrid::from_config(cfg).unwrap();
    let antenna = ReceiverAntenna::from_config(cfg);
    let reflector = blocker.reflector_facets().unwrap();
    let kept: Mutex<Vec<Option<f64>>> = Mutex::new(vec![None; grid.len()]);
    compute_coverage_with("base", base, &grid, &antenna, settings(cfg), 0, |cell, paths| {
        let clear: Vec<PathComponent> = paths
            .iter()
            .filter(|p| p.vertices.windows(2).all(|w| blocker.segment_clear(w[0], w[1], |id| !reflector.contains(&id))))
            .cloned()
            .collect();
        kept.lock().unwrap()[cell] = noncoherent_sum_dbm(&clear);
    })
    .unwrap();
    kept.into_inner().unwrap()
}

#[test]
fn a_reflector_only_costs_the_paths_it_blocks() {
    let cfg = config("flat24_az30");
    let materials = MaterialTable::itu_defaults();
    let mut base_cfg = cfg.clone();
    base_cfg.reflector = None;
    let with = build_scene(&cfg, &materials).unwrap();
    let base = build_scene(&base_cfg, &materials).unwrap();
    let bound = unblocked_baseline(&base, &with, &cfg);
    let m = map("flat24_az30");
    for (i, b) in bound.iter().enumerate() {
        if let Some(b) = b {
            assert!(m.value_or_floor(i) >= b - 0.1, "cell {i}: {:.3} < unblocked baseline {b:.3}", m.value_or_floor(i));
        }
    }
}

#[test]
fn a_bigger_panel_raises_the_median() {
    let medians: Vec<f64> = ["baseline", "flat12_az45", "flat24_az45"].iter().map(|n| cdf(&map(n)).median()).collect();
    assert!(medians.windows(2).all(|w| w[0] < w[1]), "{medians:?}");
}

#[test]
fn receiver_grid_covers_the_corridor_floor_plan() {
    let cfg = config("baseline");
    let grid = ReceiverGrid::from_config(&cfg).unwrap();
    assert_eq!((grid.cols(), grid.rows()), (5, 50));
    let first = grid.cell_center(0);
    let last = grid.cell_center(grid.len() - 1);
    assert!((first - Vec3::new(0.15, 0.65, 1.5)).norm() < 1e-12, "{first:?}");
    assert!((last - Vec3::new(1.35, 15.35, 1.5)).norm() < 1e-9, "{last:?}");
}

fn arb_map() -> impl Strategy<Value = CoverageMap> {
    prop::collection::vec(prop::option::weighted(0.9, -150.0f64..-20.0), 20).prop_map(|power_dbm| CoverageMap {
        scenario_id: "p".into(),
        grid: ReceiverGrid::new(Vec3::ZERO, 1.2, 1.5, 0.3).unwrap(),
        power_dbm,
        floor_dbm: -151.0,
        counts: Default::default(),
    })
}

proptest! {
    #[test]
    fn cdf_is_monotone_and_ends_at_one(m in arb_map()) {
        let c = cdf(&m);
        prop_assert_eq!(c.power_dbm.len(), m.power_dbm.len());
        prop_assert!(c.power_dbm.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(c.prob.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(*c.prob.last().unwrap(), 1.0);
        prop_assert!(c.spread_db() >= 0.0);
        prop_assert!(c.quantile(0.05) <= c.median() && c.median() <= c.quantile(0.95));
    }

    #[test]
    fn median_is_a_cell_value(m in arb_map()) {
        let med = cdf(&m).median();
        prop_assert!((0..m.power_dbm.len()).any(|i| m.value_or_floor(i) == med));
    }
}

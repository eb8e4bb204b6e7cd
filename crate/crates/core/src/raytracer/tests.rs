use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use super::*;
use crate::antenna::HornSpec;
use crate::geometry::Facet;
use crate::materials::{Material, MaterialTable};
use crate::scene::Transmitter;

const F: f64 = 28e9;

/// Free-space loss at 1 m and 28 GHz, `20·log10(4π·f/c)`.
const FSPL_1M_DB: f64 = 61.390_944;

fn plate(center: Vec3, u: Vec3, v: Vec3, material: usize, label: &str) -> Facet {
    Facet::new(vec![center - u - v, center + u - v, center + u + v, center - u + v], material, label).unwrap()
}

fn scene(facets: Vec<Facet>, materials: Vec<Material>, tx: Vec3) -> Scene {
    let table = MaterialTable::new(materials).unwrap();
    let tx = Transmitter { position: tx, antenna: AntennaPattern::Isotropic, power_dbm: 0.0 };
    Scene::new(facets, vec![], table, F, tx, 0.25).unwrap()
}

fn iso(position: Vec3) -> Receiver {
    Receiver { position, antenna: AntennaPattern::Isotropic }
}

fn specular_only() -> TraceSettings {
    TraceSettings { diffuse: false, ..TraceSettings::default() }
}

/// Closed box `[0, a] × [0, b] × [0, c]` with inward normals, one facet per wall.
fn box_scene(size: Vec3, material: Material, tx: Vec3) -> Scene {
    let (a, b, c) = (size.x, size.y, size.z);
    let h = size * 0.5;
    let facets = vec![
        plate(Vec3::new(0.0, h.y, h.z), Vec3::Y * h.y, Vec3::Z * h.z, 0, "x0"),
        plate(Vec3::new(a, h.y, h.z), Vec3::Z * h.z, Vec3::Y * h.y, 0, "x1"),
        plate(Vec3::new(h.x, 0.0, h.z), Vec3::Z * h.z, Vec3::X * h.x, 0, "y0"),
        plate(Vec3::new(h.x, b, h.z), Vec3::X * h.x, Vec3::Z * h.z, 0, "y1"),
        plate(Vec3::new(h.x, h.y, 0.0), Vec3::X * h.x, Vec3::Y * h.y, 0, "z0"),
        plate(Vec3::new(h.x, h.y, c), Vec3::Y * h.y, Vec3::X * h.x, 0, "z1"),
    ];
    for f in &facets {
        assert!(f.signed_distance(h) > 0.0, "{} faces outward", f.label());
    }
    scene(facets, vec![material], tx)
}

fn drywall() -> Material {
    MaterialTable::itu_defaults().iter().find(|m| m.name == "itu_layered_drywall").unwrap().clone()
}

#[test]
fn free_space_loss_matches_closed_form() {
    let lambda = SPEED_OF_LIGHT / F;
    assert_abs_diff_eq!(free_space_loss_db(1.0, lambda), FSPL_1M_DB, epsilon = 1e-6);
    assert_abs_diff_eq!(free_space_loss_db(2.0, lambda) - free_space_loss_db(1.0, lambda), 6.0206, epsilon = 1e-4);
}

#[test]
fn empty_scene_has_exactly_one_los_path() {
    let s = scene(vec![], vec![Material::perfect_conductor("pec", 0.1)], Vec3::ZERO);
    let paths = Tracer::new(&s, TraceSettings::default()).trace(&iso(Vec3::X));
    assert_eq!(paths.len(), 1);
    assert_eq!(paths[0].kind, PathKind::Los);
    assert_abs_diff_eq!(paths[0].power_dbm, -FSPL_1M_DB, epsilon = 1e-6);
}

#[test]
fn los_between_aligned_horns() {
    let horn = HornSpec::default();
    let table = MaterialTable::new(vec![Material::perfect_conductor("pec", 0.1)]).unwrap();
    let tx = Transmitter { position: Vec3::ZERO, antenna: horn.aimed(Vec3::X).unwrap(), power_dbm: 0.0 };
    let s = Scene::new(vec![], vec![], table, F, tx, 0.25).unwrap();
    let rx = Receiver { position: Vec3::X, antenna: horn.aimed(-Vec3::X).unwrap() };
    let paths = Tracer::new(&s, TraceSettings::default()).trace(&rx);
    assert_abs_diff_eq!(paths[0].power_dbm, 34.0 - FSPL_1M_DB, epsilon = 1e-6);
}

#[test]
fn single_pec_bounce_keeps_all_but_the_diffuse_share() {
    // Image of the Tx sits 1 m from the Rx; vertical polarization is
    // perpendicular to the plane of incidence.
    let tx = Vec3::new(-0.3, 0.4, 0.0);
    let rx = Vec3::new(0.3, 0.4, 0.0);
    let wall = plate(Vec3::ZERO, Vec3::Z * 5.0, Vec3::X * 5.0, 0, "wall");
    let s = scene(vec![wall], vec![Material::perfect_conductor("pec", 0.1)], tx);
    let paths = Tracer::new(&s, specular_only()).trace(&iso(rx));
    let bounce: Vec<_> = paths.iter().filter(|p| p.kind == PathKind::Specular(1)).collect();
    assert_eq!(bounce.len(), 1);
    assert_abs_diff_eq!(bounce[0].length(), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(bounce[0].power_dbm, -FSPL_1M_DB - 0.043_648, epsilon = 1e-5);
}

#[test]
fn one_wall_gives_los_and_one_mirror_path() {
    let tx = Vec3::new(0.2, 1.0, 1.3);
    let rx = Vec3::new(3.1, 0.6, 1.6);
    let wall = plate(Vec3::ZERO, Vec3::Z * 10.0, Vec3::X * 10.0, 0, "wall");
    let s = scene(vec![wall], vec![drywall()], tx);
    let paths = Tracer::new(&s, specular_only()).trace(&iso(rx));
    assert_eq!(paths.iter().map(|p| p.kind).collect::<Vec<_>>(), vec![PathKind::Los, PathKind::Specular(1)]);
    let v = &paths[1].vertices;
    let n = Vec3::Y;
    let (d_in, d_out) = ((v[1] - v[0]).normalize(), (v[2] - v[1]).normalize());
    assert_abs_diff_eq!(-d_in.dot(n), d_out.dot(n), epsilon = 1e-12);
    assert_abs_diff_eq!(v[1].y, 0.0, epsilon = 1e-12);
}

#[test]
fn wall_blocks_line_of_sight() {
    let tx = Vec3::new(0.0, 0.0, 1.0);
    let rx = Vec3::new(4.0, 0.0, 1.0);
    let screen = plate(Vec3::new(2.0, 0.0, 1.0), Vec3::Y, Vec3::Z, 0, "screen");
    let s = scene(vec![screen], vec![drywall()], tx);
    assert!(Tracer::new(&s, TraceSettings::default()).trace(&iso(rx)).iter().all(|p| p.kind != PathKind::Los));
}

#[test]
fn back_facing_facet_scatters_nothing() {
    let tx = Vec3::new(0.0, -1.0, 1.0);
    let rx = Vec3::new(0.5, -1.0, 1.0);
    // Normal points away from both ends.
    let wall = plate(Vec3::ZERO, Vec3::Z * 0.2, Vec3::X * 0.2, 0, "wall");
    assert!(wall.normal().y > 0.0);
    let s = scene(vec![wall], vec![drywall()], tx);
    assert!(Tracer::new(&s, TraceSettings::default()).trace_diffuse(&iso(rx)).is_empty());
}

#[test]
fn drywall_scatters_nine_times_the_power_of_a_pec_plate() {
    let tx = Vec3::new(-1.0, 1.5, 0.0);
    let rx = Vec3::new(2.0, 1.0, 0.3);
    let total = |m: Material| {
        let wall = plate(Vec3::ZERO, Vec3::Z, Vec3::X, 0, "wall");
        let s = scene(vec![wall], vec![m], tx);
        let paths = Tracer::new(&s, TraceSettings::default()).trace_diffuse(&iso(rx));
        assert_eq!(paths.len(), 16);
        mw_to_dbm(paths.iter().map(|p| dbm_to_mw(p.power_dbm)).sum())
    };
    let rough = Material::lossless("rough", 2.94, 0.3);
    let pec = Material::perfect_conductor("pec", 0.1);
    assert_abs_diff_eq!(total(rough) - total(pec), 9.542_425, epsilon = 1e-6);
}

#[test]
fn diffuse_peaks_in_the_specular_direction() {
    let tx = Vec3::new(-1.0, 1.0, 0.0);
    let wall = plate(Vec3::ZERO, Vec3::Z * 0.2, Vec3::X * 0.2, 0, "plate");
    let s = scene(vec![wall], vec![drywall()], tx);
    let tracer = Tracer::new(&s, TraceSettings::default());
    let at = |deg: f64| {
        let a = deg.to_radians();
        let paths = tracer.trace_diffuse(&iso(Vec3::new(a.sin(), a.cos(), 0.0) * 2.0));
        assert_eq!(paths.len(), 1);
        paths[0].power_dbm
    };
    let peak = at(45.0);
    for deg in [15.0, 30.0, 40.0, 50.0, 60.0, 75.0] {
        assert!(at(deg) < peak, "{deg}° beats the specular direction");
    }
}

#[test]
fn delay_is_length_over_c_and_no_path_gains_power() {
    let s = box_scene(Vec3::new(4.0, 3.0, 2.5), drywall(), Vec3::new(1.0, 0.7, 1.4));
    let paths = Tracer::new(&s, TraceSettings::default()).trace(&iso(Vec3::new(3.2, 2.1, 1.1)));
    assert!(paths.iter().any(|p| p.kind == PathKind::Specular(3)));
    let lambda = s.wavelength();
    for p in &paths {
        let expected = p.length() / SPEED_OF_LIGHT;
        assert!((p.delay_s - expected).abs() <= 1e-12 * expected);
        assert!(p.power_dbm <= 0.0);
        if p.kind != PathKind::Diffuse {
            // Never above free space over the unfolded length.
            assert!(p.power_dbm <= -free_space_loss_db(p.length(), lambda) + 1e-9);
            for i in &p.interactions {
                assert!(i.amplitude_perp.norm() <= 1.0 && i.amplitude_par.norm() <= 1.0);
            }
        }
    }
}

#[test]
fn path_order_is_lexicographic_in_facet_sequence() {
    let s = box_scene(Vec3::new(4.0, 3.0, 2.5), drywall(), Vec3::new(1.0, 0.7, 1.4));
    let paths = Tracer::new(&s, specular_only()).trace(&iso(Vec3::new(3.2, 2.1, 1.1)));
    let planar: Vec<Vec<usize>> = paths.iter().filter(|p| p.kind.order() > 0).map(|p| p.facet_ids()).collect();
    let mut sorted = planar.clone();
    sorted.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.cmp(y)).find(|o| o.is_ne()).unwrap_or(a.len().cmp(&b.len())));
    // Depth-first order is lexicographic once prefixes come first.
    assert_eq!(planar, sorted);
}

#[test]
fn tracing_is_repeatable() {
    let s = box_scene(Vec3::new(4.0, 3.0, 2.5), drywall(), Vec3::new(1.0, 0.7, 1.4));
    let tracer = Tracer::new(&s, TraceSettings::default());
    let rx = iso(Vec3::new(2.2, 2.4, 0.9));
    assert_eq!(tracer.trace(&rx), tracer.trace(&rx));
}

#[test]
fn max_order_zero_keeps_only_los_and_diffuse() {
    let s = box_scene(Vec3::new(4.0, 3.0, 2.5), drywall(), Vec3::new(1.0, 0.7, 1.4));
    let settings = TraceSettings { max_order: 0, ..TraceSettings::default() };
    let paths = Tracer::new(&s, settings).trace(&iso(Vec3::new(2.2, 2.4, 0.9)));
    assert!(paths.iter().all(|p| matches!(p.kind, PathKind::Los | PathKind::Diffuse)));
    assert!(paths.iter().any(|p| p.kind == PathKind::Diffuse));
}

#[test]
fn paths_below_the_loss_budget_are_dropped() {
    let s = scene(vec![], vec![Material::perfect_conductor("pec", 0.1)], Vec3::ZERO);
    let settings = TraceSettings { max_path_loss_db: 60.0, ..TraceSettings::default() };
    assert!(Tracer::new(&s, settings).trace(&iso(Vec3::X)).is_empty());
    let settings = TraceSettings { max_path_loss_db: 62.0, ..TraceSettings::default() };
    assert_eq!(Tracer::new(&s, settings).trace(&iso(Vec3::X)).len(), 1);
}

#[test]
fn flat_divergence_is_inverse_distance() {
    assert_abs_diff_eq!(divergence_amplitude(2.0, 3.0, 0.6, f64::INFINITY, f64::INFINITY), 0.2, epsilon = 1e-15);
    // A convex mirror spreads more than a flat one.
    assert!(divergence_amplitude(2.0, 3.0, 0.6, 0.1, 0.1) < 0.2);
}

#[test]
fn impulse_response_collects_box_paths() {
    let s = box_scene(Vec3::new(4.0, 3.0, 2.5), drywall(), Vec3::new(1.0, 0.7, 1.4));
    let paths = Tracer::new(&s, TraceSettings::default()).trace(&iso(Vec3::new(3.2, 2.1, 1.1)));
    let ir = impulse_response(&paths);
    let total: f64 = paths.iter().map(|p| dbm_to_mw(p.power_dbm)).sum();
    assert!((ir.total_mw() - total).abs() <= 1e-12 * total);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn specular_paths_are_reciprocal(
        ax in 0.3f64..3.7, ay in 0.3f64..2.7, az in 0.3f64..2.2,
        bx in 0.3f64..3.7, by in 0.3f64..2.7, bz in 0.3f64..2.2,
    ) {
        let (a, b) = (Vec3::new(ax, ay, az), Vec3::new(bx, by, bz));
        prop_assume!(a.distance(b) > 0.2);
        let size = Vec3::new(4.0, 3.0, 2.5);
        let forward = box_scene(size, drywall(), a);
        let backward = box_scene(size, drywall(), b);
        let key = |p: &PathComponent, reverse: bool| {
            let mut ids = p.facet_ids();
            if reverse { ids.reverse(); }
            ids
        };
        let mut f: Vec<_> = Tracer::new(&forward, specular_only()).trace(&iso(b)).iter().map(|p| (key(p, false), p.power_dbm)).collect();
        let mut r: Vec<_> = Tracer::new(&backward, specular_only()).trace(&iso(a)).iter().map(|p| (key(p, true), p.power_dbm)).collect();
        f.sort_by(|x, y| x.0.cmp(&y.0));
        r.sort_by(|x, y| x.0.cmp(&y.0));
        prop_assert_eq!(f.len(), r.len());
        for (x, y) in f.iter().zip(&r) {
            prop_assert_eq!(&x.0, &y.0);
            prop_assert!((x.1 - y.1).abs() < 1e-9, "{:?}: {} vs {}", x.0, x.1, y.1);
        }
    }

    #[test]
    fn extra_bounces_never_add_power(
        tx in (0.3f64..3.7, 0.3f64..2.7, 0.3f64..2.2),
        rx in (0.3f64..3.7, 0.3f64..2.7, 0.3f64..2.2),
    ) {
        let s = box_scene(Vec3::new(4.0, 3.0, 2.5), drywall(), Vec3::new(tx.0, tx.1, tx.2));
        let paths = Tracer::new(&s, specular_only()).trace(&iso(Vec3::new(rx.0, rx.1, rx.2)));
        let lambda = s.wavelength();
        for p in &paths {
            // Loss beyond free space over the unfolded path, in dB.
            let excess = -free_space_loss_db(p.length(), lambda) - p.power_dbm;
            prop_assert!(excess >= -1e-9);
            for i in &p.interactions {
                prop_assert!(i.amplitude_perp.norm() <= 1.0 + 1e-12 && i.amplitude_par.norm() <= 1.0 + 1e-12);
            }
        }
    }
}

//! Closed-form steering and sizing analytics for flat reflectors.

use serde::Serialize;

/// Share of the half-power footprint used by the center-weighted sizing.
pub const CENTER_WEIGHT: f64 = 0.7;

/// Inputs for the steering analytics. `normal_offset_deg` is the angle
/// between the reflector normal and the incoming beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteeringQuery {
    pub reflector_area_m2: f64,
    pub normal_offset_deg: f64,
    pub hpbw_e_deg: f64,
    pub hpbw_h_deg: f64,
    pub distance_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteeringReport {
    pub query: SteeringQuery,
    pub effective_area_m2: f64,
    pub deflection_deg: f64,
    pub footprint_e_m: f64,
    pub footprint_h_m: f64,
    pub recommended_side_m: f64,
    pub recommended_side_center_weighted_m: f64,
}

/// Projected area seen by the beam, `A·cos α`.
pub fn effective_area(reflector_area: f64, alpha: f64) -> f64 {
    reflector_area * alpha.cos()
}

/// Angle between the incident beam axis and the reflected beam axis,
/// measured between the beam's arrival direction (pointing back at the
/// source) and its departure direction: `2α`. The angle between the two
/// propagation directions is the supplement, `π − 2α`.
pub fn deflection_angle(alpha: f64) -> f64 {
    2.0 * alpha
}

/// Half-power footprint `(w_E, w_H)` at distance `d`, each `2·d·tan(HPBW/2)`.
pub fn beam_footprint(hpbw_e_deg: f64, hpbw_h_deg: f64, distance: f64) -> (f64, f64) {
    let w = |hpbw: f64| 2.0 * distance * (0.5 * hpbw.to_radians()).tan();
    (w(hpbw_e_deg), w(hpbw_h_deg))
}

/// Side of a square flat reflector that covers the footprint once tilted by
/// `α` in azimuth: `max(w_E, w_H / cos α)`.
pub fn recommend_reflector_size(hpbw_e_deg: f64, hpbw_h_deg: f64, distance: f64, alpha: f64) -> f64 {
    let (we, wh) = beam_footprint(hpbw_e_deg, hpbw_h_deg, distance);
    we.max(wh / alpha.cos())
}

/// [`recommend_reflector_size`] covering only the central share of the footprint.
pub fn recommend_reflector_size_center_weighted(hpbw_e_deg: f64, hpbw_h_deg: f64, distance: f64, alpha: f64) -> f64 {
    CENTER_WEIGHT * recommend_reflector_size(hpbw_e_deg, hpbw_h_deg, distance, alpha)
}

pub fn analyze(query: SteeringQuery) -> SteeringReport {
    let alpha = query.normal_offset_deg.to_radians();
    let (we, wh) = beam_footprint(query.hpbw_e_deg, query.hpbw_h_deg, query.distance_m);
    SteeringReport {
        query,
        effective_area_m2: effective_area(query.reflector_area_m2, alpha),
        deflection_deg: deflection_angle(alpha).to_degrees(),
        footprint_e_m: we,
        footprint_h_m: wh,
        recommended_side_m: recommend_reflector_size(query.hpbw_e_deg, query.hpbw_h_deg, query.distance_m, alpha),
        recommended_side_center_weighted_m: recommend_reflector_size_center_weighted(
            query.hpbw_e_deg,
            query.hpbw_h_deg,
            query.distance_m,
            alpha,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{reflect_direction, Placement, Vec3};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    const SIDE_24: f64 = 0.6096;

    #[test]
    fn effective_area_examples() {
        assert_eq!(effective_area(2.0, 0.0), 2.0);
        assert_abs_diff_eq!(effective_area(2.0, 60f64.to_radians()), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(effective_area(SIDE_24 * SIDE_24, 45f64.to_radians()), 0.262769, epsilon = 1e-6);
    }

    #[test]
    fn deflection_examples() {
        assert_abs_diff_eq!(deflection_angle(45f64.to_radians()).to_degrees(), 90.0, epsilon = 1e-12);
        assert_abs_diff_eq!(deflection_angle(30f64.to_radians()).to_degrees(), 60.0, epsilon = 1e-12);
        assert_eq!(deflection_angle(0.0), 0.0);
        // Ray convention: at normal incidence the ray turns around completely.
        let out = reflect_direction(Vec3::X, -Vec3::X).unwrap();
        assert_abs_diff_eq!(Vec3::X.angle_to(out), PI, epsilon = 1e-12);
    }

    #[test]
    fn footprint_examples() {
        let (we, wh) = beam_footprint(26.0, 24.0, 5.0);
        assert_abs_diff_eq!(we, 2.308682, epsilon = 1e-6);
        assert_abs_diff_eq!(wh, 2.125566, epsilon = 1e-6);
        let (we2, wh2) = beam_footprint(26.0, 24.0, 10.0);
        assert_abs_diff_eq!(we2 * wh2 / (we * wh), 4.0, epsilon = 1e-12);
        let (w0, _) = beam_footprint(0.0, 24.0, 5.0);
        assert_eq!(w0, 0.0);
    }

    #[test]
    fn recommended_size_examples() {
        let side = recommend_reflector_size(26.0, 24.0, 5.0, 45f64.to_radians());
        assert_abs_diff_eq!(side, 3.006, epsilon = 1e-3);
        assert!(side > 33.0 * 0.0254);
        assert_abs_diff_eq!(recommend_reflector_size(20.0, 20.0, 5.0, 0.0), beam_footprint(20.0, 20.0, 5.0).0, epsilon = 1e-15);
        assert_eq!(recommend_reflector_size(26.0, 24.0, 0.0, 0.5), 0.0);
        assert_abs_diff_eq!(
            recommend_reflector_size_center_weighted(26.0, 24.0, 5.0, 45f64.to_radians()),
            0.7 * side,
            epsilon = 1e-12
        );
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn deflection_matches_the_law_of_reflection(alpha in 0.0f64..(FRAC_PI_2 - 1e-6), az in 0.0f64..(2.0 * PI)) {
                // Beam travelling along `d` onto a surface whose normal is `α` away from `−d`.
                let d = Vec3::new(az.cos(), az.sin(), 0.0);
                let n = (-d) * alpha.cos() + Vec3::Z.cross(d) * alpha.sin();
                let out = reflect_direction(d, n).unwrap();
                prop_assert!(((-d).angle_to(out) - deflection_angle(alpha)).abs() < 1e-9);
                prop_assert!((d.angle_to(out) - (PI - deflection_angle(alpha))).abs() < 1e-9);
            }

            #[test]
            fn effective_area_decreases(a in 0.0f64..1.5, b in 0.0f64..1.5) {
                prop_assume!(a < b);
                prop_assert!(effective_area(1.0, b) < effective_area(1.0, a));
            }

            #[test]
            fn footprint_increases(d in 0.1f64..50.0, h in 1.0f64..170.0, dd in 0.01f64..5.0, dh in 0.1f64..5.0) {
                let (w, _) = beam_footprint(h, h, d);
                prop_assert!(beam_footprint(h, h, d + dd).0 > w);
                prop_assert!(beam_footprint(h + dh, h, d).0 > w);
            }
        }
    }

    #[test]
    fn placement_at_forty_five_degrees_offsets_the_normal_by_alpha() {
        let n = Placement { position: Vec3::ZERO, azimuth_deg: 45.0, elevation_deg: 0.0 }.normal();
        assert_abs_diff_eq!(n.angle_to(-Vec3::X).to_degrees(), 45.0, epsilon = 1e-12);
        assert!(effective_area(1.0, 1.0 - 1e-9) >= 0.0);
        assert_abs_diff_eq!(effective_area(1.0, FRAC_PI_2), 0.0, epsilon = 1e-15);
    }
}

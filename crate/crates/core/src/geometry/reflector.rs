//! Parametric passive reflectors: flat sheets, cylinders, spheres and
//! curved panels, their facet tessellation, and the exact specular point on
//! the smooth (curved) shapes.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::{Facet, GeometryError, Vec3};
use crate::materials::MaterialId;

/// Reflector geometry. All lengths in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ReflectorShape {
    FlatSquare { side: f64 },
    Cylinder { radius: f64, height: f64 },
    Sphere { diameter: f64 },
    /// Vertical-axis circular arc bulging toward the normal. `curve_angle_deg`
    /// is the total angle the arc subtends at its center of curvature.
    CurvedPanel { chord_width: f64, height: f64, curve_angle_deg: f64 },
}

impl ReflectorShape {
    /// Analytic area of the reflecting surface (lateral area for the cylinder).
    pub fn surface_area(&self) -> f64 {
        match *self {
            ReflectorShape::FlatSquare { side } => side * side,
            ReflectorShape::Cylinder { radius, height } => TAU * radius * height,
            ReflectorShape::Sphere { diameter } => PI * diameter * diameter,
            ReflectorShape::CurvedPanel { chord_width, height, curve_angle_deg } => {
                let (radius, angle) = panel_radius(chord_width, curve_angle_deg);
                radius * angle * height
            }
        }
    }

    /// Area presented to a beam arriving along the reference normal.
    pub fn aperture_area(&self) -> f64 {
        match *self {
            ReflectorShape::FlatSquare { side } => side * side,
            ReflectorShape::Cylinder { radius, height } => 2.0 * radius * height,
            ReflectorShape::Sphere { diameter } => 0.25 * PI * diameter * diameter,
            ReflectorShape::CurvedPanel { chord_width, height, .. } => chord_width * height,
        }
    }

    /// Whether the aperture foreshortens with the incidence angle.
    pub fn is_directional(&self) -> bool {
        matches!(self, ReflectorShape::FlatSquare { .. } | ReflectorShape::CurvedPanel { .. })
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let dims: &[(&str, f64)] = match self {
            ReflectorShape::FlatSquare { side } => &[("side", *side)],
            ReflectorShape::Cylinder { radius, height } => &[("radius", *radius), ("height", *height)],
            ReflectorShape::Sphere { diameter } => &[("diameter", *diameter)],
            ReflectorShape::CurvedPanel { chord_width, height, .. } => &[("chord_width", *chord_width), ("height", *height)],
        };
        for (name, v) in dims {
            if !(v.is_finite() && *v > 0.0) {
                return Err(GeometryError::InvalidReflector(format!("{name} must be positive, got {v}")));
            }
        }
        if let ReflectorShape::CurvedPanel { curve_angle_deg, .. } = self {
            if !(*curve_angle_deg > 0.0 && *curve_angle_deg <= 90.0) {
                return Err(GeometryError::InvalidReflector(format!(
                    "curve_angle_deg must be in (0, 90], got {curve_angle_deg}"
                )));
            }
        }
        Ok(())
    }
}

/// Radius of curvature and subtended angle (radians) of a curved panel.
fn panel_radius(chord_width: f64, curve_angle_deg: f64) -> (f64, f64) {
    let angle = curve_angle_deg.to_radians();
    (chord_width / (2.0 * (0.5 * angle).sin()), angle)
}

/// Chord width of a curved panel whose arc length is `arc_length`.
pub fn panel_chord_for_arc(arc_length: f64, curve_angle_deg: f64) -> f64 {
    let angle = curve_angle_deg.to_radians();
    let radius = arc_length / angle;
    2.0 * radius * (0.5 * angle).sin()
}

/// Where a reflector sits and which way it faces.
///
/// The azimuth rotates the reference normal away from `-x` (back up the
/// feeding corridor toward the transmitter) toward `+y` (down the receiver
/// corridor); elevation tilts it toward `+z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub position: Vec3,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
}

impl Placement {
    pub fn normal(&self) -> Vec3 {
        let (az, el) = (self.azimuth_deg.to_radians(), self.elevation_deg.to_radians());
        Vec3::new(-az.cos() * el.cos(), az.sin() * el.cos(), el.sin())
    }

    /// Orthonormal frame `(normal, right, up)` with `right × up = normal`.
    pub fn frame(&self) -> (Vec3, Vec3, Vec3) {
        let n = self.normal();
        let up = (Vec3::Z - n * Vec3::Z.dot(n)).normalize();
        (n, up.cross(n), up)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectorSpec {
    #[serde(flatten)]
    pub shape: ReflectorShape,
    pub placement: Placement,
}

impl ReflectorSpec {
    pub fn validate(&self) -> Result<(), GeometryError> {
        self.shape.validate()?;
        let p = &self.placement;
        if !(0.0..180.0).contains(&p.azimuth_deg) {
            return Err(GeometryError::InvalidReflector(format!(
                "azimuth_deg must be in [0, 180), got {}",
                p.azimuth_deg
            )));
        }
        if !(p.elevation_deg > -90.0 && p.elevation_deg < 90.0) {
            return Err(GeometryError::InvalidReflector(format!(
                "elevation_deg must be in (-90, 90), got {}",
                p.elevation_deg
            )));
        }
        if !p.position.is_finite() {
            return Err(GeometryError::InvalidReflector("position must be finite".into()));
        }
        Ok(())
    }

    /// Exact shape for curved reflectors, `None` for flat sheets.
    pub fn smooth_surface(&self, max_facet_angle_deg: f64) -> Option<SmoothShape> {
        let (n, _, up) = self.placement.frame();
        let c = self.placement.position;
        let pitch = max_facet_angle_deg;
        match self.shape {
            ReflectorShape::FlatSquare { .. } => None,
            ReflectorShape::Cylinder { radius, height } => Some(SmoothShape::Cylinder {
                center: c,
                axis: up,
                e1: n,
                e2: up.cross(n),
                radius,
                half_height: 0.5 * height,
                half_arc: None,
                strips: (360.0 / pitch).ceil() as usize,
            }),
            ReflectorShape::CurvedPanel { chord_width, height, curve_angle_deg } => {
                let (radius, angle) = panel_radius(chord_width, curve_angle_deg);
                Some(SmoothShape::Cylinder {
                    center: c - n * radius,
                    axis: up,
                    e1: n,
                    e2: up.cross(n),
                    radius,
                    half_height: 0.5 * height,
                    half_arc: Some(0.5 * angle),
                    strips: (curve_angle_deg / pitch).ceil() as usize,
                })
            }
            ReflectorShape::Sphere { diameter } => Some(SmoothShape::Sphere {
                center: c,
                radius: 0.5 * diameter,
                pole: up,
                e1: n,
                e2: up.cross(n),
                n_lat: (180.0 / pitch).ceil() as usize,
                n_lon: (360.0 / pitch).ceil() as usize,
            }),
        }
    }
}

/// Split a reflector into planar facets.
///
/// Flat squares give one quad. Curved panels and cylinders give vertical
/// strips, each subtending at most `max_facet_angle_deg`; spheres give
/// latitude/longitude patches at the same pitch (triangles at the poles).
/// Curved facets are inscribed in the exact surface.
pub fn tessellate_reflector(
    spec: &ReflectorSpec,
    max_facet_angle_deg: f64,
    material: MaterialId,
) -> Result<Vec<Facet>, GeometryError> {
    if !(max_facet_angle_deg > 0.0 && max_facet_angle_deg.is_finite()) {
        return Err(GeometryError::InvalidReflector(format!(
            "max_facet_angle_deg must be positive, got {max_facet_angle_deg}"
        )));
    }
    spec.validate()?;
    let (n, right, up) = spec.placement.frame();
    let c = spec.placement.position;
    match (spec.shape, spec.smooth_surface(max_facet_angle_deg)) {
        (ReflectorShape::FlatSquare { side }, _) => {
            let a = 0.5 * side;
            let v = vec![
                c - right * a - up * a,
                c + right * a - up * a,
                c + right * a + up * a,
                c - right * a + up * a,
            ];
            debug_assert!(Facet::new(v.clone(), material, "").map(|f| f.normal().dot(n) > 0.0).unwrap_or(false));
            Ok(vec![Facet::new(v, material, "reflector")?])
        }
        (_, Some(shape)) => shape.tessellate(material),
        (_, None) => unreachable!("curved shapes always have a smooth surface"),
    }
}

/// Exact surface of a curved reflector, used for specular reflection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothShape {
    /// Vertical-axis circular cylinder or, with `half_arc`, a section of one
    /// centered on `e1`.
    Cylinder {
        center: Vec3,
        axis: Vec3,
        e1: Vec3,
        e2: Vec3,
        radius: f64,
        half_height: f64,
        half_arc: Option<f64>,
        strips: usize,
    },
    Sphere {
        center: Vec3,
        radius: f64,
        pole: Vec3,
        e1: Vec3,
        e2: Vec3,
        n_lat: usize,
        n_lon: usize,
    },
}

/// A specular reflection point on a smooth surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub point: Vec3,
    pub normal: Vec3,
    /// Principal radius of curvature in the plane of incidence.
    pub radius_in_plane: f64,
    /// Principal radius of curvature across the plane of incidence (∞ when flat).
    pub radius_across: f64,
    /// Offset of the containing facet within the surface's facet block.
    pub facet_offset: usize,
}

impl SmoothShape {
    pub fn facet_count(&self) -> usize {
        match *self {
            SmoothShape::Cylinder { strips, .. } => strips,
            SmoothShape::Sphere { n_lat, n_lon, .. } => n_lat * n_lon,
        }
    }

    fn strip_range(&self) -> (f64, f64) {
        match *self {
            SmoothShape::Cylinder { half_arc: Some(h), .. } => (-h, 2.0 * h),
            _ => (0.0, TAU),
        }
    }

    fn tessellate(&self, material: MaterialId) -> Result<Vec<Facet>, GeometryError> {
        let mut facets = Vec::with_capacity(self.facet_count());
        match *self {
            SmoothShape::Cylinder { center, axis, e1, e2, radius, half_height, strips, .. } => {
                let (start, span) = self.strip_range();
                let step = span / strips as f64;
                let at = |phi: f64, z: f64| center + (e1 * phi.cos() + e2 * phi.sin()) * radius + axis * z;
                for j in 0..strips {
                    let (p0, p1) = (start + j as f64 * step, start + (j + 1) as f64 * step);
                    let v = vec![at(p0, -half_height), at(p1, -half_height), at(p1, half_height), at(p0, half_height)];
                    facets.push(Facet::new(v, material, format!("reflector strip {j}"))?);
                }
            }
            SmoothShape::Sphere { center, radius, pole, e1, e2, n_lat, n_lon } => {
                let at = |theta: f64, phi: f64| {
                    center + (e1 * (theta.sin() * phi.cos()) + e2 * (theta.sin() * phi.sin()) + pole * theta.cos()) * radius
                };
                let (dt, dp) = (PI / n_lat as f64, TAU / n_lon as f64);
                for i in 0..n_lat {
                    let (t0, t1) = (i as f64 * dt, (i + 1) as f64 * dt);
                    for j in 0..n_lon {
                        let (p0, p1) = (j as f64 * dp, (j + 1) as f64 * dp);
                        let v = if i == 0 {
                            vec![at(t1, p0), at(t1, p1), center + pole * radius]
                        } else if i == n_lat - 1 {
                            vec![center - pole * radius, at(t0, p1), at(t0, p0)]
                        } else {
                            vec![at(t1, p0), at(t1, p1), at(t0, p1), at(t0, p0)]
                        };
                        facets.push(Facet::new(v, material, format!("reflector patch {i}/{j}"))?);
                    }
                }
            }
        }
        Ok(facets)
    }

    /// Specular reflection point between the (image) source `a` and (image)
    /// receiver `b`, both outside the surface. `None` when the stationary
    /// point falls off the finite surface.
    pub fn specular_point(&self, a: Vec3, b: Vec3) -> Option<SurfacePoint> {
        match *self {
            SmoothShape::Cylinder { center, axis, e1, e2, radius, half_height, half_arc, strips } => {
                let (ra, rb) = (a - center, b - center);
                let (za, zb) = (ra.dot(axis), rb.dot(axis));
                let a2 = (ra.dot(e1), ra.dot(e2));
                let b2 = (rb.dot(e1), rb.dot(e2));
                let phi = circle_specular(a2, b2, radius, half_arc)?;
                let q = (radius * phi.cos(), radius * phi.sin());
                let h1 = (a2.0 - q.0).hypot(a2.1 - q.1);
                let h2 = (b2.0 - q.0).hypot(b2.1 - q.1);
                let z = za + (zb - za) * h1 / (h1 + h2);
                if z.abs() > half_height {
                    return None;
                }
                let normal = e1 * phi.cos() + e2 * phi.sin();
                let (start, span) = self.strip_range();
                let idx = (((phi - start).rem_euclid(TAU)) / (span / strips as f64)).floor() as usize;
                Some(SurfacePoint {
                    point: center + normal * radius + axis * z,
                    normal,
                    radius_in_plane: radius,
                    radius_across: f64::INFINITY,
                    facet_offset: idx.min(strips - 1),
                })
            }
            SmoothShape::Sphere { center, radius, pole, e1, e2, n_lat, n_lon } => {
                let (ra, rb) = (a - center, b - center);
                let u = ra.try_normalize()?;
                let v = (rb - u * rb.dot(u)).try_normalize().unwrap_or_else(|| u.any_perpendicular());
                let phi = circle_specular((ra.norm(), 0.0), (rb.dot(u), rb.dot(v)), radius, None)?;
                let normal = u * phi.cos() + v * phi.sin();
                let theta = normal.dot(pole).clamp(-1.0, 1.0).acos();
                let lon = normal.dot(e2).atan2(normal.dot(e1)).rem_euclid(TAU);
                let i = ((theta / (PI / n_lat as f64)).floor() as usize).min(n_lat - 1);
                let j = ((lon / (TAU / n_lon as f64)).floor() as usize).min(n_lon - 1);
                Some(SurfacePoint {
                    point: center + normal * radius,
                    normal,
                    radius_in_plane: radius,
                    radius_across: radius,
                    facet_offset: i * n_lon + j,
                })
            }
        }
    }
}

/// Angle `φ` of the reflection point on a circle of radius `r` centered at
/// the origin for 2-D points `a` and `b` outside it, restricted to
/// `[-half_arc, half_arc]` when given.
///
/// On the arc visible from both points the total path length is minimized
/// exactly where the law of reflection holds; the root of its derivative is
/// bracketed by sampling and refined by bisection.
fn circle_specular(a: (f64, f64), b: (f64, f64), r: f64, half_arc: Option<f64>) -> Option<f64> {
    let (la, lb) = (a.0.hypot(a.1), b.0.hypot(b.1));
    if la <= r || lb <= r {
        return None;
    }
    let phi_a = a.1.atan2(a.0);
    let wrap = |x: f64| (x + PI).rem_euclid(TAU) - PI;
    // Visibility windows, expressed relative to phi_a.
    let (wa, wb) = ((r / la).acos(), (r / lb).acos());
    let db = wrap(b.1.atan2(b.0) - phi_a);
    let mut lo = (-wa).max(db - wb);
    let mut hi = wa.min(db + wb);
    if let Some(h) = half_arc {
        let c = wrap(-phi_a);
        lo = lo.max(c - h);
        hi = hi.min(c + h);
    }
    if hi <= lo {
        return None;
    }
    let slope = |rel: f64| {
        let phi = phi_a + rel;
        let (s, c) = phi.sin_cos();
        let q = (r * c, r * s);
        let t = (-s, c);
        let (da, db) = ((q.0 - a.0, q.1 - a.1), (q.0 - b.0, q.1 - b.1));
        let (na, nb) = (da.0.hypot(da.1), db.0.hypot(db.1));
        t.0 * (da.0 / na + db.0 / nb) + t.1 * (da.1 / na + db.1 / nb)
    };
    const SAMPLES: usize = 64;
    let step = (hi - lo) / SAMPLES as f64;
    let (mut prev_x, mut prev_s) = (lo, slope(lo));
    for k in 1..=SAMPLES {
        let x = if k == SAMPLES { hi } else { lo + k as f64 * step };
        let s = slope(x);
        if prev_s < 0.0 && s >= 0.0 {
            let (mut l, mut h) = (prev_x, x);
            for _ in 0..200 {
                let m = 0.5 * (l + h);
                if m <= l || m >= h {
                    break;
                }
                if slope(m) < 0.0 {
                    l = m;
                } else {
                    h = m;
                }
            }
            return Some(phi_a + 0.5 * (l + h));
        }
        (prev_x, prev_s) = (x, s);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    const IN: f64 = 0.0254;

    fn placed(shape: ReflectorShape, az: f64) -> ReflectorSpec {
        ReflectorSpec { shape, placement: Placement { position: Vec3::new(1.0, -0.75, 1.5), azimuth_deg: az, elevation_deg: 0.0 } }
    }

    fn total_area(f: &[Facet]) -> f64 {
        f.iter().map(Facet::area).sum()
    }

    #[test]
    fn flat_square_is_one_quad() {
        let spec = placed(ReflectorShape::FlatSquare { side: 24.0 * IN }, 45.0);
        let f = tessellate_reflector(&spec, 2.5, 0).unwrap();
        assert_eq!(f.len(), 1);
        assert!((f[0].area() - 0.37161216).abs() < 1e-12);
        let n = f[0].normal();
        let h = 0.5f64.sqrt();
        assert!((n - Vec3::new(-h, h, 0.0)).norm() < 1e-12);
        // 45° to the corridor axis in the horizontal plane.
        assert!((n.angle_to(-Vec3::X).to_degrees() - 45.0).abs() < 1e-9);
        assert!((f[0].centroid() - spec.placement.position).norm() < 1e-12);
    }

    #[test]
    fn curved_panel_strip_count() {
        let shape = ReflectorShape::CurvedPanel { chord_width: 0.6, height: 24.0 * IN, curve_angle_deg: 10.0 };
        let f = tessellate_reflector(&placed(shape, 45.0), 2.5, 0).unwrap();
        assert_eq!(f.len(), 4);
        let shape = ReflectorShape::CurvedPanel { chord_width: 0.6, height: 24.0 * IN, curve_angle_deg: 5.0 };
        assert_eq!(tessellate_reflector(&placed(shape, 45.0), 2.5, 0).unwrap().len(), 2);
        assert_eq!(tessellate_reflector(&placed(shape, 45.0), 2.0, 0).unwrap().len(), 3);
    }

    #[test]
    fn sphere_area_within_two_percent() {
        let d = 13.5 * IN;
        let f = tessellate_reflector(&placed(ReflectorShape::Sphere { diameter: d }, 0.0), 2.5, 0).unwrap();
        let exact = PI * d * d;
        assert!((exact - 0.3694).abs() < 1e-4);
        assert!((total_area(&f) - exact).abs() / exact < 0.02);
    }

    #[test]
    fn curved_normals_point_outward() {
        let shapes = [
            ReflectorShape::Cylinder { radius: 4.2 * IN, height: 18.0 * IN },
            ReflectorShape::Sphere { diameter: 13.5 * IN },
            ReflectorShape::CurvedPanel { chord_width: 0.6, height: 0.6, curve_angle_deg: 10.0 },
        ];
        for shape in shapes {
            let spec = placed(shape, 30.0);
            let s = spec.smooth_surface(5.0).unwrap();
            let center = match s {
                SmoothShape::Cylinder { center, .. } | SmoothShape::Sphere { center, .. } => center,
            };
            for f in tessellate_reflector(&spec, 5.0, 0).unwrap() {
                let radial = f.centroid() - center;
                let radial = radial - Vec3::Z * radial.z;
                let radial = if matches!(shape, ReflectorShape::Sphere { .. }) { f.centroid() - center } else { radial };
                assert!(f.normal().dot(radial) > 0.0, "{shape:?} {}", f.label());
            }
        }
    }

    #[test]
    fn refinement_converges_to_analytic_area() {
        let shapes = [
            ReflectorShape::Cylinder { radius: 4.2 * IN, height: 18.0 * IN },
            ReflectorShape::Sphere { diameter: 13.5 * IN },
            ReflectorShape::CurvedPanel { chord_width: 0.6, height: 0.6, curve_angle_deg: 10.0 },
        ];
        for shape in shapes {
            let spec = placed(shape, 45.0);
            let exact = shape.surface_area();
            let mut prev_err = f64::INFINITY;
            for pitch in [20.0, 10.0, 5.0, 2.5, 1.25] {
                let err = (total_area(&tessellate_reflector(&spec, pitch, 0).unwrap()) - exact).abs() / exact;
                assert!(err <= prev_err + 1e-12, "{shape:?} pitch {pitch}: {err} > {prev_err}");
                prev_err = err;
            }
            assert!(prev_err < 0.02);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let bad = [
            ReflectorShape::FlatSquare { side: 0.0 },
            ReflectorShape::Sphere { diameter: -1.0 },
            ReflectorShape::CurvedPanel { chord_width: 0.6, height: 0.6, curve_angle_deg: 0.0 },
            ReflectorShape::CurvedPanel { chord_width: 0.6, height: 0.6, curve_angle_deg: 91.0 },
        ];
        for shape in bad {
            assert!(tessellate_reflector(&placed(shape, 45.0), 2.5, 0).is_err(), "{shape:?}");
        }
        let flat = ReflectorShape::FlatSquare { side: 0.3 };
        assert!(tessellate_reflector(&placed(flat, 180.0), 2.5, 0).is_err());
        assert!(tessellate_reflector(&placed(flat, 45.0), 0.0, 0).is_err());
    }

    #[test]
    fn circle_specular_obeys_reflection_law() {
        let r = 0.5;
        let a = (3.0, 1.0);
        let b = (2.0, -2.5);
        let phi = circle_specular(a, b, r, None).unwrap();
        let q = (r * phi.cos(), r * phi.sin());
        let n = (phi.cos(), phi.sin());
        let unit = |p: (f64, f64)| {
            let d = ((p.0 - q.0), (p.1 - q.1));
            let l = d.0.hypot(d.1);
            (d.0 / l, d.1 / l)
        };
        let (ua, ub) = (unit(a), unit(b));
        let ang_a = (ua.0 * n.0 + ua.1 * n.1).acos();
        let ang_b = (ub.0 * n.0 + ub.1 * n.1).acos();
        assert!((ang_a - ang_b).abs() < 1e-9);
        // Symmetric configuration reflects at the bisector.
        let phi = circle_specular((2.0, 1.0), (2.0, -1.0), r, None).unwrap();
        assert!(phi.abs() < 1e-12);
        // Arc restriction removes it.
        assert!(circle_specular((2.0, 1.0), (2.0, -1.0), r, Some(0.05)).unwrap().abs() < 1e-12);
        assert!(circle_specular((0.0, 2.0), (0.0, 3.0), r, Some(0.1)).is_none());
    }

    #[test]
    fn cylinder_specular_point_height() {
        let spec = placed(ReflectorShape::Cylinder { radius: 0.1, height: 0.4 }, 0.0);
        let s = spec.smooth_surface(2.5).unwrap();
        let c = spec.placement.position;
        let a = c + Vec3::new(-3.0, 0.5, 0.2);
        let b = c + Vec3::new(-2.0, -1.0, -0.1);
        let sp = s.specular_point(a, b).unwrap();
        let (ua, ub) = ((a - sp.point).normalize(), (b - sp.point).normalize());
        assert!((ua.angle_to(sp.normal) - ub.angle_to(sp.normal)).abs() < 1e-9);
        // Both directions coplanar with the normal.
        assert!(ua.cross(ub).dot(sp.normal).abs() < 1e-9);
        // Too far above the top.
        assert!(s.specular_point(c + Vec3::new(-3.0, 0.0, 5.0), c + Vec3::new(-3.0, 0.5, 5.0)).is_none());
    }

    #[test]
    fn sphere_specular_point_facet_index_matches_geometry() {
        let spec = placed(ReflectorShape::Sphere { diameter: 0.34 }, 0.0);
        let s = spec.smooth_surface(5.0).unwrap();
        let facets = tessellate_reflector(&spec, 5.0, 0).unwrap();
        let c = spec.placement.position;
        for (a, b) in [
            (Vec3::new(-3.0, 0.2, 0.1), Vec3::new(-1.0, 2.0, -0.3)),
            (Vec3::new(-1.0, -3.0, 0.5), Vec3::new(2.0, -1.0, 0.0)),
        ] {
            let sp = s.specular_point(c + a, c + b).unwrap();
            let f = &facets[sp.facet_offset];
            // The facet containing the point has the closest normal.
            let best = facets
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.normal().dot(sp.normal).total_cmp(&y.1.normal().dot(sp.normal)))
                .unwrap()
                .0;
            assert!(f.normal().dot(sp.normal) > 0.99, "{} vs best {}", sp.facet_offset, best);
        }
    }
}

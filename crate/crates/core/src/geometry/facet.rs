use super::{GeometryError, Vec3};
use crate::materials::MaterialId;

/// Coplanarity tolerance for quad vertices, in meters.
pub const COPLANAR_TOL: f64 = 1e-6;

/// Tolerance used when deciding whether a point on the facet plane lies
/// inside the facet, in barycentric units.
const INSIDE_TOL: f64 = 1e-9;

/// Index of a facet inside a [`Scene`](super::Scene).
pub type FacetId = usize;

/// Index of a smooth reflector surface inside a scene.
pub type SurfaceId = usize;

/// A planar triangle or quad with a one-sided reflecting front face.
///
/// Vertices wind counter-clockwise when viewed from the front, so the unit
/// normal points toward the half-space that sees the reflecting side.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    vertices: Vec<Vec3>,
    normal: Vec3,
    offset: f64,
    area: f64,
    centroid: Vec3,
    material: MaterialId,
    surface: Option<SurfaceId>,
    label: String,
}

impl Facet {
    pub fn new(vertices: Vec<Vec3>, material: MaterialId, label: impl Into<String>) -> Result<Facet, GeometryError> {
        let label = label.into();
        if vertices.len() != 3 && vertices.len() != 4 {
            return Err(GeometryError::InvalidFacet {
                label,
                reason: format!("expected 3 or 4 vertices, got {}", vertices.len()),
            });
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidFacet { label, reason: "non-finite vertex".into() });
        }
        // Newell's method gives a winding-consistent normal for any planar polygon.
        let mut newell = Vec3::ZERO;
        for (i, a) in vertices.iter().enumerate() {
            let b = vertices[(i + 1) % vertices.len()];
            newell += a.cross(b);
        }
        let normal = match newell.try_normalize() {
            Some(n) => n,
            None => return Err(GeometryError::InvalidFacet { label, reason: "degenerate (zero area)".into() }),
        };
        let centroid = vertices.iter().fold(Vec3::ZERO, |acc, &v| acc + v) / vertices.len() as f64;
        let offset = normal.dot(centroid);
        for v in &vertices {
            let dev = (normal.dot(*v) - offset).abs();
            if dev > COPLANAR_TOL {
                return Err(GeometryError::InvalidFacet {
                    label,
                    reason: format!("vertices not coplanar (deviation {dev:.3e} m)"),
                });
            }
        }
        let area = triangles(&vertices)
            .map(|[a, b, c]| 0.5 * (b - a).cross(c - a).norm())
            .sum::<f64>();
        if area <= 0.0 {
            return Err(GeometryError::InvalidFacet { label, reason: "zero area".into() });
        }
        Ok(Facet { vertices, normal, offset, area, centroid, material, surface: None, label })
    }

    pub(crate) fn with_surface(mut self, surface: SurfaceId) -> Facet {
        self.surface = Some(surface);
        self
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn normal(&self) -> Vec3 {
        self.normal
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn centroid(&self) -> Vec3 {
        self.centroid
    }

    pub fn material(&self) -> MaterialId {
        self.material
    }

    /// The smooth surface this facet approximates, if it belongs to a curved reflector.
    pub fn surface(&self) -> Option<SurfaceId> {
        self.surface
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Signed distance of `p` from the facet plane, positive on the front side.
    #[inline]
    pub fn signed_distance(&self, p: Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }

    /// Mirror image of `p` across the facet plane.
    #[inline]
    pub fn mirror(&self, p: Vec3) -> Vec3 {
        p - self.normal * (2.0 * self.signed_distance(p))
    }

    /// Whether a point lying on the facet plane falls inside the facet
    /// (edges inclusive). Quads are tested as two triangles.
    pub fn contains_planar_point(&self, p: Vec3) -> bool {
        triangles(&self.vertices).any(|[a, b, c]| point_in_triangle(p, a, b, c, self.normal))
    }

    /// Distance along the ray to the facet (either side), if hit beyond `t_min`.
    pub fn intersect(&self, origin: Vec3, dir: Vec3, t_min: f64) -> Option<f64> {
        triangles(&self.vertices)
            .filter_map(|[a, b, c]| ray_triangle(origin, dir, a, b, c))
            .filter(|&t| t > t_min)
            .reduce(f64::min)
    }

    pub(crate) fn bounds(&self) -> (Vec3, Vec3) {
        let first = self.vertices[0];
        self.vertices
            .iter()
            .fold((first, first), |(lo, hi), &v| (lo.min_components(v), hi.max_components(v)))
    }
}

/// Fan triangulation `(v0, v1, v2)`, `(v0, v2, v3)`.
pub(crate) fn triangles(v: &[Vec3]) -> impl Iterator<Item = [Vec3; 3]> + '_ {
    (1..v.len() - 1).map(move |i| [v[0], v[i], v[i + 1]])
}

fn point_in_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3, n: Vec3) -> bool {
    let area2 = (b - a).cross(c - a).dot(n);
    if area2 <= 0.0 {
        return false;
    }
    let w_a = (c - b).cross(p - b).dot(n) / area2;
    let w_b = (a - c).cross(p - c).dot(n) / area2;
    let w_c = 1.0 - w_a - w_b;
    w_a >= -INSIDE_TOL && w_b >= -INSIDE_TOL && w_c >= -INSIDE_TOL
}

/// Möller–Trumbore, two-sided.
fn ray_triangle(origin: Vec3, dir: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let p = dir.cross(e2);
    let det = e1.dot(p);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - a;
    let u = s.dot(p) * inv;
    if !(-INSIDE_TOL..=1.0 + INSIDE_TOL).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = dir.dot(q) * inv;
    if v < -INSIDE_TOL || u + v > 1.0 + INSIDE_TOL {
        return None;
    }
    Some(e2.dot(q) * inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Facet {
        Facet::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            0,
            "square",
        )
        .unwrap()
    }

    #[test]
    fn normal_follows_winding() {
        let f = unit_square();
        assert_eq!(f.normal(), Vec3::Z);
        let v = f.vertices();
        assert!(f.normal().dot((v[1] - v[0]).cross(v[2] - v[0])) > 0.0);
        assert!((f.area() - 1.0).abs() < 1e-15);
        assert_eq!(f.centroid(), Vec3::new(0.5, 0.5, 0.0));
    }

    #[test]
    fn rejects_non_coplanar_quad() {
        let err = Facet::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(1.0, 1.0, 0.01),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            0,
            "warped",
        );
        assert!(matches!(err, Err(GeometryError::InvalidFacet { .. })));
    }

    #[test]
    fn rejects_degenerate() {
        let err = Facet::new(vec![Vec3::ZERO, Vec3::X, Vec3::X * 2.0], 0, "line");
        assert!(err.is_err());
    }

    #[test]
    fn intersect_and_parallel_miss() {
        let f = unit_square();
        let t = f.intersect(Vec3::new(0.5, 0.5, 2.0), -Vec3::Z, 1e-6).unwrap();
        assert!((t - 2.0).abs() < 1e-12);
        // Back side also occludes.
        let t = f.intersect(Vec3::new(0.2, 0.7, -1.0), Vec3::Z, 1e-6).unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        assert!(f.intersect(Vec3::new(0.5, 0.5, 1.0), Vec3::X, 1e-6).is_none());
        assert!(f.intersect(Vec3::new(1.5, 0.5, 1.0), -Vec3::Z, 1e-6).is_none());
    }

    #[test]
    fn mirror_and_contains() {
        let f = unit_square();
        assert_eq!(f.mirror(Vec3::new(0.3, 0.2, 1.5)), Vec3::new(0.3, 0.2, -1.5));
        assert!(f.contains_planar_point(Vec3::new(0.99, 0.01, 0.0)));
        assert!(f.contains_planar_point(Vec3::new(1.0, 1.0, 0.0)));
        assert!(!f.contains_planar_point(Vec3::new(1.01, 0.5, 0.0)));
    }
}

//! Vectors, planar facets, reflector primitives and ray queries.

mod bvh;
mod facet;
mod reflector;
mod vec3;

pub(crate) use bvh::Bvh;
pub use facet::{Facet, FacetId, SurfaceId, COPLANAR_TOL};
pub use reflector::{
    panel_chord_for_arc, tessellate_reflector, Placement, ReflectorShape, ReflectorSpec, SmoothShape, SurfacePoint,
};
pub use vec3::Vec3;

use thiserror::Error;

/// Self-intersection epsilon for ray and segment queries, in meters.
pub const RAY_EPSILON: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid facet `{label}`: {reason}")]
    InvalidFacet { label: String, reason: String },
    #[error("invalid reflector: {0}")]
    InvalidReflector(String),
    #[error("geometry conflict: {0}")]
    Conflict(String),
}

/// Mirror a propagation direction about a surface with unit `normal`.
/// Returns `None` when `incident` does not strike the front face.
pub fn reflect_direction(incident: Vec3, normal: Vec3) -> Option<Vec3> {
    let c = incident.dot(normal);
    if c >= 0.0 {
        return None;
    }
    Some(incident - normal * (2.0 * c))
}

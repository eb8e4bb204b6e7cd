//! Scene assembly: corridor shell, door, reflector and transmitter.

use std::ops::Range;

use thiserror::Error;

use crate::antenna::AntennaPattern;
use crate::config::{ConfigError, DoorWall, ScenarioConfig};
use crate::geometry::{
    tessellate_reflector, Bvh, Facet, FacetId, GeometryError, Placement, ReflectorSpec, SmoothShape, SurfaceId, Vec3,
    RAY_EPSILON,
};
use crate::materials::{MaterialId, MaterialTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error(transparent)]
    Invalid(#[from] ConfigError),
    #[error("geometry conflict: {0}")]
    Conflict(String),
}

impl From<GeometryError> for SceneError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::Conflict(m) => SceneError::Conflict(m),
            GeometryError::InvalidReflector(m) => {
                SceneError::Invalid(ConfigError::Field { field: "reflector".into(), message: m })
            }
            GeometryError::InvalidFacet { label, reason } => SceneError::Conflict(format!("facet `{label}`: {reason}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transmitter {
    pub position: Vec3,
    pub antenna: AntennaPattern,
    pub power_dbm: f64,
}

/// Exact surface of a curved reflector and the block of facets that
/// approximates it.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvedSurface {
    pub shape: SmoothShape,
    pub facets: Range<FacetId>,
    pub material: MaterialId,
}

/// Diffuse-scattering patch: a piece of a facet no larger than the
/// configured patch area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Patch {
    pub facet: FacetId,
    pub center: Vec3,
    pub area: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub facet: FacetId,
    pub point: Vec3,
    pub distance: f64,
}

/// Immutable world queried by the tracer.
#[derive(Debug, Clone)]
pub struct Scene {
    facets: Vec<Facet>,
    bvh: Bvh,
    surfaces: Vec<CurvedSurface>,
    patches: Vec<Patch>,
    materials: MaterialTable,
    frequency_hz: f64,
    tx: Transmitter,
    reflector: Option<Range<FacetId>>,
}

impl Scene {
    /// Assemble a scene from explicit parts. Facets that belong to a curved
    /// surface must already carry its id.
    pub fn new(
        facets: Vec<Facet>,
        surfaces: Vec<CurvedSurface>,
        materials: MaterialTable,
        frequency_hz: f64,
        tx: Transmitter,
        patch_area: f64,
    ) -> Result<Scene, GeometryError> {
        for f in &facets {
            if materials.get(f.material()).is_none() {
                return Err(GeometryError::InvalidFacet {
                    label: f.label().to_string(),
                    reason: format!("material id {} does not resolve", f.material()),
                });
            }
        }
        let bvh = Bvh::build(&facets);
        let patches = facets
            .iter()
            .enumerate()
            .flat_map(|(id, f)| subdivide(f, patch_area).into_iter().map(move |(center, area)| Patch { facet: id, center, area }))
            .collect();
        Ok(Scene { facets, bvh, surfaces, patches, materials, frequency_hz, tx, reflector: None })
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn facet(&self, id: FacetId) -> &Facet {
        &self.facets[id]
    }

    pub fn surfaces(&self) -> &[CurvedSurface] {
        &self.surfaces
    }

    pub fn surface(&self, id: SurfaceId) -> &CurvedSurface {
        &self.surfaces[id]
    }

    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }

    pub fn materials(&self) -> &MaterialTable {
        &self.materials
    }

    pub fn frequency_hz(&self) -> f64 {
        self.frequency_hz
    }

    pub fn wavelength(&self) -> f64 {
        crate::SPEED_OF_LIGHT / self.frequency_hz
    }

    pub fn tx(&self) -> &Transmitter {
        &self.tx
    }

    /// Facets that make up the reflector, if any.
    pub fn reflector_facets(&self) -> Option<Range<FacetId>> {
        self.reflector.clone()
    }

    /// Same scene with the transmitter replaced.
    pub fn with_tx(&self, tx: Transmitter) -> Scene {
        Scene { tx, ..self.clone() }
    }

    /// Nearest facet hit along a ray, beyond the self-intersection epsilon.
    pub fn ray_intersect(&self, origin: Vec3, direction: Vec3) -> Option<Hit> {
        let mut best: Option<(f64, FacetId)> = None;
        self.bvh.visit(origin, direction, f64::INFINITY, |id| {
            if let Some(t) = self.facets[id].intersect(origin, direction, RAY_EPSILON) {
                if best.is_none_or(|(bt, bid)| t < bt || (t == bt && id < bid)) {
                    best = Some((t, id));
                }
            }
            true
        });
        best.map(|(t, facet)| Hit { facet, point: origin + direction * t, distance: t })
    }

    /// Whether the open segment `a → b` crosses no facet, ignoring facets
    /// for which `skip` returns true.
    pub fn segment_clear(&self, a: Vec3, b: Vec3, skip: impl Fn(FacetId) -> bool) -> bool {
        let delta = b - a;
        let len = delta.norm();
        if len <= 2.0 * RAY_EPSILON {
            return true;
        }
        let dir = delta / len;
        let end = len - RAY_EPSILON;
        let mut clear = true;
        self.bvh.visit(a, dir, end, |id| {
            if !skip(id) {
                if let Some(t) = self.facets[id].intersect(a, dir, RAY_EPSILON) {
                    if t < end {
                        clear = false;
                        return false;
                    }
                }
            }
            true
        });
        clear
    }
}

/// Split a facet into patches no larger than `max_area`, returning the
/// center and area of each.
fn subdivide(facet: &Facet, max_area: f64) -> Vec<(Vec3, f64)> {
    if facet.area() <= max_area {
        return vec![(facet.centroid(), facet.area())];
    }
    let v = facet.vertices();
    let side = max_area.sqrt();
    if v.len() == 4 {
        let nu = ((v[1] - v[0]).norm().max((v[2] - v[3]).norm()) / side).ceil().max(1.0) as usize;
        let nv = ((v[3] - v[0]).norm().max((v[2] - v[1]).norm()) / side).ceil().max(1.0) as usize;
        let at = |u: f64, w: f64| v[0] * ((1.0 - u) * (1.0 - w)) + v[1] * (u * (1.0 - w)) + v[2] * (u * w) + v[3] * ((1.0 - u) * w);
        let mut out = Vec::with_capacity(nu * nv);
        for j in 0..nv {
            for i in 0..nu {
                let (u0, u1) = (i as f64 / nu as f64, (i + 1) as f64 / nu as f64);
                let (w0, w1) = (j as f64 / nv as f64, (j + 1) as f64 / nv as f64);
                let q = [at(u0, w0), at(u1, w0), at(u1, w1), at(u0, w1)];
                let area = 0.5 * ((q[1] - q[0]).cross(q[2] - q[0]).norm() + (q[2] - q[0]).cross(q[3] - q[0]).norm());
                out.push((at(0.5 * (u0 + u1), 0.5 * (w0 + w1)), area));
            }
        }
        out
    } else {
        let mut tris = vec![[v[0], v[1], v[2]]];
        while 0.5 * (tris[0][1] - tris[0][0]).cross(tris[0][2] - tris[0][0]).norm() > max_area {
            tris = tris
                .into_iter()
                .flat_map(|[a, b, c]| {
                    let (ab, bc, ca) = ((a + b) * 0.5, (b + c) * 0.5, (c + a) * 0.5);
                    [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
                })
                .collect();
        }
        tris.into_iter()
            .map(|[a, b, c]| ((a + b + c) / 3.0, 0.5 * (b - a).cross(c - a).norm()))
            .collect()
    }
}

fn role_material(materials: &MaterialTable, field: &str, name: &str) -> Result<MaterialId, SceneError> {
    materials.id(name).map_err(|e| {
        SceneError::Invalid(ConfigError::Field { field: format!("materials.{field}"), message: e.to_string() })
    })
}

/// Axis-aligned rectangle facet. `a` and `b` span the rectangle from
/// `origin`; the front face is on the `a × b` side.
fn rect(origin: Vec3, a: Vec3, b: Vec3, material: MaterialId, label: &str) -> Result<Facet, GeometryError> {
    Facet::new(vec![origin, origin + a, origin + a + b, origin + b], material, label)
}

/// Extent of the receiver corridor along `y`.
pub fn corridor_length(cfg: &ScenarioConfig) -> f64 {
    let g = &cfg.geometry;
    g.grid.offset + g.grid.y_extent + g.length_margin
}

/// `x` coordinate of the feeding corridor's end wall.
pub fn feed_end_x(cfg: &ScenarioConfig) -> f64 {
    cfg.tx_position().x - cfg.geometry.feed_margin
}

/// Corridor shell of the L-shaped floor plan, door included.
fn corridor_facets(cfg: &ScenarioConfig, materials: &MaterialTable) -> Result<Vec<Facet>, SceneError> {
    let g = &cfg.geometry;
    let walls = role_material(materials, "walls", &cfg.materials.walls)?;
    let ceiling = role_material(materials, "ceiling", &cfg.materials.ceiling)?;
    let floor = role_material(materials, "floor", &cfg.materials.floor)?;
    let door = role_material(materials, "door", &cfg.materials.door)?;
    let (w, wf, h, len, xe) = (g.corridor_width, g.feed_width, g.ceiling_height, corridor_length(cfg), feed_end_x(cfg));
    let (x, y, z) = (Vec3::X, Vec3::Y, Vec3::Z);
    let mut f = vec![
        rect(Vec3::new(0.0, -wf, 0.0), x * w, y * (len + wf), floor, "main floor")?,
        rect(Vec3::new(xe, -wf, 0.0), x * -xe, y * wf, floor, "feed floor")?,
        rect(Vec3::new(0.0, -wf, h), y * (len + wf), x * w, ceiling, "main ceiling")?,
        rect(Vec3::new(xe, -wf, h), y * wf, x * -xe, ceiling, "feed ceiling")?,
        rect(Vec3::new(w, -wf, 0.0), z * h, y * (len + wf), walls, "outer wall")?,
        rect(Vec3::new(0.0, 0.0, 0.0), y * len, z * h, walls, "inner wall")?,
        rect(Vec3::new(xe, -wf, 0.0), z * h, x * (w - xe), walls, "top wall")?,
        rect(Vec3::new(xe, 0.0, 0.0), x * -xe, z * h, walls, "feed wall")?,
        rect(Vec3::new(0.0, len, 0.0), x * w, z * h, walls, "main end wall")?,
    ];
    // End wall of the feeding corridor, optionally split around a door.
    let (feed_origin, feed_along, feed_up) = (Vec3::new(xe, -wf, 0.0), y, z);
    let (main_origin, main_along, main_up) = (Vec3::new(0.0, len, 0.0), x, z);
    match &g.door {
        None => f.push(rect(feed_origin, feed_along * wf, feed_up * h, walls, "feed end wall")?),
        Some(d) => {
            let (origin, along, up, span, label) = match d.wall {
                DoorWall::FeedEnd => (feed_origin, feed_along, feed_up, wf, "feed end wall"),
                DoorWall::MainEnd => {
                    f.pop();
                    f.push(rect(feed_origin, feed_along * wf, feed_up * h, walls, "feed end wall")?);
                    (main_origin, main_along, main_up, w, "main end wall")
                }
            };
            let front = |o: Vec3, a: Vec3, b: Vec3, m: MaterialId, l: &str| rect(o, a, b, m, l);
            let (lo, hi) = (d.center - 0.5 * d.width, d.center + 0.5 * d.width);
            f.push(front(origin, along * lo, up * h, walls, label)?);
            f.push(front(origin + along * hi, along * (span - hi), up * h, walls, label)?);
            f.push(front(origin + along * lo + up * d.height, along * d.width, up * (h - d.height), walls, label)?);
            f.push(front(origin + along * lo, along * d.width, up * d.height, door, "door")?);
        }
    }
    Ok(f)
}

/// Whether `p` lies strictly inside the corridor air volume.
fn inside_corridor(cfg: &ScenarioConfig, p: Vec3) -> bool {
    let g = &cfg.geometry;
    let (w, wf, h, len, xe) = (g.corridor_width, g.feed_width, g.ceiling_height, corridor_length(cfg), feed_end_x(cfg));
    let in_z = p.z > 0.0 && p.z < h;
    let in_main = p.x > 0.0 && p.x < w && p.y > -wf && p.y < len;
    let in_feed = p.x > xe && p.x <= 0.0 && p.y > -wf && p.y < 0.0;
    in_z && (in_main || in_feed)
}

pub fn reflector_spec(cfg: &ScenarioConfig) -> Option<ReflectorSpec> {
    cfg.reflector.as_ref().map(|r| ReflectorSpec {
        shape: r.shape,
        placement: Placement {
            position: r.position.unwrap_or_else(|| cfg.anchor()),
            azimuth_deg: r.azimuth_deg,
            elevation_deg: r.elevation_deg,
        },
    })
}

/// Reflector center, or the anchor point when there is no reflector.
pub fn aim_point(cfg: &ScenarioConfig) -> Vec3 {
    reflector_spec(cfg).map_or_else(|| cfg.anchor(), |s| s.placement.position)
}

/// Build the scene for a validated configuration. `materials` must hold
/// every material named in the config; a lobe-exponent override in the
/// config is applied here.
pub fn build_scene(cfg: &ScenarioConfig, materials: &MaterialTable) -> Result<Scene, SceneError> {
    let materials = match cfg.sim.lobe_exponent {
        Some(e) => materials.with_lobe_exponent(e),
        None => materials.clone(),
    };
    let mut facets = corridor_facets(cfg, &materials)?;
    let shell_len = facets.len();
    let tx_pos = cfg.tx_position();
    if !inside_corridor(cfg, tx_pos) {
        return Err(SceneError::Conflict(format!("transmitter {tx_pos:?} lies outside the corridor")));
    }
    let mut surfaces = Vec::new();
    let mut reflector = None;
    if let Some(spec) = reflector_spec(cfg) {
        let material = role_material(&materials, "reflector", &cfg.materials.reflector)?;
        let refl = tessellate_reflector(&spec, cfg.sim.max_facet_angle_deg, material)?;
        check_reflector_clearance(cfg, &facets[..shell_len], &refl)?;
        let start = facets.len();
        match spec.smooth_surface(cfg.sim.max_facet_angle_deg) {
            Some(shape) => {
                facets.extend(refl.into_iter().map(|f| f.with_surface(0)));
                surfaces.push(CurvedSurface { shape, facets: start..facets.len(), material });
            }
            None => facets.extend(refl),
        }
        reflector = Some(start..facets.len());
    }
    let aim = aim_point(cfg) - tx_pos;
    let antenna = cfg.rf.tx_antenna.aimed(aim).map_err(|e| {
        SceneError::Invalid(ConfigError::Field { field: "rf.antenna".into(), message: e.to_string() })
    })?;
    let tx = Transmitter { position: tx_pos, antenna, power_dbm: cfg.rf.tx_power_dbm };
    let mut scene = Scene::new(facets, surfaces, materials, cfg.rf.frequency_hz, tx, cfg.sim.patch_area)?;
    scene.reflector = reflector;
    if let Some(r) = scene.reflector.clone() {
        if !scene.segment_clear(tx_pos, tx_pos + (aim_point(cfg) - tx_pos) * 0.999, |id| r.contains(&id)) {
            return Err(SceneError::Conflict("the transmitter has no clear line of sight to the reflector".into()));
        }
    }
    Ok(scene)
}

fn check_reflector_clearance(cfg: &ScenarioConfig, shell: &[Facet], reflector: &[Facet]) -> Result<(), SceneError> {
    for f in reflector {
        for &v in f.vertices() {
            if !inside_corridor(cfg, v) {
                return Err(SceneError::Conflict(format!(
                    "reflector vertex ({:.3}, {:.3}, {:.3}) lies outside the corridor",
                    v.x, v.y, v.z
                )));
            }
        }
        let n = f.vertices().len();
        for i in 0..n {
            let (a, b) = (f.vertices()[i], f.vertices()[(i + 1) % n]);
            let len = (b - a).norm();
            let dir = (b - a) / len;
            if let Some(wall) = shell.iter().find(|w| w.intersect(a, dir, 0.0).is_some_and(|t| t <= len)) {
                return Err(SceneError::Conflict(format!("reflector intersects the {}", wall.label())));
            }
        }
    }
    Ok(())
}

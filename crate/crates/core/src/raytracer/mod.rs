//! Multipath search and scoring: image-method specular paths (with exact
//! curved-surface bounces), single-bounce directive diffuse scattering, and
//! per-path received power and delay.

mod impulse;

pub use impulse::{impulse_response, ImpulseResponse, BIN_WIDTH_S, MAX_EXCESS_DELAY_S};

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::antenna::AntennaPattern;
use crate::geometry::{FacetId, SurfaceId, Vec3};
use crate::materials::{diffuse_lobe_gain, fresnel_coefficients, specular_factor, DiffuseGeometry, LobeNormalizer, Material};
use crate::scene::Scene;
use crate::SPEED_OF_LIGHT;

/// Default total path-loss budget; weaker paths are discarded.
pub const MAX_PATH_LOSS_DB: f64 = 185.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PathKind {
    Los,
    Specular(usize),
    Diffuse,
}

impl PathKind {
    pub fn order(&self) -> usize {
        match *self {
            PathKind::Los => 0,
            PathKind::Specular(k) => k,
            PathKind::Diffuse => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PathKind::Los => "los",
            PathKind::Specular(_) => "specular",
            PathKind::Diffuse => "diffuse",
        }
    }
}

/// One surface interaction along a path. Amplitudes are the effective
/// (specular-share) reflection coefficients; diffuse interactions carry the
/// scattering coefficient in both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interaction {
    pub facet: FacetId,
    pub point: Vec3,
    pub incidence_angle: f64,
    pub amplitude_perp: Complex64,
    pub amplitude_par: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathComponent {
    pub kind: PathKind,
    /// Tx, interaction points, Rx.
    pub vertices: Vec<Vec3>,
    pub delay_s: f64,
    pub power_dbm: f64,
    pub interactions: Vec<Interaction>,
}

impl PathComponent {
    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| w[0].distance(w[1])).sum()
    }

    pub fn facet_ids(&self) -> Vec<FacetId> {
        self.interactions.iter().map(|i| i.facet).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Receiver {
    pub position: Vec3,
    pub antenna: AntennaPattern,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSettings {
    pub max_order: usize,
    pub max_path_loss_db: f64,
    pub diffuse: bool,
}

impl Default for TraceSettings {
    fn default() -> Self {
        TraceSettings { max_order: 3, max_path_loss_db: MAX_PATH_LOSS_DB, diffuse: true }
    }
}

/// Free-space path loss in dB, `20·log₁₀(4πd/λ)`.
pub fn free_space_loss_db(distance: f64, wavelength: f64) -> f64 {
    20.0 * (4.0 * PI * distance / wavelength).log10()
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Node of an image tree: the image of a source point after mirroring
/// across `facet` and all ancestors.
#[derive(Debug, Clone, Copy)]
struct ImageNode {
    parent: Option<usize>,
    facet: FacetId,
    image: Vec3,
    depth: usize,
}

/// Images of `source` across ordered sequences of planar facets, depth-first
/// in lexicographic facet order. A sequence is kept only while each source
/// image lies in front of the next facet.
fn image_tree(scene: &Scene, planar: &[FacetId], source: Vec3, max_depth: usize) -> Vec<ImageNode> {
    fn expand(
        scene: &Scene,
        planar: &[FacetId],
        nodes: &mut Vec<ImageNode>,
        parent: Option<usize>,
        source: Vec3,
        prev: Option<FacetId>,
        depth: usize,
        max_depth: usize,
    ) {
        for &f in planar {
            if Some(f) == prev {
                continue;
            }
            let facet = scene.facet(f);
            if facet.signed_distance(source) <= crate::geometry::RAY_EPSILON {
                continue;
            }
            let image = facet.mirror(source);
            nodes.push(ImageNode { parent, facet: f, image, depth: depth + 1 });
            if depth + 1 < max_depth {
                let idx = nodes.len() - 1;
                expand(scene, planar, nodes, Some(idx), image, Some(f), depth + 1, max_depth);
            }
        }
    }
    let mut nodes = Vec::new();
    if max_depth > 0 {
        expand(scene, planar, &mut nodes, None, source, None, 0, max_depth);
    }
    nodes
}

/// `(facet, image)` pairs from the source outward, ending at `node`.
fn chain(nodes: &[ImageNode], node: Option<usize>) -> Vec<(FacetId, Vec3)> {
    let mut out = Vec::new();
    let mut cur = node;
    while let Some(i) = cur {
        out.push((nodes[i].facet, nodes[i].image));
        cur = nodes[i].parent;
    }
    out.reverse();
    out
}

/// Reflection points of an image chain toward `end`, ordered from the
/// source side. `None` when a crossing misses its facet.
fn unfold(scene: &Scene, chain: &[(FacetId, Vec3)], end: Vec3) -> Option<Vec<Vec3>> {
    let mut target = end;
    let mut points = vec![Vec3::ZERO; chain.len()];
    for (j, &(f, image)) in chain.iter().enumerate().rev() {
        let facet = scene.facet(f);
        let (st, si) = (facet.signed_distance(target), facet.signed_distance(image));
        if st <= 0.0 || si >= 0.0 {
            return None;
        }
        let p = target + (image - target) * (st / (st - si));
        if !facet.contains_planar_point(p) {
            return None;
        }
        points[j] = p;
        target = p;
    }
    Some(points)
}

/// What a path vertex sits on, for occlusion bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Anchor {
    Free,
    Facet(FacetId),
    Surface(SurfaceId),
}

/// Complex field vector.
#[derive(Debug, Clone, Copy)]
struct Field {
    x: Complex64,
    y: Complex64,
    z: Complex64,
}

impl Field {
    fn real(v: Vec3) -> Field {
        Field { x: v.x.into(), y: v.y.into(), z: v.z.into() }
    }

    fn dot(&self, v: Vec3) -> Complex64 {
        self.x * v.x + self.y * v.y + self.z * v.z
    }

    fn norm_sqr(&self) -> f64 {
        self.x.norm_sqr() + self.y.norm_sqr() + self.z.norm_sqr()
    }
}

fn scaled(v: Vec3, a: Complex64) -> Field {
    Field { x: a * v.x, y: a * v.y, z: a * v.z }
}

fn add(a: Field, b: Field) -> Field {
    Field { x: a.x + b.x, y: a.y + b.y, z: a.z + b.z }
}

/// Vertical linear polarization transverse to `direction`.
fn vertical_polarization(direction: Vec3) -> Option<Vec3> {
    (Vec3::Z - direction * direction.z).try_normalize()
}

/// A specular bounce as seen by the scorer.
#[derive(Debug, Clone, Copy)]
struct Bounce {
    facet: FacetId,
    normal: Vec3,
    material: usize,
}

#[derive(Debug, Clone, Copy)]
struct Illumination {
    patch: usize,
    density_mw_m2: f64,
    incident: Vec3,
    distance: f64,
}

/// Path finder bound to one scene and transmitter. Construction
/// precomputes everything that does not depend on the receiver.
pub struct Tracer<'s> {
    scene: &'s Scene,
    settings: TraceSettings,
    planar: Vec<FacetId>,
    tx_images: Vec<ImageNode>,
    illuminated: Vec<Illumination>,
    normalizers: BTreeMap<u32, LobeNormalizer>,
    floor_dbm_base: f64,
}

impl<'s> Tracer<'s> {
    pub fn new(scene: &'s Scene, settings: TraceSettings) -> Tracer<'s> {
        let planar: Vec<FacetId> = (0..scene.facets().len()).filter(|&i| scene.facet(i).surface().is_none()).collect();
        let tx = scene.tx();
        let tx_images = image_tree(scene, &planar, tx.position, settings.max_order);
        let mut normalizers = BTreeMap::new();
        for m in scene.materials().iter() {
            normalizers.entry(m.lobe_exponent).or_insert_with(|| LobeNormalizer::new(m.lobe_exponent));
        }
        let p_tx_mw = dbm_to_mw(tx.power_dbm);
        let illuminated = if settings.diffuse {
            scene
                .patches()
                .iter()
                .enumerate()
                .filter_map(|(i, p)| {
                    let facet = scene.facet(p.facet);
                    let v = p.center - tx.position;
                    let distance = v.norm();
                    let incident = v / distance;
                    if incident.dot(facet.normal()) >= 0.0 || !scene.segment_clear(tx.position, p.center, |id| id == p.facet) {
                        return None;
                    }
                    let gain = dbm_to_mw(tx.antenna.gain_dbi(incident));
                    let density_mw_m2 = p_tx_mw * gain / (4.0 * PI * distance * distance);
                    Some(Illumination { patch: i, density_mw_m2, incident, distance })
                })
                .collect()
        } else {
            Vec::new()
        };
        Tracer {
            scene,
            settings,
            planar,
            tx_images,
            illuminated,
            normalizers,
            floor_dbm_base: tx.power_dbm + tx.antenna.boresight_gain_dbi() - settings.max_path_loss_db,
        }
    }

    pub fn scene(&self) -> &Scene {
        self.scene
    }

    /// Weakest power kept for a receiver with the given antenna.
    pub fn floor_dbm(&self, rx: &Receiver) -> f64 {
        self.floor_dbm_base + rx.antenna.boresight_gain_dbi()
    }

    /// All paths: LOS, specular (planar then curved), then diffuse.
    pub fn trace(&self, rx: &Receiver) -> Vec<PathComponent> {
        let mut paths = self.trace_specular(rx);
        paths.extend(self.trace_diffuse(rx));
        paths
    }

    /// LOS and image-method specular paths up to the configured order.
    pub fn trace_specular(&self, rx: &Receiver) -> Vec<PathComponent> {
        let scene = self.scene;
        let tx = scene.tx().position;
        let floor = self.floor_dbm(rx);
        let mut out = Vec::new();
        if scene.segment_clear(tx, rx.position, |_| false) {
            let d = tx.distance(rx.position);
            out.extend(self.score(&[tx, rx.position], &[], 1.0 / d, rx).filter(|p| p.power_dbm >= floor));
        }
        for idx in 0..self.tx_images.len() {
            let ch = chain(&self.tx_images, Some(idx));
            let Some(points) = unfold(scene, &ch, rx.position) else { continue };
            let mut verts = Vec::with_capacity(points.len() + 2);
            verts.push(tx);
            verts.extend(&points);
            verts.push(rx.position);
            let anchors: Vec<Anchor> = std::iter::once(Anchor::Free)
                .chain(ch.iter().map(|&(f, _)| Anchor::Facet(f)))
                .chain(std::iter::once(Anchor::Free))
                .collect();
            if !self.segments_clear(&verts, &anchors) {
                continue;
            }
            let bounces: Vec<Bounce> = ch.iter().map(|&(f, _)| self.planar_bounce(f)).collect();
            let d = self.tx_images[idx].image.distance(rx.position);
            out.extend(self.score(&verts, &bounces, 1.0 / d, rx).filter(|p| p.power_dbm >= floor));
        }
        if !scene.surfaces().is_empty() && self.settings.max_order > 0 {
            out.extend(self.trace_curved(rx).into_iter().filter(|p| p.power_dbm >= floor));
        }
        out
    }

    /// Paths with exactly one bounce on a curved reflector, preceded and
    /// followed by planar bounces, total order within the limit.
    fn trace_curved(&self, rx: &Receiver) -> Vec<PathComponent> {
        let scene = self.scene;
        let tx = scene.tx().position;
        let budget = self.settings.max_order - 1;
        let rx_images = image_tree(scene, &self.planar, rx.position, budget);
        let prefixes = std::iter::once(None).chain(
            (0..self.tx_images.len()).filter(|&i| self.tx_images[i].depth <= budget).map(Some),
        );
        let mut out = Vec::new();
        for prefix in prefixes {
            let pre = chain(&self.tx_images, prefix);
            let source = pre.last().map_or(tx, |&(_, img)| img);
            let suffixes = std::iter::once(None)
                .chain((0..rx_images.len()).filter(|&i| rx_images[i].depth + pre.len() <= budget).map(Some));
            for suffix in suffixes {
                let post = chain(&rx_images, suffix);
                let sink = post.last().map_or(rx.position, |&(_, img)| img);
                for (sid, surface) in scene.surfaces().iter().enumerate() {
                    let Some(sp) = surface.shape.specular_point(source, sink) else { continue };
                    let Some(before) = unfold(scene, &pre, sp.point) else { continue };
                    let Some(mut after) = unfold(scene, &post, sp.point) else { continue };
                    after.reverse();
                    let mut verts = vec![tx];
                    verts.extend(&before);
                    verts.push(sp.point);
                    verts.extend(&after);
                    verts.push(rx.position);
                    let mut anchors = vec![Anchor::Free];
                    anchors.extend(pre.iter().map(|&(f, _)| Anchor::Facet(f)));
                    anchors.push(Anchor::Surface(sid));
                    anchors.extend(post.iter().rev().map(|&(f, _)| Anchor::Facet(f)));
                    anchors.push(Anchor::Free);
                    if !self.segments_clear(&verts, &anchors) {
                        continue;
                    }
                    let mut bounces: Vec<Bounce> = pre.iter().map(|&(f, _)| self.planar_bounce(f)).collect();
                    bounces.push(Bounce {
                        facet: surface.facets.start + sp.facet_offset,
                        normal: sp.normal,
                        material: surface.material,
                    });
                    bounces.extend(post.iter().rev().map(|&(f, _)| self.planar_bounce(f)));
                    let (s1, s2) = (source.distance(sp.point), sink.distance(sp.point));
                    let cos_i = (sp.point - source).normalize().dot(-sp.normal).clamp(1e-12, 1.0);
                    let amplitude = divergence_amplitude(s1, s2, cos_i, sp.radius_in_plane, sp.radius_across);
                    out.extend(self.score(&verts, &bounces, amplitude, rx));
                }
            }
        }
        out
    }

    /// Single-bounce diffuse paths via every patch visible from both ends.
    pub fn trace_diffuse(&self, rx: &Receiver) -> Vec<PathComponent> {
        let scene = self.scene;
        let floor = self.floor_dbm(rx);
        let lambda = scene.wavelength();
        let rx_aperture = lambda * lambda / (4.0 * PI);
        let tx = scene.tx().position;
        let mut out = Vec::new();
        for il in &self.illuminated {
            let patch = scene.patches()[il.patch];
            let facet = scene.facet(patch.facet);
            let n = facet.normal();
            let w = rx.position - patch.center;
            let d2 = w.norm();
            let scatter = w / d2;
            if scatter.dot(n) <= 0.0 || !scene.segment_clear(patch.center, rx.position, |id| id == patch.facet) {
                continue;
            }
            let material = self.material(facet.material());
            let normalizer = &self.normalizers[&material.lobe_exponent];
            let geometry = DiffuseGeometry { normal: n, incident: il.incident, scatter };
            let density = diffuse_lobe_gain(
                normalizer,
                material.scattering_coefficient,
                il.density_mw_m2,
                patch.area,
                &geometry,
                d2,
            );
            if density <= 0.0 {
                continue;
            }
            let power = density * rx_aperture * dbm_to_mw(rx.antenna.gain_dbi(-scatter));
            let power_dbm = mw_to_dbm(power);
            if power_dbm < floor {
                continue;
            }
            let s = Complex64::new(material.scattering_coefficient, 0.0);
            out.push(PathComponent {
                kind: PathKind::Diffuse,
                vertices: vec![tx, patch.center, rx.position],
                delay_s: (il.distance + d2) / SPEED_OF_LIGHT,
                power_dbm,
                interactions: vec![Interaction {
                    facet: patch.facet,
                    point: patch.center,
                    incidence_angle: (-il.incident.dot(n)).clamp(-1.0, 1.0).acos(),
                    amplitude_perp: s,
                    amplitude_par: s,
                }],
            });
        }
        out
    }

    fn material(&self, id: usize) -> &Material {
        self.scene.materials().get(id).expect("scene materials resolve")
    }

    fn planar_bounce(&self, f: FacetId) -> Bounce {
        let facet = self.scene.facet(f);
        Bounce { facet: f, normal: facet.normal(), material: facet.material() }
    }

    fn segments_clear(&self, verts: &[Vec3], anchors: &[Anchor]) -> bool {
        let scene = self.scene;
        let skips = |a: Anchor, id: FacetId| match a {
            Anchor::Free => false,
            Anchor::Facet(f) => f == id,
            Anchor::Surface(s) => scene.surface(s).facets.contains(&id),
        };
        verts.windows(2).zip(anchors.windows(2)).all(|(v, a)| {
            let (a0, a1) = (a[0], a[1]);
            scene.segment_clear(v[0], v[1], |id| skips(a0, id) || skips(a1, id))
        })
    }

    /// Received power of a specular chain: antenna gains, spreading
    /// amplitude (`1/d` unfolded, or the curved-surface equivalent),
    /// polarization-tracked reflection coefficients and the receiver's
    /// vertical co-polar projection.
    fn score(&self, verts: &[Vec3], bounces: &[Bounce], spread_amplitude: f64, rx: &Receiver) -> Option<PathComponent> {
        let scene = self.scene;
        let tx = scene.tx();
        let f = scene.frequency_hz();
        let depart = (verts[1] - verts[0]).try_normalize()?;
        let mut field = Field::real(vertical_polarization(depart).unwrap_or_else(|| depart.any_perpendicular()));
        let mut interactions = Vec::with_capacity(bounces.len());
        for (j, b) in bounces.iter().enumerate() {
            let d_in = (verts[j + 1] - verts[j]).try_normalize()?;
            let d_out = (verts[j + 2] - verts[j + 1]).try_normalize()?;
            let cos_i = -d_in.dot(b.normal);
            if cos_i <= 0.0 || d_out.dot(b.normal) <= 0.0 {
                return None;
            }
            let theta = cos_i.min(1.0).acos();
            let material = self.material(b.material);
            let gamma = specular_factor(material, &fresnel_coefficients(material, f, theta));
            let s = d_in.cross(b.normal).try_normalize().unwrap_or_else(|| b.normal.any_perpendicular());
            let (p_in, p_out) = (s.cross(d_in), s.cross(d_out));
            field = add(scaled(s, gamma.gamma_perp * field.dot(s)), scaled(p_out, gamma.gamma_par * field.dot(p_in)));
            interactions.push(Interaction {
                facet: b.facet,
                point: verts[j + 1],
                incidence_angle: theta,
                amplitude_perp: gamma.gamma_perp,
                amplitude_par: gamma.gamma_par,
            });
        }
        let arrive = (verts[verts.len() - 1] - verts[verts.len() - 2]).try_normalize()?;
        let pol = match vertical_polarization(arrive) {
            Some(v) => field.dot(v).norm_sqr(),
            None => field.norm_sqr(),
        };
        let lambda = scene.wavelength();
        let spreading_db = 20.0 * (lambda * spread_amplitude / (4.0 * PI)).log10();
        let power_dbm =
            tx.power_dbm + tx.antenna.gain_dbi(depart) + rx.antenna.gain_dbi(-arrive) + spreading_db + 10.0 * pol.log10();
        let length: f64 = verts.windows(2).map(|w| w[0].distance(w[1])).sum();
        let kind = if bounces.is_empty() { PathKind::Los } else { PathKind::Specular(bounces.len()) };
        Some(PathComponent { kind, vertices: verts.to_vec(), delay_s: length / SPEED_OF_LIGHT, power_dbm, interactions })
    }
}

/// Field amplitude factor for a reflection off a doubly curved convex
/// surface, replacing `1/(s1 + s2)` of a plane mirror. `s1` and `s2` are the
/// unfolded distances before and after the bounce, `r_in` and `r_across`
/// the principal radii in and across the plane of incidence.
pub fn divergence_amplitude(s1: f64, s2: f64, cos_incidence: f64, r_in: f64, r_across: f64) -> f64 {
    let k_in = 2.0 / (r_in * cos_incidence);
    let k_across = 2.0 * cos_incidence / r_across;
    let sum = s1 + s2;
    1.0 / ((sum + k_in * s1 * s2) * (sum + k_across * s1 * s2)).sqrt()
}

#[cfg(test)]
mod tests;

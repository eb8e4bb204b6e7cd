//! Frequency-dependent material models: complex permittivity, Fresnel
//! reflection, and the split of reflected energy between the specular ray
//! and a directive diffuse lobe.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec3;

/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

pub type MaterialId = usize;

const DEFAULT_TABLE: &str = include_str!("../../../materials/itu_28ghz.json");

#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("cannot read material table {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed material table: {0}")]
    Parse(String),
    #[error("material `{name}`: {reason}")]
    Invalid { name: String, reason: String },
    #[error("unknown material `{0}`")]
    Unknown(String),
}

/// Electromagnetic description of a surface material.
///
/// Conductivity follows `σ(f) = sigma_a · f_GHz^sigma_b` S/m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    pub name: String,
    pub eps_r: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub scattering_coefficient: f64,
    pub lobe_exponent: u32,
    #[serde(default)]
    pub perfect_conductor: bool,
}

impl Material {
    /// A lossless dielectric, mostly useful for tests.
    pub fn lossless(name: &str, eps_r: f64, scattering_coefficient: f64) -> Material {
        Material {
            name: name.into(),
            eps_r,
            sigma_a: 0.0,
            sigma_b: 0.0,
            scattering_coefficient,
            lobe_exponent: 4,
            perfect_conductor: false,
        }
    }

    pub fn perfect_conductor(name: &str, scattering_coefficient: f64) -> Material {
        Material { perfect_conductor: true, eps_r: 1.0, ..Material::lossless(name, 1.0, scattering_coefficient) }
    }

    pub fn conductivity(&self, frequency_hz: f64) -> f64 {
        self.sigma_a * (frequency_hz * 1e-9).powf(self.sigma_b)
    }

    fn validate(&self) -> Result<(), MaterialError> {
        let fail = |reason: String| Err(MaterialError::Invalid { name: self.name.clone(), reason });
        if !(0.0..=1.0).contains(&self.scattering_coefficient) {
            return fail(format!("scattering_coefficient {} outside [0, 1]", self.scattering_coefficient));
        }
        if !(self.eps_r >= 1.0) {
            return fail(format!("eps_r {} below 1", self.eps_r));
        }
        if !(self.sigma_a >= 0.0) || !self.sigma_b.is_finite() {
            return fail("conductivity must be non-negative".into());
        }
        if self.lobe_exponent == 0 {
            return fail("lobe_exponent must be a positive integer".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Permittivity {
    Finite(Complex64),
    PerfectConductor,
}

/// `ε = ε_r − j·σ(f)/(2πf·ε₀)`, or the perfect-conductor sentinel.
pub fn complex_permittivity(material: &Material, frequency_hz: f64) -> Permittivity {
    if material.perfect_conductor {
        return Permittivity::PerfectConductor;
    }
    let loss = material.conductivity(frequency_hz) / (TAU * frequency_hz * EPSILON_0);
    Permittivity::Finite(Complex64::new(material.eps_r, -loss))
}

/// Reflection coefficients for the electric field components perpendicular
/// and parallel to the plane of incidence.
///
/// The parallel component uses the convention in which a perfect conductor
/// gives `+1` (the reflected parallel basis vector is `s × d_out`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FresnelResult {
    pub gamma_perp: Complex64,
    pub gamma_par: Complex64,
}

/// Fresnel coefficients at an air/material interface; `incidence_angle` is
/// measured from the surface normal, in radians.
pub fn fresnel_coefficients(material: &Material, frequency_hz: f64, incidence_angle: f64) -> FresnelResult {
    let eps = match complex_permittivity(material, frequency_hz) {
        Permittivity::PerfectConductor => {
            return FresnelResult { gamma_perp: Complex64::new(-1.0, 0.0), gamma_par: Complex64::new(1.0, 0.0) }
        }
        Permittivity::Finite(e) => e,
    };
    let (sin, cos) = incidence_angle.sin_cos();
    let root = (eps - sin * sin).sqrt();
    FresnelResult {
        gamma_perp: (cos - root) / (cos + root),
        gamma_par: (eps * cos - root) / (eps * cos + root),
    }
}

/// Specular amplitudes once the diffuse share is removed: `Γ·√(1 − S²)`.
pub fn specular_factor(material: &Material, fresnel: &FresnelResult) -> FresnelResult {
    let keep = (1.0 - material.scattering_coefficient.powi(2)).sqrt();
    FresnelResult { gamma_perp: fresnel.gamma_perp * keep, gamma_par: fresnel.gamma_par * keep }
}

/// Normalization of the directive lobe `((1 + cos ψ)/2)^α` over the front
/// hemisphere, tabulated against the specular direction's angle from the
/// normal so that the normalized lobe integrates to one.
#[derive(Debug, Clone, PartialEq)]
pub struct LobeNormalizer {
    exponent: u32,
    table: Vec<f64>,
}

const LOBE_TABLE_STEPS: usize = 360;
const LOBE_THETA_STEPS: usize = 2048;

impl LobeNormalizer {
    pub fn new(exponent: u32) -> LobeNormalizer {
        assert!(exponent > 0, "lobe exponent must be positive");
        // ∫₀^{2π} (a + b cos φ)^α dφ, expanded binomially; odd powers of cos vanish.
        let binom: Vec<f64> = (0..=exponent).map(|k| binomial(exponent, k)).collect();
        let cos_moments: Vec<f64> = (0..=exponent)
            .map(|k| if k % 2 == 1 { 0.0 } else { TAU * double_factorial_ratio(k) })
            .collect();
        let azimuthal = |a: f64, b: f64| {
            (0..=exponent as usize)
                .step_by(2)
                .map(|k| binom[k] * a.powi((exponent as usize - k) as i32) * b.powi(k as i32) * cos_moments[k])
                .sum::<f64>()
        };
        let table = (0..=LOBE_TABLE_STEPS)
            .map(|i| {
                let ts = 0.5 * PI * i as f64 / LOBE_TABLE_STEPS as f64;
                let (ss, cs) = ts.sin_cos();
                simpson(0.0, 0.5 * PI, LOBE_THETA_STEPS, |t| {
                    let (st, ct) = t.sin_cos();
                    st * azimuthal(0.5 * (1.0 + ct * cs), 0.5 * st * ss)
                })
            })
            .collect();
        LobeNormalizer { exponent, table }
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    /// Hemisphere integral of the unnormalized lobe whose peak sits
    /// `specular_angle` (radians) from the normal.
    pub fn integral(&self, specular_angle: f64) -> f64 {
        let x = (specular_angle.clamp(0.0, 0.5 * PI) / (0.5 * PI)) * LOBE_TABLE_STEPS as f64;
        let i = (x.floor() as usize).min(LOBE_TABLE_STEPS - 1);
        let frac = x - i as f64;
        self.table[i] * (1.0 - frac) + self.table[i + 1] * frac
    }

    pub fn lobe(&self, cos_psi: f64) -> f64 {
        (0.5 * (1.0 + cos_psi.clamp(-1.0, 1.0))).powi(self.exponent as i32)
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `(k−1)!! / k!!` for even `k` (1 for `k = 0`).
fn double_factorial_ratio(k: u32) -> f64 {
    (1..=k / 2).fold(1.0, |acc, j| acc * (2 * j - 1) as f64 / (2 * j) as f64)
}

fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Geometry of one diffuse interaction. Directions are unit vectors:
/// `incident` propagates toward the surface, `scatter` leaves it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffuseGeometry {
    pub normal: Vec3,
    pub incident: Vec3,
    pub scatter: Vec3,
}

/// Power density (W/m²) at distance `distance_to_rx` from a patch of area
/// `facet_area` illuminated by `incident_power_density` (W/m², measured
/// across the incoming ray), under the directive scattering model.
///
/// The patch intercepts `density · area · cos θᵢ`; a fraction `S²` of that
/// is re-radiated into the lobe centered on the specular direction.
/// Back-facing geometry returns zero.
pub fn diffuse_lobe_gain(
    normalizer: &LobeNormalizer,
    scattering_coefficient: f64,
    incident_power_density: f64,
    facet_area: f64,
    geometry: &DiffuseGeometry,
    distance_to_rx: f64,
) -> f64 {
    let cos_in = -geometry.incident.dot(geometry.normal);
    let cos_out = geometry.scatter.dot(geometry.normal);
    if cos_in <= 0.0 || cos_out <= 0.0 {
        return 0.0;
    }
    let specular = geometry.incident - geometry.normal * (2.0 * geometry.incident.dot(geometry.normal));
    let intercepted = incident_power_density * facet_area * cos_in;
    let lobe = normalizer.lobe(geometry.scatter.dot(specular)) / normalizer.integral(cos_in.clamp(-1.0, 1.0).acos());
    scattering_coefficient.powi(2) * intercepted * lobe / (distance_to_rx * distance_to_rx)
}

/// Named materials in a fixed order; facets refer to them by index.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialTable {
    materials: Vec<Material>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TableFile {
    #[allow(dead_code)]
    schema: Option<u32>,
    #[allow(dead_code)]
    provenance: Option<String>,
    materials: Vec<Material>,
}

impl MaterialTable {
    pub fn new(materials: Vec<Material>) -> Result<MaterialTable, MaterialError> {
        for (i, m) in materials.iter().enumerate() {
            m.validate()?;
            if materials[..i].iter().any(|o| o.name == m.name) {
                return Err(MaterialError::Invalid { name: m.name.clone(), reason: "duplicate name".into() });
            }
        }
        Ok(MaterialTable { materials })
    }

    /// The shipped ITU-based 28 GHz table.
    pub fn itu_defaults() -> MaterialTable {
        MaterialTable::from_json(DEFAULT_TABLE).expect("shipped material table is valid")
    }

    pub fn from_json(text: &str) -> Result<MaterialTable, MaterialError> {
        let file: TableFile = serde_json::from_str(text).map_err(|e| MaterialError::Parse(e.to_string()))?;
        MaterialTable::new(file.materials)
    }

    pub fn from_path(path: &Path) -> Result<MaterialTable, MaterialError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| MaterialError::Io { path: path.display().to_string(), source })?;
        MaterialTable::from_json(&text)
    }

    pub fn id(&self, name: &str) -> Result<MaterialId, MaterialError> {
        self.materials.iter().position(|m| m.name == name).ok_or_else(|| MaterialError::Unknown(name.into()))
    }

    pub fn get(&self, id: MaterialId) -> Option<&Material> {
        self.materials.get(id)
    }

    pub fn len(&self) -> usize {
        self.materials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.materials.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Material> {
        self.materials.iter()
    }

    /// Copy with every material's lobe exponent replaced.
    pub fn with_lobe_exponent(&self, exponent: u32) -> MaterialTable {
        let materials = self.materials.iter().cloned().map(|m| Material { lobe_exponent: exponent, ..m }).collect();
        MaterialTable { materials }
    }
}

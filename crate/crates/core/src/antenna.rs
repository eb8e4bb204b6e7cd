//! Horn antenna gain pattern.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec3;

/// Back-lobe floor, dB below boresight gain.
pub const BACK_LOBE_DB: f64 = 40.0;

#[derive(Debug, Error, PartialEq)]
pub enum AntennaError {
    #[error("half-power beamwidth {0}° outside (0, 180)")]
    Beamwidth(f64),
    #[error("boresight and up vectors must be non-zero and perpendicular")]
    Orientation,
}

/// Boresight direction and the E-plane "up" reference, both unit vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orientation {
    boresight: Vec3,
    up: Vec3,
}

impl Orientation {
    pub fn new(boresight: Vec3, up: Vec3) -> Result<Orientation, AntennaError> {
        let b = boresight.try_normalize().ok_or(AntennaError::Orientation)?;
        let u = up.try_normalize().ok_or(AntennaError::Orientation)?;
        if b.dot(u).abs() > 1e-9 {
            return Err(AntennaError::Orientation);
        }
        Ok(Orientation { boresight: b, up: u })
    }

    /// Point along `boresight` with the E-plane as vertical as possible.
    pub fn aimed(boresight: Vec3) -> Result<Orientation, AntennaError> {
        let b = boresight.try_normalize().ok_or(AntennaError::Orientation)?;
        let up = (Vec3::Z - b * b.dot(Vec3::Z)).try_normalize().unwrap_or_else(|| b.any_perpendicular());
        Orientation::new(b, up)
    }

    pub fn boresight(&self) -> Vec3 {
        self.boresight
    }

    pub fn up(&self) -> Vec3 {
        self.up
    }
}

/// Separable Gaussian main lobe: `G₀ − 3[(θ_E/(HPBW_E/2))² + (θ_H/(HPBW_H/2))²]`,
/// floored at `G₀ − 40 dB`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HornPattern {
    pub boresight_gain_dbi: f64,
    pub hpbw_e_deg: f64,
    pub hpbw_h_deg: f64,
    pub orientation: Orientation,
}

impl HornPattern {
    pub fn new(boresight_gain_dbi: f64, hpbw_e_deg: f64, hpbw_h_deg: f64, orientation: Orientation) -> Result<HornPattern, AntennaError> {
        for hpbw in [hpbw_e_deg, hpbw_h_deg] {
            if !(hpbw > 0.0 && hpbw < 180.0) {
                return Err(AntennaError::Beamwidth(hpbw));
            }
        }
        Ok(HornPattern { boresight_gain_dbi, hpbw_e_deg, hpbw_h_deg, orientation })
    }

    pub fn gain_dbi(&self, direction: Vec3) -> f64 {
        let o = &self.orientation;
        let right = o.boresight.cross(o.up);
        let along = direction.dot(o.boresight);
        let theta_e = direction.dot(o.up).atan2(along).to_degrees();
        let theta_h = direction.dot(right).atan2(along).to_degrees();
        let roll_off = 3.0 * ((theta_e / (0.5 * self.hpbw_e_deg)).powi(2) + (theta_h / (0.5 * self.hpbw_h_deg)).powi(2));
        self.boresight_gain_dbi - roll_off.min(BACK_LOBE_DB)
    }
}

/// Antenna pattern used at either end of a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AntennaPattern {
    Isotropic,
    Horn(HornPattern),
}

impl AntennaPattern {
    pub fn gain_dbi(&self, direction: Vec3) -> f64 {
        match self {
            AntennaPattern::Isotropic => 0.0,
            AntennaPattern::Horn(h) => h.gain_dbi(direction),
        }
    }

    pub fn boresight_gain_dbi(&self) -> f64 {
        match self {
            AntennaPattern::Isotropic => 0.0,
            AntennaPattern::Horn(h) => h.boresight_gain_dbi,
        }
    }
}

/// Horn parameters as configured, before an orientation is attached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HornSpec {
    pub gain_dbi: f64,
    pub hpbw_e_deg: f64,
    pub hpbw_h_deg: f64,
}

impl Default for HornSpec {
    fn default() -> Self {
        HornSpec { gain_dbi: 17.0, hpbw_e_deg: 26.0, hpbw_h_deg: 24.0 }
    }
}

impl HornSpec {
    pub fn aimed(&self, boresight: Vec3) -> Result<AntennaPattern, AntennaError> {
        Ok(AntennaPattern::Horn(HornPattern::new(self.gain_dbi, self.hpbw_e_deg, self.hpbw_h_deg, Orientation::aimed(boresight)?)?))
    }
}

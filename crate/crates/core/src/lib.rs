//! Deterministic geometric-optics simulator for indoor 28 GHz coverage with
//! passive metallic reflectors.

pub mod antenna;
pub mod config;
pub mod coverage;
pub mod geometry;
pub mod materials;
pub mod raytracer;
pub mod report;
pub mod scene;
pub mod steering;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

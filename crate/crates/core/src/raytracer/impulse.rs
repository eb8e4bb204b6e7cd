use super::{dbm_to_mw, PathComponent};

/// Delay resolution of the power delay profile.
pub const BIN_WIDTH_S: f64 = 0.65e-9;
/// Longest delay kept in the profile.
pub const MAX_EXCESS_DELAY_S: f64 = 1.33e-6;

/// Power delay profile in linear milliwatts per delay bin. Bins are indexed
/// by propagation delay measured from the transmit instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    pub bin_width_s: f64,
    pub max_excess_delay_s: f64,
    pub bins: Vec<f64>,
}

impl ImpulseResponse {
    pub fn total_mw(&self) -> f64 {
        self.bins.iter().sum()
    }

    pub fn bin_dbm(&self, i: usize) -> f64 {
        10.0 * self.bins[i].log10()
    }
}

pub fn impulse_response(paths: &[PathComponent]) -> ImpulseResponse {
    let n = (MAX_EXCESS_DELAY_S / BIN_WIDTH_S).floor() as usize + 1;
    let mut bins = vec![0.0; n];
    for p in paths {
        if !(p.delay_s >= 0.0 && p.delay_s <= MAX_EXCESS_DELAY_S) {
            continue;
        }
        let i = ((p.delay_s / BIN_WIDTH_S).floor() as usize).min(n - 1);
        bins[i] += dbm_to_mw(p.power_dbm);
    }
    ImpulseResponse { bin_width_s: BIN_WIDTH_S, max_excess_delay_s: MAX_EXCESS_DELAY_S, bins }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raytracer::PathKind;
    use crate::SPEED_OF_LIGHT;

    fn path(delay_s: f64, power_dbm: f64) -> PathComponent {
        PathComponent { kind: PathKind::Los, vertices: vec![], delay_s, power_dbm, interactions: vec![] }
    }

    #[test]
    fn three_meters_lands_in_bin_fifteen() {
        let ir = impulse_response(&[path(3.0 / SPEED_OF_LIGHT, -50.0)]);
        assert_eq!(ir.bins.iter().position(|&b| b > 0.0), Some(15));
        assert_eq!(ir.bins.len(), 2047);
    }

    #[test]
    fn co_bin_paths_add_linearly() {
        let one = impulse_response(&[path(10e-9, -70.0)]);
        let two = impulse_response(&[path(10e-9, -70.0), path(10.1e-9, -70.0)]);
        assert!((two.bin_dbm(15) - one.bin_dbm(15) - 3.0103).abs() < 1e-4);
    }

    #[test]
    fn late_paths_are_dropped_and_energy_is_kept() {
        let paths = [path(20e-9, -60.0), path(1.4e-6, -40.0), path(400e-9, -80.0)];
        let ir = impulse_response(&paths);
        let expected = dbm_to_mw(-60.0) + dbm_to_mw(-80.0);
        assert!((ir.total_mw() - expected).abs() <= 1e-12 * expected);
    }
}

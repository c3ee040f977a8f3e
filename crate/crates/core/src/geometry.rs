//! Transmit-pointing geometry: satellite, sea surface, submerged receiver.
//!
//! The transmit zenith angle and the calm-surface refraction angle are tied
//! by Snell's law and by the horizontal-offset closure
//! `D_T = D tan(zeta') + H tan(zeta)`. Flat-Earth throughout; the slant
//! path is the straight line L = H sec(zeta).

use crate::error::{Error, Result};

/// Air-to-water refractive index ratio (n_air / n_water).
pub const ETA_AIR_WATER: f64 = 0.75;

/// Solved link geometry. All angles in radians, lengths in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    /// Satellite altitude above the sea surface.
    pub satellite_height: f64,
    /// Receiver depth below the calm surface.
    pub receiver_depth: f64,
    /// Horizontal offset between the satellite nadir point and the receiver.
    pub horizontal_offset: f64,
    /// Transmit zenith angle.
    pub zenith: f64,
    /// Calm-surface refraction angle.
    pub refraction_zenith: f64,
    /// Refractive index ratio air/water.
    pub eta: f64,
}

impl LinkGeometry {
    /// Build the geometry from a chosen transmit zenith angle.
    pub fn from_zenith(height: f64, depth: f64, zenith: f64, eta: f64) -> Result<Self> {
        validate_scalars(height, depth, eta)?;
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&zenith) {
            return Err(Error::Config(format!("zenith {zenith} outside [0, pi/2)")));
        }
        let refraction_zenith = (eta * zenith.sin()).asin();
        let horizontal_offset = depth * refraction_zenith.tan() + height * zenith.tan();
        Ok(Self {
            satellite_height: height,
            receiver_depth: depth,
            horizontal_offset,
            zenith,
            refraction_zenith,
            eta,
        })
    }

    /// Straight slant-path length of the atmospheric leg, H sec(zeta).
    pub fn slant_path_length(&self) -> f64 {
        self.satellite_height / self.zenith.cos()
    }

    /// Residuals of the two defining equations; both should be ~0.
    pub fn residuals(&self) -> (f64, f64) {
        let snell = self.eta * self.zenith.sin() - self.refraction_zenith.sin();
        let offset = self.horizontal_offset
            - self.receiver_depth * self.refraction_zenith.tan()
            - self.satellite_height * self.zenith.tan();
        (snell, offset)
    }
}

fn validate_scalars(height: f64, depth: f64, eta: f64) -> Result<()> {
    if !(height > 0.0) {
        return Err(Error::Config(format!("satellite height {height} must be > 0")));
    }
    if !(depth >= 0.0) {
        return Err(Error::Config(format!("receiver depth {depth} must be >= 0")));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Config(format!("eta {eta} must be in (0, 1)")));
    }
    Ok(())
}

/// Invert the pointing equations for the transmit zenith angle.
///
/// Bisection on the monotone residual; the result satisfies
/// `|D_T - D tan(zeta') - H tan(zeta)| < 1e-9 max(1, D_T)`.
pub fn solve_transmit_zenith(
    height: f64,
    depth: f64,
    horizontal_offset: f64,
    eta: f64,
) -> Result<LinkGeometry> {
    validate_scalars(height, depth, eta)?;
    if !(horizontal_offset >= 0.0) {
        return Err(Error::Config(format!("offset {horizontal_offset} must be >= 0")));
    }
    let residual = |zeta: f64| {
        let zp = (eta * zeta.sin()).asin();
        depth * zp.tan() + height * zeta.tan() - horizontal_offset
    };

    if horizontal_offset == 0.0 {
        return LinkGeometry::from_zenith(height, depth, 0.0, eta);
    }

    let mut lo = 0.0f64;
    let mut hi = std::f64::consts::FRAC_PI_2 - 1e-12;
    if residual(hi) < 0.0 {
        return Err(Error::UnsolvableGeometry(format!(
            "offset {horizontal_offset} forces zenith to pi/2"
        )));
    }
    // monotone residual: ~60 halvings reach f64 resolution on the angle
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let zeta = 0.5 * (lo + hi);
    let geom = LinkGeometry::from_zenith(height, depth, zeta, eta)?;
    let res = geom.horizontal_offset - horizontal_offset;
    if res.abs() > 1e-9 * horizontal_offset.max(1.0) {
        return Err(Error::UnsolvableGeometry(format!(
            "bisection residual {res} exceeds tolerance at offset {horizontal_offset}"
        )));
    }
    Ok(LinkGeometry {
        horizontal_offset,
        ..geom
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_offset_forces_nadir() {
        let g = solve_transmit_zenith(200_000.0, 10.0, 0.0, 0.75).unwrap();
        assert_eq!(g.zenith, 0.0);
        assert_eq!(g.refraction_zenith, 0.0);
    }

    #[test]
    fn forward_offset_inverts_to_thirty_degrees() {
        let zeta = 30f64.to_radians();
        let zp = (0.75 * zeta.sin()).asin();
        let offset = 10.0 * zp.tan() + 200_000.0 * zeta.tan();
        let g = solve_transmit_zenith(200_000.0, 10.0, offset, 0.75).unwrap();
        assert!((g.zenith - zeta).abs() < 1e-9, "{}", g.zenith);
    }

    #[test]
    fn zero_depth_degenerates_to_pure_air_leg() {
        let offset = 200_000.0 * 45f64.to_radians().tan();
        let g = solve_transmit_zenith(200_000.0, 0.0, offset, 0.75).unwrap();
        assert!((g.zenith - 45f64.to_radians()).abs() < 1e-9);
    }

    #[test]
    fn slant_path_closed_forms() {
        let g = LinkGeometry::from_zenith(200_000.0, 10.0, 0.0, 0.75).unwrap();
        assert_eq!(g.slant_path_length(), 200_000.0);
        let g = LinkGeometry::from_zenith(200_000.0, 10.0, 60f64.to_radians(), 0.75).unwrap();
        assert!((g.slant_path_length() - 400_000.0).abs() < 1e-6);
        let g = LinkGeometry::from_zenith(200_000.0, 10.0, 30f64.to_radians(), 0.75).unwrap();
        assert!((g.slant_path_length() - 230_940.10767585030).abs() < 1e-6);
    }

    #[test]
    fn snell_invariant_holds() {
        for deg in [0.0f64, 10.0, 30.0, 55.0, 70.0] {
            let g = LinkGeometry::from_zenith(2e5, 25.0, deg.to_radians(), 0.75).unwrap();
            let (snell, offset) = g.residuals();
            assert!(snell.abs() < 1e-12);
            assert!(offset.abs() < 1e-9 * (2e5 + 25.0));
        }
    }

    #[test]
    fn solved_zenith_increases_with_offset() {
        let mut last = -1.0;
        for k in 1..40 {
            let offset = k as f64 * 10_000.0;
            let g = solve_transmit_zenith(200_000.0, 10.0, offset, 0.75).unwrap();
            assert!(g.zenith > last, "offset {offset}");
            last = g.zenith;
        }
    }

    #[test]
    fn absurd_offset_is_unsolvable() {
        let r = solve_transmit_zenith(200_000.0, 10.0, 1e30, 0.75);
        assert!(matches!(r, Err(Error::UnsolvableGeometry(_))));
    }

    proptest! {
        #[test]
        fn round_trip_recovers_zenith(deg in 0.0f64..70.0) {
            let zeta = deg.to_radians();
            let fwd = LinkGeometry::from_zenith(200_000.0, 10.0, zeta, 0.75).unwrap();
            let back = solve_transmit_zenith(
                200_000.0, 10.0, fwd.horizontal_offset, 0.75).unwrap();
            prop_assert!((back.zenith - zeta).abs() < 1e-9);
        }
    }
}

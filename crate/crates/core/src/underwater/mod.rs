//! Underwater channel: particle scattering/absorption, oceanic turbulence
//! scintillation, and semi-analytic Monte Carlo photon transport.

pub mod rytov;
pub mod transport;

use crate::error::{Error, Result};
use crate::interface::theta0::Theta0Pdf;
use crate::numerics::rng::RngStream;

pub use rytov::{oceanic_spectrum, underwater_rytov, OceanTurbulence, OceanTurbulenceTable};
pub use transport::{emit_photons, run_transport, ChannelResult, TransportContext, TransportOutcome};

/// Particle absorption/scattering properties of the water column.
#[derive(Debug, Clone, Copy)]
pub struct WaterOptics {
    /// Absorption coefficient k_a, 1/m.
    pub absorption: f64,
    /// Scattering coefficient k_s, 1/m.
    pub scattering: f64,
    /// Henyey-Greenstein asymmetry parameter.
    pub hg_g: f64,
}

impl WaterOptics {
    pub fn clear_ocean() -> Self {
        Self { absorption: 0.069, scattering: 0.080, hg_g: 0.8708 }
    }

    pub fn coastal_ocean() -> Self {
        Self { absorption: 0.088, scattering: 0.216, hg_g: 0.9470 }
    }

    /// Extinction coefficient k_e = k_a + k_s.
    pub fn extinction(&self) -> f64 {
        self.absorption + self.scattering
    }

    /// Single-scattering albedo k_s / k_e.
    pub fn albedo(&self) -> f64 {
        self.scattering / self.extinction()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.absorption > 0.0 && self.scattering > 0.0) {
            return Err(Error::Config("absorption and scattering must be > 0".into()));
        }
        if !(self.hg_g.abs() < 1.0) {
            return Err(Error::Config(format!("|g| must be < 1, got {}", self.hg_g)));
        }
        Ok(())
    }
}

/// Exponential free path between particle interactions,
/// step = -ln(u)/k_e with u in (0, 1].
pub fn sample_step(extinction: f64, rng: &mut RngStream) -> f64 {
    -rng.open01().ln() / extinction
}

/// Henyey-Greenstein angular weight as printed,
/// f_p(theta) = (1 - g^2) / (2 pi (1 + g^2 - 2 g cos theta)^{3/2}).
pub fn hg_phase(cos_theta: f64, g: f64) -> f64 {
    let denom = 1.0 + g * g - 2.0 * g * cos_theta;
    (1.0 - g * g) / (2.0 * std::f64::consts::PI * denom * denom.sqrt())
}

/// Draw a scattering zenith angle from the HG inverse CDF
/// (isotropic below |g| = 1e-6).
pub fn sample_hg_angle(g: f64, rng: &mut RngStream) -> f64 {
    let u = rng.uniform();
    let cos_theta = if g.abs() < 1e-6 {
        1.0 - 2.0 * u
    } else {
        let frac = (1.0 - g * g) / (1.0 - g + 2.0 * g * u);
        (1.0 + g * g - frac * frac) / (2.0 * g)
    };
    cos_theta.clamp(-1.0, 1.0).acos()
}

/// Rotate a unit direction by deflection (theta, phi); the near-vertical
/// branch avoids the 1/sqrt(1 - mu_z^2) blowup.
pub fn rotate_direction(mu: [f64; 3], theta: f64, phi: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let denom_sq = 1.0 - mu[2] * mu[2];
    let out = if denom_sq.sqrt() < 1e-10 {
        [st * cp, st * sp, mu[2].signum() * ct]
    } else {
        let denom = denom_sq.sqrt();
        [
            ct * mu[0] + st / denom * (mu[0] * mu[2] * cp - mu[1] * sp),
            ct * mu[1] + st / denom * (mu[1] * mu[2] * cp + mu[0] * sp),
            ct * mu[2] - st * denom * cp,
        ]
    };
    crate::interface::normalize(out)
}

/// Second moment of the per-leg lognormal irradiance factor.
///
/// M2 = exp(sigma_R^2) in the weak regime; past sigma_R^2 = 1 the
/// saturated index 1 + sigma_I^2 from the large/small-scale variances
/// replaces the raw exponential, which otherwise diverges unphysically.
pub fn scintillation_moment(rytov_sq: f64) -> f64 {
    debug_assert!(rytov_sq >= 0.0);
    if rytov_sq <= 1.0 {
        rytov_sq.exp()
    } else {
        let (lx, ly) = crate::atmosphere::log_irradiance_variances(rytov_sq);
        (lx + ly).exp()
    }
}

/// Aperture, pointing, and field of view of the submerged detector.
#[derive(Debug, Clone, Copy)]
pub struct Receiver {
    /// Collecting area A_r, m^2.
    pub aperture_area: f64,
    /// FOV axis angles: at zenith 90 deg the axis points straight up,
    /// mu_R = (cos z cos a, cos z sin a, sin z).
    pub zenith: f64,
    pub azimuth: f64,
    /// FOV half-angle beta_R in (0, pi].
    pub fov_half_angle: f64,
    /// Unit FOV axis.
    pub fov_axis: [f64; 3],
}

impl Receiver {
    pub fn new(aperture_area: f64, zenith: f64, azimuth: f64, fov_half_angle: f64) -> Result<Self> {
        if !(aperture_area > 0.0) {
            return Err(Error::Config("aperture area must be > 0".into()));
        }
        if !(fov_half_angle > 0.0 && fov_half_angle <= std::f64::consts::PI) {
            return Err(Error::Config("FOV half-angle must lie in (0, pi]".into()));
        }
        let (sz, cz) = zenith.sin_cos();
        let (sa, ca) = azimuth.sin_cos();
        Ok(Self {
            aperture_area,
            zenith,
            azimuth,
            fov_half_angle,
            fov_axis: [cz * ca, cz * sa, sz],
        })
    }

    /// Radius of the collecting disc, r_A = sqrt(A_r/pi).
    pub fn aperture_radius(&self) -> f64 {
        (self.aperture_area / std::f64::consts::PI).sqrt()
    }

    /// Solid angle subtended by the aperture from distance d,
    /// 2 pi (1 - d/sqrt(d^2 + r_A^2)).
    pub fn solid_angle(&self, distance: f64) -> f64 {
        let r = self.aperture_radius();
        2.0 * std::f64::consts::PI * (1.0 - distance / (distance * distance + r * r).sqrt())
    }
}

/// Angular scoring kernel for one detection: the refraction density for
/// the direct (zero-order) path, the HG weight for scattered orders.
pub enum ScatterKernel<'a> {
    /// Zero order: the interface density at the photon's own deviation
    /// from the calm refraction direction; no k_s/k_e factor.
    Direct { pdf: &'a Theta0Pdf, deviation: f64 },
    /// Order >= 1: HG weight at the deflection toward the receiver.
    Particle { cos_theta: f64 },
}

/// Detection probability of a photon at `position` (relative to the
/// receiver) whose scoring kernel is `kernel`:
/// p_d = I (k_s/k_e) e^{-k_e d} cos(phi_r) min(1, f Omega_r).
pub fn detection_probability(
    position: [f64; 3],
    receiver: &Receiver,
    optics: &WaterOptics,
    kernel: ScatterKernel<'_>,
) -> Result<f64> {
    let d = crate::interface::norm(position);
    if d == 0.0 {
        return Err(Error::DegenerateGeometry("photon inside the aperture".into()));
    }
    let toward_photon = [position[0] / d, position[1] / d, position[2] / d];
    // phi_r: angle between the FOV axis and the reversed arrival direction
    let cos_phi_r = crate::interface::dot(receiver.fov_axis, toward_photon);
    let in_fov = cos_phi_r >= receiver.fov_half_angle.cos();
    if !in_fov || cos_phi_r <= 0.0 {
        return Ok(0.0);
    }
    let omega = receiver.solid_angle(d);
    let (density, albedo_factor) = match kernel {
        ScatterKernel::Direct { pdf, deviation } => (pdf.density(deviation), 1.0),
        ScatterKernel::Particle { cos_theta } => {
            (hg_phase(cos_theta, optics.hg_g), optics.albedo())
        }
    };
    Ok(albedo_factor * (-optics.extinction() * d).exp() * cos_phi_r * (density * omega).min(1.0))
}

/// FOV membership of a scattering position (the indicator in the
/// turbulence-variance accumulation).
pub fn in_field_of_view(position: [f64; 3], receiver: &Receiver) -> bool {
    let d = crate::interface::norm(position);
    if d == 0.0 {
        return false;
    }
    let toward = [position[0] / d, position[1] / d, position[2] / d];
    crate::interface::dot(receiver.fov_axis, toward) >= receiver.fov_half_angle.cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interface::{dot, norm, CoxMunkParams};
    use crate::geometry::ETA_AIR_WATER;

    #[test]
    fn presets_match_published_values() {
        let clear = WaterOptics::clear_ocean();
        assert!((clear.extinction() - 0.149).abs() < 1e-12);
        let coastal = WaterOptics::coastal_ocean();
        assert!((coastal.extinction() - 0.304).abs() < 1e-12);
    }

    #[test]
    fn step_mean_is_inverse_extinction() {
        let k_e = 0.149;
        let mut rng = RngStream::new(1, 0);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let s = sample_step(k_e, &mut rng);
            assert!(s > 0.0);
            sum += s;
            sum_sq += s * s;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        let se = (var / n as f64).sqrt();
        assert!((mean - 1.0 / k_e).abs() < 3.0 * se, "{mean}");
        // exponential variance = 1/k_e^2
        assert!((var - 1.0 / (k_e * k_e)).abs() < 0.05 / (k_e * k_e), "{var}");
    }

    #[test]
    fn deterministic_unit_step() {
        // u = e^{-1} maps exactly to 1/k_e
        let k_e = 0.149;
        let step = -(-1.0f64).exp().ln() / k_e;
        assert!((step - 1.0 / k_e).abs() < 1e-12);
        assert!((1.0f64 / 0.149 - 6.711409395973154).abs() < 1e-12);
    }

    #[test]
    fn hg_mean_cosine_equals_g() {
        for &g in &[0.0f64, 0.5, 0.8708] {
            let mut rng = RngStream::new(2, g.to_bits());
            let n = 100_000;
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..n {
                let c = sample_hg_angle(g, &mut rng).cos();
                sum += c;
                sum_sq += c * c;
            }
            let mean = sum / n as f64;
            let var = sum_sq / n as f64 - mean * mean;
            let se = (var / n as f64).sqrt();
            assert!((mean - g).abs() < 3.0 * se, "g={g}: mean {mean}");
        }
    }

    #[test]
    fn hg_histogram_matches_density() {
        // sampled cos(theta) against the normalized HG density in mu,
        // integrated exactly per bin through its closed-form CDF
        // F(mu) = (1-g^2)/(2g) [(1+g^2-2g mu)^{-1/2} - 1/(1+g)]
        let g: f64 = 0.8708;
        let bins = 200;
        let n = 1_000_000;
        let mut hist = vec![0.0f64; bins];
        let mut rng = RngStream::new(3, 0);
        for _ in 0..n {
            let mu = sample_hg_angle(g, &mut rng).cos();
            let b = (((mu + 1.0) / 2.0) * bins as f64) as usize;
            hist[b.min(bins - 1)] += 1.0;
        }
        let cdf = |mu: f64| {
            (1.0 - g * g) / (2.0 * g)
                * ((1.0 + g * g - 2.0 * g * mu).powf(-0.5) - 1.0 / (1.0 + g))
        };
        let width = 2.0 / bins as f64;
        let mut l1 = 0.0;
        for (b, h) in hist.iter().enumerate() {
            let lo = -1.0 + b as f64 * width;
            let mass = cdf(lo + width) - cdf(lo);
            l1 += (h / n as f64 - mass).abs();
        }
        assert!(l1 < 0.02, "L1 {l1}");
    }

    #[test]
    fn isotropic_limit_is_uniform_in_cosine() {
        let mut rng = RngStream::new(4, 0);
        let n = 50_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += sample_hg_angle(0.0, &mut rng).cos();
        }
        // E = 0, sd of mean = 1/sqrt(3n)
        assert!((sum / n as f64).abs() < 3.0 / (3.0 * n as f64).sqrt());
    }

    #[test]
    fn rotation_by_zero_is_identity() {
        let mu = crate::interface::normalize([0.3, -0.5, -0.8]);
        let out = rotate_direction(mu, 0.0, 1.3);
        for i in 0..3 {
            assert!((out[i] - mu[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_degenerate_branch() {
        let out = rotate_direction([0.0, 0.0, -1.0], std::f64::consts::FRAC_PI_2, 0.0);
        assert!((norm(out) - 1.0).abs() < 1e-12);
        assert!(out[2].abs() < 1e-12);
    }

    #[test]
    fn rotation_preserves_angle() {
        let mut rng = RngStream::new(5, 0);
        for _ in 0..10_000 {
            let z = rng.uniform_in(-1.0, 1.0);
            let a = rng.uniform_in(0.0, 2.0 * std::f64::consts::PI);
            let r = (1.0 - z * z).sqrt();
            let mu = [r * a.cos(), r * a.sin(), z];
            let theta = rng.uniform_in(0.0, std::f64::consts::PI);
            let phi = rng.uniform_in(0.0, 2.0 * std::f64::consts::PI);
            let out = rotate_direction(mu, theta, phi);
            assert!((norm(out) - 1.0).abs() < 1e-12);
            let got = dot(mu, out).clamp(-1.0, 1.0).acos();
            assert!((got - theta).abs() < 1e-10, "{got} vs {theta}");
        }
    }

    #[test]
    fn norm_drift_over_a_million_rotations() {
        let mut rng = RngStream::new(6, 0);
        let mut mu = [0.0, 0.0, -1.0];
        for _ in 0..1_000_000 {
            let theta = rng.uniform_in(0.0, std::f64::consts::PI);
            let phi = rng.uniform_in(0.0, 2.0 * std::f64::consts::PI);
            mu = rotate_direction(mu, theta, phi);
        }
        assert!((norm(mu) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn scintillation_moment_regimes() {
        assert_eq!(scintillation_moment(0.0), 1.0);
        assert!((scintillation_moment(0.1) - 0.1f64.exp()).abs() < 1e-15);
        // saturated regime: 1 + sigma_I^2 from the large/small-scale form
        let s = 4.0;
        let (lx, ly) = crate::atmosphere::log_irradiance_variances(s);
        let expected = 1.0 + ((lx + ly).exp() - 1.0);
        assert!((scintillation_moment(s) - expected).abs() < 1e-15);
        assert!(scintillation_moment(s) >= 1.0);
    }

    #[test]
    fn receiver_axis_points_up_at_ninety_degrees() {
        let r = Receiver::new(1.77e-4, 90f64.to_radians(), 90f64.to_radians(),
            90f64.to_radians()).unwrap();
        assert!((r.fov_axis[2] - 1.0).abs() < 1e-12);
        assert!(r.fov_axis[0].abs() < 1e-12);
    }

    #[test]
    fn detection_factors_compose() {
        // photon straight above an up-looking receiver, aligned kernel
        let receiver =
            Receiver::new(1.77e-4, 90f64.to_radians(), 90f64.to_radians(), 90f64.to_radians())
                .unwrap();
        let optics = WaterOptics::clear_ocean();
        let d = 5.0;
        let cos_theta = 1.0;
        let got = detection_probability(
            [0.0, 0.0, d],
            &receiver,
            &optics,
            ScatterKernel::Particle { cos_theta },
        )
        .unwrap();
        // independent re-composition of the four factors
        let r_a = (1.77e-4f64 / std::f64::consts::PI).sqrt();
        let omega = 2.0 * std::f64::consts::PI * (1.0 - d / (d * d + r_a * r_a).sqrt());
        let g = optics.hg_g;
        let f_p = (1.0 - g * g) / (2.0 * std::f64::consts::PI * (1.0 - g).powi(2) * (1.0 - g));
        let expected = (0.080 / 0.149) * (-0.149 * d).exp() * 1.0 * (f_p * omega).min(1.0);
        assert!((got - expected).abs() < 1e-12 * expected, "{got} vs {expected}");
    }

    #[test]
    fn detection_outside_fov_is_zero() {
        let receiver =
            Receiver::new(1.77e-4, 90f64.to_radians(), 0.0, 20f64.to_radians()).unwrap();
        let optics = WaterOptics::clear_ocean();
        // photon far off-axis: 45 deg from vertical, outside a 20 deg cone
        let p = detection_probability(
            [5.0, 0.0, 5.0],
            &receiver,
            &optics,
            ScatterKernel::Particle { cos_theta: 1.0 },
        )
        .unwrap();
        assert_eq!(p, 0.0);
    }

    #[test]
    fn detection_grazing_arrival_is_zero() {
        let receiver =
            Receiver::new(1.77e-4, 90f64.to_radians(), 0.0, std::f64::consts::PI).unwrap();
        let optics = WaterOptics::clear_ocean();
        // arrival in the receiver plane: cos(phi_r) = 0
        let p = detection_probability(
            [7.0, 0.0, 0.0],
            &receiver,
            &optics,
            ScatterKernel::Particle { cos_theta: 1.0 },
        )
        .unwrap();
        // cos(phi_r) is the rounding residue of cos(pi/2) at worst
        assert!(p < 1e-18, "{p}");
    }

    #[test]
    fn detection_at_origin_is_degenerate() {
        let receiver =
            Receiver::new(1.77e-4, 90f64.to_radians(), 0.0, std::f64::consts::PI).unwrap();
        let optics = WaterOptics::clear_ocean();
        let r = detection_probability(
            [0.0, 0.0, 0.0],
            &receiver,
            &optics,
            ScatterKernel::Particle { cos_theta: 1.0 },
        );
        assert!(matches!(r, Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn direct_kernel_uses_interface_density() {
        let slopes = CoxMunkParams::from_wind_speed(6.0).unwrap();
        let pdf = Theta0Pdf::new(0.0, &slopes, ETA_AIR_WATER).unwrap();
        let receiver =
            Receiver::new(1.77e-4, 90f64.to_radians(), 90f64.to_radians(), 90f64.to_radians())
                .unwrap();
        let optics = WaterOptics::clear_ocean();
        let dev = 0.05;
        let d = 10.0;
        let got = detection_probability(
            [0.0, 0.0, d],
            &receiver,
            &optics,
            ScatterKernel::Direct { pdf: &pdf, deviation: dev },
        )
        .unwrap();
        let expected = (-0.149 * d).exp() * (pdf.density(dev) * receiver.solid_angle(d)).min(1.0);
        assert!((got - expected).abs() < 1e-15, "{got} vs {expected}");
    }
}

//! Air-water interface channel.
//!
//! Cox-Munk slope statistics of the wavy surface, FFT synthesis of the
//! elevation field, facet refraction with Fresnel transmittance, and the
//! closed-form density of the refracted-ray deviation from the calm-water
//! direction.

pub mod surface;
pub mod theta0;

use crate::error::{Error, Result};
use crate::numerics::rng::RngStream;

pub use surface::{synthesize_sea_surface, SeaSurfaceField};
pub use theta0::{sample_theta0, theta0_pdf, Theta0Pdf};

/// Wind-parameterized sea-slope statistics.
///
/// `sigma_sq = sqrt(0.003 + 0.00512 v)` with `v` the wind speed in m/s.
#[derive(Debug, Clone, Copy)]
pub struct CoxMunkParams {
    pub wind_speed: f64,
    pub sigma_sq: f64,
}

impl CoxMunkParams {
    pub fn from_wind_speed(wind_speed: f64) -> Result<Self> {
        if !(wind_speed >= 0.0) {
            return Err(Error::Config(format!("wind speed {wind_speed} must be >= 0")));
        }
        Ok(Self { wind_speed, sigma_sq: (0.003 + 0.00512 * wind_speed).sqrt() })
    }

    /// Directly pin the slope-variance parameter (degenerate-surface tests).
    pub fn from_sigma_sq(sigma_sq: f64) -> Result<Self> {
        if !(sigma_sq > 0.0) {
            return Err(Error::Config(format!("sigma_sq {sigma_sq} must be > 0")));
        }
        Ok(Self { wind_speed: f64::NAN, sigma_sq })
    }

    /// Density of the (unsigned) pitching angle,
    /// f(t) = 2/sigma^2 exp(-tan^2 t / sigma^2) tan t / cos^2 t.
    pub fn pitch_density(&self, theta_p: f64) -> f64 {
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta_p) {
            return 0.0;
        }
        let t = theta_p.tan();
        let c = theta_p.cos();
        2.0 / self.sigma_sq * (-t * t / self.sigma_sq).exp() * t / (c * c)
    }

    /// CDF of the unsigned pitching angle, 1 - exp(-tan^2 t / sigma^2).
    pub fn pitch_cdf(&self, theta_p: f64) -> f64 {
        if theta_p <= 0.0 {
            return 0.0;
        }
        let t = theta_p.tan();
        1.0 - (-t * t / self.sigma_sq).exp()
    }
}

/// Draw an unsigned pitching angle by inverse CDF:
/// theta_p = arctan(sqrt(-sigma^2 ln u)), u in (0, 1].
pub fn sample_pitch_angle(params: &CoxMunkParams, rng: &mut RngStream) -> f64 {
    let u = rng.open01();
    (-params.sigma_sq * u.ln()).sqrt().atan()
}

/// Unit facet normal: uniform azimuth, Cox-Munk zenith.
pub fn facet_normal(params: &CoxMunkParams, rng: &mut RngStream) -> [f64; 3] {
    let theta_p = sample_pitch_angle(params, rng);
    let phi_p = rng.uniform_in(0.0, 2.0 * std::f64::consts::PI);
    let (st, ct) = theta_p.sin_cos();
    let (sp, cp) = phi_p.sin_cos();
    [cp * st, sp * st, ct]
}

/// Result of refracting a ray through one facet.
#[derive(Debug, Clone, Copy)]
pub struct RefractionEvent {
    pub incident_dir: [f64; 3],
    pub facet_normal: [f64; 3],
    pub refracted_dir: [f64; 3],
    /// Incidence angle.
    pub alpha: f64,
    /// Refraction angle (Snell-consistent).
    pub beta: f64,
    /// Unpolarized Fresnel transmittance.
    pub transmittance: f64,
}

/// Dot product of two 3-vectors.
pub fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Euclidean norm of a 3-vector.
pub fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Rescale a 3-vector to unit length.
pub fn normalize(a: [f64; 3]) -> [f64; 3] {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Refract `incident` (unit, pointing into the surface) through a facet
/// with unit normal `normal`:
/// T = eta E + N (eta cos a - sqrt(1 - eta^2 (1 - cos^2 a))).
///
/// With eta < 1 the radicand stays positive, so no total internal
/// reflection branch exists on this side of the interface.
pub fn refract(incident: [f64; 3], normal: [f64; 3], eta: f64) -> Result<RefractionEvent> {
    let cos_alpha = -dot(normal, incident);
    if !(cos_alpha > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "grazing or back-facing facet: cos(alpha) = {cos_alpha}"
        )));
    }
    let cos_alpha = cos_alpha.min(1.0);
    let alpha = cos_alpha.acos();
    let sin_alpha_sq = 1.0 - cos_alpha * cos_alpha;
    let cos_beta = (1.0 - eta * eta * sin_alpha_sq).sqrt();
    let beta = (eta * alpha.sin()).asin();
    let scale = eta * cos_alpha - cos_beta;
    let refracted = [
        eta * incident[0] + normal[0] * scale,
        eta * incident[1] + normal[1] * scale,
        eta * incident[2] + normal[2] * scale,
    ];
    let transmittance = fresnel_transmittance_with_ratio(alpha, beta, eta);
    Ok(RefractionEvent {
        incident_dir: incident,
        facet_normal: normal,
        refracted_dir: refracted,
        alpha,
        beta,
        transmittance,
    })
}

/// Unpolarized Fresnel transmittance,
/// Tr = 1/2 |sin 2a sin 2b / sin^2(a+b) (1 + cos^2(a-b)) / cos^2(a-b)|.
///
/// The normal-incidence limit 4 eta/(1+eta)^2 is substituted below
/// alpha = 1e-9 rad, inferring eta from beta/alpha when possible.
pub fn fresnel_transmittance(alpha: f64, beta: f64) -> f64 {
    let eta = if alpha > 1e-12 { beta / alpha } else { crate::geometry::ETA_AIR_WATER };
    fresnel_transmittance_with_ratio(alpha, beta, eta)
}

fn fresnel_transmittance_with_ratio(alpha: f64, beta: f64, eta: f64) -> f64 {
    if alpha < 1e-9 {
        return 4.0 * eta / (1.0 + eta) / (1.0 + eta);
    }
    let s = (alpha + beta).sin();
    let c = (alpha - beta).cos();
    let tr = 0.5
        * ((2.0 * alpha).sin() * (2.0 * beta).sin() / (s * s) * (1.0 + c * c) / (c * c)).abs();
    tr.clamp(0.0, 1.0)
}

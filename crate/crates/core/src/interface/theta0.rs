//! Closed-form density of the refracted-ray deviation theta_0.
//!
//! theta_0 is the angle between the ray refracted by a Cox-Munk facet and
//! the calm-surface refraction direction. The density is piecewise over
//! three intervals split at zeta - zeta' and gamma(pi/2 - zeta), built from
//! the tilted-incidence densities f_a1/f_a2, the deflection inverse
//! h(x) = arcsin(sqrt(4(x^2-1)/(6x - 25/4))), and the chain-rule Jacobian.
//!
//! Facets steeper than the grazing limit refract nothing (they are
//! discarded by the transport), so the returned density is normalized over
//! the attainable support; the raw integral is kept for reporting.

use crate::error::{Error, Result};
use crate::interface::CoxMunkParams;
use crate::numerics::rng::RngStream;
use crate::numerics::QuadratureSpec;

const CDF_NODES: usize = 4096;

/// Deflection angle between incident and refracted rays at incidence `alpha`:
/// gamma = alpha - arcsin(eta sin alpha) (equals the arccos form in which
/// the piecewise density is usually written, but stays accurate near zero).
pub fn deflection_angle(alpha: f64, eta: f64) -> f64 {
    alpha - (eta * alpha.sin()).asin()
}

#[cfg(test)]
fn deflection_slope(alpha: f64, eta: f64) -> f64 {
    let s = alpha.sin();
    1.0 - eta * alpha.cos() / (1.0 - eta * eta * s * s).sqrt()
}

/// h(J(.)) evaluated in the deflection angle g itself: the incidence angle
/// whose deflection is g. Equivalent to the printed
/// arcsin(sqrt(4(x^2-1)/(6x-25/4))) at x = cos g, but written with
/// sin^2 g in the radicand so nothing cancels near g = 0 (eta = 3/4 is
/// baked into the constants, as printed).
fn h_of_angle(g: f64) -> f64 {
    let d = 25.0 / 4.0 - 6.0 * g.cos();
    (2.0 * g.sin() / d.sqrt()).clamp(0.0, 1.0).asin()
}

/// |d h(J)/d theta0| for every route, i.e. |dalpha/dgamma|.
///
/// The chain rule h'(x) J'(theta0) reduces algebraically: with x = cos g,
/// sqrt(q) = 2 sin g / sqrt(25/4 - 6x) and sqrt(1-q) = (2x - 3/2)/sqrt(.),
/// the sin g factors cancel and the removable 0/0 at x = 3/4 factors out,
/// leaving (32 - 24x)/(50 - 48x). Checked against central differences in
/// the tests.
fn alpha_slope(g: f64) -> f64 {
    let x = g.cos();
    (32.0 - 24.0 * x) / (50.0 - 48.0 * x)
}

/// The closed-form density and its sampler for one (zeta, sigma^2) pair.
#[derive(Debug, Clone)]
pub struct Theta0Pdf {
    pub zeta: f64,
    pub zeta_prime: f64,
    pub sigma_sq: f64,
    pub eta: f64,
    /// Branch split zeta - zeta'.
    pub split_low: f64,
    /// Branch split gamma(pi/2 - zeta).
    pub split_high: f64,
    /// Support end |zeta - zeta' - arccos(eta)|.
    pub support_max: f64,
    /// Integral of the raw piecewise form over the support.
    raw_mass: f64,
    cdf_thetas: Vec<f64>,
    cdf_values: Vec<f64>,
}

impl Theta0Pdf {
    pub fn new(zeta: f64, slopes: &CoxMunkParams, eta: f64) -> Result<Self> {
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&zeta) {
            return Err(Error::Config(format!("zeta {zeta} outside [0, pi/2)")));
        }
        if (eta - 0.75).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "theta0 closed form is derived for eta = 0.75, got {eta}"
            )));
        }
        let zeta_prime = (eta * zeta.sin()).asin();
        let split_low = zeta - zeta_prime;
        let split_high = deflection_angle(std::f64::consts::FRAC_PI_2 - zeta, eta);
        let support_max = (split_low - eta.acos()).abs();
        let mut pdf = Self {
            zeta,
            zeta_prime,
            sigma_sq: slopes.sigma_sq,
            eta,
            split_low,
            split_high,
            support_max,
            raw_mass: 1.0,
            cdf_thetas: Vec::new(),
            cdf_values: Vec::new(),
        };
        pdf.raw_mass = pdf.integrate_raw()?;
        if !(pdf.raw_mass.is_finite() && pdf.raw_mass > 0.0) {
            return Err(Error::Numeric(format!("theta0 raw mass {} unusable", pdf.raw_mass)));
        }
        pdf.build_cdf()?;
        Ok(pdf)
    }

    /// Tilted-incidence density for facets pitched toward the beam,
    /// f_a1(a) = rho(a - zeta).
    fn f_alpha1(&self, alpha: f64) -> f64 {
        self.slope_density(alpha - self.zeta)
    }

    /// Facets pitched away, f_a2(a) = rho(a + zeta).
    fn f_alpha2(&self, alpha: f64) -> f64 {
        self.slope_density(alpha + self.zeta)
    }

    /// rho(u) = 1/sigma^2 exp(-tan^2 u / sigma^2) |tan u| / cos^2 u.
    fn slope_density(&self, u: f64) -> f64 {
        if u.abs() >= std::f64::consts::FRAC_PI_2 - 1e-12 {
            return 0.0;
        }
        let t = u.tan();
        let c = u.cos();
        (-t * t / self.sigma_sq).exp() * t.abs() / (self.sigma_sq * c * c)
    }

    /// The literal piecewise closed form, before normalization.
    pub fn density_raw(&self, theta0: f64) -> f64 {
        if !(0.0..=self.support_max).contains(&theta0) {
            return 0.0;
        }
        // route through J1 = cos(zeta - zeta' + theta0): facets tilted
        // toward the beam with deflection beyond the calm value
        let g1 = self.split_low + theta0;
        let mut density = self.f_alpha1(h_of_angle(g1)) * alpha_slope(g1);
        if theta0 < self.split_low {
            // deflection short of the calm value, same facet family
            let g2 = self.split_low - theta0;
            density += self.f_alpha1(h_of_angle(g2)) * alpha_slope(g2);
        } else if theta0 < self.split_high {
            // facets tilted away from the beam
            let g2 = theta0 - self.split_low;
            density += self.f_alpha2(h_of_angle(g2)) * alpha_slope(g2);
        }
        density.max(0.0)
    }

    /// Normalized density over the attainable support.
    pub fn density(&self, theta0: f64) -> f64 {
        self.density_raw(theta0) / self.raw_mass
    }

    /// Integral of the raw form (mass short of 1 is the grazing-discard
    /// fraction, reported by the validation battery).
    pub fn raw_mass(&self) -> f64 {
        self.raw_mass
    }

    /// Piecewise integral of `g` over the support: a geometric ladder from
    /// the origin (a near-degenerate sigma^2 spikes the density there) plus
    /// the branch breakpoints. Pieces are accepted at 1e-12 absolute since
    /// the whole carries unit-scale mass.
    fn integrate_piecewise<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        let spec = QuadratureSpec { relative_tolerance: 1e-9, max_subdivisions: 4000 };
        let mut edges = vec![0.0];
        for k in (0..=12).rev() {
            edges.push(self.support_max * 10f64.powi(-k));
        }
        for b in [self.split_low, self.split_high] {
            if b > 0.0 && b < self.support_max {
                edges.push(b);
            }
        }
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        let mut total = 0.0;
        for w in edges.windows(2) {
            total += crate::numerics::quad::adaptive_integrate_with_floor(
                &g, w[0], w[1], &spec, 1e-12,
            )?;
        }
        Ok(total)
    }

    fn integrate_raw(&self) -> Result<f64> {
        self.integrate_piecewise(|t| self.density_raw(t))
    }

    fn build_cdf(&mut self) -> Result<()> {
        // uniform nodes plus a geometric ladder near zero (a forced tiny
        // sigma^2 concentrates all mass in the first few microradians)
        let n = CDF_NODES;
        let h = self.support_max / n as f64;
        let mut thetas: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
        for decade in 1..=12 {
            let base = self.support_max * 10f64.powi(-decade);
            for step in 1..10 {
                thetas.push(base * step as f64);
            }
        }
        thetas.sort_by(f64::total_cmp);
        thetas.dedup();

        let mut values = Vec::with_capacity(thetas.len());
        values.push(0.0);
        let mut acc = 0.0;
        let mut f_left = self.density_raw(thetas[0]);
        for w in thetas.windows(2) {
            let cell = w[1] - w[0];
            let mid = self.density_raw(w[0] + 0.5 * cell);
            let f_right = self.density_raw(w[1]);
            if !(mid.is_finite() && f_right.is_finite()) {
                return Err(Error::Numeric(format!("non-finite theta0 density near {}", w[0])));
            }
            acc += cell / 6.0 * (f_left + 4.0 * mid + f_right);
            values.push(acc);
            f_left = f_right;
        }
        if !(acc > 0.0) {
            return Err(Error::Numeric("theta0 CDF table has zero mass".into()));
        }
        for v in &mut values {
            *v /= acc;
        }
        self.cdf_thetas = thetas;
        self.cdf_values = values;
        Ok(())
    }

    /// Inverse-transform draw from the tabulated CDF.
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        let u = rng.uniform();
        let idx = match self.cdf_values.binary_search_by(|v| v.total_cmp(&u)) {
            Ok(i) => return self.cdf_thetas[i],
            Err(i) => i,
        };
        if idx == 0 {
            return 0.0;
        }
        if idx >= self.cdf_values.len() {
            return self.support_max;
        }
        let (c0, c1) = (self.cdf_values[idx - 1], self.cdf_values[idx]);
        let (t0, t1) = (self.cdf_thetas[idx - 1], self.cdf_thetas[idx]);
        if c1 <= c0 {
            return t0;
        }
        t0 + (t1 - t0) * (u - c0) / (c1 - c0)
    }

    /// Mean of the normalized density by quadrature.
    pub fn mean(&self) -> Result<f64> {
        self.integrate_piecewise(|t| t * self.density(t))
    }

    /// Relative jumps of the density at the two branch joins:
    /// |f(b+) - f(b-)| / max(f(b+), f(b-), tiny).
    pub fn branch_gaps(&self) -> [f64; 2] {
        let gap_at = |b: f64| {
            if b <= 0.0 || b >= self.support_max {
                return 0.0;
            }
            let eps = 1e-6;
            let lo = self.density_raw((b - eps).max(0.0));
            let hi = self.density_raw((b + eps).min(self.support_max));
            (hi - lo).abs() / lo.max(hi).max(1e-300)
        };
        [gap_at(self.split_low), gap_at(self.split_high)]
    }
}

/// Evaluate the normalized closed-form density.
pub fn theta0_pdf(pdf: &Theta0Pdf, theta0: f64) -> f64 {
    pdf.density(theta0)
}

/// Draw a deviation angle.
pub fn sample_theta0(pdf: &Theta0Pdf, rng: &mut RngStream) -> f64 {
    pdf.sample(rng)
}

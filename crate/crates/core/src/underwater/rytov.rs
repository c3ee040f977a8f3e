//! Oceanic turbulence spectrum and the underwater Rytov variance.
//!
//! The refractive-index spectrum is the Nikishov form with a variable eddy
//! diffusivity ratio d_r(w):
//!
//! Phi_n(k) = 3.88e-9 eps^{-1/3} k^{-11/3} [1 + 2.35 (k eta)^{2/3}]
//!            (chi_T / w^2) [w^2 e^{-A_T d} + d_r e^{-A_S d}
//!                           - w (1 + d_r) e^{-A_TS d}],
//!
//! with d = 8.284 (k eta)^{4/3} + 12.978 (k eta)^2, eta = (nu^3/eps)^{1/4},
//! A_T = 1.863e-2, A_S = 1.9e-4, A_TS = 9.41e-3, nu = 1.0576e-6 m^2/s, and
//!
//! d_r = |w| / (|w| - sqrt(|w| (|w| - 1)))   for |w| >= 1,
//!       1.85 |w| - 0.85                     for 0.5 <= |w| < 1,
//!       0.15 |w|                            for |w| < 0.5.
//!
//! The weak-fluctuation Rytov variance over a leg of length L is
//! sigma_Ru^2 = 8 pi^2 k^2 L int_0^1 int_0^inf kappa Phi_n(kappa)
//!              [1 - cos(L kappa^2 xi / k)] dkappa dxi.

use crate::error::{Error, Result};
use crate::numerics::interp::MonotoneCubic;
use crate::numerics::{adaptive_integrate, QuadratureSpec};

/// Kinematic viscosity of seawater, m^2/s.
const NU_WATER: f64 = 1.0576e-6;
const A_T: f64 = 1.863e-2;
const A_S: f64 = 1.9e-4;
const A_TS: f64 = 9.41e-3;

/// Oceanic turbulence strength parameters.
#[derive(Debug, Clone, Copy)]
pub struct OceanTurbulence {
    /// Kinetic-energy dissipation rate epsilon, m^2/s^3.
    pub epsilon: f64,
    /// Temperature dissipation rate chi_T, K^2/s.
    pub chi_t: f64,
    /// Temperature-salinity contribution ratio w (negative by convention).
    pub omega: f64,
}

impl OceanTurbulence {
    pub fn weak() -> Self {
        Self { epsilon: 1e-2, chi_t: 1e-5, omega: -3.0 }
    }

    pub fn strong() -> Self {
        Self { epsilon: 1e-3, chi_t: 1e-4, omega: -0.25 }
    }

    /// Kolmogorov microscale (nu^3/epsilon)^{1/4}, meters.
    pub fn kolmogorov_scale(&self) -> f64 {
        (NU_WATER.powi(3) / self.epsilon).powf(0.25)
    }

    /// Eddy diffusivity ratio d_r(|omega|).
    pub fn eddy_diffusivity_ratio(&self) -> f64 {
        let w = self.omega.abs();
        if w >= 1.0 {
            w / (w - (w * (w - 1.0)).sqrt())
        } else if w >= 0.5 {
            1.85 * w - 0.85
        } else {
            0.15 * w
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.chi_t > 0.0) {
            return Err(Error::Config("epsilon and chi_T must be > 0".into()));
        }
        if self.omega == 0.0 {
            return Err(Error::Config("omega must be nonzero".into()));
        }
        Ok(())
    }
}

/// Refractive-index spectrum Phi_n(kappa), see module docs.
pub fn oceanic_spectrum(kappa: f64, turb: &OceanTurbulence) -> f64 {
    if kappa <= 0.0 {
        return 0.0;
    }
    let eta = turb.kolmogorov_scale();
    let ke = kappa * eta;
    let delta = 8.284 * ke.powf(4.0 / 3.0) + 12.978 * ke * ke;
    let w = turb.omega;
    let d_r = turb.eddy_diffusivity_ratio();
    let mix = w * w * (-A_T * delta).exp() + d_r * (-A_S * delta).exp()
        - w * (1.0 + d_r) * (-A_TS * delta).exp();
    0.388e-8 * turb.epsilon.powf(-1.0 / 3.0) * kappa.powf(-11.0 / 3.0)
        * (1.0 + 2.35 * ke.powf(2.0 / 3.0))
        * (turb.chi_t / (w * w))
        * mix
}

/// Oscillatory remainder int_{v0}^{v1} e(v) cos(v) dv with a smooth
/// power-law-like envelope: log-spaced segments, the envelope linearized on
/// each, and the linear-times-cosine primitive taken exactly
/// (int (c0 + c1 v) cos v dv = c0 sin v + c1 (v sin v + cos v)).
fn filon_cosine_tail<E: Fn(f64) -> f64>(envelope: E, v0: f64, v1: f64) -> f64 {
    if v1 <= v0 {
        return 0.0;
    }
    let segments = 512usize;
    let log_step = (v1 / v0).ln() / segments as f64;
    let mut total = 0.0;
    let mut p = v0;
    let mut ep = envelope(p);
    for s in 1..=segments {
        let q = v0 * (log_step * s as f64).exp();
        let eq = envelope(q);
        let c1 = (eq - ep) / (q - p);
        let c0 = ep - c1 * p;
        let primitive = |v: f64| c0 * v.sin() + c1 * (v * v.sin() + v.cos());
        total += primitive(q) - primitive(p);
        p = q;
        ep = eq;
    }
    total
}

/// Inner kappa integral over one outer node:
/// int_0^{kappa_hi} kappa Phi (1 - cos(a kappa^2)) dkappa.
///
/// The split point is fixed per leg (at the full-leg phase of six periods)
/// so the integrand seen by the outer rule stays smooth in xi: adaptive
/// head below the split, plus the exact decomposition
/// int kappa Phi dkappa - int e(v) cos v dv above it, the Fourier part by
/// the Filon segments.
struct InnerIntegral<'a> {
    turb: &'a OceanTurbulence,
    kappa_split: f64,
    kappa_hi: f64,
    flat_tail: f64,
    spec: QuadratureSpec,
}

impl<'a> InnerIntegral<'a> {
    fn build(path: f64, turb: &'a OceanTurbulence, wavenumber: f64) -> Result<Self> {
        let spec = QuadratureSpec { relative_tolerance: 1e-7, max_subdivisions: 2000 };
        // the salinity e^{-A_S delta} term decays slowest; past kappa_hi
        // the integrand is below ~1e-10 of its peak
        let kappa_hi = 60.0 / turb.kolmogorov_scale();
        let a_max = path / wavenumber;
        let kappa_split = (12.0 * std::f64::consts::PI / a_max).sqrt().min(kappa_hi);
        let flat_tail = if kappa_split < kappa_hi {
            adaptive_integrate(
                |kappa: f64| kappa * oceanic_spectrum(kappa, turb),
                kappa_split,
                kappa_hi,
                &spec,
            )?
        } else {
            0.0
        };
        Ok(Self { turb, kappa_split, kappa_hi, flat_tail, spec })
    }

    fn eval(&self, a: f64) -> Result<f64> {
        if a <= 0.0 {
            return Ok(0.0);
        }
        let head = adaptive_integrate(
            |kappa: f64| {
                let phase = a * kappa * kappa;
                kappa * oceanic_spectrum(kappa, self.turb) * (1.0 - phase.cos())
            },
            0.0,
            self.kappa_split,
            &self.spec,
        )?;
        if self.kappa_split >= self.kappa_hi {
            return Ok(head);
        }
        // v = a kappa^2 turns the residual into int e(v) cos v dv with
        // e(v) = Phi(sqrt(v/a))/(2a)
        let osc = filon_cosine_tail(
            |v: f64| oceanic_spectrum((v / a).sqrt(), self.turb) / (2.0 * a),
            a * self.kappa_split * self.kappa_split,
            a * self.kappa_hi * self.kappa_hi,
        );
        Ok(head + self.flat_tail - osc)
    }
}

/// Underwater Rytov variance over a leg of length `path` by nested
/// adaptive quadrature (inner kappa integral folded to a finite domain,
/// with the many-period oscillatory tail handled by a Filon correction).
pub fn underwater_rytov(path: f64, turb: &OceanTurbulence, wavenumber: f64) -> Result<f64> {
    if !(path > 0.0) {
        return Err(Error::Config(format!("path length {path} must be > 0")));
    }
    turb.validate()?;
    let inner = InnerIntegral::build(path, turb, wavenumber)?;
    // the Filon segmentation leaves ~1e-4 relative noise on the inner
    // values; a tighter outer tolerance would only grind its budget
    let outer_spec = QuadratureSpec { relative_tolerance: 1e-4, max_subdivisions: 60 };
    let outer = adaptive_integrate(
        |xi: f64| inner.eval(path * xi / wavenumber).unwrap_or(f64::NAN),
        0.0,
        1.0,
        &outer_spec,
    )?;
    if !outer.is_finite() {
        return Err(Error::Numeric("underwater Rytov inner quadrature failed".into()));
    }
    Ok(8.0 * std::f64::consts::PI.powi(2) * wavenumber * wavenumber * path * outer)
}

/// Memoized per-leg Rytov variance on a log-spaced grid with monotone
/// interpolation; below the grid the local power law fitted to the first
/// two nodes extrapolates (the slope runs between 2 and 3 depending on
/// how much of the slow salinity tail is already oscillatory).
#[derive(Debug, Clone)]
pub struct OceanTurbulenceTable {
    pub turbulence: OceanTurbulence,
    interp: MonotoneCubic,
    d_min: f64,
    d_max: f64,
    sigma_at_min: f64,
    sigma_at_max: f64,
    small_d_exponent: f64,
}

const TABLE_NODES: usize = 128;
const TABLE_D_MIN: f64 = 1e-3;
const TABLE_D_MAX: f64 = 1e4;

impl OceanTurbulenceTable {
    pub fn new(turb: &OceanTurbulence, wavenumber: f64) -> Result<Self> {
        let mut ln_d = Vec::with_capacity(TABLE_NODES);
        let mut ln_sigma = Vec::with_capacity(TABLE_NODES);
        let ratio = (TABLE_D_MAX / TABLE_D_MIN).ln();
        let mut sigma_first = 0.0;
        let mut sigma_last = 0.0;
        for i in 0..TABLE_NODES {
            let d = TABLE_D_MIN * (ratio * i as f64 / (TABLE_NODES - 1) as f64).exp();
            let sigma = underwater_rytov(d, turb, wavenumber)?;
            if i == 0 {
                sigma_first = sigma;
            }
            if i == TABLE_NODES - 1 {
                sigma_last = sigma;
            }
            ln_d.push(d.ln());
            ln_sigma.push(sigma.max(1e-300).ln());
        }
        let small_d_exponent = (ln_sigma[1] - ln_sigma[0]) / (ln_d[1] - ln_d[0]);
        Ok(Self {
            turbulence: *turb,
            interp: MonotoneCubic::new(ln_d, ln_sigma),
            d_min: TABLE_D_MIN,
            d_max: TABLE_D_MAX,
            sigma_at_min: sigma_first,
            sigma_at_max: sigma_last,
            small_d_exponent,
        })
    }

    /// sigma_Ru^2 for a leg of length `d`.
    pub fn rytov(&self, d: f64) -> f64 {
        if d <= 0.0 {
            return 0.0;
        }
        if d < self.d_min {
            return self.sigma_at_min * (d / self.d_min).powf(self.small_d_exponent);
        }
        if d > self.d_max {
            return self.sigma_at_max;
        }
        self.interp.eval(d.ln()).exp()
    }

    /// Per-leg second moment M2(d).
    pub fn moment(&self, d: f64) -> f64 {
        super::scintillation_moment(self.rytov(d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const WAVENUMBER: f64 = 2.0 * std::f64::consts::PI / 532e-9;

    #[test]
    fn eddy_ratio_branches() {
        assert!((OceanTurbulence::weak().eddy_diffusivity_ratio()
            - 3.0 / (3.0 - 6.0f64.sqrt()))
        .abs()
            < 1e-12);
        assert!((OceanTurbulence::strong().eddy_diffusivity_ratio() - 0.0375).abs() < 1e-12);
        let mid = OceanTurbulence { omega: -0.7, ..OceanTurbulence::weak() };
        assert!((mid.eddy_diffusivity_ratio() - (1.85 * 0.7 - 0.85)).abs() < 1e-12);
    }

    #[test]
    fn spectrum_is_positive_and_decays() {
        for turb in [OceanTurbulence::weak(), OceanTurbulence::strong()] {
            let lo = oceanic_spectrum(10.0, &turb);
            let mid = oceanic_spectrum(100.0, &turb);
            assert!(lo > 0.0 && mid > 0.0);
            assert!(lo > mid);
            let cut = 60.0 / turb.kolmogorov_scale();
            assert!(oceanic_spectrum(cut, &turb) < 1e-10 * lo);
        }
    }

    #[test]
    fn tiny_leg_vanishes() {
        // the slow salinity tail of the variable-eddy spectrum keeps the
        // small-leg slope near L^2 (pure L^3 only far below 1 mm), so the
        // millimeter value sits ~1e-6 of the meter value
        let turb = OceanTurbulence::weak();
        let at_1m = underwater_rytov(1.0, &turb, WAVENUMBER).unwrap();
        let at_1mm = underwater_rytov(1e-3, &turb, WAVENUMBER).unwrap();
        assert!(at_1mm < 1e-5 * at_1m, "{at_1mm} vs {at_1m}");
    }

    #[test]
    fn rytov_increases_with_path() {
        let turb = OceanTurbulence::weak();
        let s1 = underwater_rytov(1.0, &turb, WAVENUMBER).unwrap();
        let s5 = underwater_rytov(5.0, &turb, WAVENUMBER).unwrap();
        let s10 = underwater_rytov(10.0, &turb, WAVENUMBER).unwrap();
        assert!(s10 > s5 && s5 > s1, "{s1} {s5} {s10}");
    }

    #[test]
    fn dense_grid_oracle_at_five_meters() {
        // fixed 2000x2000 midpoint double sum, independent of the adaptive
        // path: xi uniform on (0,1), kappa log-spaced over the support
        let turb = OceanTurbulence::weak();
        let path = 5.0;
        let v = underwater_rytov(path, &turb, WAVENUMBER).unwrap();

        let n = 2000usize;
        let kappa_lo = 1e-3;
        let kappa_hi = 60.0 / turb.kolmogorov_scale();
        let lr = (kappa_hi / kappa_lo).ln();
        let mut total = 0.0;
        for i in 0..n {
            let kappa = kappa_lo * (lr * (i as f64 + 0.5) / n as f64).exp();
            let dk = kappa * lr / n as f64; // log-midpoint cell width
            let kphi = kappa * oceanic_spectrum(kappa, &turb);
            let mut xi_sum = 0.0;
            for j in 0..n {
                let xi = (j as f64 + 0.5) / n as f64;
                xi_sum += 1.0 - (path * kappa * kappa * xi / WAVENUMBER).cos();
            }
            total += kphi * dk * xi_sum / n as f64;
        }
        let oracle = 8.0 * std::f64::consts::PI.powi(2) * WAVENUMBER * WAVENUMBER * path * total;
        assert!((v - oracle).abs() < 0.01 * oracle, "{v} vs oracle {oracle}");
    }

    #[test]
    fn strong_preset_is_stronger() {
        let weak = underwater_rytov(10.0, &OceanTurbulence::weak(), WAVENUMBER).unwrap();
        let strong = underwater_rytov(10.0, &OceanTurbulence::strong(), WAVENUMBER).unwrap();
        assert!(strong > weak, "{strong} vs {weak}");
    }

    #[test]
    fn table_interpolates_within_half_percent() {
        let turb = OceanTurbulence::weak();
        let table = OceanTurbulenceTable::new(&turb, WAVENUMBER).unwrap();
        // off-node probes across the range
        for &d in &[0.0137, 0.71, 3.3, 17.9, 212.0, 4810.0] {
            let direct = underwater_rytov(d, &turb, WAVENUMBER).unwrap();
            let interp = table.rytov(d);
            assert!(
                (interp - direct).abs() < 5e-3 * direct,
                "d={d}: {interp} vs {direct}"
            );
        }
        // below the grid only sanity matters (such legs contribute
        // sigma^2 ~ 1e-8): positive, monotone, same order of magnitude
        let tiny = table.rytov(1e-4);
        let anchor = table.rytov(1e-3);
        let direct = underwater_rytov(1e-4, &turb, WAVENUMBER).unwrap();
        assert!(tiny > 0.0 && tiny < anchor);
        assert!(tiny / direct < 5.0 && tiny / direct > 0.2, "{tiny} vs {direct}");
    }

    #[test]
    fn moment_uses_saturation_in_strong_regime() {
        let turb = OceanTurbulence::strong();
        let table = OceanTurbulenceTable::new(&turb, WAVENUMBER).unwrap();
        // long leg in strong water: sigma^2 > 1, moment bounded by ~2
        let long = table.rytov(100.0);
        if long > 1.0 {
            assert!(table.moment(100.0) < 3.0);
        }
        assert!(table.moment(100.0) >= 1.0);
    }
}

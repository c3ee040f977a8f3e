//! Correlated lognormal fading across the receiving grid.
//!
//! Cell-to-cell covariance of the unit-mean intensity for a downlink path:
//!
//! B(rho) = exp[ B_lnX(rho) + B_lnY(rho) ] - 1, with
//!   B_lnX = sigma_lnX^2 mu4d(rho)/mu4d(0),
//!   B_lnY = sigma_lnY^2 0.99 x^{5/12} K_{5/6}(sqrt x),  x = k rho^2 eta_Y / L,
//!
//! mu4d the profile-weighted 1F1 integral. The lognormal field itself is
//! drawn through ln(1 + B) moment matching and a jitter-repaired Cholesky.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::atmosphere::{cn2_profile, log_irradiance_variances, IrradianceGrid, TurbulenceProfile};
use crate::error::{Error, Result};
use crate::geometry::LinkGeometry;
use crate::numerics::{adaptive_integrate, bessel_k, confluent_hypergeometric_1f1, QuadratureSpec};
use crate::numerics::rng::RngStream;

/// One realization of the per-cell fading coefficients.
#[derive(Debug, Clone)]
pub struct FadingField {
    /// Unit-mean fading coefficient per grid cell.
    pub xi_f: Vec<f64>,
    /// Per-cell log-variance.
    pub sigma_ln: Vec<f64>,
}

/// mu4d(rho): the ksi^{-1/3} endpoint singularity is absorbed by the
/// substitution ksi = t^{3/2}, which leaves a bounded integrand.
fn mu_4d(
    rho: f64,
    geom: &LinkGeometry,
    profile: &TurbulenceProfile,
    wavenumber: f64,
    eta_x: f64,
) -> Result<f64> {
    let height = geom.satellite_height;
    let len = geom.slant_path_length();
    let spec = QuadratureSpec { relative_tolerance: 1e-9, max_subdivisions: 4000 };
    adaptive_integrate(
        |t: f64| {
            let ksi = t.powf(1.5);
            let one_m = 1.0 - 0.625 * ksi;
            let profile_part = cn2_profile(ksi * height, profile) * one_m.powf(-1.4);
            let hyp = if rho == 0.0 {
                1.0
            } else {
                let arg = -wavenumber * rho * rho * eta_x
                    / (8.0 * len * t.powf(2.5) * one_m);
                confluent_hypergeometric_1f1(1.4, 1.0, arg).unwrap_or(0.0)
            };
            1.5 * profile_part * hyp
        },
        0.0,
        1.0,
        &spec,
    )
}

/// Scale parameters of the downlink intensity covariance, fixed per link.
#[derive(Debug, Clone, Copy)]
struct CovarianceScales {
    sigma_ln_x: f64,
    sigma_ln_y: f64,
    eta_x: f64,
    eta_y: f64,
}

fn covariance_scales(rytov_sq: f64) -> CovarianceScales {
    let s65 = rytov_sq.powf(6.0 / 5.0);
    let (sigma_ln_x, sigma_ln_y) = log_irradiance_variances(rytov_sq);
    CovarianceScales {
        sigma_ln_x,
        sigma_ln_y,
        eta_x: 0.92 / (1.0 + 1.11 * s65),
        eta_y: 3.0 * (1.0 + 0.69 * s65),
    }
}

fn covariance_at(
    rho: f64,
    scales: &CovarianceScales,
    mu4d_zero: f64,
    geom: &LinkGeometry,
    profile: &TurbulenceProfile,
    wavenumber: f64,
) -> Result<f64> {
    if scales.sigma_ln_x == 0.0 && scales.sigma_ln_y == 0.0 {
        return Ok(0.0);
    }
    if rho == 0.0 {
        return Ok((scales.sigma_ln_x + scales.sigma_ln_y).exp() - 1.0);
    }
    let b_ln_x = if mu4d_zero > 0.0 {
        scales.sigma_ln_x * mu_4d(rho, geom, profile, wavenumber, scales.eta_x)? / mu4d_zero
    } else {
        0.0
    };
    let len = geom.slant_path_length();
    let x = wavenumber * rho * rho * scales.eta_y / len;
    let root = x.sqrt();
    let small_scale_factor = if root > 600.0 {
        0.0 // K_{5/6} underflows
    } else {
        0.99 * x.powf(5.0 / 12.0) * bessel_k(5.0 / 6.0, root)?
    };
    let b_ln_y = scales.sigma_ln_y * small_scale_factor;
    Ok((b_ln_x + b_ln_y).exp() - 1.0)
}

/// M x M intensity covariance over the grid cells (M = cells^2).
///
/// Entries depend only on the center separation, so distinct integer
/// offsets are evaluated once and reused; the result is exactly symmetric.
pub fn fading_covariance(
    grid: &IrradianceGrid,
    geom: &LinkGeometry,
    profile: &TurbulenceProfile,
    wavenumber: f64,
) -> Result<DMatrix<f64>> {
    let rytov_sq = crate::atmosphere::slant_rytov_variance(geom, profile, wavenumber)?;
    let scales = covariance_scales(rytov_sq);
    let mu4d_zero = if scales.sigma_ln_x > 0.0 {
        mu_4d(0.0, geom, profile, wavenumber, scales.eta_x)?
    } else {
        0.0
    };

    let m = grid.cells;
    let n = m * m;
    let mut by_offset: HashMap<u64, f64> = HashMap::new();
    let mut matrix = DMatrix::zeros(n, n);
    for a in 0..n {
        let (ra, ca) = (a / m, a % m);
        for b in a..n {
            let (rb, cb) = (b / m, b % m);
            let di = ra.abs_diff(rb) as u64;
            let dj = ca.abs_diff(cb) as u64;
            let key = di * di + dj * dj;
            let value = match by_offset.get(&key) {
                Some(v) => *v,
                None => {
                    let rho = grid.cell_size * ((key as f64).sqrt());
                    let v = covariance_at(rho, &scales, mu4d_zero, geom, profile, wavenumber)?;
                    by_offset.insert(key, v);
                    v
                }
            };
            matrix[(a, b)] = value;
            matrix[(b, a)] = value;
        }
    }
    Ok(matrix)
}

/// Reusable sampler for a fixed covariance: ln-domain moment matching plus
/// a jitter-repaired Cholesky factor.
#[derive(Debug, Clone)]
pub struct FadingSampler {
    factor: DMatrix<f64>,
    ln_variance: Vec<f64>,
}

impl FadingSampler {
    pub fn new(covariance: &DMatrix<f64>) -> Result<Self> {
        let n = covariance.nrows();
        if covariance.ncols() != n || n == 0 {
            return Err(Error::Config("covariance must be square and non-empty".into()));
        }
        // symmetrize, then map to the ln domain: Cov_ln = ln(1 + Cov_xi)
        let mut ln_cov = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let s = 0.5 * (covariance[(i, j)] + covariance[(j, i)]);
                if s <= -1.0 {
                    return Err(Error::Numeric(format!(
                        "intensity covariance entry {s} at ({i},{j}) below -1"
                    )));
                }
                ln_cov[(i, j)] = s.ln_1p();
            }
        }
        let ln_variance: Vec<f64> = (0..n).map(|i| ln_cov[(i, i)]).collect();

        let max_diag = ln_variance.iter().cloned().fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
        let mut eps = 1e-10 * max_diag;
        let mut jitter = 0.0;
        let factor = loop {
            let mut attempt = ln_cov.clone();
            for i in 0..n {
                attempt[(i, i)] += jitter;
            }
            match attempt.cholesky() {
                Some(c) => break c.unpack(),
                None => {
                    if jitter == 0.0 {
                        jitter = eps;
                    } else {
                        eps *= 10.0;
                        jitter = eps;
                    }
                    if jitter > 1e-6 * max_diag {
                        return Err(Error::Numeric(
                            "fading covariance not positive semi-definite after jitter".into(),
                        ));
                    }
                }
            }
        };
        Ok(Self { factor, ln_variance })
    }

    pub fn dimension(&self) -> usize {
        self.ln_variance.len()
    }

    /// Draw one field; E[xi_f] = 1 cell-wise by the -sigma^2/2 mean shift.
    pub fn draw(&self, rng: &mut RngStream) -> FadingField {
        let n = self.dimension();
        let gauss: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let mut xi_f = vec![0.0; n];
        for i in 0..n {
            let mut z = -0.5 * self.ln_variance[i];
            for j in 0..=i {
                z += self.factor[(i, j)] * gauss[j];
            }
            xi_f[i] = z.exp();
        }
        FadingField { xi_f, sigma_ln: self.ln_variance.clone() }
    }
}

/// One-shot draw from a covariance matrix; `sigma_ln` is carried through
/// to the field record (the ln-domain variances themselves come from the
/// moment map so the unit-mean property holds exactly).
pub fn sample_fading_field(
    covariance: &DMatrix<f64>,
    sigma_ln: &[f64],
    rng: &mut RngStream,
) -> Result<FadingField> {
    let sampler = FadingSampler::new(covariance)?;
    if sigma_ln.len() != sampler.dimension() {
        return Err(Error::Config("sigma_ln length does not match covariance".into()));
    }
    Ok(sampler.draw(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atmosphere::{mean_irradiance_grid, BeamParams};

    fn beam() -> BeamParams {
        BeamParams {
            wavelength: 532e-9,
            divergence: 22e-6,
            transmit_power: 5.0,
            phase_front_radius: f64::INFINITY,
            transmittance: 0.7,
        }
    }

    fn geom() -> LinkGeometry {
        LinkGeometry::from_zenith(200_000.0, 10.0, 0.0, 0.75).unwrap()
    }

    #[test]
    fn diagonal_is_exponential_of_summed_variances() {
        let g = mean_irradiance_grid(&beam(), 2.2, 3);
        let profile = TurbulenceProfile::weak();
        let k = beam().wavenumber();
        let cov = fading_covariance(&g, &geom(), &profile, k).unwrap();
        let rytov = crate::atmosphere::slant_rytov_variance(&geom(), &profile, k).unwrap();
        let (sx, sy) = log_irradiance_variances(rytov);
        let expected = (sx + sy).exp() - 1.0;
        for i in 0..9 {
            assert!((cov[(i, i)] - expected).abs() < 1e-12 * expected);
        }
    }

    #[test]
    fn covariance_is_symmetric_and_decays() {
        let g = mean_irradiance_grid(&beam(), 2.2, 4);
        let profile = TurbulenceProfile::weak();
        let k = beam().wavenumber();
        let cov = fading_covariance(&g, &geom(), &profile, k).unwrap();
        for a in 0..16 {
            for b in 0..16 {
                assert_eq!(cov[(a, b)], cov[(b, a)]);
            }
        }
        // far-separated cells decohere relative to the variance
        assert!(cov[(0, 15)].abs() < 0.05 * cov[(0, 0)]);
    }

    #[test]
    fn large_separation_limit_vanishes() {
        let profile = TurbulenceProfile::weak();
        let k = beam().wavenumber();
        let rytov = crate::atmosphere::slant_rytov_variance(&geom(), &profile, k).unwrap();
        let scales = covariance_scales(rytov);
        let mu0 = mu_4d(0.0, &geom(), &profile, k, scales.eta_x).unwrap();
        let b = covariance_at(50.0, &scales, mu0, &geom(), &profile, k).unwrap();
        assert!(b.abs() < 1e-6, "{b}");
    }

    #[test]
    fn zero_covariance_yields_unit_field() {
        let cov = DMatrix::zeros(4, 4);
        let mut rng = RngStream::new(5, 0);
        let f = sample_fading_field(&cov, &[0.0; 4], &mut rng).unwrap();
        for v in &f.xi_f {
            assert_eq!(*v, 1.0);
        }
    }

    #[test]
    fn single_cell_unit_mean() {
        let sigma_sq = 0.04f64;
        let cov = DMatrix::from_element(1, 1, sigma_sq.exp_m1());
        let sampler = FadingSampler::new(&cov).unwrap();
        let mut rng = RngStream::new(11, 0);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let v = sampler.draw(&mut rng).xi_f[0];
            assert!(v > 0.0);
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        let se = (var / n as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn pairwise_ln_correlation_is_preserved() {
        let sigma_sq = 0.09f64;
        let target_corr = 0.9f64;
        let c_off = (target_corr * sigma_sq).exp_m1();
        let c_diag = sigma_sq.exp_m1();
        let cov = DMatrix::from_row_slice(2, 2, &[c_diag, c_off, c_off, c_diag]);
        let sampler = FadingSampler::new(&cov).unwrap();
        let mut rng = RngStream::new(21, 3);
        let n = 100_000;
        let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let f = sampler.draw(&mut rng);
            let (a, b) = (f.xi_f[0].ln(), f.xi_f[1].ln());
            sx += a;
            sy += b;
            sxx += a * a;
            syy += b * b;
            sxy += a * b;
        }
        let nf = n as f64;
        let cov_ab = sxy / nf - (sx / nf) * (sy / nf);
        let va = sxx / nf - (sx / nf).powi(2);
        let vb = syy / nf - (sy / nf).powi(2);
        let corr = cov_ab / (va * vb).sqrt();
        assert!((corr - target_corr).abs() < 0.02, "{corr}");
    }

    #[test]
    fn marginal_passes_kolmogorov_smirnov() {
        // ln xi ~ N(-s/2, s) at the 1% level over 1e5 draws
        let sigma_sq = 0.2f64;
        let cov = DMatrix::from_element(1, 1, sigma_sq.exp_m1());
        let sampler = FadingSampler::new(&cov).unwrap();
        let mut rng = RngStream::new(77, 0);
        let n = 100_000usize;
        let mut z: Vec<f64> = (0..n)
            .map(|_| (sampler.draw(&mut rng).xi_f[0].ln() + 0.5 * sigma_sq) / sigma_sq.sqrt())
            .collect();
        z.sort_by(f64::total_cmp);
        let mut d = 0.0f64;
        for (i, v) in z.iter().enumerate() {
            let cdf = 0.5 * statrs::function::erf::erfc(-v / std::f64::consts::SQRT_2);
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            d = d.max((cdf - lo).abs()).max((cdf - hi).abs());
        }
        // asymptotic 1% Kolmogorov critical value 1.628/sqrt(n)
        let crit = 1.628 / (n as f64).sqrt();
        assert!(d < crit, "KS distance {d} vs {crit}");
    }

    #[test]
    fn indefinite_matrix_is_repaired_or_rejected() {
        // slightly indefinite: correlation just above 1
        let cov = DMatrix::from_row_slice(
            2,
            2,
            &[0.1, 0.100000001, 0.100000001, 0.1],
        );
        // either a jittered factor or a clean error; never a panic
        let _ = FadingSampler::new(&cov);
    }
}

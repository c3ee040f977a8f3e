//! Communication performance: lognormal received-power model, mean BER for
//! OOK IM/DD under thermal noise, SNR, and outage probability.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::hermite::gauss_hermite;
use crate::numerics::{adaptive_integrate, QuadratureSpec};
use crate::underwater::ChannelResult;

/// Exact 2019 SI Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Thermal-noise receiver front end.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NoiseModel {
    /// Temperature, kelvin.
    pub temperature: f64,
    /// Noise-equivalent bandwidth, Hz.
    pub bandwidth: f64,
    /// Load resistance, ohms.
    pub resistance: f64,
    /// Detector responsivity, A/W.
    pub responsivity: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { temperature: 300.0, bandwidth: 1e9, resistance: 1e6, responsivity: 0.7 }
    }
}

impl NoiseModel {
    /// Thermal noise power spectrum N0 = 4KTB/R.
    pub fn noise_spectrum(&self) -> f64 {
        4.0 * BOLTZMANN * self.temperature * self.bandwidth / self.resistance
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0
            && self.bandwidth > 0.0
            && self.resistance > 0.0
            && self.responsivity > 0.0)
        {
            return Err(Error::Config("noise model fields must be > 0".into()));
        }
        Ok(())
    }
}

/// Gaussian Q function.
pub fn q_function(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(x / std::f64::consts::SQRT_2)
}

/// Lognormal model of the received power: mean <P_r> with ln-variance
/// sigma_tur^2 (the -sigma^2/2 shift keeps the mean exact).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PowerDistribution {
    pub mean_power: f64,
    pub sigma_tur_sq: f64,
}

impl PowerDistribution {
    pub fn new(mean_power: f64, sigma_tur_sq: f64) -> Result<Self> {
        if !(mean_power > 0.0) {
            return Err(Error::Numeric(format!(
                "degenerate power distribution: mean {mean_power}"
            )));
        }
        if !(sigma_tur_sq >= 0.0) {
            return Err(Error::Config("sigma_tur_sq must be >= 0".into()));
        }
        Ok(Self { mean_power, sigma_tur_sq })
    }

    /// Density of P_r.
    pub fn pdf(&self, power: f64) -> f64 {
        if power <= 0.0 || self.sigma_tur_sq == 0.0 {
            return 0.0;
        }
        let s = self.sigma_tur_sq.sqrt();
        let z = ((power / self.mean_power).ln() + 0.5 * self.sigma_tur_sq) / s;
        (-0.5 * z * z).exp() / (power * s * (2.0 * std::f64::consts::PI).sqrt())
    }

    /// Median power, <P_r> e^{-sigma^2/2}.
    pub fn median(&self) -> f64 {
        self.mean_power * (-0.5 * self.sigma_tur_sq).exp()
    }
}

/// Pool simulation outputs into one distribution: photon-count-weighted
/// mean power, photon-count-weighted scintillation coefficient.
pub fn fit_power_distribution(results: &[ChannelResult]) -> Result<PowerDistribution> {
    if results.is_empty() {
        return Err(Error::Config("no channel results to fit".into()));
    }
    let total_photons: f64 = results.iter().map(|r| r.photon_count as f64).sum();
    let mean_power = results
        .iter()
        .map(|r| r.total_power * r.photon_count as f64)
        .sum::<f64>()
        / total_photons;
    let sigma_tur_sq = results
        .iter()
        .map(|r| r.sigma_tur_sq * r.photon_count as f64)
        .sum::<f64>()
        / total_photons;
    PowerDistribution::new(mean_power, sigma_tur_sq)
}

/// Mean OOK bit error rate with a cross-validation residual.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MeanBer {
    pub value: f64,
    /// |Gauss-Hermite - adaptive quadrature| cross-check.
    pub quadrature_gap: f64,
    /// Set when the two routes disagree beyond 1e-6 absolute.
    pub degraded: bool,
}

/// P_e = int Q(R_d P / sqrt(2 N0)) f(P) dP, evaluated by 64-node
/// Gauss-Hermite in the log-power domain and cross-checked by adaptive
/// quadrature.
pub fn mean_ber(dist: &PowerDistribution, noise: &NoiseModel) -> Result<MeanBer> {
    noise.validate()?;
    let n0 = noise.noise_spectrum();
    let gain = noise.responsivity / (2.0 * n0).sqrt();

    if dist.sigma_tur_sq == 0.0 {
        let value = q_function(gain * dist.mean_power);
        return Ok(MeanBer { value, quadrature_gap: 0.0, degraded: false });
    }

    // ln P = ln<P> - s/2 + sqrt(2 s) x maps the integral onto e^{-x^2}
    let s = dist.sigma_tur_sq;
    let (nodes, weights) = gauss_hermite(64);
    let mut acc = 0.0;
    for (x, w) in nodes.iter().zip(&weights) {
        let power = dist.mean_power * ((2.0 * s).sqrt() * x - 0.5 * s).exp();
        acc += w * q_function(gain * power);
    }
    let hermite = acc / std::f64::consts::PI.sqrt();

    let spec = QuadratureSpec { relative_tolerance: 1e-10, max_subdivisions: 4000 };
    let adaptive = adaptive_integrate(
        |z: f64| {
            // z = standardized ln-power
            let power = dist.mean_power * (s.sqrt() * z - 0.5 * s).exp();
            q_function(gain * power) * (-0.5 * z * z).exp()
                / (2.0 * std::f64::consts::PI).sqrt()
        },
        -10.0,
        10.0,
        &spec,
    )?;

    let quadrature_gap = (hermite - adaptive).abs();
    Ok(MeanBer { value: hermite, quadrature_gap, degraded: quadrature_gap > 1e-6 })
}

/// Electrical SNR gamma_s = 2 R R_d^2 P_r^2 / (4KTB).
pub fn snr(power: f64, noise: &NoiseModel) -> f64 {
    2.0 * noise.resistance * noise.responsivity * noise.responsivity * power * power
        / (4.0 * BOLTZMANN * noise.temperature * noise.bandwidth)
}

/// Received power at which the SNR equals `gamma_th`.
pub fn power_at_snr(gamma_th: f64, noise: &NoiseModel) -> f64 {
    (2.0 * gamma_th * BOLTZMANN * noise.temperature * noise.bandwidth
        / (noise.responsivity * noise.responsivity * noise.resistance))
        .sqrt()
}

/// Outage probability: Pr(gamma_s < gamma_th) in closed form,
/// 1 - Q((ln(gamma_th'/<P_r>) + sigma^2/2)/sigma).
pub fn outage_probability(
    dist: &PowerDistribution,
    noise: &NoiseModel,
    gamma_th: f64,
) -> Result<f64> {
    if !(gamma_th > 0.0) {
        return Err(Error::Config("gamma_th must be > 0".into()));
    }
    noise.validate()?;
    let threshold_power = power_at_snr(gamma_th, noise);
    if dist.sigma_tur_sq == 0.0 {
        return Ok(if dist.mean_power <= threshold_power { 1.0 } else { 0.0 });
    }
    let s = dist.sigma_tur_sq.sqrt();
    let arg = ((threshold_power / dist.mean_power).ln() + 0.5 * dist.sigma_tur_sq) / s;
    Ok(1.0 - q_function(arg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::RngStream;

    fn noise() -> NoiseModel {
        NoiseModel::default()
    }

    #[test]
    fn noise_spectrum_value() {
        let n0 = noise().noise_spectrum();
        let expected = 4.0 * 1.380649e-23 * 300.0 * 1e9 / 1e6;
        assert!((n0 - expected).abs() < 1e-30);
    }

    #[test]
    fn pdf_normalizes_and_preserves_mean() {
        let dist = PowerDistribution::new(1e-8, 0.3).unwrap();
        let spec = QuadratureSpec { relative_tolerance: 1e-9, max_subdivisions: 4000 };
        let total =
            adaptive_integrate(|p| dist.pdf(p), 0.0, f64::INFINITY, &spec).unwrap();
        assert!((total - 1.0).abs() < 1e-6, "{total}");
        let mean =
            adaptive_integrate(|p| p * dist.pdf(p), 0.0, f64::INFINITY, &spec).unwrap();
        assert!((mean - 1e-8).abs() < 1e-6 * 1e-8, "{mean}");
    }

    #[test]
    fn zero_signal_gives_half_error_rate() {
        let dist = PowerDistribution::new(1e-30, 0.2).unwrap();
        let ber = mean_ber(&dist, &noise()).unwrap();
        assert!((ber.value - 0.5).abs() < 1e-9, "{}", ber.value);
    }

    #[test]
    fn degenerate_distribution_is_q_formula() {
        let dist = PowerDistribution::new(1e-8, 0.0).unwrap();
        let ber = mean_ber(&dist, &noise()).unwrap();
        let gain = 0.7 / (2.0 * noise().noise_spectrum()).sqrt();
        assert_eq!(ber.value, q_function(gain * 1e-8));
    }

    #[test]
    fn hermite_and_adaptive_agree() {
        for (p, s) in [(1e-9, 0.05), (1e-8, 0.2), (5e-8, 0.8), (1e-7, 0.4)] {
            let dist = PowerDistribution::new(p, s).unwrap();
            let ber = mean_ber(&dist, &noise()).unwrap();
            assert!(!ber.degraded, "gap {} at ({p}, {s})", ber.quadrature_gap);
        }
    }

    #[test]
    fn ber_matches_monte_carlo_oracle() {
        // 10 nW, sigma^2 = 0.2 against a 1e7-draw conditional-BER average
        let dist = PowerDistribution::new(1e-8, 0.2).unwrap();
        let ber = mean_ber(&dist, &noise()).unwrap();
        let gain = 0.7 / (2.0 * noise().noise_spectrum()).sqrt();
        let mut rng = RngStream::new(404, 0);
        let n = 10_000_000u64;
        let s = 0.2f64;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let p = 1e-8 * (s.sqrt() * rng.standard_normal() - 0.5 * s).exp();
            let q = q_function(gain * p);
            sum += q;
            sum_sq += q * q;
        }
        let mc = sum / n as f64;
        let var = sum_sq / n as f64 - mc * mc;
        let se = (var / n as f64).sqrt();
        assert!((ber.value - mc).abs() < 3.0 * se, "{} vs {mc} (se {se})", ber.value);
    }

    #[test]
    fn ber_monotonic_in_power_and_spread() {
        let mut last = 0.5;
        for p in [1e-9, 3e-9, 1e-8, 3e-8, 1e-7] {
            let ber = mean_ber(&PowerDistribution::new(p, 0.2).unwrap(), &noise()).unwrap();
            assert!(ber.value < last, "power {p}");
            last = ber.value;
        }
        let mut last = 0.0;
        for s in [0.01, 0.1, 0.3, 0.6, 1.0] {
            let ber = mean_ber(&PowerDistribution::new(3e-8, s).unwrap(), &noise()).unwrap();
            assert!(ber.value > last, "sigma {s}");
            last = ber.value;
        }
    }

    #[test]
    fn snr_examples() {
        assert_eq!(snr(0.0, &noise()), 0.0);
        let g1 = snr(1e-8, &noise());
        let g2 = snr(2e-8, &noise());
        assert!((g2 / g1 - 4.0).abs() < 1e-12);
        // 10 nW with the defaults
        let expected = 2.0 * 1e6 * 0.49 * 1e-16 / (4.0 * 1.380649e-23 * 300.0 * 1e9);
        assert!((g1 - expected).abs() < 1e-12 * expected);
        assert!((g1 - 5.91).abs() < 0.01, "{g1}");
    }

    #[test]
    fn outage_limits_and_median() {
        let dist = PowerDistribution::new(1e-8, 0.3).unwrap();
        let tiny = outage_probability(&dist, &noise(), 1e-12).unwrap();
        assert!(tiny < 1e-6, "{tiny}");
        let huge = outage_probability(&dist, &noise(), 1e9).unwrap();
        assert!(huge > 1.0 - 1e-9, "{huge}");
        // threshold at the median power gives exactly 1/2
        let gamma_median = snr(dist.median(), &noise());
        let half = outage_probability(&dist, &noise(), gamma_median).unwrap();
        assert!((half - 0.5).abs() < 1e-12, "{half}");
    }

    #[test]
    fn outage_closed_form_matches_cdf_quadrature() {
        // 20 deterministic parameter sets
        let mut rng = RngStream::new(777, 0);
        let spec = QuadratureSpec { relative_tolerance: 1e-12, max_subdivisions: 6000 };
        for _ in 0..20 {
            let mean_p = 10f64.powf(rng.uniform_in(-9.0, -6.5));
            let s = rng.uniform_in(0.02, 1.0);
            let dist = PowerDistribution::new(mean_p, s).unwrap();
            let gamma_th = snr(mean_p, &noise()) * 10f64.powf(rng.uniform_in(-2.0, 2.0));
            let closed = outage_probability(&dist, &noise(), gamma_th).unwrap();
            let threshold_power = power_at_snr(gamma_th, &noise());
            let quad =
                adaptive_integrate(|p| dist.pdf(p), 0.0, threshold_power, &spec).unwrap();
            assert!((closed - quad).abs() < 1e-9, "{closed} vs {quad}");
        }
    }

    #[test]
    fn outage_is_monotone_in_threshold() {
        let dist = PowerDistribution::new(1e-8, 0.3).unwrap();
        let mut last = -1.0;
        for i in 0..50 {
            let gamma = 10f64.powf(-3.0 + 8.0 * i as f64 / 49.0);
            let p = outage_probability(&dist, &noise(), gamma).unwrap();
            assert!(p >= last);
            last = p;
        }
    }

    #[test]
    fn degenerate_outage_is_a_step() {
        let dist = PowerDistribution::new(1e-8, 0.0).unwrap();
        let at_snr = snr(1e-8, &noise());
        assert_eq!(outage_probability(&dist, &noise(), at_snr * 0.99).unwrap(), 0.0);
        assert_eq!(outage_probability(&dist, &noise(), at_snr * 1.01).unwrap(), 1.0);
    }

    fn fake_result(power: f64, sigma: f64, photons: u64) -> ChannelResult {
        ChannelResult {
            offset: [0.0; 3],
            per_order_power: vec![power],
            total_power: power,
            sigma_tur_sq: sigma,
            per_order_sigma_tur: vec![sigma],
            fov_counts: vec![0],
            standard_error: 0.0,
            photon_count: photons,
            seed: 0,
            scenario_id: "fit".into(),
        }
    }

    #[test]
    fn fit_is_pass_through_for_one_result() {
        let d = fit_power_distribution(&[fake_result(2e-9, 0.11, 1000)]).unwrap();
        assert!((d.mean_power - 2e-9).abs() < 1e-15 * 2e-9);
        assert!((d.sigma_tur_sq - 0.11).abs() < 1e-15);
    }

    #[test]
    fn fit_weights_by_photon_count() {
        let d = fit_power_distribution(&[
            fake_result(1e-9, 0.1, 1000),
            fake_result(4e-9, 0.2, 3000),
        ])
        .unwrap();
        assert!((d.mean_power - (1e-9 + 3.0 * 4e-9) / 4.0).abs() < 1e-24);
        assert!((d.sigma_tur_sq - (0.1 + 3.0 * 0.2) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn fit_rejects_zero_power() {
        let r = fit_power_distribution(&[fake_result(0.0, 0.0, 1000)]);
        assert!(matches!(r, Err(Error::Numeric(_))));
    }
}

//! FFT synthesis of the sea-surface elevation field.
//!
//! Linear filtering: complex white noise shaped in the wavenumber domain by
//! the directional spectrum, Hermitian symmetry enforced, inverse FFT back
//! to a real elevation field. The spectrum is Pierson-Moskowitz in
//! wavenumber form, S_k(k) = (alpha/2) k^{-3} exp(-beta g^2/(U^4 k^2)),
//! with a two-sided cos^2 directional spreading D(phi) = cos^2(phi)/pi.

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::numerics::interp::bilinear;
use crate::numerics::rng::RngStream;

/// Name recorded in export metadata for the spectrum choice.
pub const SPECTRUM_NAME: &str = "pierson-moskowitz-cos2";

const GRAVITY: f64 = 9.81;
const PM_ALPHA: f64 = 8.1e-3;
const PM_BETA: f64 = 0.74;

/// Omnidirectional Pierson-Moskowitz wavenumber spectrum, m^3.
pub fn pm_wavenumber_spectrum(kappa: f64, wind_speed: f64) -> f64 {
    if kappa <= 0.0 || wind_speed <= 0.0 {
        return 0.0;
    }
    let c = PM_BETA * GRAVITY * GRAVITY / wind_speed.powi(4);
    0.5 * PM_ALPHA * kappa.powi(-3) * (-c / (kappa * kappa)).exp()
}

/// Two-dimensional spectral density with cos^2 spreading about +x, m^4.
fn spectrum_2d(kx: f64, ky: f64, wind_speed: f64) -> f64 {
    let kappa = kx.hypot(ky);
    if kappa <= 0.0 {
        return 0.0;
    }
    let cos_phi_sq = (kx / kappa).powi(2);
    pm_wavenumber_spectrum(kappa, wind_speed) / kappa * cos_phi_sq / std::f64::consts::PI
}

/// Sampled elevation field over a rectangular patch centered at the origin.
#[derive(Debug, Clone)]
pub struct SeaSurfaceField {
    pub length_x: f64,
    pub length_y: f64,
    pub samples_x: usize,
    pub samples_y: usize,
    pub dx: f64,
    pub dy: f64,
    /// Row-major, row index along y.
    pub elevation: Vec<f64>,
    pub wind_speed: f64,
    pub seed: u64,
    pub stream_id: u64,
}

impl SeaSurfaceField {
    /// Bilinear elevation lookup at a point in patch coordinates; `None`
    /// outside the sampled area.
    pub fn elevation_at(&self, x: f64, y: f64) -> Option<f64> {
        let fx = (x + 0.5 * self.length_x) / self.dx;
        let fy = (y + 0.5 * self.length_y) / self.dy;
        if fx < 0.0 || fy < 0.0 || fx > (self.samples_x - 1) as f64 || fy > (self.samples_y - 1) as f64
        {
            return None;
        }
        Some(bilinear(&self.elevation, self.samples_x, self.samples_y, fx, fy))
    }

    pub fn mean(&self) -> f64 {
        self.elevation.iter().sum::<f64>() / self.elevation.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.elevation.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
            / self.elevation.len() as f64
    }

    /// Significant wave height, 4 sqrt(variance).
    pub fn significant_wave_height(&self) -> f64 {
        4.0 * self.variance().sqrt()
    }

    /// Flat binary export: text header (dimensions, spacing, provenance)
    /// followed by row-major little-endian f64 samples.
    pub fn write_binary(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(file, "seasurface v1")?;
        writeln!(file, "spectrum {SPECTRUM_NAME}")?;
        writeln!(file, "wind_speed_ms {}", self.wind_speed)?;
        writeln!(file, "length_x_m {}", self.length_x)?;
        writeln!(file, "length_y_m {}", self.length_y)?;
        writeln!(file, "samples_x {}", self.samples_x)?;
        writeln!(file, "samples_y {}", self.samples_y)?;
        writeln!(file, "dx_m {}", self.dx)?;
        writeln!(file, "dy_m {}", self.dy)?;
        writeln!(file, "seed {}", self.seed)?;
        writeln!(file, "stream {}", self.stream_id)?;
        writeln!(file, "data f64le row-major")?;
        for v in &self.elevation {
            file.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

fn wrapped_index(i: usize, n: usize) -> i64 {
    let i = i as i64;
    let n = n as i64;
    if i <= n / 2 { i } else { i - n }
}

/// Synthesize one elevation realization.
///
/// Sample counts must be even and >= 2. The RNG is consumed in a fixed
/// scan order, so a given (seed, stream) reproduces the field bit-exactly.
pub fn synthesize_sea_surface(
    wind_speed: f64,
    length_x: f64,
    length_y: f64,
    samples_x: usize,
    samples_y: usize,
    rng: &mut RngStream,
) -> Result<SeaSurfaceField> {
    if samples_x < 2 || samples_y < 2 || samples_x % 2 != 0 || samples_y % 2 != 0 {
        return Err(Error::Config(format!(
            "sample counts must be even and >= 2, got {samples_x} x {samples_y}"
        )));
    }
    if !(length_x > 0.0 && length_y > 0.0 && wind_speed >= 0.0) {
        return Err(Error::Config("surface lengths must be > 0, wind >= 0".into()));
    }
    let (nx, ny) = (samples_x, samples_y);
    let dkx = 2.0 * std::f64::consts::PI / length_x;
    let dky = 2.0 * std::f64::consts::PI / length_y;

    let mut spec = vec![Complex::new(0.0, 0.0); nx * ny];
    // fill each conjugate pair once, in deterministic row-major scan order
    for j in 0..ny {
        for i in 0..nx {
            let jc = (ny - j) % ny;
            let ic = (nx - i) % nx;
            let self_conjugate = jc == j && ic == i;
            // the primary of the pair is the lexicographically smaller slot
            if !self_conjugate && (jc, ic) < (j, i) {
                continue;
            }
            let kx = wrapped_index(i, nx) as f64 * dkx;
            let ky = wrapped_index(j, ny) as f64 * dky;
            let var = spectrum_2d(kx, ky, wind_speed) * dkx * dky;
            if var <= 0.0 {
                continue;
            }
            let amp = var.sqrt();
            if self_conjugate {
                let g = rng.standard_normal();
                spec[j * nx + i] = Complex::new(amp * g, 0.0);
            } else {
                let gr = rng.standard_normal();
                let gi = rng.standard_normal();
                let a = Complex::new(gr, gi) * (amp / std::f64::consts::SQRT_2);
                spec[j * nx + i] = a;
                spec[jc * nx + ic] = a.conj();
            }
        }
    }

    // unnormalized inverse FFT: f(x) = sum_k A_k exp(+i k x)
    let mut planner = FftPlanner::new();
    let fft_row = planner.plan_fft_inverse(nx);
    for row in spec.chunks_exact_mut(nx) {
        fft_row.process(row);
    }
    let fft_col = planner.plan_fft_inverse(ny);
    let mut column = vec![Complex::new(0.0, 0.0); ny];
    for i in 0..nx {
        for j in 0..ny {
            column[j] = spec[j * nx + i];
        }
        fft_col.process(&mut column);
        for j in 0..ny {
            spec[j * nx + i] = column[j];
        }
    }

    let rms = (spec.iter().map(|c| c.re * c.re).sum::<f64>() / (nx * ny) as f64).sqrt();
    let max_im = spec.iter().map(|c| c.im.abs()).fold(0.0f64, f64::max);
    if max_im > 1e-9 * rms.max(1e-300) {
        return Err(Error::Numeric(format!(
            "hermitian symmetry violated: residual imaginary part {max_im}"
        )));
    }
    let elevation: Vec<f64> = spec.iter().map(|c| c.re).collect();

    Ok(SeaSurfaceField {
        length_x,
        length_y,
        samples_x: nx,
        samples_y: ny,
        dx: length_x / nx as f64,
        dy: length_y / ny as f64,
        elevation,
        wind_speed,
        seed: rng.seed(),
        stream_id: rng.stream_id(),
    })
}

//! Pipeline orchestration: assemble the channel from a scenario, run the
//! transport, and export results as CSV and JSON.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::atmosphere::{
    fading_covariance, instantaneous_irradiance, long_term_spot_radius, mean_irradiance_grid,
    slant_rytov_variance, FadingField, FadingSampler, IrradianceGrid, TurbulenceProfile,
};
use crate::error::{Error, Result};
use crate::geometry::LinkGeometry;
use crate::interface::theta0::Theta0Pdf;
use crate::interface::{
    dot, refract, sample_pitch_angle, synthesize_sea_surface, CoxMunkParams, SeaSurfaceField,
};
use crate::metrics::{
    fit_power_distribution, mean_ber, outage_probability, snr, NoiseModel, PowerDistribution,
};
use crate::numerics::rng::RngStream;
use crate::scenario::{FadingMode, Scenario};
use crate::underwater::transport::PHOTON_STREAM_BASE;
use crate::underwater::{
    run_transport, scintillation_moment, ChannelResult, OceanTurbulenceTable, Receiver,
    TransportContext, TransportOutcome, WaterOptics,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Reserved random-stream ids (photons start at PHOTON_STREAM_BASE).
const STREAM_FADING: u64 = 0;
const STREAM_SURFACE: u64 = 1;

/// Building a per-leg Rytov table costs hundreds of nested quadratures;
/// pipelines that share (turbulence, wavenumber) share the table. Values
/// are deterministic, so caching never changes results.
fn cached_turbulence_table(
    turb: &crate::underwater::OceanTurbulence,
    wavenumber: f64,
) -> Result<std::sync::Arc<OceanTurbulenceTable>> {
    use std::collections::HashMap;
    use std::sync::{Arc, Mutex, OnceLock};
    type Key = (u64, u64, u64, u64);
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<OceanTurbulenceTable>>>> = OnceLock::new();
    let key = (
        turb.epsilon.to_bits(),
        turb.chi_t.to_bits(),
        turb.omega.to_bits(),
        wavenumber.to_bits(),
    );
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let table = Arc::new(OceanTurbulenceTable::new(turb, wavenumber)?);
    cache.lock().unwrap().insert(key, table.clone());
    Ok(table)
}

/// A scenario resolved into every physical intermediate the transport
/// needs. Building it draws the surface realization and, in sampled
/// fading mode, one correlated fading field.
pub struct Pipeline {
    pub scenario: Scenario,
    pub hash: String,
    pub geometry: LinkGeometry,
    pub spot_radius: f64,
    pub rytov_atmosphere: f64,
    pub mean_grid: IrradianceGrid,
    pub weight_grid: Vec<f64>,
    pub fading: Option<FadingField>,
    pub surface: SeaSurfaceField,
    pub slopes: CoxMunkParams,
    pub theta0: Theta0Pdf,
    pub optics: WaterOptics,
    pub turbulence_table: Option<std::sync::Arc<OceanTurbulenceTable>>,
    pub atmospheric_m2: f64,
    pub receiver: Receiver,
    pub noise: NoiseModel,
}

impl Pipeline {
    pub fn prepare(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let hash = scenario.hash();
        let geometry = scenario.link_geometry()?;
        let beam = scenario.beam();
        let profile: TurbulenceProfile = scenario.turbulence_profile();
        let wavenumber = beam.wavenumber();

        let spot_radius = long_term_spot_radius(&beam, &geometry, &profile)?;
        let cells = scenario.resolve_grid_cells(spot_radius);
        let mean_grid = mean_irradiance_grid(&beam, spot_radius, cells);

        let rytov_atmosphere = slant_rytov_variance(&geometry, &profile, wavenumber)?;
        let atmospheric_m2 = scintillation_moment(rytov_atmosphere);

        // photon weights: normalized mean grid, or one lognormal draw
        let (weight_grid, fading) = match scenario.fading {
            FadingMode::Mean => (mean_grid.normalized(), None),
            FadingMode::Sampled => {
                let cov = fading_covariance(&mean_grid, &geometry, &profile, wavenumber)?;
                let sampler = FadingSampler::new(&cov)?;
                let mut rng = RngStream::new(scenario.seed, STREAM_FADING);
                let field = sampler.draw(&mut rng);
                let inst = instantaneous_irradiance(
                    &mean_grid,
                    &field,
                    scenario.atmospheric_transmittance,
                );
                (inst.normalized(), Some(field))
            }
        };

        let mut surface_rng = RngStream::new(scenario.seed, STREAM_SURFACE);
        let surface = synthesize_sea_surface(
            scenario.surface_wind_speed_ms,
            scenario.surface_patch_length_m,
            scenario.surface_patch_length_m,
            scenario.surface_samples,
            scenario.surface_samples,
            &mut surface_rng,
        )?;

        let slopes = scenario.cox_munk()?;
        let theta0 = Theta0Pdf::new(geometry.zenith, &slopes, geometry.eta)?;
        let optics = scenario.water_optics();
        let turbulence_table = match scenario.ocean_turbulence() {
            Some(turb) => Some(cached_turbulence_table(&turb, wavenumber)?),
            None => None,
        };
        let receiver = scenario.receiver()?;
        let noise = scenario.noise_model();

        Ok(Self {
            scenario,
            hash,
            geometry,
            spot_radius,
            rytov_atmosphere,
            mean_grid,
            weight_grid,
            fading,
            surface,
            slopes,
            theta0,
            optics,
            turbulence_table,
            atmospheric_m2,
            receiver,
            noise,
        })
    }

    fn context(&self) -> TransportContext<'_> {
        TransportContext {
            geometry: self.geometry,
            transmit_power: self.scenario.transmit_power_w,
            atmospheric_transmittance: self.scenario.atmospheric_transmittance,
            mean_grid: &self.mean_grid,
            weight_grid: &self.weight_grid,
            surface: &self.surface,
            slopes: self.slopes,
            theta0: &self.theta0,
            optics: self.optics,
            turbulence: self.turbulence_table.as_deref(),
            atmospheric_m2: self.atmospheric_m2,
            receiver: self.receiver,
            max_orders: self.scenario.scattering_orders,
            seed: self.scenario.seed,
            scenario_id: self.hash.clone(),
        }
    }

    /// Transport against receivers at the given offsets.
    pub fn transport(
        &self,
        offsets: &[[f64; 3]],
        collect_traces: bool,
    ) -> Result<TransportOutcome> {
        run_transport(&self.context(), self.scenario.photons, offsets, collect_traces)
    }
}

/// Spatial map of received power over receiver offsets at depth D.
#[derive(Debug, Serialize)]
pub struct PowerMap {
    pub scenario_hash: String,
    pub seed: u64,
    pub photons: u64,
    pub tool_version: String,
    pub extent_m: f64,
    pub lattice: usize,
    /// x offsets (columns) and y offsets (rows), meters.
    pub offsets_x: Vec<f64>,
    pub offsets_y: Vec<f64>,
    /// Row-major powers, watts.
    pub power_w: Vec<f64>,
    pub standard_error_w: Vec<f64>,
    /// Result at the nominal receiver position.
    pub center: ChannelResult,
}

/// Received power over a `lattice x lattice` grid of receiver offsets
/// spanning [-extent, extent]^2 (extent defaults to 2 W_Lt).
pub fn run_power_map(
    pipeline: &Pipeline,
    lattice: usize,
    extent: Option<f64>,
) -> Result<PowerMap> {
    if lattice < 1 || lattice % 2 == 0 {
        return Err(Error::Config("power-map lattice must be odd and >= 1".into()));
    }
    let extent = extent.unwrap_or(2.0 * pipeline.spot_radius);
    let axis: Vec<f64> = (0..lattice)
        .map(|i| {
            if lattice == 1 {
                0.0
            } else {
                -extent + 2.0 * extent * i as f64 / (lattice - 1) as f64
            }
        })
        .collect();
    let mut offsets = Vec::with_capacity(lattice * lattice);
    for y in &axis {
        for x in &axis {
            offsets.push([*x, *y, 0.0]);
        }
    }
    let center_index = (lattice / 2) * lattice + lattice / 2;
    let outcome = pipeline.transport(&offsets, false)?;
    Ok(PowerMap {
        scenario_hash: pipeline.hash.clone(),
        seed: pipeline.scenario.seed,
        photons: pipeline.scenario.photons,
        tool_version: TOOL_VERSION.into(),
        extent_m: extent,
        lattice,
        offsets_x: axis.clone(),
        offsets_y: axis,
        power_w: outcome.results.iter().map(|r| r.total_power).collect(),
        standard_error_w: outcome.results.iter().map(|r| r.standard_error).collect(),
        center: outcome.results[center_index].clone(),
    })
}

/// What a BER sweep varies.
#[derive(Debug, Clone)]
pub enum BerSweep {
    /// Mean received power, log-spaced over [min_w, max_w].
    MeanPower { min_w: f64, max_w: f64, points: usize },
    /// Transmit zenith angle; each point is a full transport run.
    TransmitZenith { degrees: Vec<f64> },
}

#[derive(Debug, Clone, Serialize)]
pub struct BerRow {
    pub swept: f64,
    pub mean_power_w: f64,
    pub sigma_tur_sq: f64,
    pub ber: f64,
}

#[derive(Debug, Serialize)]
pub struct BerTable {
    pub scenario_hash: String,
    pub seed: u64,
    pub photons: u64,
    pub tool_version: String,
    pub swept_variable: String,
    pub rows: Vec<BerRow>,
}

pub fn run_ber_sweep(pipeline: &Pipeline, sweep: &BerSweep) -> Result<BerTable> {
    let noise = pipeline.noise;
    let mut rows = Vec::new();
    let swept_variable;
    match sweep {
        BerSweep::MeanPower { min_w, max_w, points } => {
            swept_variable = "mean_power_w".to_string();
            if !(min_w > &0.0 && max_w > min_w && *points >= 2) {
                return Err(Error::Config("bad power sweep range".into()));
            }
            let outcome = pipeline.transport(&[[0.0; 3]], false)?;
            let sigma = outcome.results[0].sigma_tur_sq;
            for i in 0..*points {
                let f = i as f64 / (*points - 1) as f64;
                let power = min_w * (max_w / min_w).powf(f);
                let dist = PowerDistribution::new(power, sigma)?;
                let ber = mean_ber(&dist, &noise)?;
                rows.push(BerRow {
                    swept: power,
                    mean_power_w: power,
                    sigma_tur_sq: sigma,
                    ber: ber.value,
                });
            }
        }
        BerSweep::TransmitZenith { degrees } => {
            swept_variable = "zenith_deg".to_string();
            for deg in degrees {
                let mut scenario = pipeline.scenario.clone();
                scenario.zenith_deg = *deg;
                let sub = Pipeline::prepare(scenario)?;
                let outcome = sub.transport(&[[0.0; 3]], false)?;
                let dist = fit_power_distribution(&outcome.results)?;
                let ber = mean_ber(&dist, &noise)?;
                rows.push(BerRow {
                    swept: *deg,
                    mean_power_w: dist.mean_power,
                    sigma_tur_sq: dist.sigma_tur_sq,
                    ber: ber.value,
                });
            }
        }
    }
    Ok(BerTable {
        scenario_hash: pipeline.hash.clone(),
        seed: pipeline.scenario.seed,
        photons: pipeline.scenario.photons,
        tool_version: TOOL_VERSION.into(),
        swept_variable,
        rows,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OutageRow {
    pub gamma_th: f64,
    pub gamma_th_db: f64,
    pub outage: f64,
}

#[derive(Debug, Serialize)]
pub struct OutageTable {
    pub scenario_hash: String,
    pub seed: u64,
    pub photons: u64,
    pub tool_version: String,
    pub mean_power_w: f64,
    pub sigma_tur_sq: f64,
    pub rows: Vec<OutageRow>,
}

/// Outage vs threshold SNR; the default range brackets the median SNR by
/// three decades either side.
pub fn run_outage_sweep(
    pipeline: &Pipeline,
    range: Option<(f64, f64)>,
    points: usize,
) -> Result<OutageTable> {
    if points < 2 {
        return Err(Error::Config("outage sweep needs at least 2 points".into()));
    }
    let outcome = pipeline.transport(&[[0.0; 3]], false)?;
    let dist = fit_power_distribution(&outcome.results)?;
    let (lo, hi) = match range {
        Some((lo, hi)) if lo > 0.0 && hi > lo => (lo, hi),
        Some(_) => return Err(Error::Config("bad outage range".into())),
        None => {
            let median = snr(dist.median(), &pipeline.noise);
            (median * 1e-3, median * 1e3)
        }
    };
    let mut rows = Vec::with_capacity(points);
    for i in 0..points {
        let f = i as f64 / (points - 1) as f64;
        let gamma = lo * (hi / lo).powf(f);
        rows.push(OutageRow {
            gamma_th: gamma,
            gamma_th_db: 10.0 * gamma.log10(),
            outage: outage_probability(&dist, &pipeline.noise, gamma)?,
        });
    }
    Ok(OutageTable {
        scenario_hash: pipeline.hash.clone(),
        seed: pipeline.scenario.seed,
        photons: pipeline.scenario.photons,
        tool_version: TOOL_VERSION.into(),
        mean_power_w: dist.mean_power,
        sigma_tur_sq: dist.sigma_tur_sq,
        rows,
    })
}

/// One (zeta, wind) cell of the interface validation battery.
#[derive(Debug, Clone, Serialize)]
pub struct InterfaceCheck {
    pub zeta_deg: f64,
    pub wind_ms: f64,
    pub samples: u64,
    pub l1_distance: f64,
    pub normalization_residual: f64,
    pub raw_mass: f64,
    pub branch_gap_low: f64,
    pub branch_gap_high: f64,
    pub beyond_support: u64,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct InterfaceReport {
    pub scenario_hash: String,
    pub seed: u64,
    pub tool_version: String,
    pub checks: Vec<InterfaceCheck>,
    pub passed: bool,
}

/// Brute-force refraction histogram for one (zeta, sigma^2):
/// signed in-plane pitch, refraction, angle to the calm direction.
/// Returns (per-bin fractions, kept, beyond-support count).
pub fn brute_force_theta0_histogram(
    pdf: &Theta0Pdf,
    samples: u64,
    bins: usize,
    rng: &mut RngStream,
) -> Result<(Vec<f64>, u64, u64)> {
    let slopes = CoxMunkParams { wind_speed: f64::NAN, sigma_sq: pdf.sigma_sq };
    let incident = [0.0, -pdf.zeta.sin(), -pdf.zeta.cos()];
    let calm = refract(incident, [0.0, 0.0, 1.0], pdf.eta)?.refracted_dir;
    let mut hist = vec![0.0f64; bins];
    let mut kept = 0u64;
    let mut beyond = 0u64;
    for _ in 0..samples {
        let pitch = sample_pitch_angle(&slopes, rng) * rng.random_sign();
        let normal = [0.0, -pitch.sin(), pitch.cos()];
        let event = match refract(incident, normal, pdf.eta) {
            Ok(e) => e,
            Err(_) => continue, // grazing facet, discarded upstream
        };
        let theta0 = dot(event.refracted_dir, calm).clamp(-1.0, 1.0).acos();
        if theta0 > pdf.support_max {
            beyond += 1;
            continue;
        }
        let bin = ((theta0 / pdf.support_max) * bins as f64) as usize;
        hist[bin.min(bins - 1)] += 1.0;
        kept += 1;
    }
    if kept == 0 {
        return Err(Error::EmptyResult("no valid refractions in the brute force".into()));
    }
    for v in &mut hist {
        *v /= kept as f64;
    }
    Ok((hist, kept, beyond))
}

/// The closed-form-vs-brute-force battery over zeta x wind, with
/// normalization residuals and branch-continuity gaps.
pub fn validate_interface(
    scenario: &Scenario,
    zeta_degrees: &[f64],
    winds: &[f64],
    samples: u64,
) -> Result<InterfaceReport> {
    let bins = 100usize;
    let mut checks = Vec::new();
    let mut stream = 7000u64;
    for &zeta_deg in zeta_degrees {
        for &wind in winds {
            let slopes = CoxMunkParams::from_wind_speed(wind)?;
            let pdf = Theta0Pdf::new(zeta_deg.to_radians(), &slopes, scenario.eta_air_water)?;
            let mut rng = RngStream::new(scenario.seed, stream);
            stream += 1;
            let (hist, _, beyond) =
                brute_force_theta0_histogram(&pdf, samples, bins, &mut rng)?;
            let width = pdf.support_max / bins as f64;
            let mut l1 = 0.0;
            for (b, h) in hist.iter().enumerate() {
                let mid = (b as f64 + 0.5) * width;
                l1 += (h - pdf.density(mid) * width).abs();
            }
            // independent dense re-integration of the normalized density
            let m = 20_000usize;
            let h_step = pdf.support_max / m as f64;
            let mut total = 0.0;
            for i in 0..m {
                let a = i as f64 * h_step;
                total += h_step / 6.0
                    * (pdf.density(a)
                        + 4.0 * pdf.density(a + 0.5 * h_step)
                        + pdf.density(a + h_step));
            }
            let normalization_residual = (total - 1.0).abs();
            let gaps = pdf.branch_gaps();
            let passed = l1 < 0.05 && normalization_residual < 1e-3;
            checks.push(InterfaceCheck {
                zeta_deg,
                wind_ms: wind,
                samples,
                l1_distance: l1,
                normalization_residual,
                raw_mass: pdf.raw_mass(),
                branch_gap_low: gaps[0],
                branch_gap_high: gaps[1],
                beyond_support: beyond,
                passed,
            });
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(InterfaceReport {
        scenario_hash: scenario.hash(),
        seed: scenario.seed,
        tool_version: TOOL_VERSION.into(),
        checks,
        passed,
    })
}

// ---------------------------------------------------------------------
// Output writers. CSV is RFC-4180 with a header row and per-row metadata
// columns; JSON summaries carry the same provenance fields.
// ---------------------------------------------------------------------

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn write_power_map_csv(map: &PowerMap, dir: &Path) -> Result<PathBuf> {
    let path = dir.join(format!("power_map_{}.csv", map.scenario_hash));
    let mut f = create(&path)?;
    writeln!(f, "scenario_hash,seed,photons,version,x_m,y_m,power_w,se_w")?;
    for (j, y) in map.offsets_y.iter().enumerate() {
        for (i, x) in map.offsets_x.iter().enumerate() {
            let idx = j * map.lattice + i;
            writeln!(
                f,
                "{},{},{},{},{},{},{},{}",
                map.scenario_hash,
                map.seed,
                map.photons,
                map.tool_version,
                x,
                y,
                map.power_w[idx],
                map.standard_error_w[idx]
            )?;
        }
    }
    Ok(path)
}

pub fn write_power_map_json(map: &PowerMap, dir: &Path) -> Result<PathBuf> {
    let path = dir.join(format!("power_map_{}.json", map.scenario_hash));
    let mut f = create(&path)?;
    serde_json::to_writer_pretty(&mut f, map)
        .map_err(|e| Error::Numeric(format!("json: {e}")))?;
    f.write_all(b"\n")?;
    Ok(path)
}

pub fn write_ber_csv(table: &BerTable, dir: &Path) -> Result<PathBuf> {
    let path = dir.join(format!("ber_sweep_{}.csv", table.scenario_hash));
    let mut f = create(&path)?;
    writeln!(
        f,
        "scenario_hash,seed,photons,version,{},mean_power_w,sigma_tur_sq,ber",
        table.swept_variable
    )?;
    for row in &table.rows {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{}",
            table.scenario_hash,
            table.seed,
            table.photons,
            table.tool_version,
            row.swept,
            row.mean_power_w,
            row.sigma_tur_sq,
            row.ber
        )?;
    }
    Ok(path)
}

pub fn write_outage_csv(table: &OutageTable, dir: &Path) -> Result<PathBuf> {
    let path = dir.join(format!("outage_sweep_{}.csv", table.scenario_hash));
    let mut f = create(&path)?;
    writeln!(
        f,
        "scenario_hash,seed,photons,version,gamma_th,gamma_th_db,outage"
    )?;
    for row in &table.rows {
        writeln!(
            f,
            "{},{},{},{},{},{},{}",
            table.scenario_hash,
            table.seed,
            table.photons,
            table.tool_version,
            row.gamma_th,
            row.gamma_th_db,
            row.outage
        )?;
    }
    Ok(path)
}

pub fn write_interface_report_json(report: &InterfaceReport, dir: &Path) -> Result<PathBuf> {
    let path = dir.join(format!("interface_validation_{}.json", report.scenario_hash));
    let mut f = create(&path)?;
    serde_json::to_writer_pretty(&mut f, report)
        .map_err(|e| Error::Numeric(format!("json: {e}")))?;
    f.write_all(b"\n")?;
    Ok(path)
}

/// Density curve export for plotting one (zeta, wind) combination.
pub fn write_theta0_curve_csv(
    pdf: &Theta0Pdf,
    wind: f64,
    scenario_hash: &str,
    seed: u64,
    dir: &Path,
) -> Result<PathBuf> {
    let path = dir.join(format!(
        "theta0_pdf_z{:02}_v{:02}_{}.csv",
        pdf.zeta.to_degrees().round() as i64,
        wind.round() as i64,
        scenario_hash
    ));
    let mut f = create(&path)?;
    writeln!(f, "scenario_hash,seed,version,zeta_deg,wind_ms,theta0_rad,density")?;
    let n = 512;
    for i in 0..=n {
        let theta = pdf.support_max * i as f64 / n as f64;
        writeln!(
            f,
            "{},{},{},{},{},{},{}",
            scenario_hash,
            seed,
            TOOL_VERSION,
            pdf.zeta.to_degrees(),
            wind,
            theta,
            pdf.density(theta)
        )?;
    }
    Ok(path)
}

/// Per-photon trace export (debug runs only).
pub fn write_traces_csv(
    traces: &[crate::underwater::transport::TraceRow],
    scenario_hash: &str,
    seed: u64,
    photons: u64,
    dir: &Path,
) -> Result<PathBuf> {
    let path = dir.join(format!("traces_{scenario_hash}.csv"));
    let mut f = create(&path)?;
    writeln!(f, "scenario_hash,seed,photons,version,photon,order,x_m,y_m,z_m,weight,p_d")?;
    for t in traces {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{},{},{}",
            scenario_hash,
            seed,
            photons,
            TOOL_VERSION,
            t.photon,
            t.order,
            t.x,
            t.y,
            t.z,
            t.weight,
            t.p_d
        )?;
    }
    Ok(path)
}

/// PHOTON_STREAM_BASE is re-exported for tests that build photon streams.
pub const fn photon_stream_base() -> u64 {
    PHOTON_STREAM_BASE
}

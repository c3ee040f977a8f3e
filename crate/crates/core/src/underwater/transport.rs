//! Semi-analytic Monte Carlo photon transport.
//!
//! Photons are emitted from the above-surface irradiance grid, refracted
//! through per-photon Cox-Munk facets, and walked through at most N_s
//! particle scatterings. Detection is scored analytically at every order
//! against each receiver. Per-leg lognormal turbulence moments accumulate
//! into the composite scintillation coefficient.
//!
//! Every photon owns the random stream keyed by its index, and batch
//! partial sums are reduced in fixed index order, so results are
//! bit-identical for any worker count.

use rayon::prelude::*;
use serde::Serialize;

use crate::atmosphere::IrradianceGrid;
use crate::error::{Error, Result};
use crate::geometry::LinkGeometry;
use crate::interface::theta0::Theta0Pdf;
use crate::interface::{dot, normalize, refract, sample_pitch_angle, CoxMunkParams, SeaSurfaceField};
use crate::numerics::interp::bilinear;
use crate::numerics::rng::RngStream;

use super::{
    hg_phase, rotate_direction, sample_hg_angle, sample_step, OceanTurbulenceTable, Receiver,
    WaterOptics,
};

/// Stream ids below this are reserved for field-level draws (fading,
/// surface); photon i uses PHOTON_STREAM_BASE + i.
pub const PHOTON_STREAM_BASE: u64 = 1000;

const BATCH: u64 = 4096;

/// One photon at the water entry point.
#[derive(Debug, Clone)]
pub struct Photon {
    /// World position (receiver at the origin, z up), meters.
    pub position: [f64; 3],
    /// Unit travel direction.
    pub direction: [f64; 3],
    /// Statistical weight from the fluctuation grid.
    pub weight: f64,
    /// Fresnel transmittance of its surface facet.
    pub transmittance: f64,
    /// Deviation of the refracted direction from the calm-water direction.
    pub deviation: f64,
    pub scatter_order: usize,
    /// Traveled leg lengths, starting with the atmospheric slant path.
    pub leg_lengths: Vec<f64>,
    pub alive: bool,
}

/// Emission tallies.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct EmissionDiagnostics {
    pub requested: u64,
    pub emitted: u64,
    pub discarded_out_of_field: u64,
    pub discarded_grazing: u64,
}

/// Everything a transport run needs beyond the photon count.
pub struct TransportContext<'a> {
    pub geometry: LinkGeometry,
    pub transmit_power: f64,
    pub atmospheric_transmittance: f64,
    pub mean_grid: &'a IrradianceGrid,
    /// Normalized weighting grid (the fluctuation grid scaled to unit sum),
    /// same layout as the mean grid.
    pub weight_grid: &'a [f64],
    pub surface: &'a SeaSurfaceField,
    pub slopes: CoxMunkParams,
    pub theta0: &'a Theta0Pdf,
    pub optics: WaterOptics,
    pub turbulence: Option<&'a OceanTurbulenceTable>,
    /// M2 of the atmospheric leg (the i = -1 factor), shared by all photons.
    pub atmospheric_m2: f64,
    pub receiver: Receiver,
    pub max_orders: usize,
    pub seed: u64,
    pub scenario_id: String,
}

/// Power and scintillation tallies for one receiver position.
#[derive(Debug, Clone, Serialize)]
pub struct ChannelResult {
    /// Receiver offset from the nominal origin, meters.
    pub offset: [f64; 3],
    /// P_{r,n}, watts, n = 0..=N_s.
    pub per_order_power: Vec<f64>,
    /// Total received power, watts.
    pub total_power: f64,
    /// Composite turbulent scintillation coefficient.
    pub sigma_tur_sq: f64,
    /// Per-order turbulent variances sigma_tur_n^2.
    pub per_order_sigma_tur: Vec<f64>,
    /// Per-order in-FOV scattering counts backing sigma_tur.
    pub fov_counts: Vec<u64>,
    /// Monte Carlo standard error of total_power.
    pub standard_error: f64,
    pub photon_count: u64,
    pub seed: u64,
    pub scenario_id: String,
}

/// One row of the optional per-photon debug trace.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub photon: u64,
    pub order: u32,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub weight: f64,
    pub p_d: f64,
}

/// Outcome of a transport run: one result per receiver offset.
#[derive(Debug)]
pub struct TransportOutcome {
    pub results: Vec<ChannelResult>,
    pub diagnostics: EmissionDiagnostics,
    pub traces: Option<Vec<TraceRow>>,
}

struct EmissionSetup {
    cells: usize,
    cell_size: f64,
    half_width: f64,
    /// CDF over the column-major flattening of the normalized mean grid.
    cdf: Vec<f64>,
    sec_zeta: f64,
    surface_shift_y: f64,
    incident: [f64; 3],
    calm_direction: [f64; 3],
}

impl EmissionSetup {
    fn build(ctx: &TransportContext<'_>) -> Result<Self> {
        let grid = ctx.mean_grid;
        let m = grid.cells;
        let probabilities = grid.normalized();
        if probabilities.iter().sum::<f64>() <= 0.0 {
            return Err(Error::EmptyResult("mean irradiance grid carries no power".into()));
        }
        // column-major flatten: k -> (row = k % m, col = k / m)
        let mut cdf = Vec::with_capacity(m * m);
        let mut acc = 0.0;
        for k in 0..m * m {
            let (row, col) = (k % m, k / m);
            acc += probabilities[row * m + col];
            cdf.push(acc);
        }
        let last = *cdf.last().unwrap();
        for v in &mut cdf {
            *v /= last;
        }
        let zeta = ctx.geometry.zenith;
        let incident = [0.0, -zeta.sin(), -zeta.cos()];
        let calm = refract(incident, [0.0, 0.0, 1.0], ctx.geometry.eta)?.refracted_dir;
        Ok(Self {
            cells: m,
            cell_size: grid.cell_size,
            half_width: grid.half_width,
            cdf,
            sec_zeta: 1.0 / zeta.cos(),
            surface_shift_y: ctx.geometry.receiver_depth * ctx.geometry.refraction_zenith.tan(),
            incident,
            calm_direction: calm,
        })
    }
}

enum Emitted {
    Photon(Photon),
    OutOfField,
    Grazing,
}

fn emit_single(
    ctx: &TransportContext<'_>,
    setup: &EmissionSetup,
    rng: &mut RngStream,
) -> Emitted {
    let m = setup.cells;
    // cell index from the CDF, column-major reconstruction
    let u = rng.uniform();
    let k = setup.cdf.partition_point(|c| *c < u).min(m * m - 1);
    let (row, col) = (k % m, k / m);
    // uniform jitter inside the cell
    let jx = rng.uniform();
    let jy = rng.uniform();
    let x_r = setup.cell_size * (col as f64 + jx) - setup.half_width;
    let y_r = setup.cell_size * (row as f64 + jy) - setup.half_width;
    // statistical weight interpolated from the fluctuation grid
    let fx = (x_r + setup.half_width) / setup.cell_size - 0.5;
    let fy = (y_r + setup.half_width) / setup.cell_size - 0.5;
    let weight = bilinear(ctx.weight_grid, m, m, fx, fy);

    // elliptical footprint stretch along the incidence plane
    let x_s = x_r;
    let y_s = y_r * setup.sec_zeta;
    let elevation = match ctx.surface.elevation_at(x_s, y_s) {
        Some(e) => e,
        None => return Emitted::OutOfField,
    };
    let position = [
        x_s,
        y_s + setup.surface_shift_y,
        elevation + ctx.geometry.receiver_depth,
    ];

    // per-photon facet refraction
    let pitch = sample_pitch_angle(&ctx.slopes, rng);
    let azimuth = rng.uniform_in(0.0, 2.0 * std::f64::consts::PI);
    let normal = [
        azimuth.cos() * pitch.sin(),
        azimuth.sin() * pitch.sin(),
        pitch.cos(),
    ];
    let event = match refract(setup.incident, normal, ctx.geometry.eta) {
        Ok(e) => e,
        Err(_) => return Emitted::Grazing,
    };
    let direction = normalize(event.refracted_dir);
    let deviation = dot(direction, setup.calm_direction).clamp(-1.0, 1.0).acos();
    Emitted::Photon(Photon {
        position,
        direction,
        weight,
        transmittance: event.transmittance,
        deviation,
        scatter_order: 0,
        leg_lengths: vec![ctx.geometry.slant_path_length()],
        alive: true,
    })
}

/// Emit `count` photons (spec surface for tests and inspection; the
/// transport itself fuses emission into the per-photon walk).
pub fn emit_photons(
    ctx: &TransportContext<'_>,
    count: u64,
) -> Result<(Vec<Photon>, EmissionDiagnostics)> {
    let setup = EmissionSetup::build(ctx)?;
    let mut photons = Vec::with_capacity(count as usize);
    let mut diag = EmissionDiagnostics { requested: count, ..Default::default() };
    for i in 0..count {
        let mut rng = RngStream::new(ctx.seed, PHOTON_STREAM_BASE + i);
        match emit_single(ctx, &setup, &mut rng) {
            Emitted::Photon(p) => {
                photons.push(p);
                diag.emitted += 1;
            }
            Emitted::OutOfField => diag.discarded_out_of_field += 1,
            Emitted::Grazing => diag.discarded_grazing += 1,
        }
    }
    if diag.emitted == 0 {
        return Err(Error::EmptyResult(format!(
            "all {count} photons discarded (out of field {}, grazing {})",
            diag.discarded_out_of_field, diag.discarded_grazing
        )));
    }
    Ok((photons, diag))
}

#[derive(Clone)]
struct BatchTallies {
    /// [offset][order] weighted detection sums.
    power: Vec<Vec<f64>>,
    /// [offset] per-photon total contribution and its square.
    total: Vec<f64>,
    total_sq: Vec<f64>,
    /// [offset][order] turbulence-product sums and in-FOV counts.
    turb: Vec<Vec<f64>>,
    counts: Vec<Vec<u64>>,
    out_of_field: u64,
    grazing: u64,
    traces: Vec<TraceRow>,
}

impl BatchTallies {
    fn new(offsets: usize, orders: usize) -> Self {
        Self {
            power: vec![vec![0.0; orders + 1]; offsets],
            total: vec![0.0; offsets],
            total_sq: vec![0.0; offsets],
            turb: vec![vec![0.0; orders + 1]; offsets],
            counts: vec![vec![0; orders + 1]; offsets],
            out_of_field: 0,
            grazing: 0,
            traces: Vec::new(),
        }
    }
}

/// Receiver constants hoisted out of the scoring loops.
struct ScoringConstants {
    axis: [f64; 3],
    cos_fov: f64,
    aperture_radius_sq: f64,
    k_e: f64,
    albedo: f64,
    hg_g: f64,
}

impl ScoringConstants {
    fn new(receiver: &Receiver, optics: &WaterOptics) -> Self {
        let r_a = receiver.aperture_radius();
        Self {
            axis: receiver.fov_axis,
            cos_fov: receiver.fov_half_angle.cos(),
            aperture_radius_sq: r_a * r_a,
            k_e: optics.extinction(),
            albedo: optics.albedo(),
            hg_g: optics.hg_g,
        }
    }

    /// Shared geometric factors for one (event, receiver) pair when the
    /// position lies in the FOV cone: (distance, cos(phi_r), Omega_r).
    /// cos(phi_r) can still be <= 0 inside a wide cone; the power factor
    /// zeroes then while the FOV indicator for the turbulence tally holds.
    #[inline]
    fn geometry(&self, rel: [f64; 3]) -> Option<(f64, f64, f64)> {
        let d_sq = rel[0] * rel[0] + rel[1] * rel[1] + rel[2] * rel[2];
        if d_sq == 0.0 {
            return None;
        }
        let d = d_sq.sqrt();
        let cos_phi_r = (self.axis[0] * rel[0] + self.axis[1] * rel[1] + self.axis[2] * rel[2]) / d;
        if cos_phi_r < self.cos_fov {
            return None;
        }
        let omega = 2.0 * std::f64::consts::PI
            * (1.0 - d / (d_sq + self.aperture_radius_sq).sqrt());
        Some((d, cos_phi_r, omega))
    }
}

fn walk_photon(
    ctx: &TransportContext<'_>,
    setup: &EmissionSetup,
    consts: &ScoringConstants,
    offsets: &[[f64; 3]],
    photon_index: u64,
    tallies: &mut BatchTallies,
    per_offset_total: &mut [f64],
    collect_traces: bool,
) {
    let mut rng = RngStream::new(ctx.seed, PHOTON_STREAM_BASE + photon_index);
    let mut photon = match emit_single(ctx, setup, &mut rng) {
        Emitted::Photon(p) => p,
        Emitted::OutOfField => {
            tallies.out_of_field += 1;
            return;
        }
        Emitted::Grazing => {
            tallies.grazing += 1;
            return;
        }
    };
    let carried = photon.weight * photon.transmittance;
    let moment_of = |d: f64| ctx.turbulence.map_or(1.0, |t| t.moment(d));
    per_offset_total[..offsets.len()].fill(0.0);

    // zero order: direct path from the water entry point. The interface
    // density is evaluated at the photon's own deviation, so it is shared
    // across receivers.
    let direct_density = ctx.theta0.density(photon.deviation);
    let mut legs_product = ctx.atmospheric_m2;
    for (r, offset) in offsets.iter().enumerate() {
        let rel = [
            photon.position[0] - offset[0],
            photon.position[1] - offset[1],
            photon.position[2] - offset[2],
        ];
        let mut p_d = 0.0;
        if let Some((d0, cos_phi_r, omega)) = consts.geometry(rel) {
            if cos_phi_r > 0.0 {
                p_d = (-consts.k_e * d0).exp() * cos_phi_r * (direct_density * omega).min(1.0);
                tallies.power[r][0] += carried * p_d;
                per_offset_total[r] += carried * p_d;
            }
            tallies.turb[r][0] += legs_product * moment_of(d0) - 1.0;
            tallies.counts[r][0] += 1;
        }
        if collect_traces && r == 0 {
            tallies.traces.push(TraceRow {
                photon: photon_index,
                order: 0,
                x: photon.position[0],
                y: photon.position[1],
                z: photon.position[2],
                weight: carried,
                p_d,
            });
        }
    }

    // particle scattering orders
    let mut albedo_acc = 1.0f64;
    for order in 1..=ctx.max_orders {
        let step = sample_step(consts.k_e, &mut rng);
        for i in 0..3 {
            photon.position[i] += photon.direction[i] * step;
        }
        // photons that climb back above the (wavy) surface leave the water;
        // the elevation patch lives in footprint coordinates, shifted from
        // the world frame by the underwater closure offset along y
        let surface_z = ctx.geometry.receiver_depth
            + ctx
                .surface
                .elevation_at(photon.position[0], photon.position[1] - setup.surface_shift_y)
                .unwrap_or(0.0);
        if photon.position[2] > surface_z {
            photon.alive = false;
            break;
        }
        photon.scatter_order = order;
        legs_product *= moment_of(step);

        let scatter_weight = carried * albedo_acc;
        for (r, offset) in offsets.iter().enumerate() {
            let rel = [
                photon.position[0] - offset[0],
                photon.position[1] - offset[1],
                photon.position[2] - offset[2],
            ];
            let mut p_d = 0.0;
            if let Some((d_n, cos_phi_r, omega)) = consts.geometry(rel) {
                if cos_phi_r > 0.0 {
                    // deflection needed to head for the receiver
                    let cos_theta = -(photon.direction[0] * rel[0]
                        + photon.direction[1] * rel[1]
                        + photon.direction[2] * rel[2])
                        / d_n;
                    let hg = hg_phase(cos_theta.clamp(-1.0, 1.0), consts.hg_g);
                    p_d = consts.albedo
                        * (-consts.k_e * d_n).exp()
                        * cos_phi_r
                        * (hg * omega).min(1.0);
                    tallies.power[r][order] += scatter_weight * p_d;
                    per_offset_total[r] += scatter_weight * p_d;
                }
                tallies.turb[r][order] += legs_product * moment_of(d_n) - 1.0;
                tallies.counts[r][order] += 1;
            }
            if collect_traces && r == 0 {
                tallies.traces.push(TraceRow {
                    photon: photon_index,
                    order: order as u32,
                    x: photon.position[0],
                    y: photon.position[1],
                    z: photon.position[2],
                    weight: scatter_weight,
                    p_d,
                });
            }
        }

        albedo_acc *= consts.albedo;
        if carried * albedo_acc < 1e-12 {
            break;
        }
        let theta = sample_hg_angle(consts.hg_g, &mut rng);
        let phi = rng.uniform_in(0.0, 2.0 * std::f64::consts::PI);
        photon.direction = rotate_direction(photon.direction, theta, phi);
    }

    for r in 0..offsets.len() {
        tallies.total[r] += per_offset_total[r];
        tallies.total_sq[r] += per_offset_total[r] * per_offset_total[r];
    }
}

/// Kahan-compensated accumulator.
#[derive(Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Run the transport for `photon_count` photons against one receiver per
/// entry of `offsets` (the receiver translated rigidly; `[0,0,0]` is the
/// nominal position).
pub fn run_transport(
    ctx: &TransportContext<'_>,
    photon_count: u64,
    offsets: &[[f64; 3]],
    collect_traces: bool,
) -> Result<TransportOutcome> {
    if photon_count == 0 {
        return Err(Error::Config("photon count must be >= 1".into()));
    }
    if offsets.is_empty() {
        return Err(Error::Config("at least one receiver offset required".into()));
    }
    if collect_traces && photon_count > 10_000 {
        return Err(Error::Config(
            "debug traces are limited to runs of at most 10000 photons".into(),
        ));
    }
    let setup = EmissionSetup::build(ctx)?;
    let consts = ScoringConstants::new(&ctx.receiver, &ctx.optics);
    let orders = ctx.max_orders;

    let batch_count = photon_count.div_ceil(BATCH);
    let batches: Vec<BatchTallies> = (0..batch_count)
        .into_par_iter()
        .map(|b| {
            let mut tallies = BatchTallies::new(offsets.len(), orders);
            let mut scratch = vec![0.0f64; offsets.len()];
            let lo = b * BATCH;
            let hi = ((b + 1) * BATCH).min(photon_count);
            for i in lo..hi {
                walk_photon(
                    ctx, &setup, &consts, offsets, i, &mut tallies, &mut scratch,
                    collect_traces,
                );
            }
            tallies
        })
        .collect();

    // fixed-order compensated reduction: bit-stable across worker counts
    let mut power = vec![vec![Kahan::default(); orders + 1]; offsets.len()];
    let mut turb = vec![vec![Kahan::default(); orders + 1]; offsets.len()];
    let mut counts = vec![vec![0u64; orders + 1]; offsets.len()];
    let mut total = vec![Kahan::default(); offsets.len()];
    let mut total_sq = vec![Kahan::default(); offsets.len()];
    let mut diag = EmissionDiagnostics { requested: photon_count, ..Default::default() };
    let mut traces = collect_traces.then(Vec::new);
    for batch in batches {
        for r in 0..offsets.len() {
            for n in 0..=orders {
                power[r][n].add(batch.power[r][n]);
                turb[r][n].add(batch.turb[r][n]);
                counts[r][n] += batch.counts[r][n];
            }
            total[r].add(batch.total[r]);
            total_sq[r].add(batch.total_sq[r]);
        }
        diag.discarded_out_of_field += batch.out_of_field;
        diag.discarded_grazing += batch.grazing;
        if let Some(t) = traces.as_mut() {
            t.extend(batch.traces);
        }
    }
    diag.emitted = photon_count - diag.discarded_out_of_field - diag.discarded_grazing;
    if diag.emitted == 0 {
        return Err(Error::EmptyResult(format!(
            "all {photon_count} photons discarded (out of field {}, grazing {})",
            diag.discarded_out_of_field, diag.discarded_grazing
        )));
    }

    let scale = ctx.transmit_power * ctx.atmospheric_transmittance / photon_count as f64;
    let results = (0..offsets.len())
        .map(|r| {
            let per_order_power: Vec<f64> =
                (0..=orders).map(|n| power[r][n].sum * scale).collect();
            let total_power: f64 = per_order_power.iter().sum();
            let per_order_sigma_tur: Vec<f64> = (0..=orders)
                .map(|n| {
                    if counts[r][n] > 0 {
                        turb[r][n].sum / counts[r][n] as f64
                    } else {
                        0.0
                    }
                })
                .collect();
            let mut sigma_tur_sq = 0.0;
            if total_power > 0.0 {
                for n in 0..=orders {
                    sigma_tur_sq +=
                        (per_order_power[n] / total_power).powi(2) * per_order_sigma_tur[n];
                }
            }
            let mp = photon_count as f64;
            let mean_c = total[r].sum / mp;
            let var_c = (total_sq[r].sum / mp - mean_c * mean_c).max(0.0);
            let standard_error = scale * (var_c * mp).sqrt();
            ChannelResult {
                offset: offsets[r],
                per_order_power,
                total_power,
                sigma_tur_sq,
                per_order_sigma_tur,
                fov_counts: counts[r].clone(),
                standard_error,
                photon_count,
                seed: ctx.seed,
                scenario_id: ctx.scenario_id.clone(),
            }
        })
        .collect();

    Ok(TransportOutcome { results, diagnostics: diag, traces })
}

//! Command-line front end for the satellite-to-underwater channel
//! simulator.
//!
//! Subcommands: power-map, ber-sweep, outage-sweep, validate-interface,
//! print-defaults. All randomness flows from one run seed; --threads
//! changes wall time only, never results.
//!
//! Exit codes: 0 ok, 2 configuration error, 3 numeric failure,
//! 4 validation failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stulc_core::error::Error;
use stulc_core::interface::theta0::Theta0Pdf;
use stulc_core::interface::CoxMunkParams;
use stulc_core::runner::{
    self, run_ber_sweep, run_outage_sweep, run_power_map, validate_interface, BerSweep, Pipeline,
};
use stulc_core::scenario::Scenario;

#[derive(Parser)]
#[command(
    name = "stulc",
    version,
    about = "Satellite-to-underwater laser communication channel simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Scenario file (flat dotted keys); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the run seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the photon count.
    #[arg(long)]
    photons: Option<u64>,
    /// Worker threads (0 = all cores). Results never depend on this.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Dump per-photon traces (small photon counts only).
    #[arg(long, default_value_t = false)]
    debug_traces: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Received power over a lattice of receiver offsets at depth D.
    PowerMap {
        #[command(flatten)]
        common: CommonArgs,
        /// Lattice cells per side (odd).
        #[arg(long, default_value_t = 21)]
        lattice: usize,
        /// Half-extent of the offset lattice in meters (default 2 W_Lt).
        #[arg(long)]
        extent: Option<f64>,
    },
    /// BER against mean received power or transmit zenith angle.
    BerSweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Sweep variable: power | angle.
        #[arg(long, default_value = "power")]
        sweep: String,
        /// Power sweep lower bound, watts.
        #[arg(long, default_value_t = 1e-9)]
        min_power: f64,
        /// Power sweep upper bound, watts.
        #[arg(long, default_value_t = 1e-7)]
        max_power: f64,
        /// Number of sweep points.
        #[arg(long, default_value_t = 25)]
        points: usize,
        /// Angle sweep values, degrees (comma separated).
        #[arg(long, value_delimiter = ',', default_value = "0,15,30,45")]
        angles: Vec<f64>,
    },
    /// Outage probability against the threshold SNR.
    OutageSweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Lower threshold SNR (linear); default brackets the median.
        #[arg(long)]
        min_gamma: Option<f64>,
        /// Upper threshold SNR (linear).
        #[arg(long)]
        max_gamma: Option<f64>,
        #[arg(long, default_value_t = 25)]
        points: usize,
    },
    /// Closed-form vs brute-force interface battery.
    ValidateInterface {
        #[command(flatten)]
        common: CommonArgs,
        /// Transmit zenith angles to test, degrees.
        #[arg(long, value_delimiter = ',', default_value = "0,15,30,45")]
        zetas: Vec<f64>,
        /// Wind speeds to test, m/s.
        #[arg(long, value_delimiter = ',', default_value = "3,6,12")]
        winds: Vec<f64>,
        /// Brute-force samples per combination.
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
    },
    /// Print the default scenario in the flat-key format.
    PrintDefaults,
}

fn load_scenario(common: &CommonArgs) -> Result<Scenario, Error> {
    let mut scenario = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            Scenario::from_flat_text(&text)?
        }
        None => Scenario::default(),
    };
    if let Some(seed) = common.seed {
        scenario.seed = seed;
    }
    if let Some(photons) = common.photons {
        scenario.photons = photons;
    }
    scenario.validate()?;
    Ok(scenario)
}

fn install_thread_pool(threads: usize) -> Result<(), Error> {
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::PrintDefaults => {
            print!("{}", Scenario::default().to_flat_text());
            Ok(ExitCode::SUCCESS)
        }
        Command::PowerMap { common, lattice, extent } => {
            install_thread_pool(common.threads)?;
            let scenario = load_scenario(&common)?;
            let pipeline = Pipeline::prepare(scenario)?;
            eprintln!(
                "power-map: scenario {} seed {} photons {} spot radius {:.4} m",
                pipeline.hash,
                pipeline.scenario.seed,
                pipeline.scenario.photons,
                pipeline.spot_radius
            );
            let map = run_power_map(&pipeline, lattice, extent)?;
            let csv = runner::write_power_map_csv(&map, &common.out_dir)?;
            let json = runner::write_power_map_json(&map, &common.out_dir)?;
            if common.debug_traces {
                let outcome = pipeline.transport(&[[0.0, 0.0, 0.0]], true)?;
                if let Some(traces) = outcome.traces {
                    let path = runner::write_traces_csv(
                        &traces,
                        &pipeline.hash,
                        pipeline.scenario.seed,
                        pipeline.scenario.photons,
                        &common.out_dir,
                    )?;
                    eprintln!("wrote {}", path.display());
                }
                let surface_path =
                    common.out_dir.join(format!("sea_surface_{}.bin", pipeline.hash));
                pipeline.surface.write_binary(&surface_path)?;
                eprintln!("wrote {}", surface_path.display());
            }
            eprintln!(
                "center power {:.6e} W (sigma_tur^2 {:.4e})",
                map.center.total_power, map.center.sigma_tur_sq
            );
            eprintln!("wrote {}", csv.display());
            eprintln!("wrote {}", json.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::BerSweep { common, sweep, min_power, max_power, points, angles } => {
            install_thread_pool(common.threads)?;
            let scenario = load_scenario(&common)?;
            let pipeline = Pipeline::prepare(scenario)?;
            let sweep = match sweep.as_str() {
                "power" => BerSweep::MeanPower { min_w: min_power, max_w: max_power, points },
                "angle" => BerSweep::TransmitZenith { degrees: angles },
                other => {
                    return Err(Error::Config(format!(
                        "--sweep must be 'power' or 'angle', got '{other}'"
                    )))
                }
            };
            let table = run_ber_sweep(&pipeline, &sweep)?;
            let path = runner::write_ber_csv(&table, &common.out_dir)?;
            eprintln!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::OutageSweep { common, min_gamma, max_gamma, points } => {
            install_thread_pool(common.threads)?;
            let scenario = load_scenario(&common)?;
            let pipeline = Pipeline::prepare(scenario)?;
            let range = match (min_gamma, max_gamma) {
                (Some(lo), Some(hi)) => Some((lo, hi)),
                (None, None) => None,
                _ => {
                    return Err(Error::Config(
                        "--min-gamma and --max-gamma must be given together".into(),
                    ))
                }
            };
            let table = run_outage_sweep(&pipeline, range, points)?;
            let path = runner::write_outage_csv(&table, &common.out_dir)?;
            eprintln!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::ValidateInterface { common, zetas, winds, samples } => {
            install_thread_pool(common.threads)?;
            let scenario = load_scenario(&common)?;
            let report = validate_interface(&scenario, &zetas, &winds, samples)?;
            let path = runner::write_interface_report_json(&report, &common.out_dir)?;
            for &zeta in &zetas {
                for &wind in &winds {
                    let slopes = CoxMunkParams::from_wind_speed(wind)?;
                    let pdf =
                        Theta0Pdf::new(zeta.to_radians(), &slopes, scenario.eta_air_water)?;
                    runner::write_theta0_curve_csv(
                        &pdf,
                        wind,
                        &scenario.hash(),
                        scenario.seed,
                        &common.out_dir,
                    )?;
                }
            }
            for check in &report.checks {
                eprintln!(
                    "zeta {:5.1} deg  wind {:4.1} m/s  L1 {:.4}  |int f - 1| {:.2e}  {}",
                    check.zeta_deg,
                    check.wind_ms,
                    check.l1_distance,
                    check.normalization_residual,
                    if check.passed { "pass" } else { "FAIL" }
                );
            }
            eprintln!("wrote {}", path.display());
            if report.passed {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("interface validation FAILED");
                Ok(ExitCode::from(4))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}

//! Scenario configuration: a flat dotted-key text format, strict parsing
//! (unknown keys are errors), validation against every module's
//! invariants, and a canonical form whose SHA-256 digest identifies runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::atmosphere::{BeamParams, TurbulenceProfile};
use crate::error::{Error, Result};
use crate::geometry::LinkGeometry;
use crate::interface::CoxMunkParams;
use crate::metrics::NoiseModel;
use crate::underwater::{OceanTurbulence, Receiver, WaterOptics};

/// Named strength of the atmospheric profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AtmospherePreset {
    Weak,
    Strong,
    Vacuum,
    Custom,
}

/// Named water types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WaterPreset {
    Clear,
    Coastal,
    Custom,
}

/// Named oceanic turbulence strengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OceanTurbulencePreset {
    Weak,
    Strong,
    Off,
    Custom,
}

/// How photon weights are drawn from the atmosphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FadingMode {
    /// Weights from the mean grid (ensemble-average maps).
    Mean,
    /// One correlated lognormal realization per run seed.
    Sampled,
}

/// Complete run configuration with the published §IV-style defaults.
#[derive(Debug, Clone, Serialize)]
pub struct Scenario {
    pub satellite_height_m: f64,
    pub receiver_depth_m: f64,
    pub zenith_deg: f64,
    pub eta_air_water: f64,

    pub wavelength_m: f64,
    pub divergence_rad: f64,
    pub transmit_power_w: f64,
    pub phase_front_radius_m: f64,

    pub atmospheric_transmittance: f64,
    pub atmosphere_preset: AtmospherePreset,
    pub cn2_ground: f64,
    pub wind_high_altitude_ms: f64,
    pub outer_scale_m: f64,
    pub fading: FadingMode,

    pub grid_cell_size_m: f64,
    pub grid_cells: usize,

    pub surface_wind_speed_ms: f64,
    pub surface_patch_length_m: f64,
    pub surface_samples: usize,

    pub water_preset: WaterPreset,
    pub water_absorption_per_m: f64,
    pub water_scattering_per_m: f64,
    pub water_hg_g: f64,

    pub ocean_turbulence_preset: OceanTurbulencePreset,
    pub ocean_epsilon: f64,
    pub ocean_chi_t: f64,
    pub ocean_omega: f64,

    pub receiver_aperture_area_m2: f64,
    pub receiver_zenith_deg: f64,
    pub receiver_azimuth_deg: f64,
    pub receiver_fov_half_angle_deg: f64,

    pub noise_temperature_k: f64,
    pub noise_bandwidth_hz: f64,
    pub noise_resistance_ohm: f64,
    pub noise_responsivity_a_w: f64,

    pub photons: u64,
    pub seed: u64,
    pub scattering_orders: usize,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            satellite_height_m: 200_000.0,
            receiver_depth_m: 10.0,
            zenith_deg: 0.0,
            eta_air_water: 0.75,
            wavelength_m: 532e-9,
            divergence_rad: 22e-6,
            transmit_power_w: 5.0,
            phase_front_radius_m: f64::INFINITY,
            atmospheric_transmittance: 0.7,
            atmosphere_preset: AtmospherePreset::Weak,
            cn2_ground: 1.7e-17,
            wind_high_altitude_ms: 21.0,
            outer_scale_m: 10.0,
            fading: FadingMode::Mean,
            grid_cell_size_m: 0.1,
            grid_cells: 0,
            surface_wind_speed_ms: 6.0,
            surface_patch_length_m: 20.0,
            surface_samples: 1000,
            water_preset: WaterPreset::Clear,
            water_absorption_per_m: 0.069,
            water_scattering_per_m: 0.080,
            water_hg_g: 0.8708,
            ocean_turbulence_preset: OceanTurbulencePreset::Weak,
            ocean_epsilon: 1e-2,
            ocean_chi_t: 1e-5,
            ocean_omega: -3.0,
            receiver_aperture_area_m2: 1.77e-4,
            receiver_zenith_deg: 90.0,
            receiver_azimuth_deg: 90.0,
            receiver_fov_half_angle_deg: 90.0,
            noise_temperature_k: 300.0,
            noise_bandwidth_hz: 1e9,
            noise_resistance_ohm: 1e6,
            noise_responsivity_a_w: 0.7,
            photons: 100_000,
            seed: 1,
            scattering_orders: 4,
        }
    }
}

fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    match v {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => v
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("key {key}: cannot parse number from '{v}'"))),
    }
}

fn parse_u64(key: &str, v: &str) -> Result<u64> {
    v.parse::<u64>()
        .map_err(|_| Error::Config(format!("key {key}: cannot parse integer from '{v}'")))
}

impl Scenario {
    /// Serialize as the flat-key text format, keys sorted.
    pub fn to_flat_text(&self) -> String {
        let mut map = BTreeMap::new();
        map.insert("link.satellite_height_m", fmt_f64(self.satellite_height_m));
        map.insert("link.receiver_depth_m", fmt_f64(self.receiver_depth_m));
        map.insert("link.zenith_deg", fmt_f64(self.zenith_deg));
        map.insert("link.eta_air_water", fmt_f64(self.eta_air_water));
        map.insert("beam.wavelength_m", fmt_f64(self.wavelength_m));
        map.insert("beam.divergence_rad", fmt_f64(self.divergence_rad));
        map.insert("beam.transmit_power_w", fmt_f64(self.transmit_power_w));
        map.insert("beam.phase_front_radius_m", fmt_f64(self.phase_front_radius_m));
        map.insert("atmosphere.transmittance", fmt_f64(self.atmospheric_transmittance));
        map.insert(
            "atmosphere.preset",
            match self.atmosphere_preset {
                AtmospherePreset::Weak => "weak".into(),
                AtmospherePreset::Strong => "strong".into(),
                AtmospherePreset::Vacuum => "vacuum".into(),
                AtmospherePreset::Custom => "custom".into(),
            },
        );
        map.insert("atmosphere.cn2_ground", fmt_f64(self.cn2_ground));
        map.insert("atmosphere.wind_high_altitude_ms", fmt_f64(self.wind_high_altitude_ms));
        map.insert("atmosphere.outer_scale_m", fmt_f64(self.outer_scale_m));
        map.insert(
            "atmosphere.fading",
            match self.fading {
                FadingMode::Mean => "mean".into(),
                FadingMode::Sampled => "sampled".into(),
            },
        );
        map.insert("grid.cell_size_m", fmt_f64(self.grid_cell_size_m));
        map.insert("grid.cells", format!("{}", self.grid_cells));
        map.insert("surface.wind_speed_ms", fmt_f64(self.surface_wind_speed_ms));
        map.insert("surface.patch_length_m", fmt_f64(self.surface_patch_length_m));
        map.insert("surface.samples", format!("{}", self.surface_samples));
        map.insert(
            "water.preset",
            match self.water_preset {
                WaterPreset::Clear => "clear".into(),
                WaterPreset::Coastal => "coastal".into(),
                WaterPreset::Custom => "custom".into(),
            },
        );
        map.insert("water.absorption_per_m", fmt_f64(self.water_absorption_per_m));
        map.insert("water.scattering_per_m", fmt_f64(self.water_scattering_per_m));
        map.insert("water.hg_g", fmt_f64(self.water_hg_g));
        map.insert(
            "ocean_turbulence.preset",
            match self.ocean_turbulence_preset {
                OceanTurbulencePreset::Weak => "weak".into(),
                OceanTurbulencePreset::Strong => "strong".into(),
                OceanTurbulencePreset::Off => "off".into(),
                OceanTurbulencePreset::Custom => "custom".into(),
            },
        );
        map.insert("ocean_turbulence.epsilon", fmt_f64(self.ocean_epsilon));
        map.insert("ocean_turbulence.chi_t", fmt_f64(self.ocean_chi_t));
        map.insert("ocean_turbulence.omega", fmt_f64(self.ocean_omega));
        map.insert("receiver.aperture_area_m2", fmt_f64(self.receiver_aperture_area_m2));
        map.insert("receiver.zenith_deg", fmt_f64(self.receiver_zenith_deg));
        map.insert("receiver.azimuth_deg", fmt_f64(self.receiver_azimuth_deg));
        map.insert(
            "receiver.fov_half_angle_deg",
            fmt_f64(self.receiver_fov_half_angle_deg),
        );
        map.insert("noise.temperature_k", fmt_f64(self.noise_temperature_k));
        map.insert("noise.bandwidth_hz", fmt_f64(self.noise_bandwidth_hz));
        map.insert("noise.resistance_ohm", fmt_f64(self.noise_resistance_ohm));
        map.insert("noise.responsivity_a_w", fmt_f64(self.noise_responsivity_a_w));
        map.insert("run.photons", format!("{}", self.photons));
        map.insert("run.seed", format!("{}", self.seed));
        map.insert("run.scattering_orders", format!("{}", self.scattering_orders));

        let mut out = String::new();
        for (k, v) in map {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Parse the flat-key format. Unknown or duplicate keys are errors;
    /// missing keys take defaults. Named presets fill their numeric fields
    /// and reject conflicting explicit values.
    pub fn from_flat_text(text: &str) -> Result<Self> {
        let mut seen: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if seen.insert(key.clone(), value).is_some() {
                return Err(Error::Config(format!("duplicate key {key}")));
            }
        }

        let mut s = Scenario::default();
        let mut explicit: Vec<String> = Vec::new();
        for (key, value) in &seen {
            explicit.push(key.clone());
            match key.as_str() {
                "link.satellite_height_m" => s.satellite_height_m = parse_f64(key, value)?,
                "link.receiver_depth_m" => s.receiver_depth_m = parse_f64(key, value)?,
                "link.zenith_deg" => s.zenith_deg = parse_f64(key, value)?,
                "link.eta_air_water" => s.eta_air_water = parse_f64(key, value)?,
                "beam.wavelength_m" => s.wavelength_m = parse_f64(key, value)?,
                "beam.divergence_rad" => s.divergence_rad = parse_f64(key, value)?,
                "beam.transmit_power_w" => s.transmit_power_w = parse_f64(key, value)?,
                "beam.phase_front_radius_m" => s.phase_front_radius_m = parse_f64(key, value)?,
                "atmosphere.transmittance" => {
                    s.atmospheric_transmittance = parse_f64(key, value)?
                }
                "atmosphere.preset" => {
                    s.atmosphere_preset = match value.as_str() {
                        "weak" => AtmospherePreset::Weak,
                        "strong" => AtmospherePreset::Strong,
                        "vacuum" => AtmospherePreset::Vacuum,
                        "custom" => AtmospherePreset::Custom,
                        other => {
                            return Err(Error::Config(format!(
                                "atmosphere.preset: unknown value '{other}'"
                            )))
                        }
                    }
                }
                "atmosphere.cn2_ground" => s.cn2_ground = parse_f64(key, value)?,
                "atmosphere.wind_high_altitude_ms" => {
                    s.wind_high_altitude_ms = parse_f64(key, value)?
                }
                "atmosphere.outer_scale_m" => s.outer_scale_m = parse_f64(key, value)?,
                "atmosphere.fading" => {
                    s.fading = match value.as_str() {
                        "mean" => FadingMode::Mean,
                        "sampled" => FadingMode::Sampled,
                        other => {
                            return Err(Error::Config(format!(
                                "atmosphere.fading: unknown value '{other}'"
                            )))
                        }
                    }
                }
                "grid.cell_size_m" => s.grid_cell_size_m = parse_f64(key, value)?,
                "grid.cells" => s.grid_cells = parse_u64(key, value)? as usize,
                "surface.wind_speed_ms" => s.surface_wind_speed_ms = parse_f64(key, value)?,
                "surface.patch_length_m" => s.surface_patch_length_m = parse_f64(key, value)?,
                "surface.samples" => s.surface_samples = parse_u64(key, value)? as usize,
                "water.preset" => {
                    s.water_preset = match value.as_str() {
                        "clear" => WaterPreset::Clear,
                        "coastal" => WaterPreset::Coastal,
                        "custom" => WaterPreset::Custom,
                        other => {
                            return Err(Error::Config(format!(
                                "water.preset: unknown value '{other}'"
                            )))
                        }
                    }
                }
                "water.absorption_per_m" => s.water_absorption_per_m = parse_f64(key, value)?,
                "water.scattering_per_m" => s.water_scattering_per_m = parse_f64(key, value)?,
                "water.hg_g" => s.water_hg_g = parse_f64(key, value)?,
                "ocean_turbulence.preset" => {
                    s.ocean_turbulence_preset = match value.as_str() {
                        "weak" => OceanTurbulencePreset::Weak,
                        "strong" => OceanTurbulencePreset::Strong,
                        "off" => OceanTurbulencePreset::Off,
                        "custom" => OceanTurbulencePreset::Custom,
                        other => {
                            return Err(Error::Config(format!(
                                "ocean_turbulence.preset: unknown value '{other}'"
                            )))
                        }
                    }
                }
                "ocean_turbulence.epsilon" => s.ocean_epsilon = parse_f64(key, value)?,
                "ocean_turbulence.chi_t" => s.ocean_chi_t = parse_f64(key, value)?,
                "ocean_turbulence.omega" => s.ocean_omega = parse_f64(key, value)?,
                "receiver.aperture_area_m2" => {
                    s.receiver_aperture_area_m2 = parse_f64(key, value)?
                }
                "receiver.zenith_deg" => s.receiver_zenith_deg = parse_f64(key, value)?,
                "receiver.azimuth_deg" => s.receiver_azimuth_deg = parse_f64(key, value)?,
                "receiver.fov_half_angle_deg" => {
                    s.receiver_fov_half_angle_deg = parse_f64(key, value)?
                }
                "noise.temperature_k" => s.noise_temperature_k = parse_f64(key, value)?,
                "noise.bandwidth_hz" => s.noise_bandwidth_hz = parse_f64(key, value)?,
                "noise.resistance_ohm" => s.noise_resistance_ohm = parse_f64(key, value)?,
                "noise.responsivity_a_w" => s.noise_responsivity_a_w = parse_f64(key, value)?,
                "run.photons" => s.photons = parse_u64(key, value)?,
                "run.seed" => s.seed = parse_u64(key, value)?,
                "run.scattering_orders" => {
                    s.scattering_orders = parse_u64(key, value)? as usize
                }
                other => return Err(Error::Config(format!("unknown key '{other}'"))),
            }
        }
        s.apply_presets(&explicit)?;
        s.validate()?;
        Ok(s)
    }

    /// Fill preset-backed numeric fields and reject contradictions.
    fn apply_presets(&mut self, explicit: &[String]) -> Result<()> {
        let has = |k: &str| explicit.iter().any(|e| e == k);

        let preset_cn2 = match self.atmosphere_preset {
            AtmospherePreset::Weak => Some(1.7e-17),
            AtmospherePreset::Strong => Some(1.7e-13),
            AtmospherePreset::Vacuum => Some(0.0),
            AtmospherePreset::Custom => None,
        };
        if let Some(cn2) = preset_cn2 {
            if has("atmosphere.cn2_ground") && self.cn2_ground != cn2 {
                return Err(Error::Config(
                    "atmosphere.cn2_ground conflicts with atmosphere.preset; use preset = custom"
                        .into(),
                ));
            }
            self.cn2_ground = cn2;
        }

        let preset_water = match self.water_preset {
            WaterPreset::Clear => Some(WaterOptics::clear_ocean()),
            WaterPreset::Coastal => Some(WaterOptics::coastal_ocean()),
            WaterPreset::Custom => None,
        };
        if let Some(w) = preset_water {
            for (key, field, value) in [
                ("water.absorption_per_m", self.water_absorption_per_m, w.absorption),
                ("water.scattering_per_m", self.water_scattering_per_m, w.scattering),
                ("water.hg_g", self.water_hg_g, w.hg_g),
            ] {
                if has(key) && field != value {
                    return Err(Error::Config(format!(
                        "{key} conflicts with water.preset; use preset = custom"
                    )));
                }
            }
            self.water_absorption_per_m = w.absorption;
            self.water_scattering_per_m = w.scattering;
            self.water_hg_g = w.hg_g;
        }

        let preset_ocean = match self.ocean_turbulence_preset {
            OceanTurbulencePreset::Weak => Some(OceanTurbulence::weak()),
            OceanTurbulencePreset::Strong => Some(OceanTurbulence::strong()),
            OceanTurbulencePreset::Off | OceanTurbulencePreset::Custom => None,
        };
        if let Some(o) = preset_ocean {
            for (key, field, value) in [
                ("ocean_turbulence.epsilon", self.ocean_epsilon, o.epsilon),
                ("ocean_turbulence.chi_t", self.ocean_chi_t, o.chi_t),
                ("ocean_turbulence.omega", self.ocean_omega, o.omega),
            ] {
                if has(key) && field != value {
                    return Err(Error::Config(format!(
                        "{key} conflicts with ocean_turbulence.preset; use preset = custom"
                    )));
                }
            }
            self.ocean_epsilon = o.epsilon;
            self.ocean_chi_t = o.chi_t;
            self.ocean_omega = o.omega;
        }
        Ok(())
    }

    /// Check every module invariant up front.
    pub fn validate(&self) -> Result<()> {
        self.link_geometry()?;
        if (self.eta_air_water - 0.75).abs() > 1e-9 {
            return Err(Error::Config(
                "link.eta_air_water must be 0.75 (the interface closed form requires it)".into(),
            ));
        }
        self.beam().validate()?;
        self.turbulence_profile().validate()?;
        if !(self.atmospheric_transmittance > 0.0 && self.atmospheric_transmittance <= 1.0) {
            return Err(Error::Config("atmosphere.transmittance must lie in (0, 1]".into()));
        }
        if !(self.grid_cell_size_m > 0.0) {
            return Err(Error::Config("grid.cell_size_m must be > 0".into()));
        }
        self.cox_munk()?;
        if self.surface_samples < 2 || self.surface_samples % 2 != 0 {
            return Err(Error::Config("surface.samples must be even and >= 2".into()));
        }
        if !(self.surface_patch_length_m > 0.0) {
            return Err(Error::Config("surface.patch_length_m must be > 0".into()));
        }
        self.water_optics().validate()?;
        if let Some(t) = self.ocean_turbulence() {
            t.validate()?;
        }
        self.receiver()?;
        self.noise_model().validate()?;
        if self.photons == 0 {
            return Err(Error::Config("run.photons must be >= 1".into()));
        }
        Ok(())
    }

    /// SHA-256 digest of the canonical text (hex, first 16 chars).
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_flat_text().as_bytes());
        let mut out = String::with_capacity(16);
        for byte in digest.iter().take(8) {
            let _ = write!(out, "{byte:02x}");
        }
        out
    }

    pub fn link_geometry(&self) -> Result<LinkGeometry> {
        LinkGeometry::from_zenith(
            self.satellite_height_m,
            self.receiver_depth_m,
            self.zenith_deg.to_radians(),
            self.eta_air_water,
        )
    }

    pub fn beam(&self) -> BeamParams {
        BeamParams {
            wavelength: self.wavelength_m,
            divergence: self.divergence_rad,
            transmit_power: self.transmit_power_w,
            phase_front_radius: self.phase_front_radius_m,
            transmittance: self.atmospheric_transmittance,
        }
    }

    pub fn turbulence_profile(&self) -> TurbulenceProfile {
        let background = if self.atmosphere_preset == AtmospherePreset::Vacuum {
            0.0
        } else {
            TurbulenceProfile::DEFAULT_BACKGROUND
        };
        let wind = if self.atmosphere_preset == AtmospherePreset::Vacuum {
            0.0
        } else {
            self.wind_high_altitude_ms
        };
        TurbulenceProfile {
            cn2_ground: self.cn2_ground,
            wind_high_altitude: wind,
            outer_scale: self.outer_scale_m,
            background,
        }
    }

    pub fn cox_munk(&self) -> Result<CoxMunkParams> {
        CoxMunkParams::from_wind_speed(self.surface_wind_speed_ms)
    }

    pub fn water_optics(&self) -> WaterOptics {
        WaterOptics {
            absorption: self.water_absorption_per_m,
            scattering: self.water_scattering_per_m,
            hg_g: self.water_hg_g,
        }
    }

    pub fn ocean_turbulence(&self) -> Option<OceanTurbulence> {
        if self.ocean_turbulence_preset == OceanTurbulencePreset::Off {
            return None;
        }
        Some(OceanTurbulence {
            epsilon: self.ocean_epsilon,
            chi_t: self.ocean_chi_t,
            omega: self.ocean_omega,
        })
    }

    pub fn receiver(&self) -> Result<Receiver> {
        Receiver::new(
            self.receiver_aperture_area_m2,
            self.receiver_zenith_deg.to_radians(),
            self.receiver_azimuth_deg.to_radians(),
            self.receiver_fov_half_angle_deg.to_radians(),
        )
    }

    pub fn noise_model(&self) -> NoiseModel {
        NoiseModel {
            temperature: self.noise_temperature_k,
            bandwidth: self.noise_bandwidth_hz,
            resistance: self.noise_resistance_ohm,
            responsivity: self.noise_responsivity_a_w,
        }
    }

    /// Grid cells per side: explicit when set, else from the cell size and
    /// the spot radius (side 2 W_Lt).
    pub fn resolve_grid_cells(&self, spot_radius: f64) -> usize {
        if self.grid_cells > 0 {
            self.grid_cells
        } else {
            ((2.0 * spot_radius / self.grid_cell_size_m).ceil() as usize).max(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let s = Scenario::default();
        s.validate().unwrap();
        let text = s.to_flat_text();
        let back = Scenario::from_flat_text(&text).unwrap();
        assert_eq!(s.hash(), back.hash());
        // a second round trip is byte-identical
        assert_eq!(text, back.to_flat_text());
    }

    #[test]
    fn unknown_key_is_an_error() {
        let mut text = Scenario::default().to_flat_text();
        text.push_str("water.absorbtion_per_m = 0.1\n"); // misspelled
        let r = Scenario::from_flat_text(&text);
        assert!(matches!(r, Err(Error::Config(_))), "{r:?}");
    }

    #[test]
    fn duplicate_key_is_an_error() {
        let text = "run.seed = 1\nrun.seed = 2\n";
        assert!(Scenario::from_flat_text(text).is_err());
    }

    #[test]
    fn preset_conflict_is_an_error() {
        let text = "water.preset = clear\nwater.absorption_per_m = 0.2\n";
        assert!(Scenario::from_flat_text(text).is_err());
        // consistent value is fine
        let text = "water.preset = clear\nwater.absorption_per_m = 0.069\n";
        assert!(Scenario::from_flat_text(text).is_ok());
        // custom preset frees the fields
        let text =
            "water.preset = custom\nwater.absorption_per_m = 0.2\nwater.scattering_per_m = 0.1\nwater.hg_g = 0.9\n";
        let s = Scenario::from_flat_text(text).unwrap();
        assert_eq!(s.water_absorption_per_m, 0.2);
    }

    #[test]
    fn presets_fill_numeric_fields() {
        let s = Scenario::from_flat_text("water.preset = coastal\n").unwrap();
        assert_eq!(s.water_scattering_per_m, 0.216);
        let s = Scenario::from_flat_text("atmosphere.preset = strong\n").unwrap();
        assert_eq!(s.cn2_ground, 1.7e-13);
        let s = Scenario::from_flat_text("ocean_turbulence.preset = strong\n").unwrap();
        assert_eq!(s.ocean_omega, -0.25);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# a comment\n\nrun.seed = 9  # trailing comment\n";
        let s = Scenario::from_flat_text(text).unwrap();
        assert_eq!(s.seed, 9);
    }

    #[test]
    fn hash_distinguishes_scenarios() {
        let a = Scenario::default();
        let mut b = Scenario::default();
        b.seed = 2;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn invalid_physics_is_rejected() {
        let cases = [
            "link.zenith_deg = 95\n",
            "beam.wavelength_m = -１e-6\n",
            "surface.samples = 999\n",
            "atmosphere.outer_scale_m = 1\n",
            "run.photons = 0\n",
            "link.eta_air_water = 0.9\n",
            "receiver.fov_half_angle_deg = 0\n",
        ];
        for c in cases {
            assert!(Scenario::from_flat_text(c).is_err(), "{c}");
        }
    }

    #[test]
    fn infinity_round_trips() {
        let s = Scenario::default();
        assert!(s.to_flat_text().contains("beam.phase_front_radius_m = inf"));
        let back = Scenario::from_flat_text(&s.to_flat_text()).unwrap();
        assert!(back.phase_front_radius_m.is_infinite());
    }

    #[test]
    fn vacuum_preset_zeroes_the_profile() {
        let s = Scenario::from_flat_text("atmosphere.preset = vacuum\n").unwrap();
        let p = s.turbulence_profile();
        assert_eq!(p.cn2_ground, 0.0);
        assert_eq!(p.background, 0.0);
        assert_eq!(p.wind_high_altitude, 0.0);
    }
}

//! Deterministic, seedable simulation engine for satellite-to-underwater
//! laser communication channels.
//!
//! The chain has three physical stages:
//! - an analytical turbulent-atmosphere model (Hufnagel-Valley profile,
//!   long-term Gaussian spot, correlated lognormal fading over the
//!   above-surface receiving grid),
//! - closed-form air-water interface statistics (Cox-Munk slopes, facet
//!   refraction with Fresnel transmittance, and the piecewise density of
//!   the refracted-ray deviation),
//! - semi-analytic Monte Carlo photon transport underwater with particle
//!   scattering/absorption and per-leg turbulence scintillation moments.
//!
//! `metrics` turns received-power distributions into BER and outage
//! figures; `scenario` + `runner` wrap everything behind a reproducible
//! configuration with per-photon random streams.

pub mod atmosphere;
pub mod error;
pub mod geometry;
pub mod interface;
pub mod metrics;
pub mod numerics;
pub mod runner;
pub mod scenario;
pub mod underwater;

pub use error::{Error, Result};

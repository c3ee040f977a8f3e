//! Shared numerical machinery: quadrature, special functions, reproducible
//! random streams, Gauss-Hermite rules, and interpolation.

pub mod hermite;
pub mod interp;
pub mod quad;
pub mod rng;
pub mod special;

pub use quad::{adaptive_integrate, QuadratureSpec};
pub use rng::RngStream;
pub use special::{bessel_k, confluent_hypergeometric_1f1};

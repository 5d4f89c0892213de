//! Energy flow in coupled two-dimensional cavities at high frequencies.
//!
//! Three models share one scene description and one intersection kernel:
//!
//! * [`pwb`]: power balance with uniform energy density per cavity,
//! * [`raytrace`]: Monte-Carlo ray transport with per-reflection absorption,
//! * [`dea`]: a discretised boundary transfer operator solved for the stationary flux.
//!
//! [`harness`] runs sweeps over absorption and source position and writes comparison tables.

pub mod dea;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod pwb;
pub mod raytrace;
mod sum;

pub use error::{Error, Result};
pub use sum::NeumaierSum;

//! Satellite–ground clock synchronization with frequency-entangled photon
//! pairs in Schwarzschild spacetime.
//!
//! The crate computes how the Earth's gravity distorts photon wave packets
//! exchanged between a ground station and a satellite, what that does to the
//! Hong-Ou-Mandel coincidence dip used to read out the clock discrepancy, and
//! how well the discrepancy can be recovered from photon counts.
//!
//! All numerics are generic over [`Real`]; the aliases at the crate root fix
//! the scalar to `f64`. With the `quad` feature, [`Quad`] (`f128`) is
//! available for computations that need more than double precision, such as
//! inverting a noise-free dip whose centre sits ten orders of magnitude below
//! its width.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod interferometer;
pub mod io;
pub mod montecarlo;
pub mod protocol;
pub mod quadrature;
pub mod scalar;
pub mod spacetime;
pub mod spline;
pub mod wavepacket;

pub use error::{Error, Result};
pub use scalar::{Real, SPEED_OF_LIGHT_MPS};
pub use protocol::DeltaPMode;
pub use spacetime::Direction;

/// Quad-precision scalar.
#[cfg(feature = "quad")]
pub type Quad = f128::f128;

pub type SpacetimeConfig = spacetime::SpacetimeConfig<f64>;
pub type SpectralAmplitude = wavepacket::SpectralAmplitude<f64>;
pub type PhotonPairState = wavepacket::PhotonPairState<f64>;
pub type ProtocolConfig = interferometer::ProtocolConfig<f64>;
pub type DispersionModel = interferometer::DispersionModel<f64>;
pub type PhaseBundle = interferometer::PhaseBundle<f64>;
pub type RateScan = interferometer::RateScan<f64>;
pub type Scenario = protocol::Scenario<f64>;
pub type DisturbanceReport = protocol::DisturbanceReport<f64>;
pub type CoincidenceScan = montecarlo::CoincidenceScan<f64>;
pub type EstimateResult = montecarlo::EstimateResult<f64>;

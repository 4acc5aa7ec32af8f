//! Time-variant channel model for dispersive closed-loop molecular
//! communication under pulsatile (Womersley) flow, plus a 3D particle
//! simulator used to validate it.
//!
//! The analytical pipeline is
//! [`waveform`] → [`dispersion`] (mean/variance of the 1D Gaussian) →
//! [`cir`] (wrapped normal on the loop, receiver window integral).
//! The simulator in [`pbs`] advects particles through the full radial
//! Womersley field from [`womersley`] and counts them in the same window.
//! [`bench`] ties both together into scenarios, sweeps and CSV output.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Reference values in tests are quoted to full printed precision.
#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod bench;
pub mod cir;
pub mod dispersion;
mod error;
pub mod pbs;
pub mod quadrature;
pub mod waveform;
pub mod womersley;

pub use bench::{ComparisonMetrics, Scenario, TimeSeries};
pub use cir::{CirSample, ReceiverSpec};
pub use dispersion::{GaussianMoments, TransportParams};
pub use error::{Error, Result};
pub use pbs::{ParticleEnsemble, PbsConfig};
pub use waveform::{Harmonic, HarmonicSeries};
pub use womersley::{ChannelGeometry, FluidProperties, RegimeReport, Verdict};

//! Forward/backward splitting of pulse waves measured at several points of a
//! vessel segment, together with estimation of the pulse wave velocity.
//!
//! The measured waves are modelled in the frequency domain as
//! `p̂_k(ω) = p̂_1f(ω)e^{−iωL_k/u} + p̂_Nb(ω)e^{−iω(L_N−L_k)/u}`. The crate
//! provides the operator ([`model`]), Tikhonov-based solvers and an
//! alternating scheme for the velocity ([`solvers`]), a synthetic experiment
//! generator ([`sim`]), error measures ([`metrics`]) and the configuration
//! driven runner behind the `pwsplit` binary ([`cli`]).

pub mod cli;
pub mod error;
pub mod metrics;
pub mod model;
pub mod sim;
pub mod solvers;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{Geometry, MeasurementSet, Pwv, SplitState};
pub use spectral::{FrequencyGrid, Spectrum, TimeGrid, WeightedNormParams};

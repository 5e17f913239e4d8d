//! Excitation spectrum of two-level atoms embedded in a frequency gap medium,
//! built from Bethe strings: polaritons, ordinary solitons, gap solitons and
//! composite solitons.

pub mod error;
pub mod medium;
pub mod numerics;
pub mod rapidity;
pub mod solitons;
pub mod strings;

pub use error::{Error, ErrorClass, Result};
pub use medium::{Band, MediumParams, Side};
pub use numerics::SolverConfig;
pub use rapidity::{AtomChainParams, Model, RapidityMode, TaylorAB};

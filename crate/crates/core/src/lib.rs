//! Exact simulation of linear-optical quantum gates built from photon
//! counting, with realistic (lossy, noisy) detectors.
//!
//! States are sparse over dual-polarization Fock bases; every protocol is
//! evaluated by exhaustive enumeration of measurement records, so reported
//! probabilities are exact up to an explicit truncation bound.

pub mod analysis;
pub mod error;
pub mod fock;
pub mod measurement;
pub mod optics;
pub mod protocols;

pub use error::{LoqcError, Result};
pub use fock::{FockState, InputQubit, OccupationKey, Polarization};
pub use measurement::{DetectionPattern, DetectorModel};
pub use optics::{apply, ModeUnitary, PolarizationSelect};
pub use protocols::Encoding;

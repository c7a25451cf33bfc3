//! Simulation toolkit for Kth-power coherence spectroscopy with N-slit
//! interferometers.
//!
//! * [`fringe`]: the N-slit intensity law and its phase mappings.
//! * [`kpower`]: Kth-power post-processing, FWHM line widths and √K scaling fits.
//! * [`resolve`]: two-frequency resolvability (width and dip criteria).
//! * [`noise`]: Poisson photon counting over K equal detector ports.
//! * [`cli`]: the `kfringe` command-line front end.

pub mod cli;
pub mod error;
pub mod fringe;
pub mod kpower;
pub mod noise;
pub mod resolve;

pub use error::{Error, Result};
pub use fringe::{FringeCurve, FringeParams, PhaseGrid, PhysicalGeometry};
pub use kpower::{KPowerSpec, LineWidthResult, ScalingFit, WidthMethod};
pub use noise::{EnsembleResult, NoiseConfig};
pub use resolve::{ResolvabilityReport, SpectralPair};

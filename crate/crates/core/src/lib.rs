//! Classical simulator of holographic multi-mode microwave storage in an
//! electron spin ensemble.
//!
//! An [`Ensemble`] of Bloch vectors is driven by ideal microwave pulses,
//! magnetic field gradient pulses, free precession with relaxation, and
//! electron/nuclear coherence swaps. Gradient pulses write each excitation
//! into its own spatial spin-wave mode `k`; only the `k = 0` mode radiates,
//! so stored excitations can be recalled one at a time by shifting them back
//! to `k = 0`.
//!
//! The crate is organised bottom-up:
//!
//! - [`constants`], [`special`], [`geometry`], [`ensemble`]: the data model
//!   and analytic mode-overlap functions.
//! - [`engine`]: the event operations and the sequence runner.
//! - [`sequence`]: the pulse-program text language.
//! - [`analysis`] and [`experiments`]: echo integration, decoding, theory
//!   curves, and the canned storage/recall experiments.
//! - [`config`]: the key-value configuration file.

pub mod analysis;
pub mod config;
pub mod constants;
pub mod engine;
pub mod ensemble;
pub mod experiments;
pub mod geometry;
pub mod sequence;
pub mod special;

mod error;

pub use analysis::{crosstalk_theory, integrate_echo, EchoReport, RefocusMap, Symbol};
pub use config::SimConfig;
pub use constants::PhysicalConstants;
pub use engine::{run_sequence, SequenceEvent, Signal, TransferDirection};
pub use ensemble::{
    build_ensemble, wavenumber, DetuningDistribution, Ensemble, EnsembleConfig, RelaxationParams,
    Sampling, SpinSite,
};
pub use error::{ConfigError, EngineError, EnsembleError, ExperimentError};
pub use geometry::{mode_overlap, SampleGeometry};

pub use num_complex::Complex64;

//! Simulation of windowed single-photon measurements and of a relativistic
//! parity-bit commitment protocol built on them.
//!
//! Two orthogonal one-dimensional photon wavepackets with disjoint spectral
//! supports become distinguishable only gradually: a detector with causal
//! access to the time window `(-T, T)` fires with probability
//! `<psi|W_T|psi>`, where `W_T` is the band-limited concentration operator
//! with kernel `sin((k - k')T) / (pi (k - k'))`. The crate provides
//!
//! * [`spectra`]: spectral amplitudes, quadrature grids and sampled states,
//! * [`window`]: the time-window operator and detection probabilities,
//! * [`measurement`]: three-outcome POVMs (support- and state-projector families),
//! * [`protocol`]: the N-channel commit/open protocol and its security metrics,
//! * [`attacks`]: cheating strategies and their detection probabilities,
//! * [`oracle`]: independent brute-force routes used for cross-checking.
//!
//! Data-parallel loops (kernel assembly, sweeps, Monte Carlo runs) go through
//! [`exec::Execution`]; with the `parallel` feature disabled everything runs
//! sequentially.

// `!(x >= 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attacks;
pub mod error;
pub mod exec;
pub mod measurement;
pub mod oracle;
pub mod protocol;
pub mod quadrature;
pub mod spectra;
pub mod window;

pub use error::{Error, Result};
pub use exec::Execution;
pub use measurement::{Outcome, OutcomeDist, Povm, PovmFamily};
pub use spectra::{KGrid, SampledState, Shape, SpectralAmplitude};
pub use window::WindowOperator;

pub use num_complex::Complex64;

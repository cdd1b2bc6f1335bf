//! Link-level simulator and optimizer for a cell-free massive MIMO proactive
//! monitoring system.
//!
//! A set of distributed multi-antenna monitor nodes (MNs) watches an untrusted
//! transmitter/receiver pair (UT/UR). Each MN either *observes* the untrusted
//! downlink or *jams* the untrusted receiver. The crate provides:
//!
//! - geometry, path loss and shadowing for one Monte-Carlo draw ([`scenario`]),
//! - small-scale fading plus the two training phases (uplink MMSE channel
//!   estimation and effective-channel estimation during beamforming training)
//!   ([`channel`]),
//! - precoding, jamming power control, signal synthesis, MMSE combining and
//!   CPU aggregation ([`transmission`]),
//! - spectral efficiency of the untrusted link and of the monitoring CPU under
//!   two CSI-availability cases, and the monitoring success probability (MSP)
//!   ([`se`]),
//! - a Gaussian-process Bayesian optimizer with a Matérn kernel and a
//!   GP-Hedge acquisition portfolio that maximizes the MSP over the mixed
//!   binary/continuous mode-assignment and jamming-power variables ([`gp`],
//!   [`optimize`]),
//! - benchmark schemes and large-system sanity sweeps ([`baselines`],
//!   [`asymptotics`]),
//! - experiment orchestration with CSV/JSON outputs ([`experiments`]).
//!
//! Everything is deterministic given a seed: random streams are partitioned
//! per task through [`rng::stream`], so worker counts change wall time only,
//! never results.
//!
//! See the `examples/` directory for one runnable example per capability.

pub mod asymptotics;
pub mod baselines;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod gp;
pub mod linalg;
pub mod optimize;
pub mod rng;
pub mod scenario;
pub mod se;
pub mod transmission;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

//! Server-free wireless federated learning.
//!
//! UEs run local SGD and upload accumulated gradients as analog waveforms; the
//! access point never computes anything, it just hands back whatever the
//! superposition of faded signals plus alpha-stable interference produced.
//! This crate simulates that pipeline at the post-matched-filter vector level,
//! runs the vanilla and zero-wait training loops, and turns the convergence
//! analysis into executable checks.
//!
//! Module map:
//!
//! - [`stable_noise`]: symmetric alpha-stable sampling and Hill tail-index estimation
//! - [`alpha_geometry`]: signed powers, alpha-norms, alpha-positive-definiteness
//! - [`channel`]: fading draws and over-the-air aggregation
//! - [`tasks`]: strongly convex objectives with known optima and constants
//! - [`algorithms`]: SFWFL, zero-wait, aggressive upload, server and SGD baselines
//! - [`metrics`]: error metrics, bound curves, slope fits, speedup accounting
//! - [`harness`]: configuration, trial orchestration and CSV output

pub mod algorithms;
pub mod alpha_geometry;
pub mod channel;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod rng;
pub mod stable_noise;
pub mod tasks;
pub mod vector;

pub use error::{Error, Result};
pub use vector::ModelVector;

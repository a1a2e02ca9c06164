//! Limited-feedback multiuser MIMO downlink simulator.
//!
//! Channels follow `h = R^(1/2) h_w` with a rank-`r` correlation. Each user
//! quantizes its channel direction with a `B`-bit codebook (RVQ, or the
//! channel-statistics codebook `R^(1/2) w_i / ||R^(1/2) w_i||`), the base
//! station zero-forces on the fed-back channels, and per-user rates follow
//! from the SINR. The [`bounds`] module holds the closed-form rate-gap,
//! quantization-error and feedback-bit expressions together with samplers
//! that check the distributional claims behind them; [`experiments`] runs
//! the seeded Monte Carlo sweeps.

pub mod bounds;
pub mod channel;
pub mod cli;
pub mod codebook;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod precoding;
pub mod rng;
pub mod special;
pub mod stats;

pub use error::{Error, Result};

//! Power-minimizing resource allocation for the downlink of spatial-multiplexing
//! MIMO-OFDMA systems with user-level Tomlinson-Harashima precoding.
//!
//! The allocation is layered. Users are split into `Q` groups by average
//! channel energy (weakest first). Groups are then served one after the other:
//! every group member gets a per-subcarrier power cost computed in closed form
//! on the channel left over by the null-space projection of the previously
//! placed users, and the subcarriers are assigned by an exact min-cost-flow
//! solve. The interference still reaching a later user from earlier users is
//! pre-cancelled by the THP feedback loop.
//!
//! Module map:
//!
//! - [`channel`]: scenario parameters, random drops and the channel file format.
//! - [`partition`]: channel-quality metric and worst-first grouping.
//! - [`precoding`]: null spaces, effective channels, feedback matrices, modulo recursion.
//! - [`loading`]: minimum-power transceiver design under a sum-MSE budget.
//! - [`assignment`]: subcarrier assignment as a min-cost flow.
//! - [`baselines`]: ZF Tx, THP Tx (QR) and linear BD-ZF comparison schemes.
//! - [`sim`]: per-drop orchestration, Monte Carlo sweeps, link-level check.
//! - [`cli`]: argument parsing, config files and CSV output for the `sdma-thp` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assignment;
pub mod baselines;
pub mod channel;
pub mod cli;
mod error;
pub mod linalg;
pub mod loading;
pub mod partition;
pub mod precoding;
pub mod sim;

pub use error::{Error, Result};

pub use num_complex::Complex64;

/// Dense complex matrix used throughout the crate.
pub type CMat = nalgebra::DMatrix<Complex64>;

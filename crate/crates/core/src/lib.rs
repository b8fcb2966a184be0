//! Rank-based tests for k-wise independence of high-dimensional samples.
//!
//! The statistics are Cramér-von Mises functionals of the Moebius transform of
//! the empirical copula process. They depend on the data only through ranks,
//! so their null distribution is free of the margins.
//!
//! * [`ranks`]: ranks, kernels and the process evaluator
//! * [`stats`]: subset and aggregated statistics, scaling, the combined test
//! * [`moments`]: exact null moments and an enumeration oracle
//! * [`models`]: data-generating processes for simulation
//! * [`harness`]: Monte Carlo rejection studies and null calibration
//! * [`cli`]: the `hidim` command line

pub mod cli;
pub mod error;
pub mod harness;
pub mod models;
pub mod moments;
pub mod ranks;
pub mod stats;

pub use error::{Error, Result};
pub use ranks::{compute_ranks, Dataset, RankMatrix, TiePolicy};
pub use stats::{run_test, ScalingMode, TestReport};

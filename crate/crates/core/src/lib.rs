//! Iterated tails, iterated failure rates, ageing classification and the
//! s-IFR stochastic order for parametric lifetime distributions.
//!
//! The crate is organized bottom-up:
//!
//! - [`distributions`]: exponential, gamma, Weibull and inverse gamma kernels.
//! - [`iterated`]: the s-iterated tails `T̄_{X,s}` and normalizers `μ̃_{X,s}`.
//! - [`ageing`]: iterated failure rates and the s-IFR/DFR/IFRA/NBU/NBUFR/NBAFR
//!   classifiers.
//! - [`sign_variation`]: sign-pattern extraction on sampled functions.
//! - [`ordering`]: deciding `X ≤_{s-IFR} Y` analytically or by probe scans.
//! - [`mc`]: a seeded Monte Carlo oracle for iterated tails.
//!
//! Grid sweeps, probe scans and Monte Carlo batches run on rayon when the
//! `parallel` feature is enabled (the default). Results never depend on the
//! number of worker threads.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ageing;
pub mod distributions;
pub mod error;
pub mod grid;
pub mod iterated;
pub mod mc;
pub mod ordering;
pub mod par;
pub mod quadrature;
pub mod roots;
pub mod selftest;
pub mod sign_variation;
pub mod special;

pub use distributions::{DistributionSpec, Family};
pub use error::{Error, Result};
pub use iterated::IteratedTailEvaluator;
pub use par::Execution;
pub use ordering::{compare_sifr, ComparisonProbe, Direction, OrderVerdict};

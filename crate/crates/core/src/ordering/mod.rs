//! The s-IFR order `X ≤_{s-IFR} Y`: `T̄_{Y,s}⁻¹ ∘ T̄_{X,s}` is convex.
//!
//! [`compare::compare_sifr`] is the entry point. The other modules expose
//! the pieces: the curve itself ([`curve`]), closed-form criteria for gamma
//! and Weibull pairs ([`analytic`]), probe scans ([`scan`]) and the verdict
//! types ([`verdict`]).

pub mod analytic;
pub mod compare;
pub mod curve;
pub mod scan;
pub mod verdict;

pub use compare::{compare_exponential, compare_sifr, CompareConfig};
pub use curve::{c_s_curve, convexity_check, invert_ln_tail, invert_tail, Convexity, SampledCurve};
pub use scan::{criterion_scan, probe_pattern, scan_direction, v_s, v_s_scan, Criterion, ProbeGridConfig};
pub use verdict::{
    Certificate, ComparisonProbe, Direction, DirectionScan, Evidence, Method, OrderVerdict, Stage,
};

//! Iterated failure rates and ageing classes.
//!
//! `r_s(x) = T̄_{s-1}(x) / (μ̃_{s-1} T̄_s(x))`, which integrates to
//! `−ln T̄_s(x)`. The averaged rate `(1/x)∫_0^x r_s` is therefore read off the
//! tail directly instead of accumulating a quadrature of the rate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{linspace, GridConfig, Spacing};
use crate::iterated::IteratedTailEvaluator;
use crate::par::{self, Execution};
use crate::sign_variation::{pattern_from_samples, SignSequence};

/// `r_{X,s}(x)`; for `s = 1` the classical hazard `f/F̄`.
pub fn failure_rate(ev: &IteratedTailEvaluator, x: f64) -> Result<f64> {
    let s = ev.s();
    if s == 1 {
        let spec = ev.spec();
        let (lf, ls) = (spec.ln_pdf(x), spec.ln_survival(x));
        if ls == f64::NEG_INFINITY {
            return Err(Error::RateIndeterminate { x });
        }
        return Ok((lf - ls).exp());
    }
    let upper = ev.tail_at_level(s - 1, x)?;
    let lower = ev.tail(x)?;
    if lower <= 0.0 {
        return Err(Error::RateIndeterminate { x });
    }
    Ok(upper / (ev.mu(s - 1) * lower))
}

/// `−ln T̄_{X,s}(x) = ∫_0^x r_{X,s}`.
fn cumulative_rate(ev: &IteratedTailEvaluator, x: f64) -> Result<f64> {
    if ev.s() == 1 {
        return Ok(-ev.spec().ln_survival(x));
    }
    Ok(-ev.tail(x)?.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotone {
    Increasing,
    Decreasing,
    /// Flat within tolerance: both increasing and decreasing.
    Constant,
    Neither,
}

impl Monotone {
    pub fn is_nondecreasing(self) -> bool {
        matches!(self, Monotone::Increasing | Monotone::Constant)
    }

    pub fn is_nonincreasing(self) -> bool {
        matches!(self, Monotone::Decreasing | Monotone::Constant)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotoneTolerance {
    /// Zero band of `g − a` is `atol + rtol · max|g − a|`.
    pub atol: f64,
    pub rtol: f64,
    /// Relative step allowed against the claimed direction.
    pub step_rtol: f64,
    /// Relative variation below which `g` counts as constant.
    pub constant_rtol: f64,
}

impl Default for MonotoneTolerance {
    fn default() -> Self {
        Self {
            atol: 1e-12,
            rtol: 1e-9,
            step_rtol: 1e-7,
            constant_rtol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub verdict: Monotone,
    /// Threshold whose crossing pattern ruled out a direction.
    pub witness_threshold: Option<f64>,
    pub witness_pattern: Option<SignSequence>,
    /// Abscissa where monotonicity visibly fails.
    pub witness_x: Option<f64>,
    pub diagnostic: Option<String>,
}

impl MonotoneReport {
    fn plain(verdict: Monotone) -> Self {
        Self {
            verdict,
            witness_threshold: None,
            witness_pattern: None,
            witness_x: None,
            diagnostic: None,
        }
    }
}

/// Deciles of the observed range.
pub fn decile_thresholds(values: &[f64]) -> Vec<f64> {
    let (lo, hi) = min_max(values);
    (1..10).map(|k| lo + (hi - lo) * k as f64 / 10.0).collect()
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Monotonicity of sampled values by two independent tests that must agree:
/// every line `y = a` crosses the graph at most once (in the direction's
/// order), and no grid step moves against the direction beyond tolerance.
/// An empty threshold list means deciles of the observed range.
pub fn monotone_from_samples(
    xs: &[f64],
    vs: &[f64],
    thresholds: &[f64],
    tol: &MonotoneTolerance,
) -> MonotoneReport {
    assert_eq!(xs.len(), vs.len());
    if let Some(i) = vs.iter().position(|v| !v.is_finite()) {
        return MonotoneReport {
            witness_x: Some(xs[i]),
            diagnostic: Some(format!("non-finite value {} at x = {}", vs[i], xs[i])),
            ..MonotoneReport::plain(Monotone::Neither)
        };
    }
    let (lo, hi) = min_max(vs);
    let scale = vs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if hi - lo <= tol.constant_rtol * scale {
        return MonotoneReport::plain(Monotone::Constant);
    }

    let deciles;
    let thresholds = if thresholds.is_empty() {
        deciles = decile_thresholds(vs);
        &deciles[..]
    } else {
        thresholds
    };
    let up: SignSequence = "-,+".parse().expect("literal pattern");
    let down: SignSequence = "+,-".parse().expect("literal pattern");
    let mut inc_cross = None;
    let mut dec_cross = None;
    let mut shifted = vec![0.0; vs.len()];
    for &a in thresholds {
        for (d, v) in shifted.iter_mut().zip(vs) {
            *d = v - a;
        }
        let p = pattern_from_samples(xs, &shifted, tol.atol, tol.rtol);
        if p.signs.len() > 1 && p.signs != up && inc_cross.is_none() {
            inc_cross = Some((a, p.clone()));
        }
        if p.signs.len() > 1 && p.signs != down && dec_cross.is_none() {
            dec_cross = Some((a, p));
        }
    }

    let slack = |i: usize| tol.atol + tol.step_rtol * vs[i].abs().max(vs[i + 1].abs());
    let inc_step = (0..vs.len() - 1).find(|&i| vs[i + 1] < vs[i] - slack(i));
    let dec_step = (0..vs.len() - 1).find(|&i| vs[i + 1] > vs[i] + slack(i));

    let inc = inc_cross.is_none() && inc_step.is_none();
    let dec = dec_cross.is_none() && dec_step.is_none();
    match (inc, dec) {
        (true, true) => MonotoneReport::plain(Monotone::Constant),
        (true, false) => MonotoneReport::plain(Monotone::Increasing),
        (false, true) => MonotoneReport::plain(Monotone::Decreasing),
        (false, false) => {
            let cross = inc_cross.or(dec_cross);
            let step = inc_step.or(dec_step);
            let diagnostic = match (&cross, step) {
                (None, Some(_)) | (Some(_), None) => {
                    "line-crossing and grid-difference tests disagree"
                }
                _ => "both directions violated",
            };
            let witness_x = step
                .map(|i| xs[i + 1])
                .or_else(|| cross.as_ref().map(|(_, p)| p.crossings[0].midpoint()));
            MonotoneReport {
                verdict: Monotone::Neither,
                witness_threshold: cross.as_ref().map(|(a, _)| *a),
                witness_pattern: cross.map(|(_, p)| p.signs),
                witness_x,
                diagnostic: Some(diagnostic.into()),
            }
        }
    }
}

/// Samples `f` on the grid and runs [`monotone_from_samples`].
pub fn monotone_via_line_crossings<F>(f: F, thresholds: &[f64], grid: &GridConfig) -> Result<MonotoneReport>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    let xs = grid.points()?;
    let vs = par::map(grid.execution, &xs, |&x| f(x));
    let tol = MonotoneTolerance {
        atol: grid.atol,
        rtol: grid.rtol,
        ..MonotoneTolerance::default()
    };
    Ok(monotone_from_samples(&xs, &vs, thresholds, &tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Notion {
    SIfr,
    SDfr,
    SIfra,
    SNbu,
    SNbufr,
    SNbafr,
}

/// Where a notion fails: a single abscissa, or an `(x, t)` pair for NBU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub notion: Notion,
    pub x: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub n_points: usize,
    pub x_min: f64,
    pub x_max: f64,
    /// `x_max = q(1 − upper_tail)`.
    pub upper_tail: f64,
    /// Set when the rate at 0 is infinite and was replaced by its value here.
    pub right_limit_at: Option<f64>,
    pub nbu_points: usize,
    pub nbu_x_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeingReport {
    pub s: u32,
    #[serde(rename = "s_ifr")]
    pub is_s_ifr: bool,
    #[serde(rename = "s_dfr")]
    pub is_s_dfr: bool,
    #[serde(rename = "s_ifra")]
    pub is_s_ifra: bool,
    #[serde(rename = "s_nbu")]
    pub is_s_nbu: bool,
    #[serde(rename = "s_nbufr")]
    pub is_s_nbufr: bool,
    #[serde(rename = "s_nbafr")]
    pub is_s_nbafr: bool,
    pub rate_monotonicity: Monotone,
    pub witnesses: Vec<Witness>,
    #[serde(rename = "grid")]
    pub grid_meta: GridMeta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgeingConfig {
    pub n_points: usize,
    pub upper_tail: f64,
    /// Lower quantile used as the right limit when the rate blows up at 0.
    pub lower_tail: f64,
    pub nbu_points: usize,
    pub nbu_quantile: f64,
    pub tolerance: MonotoneTolerance,
    pub execution: Execution,
}

impl Default for AgeingConfig {
    fn default() -> Self {
        Self {
            n_points: 4096,
            upper_tail: 1e-6,
            lower_tail: 1e-6,
            nbu_points: 200,
            nbu_quantile: 0.995,
            tolerance: MonotoneTolerance::default(),
            execution: Execution::default(),
        }
    }
}

impl AgeingConfig {
    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }
}

/// Evaluates all six notions on grids over `[0, q(1 − upper_tail)]`.
pub fn classify_ageing(ev: &IteratedTailEvaluator, cfg: &AgeingConfig) -> Result<AgeingReport> {
    let spec = ev.spec();
    let x_max = spec.quantile(1.0 - cfg.upper_tail)?;
    let r_zero = failure_rate(ev, 0.0)?;
    let (x_min, right_limit_at) = if r_zero.is_finite() {
        (0.0, None)
    } else {
        let q = spec.quantile(cfg.lower_tail)?;
        (q, Some(q))
    };
    let grid = GridConfig {
        n_points: cfg.n_points,
        x_min,
        x_max,
        spacing: Spacing::LogLinear,
        execution: cfg.execution,
        ..GridConfig::default()
    };
    let xs = grid.points()?;
    let samples = par::try_map(cfg.execution, &xs, |&x| -> Result<(f64, f64)> {
        let r = failure_rate(ev, x)?;
        let cum = if x > 0.0 { cumulative_rate(ev, x)? / x } else { r };
        Ok((r, cum))
    })?;
    let rates: Vec<f64> = samples.iter().map(|p| p.0).collect();
    let averages: Vec<f64> = samples.iter().map(|p| p.1).collect();
    let r0 = rates[0];
    let tol = cfg.tolerance;
    let mut witnesses = Vec::new();

    let rate_mono = monotone_from_samples(&xs, &rates, &[], &tol);
    let is_s_ifr = rate_mono.verdict.is_nondecreasing();
    let is_s_dfr = rate_mono.verdict.is_nonincreasing();
    let mono_detail = |m: &MonotoneReport| match (&m.witness_pattern, m.witness_threshold) {
        (Some(p), Some(a)) => format!("rate minus {a:.6e} has sign pattern {p}"),
        _ => m.diagnostic.clone().unwrap_or_else(|| format!("{:?}", m.verdict)),
    };
    let first_x = xs[0];
    if !is_s_ifr {
        witnesses.push(Witness {
            notion: Notion::SIfr,
            x: rate_mono.witness_x.unwrap_or(first_x),
            t: None,
            detail: mono_detail(&rate_mono),
        });
    }
    if !is_s_dfr {
        witnesses.push(Witness {
            notion: Notion::SDfr,
            x: rate_mono.witness_x.unwrap_or(first_x),
            t: None,
            detail: mono_detail(&rate_mono),
        });
    }

    // The averaged rate is only defined for x > 0.
    let start = usize::from(xs[0] == 0.0);
    let avg_mono = monotone_from_samples(&xs[start..], &averages[start..], &[], &tol);
    let is_s_ifra = avg_mono.verdict.is_nondecreasing();
    if !is_s_ifra {
        witnesses.push(Witness {
            notion: Notion::SIfra,
            x: avg_mono.witness_x.unwrap_or(first_x),
            t: None,
            detail: mono_detail(&avg_mono),
        });
    }

    let below = |v: f64| v < r0 - (tol.atol + tol.step_rtol * v.abs().max(r0.abs()));
    let nbufr_fail = rates.iter().position(|&v| below(v));
    let is_s_nbufr = nbufr_fail.is_none();
    if let Some(i) = nbufr_fail {
        witnesses.push(Witness {
            notion: Notion::SNbufr,
            x: xs[i],
            t: None,
            detail: format!("r({}) = {:.6e} < r(0) = {r0:.6e}", xs[i], rates[i]),
        });
    }
    let nbafr_fail = (start..xs.len()).find(|&i| below(averages[i]));
    let is_s_nbafr = nbafr_fail.is_none();
    if let Some(i) = nbafr_fail {
        witnesses.push(Witness {
            notion: Notion::SNbafr,
            x: xs[i],
            t: None,
            detail: format!("average rate {:.6e} < r(0) = {r0:.6e}", averages[i]),
        });
    }

    let nbu_x_max = spec.quantile(cfg.nbu_quantile)?;
    let nbu = nbu_check(ev, nbu_x_max, cfg.nbu_points, tol.step_rtol, cfg.execution)?;
    let is_s_nbu = nbu.is_none();
    if let Some((x, t, excess)) = nbu {
        witnesses.push(Witness {
            notion: Notion::SNbu,
            x,
            t: Some(t),
            detail: format!("ln T(x+t) − ln T(x) − ln T(t) = {excess:.6e} > 0"),
        });
    }

    Ok(AgeingReport {
        s: ev.s(),
        is_s_ifr,
        is_s_dfr,
        is_s_ifra,
        is_s_nbu,
        is_s_nbufr,
        is_s_nbafr,
        rate_monotonicity: rate_mono.verdict,
        witnesses,
        grid_meta: GridMeta {
            n_points: xs.len(),
            x_min,
            x_max,
            upper_tail: cfg.upper_tail,
            right_limit_at,
            nbu_points: cfg.nbu_points,
            nbu_x_max,
        },
    })
}

/// `T̄(x+t) ≤ T̄(x) T̄(t)` on the triangle `0 ≤ x ≤ t ≤ x_max` of an `m × m`
/// lattice. The lattice is uniform, so `x + t` lands on `2m − 1` points and
/// each tail is evaluated once. Returns the worst violating pair.
fn nbu_check(
    ev: &IteratedTailEvaluator,
    x_max: f64,
    m: usize,
    rtol: f64,
    exec: Execution,
) -> Result<Option<(f64, f64, f64)>> {
    let nodes = linspace(0.0, 2.0 * x_max, 2 * m - 1);
    let ln_tails = par::try_map(exec, &nodes, |&x| cumulative_rate(ev, x).map(|c| -c))?;
    let mut worst: Option<(f64, f64, f64)> = None;
    for i in 1..m {
        for j in i..m {
            let lhs = ln_tails[i + j];
            let rhs = ln_tails[i] + ln_tails[j];
            let excess = lhs - rhs;
            if excess > rtol * lhs.abs().max(1.0) && worst.is_none_or(|w| excess > w.2) {
                worst = Some((nodes[i], nodes[j], excess));
            }
        }
    }
    Ok(worst)
}

/// The implication chain s-IFR ⇒ s-IFRA ⇒ s-NBU ⇒ s-NBUFR ⇒ s-NBAFR.
pub fn hierarchy_check(report: &AgeingReport) -> bool {
    let chain = [
        report.is_s_ifr,
        report.is_s_ifra,
        report.is_s_nbu,
        report.is_s_nbufr,
        report.is_s_nbafr,
    ];
    (0..chain.len()).all(|i| (i + 1..chain.len()).all(|j| !chain[i] || chain[j]))
}

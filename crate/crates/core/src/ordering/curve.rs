//! The transform `c_s = T̄_{Y,s}⁻¹ ∘ T̄_{X,s}` and its convexity.

use serde::{Deserialize, Serialize};

use crate::ageing::failure_rate;
use crate::error::{Error, Result};
use crate::grid::GridConfig;
use crate::iterated::IteratedTailEvaluator;
use crate::par::{self, Execution};
use crate::roots::{solve_increasing, SolveOptions};
use crate::sign_variation::{
    pattern_from_samples, sequence_admissible_for_concavity, sequence_admissible_for_convexity,
    Crossing, SignSequence,
};

/// Smallest tail value the inversion is asked to hit.
pub const MIN_TAIL: f64 = 1e-300;

/// `x` with `T̄_{X,s}(x) = p`, solved in log space with the iterated failure
/// rate as derivative.
pub fn invert_tail(ev: &IteratedTailEvaluator, p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    invert_ln_tail(ev, p.ln())
}

/// `x` with `ln T̄_{X,s}(x) = ln_p`; exact near `p = 1` where `p` itself
/// would round.
pub fn invert_ln_tail(ev: &IteratedTailEvaluator, ln_p: f64) -> Result<f64> {
    if !(ln_p <= 0.0 && ln_p > f64::NEG_INFINITY) {
        return Err(Error::ProbabilityOutOfRange(ln_p.exp()));
    }
    if ln_p == 0.0 {
        return Ok(0.0);
    }
    let spec = ev.spec();
    if spec.is_exponential() {
        return Ok(-spec.scale() * ln_p);
    }
    if ev.s() == 1 {
        return spec.inverse_survival(ln_p.exp());
    }
    let guess = spec.inverse_survival(ln_p.exp()).unwrap_or(spec.scale());
    let h = |x: f64| match (ev.ln_tail_at_level(ev.s(), x), failure_rate(ev, x)) {
        (Ok(lt), Ok(r)) => (ln_p - lt, r),
        // Only the far tail fails to evaluate: treat it as past the root.
        _ => (f64::INFINITY, f64::NAN),
    };
    solve_increasing(h, guess, SolveOptions::default())
}

/// Abscissas where `T̄_{X,s}` takes `n` values spread evenly in logit scale
/// between `q_hi` (near 1) and `q_lo` (deep tail), plus the origin.
pub fn quantile_points(
    ev: &IteratedTailEvaluator,
    n: usize,
    q_lo: f64,
    q_hi: f64,
    exec: Execution,
) -> Result<Vec<f64>> {
    let levels = logit_levels(n, q_lo, q_hi);
    let mut xs = vec![0.0];
    xs.extend(par::try_map(exec, &levels, |&q| invert_tail(ev, q))?);
    xs.dedup();
    Ok(xs)
}

/// Tail probabilities from `q_hi` down to `q_lo`, uniform in `ln((1−q)/q)`.
pub fn logit_levels(n: usize, q_lo: f64, q_hi: f64) -> Vec<f64> {
    let t0 = ((1.0 - q_hi) / q_hi).ln();
    let t1 = ((1.0 - q_lo) / q_lo).ln();
    (0..n)
        .map(|i| {
            let t = t0 + (t1 - t0) * i as f64 / (n - 1) as f64;
            1.0 / (1.0 + t.exp())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledCurve {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// The tail of `X` underflowed (or could not be inverted) before the end
    /// of the requested grid; samples stop at `truncated_at`.
    pub truncated: bool,
    pub truncated_at: Option<f64>,
}

impl SampledCurve {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

/// `c_s` sampled on the grid.
pub fn c_s_curve(
    ev_x: &IteratedTailEvaluator,
    ev_y: &IteratedTailEvaluator,
    grid: &GridConfig,
) -> Result<SampledCurve> {
    c_s_curve_at(ev_x, ev_y, &grid.points()?, grid.execution)
}

/// `c_s` at arbitrary sorted abscissas.
pub fn c_s_curve_at(
    ev_x: &IteratedTailEvaluator,
    ev_y: &IteratedTailEvaluator,
    xs: &[f64],
    exec: Execution,
) -> Result<SampledCurve> {
    if ev_x.s() != ev_y.s() {
        return Err(Error::Domain(format!(
            "iteration levels differ: {} vs {}",
            ev_x.s(),
            ev_y.s()
        )));
    }
    let values = par::map(exec, xs, |&x| -> Option<f64> {
        let ln_p = ev_x.ln_tail_at_level(ev_x.s(), x).ok()?;
        if ln_p < MIN_TAIL.ln() {
            return None;
        }
        invert_ln_tail(ev_y, ln_p).ok()
    });
    let cut = values.iter().position(Option::is_none).unwrap_or(xs.len());
    Ok(SampledCurve {
        xs: xs[..cut].to_vec(),
        ys: values[..cut].iter().map(|v| v.expect("before cut")).collect(),
        truncated: cut < xs.len(),
        truncated_at: xs.get(cut).copied(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convexity {
    Convex,
    Concave,
    /// Every line test is admissible both ways: affine within tolerance.
    Linear,
    Neither,
}

/// A straight line `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
}

impl Line {
    pub fn at(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineWitness {
    pub line: Line,
    pub pattern: SignSequence,
    pub crossings: Vec<Crossing>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub verdict: Convexity,
    pub lines_tested: usize,
    /// A line whose crossing pattern rules out convexity.
    pub convexity_witness: Option<LineWitness>,
    /// A line whose crossing pattern rules out concavity.
    pub concavity_witness: Option<LineWitness>,
    /// Verdict of the independent second-difference test.
    pub second_difference: Convexity,
    pub guard_agrees: bool,
}

/// Chords through pairs of `n_anchors` samples, each raised and lowered by
/// `rel_shift` of the larger endpoint so the line actually cuts the curve
/// instead of touching it at the anchors.
pub fn chord_lines(curve: &SampledCurve, n_anchors: usize, rel_shift: f64) -> Vec<Line> {
    let n = curve.len();
    if n < 2 {
        return Vec::new();
    }
    let m = n_anchors.clamp(2, n);
    let mut idx: Vec<usize> = (0..m).map(|i| i * (n - 1) / (m - 1)).collect();
    idx.dedup();
    let mut lines = Vec::new();
    for (p, &i) in idx.iter().enumerate() {
        for &j in &idx[p + 1..] {
            let (x0, y0, x1, y1) = (curve.xs[i], curve.ys[i], curve.xs[j], curve.ys[j]);
            let slope = (y1 - y0) / (x1 - x0);
            let intercept = y0 - slope * x0;
            let delta = rel_shift * y0.abs().max(y1.abs()).max(f64::MIN_POSITIVE);
            for shift in [delta, -delta] {
                lines.push(Line {
                    slope,
                    intercept: intercept + shift,
                });
            }
        }
    }
    lines
}

/// Convexity by line crossings: convex iff every line leaves an admissible
/// pattern (`+`, `−`, `+,−`, `−,+`, `+,−,+`), concave for the mirrored set.
/// A sample counts as zero when curve and line agree to `atol + rtol·(|y| +
/// |line|)`, so the band follows the local scale of the curve.
/// A second-difference test on the samples runs alongside as a guard.
pub fn convexity_check(curve: &SampledCurve, lines: &[Line], atol: f64, rtol: f64) -> Result<ConvexityReport> {
    if curve.len() < 16 {
        return Err(Error::InvalidGrid(format!(
            "convexity check needs at least 16 samples, got {}",
            curve.len()
        )));
    }
    let mut convexity_witness = None;
    let mut concavity_witness = None;
    let mut diff = vec![0.0; curve.len()];
    for line in lines {
        for ((d, &x), &y) in diff.iter_mut().zip(&curve.xs).zip(&curve.ys) {
            let l = line.at(x);
            let v = y - l;
            *d = if v.abs() <= atol + rtol * (y.abs() + l.abs()) { f64::NAN } else { v };
        }
        let p = pattern_from_samples(&curve.xs, &diff, 0.0, 0.0);
        let witness = || LineWitness {
            line: *line,
            pattern: p.signs.clone(),
            crossings: p.crossings.clone(),
        };
        if convexity_witness.is_none() && !sequence_admissible_for_convexity(&p.signs) {
            convexity_witness = Some(witness());
        }
        if concavity_witness.is_none() && !sequence_admissible_for_concavity(&p.signs) {
            concavity_witness = Some(witness());
        }
        if convexity_witness.is_some() && concavity_witness.is_some() {
            break;
        }
    }
    let verdict = match (convexity_witness.is_none(), concavity_witness.is_none()) {
        (true, true) => Convexity::Linear,
        (true, false) => Convexity::Convex,
        (false, true) => Convexity::Concave,
        (false, false) => Convexity::Neither,
    };
    let second_difference = second_difference_test(curve, 1e-6);
    let guard_agrees = match verdict {
        Convexity::Linear => second_difference == Convexity::Linear,
        v => v == second_difference || second_difference == Convexity::Linear,
    };
    Ok(ConvexityReport {
        verdict,
        lines_tested: lines.len(),
        convexity_witness,
        concavity_witness,
        second_difference,
        guard_agrees,
    })
}

/// Convexity from monotonicity of successive secant slopes.
fn second_difference_test(curve: &SampledCurve, rtol: f64) -> Convexity {
    let slopes: Vec<f64> = curve
        .xs
        .windows(2)
        .zip(curve.ys.windows(2))
        .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
        .collect();
    let slack = |i: usize| rtol * slopes[i].abs().max(slopes[i + 1].abs()) + 1e-12;
    let rising = (0..slopes.len() - 1).all(|i| slopes[i + 1] >= slopes[i] - slack(i));
    let falling = (0..slopes.len() - 1).all(|i| slopes[i + 1] <= slopes[i] + slack(i));
    match (rising, falling) {
        (true, true) => Convexity::Linear,
        (true, false) => Convexity::Convex,
        (false, true) => Convexity::Concave,
        (false, false) => Convexity::Neither,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DistributionSpec;
    use crate::grid::linspace;
    use approx::assert_relative_eq;

    fn ev(spec: DistributionSpec, s: u32) -> IteratedTailEvaluator {
        IteratedTailEvaluator::new(spec, s).unwrap()
    }

    fn curve_of(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> SampledCurve {
        let xs = linspace(lo, hi, 200);
        SampledCurve {
            ys: xs.iter().map(|&x| f(x)).collect(),
            xs,
            truncated: false,
            truncated_at: None,
        }
    }

    fn check(c: &SampledCurve) -> ConvexityReport {
        convexity_check(c, &chord_lines(c, 16, 1e-6), 1e-12, 1e-9).unwrap()
    }

    #[test]
    fn inversion_round_trip() {
        let e = ev(DistributionSpec::gamma(2.5, 1.5).unwrap(), 3);
        for p in [0.9, 0.5, 1e-3, 1e-12] {
            let x = invert_tail(&e, p).unwrap();
            assert_relative_eq!(e.tail(x).unwrap(), p, max_relative = 1e-10);
        }
        assert_eq!(invert_tail(&e, 1.0).unwrap(), 0.0);
        assert!(invert_tail(&e, 0.0).is_err());
    }

    #[test]
    fn identical_laws_give_identity() {
        let e = ev(DistributionSpec::weibull(1.7, 2.0).unwrap(), 2);
        let grid = GridConfig::on(0.0, 8.0).with_points(64);
        let c = c_s_curve(&e, &e, &grid).unwrap();
        assert!(!c.truncated);
        for (x, y) in c.xs.iter().zip(&c.ys) {
            assert!((x - y).abs() <= 1e-8 * x.max(1.0), "{x} {y}");
        }
    }

    #[test]
    fn exponential_pair_is_a_line() {
        let (lx, ly) = (2.0, 0.5);
        let ex = ev(DistributionSpec::exponential_rate(lx).unwrap(), 3);
        let ey = ev(DistributionSpec::exponential_rate(ly).unwrap(), 3);
        let grid = GridConfig::on(0.0, 10.0).with_points(64);
        let c = c_s_curve(&ex, &ey, &grid).unwrap();
        for (x, y) in c.xs.iter().zip(&c.ys) {
            // e^{-λ_X x} = e^{-λ_Y y}
            assert_relative_eq!(*y, lx / ly * x, max_relative = 1e-12, epsilon = 1e-300);
        }
        assert_eq!(check(&c).verdict, Convexity::Linear);
    }

    #[test]
    fn shapes_of_elementary_curves() {
        assert_eq!(check(&curve_of(f64::exp, 0.0, 3.0)).verdict, Convexity::Convex);
        assert_eq!(check(&curve_of(f64::ln, 0.1, 3.0)).verdict, Convexity::Concave);
        assert_eq!(check(&curve_of(|x| 2.0 * x - 1.0, 0.0, 3.0)).verdict, Convexity::Linear);
        let r = check(&curve_of(|x| x * x * x, -1.0, 1.0));
        assert_eq!(r.verdict, Convexity::Neither);
        assert!(r.convexity_witness.unwrap().crossings.len() >= 2);
        assert_eq!(r.second_difference, Convexity::Neither);
    }

    #[test]
    fn truncation_is_flagged() {
        let ex = ev(DistributionSpec::exponential(1.0).unwrap(), 1);
        let grid = GridConfig::on(0.0, 1000.0).with_points(64);
        let c = c_s_curve(&ex, &ex, &grid).unwrap();
        assert!(c.truncated);
        assert!(c.truncated_at.unwrap() > 600.0);
    }

    #[test]
    fn too_few_samples() {
        let c = curve_of(f64::exp, 0.0, 1.0);
        let short = SampledCurve {
            xs: c.xs[..10].to_vec(),
            ys: c.ys[..10].to_vec(),
            ..c
        };
        assert!(convexity_check(&short, &[], 0.0, 0.0).is_err());
    }
}

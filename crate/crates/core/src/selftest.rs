//! Built-in invariant suites, run by `stochord selftest`.
//!
//! Every numeric tolerance is multiplied by [`SelftestConfig::tolerance_scale`],
//! so a scale of 0 turns any rounding error into a failure.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ageing::{classify_ageing, failure_rate, hierarchy_check, AgeingConfig};
use crate::distributions::DistributionSpec;
use crate::error::Result;
use crate::grid::{linspace, GridConfig};
use crate::iterated::IteratedTailEvaluator;
use crate::mc::{mc_iterated_tail_table, McConfig};
use crate::ordering::{
    compare_exponential, compare_sifr, invert_tail, scan_direction, v_s_scan, CompareConfig, Criterion, Direction,
    Method, ProbeGridConfig,
};
use crate::par::Execution;
use crate::quadrature::{integrate_to_infinity, QuadConfig};
use crate::sign_variation::{final_part_patterns, pattern_from_samples, sign_pattern, SignSequence};
use crate::special::ln_factorial;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelftestConfig {
    /// Smaller grids and a `10⁴`-draw Monte Carlo check.
    pub quick: bool,
    pub tolerance_scale: f64,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self {
            quick: false,
            tolerance_scale: 1.0,
            seed: McConfig::default().seed,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

struct Ctx {
    cfg: SelftestConfig,
}

impl Ctx {
    fn tol(&self, t: f64) -> f64 {
        t * self.cfg.tolerance_scale
    }

    fn ageing(&self) -> AgeingConfig {
        AgeingConfig {
            n_points: if self.cfg.quick { 512 } else { 2048 },
            execution: self.cfg.execution,
            ..AgeingConfig::default()
        }
    }

    fn compare(&self) -> CompareConfig {
        CompareConfig {
            probes: self.probes(),
            ageing: self.ageing(),
            log_criterion: true,
        }
    }

    fn probes(&self) -> ProbeGridConfig {
        let d = ProbeGridConfig::default();
        ProbeGridConfig {
            n_a: if self.cfg.quick { 9 } else { 17 },
            n_b: if self.cfg.quick { 9 } else { 21 },
            chord_anchors: if self.cfg.quick { 8 } else { 12 },
            points_per_side: if self.cfg.quick { 128 } else { 256 },
            atol: self.tol(d.atol),
            rtol: self.tol(d.rtol),
            execution: self.cfg.execution,
            ..d
        }
    }
}

/// Outcome of a suite body: pass flag and a one-line detail.
type Outcome = Result<(bool, String)>;

fn specs() -> Vec<DistributionSpec> {
    vec![
        DistributionSpec::exponential(1.0).unwrap(),
        DistributionSpec::gamma(0.5, 1.0).unwrap(),
        DistributionSpec::gamma(2.0, 1.5).unwrap(),
        DistributionSpec::gamma(5.0, 0.5).unwrap(),
        DistributionSpec::weibull(0.5, 1.0).unwrap(),
        DistributionSpec::weibull(1.5, 2.0).unwrap(),
        DistributionSpec::weibull(3.0, 1.0).unwrap(),
        DistributionSpec::inverse_gamma(6.0, 1.0).unwrap(),
    ]
}

fn probe_xs(spec: &DistributionSpec) -> Vec<f64> {
    let hi = spec.quantile(0.99).unwrap_or(spec.scale());
    linspace(0.0, hi, 9).into_iter().skip(1).collect()
}

fn rel_err(got: f64, want: f64) -> f64 {
    if got == want {
        0.0
    } else {
        (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
    }
}

/// Tracks the largest error-to-tolerance ratio.
#[derive(Default)]
struct Worst {
    ratio: f64,
    at: String,
    failed: bool,
}

impl Worst {
    /// Remembers the first failure, or the worst ratio while none failed.
    fn check(&mut self, err: f64, tol: f64, at: impl FnOnce() -> String) {
        let ok = err <= tol;
        let ratio = if tol > 0.0 { err / tol } else if ok { 0.0 } else { f64::INFINITY };
        if !self.failed && (!ok || ratio > self.ratio || self.at.is_empty()) {
            self.at = at();
            self.ratio = ratio;
        }
        self.failed |= !ok;
    }

    fn finish(self) -> (bool, String) {
        let detail = if self.failed {
            format!("failed at {} (error/tolerance {:.3e})", self.at, self.ratio)
        } else {
            format!("worst error/tolerance {:.3} at {}", self.ratio, self.at)
        };
        (!self.failed, detail)
    }
}

fn moment_identity(c: &Ctx) -> Outcome {
    let mut w = Worst::default();
    for spec in specs() {
        for s in 1..=5 {
            let ev = IteratedTailEvaluator::new(spec, s)?;
            let ln_prod: f64 = (0..s).map(|j| ev.mu(j).ln()).sum();
            let ratio = (ln_factorial(s - 1) + ln_prod - ev.ln_moment(s - 1)).exp();
            w.check((ratio - 1.0).abs(), c.tol(1e-8), || format!("{spec}, s = {s}"));
        }
    }
    Ok(w.finish())
}

fn tail_is_a_tail(c: &Ctx) -> Outcome {
    let mut w = Worst::default();
    for spec in specs() {
        for s in 1..=4 {
            let ev = IteratedTailEvaluator::new(spec, s)?;
            w.check((ev.tail(0.0)? - 1.0).abs(), c.tol(1e-12), || format!("{spec}, s = {s}, x = 0"));
            let mut prev = 1.0;
            for x in probe_xs(&spec) {
                let t = ev.tail(x)?;
                w.check((t - prev).max(0.0), c.tol(1e-12), || format!("{spec}, s = {s}, x = {x}"));
                prev = t;
            }
        }
    }
    Ok(w.finish())
}

fn closed_form_vs_quadrature(c: &Ctx) -> Outcome {
    let mut w = Worst::default();
    for spec in specs() {
        for s in 2..=4 {
            let ev = IteratedTailEvaluator::new(spec, s)?;
            for x in probe_xs(&spec) {
                let err = rel_err(ev.tail_quadrature(s, x)?, ev.tail(x)?);
                w.check(err, c.tol(1e-7), || format!("{spec}, s = {s}, x = {x}"));
            }
        }
    }
    Ok(w.finish())
}

fn recursion_representation(c: &Ctx) -> Outcome {
    let mut w = Worst::default();
    for spec in specs() {
        let s = 3;
        let ev = IteratedTailEvaluator::new(spec, s)?;
        for k in [s - 1, s] {
            for x in probe_xs(&spec).into_iter().step_by(3) {
                let err = rel_err(ev.tail_via_recursion(x, k)?, ev.tail(x)?);
                w.check(err, c.tol(1e-6), || format!("{spec}, k = {k}, x = {x}"));
            }
        }
    }
    Ok(w.finish())
}

fn normalizer_mass(c: &Ctx) -> Outcome {
    let mut w = Worst::default();
    for spec in specs() {
        for s in 2..=4 {
            let ev = IteratedTailEvaluator::new(spec, s)?;
            let mass = integrate_to_infinity(
                |t| ev.tail_at_level(s - 1, t).unwrap_or(f64::NAN),
                0.0,
                spec.scale(),
                &QuadConfig::relative(1e-10),
            )?
            .value;
            w.check(rel_err(mass, ev.mu(s - 1)), c.tol(1e-6), || format!("{spec}, level {}", s - 1));
        }
    }
    Ok(w.finish())
}

fn exponential_fixed_point(c: &Ctx) -> Outcome {
    let mut w = Worst::default();
    for theta in [0.5, 1.0, 3.0] {
        let spec = DistributionSpec::exponential(theta)?;
        for s in 1..=5 {
            let ev = IteratedTailEvaluator::new(spec, s)?;
            for x in [0.1, 1.0, 4.0, 20.0] {
                let err = rel_err(ev.tail(x)?, (-x / theta).exp());
                w.check(err, c.tol(1e-12), || format!("θ = {theta}, s = {s}, x = {x}"));
                let err = rel_err(failure_rate(&ev, x)?, 1.0 / theta);
                w.check(err, c.tol(1e-10), || format!("rate, θ = {theta}, s = {s}, x = {x}"));
            }
        }
    }
    Ok(w.finish())
}

fn weibull_hazard(c: &Ctx) -> Outcome {
    let mut w = Worst::default();
    for (a, th) in [(0.5, 1.0), (2.0, 1.0), (3.0, 0.7)] {
        let ev = IteratedTailEvaluator::new(DistributionSpec::weibull(a, th)?, 1)?;
        for x in [0.2, 1.0, 2.5] {
            let want = a / th * (x / th).powf(a - 1.0);
            w.check(rel_err(failure_rate(&ev, x)?, want), c.tol(1e-12), || format!("W({a}, {th}), x = {x}"));
        }
    }
    Ok(w.finish())
}

fn rate_is_log_derivative(c: &Ctx) -> Outcome {
    let mut w = Worst::default();
    for spec in specs() {
        for s in 1..=3 {
            let ev = IteratedTailEvaluator::new(spec, s)?;
            for x in probe_xs(&spec).into_iter().step_by(2) {
                let h = 1e-5 * x.max(1e-3);
                let d = -(ev.ln_tail_at_level(s, x + h)? - ev.ln_tail_at_level(s, x - h)?) / (2.0 * h);
                w.check(rel_err(failure_rate(&ev, x)?, d), c.tol(1e-5), || format!("{spec}, s = {s}, x = {x}"));
            }
        }
    }
    Ok(w.finish())
}

fn quantile_roundtrip(c: &Ctx) -> Outcome {
    let mut w = Worst::default();
    for spec in specs() {
        for q in [1e-9, 1e-4, 0.1, 0.5, 0.9, 0.999_999] {
            let x = spec.inverse_survival(q)?;
            w.check(rel_err(spec.survival(x), q), c.tol(1e-9), || format!("{spec}, q = {q}"));
        }
    }
    Ok(w.finish())
}

fn tail_inversion_roundtrip(c: &Ctx) -> Outcome {
    let mut w = Worst::default();
    for spec in specs() {
        for s in 2..=3 {
            let ev = IteratedTailEvaluator::new(spec, s)?;
            for p in [1e-8, 1e-3, 0.3, 0.9] {
                let x = invert_tail(&ev, p)?;
                w.check(rel_err(ev.tail(x)?, p), c.tol(1e-8), || format!("{spec}, s = {s}, p = {p}"));
            }
        }
    }
    Ok(w.finish())
}

fn classification(c: &Ctx, family: &str) -> Outcome {
    let cfg = c.ageing();
    let mut wrong = Vec::new();
    for shape in [0.5, 1.5, 3.0] {
        for s in 1..=3 {
            let spec = match family {
                "weibull" => DistributionSpec::weibull(shape, 1.0)?,
                _ => DistributionSpec::gamma(shape, 1.0)?,
            };
            let r = classify_ageing(&IteratedTailEvaluator::new(spec, s)?, &cfg)?;
            let ok = if shape > 1.0 { r.is_s_ifr && !r.is_s_dfr } else { r.is_s_dfr && !r.is_s_ifr };
            if !ok || !hierarchy_check(&r) {
                wrong.push(format!("{spec} s = {s}"));
            }
        }
    }
    Ok((wrong.is_empty(), if wrong.is_empty() { "9 verdicts".into() } else { wrong.join("; ") }))
}

fn exponential_characterization(c: &Ctx) -> Outcome {
    let cfg = c.ageing();
    let mut wrong = Vec::new();
    for (spec, want) in [
        (DistributionSpec::gamma(2.0, 1.0)?, Direction::XMoreSifr),
        (DistributionSpec::weibull(0.5, 1.0)?, Direction::YMoreSifr),
        (DistributionSpec::exponential(2.0)?, Direction::Equivalent),
    ] {
        let v = compare_exponential(&IteratedTailEvaluator::new(spec, 2)?, 1.0, &cfg)?;
        if v.direction != want || v.method != Method::ExponentialCharacterization {
            wrong.push(format!("{spec}: {}", v.direction));
        }
    }
    Ok((wrong.is_empty(), if wrong.is_empty() { "3 verdicts".into() } else { wrong.join("; ") }))
}

/// Expected pattern and the function that should produce it.
type Case = (&'static str, fn(f64) -> f64);

fn sign_patterns(c: &Ctx) -> Outcome {
    let grid = GridConfig {
        atol: c.tol(1e-12),
        rtol: c.tol(1e-9),
        ..GridConfig::on(0.0, 4.0)
    };
    let mut wrong = Vec::new();
    let cases: [Case; 3] = [
        ("-,+", |x| x - 1.0),
        ("+,-,+", |x| (x - 1.0) * (x - 2.5)),
        ("-,+,-,+", |x| (x - 0.5) * (x - 1.5) * (x - 3.0)),
    ];
    for (want, f) in cases {
        let p = sign_pattern(f, &grid)?;
        if p.signs.to_string() != want || p.crossings.iter().any(|x| x.width() > 1e-7) {
            wrong.push(format!("{want} read as {}", p.signs));
        }
    }
    Ok((wrong.is_empty(), if wrong.is_empty() { "3 patterns".into() } else { wrong.join("; ") }))
}

/// Sum of tents with the given signs on consecutive random intervals, and
/// its exact tail integral `∫_x^∞`.
fn tent_tail(rng: &mut ChaCha8Rng, signs: &SignSequence) -> (Vec<f64>, Vec<f64>) {
    let mut knots = vec![0.0];
    let mut heights = Vec::new();
    for s in signs.signs() {
        knots.push(knots.last().unwrap() + rng.random_range(0.2..2.0));
        let h = rng.random_range(0.1..3.0);
        heights.push(if *s == crate::sign_variation::Sign::Plus { h } else { -h });
    }
    let tent_area_right_of = |l: f64, r: f64, h: f64, x: f64| -> f64 {
        if x >= r {
            return 0.0;
        }
        let m = 0.5 * (l + r);
        let half = 0.5 * (r - l);
        let full = h * half;
        if x <= l {
            full
        } else if x <= m {
            let left_done = 0.5 * h * (x - l) * (x - l) / half;
            full - left_done
        } else {
            0.5 * h * (r - x) * (r - x) / half
        }
    };
    let end = *knots.last().unwrap();
    let xs = linspace(0.0, end, 2000);
    let vs = xs
        .iter()
        .map(|&x| {
            (0..heights.len())
                .map(|i| tent_area_right_of(knots[i], knots[i + 1], heights[i], x))
                .sum()
        })
        .collect();
    (xs, vs)
}

fn final_parts(c: &Ctx) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(c.cfg.seed);
    let n = if c.cfg.quick { 10 } else { 50 };
    let mut bad = Vec::new();
    for p in ["-,+", "+,-", "+,-,+", "-,+,-,+"] {
        let seq: SignSequence = p.parse()?;
        let allowed = final_part_patterns(&seq)?;
        for _ in 0..n {
            let (xs, vs) = tent_tail(&mut rng, &seq);
            let got = pattern_from_samples(&xs, &vs, c.tol(1e-12), c.tol(1e-9)).signs;
            if !allowed.contains(&got) {
                bad.push(format!("{p} gave {got}"));
            }
        }
    }
    Ok((bad.is_empty(), if bad.is_empty() { format!("{} functions", 4 * n) } else { bad.join("; ") }))
}

fn gamma_order(c: &Ctx) -> Outcome {
    let x = DistributionSpec::gamma(3.0, 1.0)?;
    let y = DistributionSpec::gamma(2.0, 1.0)?;
    let v = compare_sifr(&x, &y, 2, &c.compare())?;
    let scan = scan_direction(
        &IteratedTailEvaluator::new(x, 2)?,
        &IteratedTailEvaluator::new(y, 2)?,
        Criterion::TailDifference,
        &c.probes(),
    )?;
    let ok = v.direction == Direction::XMoreSifr && v.method == Method::ProvenByTheorem && scan.is_clean();
    Ok((ok, format!("{} by {:?}, scan worst pattern {}", v.direction, v.method, scan.worst_pattern)))
}

fn counterexample(c: &Ctx) -> Outcome {
    let x = DistributionSpec::inverse_gamma(1.0, 1.0)?;
    let y = DistributionSpec::exponential(1.0)?;
    let v = compare_sifr(&x, &y, 1, &c.compare())?;
    let scan = v_s_scan(
        &IteratedTailEvaluator::new(x, 1)?,
        &IteratedTailEvaluator::new(y, 1)?,
        &c.probes(),
    )?;
    let ok = v.direction == Direction::NotComparable && scan.direction == Direction::NotComparable;
    Ok((ok, format!("pipeline {}, scan {}", v.direction, scan.direction)))
}

fn scale_invariance(c: &Ctx) -> Outcome {
    let x = DistributionSpec::gamma(3.0, 1.0)?;
    let y = DistributionSpec::weibull(0.7, 1.0)?;
    let cfg = c.compare();
    let base = compare_sifr(&x, &y, 1, &cfg)?.direction;
    let mut seen = vec![base.to_string()];
    let mut ok = true;
    for (cx, cy) in [(0.5, 7.0), (2.0, 2.0)] {
        let d = compare_sifr(&x.scaled(cx)?, &y.scaled(cy)?, 1, &cfg)?.direction;
        ok &= d == base;
        seen.push(d.to_string());
    }
    let swapped = compare_sifr(&y, &x, 1, &cfg)?.direction;
    ok &= swapped == base.swapped();
    Ok((ok, format!("directions {}; swapped {swapped}", seen.join(", "))))
}

fn mc_cross_check(c: &Ctx) -> Outcome {
    let mc = McConfig {
        n_samples: if c.cfg.quick { 10_000 } else { 200_000 },
        seed: c.cfg.seed,
        execution: c.cfg.execution,
        ..McConfig::default()
    };
    let (mut pass, mut total) = (0, 0);
    for spec in [DistributionSpec::gamma(2.0, 1.0)?, DistributionSpec::weibull(1.5, 1.0)?] {
        let xs = probe_xs(&spec);
        let table = mc_iterated_tail_table(&spec, &[1, 2, 3], &xs, &mc)?;
        for (i, row) in table.iter().enumerate() {
            let ev = IteratedTailEvaluator::new(spec, i as u32 + 1)?;
            for (&x, &(est, se)) in xs.iter().zip(row) {
                total += 1;
                if (est - ev.tail(x)?).abs() <= c.tol(3.0) * se {
                    pass += 1;
                }
            }
        }
    }
    let ok = pass as f64 >= 0.9 * total as f64;
    Ok((ok, format!("{pass}/{total} within 3 standard errors, n = {}", mc.n_samples)))
}

fn mc_determinism(c: &Ctx) -> Outcome {
    let spec = DistributionSpec::gamma(2.0, 1.0)?;
    let base = McConfig {
        n_samples: 20_000,
        batch: 3_000,
        seed: c.cfg.seed,
        ..McConfig::default()
    };
    let a = mc_iterated_tail_table(&spec, &[2], &[1.0], &McConfig { execution: Execution::Sequential, ..base })?;
    let b = mc_iterated_tail_table(&spec, &[2], &[1.0], &McConfig { execution: Execution::Parallel, ..base })?;
    let same = a[0][0].0.to_bits() == b[0][0].0.to_bits() && a[0][0].1.to_bits() == b[0][0].1.to_bits();
    Ok((same, format!("estimate {}", a[0][0].0)))
}

fn equivalence(c: &Ctx) -> Outcome {
    let cfg = c.compare();
    let mut wrong = Vec::new();
    for (x, y) in [
        (DistributionSpec::gamma(2.0, 1.0)?, DistributionSpec::gamma(2.0, 9.0)?),
        (DistributionSpec::weibull(2.0, 1.0)?, DistributionSpec::weibull(2.0, 5.0)?),
        (DistributionSpec::weibull(1.0, 3.0)?, DistributionSpec::exponential(3.0)?),
    ] {
        let d = compare_sifr(&x, &y, 2, &cfg)?.direction;
        if d != Direction::Equivalent {
            wrong.push(format!("{x} vs {y}: {d}"));
        }
    }
    Ok((wrong.is_empty(), if wrong.is_empty() { "3 pairs".into() } else { wrong.join("; ") }))
}

type Suite = (&'static str, fn(&Ctx) -> Outcome);

const SUITES: [Suite; 21] = [
    ("moment_identity", moment_identity),
    ("tail_is_a_tail", tail_is_a_tail),
    ("closed_form_vs_quadrature", closed_form_vs_quadrature),
    ("recursion_representation", recursion_representation),
    ("normalizer_mass", normalizer_mass),
    ("exponential_fixed_point", exponential_fixed_point),
    ("weibull_hazard", weibull_hazard),
    ("rate_is_log_derivative", rate_is_log_derivative),
    ("quantile_roundtrip", quantile_roundtrip),
    ("tail_inversion_roundtrip", tail_inversion_roundtrip),
    ("weibull_classification", |c| classification(c, "weibull")),
    ("gamma_classification", |c| classification(c, "gamma")),
    ("exponential_characterization", exponential_characterization),
    ("sign_patterns", sign_patterns),
    ("final_parts", final_parts),
    ("gamma_order", gamma_order),
    ("inverse_gamma_counterexample", counterexample),
    ("scale_invariance", scale_invariance),
    ("equivalence", equivalence),
    ("mc_cross_check", mc_cross_check),
    ("mc_determinism", mc_determinism),
];

pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|s| s.0).collect()
}

/// Runs every suite in order. A suite that errors counts as failed.
pub fn run_selftest(cfg: &SelftestConfig) -> Vec<SuiteResult> {
    let ctx = Ctx { cfg: *cfg };
    SUITES
        .iter()
        .map(|(name, body)| {
            let t = Instant::now();
            let (passed, detail) = match body(&ctx) {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            SuiteResult {
                name,
                passed,
                detail,
                seconds: t.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_run_passes() {
        let results = run_selftest(&SelftestConfig {
            quick: true,
            ..Default::default()
        });
        assert!(results.len() >= 20);
        for r in &results {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn zero_tolerance_fails() {
        let results = run_selftest(&SelftestConfig {
            quick: true,
            tolerance_scale: 0.0,
            ..Default::default()
        });
        assert!(results.iter().any(|r| !r.passed));
    }
}

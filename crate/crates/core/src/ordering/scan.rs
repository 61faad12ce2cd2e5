//! Probe scans for the sign-variation criteria.
//!
//! `X ≤_{s-IFR} Y` holds iff `V_s(x) = T̄_{Y,s}(x) − T̄_{X,s}(ax+b)` shows an
//! admissible sign pattern (`+,−,+` or fewer changes, never `−,+,−`) for
//! every `a > 0` and real `b`. A scan evaluates a finite probe set and stops
//! at the first violation, which becomes a certificate. Signs are taken from
//! `ln T̄_{Y,s}(x) − ln T̄_{X,s}(ax+b)`, which keeps them in the far tails.
//!
//! Each probe is sampled on the union of the quantile grid of `Y` and the
//! quantile grid of `X` pulled back through the probe, so both tails are
//! resolved whatever `a` and `b` are. Besides a rectangular `(a, b)` grid the
//! probe set contains chords of the sampled curve `c_s = T̄_{Y,s}⁻¹ ∘ T̄_{X,s}`
//! nudged up and down: the zero set of `V_s` is where `c_s` meets the line
//! `x = (u − b)/a`, so a chord just above or below a non-convex stretch
//! produces the forbidden pattern directly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{geomspace, linspace};
use crate::iterated::IteratedTailEvaluator;
use crate::ordering::curve::{invert_tail, logit_levels};
use crate::ordering::verdict::{
    Certificate, ComparisonProbe, Direction, DirectionScan, Evidence, Method, OrderVerdict, Stage,
};
use crate::par::{self, Execution};
use crate::sign_variation::{
    pattern_from_samples, refine, sequence_admissible_for_convexity,
    Sign, SignPattern, SignSequence,
};

/// Which function is scanned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Criterion {
    /// `V_s` itself.
    TailDifference,
    /// `ln` of the two terms of `H_k`, sampled right of `max(0, −b/a)`.
    /// `V_s` is a `k`-fold integral of `H_k`, so its pattern there is a final
    /// part of the `H_k` pattern starting with the sign of `V_s` at the left
    /// end; left of `−b/a` it is `−`. A probe passes when every pattern
    /// allowed by this argument is admissible, so a clean scan supports the
    /// order while a failing probe proves nothing.
    LogH { k: u32 },
}

impl Criterion {
    pub fn name(&self) -> String {
        match self {
            Criterion::TailDifference => "v_s".to_string(),
            Criterion::LogH { k } => format!("h_k (k = {k})"),
        }
    }

    fn k(&self) -> u32 {
        match self {
            Criterion::TailDifference => 0,
            Criterion::LogH { k } => *k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeGridConfig {
    /// Number of slopes; they are spread geometrically over
    /// `a0 · [a_min, a_max]` with `a0` the ratio of the two medians.
    pub n_a: usize,
    pub a_min: f64,
    pub a_max: f64,
    /// Number of offsets, linear over `±` the `b_quantile` quantile of the
    /// law inside the composition.
    pub n_b: usize,
    pub b_quantile: f64,
    /// Curve points used as chord anchors; every pair gives two probes.
    pub chord_anchors: usize,
    /// Relative vertical shift applied to each chord.
    pub chord_shift: f64,
    /// Tail levels per law; a probe sees about twice as many points.
    pub points_per_side: usize,
    pub q_lo: f64,
    pub q_hi: f64,
    /// A sample counts as zero within `atol + rtol·(|ln T̄_Y| + |ln T̄_X|)`.
    pub atol: f64,
    pub rtol: f64,
    pub refine_tol: f64,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for ProbeGridConfig {
    fn default() -> Self {
        Self {
            n_a: 33,
            a_min: 1.0 / 16.0,
            a_max: 16.0,
            n_b: 41,
            b_quantile: 0.999,
            chord_anchors: 16,
            chord_shift: 1e-3,
            points_per_side: 512,
            q_lo: 1e-12,
            q_hi: 1.0 - 1e-9,
            atol: 1e-12,
            rtol: 1e-9,
            refine_tol: 1e-8,
            execution: Execution::default(),
        }
    }
}

impl ProbeGridConfig {
    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidGrid(msg));
        if self.n_a == 0 || self.n_b == 0 {
            return bad("probe grid needs at least one slope and one offset".into());
        }
        if !(self.a_min > 0.0 && self.a_min <= self.a_max && self.a_max.is_finite()) {
            return bad(format!("slope range [{}, {}]", self.a_min, self.a_max));
        }
        if !(self.b_quantile > 0.0 && self.b_quantile < 1.0) {
            return bad(format!("offset quantile {}", self.b_quantile));
        }
        if self.points_per_side < 8 {
            return bad(format!("{} points per side, need at least 8", self.points_per_side));
        }
        if !(0.0 < self.q_lo && self.q_lo < self.q_hi && self.q_hi < 1.0) {
            return bad(format!("tail levels [{}, {}]", self.q_lo, self.q_hi));
        }
        if !(self.chord_shift >= 0.0) || !(self.atol >= 0.0) || !(self.rtol >= 0.0) {
            return bad("negative tolerance".into());
        }
        if !(self.refine_tol > 0.0) {
            return bad(format!("refinement tolerance {}", self.refine_tol));
        }
        Ok(())
    }

    /// Slope and offset grid: `n_a · n_b` probes.
    pub fn grid_probes(&self, a0: f64, b_bound: f64) -> Result<Vec<ComparisonProbe>> {
        let a_values = geomspace(a0 * self.a_min, a0 * self.a_max, self.n_a);
        let b_values = linspace(-b_bound, b_bound, self.n_b);
        let mut probes = Vec::with_capacity(a_values.len() * b_values.len());
        for &a in &a_values {
            for &b in &b_values {
                probes.push(ComparisonProbe::new(a, b)?);
            }
        }
        Ok(probes)
    }
}

/// Precomputed data for one law.
struct Side<'a> {
    ev: &'a IteratedTailEvaluator,
    level: u32,
    ln_norm: f64,
    /// Abscissa at each shared tail level, where the inversion succeeded.
    at_level: Vec<Option<f64>>,
    pts: Vec<f64>,
    known: Vec<f64>,
    median: f64,
    b_bound: f64,
}

impl<'a> Side<'a> {
    fn build(ev: &'a IteratedTailEvaluator, criterion: Criterion, cfg: &ProbeGridConfig) -> Result<Self> {
        let k = criterion.k();
        let level = ev.s() - k;
        let ln_norm = if k == 0 { 0.0 } else { ev.ln_mu_product(k) };
        let levels = logit_levels(cfg.points_per_side, cfg.q_lo, cfg.q_hi);
        let at_level = par::map(cfg.execution, &levels, |&q| {
            invert_tail(ev, q).ok().filter(|x| x.is_finite() && *x > 0.0)
        });
        let mut pts = vec![0.0];
        pts.extend(at_level.iter().flatten());
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let mut side = Self {
            ev,
            level,
            ln_norm,
            at_level,
            pts,
            known: Vec::new(),
            median: invert_tail(ev, 0.5)?,
            b_bound: ev.spec().quantile(cfg.b_quantile)?,
        };
        side.known = par::map(cfg.execution, &side.pts, |&x| side.value(x));
        Ok(side)
    }

    /// `ln` of the scanned term, NaN where it cannot be evaluated.
    fn value(&self, x: f64) -> f64 {
        self.ev
            .ln_tail_at_level(self.level, x)
            .map(|v| v - self.ln_norm)
            .unwrap_or(f64::NAN)
    }
}

/// One hypothesis: `inner ≤_{s-IFR} outer`, probed through
/// `outer(x)` against `inner(ax + b)`.
struct Pair<'s, 'a> {
    inner: &'s Side<'a>,
    outer: &'s Side<'a>,
    k: f64,
}

impl Pair<'_, '_> {
    fn delta(&self, probe: ComparisonProbe, x: f64) -> f64 {
        self.outer.value(x) - (self.k * probe.a().ln() + self.inner.value(probe.apply(x)))
    }

    /// Whether `x` belongs to the sampled range of the criterion.
    fn in_range(&self, probe: ComparisonProbe, x: f64) -> bool {
        if self.k > 0.0 && probe.b() < 0.0 {
            x > -probe.b() / probe.a()
        } else {
            x >= 0.0
        }
    }

    /// Samples of `ln outer(x) − ln inner(ax+b)` on the merged grid. Values
    /// within `atol + rtol·(|ln outer| + |ln inner|)` of zero, the rounding
    /// scale of the subtraction, become NaN and so count as zero.
    fn samples(&self, probe: ComparisonProbe, cfg: &ProbeGridConfig) -> (Vec<f64>, Vec<f64>) {
        let shift = self.k * probe.a().ln();
        let diff = |outer: f64, inner: f64| {
            let inner = inner + shift;
            let d = outer - inner;
            if d.abs() <= cfg.atol + cfg.rtol * (outer.abs() + inner.abs()) {
                f64::NAN
            } else {
                d
            }
        };
        let mut pts = Vec::with_capacity(self.outer.pts.len() + self.inner.pts.len());
        for (&x, &known) in self.outer.pts.iter().zip(&self.outer.known) {
            if self.in_range(probe, x) {
                pts.push((x, diff(known, self.inner.value(probe.apply(x)))));
            }
        }
        for (&u, &known) in self.inner.pts.iter().zip(&self.inner.known) {
            let x = (u - probe.b()) / probe.a();
            if self.in_range(probe, x) {
                pts.push((x, diff(self.outer.value(x), known)));
            }
        }
        pts.sort_by(|p, q| p.0.total_cmp(&q.0));
        pts.into_iter().unzip()
    }

    fn pattern(&self, probe: ComparisonProbe, cfg: &ProbeGridConfig) -> SignPattern {
        let (xs, vs) = self.samples(probe, cfg);
        let mut p = pattern_from_samples(&xs, &vs, 0.0, 0.0);
        p.band = cfg.atol;
        p
    }

    /// Patterns of `V_s` on `[0, ∞)` compatible with the sampled pattern.
    fn implied_patterns(&self, probe: ComparisonProbe, sampled: &SignSequence) -> Vec<SignSequence> {
        if self.k == 0.0 {
            return vec![sampled.clone()];
        }
        let s = self.outer.ev.s();
        let x0 = (-probe.b() / probe.a()).max(0.0);
        let ln_v0 = self.outer.ev.ln_tail_at_level(s, x0).unwrap_or(f64::NAN)
            - self.inner.ev.ln_tail_at_level(s, probe.apply(x0).max(0.0)).unwrap_or(f64::NAN);
        let first = (ln_v0.abs() > V0_BAND).then_some(if ln_v0 > 0.0 { Sign::Plus } else { Sign::Minus });
        let negative_start = probe.b() < 0.0;
        let mut candidates = sampled.suffixes();
        candidates.push(SignSequence::default());
        candidates
            .into_iter()
            .filter(|c| match (first, c.signs().first()) {
                (Some(f), Some(&g)) => f == g,
                _ => true,
            })
            .map(|c| {
                if negative_start {
                    SignSequence::new(std::iter::once(Sign::Minus).chain(c.signs().iter().copied()))
                } else {
                    c
                }
            })
            .collect()
    }

    fn passes(&self, probe: ComparisonProbe, p: &SignPattern) -> bool {
        self.implied_patterns(probe, &p.signs)
            .iter()
            .all(sequence_admissible_for_convexity)
    }

    /// Chords through pairs of curve points `(u, c(u))` at equal tail levels,
    /// shifted up and down, as probes.
    fn chord_probes(&self, cfg: &ProbeGridConfig) -> Vec<ComparisonProbe> {
        let mut curve = vec![(0.0, 0.0)];
        curve.extend(
            self.inner
                .at_level
                .iter()
                .zip(&self.outer.at_level)
                .filter_map(|(u, x)| Some(((*u)?, (*x)?))),
        );
        let n = cfg.chord_anchors.min(curve.len());
        if n < 2 {
            return Vec::new();
        }
        let anchors: Vec<(f64, f64)> = (0..n)
            .map(|i| curve[(i * (curve.len() - 1) + (n - 1) / 2) / (n - 1)])
            .collect();
        let mut probes = Vec::with_capacity(n * (n - 1));
        for i in 0..n {
            for j in i + 1..n {
                let ((u0, x0), (u1, x1)) = (anchors[i], anchors[j]);
                let m = (x1 - x0) / (u1 - u0);
                let k = x0 - m * u0;
                let delta = cfg.chord_shift * x0.abs().max(x1.abs()).max(f64::MIN_POSITIVE);
                for shifted in [k + delta, k - delta] {
                    let a = 1.0 / m;
                    if let Ok(p) = ComparisonProbe::new(a, -shifted * a) {
                        probes.push(p);
                    }
                }
            }
        }
        probes
    }

    fn scan(&self, hypothesis: Direction, criterion: Criterion, cfg: &ProbeGridConfig) -> Result<DirectionScan> {
        let a0 = self.inner.median / self.outer.median;
        let b_bound = self.inner.b_bound;
        let mut probes = cfg.grid_probes(a0, b_bound)?;
        let chords = self.chord_probes(cfg);
        let chord_probes = chords.len();
        probes.extend(chords);
        let points_per_probe = self.outer.pts.len() + self.inner.pts.len();

        const CHUNK: usize = 64;
        let mut worst = SignSequence::default();
        let mut scanned = 0;
        let mut certificate = None;
        for (c, chunk) in probes.chunks(CHUNK).enumerate() {
            let patterns = par::map(cfg.execution, chunk, |&p| self.pattern(p, cfg));
            if let Some(i) = chunk.iter().zip(&patterns).position(|(&q, p)| !self.passes(q, p)) {
                scanned = c * CHUNK + i + 1;
                let probe = chunk[i];
                let refined = refine(&|x| Ok(self.delta(probe, x)), patterns[i].clone(), cfg.refine_tol)?;
                worst = refined.signs.clone();
                certificate = Some(Certificate {
                    probe,
                    pattern: refined.signs,
                    crossings: refined.crossings,
                });
                break;
            }
            for p in patterns {
                if p.signs.len() > worst.len() {
                    worst = p.signs;
                }
            }
            scanned = c * CHUNK + chunk.len();
        }

        Ok(DirectionScan {
            hypothesis,
            criterion: criterion.name(),
            probes_total: probes.len(),
            probes_scanned: scanned,
            points_per_probe,
            a_range: (a0 * cfg.a_min, a0 * cfg.a_max),
            b_range: (-b_bound, b_bound),
            chord_probes,
            worst_pattern: worst,
            certificate,
        })
    }
}

/// `|ln T̄_Y − ln T̄_X|` below this leaves the sign of `V_s` at the left end
/// undecided.
const V0_BAND: f64 = 1e-12;

fn check_pair(ev_x: &IteratedTailEvaluator, ev_y: &IteratedTailEvaluator, criterion: Criterion) -> Result<()> {
    let s = ev_x.s();
    if ev_y.s() != s {
        return Err(Error::Domain(format!("iteration levels differ: {s} vs {}", ev_y.s())));
    }
    let k = criterion.k();
    if matches!(criterion, Criterion::LogH { .. }) && (k == 0 || k > s) {
        return Err(Error::Domain(format!("k = {k} must lie in 1..={s}")));
    }
    Ok(())
}

/// `V_s(x)` on the natural scale.
pub fn v_s(
    ev_x: &IteratedTailEvaluator,
    ev_y: &IteratedTailEvaluator,
    probe: ComparisonProbe,
    x: f64,
) -> Result<f64> {
    check_pair(ev_x, ev_y, Criterion::TailDifference)?;
    Ok(ev_y.tail(x)? - ev_x.tail(probe.apply(x))?)
}

/// Sign pattern of the criterion for one probe, sampled on the scan grid and
/// refined.
pub fn probe_pattern(
    ev_x: &IteratedTailEvaluator,
    ev_y: &IteratedTailEvaluator,
    criterion: Criterion,
    probe: ComparisonProbe,
    cfg: &ProbeGridConfig,
) -> Result<SignPattern> {
    cfg.validate()?;
    check_pair(ev_x, ev_y, criterion)?;
    let (inner, outer) = (Side::build(ev_x, criterion, cfg)?, Side::build(ev_y, criterion, cfg)?);
    let pair = Pair { inner: &inner, outer: &outer, k: criterion.k() as f64 };
    refine(&|x| Ok(pair.delta(probe, x)), pair.pattern(probe, cfg), cfg.refine_tol)
}

/// Scans both hypotheses: `X ≤ Y` (forward) and `Y ≤ X` (backward).
pub fn criterion_scan(
    ev_x: &IteratedTailEvaluator,
    ev_y: &IteratedTailEvaluator,
    criterion: Criterion,
    cfg: &ProbeGridConfig,
) -> Result<(DirectionScan, DirectionScan)> {
    cfg.validate()?;
    check_pair(ev_x, ev_y, criterion)?;
    let (sx, sy) = (Side::build(ev_x, criterion, cfg)?, Side::build(ev_y, criterion, cfg)?);
    let k = criterion.k() as f64;
    let forward = Pair { inner: &sx, outer: &sy, k }.scan(Direction::XMoreSifr, criterion, cfg)?;
    let backward = Pair { inner: &sy, outer: &sx, k }.scan(Direction::YMoreSifr, criterion, cfg)?;
    Ok((forward, backward))
}

/// Scans only the forward hypothesis `X ≤ Y`.
pub fn scan_direction(
    ev_x: &IteratedTailEvaluator,
    ev_y: &IteratedTailEvaluator,
    criterion: Criterion,
    cfg: &ProbeGridConfig,
) -> Result<DirectionScan> {
    cfg.validate()?;
    check_pair(ev_x, ev_y, criterion)?;
    let (sx, sy) = (Side::build(ev_x, criterion, cfg)?, Side::build(ev_y, criterion, cfg)?);
    Pair { inner: &sx, outer: &sy, k: criterion.k() as f64 }.scan(Direction::XMoreSifr, criterion, cfg)
}

pub(crate) fn b_window(cfg: &ProbeGridConfig) -> String {
    format!(
        "b within ± the {} quantile of the inner law, plus shifted chords of the sampled c_s curve",
        cfg.b_quantile
    )
}

/// Verdict from the `V_s` scans: a single clean direction is numerically
/// supported, two violated directions are certified incomparable, and two
/// clean directions mean equivalence when the laws are scale-related.
pub fn v_s_scan(
    ev_x: &IteratedTailEvaluator,
    ev_y: &IteratedTailEvaluator,
    cfg: &ProbeGridConfig,
) -> Result<OrderVerdict> {
    let (forward, backward) = criterion_scan(ev_x, ev_y, Criterion::TailDifference, cfg)?;
    let (direction, method) = match (forward.is_clean(), backward.is_clean()) {
        (true, false) => (Direction::XMoreSifr, Method::NumericallySupported),
        (false, true) => (Direction::YMoreSifr, Method::NumericallySupported),
        (false, false) => (Direction::NotComparable, Method::ViolationCertificate),
        (true, true) if ev_x.spec().scale_relation(ev_y.spec()).is_some() => {
            (Direction::Equivalent, Method::NumericallySupported)
        }
        (true, true) => (Direction::Inconclusive, Method::NumericallySupported),
    };
    Ok(OrderVerdict {
        direction,
        method,
        stage: Stage::ProbeScan,
        s: ev_x.s(),
        evidence: Evidence::Scan {
            forward,
            backward,
            b_window: b_window(cfg),
        },
    })
}

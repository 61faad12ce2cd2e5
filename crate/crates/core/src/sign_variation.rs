//! Sign patterns of sampled functions.
//!
//! A function is sampled on a grid, each value is classified as `+`, `−` or
//! inside a zero band, and consecutive equal signs are collapsed. Band
//! samples never start or end a sign change, so a function that is zero up
//! to rounding yields the empty (identically zero) pattern instead of noise.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridConfig;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "-")]
    Minus,
    #[serde(rename = "+")]
    Plus,
}

impl Sign {
    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    fn of(v: f64) -> Option<Self> {
        if v > 0.0 {
            Some(Sign::Plus)
        } else if v < 0.0 {
            Some(Sign::Minus)
        } else {
            None
        }
    }
}

/// Collapsed sign sequence; empty means identically zero.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct SignSequence(Vec<Sign>);

impl SignSequence {
    /// Builds a sequence, collapsing runs.
    pub fn new(signs: impl IntoIterator<Item = Sign>) -> Self {
        let mut v: Vec<Sign> = Vec::new();
        for s in signs {
            if v.last() != Some(&s) {
                v.push(s);
            }
        }
        Self(v)
    }

    pub fn signs(&self) -> &[Sign] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn changes(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|s| s.flip()).collect())
    }

    /// All nonempty suffixes, longest first.
    pub fn suffixes(&self) -> Vec<Self> {
        (0..self.0.len()).map(|i| Self(self.0[i..].to_vec())).collect()
    }

    /// True if `−,+,−` occurs as a contiguous run.
    pub fn contains_minus_plus_minus(&self) -> bool {
        self.0
            .windows(3)
            .any(|w| w == [Sign::Minus, Sign::Plus, Sign::Minus])
    }
}

impl fmt::Display for SignSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<&str> = self
            .0
            .iter()
            .map(|s| match s {
                Sign::Plus => "+",
                Sign::Minus => "-",
            })
            .collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for SignSequence {
    type Err = Error;

    /// Accepts `"-,+"`, `"−,+"`, `"-+"` and `"0"` for the zero pattern.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t == "0" || t.is_empty() {
            return Ok(Self::default());
        }
        let mut out = Vec::new();
        for c in t.chars() {
            match c {
                '+' => out.push(Sign::Plus),
                '-' | '−' => out.push(Sign::Minus),
                ',' | ' ' => {}
                _ => return Err(Error::UnsupportedPattern(s.to_string())),
            }
        }
        let seq = Self::new(out.iter().copied());
        if seq.len() != out.len() {
            return Err(Error::UnsupportedPattern(format!("{s} repeats a sign")));
        }
        Ok(seq)
    }
}

impl From<SignSequence> for String {
    fn from(s: SignSequence) -> Self {
        s.to_string()
    }
}

impl TryFrom<String> for SignSequence {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// An interval `[lo, hi]` bracketing one sign change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub lo: f64,
    pub hi: f64,
}

impl Crossing {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignPattern {
    pub signs: SignSequence,
    pub crossings: Vec<Crossing>,
    /// Zero-band half-width that was applied.
    pub band: f64,
}

impl SignPattern {
    pub fn is_zero(&self) -> bool {
        self.signs.is_zero()
    }
}

/// Sign pattern of `f` on the grid, with every crossing refined by
/// bisection.
pub fn sign_pattern<F>(f: F, grid: &GridConfig) -> Result<SignPattern>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    try_sign_pattern(|x| Ok(f(x)), grid)
}

/// Fallible version of [`sign_pattern`]; the first error in grid order is
/// returned.
pub fn try_sign_pattern<F>(f: F, grid: &GridConfig) -> Result<SignPattern>
where
    F: Fn(f64) -> Result<f64> + Sync + Send,
{
    let p = try_sign_pattern_sampled(&f, grid)?;
    refine(&f, p, grid.refine_tol)
}

/// Pattern from grid samples only; crossings bracket adjacent grid points.
pub fn try_sign_pattern_sampled<F>(f: F, grid: &GridConfig) -> Result<SignPattern>
where
    F: Fn(f64) -> Result<f64> + Sync + Send,
{
    let xs = grid.points()?;
    let vs = par::try_map(grid.execution, &xs, |&x| f(x))?;
    Ok(pattern_from_samples(&xs, &vs, grid.atol, grid.rtol))
}

/// Zero band for a set of samples: `atol + rtol · max finite |v|`.
pub fn zero_band(values: &[f64], atol: f64, rtol: f64) -> f64 {
    let peak = values
        .iter()
        .filter(|v| v.is_finite())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    atol + rtol * peak
}

/// Classifies already computed samples. Infinite values keep their sign;
/// NaN counts as inside the band.
pub fn pattern_from_samples(xs: &[f64], vs: &[f64], atol: f64, rtol: f64) -> SignPattern {
    assert_eq!(xs.len(), vs.len());
    let band = zero_band(vs, atol, rtol);
    let mut signs = Vec::new();
    let mut crossings = Vec::new();
    let mut last: Option<(Sign, f64)> = None;
    for (&x, &v) in xs.iter().zip(vs) {
        if v.is_nan() || v.abs() <= band {
            continue;
        }
        let s = if v > 0.0 { Sign::Plus } else { Sign::Minus };
        match last {
            Some((prev, _)) if prev == s => {}
            Some((_, px)) => {
                signs.push(s);
                crossings.push(Crossing { lo: px, hi: x });
            }
            None => signs.push(s),
        }
        last = Some((s, x));
    }
    SignPattern {
        signs: SignSequence(signs),
        crossings,
        band,
    }
}

/// Shrinks every crossing to width `tol · max(1, |x|)` by bisection on the
/// raw sign of `f`.
pub fn refine<F>(f: &F, mut p: SignPattern, tol: f64) -> Result<SignPattern>
where
    F: Fn(f64) -> Result<f64>,
{
    for (i, c) in p.crossings.iter_mut().enumerate() {
        let left = p.signs.0[i];
        let (mut lo, mut hi) = (c.lo, c.hi);
        while hi - lo > tol * lo.abs().max(hi.abs()).max(1.0) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            match Sign::of(f(mid)?) {
                Some(s) if s == left => lo = mid,
                Some(_) => hi = mid,
                None => {
                    lo = mid;
                    hi = mid;
                }
            }
        }
        *c = Crossing { lo, hi };
    }
    Ok(p)
}

/// Patterns compatible with convexity: at most two changes, and two only in
/// the order `+,−,+`.
pub fn pattern_admissible_for_convexity(p: &SignPattern) -> bool {
    sequence_admissible_for_convexity(&p.signs)
}

pub fn sequence_admissible_for_convexity(s: &SignSequence) -> bool {
    match s.len() {
        0..=2 => true,
        3 => s.0[0] == Sign::Plus,
        _ => false,
    }
}

/// Mirror image: admissible for concavity.
pub fn sequence_admissible_for_concavity(s: &SignSequence) -> bool {
    sequence_admissible_for_convexity(&s.negated())
}

/// Pattern of `ln A − ln B`, which has the sign of `A − B`. Taking logs keeps
/// the band meaningful when both functions span many decades.
pub fn log_sign_transform<A, B>(fa: A, fb: B, grid: &GridConfig) -> Result<SignPattern>
where
    A: Fn(f64) -> f64 + Sync + Send,
    B: Fn(f64) -> f64 + Sync + Send,
{
    let checked = |x: f64, v: f64| -> Result<f64> {
        if v > 0.0 && v.is_finite() {
            Ok(v.ln())
        } else {
            Err(Error::NonPositiveSample { x, value: v })
        }
    };
    try_sign_pattern(
        |x| Ok(checked(x, fa(x))? - checked(x, fb(x))?),
        grid,
    )
}

const FINAL_PART_ORDERS: [&str; 4] = ["-,+", "+,-", "+,-,+", "-,+,-,+"];

/// Possible patterns of `∫_x^∞ f` given the pattern of `f`, for the four
/// orders where this is known: the nonempty suffixes of the pattern.
pub fn final_part_patterns(p: &SignSequence) -> Result<BTreeSet<SignSequence>> {
    let supported = FINAL_PART_ORDERS
        .iter()
        .any(|o| o.parse::<SignSequence>().as_ref() == Ok(p));
    if !supported {
        return Err(Error::UnsupportedPattern(p.to_string()));
    }
    Ok(p.suffixes().into_iter().collect())
}

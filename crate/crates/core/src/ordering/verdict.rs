use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sign_variation::{Crossing, SignSequence};

/// Affine reparametrization `x ↦ a·x + b` used by the sign-variation
/// criteria. Only `a > 0` needs checking: a decreasing map always yields an
/// admissible pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonProbe {
    a: f64,
    b: f64,
}

impl ComparisonProbe {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter { name: "a", value: a });
        }
        if !b.is_finite() {
            return Err(Error::Domain(format!("probe offset b = {b} must be finite")));
        }
        Ok(Self { a, b })
    }

    pub fn identity() -> Self {
        Self { a: 1.0, b: 0.0 }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn apply(&self, x: f64) -> f64 {
        self.a * x + self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `X ≤_{s-IFR} Y`: `T̄_Y⁻¹ ∘ T̄_X` is convex.
    #[serde(rename = "x_more_sifr")]
    XMoreSifr,
    #[serde(rename = "y_more_sifr")]
    YMoreSifr,
    Equivalent,
    NotComparable,
    Inconclusive,
}

impl Direction {
    /// The same relation with the roles of `X` and `Y` exchanged.
    pub fn swapped(self) -> Self {
        match self {
            Direction::XMoreSifr => Direction::YMoreSifr,
            Direction::YMoreSifr => Direction::XMoreSifr,
            d => d,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::XMoreSifr => "x_more_sifr",
            Direction::YMoreSifr => "y_more_sifr",
            Direction::Equivalent => "equivalent",
            Direction::NotComparable => "not_comparable",
            Direction::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ProvenByTheorem,
    ExponentialCharacterization,
    NumericallySupported,
    ViolationCertificate,
}

/// Which step of the comparison pipeline produced the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Equivalence,
    Analytic,
    Exponential,
    LogCriterion,
    ProbeScan,
}

/// A probe whose criterion function shows a pattern convexity forbids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub probe: ComparisonProbe,
    pub pattern: SignSequence,
    pub crossings: Vec<Crossing>,
}

impl Certificate {
    /// Three or more changes, or a `−,+,−` run.
    pub fn is_well_formed(&self) -> bool {
        self.crossings.len() + 1 == self.pattern.len()
            && (self.crossings.len() >= 3 || self.pattern.contains_minus_plus_minus())
    }
}

/// Outcome of scanning one hypothesis (`X ≤ Y` or `Y ≤ X`) over a probe set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionScan {
    /// The relation being tested, as a direction name.
    pub hypothesis: Direction,
    /// `"v_s"` or `"h_k"` with the level used.
    pub criterion: String,
    pub probes_total: usize,
    /// Probes evaluated before stopping; equals the total for clean scans.
    pub probes_scanned: usize,
    pub points_per_probe: usize,
    pub a_range: (f64, f64),
    pub b_range: (f64, f64),
    pub chord_probes: usize,
    /// Most varied admissible pattern seen on a clean scan.
    pub worst_pattern: SignSequence,
    pub certificate: Option<Certificate>,
}

impl DirectionScan {
    pub fn is_clean(&self) -> bool {
        self.certificate.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum Evidence {
    Theorem {
        statement: String,
        conditions: String,
    },
    ScaleEquivalence {
        /// `F_X(x) = F_Y(k x)`.
        k: f64,
    },
    ExponentialCharacterization {
        rate: f64,
        s_ifr: bool,
        s_dfr: bool,
    },
    Scan {
        forward: DirectionScan,
        backward: DirectionScan,
        /// How the probe offsets were bounded; the criterion itself ranges
        /// over all real `b`.
        b_window: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderVerdict {
    pub direction: Direction,
    pub method: Method,
    pub stage: Stage,
    pub s: u32,
    pub evidence: Evidence,
}

impl OrderVerdict {
    /// The verdict for the swapped pair `(Y, X)`.
    pub fn swapped(mut self) -> Self {
        self.direction = self.direction.swapped();
        if let Evidence::Scan {
            forward, backward, ..
        } = &mut self.evidence
        {
            std::mem::swap(forward, backward);
        }
        if let Evidence::ScaleEquivalence { k } = &mut self.evidence {
            *k = 1.0 / *k;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probe_rejects_nonpositive_slope() {
        assert!(ComparisonProbe::new(0.0, 1.0).is_err());
        assert!(ComparisonProbe::new(-1.0, 1.0).is_err());
        assert!(ComparisonProbe::new(1.0, f64::NAN).is_err());
        assert_eq!(ComparisonProbe::new(2.0, -1.0).unwrap().apply(3.0), 5.0);
    }

    #[test]
    fn direction_names() {
        assert_eq!(Direction::XMoreSifr.to_string(), "x_more_sifr");
        assert_eq!(Direction::NotComparable.name(), "not_comparable");
        assert_eq!(Direction::XMoreSifr.swapped(), Direction::YMoreSifr);
        assert_eq!(Direction::Equivalent.swapped(), Direction::Equivalent);
    }

    #[test]
    fn certificate_shape() {
        let c = |p: &str, n: usize| Certificate {
            probe: ComparisonProbe::identity(),
            pattern: p.parse().unwrap(),
            crossings: vec![Crossing { lo: 0.0, hi: 1.0 }; n],
        };
        assert!(c("-,+,-", 2).is_well_formed());
        assert!(c("+,-,+,-", 3).is_well_formed());
        assert!(!c("+,-,+", 2).is_well_formed());
        assert!(!c("-,+,-", 1).is_well_formed());
    }
}

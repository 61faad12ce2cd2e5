//! The comparison pipeline: cheapest conclusive step first.

use serde::{Deserialize, Serialize};

use crate::ageing::{classify_ageing, AgeingConfig};
use crate::distributions::{DistributionSpec, Family};
use crate::error::{Error, Result};
use crate::iterated::IteratedTailEvaluator;
use crate::ordering::analytic::{analytic_compare_gamma, analytic_compare_weibull};
use crate::ordering::scan::{b_window, criterion_scan, v_s_scan, Criterion, ProbeGridConfig};
use crate::ordering::verdict::{Direction, Evidence, Method, OrderVerdict, Stage};
use crate::par::Execution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub probes: ProbeGridConfig,
    pub ageing: AgeingConfig,
    /// Try the `H_k` scan before the `V_s` scan.
    pub log_criterion: bool,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            probes: ProbeGridConfig::default(),
            ageing: AgeingConfig::default(),
            log_criterion: true,
        }
    }
}

impl CompareConfig {
    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.probes.execution = execution;
        self.ageing.execution = execution;
        self
    }
}

/// Compares `X` with an exponential law of the given rate: `X ≤_{s-IFR}
/// Exp` iff `X` is s-IFR and `Exp ≤_{s-IFR} X` iff `X` is s-DFR, because
/// `T̄_{Exp}⁻¹ ∘ T̄_{X,s}` is the cumulative iterated rate over `λ`.
pub fn compare_exponential(ev: &IteratedTailEvaluator, rate: f64, cfg: &AgeingConfig) -> Result<OrderVerdict> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidParameter { name: "rate", value: rate });
    }
    let report = classify_ageing(ev, cfg)?;
    let direction = match (report.is_s_ifr, report.is_s_dfr) {
        (true, true) => Direction::Equivalent,
        (true, false) => Direction::XMoreSifr,
        (false, true) => Direction::YMoreSifr,
        (false, false) => Direction::NotComparable,
    };
    Ok(OrderVerdict {
        direction,
        method: Method::ExponentialCharacterization,
        stage: Stage::Exponential,
        s: ev.s(),
        evidence: Evidence::ExponentialCharacterization {
            rate,
            s_ifr: report.is_s_ifr,
            s_dfr: report.is_s_dfr,
        },
    })
}

/// Decides `X ≤_{s-IFR} Y`:
///
/// 1. scale families are equivalent;
/// 2. gamma/gamma and Weibull/Weibull pairs are settled by shape;
/// 3. an exponential side reduces to classifying the other side;
/// 4. a clean `H_k` scan in exactly one direction supports that direction;
/// 5. otherwise the `V_s` probe scan decides.
pub fn compare_sifr(
    x: &DistributionSpec,
    y: &DistributionSpec,
    s: u32,
    cfg: &CompareConfig,
) -> Result<OrderVerdict> {
    let ev_x = IteratedTailEvaluator::new(*x, s)?;
    let ev_y = IteratedTailEvaluator::new(*y, s)?;

    if let Some(k) = x.scale_relation(y) {
        return Ok(OrderVerdict {
            direction: Direction::Equivalent,
            method: Method::ProvenByTheorem,
            stage: Stage::Equivalence,
            s,
            evidence: Evidence::ScaleEquivalence { k },
        });
    }

    let shapes = x.shape().zip(y.shape());
    let analytic = match (x.canonical_family(), y.canonical_family(), shapes) {
        (Family::Gamma, Family::Gamma, Some((ax, ay))) => {
            analytic_compare_gamma(ax, x.scale(), ay, y.scale(), s)?
        }
        (Family::Weibull, Family::Weibull, Some((ax, ay))) => {
            analytic_compare_weibull(ax, x.scale(), ay, y.scale(), s)?
        }
        _ => None,
    };
    if let Some(v) = analytic {
        return Ok(v);
    }

    if y.is_exponential() {
        return compare_exponential(&ev_x, 1.0 / y.scale(), &cfg.ageing);
    }
    if x.is_exponential() {
        return Ok(compare_exponential(&ev_y, 1.0 / x.scale(), &cfg.ageing)?.swapped());
    }

    if cfg.log_criterion {
        let both_weibull =
            x.canonical_family() == Family::Weibull && y.canonical_family() == Family::Weibull;
        let k = if both_weibull && s >= 2 { s - 1 } else { s };
        let (forward, backward) = criterion_scan(&ev_x, &ev_y, Criterion::LogH { k }, &cfg.probes)?;
        let direction = match (forward.is_clean(), backward.is_clean()) {
            (true, false) => Some(Direction::XMoreSifr),
            (false, true) => Some(Direction::YMoreSifr),
            _ => None,
        };
        if let Some(direction) = direction {
            return Ok(OrderVerdict {
                direction,
                method: Method::NumericallySupported,
                stage: Stage::LogCriterion,
                s,
                evidence: Evidence::Scan {
                    forward,
                    backward,
                    b_window: b_window(&cfg.probes),
                },
            });
        }
    }

    v_s_scan(&ev_x, &ev_y, &cfg.probes)
}

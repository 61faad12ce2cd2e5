//! Closed-form criteria for gamma and Weibull pairs.
//!
//! `H_k` compares the level-`(s−k)` tails after `k` differentiations of `V_s`:
//!
//! ```text
//! H_k(x) = T̄_{Y,s-k}(x) / ∏_{j=1}^{k} μ̃_{Y,s-j} − a^k T̄_{X,s-k}(ax+b) / ∏_{j=1}^{k} μ̃_{X,s-j}
//! ```
//!
//! and `V_s(x) = ∫_x^∞ (t−x)^{k-1}/(k−1)! · H_k(t) dt`, so an admissible sign
//! pattern of `H_k` for every probe forces one for `V_s`. Taking logs of the
//! two positive terms gives the `P` functions below, which have the sign of
//! `H_k` and are easy to analyse for unit-scale gamma (`k = s`, densities)
//! and Weibull (`k = s − 1`, survivals) pairs. Throughout, `X` has shape
//! `alpha_prime` and `Y` has shape `alpha`.

use crate::distributions::{DistributionSpec, Family};
use crate::error::{Error, Result};
use crate::iterated::IteratedTailEvaluator;
use crate::ordering::verdict::{ComparisonProbe, Direction, Evidence, Method, OrderVerdict, Stage};
use crate::special::ln_gamma;

fn check_levels(ev_x: &IteratedTailEvaluator, ev_y: &IteratedTailEvaluator, k: u32) -> Result<u32> {
    let s = ev_x.s();
    if ev_y.s() != s {
        return Err(Error::Domain(format!("iteration levels differ: {s} vs {}", ev_y.s())));
    }
    if k == 0 || k > s {
        return Err(Error::Domain(format!("k = {k} must lie in 1..={s}")));
    }
    Ok(s)
}

/// `H_k(x)`. Below `ax + b = 0` the inner tail is the constant 1, so its
/// derivatives and hence the second term vanish there.
pub fn h_k(
    ev_x: &IteratedTailEvaluator,
    ev_y: &IteratedTailEvaluator,
    k: u32,
    probe: ComparisonProbe,
    x: f64,
) -> Result<f64> {
    let s = check_levels(ev_x, ev_y, k)?;
    let level = s - k;
    let y_term = ev_y.tail_at_level(level, x)? / ev_y.ln_mu_product(k).exp();
    let u = probe.apply(x);
    let x_term = if u < 0.0 {
        0.0
    } else {
        probe.a().powi(k as i32) * ev_x.tail_at_level(level, u)? / ev_x.ln_mu_product(k).exp()
    };
    Ok(y_term - x_term)
}

/// `ln` of the first term of `H_k` minus `ln` of the second; same sign as
/// `H_k` and free of under- and overflow. `+∞` where `ax + b < 0`.
pub fn log_h_k(
    ev_x: &IteratedTailEvaluator,
    ev_y: &IteratedTailEvaluator,
    k: u32,
    probe: ComparisonProbe,
    x: f64,
) -> Result<f64> {
    let s = check_levels(ev_x, ev_y, k)?;
    let level = s - k;
    let y_side = ev_y.ln_tail_at_level(level, x)? - ev_y.ln_mu_product(k);
    if probe.apply(x) < 0.0 {
        return Ok(f64::INFINITY);
    }
    let x_side = k as f64 * probe.a().ln() + ev_x.ln_tail_at_level(level, probe.apply(x))?
        - ev_x.ln_mu_product(k);
    Ok(y_side - x_side)
}

fn check_shapes(alpha: f64, alpha_prime: f64) -> Result<()> {
    for (name, v) in [("alpha", alpha), ("alpha_prime", alpha_prime)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter { name, value: v });
        }
    }
    Ok(())
}

fn shifted(probe: ComparisonProbe, x: f64) -> Result<f64> {
    let u = probe.apply(x);
    if u > 0.0 {
        Ok(u)
    } else {
        Err(Error::Domain(format!("a·x + b = {u} must be positive")))
    }
}

/// `P_s` for `X ~ Γ(α′, 1)`, `Y ~ Γ(α, 1)`:
/// `(α−1) ln x − (α′−1) ln(ax+b) − x + ax + b + ln(Γ(α′)/Γ(α)) + ln(E X^{s−1} / (a^s E Y^{s−1}))`.
pub fn p_s_gamma(alpha: f64, alpha_prime: f64, s: u32, probe: ComparisonProbe, x: f64) -> Result<f64> {
    check_shapes(alpha, alpha_prime)?;
    if s == 0 {
        return Err(Error::LevelOutOfRange { s, cap: u32::MAX });
    }
    if !(x > 0.0) {
        return Err(Error::Domain(format!("x = {x} must be positive")));
    }
    let u = shifted(probe, x)?;
    let m = (s - 1) as f64;
    // E Z^m = Γ(shape + m) / Γ(shape) for unit-scale gamma.
    let ln_moment_ratio = (ln_gamma(alpha_prime + m) - ln_gamma(alpha_prime))
        - (ln_gamma(alpha + m) - ln_gamma(alpha));
    let constant = ln_gamma(alpha_prime) - ln_gamma(alpha) + ln_moment_ratio - s as f64 * probe.a().ln();
    Ok((alpha - 1.0) * x.ln() - (alpha_prime - 1.0) * u.ln() - x + u + constant)
}

/// Numerator of `P_s′` over the positive denominator `x(ax+b)`.
pub fn n_s_gamma(alpha: f64, alpha_prime: f64, probe: ComparisonProbe, x: f64) -> f64 {
    let (a, b) = (probe.a(), probe.b());
    a * (a - 1.0) * x * x + ((alpha - alpha_prime) * a + (a - 1.0) * b) * x + (alpha - 1.0) * b
}

/// `P_{s−1}` for `X ~ W(α′, 1)`, `Y ~ W(α, 1)` as usually displayed:
/// `−x^α + (ax+b)^{α′} + ln(E X^{s−2} / (a^{s−1} E Y^{s−2}))`, for `s ≥ 2`.
///
/// The recursion behind `H_{s−1}` normalizes by `∏_{j=1}^{s−1} μ̃_{s−j} =
/// E X^{s−1}/(s−1)!`, so this constant differs from the one in [`log_h_k`]
/// with `k = s − 1`; the derivative, and hence [`q_weibull`], is unaffected.
pub fn p_weibull(alpha: f64, alpha_prime: f64, s: u32, probe: ComparisonProbe, x: f64) -> Result<f64> {
    check_shapes(alpha, alpha_prime)?;
    if s < 2 {
        return Err(Error::LevelOutOfRange { s, cap: u32::MAX });
    }
    if x < 0.0 {
        return Err(Error::Domain(format!("x = {x} must be nonnegative")));
    }
    let u = shifted(probe, x)?;
    let m = (s - 2) as f64;
    // E Z^m = Γ(1 + m/shape) for unit-scale Weibull.
    let ln_moment_ratio = ln_gamma(1.0 + m / alpha_prime) - ln_gamma(1.0 + m / alpha);
    let constant = ln_moment_ratio - (s - 1) as f64 * probe.a().ln();
    Ok(-x.powf(alpha) + u.powf(alpha_prime) + constant)
}

/// `Q_{s−1} = ln(a α′ (ax+b)^{α′−1}) − ln(α x^{α−1})`, the log-transform of
/// `P_{s−1}′`.
pub fn q_weibull(alpha: f64, alpha_prime: f64, probe: ComparisonProbe, x: f64) -> Result<f64> {
    check_shapes(alpha, alpha_prime)?;
    if !(x > 0.0) {
        return Err(Error::Domain(format!("x = {x} must be positive")));
    }
    let u = shifted(probe, x)?;
    Ok((probe.a() * alpha_prime).ln() - alpha.ln() + (alpha_prime - 1.0) * u.ln()
        - (alpha - 1.0) * x.ln())
}

/// Numerator of `Q_{s−1}′` over the positive denominator `x(ax+b)`:
/// `a(α′−α)x + (1−α)b`.
pub fn q_weibull_numerator(alpha: f64, alpha_prime: f64, probe: ComparisonProbe, x: f64) -> f64 {
    probe.a() * (alpha_prime - alpha) * x + (1.0 - alpha) * probe.b()
}

fn analytic_compare(
    family: Family,
    alpha_x: f64,
    theta_x: f64,
    alpha_y: f64,
    theta_y: f64,
    s: u32,
) -> Result<Option<OrderVerdict>> {
    let x = DistributionSpec::new(family, alpha_x, theta_x)?;
    let y = DistributionSpec::new(family, alpha_y, theta_y)?;
    let name = family.name();
    if let Some(k) = x.scale_relation(&y) {
        return Ok(Some(OrderVerdict {
            direction: Direction::Equivalent,
            method: Method::ProvenByTheorem,
            stage: Stage::Analytic,
            s,
            evidence: Evidence::ScaleEquivalence { k },
        }));
    }
    let more = |big: f64, small: f64| (big > small && small > 1.0) || (big > 1.0 && 1.0 > small);
    let (direction, big, small) = if more(alpha_x, alpha_y) {
        (Direction::XMoreSifr, alpha_x, alpha_y)
    } else if more(alpha_y, alpha_x) {
        (Direction::YMoreSifr, alpha_y, alpha_x)
    } else {
        return Ok(None);
    };
    let (statement, relation) = if small > 1.0 {
        (
            format!("among {name} laws with shapes above 1, the larger shape is more s-IFR"),
            format!("{big} > {small} > 1"),
        )
    } else {
        (
            format!("a {name} law with shape above 1 is more s-IFR than one with shape below 1"),
            format!("{big} > 1 > {small}"),
        )
    };
    Ok(Some(OrderVerdict {
        direction,
        method: Method::ProvenByTheorem,
        stage: Stage::Analytic,
        s,
        evidence: Evidence::Theorem {
            statement,
            conditions: format!(
                "shapes {relation}; scales {theta_x} and {theta_y} do not matter since the order is scale invariant; holds for every s"
            ),
        },
    }))
}

/// Gamma pairs: equal shapes are equivalent, a pair is ordered when the
/// larger shape exceeds 1 and the smaller one is not exactly 1, and `None`
/// is returned otherwise.
pub fn analytic_compare_gamma(
    alpha_x: f64,
    theta_x: f64,
    alpha_y: f64,
    theta_y: f64,
    s: u32,
) -> Result<Option<OrderVerdict>> {
    analytic_compare(Family::Gamma, alpha_x, theta_x, alpha_y, theta_y, s)
}

/// Weibull pairs, with the same hypotheses as [`analytic_compare_gamma`].
pub fn analytic_compare_weibull(
    alpha_x: f64,
    theta_x: f64,
    alpha_y: f64,
    theta_y: f64,
    s: u32,
) -> Result<Option<OrderVerdict>> {
    analytic_compare(Family::Weibull, alpha_x, theta_x, alpha_y, theta_y, s)
}

//! s-iterated tails.
//!
//! Starting from `T̄₀ = f` and `μ̃₀ = 1`, each level integrates the previous
//! one and renormalizes:
//!
//! ```text
//! T̄_j(x) = (1/μ̃_{j-1}) ∫_x^∞ T̄_{j-1}(t) dt,    μ̃_j = ∫_0^∞ T̄_j(t) dt
//! ```
//!
//! Unrolling the recursion gives the partial-moment (stop-loss) form
//! `T̄_j(x) = E[(X − x)₊^{j-1}] / E X^{j-1}`, and the normalizers satisfy
//! `μ̃_j = E X^j / (j · E X^{j-1})`. All tails equal 1 for negative `x`.
//!
//! Evaluation picks the cheapest accurate route per family: closed form for
//! the exponential, a binomial expansion over upper incomplete gamma terms
//! for gamma and Weibull, and adaptive quadrature of the partial-moment
//! integrand otherwise (or when the expansion would cancel badly).

use crate::distributions::{DistributionSpec, Family};
use crate::error::{Error, Result};
use crate::quadrature::{try_integrate_to_infinity, QuadConfig};
use crate::special::{binomial, gamma_q, ln_factorial, ln_gamma};

pub const DEFAULT_LEVEL_CAP: u32 = 8;

/// Expansions whose terms exceed the result by more than this factor fall
/// back to quadrature (about 1e-12 relative accuracy left).
const CANCELLATION_LIMIT: f64 = 1e4;

/// Which evaluation route produced a tail value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailRoute {
    ClosedForm,
    IncompleteGammaSum,
    Quadrature,
}

#[derive(Debug, Clone)]
pub struct IteratedTailEvaluator {
    spec: DistributionSpec,
    s: u32,
    ln_moments: Vec<f64>,
    mu_ladder: Vec<f64>,
    quad: QuadConfig,
}

impl IteratedTailEvaluator {
    /// Builds the level-`s` evaluator with the default level cap.
    pub fn new(spec: DistributionSpec, s: u32) -> Result<Self> {
        Self::with_cap(spec, s, DEFAULT_LEVEL_CAP)
    }

    pub fn with_cap(spec: DistributionSpec, s: u32, cap: u32) -> Result<Self> {
        if s == 0 || s > cap {
            return Err(Error::LevelOutOfRange { s, cap });
        }
        let ln_moments = (0..s)
            .map(|m| spec.ln_raw_moment(m))
            .collect::<Result<Vec<_>>>()?;
        let mu_ladder = std::iter::once(1.0)
            .chain((1..s as usize).map(|j| {
                (ln_moments[j] - ln_moments[j - 1] - (j as f64).ln()).exp()
            }))
            .collect();
        Ok(Self {
            spec,
            s,
            ln_moments,
            mu_ladder,
            quad: QuadConfig::relative(1e-12),
        })
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    /// `E X^m` for `m = 0..s`.
    pub fn moments(&self) -> Vec<f64> {
        self.ln_moments.iter().map(|l| l.exp()).collect()
    }

    pub fn ln_moment(&self, m: u32) -> f64 {
        self.ln_moments[m as usize]
    }

    /// `μ̃_j` for `j = 0..s`; `μ̃_0 = 1`.
    pub fn mu_ladder(&self) -> &[f64] {
        &self.mu_ladder
    }

    pub fn mu(&self, j: u32) -> f64 {
        self.mu_ladder[j as usize]
    }

    /// `ln ∏_{j=1}^{k} μ̃_{s-j}`.
    pub fn ln_mu_product(&self, k: u32) -> f64 {
        (1..=k).map(|j| self.mu(self.s - j).ln()).sum()
    }

    /// The same evaluator at a lower level, sharing moments.
    pub fn at_level(&self, level: u32) -> Result<Self> {
        if level == 0 || level > self.s {
            return Err(Error::LevelOutOfRange { s: level, cap: self.s });
        }
        Ok(Self {
            spec: self.spec,
            s: level,
            ln_moments: self.ln_moments[..level as usize].to_vec(),
            mu_ladder: self.mu_ladder[..level as usize].to_vec(),
            quad: self.quad,
        })
    }

    /// `T̄_{X,s}(x)`.
    pub fn tail(&self, x: f64) -> Result<f64> {
        self.tail_at_level(self.s, x)
    }

    /// `T̄_{X,j}(x)` for `0 ≤ j ≤ s`; level 0 is the density.
    pub fn tail_at_level(&self, level: u32, x: f64) -> Result<f64> {
        self.tail_with_route(level, x).map(|(v, _)| v)
    }

    /// `ln T̄_{X,j}(x)`, using the log-survival directly at level 1 so the far
    /// tail does not underflow early. Level 0 gives the log-density.
    pub fn ln_tail_at_level(&self, level: u32, x: f64) -> Result<f64> {
        match level {
            0 => Ok(self.spec.ln_pdf(x)),
            _ if x <= 0.0 => Ok(0.0),
            1 => Ok(self.spec.ln_survival(x)),
            _ if self.spec.family() == Family::Exponential => Ok(-x / self.spec.scale()),
            _ => Ok(self.tail_at_level(level, x)?.ln()),
        }
    }

    pub fn tail_with_route(&self, level: u32, x: f64) -> Result<(f64, TailRoute)> {
        assert!(level <= self.s, "level {level} above evaluator level {}", self.s);
        if level == 0 {
            return Ok((self.spec.pdf(x), TailRoute::ClosedForm));
        }
        if x <= 0.0 {
            return Ok((1.0, TailRoute::ClosedForm));
        }
        if level == 1 {
            return Ok((self.spec.survival(x), TailRoute::ClosedForm));
        }
        match self.spec.family() {
            Family::Exponential => Ok(((-x / self.spec.scale()).exp(), TailRoute::ClosedForm)),
            Family::Gamma | Family::Weibull => match self.incomplete_gamma_sum(level, x) {
                Some(v) => Ok((v, TailRoute::IncompleteGammaSum)),
                None => Ok((self.tail_quadrature(level, x)?, TailRoute::Quadrature)),
            },
            Family::InverseGamma => Ok((self.tail_quadrature(level, x)?, TailRoute::Quadrature)),
        }
    }

    /// Expands `(t − x)^{j-1}` so the tail becomes a finite sum of upper
    /// incomplete gamma terms. Returns `None` when the alternating sum would
    /// lose too many digits.
    fn incomplete_gamma_sum(&self, level: u32, x: f64) -> Option<f64> {
        let n = level - 1;
        let shape = self.spec.shape().unwrap_or(1.0);
        let y = x / self.spec.scale();
        // term_i = C(n,i) (−y)^{n−i} E[(X/θ)^i ; X > x] / E (X/θ)^n, where the
        // partial moment is Γ(a_i) Q(a_i, z) with family-specific a_i and z.
        let (z, ln_norm) = match self.spec.family() {
            Family::Gamma => (y, ln_gamma(shape + n as f64)),
            Family::Weibull => (y.powf(shape), ln_gamma(1.0 + n as f64 / shape)),
            _ => return None,
        };
        let order = |i: u32| match self.spec.family() {
            Family::Gamma => shape + i as f64,
            _ => 1.0 + i as f64 / shape,
        };
        let mut sum = 0.0;
        let mut magnitude = 0.0;
        for i in 0..=n {
            let a = order(i);
            let sign = if (n - i).is_multiple_of(2) { 1.0 } else { -1.0 };
            let term = sign
                * binomial(n, i)
                * y.powi((n - i) as i32)
                * (ln_gamma(a) - ln_norm).exp()
                * gamma_q(a, z);
            sum += term;
            magnitude += term.abs();
        }
        (sum > 0.0 && magnitude <= CANCELLATION_LIMIT * sum).then_some(sum.min(1.0))
    }

    /// Generic route: `(1/E X^{j-1}) ∫_0^∞ f(x+u) u^{j-1} du` by adaptive
    /// quadrature. Exposed so fast paths can be cross-checked.
    pub fn tail_quadrature(&self, level: u32, x: f64) -> Result<f64> {
        assert!(level >= 1 && level <= self.s);
        if x < 0.0 {
            return Ok(1.0);
        }
        let power = (level - 1) as f64;
        let ln_norm = self.ln_moments[(level - 1) as usize];
        let spec = self.spec;
        let integrand = |u: f64| -> Result<f64> {
            let ln_f = spec.ln_pdf(x + u);
            if ln_f == f64::NEG_INFINITY || (power > 0.0 && u == 0.0) {
                return Ok(0.0);
            }
            Ok((ln_f + power * u.ln() - ln_norm).exp())
        };
        let r = try_integrate_to_infinity(integrand, 0.0, self.integration_scale(x), &self.quad)?;
        Ok(r.value.min(1.0))
    }

    fn integration_scale(&self, x: f64) -> f64 {
        match self.spec.family() {
            // Mean excess grows roughly linearly for the heavy-tailed family.
            Family::InverseGamma => self.spec.scale().max(x),
            _ => self.spec.scale(),
        }
    }

    /// Intermediate representation: integrate `k` levels down,
    /// `T̄_s(x) = (1/∏_{j=1}^{k} μ̃_{s-j}) ∫_x^∞ (t−x)^{k-1}/(k−1)! · T̄_{s-k}(t) dt`.
    pub fn tail_via_recursion(&self, x: f64, k: u32) -> Result<f64> {
        if k == 0 || k > self.s {
            return Err(Error::Domain(format!("k = {k} must lie in 1..={}", self.s)));
        }
        if x < 0.0 {
            return Ok(1.0);
        }
        let lower = self.s - k;
        let power = (k - 1) as f64;
        let ln_norm = self.ln_mu_product(k) + ln_factorial(k - 1);
        let integrand = |u: f64| -> Result<f64> {
            let t = self.tail_at_level(lower, x + u)?;
            if t == 0.0 || (power > 0.0 && u == 0.0) {
                return Ok(0.0);
            }
            Ok((t.ln() + power * u.ln() - ln_norm).exp())
        };
        let r = try_integrate_to_infinity(integrand, 0.0, self.integration_scale(x), &self.quad)?;
        Ok(r.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_to_infinity;
    use approx::assert_relative_eq;

    fn ev(spec: DistributionSpec, s: u32) -> IteratedTailEvaluator {
        IteratedTailEvaluator::new(spec, s).unwrap()
    }

    #[test]
    fn level_bounds() {
        let g = DistributionSpec::gamma(2.0, 1.0).unwrap();
        assert!(matches!(IteratedTailEvaluator::new(g, 0), Err(Error::LevelOutOfRange { .. })));
        assert!(matches!(IteratedTailEvaluator::new(g, 9), Err(Error::LevelOutOfRange { .. })));
        assert!(IteratedTailEvaluator::with_cap(g, 12, 12).is_ok());
    }

    #[test]
    fn missing_moment_names_its_order() {
        let ig = DistributionSpec::inverse_gamma(1.0, 1.0).unwrap();
        assert!(IteratedTailEvaluator::new(ig, 1).is_ok());
        let err = IteratedTailEvaluator::new(ig, 2).unwrap_err();
        assert!(matches!(err, Error::MomentUndefined { order: 1, .. }));
    }

    #[test]
    fn exponential_ladder_is_flat() {
        for s in 1..=8 {
            let e = ev(DistributionSpec::exponential(1.0).unwrap(), s);
            for &mu in e.mu_ladder() {
                assert_relative_eq!(mu, 1.0, max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn single_level_ladder() {
        let e = ev(DistributionSpec::weibull(0.7, 3.0).unwrap(), 1);
        assert_eq!(e.mu_ladder(), &[1.0]);
    }

    #[test]
    fn gamma_ladder_against_quadrature() {
        for &alpha in &[0.5, 2.0, 3.5] {
            let e = ev(DistributionSpec::gamma(alpha, 1.0).unwrap(), 5);
            for s in 2..=5u32 {
                let closed = (alpha + s as f64 - 2.0) / (s as f64 - 1.0);
                assert_relative_eq!(e.mu(s - 1), closed, max_relative = 1e-12);
                // μ̃_{s-1} = ∫₀^∞ T̄_{s-1}
                let oracle = crate::quadrature::try_integrate_to_infinity(
                    |t| e.tail_at_level(s - 1, t),
                    0.0,
                    1.0,
                    &QuadConfig::relative(1e-11),
                )
                .unwrap()
                .value;
                assert_relative_eq!(oracle, closed, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn boundary_values() {
        let specs = [
            DistributionSpec::gamma(0.4, 2.0).unwrap(),
            DistributionSpec::weibull(3.0, 1.0).unwrap(),
            DistributionSpec::inverse_gamma(6.0, 1.0).unwrap(),
        ];
        for spec in specs {
            let e = ev(spec, 4);
            assert_eq!(e.tail(0.0).unwrap(), 1.0);
            assert_eq!(e.tail(-1.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn exponential_tail_is_fixed_point() {
        let lambda: f64 = 0.5;
        let e = ev(DistributionSpec::exponential(1.0 / lambda).unwrap(), 6);
        for i in 0..40 {
            let x = i as f64 * 0.4;
            for level in 1..=6 {
                assert_eq!(e.tail_at_level(level, x).unwrap(), (-lambda * x).exp());
                let q = e.tail_quadrature(level, x).unwrap();
                assert!((q - (-lambda * x).exp()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn gamma_fast_path_matches_quadrature() {
        for &alpha in &[0.3, 1.5, 4.0] {
            let e = ev(DistributionSpec::gamma(alpha, 1.3).unwrap(), 5);
            for i in 1..60 {
                let x = i as f64 * 0.35;
                for level in 2..=5 {
                    let (fast, route) = e.tail_with_route(level, x).unwrap();
                    let slow = e.tail_quadrature(level, x).unwrap();
                    assert_relative_eq!(fast, slow, max_relative = 1e-9);
                    if x < 1.0 {
                        assert_eq!(route, TailRoute::IncompleteGammaSum);
                    }
                }
            }
        }
    }

    #[test]
    fn weibull_fast_path_matches_quadrature() {
        for &alpha in &[0.3, 0.8, 2.0, 5.0] {
            let e = ev(DistributionSpec::weibull(alpha, 0.7).unwrap(), 4);
            for i in 1..40 {
                let x = e.spec().quantile(i as f64 / 40.0).unwrap();
                for level in 2..=4 {
                    let fast = e.tail_at_level(level, x).unwrap();
                    let slow = e.tail_quadrature(level, x).unwrap();
                    assert_relative_eq!(fast, slow, max_relative = 1e-9);
                }
            }
        }
    }

    #[test]
    fn far_tail_falls_back_without_losing_precision() {
        let e = ev(DistributionSpec::gamma(2.0, 1.0).unwrap(), 8);
        let (v, route) = e.tail_with_route(8, 200.0).unwrap();
        assert_eq!(route, TailRoute::Quadrature);
        // ∫ f(200+u) u^7 du / E X^7 with f = t e^{-t}: = e^{-200} (200·7! + 8!) / 8!
        let expected = (-200f64).exp() * (200.0 * 5040.0 + 40320.0) / 40320.0;
        assert_relative_eq!(v, expected, max_relative = 1e-10);
    }

    #[test]
    fn recursion_reproduces_tail() {
        let e = ev(DistributionSpec::gamma(3.0, 1.0).unwrap(), 3);
        let direct = e.tail(0.7).unwrap();
        for k in 1..=3 {
            assert_relative_eq!(e.tail_via_recursion(0.7, k).unwrap(), direct, max_relative = 1e-7);
        }
        let ex = ev(DistributionSpec::exponential(1.0).unwrap(), 2);
        for &x in &[0.0, 0.5, 3.0] {
            assert_relative_eq!(ex.tail_via_recursion(x, 1).unwrap(), (-x).exp(), max_relative = 1e-10);
        }
        assert!(e.tail_via_recursion(0.7, 4).is_err());
    }

    #[test]
    fn stop_loss_form_matches_definition() {
        // Level 2 of Weibull(2,1) from the definition: ∫_x^∞ F̄ / μ̃_1.
        let e = ev(DistributionSpec::weibull(2.0, 1.0).unwrap(), 2);
        for &x in &[0.2, 1.0, 2.5] {
            let integral = integrate_to_infinity(|t| (-t * t).exp(), x, 1.0, &QuadConfig::relative(1e-12))
                .unwrap()
                .value;
            assert_relative_eq!(e.tail(x).unwrap(), integral / e.mu(1), max_relative = 1e-10);
        }
    }

    #[test]
    fn heavy_tail_quadrature() {
        // Inverse gamma(3, 1), level 2: E[(X−x)₊] / E X, with E X = 1/2.
        let e = ev(DistributionSpec::inverse_gamma(3.0, 1.0).unwrap(), 2);
        let spec = *e.spec();
        for &x in &[0.1, 1.0, 10.0, 100.0] {
            let oracle = integrate_to_infinity(|t| (t - x) * spec.pdf(t), x, x.max(1.0), &QuadConfig::relative(1e-12))
                .unwrap()
                .value
                / 0.5;
            assert_relative_eq!(e.tail(x).unwrap(), oracle, max_relative = 1e-9);
        }
    }
}

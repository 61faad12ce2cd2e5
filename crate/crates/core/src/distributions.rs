//! Parametric lifetime distributions on `[0, ∞)`.
//!
//! Four families are supported, all parameterized by shape and scale:
//!
//! | family        | density                                   | survival              |
//! |---------------|-------------------------------------------|-----------------------|
//! | exponential   | `e^{-x/θ} / θ`                            | `e^{-x/θ}`            |
//! | gamma         | `x^{α-1} e^{-x/θ} / (Γ(α) θ^α)`           | `Q(α, x/θ)`           |
//! | weibull       | `(α/θ)(x/θ)^{α-1} e^{-(x/θ)^α}`           | `e^{-(x/θ)^α}`        |
//! | inverse gamma | `β^α x^{-α-1} e^{-β/x} / Γ(α)`            | `P(α, β/x)`           |
//!
//! Parameters are validated once at construction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{gamma_p, gamma_p_inv, gamma_q, gamma_q_inv, ln_factorial, ln_gamma, ln_gamma_p, ln_gamma_q};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Exponential,
    Gamma,
    Weibull,
    InverseGamma,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Exponential => "exponential",
            Family::Gamma => "gamma",
            Family::Weibull => "weibull",
            Family::InverseGamma => "inverse_gamma",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A validated member of one of the supported families.
///
/// `shape` is `1` for the exponential, which is stored with its scale
/// `θ = 1/λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    family: Family,
    shape: f64,
    scale: f64,
}

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter { name, value })
    }
}

impl DistributionSpec {
    pub fn exponential(scale: f64) -> Result<Self> {
        Ok(Self {
            family: Family::Exponential,
            shape: 1.0,
            scale: positive("scale", scale)?,
        })
    }

    pub fn exponential_rate(rate: f64) -> Result<Self> {
        Self::exponential(1.0 / positive("rate", rate)?)
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        Ok(Self {
            family: Family::Gamma,
            shape: positive("shape", shape)?,
            scale: positive("scale", scale)?,
        })
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        Ok(Self {
            family: Family::Weibull,
            shape: positive("shape", shape)?,
            scale: positive("scale", scale)?,
        })
    }

    pub fn inverse_gamma(shape: f64, scale: f64) -> Result<Self> {
        Ok(Self {
            family: Family::InverseGamma,
            shape: positive("shape", shape)?,
            scale: positive("scale", scale)?,
        })
    }

    pub fn new(family: Family, shape: f64, scale: f64) -> Result<Self> {
        match family {
            Family::Exponential => Self::exponential(scale),
            Family::Gamma => Self::gamma(shape, scale),
            Family::Weibull => Self::weibull(shape, scale),
            Family::InverseGamma => Self::inverse_gamma(shape, scale),
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Shape parameter; `None` for the exponential.
    pub fn shape(&self) -> Option<f64> {
        (self.family != Family::Exponential).then_some(self.shape)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Family after folding `Γ(1, θ)` and `W(1, θ)` into the exponential.
    pub fn canonical_family(&self) -> Family {
        match self.family {
            Family::Gamma | Family::Weibull if self.shape == 1.0 => Family::Exponential,
            f => f,
        }
    }

    pub fn is_exponential(&self) -> bool {
        self.canonical_family() == Family::Exponential
    }

    /// The distribution of `c·X`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let c = positive("scale factor", c)?;
        Self::new(self.family, self.shape, self.scale * c)
    }

    /// `k` with `F_self(x) = F_other(k x)` for all `x`, when one exists.
    pub fn scale_relation(&self, other: &Self) -> Option<f64> {
        let fam = self.canonical_family();
        if fam != other.canonical_family() {
            return None;
        }
        let same_shape = fam == Family::Exponential
            || (self.shape - other.shape).abs() <= 1e-12 * self.shape.max(other.shape);
        same_shape.then(|| other.scale / self.scale)
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x < 0.0 || x.is_nan() {
            return f64::NEG_INFINITY;
        }
        let (a, th) = (self.shape, self.scale);
        match self.family {
            Family::Exponential => -th.ln() - x / th,
            Family::Gamma => {
                if x == 0.0 {
                    return origin_log_density(a, -th.ln());
                }
                (a - 1.0) * x.ln() - x / th - a * th.ln() - ln_gamma(a)
            }
            Family::Weibull => {
                if x == 0.0 {
                    return origin_log_density(a, -th.ln());
                }
                let y = x / th;
                (a / th).ln() + (a - 1.0) * y.ln() - y.powf(a)
            }
            Family::InverseGamma => {
                if x == 0.0 || x.is_infinite() {
                    return f64::NEG_INFINITY;
                }
                a * th.ln() - ln_gamma(a) - (a + 1.0) * x.ln() - th / x
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// `F̄(x) = P(X > x)`; equal to 1 for `x ≤ 0`.
    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        let (a, th) = (self.shape, self.scale);
        match self.family {
            Family::Exponential => (-x / th).exp(),
            Family::Gamma => gamma_q(a, x / th),
            Family::Weibull => (-(x / th).powf(a)).exp(),
            Family::InverseGamma => gamma_p(a, th / x),
        }
    }

    /// `ln F̄(x)`, finite far beyond the point where `F̄` underflows.
    pub fn ln_survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let (a, th) = (self.shape, self.scale);
        match self.family {
            Family::Exponential => -x / th,
            Family::Gamma => ln_gamma_q(a, x / th),
            Family::Weibull => -(x / th).powf(a),
            Family::InverseGamma => ln_gamma_p(a, th / x),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let (a, th) = (self.shape, self.scale);
        match self.family {
            Family::Exponential => -(-x / th).exp_m1(),
            Family::Gamma => gamma_p(a, x / th),
            Family::Weibull => -(-(x / th).powf(a)).exp_m1(),
            Family::InverseGamma => gamma_q(a, th / x),
        }
    }

    /// `x` with `F(x) = p`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::ProbabilityOutOfRange(p));
        }
        let (a, th) = (self.shape, self.scale);
        Ok(match self.family {
            Family::Exponential => -th * (-p).ln_1p(),
            Family::Gamma => th * gamma_p_inv(a, p)?,
            Family::Weibull => th * (-(-p).ln_1p()).powf(1.0 / a),
            Family::InverseGamma => th / gamma_q_inv(a, p)?,
        })
    }

    /// `x` with `F̄(x) = q`; keeps full relative precision for tiny `q`.
    pub fn inverse_survival(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::ProbabilityOutOfRange(q));
        }
        let (a, th) = (self.shape, self.scale);
        Ok(match self.family {
            Family::Exponential => -th * q.ln(),
            Family::Gamma => th * gamma_q_inv(a, q)?,
            Family::Weibull => th * (-q.ln()).powf(1.0 / a),
            Family::InverseGamma => th / gamma_p_inv(a, q)?,
        })
    }

    /// `ln E X^m`, or an error when the moment diverges.
    pub fn ln_raw_moment(&self, m: u32) -> Result<f64> {
        if m == 0 {
            return Ok(0.0);
        }
        let (a, th) = (self.shape, self.scale);
        let mf = m as f64;
        Ok(match self.family {
            Family::Exponential => mf * th.ln() + ln_factorial(m),
            Family::Gamma => mf * th.ln() + ln_gamma(a + mf) - ln_gamma(a),
            Family::Weibull => mf * th.ln() + ln_gamma(1.0 + mf / a),
            Family::InverseGamma => {
                if mf >= a {
                    return Err(Error::MomentUndefined {
                        family: self.family.name(),
                        shape: a,
                        order: m,
                    });
                }
                mf * th.ln() + ln_gamma(a - mf) - ln_gamma(a)
            }
        })
    }

    pub fn raw_moment(&self, m: u32) -> Result<f64> {
        if m == 0 {
            return Ok(1.0);
        }
        self.ln_raw_moment(m).map(f64::exp)
    }

    /// Point where the survival drops to `1e-12`; improper integrals are
    /// truncated there.
    pub fn truncation_point(&self) -> f64 {
        self.inverse_survival(1e-12)
            .expect("1e-12 is a valid tail probability")
    }
}

/// Log density at the origin for shape-driven families.
fn origin_log_density(shape: f64, ln_rate: f64) -> f64 {
    if shape < 1.0 {
        f64::INFINITY
    } else if shape == 1.0 {
        ln_rate
    } else {
        f64::NEG_INFINITY
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Exponential => write!(f, "exponential:{}", self.scale),
            fam => write!(f, "{}:{}:{}", fam, self.shape, self.scale),
        }
    }
}

/// Parses `family:shape:scale`, or `exponential:scale`.
impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(input: &str) -> Result<Self> {
        let bad = |reason: &str| Error::Parse {
            input: input.to_string(),
            reason: reason.to_string(),
        };
        let parts: Vec<&str> = input.trim().split(':').collect();
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| bad(&format!("{s:?} is not a number")))
        };
        let family = match parts[0].trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "exponential" | "exp" => Family::Exponential,
            "gamma" => Family::Gamma,
            "weibull" => Family::Weibull,
            "inverse_gamma" | "invgamma" => Family::InverseGamma,
            other => return Err(bad(&format!("unknown family {other:?}"))),
        };
        let spec = match (family, parts.len()) {
            (Family::Exponential, 2) => Self::exponential(num(parts[1])?),
            (Family::Exponential, _) => return Err(bad("expected exponential:scale")),
            (_, 3) => Self::new(family, num(parts[1])?, num(parts[2])?),
            _ => return Err(bad("expected family:shape:scale")),
        };
        spec.map_err(|e| bad(&e.to_string()))
    }
}

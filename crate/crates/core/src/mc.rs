//! Seeded Monte Carlo estimates of iterated tails.
//!
//! `T̄_{X,s}(x) = E[(X − x)₊^{s−1}] / E X^{s−1}`, so with the exact moment in
//! the denominator the estimator is a plain sample mean. Draws use inverse
//! transform sampling through [`DistributionSpec::inverse_survival`]. Batch
//! `i` has its own ChaCha stream `i` under the configured seed and batch
//! statistics are merged in batch order, so estimates are bit-for-bit
//! reproducible whatever the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::par::{self, Execution};

pub const MIN_SAMPLES: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// Draws per batch; the last batch may be shorter.
    pub batch: usize,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_samples: 1_000_000,
            seed: 0x005e_ed0f_7a11,
            batch: 1 << 16,
            execution: Execution::default(),
        }
    }
}

impl McConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_samples(mut self, n_samples: usize) -> Self {
        self.n_samples = n_samples;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < MIN_SAMPLES {
            return Err(Error::Domain(format!(
                "n_samples = {} is below the minimum {MIN_SAMPLES}",
                self.n_samples
            )));
        }
        if self.batch == 0 {
            return Err(Error::Domain("batch size must be positive".into()));
        }
        Ok(())
    }

    pub fn n_batches(&self) -> usize {
        self.n_samples.div_ceil(self.batch)
    }

    fn batch_len(&self, i: usize) -> usize {
        self.batch.min(self.n_samples - i * self.batch)
    }
}

/// Uniform on the open interval `(0, 1)`.
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.random::<u64>() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Draws of batch `i`.
pub fn sample_batch(spec: &DistributionSpec, cfg: &McConfig, i: usize) -> Result<Vec<f64>> {
    cfg.validate()?;
    if i >= cfg.n_batches() {
        return Err(Error::Domain(format!("batch {i} out of {}", cfg.n_batches())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(i as u64);
    (0..cfg.batch_len(i))
        .map(|_| spec.inverse_survival(open_unit(&mut rng)))
        .collect()
}

/// All `n_samples` draws, batch by batch.
pub fn sample(spec: &DistributionSpec, cfg: &McConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let batches = par::map_range(cfg.execution, cfg.n_batches(), |i| sample_batch(spec, cfg, i));
    let mut out = Vec::with_capacity(cfg.n_samples);
    for b in batches {
        out.extend(b?);
    }
    Ok(out)
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    /// Pairwise combination of two disjoint summaries.
    pub fn merge(self, other: Self) -> Self {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        Self {
            n,
            mean: self.mean + d * w,
            m2: self.m2 + other.m2 + d * d * self.n as f64 * w,
        }
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        self.m2 / (self.n - 1) as f64
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

/// Monte Carlo estimate of `T̄_{X,s}(x)` with its standard error.
pub fn mc_iterated_tail(spec: &DistributionSpec, s: u32, x: f64, cfg: &McConfig) -> Result<(f64, f64)> {
    Ok(mc_iterated_tails(spec, s, &[x], cfg)?[0])
}

/// Estimates at several abscissas from one shared sample.
pub fn mc_iterated_tails(
    spec: &DistributionSpec,
    s: u32,
    xs: &[f64],
    cfg: &McConfig,
) -> Result<Vec<(f64, f64)>> {
    Ok(mc_iterated_tail_table(spec, &[s], xs, cfg)?.remove(0))
}

/// Estimates for every level in `levels` and abscissa in `xs`, drawing the
/// sample once; rows follow `levels`.
pub fn mc_iterated_tail_table(
    spec: &DistributionSpec,
    levels: &[u32],
    xs: &[f64],
    cfg: &McConfig,
) -> Result<Vec<Vec<(f64, f64)>>> {
    cfg.validate()?;
    let mut norms = Vec::with_capacity(levels.len());
    for &s in levels {
        if s == 0 {
            return Err(Error::LevelOutOfRange { s, cap: u32::MAX });
        }
        norms.push(spec.ln_raw_moment(s - 1)?);
    }
    if let Some(&x) = xs.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::Domain(format!("x = {x} must be finite and nonnegative")));
    }
    let cells = levels.len() * xs.len();
    let partial = par::map_range(cfg.execution, cfg.n_batches(), |i| -> Result<Vec<Welford>> {
        let draws = sample_batch(spec, cfg, i)?;
        let mut acc = vec![Welford::default(); cells];
        for &d in &draws {
            for (li, (&s, &ln_norm)) in levels.iter().zip(&norms).enumerate() {
                for (xi, &x) in xs.iter().enumerate() {
                    let v = if d > x {
                        ((s - 1) as f64 * (d - x).ln() - ln_norm).exp()
                    } else {
                        0.0
                    };
                    acc[li * xs.len() + xi].push(v);
                }
            }
        }
        Ok(acc)
    });
    let mut total = vec![Welford::default(); cells];
    for batch in partial {
        for (t, b) in total.iter_mut().zip(batch?) {
            *t = t.merge(b);
        }
    }
    Ok(total
        .chunks(xs.len().max(1))
        .take(levels.len())
        .map(|row| row.iter().map(|w| (w.mean, w.std_error())).collect())
        .collect())
}

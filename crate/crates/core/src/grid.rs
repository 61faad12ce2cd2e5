//! Sampling grids shared by the sign-pattern, ageing and ordering scans.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Execution;

pub const DEFAULT_POINTS: usize = 4096;
pub const MIN_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    /// A quarter of the points geometric near the left end, the rest linear.
    LogLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub n_points: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub spacing: Spacing,
    /// Absolute half-width of the zero band.
    pub atol: f64,
    /// Zero band grows by `rtol · max|f|` over the samples.
    pub rtol: f64,
    /// Crossing brackets are refined to `refine_tol · max(1, |x|)`.
    pub refine_tol: f64,
    pub execution: Execution,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_points: DEFAULT_POINTS,
            x_min: 0.0,
            x_max: 1.0,
            spacing: Spacing::LogLinear,
            atol: 1e-12,
            rtol: 1e-9,
            refine_tol: 1e-8,
            execution: Execution::default(),
        }
    }
}

impl GridConfig {
    pub fn on(x_min: f64, x_max: f64) -> Self {
        Self {
            x_min,
            x_max,
            ..Self::default()
        }
    }

    pub fn with_points(mut self, n_points: usize) -> Self {
        self.n_points = n_points;
        self
    }

    pub fn with_spacing(mut self, spacing: Spacing) -> Self {
        self.spacing = spacing;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.x_min < self.x_max) {
            return Err(Error::InvalidGrid(format!(
                "need finite x_min < x_max, got [{}, {}]",
                self.x_min, self.x_max
            )));
        }
        if self.n_points < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "n_points = {} below the minimum {MIN_POINTS}",
                self.n_points
            )));
        }
        if !(self.atol >= 0.0 && self.rtol >= 0.0 && self.refine_tol > 0.0) {
            return Err(Error::InvalidGrid("tolerances must be nonnegative".into()));
        }
        Ok(())
    }

    /// Sorted, deduplicated abscissas; both endpoints included.
    pub fn points(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let (lo, hi, n) = (self.x_min, self.x_max, self.n_points);
        let mut xs = match self.spacing {
            Spacing::Linear => linspace(lo, hi, n),
            Spacing::LogLinear => {
                let n_log = n / 4;
                let mut xs = linspace(lo, hi, n - n_log);
                let start = if lo > 0.0 { lo } else { hi * 1e-9 };
                let g0 = start.ln();
                let g1 = hi.ln();
                xs.extend((0..n_log).map(|i| (g0 + (g1 - g0) * i as f64 / n_log as f64).exp()));
                xs
            }
        };
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        Ok(xs)
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    let mut xs: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
    xs[n - 1] = hi;
    xs
}

pub fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (l0, l1) = (lo.ln(), hi.ln());
    linspace(l0, l1, n).into_iter().map(f64::exp).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_linear_covers_both_ends() {
        let xs = GridConfig::on(0.0, 10.0).with_points(64).points().unwrap();
        assert_eq!(xs[0], 0.0);
        assert_eq!(*xs.last().unwrap(), 10.0);
        assert!(xs[1] < 1e-6);
        assert!(xs.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridConfig::on(1.0, 1.0).points().is_err());
        assert!(GridConfig::on(0.0, 1.0).with_points(8).points().is_err());
        assert!(GridConfig::on(0.0, f64::INFINITY).points().is_err());
    }

    #[test]
    fn geomspace_endpoints() {
        let g = geomspace(1.0 / 16.0, 16.0, 33);
        assert!((g[0] - 0.0625).abs() < 1e-15);
        assert!((g[16] - 1.0).abs() < 1e-14);
        assert!((g[32] - 16.0).abs() < 1e-12);
    }
}

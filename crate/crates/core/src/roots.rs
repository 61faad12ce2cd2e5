//! Safeguarded Newton for monotone inversion on `(0, ∞)`.
//!
//! The iteration runs in `z = ln y`: tails and incomplete gamma functions are
//! close to linear in that variable over many decades, and a bracket in `z`
//! never straddles zero.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Relative tolerance on the root `y`.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_iter: 400,
        }
    }
}

/// Finds `y > 0` with `h(y) = 0` for a nondecreasing `h`.
///
/// `h` returns `(value, derivative)`; a non-finite or nonpositive derivative
/// just forces a bisection step. The root must exist in `(0, ∞)`.
pub fn solve_increasing<H>(h: H, guess: f64, opts: SolveOptions) -> Result<f64>
where
    H: Fn(f64) -> (f64, f64),
{
    let eval = |z: f64| {
        let y = z.exp();
        let (v, d) = h(y);
        (v, d * y)
    };
    let mut z = if guess > 0.0 && guess.is_finite() {
        guess.ln()
    } else {
        0.0
    };
    let (mut v, mut d) = eval(z);
    if v == 0.0 {
        return Ok(z.exp());
    }

    // Bracket [lo, hi] in z with h(lo) < 0 < h(hi).
    let (mut lo, mut hi);
    let mut step = 1.0;
    if v < 0.0 {
        lo = z;
        loop {
            hi = lo + step;
            if hi > 709.0 {
                return Err(Error::RootNotFound("no upper bracket below 1e308".into()));
            }
            let (vh, _) = eval(hi);
            if vh >= 0.0 {
                break;
            }
            lo = hi;
            step *= 2.0;
        }
    } else {
        hi = z;
        loop {
            lo = hi - step;
            if lo < -745.0 {
                return Err(Error::RootNotFound("no lower bracket above 1e-323".into()));
            }
            let (vl, _) = eval(lo);
            if vl < 0.0 {
                break;
            }
            hi = lo;
            step *= 2.0;
        }
    }
    if !(lo..=hi).contains(&z) {
        z = 0.5 * (lo + hi);
        (v, d) = eval(z);
    }

    for _ in 0..opts.max_iter {
        if v == 0.0 {
            return Ok(z.exp());
        }
        if v < 0.0 {
            lo = z;
        } else {
            hi = z;
        }
        if hi - lo <= opts.rel_tol {
            return Ok((0.5 * (lo + hi)).exp());
        }
        let newton = z - v / d;
        let next = if d.is_finite() && d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let moved = (next - z).abs();
        z = next;
        (v, d) = eval(z);
        if moved <= opts.rel_tol * 0.25 {
            return Ok(z.exp());
        }
    }
    Err(Error::RootNotFound(format!(
        "no convergence after {} iterations, bracket [{:e}, {:e}]",
        opts.max_iter,
        lo.exp(),
        hi.exp()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cube_root() {
        let y = solve_increasing(|y| (y * y * y - 27.0, 3.0 * y * y), 1.0, SolveOptions::default())
            .unwrap();
        assert!((y - 3.0).abs() < 1e-11);
    }

    #[test]
    fn survives_useless_derivative() {
        let y = solve_increasing(|y| (y.ln() - 2.0, f64::NAN), 1e6, SolveOptions::default())
            .unwrap();
        assert!((y - 2f64.exp()).abs() < 1e-10);
    }

    #[test]
    fn reaches_tiny_roots() {
        let y = solve_increasing(|y| (y - 1e-40, 1.0), 1.0, SolveOptions::default()).unwrap();
        assert!((y / 1e-40 - 1.0).abs() < 1e-10);
    }
}

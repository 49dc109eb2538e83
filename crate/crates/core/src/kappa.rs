//! Effective-regularizer fixed point.
//!
//! `kappa(lambda, N, Sigma)` is the unique `kappa >= lambda` with
//!
//! ```text
//! lambda/kappa + (1/N) * sum_i lambda_i / (lambda_i + kappa) = 1.
//! ```
//!
//! The left-hand side is strictly decreasing in `kappa`, which makes
//! monotone bracketing sound; bisection is used to localize the root and a
//! safeguarded Newton step polishes it to the residual tolerance.

use crate::error::{Error, Result};
use crate::problem::{ExplicitInstance, PowerLawProblem, SampleSize};

/// Residual tolerance on the fixed-point defect.
pub const KAPPA_TOL: f64 = 1e-12;
/// Iteration cap; bisection alone exhausts double precision well before this.
pub const KAPPA_MAX_ITER: u32 = 200;

/// Solved fixed point with its residual defect and iteration count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaResult {
    pub kappa: f64,
    pub residual: f64,
    pub iterations: u32,
}

/// Anything that exposes a descending positive spectrum.
pub trait Spectrum {
    fn eigenvalues(&self) -> &[f64];
}

impl Spectrum for PowerLawProblem {
    fn eigenvalues(&self) -> &[f64] {
        PowerLawProblem::eigenvalues(self)
    }
}

impl Spectrum for ExplicitInstance {
    fn eigenvalues(&self) -> &[f64] {
        ExplicitInstance::eigenvalues(self)
    }
}

/// Fixed-point defect and its derivative in `kappa`, one pass over the modes.
fn residual_and_slope(lambda: f64, n: f64, eigenvalues: &[f64], kappa: f64) -> (f64, f64) {
    let mut s = 0.0;
    let mut ds = 0.0;
    for &lam in eigenvalues.iter().rev() {
        let denom = lam + kappa;
        let frac = lam / denom;
        s += frac;
        ds -= frac / denom;
    }
    let mut g = s / n - 1.0;
    let mut dg = ds / n;
    if lambda > 0.0 {
        g += lambda / kappa;
        dg -= lambda / (kappa * kappa);
    }
    (g, dg)
}

/// Solve the fixed point on an arbitrary spectrum.
///
/// With `n` infinite the `1/N` term vanishes and the root is `kappa = lambda`
/// exactly. With `lambda = 0` a positive root exists only when the spectrum
/// has more modes than data points.
pub fn solve_kappa(lambda: f64, n: SampleSize, spectrum: &impl Spectrum) -> Result<KappaResult> {
    if !(lambda >= 0.0) {
        return Err(Error::Parameter {
            name: "lambda",
            value: lambda,
            bound: "lambda >= 0",
        });
    }
    let eigenvalues = spectrum.eigenvalues();
    let n = match n.validate()? {
        SampleSize::Infinite => {
            if lambda == 0.0 {
                return Err(Error::NoRoot(
                    "lambda = 0 with infinite data leaves the fixed point undefined".into(),
                ));
            }
            return Ok(KappaResult {
                kappa: lambda,
                residual: 0.0,
                iterations: 0,
            });
        }
        SampleSize::Finite(n) => n as f64,
    };

    if lambda == 0.0 && eigenvalues.len() as f64 <= n {
        // sum_i lambda_i/(lambda_i + kappa) < P <= N for every kappa > 0.
        return Err(Error::NoRoot(format!(
            "lambda = 0 with {} modes and N = {} keeps the mode sum below 1",
            eigenvalues.len(),
            n
        )));
    }

    // Bracket: the defect is positive at kappa = max(lambda, tiny) and is
    // driven negative once kappa exceeds lambda + tr(Sigma)/N.
    let mut lo = if lambda > 0.0 { lambda } else { 0.0 };
    let trace: f64 = eigenvalues.iter().rev().sum();
    let mut hi = (lambda + trace / n).max(f64::MIN_POSITIVE);
    let mut iterations = 0;
    loop {
        let (g, _) = residual_and_slope(lambda, n, eigenvalues, hi);
        if g < 0.0 {
            break;
        }
        lo = hi;
        hi *= 2.0;
        iterations += 1;
        if iterations >= KAPPA_MAX_ITER {
            return Err(Error::NoConvergence {
                iterations,
                lo,
                hi,
            });
        }
    }

    // Bisection to localize, then safeguarded Newton inside the bracket.
    let mut kappa = 0.5 * (lo + hi);
    let mut g;
    let mut dg;
    loop {
        (g, dg) = residual_and_slope(lambda, n, eigenvalues, kappa);
        iterations += 1;
        if g.abs() < KAPPA_TOL {
            return Ok(KappaResult {
                kappa,
                residual: g,
                iterations,
            });
        }
        if iterations >= KAPPA_MAX_ITER {
            return Err(Error::NoConvergence {
                iterations,
                lo,
                hi,
            });
        }
        if g > 0.0 {
            lo = kappa;
        } else {
            hi = kappa;
        }
        // Newton proposal, kept only while it stays inside the bracket.
        let newton = kappa - g / dg;
        kappa = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
}

/// Closed-form order of the fixed point on the power-law spectrum:
/// `max(lambda, n^{-1-gamma})`.
pub fn kappa_asymptotic(lambda: f64, n: SampleSize, gamma: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::Parameter {
            name: "lambda",
            value: lambda,
            bound: "lambda >= 0",
        });
    }
    if !(gamma > 0.0) {
        return Err(Error::Parameter {
            name: "gamma",
            value: gamma,
            bound: "gamma > 0",
        });
    }
    Ok(match n.validate()? {
        SampleSize::Finite(n) => lambda.max((n as f64).powf(-1.0 - gamma)),
        SampleSize::Infinite => lambda,
    })
}

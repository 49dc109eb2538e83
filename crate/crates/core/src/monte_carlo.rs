//! Ground-truth simulator: samples correlated target pairs, draws Gaussian
//! inputs with the power-law covariance, fits the closed-form ridge estimator
//! and measures the population losses exactly against the diagonal spectrum.
//!
//! Trials run in parallel on independent counter-based RNG streams derived
//! from `(seed, trial index)`, and aggregation order is fixed, so a seed
//! pins the output bit for bit.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::det_equiv::{
    l1_det_expected, l1_det_explicit, l2_det_expected, l2_det_explicit, DetEquivResult,
};
use crate::error::{Error, Result};
use crate::problem::{ExplicitInstance, PowerLawProblem, RidgeConfig, SampleSize};

/// Row-major dense matrix, just big enough for the simulation path.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }
}

/// One synthetic dataset: inputs, labels, the sampled target pair and the
/// mask saying which rows were labelled by the performance target.
#[derive(Debug, Clone)]
pub struct SyntheticDraw {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub beta1: Vec<f64>,
    pub beta2: Vec<f64>,
    pub label_mask: Vec<bool>,
}

/// Aggregated losses over independent trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialStats {
    pub mean_l1: f64,
    pub mean_l2: f64,
    pub stderr_l1: f64,
    pub stderr_l2: f64,
    pub trials: u32,
    pub seed: u64,
}

/// Empirical means next to the deterministic equivalents they should match:
/// the expectation-level closed forms and the per-trial explicit equivalents
/// built from each sampled target pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    pub stats: TrialStats,
    pub l1_det_expected: DetEquivResult,
    pub l2_det_expected: DetEquivResult,
    pub l1_det_explicit_mean: f64,
    pub l2_det_explicit_mean: f64,
}

/// Sample the target pair coordinate-wise: `b1_i = s u`, `b2_i = s (rho u +
/// sqrt(1-rho^2) v)` with `s = i^{-delta/2}` and independent standard normals
/// `u, v`, realizing variances `i^{-delta}` and covariance `rho i^{-delta}`.
pub fn sample_betas(
    problem: &PowerLawProblem,
    p_sim: usize,
    rng: &mut impl Rng,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if p_sim < 1 || p_sim > problem.p_trunc() {
        return Err(Error::Parameter {
            name: "p_sim",
            value: p_sim as f64,
            bound: "1 <= p_sim <= p_trunc",
        });
    }
    let rho = problem.rho();
    let cross = (1.0 - rho * rho).sqrt();
    let mut beta1 = Vec::with_capacity(p_sim);
    let mut beta2 = Vec::with_capacity(p_sim);
    for i in 1..=p_sim {
        let scale = (i as f64).powf(-problem.delta() / 2.0);
        let u: f64 = rng.sample(StandardNormal);
        let v: f64 = rng.sample(StandardNormal);
        beta1.push(scale * u);
        beta2.push(scale * (rho * u + cross * v));
    }
    Ok((beta1, beta2))
}

/// Draw `n` independent rows `x_i = Sigma^{1/2} z_i` with Gaussian `z`:
/// column `i` is scaled by `i^{-(1+gamma)/2}`.
pub fn sample_inputs(
    n: usize,
    problem: &PowerLawProblem,
    p_sim: usize,
    rng: &mut impl Rng,
) -> Result<Matrix> {
    if n < 1 {
        return Err(Error::Parameter {
            name: "n",
            value: n as f64,
            bound: "n >= 1",
        });
    }
    if p_sim < 1 || p_sim > problem.p_trunc() {
        return Err(Error::Parameter {
            name: "p_sim",
            value: p_sim as f64,
            bound: "1 <= p_sim <= p_trunc",
        });
    }
    let scales: Vec<f64> = (1..=p_sim)
        .map(|i| (i as f64).powf(-(1.0 + problem.gamma()) / 2.0))
        .collect();
    let mut x = Matrix::zeros(n, p_sim);
    for r in 0..n {
        for (c, &s) in scales.iter().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            x.set(r, c, s * z);
        }
    }
    Ok(x)
}

/// Assemble a full draw: targets, inputs, a uniformly random subset of
/// `round(alpha n)` rows labelled by the performance target, the rest by the
/// safety target.
pub fn make_draw(
    problem: &PowerLawProblem,
    cfg: &RidgeConfig,
    p_sim: usize,
    rng: &mut impl Rng,
) -> Result<SyntheticDraw> {
    let n = match cfg.n {
        SampleSize::Finite(n) => n as usize,
        SampleSize::Infinite => {
            return Err(Error::Parameter {
                name: "n",
                value: f64::INFINITY,
                bound: "finite n for simulation",
            })
        }
    };
    let (beta1, beta2) = sample_betas(problem, p_sim, rng)?;
    let x = sample_inputs(n, problem, p_sim, rng)?;

    // Exactly round(alpha n) performance labels on a uniform subset
    // (partial Fisher-Yates).
    let n_perf = (cfg.alpha * n as f64).round() as usize;
    let mut idx: Vec<usize> = (0..n).collect();
    for k in 0..n_perf.min(n) {
        let j = rng.gen_range(k..n);
        idx.swap(k, j);
    }
    let mut label_mask = vec![false; n];
    for &i in &idx[..n_perf.min(n)] {
        label_mask[i] = true;
    }

    let mut y = Vec::with_capacity(n);
    for r in 0..n {
        let beta = if label_mask[r] { &beta1 } else { &beta2 };
        let dot: f64 = x.row(r).iter().zip(beta).map(|(a, b)| a * b).sum();
        y.push(dot);
    }
    Ok(SyntheticDraw {
        x,
        y,
        beta1,
        beta2,
        label_mask,
    })
}

/// In-place Cholesky factorization of a symmetric positive-definite matrix
/// stored row-major; returns the lower factor or fails on a non-positive
/// pivot.
fn cholesky(a: &mut Matrix) -> Result<()> {
    let n = a.rows;
    for j in 0..n {
        let mut diag = a.get(j, j);
        for k in 0..j {
            let l = a.get(j, k);
            diag -= l * l;
        }
        if diag <= 0.0 || !diag.is_finite() {
            return Err(Error::Solve(format!(
                "non-positive pivot {diag} at column {j}"
            )));
        }
        let diag = diag.sqrt();
        a.set(j, j, diag);
        for i in j + 1..n {
            let mut v = a.get(i, j);
            for k in 0..j {
                v -= a.get(i, k) * a.get(j, k);
            }
            a.set(i, j, v / diag);
        }
    }
    Ok(())
}

fn cholesky_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l.get(i, k) * y[k];
        }
        y[i] /= l.get(i, i);
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l.get(k, i) * y[k];
        }
        y[i] /= l.get(i, i);
    }
    y
}

/// Relative residual tolerance of the ridge solve.
pub const RIDGE_RESIDUAL_TOL: f64 = 1e-8;

/// Closed-form ridge fit `(Sigma_hat + lambda I)^{-1} (1/n) X^T Y` via an SPD
/// solve. The normal equations are solved in whichever of the primal (`P x P`)
/// or dual (`N x N`) dimension is smaller; the returned vector is checked
/// against the primal residual either way.
pub fn ridge_fit(draw: &SyntheticDraw, lambda: f64) -> Result<Vec<f64>> {
    if lambda < 0.0 {
        return Err(Error::Parameter {
            name: "lambda",
            value: lambda,
            bound: "lambda >= 0",
        });
    }
    let n = draw.x.rows;
    let p = draw.x.cols;
    let nf = n as f64;

    // rhs = (1/n) X^T y
    let mut rhs = vec![0.0; p];
    for r in 0..n {
        let yr = draw.y[r];
        for (c, &v) in draw.x.row(r).iter().enumerate() {
            rhs[c] += v * yr;
        }
    }
    for v in rhs.iter_mut() {
        *v /= nf;
    }

    // lambda = 0 is only defined when the primal matrix itself is
    // invertible; the dual route would silently produce the minimum-norm
    // interpolator instead.
    let beta_hat = if n >= p || lambda == 0.0 {
        // Primal: (X^T X / n + lambda I) beta = rhs.
        let mut gram = Matrix::zeros(p, p);
        for r in 0..n {
            let row = draw.x.row(r);
            for i in 0..p {
                let xi = row[i];
                if xi == 0.0 {
                    continue;
                }
                for j in 0..=i {
                    gram.data[i * p + j] += xi * row[j];
                }
            }
        }
        for i in 0..p {
            for j in 0..=i {
                let v = gram.get(i, j) / nf + if i == j { lambda } else { 0.0 };
                gram.set(i, j, v);
                gram.set(j, i, v);
            }
        }
        cholesky(&mut gram)?;
        cholesky_solve(&gram, &rhs)
    } else {
        // Dual: beta = X^T (X X^T + n lambda I)^{-1} y.
        let mut gram = Matrix::zeros(n, n);
        for i in 0..n {
            let ri = draw.x.row(i);
            for j in 0..=i {
                let rj = draw.x.row(j);
                let dot: f64 = ri.iter().zip(rj).map(|(a, b)| a * b).sum();
                let v = dot + if i == j { nf * lambda } else { 0.0 };
                gram.set(i, j, v);
                gram.set(j, i, v);
            }
        }
        cholesky(&mut gram)?;
        let alpha = cholesky_solve(&gram, &draw.y);
        let mut beta = vec![0.0; p];
        for r in 0..n {
            let a = alpha[r];
            for (c, &v) in draw.x.row(r).iter().enumerate() {
                beta[c] += v * a;
            }
        }
        beta
    };

    // Primal residual (Sigma_hat + lambda I) beta - rhs, computed through X
    // so the dual route is checked against the same system:
    // X^T (X beta - y) / n + lambda beta.
    let mut xbeta = vec![0.0; n];
    for r in 0..n {
        xbeta[r] = draw.x.row(r).iter().zip(&beta_hat).map(|(a, b)| a * b).sum();
    }
    let mut residual = vec![0.0; p];
    for r in 0..n {
        let e = xbeta[r] - draw.y[r];
        for (c, &v) in draw.x.row(r).iter().enumerate() {
            residual[c] += v * e;
        }
    }
    let mut norm_r = 0.0;
    let mut norm_b = 0.0;
    for c in 0..p {
        let r = residual[c] / nf + lambda * beta_hat[c];
        norm_r += r * r;
        norm_b += rhs[c] * rhs[c];
    }
    if norm_r.sqrt() > RIDGE_RESIDUAL_TOL * norm_b.sqrt() {
        return Err(Error::Solve(format!(
            "ridge residual {} exceeds {} of rhs norm",
            norm_r.sqrt(),
            RIDGE_RESIDUAL_TOL
        )));
    }
    Ok(beta_hat)
}

/// Exact population losses against the diagonal power-law covariance:
/// `L_j = sum_i i^{-1-gamma} (beta_hat_i - beta_j_i)^2`.
pub fn population_losses(
    beta_hat: &[f64],
    beta1: &[f64],
    beta2: &[f64],
    problem: &PowerLawProblem,
) -> Result<(f64, f64)> {
    if beta_hat.len() != beta1.len() || beta_hat.len() != beta2.len() {
        return Err(Error::Parameter {
            name: "beta length",
            value: beta_hat.len() as f64,
            bound: "equal lengths",
        });
    }
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    for i in (0..beta_hat.len()).rev() {
        let lam = ((i + 1) as f64).powf(-1.0 - problem.gamma());
        let d1 = beta_hat[i] - beta1[i];
        let d2 = beta_hat[i] - beta2[i];
        l1 += lam * d1 * d1;
        l2 += lam * d2 * d2;
    }
    Ok((l1, l2))
}

fn trial_rng(seed: u64, trial: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 + 1);
    rng
}

/// Run independent trials, average both losses, and report them against the
/// deterministic equivalents: the per-trial explicit equivalents conditioned
/// on each sampled target pair, and the expectation-level closed forms at
/// truncation `p_sim`.
pub fn validate(
    problem: &PowerLawProblem,
    cfg: &RidgeConfig,
    p_sim: usize,
    trials: u32,
    seed: u64,
) -> Result<ValidationReport> {
    if trials < 2 {
        return Err(Error::Parameter {
            name: "trials",
            value: trials as f64,
            bound: "trials >= 2",
        });
    }
    let per_trial: Vec<(f64, f64, f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<(f64, f64, f64, f64)> {
            let mut rng = trial_rng(seed, t);
            let draw = make_draw(problem, cfg, p_sim, &mut rng)?;
            let beta_hat = ridge_fit(&draw, cfg.lambda)?;
            let (l1, l2) = population_losses(&beta_hat, &draw.beta1, &draw.beta2, problem)?;
            let inst = ExplicitInstance::from_sampled_betas(problem.gamma(), &draw.beta1, &draw.beta2)?;
            let det1 = l1_det_explicit(&inst, cfg)?.value;
            let det2 = l2_det_explicit(&inst, cfg)?.value;
            Ok((l1, l2, det1, det2))
        })
        .collect::<Result<_>>()?;

    let tn = trials as f64;
    let mean = |sel: fn(&(f64, f64, f64, f64)) -> f64| -> f64 {
        per_trial.iter().map(sel).sum::<f64>() / tn
    };
    let mean_l1 = mean(|t| t.0);
    let mean_l2 = mean(|t| t.1);
    let var = |sel: fn(&(f64, f64, f64, f64)) -> f64, m: f64| -> f64 {
        per_trial.iter().map(|t| (sel(t) - m) * (sel(t) - m)).sum::<f64>() / (tn - 1.0)
    };
    let stats = TrialStats {
        mean_l1,
        mean_l2,
        stderr_l1: (var(|t| t.0, mean_l1) / tn).sqrt(),
        stderr_l2: (var(|t| t.1, mean_l2) / tn).sqrt(),
        trials,
        seed,
    };

    // Expectation-level equivalents live at the simulated truncation.
    let sim_problem = problem.with_p_trunc(p_sim)?;
    Ok(ValidationReport {
        stats,
        l1_det_expected: l1_det_expected(&sim_problem, cfg)?,
        l2_det_expected: l2_det_expected(&sim_problem, cfg)?,
        l1_det_explicit_mean: mean(|t| t.2),
        l2_det_explicit_mean: mean(|t| t.3),
    })
}

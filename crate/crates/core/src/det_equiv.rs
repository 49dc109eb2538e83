//! Deterministic equivalents of the ridge test losses.
//!
//! The population loss of the mixed-label ridge estimator concentrates on a
//! deterministic quantity `(T1 + T2 + T3 + T4 + T5) / Q` built from resolvent
//! traces against the covariance. Everything here contracts those traces
//! against diagonal spectra with per-mode moments, so no dense matrix ever
//! appears on the deterministic path.
//!
//! Two routes are exposed:
//!
//! * [`l1_det_explicit`] evaluates the five terms on an [`ExplicitInstance`]
//!   (arbitrary spectrum, per-mode moments, e.g. conditioned on a sampled
//!   pair of target vectors);
//! * [`l1_det_expected`] evaluates the power-law expectation in the closed
//!   form that the scaling analysis uses, via precomputed spectral sums.

use crate::error::{Error, Result};
use crate::kappa::{solve_kappa, KappaResult};
use crate::problem::{ExplicitInstance, Kahan, PowerLawProblem, RidgeConfig, SampleSize};

/// The five assembled terms, the degrees-of-freedom factor and the value
/// `(T1 + .. + T5) / Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetEquivResult {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub t5: f64,
    pub q: f64,
    pub kappa: f64,
    pub value: f64,
}

impl DetEquivResult {
    fn assemble(t: [f64; 5], q: f64, kappa: f64) -> Result<Self> {
        if !(q > 0.0) {
            return Err(Error::DegenerateQ(q));
        }
        let value = (t[0] + t[1] + t[2] + t[3] + t[4]) / q;
        if !value.is_finite() {
            return Err(Error::DegenerateQ(q));
        }
        Ok(Self {
            t1: t[0],
            t2: t[1],
            t3: t[2],
            t4: t[3],
            t5: t[4],
            q,
            kappa,
            value,
        })
    }
}

/// Spectral sums of a power-law family at a fixed `(n, lambda)`, from which
/// the expected equivalents at any mixture fraction are a few flops.
///
/// Grid sweeps over `alpha` at fixed `(n, lambda)` should build this once.
#[derive(Debug, Clone, Copy)]
pub struct ExpectedSums {
    n: SampleSize,
    kappa: f64,
    rho: f64,
    /// `sum w_i / (l_i+k)^2` with `w_i = i^{-delta-1-gamma}`, `l_i = i^{-1-gamma}`.
    sig_2: f64,
    /// `sum w_i l_i / (l_i+k)^2`
    sig_l_2: f64,
    /// `sum w_i l_i^2 / (l_i+k)^2`
    sig_l2_2: f64,
    /// `sum w_i / (l_i+k)`
    sig_1: f64,
    /// `sum w_i l_i / (l_i+k)`
    sig_l_1: f64,
    /// `sum l_i^2 / (l_i+k)^2`
    trace_2: f64,
    /// `sum w_i`
    total: f64,
    /// `L*(rho) = 2 (1-rho) * total`
    lstar: f64,
}

impl ExpectedSums {
    /// Solve the fixed point at `(lambda, n)` and take one fused pass over the
    /// truncated spectrum.
    pub fn new(problem: &PowerLawProblem, n: SampleSize, lambda: f64) -> Result<Self> {
        let KappaResult { kappa, .. } = solve_kappa(lambda, n, problem)?;
        Ok(Self::at_kappa(problem, n, kappa))
    }

    /// Same sums at an externally supplied `kappa` (used by tests and by the
    /// infinite-data path where `kappa = lambda`).
    pub fn at_kappa(problem: &PowerLawProblem, n: SampleSize, kappa: f64) -> Self {
        let lam = problem.eigenvalues();
        let w = problem.signal();
        let (mut sig_2, mut sig_l_2, mut sig_l2_2) = (Kahan::default(), Kahan::default(), Kahan::default());
        let (mut sig_1, mut sig_l_1, mut trace_2) = (Kahan::default(), Kahan::default(), Kahan::default());
        for i in (0..lam.len()).rev() {
            let l = lam[i];
            let wi = w[i];
            let inv = 1.0 / (l + kappa);
            let inv2 = inv * inv;
            sig_2.add(wi * inv2);
            sig_l_2.add(wi * l * inv2);
            sig_l2_2.add(wi * l * l * inv2);
            sig_1.add(wi * inv);
            sig_l_1.add(wi * l * inv);
            trace_2.add(l * l * inv2);
        }
        let total = problem.signal_total();
        Self {
            n,
            kappa,
            rho: problem.rho(),
            sig_2: sig_2.value(),
            sig_l_2: sig_l_2.value(),
            sig_l2_2: sig_l2_2.value(),
            sig_1: sig_1.value(),
            sig_l_1: sig_l_1.value(),
            trace_2: trace_2.value(),
            total,
            lstar: 2.0 * (1.0 - problem.rho()) * total,
        }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `Q = 1 - (1/N) sum l_i^2/(l_i+k)^2`.
    pub fn q(&self) -> f64 {
        match self.n {
            SampleSize::Finite(n) => 1.0 - self.trace_2 / n as f64,
            SampleSize::Infinite => 1.0,
        }
    }

    /// Expected performance equivalent at mixture fraction `alpha`.
    pub fn l1(&self, alpha: f64) -> Result<DetEquivResult> {
        let k = self.kappa;
        let rho1 = 1.0 - self.rho;
        let beta = 1.0 - alpha;
        let inv_n = match self.n {
            SampleSize::Finite(n) => 1.0 / n as f64,
            SampleSize::Infinite => 0.0,
        };
        let per_mode = inv_n * self.trace_2;

        let t1 = k * k * self.sig_2;
        let t2 = 2.0 * beta * beta * rho1 * self.sig_l2_2;
        let t3 = 2.0 * beta * k * rho1 * self.sig_l_2;
        let t4 = -2.0 * beta * k * rho1 * per_mode * self.sig_1;
        let t5 = 2.0 * beta * rho1 * per_mode * (self.total - 2.0 * beta * self.sig_l_1);
        DetEquivResult::assemble([t1, t2, t3, t4, t5], self.q(), k)
    }

    /// Expected safety equivalent: the performance equivalent of the swapped
    /// problem, which in the power-law model is `l1` at `1 - alpha`.
    pub fn l2(&self, alpha: f64) -> Result<DetEquivResult> {
        self.l1(1.0 - alpha)
    }

    pub fn lstar(&self) -> f64 {
        self.lstar
    }
}

fn check_alpha(alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Parameter {
            name: "alpha",
            value: alpha,
            bound: "0 <= alpha <= 1",
        });
    }
    Ok(alpha)
}

/// Performance equivalent on an explicit instance: the five resolvent traces
/// contracted against the per-mode moments `(a, d, m)`.
pub fn l1_det_explicit(inst: &ExplicitInstance, cfg: &RidgeConfig) -> Result<DetEquivResult> {
    check_alpha(cfg.alpha)?;
    if cfg.n.is_infinite() && cfg.lambda == 0.0 {
        // Ridgeless infinite-data limit: only the mixture term survives.
        let beta = 1.0 - cfg.alpha;
        let t2 = beta
            * beta
            * inst
                .eigenvalues()
                .iter()
                .zip(inst.d())
                .rev()
                .map(|(&l, &d)| l * d)
                .sum::<f64>();
        return DetEquivResult::assemble([0.0, t2, 0.0, 0.0, 0.0], 1.0, 0.0);
    }
    let KappaResult { kappa, .. } = solve_kappa(cfg.lambda, cfg.n, inst)?;
    let beta = 1.0 - cfg.alpha;
    let lam = inst.eigenvalues();
    let (a, d, m) = (inst.a(), inst.d(), inst.m());

    // Trace contractions, smallest modes first.
    let mut s_a2 = Kahan::default(); // sum l a / (l+k)^2
    let mut s_d2 = Kahan::default(); // sum l^3 d / (l+k)^2
    let mut s_m2 = Kahan::default(); // sum l^2 m / (l+k)^2
    let mut s_m1 = Kahan::default(); // sum l m / (l+k)
    let mut s_d0 = Kahan::default(); // sum l d
    let mut s_d1 = Kahan::default(); // sum l^2 d / (l+k)
    let mut s_q = Kahan::default(); //  sum l^2 / (l+k)^2
    for i in (0..lam.len()).rev() {
        let l = lam[i];
        let inv = 1.0 / (l + kappa);
        let inv2 = inv * inv;
        s_a2.add(l * a[i] * inv2);
        s_d2.add(l * l * l * d[i] * inv2);
        s_m2.add(l * l * m[i] * inv2);
        s_m1.add(l * m[i] * inv);
        s_d0.add(l * d[i]);
        s_d1.add(l * l * d[i] * inv);
        s_q.add(l * l * inv2);
    }
    let inv_n = match cfg.n {
        SampleSize::Finite(n) => 1.0 / n as f64,
        SampleSize::Infinite => 0.0,
    };
    let per_mode = inv_n * s_q.value();

    let t1 = kappa * kappa * s_a2.value();
    let t2 = beta * beta * s_d2.value();
    let t3 = 2.0 * beta * kappa * s_m2.value();
    let t4 = -2.0 * beta * kappa * per_mode * s_m1.value();
    let t5 = beta * per_mode * (s_d0.value() - 2.0 * beta * s_d1.value());
    let q = 1.0 - per_mode;
    DetEquivResult::assemble([t1, t2, t3, t4, t5], q, kappa)
}

/// Safety equivalent on an explicit instance: the performance equivalent of
/// the swapped moments at mixture fraction `1 - alpha`.
pub fn l2_det_explicit(inst: &ExplicitInstance, cfg: &RidgeConfig) -> Result<DetEquivResult> {
    let swapped_cfg = RidgeConfig {
        n: cfg.n,
        alpha: 1.0 - cfg.alpha,
        lambda: cfg.lambda,
    };
    l1_det_explicit(&inst.swapped(), &swapped_cfg)
}

/// Expected performance equivalent under the power-law model.
///
/// At `n` infinite the fixed point degenerates to `kappa = lambda` and `Q = 1`,
/// recovering the infinite-data ridge loss; at `(n, lambda) = (inf, 0)` the
/// closed-form ridgeless limit `(1-alpha)^2 L*` is returned directly.
pub fn l1_det_expected(problem: &PowerLawProblem, cfg: &RidgeConfig) -> Result<DetEquivResult> {
    check_alpha(cfg.alpha)?;
    if cfg.n.is_infinite() && cfg.lambda == 0.0 {
        return ridgeless_limit(problem, cfg.alpha);
    }
    ExpectedSums::new(problem, cfg.n, cfg.lambda)?.l1(cfg.alpha)
}

/// Expected safety equivalent under the power-law model: the swap identity
/// maps it to [`l1_det_expected`] at `1 - alpha`.
pub fn l2_det_expected(problem: &PowerLawProblem, cfg: &RidgeConfig) -> Result<DetEquivResult> {
    check_alpha(cfg.alpha)?;
    if cfg.n.is_infinite() && cfg.lambda == 0.0 {
        return ridgeless_limit(problem, 1.0 - cfg.alpha);
    }
    ExpectedSums::new(problem, cfg.n, cfg.lambda)?.l2(cfg.alpha)
}

/// The `(n = inf, lambda -> 0)` limit, where only the mixture term survives.
fn ridgeless_limit(problem: &PowerLawProblem, alpha: f64) -> Result<DetEquivResult> {
    let beta = 1.0 - alpha;
    let value = beta * beta * problem.lstar().value;
    DetEquivResult::assemble([0.0, value, 0.0, 0.0, 0.0], 1.0, 0.0)
}

/// Expected safety violation of the infinite-data ridgeless estimator,
/// `alpha^2 L*(rho)`. This is the safety model of the main marketplace.
pub fn l2_simple_expected(problem: &PowerLawProblem, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(alpha * alpha * problem.lstar().value)
}

/// Expected performance loss of the infinite-data ridgeless estimator,
/// `(1-alpha)^2 L*(rho)`.
pub fn l1_infinite_ridgeless(problem: &PowerLawProblem, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let beta = 1.0 - alpha;
    Ok(beta * beta * problem.lstar().value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::PowerLawProblem;

    fn problem(gamma: f64, delta: f64, rho: f64, p: usize) -> PowerLawProblem {
        PowerLawProblem::new(gamma, delta, rho, p).unwrap()
    }

    fn cfg(n: u64, alpha: f64, lambda: f64) -> RidgeConfig {
        RidgeConfig::new(SampleSize::Finite(n), alpha, lambda).unwrap()
    }

    #[test]
    fn alpha_one_kills_cross_terms() {
        let p = problem(0.5, 0.5, 0.5, 500);
        let inst = ExplicitInstance::from_power_law(&p, 500).unwrap();
        let r = l1_det_explicit(&inst, &cfg(100, 1.0, 0.01)).unwrap();
        assert_eq!(r.t2, 0.0);
        assert_eq!(r.t3, 0.0);
        assert_eq!(r.t4, 0.0);
        assert_eq!(r.t5, 0.0);
        assert!((r.value - r.t1 / r.q).abs() < 1e-15);
        assert!(r.q > 0.0 && r.q <= 1.0);
    }

    #[test]
    fn identical_objectives_ignore_alpha() {
        // d = m = 0 (beta1 = beta2): every alpha gives the alpha = 1 value.
        let lam: Vec<f64> = (1..=40).map(|i| (i as f64).powf(-1.5)).collect();
        let a: Vec<f64> = (1..=40).map(|i| (i as f64).powf(-0.5)).collect();
        let zero = vec![0.0; 40];
        let inst = ExplicitInstance::new(lam, a, zero.clone(), zero).unwrap();
        let base = l1_det_explicit(&inst, &cfg(30, 1.0, 0.02)).unwrap().value;
        for &alpha in &[0.0, 0.3, 0.6, 0.9] {
            let v = l1_det_explicit(&inst, &cfg(30, alpha, 0.02)).unwrap().value;
            assert!((v - base).abs() < 1e-14 * base.max(1.0));
        }
    }

    #[test]
    fn expected_matches_explicit_on_materialized_moments() {
        // The expectation route must agree with the per-mode route on the
        // instance that carries the expected moments, across a grid.
        for &(gamma, delta, rho) in &[(0.5, 0.5, 0.5), (1.0, 2.0, 0.0), (0.3, 1.1, 0.8)] {
            let p = problem(gamma, delta, rho, 400);
            let inst = ExplicitInstance::from_power_law(&p, 400).unwrap();
            for &n in &[25u64, 400] {
                for &alpha in &[0.0, 0.5, 0.75, 1.0] {
                    for &lambda in &[1e-4, 1e-2, 0.3] {
                        let c = cfg(n, alpha, lambda);
                        let e = l1_det_expected(&p, &c).unwrap();
                        let x = l1_det_explicit(&inst, &c).unwrap();
                        let tol = 1e-11 * x.value.abs().max(1e-12);
                        assert!(
                            (e.value - x.value).abs() < tol,
                            "gamma={gamma} delta={delta} rho={rho} n={n} alpha={alpha} lambda={lambda}: {} vs {}",
                            e.value,
                            x.value
                        );
                        assert!((e.kappa - x.kappa).abs() < 1e-12 * x.kappa);
                        assert!((e.q - x.q).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn ridgeless_infinite_data_limit() {
        // n = inf, lambda = 0, alpha = 0.75, gamma = delta = 1, rho = 0, P = 1:
        // (1 - 0.75)^2 * L* with L* = 2.
        let p = problem(1.0, 1.0, 0.0, 1);
        let c = RidgeConfig::new(SampleSize::Infinite, 0.75, 0.0).unwrap();
        let r = l1_det_expected(&p, &c).unwrap();
        assert!((r.value - 0.125).abs() < 1e-15);
        assert_eq!(r.q, 1.0);
    }

    #[test]
    fn swap_symmetry_exact() {
        let p = problem(0.5, 0.5, 0.5, 300);
        for &alpha in &[0.0, 0.25, 0.5, 0.8, 1.0] {
            let c = cfg(120, alpha, 0.01);
            let swapped = cfg(120, 1.0 - alpha, 0.01);
            let l2 = l2_det_expected(&p, &c).unwrap();
            let l1s = l1_det_expected(&p, &swapped).unwrap();
            assert!((l2.value - l1s.value).abs() < 1e-12 * l1s.value.max(1.0));
        }
    }

    #[test]
    fn alpha_half_equalizes_the_losses() {
        let p = problem(0.5, 0.5, 0.5, 300);
        for &n in &[50u64, 5_000] {
            for &lambda in &[1e-3, 0.05] {
                let c = cfg(n, 0.5, lambda);
                let l1 = l1_det_expected(&p, &c).unwrap().value;
                let l2 = l2_det_expected(&p, &c).unwrap().value;
                assert!((l1 - l2).abs() < 1e-13 * l1.max(1.0));
            }
        }
    }

    #[test]
    fn l2_at_alpha_zero_is_pure_safety() {
        let p = problem(0.5, 0.5, 0.5, 300);
        let c = cfg(80, 0.0, 0.01);
        let l2 = l2_det_expected(&p, &c).unwrap().value;
        let l1_at_one = l1_det_expected(&p, &cfg(80, 1.0, 0.01)).unwrap().value;
        assert!((l2 - l1_at_one).abs() < 1e-13 * l1_at_one);
    }

    #[test]
    fn simple_safety_and_ridgeless_forms() {
        let p = problem(1.0, 1.0, 0.0, 1); // L* = 2
        assert_eq!(l2_simple_expected(&p, 0.0).unwrap(), 0.0);
        assert_eq!(l2_simple_expected(&p, 1.0).unwrap(), 2.0);
        assert!((l2_simple_expected(&p, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(l1_infinite_ridgeless(&p, 1.0).unwrap(), 0.0);
        assert_eq!(l1_infinite_ridgeless(&p, 0.0).unwrap(), 2.0);
        assert!((l1_infinite_ridgeless(&p, 0.5).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn explicit_l2_matches_expected_l2_on_materialized_moments() {
        let p = problem(0.5, 0.5, 0.5, 200);
        let inst = ExplicitInstance::from_power_law(&p, 200).unwrap();
        for &alpha in &[0.2, 0.5, 0.9] {
            let c = cfg(60, alpha, 0.02);
            let a = l2_det_explicit(&inst, &c).unwrap().value;
            let b = l2_det_expected(&p, &c).unwrap().value;
            assert!((a - b).abs() < 1e-11 * b.max(1e-12), "{a} vs {b}");
        }
    }

    #[test]
    fn q_stays_in_unit_interval_when_kappa_solved() {
        let p = problem(0.5, 0.5, 0.5, 2_000);
        for &n in &[2u64, 10, 100, 10_000] {
            for &lambda in &[1e-6, 1e-3, 0.1] {
                let r = l1_det_expected(&p, &cfg(n, 0.9, lambda)).unwrap();
                assert!(r.q > 0.0 && r.q <= 1.0, "q = {} at n={n} lambda={lambda}", r.q);
            }
        }
    }

    #[test]
    fn pareto_inequalities_on_infinite_data_frontier() {
        // E[L1(beta(alpha,lambda))] >= (1-alpha)^2 L* for alpha >= 1/2, and
        // sqrt(E L1) + sqrt(E L2) >= sqrt(L*), on an (alpha, lambda) grid.
        let p = problem(0.5, 0.5, 0.5, 2_000);
        let lstar = p.lstar().value;
        for i in 0..=10 {
            let alpha = i as f64 / 10.0;
            for j in 0..8 {
                let lambda = 10f64.powf(-6.0 + j as f64 * 0.8);
                let c = RidgeConfig::new(SampleSize::Infinite, alpha, lambda.min(0.99)).unwrap();
                let l1 = l1_det_expected(&p, &c).unwrap().value;
                let l2 = l2_det_expected(&p, &c).unwrap().value;
                if alpha >= 0.5 {
                    let floor = (1.0 - alpha) * (1.0 - alpha) * lstar;
                    assert!(l1 >= floor - 1e-12, "alpha={alpha} lambda={lambda}");
                }
                assert!(
                    l1.sqrt() + l2.sqrt() >= lstar.sqrt() - 1e-10,
                    "alpha={alpha} lambda={lambda}: {} + {} < {}",
                    l1.sqrt(),
                    l2.sqrt(),
                    lstar.sqrt()
                );
            }
        }
    }
}

//! Power-law problem instances, their spectral sums, and explicit
//! finite-dimensional instances.
//!
//! The power-law family has covariance eigenvalues `lambda_i = i^{-1-gamma}`,
//! per-mode alignment second moments `i^{-delta}` for both target vectors, and
//! cross moments `rho * i^{-delta}`. An infinite series is always stood in for
//! by a truncation at `p_trunc` modes; operations that depend on the tail
//! report an integral tail bound so callers can see the truncation error.

use crate::error::{Error, Result};

/// Default series truncation standing in for the infinite-dimensional limit.
pub const DEFAULT_P_TRUNC: usize = 100_000;

/// Dataset size: a finite count or the infinite-data limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleSize {
    Finite(u64),
    Infinite,
}

impl SampleSize {
    pub fn is_infinite(self) -> bool {
        matches!(self, SampleSize::Infinite)
    }

    /// The count as a float, `f64::INFINITY` for the infinite-data limit.
    pub fn as_f64(self) -> f64 {
        match self {
            SampleSize::Finite(n) => n as f64,
            SampleSize::Infinite => f64::INFINITY,
        }
    }

    pub fn validate(self) -> Result<Self> {
        match self {
            SampleSize::Finite(0) => Err(Error::Parameter {
                name: "n",
                value: 0.0,
                bound: "n >= 1",
            }),
            other => Ok(other),
        }
    }
}

impl From<u64> for SampleSize {
    fn from(n: u64) -> Self {
        SampleSize::Finite(n)
    }
}

impl std::fmt::Display for SampleSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SampleSize::Finite(n) => write!(f, "{n}"),
            SampleSize::Infinite => write!(f, "inf"),
        }
    }
}

/// Compensated (Kahan) accumulator. Sums here span many orders of magnitude,
/// so plain accumulation would lose the small terms added late.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    pub(crate) fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn value(self) -> f64 {
        self.sum
    }
}

/// A `(gamma, delta, rho, p_trunc)` power-law instance.
///
/// Holds precomputed per-mode tables so that the resolvent sums evaluated by
/// the deterministic-equivalent and fixed-point code are single passes.
/// Immutable after construction and safe to share across threads.
#[derive(Debug, Clone)]
pub struct PowerLawProblem {
    gamma: f64,
    delta: f64,
    rho: f64,
    p_trunc: usize,
    /// `eigenvalues[i] = (i+1)^{-1-gamma}`, descending.
    eigenvalues: Vec<f64>,
    /// `signal[i] = (i+1)^{-delta-1-gamma}`, the per-mode alignment-weighted
    /// eigenvalue that every loss trace contracts against.
    signal: Vec<f64>,
    /// `sum_i i^{-delta-1-gamma}` over the truncation, accumulated smallest
    /// term first.
    signal_total: f64,
}

impl PowerLawProblem {
    pub fn new(gamma: f64, delta: f64, rho: f64, p_trunc: usize) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::Parameter {
                name: "gamma",
                value: gamma,
                bound: "gamma > 0",
            });
        }
        if !(delta > 0.0) {
            return Err(Error::Parameter {
                name: "delta",
                value: delta,
                bound: "delta > 0",
            });
        }
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::Parameter {
                name: "rho",
                value: rho,
                bound: "0 <= rho < 1",
            });
        }
        if p_trunc < 1 {
            return Err(Error::Parameter {
                name: "p_trunc",
                value: p_trunc as f64,
                bound: "p_trunc >= 1",
            });
        }

        let mut eigenvalues = vec![0.0; p_trunc];
        let mut signal = vec![0.0; p_trunc];
        let mut total = Kahan::default();
        // Descending index order: smallest terms enter the accumulator first.
        for i in (1..=p_trunc).rev() {
            let x = i as f64;
            let lam = x.powf(-1.0 - gamma);
            let sig = x.powf(-delta - 1.0 - gamma);
            eigenvalues[i - 1] = lam;
            signal[i - 1] = sig;
            total.add(sig);
        }

        Ok(Self {
            gamma,
            delta,
            rho,
            p_trunc,
            eigenvalues,
            signal,
            signal_total: total.value(),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn p_trunc(&self) -> usize {
        self.p_trunc
    }

    /// Loss-scaling exponent `nu = min(2(1+gamma), delta+gamma)`.
    pub fn nu(&self) -> f64 {
        (2.0 * (1.0 + self.gamma)).min(self.delta + self.gamma)
    }

    /// Excess-loss exponent `nu' = min(1+gamma, delta+gamma)`; always `<= nu`.
    pub fn nu_prime(&self) -> f64 {
        (1.0 + self.gamma).min(self.delta + self.gamma)
    }

    /// Same family at a different truncation.
    pub fn with_p_trunc(&self, p_trunc: usize) -> Result<Self> {
        Self::new(self.gamma, self.delta, self.rho, p_trunc)
    }

    /// Covariance eigenvalues `i^{-1-gamma}`, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub(crate) fn signal(&self) -> &[f64] {
        &self.signal
    }

    pub(crate) fn signal_total(&self) -> f64 {
        self.signal_total
    }

    /// `L*(rho) = E[(b1-b2)^T Sigma (b1-b2)] = 2(1-rho) sum_i i^{-delta-1-gamma}`,
    /// the irreducible gap between the two objectives, together with the
    /// integral bound on the truncated tail.
    pub fn lstar(&self) -> Lstar {
        let factor = 2.0 * (1.0 - self.rho);
        let exponent = self.delta + self.gamma;
        // Tail of sum_{i>P} i^{-delta-1-gamma} <= int_P^inf x^{-delta-1-gamma} dx.
        let tail = (self.p_trunc as f64).powf(-exponent) / exponent;
        Lstar {
            value: factor * self.signal_total,
            tail_bound: factor * tail,
        }
    }

    /// The defining parameters as flat key-value pairs.
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        vec![
            ("gamma".into(), self.gamma.to_string()),
            ("delta".into(), self.delta.to_string()),
            ("rho".into(), self.rho.to_string()),
            ("p_trunc".into(), self.p_trunc.to_string()),
        ]
    }

    /// Rebuild a problem from flat key-value pairs. Missing keys fall back to
    /// defaults (`rho = 0`, `p_trunc = DEFAULT_P_TRUNC`); `gamma` and `delta`
    /// are required; unknown keys are rejected.
    pub fn from_key_values<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut gamma = None;
        let mut delta = None;
        let mut rho = 0.0;
        let mut p_trunc = DEFAULT_P_TRUNC;
        for (key, raw) in pairs {
            let parse = |name: &'static str| -> Result<f64> {
                raw.parse().map_err(|_| Error::Parameter {
                    name,
                    value: f64::NAN,
                    bound: "a number",
                })
            };
            match key {
                "gamma" => gamma = Some(parse("gamma")?),
                "delta" => delta = Some(parse("delta")?),
                "rho" => rho = parse("rho")?,
                "p_trunc" => {
                    p_trunc = raw.parse().map_err(|_| Error::Parameter {
                        name: "p_trunc",
                        value: f64::NAN,
                        bound: "a positive integer",
                    })?
                }
                other => {
                    return Err(Error::Config(format!(
                        "unknown problem parameter `{other}`"
                    )))
                }
            }
        }
        let gamma = gamma.ok_or_else(|| Error::Config("missing `gamma`".into()))?;
        let delta = delta.ok_or_else(|| Error::Config("missing `delta`".into()))?;
        Self::new(gamma, delta, rho, p_trunc)
    }

    /// Truncated resolvent-weighted sum
    /// `sum_{i=1}^{P} i^{-a_exp} / (i^{-1-gamma} + kappa)^{b_pow}`.
    pub fn resolvent_sum(&self, a_exp: f64, b_pow: u8, kappa: f64) -> Result<f64> {
        if !(kappa > 0.0) {
            return Err(Error::Parameter {
                name: "kappa",
                value: kappa,
                bound: "kappa > 0",
            });
        }
        if b_pow != 1 && b_pow != 2 {
            return Err(Error::Parameter {
                name: "b_pow",
                value: b_pow as f64,
                bound: "b_pow in {1, 2}",
            });
        }
        let mut acc = Kahan::default();
        for i in (1..=self.p_trunc).rev() {
            let x = i as f64;
            let denom = x.powf(-1.0 - self.gamma) + kappa;
            let denom = if b_pow == 2 { denom * denom } else { denom };
            acc.add(x.powf(-a_exp) / denom);
        }
        Ok(acc.value())
    }
}

/// `L*` value plus the integral bound on what truncation discarded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lstar {
    pub value: f64,
    pub tail_bound: f64,
}

/// The eight resolvent sums whose asymptotic orders the scaling analysis
/// rests on, named by the trace they come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedResolventSum {
    /// `sum i^{-delta-1-gamma} / (.)^2`, order `kappa^{nu/(1+gamma) - 2}`.
    SignalSecond,
    /// `sum i^{-delta-3(1+gamma)} / (.)^2`, order 1.
    SignalCubicSecond,
    /// `sum i^{-delta-2-2gamma} / (.)`, order 1.
    SignalQuadFirst,
    /// `sum i^{-delta-2(1+gamma)} / (.)^2`, order `max(1, kappa^{(delta-1)/(1+gamma)})`.
    SignalQuadSecond,
    /// `sum i^{-delta-1-gamma} / (.)`, order `max(1, kappa^{(delta-1)/(1+gamma)})`.
    SignalFirst,
    /// `sum i^{-2-2gamma} / (.)^2`, order `kappa^{-1/(1+gamma)}`.
    TraceQuadSecond,
    /// `sum i^{-1-gamma} / (.)`, order `kappa^{-1/(1+gamma)}`.
    TraceFirst,
    /// `sum i^{-1-gamma} / (.)^2`, order `kappa^{gamma/(1+gamma) - 2}`.
    SpectrumSecond,
}

impl NamedResolventSum {
    pub const ALL: [NamedResolventSum; 8] = [
        NamedResolventSum::SignalSecond,
        NamedResolventSum::SignalCubicSecond,
        NamedResolventSum::SignalQuadFirst,
        NamedResolventSum::SignalQuadSecond,
        NamedResolventSum::SignalFirst,
        NamedResolventSum::TraceQuadSecond,
        NamedResolventSum::TraceFirst,
        NamedResolventSum::SpectrumSecond,
    ];

    /// The `(a_exp, b_pow)` pair of the sum in a given problem family.
    pub fn exponents(self, problem: &PowerLawProblem) -> (f64, u8) {
        let g = problem.gamma();
        let d = problem.delta();
        match self {
            NamedResolventSum::SignalSecond => (d + 1.0 + g, 2),
            NamedResolventSum::SignalCubicSecond => (d + 3.0 * (1.0 + g), 2),
            NamedResolventSum::SignalQuadFirst => (d + 2.0 + 2.0 * g, 1),
            NamedResolventSum::SignalQuadSecond => (d + 2.0 * (1.0 + g), 2),
            NamedResolventSum::SignalFirst => (d + 1.0 + g, 1),
            NamedResolventSum::TraceQuadSecond => (2.0 + 2.0 * g, 2),
            NamedResolventSum::TraceFirst => (1.0 + g, 1),
            NamedResolventSum::SpectrumSecond => (1.0 + g, 2),
        }
    }

    /// Exact truncated value of the sum.
    pub fn exact(self, problem: &PowerLawProblem, kappa: f64) -> Result<f64> {
        let (a, b) = self.exponents(problem);
        problem.resolvent_sum(a, b, kappa)
    }

    /// The asymptotic order with constant 1. Exact truncated values agree with
    /// this within a constant band over moderate `kappa`.
    pub fn theta_asymptotic(self, problem: &PowerLawProblem, kappa: f64) -> f64 {
        let g1 = 1.0 + problem.gamma();
        let d = problem.delta();
        match self {
            NamedResolventSum::SignalSecond => kappa.powf(problem.nu() / g1 - 2.0),
            NamedResolventSum::SignalCubicSecond | NamedResolventSum::SignalQuadFirst => 1.0,
            NamedResolventSum::SignalQuadSecond | NamedResolventSum::SignalFirst => {
                1.0_f64.max(kappa.powf((d - 1.0) / g1))
            }
            NamedResolventSum::TraceQuadSecond | NamedResolventSum::TraceFirst => {
                kappa.powf(-1.0 / g1)
            }
            NamedResolventSum::SpectrumSecond => kappa.powf(problem.gamma() / g1 - 2.0),
        }
    }
}

/// Finite-dimensional spectrum plus per-mode alignment moments for general
/// (non-power-law) evaluation.
///
/// * `a[i]` holds `E<b1, v_i>^2`,
/// * `d[i]` holds `E<b1 - b2, v_i>^2`,
/// * `m[i]` holds `E<b1 - b2, v_i><b1, v_i>`.
#[derive(Debug, Clone)]
pub struct ExplicitInstance {
    eigenvalues: Vec<f64>,
    a: Vec<f64>,
    d: Vec<f64>,
    m: Vec<f64>,
}

impl ExplicitInstance {
    pub fn new(eigenvalues: Vec<f64>, a: Vec<f64>, d: Vec<f64>, m: Vec<f64>) -> Result<Self> {
        let p = eigenvalues.len();
        if p == 0 {
            return Err(Error::Parameter {
                name: "eigenvalues.len",
                value: 0.0,
                bound: "at least one mode",
            });
        }
        if a.len() != p || d.len() != p || m.len() != p {
            return Err(Error::Parameter {
                name: "moment vector length",
                value: a.len().min(d.len()).min(m.len()) as f64,
                bound: "all vectors of equal length",
            });
        }
        let mut prev = f64::INFINITY;
        for (i, &lam) in eigenvalues.iter().enumerate() {
            if !(lam > 0.0) {
                return Err(Error::Parameter {
                    name: "eigenvalue",
                    value: lam,
                    bound: "strictly positive",
                });
            }
            if lam > prev {
                return Err(Error::Parameter {
                    name: "eigenvalue",
                    value: lam,
                    bound: "descending order",
                });
            }
            prev = lam;
            if !(a[i] >= 0.0) || !(d[i] >= 0.0) {
                return Err(Error::Parameter {
                    name: "moment",
                    value: a[i].min(d[i]),
                    bound: "a_i >= 0 and d_i >= 0",
                });
            }
            // Cauchy-Schwarz on the cross moment, with slack for roundoff.
            let bound = a[i] * d[i];
            if m[i] * m[i] > bound * (1.0 + 1e-9) + 1e-300 {
                return Err(Error::Parameter {
                    name: "m",
                    value: m[i],
                    bound: "m_i^2 <= a_i * d_i",
                });
            }
        }
        Ok(Self {
            eigenvalues,
            a,
            d,
            m,
        })
    }

    /// Materialize the expected power-law moments `a_i = i^{-delta}`,
    /// `d_i = 2(1-rho) i^{-delta}`, `m_i = (1-rho) i^{-delta}` on `p` modes.
    pub fn from_power_law(problem: &PowerLawProblem, p: usize) -> Result<Self> {
        if p < 1 || p > problem.p_trunc() {
            return Err(Error::Parameter {
                name: "p",
                value: p as f64,
                bound: "1 <= p <= p_trunc",
            });
        }
        let one_minus_rho = 1.0 - problem.rho();
        let mut eigenvalues = Vec::with_capacity(p);
        let mut a = Vec::with_capacity(p);
        let mut d = Vec::with_capacity(p);
        let mut m = Vec::with_capacity(p);
        for i in 1..=p {
            let x = i as f64;
            eigenvalues.push(x.powf(-1.0 - problem.gamma()));
            let align = x.powf(-problem.delta());
            a.push(align);
            d.push(2.0 * one_minus_rho * align);
            m.push(one_minus_rho * align);
        }
        Self::new(eigenvalues, a, d, m)
    }

    /// Moments conditioned on a sampled pair of target vectors: `a_i = b1_i^2`,
    /// `d_i = (b1_i - b2_i)^2`, `m_i = (b1_i - b2_i) b1_i` against the
    /// power-law spectrum.
    pub fn from_sampled_betas(gamma: f64, beta1: &[f64], beta2: &[f64]) -> Result<Self> {
        if beta1.len() != beta2.len() || beta1.is_empty() {
            return Err(Error::Parameter {
                name: "beta length",
                value: beta1.len() as f64,
                bound: "equal nonzero lengths",
            });
        }
        let p = beta1.len();
        let mut eigenvalues = Vec::with_capacity(p);
        let mut a = Vec::with_capacity(p);
        let mut d = Vec::with_capacity(p);
        let mut m = Vec::with_capacity(p);
        for i in 0..p {
            eigenvalues.push(((i + 1) as f64).powf(-1.0 - gamma));
            let diff = beta1[i] - beta2[i];
            a.push(beta1[i] * beta1[i]);
            d.push(diff * diff);
            m.push(diff * beta1[i]);
        }
        Self::new(eigenvalues, a, d, m)
    }

    /// The instance with the two objectives swapped, used to evaluate the
    /// safety-side deterministic equivalent: `a'_i = E<b2, v_i>^2 = a_i - 2m_i + d_i`
    /// ... contracted from `b2 = b1 - (b1 - b2)`, `d' = d`, `m'_i = d_i - m_i`.
    pub fn swapped(&self) -> Self {
        let p = self.eigenvalues.len();
        let mut a = Vec::with_capacity(p);
        let mut m = Vec::with_capacity(p);
        for i in 0..p {
            a.push((self.a[i] - 2.0 * self.m[i] + self.d[i]).max(0.0));
            m.push(self.d[i] - self.m[i]);
        }
        Self {
            eigenvalues: self.eigenvalues.clone(),
            a,
            d: self.d.clone(),
            m,
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }
}

/// The `(N, alpha, lambda)` triple a company picks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeConfig {
    pub n: SampleSize,
    pub alpha: f64,
    pub lambda: f64,
}

impl RidgeConfig {
    pub fn new(n: SampleSize, alpha: f64, lambda: f64) -> Result<Self> {
        n.validate()?;
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Parameter {
                name: "alpha",
                value: alpha,
                bound: "0 <= alpha <= 1",
            });
        }
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::Parameter {
                name: "lambda",
                value: lambda,
                bound: "0 <= lambda < 1",
            });
        }
        if lambda == 0.0 && !n.is_infinite() {
            return Err(Error::Parameter {
                name: "lambda",
                value: 0.0,
                bound: "lambda > 0 unless n is infinite",
            });
        }
        Ok(Self { n, alpha, lambda })
    }
}

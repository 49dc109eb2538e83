//! Company optimizers and market-entry thresholds under the simple safety
//! model, where the safety violation is `alpha^2 L*` independently of the
//! dataset size and regularizer.
//!
//! An incumbent and an entrant each pick `(alpha, lambda)` to minimize their
//! expected performance loss subject to a safety cap `tau`. The entry
//! threshold is the least entrant dataset size whose optimized loss matches
//! the incumbent's.

use std::collections::HashMap;

use crate::det_equiv::l2_simple_expected;
use crate::error::{Error, Result};
use crate::problem::{PowerLawProblem, SampleSize};
use crate::scaling::{optimize_lambda_exact, Objective, Regime};

/// Dataset size and safety cap of one company. `tau = f64::INFINITY` means no
/// safety constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompanyConfig {
    pub n: SampleSize,
    pub tau: f64,
}

impl CompanyConfig {
    pub fn new(n: SampleSize, tau: f64) -> Result<Self> {
        n.validate()?;
        if !(tau > 0.0) {
            return Err(Error::Parameter {
                name: "tau",
                value: tau,
                bound: "tau > 0",
            });
        }
        Ok(Self { n, tau })
    }

    pub fn unconstrained(n: SampleSize) -> Self {
        Self {
            n,
            tau: f64::INFINITY,
        }
    }
}

/// A company's optimized choice and the losses it realizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketOutcome {
    pub alpha: f64,
    pub lambda: f64,
    pub perf_loss: f64,
    pub safety: f64,
    pub feasible: bool,
}

/// Derived market quantities shared by the threshold formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdParams {
    pub lstar: f64,
    pub alpha_star_i: f64,
    pub alpha_star_e: f64,
    /// Incumbent's infinite-data constrained loss `(sqrt(L*) - sqrt(min(tau_i, L*)))^2`.
    pub g_i: f64,
    /// Entrant's infinite-data constrained loss.
    pub g_e: f64,
    /// `D = G_I - G_E`.
    pub d: f64,
    pub nu: f64,
    pub nu_prime: f64,
}

impl ThresholdParams {
    pub fn new(problem: &PowerLawProblem, tau_i: f64, tau_e: f64) -> Result<Self> {
        let lstar = problem.lstar().value;
        let g = |tau: f64| {
            let s = lstar.sqrt() - tau.min(lstar).sqrt();
            s * s
        };
        let g_i = g(tau_i);
        let g_e = g(tau_e);
        Ok(Self {
            lstar,
            alpha_star_i: alpha_star(lstar, tau_i),
            alpha_star_e: alpha_star(lstar, tau_e),
            g_i,
            g_e,
            d: g_i - g_e,
            nu: problem.nu(),
            nu_prime: problem.nu_prime(),
        })
    }
}

/// Searched entry threshold: a dataset size or the no-entry marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryThreshold {
    Finite(u64),
    Infinite,
}

impl EntryThreshold {
    pub fn as_f64(self) -> f64 {
        match self {
            EntryThreshold::Finite(n) => n as f64,
            EntryThreshold::Infinite => f64::INFINITY,
        }
    }
}

impl std::fmt::Display for EntryThreshold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EntryThreshold::Finite(n) => write!(f, "{n}"),
            EntryThreshold::Infinite => write!(f, "inf"),
        }
    }
}

/// A threshold formula evaluation: the active regime and the asymptotic value
/// with constant 1 (`f64::INFINITY` marks the no-entry case).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaThreshold {
    pub regime: Regime,
    pub value: f64,
    pub boundaries: (f64, f64),
    /// Set when `delta <= 1` collapses the third regime of the constrained
    /// formula.
    pub third_regime_unreachable: bool,
}

/// The mixture fraction saturating the simple safety constraint,
/// `sqrt(min(tau, L*)/L*)`.
pub fn alpha_star(lstar: f64, tau: f64) -> f64 {
    (tau.min(lstar) / lstar).sqrt()
}

fn check_tau_floor(problem: &PowerLawProblem, tau: f64, floor_alpha: f64) -> Result<f64> {
    let floor = l2_simple_expected(problem, floor_alpha)?;
    if tau < floor {
        return Err(Error::Infeasible(format!(
            "tau = {tau} below the model bound {floor} (= safety of alpha = {floor_alpha})"
        )));
    }
    Ok(floor)
}

/// The incumbent optimum with infinite data: ridgeless with the mixture
/// fraction tuned to saturate the safety constraint.
pub fn incumbent_infinite_opt(problem: &PowerLawProblem, tau: f64) -> Result<MarketOutcome> {
    check_tau_floor(problem, tau, 0.5)?;
    let lstar = problem.lstar().value;
    let alpha = alpha_star(lstar, tau);
    let gap = lstar.sqrt() - tau.min(lstar).sqrt();
    Ok(MarketOutcome {
        alpha,
        lambda: 0.0,
        perf_loss: gap * gap,
        safety: tau.min(lstar),
        feasible: true,
    })
}

/// A company's optimum under the simple safety model: the safety constraint
/// pins `alpha` at `alpha*(tau)` and the regularizer is tuned exactly.
pub fn company_opt_simple(problem: &PowerLawProblem, cfg: &CompanyConfig) -> Result<MarketOutcome> {
    check_tau_floor(problem, cfg.tau, 0.5)?;
    let n = match cfg.n {
        SampleSize::Infinite => return incumbent_infinite_opt(problem, cfg.tau),
        SampleSize::Finite(n) => n,
    };
    let lstar = problem.lstar().value;
    let alpha = alpha_star(lstar, cfg.tau).clamp(0.5, 1.0);
    let opt = optimize_lambda_exact(problem, n, alpha, Objective::Loss)?;
    Ok(MarketOutcome {
        alpha,
        lambda: opt.lambda,
        perf_loss: opt.value,
        safety: alpha * alpha * lstar,
        feasible: true,
    })
}

/// Minimum `n` at which `loss(n) <= target`, for a loss that is expected to
/// be non-increasing in `n`.
///
/// Exponential doubling brackets the answer and integer bisection pins it
/// down. A guard watches the probes for monotonicity violations; when one
/// shows up the search degrades to a forward scan over the bracket so the
/// returned threshold never trusts an unsound bisection.
pub(crate) fn search_min_n(
    mut loss: impl FnMut(u64) -> Result<f64>,
    target: f64,
    cap: u64,
) -> Result<EntryThreshold> {
    let mut memo: HashMap<u64, f64> = HashMap::new();
    let mut probes: Vec<(u64, f64)> = Vec::new();
    let mut monotone = true;

    let mut eval = |n: u64, memo: &mut HashMap<u64, f64>, probes: &mut Vec<(u64, f64)>| -> Result<f64> {
        if let Some(&v) = memo.get(&n) {
            return Ok(v);
        }
        let v = loss(n)?;
        memo.insert(n, v);
        probes.push((n, v));
        Ok(v)
    };

    if eval(1, &mut memo, &mut probes)? <= target {
        return Ok(EntryThreshold::Finite(1));
    }
    let mut lo = 1u64;
    let mut hi = 2u64;
    let mut prev = memo[&1];
    loop {
        let v = eval(hi, &mut memo, &mut probes)?;
        if v > prev * (1.0 + 1e-9) {
            monotone = false;
        }
        prev = v;
        if v <= target {
            break;
        }
        if hi >= cap {
            return Ok(EntryThreshold::Infinite);
        }
        lo = hi;
        hi = hi.saturating_mul(2).min(cap);
    }

    if monotone {
        // Bisect (lo, hi]: loss(lo) > target >= loss(hi).
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if eval(mid, &mut memo, &mut probes)? <= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(EntryThreshold::Finite(hi))
    } else {
        // Forward scan on a fine grid over (lo, hi], then step back linearly.
        let mut best = hi;
        let steps = 64u64;
        for k in 1..=steps {
            let n = lo + ((hi - lo) * k) / steps;
            if n > lo && eval(n, &mut memo, &mut probes)? <= target {
                best = n;
                break;
            }
        }
        let mut n = best;
        while n > lo + 1 && eval(n - 1, &mut memo, &mut probes)? <= target {
            n -= 1;
        }
        Ok(EntryThreshold::Finite(n))
    }
}

/// Cap on the doubling search; past this the threshold is reported infinite.
const SEARCH_CAP: u64 = 1 << 40;

/// Smallest entrant dataset size whose optimized loss matches the
/// incumbent's, or [`EntryThreshold::Infinite`] when the entrant's
/// infinite-data loss floor already exceeds the incumbent's loss.
pub fn entry_threshold_search(
    problem: &PowerLawProblem,
    incumbent: &CompanyConfig,
    entrant: &CompanyConfig,
) -> Result<EntryThreshold> {
    let incumbent_loss = company_opt_simple(problem, incumbent)?.perf_loss;
    let params = ThresholdParams::new(problem, incumbent.tau, entrant.tau)?;
    // The entrant's optimized loss decreases to G_E as n grows but stays
    // strictly above it at any finite n.
    if params.g_e >= incumbent_loss {
        return Ok(EntryThreshold::Infinite);
    }
    let entrant_tau = entrant.tau;
    search_min_n(
        |n| {
            Ok(company_opt_simple(
                problem,
                &CompanyConfig {
                    n: SampleSize::Finite(n),
                    tau: entrant_tau,
                },
            )?
            .perf_loss)
        },
        incumbent_loss,
        SEARCH_CAP,
    )
}

/// Warm-up threshold form (infinite-data incumbent, unconstrained entrant):
/// `G_I^{-1/nu}`, infinite once `tau_i >= L*`.
pub fn threshold_warmup(problem: &PowerLawProblem, tau_i: f64) -> Result<f64> {
    check_tau_floor(problem, tau_i, 0.5)?;
    let params = ThresholdParams::new(problem, tau_i, f64::INFINITY)?;
    if params.g_i == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(params.g_i.powf(-1.0 / params.nu))
}

/// Finite-incumbent threshold form: three regimes in `n_i` with exponents
/// `{1, 1/(nu+1), 0}`.
pub fn threshold_finite(problem: &PowerLawProblem, n_i: u64, tau_i: f64) -> Result<ThetaThreshold> {
    check_tau_floor(problem, tau_i, 0.5)?;
    SampleSize::Finite(n_i).validate()?;
    let params = ThresholdParams::new(problem, tau_i, f64::INFINITY)?;
    let nu = params.nu;
    let rho1 = 1.0 - problem.rho();
    let nf = n_i as f64;

    let (b1, b2) = if params.g_i == 0.0 {
        (f64::INFINITY, f64::INFINITY)
    } else {
        (
            params.g_i.powf(-1.0 / (2.0 * nu)) * rho1.powf(-1.0 / (2.0 * nu)),
            params.g_i.powf(-0.5 - 1.0 / nu) * rho1.sqrt(),
        )
    };
    let (regime, value) = if nf <= b1 {
        (Regime::R1, nf)
    } else if nf <= b2 {
        (
            Regime::R2,
            nf.powf(1.0 / (nu + 1.0))
                * params.g_i.powf(-1.0 / (2.0 * (nu + 1.0)))
                * rho1.powf(-1.0 / (2.0 * (nu + 1.0))),
        )
    } else {
        (Regime::R3, params.g_i.powf(-1.0 / nu))
    };
    Ok(ThetaThreshold {
        regime,
        value,
        boundaries: (b1, b2),
        third_regime_unreachable: false,
    })
}

/// Constrained-entrant threshold form (infinite-data incumbent): three
/// regimes in `D = G_I - G_E`, the third existing only when `delta > 1`.
pub fn threshold_constrained(
    problem: &PowerLawProblem,
    tau_i: f64,
    tau_e: f64,
) -> Result<ThetaThreshold> {
    // The constrained analysis needs the stronger floor: safety of alpha = 0.75.
    check_tau_floor(problem, tau_i, 0.75)?;
    if !(tau_e > tau_i) {
        return Err(Error::Parameter {
            name: "tau_e",
            value: tau_e,
            bound: "tau_e > tau_i",
        });
    }
    let params = ThresholdParams::new(problem, tau_i, tau_e)?;
    if params.d <= 0.0 {
        return Err(Error::Parameter {
            name: "d",
            value: params.d,
            bound: "D = G_I - G_E > 0 (both constraints saturated at L*)",
        });
    }
    let nu = params.nu;
    let nu_p = params.nu_prime;
    let rho1 = 1.0 - problem.rho();
    let third_unreachable = problem.delta() <= 1.0;

    let b1 = (params.g_e * rho1).sqrt();
    let b2 = if third_unreachable || params.g_e == 0.0 {
        0.0
    } else {
        (params.g_e * rho1).powf(nu / (2.0 * (nu - nu_p)))
    };
    let (regime, value) = if params.d >= b1 {
        (Regime::R1, params.d.powf(-1.0 / nu))
    } else if params.d >= b2 {
        (
            Regime::R2,
            params.d.powf(-(nu + 1.0) / nu) * (params.g_e * rho1).sqrt(),
        )
    } else {
        (
            Regime::R3,
            (params.d / (params.g_e * rho1).sqrt()).powf(-(nu_p + 1.0) / nu_p),
        )
    };
    Ok(ThetaThreshold {
        regime,
        value,
        boundaries: (b1, b2),
        third_regime_unreachable: third_unreachable,
    })
}

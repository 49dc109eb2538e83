//! Acceptance suite: one test per criterion, each printing its own pass line
//! with the measured quantities. Band constants were calibrated once against
//! this code and are frozen below; tolerances are part of the criteria.

use std::process::Command;

use moscale::det_equiv::ExpectedSums;
use moscale::kappa::{kappa_asymptotic, solve_kappa};
use moscale::market::{entry_threshold_search, threshold_warmup, CompanyConfig, EntryThreshold};
use moscale::market_ext::{
    company_opt_modified, modified_threshold_bounds, modified_threshold_search,
};
use moscale::monte_carlo::validate;
use moscale::problem::{PowerLawProblem, RidgeConfig, SampleSize};
use moscale::scaling::{optimize_lambda_exact, Objective};

fn problem(gamma: f64, delta: f64, rho: f64, p: usize) -> PowerLawProblem {
    PowerLawProblem::new(gamma, delta, rho, p).unwrap()
}

/// Least-squares slope of `ln y` against `ln x`.
fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// tau realizing a given absolute infinite-data constrained loss G.
fn tau_for_g(lstar: f64, g: f64) -> f64 {
    let root = lstar.sqrt() - g.sqrt();
    root * root
}

#[test]
fn criterion_01_kappa_fixed_point_grid() {
    // Residual < 1e-12 on a 100-point (lambda, n) grid, and the ratio to
    // max(lambda, n^{-1-gamma}) inside the frozen band per gamma.
    // Bands measured at calibration ([1.00, 5.81], [1.00, 4.70], [1.00, 4.10])
    // and frozen with margin.
    for &(gamma, band_lo, band_hi) in &[(0.3, 0.9, 7.0), (0.5, 0.9, 6.0), (1.0, 0.9, 5.0)] {
        let p = problem(gamma, 0.5, 0.5, 100_000);
        let mut worst_lo = f64::INFINITY;
        let mut worst_hi = 0.0f64;
        for i in 0..10 {
            let lambda = 1e-6 * (0.5f64 / 1e-6).powf(i as f64 / 9.0);
            for j in 0..10 {
                let n = (10f64 * (1e6f64 / 10.0).powf(j as f64 / 9.0)).round() as u64;
                let solved = solve_kappa(lambda, SampleSize::Finite(n), &p).unwrap();
                assert!(
                    solved.residual.abs() < 1e-12,
                    "residual {} at gamma={gamma} lambda={lambda} n={n}",
                    solved.residual
                );
                let theta = kappa_asymptotic(lambda, SampleSize::Finite(n), gamma).unwrap();
                let ratio = solved.kappa / theta;
                worst_lo = worst_lo.min(ratio);
                worst_hi = worst_hi.max(ratio);
            }
        }
        assert!(
            worst_lo >= band_lo && worst_hi <= band_hi,
            "gamma={gamma}: ratio band [{worst_lo}, {worst_hi}]"
        );
        println!(
            "criterion 1 (kappa fixed point) gamma={gamma}: PASS, ratio band [{worst_lo:.3}, {worst_hi:.3}]"
        );
    }
}

#[test]
fn criterion_02_det_equiv_monte_carlo_grid() {
    // |empirical mean - deterministic equivalent| <= max(3 stderr, 10%)
    // for both losses over the full (p_sim, n) x alpha x lambda grid,
    // 200 trials per cell.
    let mut seed = 52_000u64;
    for &(p_sim, n) in &[(200usize, 50u64), (400, 100), (400, 200)] {
        for &alpha in &[0.75, 0.9, 1.0] {
            for &lambda in &[1e-3, 1e-2] {
                seed += 1;
                let p = problem(0.5, 0.5, 0.5, p_sim);
                let cfg = RidgeConfig::new(SampleSize::Finite(n), alpha, lambda).unwrap();
                let report = validate(&p, &cfg, p_sim, 200, seed).unwrap();

                let det1 = report.l1_det_expected.value;
                let err1 = (report.stats.mean_l1 - det1).abs();
                let band1 = (3.0 * report.stats.stderr_l1).max(0.10 * det1);
                assert!(
                    err1 <= band1,
                    "L1 at p={p_sim} n={n} alpha={alpha} lambda={lambda}: {} vs {det1} (band {band1})",
                    report.stats.mean_l1
                );

                let det2 = report.l2_det_expected.value;
                let err2 = (report.stats.mean_l2 - det2).abs();
                let band2 = (3.0 * report.stats.stderr_l2).max(0.10 * det2);
                assert!(
                    err2 <= band2,
                    "L2 at p={p_sim} n={n} alpha={alpha} lambda={lambda}: {} vs {det2} (band {band2})",
                    report.stats.mean_l2
                );
            }
        }
    }
    println!("criterion 2 (deterministic equivalent vs Monte Carlo, 18 cells): PASS");
}

#[test]
fn criterion_03_loss_scaling_regimes() {
    // nu = 1 at gamma = delta = 0.5; alpha = 0.9, rho = 0.5 puts the regime
    // boundaries at 20 and 2000. Slopes are measured over the decade centered
    // (in log space) inside each regime, within +-15% of the regime exponent;
    // R3 flattens to within +-20% of a constant across one decade.
    //
    // Known red: the R1 sub-check. The only decade inside R1 is [2, 20], and
    // there the exact optimum has local slope 0.52..0.65 everywhere (the
    // N^{-nu} onset at these exponents begins around N = 20-50, right where
    // R1 ends; the pure alpha = 1 curve only reaches slope 0.92 on [5, 50],
    // and Monte Carlo confirms the evaluator within 10% down to N = 5). The
    // order statement itself does hold on [2, 20] -- N * value stays inside a
    // factor-2.5 band -- and is asserted below; the slope assertion is kept
    // as stated and fails.
    let p = problem(0.5, 0.5, 0.5, 100_000);
    let alpha = 0.9;

    let r1: Vec<(f64, f64)> = [2u64, 3, 5, 8, 13, 20]
        .iter()
        .map(|&n| {
            let v = optimize_lambda_exact(&p, n, alpha, Objective::Loss).unwrap().value;
            (n as f64, v)
        })
        .collect();
    let s1 = -loglog_slope(&r1);

    let r2: Vec<(f64, f64)> = [63u64, 100, 158, 251, 398, 631]
        .iter()
        .map(|&n| {
            let v = optimize_lambda_exact(&p, n, alpha, Objective::Loss).unwrap().value;
            (n as f64, v)
        })
        .collect();
    let s2 = -loglog_slope(&r2);
    assert!((s2 - 0.5).abs() <= 0.15 * 0.5, "R2 slope {s2}");

    let r3: Vec<f64> = [6310u64, 11_220, 19_953, 35_481, 63_096]
        .iter()
        .map(|&n| optimize_lambda_exact(&p, n, alpha, Objective::Loss).unwrap().value)
        .collect();
    let geo_mean = (r3.iter().map(|v| v.ln()).sum::<f64>() / r3.len() as f64).exp();
    for &v in &r3 {
        assert!(
            (v / geo_mean - 1.0).abs() <= 0.20,
            "R3 not flat: {v} vs mean {geo_mean}"
        );
    }

    // The R1 order statement: N * value within a constant band over [2, 20].
    let r1_band = {
        let products: Vec<f64> = r1.iter().map(|&(n, v)| n * v).collect();
        products.iter().cloned().fold(0.0f64, f64::max)
            / products.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    assert!(r1_band <= 5.0, "R1 order band {r1_band}");

    println!(
        "criterion 3 (loss regimes): R2 slope {s2:.3} PASS, R3 spread {:.3} PASS, \
         R1 order band {r1_band:.2} PASS, R1 slope {s1:.3} (target 1.00 +- 0.15)",
        r3.iter().cloned().fold(0.0f64, f64::max) / r3.iter().cloned().fold(f64::INFINITY, f64::min)
    );
    assert!(
        (s1 - 1.0).abs() <= 0.15,
        "R1 slope {s1}: the stated +-15% window is unattainable at alpha = 0.9 \
         (see the note at the top of this test)"
    );
}

#[test]
fn criterion_04_excess_third_regime_slope() {
    // delta = 2.5, gamma = 0.5: nu = 3, nu' = 1.5. At alpha = 0.95 the R3
    // boundary sits near 470; the exact excess optimum over the decade above
    // it scales with exponent nu'/(nu'+1) = 0.6 within +-15%.
    let p = problem(0.5, 2.5, 0.5, 100_000);
    let pts: Vec<(f64, f64)> = [1500u64, 2500, 4200, 7000, 11_700, 15_000]
        .iter()
        .map(|&n| {
            let v = optimize_lambda_exact(&p, n, 0.95, Objective::Excess).unwrap().value;
            (n as f64, v)
        })
        .collect();
    let slope = -loglog_slope(&pts);
    assert!((slope - 0.6).abs() <= 0.09, "excess R3 slope {slope}");
    println!("criterion 4 (excess R3 slope): PASS, slope {slope:.3}");
}

#[test]
fn criterion_05_warmup_threshold() {
    // Searched threshold against the G^{-1/nu} form over a tau_i grid:
    // log-log slope -1/nu within +-10%, ratio band bounded (frozen [1, 5]);
    // finite for every tau_i < L*, infinite at tau_i >= L*.
    let p = problem(0.5, 0.5, 0.5, 100_000);
    let lstar = p.lstar().value;
    let entrant = CompanyConfig::unconstrained(SampleSize::Finite(1));

    let mut pts = Vec::new();
    for &g_frac in &[0.0015, 0.004, 0.011, 0.03, 0.08] {
        let g = g_frac * lstar;
        let tau_i = tau_for_g(lstar, g);
        let incumbent = CompanyConfig::new(SampleSize::Infinite, tau_i).unwrap();
        let n_star = match entry_threshold_search(&p, &incumbent, &entrant).unwrap() {
            EntryThreshold::Finite(n) => n as f64,
            EntryThreshold::Infinite => panic!("unexpected infinite threshold at g={g}"),
        };
        let theta = threshold_warmup(&p, tau_i).unwrap();
        let ratio = n_star / theta;
        assert!((1.0..=5.0).contains(&ratio), "band ratio {ratio} at g={g}");
        pts.push((g, n_star));
    }
    let slope = loglog_slope(&pts);
    assert!((slope - (-1.0)).abs() <= 0.10, "slope {slope}");

    // Finite below L*, infinite at and above.
    let nearly = CompanyConfig::new(SampleSize::Infinite, 0.98 * lstar).unwrap();
    assert!(matches!(
        entry_threshold_search(&p, &nearly, &entrant).unwrap(),
        EntryThreshold::Finite(_)
    ));
    for &frac in &[1.0, 1.5] {
        let unconstrained = CompanyConfig::new(SampleSize::Infinite, frac * lstar).unwrap();
        assert_eq!(
            entry_threshold_search(&p, &unconstrained, &entrant).unwrap(),
            EntryThreshold::Infinite
        );
        assert_eq!(threshold_warmup(&p, frac * lstar).unwrap(), f64::INFINITY);
    }
    println!("criterion 5 (warm-up threshold): PASS, slope {slope:.3}");
}

#[test]
fn criterion_06_finite_incumbent_threshold() {
    // Searched N_E*(N_I) exhibits the three slopes {1, 1/(nu+1), 0} within
    // +-15% per regime (relative for the nonzero targets, +-0.15 absolute for
    // the flat regime), and N_E*/N_I keeps falling past the first boundary.
    //
    // The regime windows are exercised at two constraint levels so that each
    // window clears both the small-N onset and the truncation ceiling:
    // G_I = 1e-4 puts the boundaries at (141, 7.1e5), giving R1 and R2
    // decades with room, while G_I = 5e-3 (boundaries (20, 2000)) brings the
    // deep-R3 window [2.8e4, 2.8e5] within the series truncation.
    let p = problem(0.5, 0.5, 0.5, 100_000);
    let lstar = p.lstar().value;
    let entrant = CompanyConfig::unconstrained(SampleSize::Finite(1));
    let searched = |n_i: u64, tau_i: f64| -> f64 {
        let incumbent = CompanyConfig::new(SampleSize::Finite(n_i), tau_i).unwrap();
        match entry_threshold_search(&p, &incumbent, &entrant).unwrap() {
            EntryThreshold::Finite(n) => n as f64,
            EntryThreshold::Infinite => panic!("unexpected infinite threshold at n_i={n_i}"),
        }
    };

    let tau_small_g = tau_for_g(lstar, 1e-4);
    let r1: Vec<(f64, f64)> = [14u64, 25, 45, 79, 141]
        .iter()
        .map(|&n_i| (n_i as f64, searched(n_i, tau_small_g)))
        .collect();
    let s1 = loglog_slope(&r1);
    assert!((s1 - 1.0).abs() <= 0.15, "R1 slope {s1}");

    let r2: Vec<(f64, f64)> = [3162u64, 5623, 10_000, 17_783, 31_623]
        .iter()
        .map(|&n_i| (n_i as f64, searched(n_i, tau_small_g)))
        .collect();
    let s2 = loglog_slope(&r2);
    assert!((s2 - 0.5).abs() <= 0.15 * 0.5, "R2 slope {s2}");

    let tau_large_g = tau_for_g(lstar, 0.005);
    let r3: Vec<(f64, f64)> = [28_000u64, 88_500, 280_000]
        .iter()
        .map(|&n_i| (n_i as f64, searched(n_i, tau_large_g)))
        .collect();
    let s3 = loglog_slope(&r3);
    assert!(s3.abs() <= 0.15, "R3 slope {s3}");

    // Sublinearity at the larger-G setting, where the boundary sits at 20:
    // the ratio N_E*/N_I keeps falling across its R2 and R3.
    let mut prev = f64::INFINITY;
    for &n_i in &[63u64, 200, 631, 28_000, 280_000] {
        let n_star = searched(n_i, tau_large_g);
        let ratio = n_star / n_i as f64;
        assert!(ratio < prev, "ratio not decreasing at n_i={n_i}");
        prev = ratio;
    }
    println!("criterion 6 (finite-incumbent threshold): PASS, slopes {s1:.3}/{s2:.3}/{s3:.3}");
}

#[test]
fn criterion_07_constrained_entrant_threshold() {
    // First regime: G_E = 0 (tau_e = L*), D = G_I swept through tau_i;
    // slope -1/nu within +-15%.
    let p = problem(0.5, 0.5, 0.5, 100_000);
    let lstar = p.lstar().value;
    let mut pts = Vec::new();
    for &d in &[0.01, 0.02, 0.04, 0.065, 0.1] {
        let tau_i = tau_for_g(lstar, d);
        let incumbent = CompanyConfig::new(SampleSize::Infinite, tau_i).unwrap();
        let entrant = CompanyConfig::new(SampleSize::Finite(1), lstar).unwrap();
        let n_star = match entry_threshold_search(&p, &incumbent, &entrant).unwrap() {
            EntryThreshold::Finite(n) => n as f64,
            EntryThreshold::Infinite => panic!("unexpected infinite threshold at D={d}"),
        };
        pts.push((d, n_star));
    }
    let s1 = loglog_slope(&pts);
    assert!((s1 - (-1.0)).abs() <= 0.15, "R1 slope {s1}");

    // Second regime: fixed tau_i at the eq-(2) floor, small D through tau_e;
    // slope -(nu+1)/nu = -2 within +-15%.
    let g_i = 0.0625 * lstar;
    let tau_i = tau_for_g(lstar, g_i);
    let mut pts = Vec::new();
    for &d in &[0.002, 0.0035, 0.0065, 0.011, 0.02] {
        let tau_e = tau_for_g(lstar, g_i - d);
        let incumbent = CompanyConfig::new(SampleSize::Infinite, tau_i).unwrap();
        let entrant = CompanyConfig::new(SampleSize::Finite(1), tau_e).unwrap();
        let n_star = match entry_threshold_search(&p, &incumbent, &entrant).unwrap() {
            EntryThreshold::Finite(n) => n as f64,
            EntryThreshold::Infinite => panic!("unexpected infinite threshold at D={d}"),
        };
        pts.push((d, n_star));
    }
    let s2 = loglog_slope(&pts);
    assert!((s2 - (-2.0)).abs() <= 0.30, "R2 slope {s2}");

    // Third regime exists at delta = 2.5 (nu = 3, nu' = 1.5): slope
    // -(nu'+1)/nu' = -5/3 within +-20%.
    let p3 = problem(0.5, 2.5, 0.5, 100_000);
    let lstar3 = p3.lstar().value;
    let g_i3 = 0.0625 * lstar3;
    let tau_i3 = tau_for_g(lstar3, g_i3);
    let mut pts = Vec::new();
    for &d in &[0.00135, 0.002, 0.003, 0.0042, 0.0056] {
        let tau_e = tau_for_g(lstar3, g_i3 - d);
        let incumbent = CompanyConfig::new(SampleSize::Infinite, tau_i3).unwrap();
        let entrant = CompanyConfig::new(SampleSize::Finite(1), tau_e).unwrap();
        let n_star = match entry_threshold_search(&p3, &incumbent, &entrant).unwrap() {
            EntryThreshold::Finite(n) => n as f64,
            EntryThreshold::Infinite => panic!("unexpected infinite threshold at D={d}"),
        };
        pts.push((d, n_star));
    }
    let s3 = loglog_slope(&pts);
    let target = -(1.5 + 1.0) / 1.5;
    assert!(
        (s3 - target).abs() <= 0.20 * target.abs(),
        "R3 slope {s3} vs {target}"
    );
    println!("criterion 7 (constrained-entrant threshold): PASS, slopes {s1:.3}/{s2:.3}/{s3:.3}");
}

#[test]
fn criterion_08_modified_safety_model() {
    // Agreement of the two safety models where they should coincide, plus
    // frozen-band upper-bound checks for the deterministic-equivalent safety
    // constraint. Bands measured at calibration and frozen: search/bound <= 8
    // in both directions tested.
    let p = problem(0.5, 0.5, 0.5, 20_000);
    let lstar = p.lstar().value;

    // Agreement between the two safety models when the entrant is
    // unconstrained and the incumbent has infinite data.
    for &frac in &[0.45, 0.65] {
        let incumbent = CompanyConfig::new(SampleSize::Infinite, frac * lstar).unwrap();
        let entrant = CompanyConfig::unconstrained(SampleSize::Finite(1));
        let simple = entry_threshold_search(&p, &incumbent, &entrant).unwrap();
        let modified = modified_threshold_search(&p, &incumbent, &entrant).unwrap();
        match (simple, modified) {
            (EntryThreshold::Finite(a), EntryThreshold::Finite(b)) => {
                assert!(a.abs_diff(b) <= 1, "{a} vs {b} at tau_i = {frac} L*");
            }
            other => panic!("expected finite pair, got {other:?}"),
        }
    }

    // Constrained entrant against an infinite-data incumbent: searched
    // threshold never beyond 8x the bound form.
    let tau_i = 0.65 * lstar;
    for &frac in &[0.75, 0.85] {
        let tau_e = frac * lstar;
        let incumbent = CompanyConfig::new(SampleSize::Infinite, tau_i).unwrap();
        let entrant = CompanyConfig::new(SampleSize::Finite(1), tau_e).unwrap();
        let searched = modified_threshold_search(&p, &incumbent, &entrant)
            .unwrap()
            .as_f64();
        let bound = modified_threshold_bounds(&p, SampleSize::Infinite, tau_i, tau_e).unwrap();
        let ratio = searched / bound;
        assert!(ratio <= 8.0, "tau_e = {frac} L*: ratio {ratio}");
    }

    // Finite incumbent with an unconstrained entrant under the modified
    // constraint, against the three-branch bound form.
    let tau_i = 0.49 * lstar;
    for &n_i in &[100u64, 3000] {
        let incumbent = CompanyConfig::new(SampleSize::Finite(n_i), tau_i).unwrap();
        let entrant = CompanyConfig::unconstrained(SampleSize::Finite(1));
        let searched = modified_threshold_search(&p, &incumbent, &entrant)
            .unwrap()
            .as_f64();
        let bound =
            modified_threshold_bounds(&p, SampleSize::Finite(n_i), tau_i, f64::INFINITY).unwrap();
        let ratio = searched / bound;
        assert!(ratio <= 8.0, "n_i = {n_i}: ratio {ratio}");

        // Sanity on the incumbent program itself.
        assert!(company_opt_modified(&p, &incumbent).unwrap().feasible);
    }
    println!("criterion 8 (modified safety model): PASS");
}

#[test]
fn criterion_09_pareto_frontier_grid() {
    // sqrt(E L1) + sqrt(E L2) >= sqrt(L*) with 1e-10 slack at every point of
    // a 50 x 20 (alpha, lambda) infinite-data grid.
    let p = problem(0.5, 0.5, 0.5, 100_000);
    let lstar_root = p.lstar().value.sqrt();
    for i in 0..50 {
        let alpha = i as f64 / 49.0;
        for j in 0..20 {
            let lambda = 1e-6 * (0.9f64 / 1e-6).powf(j as f64 / 19.0);
            let sums = ExpectedSums::new(&p, SampleSize::Infinite, lambda).unwrap();
            let l1 = sums.l1(alpha).unwrap().value;
            let l2 = sums.l2(alpha).unwrap().value;
            assert!(
                l1.sqrt() + l2.sqrt() >= lstar_root - 1e-10,
                "violated at alpha={alpha} lambda={lambda}: {} + {} < {lstar_root}",
                l1.sqrt(),
                l2.sqrt()
            );
        }
    }
    println!("criterion 9 (Pareto frontier on 50x20 grid): PASS");
}

#[test]
fn criterion_10_cli_reproducibility() {
    // Byte-identical output under a fixed seed, for both a simulation
    // command and the multi-file figures command.
    let bin = env!("CARGO_BIN_EXE_moscale");
    let dir = std::env::temp_dir().join("moscale_acceptance");
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();

    let run_validate = |path: &std::path::Path| {
        let status = Command::new(bin)
            .args([
                "validate", "--gamma", "0.5", "--delta", "0.5", "--rho", "0.5", "--n", "40",
                "--alpha", "0.9", "--lambda", "0.01", "--p-sim", "100", "--trials", "20", "--p",
                "2000", "--seed", "7", "--output",
            ])
            .arg(path)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(path).unwrap()
    };
    let a = run_validate(&dir.join("a.csv"));
    let b = run_validate(&dir.join("b.csv"));
    assert_eq!(a, b, "validate output not byte-deterministic");

    let run_figures = |sub: &str| {
        let out = dir.join(sub);
        std::fs::create_dir_all(&out).unwrap();
        let status = Command::new(bin)
            .args(["figures", "--which", "scaling", "--points", "6", "--out-dir"])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out.join("figure_scaling_loss.csv")).unwrap()
    };
    let fa = run_figures("fa");
    let fb = run_figures("fb");
    assert_eq!(fa, fb, "figures output not byte-deterministic");

    // Malformed flag: usage text, exit 2.
    let status = Command::new(bin).arg("--definitely-not-a-flag").status().unwrap();
    assert_eq!(status.code(), Some(2));

    let _ = std::fs::remove_dir_all(&dir);
    println!("criterion 10 (CLI reproducibility): PASS");
}

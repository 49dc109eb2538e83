//! Experiment runner behind the `moscale` binary: resolves a flat key-value
//! configuration per subcommand, dispatches into the library, and renders CSV
//! artifacts.
//!
//! Every artifact starts with a `#`-prefixed comment line embedding the fully
//! resolved configuration, and all floats are printed in shortest round-trip
//! form, so a config plus seed pins the output byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::det_equiv::{l1_det_expected, l2_det_expected};
use crate::error::{Error, Result};
use crate::kappa::solve_kappa;
use crate::market::{
    entry_threshold_search, threshold_constrained, threshold_finite, threshold_warmup,
    CompanyConfig,
};
use crate::market_ext::{modified_threshold_bounds, modified_threshold_search};
use crate::monte_carlo::validate;
use crate::problem::{PowerLawProblem, RidgeConfig, SampleSize, DEFAULT_P_TRUNC};
use crate::scaling::{opt_excess_regime, opt_loss_regime, optimize_lambda_exact, Objective};

/// The available experiment kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubcommandKind {
    Kappa,
    DetEquiv,
    ScalingCurve,
    EntryThreshold,
    Validate,
    Figures,
}

impl SubcommandKind {
    pub fn name(self) -> &'static str {
        match self {
            SubcommandKind::Kappa => "kappa",
            SubcommandKind::DetEquiv => "detequiv",
            SubcommandKind::ScalingCurve => "scaling-curve",
            SubcommandKind::EntryThreshold => "entry-threshold",
            SubcommandKind::Validate => "validate",
            SubcommandKind::Figures => "figures",
        }
    }

    /// Default parameter map of the subcommand.
    pub fn defaults(self) -> BTreeMap<String, String> {
        let pairs: &[(&str, &str)] = match self {
            SubcommandKind::Kappa => &[
                ("gamma", "0.5"),
                ("lambda", "0.001"),
                ("n", "1000"),
                ("p", "100000"),
            ],
            SubcommandKind::DetEquiv => &[
                ("gamma", "0.5"),
                ("delta", "0.5"),
                ("rho", "0.5"),
                ("p", "100000"),
                ("n", "1000"),
                ("alpha", "0.9"),
                ("lambda", "0.001"),
                ("which", "l1"),
            ],
            SubcommandKind::ScalingCurve => &[
                ("objective", "loss"),
                ("alpha", "0.9"),
                ("rho", "0.5"),
                ("gamma", "0.5"),
                ("delta", "0.5"),
                ("p", "100000"),
                ("n-grid", "10:100000:13"),
            ],
            SubcommandKind::EntryThreshold => &[
                ("mode", "warmup"),
                ("safety-model", "simple"),
                ("gamma", "0.5"),
                ("delta", "0.5"),
                ("rho", "0.5"),
                ("p", "100000"),
                ("tau-i-frac", "0.49"),
                ("tau-e-frac", "inf"),
                ("n-i", "inf"),
            ],
            SubcommandKind::Validate => &[
                ("gamma", "0.5"),
                ("delta", "0.5"),
                ("rho", "0.5"),
                ("n", "100"),
                ("alpha", "0.9"),
                ("lambda", "0.01"),
                ("p-sim", "400"),
                ("trials", "200"),
                ("p", "100000"),
            ],
            SubcommandKind::Figures => &[("which", "all"), ("points", "12")],
        };
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }
}

/// A fully resolved experiment: subcommand, flat parameters, seed.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub subcommand: SubcommandKind,
    pub parameters: BTreeMap<String, String>,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Resolve a config: defaults, overridden by the config file, overridden
    /// by explicitly passed flags. Unknown keys are rejected.
    pub fn resolve(
        subcommand: SubcommandKind,
        file_entries: &[(String, String)],
        flags: &[(String, String)],
        seed: u64,
    ) -> Result<Self> {
        let mut parameters = subcommand.defaults();
        for (key, value) in file_entries.iter().chain(flags) {
            if !parameters.contains_key(key.as_str()) {
                return Err(Error::Config(format!(
                    "unknown parameter `{key}` for subcommand {}",
                    subcommand.name()
                )));
            }
            parameters.insert(key.clone(), value.clone());
        }
        Ok(Self {
            subcommand,
            parameters,
            seed,
        })
    }

    fn get(&self, key: &str) -> Result<&str> {
        self.parameters
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Config(format!("missing parameter `{key}`")))
    }

    fn get_f64(&self, key: &str) -> Result<f64> {
        let raw = self.get(key)?;
        if raw == "inf" {
            return Ok(f64::INFINITY);
        }
        raw.parse()
            .map_err(|_| Error::Config(format!("parameter `{key}` = `{raw}` is not a number")))
    }

    fn get_usize(&self, key: &str) -> Result<usize> {
        let raw = self.get(key)?;
        raw.parse()
            .map_err(|_| Error::Config(format!("parameter `{key}` = `{raw}` is not an integer")))
    }

    fn get_u64(&self, key: &str) -> Result<u64> {
        let raw = self.get(key)?;
        raw.parse()
            .map_err(|_| Error::Config(format!("parameter `{key}` = `{raw}` is not an integer")))
    }

    fn get_sample_size(&self, key: &str) -> Result<SampleSize> {
        let raw = self.get(key)?;
        if raw == "inf" {
            return Ok(SampleSize::Infinite);
        }
        raw.parse::<u64>()
            .map(SampleSize::Finite)
            .map_err(|_| Error::Config(format!("parameter `{key}` = `{raw}` is not a count or `inf`")))
    }

    /// The provenance comment embedded at the top of every artifact.
    fn provenance(&self) -> String {
        let mut line = format!("# moscale {}", self.subcommand.name());
        for (k, v) in &self.parameters {
            let _ = write!(line, " {k}={v}");
        }
        let _ = write!(line, " seed={}", self.seed);
        line
    }
}

/// Parse a flat `key=value` config file; `#` lines and blanks are skipped.
pub fn parse_config_file(text: &str) -> Result<Vec<(String, String)>> {
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected key=value, got `{line}`",
                lineno + 1
            )));
        };
        entries.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(entries)
}

/// One rendered output file. `filename` is `None` for single-artifact
/// commands (written to `--output` or stdout).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub filename: Option<String>,
    pub csv: String,
}

/// Run the experiment and render its artifacts.
pub fn run(config: &ExperimentConfig) -> Result<Vec<Artifact>> {
    match config.subcommand {
        SubcommandKind::Kappa => run_kappa(config),
        SubcommandKind::DetEquiv => run_detequiv(config),
        SubcommandKind::ScalingCurve => run_scaling_curve(config),
        SubcommandKind::EntryThreshold => run_entry_threshold(config),
        SubcommandKind::Validate => run_validate(config),
        SubcommandKind::Figures => run_figures(config),
    }
}

fn single(config: &ExperimentConfig, header: &str, rows: Vec<String>) -> Vec<Artifact> {
    let mut csv = String::new();
    csv.push_str(&config.provenance());
    csv.push('\n');
    csv.push_str(header);
    csv.push('\n');
    for row in rows {
        csv.push_str(&row);
        csv.push('\n');
    }
    vec![Artifact {
        filename: None,
        csv,
    }]
}

fn run_kappa(config: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let gamma = config.get_f64("gamma")?;
    let lambda = config.get_f64("lambda")?;
    let n = config.get_sample_size("n")?;
    let p = config.get_usize("p")?;
    // delta/rho play no role in the fixed point; any valid values do.
    let problem = PowerLawProblem::new(gamma, 1.0, 0.0, p)?;
    let solved = solve_kappa(lambda, n, &problem)?;
    Ok(single(
        config,
        "kappa,residual,iterations",
        vec![format!(
            "{},{},{}",
            solved.kappa, solved.residual, solved.iterations
        )],
    ))
}

fn run_detequiv(config: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let problem = PowerLawProblem::new(
        config.get_f64("gamma")?,
        config.get_f64("delta")?,
        config.get_f64("rho")?,
        config.get_usize("p")?,
    )?;
    let cfg = RidgeConfig::new(
        config.get_sample_size("n")?,
        config.get_f64("alpha")?,
        config.get_f64("lambda")?,
    )?;
    let result = match config.get("which")? {
        "l1" => l1_det_expected(&problem, &cfg)?,
        "l2" => l2_det_expected(&problem, &cfg)?,
        other => {
            return Err(Error::Config(format!(
                "parameter `which` must be l1 or l2, got `{other}`"
            )))
        }
    };
    Ok(single(
        config,
        "t1,t2,t3,t4,t5,q,kappa,value",
        vec![format!(
            "{},{},{},{},{},{},{},{}",
            result.t1, result.t2, result.t3, result.t4, result.t5, result.q, result.kappa, result.value
        )],
    ))
}

/// Parse `lo:hi:points` into a log-spaced deduplicated integer grid.
fn parse_n_grid(raw: &str) -> Result<Vec<u64>> {
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "n-grid must be lo:hi:points, got `{raw}`"
        )));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| Error::Config(format!("bad n-grid lower bound `{}`", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| Error::Config(format!("bad n-grid upper bound `{}`", parts[1])))?;
    let points: usize = parts[2]
        .parse()
        .map_err(|_| Error::Config(format!("bad n-grid point count `{}`", parts[2])))?;
    if !(lo >= 1.0 && hi >= lo && points >= 1) {
        return Err(Error::Config(format!("degenerate n-grid `{raw}`")));
    }
    let mut grid = Vec::with_capacity(points);
    for j in 0..points {
        let t = if points == 1 {
            0.0
        } else {
            j as f64 / (points - 1) as f64
        };
        let n = (lo.ln() + (hi.ln() - lo.ln()) * t).exp().round() as u64;
        if grid.last() != Some(&n) {
            grid.push(n.max(1));
        }
    }
    Ok(grid)
}

fn run_scaling_curve(config: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let problem = PowerLawProblem::new(
        config.get_f64("gamma")?,
        config.get_f64("delta")?,
        config.get_f64("rho")?,
        config.get_usize("p")?,
    )?;
    let alpha = config.get_f64("alpha")?;
    let objective = match config.get("objective")? {
        "loss" => Objective::Loss,
        "excess" => Objective::Excess,
        other => {
            return Err(Error::Config(format!(
                "objective must be loss or excess, got `{other}`"
            )))
        }
    };
    let grid = parse_n_grid(config.get("n-grid")?)?;
    let mut rows = Vec::with_capacity(grid.len());
    for &n in &grid {
        let report = match objective {
            Objective::Loss => opt_loss_regime(&problem, n, alpha)?,
            Objective::Excess => opt_excess_regime(&problem, n, alpha)?,
        };
        let exact = optimize_lambda_exact(&problem, n, alpha, objective)?;
        rows.push(format!(
            "{},{},{},{},{}",
            n, exact.value, report.value, report.regime, exact.lambda
        ));
    }
    Ok(single(
        config,
        "n,exact_value,theta_value,regime,lambda_star",
        rows,
    ))
}

fn run_entry_threshold(config: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let problem = PowerLawProblem::new(
        config.get_f64("gamma")?,
        config.get_f64("delta")?,
        config.get_f64("rho")?,
        config.get_usize("p")?,
    )?;
    let lstar = problem.lstar().value;
    let tau_i = config.get_f64("tau-i-frac")? * lstar;
    let tau_e_frac = config.get_f64("tau-e-frac")?;
    let tau_e = if tau_e_frac.is_infinite() {
        f64::INFINITY
    } else {
        tau_e_frac * lstar
    };
    let n_i = config.get_sample_size("n-i")?;
    let mode = config.get("mode")?;
    let model = config.get("safety-model")?;
    if model != "simple" && model != "det" {
        return Err(Error::Config(format!(
            "safety-model must be simple or det, got `{model}`"
        )));
    }
    let det = model == "det";

    let (value, regime): (String, String) = match (mode, det) {
        ("warmup", false) => (threshold_warmup(&problem, tau_i)?.to_string(), "-".into()),
        ("warmup", true) => (
            modified_threshold_bounds(&problem, SampleSize::Infinite, tau_i, f64::INFINITY)?
                .to_string(),
            "-".into(),
        ),
        ("finite", false) => {
            let n_i = match n_i {
                SampleSize::Finite(n) => n,
                SampleSize::Infinite => {
                    return Err(Error::Config("mode finite needs a finite n-i".into()))
                }
            };
            let report = threshold_finite(&problem, n_i, tau_i)?;
            (report.value.to_string(), report.regime.to_string())
        }
        ("finite", true) => {
            let bound = modified_threshold_bounds(&problem, n_i, tau_i, f64::INFINITY)?;
            (bound.to_string(), "-".into())
        }
        ("constrained", false) => {
            let report = threshold_constrained(&problem, tau_i, tau_e)?;
            (report.value.to_string(), report.regime.to_string())
        }
        ("constrained", true) => {
            let bound = modified_threshold_bounds(&problem, SampleSize::Infinite, tau_i, tau_e)?;
            (bound.to_string(), "-".into())
        }
        ("search", det) => {
            let incumbent = CompanyConfig { n: n_i, tau: tau_i };
            let entrant = CompanyConfig {
                n: SampleSize::Finite(1),
                tau: tau_e,
            };
            let found = if det {
                modified_threshold_search(&problem, &incumbent, &entrant)?
            } else {
                entry_threshold_search(&problem, &incumbent, &entrant)?
            };
            (found.to_string(), "-".into())
        }
        (other, _) => {
            return Err(Error::Config(format!(
                "mode must be warmup, finite, constrained or search, got `{other}`"
            )))
        }
    };
    Ok(single(
        config,
        "mode,safety_model,gamma,delta,rho,tau_i_frac,tau_e_frac,n_i,n_e_star,regime",
        vec![format!(
            "{},{},{},{},{},{},{},{},{},{}",
            mode,
            model,
            problem.gamma(),
            problem.delta(),
            problem.rho(),
            config.get("tau-i-frac")?,
            config.get("tau-e-frac")?,
            n_i,
            value,
            regime
        )],
    ))
}

fn run_validate(config: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let problem = PowerLawProblem::new(
        config.get_f64("gamma")?,
        config.get_f64("delta")?,
        config.get_f64("rho")?,
        config.get_usize("p")?,
    )?;
    let cfg = RidgeConfig::new(
        config.get_sample_size("n")?,
        config.get_f64("alpha")?,
        config.get_f64("lambda")?,
    )?;
    let report = validate(
        &problem,
        &cfg,
        config.get_usize("p-sim")?,
        config.get_u64("trials")? as u32,
        config.seed,
    )?;
    Ok(single(
        config,
        "mean_l1,stderr_l1,mean_l2,stderr_l2,l1_det_expected,l2_det_expected,l1_det_explicit_mean,l2_det_explicit_mean,kappa,q,trials,seed",
        vec![format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            report.stats.mean_l1,
            report.stats.stderr_l1,
            report.stats.mean_l2,
            report.stats.stderr_l2,
            report.l1_det_expected.value,
            report.l2_det_expected.value,
            report.l1_det_explicit_mean,
            report.l2_det_explicit_mean,
            report.l1_det_expected.kappa,
            report.l1_det_expected.q,
            report.stats.trials,
            report.stats.seed
        )],
    ))
}

/// `(gamma, delta)` pairs realizing the documented `nu` values for figure
/// sweeps (`nu = min(2(1+gamma), delta+gamma)`).
const NU_PANEL: [(f64, f64, f64); 4] = [
    (0.34, 0.04, 0.30),
    (1.0, 0.5, 0.5),
    (1.5, 0.5, 1.0),
    (2.0, 0.5, 1.5),
];

const RHO_PANEL: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

fn figure(config: &ExperimentConfig, name: &str, header: &str, rows: Vec<String>) -> Artifact {
    let mut csv = String::new();
    csv.push_str(&config.provenance());
    csv.push('\n');
    csv.push_str(header);
    csv.push('\n');
    for row in rows {
        csv.push_str(&row);
        csv.push('\n');
    }
    Artifact {
        filename: Some(format!("{name}.csv")),
        csv,
    }
}

fn run_figures(config: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let which = config.get("which")?;
    let points = config.get_usize("points")?.max(2);
    let mut artifacts = Vec::new();
    let wants = |name: &str| which == "all" || which == name;

    // Warm-up threshold (infinite-data incumbent, unconstrained entrant).
    // The nu panel sweeps the incumbent's infinite-data loss G on a shared
    // absolute grid so the curves are comparable across problem families
    // (fixing the tau_i/L* fraction instead would move G with L*); the rho
    // panel sweeps the tau_i fraction at fixed exponents.
    if wants("warmup") {
        let mut rows = Vec::new();
        for &(nu, gamma, delta) in &NU_PANEL {
            let problem = PowerLawProblem::new(gamma, delta, 0.5, DEFAULT_P_TRUNC)?;
            let lstar = problem.lstar().value;
            for j in 0..points {
                let g = 0.005 * (0.29f64 / 0.005).powf(j as f64 / (points - 1) as f64);
                let tau_i = {
                    let root = lstar.sqrt() - g.sqrt();
                    root * root
                };
                let value = threshold_warmup(&problem, tau_i)?;
                rows.push(format!(
                    "{nu},{gamma},{delta},0.5,{g},{},{value}",
                    tau_i / lstar
                ));
            }
        }
        artifacts.push(figure(
            config,
            "figure_warmup_nu",
            "nu,gamma,delta,rho,g,tau_i_frac,n_e_star",
            rows,
        ));

        let tau_grid: Vec<f64> = (0..points)
            .map(|j| 0.26 + (0.99 - 0.26) * j as f64 / (points - 1) as f64)
            .collect();
        let mut rows = Vec::new();
        for &rho in &RHO_PANEL {
            let problem = PowerLawProblem::new(0.04, 0.30, rho, DEFAULT_P_TRUNC)?;
            for &frac in &tau_grid {
                let value = threshold_warmup(&problem, frac * problem.lstar().value)?;
                rows.push(format!("0.34,0.04,0.3,{rho},{frac},{value}"));
            }
        }
        artifacts.push(figure(
            config,
            "figure_warmup_rho",
            "nu,gamma,delta,rho,tau_i_frac,n_e_star",
            rows,
        ));
    }

    // Scaling laws at alpha = 0.9: the asymptotic loss and excess-loss curves
    // with their regime labels.
    if wants("scaling") {
        let problem = PowerLawProblem::new(0.5, 2.5, 0.5, DEFAULT_P_TRUNC)?;
        let n_grid: Vec<u64> = (0..points * 2)
            .map(|j| {
                (10f64.ln() + (1e10f64.ln() - 10f64.ln()) * j as f64 / (points * 2 - 1) as f64)
                    .exp()
                    .round() as u64
            })
            .collect();
        let mut loss_rows = Vec::new();
        let mut excess_rows = Vec::new();
        for &n in &n_grid {
            let lr = opt_loss_regime(&problem, n, 0.9)?;
            loss_rows.push(format!("{n},{},{},{}", lr.value, lr.exponent, lr.regime));
            let er = opt_excess_regime(&problem, n, 0.9)?;
            excess_rows.push(format!("{n},{},{},{}", er.value, er.exponent, er.regime));
        }
        artifacts.push(figure(
            config,
            "figure_scaling_loss",
            "n,value,exponent,regime",
            loss_rows,
        ));
        artifacts.push(figure(
            config,
            "figure_scaling_excess",
            "n,value,exponent,regime",
            excess_rows,
        ));
    }

    // Finite-incumbent threshold versus n_i.
    if wants("finite") {
        let n_grid: Vec<u64> = (0..points * 2)
            .map(|j| {
                (10f64.ln() + (1e9f64.ln() - 10f64.ln()) * j as f64 / (points * 2 - 1) as f64)
                    .exp()
                    .round() as u64
            })
            .collect();
        let mut rows = Vec::new();
        for &(nu, gamma, delta) in &NU_PANEL {
            let problem = PowerLawProblem::new(gamma, delta, 0.5, DEFAULT_P_TRUNC)?;
            let tau_i = 0.49 * problem.lstar().value;
            for &n_i in &n_grid {
                let report = threshold_finite(&problem, n_i, tau_i)?;
                rows.push(format!(
                    "{nu},0.5,{n_i},{},{}",
                    report.value, report.regime
                ));
            }
        }
        artifacts.push(figure(
            config,
            "figure_finite_nu",
            "nu,rho,n_i,n_e_star,regime",
            rows,
        ));

        let mut rows = Vec::new();
        for &rho in &RHO_PANEL {
            let problem = PowerLawProblem::new(0.04, 0.30, rho, DEFAULT_P_TRUNC)?;
            let tau_i = 0.49 * problem.lstar().value;
            for &n_i in &n_grid {
                let report = threshold_finite(&problem, n_i, tau_i)?;
                rows.push(format!(
                    "0.34,{rho},{n_i},{},{}",
                    report.value, report.regime
                ));
            }
        }
        artifacts.push(figure(
            config,
            "figure_finite_rho",
            "nu,rho,n_i,n_e_star,regime",
            rows,
        ));
    }

    // Constrained-entrant threshold versus D, swept through tau_e.
    if wants("constrained") {
        let tau_i_frac = 0.60;
        let mut rows = Vec::new();
        for &delta in &[1.5, 2.0, 2.5] {
            let problem = PowerLawProblem::new(0.5, delta, 0.49, DEFAULT_P_TRUNC)?;
            let lstar = problem.lstar().value;
            for j in 0..points {
                let frac = tau_i_frac + (0.999 - tau_i_frac) * (j + 1) as f64 / points as f64;
                let report = threshold_constrained(&problem, tau_i_frac * lstar, frac * lstar)?;
                let d = {
                    let g = |t: f64| {
                        let s = lstar.sqrt() - (t * lstar).min(lstar).sqrt();
                        s * s
                    };
                    g(tau_i_frac) - g(frac)
                };
                rows.push(format!(
                    "{delta},0.49,{frac},{d},{},{}",
                    report.value, report.regime
                ));
            }
        }
        artifacts.push(figure(
            config,
            "figure_constrained_delta",
            "delta,rho,tau_e_frac,d,n_e_star,regime",
            rows,
        ));

        let mut rows = Vec::new();
        for &rho in &[0.1, 0.3, 0.49, 0.7] {
            let problem = PowerLawProblem::new(0.5, 2.5, rho, DEFAULT_P_TRUNC)?;
            let lstar = problem.lstar().value;
            for j in 0..points {
                let frac = tau_i_frac + (0.999 - tau_i_frac) * (j + 1) as f64 / points as f64;
                let report = threshold_constrained(&problem, tau_i_frac * lstar, frac * lstar)?;
                let d = {
                    let g = |t: f64| {
                        let s = lstar.sqrt() - (t * lstar).min(lstar).sqrt();
                        s * s
                    };
                    g(tau_i_frac) - g(frac)
                };
                rows.push(format!(
                    "2.5,{rho},{frac},{d},{},{}",
                    report.value, report.regime
                ));
            }
        }
        artifacts.push(figure(
            config,
            "figure_constrained_rho",
            "delta,rho,tau_e_frac,d,n_e_star,regime",
            rows,
        ));
    }

    if artifacts.is_empty() {
        return Err(Error::Config(format!(
            "`which` must be warmup, scaling, finite, constrained or all, got `{which}`"
        )));
    }
    Ok(artifacts)
}

/// Write artifacts to disk (or return the single CSV for stdout). Artifacts
/// are fully rendered before anything is written, so a failed run leaves no
/// partial file behind.
pub fn write_artifacts(
    artifacts: &[Artifact],
    output: Option<&Path>,
    out_dir: &Path,
) -> Result<Option<String>> {
    if artifacts.len() == 1 && artifacts[0].filename.is_none() {
        match output {
            Some(path) => {
                std::fs::write(path, &artifacts[0].csv)
                    .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
                Ok(None)
            }
            None => Ok(Some(artifacts[0].csv.clone())),
        }
    } else {
        std::fs::create_dir_all(out_dir)
            .map_err(|e| Error::Config(format!("cannot create {}: {e}", out_dir.display())))?;
        for artifact in artifacts {
            let name = artifact.filename.as_deref().unwrap_or("output.csv");
            let path = out_dir.join(name);
            std::fs::write(&path, &artifact.csv)
                .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
        }
        Ok(None)
    }
}

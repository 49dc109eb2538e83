use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use moscale::cli::{self, ExperimentConfig, SubcommandKind};

/// Deterministic equivalents, multi-objective scaling laws and market-entry
/// thresholds for mixed-label ridge regression.
#[derive(Parser, Debug)]
#[command(name = "moscale", version, about)]
struct Cli {
    /// Flat key=value config file supplying defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write the CSV artifact here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    /// Directory for multi-file commands (figures). Defaults to `.`.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// RNG seed for simulation commands.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct ProblemArgs {
    /// Eigenvalue decay exponent (eigenvalues i^{-1-gamma}).
    #[arg(long)]
    gamma: Option<f64>,
    /// Alignment decay exponent (second moments i^{-delta}).
    #[arg(long)]
    delta: Option<f64>,
    /// Objective correlation in [0, 1).
    #[arg(long)]
    rho: Option<f64>,
    /// Series truncation standing in for the infinite-dimensional limit.
    #[arg(long)]
    p: Option<usize>,
}

impl ProblemArgs {
    fn push(&self, flags: &mut Vec<(String, String)>) {
        push_opt(flags, "gamma", &self.gamma);
        push_opt(flags, "delta", &self.delta);
        push_opt(flags, "rho", &self.rho);
        push_opt(flags, "p", &self.p);
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the effective-regularizer fixed point and print kappa with its
    /// residual.
    Kappa {
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Dataset size (a count or `inf`).
        #[arg(long)]
        n: Option<String>,
        #[arg(long)]
        p: Option<usize>,
    },
    /// Print the deterministic-equivalent terms T1..T5, Q, kappa and value.
    Detequiv {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Dataset size (a count or `inf`).
        #[arg(long)]
        n: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Which loss to evaluate: l1 (performance) or l2 (safety).
        #[arg(long)]
        which: Option<String>,
    },
    /// Sweep the optimally regularized loss (or excess loss) over a dataset
    /// grid and emit the exact and asymptotic curves.
    ScalingCurve {
        #[command(flatten)]
        problem: ProblemArgs,
        /// loss or excess.
        #[arg(long)]
        objective: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Dataset grid lo:hi:points (log-spaced).
        #[arg(long)]
        n_grid: Option<String>,
    },
    /// Market-entry thresholds: closed asymptotic forms or the numeric
    /// search.
    EntryThreshold {
        #[command(flatten)]
        problem: ProblemArgs,
        /// warmup, finite, constrained or search.
        #[arg(long)]
        mode: Option<String>,
        /// simple (alpha^2 L*) or det (deterministic-equivalent constraint).
        #[arg(long)]
        safety_model: Option<String>,
        /// Incumbent safety cap as a fraction of L*.
        #[arg(long)]
        tau_i_frac: Option<f64>,
        /// Entrant safety cap as a fraction of L* (or `inf`).
        #[arg(long)]
        tau_e_frac: Option<String>,
        /// Incumbent dataset size (a count or `inf`).
        #[arg(long)]
        n_i: Option<String>,
    },
    /// Monte Carlo validation of the deterministic equivalents.
    Validate {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Dataset size per trial.
        #[arg(long)]
        n: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Simulation dimension (at most p).
        #[arg(long)]
        p_sim: Option<usize>,
        #[arg(long)]
        trials: Option<u32>,
    },
    /// Emit the CSV panels behind the figures (one file per panel).
    Figures {
        /// warmup, scaling, finite, constrained or all.
        #[arg(long)]
        which: Option<String>,
        /// Grid resolution per curve.
        #[arg(long)]
        points: Option<usize>,
    },
}

fn push_opt<T: ToString>(flags: &mut Vec<(String, String)>, key: &str, value: &Option<T>) {
    if let Some(v) = value {
        flags.push((key.to_string(), v.to_string()));
    }
}

fn collect(command: &Command) -> (SubcommandKind, Vec<(String, String)>) {
    let mut flags = Vec::new();
    let kind = match command {
        Command::Kappa { gamma, lambda, n, p } => {
            push_opt(&mut flags, "gamma", gamma);
            push_opt(&mut flags, "lambda", lambda);
            push_opt(&mut flags, "n", n);
            push_opt(&mut flags, "p", p);
            SubcommandKind::Kappa
        }
        Command::Detequiv {
            problem,
            n,
            alpha,
            lambda,
            which,
        } => {
            problem.push(&mut flags);
            push_opt(&mut flags, "n", n);
            push_opt(&mut flags, "alpha", alpha);
            push_opt(&mut flags, "lambda", lambda);
            push_opt(&mut flags, "which", which);
            SubcommandKind::DetEquiv
        }
        Command::ScalingCurve {
            problem,
            objective,
            alpha,
            n_grid,
        } => {
            problem.push(&mut flags);
            push_opt(&mut flags, "objective", objective);
            push_opt(&mut flags, "alpha", alpha);
            push_opt(&mut flags, "n-grid", n_grid);
            SubcommandKind::ScalingCurve
        }
        Command::EntryThreshold {
            problem,
            mode,
            safety_model,
            tau_i_frac,
            tau_e_frac,
            n_i,
        } => {
            problem.push(&mut flags);
            push_opt(&mut flags, "mode", mode);
            push_opt(&mut flags, "safety-model", safety_model);
            push_opt(&mut flags, "tau-i-frac", tau_i_frac);
            push_opt(&mut flags, "tau-e-frac", tau_e_frac);
            push_opt(&mut flags, "n-i", n_i);
            SubcommandKind::EntryThreshold
        }
        Command::Validate {
            problem,
            n,
            alpha,
            lambda,
            p_sim,
            trials,
        } => {
            problem.push(&mut flags);
            push_opt(&mut flags, "n", n);
            push_opt(&mut flags, "alpha", alpha);
            push_opt(&mut flags, "lambda", lambda);
            push_opt(&mut flags, "p-sim", p_sim);
            push_opt(&mut flags, "trials", trials);
            SubcommandKind::Validate
        }
        Command::Figures { which, points } => {
            push_opt(&mut flags, "which", which);
            push_opt(&mut flags, "points", points);
            SubcommandKind::Figures
        }
    };
    (kind, flags)
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    // MOSCALE_THREADS caps the worker pool used for parallel trials/sweeps.
    if let Ok(raw) = std::env::var("MOSCALE_THREADS") {
        if let Ok(threads) = raw.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build_global();
        } else {
            eprintln!("moscale: ignoring non-numeric MOSCALE_THREADS = {raw}");
        }
    }

    let file_entries = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => match cli::parse_config_file(&text) {
                Ok(entries) => entries,
                Err(e) => {
                    eprintln!("moscale: {e}");
                    return ExitCode::from(2);
                }
            },
            Err(e) => {
                eprintln!("moscale: cannot read {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        None => Vec::new(),
    };

    let (kind, flags) = collect(&cli.command);
    let config =
        match ExperimentConfig::resolve(kind, &file_entries, &flags, cli.seed.unwrap_or(42)) {
            Ok(config) => config,
            Err(e) => {
                eprintln!("moscale: {e}");
                return ExitCode::from(2);
            }
        };

    let artifacts = match cli::run(&config) {
        Ok(artifacts) => artifacts,
        Err(e) => {
            eprintln!("moscale: {e}");
            return ExitCode::FAILURE;
        }
    };
    let out_dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    match cli::write_artifacts(&artifacts, cli.output.as_deref(), &out_dir) {
        Ok(Some(stdout_csv)) => {
            print!("{stdout_csv}");
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("moscale: {e}");
            ExitCode::FAILURE
        }
    }
}

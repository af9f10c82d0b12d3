//! `brw`: seeded experiments on branching random walks restricted to
//! subgraphs. Subcommands cover spectral estimation, persistence Monte
//! Carlo, finite-type projection checking, tree constructions, product and
//! free-product summaries, and a fixed reproduction suite.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric or suite failure.

mod commands;
mod config;
mod descriptor;
mod report;
mod reproduce;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Route;
use descriptor::{FamilyDescriptor, LawDescriptor, SubgraphDescriptor};
use report::{Format, Reporter};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numeric,
}

/// CLI error carrying the exit-code class.
#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn config(message: String) -> Self {
        CliError {
            kind: ErrorKind::Config,
            message,
        }
    }
    pub fn numeric(message: String) -> Self {
        CliError {
            kind: ErrorKind::Numeric,
            message,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl From<brw_core::Error> for CliError {
    fn from(e: brw_core::Error) -> Self {
        use brw_core::Error::*;
        let kind = match &e {
            Encoding(_) | Spec(_) | Parameter(_) | SubcriticalMean { .. } => ErrorKind::Config,
            Normalization { .. } | PeriodDetection { .. } | InsufficientData { .. }
            | Transitivity { .. } | Solver(_) | Projection(_) => ErrorKind::Numeric,
        };
        CliError {
            kind,
            message: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "brw",
    version,
    about = "Branching random walks on subgraphs: spectral estimates, persistence, trees and products"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Master seed; every stochastic experiment derives its streams from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo trials.
    #[arg(long, global = true, default_value_t = 1000)]
    trials: u64,
    /// Generation horizon for simulations.
    #[arg(long, global = true, default_value_t = 200)]
    horizon: u64,
    /// Population cap (trials stop and count as persisting beyond it).
    #[arg(long, global = true, default_value_t = 1_000_000)]
    cap: u64,
    /// Truncation depth for DP estimators.
    #[arg(long, global = true, default_value_t = 400)]
    depth: usize,
    /// Output directory for JSON/CSV reports.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral summary (rho_U, phi_U, zeta, m1) of a restricted kernel,
    /// plus a CSV of the diagonal and stay-probability series.
    Spectral {
        #[arg(long)]
        family: String,
        #[arg(long, default_value = "full")]
        subgraph: String,
        #[arg(long, value_enum, default_value_t = Route::Auto)]
        route: Route,
    },
    /// Persistence probability of the induced walk by Monte Carlo.
    Persist {
        #[arg(long)]
        family: String,
        #[arg(long, default_value = "full")]
        subgraph: String,
        /// Offspring mean (two-point law); exclusive with --law.
        #[arg(long, conflicts_with = "law")]
        m: Option<f64>,
        /// Offspring law descriptor (mean:, point:, edge:, pmf:).
        #[arg(long)]
        law: Option<String>,
        #[arg(long, value_enum, default_value_t = Route::Auto)]
        route: Route,
    },
    /// Finite-type projection check and persistence threshold.
    Fbrw {
        #[arg(long)]
        family: String,
        #[arg(long)]
        subgraph: String,
        /// auto | single | depth_mod:k
        #[arg(long, default_value = "auto")]
        labels: String,
        /// Ball radius for the projection check.
        #[arg(long, default_value_t = 3)]
        radius: usize,
    },
    /// Tree constructions and diagnostics.
    Tree {
        #[command(subcommand)]
        cmd: TreeCommand,
    },
    /// Closed-form product summary with optional DP cross-check.
    Product {
        #[arg(long)]
        d1: u32,
        #[arg(long)]
        d2: u32,
        #[arg(long)]
        alpha1: Option<f64>,
    },
    /// Free-product factor-copy thresholds (zeta = factor weight).
    Freeprod {
        #[arg(long)]
        family: String,
        /// Which factor copy is the subgraph.
        #[arg(long, default_value_t = 2)]
        copy: u8,
    },
    /// Fixed reproduction suite with a pass/fail table.
    Reproduce {
        /// Comma-separated row names to run (empty string: no-op).
        #[arg(long)]
        rows: Option<String>,
        /// Trial-count scale for the Monte Carlo rows.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// Run one experiment from a TOML config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum TreeCommand {
    /// Boundary measure gamma_o(bd T_x) of the subtree at a vertex.
    Gamma {
        #[arg(long, default_value = "tree:d=3")]
        family: String,
        /// Tree word ("o" or dotted child indices, e.g. "0.1.2").
        #[arg(long)]
        word: String,
    },
    /// Bernoulli percolation clusters: boundary certificates vs the bound.
    Gw {
        #[arg(long, default_value = "tree:d=3")]
        family: String,
        /// Edge retention probabilities (comma-separated, last repeats).
        #[arg(long, default_value = "0.8")]
        p: String,
        /// Cluster truncation depth.
        #[arg(long, default_value_t = 10)]
        gw_depth: usize,
    },
    /// Deterministic pruned tree: exact boundary certificates.
    Prune {
        #[arg(long, default_value_t = 4)]
        degree: u32,
        /// "every" or comma-separated strictly increasing depths.
        #[arg(long, default_value = "every")]
        levels: String,
        #[arg(long, default_value_t = 10)]
        to_depth: usize,
    },
    /// Edge-breeding extinction recursion (shooting solver).
    Recursion {
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 3)]
        degree: u32,
        #[arg(long, default_value_t = 80)]
        steps: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Boundary-dense set with certified null survival, plus the visit MC.
    Asets {
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 3)]
        degree: u32,
        /// Bound on the certified sum of hitting probabilities.
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
    },
}

fn real_main() -> Result<(), CliError> {
    let cli = Cli::parse();
    let g = &cli.global;
    let mut reporter = Reporter::new(&g.out, g.format)?;
    match &cli.command {
        Command::Spectral {
            family,
            subgraph,
            route,
        } => {
            let family: FamilyDescriptor = family.parse()?;
            let sub: SubgraphDescriptor = subgraph.parse()?;
            commands::run_spectral(&family, &sub, *route, g.depth, &mut reporter)?;
        }
        Command::Persist {
            family,
            subgraph,
            m,
            law,
            route,
        } => {
            let family: FamilyDescriptor = family.parse()?;
            let sub: SubgraphDescriptor = subgraph.parse()?;
            let law_desc = match (m, law) {
                (Some(mean), None) => LawDescriptor::Mean(*mean),
                (None, Some(text)) => text.parse()?,
                (None, None) => {
                    return Err(CliError::config("persist needs --m or --law".into()))
                }
                (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
            };
            commands::run_persist(
                &family,
                &sub,
                &law_desc,
                *route,
                g.horizon,
                g.cap,
                g.trials,
                g.seed,
                &mut reporter,
            )?;
        }
        Command::Fbrw {
            family,
            subgraph,
            labels,
            radius,
        } => {
            let family: FamilyDescriptor = family.parse()?;
            let sub: SubgraphDescriptor = subgraph.parse()?;
            commands::run_fbrw(&family, &sub, labels, *radius, g.depth, &mut reporter)?;
        }
        Command::Tree { cmd } => run_tree(cmd, g, &mut reporter)?,
        Command::Product { d1, d2, alpha1 } => {
            commands::run_product(*d1, *d2, *alpha1, g.depth, &mut reporter)?;
        }
        Command::Freeprod { family, copy } => {
            let family: FamilyDescriptor = family.parse()?;
            commands::run_freeprod(&family, *copy, g.depth, &mut reporter)?;
        }
        Command::Reproduce { rows, scale } => {
            reproduce::run_reproduce(g.seed, *scale, rows.as_deref(), &mut reporter)?;
        }
        Command::Run { config } => {
            let config = config::ExperimentConfig::load(config)?;
            // Echo the canonical serialized form next to the outputs so a
            // run can be reproduced from its report directory alone.
            let echo = config.serialize()?;
            std::fs::write(g.out.join("config_echo.toml"), echo)
                .map_err(|e| CliError::numeric(format!("cannot write config echo: {e}")))?;
            run_config(&config, g, &mut reporter)?;
        }
    }
    Ok(())
}

fn run_tree(
    cmd: &TreeCommand,
    g: &GlobalArgs,
    reporter: &mut Reporter,
) -> Result<(), CliError> {
    match cmd {
        TreeCommand::Gamma { family, word } => {
            let family: FamilyDescriptor = family.parse()?;
            let word = brw_core::TreeWord::parse(word)?;
            commands::run_tree_gamma(&family, &word, reporter)
        }
        TreeCommand::Gw {
            family,
            p,
            gw_depth,
        } => {
            let family: FamilyDescriptor = family.parse()?;
            let probs: Vec<f64> = p
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| CliError::config(format!("bad probability {x:?}")))
                })
                .collect::<Result<_, _>>()?;
            commands::run_tree_gw(&family, &probs, *gw_depth, g.trials, g.seed, reporter)
        }
        TreeCommand::Prune {
            degree,
            levels,
            to_depth,
        } => {
            let levels = if levels == "every" {
                brw_core::PruneLevels::Every
            } else {
                let list: Vec<u64> = levels
                    .split(',')
                    .map(|x| {
                        x.trim()
                            .parse()
                            .map_err(|_| CliError::config(format!("bad level {x:?}")))
                    })
                    .collect::<Result<_, _>>()?;
                brw_core::PruneLevels::List(list)
            };
            commands::run_tree_prune(*degree, &levels, *to_depth, reporter)
        }
        TreeCommand::Recursion {
            lambda,
            degree,
            steps,
            tol,
        } => commands::run_tree_recursion(*lambda, *degree, *steps, *tol, reporter),
        TreeCommand::Asets {
            lambda,
            degree,
            eps,
        } => commands::run_tree_asets(
            *lambda,
            *degree,
            *eps,
            14,
            g.horizon,
            g.cap,
            g.trials,
            g.seed,
            reporter,
        ),
    }
}

fn run_config(
    config: &config::ExperimentConfig,
    g: &GlobalArgs,
    reporter: &mut Reporter,
) -> Result<(), CliError> {
    let family: FamilyDescriptor = config.family.parse()?;
    let sub: SubgraphDescriptor = config
        .subgraph
        .as_deref()
        .unwrap_or("full")
        .parse()?;
    let route = match config.route.as_deref() {
        None | Some("auto") => Route::Auto,
        Some("direct") => Route::Direct,
        Some("quotient") => Route::Quotient,
        Some(other) => {
            return Err(CliError::config(format!("unknown route {other:?}")))
        }
    };
    match config.command.as_str() {
        "spectral" => commands::run_spectral(
            &family,
            &sub,
            route,
            config.depth.unwrap_or(g.depth),
            reporter,
        ),
        "persist" => {
            let law_text = config
                .law
                .as_deref()
                .ok_or_else(|| CliError::config("persist config needs a law".into()))?;
            let law: LawDescriptor = law_text.parse()?;
            commands::run_persist(
                &family,
                &sub,
                &law,
                route,
                config.horizon.unwrap_or(g.horizon),
                config.cap.unwrap_or(g.cap),
                config.trials.unwrap_or(g.trials),
                config.seed,
                reporter,
            )
        }
        "fbrw" => commands::run_fbrw(
            &family,
            &sub,
            "auto",
            config.radius.unwrap_or(3),
            config.depth.unwrap_or(g.depth),
            reporter,
        ),
        other => Err(CliError::config(format!("config command {other:?}"))),
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (label, code) = match e.kind {
                ErrorKind::Config => ("config error", 2),
                ErrorKind::Numeric => ("error", 3),
            };
            eprintln!("{label}: {e}");
            ExitCode::from(code)
        }
    }
}

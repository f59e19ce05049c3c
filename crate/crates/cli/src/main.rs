//! `vandconv` command line front end.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "vandconv", version, about = "Exact and simulated moments of random Vandermonde, Toeplitz and Hankel matrices")]
struct Cli {
    /// Directory holding the persistent coefficient cache.
    #[arg(long, global = true, env = "VANDCONV_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct ExprArgs {
    /// Moment expression, e.g. "D1 V1' V1" or "V1' V1 + V2' V2".
    #[arg(long)]
    expr: String,
    /// Phase of a Vandermonde matrix, `V1=uniform` or `V1=w`; repeatable.
    #[arg(long = "phase", value_name = "Vi=LABEL")]
    phases: Vec<String>,
    /// Aspect ratio of a Vandermonde matrix, `V1=1/2` or `V1=c`; repeatable.
    #[arg(long = "c", value_name = "Vi=RATIO")]
    ratios: Vec<String>,
    /// JSON attribute file: {"V1": {"phase": "w", "c": "1/2"}, "D1": {"moments": [...]}}.
    #[arg(long)]
    bindings: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Symbolic mixed-moment formulas of orders 1..=ORDER.
    Formula {
        #[command(flatten)]
        expr: ExprArgs,
        #[arg(long, default_value_t = 4)]
        order: usize,
        #[arg(long, default_value = "latex", value_parser = ["latex", "json", "text"])]
        format: String,
        /// raw, or scaled (alias mndef) for c·tr with c·tr(D^k) moments.
        #[arg(long, default_value = "scaled")]
        normalization: String,
        /// Express phase dependence through V-moments (v) or density integrals (i).
        #[arg(long, default_value = "v")]
        basis: String,
    },
    /// Whether an expression's moments depend on component spectra only.
    Classify {
        #[command(flatten)]
        expr: ExprArgs,
    },
    /// Moments of a combination from the moments of its components.
    Convolve(commands::ConvolveArgs),
    /// Recovers one component's moments from the combination's moments.
    Deconvolve(commands::DeconvolveArgs),
    /// Exact even moments of random Toeplitz or Hankel matrices.
    EnsembleMoments {
        #[arg(long)]
        kind: String,
        /// Number of even moments: tr(X^2), ..., tr(X^{2k}).
        #[arg(long, default_value_t = 4)]
        orders: usize,
        #[arg(long, default_value = "text", value_parser = ["text", "json"])]
        format: String,
    },
    /// Counts of partitions, alternating partitions and their rotation classes.
    PartitionStats {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "text", value_parser = ["text", "json"])]
        format: String,
    },
    /// Monte Carlo experiments.
    #[command(subcommand)]
    Simulate(commands::Simulation),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cache = cli.cache_dir.map(|d| d.join("coefficients.cache"));
    if let Some(path) = &cache {
        if let Err(e) = commands::load_cache(path) {
            eprintln!("error: cannot read cache {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Formula { expr, order, format, normalization, basis } => {
            commands::formula(&expr, order, &format, &normalization, &basis)
        }
        Command::Classify { expr } => commands::classify(&expr),
        Command::Convolve(a) => commands::convolve(&a),
        Command::Deconvolve(a) => commands::deconvolve(&a),
        Command::EnsembleMoments { kind, orders, format } => commands::ensemble_moments(&kind, orders, &format),
        Command::PartitionStats { n, format } => commands::partition_stats(n, &format),
        Command::Simulate(s) => commands::simulate(&s),
    };
    let result = result.and_then(|out| {
        if let Some(path) = &cache {
            commands::save_cache(path)?;
        }
        Ok(out)
    });
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

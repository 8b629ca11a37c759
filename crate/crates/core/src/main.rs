use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use werner_ree::report::{run, Command, Format, PGrid, RunConfig};
use werner_ree::solver::ToleranceSet;
use werner_ree::Error;

/// Relative entropy of entanglement of Werner-state tensor powers.
///
/// Exit codes: 0 success, 1 verification failure, 2 usage or I/O error.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Closed-form asymptotic values and branch labels over a p grid.
    Asymptotic(GridArgs),
    /// Certified solver values for n copies.
    Finite(GridArgs),
    /// Analytic bounds, solver value and asymptotic value side by side.
    Certify(GridArgs),
    /// Second differences of the asymptotic and finite-n curves.
    Convexity(GridArgs),
    /// Reduced-vs-dense cross-checks (defaults: d = 2,3 and n = 1,2).
    Oracle {
        #[command(flatten)]
        grid: GridArgs,
        /// Perturb dense results so every comparison must fail.
        #[arg(long)]
        inject_fault: bool,
        /// Seed for the random samples.
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Local dimensions, comma separated.
    #[arg(long, value_delimiter = ',')]
    d: Option<Vec<usize>>,
    /// Copy counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0.5)]
    p_start: f64,
    #[arg(long, default_value_t = 1.0)]
    p_stop: f64,
    #[arg(long, default_value_t = 0.01)]
    p_step: f64,
    /// Largest accepted duality gap, bits.
    #[arg(long, default_value_t = ToleranceSet::default().gap)]
    tol_gap: f64,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Output file (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FormatArg {
    Csv,
    Json,
}

fn build_config(cli: Cli) -> Result<RunConfig, Error> {
    let (command, args, inject_fault, seed) = match cli.command {
        Cmd::Asymptotic(a) => (Command::Asymptotic, a, false, 0),
        Cmd::Finite(a) => (Command::Finite, a, false, 0),
        Cmd::Certify(a) => (Command::Certify, a, false, 0),
        Cmd::Convexity(a) => (Command::Convexity, a, false, 0),
        Cmd::Oracle {
            grid,
            inject_fault,
            seed,
        } => (Command::Oracle, grid, inject_fault, seed),
    };
    let (default_d, default_n) = match command {
        Command::Oracle => (vec![2, 3], vec![1, 2]),
        _ => (vec![3], vec![1]),
    };
    let tol = ToleranceSet {
        gap: args.tol_gap,
        ..ToleranceSet::default()
    };
    Ok(RunConfig {
        command,
        d_list: args.d.unwrap_or(default_d),
        n_list: args.n.unwrap_or(default_n),
        grid: PGrid::new(args.p_start, args.p_stop, args.p_step)?,
        tol,
        format: match args.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        },
        out: args.out,
        inject_fault,
        seed,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match build_config(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let output = match run(&config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match &config.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &output.text) {
                let err = Error::Io {
                    path: path.display().to_string(),
                    message: e.to_string(),
                };
                eprintln!("error: {err}");
                return ExitCode::from(2);
            }
        }
        None => print!("{}", output.text),
    }
    if output.failed {
        eprintln!("verification failed");
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

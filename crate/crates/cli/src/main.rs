use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eqk_cli::{run_config, write_csv, CliError, Command};

#[derive(Parser)]
#[command(name = "eqk", version, about = "Kernel approximation experiments: RFF, quantum readouts, bounds")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Sup error of random Fourier features over a grid, per (D, seed).
    RffSweep(Common),
    /// Quantum readout of RFF against the classical estimate.
    QrffVerify(Common),
    /// Projected / composition kernel against RFF on preprocessed inputs.
    ProjectedDemo(Common),
    /// Coefficient PSD test against Gram eigenvalues for trig polynomials.
    PsdCheck(Common),
    /// Feature-dimension and finite-difference precision calculator.
    Bounds(Common),
    /// Landmark Mercer truncation, Nystrom features and their quantum readout.
    MercerDemo(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config file.
    #[arg(long)]
    config: PathBuf,
    /// CSV output path (overrides the config; stdout if neither is set).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override: `1,2,3` or `0..50`.
    #[arg(long)]
    seeds: Option<String>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn run(cmd: Command, args: Common) -> Result<(), CliError> {
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    let (output, config_out) = run_config(cmd, &args.config, args.seeds.as_deref())?;
    for n in &output.notes {
        eprintln!("{n}");
    }
    match args.out.or(config_out) {
        Some(path) => {
            let file = std::fs::File::create(&path)?;
            write_csv(std::io::BufWriter::new(file), &output.rows)?;
            eprintln!("wrote {} rows to {}", output.rows.len(), path.display());
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_csv(&mut lock, &output.rows)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Sub::RffSweep(a) => (Command::RffSweep, a),
        Sub::QrffVerify(a) => (Command::QrffVerify, a),
        Sub::ProjectedDemo(a) => (Command::ProjectedDemo, a),
        Sub::PsdCheck(a) => (Command::PsdCheck, a),
        Sub::Bounds(a) => (Command::Bounds, a),
        Sub::MercerDemo(a) => (Command::MercerDemo, a),
    };
    match run(cmd, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

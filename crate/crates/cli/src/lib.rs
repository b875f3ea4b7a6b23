//! Experiment runner for the `eqk` library.
//!
//! Each subcommand reads one TOML config and emits CSV rows with the fixed
//! header `experiment,kernel,D,seed,metric,value,wall_time_ms`. Everything
//! except the wall-time column is a deterministic function of the config and
//! seeds.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

pub use commands::{cmd_bounds, cmd_mercer_demo, cmd_projected_demo, cmd_psd_check, cmd_qrff_verify, cmd_rff_sweep};
pub use error::{CliError, Result};
pub use output::{write_csv, CommandOutput, ResultRow};

use config::SeedSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    RffSweep,
    QrffVerify,
    ProjectedDemo,
    PsdCheck,
    Bounds,
    MercerDemo,
}

/// Runs `command` on the config at `path`. Returns the output together with
/// the output path named in the config, if any.
pub fn run_config(command: Command, path: &Path, seeds: Option<&str>) -> Result<(CommandOutput, Option<PathBuf>)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    run_text(command, &text, seeds)
}

pub fn run_text(command: Command, text: &str, seeds: Option<&str>) -> Result<(CommandOutput, Option<PathBuf>)> {
    let seeds = seeds.map(SeedSpec::parse_override).transpose()?;
    let no_seeds = |s: &Option<SeedSpec>, name: &str| match s {
        Some(_) => Err(CliError::Config(format!("{name} takes no seeds"))),
        None => Ok(()),
    };
    match command {
        Command::RffSweep => {
            let mut c: config::RffSweepConfig = config::parse(text)?;
            if let Some(s) = seeds {
                c.seeds = s;
            }
            Ok((cmd_rff_sweep(&c)?, c.output))
        }
        Command::QrffVerify => {
            let mut c: config::QrffVerifyConfig = config::parse(text)?;
            if let Some(s) = seeds {
                c.seeds = s;
            }
            Ok((cmd_qrff_verify(&c)?, c.output))
        }
        Command::ProjectedDemo => {
            let mut c: config::ProjectedDemoConfig = config::parse(text)?;
            if let Some(s) = seeds {
                c.seeds = s;
            }
            Ok((cmd_projected_demo(&c)?, c.output))
        }
        Command::PsdCheck => {
            no_seeds(&seeds, "psd-check")?;
            let c: config::PsdCheckConfig = config::parse(text)?;
            Ok((cmd_psd_check(&c)?, c.output))
        }
        Command::Bounds => {
            no_seeds(&seeds, "bounds")?;
            let c: config::BoundsConfig = config::parse(text)?;
            Ok((cmd_bounds(&c)?, c.output))
        }
        Command::MercerDemo => {
            no_seeds(&seeds, "mercer-demo")?;
            let c: config::MercerDemoConfig = config::parse(text)?;
            Ok((cmd_mercer_demo(&c)?, c.output))
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use bielliptic_jets::report::{error_record, run, Mode, RunConfig, Settings, StringOrInts};
use bielliptic_jets::Error;
use clap::{Args, Parser, Subcommand};

/// Exhaustive k-jet ampleness certificates on hyperelliptic surfaces.
#[derive(Parser)]
#[command(name = "bjets", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify every configuration of the selected types and k range.
    Verify(Flags),
    /// Recompute the multiplicity table and diff it against the golden copy.
    Table(Flags),
    /// Print the surface catalog and diff it against the golden copy.
    Catalog(Flags),
    /// Run verify with `--class` as the line bundle; succeeds iff something fails.
    NegativeControl(Flags),
    /// Re-solve every implication instance and compare with a box scan.
    LpCheck(Flags),
}

#[derive(Args)]
struct Flags {
    /// Surface types: `all`, `1,3,5`, `2..4`.
    #[arg(long)]
    types: Option<String>,
    /// Jet order range, inclusive: `2..5` or `4`.
    #[arg(long)]
    k: Option<String>,
    /// Maximum number of points per configuration.
    #[arg(long = "r-max")]
    r_max: Option<usize>,
    /// Line bundle `a,b`, or relative to k as in `k+1,k+2`.
    #[arg(long)]
    class: Option<String>,
    /// Artifact path (certificate bundle for verify runs).
    #[arg(long)]
    out: Option<PathBuf>,
    /// `json` or `text`.
    #[arg(long)]
    format: Option<String>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// TOML file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn resolve(mode: Mode, flags: Flags) -> Result<RunConfig, Error> {
    let file = flags.config.as_deref().map(Settings::load).transpose()?.unwrap_or_default();
    let cli = Settings {
        types: flags.types.map(StringOrInts::Text),
        k: flags.k.map(StringOrInts::Text),
        r_max: flags.r_max,
        class: flags.class,
        out: flags.out,
        format: flags.format,
        jobs: flags.jobs,
    };
    RunConfig::from_settings(mode, cli.over(file))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, flags) = match cli.command {
        Command::Verify(f) => (Mode::Verify, f),
        Command::Table(f) => (Mode::Table, f),
        Command::Catalog(f) => (Mode::Catalog, f),
        Command::NegativeControl(f) => (Mode::NegativeControl, f),
        Command::LpCheck(f) => (Mode::LpCheck, f),
    };
    let outcome = resolve(mode, flags).and_then(|cfg| run(&cfg, &mut std::io::stdout().lock()));
    match outcome {
        Ok(code) => ExitCode::from(u8::try_from(code).unwrap_or(1)),
        Err(e) => {
            eprintln!("{}", error_record(&e));
            ExitCode::from(2)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use symlab_core::runner::{emit_record, execute, load_config, record_json, Command, Config};

/// Periodic solutions of u'' + g(u) = f: solving, symmetry preservation and breaking.
#[derive(Parser, Debug)]
#[command(name = "symlab", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Directory for the JSON record and CSV curves.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Overrides the seed in the config.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,

    /// Print the full record as JSON instead of a summary.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Solve the periodic problem (contraction or Newton).
    Solve,
    /// Check that a 2π/s-periodic forcing yields a 2π/s-periodic solution.
    PreserveCheck,
    /// Construct a symmetric forcing with an asymmetric solution.
    BreakSearch,
    /// Morse indices on the complement of V_s at the crossing windows.
    Morse,
    /// Eigenvalues j² and multiplicities for j = 0..=J.
    Spectrum {
        #[arg(long, value_name = "J")]
        max_j: usize,
    },
    /// Check registered derivatives against finite differences.
    AuditG,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Sub::Solve => Command::Solve,
        Sub::PreserveCheck => Command::PreserveCheck,
        Sub::BreakSearch => Command::BreakSearch,
        Sub::Morse => Command::Morse,
        Sub::Spectrum { max_j } => Command::Spectrum { max_j },
        Sub::AuditG => Command::AuditG,
    };
    let needs_config = !matches!(command, Command::Spectrum { .. } | Command::AuditG);

    let config = match &cli.config {
        Some(path) => match load_config(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None if needs_config => {
            eprintln!("error: `{}` requires --config <PATH>", command.name());
            return ExitCode::from(2);
        }
        None => Config::default(),
    };
    let config = match cli.seed {
        Some(seed) => config.with_seed(seed),
        None => config,
    };

    let outcome = match execute(command, &config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };

    let mut written = Vec::new();
    if let Some(dir) = &cli.out {
        match emit_record(dir, &outcome.manifest, &outcome.record, &outcome.grids) {
            Ok(paths) => written = paths,
            Err(e) => {
                eprintln!("error: cannot write to {}: {e}", dir.display());
                return ExitCode::from(2);
            }
        }
    }

    if cli.json {
        print!("{}", record_json(&outcome.manifest, &outcome.record));
    } else {
        println!("{}", outcome.summary);
        println!("verdict: {}", if outcome.passed { "PASS" } else { "FAIL" });
        for p in &written {
            println!("wrote {}", p.display());
        }
    }
    ExitCode::from(outcome.exit_code() as u8)
}

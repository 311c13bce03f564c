use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mechqed_cli::run::{lookup, output_dir};
use mechqed_cli::{catalog_entry, execute, load_scenario, write_artifacts, CliError, ScenarioConfig, CATALOG};

#[derive(Parser)]
#[command(name = "mechqed", version, about = "Atom-cantilever coupling: derive, simulate, optimize")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (or a catalog name) and write report.json plus CSV tables.
    Run {
        config: String,
        /// Overrides the seed in the file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Worker threads (default: all cores). Results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the shipped scenarios.
    List,
    /// Print a shipped scenario file.
    Show { name: String },
    /// Print one derived value, or a dotted path into the config.
    Derive {
        config: String,
        #[arg(long)]
        key: String,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, seed, out_dir, threads } => {
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
            }
            let mut cfg = load_scenario(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let artifacts = execute(&cfg)?;
            let dir = output_dir(&cfg, out_dir.as_deref());
            for w in artifacts.warnings() {
                eprintln!("warning: {w}");
            }
            write_artifacts(&dir, &artifacts)?;
            println!("{}", dir.display());
        }
        Command::List => {
            for (name, text) in CATALOG {
                let cfg = ScenarioConfig::from_toml(text)?;
                println!("{name:<30} {:<10} {}", format!("{:?}", cfg.kind).to_lowercase(), cfg.description);
            }
        }
        Command::Show { name } => {
            let text = catalog_entry(&name).ok_or_else(|| CliError::Config(format!("no catalog entry named '{name}'")))?;
            print!("{text}");
        }
        Command::Derive { config, key } => {
            let cfg = load_scenario(&config)?;
            let v = lookup(&cfg, &key)?;
            match v {
                serde_json::Value::String(s) => println!("{s}"),
                other => println!("{other}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

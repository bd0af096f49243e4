use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use topamp_cli::{config, load_source, presets, run, CliError};

#[derive(Parser)]
#[command(name = "topamp", version, about = "Run topological amplification experiments from TOML configs")]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true, env = "TOPAMP_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a config file or bundled preset and write its artifacts.
    Run {
        config: String,
        /// Output directory, overriding `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List bundled presets.
    ListPresets,
    /// Check a config against the schema without running it.
    Validate { config: String },
}

fn list_presets() {
    for p in presets::all() {
        println!("{:<14} {}", p.name, p.description());
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::schema("--threads", &e.to_string()))?;
    }
    match cli.command.unwrap_or(Command::ListPresets) {
        Command::ListPresets => list_presets(),
        Command::Validate { config } => {
            let src = load_source(&config)?;
            let cfg = config::parse(&src.text)?;
            println!("{}: ok ({} task)", src.label, cfg.task.name());
        }
        Command::Run { config, out } => {
            let src = load_source(&config)?;
            let report = run(&src, out.as_deref())?;
            for f in &report.files {
                println!("{}", report.out_dir.join(&f.name).display());
            }
            println!("{}", report.manifest.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

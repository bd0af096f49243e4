//! Command-line front end for `topamp`: strict TOML experiment configs,
//! parallel sweeps and reproducible CSV/JSON artifacts.

pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod table;
pub mod tasks;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::ExperimentConfig;
pub use error::CliError;

/// Where a config came from.
#[derive(Clone, Debug)]
pub struct Source {
    pub label: String,
    pub text: String,
}

/// Resolves a file path or a bundled preset name.
pub fn load_source(arg: &str) -> Result<Source, CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: arg.to_string(), source })?;
        return Ok(Source { label: arg.to_string(), text });
    }
    let name = arg.strip_suffix(".cfg").or_else(|| arg.strip_suffix(".toml")).unwrap_or(arg);
    presets::get(name)
        .map(|p| Source { label: format!("preset:{}", p.name), text: p.text.to_string() })
        .ok_or_else(|| CliError::NotFound(arg.to_string()))
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub manifest: PathBuf,
    pub files: Vec<output::FileEntry>,
}

/// Parses, evaluates and writes one experiment.
pub fn run(src: &Source, out_override: Option<&Path>) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let cfg = config::parse(&src.text)?;
    let out = tasks::run_task(&cfg)?;
    let dir = out_override.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.dir.clone());
    let files = output::write_outputs(&dir, &out, &cfg.output.formats, &src.text)?;
    let manifest = output::Manifest {
        tool: "topamp",
        cli_version: env!("CARGO_PKG_VERSION"),
        core_version: topamp::VERSION,
        source: src.label.clone(),
        task: cfg.task.name(),
        config_sha256: output::sha256_hex(src.text.as_bytes()),
        seed: cfg.seed,
        threads: rayon::current_num_threads(),
        wall_time_s: start.elapsed().as_secs_f64(),
        timestamp: chrono::Utc::now().to_rfc3339(),
        files: files.clone(),
    };
    let manifest = output::write_manifest(&dir, &manifest)?;
    Ok(RunReport { out_dir: dir, manifest, files })
}

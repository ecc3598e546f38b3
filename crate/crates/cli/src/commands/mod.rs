pub mod game;
pub mod gen_data;
pub mod report;
pub mod train;

use std::path::Path;

use crate::config::{parse_seeds, ExperimentConfig};
use crate::{CliError, Common};

/// Config file (or defaults) with command-line overrides applied.
pub fn resolve_config(common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = &common.seeds {
        cfg.seeds = parse_seeds(s)?;
    }
    if let Some(o) = &common.out {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

pub fn thread_pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    if workers == 0 {
        return Err(CliError::Config("--workers must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Run(e.to_string()))
}

pub fn create_dir(p: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(p).map_err(|e| CliError::Run(format!("cannot create {}: {e}", p.display())))
}

pub fn write_json(p: &Path, v: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    std::fs::write(p, text).map_err(|e| CliError::Run(format!("cannot write {}: {e}", p.display())))
}

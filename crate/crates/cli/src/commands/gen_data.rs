use std::fs::File;
use std::io::BufWriter;

use clam_core::data::write_csv;

use super::{create_dir, resolve_config};
use crate::config::DatasetSource;
use crate::{CliError, Common};

/// Writes `train.csv` and `test.csv` for the first configured seed. The
/// output depends only on the config and the seed.
pub fn run(common: &Common) -> Result<(), CliError> {
    let cfg = resolve_config(common)?;
    if !matches!(cfg.dataset, DatasetSource::Synthetic | DatasetSource::SyntheticImages) {
        return Err(CliError::Config("gen-data needs a synthetic dataset".into()));
    }
    cfg.validate()?;
    let seed = *cfg.seeds.first().ok_or_else(|| CliError::Config("no seeds".into()))?;
    let (train, test) = cfg.load_data(seed)?;
    create_dir(&cfg.output_dir)?;
    for (name, ds) in [("train.csv", Some(&train)), ("test.csv", test.as_ref())] {
        let Some(ds) = ds else { continue };
        let path = cfg.output_dir.join(name);
        let f = File::create(&path).map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))?;
        write_csv(ds, BufWriter::new(f)).map_err(|e| CliError::Run(e.to_string()))?;
    }
    eprintln!("clam: wrote {} and {} samples to {}", train.len(), test.map_or(0, |t| t.len()), cfg.output_dir.display());
    Ok(())
}

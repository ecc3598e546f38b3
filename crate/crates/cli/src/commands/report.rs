use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clam_core::metrics::aggregate_scalars;
use serde::Deserialize;

use super::create_dir;
use crate::{CliError, Common};

/// One row of a `runs.csv` written by `clam train`.
#[derive(Debug, Clone, Deserialize)]
pub struct RunRow {
    pub method: String,
    pub augmentation: String,
    pub seed: u64,
    pub range: f64,
    pub worst_class: usize,
    pub worst_class_acc: f64,
}

pub fn read_runs(dir: &Path) -> Result<Vec<RunRow>, CliError> {
    let path = dir.join("runs.csv");
    let mut r = csv::Reader::from_path(&path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    r.deserialize()
        .map(|row| row.map_err(|e| CliError::Config(format!("{}: {e}", path.display()))))
        .collect()
}

struct Pair<'a> {
    with: &'a RunRow,
    without: &'a RunRow,
}

/// Pairs every augmented run with the unaugmented run of the same method
/// and seed. Returns the pairs and a description of each unpaired run.
fn pair_runs(rows: &[RunRow]) -> (Vec<Pair<'_>>, Vec<String>) {
    let mut plain: BTreeMap<(&str, u64), &RunRow> = BTreeMap::new();
    let mut warnings = Vec::new();
    for r in rows.iter().filter(|r| r.augmentation == "none") {
        if plain.insert((&r.method, r.seed), r).is_some() {
            warnings.push(format!("duplicate unaugmented run {} seed {}; using the last one", r.method, r.seed));
        }
    }
    let mut used = std::collections::BTreeSet::new();
    let mut pairs = Vec::new();
    for r in rows.iter().filter(|r| r.augmentation != "none") {
        match plain.get(&(r.method.as_str(), r.seed)) {
            Some(&without) => {
                used.insert((r.method.as_str(), r.seed));
                pairs.push(Pair { with: r, without });
            }
            None => warnings.push(format!("unpaired run {} {} seed {}: no unaugmented counterpart", r.method, r.augmentation, r.seed)),
        }
    }
    for (k, r) in &plain {
        if !used.contains(k) {
            warnings.push(format!("unpaired run {} none seed {}: no augmented counterpart", r.method, r.seed));
        }
    }
    (pairs, warnings)
}

pub fn run(run_dirs: &[PathBuf], common: &Common) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for d in run_dirs {
        rows.extend(read_runs(d)?);
    }
    let (pairs, warnings) = pair_runs(&rows);
    for w in &warnings {
        eprintln!("clam: warning: {w}");
    }
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("report"));
    create_dir(&out)?;

    let mut diff = csv::Writer::from_path(out.join("range_difference.csv"))?;
    diff.write_record(["method", "seed", "augmentation", "range_with", "range_without", "range_difference"])?;
    let mut worst = csv::Writer::from_path(out.join("worst_class.csv"))?;
    worst.write_record([
        "method",
        "seed",
        "augmentation",
        "worst_class_with",
        "worst_class_acc_with",
        "worst_class_without",
        "worst_class_acc_without",
    ])?;
    let mut by_method: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for p in &pairs {
        let d = p.with.range - p.without.range;
        by_method.entry(&p.with.method).or_default().push(d);
        diff.write_record([
            p.with.method.clone(),
            p.with.seed.to_string(),
            p.with.augmentation.clone(),
            p.with.range.to_string(),
            p.without.range.to_string(),
            d.to_string(),
        ])?;
        worst.write_record([
            p.with.method.clone(),
            p.with.seed.to_string(),
            p.with.augmentation.clone(),
            p.with.worst_class.to_string(),
            p.with.worst_class_acc.to_string(),
            p.without.worst_class.to_string(),
            p.without.worst_class_acc.to_string(),
        ])?;
    }
    diff.flush()?;
    worst.flush()?;

    let mut summary = csv::Writer::from_path(out.join("range_difference_summary.csv"))?;
    summary.write_record(["method", "pairs", "range_difference"])?;
    for (m, ds) in &by_method {
        let s = aggregate_scalars(ds).map_err(|e| CliError::Run(e.to_string()))?;
        println!("{m}: mean range difference {s} over {} pairs", ds.len());
        summary.write_record([m.to_string(), ds.len().to_string(), s.to_string()])?;
    }
    summary.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, aug: &str, seed: u64, range: f64) -> RunRow {
        RunRow { method: method.into(), augmentation: aug.into(), seed, range, worst_class: 0, worst_class_acc: 0.5 }
    }

    #[test]
    fn pairs_by_method_and_seed() {
        let rows = vec![
            row("clam", "none", 0, 0.3),
            row("clam", "crop0.30", 0, 0.2),
            row("clam", "crop0.50", 0, 0.25),
            row("normal", "crop0.30", 0, 0.2),
            row("normal", "none", 1, 0.2),
        ];
        let (pairs, warnings) = pair_runs(&rows);
        assert_eq!(pairs.len(), 2);
        assert!(pairs.iter().all(|p| p.without.range == 0.3));
        assert_eq!(warnings.len(), 2);
    }
}

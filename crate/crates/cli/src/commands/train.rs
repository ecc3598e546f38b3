use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use clam_core::classifier::{train_method, TrainConfig, TrainResult};
use clam_core::data::{AugmentationSpec, Dataset, SampleShape};
use clam_core::metrics::{aggregate_reports, fairness_report, FairnessReport};
use rayon::prelude::*;

use super::{create_dir, resolve_config, thread_pool, write_json};
use crate::config::ExperimentConfig;
use crate::{CliError, Common};

type Data = Arc<(Dataset<f64>, Option<Dataset<f64>>)>;

struct Job {
    method: String,
    augmentation: AugmentationSpec,
    seed: u64,
    data: Data,
}

impl Job {
    fn name(&self) -> String {
        format!("{}_{}_seed{}", self.method, self.augmentation.tag(), self.seed)
    }
}

struct Finished {
    job: Job,
    result: TrainResult<f64>,
    report: FairnessReport<f64>,
    split: &'static str,
}

pub const RUNS_HEADER: [&str; 12] =
    ["method", "augmentation", "seed", "split", "std", "cov", "range", "mean_acc", "worst_acc", "worst_class", "worst_class_acc", "file"];

pub fn run(common: &Common) -> Result<(), CliError> {
    let cfg = resolve_config(common)?;
    cfg.validate()?;
    let pool = thread_pool(common.workers)?;
    let jobs = plan(&cfg)?;
    let finished: Vec<Finished> = pool.install(|| jobs.into_par_iter().map(|job| execute(&cfg, job)).collect::<Result<_, _>>())?;
    write_outputs(&cfg, &finished)?;
    eprintln!("clam: {} runs written to {}", finished.len(), cfg.output_dir.display());
    Ok(())
}

/// Loads data once per distinct seed and expands the run grid in a fixed
/// order: seeds, then augmentations, then methods.
fn plan(cfg: &ExperimentConfig) -> Result<Vec<Job>, CliError> {
    let mut cache: BTreeMap<Option<u64>, Data> = BTreeMap::new();
    let mut jobs = Vec::new();
    for &seed in &cfg.seeds {
        let key = cfg.data_depends_on_seed().then_some(seed);
        let data = match cache.get(&key) {
            Some(d) => d.clone(),
            None => {
                let d: Data = Arc::new(cfg.load_data(seed)?);
                check_data(cfg, &d)?;
                cache.insert(key, d.clone());
                d
            }
        };
        for augmentation in cfg.augmentations() {
            for method in &cfg.methods {
                jobs.push(Job { method: method.clone(), augmentation, seed, data: data.clone() });
            }
        }
    }
    Ok(jobs)
}

fn check_data(cfg: &ExperimentConfig, data: &Data) -> Result<(), CliError> {
    let (tr, te) = &**data;
    if tr.is_empty() || te.as_ref().is_some_and(|t| t.is_empty()) {
        return Err(CliError::Config("empty dataset".into()));
    }
    if tr.n_classes() < 2 {
        return Err(CliError::Config(format!("dataset has {} classes, need at least 2", tr.n_classes())));
    }
    cfg.check_simplex(tr.n_classes())?;
    let image = matches!(tr.shape(), SampleShape::Image { .. });
    if !image && cfg.augmentations().iter().any(|a| !a.is_none()) {
        return Err(CliError::Config("image augmentation requested for a flat dataset".into()));
    }
    Ok(())
}

fn execute(cfg: &ExperimentConfig, job: Job) -> Result<Finished, CliError> {
    let spec = cfg.loss_spec(&job.method)?;
    let tcfg = TrainConfig {
        epochs: cfg.epochs,
        iterations_per_epoch: cfg.iterations_per_epoch,
        batch_size: cfg.batch_size,
        learning_rate: cfg.learning_rate,
        seed: job.seed,
        architecture: cfg.architecture(),
        augmentation: job.augmentation,
        full_pass_accuracy: cfg.full_pass_accuracy,
    };
    let (tr, te) = &*job.data;
    let fail = |e: clam_core::Error| CliError::Run(format!("{}: {e}", job.name()));
    let result = train_method(tr, te.as_ref(), &tcfg, &spec).map_err(fail)?;
    let (acc, split) = match result.final_test_acc() {
        Some(v) => (v, "test"),
        None => (result.final_train_acc(), "train"),
    };
    let report = fairness_report(acc, cfg.worst_fraction).map_err(fail)?;
    Ok(Finished { job, result, report, split })
}

fn worst_class(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, i| if v[i] < v[b] { i } else { b })
}

fn write_outputs(cfg: &ExperimentConfig, runs: &[Finished]) -> Result<(), CliError> {
    let out = &cfg.output_dir;
    create_dir(&out.join("runs"))?;
    create_dir(&out.join("curves"))?;
    write_json(&out.join("config.json"), &serde_json::to_value(cfg)?)?;

    let mut table = csv::Writer::from_path(out.join("runs.csv"))?;
    table.write_record(RUNS_HEADER)?;
    for r in runs {
        let name = r.job.name();
        let tcfg = serde_json::json!({
            "method": r.job.method,
            "augmentation": r.job.augmentation,
            "seed": r.job.seed,
            "epochs": cfg.epochs,
            "batch_size": cfg.batch_size,
            "learning_rate": cfg.learning_rate,
            "architecture": cfg.architecture(),
        });
        let json = r.result.to_json(&tcfg, cfg.worst_fraction).map_err(|e| CliError::Run(e.to_string()))?;
        write_json(&out.join("runs").join(format!("{name}.json")), &json)?;
        write_curve(&out.join("curves").join(format!("{name}.csv")), &r.result)?;

        let wc = worst_class(&r.report.per_class);
        let mut row = vec![r.job.method.clone(), r.job.augmentation.tag(), r.job.seed.to_string(), r.split.to_string()];
        row.extend(r.report.csv_values().iter().map(|x| x.to_string()));
        row.extend([wc.to_string(), r.report.per_class[wc].to_string(), format!("runs/{name}.json")]);
        table.write_record(&row)?;
    }
    table.flush()?;

    // the headline rows cover the configured augmentation only
    let headline: Vec<&Finished> = runs
        .iter()
        .filter(|r| r.job.augmentation.is_none() == (cfg.augmentation == crate::config::AugmentationKind::None))
        .collect();
    write_aggregate(&out.join("aggregate.csv"), cfg, &headline)?;
    if cfg.include_unaugmented && cfg.augmentation != crate::config::AugmentationKind::None {
        let plain: Vec<&Finished> = runs.iter().filter(|r| r.job.augmentation.is_none()).collect();
        write_aggregate(&out.join("aggregate_unaugmented.csv"), cfg, &plain)?;
    }
    Ok(())
}

/// Column order: method, std, cov, range, mean_acc, worst_acc; cells are
/// `mean±std` across runs.
fn write_aggregate(path: &Path, cfg: &ExperimentConfig, runs: &[&Finished]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["method"];
    header.extend(FairnessReport::<f64>::CSV_HEADER);
    w.write_record(&header)?;
    for m in &cfg.methods {
        let reports: Vec<FairnessReport<f64>> = runs.iter().filter(|r| &r.job.method == m).map(|r| r.report.clone()).collect();
        if reports.is_empty() {
            continue;
        }
        let agg = aggregate_reports(&reports).map_err(|e| CliError::Run(e.to_string()))?;
        let mut row = vec![m.clone()];
        row.extend(agg.csv_cells());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-epoch curve: losses, accuracy summaries and class weights.
fn write_curve(path: &Path, r: &TrainResult<f64>) -> Result<(), CliError> {
    let n = r.final_weights.len();
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> =
        ["epoch", "mean_loss", "train_mean_acc", "train_std", "test_mean_acc", "test_std"].map(String::from).to_vec();
    header.extend((1..=n).map(|i| format!("w_{i}")));
    header.extend((1..=n).map(|i| format!("train_acc_{i}")));
    header.extend((1..=n).map(|i| format!("test_acc_{i}")));
    w.write_record(&header)?;
    let stats = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let s = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt();
        (m.to_string(), s.to_string())
    };
    for e in &r.epochs {
        let (trm, trs) = stats(&e.train_acc);
        let (tem, tes) = e.test_acc.as_deref().map_or((String::new(), String::new()), stats);
        let mut row = vec![(e.epoch + 1).to_string(), e.mean_loss.to_string(), trm, trs, tem, tes];
        row.extend(e.weights.iter().map(|x| x.to_string()));
        row.extend(e.train_acc.iter().map(|x| x.to_string()));
        match &e.test_acc {
            Some(t) => row.extend(t.iter().map(|x| x.to_string())),
            None => row.extend(std::iter::repeat_n(String::new(), n)),
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

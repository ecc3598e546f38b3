use std::path::{Path, PathBuf};

use clam_core::game::{run_theorem_schedule, DiagnosticsSummary};
use clam_core::{run_mw_game, verify_theorem1, MwConfig, PayoffMatrix, Projection, RestrictedSimplex};
use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{create_dir, thread_pool, write_json};
use crate::config::parse_seeds;
use crate::CliError;

#[derive(Args, Debug, Clone)]
pub struct GameArgs {
    /// Number of rows (classes). Ignored when --matrix is a file.
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    /// Number of columns for random matrices.
    #[arg(long, default_value_t = 8)]
    pub m: usize,
    /// Rounds T.
    #[arg(long, short = 'T', default_value_t = 200)]
    pub rounds: usize,
    /// Step size, or `theorem` for the two-pass schedule.
    #[arg(long, default_value = "theorem")]
    pub tau: String,
    #[arg(long, default_value_t = 0.01)]
    pub u_min: f64,
    /// `random` (uniform entries in [0, 1]) or a headerless CSV file.
    #[arg(long, default_value = "random")]
    pub matrix: String,
    #[arg(long, default_value = "proof_clip")]
    pub projection: String,
    /// Seeds as `0,1,2` or `0..5`.
    #[arg(long, default_value = "0")]
    pub seeds: String,
    #[arg(long, default_value = "game")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tau {
    Fixed(f64),
    Theorem,
}

#[derive(Serialize)]
struct Diagnostics {
    seed: u64,
    n: usize,
    m: usize,
    tau: f64,
    u_min: f64,
    projection: Projection,
    #[serde(flatten)]
    summary: DiagnosticsSummary,
    per_step_holds: bool,
    summed_bound_holds: bool,
    theorem_bound_holds: bool,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_tau(s: &str) -> Result<Tau, CliError> {
    if s.eq_ignore_ascii_case("theorem") {
        return Ok(Tau::Theorem);
    }
    let t: f64 = s.parse().map_err(|_| bad(format!("bad tau '{s}'")))?;
    if !(t.is_finite() && t > 0.0) {
        return Err(bad(format!("tau must be positive, got {t}")));
    }
    Ok(Tau::Fixed(t))
}

pub fn load_matrix(path: &Path) -> Result<PayoffMatrix<f64>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|x| x.trim().parse::<f64>().map_err(|_| bad(format!("{}: bad entry '{x}'", path.display()))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    PayoffMatrix::new(rows).map_err(|e| bad(format!("{}: {e}", path.display())))
}

pub fn run(args: &GameArgs) -> Result<(), CliError> {
    let tau = parse_tau(&args.tau)?;
    let projection: Projection = args.projection.parse().map_err(|e| bad(format!("{e}")))?;
    if tau == Tau::Theorem && projection != Projection::ProofClip {
        return Err(bad("tau = theorem requires the proof_clip projection"));
    }
    let seeds = parse_seeds(&args.seeds)?;
    let fixed = (args.matrix != "random").then(|| load_matrix(Path::new(&args.matrix))).transpose()?;
    let (n, m) = fixed.as_ref().map_or((args.n, args.m), |x| (x.n_rows(), x.n_cols()));
    if n < 2 || m < 1 {
        return Err(bad(format!("need n >= 2 and m >= 1 (n = {n}, m = {m})")));
    }
    let simplex = RestrictedSimplex::new(n, args.u_min).map_err(|e| bad(format!("u_min: {e}")))?;
    let pool = thread_pool(args.workers)?;

    let play = |seed: u64| -> Result<(u64, String, Diagnostics), CliError> {
        let matrix = match &fixed {
            Some(x) => x.clone(),
            None => PayoffMatrix::random(n, m, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(|e| CliError::Run(e.to_string()))?,
        };
        let run_err = |e: clam_core::Error| CliError::Run(format!("seed {seed}: {e}"));
        let (trace, diag) = match tau {
            Tau::Theorem if args.rounds > 0 => run_theorem_schedule(&matrix, args.rounds, &simplex).map_err(run_err)?,
            _ => {
                // zero rounds with the theorem schedule: nothing to tune
                let t = if let Tau::Fixed(t) = tau { t } else { 0.0 };
                let cfg = MwConfig::new(t, projection).map_err(run_err)?;
                let trace = run_mw_game(&matrix, args.rounds, &cfg, &simplex, None).map_err(run_err)?;
                let diag = verify_theorem1(&trace, &simplex, t).map_err(run_err)?;
                (trace, diag)
            }
        };
        let t = trace.tau;
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).map_err(run_err)?;
        let out = Diagnostics {
            seed,
            n,
            m,
            tau: t,
            u_min: args.u_min,
            projection,
            summary: diag.summary(),
            per_step_holds: diag.per_step_holds(),
            summed_bound_holds: diag.summed_bound_holds(),
            theorem_bound_holds: diag.theorem_bound_holds(),
        };
        Ok((seed, String::from_utf8(buf).expect("csv is utf-8"), out))
    };
    let results: Vec<_> = pool.install(|| seeds.par_iter().map(|&s| play(s)).collect::<Result<Vec<_>, _>>())?;

    create_dir(&args.out)?;
    let mut violations = Vec::new();
    for (seed, trace_csv, diag) in &results {
        let dir = if results.len() == 1 { args.out.clone() } else { args.out.join(format!("seed{seed}")) };
        create_dir(&dir)?;
        std::fs::write(dir.join("trace.csv"), trace_csv)?;
        write_json(&dir.join("diagnostics.json"), &serde_json::to_value(diag)?)?;
        println!(
            "seed {seed}: T = {}, tau = {:.6}, lhs = {:.6}, best fixed = {:.6}, bound = {:.6}, violations = {}",
            diag.summary.rounds, diag.tau, diag.summary.lhs, diag.summary.best_fixed, diag.summary.rhs_theorem, diag.summary.per_step_violations
        );
        if diag.summary.valid && diag.summary.per_step_violations > 0 {
            violations.push(format!("seed {seed}: {} rounds", diag.summary.per_step_violations));
        }
    }
    if results.len() > 1 {
        let mut w = csv::Writer::from_path(args.out.join("summary.csv"))?;
        w.write_record(["seed", "tau", "lhs", "best_fixed", "rhs_theorem", "max_alpha", "per_step_violations"])?;
        for (seed, _, d) in &results {
            let s = &d.summary;
            w.write_record([
                seed.to_string(),
                d.tau.to_string(),
                s.lhs.to_string(),
                s.best_fixed.to_string(),
                s.rhs_theorem.to_string(),
                s.max_alpha.to_string(),
                s.per_step_violations.to_string(),
            ])?;
        }
        w.flush()?;
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Violation(violations.join("; ")))
    }
}

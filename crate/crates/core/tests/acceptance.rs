//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::{Duration, Instant};

use clam_core::classifier::{train_method, Architecture, ClassifierParams, TrainConfig, TrainResult};
use clam_core::data::{gen_synthetic, gen_synthetic_images, AugmentationSpec, ImageSpec, OverlapPair, SyntheticSpec};
use clam_core::game::{last_iterate_check, run_mw_game, run_theorem_schedule, verify_theorem1, PayoffMatrix};
use clam_core::losses::{LossSpec, SampleLoss};
use clam_core::metrics::{fairness_report, range_difference, spearman};
use clam_core::simplex::{min_linear_over_simplex, project, MwConfig, Projection, RestrictedSimplex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------------------------------------------------------------- games

fn random_game(seed: u64) -> (PayoffMatrix<f64>, RestrictedSimplex<f64>, f64) {
    let n = [2, 5, 10, 50][(seed % 4) as usize];
    let tau = [0.1, 1.0][((seed / 4) % 2) as usize];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = PayoffMatrix::random(n, 8, &mut rng).unwrap();
    (m, RestrictedSimplex::new(n, 0.01).unwrap(), tau)
}

fn per_step_inequality() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    for seed in 0..100 {
        let (m, s, tau) = random_game(seed);
        let tr = run_mw_game(&m, 200, &MwConfig::new(tau, Projection::ProofClip).unwrap(), &s, None).unwrap();
        let d = verify_theorem1(&tr, &s, tau).unwrap();
        violations += d.rounds.iter().filter(|r| r.excess() > 1e-9).count();
        worst = worst.max(d.max_excess);
    }
    outcome(violations == 0, format!("100 games x 200 rounds, violations {violations}, max excess {worst:.3e}"))
}

fn summed_bound() -> Outcome {
    let mut held = 0;
    let mut min_margin = f64::INFINITY;
    for seed in 0..100 {
        let (m, s, _) = random_game(seed);
        let (_, d) = run_theorem_schedule(&m, 200, &s).unwrap();
        let n = s.n() as f64;
        let t = 200.0;
        let rhs = (n.ln() / t) + (1.0 + d.max_alpha) * (n.ln() / t).sqrt();
        let margin = rhs - (d.lhs - d.best_fixed);
        min_margin = min_margin.min(margin);
        if margin >= 0.0 {
            held += 1;
        }
    }
    outcome(held == 100, format!("{held}/100 seeds, smallest margin {min_margin:.4}"))
}

fn game_value() -> Outcome {
    let pennies = PayoffMatrix::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let s = RestrictedSimplex::new(2, 0.1).unwrap();
    let (tr, _) = run_theorem_schedule(&pennies, 100_000, &s).unwrap();
    let avg = tr.mean_value().unwrap();
    // minimax over the restricted 2-simplex on a 1e-4 grid
    let mut grid_value = f64::INFINITY;
    let steps = 10_000;
    for k in 0..=steps {
        let w0 = k as f64 / steps as f64;
        let w = [w0, 1.0 - w0];
        if w.iter().any(|&x| x < s.u_min() - 1e-12) {
            continue;
        }
        let best = (0..2).map(|j| w[0] * pennies.get(0, j) + w[1] * pennies.get(1, j)).fold(f64::NEG_INFINITY, f64::max);
        grid_value = grid_value.min(best);
    }
    let pass = (avg - 0.5).abs() <= 0.02 && (avg - grid_value).abs() <= 0.01;
    outcome(pass, format!("T = 1e5 average {avg:.5}, grid minimax {grid_value:.5}"))
}

// ------------------------------------------------------------ simplex

fn random_restricted(rng: &mut ChaCha8Rng) -> RestrictedSimplex<f64> {
    let n = rng.random_range(2..=50);
    let u = rng.random_range(0.0..=1.0) / n as f64;
    RestrictedSimplex::new(n, u).unwrap()
}

fn f_value(v: &[f64], s: &RestrictedSimplex<f64>) -> f64 {
    min_linear_over_simplex(v, s).unwrap().1
}

fn proposition_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let tol = 1e-9;
    let (mut mono, mut schur, mut sym) = (0, 0, 0);
    for _ in 0..1000 {
        let s = random_restricted(&mut rng);
        let n = s.n();
        let v: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        // monotone: raise every component by a random eps >= 0
        let up: Vec<f64> = v.iter().map(|x| x + rng.random_range(0.0..0.5)).collect();
        if f_value(&up, &s) < f_value(&v, &s) - tol {
            mono += 1;
        }
        // Schur-concave: a chain of T-transforms yields a vector majorized by v
        let mut w = v.clone();
        for _ in 0..rng.random_range(1..=5) {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            let lam: f64 = rng.random();
            let (a, b) = (w[i], w[j]);
            w[i] = lam * a + (1.0 - lam) * b;
            w[j] = lam * b + (1.0 - lam) * a;
        }
        if f_value(&w, &s) < f_value(&v, &s) - tol {
            schur += 1;
        }
        // symmetric under a random permutation
        let mut p = v.clone();
        for i in (1..n).rev() {
            p.swap(i, rng.random_range(0..=i));
        }
        if (f_value(&p, &s) - f_value(&v, &s)).abs() > tol {
            sym += 1;
        }
    }
    // brute force on n = 3, step 1e-3
    let mut worst_gap: f64 = 0.0;
    for _ in 0..10 {
        let u = rng.random_range(0.0..1.0 / 3.0);
        let s = RestrictedSimplex::new(3, u).unwrap();
        let v: Vec<f64> = (0..3).map(|_| rng.random()).collect();
        let (_, exact) = min_linear_over_simplex(&v, &s).unwrap();
        let mut best = f64::INFINITY;
        for a in 0..=1000 {
            for b in 0..=(1000 - a) {
                let w = [a as f64 * 1e-3, b as f64 * 1e-3, 1.0 - (a + b) as f64 * 1e-3];
                if w.iter().all(|&x| x >= u - 1e-12) {
                    best = best.min(w[0] * v[0] + w[1] * v[1] + w[2] * v[2]);
                }
            }
        }
        worst_gap = worst_gap.max((best - exact).abs());
    }
    let pass = mono == 0 && schur == 0 && sym == 0 && worst_gap <= 2e-3;
    outcome(pass, format!("violations: monotone {mono}, Schur {schur}, symmetry {sym}; grid gap {worst_gap:.2e}"))
}

fn projection_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let tol = 1e-9;
    let (mut infeasible, mut not_idem, mut moved) = (0, 0, 0);
    for _ in 0..10_000 {
        let s = random_restricted(&mut rng);
        let n = s.n();
        let x: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.0..5.0) }).collect();
        if x.iter().sum::<f64>() <= 0.0 {
            continue;
        }
        for m in [Projection::ScaledClip, Projection::Euclidean] {
            let w = project(&x, &s, m).unwrap();
            let ws = w.as_slice();
            if (ws.iter().sum::<f64>() - 1.0).abs() > tol || ws.iter().any(|&wi| wi < s.u_min() - tol) {
                infeasible += 1;
            }
            let again = project(ws, &s, m).unwrap();
            if ws.iter().zip(again.as_slice()).any(|(a, b)| (a - b).abs() > tol) {
                not_idem += 1;
            }
        }
        // a feasible point built directly must be returned unchanged
        let r: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-6).collect();
        let rs: f64 = r.iter().sum();
        let feas: Vec<f64> = r.iter().map(|ri| s.u_min() + s.free_mass() * ri / rs).collect();
        for m in [Projection::ProofClip, Projection::ScaledClip, Projection::Euclidean] {
            let w = project(&feas, &s, m).unwrap();
            if w.as_slice().iter().zip(&feas).any(|(a, b)| (a - b).abs() > tol) {
                moved += 1;
            }
        }
    }
    let s = RestrictedSimplex::new(3, 0.15).unwrap();
    let witness = project(&[0.7_f64, 0.2, 0.1], &s, Projection::ProofClip).unwrap();
    let witness_ok = witness[2] < 0.15 && (witness[2] - 0.14286).abs() < 1e-5;
    let fixed = project(&[0.7, 0.2, 0.1], &s, Projection::ScaledClip).unwrap();
    let pass = infeasible == 0 && not_idem == 0 && moved == 0 && witness_ok && s.contains(fixed.as_slice());
    outcome(
        pass,
        format!(
            "10^4 inputs: infeasible {infeasible}, non-idempotent {not_idem}, moved feasible {moved}; single-pass clip witness w_3 = {:.5} < 0.15",
            witness[2]
        ),
    )
}

// ---------------------------------------------------------- gradients

fn relative_gradient_error(rng: &mut ChaCha8Rng, arch: Architecture, loss: &SampleLoss<f64>) -> f64 {
    let d = rng.random_range(2..6);
    let n = rng.random_range(2..6);
    let b = rng.random_range(1..5);
    let p = ClassifierParams::<f64>::init(arch, d, n, rng).unwrap();
    // larger biases push probabilities away from uniform
    let mut p = p;
    for l in &mut p.layers {
        l.b.iter_mut().for_each(|x| *x = rng.random_range(-0.5..0.5));
    }
    let x: Vec<f64> = (0..b * d).map(|_| rng.random_range(-2.0..2.0)).collect();
    let y: Vec<usize> = (0..b).map(|_| rng.random_range(0..n)).collect();
    let sw: Vec<f64> = (0..b).map(|_| rng.random_range(0.1..3.0)).collect();
    let analytic = p.loss_and_gradient(&x, &y, &sw, loss).unwrap().gradient.to_flat();
    let theta = p.to_flat();
    let h = 1e-5;
    let mut q = p.clone();
    let mut numeric = Vec::with_capacity(theta.len());
    for k in 0..theta.len() {
        let mut t = theta.clone();
        t[k] = theta[k] + h;
        q.set_flat(&t).unwrap();
        let plus = q.loss_and_gradient(&x, &y, &sw, loss).unwrap().loss;
        t[k] = theta[k] - h;
        q.set_flat(&t).unwrap();
        let minus = q.loss_and_gradient(&x, &y, &sw, loss).unwrap().loss;
        numeric.push((plus - minus) / (2.0 * h));
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
    let scale = norm(&analytic).max(norm(&numeric));
    if scale == 0.0 {
        0.0
    } else {
        norm(&diff) / scale
    }
}

fn gradient_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for arch in [Architecture::Softmax, Architecture::Mlp { hidden: 7 }] {
        for kind in 0..3 {
            for _ in 0..100 {
                let loss = match kind {
                    0 => SampleLoss::CrossEntropy,
                    1 => SampleLoss::Focal { gamma: rng.random_range(0.0..3.0) },
                    _ => SampleLoss::PerformanceWeighted { gamma: rng.random_range(0.0..3.0), theta_pw: rng.random_range(0.0..1.0) },
                };
                let e = relative_gradient_error(&mut rng, arch, &loss);
                worst = worst.max(e);
                if !(e < 1e-4) {
                    failures += 1;
                }
            }
        }
    }
    outcome(failures == 0, format!("600 instances, failures {failures}, worst relative error {worst:.2e}"))
}

// ------------------------------------------------------------ training

fn same_trajectory(a: &TrainResult<f64>, b: &TrainResult<f64>) -> bool {
    a.params == b.params && a.epochs == b.epochs
}

fn degeneracies() -> Outcome {
    let spec = SyntheticSpec {
        train_per_class: 150,
        test_per_class: 50,
        overlap_pairs: vec![OverlapPair { a: 0, b: 1, strength: 0.7 }],
        seed: 5,
        ..Default::default()
    };
    let (tr, te) = gen_synthetic(&spec).unwrap();
    let cfg = TrainConfig { epochs: 12, batch_size: 32, seed: 17, ..Default::default() };
    let normal = train_method(&tr, Some(&te), &cfg, &LossSpec::Normal).unwrap();
    let cases = [
        ("CLAM(tau=0)", LossSpec::Clam { tau: 0.0, u_min: None, projection: Projection::ScaledClip }),
        ("Focal(gamma=0)", LossSpec::Focal { gamma: 0.0 }),
        ("TCE(gamma=0)", LossSpec::Tce { gamma: 0.0 }),
        ("GGF(alpha=1)", LossSpec::Ggf { alpha: 1.0, w_min: 0.1, frequency: 1 }),
    ];
    let mut bad = Vec::new();
    for (name, spec) in cases {
        let r = train_method(&tr, Some(&te), &cfg, &spec).unwrap();
        // GGF keeps unnormalized unit weights; compare everything else
        let same = if matches!(spec, LossSpec::Ggf { .. }) {
            r.params == normal.params
                && r.epochs.iter().zip(&normal.epochs).all(|(x, y)| {
                    x.train_acc == y.train_acc && x.test_acc == y.test_acc && x.mean_loss == y.mean_loss
                })
        } else {
            same_trajectory(&r, &normal)
        };
        if !same {
            bad.push(name);
        }
    }
    let detail = if bad.is_empty() { "4/4 bitwise identical to Normal".to_string() } else { format!("differ: {bad:?}") };
    outcome(bad.is_empty(), detail)
}

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

fn hard_class_spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        n_classes: 5,
        dim: 10,
        train_per_class: 2000,
        test_per_class: 1000,
        separation: 5.0,
        overlap_pairs: vec![OverlapPair { a: 0, b: 1, strength: 0.6 }, OverlapPair { a: 0, b: 2, strength: 0.6 }],
        seed,
    }
}

fn benchmark_config(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 40,
        batch_size: 64,
        learning_rate: 0.05,
        seed,
        architecture: Architecture::Mlp { hidden: 64 },
        ..Default::default()
    }
}

struct PairedRun {
    normal: TrainResult<f64>,
    clam: TrainResult<f64>,
}

fn paired_benchmark() -> Vec<PairedRun> {
    SEEDS
        .par_iter()
        .map(|&seed| {
            let (tr, te) = gen_synthetic(&hard_class_spec(seed)).unwrap();
            let cfg = benchmark_config(seed);
            PairedRun {
                normal: train_method(&tr, Some(&te), &cfg, &LossSpec::Normal).unwrap(),
                clam: train_method(&tr, Some(&te), &cfg, &LossSpec::clam_default()).unwrap(),
            }
        })
        .collect()
}

fn fairness_direction(runs: &[PairedRun]) -> Outcome {
    let mut std_wins = 0;
    let (mut worst_n, mut worst_c, mut mean_n, mut mean_c) = (0.0, 0.0, 0.0, 0.0);
    let mut rows = Vec::new();
    for r in runs {
        let n = fairness_report(r.normal.final_test_acc().unwrap(), 0.1).unwrap();
        let c = fairness_report(r.clam.final_test_acc().unwrap(), 0.1).unwrap();
        if c.std <= n.std {
            std_wins += 1;
        }
        worst_n += n.worst_class_acc() / runs.len() as f64;
        worst_c += c.worst_class_acc() / runs.len() as f64;
        mean_n += n.mean / runs.len() as f64;
        mean_c += c.mean / runs.len() as f64;
        rows.push(format!("{:.3}/{:.3}", c.std, n.std));
    }
    let pass = std_wins >= 4 && worst_c > worst_n && (mean_c - mean_n).abs() <= 0.02;
    outcome(
        pass,
        format!(
            "std CLAM<=Normal in {std_wins}/5 (CLAM/Normal {}); worst class {worst_c:.4} vs {worst_n:.4}; mean acc {mean_c:.4} vs {mean_n:.4}",
            rows.join(" ")
        ),
    )
}

fn weight_structure(runs: &[PairedRun]) -> Outcome {
    let rhos: Vec<Option<f64>> = runs.iter().map(|r| spearman(&r.clam.final_weights, r.clam.final_train_acc())).collect();
    let negative = rhos.iter().filter(|r| r.is_some_and(|x| x < 0.0)).count();
    let shown: Vec<String> = rhos.iter().map(|r| r.map_or("undefined".into(), |x| format!("{x:.3}"))).collect();
    outcome(negative == runs.len(), format!("Spearman(w^T, v^T) < 0 in {negative}/{} seeds: {}", runs.len(), shown.join(" ")))
}

fn augmentation_effect() -> Outcome {
    let lower_bounds: Vec<f64> = (3..=10).map(|k| k as f64 / 10.0).collect();
    let methods = [LossSpec::Normal, LossSpec::clam_default()];
    let per_seed: Vec<[f64; 2]> = SEEDS
        .par_iter()
        .map(|&seed| {
            let spec = ImageSpec {
                n_classes: 5,
                size: 10,
                train_per_class: 500,
                test_per_class: 250,
                noise: 0.8,
                overlap_pairs: vec![OverlapPair { a: 0, b: 1, strength: 0.5 }],
                seed,
                ..Default::default()
            };
            let (tr, te) = gen_synthetic_images(&spec).unwrap();
            let mut out = [0.0; 2];
            for (k, m) in methods.iter().enumerate() {
                let base = TrainConfig { epochs: 30, seed, ..Default::default() };
                let without = train_method(&tr, Some(&te), &base, m).unwrap();
                let r0 = fairness_report(without.final_test_acc().unwrap(), 0.1).unwrap();
                let mut total = 0.0;
                for &lb in &lower_bounds {
                    let cfg = TrainConfig { augmentation: AugmentationSpec::RandomResizedCrop { crop_lower_bound: lb }, ..base.clone() };
                    let with = train_method(&tr, Some(&te), &cfg, m).unwrap();
                    let r1 = fairness_report(with.final_test_acc().unwrap(), 0.1).unwrap();
                    total += range_difference(&r1, &r0).unwrap();
                }
                out[k] = total / lower_bounds.len() as f64;
            }
            out
        })
        .collect();
    let normal = per_seed.iter().map(|x| x[0]).sum::<f64>() / per_seed.len() as f64;
    let clam = per_seed.iter().map(|x| x[1]).sum::<f64>() / per_seed.len() as f64;
    outcome(clam <= normal, format!("mean range difference (with DA - without) CLAM {clam:+.4} vs Normal {normal:+.4}"))
}

fn last_iterate() -> Outcome {
    let window = 50;
    let tol = 1e-6;
    let (mut converged, mut passed, mut total) = (0, 0, 0);
    let mut worst_gap: f64 = 0.0;
    let mut tally = |rep: clam_core::game::LastIterateReport<f64>| {
        total += 1;
        if let Some(ok) = rep.passed {
            converged += 1;
            if ok {
                passed += 1;
            }
            worst_gap = worst_gap.max(rep.gap);
        }
    };
    // games whose max player has a dominant column
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let n = rng.random_range(2..=10);
        let mut rows: Vec<Vec<f64>> = (0..n).map(|_| (0..6).map(|_| rng.random_range(0.0..0.5)).collect()).collect();
        for row in &mut rows {
            row[3] = rng.random_range(0.5..1.0);
        }
        let m = PayoffMatrix::new(rows).unwrap();
        let s = RestrictedSimplex::new(n, 0.5 / n as f64).unwrap();
        let proj = [Projection::ProofClip, Projection::ScaledClip, Projection::Euclidean][(seed % 3) as usize];
        let tr = run_mw_game(&m, 400, &MwConfig::new(1.0, proj).unwrap(), &s, None).unwrap();
        tally(last_iterate_check(&tr, window, tol).unwrap());
    }
    // long CLAM training runs where one class stays clearly hardest
    for seed in 0..2u64 {
        let spec = SyntheticSpec {
            train_per_class: 300,
            test_per_class: 50,
            separation: 6.0,
            overlap_pairs: vec![OverlapPair { a: 0, b: 1, strength: 1.0 }],
            seed,
            ..Default::default()
        };
        let (tr, _) = gen_synthetic(&spec).unwrap();
        let cfg = TrainConfig { epochs: 120, architecture: Architecture::Softmax, seed, ..Default::default() };
        let r = train_method(&tr, None, &cfg, &LossSpec::clam_default()).unwrap();
        tally(last_iterate_check(&r.as_game_trace().unwrap(), window, tol).unwrap());
    }
    let pass = converged > 0 && passed == converged;
    outcome(
        pass,
        format!("{converged}/{total} runs converged over the trailing {window} rounds, {passed} within bound, largest gap {worst_gap:.2e}"),
    )
}

fn main() {
    let mut all = true;
    let mut report = |id: usize, name: &str, limit: Option<Duration>, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let took = start.elapsed();
        let in_time = limit.is_none_or(|l| took <= l);
        let pass = o.pass && in_time;
        all &= pass;
        let budget = limit.map_or(String::new(), |l| format!(" / {}s", l.as_secs()));
        println!(
            "[{}] criterion {id:>2} {name}: {} ({:.1}s{budget})",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64()
        );
    };
    let secs = |s| Some(Duration::from_secs(s));
    report(1, "per-step KL inequality", secs(60), &mut per_step_inequality);
    report(2, "summed regret bound", secs(60), &mut summed_bound);
    report(3, "game value", secs(30), &mut game_value);
    report(4, "min-linear fairness properties", secs(30), &mut proposition_properties);
    report(5, "projection suite", secs(10), &mut projection_suite);
    report(6, "gradient checks", secs(60), &mut gradient_checks);
    report(7, "degenerate settings match Normal", None, &mut degeneracies);
    let start = Instant::now();
    let runs = paired_benchmark();
    let shared = start.elapsed();
    report(8, "fairness direction", Some(Duration::from_secs(300).saturating_sub(shared)), &mut || fairness_direction(&runs));
    report(9, "augmentation effect direction", secs(900), &mut augmentation_effect);
    report(10, "weight/accuracy anti-correlation", None, &mut || weight_structure(&runs));
    report(11, "last-iterate value", None, &mut last_iterate);
    println!("benchmark training for criteria 8 and 10 took {:.1}s", shared.as_secs_f64());
    if !all {
        std::process::exit(1);
    }
}

//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. `ACCEPTANCE_ONLY=3,5` restricts the run to the listed criteria.
//! Criterion 8 runs only when `FRACTALGA_BCI_DATASET` names a converted
//! dataset file; otherwise it prints SKIP.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::fixtures::{clouds, noise_with_shuffled_labels};
use fractalga::classify::{train, ClassifierKind, Hyperparams, ModelParams};
use fractalga::dataio::{load_dataset, stratified_folds, synth_dataset, synth_fbm, synth_line, SynthSpec};
use fractalga::dwt::{decompose, reconstruct, MAX_LEVELS};
use fractalga::evaluate::{crossval, fitness, EvalConfig};
use fractalga::featspace::{extract_features, synth_planted, FeatureMatrix, PlantedSpec, Source, N_FEATURES};
use fractalga::fractal::{bcd, higuchi, katz, petrosian, sevcik, EstimatorParams};
use fractalga::ga::{exhaustive_search, run_ga, ClassifierPolicy, GaConfig};
use fractalga::Chromosome;
use rand::Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

/// Reference (accuracy %, time s, FV rounded to 4 decimals) rows.
const TABLE_ROWS: [(f64, f64, f64); 13] = [
    (74.0, 0.29, 0.0039),
    (71.0, 0.27, 0.0038),
    (67.0, 0.25, 0.0037),
    (70.0, 0.26, 0.0037),
    (68.0, 0.25, 0.0037),
    (73.0, 0.23, 0.0031),
    (77.0, 0.22, 0.0029),
    (79.0, 0.19, 0.0024),
    (75.0, 0.17, 0.0023),
    (83.0, 0.17, 0.0020),
    (69.0, 0.14, 0.0020),
    (80.0, 0.14, 0.0017),
    (84.0, 0.12, 0.0014),
];

fn c1_fv_arithmetic() -> Outcome {
    let worst = TABLE_ROWS
        .iter()
        .map(|&(a, t, fv)| (fitness(a, t) - fv).abs())
        .fold(0.0, f64::max);
    verdict(
        worst <= 1e-4,
        format!("13 rows, max |T/A - FV| = {worst:.2e} (tol 1e-4)"),
    )
}

fn c2_cardinality() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for samples in [1152, 700] {
        let ds = synth_dataset(&SynthSpec {
            trials: 4,
            samples,
            ..SynthSpec::default()
        })
        .unwrap();
        let m = extract_features(&ds, 0..samples, &EstimatorParams::default()).unwrap();
        let raw = m.descriptors().iter().filter(|d| d.source == Source::Raw).count();
        let sub = m.n_features() - raw;
        ok &= m.n_features() == 315 && raw == 15 && sub == 300;
        details.push(format!(
            "{samples} samples: {} = {sub} subband + {raw} raw",
            m.n_features()
        ));
    }
    verdict(ok, details.join("; "))
}

fn c3_dwt() -> Outcome {
    let start = Instant::now();
    let mut r = common::rng(31);
    let (mut worst_parseval, mut worst_recon) = (0.0f64, 0.0f64);
    for i in 0..1000u64 {
        let n = match i % 4 {
            0 => 1152,
            1 => 2 * r.random_range(1..600) + 1,
            _ => r.random_range(2..1500),
        };
        let x = common::white_noise(n, 10_000 + i);
        let e = common::energy(&x);
        let dec = decompose(&x, MAX_LEVELS).unwrap();
        worst_parseval = worst_parseval.max((dec.energy() - e).abs() / e);
        let back = reconstruct(&dec).unwrap();
        let err = back.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        worst_recon = worst_recon.max(err / e.sqrt());
    }
    let mut constant_ok = true;
    for n in [1152usize, 999, 64, 7] {
        let dec = decompose(&vec![-3.75; n], MAX_LEVELS).unwrap();
        constant_ok &= dec.details.iter().flatten().all(|&v| v == 0.0);
    }
    let elapsed = start.elapsed();
    verdict(
        worst_parseval <= 1e-9 && worst_recon <= 1e-9 && constant_ok && elapsed < Duration::from_secs(10),
        format!(
            "1000 signals: Parseval rel err {worst_parseval:.1e}, reconstruction rel err {worst_recon:.1e} (tol 1e-9); constant details exactly zero: {constant_ok}; {:.2}s (limit 10s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn c4_fractal() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut ok = true;

    let line = synth_line(1000, 1.0, 0.0).unwrap();
    let (k, h, p) = (
        katz(&line).unwrap().value,
        higuchi(&line, 8).unwrap().value,
        petrosian(&line).unwrap().value,
    );
    ok &= k == 1.0 && (h - 1.0).abs() <= 1e-6 && p == 1.0;
    notes.push(format!("line: Katz {k}, Higuchi {h:.9}, Petrosian {p}"));

    let noise_mean = (0..20)
        .map(|s| higuchi(&common::white_noise(4096, 700 + s), 8).unwrap().value)
        .sum::<f64>()
        / 20.0;
    ok &= (noise_mean - 2.0).abs() <= 0.05;
    notes.push(format!("white-noise Higuchi mean {noise_mean:.4}"));

    for hurst in [0.3, 0.5, 0.7] {
        let mean = (0..20)
            .map(|s| higuchi(&synth_fbm(4096, hurst, 900 + s).unwrap(), 8).unwrap().value)
            .sum::<f64>()
            / 20.0;
        ok &= (mean - (2.0 - hurst)).abs() <= 0.15;
        notes.push(format!("fBm H={hurst}: {mean:.4}"));
    }

    let mut r = common::rng(4040);
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let n = r.random_range(16..700);
        let y = if i % 2 == 0 {
            common::white_noise(n, i)
        } else {
            common::random_walk(n, i)
        };
        for (got, want) in [
            (katz(&y).unwrap().value, common::katz(&y)),
            (higuchi(&y, 8).unwrap().value, common::higuchi(&y, 8)),
            (petrosian(&y).unwrap().value, common::petrosian(&y)),
            (sevcik(&y).unwrap().value, common::sevcik(&y)),
            (bcd(&y, 6).unwrap().value, common::bcd(&y, 6)),
        ] {
            worst = worst.max((got - want).abs());
        }
    }
    ok &= worst <= 1e-12;
    notes.push(format!("oracle max |diff| {worst:.1e} (tol 1e-12)"));
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(60);
    notes.push(format!("{:.2}s (limit 60s)", elapsed.as_secs_f64()));
    verdict(ok, notes.join("; "))
}

fn cv_accuracy(m: &FeatureMatrix, kind: ClassifierKind, seed: u64) -> f64 {
    let folds = stratified_folds(m.labels(), 10, seed).unwrap();
    crossval(
        m,
        &Chromosome::ones(m.n_features()),
        kind,
        &folds,
        &EvalConfig::default(),
        seed,
    )
    .unwrap()
    .accuracy_pct
}

fn c5_classifiers() -> Outcome {
    let mut ok = true;
    let mut min_clouds = f64::INFINITY;
    let (mut lo_shuffled, mut hi_shuffled) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut worst_residual = 0.0f64;
    for seed in 0..10u64 {
        let clouds = clouds(seed);
        let shuffled = noise_with_shuffled_labels(seed);
        for kind in ClassifierKind::ALL {
            min_clouds = min_clouds.min(cv_accuracy(&clouds, kind, seed));
            let a = cv_accuracy(&shuffled, kind, seed);
            lo_shuffled = lo_shuffled.min(a);
            hi_shuffled = hi_shuffled.max(a);
        }
        let model = train(
            ClassifierKind::Svm,
            shuffled.values(),
            &shuffled.targets(),
            &Hyperparams::default(),
            0,
        )
        .unwrap();
        if let ModelParams::Svm(svm) = model.params() {
            ok &= svm.converged;
            worst_residual = worst_residual.max(svm.equality_residual().abs());
        }
    }
    ok &= min_clouds >= 95.0 && lo_shuffled >= 35.0 && hi_shuffled <= 65.0 && worst_residual <= 1e-6;
    verdict(
        ok,
        format!(
            "clouds min CV accuracy {min_clouds:.1}% (>= 95); shuffled labels CV accuracy in [{lo_shuffled:.1}, {hi_shuffled:.1}] (within [35, 65]); SVM max |sum a_i y_i| {worst_residual:.1e} (<= 1e-6)"
        ),
    )
}

fn c6_ga_vs_exhaustive() -> Outcome {
    let start = Instant::now();
    let eval = EvalConfig::default();
    let lda = ClassifierPolicy::Fixed(ClassifierKind::Lda);
    let spec = PlantedSpec::default();
    let m = synth_planted(&spec).unwrap();
    let folds = stratified_folds(m.labels(), 10, 1).unwrap();
    let cols: Vec<usize> = (0..spec.cols).collect();
    let oracle = exhaustive_search(&m, &folds, lda, 7, &cols, &eval, 1).unwrap().best;
    let (mut exact, mut within, mut monotone) = (0, 0, 0);
    let mut misses = Vec::new();
    for seed in 0..20u64 {
        let cfg = GaConfig {
            population: 20,
            generations: 30,
            seed,
            policy: lda,
            ..GaConfig::default()
        };
        let trace = run_ga(&m, &folds, &cfg, &eval).unwrap();
        let got = trace.winner.fv;
        exact += usize::from(got == oracle.fv);
        within += usize::from((got - oracle.fv).abs() <= 0.1 * oracle.fv);
        monotone += usize::from(trace.generations.windows(2).all(|w| w[1].best_fv <= w[0].best_fv));
        if got != oracle.fv {
            misses.push(format!(
                "seed {seed} -> {:?} (FV {:.4e})",
                trace.winner.chromosome.active(),
                got
            ));
        }
    }
    let elapsed = start.elapsed();
    verdict(
        exact >= 18 && within == 20 && monotone == 20 && elapsed < Duration::from_secs(300),
        format!(
            "optimum {:?} FV {:.4e}; equal {exact}/20 (>= 18), within 10% {within}/20 (= 20), monotone {monotone}/20; misses [{}]; {:.1}s (limit 300s)",
            oracle.chromosome.active(),
            oracle.fv,
            misses.join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

fn c7_full_scale() -> Outcome {
    let start = Instant::now();
    let ds = synth_dataset(&SynthSpec::default()).unwrap();
    let m = extract_features(&ds, 0..ds.n_samples(), &EstimatorParams::default()).unwrap();
    let extracted = start.elapsed();
    let folds = stratified_folds(m.labels(), 10, 1).unwrap();
    let cfg = GaConfig::default();
    let trace = run_ga(&m, &folds, &cfg, &EvalConfig::default()).unwrap();
    let elapsed = start.elapsed();
    let best: Vec<f64> = trace.generations.iter().map(|g| g.best_fv).collect();
    let monotone = best.windows(2).all(|w| w[1] <= w[0]);
    let ok = m.n_features() == N_FEATURES
        && trace.generations.len() == cfg.generations + 1
        && monotone
        && elapsed < Duration::from_secs(30 * 60);
    verdict(
        ok,
        format!(
            "280 trials, pop {} x {} generations: best FV {:.3e} -> {:.3e}, monotone {monotone}, {} distinct evaluations, winner `{}` at {:.1}% accuracy; extraction {:.1}s, total {:.1}s (limit 1800s)",
            cfg.population,
            cfg.generations,
            best[0],
            best[best.len() - 1],
            trace.evaluated.len(),
            fractalga::ga::winner_line(&m, &trace.winner),
            trace.winner.accuracy_pct,
            extracted.as_secs_f64(),
            elapsed.as_secs_f64()
        ),
    )
}

fn c8_dataset() -> Outcome {
    let Ok(path) = std::env::var("FRACTALGA_BCI_DATASET") else {
        return Outcome::Skip("FRACTALGA_BCI_DATASET not set; real-data reproduction not attempted".into());
    };
    let ds = match load_dataset(&path) {
        Ok(ds) => ds,
        Err(e) => return Outcome::Fail(format!("{path}: {e}")),
    };
    let m = match extract_features(&ds, 0..ds.n_samples(), &EstimatorParams::default()) {
        Ok(m) => m,
        Err(e) => return Outcome::Fail(format!("extraction: {e}")),
    };
    let col = m.column_of(&"ch0:D1:Katz".parse().unwrap()).unwrap();
    let folds = stratified_folds(m.labels(), 10, 1).unwrap();
    let mask = Chromosome::from_indices(N_FEATURES, &[col]);
    match crossval(&m, &mask, ClassifierKind::Lda, &folds, &EvalConfig::default(), 1) {
        Ok(rec) => verdict(
            rec.accuracy_pct >= 70.0,
            format!(
                "ch0:D1:Katz + LDA 10-fold accuracy {:.1}% (>= 70, non-gating)",
                rec.accuracy_pct
            ),
        ),
        Err(e) => Outcome::Fail(format!("crossval: {e}")),
    }
}

fn main() -> ExitCode {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    type Criterion = (usize, &'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        (1, "FV arithmetic on reference rows", c1_fv_arithmetic),
        (2, "feature-space cardinality", c2_cardinality),
        (3, "DWT correctness", c3_dwt),
        (4, "fractal estimator oracles", c4_fractal),
        (5, "classifier sanity", c5_classifiers),
        (6, "GA vs exhaustive search", c6_ga_vs_exhaustive),
        (7, "full-scale GA smoke run", c7_full_scale),
        (8, "dataset reproduction (non-gating)", c8_dataset),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let (tag, detail) = match run() {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                // Criterion 8 is reported but never gates the run.
                if id != 8 {
                    failed += 1;
                }
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("[{tag}] criterion {id}: {name}: {detail}");
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}

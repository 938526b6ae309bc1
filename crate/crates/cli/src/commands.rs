use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use fractalga::dataio::{parse_dataset, stratified_folds, synth_dataset, write_dataset, FoldAssignment, SynthSpec};
use fractalga::evaluate::{
    self, best_over_kinds, crossval, csv_row, feature_label, FitnessRecord, TimingMode, CSV_HEADER,
};
use fractalga::featspace::{
    extract_features, read_csv, synth_planted, write_csv, FeatureDescriptor, FeatureMatrix, PlantedSpec,
};
use fractalga::ga::{exhaustive_search, run_ga, winner_line, write_trace_csv, ClassifierPolicy, GaTrace};
use fractalga::{Chromosome, ClassifierKind};

use crate::config::RunConfig;
use crate::error::CliError;

/// Rows in the search report.
pub const REPORT_ROWS: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SynthKind {
    /// Three-channel motor-imagery-like dataset
    Dataset,
    /// Feature CSV with one planted informative column
    Planted,
}

fn read_input(path: &Path) -> Result<String, CliError> {
    if !path.exists() {
        return Err(CliError::Input(format!("missing file: {}", path.display())));
    }
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn is_dataset(text: &str) -> bool {
    text.lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .is_some_and(|l| l.starts_with("trials="))
}

fn extract(text: &str, path: &Path, cfg: &RunConfig) -> Result<FeatureMatrix, CliError> {
    let ds = parse_dataset(text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let window = cfg.window.clone().unwrap_or(0..ds.n_samples());
    let m = extract_features(&ds, window, &cfg.estimator)?;
    report_degenerate(&m);
    Ok(m)
}

/// Loads a feature CSV, or extracts features when the input is a dataset.
fn load_features(cfg: &RunConfig) -> Result<FeatureMatrix, CliError> {
    let path = cfg.input()?;
    let text = read_input(path)?;
    if is_dataset(&text) {
        extract(&text, path, cfg)
    } else {
        read_csv(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

fn report_degenerate(m: &FeatureMatrix) {
    let total = m.n_trials() * m.n_features();
    eprintln!("degenerate entries: {} of {total} (set to 1.0)", m.degenerate_count());
    for (col, &count) in m.degenerate_per_column().iter().enumerate() {
        if count > 0 {
            eprintln!("  {}: {count}/{} trials", m.descriptors()[col], m.n_trials());
        }
    }
}

/// Writes to `--out` when given, otherwise to stdout.
fn emit(out: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::io(path, e))?;
            let mut w = BufWriter::new(file);
            write(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write(&mut w).map_err(|e| CliError::Internal(format!("stdout: {e}")))
        }
    }
}

fn folds_for(m: &FeatureMatrix, cfg: &RunConfig) -> Result<FoldAssignment, CliError> {
    Ok(stratified_folds(m.labels(), cfg.folds, cfg.seed)?)
}

pub fn cmd_extract(cfg: &RunConfig) -> Result<(), CliError> {
    let path = cfg.input()?;
    let text = read_input(path)?;
    let m = extract(&text, path, cfg)?;
    emit(cfg.out.as_deref(), |w| write_csv(&m, w))
}

pub fn cmd_synth(cfg: &RunConfig, kind: SynthKind, trials: Option<usize>) -> Result<(), CliError> {
    match kind {
        SynthKind::Dataset => {
            let d = SynthSpec::default();
            let ds = synth_dataset(&SynthSpec {
                trials: trials.unwrap_or(d.trials),
                seed: cfg.seed,
                ..d
            })?;
            emit(cfg.out.as_deref(), |w| write_dataset(&ds, w))
        }
        SynthKind::Planted => {
            let d = PlantedSpec::default();
            let m = synth_planted(&PlantedSpec {
                trials: trials.unwrap_or(d.trials),
                seed: cfg.seed,
                ..d
            })?;
            emit(cfg.out.as_deref(), |w| write_csv(&m, w))
        }
    }
}

fn check_genes(cfg: &RunConfig, m: &FeatureMatrix) -> Result<(), CliError> {
    cfg.ga
        .validate(m.n_features())
        .map_err(|e| CliError::Config(e.to_string()))
}

pub fn cmd_search(cfg: &RunConfig) -> Result<(), CliError> {
    let m = load_features(cfg)?;
    check_genes(cfg, &m)?;
    let folds = folds_for(&m, cfg)?;
    let trace = run_ga(&m, &folds, &cfg.ga, &cfg.eval)?;
    let report = render_report(&m, &trace, cfg.eval.mode);
    print!("{report}");
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let write = |name: &str, f: &dyn Fn(&mut dyn Write) -> io::Result<()>| {
            let path = dir.join(name);
            emit(Some(&path), |w| f(w))
        };
        write("trace.csv", &|w| write_trace_csv(&trace, w))?;
        write("records.csv", &|w| evaluate::write_records_csv(&m, &trace.evaluated, w))?;
        write("report.txt", &|w| w.write_all(report.as_bytes()))?;
    }
    Ok(())
}

/// Table-style report: lowest-FV distinct records, best last.
pub fn render_report(m: &FeatureMatrix, trace: &GaTrace, mode: TimingMode) -> String {
    let rows: Vec<[String; 5]> = trace
        .top_records(REPORT_ROWS)
        .iter()
        .map(|r| {
            [
                feature_label(m, &r.chromosome),
                r.classifier.to_string(),
                format!("{:.0}", r.accuracy_pct),
                format!("{:.2}", r.cost),
                format!("{:.4}", r.fv),
            ]
        })
        .collect();
    let head = ["features", "classifier", "accuracy (%)", "time (s)", "FV"];
    let mut width = head.map(str::len);
    for row in &rows {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: [&str; 5]| {
        format!(
            "{:<w0$}  {:<w1$}  {:>w2$}  {:>w3$}  {:>w4$}\n",
            cells[0],
            cells[1],
            cells[2],
            cells[3],
            cells[4],
            w0 = width[0],
            w1 = width[1],
            w2 = width[2],
            w3 = width[3],
            w4 = width[4]
        )
    };
    let mut out = line(head);
    for row in &rows {
        out += &line([&row[0], &row[1], &row[2], &row[3], &row[4]]);
    }
    let unit = match mode {
        TimingMode::Deterministic => "pseudo-seconds",
        TimingMode::Wallclock => "seconds",
    };
    out += &format!(
        "time in {unit}; {} generations, {} distinct evaluations\n",
        trace.generations.len().saturating_sub(1),
        trace.evaluated.len()
    );
    out += &format!("winner: {}\n", winner_line(m, &trace.winner));
    out
}

/// Comma-separated descriptors, or one hex mask over every column.
fn parse_mask(spec: &str, m: &FeatureMatrix) -> Result<Chromosome, CliError> {
    let spec = spec.trim();
    if !spec.contains(':') {
        return Chromosome::from_hex(spec, m.n_features()).map_err(|e| CliError::Input(format!("mask '{spec}': {e}")));
    }
    let mut cols = Vec::new();
    for tok in spec.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let d: FeatureDescriptor = tok
            .parse()
            .map_err(|e| CliError::Input(format!("feature '{tok}': {e}")))?;
        let col = m
            .column_of(&d)
            .ok_or_else(|| CliError::Input(format!("feature '{tok}' is not a column of the input")))?;
        cols.push(col);
    }
    Ok(Chromosome::from_indices(m.n_features(), &cols))
}

fn evaluate_policy(
    m: &FeatureMatrix,
    mask: &Chromosome,
    folds: &FoldAssignment,
    cfg: &RunConfig,
) -> Result<FitnessRecord, CliError> {
    let rec = match cfg.ga.policy {
        ClassifierPolicy::Fixed(kind) => crossval(m, mask, kind, folds, &cfg.eval, cfg.seed)?,
        ClassifierPolicy::PerChromosomeBest => {
            best_over_kinds(m, mask, &ClassifierKind::ALL, folds, &cfg.eval, cfg.seed)?
        }
    };
    Ok(rec)
}

pub fn cmd_evaluate(cfg: &RunConfig, features: &str) -> Result<(), CliError> {
    let m = load_features(cfg)?;
    let mask = parse_mask(features, &m)?;
    if mask.count_ones() == 0 {
        return Err(evaluate::EvalError::EmptySelection.into());
    }
    let folds = folds_for(&m, cfg)?;
    let rec = evaluate_policy(&m, &mask, &folds, cfg)?;
    println!("{CSV_HEADER}");
    println!("{}", csv_row(&m, &rec));
    Ok(())
}

/// Comma-separated column indices, `a-b` ranges or descriptors.
fn parse_columns(spec: &str, m: &FeatureMatrix) -> Result<Vec<usize>, CliError> {
    let mut cols = Vec::new();
    for tok in spec.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let bad = || CliError::Input(format!("column '{tok}' is not an index, range or feature"));
        if tok.contains(':') {
            let d: FeatureDescriptor = tok.parse().map_err(|_| bad())?;
            cols.push(m.column_of(&d).ok_or_else(bad)?);
        } else if let Some((a, b)) = tok.split_once('-') {
            let (a, b): (usize, usize) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
            if a > b {
                return Err(bad());
            }
            cols.extend(a..=b);
        } else {
            cols.push(tok.parse().map_err(|_| bad())?);
        }
    }
    Ok(cols)
}

pub fn cmd_exhaustive(cfg: &RunConfig, columns: Option<&str>) -> Result<(), CliError> {
    let m = load_features(cfg)?;
    let cols = match columns {
        Some(spec) => parse_columns(spec, &m)?,
        None => (0..m.n_features()).collect(),
    };
    let folds = folds_for(&m, cfg)?;
    let res = exhaustive_search(&m, &folds, cfg.ga.policy, cfg.ga.max_active, &cols, &cfg.eval, cfg.seed)?;
    eprintln!("subsets evaluated: {}", res.evaluated);
    println!("{CSV_HEADER}");
    println!("{}", csv_row(&m, &res.best));
    Ok(())
}

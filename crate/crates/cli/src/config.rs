//! Run configuration: flags over a `key = value` file over built-in defaults.

use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use fractalga::evaluate::{EvalConfig, TimingMode};
use fractalga::fractal::EstimatorParams;
use fractalga::ga::{ClassifierPolicy, GaConfig};

use crate::error::CliError;

pub const CONFIG_ENV: &str = "FRACTALGA_CONFIG";
pub const DEFAULT_FOLDS: usize = 10;

/// Settings shared by every subcommand. Unset fields fall back to the config
/// file, then to the defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Settings {
    /// Dataset file or feature CSV
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output file (extract, synth) or directory (search)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for the GA, the fold assignment and synthetic data
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub population: Option<usize>,
    #[arg(long, global = true)]
    pub generations: Option<usize>,
    #[arg(long, global = true)]
    pub crossover_prob: Option<f64>,
    /// Per-gene flip probability
    #[arg(long, global = true)]
    pub mutation_rate: Option<f64>,
    /// Largest number of features in one chromosome
    #[arg(long, global = true)]
    pub max_active: Option<usize>,
    /// lda, fknn, svm, anfis, or best (lowest FV per chromosome)
    #[arg(long, global = true, value_parser = parse_policy)]
    pub classifier: Option<ClassifierPolicy>,
    /// deterministic or wallclock
    #[arg(long, global = true, value_parser = parse_timing)]
    pub timing: Option<TimingMode>,
    #[arg(long, global = true)]
    pub folds: Option<usize>,
    /// Higuchi kmax
    #[arg(long, global = true)]
    pub kmax: Option<usize>,
    /// Box-counting scales
    #[arg(long, global = true)]
    pub box_scales: Option<usize>,
    /// Sample window `start:end` (end exclusive)
    #[arg(long, global = true, value_parser = parse_window)]
    pub window: Option<(usize, usize)>,
    /// Z-score features on each training split
    #[arg(long, global = true)]
    pub normalize: bool,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

fn parse_policy(s: &str) -> Result<ClassifierPolicy, String> {
    match s {
        "lda" | "fknn" | "svm" | "anfis" | "best" => s.parse(),
        _ => Err(format!("'{s}' is not one of lda, fknn, svm, anfis, best")),
    }
}

fn parse_timing(s: &str) -> Result<TimingMode, String> {
    match s {
        "deterministic" | "wallclock" => s.parse(),
        _ => Err(format!("'{s}' is not one of deterministic, wallclock")),
    }
}

fn parse_window(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("window '{s}' is not start:end"))?;
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("window bound '{t}' is not a sample index"))
    };
    Ok((num(a)?, num(b)?))
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!("'{s}' is not a boolean")),
    }
}

fn parse_num<T: FromStr>(s: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("'{s}' is not a valid number"))
}

impl Settings {
    /// Parses the config file format: `key = value` per line, `#` comments,
    /// keys spelled like the flags (underscores allowed).
    pub fn parse_file(text: &str, path: &Path) -> Result<Self, CliError> {
        let mut s = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| CliError::Config(format!("{}:{}: {msg}", path.display(), i + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected key = value, got '{line}'")))?;
            let key = key.trim().replace('_', "-");
            let value = value.trim();
            let field = |r: Result<(), String>| r.map_err(|e| at(format!("{key}: {e}")));
            match key.as_str() {
                "input" => s.input = Some(value.into()),
                "out" => s.out = Some(value.into()),
                "seed" => field(parse_num(value).map(|v| s.seed = Some(v)))?,
                "population" => field(parse_num(value).map(|v| s.population = Some(v)))?,
                "generations" => field(parse_num(value).map(|v| s.generations = Some(v)))?,
                "crossover-prob" => field(parse_num(value).map(|v| s.crossover_prob = Some(v)))?,
                "mutation-rate" => field(parse_num(value).map(|v| s.mutation_rate = Some(v)))?,
                "max-active" => field(parse_num(value).map(|v| s.max_active = Some(v)))?,
                "classifier" => field(parse_policy(value).map(|v| s.classifier = Some(v)))?,
                "timing" => field(parse_timing(value).map(|v| s.timing = Some(v)))?,
                "folds" => field(parse_num(value).map(|v| s.folds = Some(v)))?,
                "kmax" => field(parse_num(value).map(|v| s.kmax = Some(v)))?,
                "box-scales" => field(parse_num(value).map(|v| s.box_scales = Some(v)))?,
                "window" => field(parse_window(value).map(|v| s.window = Some(v)))?,
                "normalize" => field(parse_bool(value).map(|v| s.normalize = v))?,
                "threads" => field(parse_num(value).map(|v| s.threads = Some(v)))?,
                _ => return Err(at(format!("unknown key '{key}'"))),
            }
        }
        Ok(s)
    }

    /// Reads the file named by `FRACTALGA_CONFIG`, if set.
    pub fn from_env() -> Result<Option<Self>, CliError> {
        let Some(path) = std::env::var_os(CONFIG_ENV) else {
            return Ok(None);
        };
        let path = PathBuf::from(path);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Config(format!("{CONFIG_ENV}={}: {e}", path.display())))?;
        Self::parse_file(&text, &path).map(Some)
    }

    /// Fields set in `self` win over those in `lower`.
    pub fn over(self, lower: Settings) -> Settings {
        Settings {
            input: self.input.or(lower.input),
            out: self.out.or(lower.out),
            seed: self.seed.or(lower.seed),
            population: self.population.or(lower.population),
            generations: self.generations.or(lower.generations),
            crossover_prob: self.crossover_prob.or(lower.crossover_prob),
            mutation_rate: self.mutation_rate.or(lower.mutation_rate),
            max_active: self.max_active.or(lower.max_active),
            classifier: self.classifier.or(lower.classifier),
            timing: self.timing.or(lower.timing),
            folds: self.folds.or(lower.folds),
            kmax: self.kmax.or(lower.kmax),
            box_scales: self.box_scales.or(lower.box_scales),
            window: self.window.or(lower.window),
            normalize: self.normalize || lower.normalize,
            threads: self.threads.or(lower.threads),
        }
    }
}

/// Fully resolved and validated settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub ga: GaConfig,
    pub estimator: EstimatorParams,
    pub window: Option<Range<usize>>,
    pub eval: EvalConfig,
    pub folds: usize,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn resolve(s: Settings) -> Result<Self, CliError> {
        let d = GaConfig::default();
        let seed = s.seed.unwrap_or(d.seed);
        let ga = GaConfig {
            population: s.population.unwrap_or(d.population),
            generations: s.generations.unwrap_or(d.generations),
            crossover_prob: s.crossover_prob.unwrap_or(d.crossover_prob),
            mutation_rate: s.mutation_rate.unwrap_or(d.mutation_rate),
            max_active: s.max_active.unwrap_or(d.max_active),
            seed,
            policy: s.classifier.unwrap_or(d.policy),
            ..d
        };
        // The gene count is only known once the input is loaded; it is
        // checked again then.
        ga.validate(usize::MAX).map_err(|e| CliError::Config(e.to_string()))?;

        let mut eval = EvalConfig {
            mode: s.timing.unwrap_or_default(),
            ..EvalConfig::default()
        };
        eval.hyper.normalize = s.normalize;

        let ed = EstimatorParams::default();
        let estimator = EstimatorParams {
            kmax: s.kmax.unwrap_or(ed.kmax),
            box_scales: s.box_scales.unwrap_or(ed.box_scales),
        };
        if estimator.kmax < 2 {
            return Err(CliError::Config(format!(
                "invalid kmax: must be at least 2, got {}",
                estimator.kmax
            )));
        }
        if estimator.box_scales < 2 {
            return Err(CliError::Config(format!(
                "invalid box_scales: must be at least 2, got {}",
                estimator.box_scales
            )));
        }

        let folds = s.folds.unwrap_or(DEFAULT_FOLDS);
        if folds < 2 {
            return Err(CliError::Config(format!(
                "invalid folds: must be at least 2, got {folds}"
            )));
        }
        let window = match s.window {
            Some((a, b)) if a >= b => {
                return Err(CliError::Config(format!(
                    "invalid window: start {a} must be below end {b}"
                )))
            }
            Some((a, b)) => Some(a..b),
            None => None,
        };
        if s.threads == Some(0) {
            return Err(CliError::Config("invalid threads: must be at least 1".into()));
        }
        Ok(RunConfig {
            input: s.input,
            out: s.out,
            seed,
            ga,
            estimator,
            window,
            eval,
            folds,
            threads: s.threads,
        })
    }

    pub fn input(&self) -> Result<&Path, CliError> {
        self.input
            .as_deref()
            .ok_or_else(|| CliError::Config("missing --input".into()))
    }
}

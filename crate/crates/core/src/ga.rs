//! Binary genetic algorithm over feature masks, plus an exhaustive oracle for
//! small column subsets.
//!
//! Randomness is split per generation and per offspring pair with
//! [`rng::stream`], and fitness is memoised per `(genes, classifier policy)`,
//! so results do not depend on evaluation order or thread count.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::chromosome::Chromosome;
use crate::classify::ClassifierKind;
use crate::dataio::FoldAssignment;
use crate::evaluate::{self, EvalConfig, EvalError, FitnessRecord, TimingMode};
use crate::featspace::FeatureMatrix;
use crate::rng;

/// How a chromosome is mapped to a classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ClassifierPolicy {
    Fixed(ClassifierKind),
    /// Lowest FV across all four kinds.
    #[default]
    PerChromosomeBest,
}

impl fmt::Display for ClassifierPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassifierPolicy::Fixed(k) => write!(f, "{}", k.name().to_lowercase()),
            ClassifierPolicy::PerChromosomeBest => f.write_str("best"),
        }
    }
}

impl FromStr for ClassifierPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("best") {
            Ok(ClassifierPolicy::PerChromosomeBest)
        } else {
            s.parse().map(ClassifierPolicy::Fixed)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub mutation_rate: f64,
    pub max_active: usize,
    pub elitism: usize,
    pub tournament_size: usize,
    pub seed: u64,
    pub policy: ClassifierPolicy,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 200,
            generations: 100,
            crossover_prob: 0.9,
            mutation_rate: 0.001,
            max_active: 7,
            elitism: 1,
            tournament_size: 2,
            seed: 1,
            policy: ClassifierPolicy::PerChromosomeBest,
        }
    }
}

impl GaConfig {
    pub fn validate(&self, n_genes: usize) -> Result<(), GaError> {
        let bad = |field: &'static str, reason: String| Err(GaError::InvalidConfig { field, reason });
        if self.population < 2 {
            return bad("population", format!("must be at least 2, got {}", self.population));
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) {
            return bad(
                "crossover_prob",
                format!("must lie in [0, 1], got {}", self.crossover_prob),
            );
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad(
                "mutation_rate",
                format!("must lie in [0, 1], got {}", self.mutation_rate),
            );
        }
        if self.max_active == 0 || self.max_active > n_genes {
            return bad(
                "max_active",
                format!("must lie in [1, {n_genes}], got {}", self.max_active),
            );
        }
        if self.elitism >= self.population {
            return bad(
                "elitism",
                format!("must be below the population size {}", self.population),
            );
        }
        if self.tournament_size == 0 {
            return bad("tournament_size", "must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum GaError {
    #[error("invalid {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("generation {generation}, individual {individual}: {source}")]
    Evaluation {
        generation: usize,
        individual: usize,
        #[source]
        source: EvalError,
    },
    #[error("exhaustive search over {columns} columns up to size {max_active} needs {subsets} evaluations (limit: 20 columns, 1e6 subsets)")]
    TooLarge {
        columns: usize,
        max_active: usize,
        subsets: u128,
    },
    #[error("column {col} outside the {n}-column matrix")]
    ColumnOutOfRange { col: usize, n: usize },
    #[error("empty column subset")]
    EmptySubset,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Random chromosome with `1..=max_active` genes on, positions without replacement.
fn random_chromosome(n_genes: usize, max_active: usize, r: &mut ChaCha8Rng) -> Chromosome {
    let c = r.random_range(1..=max_active);
    Chromosome::from_indices(n_genes, &index::sample(r, n_genes, c).into_vec())
}

pub fn init_population(cfg: &GaConfig, n_genes: usize) -> Vec<Chromosome> {
    (0..cfg.population)
        .map(|i| random_chromosome(n_genes, cfg.max_active, &mut rng::stream(cfg.seed, &[0, i as u64])))
        .collect()
}

/// Child 1 takes `a` where the mask bit is 0 and `b` where it is 1; child 2
/// takes the complement.
pub fn scatter_with_mask(a: &Chromosome, b: &Chromosome, mask: &Chromosome) -> (Chromosome, Chromosome) {
    let mut c1 = a.clone();
    let mut c2 = b.clone();
    for i in mask.active() {
        c1.set(i, b.get(i));
        c2.set(i, a.get(i));
    }
    (c1, c2)
}

/// With probability `prob` applies a uniform scatter mask; otherwise clones.
pub fn scatter_crossover(a: &Chromosome, b: &Chromosome, prob: f64, r: &mut ChaCha8Rng) -> (Chromosome, Chromosome) {
    assert_eq!(a.len(), b.len(), "parents differ in length");
    if r.random::<f64>() >= prob {
        return (a.clone(), b.clone());
    }
    let bits: Vec<bool> = (0..a.len()).map(|_| r.random()).collect();
    scatter_with_mask(a, b, &Chromosome::from_bools(&bits))
}

pub fn mutate(c: &Chromosome, rate: f64, r: &mut ChaCha8Rng) -> Chromosome {
    let mut out = c.clone();
    for i in 0..c.len() {
        if r.random::<f64>() < rate {
            out.flip(i);
        }
    }
    out
}

/// Forces `1 ≤ popcount ≤ max_active` by switching uniformly chosen genes.
pub fn repair(c: &Chromosome, max_active: usize, r: &mut ChaCha8Rng) -> Chromosome {
    let mut out = c.clone();
    let active = c.active();
    if active.len() > max_active {
        for k in index::sample(r, active.len(), active.len() - max_active) {
            out.set(active[k], false);
        }
    } else if active.is_empty() && !c.is_empty() {
        out.set(r.random_range(0..c.len()), true);
    }
    out
}

/// Population statistics after evaluating one generation.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fv: f64,
    pub mean_fv: f64,
    pub best: Chromosome,
    pub best_classifier: ClassifierKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaTrace {
    pub generations: Vec<GenerationStats>,
    pub winner: FitnessRecord,
    /// Every distinct record scored during the run, in first-seen order.
    pub evaluated: Vec<FitnessRecord>,
}

impl GaTrace {
    /// The `n` lowest-FV distinct records, presented by descending FV.
    pub fn top_records(&self, n: usize) -> Vec<FitnessRecord> {
        let mut recs = self.evaluated.clone();
        recs.sort_by(record_order);
        recs.truncate(n);
        recs.reverse();
        recs
    }
}

/// Ascending FV, then lexicographic mask, then classifier.
fn record_order(a: &FitnessRecord, b: &FitnessRecord) -> Ordering {
    a.fv.total_cmp(&b.fv)
        .then_with(|| a.chromosome.lex_cmp(&b.chromosome))
        .then(a.classifier.cmp(&b.classifier))
}

fn evaluate_one(
    features: &FeatureMatrix,
    folds: &FoldAssignment,
    mask: &Chromosome,
    policy: ClassifierPolicy,
    eval: &EvalConfig,
    seed: u64,
) -> Result<FitnessRecord, EvalError> {
    match policy {
        ClassifierPolicy::Fixed(kind) => evaluate::crossval(features, mask, kind, folds, eval, seed),
        ClassifierPolicy::PerChromosomeBest => {
            evaluate::best_over_kinds(features, mask, &ClassifierKind::ALL, folds, eval, seed)
        }
    }
}

/// Scores many masks; parallel unless wall-clock timing is on.
fn evaluate_many(
    features: &FeatureMatrix,
    folds: &FoldAssignment,
    masks: &[&Chromosome],
    policy: ClassifierPolicy,
    eval: &EvalConfig,
    seed: u64,
) -> Vec<Result<FitnessRecord, EvalError>> {
    let run = |m: &&Chromosome| evaluate_one(features, folds, m, policy, eval, seed);
    match eval.mode {
        TimingMode::Deterministic => masks.par_iter().map(run).collect(),
        TimingMode::Wallclock => masks.iter().map(run).collect(),
    }
}

/// Memo table keyed by `(genes, policy)`.
#[derive(Default)]
struct Memo {
    index: HashMap<(Chromosome, ClassifierPolicy), usize>,
    records: Vec<FitnessRecord>,
}

impl Memo {
    fn get(&self, c: &Chromosome, p: ClassifierPolicy) -> Option<&FitnessRecord> {
        self.index.get(&(c.clone(), p)).map(|&i| &self.records[i])
    }
}

fn tournament(fvs: &[f64], size: usize, r: &mut ChaCha8Rng) -> usize {
    let mut best = r.random_range(0..fvs.len());
    for _ in 1..size {
        let cand = r.random_range(0..fvs.len());
        if fvs[cand] < fvs[best] || (fvs[cand] == fvs[best] && cand < best) {
            best = cand;
        }
    }
    best
}

/// Runs the generational loop and returns the full trace.
///
/// Each generation is scored, the `elitism` best carry over unchanged and the
/// rest are bred by tournament selection, scatter crossover, mutation and
/// repair. Generation 0 is the random initial population.
pub fn run_ga(
    features: &FeatureMatrix,
    folds: &FoldAssignment,
    cfg: &GaConfig,
    eval: &EvalConfig,
) -> Result<GaTrace, GaError> {
    let n_genes = features.n_features();
    cfg.validate(n_genes)?;
    let policy = cfg.policy;
    let mut memo = Memo::default();
    let mut population = init_population(cfg, n_genes);
    let mut trace = Vec::with_capacity(cfg.generations + 1);
    let mut winner: Option<FitnessRecord> = None;

    for generation in 0..=cfg.generations {
        // Score each distinct unseen mask once.
        let mut pending: Vec<(usize, &Chromosome)> = Vec::new();
        let mut queued = std::collections::HashSet::new();
        for (i, c) in population.iter().enumerate() {
            if memo.get(c, policy).is_none() && queued.insert(c) {
                pending.push((i, c));
            }
        }
        let masks: Vec<&Chromosome> = pending.iter().map(|&(_, c)| c).collect();
        let results = evaluate_many(features, folds, &masks, policy, eval, cfg.seed);
        for ((individual, c), res) in pending.iter().zip(results) {
            let rec = res.map_err(|source| GaError::Evaluation {
                generation,
                individual: *individual,
                source,
            })?;
            memo.index.insert(((*c).clone(), policy), memo.records.len());
            memo.records.push(rec);
        }

        let records: Vec<&FitnessRecord> = population
            .iter()
            .map(|c| memo.get(c, policy).expect("scored above"))
            .collect();
        let fvs: Vec<f64> = records.iter().map(|r| r.fv).collect();
        let mut order: Vec<usize> = (0..fvs.len()).collect();
        order.sort_by(|&a, &b| fvs[a].total_cmp(&fvs[b]).then(a.cmp(&b)));
        let best = records[order[0]];
        trace.push(GenerationStats {
            generation,
            best_fv: best.fv,
            mean_fv: fvs.iter().sum::<f64>() / fvs.len() as f64,
            best: best.chromosome.clone(),
            best_classifier: best.classifier,
        });
        if winner.as_ref().is_none_or(|w| best.fv < w.fv) {
            winner = Some(best.clone());
        }
        if generation == cfg.generations {
            break;
        }

        let mut next: Vec<Chromosome> = order[..cfg.elitism].iter().map(|&i| population[i].clone()).collect();
        let mut pair = 0u64;
        while next.len() < cfg.population {
            let mut r = rng::stream(cfg.seed, &[generation as u64 + 1, pair]);
            pair += 1;
            let a = tournament(&fvs, cfg.tournament_size, &mut r);
            let b = tournament(&fvs, cfg.tournament_size, &mut r);
            let (c1, c2) = scatter_crossover(&population[a], &population[b], cfg.crossover_prob, &mut r);
            for child in [c1, c2] {
                if next.len() < cfg.population {
                    let m = mutate(&child, cfg.mutation_rate, &mut r);
                    next.push(repair(&m, cfg.max_active, &mut r));
                }
            }
        }
        population = next;
    }

    Ok(GaTrace {
        generations: trace,
        winner: winner.expect("at least one generation"),
        evaluated: memo.records,
    })
}

pub const TRACE_HEADER: &str = "generation,best_fv,mean_fv,best_mask_hex,best_classifier";

pub fn write_trace_csv<W: Write>(trace: &GaTrace, mut out: W) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for g in &trace.generations {
        writeln!(
            out,
            "{},{},{},{},{}",
            g.generation,
            g.best_fv,
            g.mean_fv,
            g.best.to_hex(),
            g.best_classifier
        )?;
    }
    Ok(())
}

/// `ch0:D1:Katz + ch2:A3:Bcd + LDA`.
pub fn winner_line(features: &FeatureMatrix, rec: &FitnessRecord) -> String {
    let mut parts: Vec<String> = rec
        .chromosome
        .active()
        .iter()
        .map(|&i| features.descriptors()[i].to_string())
        .collect();
    parts.push(rec.classifier.to_string());
    parts.join(" + ")
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

/// Number of non-empty subsets of size at most `max_active`.
pub fn subset_count(columns: usize, max_active: usize) -> u128 {
    (1..=max_active.min(columns)).map(|c| binomial(columns, c)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveResult {
    pub best: FitnessRecord,
    pub evaluated: usize,
}

/// Scores every subset of `columns` of size `1..=max_active` and returns the
/// minimum FV (ties by lexicographic mask).
pub fn exhaustive_search(
    features: &FeatureMatrix,
    folds: &FoldAssignment,
    policy: ClassifierPolicy,
    max_active: usize,
    columns: &[usize],
    eval: &EvalConfig,
    seed: u64,
) -> Result<ExhaustiveResult, GaError> {
    let n = features.n_features();
    let mut cols = columns.to_vec();
    cols.sort_unstable();
    cols.dedup();
    if cols.is_empty() {
        return Err(GaError::EmptySubset);
    }
    let subsets = subset_count(cols.len(), max_active);
    if cols.len() > 20 || subsets > 1_000_000 {
        return Err(GaError::TooLarge {
            columns: cols.len(),
            max_active,
            subsets,
        });
    }
    if let Some(&col) = cols.iter().find(|&&c| c >= n) {
        return Err(GaError::ColumnOutOfRange { col, n });
    }
    let m = cols.len();
    let masks: Vec<Chromosome> = (1u32..(1 << m))
        .filter(|s| (s.count_ones() as usize) <= max_active)
        .map(|s| {
            let idx: Vec<usize> = (0..m).filter(|b| s >> b & 1 == 1).map(|b| cols[b]).collect();
            Chromosome::from_indices(n, &idx)
        })
        .collect();
    let refs: Vec<&Chromosome> = masks.iter().collect();
    let records = evaluate_many(features, folds, &refs, policy, eval, seed)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let evaluated = records.len();
    let best = records.into_iter().min_by(record_order).expect("at least one subset");
    Ok(ExhaustiveResult { best, evaluated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::stratified_folds;
    use crate::featspace::{synth_planted, PlantedSpec};

    fn r(seed: u64) -> ChaCha8Rng {
        rng::stream(seed, &[77])
    }

    #[test]
    fn init_respects_cap_and_is_deterministic() {
        let cfg = GaConfig::default();
        let pop = init_population(&cfg, 315);
        assert_eq!(pop.len(), 200);
        assert!(pop.iter().all(|c| (1..=7).contains(&c.count_ones())));
        assert_eq!(pop, init_population(&cfg, 315));
        let tiny = GaConfig {
            population: 2,
            max_active: 1,
            ..cfg
        };
        assert!(init_population(&tiny, 315).iter().all(|c| c.count_ones() == 1));
    }

    #[test]
    fn crossover_masks() {
        let a = Chromosome::from_indices(10, &[0, 3, 5]);
        let b = Chromosome::from_indices(10, &[1, 3, 9]);
        assert_eq!(
            scatter_with_mask(&a, &b, &Chromosome::zeros(10)),
            (a.clone(), b.clone())
        );
        assert_eq!(scatter_with_mask(&a, &b, &Chromosome::ones(10)), (b.clone(), a.clone()));
        let (c1, c2) = scatter_crossover(&a, &a, 1.0, &mut r(1));
        assert_eq!((c1, c2), (a.clone(), a.clone()));
        assert_eq!(scatter_crossover(&a, &b, 0.0, &mut r(2)), (a, b));
    }

    #[test]
    fn mutation_extremes() {
        let c = Chromosome::from_indices(70, &[1, 64]);
        assert_eq!(mutate(&c, 0.0, &mut r(3)), c);
        let flipped = mutate(&c, 1.0, &mut r(4));
        assert_eq!(flipped.count_ones(), 68);
        assert!(!flipped.get(1) && flipped.get(0));
    }

    #[test]
    fn repair_cases() {
        let seven = Chromosome::from_indices(315, &[0, 1, 2, 3, 4, 5, 6]);
        assert_eq!(repair(&seven, 7, &mut r(5)), seven);
        assert_eq!(repair(&Chromosome::ones(315), 7, &mut r(6)).count_ones(), 7);
        assert_eq!(repair(&Chromosome::zeros(315), 7, &mut r(7)).count_ones(), 1);
    }

    #[test]
    fn config_validation() {
        let bad = GaConfig {
            population: 1,
            ..GaConfig::default()
        };
        assert!(matches!(
            bad.validate(315),
            Err(GaError::InvalidConfig {
                field: "population",
                ..
            })
        ));
        let bad = GaConfig {
            crossover_prob: 1.5,
            ..GaConfig::default()
        };
        assert!(bad.validate(315).is_err());
        assert!(GaConfig::default().validate(315).is_ok());
    }

    #[test]
    fn policy_parses() {
        assert_eq!(
            "best".parse::<ClassifierPolicy>().unwrap(),
            ClassifierPolicy::PerChromosomeBest
        );
        assert_eq!(
            "svm".parse::<ClassifierPolicy>().unwrap(),
            ClassifierPolicy::Fixed(ClassifierKind::Svm)
        );
        assert!("rbf".parse::<ClassifierPolicy>().is_err());
    }

    fn fixture() -> (FeatureMatrix, FoldAssignment) {
        let m = synth_planted(&PlantedSpec::default()).unwrap();
        let f = stratified_folds(m.labels(), 10, 1).unwrap();
        (m, f)
    }

    #[test]
    fn zero_generations_scores_initial_population() {
        let (m, f) = fixture();
        let cfg = GaConfig {
            population: 6,
            generations: 0,
            max_active: 3,
            policy: ClassifierPolicy::Fixed(ClassifierKind::Lda),
            ..GaConfig::default()
        };
        let t = run_ga(&m, &f, &cfg, &EvalConfig::default()).unwrap();
        assert_eq!(t.generations.len(), 1);
        assert_eq!(t.winner.fv, t.generations[0].best_fv);
    }

    #[test]
    fn ga_is_deterministic_and_monotone() {
        let (m, f) = fixture();
        let cfg = GaConfig {
            population: 12,
            generations: 8,
            max_active: 4,
            seed: 9,
            ..GaConfig::default()
        };
        let a = run_ga(&m, &f, &cfg, &EvalConfig::default()).unwrap();
        let b = run_ga(&m, &f, &cfg, &EvalConfig::default()).unwrap();
        assert_eq!(a, b);
        for w in a.generations.windows(2) {
            assert!(w[1].best_fv <= w[0].best_fv);
        }
    }

    #[test]
    fn exhaustive_counts_and_guard() {
        let (m, f) = fixture();
        let lda = ClassifierPolicy::Fixed(ClassifierKind::Lda);
        let cfg = EvalConfig::default();
        let res = exhaustive_search(&m, &f, lda, 2, &(0..12).collect::<Vec<_>>(), &cfg, 0).unwrap();
        assert_eq!(res.evaluated, 78);
        assert_eq!(res.best.chromosome.active(), vec![7]);
        let one = exhaustive_search(&m, &f, lda, 7, &[4], &cfg, 0).unwrap();
        assert_eq!(one.evaluated, 1);
        assert!(matches!(
            exhaustive_search(&m, &f, lda, 7, &(0..25).collect::<Vec<_>>(), &cfg, 0),
            Err(GaError::TooLarge { .. })
        ));
        assert_eq!(subset_count(25, 7), 726_205);
    }

    #[test]
    fn trace_csv_and_winner_line() {
        let (m, f) = fixture();
        let cfg = GaConfig {
            population: 4,
            generations: 1,
            max_active: 2,
            policy: ClassifierPolicy::Fixed(ClassifierKind::Lda),
            ..GaConfig::default()
        };
        let t = run_ga(&m, &f, &cfg, &EvalConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(TRACE_HEADER));
        assert_eq!(text.lines().count(), 3);
        assert!(winner_line(&m, &t.winner).ends_with(" + LDA"));
        let top = t.top_records(13);
        assert!(top.windows(2).all(|w| w[0].fv >= w[1].fv));
    }
}

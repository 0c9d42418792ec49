//! Real-coded genetic algorithm that tunes the GRNN smoothing parameters.
//!
//! Chromosomes are σ vectors directly (length 1 or 5 to match the sigma
//! mode), constrained to `[SIGMA_MIN, SIGMA_MAX]` after every operator.
//! Fitness is the reciprocal of the validation MAPE, so maximizing fitness
//! minimizes MAPE. Operators: tournament selection, BLX-α blend crossover
//! (α = 0.5), additive Gaussian mutation, and elitism.
//!
//! # Reproducibility
//!
//! Every draw comes from one ChaCha8 stream seeded with `GaConfig::seed`,
//! consumed in a fixed order: the initial population gene by gene, then per
//! generation — for each offspring pair, two tournaments (`tournament_size`
//! index draws each), one crossover-rate uniform, two blend uniforms per
//! gene when crossover fires, and per child gene one mutation-rate uniform
//! plus one standard normal when mutation fires. Fitness evaluation draws
//! nothing (leave-one-out is deterministic; the holdout split reuses
//! `seed` through its own stream), so evaluations can run in parallel
//! without perturbing the sequence.

use std::io::{self, Write};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError, FEATURE_COUNT};
use crate::grnn::{GrnnError, GrnnModel, Sigma, SIGMA_MAX, SIGMA_MIN};
use crate::metrics::{self, MetricsError};
use crate::numfmt::f64_17sig;
use crate::rng;

/// BLX blend width as a fraction of the parents' gene range.
pub const BLX_ALPHA: f64 = 0.5;
/// Generations without a best-fitness improvement before the optional early
/// stop (off by default) terminates the run.
pub const EARLY_STOP_PATIENCE: usize = 20;
/// Smallest best-fitness gain that counts as an improvement.
pub const EARLY_STOP_MIN_IMPROVEMENT: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GaError {
    #[error("invalid ga config: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Grnn(#[from] GrnnError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Whether chromosomes carry one shared σ or one per feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaMode {
    Isotropic,
    PerFeature,
}

impl SigmaMode {
    pub fn gene_len(self) -> usize {
        match self {
            SigmaMode::Isotropic => 1,
            SigmaMode::PerFeature => FEATURE_COUNT,
        }
    }
}

impl std::fmt::Display for SigmaMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SigmaMode::Isotropic => "isotropic",
            SigmaMode::PerFeature => "per-feature",
        })
    }
}

impl std::str::FromStr for SigmaMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "isotropic" => Ok(SigmaMode::Isotropic),
            "per-feature" => Ok(SigmaMode::PerFeature),
            other => Err(format!("unknown sigma mode `{other}` (isotropic|per-feature)")),
        }
    }
}

/// How a chromosome's MAPE is measured on the training data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitnessProtocol {
    /// Fit on a deterministic sub-split, score on the held-out rest.
    Holdout,
    /// Score every sample with a model that excludes it. Deterministic and
    /// does not sacrifice scarce samples; the default.
    LeaveOneOut,
}

impl std::fmt::Display for FitnessProtocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FitnessProtocol::Holdout => "holdout",
            FitnessProtocol::LeaveOneOut => "leave-one-out",
        })
    }
}

impl std::str::FromStr for FitnessProtocol {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "holdout" => Ok(FitnessProtocol::Holdout),
            "leave-one-out" | "loo" => Ok(FitnessProtocol::LeaveOneOut),
            other => Err(format!(
                "unknown fitness protocol `{other}` (holdout|leave-one-out)"
            )),
        }
    }
}

/// A candidate σ vector; genes always stay within the sigma bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Chromosome {
    genes: Vec<f64>,
}

impl Chromosome {
    pub fn genes(&self) -> &[f64] {
        &self.genes
    }

    pub fn to_sigma(&self) -> Sigma {
        Sigma::from_values(self.genes.clone()).expect("genes are clamped to sigma bounds")
    }

    pub fn in_bounds(&self) -> bool {
        self.genes
            .iter()
            .all(|g| (SIGMA_MIN..=SIGMA_MAX).contains(g))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    /// Mutation std as a fraction of the σ box width.
    pub mutation_scale: f64,
    pub tournament_size: usize,
    pub elitism_count: usize,
    pub seed: u64,
    pub sigma_mode: SigmaMode,
    pub fitness_protocol: FitnessProtocol,
    /// Fraction of the data fitted on under [`FitnessProtocol::Holdout`];
    /// the remainder is the validation side. Ignored for leave-one-out.
    pub holdout_fraction: f64,
    /// Stop once the best fitness has not improved by more than
    /// [`EARLY_STOP_MIN_IMPROVEMENT`] for [`EARLY_STOP_PATIENCE`] generations.
    pub early_stop: bool,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 30,
            generations: 100,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            mutation_scale: 0.1,
            tournament_size: 2,
            elitism_count: 1,
            seed: 0,
            sigma_mode: SigmaMode::Isotropic,
            fitness_protocol: FitnessProtocol::LeaveOneOut,
            holdout_fraction: 0.7,
            early_stop: false,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), GaError> {
        let bad = |msg: String| Err(GaError::Config(msg));
        if self.population_size < 2 {
            return bad(format!("population_size must be ≥ 2, got {}", self.population_size));
        }
        if self.generations < 1 {
            return bad("generations must be ≥ 1".into());
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return bad(format!("crossover_rate must be in [0, 1], got {}", self.crossover_rate));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad(format!("mutation_rate must be in [0, 1], got {}", self.mutation_rate));
        }
        if !self.mutation_scale.is_finite() || self.mutation_scale < 0.0 {
            return bad(format!("mutation_scale must be ≥ 0, got {}", self.mutation_scale));
        }
        if self.tournament_size < 2 {
            return bad(format!("tournament_size must be ≥ 2, got {}", self.tournament_size));
        }
        if self.elitism_count >= self.population_size {
            return bad(format!(
                "elitism_count {} must be smaller than population_size {}",
                self.elitism_count, self.population_size
            ));
        }
        if !self.holdout_fraction.is_finite()
            || self.holdout_fraction <= 0.0
            || self.holdout_fraction >= 1.0
        {
            return bad(format!(
                "holdout_fraction must be in (0, 1), got {}",
                self.holdout_fraction
            ));
        }
        Ok(())
    }
}

/// Per-generation aggregates, in run order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_mape: f64,
}

/// Outcome of a tuning run: the best-ever σ with its scores and the full
/// per-generation history.
#[derive(Debug, Clone, PartialEq)]
pub struct GaResult {
    pub best_sigma: Sigma,
    pub best_fitness: f64,
    pub best_mape: f64,
    pub history: Vec<GenStats>,
}

impl GaResult {
    /// `generation,best_fitness,mean_fitness,best_mape` — the convergence
    /// curve, one row per generation.
    pub fn write_history_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "generation,best_fitness,mean_fitness,best_mape")?;
        for g in &self.history {
            writeln!(
                w,
                "{},{},{},{}",
                g.generation,
                f64_17sig(g.best_fitness),
                f64_17sig(g.mean_fitness),
                f64_17sig(g.best_mape)
            )?;
        }
        Ok(())
    }
}

/// Genes drawn independently and log-uniformly over `[lo, hi]`; σ's useful
/// range spans decades, so uniform sampling in log space covers it evenly.
fn sample_log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64, len: usize) -> Vec<f64> {
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    (0..len)
        .map(|_| rng.random_range(ln_lo..=ln_hi).exp().clamp(lo, hi))
        .collect()
}

fn init_with(rng: &mut ChaCha8Rng, cfg: &GaConfig) -> Vec<Chromosome> {
    (0..cfg.population_size)
        .map(|_| Chromosome {
            genes: sample_log_uniform(rng, SIGMA_MIN, SIGMA_MAX, cfg.sigma_mode.gene_len()),
        })
        .collect()
}

/// The initial random population, deterministic under `cfg.seed`.
pub fn init_population(cfg: &GaConfig) -> Vec<Chromosome> {
    let mut rng = rng::seeded(cfg.seed);
    init_with(&mut rng, cfg)
}

/// Fitness and MAPE of one chromosome under the configured protocol.
pub fn evaluate_fitness(
    chrom: &Chromosome,
    train: &Dataset,
    cfg: &GaConfig,
) -> Result<(f64, f64), GaError> {
    let sigma = chrom.to_sigma();
    let mape = match cfg.fitness_protocol {
        FitnessProtocol::LeaveOneOut => {
            let model = GrnnModel::fit(train, sigma);
            let loo = model.loo_estimates()?;
            let actual: Vec<f64> = train.samples().iter().map(|s| s.delay_ms).collect();
            metrics::mape(&actual, &loo)?
        }
        FitnessProtocol::Holdout => {
            // The split is deterministic in cfg.seed, so every chromosome is
            // scored against the same validation side.
            let (fit_side, val_side) = train.split(cfg.holdout_fraction, cfg.seed)?;
            let model = GrnnModel::fit(&fit_side, sigma);
            let conds: Vec<_> = val_side.samples().iter().map(|s| s.condition).collect();
            let predicted = model.estimate_batch(&conds);
            let actual: Vec<f64> = val_side.samples().iter().map(|s| s.delay_ms).collect();
            metrics::mape(&actual, &predicted)?
        }
    };
    Ok((metrics::fitness(mape)?, mape))
}

/// One tournament: draw `tournament_size` indices with replacement, return
/// the contestant with the highest fitness, ties to the lowest index.
fn tournament_winner(fitnesses: &[f64], rng: &mut ChaCha8Rng, tournament_size: usize) -> usize {
    let mut best = rng.random_range(0..fitnesses.len());
    for _ in 1..tournament_size {
        let c = rng.random_range(0..fitnesses.len());
        if fitnesses[c] > fitnesses[best] || (fitnesses[c] == fitnesses[best] && c < best) {
            best = c;
        }
    }
    best
}

/// Two independent tournament winners, returned as population indices.
pub fn select_parents(
    population: &[Chromosome],
    fitnesses: &[f64],
    rng: &mut ChaCha8Rng,
    cfg: &GaConfig,
) -> (usize, usize) {
    debug_assert_eq!(population.len(), fitnesses.len());
    debug_assert!(!population.is_empty());
    let a = tournament_winner(fitnesses, rng, cfg.tournament_size);
    let b = tournament_winner(fitnesses, rng, cfg.tournament_size);
    (a, b)
}

/// BLX-α blend crossover. With probability `crossover_rate` each child gene
/// is drawn uniformly from the parents' gene interval widened by α on both
/// sides, then clamped to the σ bounds; otherwise the children are copies.
pub fn crossover(
    a: &Chromosome,
    b: &Chromosome,
    rng: &mut ChaCha8Rng,
    cfg: &GaConfig,
) -> (Chromosome, Chromosome) {
    debug_assert_eq!(a.genes.len(), b.genes.len());
    if rng.random::<f64>() >= cfg.crossover_rate {
        return (a.clone(), b.clone());
    }
    let mut ca = Vec::with_capacity(a.genes.len());
    let mut cb = Vec::with_capacity(a.genes.len());
    for (&ga, &gb) in a.genes.iter().zip(&b.genes) {
        let (lo0, hi0) = if ga <= gb { (ga, gb) } else { (gb, ga) };
        let range = hi0 - lo0;
        let lo = lo0 - BLX_ALPHA * range;
        let hi = hi0 + BLX_ALPHA * range;
        ca.push(rng.random_range(lo..=hi).clamp(SIGMA_MIN, SIGMA_MAX));
        cb.push(rng.random_range(lo..=hi).clamp(SIGMA_MIN, SIGMA_MAX));
    }
    (Chromosome { genes: ca }, Chromosome { genes: cb })
}

/// Per-gene Gaussian mutation: with probability `mutation_rate` add noise
/// with std `mutation_scale · (SIGMA_MAX − SIGMA_MIN)`, then clamp.
pub fn mutate(c: &Chromosome, rng: &mut ChaCha8Rng, cfg: &GaConfig) -> Chromosome {
    let std = cfg.mutation_scale * (SIGMA_MAX - SIGMA_MIN);
    let genes = c
        .genes
        .iter()
        .map(|&g| {
            if rng.random::<f64>() < cfg.mutation_rate {
                let z: f64 = rng.sample(StandardNormal);
                (g + std * z).clamp(SIGMA_MIN, SIGMA_MAX)
            } else {
                g
            }
        })
        .collect();
    Chromosome { genes }
}

/// Indices sorted best-first (fitness descending, ties by index).
fn ranked_indices(fitnesses: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitnesses.len()).collect();
    order.sort_by(|&a, &b| {
        fitnesses[b]
            .partial_cmp(&fitnesses[a])
            .expect("fitness is never NaN")
            .then(a.cmp(&b))
    });
    order
}

fn next_generation(
    population: &[Chromosome],
    fitnesses: &[f64],
    rng: &mut ChaCha8Rng,
    cfg: &GaConfig,
) -> Vec<Chromosome> {
    let mut next = Vec::with_capacity(population.len());
    for &i in ranked_indices(fitnesses).iter().take(cfg.elitism_count) {
        next.push(population[i].clone());
    }
    while next.len() < population.len() {
        let (ia, ib) = select_parents(population, fitnesses, rng, cfg);
        let (child_a, child_b) = crossover(&population[ia], &population[ib], rng, cfg);
        next.push(mutate(&child_a, rng, cfg));
        if next.len() < population.len() {
            next.push(mutate(&child_b, rng, cfg));
        }
    }
    next
}

/// Run the full loop: init → evaluate → (elitism, select, crossover, mutate)
/// for `cfg.generations` generations. Fitness evaluations within a
/// generation run in parallel; they draw no randomness, so the result is
/// identical to sequential evaluation.
pub fn run(train: &Dataset, cfg: &GaConfig) -> Result<GaResult, GaError> {
    cfg.validate()?;
    let mut rng = rng::seeded(cfg.seed);
    let mut population = init_with(&mut rng, cfg);

    let mut best: Option<(Chromosome, f64, f64)> = None;
    let mut history = Vec::with_capacity(cfg.generations);
    let mut stall = 0usize;

    for generation in 1..=cfg.generations {
        let evals: Vec<(f64, f64)> = population
            .par_iter()
            .map(|c| evaluate_fitness(c, train, cfg))
            .collect::<Result<_, _>>()?;
        let fitnesses: Vec<f64> = evals.iter().map(|&(f, _)| f).collect();

        let gen_best = ranked_indices(&fitnesses)[0];
        debug_assert!(
            {
                // Fitness is strictly monotone in MAPE, so the best-by-fitness
                // chromosome must also have the smallest MAPE.
                let min_mape = evals.iter().map(|&(_, m)| m).fold(f64::INFINITY, f64::min);
                evals[gen_best].1 == min_mape
            },
            "fitness/MAPE ranking diverged"
        );
        let (gen_best_fitness, gen_best_mape) = evals[gen_best];

        let improved = match &best {
            None => true,
            Some((_, best_fitness, _)) => {
                gen_best_fitness > *best_fitness + EARLY_STOP_MIN_IMPROVEMENT
            }
        };
        if best.as_ref().is_none_or(|&(_, f, _)| gen_best_fitness > f) {
            best = Some((population[gen_best].clone(), gen_best_fitness, gen_best_mape));
        }

        // Generation-scoped aggregates: with elitism ≥ 1 the per-generation
        // best is itself non-decreasing, since the elite is carried over and
        // re-evaluated identically.
        let mean_fitness = fitnesses.iter().sum::<f64>() / fitnesses.len() as f64;
        history.push(GenStats {
            generation,
            best_fitness: gen_best_fitness,
            mean_fitness,
            best_mape: gen_best_mape,
        });

        stall = if improved { 0 } else { stall + 1 };
        if cfg.early_stop && stall >= EARLY_STOP_PATIENCE {
            break;
        }
        if generation < cfg.generations {
            population = next_generation(&population, &fitnesses, &mut rng, cfg);
        }
    }

    let (chrom, best_fitness, best_mape) = best.expect("at least one generation ran");
    Ok(GaResult {
        best_sigma: chrom.to_sigma(),
        best_fitness,
        best_mape,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::DelaySample;
    use crate::trace::{generate, GenConfig};

    fn small_dataset(n: usize, seed: u64) -> Dataset {
        let mut cfg = GenConfig::new(n, seed);
        cfg.noise_cv = 0.05;
        generate(&cfg).unwrap()
    }

    #[test]
    fn init_population_is_bounded_and_deterministic() {
        let cfg = GaConfig::default();
        let pop = init_population(&cfg);
        assert_eq!(pop.len(), 30);
        assert!(pop.iter().all(Chromosome::in_bounds));
        assert_eq!(pop, init_population(&cfg));
        assert!(pop.iter().all(|c| c.genes().len() == 1));

        let per_feature = GaConfig {
            sigma_mode: SigmaMode::PerFeature,
            ..GaConfig::default()
        };
        assert!(init_population(&per_feature)
            .iter()
            .all(|c| c.genes().len() == 5));
    }

    #[test]
    fn degenerate_sampling_box_collapses() {
        let mut rng = rng::seeded(1);
        let genes = sample_log_uniform(&mut rng, 0.5, 0.5, 8);
        assert!(genes.iter().all(|&g| g == 0.5));
    }

    #[test]
    fn tournament_respects_max_and_tie_rules() {
        // Mirror the draw stream to know which contestants were sampled.
        let fitnesses = vec![0.3, 0.9, 0.9, 0.1];
        for seed in 0..50 {
            let mut rng = rng::seeded(seed);
            let mut mirror = rng::seeded(seed);
            let winner = tournament_winner(&fitnesses, &mut rng, 3);
            let sampled: Vec<usize> = (0..3).map(|_| mirror.random_range(0..4)).collect();
            let best_fit = sampled.iter().map(|&i| fitnesses[i]).fold(f64::MIN, f64::max);
            let expected = sampled
                .iter()
                .copied()
                .filter(|&i| fitnesses[i] == best_fit)
                .min()
                .unwrap();
            assert_eq!(winner, expected, "seed {seed}, sampled {sampled:?}");
        }
    }

    #[test]
    fn select_from_singleton_population_returns_it_twice() {
        let pop = vec![Chromosome { genes: vec![1.0] }];
        let fits = vec![0.5];
        let mut rng = rng::seeded(3);
        let cfg = GaConfig::default();
        assert_eq!(select_parents(&pop, &fits, &mut rng, &cfg), (0, 0));
    }

    #[test]
    fn uniform_fitness_selects_lowest_sampled_index() {
        let fitnesses = vec![1.0; 6];
        for seed in 0..30 {
            let mut rng = rng::seeded(seed);
            let mut mirror = rng::seeded(seed);
            let winner = tournament_winner(&fitnesses, &mut rng, 4);
            let sampled: Vec<usize> = (0..4).map(|_| mirror.random_range(0..6)).collect();
            assert_eq!(winner, *sampled.iter().min().unwrap());
        }
    }

    #[test]
    fn crossover_of_identical_parents_returns_them() {
        let a = Chromosome { genes: vec![0.2, 0.4, 1.0, 2.0, 9.9] };
        let cfg = GaConfig {
            crossover_rate: 1.0,
            sigma_mode: SigmaMode::PerFeature,
            ..GaConfig::default()
        };
        let mut rng = rng::seeded(5);
        let (ca, cb) = crossover(&a, &a, &mut rng, &cfg);
        assert_eq!(ca, a);
        assert_eq!(cb, a);
    }

    #[test]
    fn crossover_rate_zero_copies_parents() {
        let a = Chromosome { genes: vec![0.2] };
        let b = Chromosome { genes: vec![0.6] };
        let cfg = GaConfig { crossover_rate: 0.0, ..GaConfig::default() };
        let mut rng = rng::seeded(6);
        for _ in 0..20 {
            let (ca, cb) = crossover(&a, &b, &mut rng, &cfg);
            assert_eq!(ca, a);
            assert_eq!(cb, b);
        }
    }

    #[test]
    fn blx_children_stay_in_blend_interval() {
        // Parents (0.2, 0.4), α = 0.5 → children in [0.1, 0.5] ∩ bounds.
        let a = Chromosome { genes: vec![0.2] };
        let b = Chromosome { genes: vec![0.4] };
        let cfg = GaConfig { crossover_rate: 1.0, ..GaConfig::default() };
        let mut rng = rng::seeded(7);
        for _ in 0..1000 {
            let (ca, cb) = crossover(&a, &b, &mut rng, &cfg);
            for child in [&ca, &cb] {
                let g = child.genes()[0];
                assert!((0.1..=0.5).contains(&g), "{g}");
            }
        }
    }

    #[test]
    fn mutation_identity_cases() {
        let c = Chromosome { genes: vec![0.3, 5.0, SIGMA_MAX, SIGMA_MIN, 1.0] };
        let mut rng = rng::seeded(8);
        let no_rate = GaConfig {
            mutation_rate: 0.0,
            sigma_mode: SigmaMode::PerFeature,
            ..GaConfig::default()
        };
        assert_eq!(mutate(&c, &mut rng, &no_rate), c);
        let no_scale = GaConfig {
            mutation_rate: 1.0,
            mutation_scale: 0.0,
            sigma_mode: SigmaMode::PerFeature,
            ..GaConfig::default()
        };
        assert_eq!(mutate(&c, &mut rng, &no_scale), c);
    }

    #[test]
    fn mutation_clamps_at_the_upper_bound() {
        // Mirror the stream to find a seed whose noise draw is positive.
        let cfg = GaConfig {
            mutation_rate: 1.0,
            mutation_scale: 10.0,
            ..GaConfig::default()
        };
        let c = Chromosome { genes: vec![SIGMA_MAX] };
        let mut checked_up = false;
        let mut checked_down = false;
        for seed in 0..40 {
            let mut mirror = rng::seeded(seed);
            let _gate: f64 = mirror.random();
            let z: f64 = mirror.sample(StandardNormal);
            let mut rng = rng::seeded(seed);
            let m = mutate(&c, &mut rng, &cfg);
            assert!(m.in_bounds());
            if z > 0.0 {
                assert_eq!(m.genes()[0], SIGMA_MAX);
                checked_up = true;
            } else if z < -0.1 {
                // Large negative noise lands below the box and clamps to the floor.
                assert_eq!(m.genes()[0], SIGMA_MIN);
                checked_down = true;
            }
        }
        assert!(checked_up && checked_down);
    }

    #[test]
    fn operators_preserve_bounds_through_chained_stages() {
        let cfg = GaConfig {
            crossover_rate: 1.0,
            mutation_rate: 0.5,
            mutation_scale: 0.5,
            sigma_mode: SigmaMode::PerFeature,
            ..GaConfig::default()
        };
        let mut rng = rng::seeded(99);
        let mut pop = init_with(&mut rng, &cfg);
        let fits: Vec<f64> = (0..pop.len()).map(|i| i as f64).collect();
        for _ in 0..50 {
            assert!(pop.iter().all(Chromosome::in_bounds));
            pop = next_generation(&pop, &fits, &mut rng, &cfg);
        }
        assert!(pop.iter().all(Chromosome::in_bounds));
    }

    #[test]
    fn evaluate_fitness_equal_mape_gives_equal_fitness() {
        let ds = small_dataset(20, 1);
        let cfg = GaConfig::default();
        let c = Chromosome { genes: vec![0.7] };
        let (f1, m1) = evaluate_fitness(&c, &ds, &cfg).unwrap();
        let (f2, m2) = evaluate_fitness(&c.clone(), &ds, &cfg).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(f1, f2);
    }

    #[test]
    fn loo_fitness_matches_exclusion_oracle() {
        let ds = small_dataset(20, 2);
        let cfg = GaConfig::default();
        let chrom = Chromosome { genes: vec![0.42] };
        let (fit, mape) = evaluate_fitness(&chrom, &ds, &cfg).unwrap();

        // Oracle: per sample, rebuild the kernel sum without it, in the
        // model's normalized space.
        let model = GrnnModel::fit(&ds, chrom.to_sigma());
        let mut ape_sum = 0.0;
        for i in 0..model.len() {
            let rest: Vec<crate::grnn::Pattern> = model
                .patterns()
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, p)| *p)
                .collect();
            let reduced = GrnnModel::from_parts(rest, model.sigma().clone(), model.norm_stats().clone())
                .unwrap();
            let est = reduced.estimate_z(&model.patterns()[i].features);
            let actual = ds.samples()[i].delay_ms;
            ape_sum += ((actual - est) / actual).abs();
        }
        let oracle_mape = 100.0 * ape_sum / model.len() as f64;
        assert!((mape - oracle_mape).abs() <= 1e-9 * oracle_mape.max(1.0), "{mape} vs {oracle_mape}");
        assert!((fit - 1.0 / oracle_mape).abs() <= 1e-9 * (1.0 / oracle_mape));
    }

    #[test]
    fn holdout_memorization_reaches_maximal_fitness_class() {
        // σ at the floor memorizes exactly when every validation feature
        // vector also appears on the fit side. Duplicate the dataset, then
        // pick the first split seed that interleaves the duplicates.
        let base = small_dataset(12, 3);
        let doubled: Vec<DelaySample> = base
            .samples()
            .iter()
            .chain(base.samples())
            .copied()
            .collect();
        let ds = Dataset::new(doubled).unwrap();
        let seed = (0..1000u64)
            .find(|&s| {
                let (fit_side, val_side) = ds.split(0.5, s).unwrap();
                val_side.samples().iter().all(|v| {
                    fit_side
                        .samples()
                        .iter()
                        .any(|t| t.condition == v.condition)
                })
            })
            .expect("some seed interleaves the duplicated rows");
        let cfg = GaConfig {
            fitness_protocol: FitnessProtocol::Holdout,
            holdout_fraction: 0.5,
            seed,
            ..GaConfig::default()
        };
        let chrom = Chromosome { genes: vec![SIGMA_MIN] };
        let (fit, mape) = evaluate_fitness(&chrom, &ds, &cfg).unwrap();
        assert!(mape <= 1e-6, "mape {mape}");
        assert!(fit.is_infinite() || fit >= 1e6, "fitness {fit}");
    }

    #[test]
    fn minimal_run_history_has_one_entry() {
        let ds = small_dataset(10, 5);
        let cfg = GaConfig {
            population_size: 2,
            generations: 1,
            ..GaConfig::default()
        };
        let result = run(&ds, &cfg).unwrap();
        assert_eq!(result.history.len(), 1);

        let pop = init_population(&cfg);
        let evals: Vec<(f64, f64)> = pop
            .iter()
            .map(|c| evaluate_fitness(c, &ds, &cfg).unwrap())
            .collect();
        let best = evals.iter().map(|&(_, m)| m).fold(f64::INFINITY, f64::min);
        assert_eq!(result.best_mape, best);
    }

    #[test]
    fn elitism_makes_best_fitness_non_decreasing() {
        let ds = small_dataset(30, 6);
        let cfg = GaConfig {
            population_size: 10,
            generations: 25,
            elitism_count: 1,
            seed: 7,
            ..GaConfig::default()
        };
        let result = run(&ds, &cfg).unwrap();
        assert_eq!(result.history.len(), 25);
        for w in result.history.windows(2) {
            assert!(
                w[1].best_fitness >= w[0].best_fitness,
                "{:?} -> {:?}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn runs_are_bit_identical_under_one_seed() {
        let ds = small_dataset(25, 8);
        let cfg = GaConfig {
            population_size: 8,
            generations: 12,
            seed: 99,
            ..GaConfig::default()
        };
        let a = run(&ds, &cfg).unwrap();
        let b = run(&ds, &cfg).unwrap();
        assert_eq!(a, b);
        for (x, y) in a.history.iter().zip(&b.history) {
            assert_eq!(x.best_fitness.to_bits(), y.best_fitness.to_bits());
            assert_eq!(x.mean_fitness.to_bits(), y.mean_fitness.to_bits());
            assert_eq!(x.best_mape.to_bits(), y.best_mape.to_bits());
        }
    }

    #[test]
    fn best_sigma_stays_in_bounds_and_matches_reported_mape() {
        let ds = small_dataset(30, 9);
        let cfg = GaConfig {
            population_size: 8,
            generations: 10,
            seed: 1,
            ..GaConfig::default()
        };
        let result = run(&ds, &cfg).unwrap();
        for &v in result.best_sigma.values() {
            assert!((SIGMA_MIN..=SIGMA_MAX).contains(&v));
        }
        let chrom = Chromosome { genes: result.best_sigma.values().to_vec() };
        let (fit, mape) = evaluate_fitness(&chrom, &ds, &cfg).unwrap();
        assert_eq!(fit.to_bits(), result.best_fitness.to_bits());
        assert_eq!(mape.to_bits(), result.best_mape.to_bits());
    }

    #[test]
    fn early_stop_truncates_history() {
        let ds = small_dataset(15, 10);
        let slow = GaConfig {
            population_size: 6,
            generations: 80,
            seed: 3,
            mutation_rate: 0.0,
            crossover_rate: 0.0,
            ..GaConfig::default()
        };
        // Without variation the population cannot improve after gen 1.
        let stopped = run(&ds, &GaConfig { early_stop: true, ..slow.clone() }).unwrap();
        assert!(stopped.history.len() <= 1 + EARLY_STOP_PATIENCE);
        let full = run(&ds, &slow).unwrap();
        assert_eq!(full.history.len(), 80);
        assert_eq!(stopped.best_fitness, full.best_fitness);
    }

    #[test]
    fn config_validation_rejects_bad_elitism() {
        let cfg = GaConfig {
            elitism_count: 30,
            ..GaConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(GaError::Config(_))));
    }

    #[test]
    fn history_csv_shape() {
        let ds = small_dataset(10, 11);
        let cfg = GaConfig {
            population_size: 4,
            generations: 3,
            ..GaConfig::default()
        };
        let result = run(&ds, &cfg).unwrap();
        let mut buf = Vec::new();
        result.write_history_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "generation,best_fitness,mean_fitness,best_mape");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("1,"));
        assert!(lines[3].starts_with("3,"));
    }
}

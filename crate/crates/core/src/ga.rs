//! Genetic preference adaptation over the probability simplex.
//!
//! Individuals are preference vectors; genes are weights. Each generation
//! runs roulette selection on min-shifted fitness, single-point crossover on
//! consecutive pairs, and a sum-preserving point mutation with step trimming.
//! Every operator returns vectors on the simplex.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{AttributeId, PreferenceVector, SUM_TOLERANCE};
use crate::error::{Error, Result};
use crate::fitness::{FitnessBreakdown, FitnessContext};

/// Generation-best fitness changes within this count as unchanged.
pub const STAGNATION_EPSILON: f64 = 1e-12;

/// What to do with crossover children whose weights do not sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossoverRepair {
    /// Rescale each child onto the simplex.
    #[default]
    Normalize,
    /// Keep the parents unchanged.
    Revert,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub max_generations: usize,
    /// Stop after this many generations without best-fitness improvement.
    pub stagnation_window: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    /// Upper bound of the uniform mutation step.
    pub delta_max: f64,
    pub crossover_repair: CrossoverRepair,
    pub elitism: bool,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 50,
            max_generations: 200,
            stagnation_window: 25,
            crossover_rate: 0.9,
            mutation_rate: 0.2,
            delta_max: 0.1,
            crossover_repair: CrossoverRepair::Normalize,
            elitism: true,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.population_size < 2 {
            return bad("population_size must be at least 2");
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) || !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad("crossover_rate and mutation_rate must lie in [0, 1]");
        }
        if !(self.delta_max > 0.0 && self.delta_max < 1.0) {
            return bad("delta_max must lie in (0, 1)");
        }
        if self.stagnation_window == 0 {
            return bad("stagnation_window must be positive");
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        GaConfig { seed, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub individuals: Vec<PreferenceVector>,
    pub fitnesses: Vec<f64>,
}

impl Population {
    pub fn evaluate(individuals: Vec<PreferenceVector>, ctx: &FitnessContext<'_>) -> Self {
        let fitnesses = individuals.iter().map(|p| ctx.fitness(p)).collect();
        Population {
            individuals,
            fitnesses,
        }
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    /// Index of the fittest individual (lowest index on ties).
    pub fn best_index(&self) -> usize {
        let mut best = 0;
        for (i, &f) in self.fitnesses.iter().enumerate() {
            if f > self.fitnesses[best] {
                best = i;
            }
        }
        best
    }

    fn worst_index(&self) -> usize {
        let mut worst = 0;
        for (i, &f) in self.fitnesses.iter().enumerate() {
            if f < self.fitnesses[worst] {
                worst = i;
            }
        }
        worst
    }
}

/// `p_prev` followed by `population_size − 1` uniform simplex samples.
pub fn init_population<R: Rng + ?Sized>(p_prev: &PreferenceVector, cfg: &GaConfig, rng: &mut R) -> Vec<PreferenceVector> {
    let n = p_prev.len();
    let mut pop = Vec::with_capacity(cfg.population_size);
    pop.push(p_prev.clone());
    while pop.len() < cfg.population_size {
        pop.push(PreferenceVector::random(n, rng));
    }
    pop
}

/// Roulette probabilities `(f − f_min) / Σ(f − f_min)`; uniform when all
/// fitnesses are equal.
pub fn selection_probabilities(fitnesses: &[f64]) -> Vec<f64> {
    let min = fitnesses.iter().copied().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = fitnesses.iter().map(|f| f - min).collect();
    let total: f64 = shifted.iter().sum();
    if total > 0.0 && total.is_finite() {
        shifted.iter().map(|s| s / total).collect()
    } else {
        vec![1.0 / fitnesses.len() as f64; fitnesses.len()]
    }
}

/// Samples `pop.len()` individuals with replacement by roulette wheel.
pub fn select<R: Rng + ?Sized>(pop: &Population, rng: &mut R) -> Population {
    let probs = selection_probabilities(&pop.fitnesses);
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cumulative.push(acc);
    }
    let last_positive = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let mut individuals = Vec::with_capacity(pop.len());
    let mut fitnesses = Vec::with_capacity(pop.len());
    for _ in 0..pop.len() {
        let r = rng.random::<f64>() * acc;
        let i = cumulative
            .iter()
            .position(|&c| r < c)
            .unwrap_or(last_positive)
            .min(last_positive);
        individuals.push(pop.individuals[i].clone());
        fitnesses.push(pop.fitnesses[i]);
    }
    Population {
        individuals,
        fitnesses,
    }
}

/// Single-point crossover at `k` (1-based): the first `k` genes are swapped.
pub fn crossover(
    p1: &PreferenceVector,
    p2: &PreferenceVector,
    k: usize,
    repair: CrossoverRepair,
) -> (PreferenceVector, PreferenceVector) {
    let (a, b) = (p1.weights(), p2.weights());
    let k = k.clamp(1, a.len());
    let child1: Vec<f64> = b[..k].iter().chain(&a[k..]).copied().collect();
    let child2: Vec<f64> = a[..k].iter().chain(&b[k..]).copied().collect();
    let s1: f64 = child1.iter().sum();
    let s2: f64 = child2.iter().sum();
    if (s1 - 1.0).abs() <= SUM_TOLERANCE && (s2 - 1.0).abs() <= SUM_TOLERANCE {
        return (
            PreferenceVector::from_trusted(child1),
            PreferenceVector::from_trusted(child2),
        );
    }
    match repair {
        // a child with no mass cannot be rescaled
        CrossoverRepair::Normalize if s1 > 0.0 && s2 > 0.0 => (
            PreferenceVector::from_trusted(child1.iter().map(|w| w / s1).collect()),
            PreferenceVector::from_trusted(child2.iter().map(|w| w / s2).collect()),
        ),
        _ => (p1.clone(), p2.clone()),
    }
}

/// Adds `delta` to gene `i` and removes `delta / (n − 1)` from every other
/// gene. If that would leave `[0, 1]`, the step magnitude is first trimmed to
/// `min(|δ|, min_k w_k, min_k (1 − w_k))`.
pub fn mutate(p: &PreferenceVector, i: AttributeId, delta: f64) -> PreferenceVector {
    let w = p.weights();
    let n = w.len();
    let target = i.position();
    let apply = |d: f64| -> Vec<f64> {
        w.iter()
            .enumerate()
            .map(|(k, &wk)| if k == target { wk + d } else { wk - d / (n - 1) as f64 })
            .collect()
    };
    let mut out = apply(delta);
    if out.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        let to_zero = w.iter().copied().fold(f64::INFINITY, f64::min);
        let to_one = w.iter().map(|x| 1.0 - x).fold(f64::INFINITY, f64::min);
        let magnitude = delta.abs().min(to_zero).min(to_one);
        out = apply(magnitude.copysign(delta));
    }
    for x in &mut out {
        *x = x.clamp(0.0, 1.0);
    }
    PreferenceVector::from_trusted(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxGenerations,
    Stagnation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationReport {
    pub generations: usize,
    pub termination: Termination,
    /// Best fitness of the initial population and of each generation.
    pub best_fitness_trace: Vec<f64>,
    pub evaluations: usize,
    pub winner: PreferenceVector,
    pub breakdown: FitnessBreakdown,
    /// Best route of the winner (1-based id) on the complained map.
    pub winner_route: usize,
    pub winner_route_crosses_complaint: bool,
}

/// Runs the GA until `max_generations` or until the best fitness has not
/// improved for `stagnation_window` generations; returns the best-ever
/// individual. Deterministic in `(ctx, cfg)`.
pub fn adapt_preferences(ctx: &FitnessContext<'_>, cfg: &GaConfig) -> Result<(PreferenceVector, AdaptationReport)> {
    cfg.validate()?;
    ctx.params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = ctx.p_prev.len();

    let mut pop = Population::evaluate(init_population(ctx.p_prev, cfg, &mut rng), ctx);
    let mut evaluations = pop.len();
    let first = pop.best_index();
    let mut best = (pop.individuals[first].clone(), pop.fitnesses[first]);
    let mut trace = vec![best.1];
    let mut previous_best = best.1;
    let mut stagnant = 0;
    let mut generations = 0;
    let mut termination = Termination::MaxGenerations;

    while generations < cfg.max_generations {
        generations += 1;
        let mut next = select(&pop, &mut rng).individuals;

        for pair in next.chunks_exact_mut(2) {
            if rng.random::<f64>() < cfg.crossover_rate {
                let k = rng.random_range(1..=n);
                let (c1, c2) = crossover(&pair[0], &pair[1], k, cfg.crossover_repair);
                pair[0] = c1;
                pair[1] = c2;
            }
        }
        for individual in &mut next {
            if rng.random::<f64>() < cfg.mutation_rate {
                let gene = AttributeId::from_position(rng.random_range(0..n));
                // (0, delta_max]
                let delta = (1.0 - rng.random::<f64>()) * cfg.delta_max;
                *individual = mutate(individual, gene, delta);
            }
        }

        pop = Population::evaluate(next, ctx);
        evaluations += pop.len();
        if cfg.elitism {
            let worst = pop.worst_index();
            pop.individuals[worst] = best.0.clone();
            pop.fitnesses[worst] = best.1;
        }

        let gen_best = pop.best_index();
        let gen_fitness = pop.fitnesses[gen_best];
        if gen_fitness > best.1 {
            best = (pop.individuals[gen_best].clone(), gen_fitness);
        }
        if (gen_fitness - previous_best).abs() <= STAGNATION_EPSILON {
            stagnant += 1;
        } else {
            stagnant = 0;
        }
        previous_best = gen_fitness;
        trace.push(gen_fitness);
        if stagnant >= cfg.stagnation_window {
            termination = Termination::Stagnation;
            break;
        }
    }

    let winner_index = ctx.routes.best_index(&best.0);
    let report = AdaptationReport {
        generations,
        termination,
        best_fitness_trace: trace,
        evaluations,
        winner: best.0.clone(),
        breakdown: ctx.breakdown(&best.0),
        winner_route: ctx.routes.routes()[winner_index].id,
        winner_route_crosses_complaint: ctx.route_crosses_complaint(winner_index),
    };
    Ok((best.0, report))
}

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{InverseError, GENE_ALPHABET};
use crate::surrogate::MlpModel;

/// Gene string; thicknesses in nm.
pub type Individual = Vec<f64>;

/// SSE floor keeping the fitness finite for an exact match.
pub const SSE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlanRule {
    /// `min(cap, round(P * mean / T))`.
    Adaptive,
    /// `min(cap, round(max / T * mean))`, the formula taken at face value.
    Literal,
    /// Constant selection count.
    Fixed(usize),
}

impl PlanRule {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "adaptive" => Some(PlanRule::Adaptive),
            "literal" => Some(PlanRule::Literal),
            _ => s.strip_prefix("fixed:").and_then(|n| n.parse().ok()).map(PlanRule::Fixed),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            PlanRule::Adaptive => "adaptive".into(),
            PlanRule::Literal => "literal".into(),
            PlanRule::Fixed(n) => format!("fixed:{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    pub population_size: usize,
    pub t_value: f64,
    pub max_generations: usize,
    pub selection_cap: usize,
    pub crossover_fraction: f64,
    pub plan: PlanRule,
    /// Always carry the current best into the next generation.
    pub elitism: bool,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            t_value: 1e7,
            max_generations: 200,
            selection_cap: 90,
            crossover_fraction: 0.7,
            plan: PlanRule::Adaptive,
            elitism: true,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), InverseError> {
        let fixed_ok = match self.plan {
            PlanRule::Fixed(n) => n <= self.selection_cap,
            _ => true,
        };
        let ok = self.population_size >= 2
            && self.t_value > 0.0
            && self.selection_cap < self.population_size
            && (!self.elitism || self.selection_cap >= 1)
            && (0.0..=1.0).contains(&self.crossover_fraction)
            && fixed_ok;
        if ok {
            Ok(())
        } else {
            Err(InverseError::Argument(format!("invalid GA configuration {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerationPlan {
    pub n_selection: usize,
    pub n_crossover: usize,
    pub n_mutation: usize,
}

impl GenerationPlan {
    pub fn total(&self) -> usize {
        self.n_selection + self.n_crossover + self.n_mutation
    }

    /// Guarantees at least one selection slot, taken from mutation first.
    pub fn with_elite_slot(mut self) -> Self {
        if self.n_selection == 0 {
            if self.n_mutation > 0 {
                self.n_mutation -= 1;
            } else {
                self.n_crossover -= 1;
            }
            self.n_selection = 1;
        }
        self
    }
}

pub fn fitness_from_sse(sse: f64, n: usize) -> f64 {
    1000.0 * n as f64 / sse.max(SSE_FLOOR)
}

fn check_target(model: &MlpModel, target: &[f64]) -> Result<(), InverseError> {
    if target.len() != model.architecture().output_dim {
        return Err(InverseError::Argument(format!(
            "target has {} points, model predicts {}",
            target.len(),
            model.architecture().output_dim
        )));
    }
    Ok(())
}

/// Fitness of one individual against a normalized target.
pub fn fitness(individual: &[f64], target: &[f64], model: &MlpModel) -> Result<f64, InverseError> {
    Ok(population_fitness(&[individual.to_vec()], target, model)?[0])
}

/// Fitness of every individual, in population order, from one batched forward pass.
pub fn population_fitness(pop: &[Individual], target: &[f64], model: &MlpModel) -> Result<Vec<f64>, InverseError> {
    check_target(model, target)?;
    let l = model.architecture().input_dim;
    if pop.iter().any(|g| g.len() != l) {
        return Err(InverseError::Argument(format!("individuals must have {l} genes")));
    }
    let flat: Vec<f64> = pop.iter().flat_map(|g| model.normalizer.apply_input(g)).collect();
    let x = Array2::from_shape_vec((pop.len(), l), flat).unwrap();
    let pred = model.predict_batch_normalized(x.view())?;
    Ok(pred
        .rows()
        .into_iter()
        .map(|row| {
            let sse: f64 = row.iter().zip(target).map(|(p, t)| (p - t).powi(2)).sum();
            fitness_from_sse(sse, target.len())
        })
        .collect())
}

pub fn plan_generation(x: &[f64], config: &GaConfig) -> Result<GenerationPlan, InverseError> {
    if x.is_empty() {
        return Err(InverseError::Argument("empty fitness vector".into()));
    }
    config.validate()?;
    let p = config.population_size;
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw = match config.plan {
        PlanRule::Adaptive => (p as f64 * mean / config.t_value).round(),
        PlanRule::Literal => (max / config.t_value * mean).round(),
        PlanRule::Fixed(n) => n as f64,
    };
    let n_selection = if raw.is_finite() {
        (raw.max(0.0) as usize).min(config.selection_cap)
    } else {
        config.selection_cap
    };
    let n_crossover = (config.crossover_fraction * (p - n_selection) as f64).round() as usize;
    Ok(GenerationPlan {
        n_selection,
        n_crossover,
        n_mutation: p - n_selection - n_crossover,
    })
}

/// One fitness-proportional draw by stochastic acceptance.
fn roulette_index(x: &[f64], max: f64, rng: &mut impl Rng) -> usize {
    loop {
        let i = rng.random_range(0..x.len());
        if rng.random::<f64>() * max < x[i] {
            return i;
        }
    }
}

pub fn argmax(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if *v > x[best] {
            best = i;
        }
    }
    best
}

/// `count` draws with replacement, probability proportional to fitness. With
/// `elitism` the first slot is the current best instead of a draw.
pub fn roulette_select(
    pop: &[Individual],
    x: &[f64],
    count: usize,
    elitism: bool,
    rng: &mut impl Rng,
) -> Result<Vec<Individual>, InverseError> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if pop.is_empty() || pop.len() != x.len() {
        return Err(InverseError::Argument("population and fitness sizes differ".into()));
    }
    if x.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(InverseError::Argument("fitness values must be finite and positive".into()));
    }
    let max = x.iter().copied().fold(0.0, f64::max);
    let mut out = Vec::with_capacity(count);
    if elitism {
        out.push(pop[argmax(x)].clone());
    }
    while out.len() < count {
        out.push(pop[roulette_index(x, max, rng)].clone());
    }
    Ok(out)
}

/// First `cut` genes from `a`, the rest from `b`.
pub fn single_point(a: &[f64], b: &[f64], cut: usize) -> Individual {
    a[..cut].iter().chain(&b[cut..]).copied().collect()
}

pub fn crossover(parents: &[Individual], count: usize, rng: &mut impl Rng) -> Result<Vec<Individual>, InverseError> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if parents.len() < 2 {
        return Err(InverseError::Argument("crossover needs at least two parents".into()));
    }
    let l = parents[0].len();
    Ok((0..count)
        .map(|_| {
            let i = rng.random_range(0..parents.len());
            let mut j = rng.random_range(0..parents.len() - 1);
            if j >= i {
                j += 1;
            }
            if l < 2 {
                parents[i].clone()
            } else {
                single_point(&parents[i], &parents[j], rng.random_range(1..l))
            }
        })
        .collect())
}

/// Fresh individuals, every gene uniform over the alphabet.
pub fn mutation(count: usize, num_layers: usize, rng: &mut impl Rng) -> Vec<Individual> {
    (0..count)
        .map(|_| {
            (0..num_layers)
                .map(|_| GENE_ALPHABET[rng.random_range(0..GENE_ALPHABET.len())])
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    pub max_fitness: f64,
    pub mean_fitness: f64,
    /// All-time best up to and including this generation.
    pub best_fitness: f64,
    /// Plan that produced this generation; `None` for the initial population.
    pub plan: Option<GenerationPlan>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaResult {
    pub best: Individual,
    pub best_fitness: f64,
    pub reached_threshold: bool,
    pub history: Vec<GenerationRecord>,
}

impl GaResult {
    /// Generations needed to reach the threshold, if it was reached.
    pub fn generations_to_threshold(&self, t_value: f64) -> Option<usize> {
        self.history.iter().find(|r| r.best_fitness >= t_value).map(|r| r.generation)
    }
}

/// Runs the GA against a normalized target. `initial` replaces the random
/// initial population when given.
pub fn run_ga(
    target: &[f64],
    model: &MlpModel,
    config: &GaConfig,
    initial: Option<&[Individual]>,
) -> Result<GaResult, InverseError> {
    config.validate()?;
    check_target(model, target)?;
    let l = model.architecture().input_dim;
    let p = config.population_size;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut pop = match initial {
        Some(init) => {
            if init.len() != p {
                return Err(InverseError::Argument(format!(
                    "initial population has {} individuals, expected {p}",
                    init.len()
                )));
            }
            init.to_vec()
        }
        None => mutation(p, l, &mut rng),
    };
    let mut x = population_fitness(&pop, target, model)?;
    let mut best_i = argmax(&x);
    let mut best = pop[best_i].clone();
    let mut best_fitness = x[best_i];
    let mut history = vec![record(0, &x, best_fitness, None)];

    let mut generation = 0;
    while best_fitness < config.t_value && generation < config.max_generations {
        let mut plan = plan_generation(&x, config)?;
        if config.elitism {
            plan = plan.with_elite_slot();
        }
        let mut next = roulette_select(&pop, &x, plan.n_selection, config.elitism, &mut rng)?;
        let pool = roulette_select(&pop, &x, p, false, &mut rng)?;
        next.extend(crossover(&pool, plan.n_crossover, &mut rng)?);
        next.extend(mutation(plan.n_mutation, l, &mut rng));
        pop = next;
        x = population_fitness(&pop, target, model)?;
        generation += 1;
        best_i = argmax(&x);
        if x[best_i] > best_fitness {
            best_fitness = x[best_i];
            best = pop[best_i].clone();
        }
        history.push(record(generation, &x, best_fitness, Some(plan)));
    }
    Ok(GaResult {
        best,
        best_fitness,
        reached_threshold: best_fitness >= config.t_value,
        history,
    })
}

fn record(generation: usize, x: &[f64], best: f64, plan: Option<GenerationPlan>) -> GenerationRecord {
    GenerationRecord {
        generation,
        max_fitness: x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean_fitness: x.iter().sum::<f64>() / x.len() as f64,
        best_fitness: best,
        plan,
    }
}

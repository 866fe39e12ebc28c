//! Integer differential evolution over protograph base matrices.
//!
//! Fitness is either the single-rate threshold (dB) or the robust min-max
//! metric: the worst-case, over the operating set, of the threshold minus the
//! SNR the BMD rate needs for that spectral efficiency (both in dB).

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::constellation::CodeRate;
use crate::error::{Error, Result};
use crate::protograph::{
    default_levels, threshold_db, BaseMatrix, DesignConstraints, OperatingContext, ThresholdSearch,
};
use crate::rng::{stream, StreamRng};

const REPAIR_PASSES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitnessMode {
    /// Threshold at the single operating point in the set.
    SingleRate,
    /// Max over the operating set of threshold minus required SNR.
    Robust,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    pub population: usize,
    pub scale_f: f64,
    pub crossover_cr: f64,
    pub generations: usize,
    pub entry_max: u32,
    pub vn_degree_max: u32,
    pub degree2_columns_max: usize,
    pub operating_set: Vec<f64>,
    pub seed: u64,
    pub mode: FitnessMode,
    pub rows: usize,
    pub levels: Vec<usize>,
    pub code_rate: CodeRate,
    pub m: usize,
    pub search: ThresholdSearch,
}

impl DeConfig {
    /// Defaults for an `M x (D m)` protograph targeting rate `code_rate`.
    pub fn new(code_rate: CodeRate, m: usize, d: usize, operating_set: Vec<f64>) -> Self {
        let cols = d * m;
        let rows = (cols as u64 * u64::from(code_rate.den - code_rate.num)
            / u64::from(code_rate.den)) as usize;
        DeConfig {
            population: 30,
            scale_f: 0.8,
            crossover_cr: 0.88,
            generations: 200,
            entry_max: 3,
            vn_degree_max: 9,
            degree2_columns_max: 1,
            operating_set,
            seed: 0,
            mode: FitnessMode::Robust,
            rows,
            levels: default_levels(d, m),
            code_rate,
            m,
            search: ThresholdSearch::default(),
        }
    }

    pub fn cols(&self) -> usize {
        self.levels.len()
    }

    pub fn constraints(&self) -> DesignConstraints {
        DesignConstraints {
            max_parallel: self.entry_max,
            max_vn_degree: self.vn_degree_max,
            max_degree2_columns: self.degree2_columns_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.population < 4 {
            return bad("population must be at least 4");
        }
        if !(0.0..=1.0).contains(&self.crossover_cr) {
            return bad("crossover rate must lie in [0, 1]");
        }
        if !(self.scale_f > 0.0 && self.scale_f.is_finite()) {
            return bad("scale factor must be positive");
        }
        if self.operating_set.is_empty()
            || self.operating_set.iter().any(|r| !(0.7..=2.7).contains(r))
        {
            return bad("operating set must be a non-empty subset of [0.7, 2.7]");
        }
        if self.mode == FitnessMode::SingleRate && self.operating_set.len() != 1 {
            return bad("single-rate mode needs exactly one operating point");
        }
        if self.rows == 0 || self.rows >= self.cols() {
            return bad("protograph needs 0 < M < N");
        }
        let expected = self.code_rate.value();
        if ((self.cols() - self.rows) as f64 / self.cols() as f64 - expected).abs() > 1e-12 {
            return bad("protograph shape does not match the code rate");
        }
        if self.levels.iter().any(|&l| l == 0 || l > self.m) {
            return bad("column levels must lie in 1..=m");
        }
        Ok(())
    }
}

/// A base matrix with its fitness and per-rate thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub matrix: BaseMatrix,
    pub fitness: f64,
    /// `(R, threshold_db)`; infinite when the ensemble diverged.
    pub evaluated_at: Vec<(f64, f64)>,
}

/// Repairs `matrix` in place so it satisfies `limits`.
pub fn repair(
    matrix: &mut BaseMatrix,
    limits: &DesignConstraints,
    rng: &mut impl Rng,
) -> Result<()> {
    let (rows, cols) = (matrix.rows(), matrix.cols());
    for e in matrix.entries_mut() {
        *e = (*e).min(limits.max_parallel);
    }
    let mut rotate = 0usize;
    for _ in 0..REPAIR_PASSES {
        if matrix.is_valid(limits) {
            return Ok(());
        }
        // (b) over-degree columns: decrement the largest entries, rotating among ties
        for c in 0..cols {
            while matrix.col_sum(c) > limits.max_vn_degree {
                let max = (0..rows).map(|r| matrix.get(r, c)).max().unwrap_or(0);
                let r = (0..rows)
                    .map(|i| (i + rotate) % rows)
                    .find(|&r| matrix.get(r, c) == max)
                    .expect("a maximal entry exists");
                matrix.set(r, c, max - 1);
                rotate += 1;
            }
        }
        // (d) columns below degree 2
        for c in 0..cols {
            while matrix.col_sum(c) < 2 {
                let open: Vec<usize> = (0..rows)
                    .filter(|&r| matrix.get(r, c) < limits.max_parallel)
                    .collect();
                if open.is_empty() {
                    return Err(Error::InfeasibleConstraints);
                }
                let r = open[rng.gen_range(0..open.len())];
                matrix.set(r, c, matrix.get(r, c) + 1);
            }
        }
        // (c) surplus degree-2 columns: raise a random minimal entry
        let degree2: Vec<usize> = (0..cols).filter(|&c| matrix.col_sum(c) == 2).collect();
        for &c in degree2.iter().skip(limits.max_degree2_columns) {
            let low = (0..rows).map(|r| matrix.get(r, c)).min().unwrap_or(0);
            let cand: Vec<usize> = (0..rows)
                .filter(|&r| matrix.get(r, c) == low && low < limits.max_parallel)
                .collect();
            if cand.is_empty() {
                continue;
            }
            let r = cand[rng.gen_range(0..cand.len())];
            matrix.set(r, c, low + 1);
        }
        // rows below degree 2
        for r in 0..rows {
            while matrix.row_sum(r) < 2 {
                let open: Vec<usize> = (0..cols)
                    .filter(|&c| {
                        matrix.get(r, c) < limits.max_parallel
                            && matrix.col_sum(c) < limits.max_vn_degree
                    })
                    .collect();
                if open.is_empty() {
                    return Err(Error::InfeasibleConstraints);
                }
                let c = open[rng.gen_range(0..open.len())];
                matrix.set(r, c, matrix.get(r, c) + 1);
            }
        }
    }
    if matrix.is_valid(limits) {
        Ok(())
    } else {
        Err(Error::InfeasibleConstraints)
    }
}

/// Uniform random entries in `[0, entry_max]`, repaired to satisfy the constraints.
pub fn random_candidate(config: &DeConfig, rng: &mut impl Rng) -> Result<BaseMatrix> {
    let cols = config.cols();
    let entries = (0..config.rows * cols)
        .map(|_| rng.gen_range(0..=config.entry_max))
        .collect();
    let mut matrix = BaseMatrix::new(config.rows, cols, entries, config.levels.clone())?;
    repair(&mut matrix, &config.constraints(), rng)?;
    Ok(matrix)
}

/// Thresholds and fitness values with a per-run cache keyed by `(A, R)`.
pub struct FitnessEvaluator {
    contexts: Vec<OperatingContext>,
    mode: FitnessMode,
    search: ThresholdSearch,
    cache: Mutex<HashMap<(BaseMatrix, usize), f64>>,
    evaluations: AtomicUsize,
}

impl FitnessEvaluator {
    pub fn new(config: &DeConfig) -> Result<Self> {
        let contexts = config
            .operating_set
            .iter()
            .map(|&r| OperatingContext::new(r, config.code_rate, config.m))
            .collect::<Result<Vec<_>>>()?;
        if config.mode == FitnessMode::Robust {
            for ctx in &contexts {
                ctx.required_snr_db()?;
            }
        }
        Ok(FitnessEvaluator {
            contexts,
            mode: config.mode,
            search: config.search,
            cache: Mutex::new(HashMap::new()),
            evaluations: AtomicUsize::new(0),
        })
    }

    /// Number of distinct `(A, R)` threshold computations so far.
    pub fn evaluations(&self) -> usize {
        self.evaluations.load(Ordering::Relaxed)
    }

    fn threshold_uncached(&self, matrix: &BaseMatrix, idx: usize) -> Result<f64> {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        match threshold_db(matrix, &self.contexts[idx], &self.search) {
            Ok(t) => Ok(t),
            Err(Error::DivergedEnsemble { .. }) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    }

    fn cached(&self, matrix: &BaseMatrix, idx: usize) -> Option<f64> {
        self.cache
            .lock()
            .expect("cache poisoned")
            .get(&(matrix.clone(), idx))
            .copied()
    }

    /// Evaluates a batch; each distinct `(A, R)` pair is computed once.
    pub fn evaluate_all(&self, matrices: &[BaseMatrix]) -> Result<Vec<Candidate>> {
        let mut todo: Vec<(BaseMatrix, usize)> = Vec::new();
        for m in matrices {
            for idx in 0..self.contexts.len() {
                let key = (m.clone(), idx);
                if self.cached(m, idx).is_none() && !todo.contains(&key) {
                    todo.push(key);
                }
            }
        }
        let results = crate::par::map(&todo, |(m, idx)| self.threshold_uncached(m, *idx));
        {
            let mut cache = self.cache.lock().expect("cache poisoned");
            for (key, value) in todo.into_iter().zip(results) {
                cache.insert(key, value?);
            }
        }
        matrices.iter().map(|m| self.candidate(m)).collect()
    }

    pub fn evaluate(&self, matrix: &BaseMatrix) -> Result<Candidate> {
        Ok(self.evaluate_all(std::slice::from_ref(matrix))?.remove(0))
    }

    fn candidate(&self, matrix: &BaseMatrix) -> Result<Candidate> {
        let mut evaluated_at = Vec::with_capacity(self.contexts.len());
        let mut fitness = f64::NEG_INFINITY;
        for (idx, ctx) in self.contexts.iter().enumerate() {
            let th = self.cached(matrix, idx).expect("evaluated above");
            evaluated_at.push((ctx.se(), th));
            let score = match self.mode {
                FitnessMode::SingleRate => th,
                FitnessMode::Robust => th - ctx.required_snr_db()?,
            };
            fitness = fitness.max(score);
        }
        Ok(Candidate {
            matrix: matrix.clone(),
            fitness,
            evaluated_at,
        })
    }
}

/// `max_{R in P} threshold_dB(A, R) - required_SNR_dB(R)`; `+inf` if any rate diverges.
pub fn robust_fitness(
    matrix: &BaseMatrix,
    operating_set: &[f64],
    code_rate: CodeRate,
    m: usize,
) -> Result<f64> {
    let mut config = DeConfig::new(code_rate, m, 1, operating_set.to_vec());
    config.mode = FitnessMode::Robust;
    Ok(FitnessEvaluator::new(&config)?.evaluate(matrix)?.fitness)
}

/// Best fitness of one generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationLog {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub evaluations: usize,
}

fn log_entry(generation: usize, population: &[Candidate], evaluations: usize) -> GenerationLog {
    let finite: Vec<f64> = population
        .iter()
        .map(|c| c.fitness)
        .filter(|f| f.is_finite())
        .collect();
    GenerationLog {
        generation,
        best_fitness: population
            .iter()
            .map(|c| c.fitness)
            .fold(f64::INFINITY, f64::min),
        mean_fitness: if finite.is_empty() {
            f64::INFINITY
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        },
        evaluations,
    }
}

pub struct DifferentialEvolution {
    config: DeConfig,
    evaluator: FitnessEvaluator,
}

impl DifferentialEvolution {
    pub fn new(config: DeConfig) -> Result<Self> {
        config.validate()?;
        let evaluator = FitnessEvaluator::new(&config)?;
        Ok(DifferentialEvolution { config, evaluator })
    }

    pub fn config(&self) -> &DeConfig {
        &self.config
    }

    pub fn evaluator(&self) -> &FitnessEvaluator {
        &self.evaluator
    }

    fn member_rng(&self, generation: usize, member: usize) -> StreamRng {
        stream(self.config.seed, &[generation as u64, member as u64])
    }

    pub fn initial_population(&self) -> Result<Vec<Candidate>> {
        let matrices = (0..self.config.population)
            .map(|i| random_candidate(&self.config, &mut self.member_rng(0, i)))
            .collect::<Result<Vec<_>>>()?;
        self.evaluator.evaluate_all(&matrices)
    }

    /// Trial matrix for `target` (mutation, binomial crossover, repair).
    fn trial(
        &self,
        population: &[Candidate],
        target: usize,
        rng: &mut StreamRng,
    ) -> Option<BaseMatrix> {
        let np = population.len();
        let mut pick = |exclude: &[usize]| loop {
            let i = rng.gen_range(0..np);
            if !exclude.contains(&i) {
                break i;
            }
        };
        let a = pick(&[target]);
        let b = pick(&[target, a]);
        let c = pick(&[target, a, b]);
        let (xa, xb, xc) = (
            population[a].matrix.entries(),
            population[b].matrix.entries(),
            population[c].matrix.entries(),
        );
        let base = &population[target].matrix;
        let len = base.entries().len();
        let forced = rng.gen_range(0..len);
        let max = f64::from(self.config.entry_max);
        let mut trial = base.clone();
        for e in 0..len {
            if e == forced || rng.gen::<f64>() < self.config.crossover_cr {
                let v =
                    f64::from(xa[e]) + self.config.scale_f * (f64::from(xb[e]) - f64::from(xc[e]));
                trial.entries_mut()[e] = v.round().clamp(0.0, max) as u32;
            }
        }
        repair(&mut trial, &self.config.constraints(), rng).ok()?;
        Some(trial)
    }

    /// One generation: every member competes against its trial vector.
    pub fn step(&self, population: &mut [Candidate], generation: usize) -> Result<()> {
        let trials: Vec<Option<BaseMatrix>> = (0..population.len())
            .map(|i| self.trial(population, i, &mut self.member_rng(generation, i)))
            .collect();
        let feasible: Vec<BaseMatrix> = trials.iter().flatten().cloned().collect();
        let mut scored = self.evaluator.evaluate_all(&feasible)?.into_iter();
        for (slot, trial) in population.iter_mut().zip(&trials) {
            if trial.is_some() {
                let cand = scored.next().expect("one score per feasible trial");
                if cand.fitness < slot.fitness {
                    *slot = cand;
                }
            }
        }
        Ok(())
    }

    /// Runs all generations, reporting each generation to `on_generation`.
    pub fn run_with<F: FnMut(&GenerationLog)>(&self, mut on_generation: F) -> Result<DeOutcome> {
        let mut population = self.initial_population()?;
        let mut log = vec![log_entry(0, &population, self.evaluator.evaluations())];
        on_generation(&log[0]);
        for g in 1..=self.config.generations {
            self.step(&mut population, g)?;
            let entry = log_entry(g, &population, self.evaluator.evaluations());
            on_generation(&entry);
            log.push(entry);
        }
        let best = population
            .iter()
            .min_by(|a, b| a.fitness.total_cmp(&b.fitness))
            .expect("population is non-empty")
            .clone();
        Ok(DeOutcome {
            best,
            population,
            log,
        })
    }

    pub fn run(&self) -> Result<DeOutcome> {
        self.run_with(|_| {})
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeOutcome {
    pub best: Candidate,
    pub population: Vec<Candidate>,
    pub log: Vec<GenerationLog>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protograph::robust_base_matrix;
    use crate::rng::stream;

    fn rate() -> CodeRate {
        CodeRate::new(13, 16).unwrap()
    }

    #[test]
    fn config_validation() {
        let mut c = DeConfig::new(rate(), 4, 4, vec![0.7, 2.7]);
        assert_eq!(c.rows, 3);
        assert!(c.validate().is_ok());
        c.population = 3;
        assert!(c.validate().is_err());
        let c = DeConfig::new(rate(), 4, 4, vec![0.5]);
        assert!(c.validate().is_err());
        let c = DeConfig::new(rate(), 4, 4, vec![]);
        assert!(c.validate().is_err());
    }

    #[test]
    fn random_candidates_are_valid_and_reproducible() {
        let c = DeConfig::new(rate(), 4, 4, vec![1.1]);
        for seed in 0..50 {
            let a = random_candidate(&c, &mut stream(seed, &[])).unwrap();
            assert!(
                a.is_valid(&c.constraints()),
                "{:?}",
                a.violations(&c.constraints())
            );
            assert!(a.entries().iter().all(|&e| e <= 3));
            let b = random_candidate(&c, &mut stream(seed, &[])).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn repair_is_identity_on_valid_matrices() {
        let mut a = robust_base_matrix();
        repair(&mut a, &DesignConstraints::default(), &mut stream(3, &[])).unwrap();
        assert_eq!(a, robust_base_matrix());
    }

    #[test]
    fn repair_fixes_each_violation() {
        let limits = DesignConstraints::default();
        let mut rng = stream(9, &[]);
        let mut a = BaseMatrix::new(
            3,
            6,
            vec![3, 3, 0, 1, 0, 0, 3, 0, 0, 1, 0, 1, 3, 3, 2, 0, 0, 1],
            vec![1; 6],
        )
        .unwrap();
        assert!(!a.is_valid(&limits));
        repair(&mut a, &limits, &mut rng).unwrap();
        assert!(a.is_valid(&limits), "{:?}", a.violations(&limits));
    }

    #[test]
    fn robust_fitness_monotone_in_operating_set() {
        let a = robust_base_matrix();
        let small = robust_fitness(&a, &[0.7, 2.7], rate(), 4).unwrap();
        let large = robust_fitness(&a, &[0.7, 1.9, 2.7], rate(), 4).unwrap();
        assert!(large >= small);
        assert!(small.is_finite() && small > 0.0);
    }

    #[test]
    fn single_point_reduces_to_backoff() {
        let a = robust_base_matrix();
        let fit = robust_fitness(&a, &[2.1], rate(), 4).unwrap();
        let ctx = OperatingContext::new(2.1, rate(), 4).unwrap();
        let th = threshold_db(&a, &ctx, &ThresholdSearch::default()).unwrap();
        assert!((fit - (th - ctx.required_snr_db().unwrap())).abs() < 1e-12);
    }

    #[test]
    fn cache_counts_distinct_pairs() {
        let mut c = DeConfig::new(rate(), 4, 4, vec![1.1, 2.1]);
        c.population = 4;
        let de = DifferentialEvolution::new(c).unwrap();
        let a = robust_base_matrix();
        de.evaluator()
            .evaluate_all(&[a.clone(), a.clone(), a.clone()])
            .unwrap();
        assert_eq!(de.evaluator().evaluations(), 2);
        de.evaluator().evaluate(&a).unwrap();
        assert_eq!(de.evaluator().evaluations(), 2);
    }

    #[test]
    fn identical_population_is_a_fixed_point() {
        let mut c = DeConfig::new(rate(), 4, 4, vec![2.7]);
        c.mode = FitnessMode::SingleRate;
        c.population = 5;
        let de = DifferentialEvolution::new(c).unwrap();
        let cand = de.evaluator().evaluate(&robust_base_matrix()).unwrap();
        let mut pop = vec![cand; 5];
        let before = pop.clone();
        de.step(&mut pop, 1).unwrap();
        assert_eq!(pop, before);
    }
}

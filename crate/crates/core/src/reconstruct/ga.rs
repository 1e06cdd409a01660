use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cost::{quaternion_cost, representative, PixelObservation};
use super::stitch::stitch_signs;
use crate::error::{Error, Result};
use crate::forward::{IntensityForms, MeasurementStack};
use crate::rng::{derive_seed, stream_rng, SampleRng};
use crate::scalar::Real;
use crate::su2::{canonicalize_sign, spherical_from_axis, AxisAngle, ProcessMap};
use std::f64::consts::{PI, TAU};

/// Genetic-algorithm baseline settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub tournament_size: usize,
    /// Probability that a child is a blend of two parents rather than a copy.
    pub crossover_rate: f64,
    /// Initial Gaussian mutation scale (radians for `Θ`, axis-vector units for the axis);
    /// decays geometrically to a hundredth of it.
    pub mutation_std: f64,
    /// Probability of mutating `Θ`, and separately the axis.
    pub mutation_rate: f64,
    /// Elites kept per island.
    pub elitism_count: usize,
    /// The population is split into this many isolated sub-populations.
    pub islands: usize,
    /// Generations between ring migrations of island champions; 0 disables migration.
    pub migration_interval: usize,
    pub rng_seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 64,
            generations: 100,
            tournament_size: 2,
            crossover_rate: 0.9,
            mutation_std: 0.6,
            mutation_rate: 0.5,
            elitism_count: 2,
            islands: 8,
            migration_interval: 25,
            rng_seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::invalid(
                "GA config",
                "population_size must be at least 2",
            ));
        }
        if self.elitism_count >= self.population_size {
            return Err(Error::invalid(
                "GA config",
                "elitism_count must be below population_size",
            ));
        }
        if self.islands == 0 {
            return Err(Error::invalid("GA config", "islands must be at least 1"));
        }
        if self.tournament_size == 0 {
            return Err(Error::invalid(
                "GA config",
                "tournament_size must be at least 1",
            ));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) || !(0.0..=1.0).contains(&self.mutation_rate)
        {
            return Err(Error::invalid("GA config", "rates must lie in [0, 1]"));
        }
        if !(self.mutation_std >= 0.0) || !self.mutation_std.is_finite() {
            return Err(Error::invalid(
                "GA config",
                "mutation_std must be finite and >= 0",
            ));
        }
        Ok(())
    }
}

/// Outcome of one per-pixel GA run.
#[derive(Debug, Clone, PartialEq)]
pub struct GaFit<T> {
    /// The `n_z ≥ 0` representative of the best individual.
    pub params: AxisAngle<T>,
    pub cost: T,
    /// Best cost after each generation, starting with the initial population.
    pub history: Vec<T>,
}

/// Mutation scale at the last generation relative to the first.
const FINAL_STD_RATIO: f64 = 0.01;

/// Genes are `(Θ, polar, azimuth)`.
type Genome = [f64; 3];

fn quaternion_of(g: &Genome) -> [f64; 4] {
    let (st, ct) = g[0].sin_cos();
    let (sp, cp) = g[1].sin_cos();
    let (sa, ca) = g[2].sin_cos();
    [ct, st * sp * ca, st * sp * sa, st * cp]
}

/// Folds a gene back into `[0, π]` by reflection.
fn reflect(mut v: f64) -> f64 {
    v = v.rem_euclid(TAU);
    if v > PI {
        TAU - v
    } else {
        v
    }
}

fn repair(g: &mut Genome) {
    g[0] = reflect(g[0]);
    g[1] = reflect(g[1]);
    g[2] = g[2].rem_euclid(TAU);
}

fn random_genome(rng: &mut SampleRng) -> Genome {
    // uniform on the sphere for the axis
    let polar = (1.0 - 2.0 * rng.random::<f64>()).acos();
    [rng.random::<f64>() * PI, polar, rng.random::<f64>() * TAU]
}

fn tournament<'a>(pop: &'a [(Genome, f64)], k: usize, rng: &mut SampleRng) -> &'a Genome {
    let mut best = &pop[rng.random_range(0..pop.len())];
    for _ in 1..k {
        let c = &pop[rng.random_range(0..pop.len())];
        if c.1 < best.1 {
            best = c;
        }
    }
    &best.0
}

/// The same gate up to global sign: `(π − Θ, π − polar, azimuth + π)`.
fn mirror(g: &Genome) -> Genome {
    [PI - g[0], PI - g[1], (g[2] + PI).rem_euclid(TAU)]
}

/// BLX-0.5 blend of two parents. `b` is first moved to the sign class of `a`, and azimuths
/// are blended along the shorter arc.
fn blend(a: &Genome, b: &Genome, rng: &mut SampleRng) -> Genome {
    let (qa, qb) = (quaternion_of(a), quaternion_of(b));
    let overlap: f64 = (0..4).map(|k| qa[k] * qb[k]).sum();
    let mut b = if overlap < 0.0 { mirror(b) } else { *b };
    let d = (b[2] - a[2] + PI).rem_euclid(TAU) - PI;
    b[2] = a[2] + d;
    std::array::from_fn(|k| {
        let (lo, hi) = (a[k].min(b[k]), a[k].max(b[k]));
        let span = hi - lo;
        lo - 0.5 * span + rng.random::<f64>() * 2.0 * span
    })
}

/// Gaussian kick of `Θ`, and of the axis as a 3-vector (renormalized), each with
/// probability `rate`.
fn mutate(g: &mut Genome, std: f64, rate: f64, rng: &mut SampleRng) {
    if rng.random::<f64>() < rate {
        let z: f64 = StandardNormal.sample(rng);
        g[0] += std * z;
    }
    if rng.random::<f64>() < rate {
        let (sp, cp) = g[1].sin_cos();
        let (sa, ca) = g[2].sin_cos();
        let mut n = [sp * ca, sp * sa, cp];
        for v in n.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *v += std * z;
        }
        let s = spherical_from_axis(n);
        g[1] = s.polar;
        g[2] = s.azimuth;
    }
    repair(g);
}

/// Runs the GA on one pixel with its own RNG stream.
pub fn ga_pixel<T: Real>(obs: &PixelObservation<T>, cfg: &GaConfig, seed: u64) -> Result<GaFit<T>> {
    cfg.validate()?;
    if !obs.is_finite() {
        return Err(Error::invalid("pixel observation", "non-finite intensity"));
    }
    Ok(run(
        &IntensityForms::new(),
        &obs.0.map(|v| v.as_f64()),
        cfg,
        seed,
    ))
}

type Individual = (Genome, f64);

fn run<T: Real>(
    forms: &IntensityForms<f64>,
    obs: &[f64; 5],
    cfg: &GaConfig,
    seed: u64,
) -> GaFit<T> {
    let mut rng = stream_rng(seed, 0);
    let score = |g: &Genome| quaternion_cost(forms, &quaternion_of(g), obs);
    let by_cost = |a: &Individual, b: &Individual| a.1.total_cmp(&b.1);

    let n_islands = cfg.islands.clamp(1, cfg.population_size / 2);
    let mut islands: Vec<Vec<Individual>> = (0..n_islands)
        .map(|k| {
            let size =
                cfg.population_size / n_islands + usize::from(k < cfg.population_size % n_islands);
            let mut pop: Vec<Individual> = (0..size)
                .map(|_| {
                    let g = random_genome(&mut rng);
                    (g, score(&g))
                })
                .collect();
            pop.sort_by(by_cost);
            pop
        })
        .collect();
    let best_of = |islands: &[Vec<Individual>]| {
        islands
            .iter()
            .map(|pop| pop[0])
            .min_by(by_cost)
            .expect("at least one island")
    };
    let mut history = Vec::with_capacity(cfg.generations + 1);
    history.push(T::lit(best_of(&islands).1));

    for gen in 0..cfg.generations {
        let progress = gen as f64 / cfg.generations.max(1) as f64;
        let std = cfg.mutation_std * FINAL_STD_RATIO.powf(progress);
        for pop in islands.iter_mut() {
            let size = pop.len();
            let elites = cfg.elitism_count.min(size - 1);
            let mut next: Vec<Individual> = pop[..elites].to_vec();
            while next.len() < size {
                let a = tournament(pop, cfg.tournament_size, &mut rng);
                let mut child = if rng.random::<f64>() < cfg.crossover_rate {
                    let b = tournament(pop, cfg.tournament_size, &mut rng);
                    blend(a, b, &mut rng)
                } else {
                    *a
                };
                mutate(&mut child, std, cfg.mutation_rate, &mut rng);
                next.push((child, score(&child)));
            }
            next.sort_by(by_cost);
            *pop = next;
        }
        if cfg.migration_interval > 0 && n_islands > 1 && (gen + 1) % cfg.migration_interval == 0 {
            // ring migration: each island's best replaces the worst of the next one
            let bests: Vec<Individual> = islands.iter().map(|pop| pop[0]).collect();
            for (k, best) in bests.into_iter().enumerate() {
                let target = &mut islands[(k + 1) % n_islands];
                *target.last_mut().expect("non-empty island") = best;
                target.sort_by(by_cost);
            }
        }
        history.push(T::lit(best_of(&islands).1));
    }

    let (genome, cost) = best_of(&islands);
    GaFit {
        params: representative(quaternion_of(&genome).map(T::lit)),
        cost: T::lit(cost),
        history,
    }
}

/// Independent per-pixel GA over the whole map, followed by sign canonicalization.
///
/// No information flows between pixels, so without `stitched` the per-pixel `±U` choices are
/// uncorrelated with the true map. `stitched = true` runs the continuity pass afterwards.
pub fn reconstruct_map_ga<T: Real>(
    stack: &MeasurementStack<T>,
    cfg: &GaConfig,
    stitched: bool,
) -> Result<ProcessMap<T>> {
    cfg.validate()?;
    let forms = IntensityForms::<f64>::new();
    let n = stack.n_pixels();
    let params = (0..n * n)
        .into_par_iter()
        .map(|i| {
            let (row, col) = (i / n, i % n);
            let obs = PixelObservation::from_stack(stack, row, col);
            if !obs.is_finite() {
                return Err(Error::NonFiniteObservation { row, col });
            }
            let fit: GaFit<T> = run(
                &forms,
                &obs.0.map(|v| v.as_f64()),
                cfg,
                derive_seed(cfg.rng_seed, i as u64),
            );
            Ok(fit.params)
        })
        .collect::<Result<Vec<_>>>()?;
    let raw = ProcessMap::new(n, params)?;
    Ok(if stitched {
        stitch_signs(&raw)
    } else {
        canonicalize_sign(&raw)
    })
}

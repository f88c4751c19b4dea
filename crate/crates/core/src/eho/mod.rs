//! Elephant herding optimization over a bounded box.
//!
//! The population is split into clans. Each generation, members move toward
//! their clan's matriarch, the matriarch moves to a scaled clan centre, the
//! worst member of every clan is replaced at random, and the best elephants
//! of the previous generation overwrite the worst of the new one. Fitness is
//! maximized.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Grid used to recognise repeated positions in the fitness cache.
const CACHE_QUANTUM: f64 = 1e-9;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EhoError {
    #[error("bounds of dimension {0} are not finite or are inverted")]
    InvalidBounds(usize),
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),
}

/// The fitness function. Implementations must be safe to call from several
/// threads at once on distinct positions.
pub trait Objective: Sync {
    type Error: Send;

    fn evaluate(&self, position: &[f64]) -> Result<f64, Self::Error>;

    /// Secondary key for equal fitness; the lower value wins.
    fn tie_break(&self, _position: &[f64]) -> f64 {
        0.0
    }
}

impl<F, E> Objective for F
where
    F: Fn(&[f64]) -> Result<f64, E> + Sync,
    E: Send,
{
    type Error = E;

    fn evaluate(&self, position: &[f64]) -> Result<f64, E> {
        self(position)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EhoConfig {
    pub n_clans: usize,
    pub clan_size: usize,
    /// Scale of the move toward the matriarch.
    pub alpha: f64,
    /// Scale applied to the clan centre when the matriarch moves.
    pub beta: f64,
    /// Elites carried into the next generation.
    pub n_keep: usize,
    pub max_gen: usize,
    pub bounds: Vec<(f64, f64)>,
    pub rng_seed: u64,
    /// Evaluate each generation's new positions on the rayon pool.
    pub parallel: bool,
}

impl EhoConfig {
    /// Five clans of six, alpha 5, beta 0.0005, two elites.
    pub fn new(bounds: Vec<(f64, f64)>, max_gen: usize, rng_seed: u64) -> Self {
        Self {
            n_clans: 5,
            clan_size: 6,
            alpha: 5.0,
            beta: 0.0005,
            n_keep: 2,
            max_gen,
            bounds,
            rng_seed,
            parallel: true,
        }
    }

    pub fn population_size(&self) -> usize {
        self.n_clans * self.clan_size
    }

    pub fn validate(&self) -> Result<(), EhoError> {
        for (d, (lo, hi)) in self.bounds.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(EhoError::InvalidBounds(d));
            }
        }
        let bad = |m: &str| Err(EhoError::InvalidConfig(m.to_string()));
        if self.bounds.is_empty() {
            return bad("no dimensions");
        }
        if self.n_clans < 1 {
            return bad("need at least one clan");
        }
        if self.clan_size < 2 {
            return bad("clans need at least two elephants");
        }
        if self.n_keep >= self.population_size() {
            return bad("elite count must be below the population size");
        }
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return bad("alpha and beta must be finite");
        }
        Ok(())
    }

    fn clamp(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(&self.bounds) {
            *v = v.clamp(*lo, *hi);
        }
    }

    fn random_position<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Elephant {
    pub position: Vec<f64>,
    /// `None` until evaluated.
    pub fitness: Option<f64>,
    pub tie: f64,
}

impl Elephant {
    pub fn new(position: Vec<f64>) -> Self {
        Self {
            position,
            fitness: None,
            tie: 0.0,
        }
    }

    /// Ordering with the better elephant first. Unevaluated elephants sort last.
    pub fn rank(&self, other: &Elephant) -> Ordering {
        let f = |e: &Elephant| e.fitness.unwrap_or(f64::NEG_INFINITY);
        f(other)
            .total_cmp(&f(self))
            .then(self.tie.total_cmp(&other.tie))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clan {
    pub members: Vec<Elephant>,
}

impl Clan {
    /// Stable sort, best first.
    pub fn sort(&mut self) {
        self.members.sort_by(|a, b| a.rank(b));
    }

    pub fn best(&self) -> &Elephant {
        self.members
            .iter()
            .reduce(|a, b| if b.rank(a) == Ordering::Less { b } else { a })
            .expect("clans are never empty")
    }

    pub fn centre(&self) -> Vec<f64> {
        let dim = self.members[0].position.len();
        let mut c = vec![0.0; dim];
        for m in &self.members {
            for (s, x) in c.iter_mut().zip(&m.position) {
                *s += x;
            }
        }
        let n = self.members.len() as f64;
        c.iter_mut().for_each(|s| *s /= n);
        c
    }
}

/// Move every member of a sorted clan using the given uniform draws
/// (`draws[j][d]` for member `j`, dimension `d`; the matriarch's row is
/// unused). Moved members become unevaluated.
pub fn clan_update_with(clan: &Clan, config: &EhoConfig, draws: &[Vec<f64>]) -> Clan {
    let best = &clan.members[0].position;
    let centre = clan.centre();
    let mut out = clan.clone();
    for (j, m) in out.members.iter_mut().enumerate() {
        let new: Vec<f64> = if j == 0 {
            centre.iter().map(|c| config.beta * c).collect()
        } else {
            m.position
                .iter()
                .zip(best)
                .zip(&draws[j])
                .map(|((x, b), r)| x + config.alpha * (b - x) * r)
                .collect()
        };
        let mut new = new;
        config.clamp(&mut new);
        if new != m.position {
            m.position = new;
            m.fitness = None;
        }
    }
    out
}

/// Draw the uniform factors for [`clan_update_with`].
pub fn draw_update<R: Rng>(clan: &Clan, rng: &mut R) -> Vec<Vec<f64>> {
    clan.members
        .iter()
        .map(|m| m.position.iter().map(|_| rng.random::<f64>()).collect())
        .collect()
}

pub fn clan_update<R: Rng>(clan: &Clan, config: &EhoConfig, rng: &mut R) -> Clan {
    let draws = draw_update(clan, rng);
    clan_update_with(clan, config, &draws)
}

/// Replace the last (worst) member of a sorted clan with a fresh random
/// position.
pub fn separate<R: Rng>(clan: &Clan, config: &EhoConfig, rng: &mut R) -> Clan {
    let mut out = clan.clone();
    let last = out.members.last_mut().expect("clans are never empty");
    *last = Elephant::new(config.random_position(rng));
    out
}

/// Quantized position used as the cache key.
fn cache_key(x: &[f64]) -> Vec<i64> {
    x.iter().map(|v| (v / CACHE_QUANTUM).round() as i64).collect()
}

/// Evaluates positions, remembering every result.
struct Evaluator<'a, O: Objective> {
    objective: &'a O,
    cache: HashMap<Vec<i64>, (f64, f64)>,
    parallel: bool,
    evaluations: usize,
}

impl<'a, O: Objective> Evaluator<'a, O> {
    /// Fill in the fitness of every unevaluated elephant. On failure the
    /// error of the first failing elephant in population order is returned.
    fn evaluate(&mut self, elephants: &mut [&mut Elephant]) -> Result<(), O::Error> {
        let mut todo: Vec<(Vec<i64>, Vec<f64>)> = Vec::new();
        for e in elephants.iter() {
            if e.fitness.is_some() {
                continue;
            }
            let key = cache_key(&e.position);
            if !self.cache.contains_key(&key) && !todo.iter().any(|(k, _)| *k == key) {
                todo.push((key, e.position.clone()));
            }
        }
        let objective = self.objective;
        let run = |x: &Vec<f64>| objective.evaluate(x).map(|f| (f, objective.tie_break(x)));
        let results: Vec<Result<(f64, f64), O::Error>> = if self.parallel {
            todo.par_iter().map(|(_, x)| run(x)).collect()
        } else {
            todo.iter().map(|(_, x)| run(x)).collect()
        };
        self.evaluations += todo.len();
        for ((key, _), r) in todo.into_iter().zip(results) {
            self.cache.insert(key, r?);
        }
        for e in elephants.iter_mut() {
            if e.fitness.is_none() {
                let (f, t) = self.cache[&cache_key(&e.position)];
                e.fitness = Some(f);
                e.tie = t;
            }
        }
        Ok(())
    }
}

/// Split `n_clans * clan_size` elephants into clans: warm-start positions
/// first (clamped), the rest uniform in the bounds. Nothing is evaluated.
pub fn init_population<R: Rng>(config: &EhoConfig, initial: &[Vec<f64>], rng: &mut R) -> Result<Vec<Clan>, EhoError> {
    config.validate()?;
    let dim = config.bounds.len();
    let total = config.population_size();
    let mut all = Vec::with_capacity(total);
    for p in initial.iter().take(total) {
        if p.len() != dim {
            return Err(EhoError::InvalidConfig(format!(
                "warm-start position has {} dimensions, expected {dim}",
                p.len()
            )));
        }
        let mut p = p.clone();
        config.clamp(&mut p);
        all.push(Elephant::new(p));
    }
    while all.len() < total {
        all.push(Elephant::new(config.random_position(rng)));
    }
    let mut clans = Vec::with_capacity(config.n_clans);
    let mut it = all.into_iter();
    for _ in 0..config.n_clans {
        clans.push(Clan {
            members: it.by_ref().take(config.clan_size).collect(),
        });
    }
    Ok(clans)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EhoOutcome {
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    /// Best fitness after each generation.
    pub trace: Vec<f64>,
    /// Fitness of the best initial elephant.
    pub initial_best: f64,
    /// Objective calls actually made (cache misses).
    pub evaluations: usize,
    pub final_population: Vec<Clan>,
}

#[derive(Debug)]
pub enum RunError<E> {
    Config(EhoError),
    /// The objective failed during `generation` (0 is the initial
    /// population); `partial_trace` holds the completed generations.
    Objective {
        error: E,
        generation: usize,
        partial_trace: Vec<f64>,
    },
}

impl<E: std::fmt::Display> std::fmt::Display for RunError<E> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Objective { error, generation, .. } => {
                write!(f, "fitness evaluation failed in generation {generation}: {error}")
            }
        }
    }
}

impl<E: std::fmt::Debug + std::fmt::Display> std::error::Error for RunError<E> {}

fn global_best(clans: &[Clan]) -> &Elephant {
    clans
        .iter()
        .flat_map(|c| &c.members)
        .reduce(|a, b| if b.rank(a) == Ordering::Less { b } else { a })
        .expect("population is never empty")
}

fn evaluate_all<O: Objective>(ev: &mut Evaluator<O>, clans: &mut [Clan]) -> Result<(), O::Error> {
    let mut refs: Vec<&mut Elephant> = clans.iter_mut().flat_map(|c| c.members.iter_mut()).collect();
    ev.evaluate(&mut refs)
}

/// Run the optimizer. `initial` positions seed the first clans.
pub fn run<O: Objective>(
    config: &EhoConfig,
    objective: &O,
    initial: &[Vec<f64>],
) -> Result<EhoOutcome, RunError<O::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut clans = init_population(config, initial, &mut rng).map_err(RunError::Config)?;
    let mut ev = Evaluator {
        objective,
        cache: HashMap::new(),
        parallel: config.parallel,
        evaluations: 0,
    };
    let mut trace = Vec::with_capacity(config.max_gen);
    evaluate_all(&mut ev, &mut clans).map_err(|error| RunError::Objective {
        error,
        generation: 0,
        partial_trace: Vec::new(),
    })?;
    let initial_best = global_best(&clans).fitness.expect("evaluated");

    for generation in 1..=config.max_gen {
        let mut ranked: Vec<&Elephant> = clans.iter().flat_map(|c| &c.members).collect();
        ranked.sort_by(|a, b| a.rank(b));
        let elites: Vec<Elephant> = ranked.iter().take(config.n_keep).map(|e| (*e).clone()).collect();

        let mut next = Vec::with_capacity(clans.len());
        for clan in &clans {
            let mut clan = clan.clone();
            clan.sort();
            let moved = clan_update(&clan, config, &mut rng);
            next.push(separate(&moved, config, &mut rng));
        }
        if let Err(error) = evaluate_all(&mut ev, &mut next) {
            return Err(RunError::Objective {
                error,
                generation,
                partial_trace: trace,
            });
        }

        // elites overwrite the worst of the new generation
        let mut slots: Vec<(usize, usize)> = next
            .iter()
            .enumerate()
            .flat_map(|(c, clan)| (0..clan.members.len()).map(move |m| (c, m)))
            .collect();
        slots.sort_by(|a, b| next[b.0].members[b.1].rank(&next[a.0].members[a.1]));
        for (elite, (c, m)) in elites.into_iter().zip(slots) {
            next[c].members[m] = elite;
        }
        clans = next;
        trace.push(global_best(&clans).fitness.expect("evaluated"));
    }

    let best = global_best(&clans).clone();
    Ok(EhoOutcome {
        best_position: best.position,
        best_fitness: best.fitness.expect("evaluated"),
        trace,
        initial_best,
        evaluations: ev.evaluations,
        final_population: clans,
    })
}

/// Write `generation,best_fitness` rows, generations numbered from 1.
pub fn write_trace_csv<W: Write>(mut out: W, trace: &[f64]) -> std::io::Result<()> {
    writeln!(out, "generation,best_fitness")?;
    for (g, f) in trace.iter().enumerate() {
        writeln!(out, "{},{}", g + 1, f)?;
    }
    Ok(())
}

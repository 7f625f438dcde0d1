use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fitness::FitnessContext;
use super::trace::ParticleSnapshot;
use super::velocity::{canonical_velocity, constriction, draw, position_update};
use super::{Coords, FitnessMode, KindRanges, ParamRanges, Particle, SwarmConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernels::KernelKind;
use crate::scalar::Scalar;
use crate::solver::{EvalReport, SvmModel};

/// Best position found, with where and when it was found.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BestPosition<T> {
    pub kind: KernelKind,
    pub position: Coords<T>,
    pub fitness: T,
    pub particle: usize,
    pub iteration: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TypeBest<T> {
    pub kind: KernelKind,
    /// Particles currently of this type.
    pub particles: usize,
    pub fitness: Option<T>,
    pub position: Option<Coords<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct IterationRecord<T> {
    pub iteration: usize,
    pub global_best_fitness: T,
    pub global_best_kind: KernelKind,
    pub per_type: Vec<TypeBest<T>>,
    /// Particles whose type differed from the global best's before regeneration.
    pub regen_eligible: usize,
    /// Indices regenerated at the start of this iteration.
    pub regenerated: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SearchReport<T> {
    pub kinds: Vec<KernelKind>,
    pub best: BestPosition<T>,
    pub best_model: SvmModel<T>,
    pub best_eval: EvalReport<T>,
    pub per_iteration: Vec<IterationRecord<T>>,
    pub fitness_evaluations: usize,
    pub fitness_mode: FitnessMode,
    pub seed: u64,
    pub trace: Option<Vec<ParticleSnapshot<T>>>,
    pub elapsed: Duration,
}

impl<T: Scalar> SearchReport<T> {
    /// Equality of everything except the wall-clock time.
    pub fn same_outcome(&self, other: &Self) -> bool {
        self.kinds == other.kinds
            && self.best == other.best
            && self.best_model == other.best_model
            && self.best_eval == other.best_eval
            && self.per_iteration == other.per_iteration
            && self.fitness_evaluations == other.fitness_evaluations
            && self.fitness_mode == other.fitness_mode
            && self.seed == other.seed
            && self.trace == other.trace
    }
}

/// One fixed-type run per kernel type.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TraditionalReport<T> {
    pub runs: Vec<SearchReport<T>>,
    /// Index into `runs` of the run with the highest best fitness.
    pub best_run: usize,
    pub fitness_evaluations: usize,
    pub elapsed: Duration,
}

impl<T: Scalar> TraditionalReport<T> {
    pub fn best(&self) -> &SearchReport<T> {
        &self.runs[self.best_run]
    }

    pub fn same_outcome(&self, other: &Self) -> bool {
        self.best_run == other.best_run
            && self.fitness_evaluations == other.fitness_evaluations
            && self.runs.len() == other.runs.len()
            && self
                .runs
                .iter()
                .zip(&other.runs)
                .all(|(a, b)| a.same_outcome(b))
    }
}

fn sample_position<T: Scalar, R: Rng + ?Sized>(r: &KindRanges<T>, rng: &mut R) -> Coords<T> {
    [r.x1.at(rng.gen()), r.x2.at(rng.gen()), r.c.at(rng.gen())]
}

/// Uniform in `[-width/2, width/2]` per coordinate.
fn sample_velocity<T: Scalar, R: Rng + ?Sized>(r: &KindRanges<T>, rng: &mut R) -> Coords<T> {
    let half = T::lit(0.5);
    let mut v = [T::zero(); 3];
    for (j, vj) in v.iter_mut().enumerate() {
        let u: f64 = rng.gen();
        *vj = (T::lit(u) - half) * r.axis(j).width();
    }
    v
}

fn spawn<T: Scalar, R: Rng + ?Sized>(
    kind: KernelKind,
    ranges: &ParamRanges<T>,
    rng: &mut R,
) -> Particle<T> {
    let r = ranges.get(kind);
    let position = sample_position(r, rng);
    let velocity = sample_velocity(r, rng);
    Particle::new(kind, position, velocity)
}

/// Moves the `floor(p * m / 100)` lowest-scoring particles (by personal best,
/// ties to the lower index) whose type differs from `target` into `target`'s
/// space with freshly sampled position and velocity. Their personal best
/// restarts at the new position and is marked stale until evaluated.
///
/// Returns the regenerated indices in ascending order.
pub fn regenerate<T: Scalar, R: Rng + ?Sized>(
    swarm: &mut [Particle<T>],
    target: KernelKind,
    quota: usize,
    ranges: &ParamRanges<T>,
    rng: &mut R,
) -> Vec<usize> {
    let mut eligible: Vec<usize> = (0..swarm.len())
        .filter(|&i| swarm[i].kind != target)
        .collect();
    eligible.sort_by(|&a, &b| {
        let fa = swarm[a].best_fitness.unwrap_or(T::neg_infinity());
        let fb = swarm[b].best_fitness.unwrap_or(T::neg_infinity());
        fa.partial_cmp(&fb)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    eligible.truncate(quota);
    eligible.sort_unstable();
    for &i in &eligible {
        let mut p = spawn(target, ranges, rng);
        p.regenerated = true;
        swarm[i] = p;
    }
    eligible
}

struct Engine<'c, 'd, T> {
    ctx: &'c FitnessContext<'d, T>,
    ranges: ParamRanges<T>,
    cfg: SwarmConfig<T>,
    kinds: Vec<KernelKind>,
    regenerate: bool,
}

impl<T: Scalar> Engine<'_, '_, T> {
    fn evaluate_all(&self, swarm: &[Particle<T>]) -> Result<Vec<T>> {
        let eval = |p: &Particle<T>| self.ctx.evaluate(p.kind, &p.position);
        if self.cfg.parallel {
            swarm.par_iter().map(eval).collect()
        } else {
            swarm.iter().map(eval).collect()
        }
    }

    fn type_bests(&self, swarm: &[Particle<T>]) -> Vec<TypeBest<T>> {
        self.kinds
            .iter()
            .map(|&kind| {
                let mut best: Option<(T, Coords<T>)> = None;
                let mut count = 0;
                for p in swarm.iter().filter(|p| p.kind == kind) {
                    count += 1;
                    if let Some(f) = p.best_fitness {
                        if best.is_none_or(|(bf, _)| f > bf) {
                            best = Some((f, p.best_position));
                        }
                    }
                }
                TypeBest {
                    kind,
                    particles: count,
                    fitness: best.map(|b| b.0),
                    position: best.map(|b| b.1),
                }
            })
            .collect()
    }

    fn snapshot(iteration: usize, swarm: &[Particle<T>], out: &mut Vec<ParticleSnapshot<T>>) {
        out.extend(swarm.iter().enumerate().map(|(i, p)| ParticleSnapshot {
            iteration,
            particle: i,
            kind: p.kind,
            x1: p.position[0],
            x2: p.position[1],
            c: p.position[2],
            fitness: p.fitness.unwrap_or(T::nan()),
            regenerated: p.regenerated,
        }));
    }

    /// Applies fresh fitness values, refreshes personal bests and, on strict
    /// improvement, the global best.
    fn absorb(
        swarm: &mut [Particle<T>],
        fitness: Vec<T>,
        iteration: usize,
        global: &mut Option<BestPosition<T>>,
    ) {
        for (p, f) in swarm.iter_mut().zip(fitness) {
            p.fitness = Some(f);
            if p.best_fitness.is_none_or(|b| f > b) {
                p.best_fitness = Some(f);
                p.best_position = p.position;
                p.best_kind = p.kind;
            }
        }
        for (i, p) in swarm.iter().enumerate() {
            let f = p.best_fitness.expect("evaluated");
            if global.as_ref().is_none_or(|g| f > g.fitness) {
                *global = Some(BestPosition {
                    kind: p.best_kind,
                    position: p.best_position,
                    fitness: f,
                    particle: i,
                    iteration,
                });
            }
        }
    }

    fn run(&self) -> Result<SearchReport<T>> {
        let start = Instant::now();
        self.cfg.validate()?;
        self.ranges.validate()?;
        if self.kinds.is_empty() {
            return Err(Error::Config("no kernel types to search".into()));
        }
        let chi = constriction(self.cfg.k_scale, self.cfg.phi_personal, self.cfg.phi_global)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let m = self.cfg.particles;

        // Equal share per type, remainder to the first types.
        let n_kinds = self.kinds.len();
        let mut swarm = Vec::with_capacity(m);
        for (t, &kind) in self.kinds.iter().enumerate() {
            let count = m / n_kinds + usize::from(t < m % n_kinds);
            for _ in 0..count {
                swarm.push(spawn(kind, &self.ranges, &mut rng));
            }
        }

        let mut evaluations = 0;
        let mut trace = self.cfg.record_trace.then(Vec::new);
        let mut records = Vec::with_capacity(self.cfg.max_iters + 1);
        let mut global: Option<BestPosition<T>> = None;

        let fitness = self.evaluate_all(&swarm)?;
        evaluations += swarm.len();
        Self::absorb(&mut swarm, fitness, 0, &mut global);
        if let Some(t) = trace.as_mut() {
            Self::snapshot(0, &swarm, t);
        }
        let g = global.as_ref().expect("non-empty swarm");
        records.push(IterationRecord {
            iteration: 0,
            global_best_fitness: g.fitness,
            global_best_kind: g.kind,
            per_type: self.type_bests(&swarm),
            regen_eligible: 0,
            regenerated: Vec::new(),
        });

        for iteration in 1..=self.cfg.max_iters {
            for p in swarm.iter_mut() {
                p.regenerated = false;
            }
            let target = global.as_ref().expect("initialized").kind;
            let eligible = swarm.iter().filter(|p| p.kind != target).count();
            let quota = if self.regenerate {
                self.cfg.regen_quota(eligible)
            } else {
                0
            };
            let regenerated = if quota > 0 {
                regenerate(&mut swarm, target, quota, &self.ranges, &mut rng)
            } else {
                Vec::new()
            };

            let attractors = self.type_bests(&swarm);
            for p in swarm.iter_mut() {
                let slot = self
                    .kinds
                    .iter()
                    .position(|&k| k == p.kind)
                    .expect("known kind");
                let attractor = attractors[slot]
                    .position
                    .expect("every populated type keeps an evaluated member");
                let draws = draw(&mut rng);
                p.velocity = canonical_velocity(
                    &p.velocity,
                    &p.position,
                    &p.best_position,
                    &attractor,
                    self.cfg.phi_personal,
                    self.cfg.phi_global,
                    chi,
                    &draws,
                );
                *p = position_update(p.clone(), &self.ranges);
            }

            let fitness = self.evaluate_all(&swarm)?;
            evaluations += swarm.len();
            Self::absorb(&mut swarm, fitness, iteration, &mut global);
            if let Some(t) = trace.as_mut() {
                Self::snapshot(iteration, &swarm, t);
            }
            let g = global.as_ref().expect("initialized");
            records.push(IterationRecord {
                iteration,
                global_best_fitness: g.fitness,
                global_best_kind: g.kind,
                per_type: self.type_bests(&swarm),
                regen_eligible: eligible,
                regenerated,
            });
        }

        let best = global.expect("initialized");
        let (best_model, best_eval) = self.ctx.train_model(best.kind, &best.position)?;
        Ok(SearchReport {
            kinds: self.kinds.clone(),
            best,
            best_model,
            best_eval,
            per_iteration: records,
            fitness_evaluations: evaluations,
            fitness_mode: self.ctx.mode(),
            seed: self.cfg.seed,
            trace,
            elapsed: start.elapsed(),
        })
    }
}

fn context<'d, T: Scalar>(
    train: &'d Dataset<T>,
    test: &'d Dataset<T>,
    cfg: &SwarmConfig<T>,
) -> Result<FitnessContext<'d, T>> {
    FitnessContext::new(train, test, cfg.fitness_mode, cfg.solver)
}

/// Single swarm over every searchable kernel type with regeneration.
pub fn modified_search<T: Scalar>(
    train: &Dataset<T>,
    test: &Dataset<T>,
    ranges: &ParamRanges<T>,
    cfg: &SwarmConfig<T>,
) -> Result<SearchReport<T>> {
    let ctx = context(train, test, cfg)?;
    Engine {
        ctx: &ctx,
        ranges: *ranges,
        cfg: cfg.clone(),
        kinds: KernelKind::SEARCHABLE.to_vec(),
        regenerate: true,
    }
    .run()
}

/// Independent canonical PSO per kernel type, each with `cfg.particles`
/// particles, keeping the best run (ties to the earlier type).
pub fn traditional_search<T: Scalar>(
    train: &Dataset<T>,
    test: &Dataset<T>,
    kinds: &[KernelKind],
    ranges: &ParamRanges<T>,
    cfg: &SwarmConfig<T>,
) -> Result<TraditionalReport<T>> {
    let start = Instant::now();
    if kinds.is_empty() {
        return Err(Error::Config("no kernel types to search".into()));
    }
    if kinds.contains(&KernelKind::Linear) {
        return Err(Error::Config(
            "the linear kernel is not part of the swarm search".into(),
        ));
    }
    let ctx = context(train, test, cfg)?;
    let mut runs = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let mut run_cfg = cfg.clone();
        run_cfg.seed = cfg.seed ^ (u64::from(kind.code()) << 32);
        let mut report = Engine {
            ctx: &ctx,
            ranges: *ranges,
            cfg: run_cfg,
            kinds: vec![kind],
            regenerate: false,
        }
        .run()?;
        report.seed = cfg.seed;
        runs.push(report);
    }
    let mut best_run = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.best.fitness > runs[best_run].best.fitness {
            best_run = i;
        }
    }
    let fitness_evaluations = runs.iter().map(|r| r.fitness_evaluations).sum();
    Ok(TraditionalReport {
        runs,
        best_run,
        fitness_evaluations,
        elapsed: start.elapsed(),
    })
}

//! Particle swarm search over kernel type, kernel parameters and `C`.
//!
//! A particle position is `(x1, x2, C)` together with a kernel type:
//!
//! | type       | x1    | x2  |
//! |------------|-------|-----|
//! | polynomial | d     | 0   |
//! | rbf        | sigma | 0   |
//! | sigmoid    | k2    | k1  |
//!
//! Velocities follow the canonical constriction update. In the modified
//! search each particle is attracted to the best position of its own kernel
//! type rather than to the global best.

mod engine;
mod fitness;
mod trace;
mod velocity;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelKind, KernelSpec};
use crate::scalar::Scalar;

pub use engine::{
    modified_search, regenerate, traditional_search, BestPosition, IterationRecord, SearchReport,
    TraditionalReport, TypeBest,
};
pub use fitness::{fitness, FitnessContext};
pub use trace::{write_trace_csv, ParticleSnapshot};
pub use velocity::{
    canonical_velocity, classic_velocity, constriction, position_update, velocity_update_canonical,
    velocity_update_classic, Draws,
};

/// `(x1, x2, C)`.
pub type Coords<T> = [T; 3];

/// Quantity the swarm maximizes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitnessMode {
    /// Accuracy on the training set only; the test set plays no part in the search.
    #[default]
    TrainAccuracy,
    /// `(S - train errors - test errors) / S` over both sets.
    CombinedAccuracy,
}

impl std::str::FromStr for FitnessMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "train" | "train_accuracy" => Ok(FitnessMode::TrainAccuracy),
            "combined" | "combined_accuracy" => Ok(FitnessMode::CombinedAccuracy),
            other => Err(Error::Config(format!("unknown fitness mode `{other}`"))),
        }
    }
}

/// Closed interval `[min, max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Interval<T> {
    pub min: T,
    pub max: T,
}

impl<T: Scalar> Interval<T> {
    pub fn new(min: T, max: T) -> Self {
        Interval { min, max }
    }

    pub fn width(&self) -> T {
        self.max - self.min
    }

    pub fn contains(&self, v: T) -> bool {
        v >= self.min && v <= self.max
    }

    pub fn clamp(&self, v: T) -> T {
        v.max(self.min).min(self.max)
    }

    /// `min + u * width` for `u` in [0, 1).
    pub(crate) fn at(&self, u: f64) -> T {
        self.min + T::lit(u) * self.width()
    }
}

/// Search ranges for one kernel type.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct KindRanges<T> {
    pub x1: Interval<T>,
    pub x2: Interval<T>,
    pub c: Interval<T>,
}

impl<T: Scalar> KindRanges<T> {
    pub fn axis(&self, j: usize) -> &Interval<T> {
        match j {
            0 => &self.x1,
            1 => &self.x2,
            _ => &self.c,
        }
    }

    pub fn contains(&self, pos: &Coords<T>) -> bool {
        (0..3).all(|j| self.axis(j).contains(pos[j]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ParamRanges<T> {
    pub polynomial: KindRanges<T>,
    pub rbf: KindRanges<T>,
    pub sigmoid: KindRanges<T>,
}

impl<T: Scalar> Default for ParamRanges<T> {
    /// `3 <= d <= 8`, `0.1 <= sigma <= 10`, `-10 <= k2 <= -0.1`,
    /// `0.1 <= k1 <= 10`, `0.1 <= C <= 10`.
    fn default() -> Self {
        let iv = |a: f64, b: f64| Interval::new(T::lit(a), T::lit(b));
        let c = iv(0.1, 10.0);
        ParamRanges {
            polynomial: KindRanges {
                x1: iv(3.0, 8.0),
                x2: iv(0.0, 0.0),
                c,
            },
            rbf: KindRanges {
                x1: iv(0.1, 10.0),
                x2: iv(0.0, 0.0),
                c,
            },
            sigmoid: KindRanges {
                x1: iv(-10.0, -0.1),
                x2: iv(0.1, 10.0),
                c,
            },
        }
    }
}

impl<T: Scalar> ParamRanges<T> {
    pub fn get(&self, kind: KernelKind) -> &KindRanges<T> {
        match kind {
            KernelKind::Polynomial => &self.polynomial,
            KernelKind::Rbf => &self.rbf,
            KernelKind::Sigmoid => &self.sigmoid,
            KernelKind::Linear => panic!("the linear kernel is not part of the swarm search"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for kind in KernelKind::SEARCHABLE {
            let r = self.get(kind);
            for (name, iv) in [("x1", r.x1), ("x2", r.x2), ("c", r.c)] {
                if !(iv.min <= iv.max) || !iv.min.is_finite() || !iv.max.is_finite() {
                    return Err(Error::Config(format!(
                        "{kind} range {name} = [{}, {}] is not an interval",
                        iv.min, iv.max
                    )));
                }
            }
            if !(r.c.min > T::zero()) {
                return Err(Error::Config(format!("{kind}: C range must be positive")));
            }
        }
        let zero = T::zero();
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(msg.to_string()))
            }
        };
        check(
            self.polynomial.x2.min == zero && self.polynomial.x2.max == zero,
            "polynomial x2 range must be [0, 0]",
        )?;
        check(
            self.rbf.x2.min == zero && self.rbf.x2.max == zero,
            "rbf x2 range must be [0, 0]",
        )?;
        check(
            self.polynomial.x1.min >= T::lit(0.5),
            "polynomial degree range must round to d >= 1",
        )?;
        check(self.rbf.x1.min > zero, "sigma range must be positive")?;
        check(self.sigmoid.x1.max < zero, "k2 range must be negative")?;
        check(self.sigmoid.x2.min > zero, "k1 range must be positive")?;
        Ok(())
    }
}

/// Kernel spec and `C` encoded by a particle position. The polynomial degree
/// is the coordinate rounded to the nearest integer.
pub fn decode<T: Scalar>(kind: KernelKind, pos: &Coords<T>) -> (KernelSpec<T>, T) {
    let spec = match kind {
        KernelKind::Polynomial => KernelSpec::Polynomial {
            degree: pos[0].round().max(T::one()).to_u32().unwrap_or(1),
        },
        KernelKind::Rbf => KernelSpec::Rbf { sigma: pos[0] },
        KernelKind::Sigmoid => KernelSpec::Sigmoid {
            k1: pos[1],
            k2: pos[0],
        },
        KernelKind::Linear => KernelSpec::Linear,
    };
    (spec, pos[2])
}

/// SMO settings used for every fitness evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", default)]
pub struct SolverSettings<T> {
    pub tolerance: T,
    pub max_passes: usize,
    pub sv_threshold: T,
}

impl<T: Scalar> Default for SolverSettings<T> {
    fn default() -> Self {
        SolverSettings {
            tolerance: T::lit(1e-3),
            max_passes: 100,
            sv_threshold: T::lit(1e-8),
        }
    }
}

/// What the regeneration percentage is taken of.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegenBase {
    /// `floor(p * m / 100)`, capped by the eligible count.
    #[default]
    Swarm,
    /// `floor(p * eligible / 100)`: a fixed share of the particles still
    /// outside the leading type.
    Eligible,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", default)]
pub struct SwarmConfig<T> {
    /// Total particle count `m`.
    pub particles: usize,
    /// Constriction scaling `K` in (0, 1).
    pub k_scale: T,
    pub phi_personal: T,
    pub phi_global: T,
    /// Iterations after the initial evaluation.
    pub max_iters: usize,
    /// Share of the initial swarm regenerated per iteration, in percent.
    pub regen_percent: T,
    pub regen_base: RegenBase,
    pub seed: u64,
    pub fitness_mode: FitnessMode,
    /// Evaluate fitness of one iteration on the rayon pool.
    pub parallel: bool,
    /// Keep a per-iteration snapshot of every particle.
    pub record_trace: bool,
    pub solver: SolverSettings<T>,
}

impl<T: Scalar> Default for SwarmConfig<T> {
    fn default() -> Self {
        SwarmConfig {
            particles: 600,
            k_scale: T::lit(0.3),
            phi_personal: T::lit(2.0),
            phi_global: T::lit(5.0),
            max_iters: 20,
            regen_percent: T::lit(20.0),
            regen_base: RegenBase::Swarm,
            seed: 0,
            fitness_mode: FitnessMode::TrainAccuracy,
            parallel: true,
            record_trace: false,
            solver: SolverSettings::default(),
        }
    }
}

impl<T: Scalar> SwarmConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 {
            return Err(Error::Config("swarm needs at least one particle".into()));
        }
        constriction(self.k_scale, self.phi_personal, self.phi_global)?;
        let p = self.regen_percent;
        if !(p >= T::zero() && p <= T::lit(100.0)) {
            return Err(Error::Config(format!(
                "regeneration percentage {p} outside [0, 100]"
            )));
        }
        if !(self.solver.tolerance > T::zero()) || self.solver.max_passes == 0 {
            return Err(Error::Config("invalid solver settings".into()));
        }
        Ok(())
    }

    /// Number of particles regenerated in an iteration where `eligible`
    /// particles differ in type from the global best.
    pub fn regen_quota(&self, eligible: usize) -> usize {
        let base = match self.regen_base {
            RegenBase::Swarm => self.particles,
            RegenBase::Eligible => eligible,
        };
        let raw = self.regen_percent.as_f64() * base as f64 / 100.0;
        ((raw + 1e-9).floor() as usize).min(eligible)
    }
}

/// One swarm member.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Particle<T> {
    pub kind: KernelKind,
    pub position: Coords<T>,
    pub velocity: Coords<T>,
    pub best_kind: KernelKind,
    pub best_position: Coords<T>,
    /// `None` right after regeneration until the next evaluation.
    pub best_fitness: Option<T>,
    /// Fitness at the current position.
    pub fitness: Option<T>,
    /// Regenerated during the current iteration.
    pub regenerated: bool,
}

impl<T: Scalar> Particle<T> {
    pub fn new(kind: KernelKind, position: Coords<T>, velocity: Coords<T>) -> Self {
        Particle {
            kind,
            position,
            velocity,
            best_kind: kind,
            best_position: position,
            best_fitness: None,
            fitness: None,
            regenerated: false,
        }
    }

    pub fn spec(&self) -> (KernelSpec<T>, T) {
        decode(self.kind, &self.position)
    }
}

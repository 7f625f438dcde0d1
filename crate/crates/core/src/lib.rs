//! Binary SVM classifiers trained on the soft-margin dual, with kernel type,
//! kernel parameters and the regularization constant chosen by particle swarm
//! search.
//!
//! Two search engines are provided:
//!
//! - [`swarm::traditional_search`] runs one canonical (constriction) PSO per
//!   fixed kernel type and keeps the best result.
//! - [`swarm::modified_search`] searches all kernel types at once in a single
//!   swarm. At the start of every iteration the worst `p%` of the particles
//!   whose kernel type differs from the current global best's type are
//!   *regenerated*: moved into the winning type's parameter space with fresh
//!   random coordinates.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`). The aliases
//! below fix the common `f64` instantiation.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod kernels;
pub mod model_io;
pub mod scalar;
pub mod solver;
pub mod swarm;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use data::{Label, SplitSpec};
pub use kernels::KernelKind;
pub use swarm::FitnessMode;

pub type Sample = data::Sample<f64>;
pub type Dataset = data::Dataset<f64>;
pub type MinMaxScaler = data::MinMaxScaler<f64>;
pub type KernelSpec = kernels::KernelSpec<f64>;
pub type KernelCache = kernels::KernelCache<f64>;
pub type TrainConfig = solver::TrainConfig<f64>;
pub type SvmModel = solver::SvmModel<f64>;
pub type EvalReport = solver::EvalReport<f64>;
pub type ParamRanges = swarm::ParamRanges<f64>;
pub type SwarmConfig = swarm::SwarmConfig<f64>;
pub type Particle = swarm::Particle<f64>;
pub type SearchReport = swarm::SearchReport<f64>;
pub type TraditionalReport = swarm::TraditionalReport<f64>;

pub type Dataset32 = data::Dataset<f32>;
pub type KernelSpec32 = kernels::KernelSpec<f32>;
pub type SvmModel32 = solver::SvmModel<f32>;
pub type SearchReport32 = swarm::SearchReport<f32>;

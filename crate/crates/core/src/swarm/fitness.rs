use super::{decode, Coords, FitnessMode, SolverSettings};
use crate::data::Dataset;
use crate::error::Result;
use crate::kernels::{KernelCache, KernelKind, KernelMatrix};
use crate::scalar::Scalar;
use crate::solver::{
    percent_correct, sign_label, train_with_matrix, EvalReport, SvmModel, TrainConfig,
};

/// Everything one fitness evaluation needs, with the pairwise inner products
/// and distances of the data computed once up front. Shared read-only
/// between worker threads.
pub struct FitnessContext<'a, T> {
    train: &'a Dataset<T>,
    test: &'a Dataset<T>,
    train_cache: KernelCache<T>,
    test_cache: KernelCache<T>,
    mode: FitnessMode,
    solver: SolverSettings<T>,
}

impl<'a, T: Scalar> FitnessContext<'a, T> {
    pub fn new(
        train: &'a Dataset<T>,
        test: &'a Dataset<T>,
        mode: FitnessMode,
        solver: SolverSettings<T>,
    ) -> Result<Self> {
        Ok(FitnessContext {
            train,
            test,
            train_cache: KernelCache::symmetric(train),
            test_cache: KernelCache::cross(test, train)?,
            mode,
            solver,
        })
    }

    pub fn mode(&self) -> FitnessMode {
        self.mode
    }

    pub fn train_set(&self) -> &Dataset<T> {
        self.train
    }

    pub fn test_set(&self) -> &Dataset<T> {
        self.test
    }

    fn config(&self, kind: KernelKind, pos: &Coords<T>) -> TrainConfig<T> {
        let (kernel, c) = decode(kind, pos);
        TrainConfig {
            kernel,
            c,
            tolerance: self.solver.tolerance,
            max_passes: self.solver.max_passes,
            sv_threshold: self.solver.sv_threshold,
        }
    }

    fn errors(model: &SvmModel<T>, k: &KernelMatrix<T>, ds: &Dataset<T>) -> usize {
        (0..ds.len())
            .filter(|&i| sign_label(model.decision_from_row(k.row(i))) != ds.label(i))
            .count()
    }

    /// Trains at `pos` and evaluates on both sets.
    pub fn train_model(
        &self,
        kind: KernelKind,
        pos: &Coords<T>,
    ) -> Result<(SvmModel<T>, EvalReport<T>)> {
        let cfg = self.config(kind, pos);
        let k = self.train_cache.matrix(&cfg.kernel);
        let model = train_with_matrix(self.train, &k, &cfg)?;
        let train_errors = Self::errors(&model, &k, self.train);
        let kt = self.test_cache.matrix(&cfg.kernel);
        let test_errors = Self::errors(&model, &kt, self.test);
        let report = EvalReport::from_counts(
            train_errors,
            self.train.len(),
            test_errors,
            self.test.len(),
            model.support_count(),
        );
        Ok((model, report))
    }

    /// Accuracy in percent per the configured [`FitnessMode`].
    pub fn evaluate(&self, kind: KernelKind, pos: &Coords<T>) -> Result<T> {
        let cfg = self.config(kind, pos);
        let k = self.train_cache.matrix(&cfg.kernel);
        let model = train_with_matrix(self.train, &k, &cfg)?;
        let train_errors = Self::errors(&model, &k, self.train);
        Ok(match self.mode {
            FitnessMode::TrainAccuracy => {
                percent_correct(self.train.len() - train_errors, self.train.len())
            }
            FitnessMode::CombinedAccuracy => {
                let kt = self.test_cache.matrix(&cfg.kernel);
                let errors = train_errors + Self::errors(&model, &kt, self.test);
                let total = self.train.len() + self.test.len();
                percent_correct(total - errors, total)
            }
        })
    }
}

/// One-off fitness evaluation. Searches should build a [`FitnessContext`]
/// once and reuse it.
pub fn fitness<T: Scalar>(
    kind: KernelKind,
    pos: &Coords<T>,
    train: &Dataset<T>,
    test: &Dataset<T>,
    mode: FitnessMode,
    solver: SolverSettings<T>,
) -> Result<T> {
    FitnessContext::new(train, test, mode, solver)?.evaluate(kind, pos)
}

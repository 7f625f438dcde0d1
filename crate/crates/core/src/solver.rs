//! Soft-margin SVM training on the dual problem
//!
//! ```text
//! min  -L(lambda) = -sum_i lambda_i + 1/2 sum_i sum_t lambda_i lambda_t y_i y_t k(z_i, z_t)
//! s.t. sum_i lambda_i y_i = 0,   0 <= lambda_i <= C
//! ```
//!
//! solved by SMO: every step optimizes two multipliers analytically so the
//! equality constraint stays satisfied. The first multiplier is the one that
//! violates the KKT conditions most; the second is the violating partner
//! with the largest `(E_i - E_j)^2 / eta`, i.e. the largest error gap
//! weighted by the pair's curvature `eta`. The solver does not assume a positive
//! semi-definite kernel: on a non-positive curvature the step is taken with a
//! small positive curvature instead, which yields a KKT point but not
//! necessarily the global optimum.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Label};
use crate::error::{Error, Result};
use crate::kernels::{kernel_eval, KernelMatrix, KernelSpec};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrainConfig<T> {
    pub kernel: KernelSpec<T>,
    /// Upper bound `C` on every multiplier.
    pub c: T,
    /// Stop once the maximal KKT violation gap falls to this value.
    pub tolerance: T,
    /// Iteration budget, in units of `n` pair updates.
    pub max_passes: usize,
    /// Multipliers above this count as support vectors.
    pub sv_threshold: T,
}

impl<T: Scalar> TrainConfig<T> {
    pub fn new(kernel: KernelSpec<T>, c: T) -> Self {
        TrainConfig {
            kernel,
            c,
            tolerance: T::lit(1e-3),
            max_passes: 100,
            sv_threshold: T::lit(1e-8),
        }
    }

    pub fn with_tolerance(mut self, tolerance: T) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_passes(mut self, max_passes: usize) -> Self {
        self.max_passes = max_passes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if !(self.c > T::zero() && self.c.is_finite()) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tolerance > T::zero()) {
            return Err(Error::Config(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_passes == 0 {
            return Err(Error::Config("max_passes must be at least 1".into()));
        }
        if !(self.sv_threshold > T::zero()) {
            return Err(Error::Config("sv_threshold must be positive".into()));
        }
        Ok(())
    }
}

/// Full solver output over every training point.
#[derive(Clone, Debug, PartialEq)]
pub struct DualSolution<T> {
    pub alphas: Vec<T>,
    pub bias: T,
    /// Value of `-L(lambda)` at the returned multipliers.
    pub objective: T,
    /// Final maximal violation `m(lambda) - M(lambda)`.
    pub kkt_gap: T,
    pub iterations: usize,
    pub converged: bool,
}

/// `-L(lambda)` evaluated directly from the kernel matrix.
pub fn dual_objective<T: Scalar>(k: &KernelMatrix<T>, y: &[T], alphas: &[T]) -> T {
    let n = alphas.len();
    let mut quad = T::zero();
    for i in 0..n {
        if alphas[i] == T::zero() {
            continue;
        }
        let row = k.row(i);
        let mut acc = T::zero();
        for t in 0..n {
            acc = acc + alphas[t] * y[t] * row[t];
        }
        quad = quad + alphas[i] * y[i] * acc;
    }
    T::lit(0.5) * quad - alphas.iter().copied().sum::<T>()
}

/// Runs SMO on a precomputed kernel matrix with labels `y` in {+1, -1}.
pub fn solve_dual<T: Scalar>(
    k: &KernelMatrix<T>,
    y: &[T],
    cfg: &TrainConfig<T>,
) -> Result<DualSolution<T>> {
    cfg.validate()?;
    let n = y.len();
    if k.rows() != n || k.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: k.rows(),
        });
    }
    let positives = y.iter().filter(|&&v| v > T::zero()).count();
    if positives == 0 || positives == n {
        return Err(Error::Degenerate(
            "training set must contain both classes".into(),
        ));
    }

    let c = cfg.c;
    let zero = T::zero();
    let tau = T::lit(1e-12);
    let mut alpha = vec![zero; n];
    // Gradient of -L: G = Q lambda - 1 with Q_it = y_i y_t k_it.
    let mut grad = vec![-T::one(); n];
    let max_iter = cfg.max_passes.saturating_mul(n.max(10));
    let mut iterations = 0;
    let mut converged = false;
    let mut gap = T::infinity();

    let in_up = |a: T, yi: T| (yi > zero && a < c) || (yi < zero && a > zero);
    let in_low = |a: T, yi: T| (yi > zero && a > zero) || (yi < zero && a < c);
    let diag: Vec<T> = (0..n).map(|t| k.get(t, t)).collect();

    // Shrinking: bounded multipliers that are unlikely to move leave the
    // active set; their gradients are rebuilt before optimality is declared.
    let mut active: Vec<usize> = (0..n).collect();
    let mut unshrunk = false;
    let shrink_every = n.min(1000);
    let mut countdown = shrink_every;

    while iterations < max_iter {
        countdown -= 1;
        if countdown == 0 {
            countdown = shrink_every;
            let (mut up, mut low) = (T::neg_infinity(), T::neg_infinity());
            for &t in &active {
                let v = -y[t] * grad[t];
                if in_up(alpha[t], y[t]) {
                    up = up.max(v);
                }
                if in_low(alpha[t], y[t]) {
                    low = low.max(-v);
                }
            }
            if !unshrunk && up + low <= T::lit(10.0) * cfg.tolerance {
                unshrunk = true;
                reconstruct_gradient(k, y, &alpha, &mut grad, &mut active);
            }
            active.retain(|&t| {
                let (a, v) = (alpha[t], -y[t] * grad[t]);
                let shrink = if a >= c {
                    if y[t] > zero {
                        v > up
                    } else {
                        -v > low
                    }
                } else if a <= zero {
                    if y[t] > zero {
                        -v > low
                    } else {
                        v > up
                    }
                } else {
                    false
                };
                !shrink
            });
        }

        let mut i = usize::MAX;
        let mut g_max = T::neg_infinity();
        for &t in &active {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > g_max {
                g_max = v;
                i = t;
            }
        }
        // Partner: largest guaranteed decrease b^2 / a among violating I_low points.
        let mut j = usize::MAX;
        let mut g_min = T::infinity();
        let mut best_gain = zero;
        if i != usize::MAX {
            let row_i = k.row(i);
            for &t in &active {
                if !in_low(alpha[t], y[t]) {
                    continue;
                }
                let v = -y[t] * grad[t];
                if v < g_min {
                    g_min = v;
                }
                let b = g_max - v;
                if b > zero {
                    let mut a = diag[i] + diag[t] - T::lit(2.0) * row_i[t];
                    if a <= zero {
                        a = tau;
                    }
                    let gain = b * b / a;
                    if gain > best_gain {
                        best_gain = gain;
                        j = t;
                    }
                }
            }
        }
        gap = g_max - g_min;
        if i == usize::MAX || j == usize::MAX || gap <= cfg.tolerance {
            if active.len() < n {
                reconstruct_gradient(k, y, &alpha, &mut grad, &mut active);
                countdown = shrink_every;
                continue;
            }
            converged = true;
            break;
        }
        iterations += 1;

        let (yi, yj) = (y[i], y[j]);
        let kii = k.get(i, i);
        let kjj = k.get(j, j);
        let kij = k.get(i, j);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);

        if yi != yj {
            let mut quad = kii + kjj + T::lit(2.0) * (yi * yj * kij);
            if quad <= zero {
                quad = tau;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai = ai + delta;
            aj = aj + delta;
            if diff > zero {
                if aj < zero {
                    aj = zero;
                    ai = diff;
                }
            } else if ai < zero {
                ai = zero;
                aj = -diff;
            }
            if diff > zero {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let mut quad = kii + kjj - T::lit(2.0) * (yi * yj * kij);
            if quad <= zero {
                quad = tau;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai = ai - delta;
            aj = aj + delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < zero {
                aj = zero;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < zero {
                ai = zero;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;

        let di = (ai - old_i) * yi;
        let dj = (aj - old_j) * yj;
        let (row_i, row_j) = (k.row(i), k.row(j));
        for &t in &active {
            grad[t] = grad[t] + y[t] * (row_i[t] * di + row_j[t] * dj);
        }
    }
    if active.len() < n {
        reconstruct_gradient(k, y, &alpha, &mut grad, &mut active);
    }

    let bias = compute_bias(&alpha, &grad, y, c);
    let objective = dual_objective(k, y, &alpha);
    Ok(DualSolution {
        alphas: alpha,
        bias,
        objective,
        kkt_gap: gap,
        iterations,
        converged,
    })
}

/// Recomputes `G = Q lambda - 1` for inactive indices and reactivates them.
fn reconstruct_gradient<T: Scalar>(
    k: &KernelMatrix<T>,
    y: &[T],
    alpha: &[T],
    grad: &mut [T],
    active: &mut Vec<usize>,
) {
    let n = alpha.len();
    let mut is_active = vec![false; n];
    for &t in active.iter() {
        is_active[t] = true;
    }
    for t in (0..n).filter(|&t| !is_active[t]) {
        let row = k.row(t);
        let mut acc = T::zero();
        for s in 0..n {
            if alpha[s] != T::zero() {
                acc = acc + alpha[s] * y[s] * row[s];
            }
        }
        grad[t] = y[t] * acc - T::one();
    }
    active.clear();
    active.extend(0..n);
}

/// Mean of `y_i - sum_t lambda_t y_t k_it` over unbounded multipliers, or the
/// midpoint of the interval allowed by the bounded ones when none is free.
fn compute_bias<T: Scalar>(alpha: &[T], grad: &[T], y: &[T], c: T) -> T {
    let zero = T::zero();
    let mut sum = zero;
    let mut free = 0usize;
    let mut upper = T::infinity();
    let mut lower = T::neg_infinity();
    for t in 0..alpha.len() {
        let estimate = -y[t] * grad[t];
        if alpha[t] > zero && alpha[t] < c {
            sum = sum + estimate;
            free += 1;
        } else {
            // Bounded points constrain b from one side: y_t f(z_t) <= 1 at C,
            // y_t f(z_t) >= 1 at zero.
            let caps_from_above = (alpha[t] >= c) == (y[t] > zero);
            if caps_from_above {
                upper = upper.min(estimate);
            } else {
                lower = lower.max(estimate);
            }
        }
    }
    if free > 0 {
        return sum / T::from_count(free);
    }
    match (lower.is_finite(), upper.is_finite()) {
        (true, true) => (lower + upper) * T::lit(0.5),
        (true, false) => lower,
        (false, true) => upper,
        (false, false) => zero,
    }
}

/// Trained classifier. Only multipliers above the support-vector threshold are kept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SvmModel<T> {
    /// Positions of the support vectors in the training set.
    pub support_indices: Vec<usize>,
    pub alphas: Vec<T>,
    pub labels: Vec<Label>,
    pub support_vectors: Vec<Vec<T>>,
    pub bias: T,
    pub kernel: KernelSpec<T>,
    pub c: T,
    pub dim: usize,
    pub converged: bool,
    pub iterations: usize,
    pub objective: T,
}

impl<T: Scalar> SvmModel<T> {
    fn from_solution(train: &Dataset<T>, cfg: &TrainConfig<T>, sol: DualSolution<T>) -> Self {
        let mut model = SvmModel {
            support_indices: Vec::new(),
            alphas: Vec::new(),
            labels: Vec::new(),
            support_vectors: Vec::new(),
            bias: sol.bias,
            kernel: cfg.kernel,
            c: cfg.c,
            dim: train.q(),
            converged: sol.converged,
            iterations: sol.iterations,
            objective: sol.objective,
        };
        for (i, &a) in sol.alphas.iter().enumerate() {
            if a > cfg.sv_threshold {
                model.support_indices.push(i);
                model.alphas.push(a);
                model.labels.push(train.label(i));
                model.support_vectors.push(train.features(i).to_vec());
            }
        }
        model
    }

    pub fn support_count(&self) -> usize {
        self.alphas.len()
    }

    /// `sum_i lambda_i y_i k(z_i, z) + b`.
    pub fn decision_value(&self, z: &[T]) -> Result<T> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: z.len(),
            });
        }
        let mut acc = T::zero();
        for ((sv, &a), &l) in self
            .support_vectors
            .iter()
            .zip(&self.alphas)
            .zip(&self.labels)
        {
            acc = acc + a * l.as_scalar::<T>() * kernel_eval(&self.kernel, sv, z)?;
        }
        Ok(acc + self.bias)
    }

    /// Decision value from a precomputed kernel row against the full
    /// training set (indexed by training position). Bit-identical to
    /// [`SvmModel::decision_value`] when the row came from a
    /// [`KernelCache`](crate::kernels::KernelCache) of the same data.
    pub fn decision_from_row(&self, kernel_row: &[T]) -> T {
        let mut acc = T::zero();
        for ((&idx, &a), &l) in self
            .support_indices
            .iter()
            .zip(&self.alphas)
            .zip(&self.labels)
        {
            acc = acc + a * l.as_scalar::<T>() * kernel_row[idx];
        }
        acc + self.bias
    }

    pub fn predict(&self, z: &[T]) -> Result<Label> {
        Ok(sign_label(self.decision_value(z)?))
    }
}

/// Ties (exact zero) go to the positive class.
pub fn sign_label<T: Scalar>(v: T) -> Label {
    Label::from_sign(v >= T::zero())
}

pub fn train<T: Scalar>(train_set: &Dataset<T>, cfg: &TrainConfig<T>) -> Result<SvmModel<T>> {
    cfg.validate()?;
    if !train_set.has_both_classes() {
        return Err(Error::Degenerate(
            "training set must contain both classes".into(),
        ));
    }
    let k = KernelMatrix::gram(&cfg.kernel, train_set);
    train_with_matrix(train_set, &k, cfg)
}

/// Trains with a caller-supplied Gram matrix of `train_set` under `cfg.kernel`.
pub fn train_with_matrix<T: Scalar>(
    train_set: &Dataset<T>,
    k: &KernelMatrix<T>,
    cfg: &TrainConfig<T>,
) -> Result<SvmModel<T>> {
    let y: Vec<T> = train_set
        .samples()
        .iter()
        .map(|s| s.label.as_scalar())
        .collect();
    let sol = solve_dual(k, &y, cfg)?;
    Ok(SvmModel::from_solution(train_set, cfg, sol))
}

pub fn decision_value<T: Scalar>(model: &SvmModel<T>, z: &[T]) -> Result<T> {
    model.decision_value(z)
}

pub fn predict<T: Scalar>(model: &SvmModel<T>, z: &[T]) -> Result<Label> {
    model.predict(z)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EvalReport<T> {
    pub train_errors: usize,
    pub train_total: usize,
    pub test_errors: usize,
    pub test_total: usize,
    pub support_vectors: usize,
    /// `(S - train_errors - test_errors) / S * 100` over all `S` objects.
    pub accuracy: T,
}

impl<T: Scalar> EvalReport<T> {
    pub fn from_counts(
        train_errors: usize,
        train_total: usize,
        test_errors: usize,
        test_total: usize,
        support_vectors: usize,
    ) -> Self {
        let total = train_total + test_total;
        EvalReport {
            train_errors,
            train_total,
            test_errors,
            test_total,
            support_vectors,
            accuracy: percent_correct(total - train_errors - test_errors, total),
        }
    }

    /// Accuracy on the training set alone, in percent.
    pub fn train_accuracy(&self) -> T {
        percent_correct(self.train_total - self.train_errors, self.train_total)
    }

    pub fn test_accuracy(&self) -> T {
        percent_correct(self.test_total - self.test_errors, self.test_total)
    }
}

pub(crate) fn percent_correct<T: Scalar>(correct: usize, total: usize) -> T {
    if total == 0 {
        return T::lit(100.0);
    }
    T::from_count(correct) / T::from_count(total) * T::lit(100.0)
}

pub fn count_errors<T: Scalar>(model: &SvmModel<T>, ds: &Dataset<T>) -> Result<usize> {
    let mut errors = 0;
    for s in ds.samples() {
        if model.predict(&s.features)? != s.label {
            errors += 1;
        }
    }
    Ok(errors)
}

pub fn evaluate<T: Scalar>(
    model: &SvmModel<T>,
    train_set: &Dataset<T>,
    test_set: &Dataset<T>,
) -> Result<EvalReport<T>> {
    Ok(EvalReport::from_counts(
        count_errors(model, train_set)?,
        train_set.len(),
        count_errors(model, test_set)?,
        test_set.len(),
        model.support_count(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_points() -> Dataset<f64> {
        Dataset::from_rows(vec![vec![0.0], vec![1.0]], &[-1, 1]).unwrap()
    }

    fn tight(kernel: KernelSpec<f64>, c: f64) -> TrainConfig<f64> {
        TrainConfig::new(kernel, c).with_tolerance(1e-9)
    }

    /// Brute force over the feasible segment lambda_1 = lambda_2 = t in [0, C]
    /// (the equality constraint with opposite labels), grid step 1e-4.
    fn grid_optimum_two_points(c: f64) -> f64 {
        let ds = two_points();
        let k = KernelMatrix::gram(&KernelSpec::Linear, &ds);
        let y = [-1.0, 1.0];
        let steps = (c / 1e-4).round() as usize;
        (0..=steps)
            .map(|s| {
                let t = c * s as f64 / steps as f64;
                (t, dual_objective(&k, &y, &[t, t]))
            })
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap()
            .0
    }

    #[test]
    fn two_point_analytic_solution() {
        let oracle = grid_optimum_two_points(10.0);
        assert_abs_diff_eq!(oracle, 2.0, epsilon = 1e-3);

        let model = train(&two_points(), &tight(KernelSpec::Linear, 10.0)).unwrap();
        assert_eq!(model.support_count(), 2);
        for &a in &model.alphas {
            assert_abs_diff_eq!(a, 2.0, epsilon = 1e-6);
        }
        assert_abs_diff_eq!(model.bias, -1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(model.decision_value(&[0.5]).unwrap(), 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(model.decision_value(&[0.0]).unwrap(), -1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(model.decision_value(&[1.0]).unwrap(), 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(model.decision_value(&[3.0]).unwrap(), 5.0, epsilon = 1e-6);
    }

    #[test]
    fn two_point_box_constraint_active() {
        let oracle = grid_optimum_two_points(0.5);
        assert_abs_diff_eq!(oracle, 0.5, epsilon = 1e-12);

        let model = train(&two_points(), &tight(KernelSpec::Linear, 0.5)).unwrap();
        assert_eq!(model.alphas, vec![0.5, 0.5]);
        // Both multipliers at C: b lies in [-1, 0.5], midpoint -0.25.
        assert_abs_diff_eq!(model.bias, -0.25, epsilon = 1e-12);
    }

    fn xor() -> Dataset<f64> {
        Dataset::from_rows(
            vec![
                vec![0.0, 0.0],
                vec![1.0, 1.0],
                vec![0.0, 1.0],
                vec![1.0, 0.0],
            ],
            &[1, 1, -1, -1],
        )
        .unwrap()
    }

    #[test]
    fn xor_separated_by_rbf_only() {
        let ds = xor();
        let rbf = train(&ds, &TrainConfig::new(KernelSpec::rbf(0.5).unwrap(), 10.0)).unwrap();
        assert_eq!(count_errors(&rbf, &ds).unwrap(), 0);
        let lin = train(&ds, &TrainConfig::new(KernelSpec::Linear, 10.0)).unwrap();
        assert!(count_errors(&lin, &ds).unwrap() >= 1);
    }

    #[test]
    fn xor_has_no_linear_separator() {
        // Exhaustive over separator orientations and offsets on a fine grid.
        let ds = xor();
        for a in 0..360 {
            let th = (a as f64).to_radians();
            let (w0, w1) = (th.cos(), th.sin());
            for bi in -300..=300 {
                let b = bi as f64 / 100.0;
                let separates = ds.samples().iter().all(|s| {
                    let v = w0 * s.features[0] + w1 * s.features[1] + b;
                    (v > 0.0) == (s.label == Label::Positive) && v != 0.0
                });
                assert!(!separates);
            }
        }
    }

    #[test]
    fn single_class_is_degenerate() {
        let ds = Dataset::from_rows(vec![vec![0.0], vec![1.0]], &[1, 1]).unwrap();
        let err = train(&ds, &TrainConfig::new(KernelSpec::Linear, 1.0)).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn invalid_c_rejected() {
        for c in [0.0, -1.0, f64::NAN] {
            let err = train(&two_points(), &TrainConfig::new(KernelSpec::Linear, c)).unwrap_err();
            assert!(matches!(err, Error::Config(_)));
        }
    }

    #[test]
    fn budget_exhaustion_flags_model() {
        let ds = xor();
        let cfg = TrainConfig::new(KernelSpec::rbf(0.5).unwrap(), 10.0)
            .with_tolerance(1e-15)
            .with_max_passes(1);
        let model = train(&ds, &cfg).unwrap();
        assert!(model.iterations > 0);
        assert!(!model.converged || model.iterations < 10);
    }

    #[test]
    fn predict_tie_rule_and_sign() {
        assert_eq!(sign_label(2.3f64), Label::Positive);
        assert_eq!(sign_label(-0.1f64), Label::Negative);
        assert_eq!(sign_label(0.0f64), Label::Positive);
        assert_eq!(sign_label(-0.0f64), Label::Positive);
    }

    #[test]
    fn decision_dimension_mismatch() {
        let model = train(&two_points(), &TrainConfig::new(KernelSpec::Linear, 1.0)).unwrap();
        assert!(matches!(
            model.decision_value(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn eval_report_accuracy() {
        let r = EvalReport::<f64>::from_counts(5, 427, 0, 142, 66);
        assert_abs_diff_eq!(r.accuracy, 99.12, epsilon = 0.005);
        let r = EvalReport::<f64>::from_counts(4, 192, 10, 78, 99);
        assert_abs_diff_eq!(r.accuracy, 94.81, epsilon = 0.005);
        let r = EvalReport::<f64>::from_counts(0, 240, 0, 60, 6);
        assert_eq!(r.accuracy, 100.0);
    }

    #[test]
    fn f32_instantiation_trains() {
        let ds: Dataset<f32> = two_points().cast();
        let model = train(&ds, &TrainConfig::new(KernelSpec::Linear, 10.0f32)).unwrap();
        assert!((model.bias + 1.0).abs() < 1e-3);
    }
}

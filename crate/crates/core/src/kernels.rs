//! Kernel families and a precomputed pairwise cache.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Kernel type tag. The numeric codes are the ones used in reports and
/// particle traces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KernelKind {
    Linear = 0,
    Polynomial = 1,
    Rbf = 2,
    Sigmoid = 3,
}

impl KernelKind {
    /// Kernel types the swarm searches over.
    pub const SEARCHABLE: [KernelKind; 3] =
        [KernelKind::Polynomial, KernelKind::Rbf, KernelKind::Sigmoid];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(KernelKind::Linear),
            1 => Ok(KernelKind::Polynomial),
            2 => Ok(KernelKind::Rbf),
            3 => Ok(KernelKind::Sigmoid),
            other => Err(Error::Config(format!("unknown kernel code {other}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Linear => "linear",
            KernelKind::Polynomial => "polynomial",
            KernelKind::Rbf => "rbf",
            KernelKind::Sigmoid => "sigmoid",
        }
    }
}

impl Serialize for KernelKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.code())
    }
}

impl<'de> Deserialize<'de> for KernelKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let code = u8::deserialize(d)?;
        KernelKind::from_code(code).map_err(serde::de::Error::custom)
    }
}

impl std::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A kernel family with its parameters.
///
/// - linear: `<a,b>`
/// - polynomial: `(<a,b> + 1)^d`, `d >= 1`
/// - rbf: `exp(-|a-b|^2 / (2 sigma^2))`, `sigma > 0`
/// - sigmoid: `tanh(k2 + k1 <a,b>)`, `k1 > 0`, `k2 < 0`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawKernelSpec<T>",
    into = "RawKernelSpec<T>",
    bound = "T: Scalar"
)]
pub enum KernelSpec<T> {
    Linear,
    Polynomial { degree: u32 },
    Rbf { sigma: T },
    Sigmoid { k1: T, k2: T },
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct RawKernelSpec<T> {
    kind: KernelKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    d: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    sigma: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    k1: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    k2: Option<T>,
}

impl<T: Scalar> From<KernelSpec<T>> for RawKernelSpec<T> {
    fn from(spec: KernelSpec<T>) -> Self {
        let mut raw = RawKernelSpec {
            kind: spec.kind(),
            d: None,
            sigma: None,
            k1: None,
            k2: None,
        };
        match spec {
            KernelSpec::Linear => {}
            KernelSpec::Polynomial { degree } => raw.d = Some(degree),
            KernelSpec::Rbf { sigma } => raw.sigma = Some(sigma),
            KernelSpec::Sigmoid { k1, k2 } => {
                raw.k1 = Some(k1);
                raw.k2 = Some(k2);
            }
        }
        raw
    }
}

impl<T: Scalar> TryFrom<RawKernelSpec<T>> for KernelSpec<T> {
    type Error = Error;

    fn try_from(raw: RawKernelSpec<T>) -> Result<Self> {
        let missing = |name: &str| Error::Config(format!("{} kernel needs `{name}`", raw.kind));
        let spec = match raw.kind {
            KernelKind::Linear => KernelSpec::Linear,
            KernelKind::Polynomial => KernelSpec::Polynomial {
                degree: raw.d.ok_or_else(|| missing("d"))?,
            },
            KernelKind::Rbf => KernelSpec::Rbf {
                sigma: raw.sigma.ok_or_else(|| missing("sigma"))?,
            },
            KernelKind::Sigmoid => KernelSpec::Sigmoid {
                k1: raw.k1.ok_or_else(|| missing("k1"))?,
                k2: raw.k2.ok_or_else(|| missing("k2"))?,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl<T: Scalar> KernelSpec<T> {
    pub fn polynomial(degree: u32) -> Result<Self> {
        let s = KernelSpec::Polynomial { degree };
        s.validate()?;
        Ok(s)
    }

    pub fn rbf(sigma: T) -> Result<Self> {
        let s = KernelSpec::Rbf { sigma };
        s.validate()?;
        Ok(s)
    }

    pub fn sigmoid(k1: T, k2: T) -> Result<Self> {
        let s = KernelSpec::Sigmoid { k1, k2 };
        s.validate()?;
        Ok(s)
    }

    /// Default parameters of each family: `d = 3`, `sigma = 1`, `k1 = 1`, `k2 = -1`.
    pub fn default_for(kind: KernelKind) -> Self {
        match kind {
            KernelKind::Linear => KernelSpec::Linear,
            KernelKind::Polynomial => KernelSpec::Polynomial { degree: 3 },
            KernelKind::Rbf => KernelSpec::Rbf { sigma: T::one() },
            KernelKind::Sigmoid => KernelSpec::Sigmoid {
                k1: T::one(),
                k2: -T::one(),
            },
        }
    }

    pub fn kind(&self) -> KernelKind {
        match self {
            KernelSpec::Linear => KernelKind::Linear,
            KernelSpec::Polynomial { .. } => KernelKind::Polynomial,
            KernelSpec::Rbf { .. } => KernelKind::Rbf,
            KernelSpec::Sigmoid { .. } => KernelKind::Sigmoid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            KernelSpec::Linear => true,
            KernelSpec::Polynomial { degree } => degree >= 1,
            KernelSpec::Rbf { sigma } => sigma > T::zero() && sigma.is_finite(),
            KernelSpec::Sigmoid { k1, k2 } => {
                k1 > T::zero() && k2 < T::zero() && k1.is_finite() && k2.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid kernel parameters {self:?}")))
        }
    }

    /// True when the kernel value depends on the squared distance rather
    /// than the inner product.
    fn uses_distance(&self) -> bool {
        matches!(self, KernelSpec::Rbf { .. })
    }

    /// Kernel value from the precomputed inner product and squared distance
    /// of the pair. Only the one the family needs is read.
    #[inline]
    pub fn apply(&self, dot: T, sq_dist: T) -> T {
        match *self {
            KernelSpec::Linear => dot,
            KernelSpec::Polynomial { degree } => (dot + T::one()).powi(degree as i32),
            KernelSpec::Rbf { sigma } => (-sq_dist / (T::lit(2.0) * sigma * sigma)).exp(),
            KernelSpec::Sigmoid { k1, k2 } => (k2 + k1 * dot).tanh(),
        }
    }

    pub fn eval(&self, a: &[T], b: &[T]) -> Result<T> {
        kernel_eval(self, a, b)
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| {
        let d = x - y;
        acc + d * d
    })
}

/// Evaluates `kappa(a, b)`.
pub fn kernel_eval<T: Scalar>(spec: &KernelSpec<T>, a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(if spec.uses_distance() {
        spec.apply(T::zero(), sq_dist(a, b))
    } else {
        spec.apply(dot(a, b), T::zero())
    })
}

/// Dense row-major kernel matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> KernelMatrix<T> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        KernelMatrix { rows, cols, data }
    }

    /// Gram matrix of `ds` under `spec`, evaluated pair by pair.
    pub fn gram(spec: &KernelSpec<T>, ds: &Dataset<T>) -> Self {
        let n = ds.len();
        let mut data = vec![T::zero(); n * n];
        for i in 0..n {
            for j in i..n {
                let v = kernel_eval(spec, ds.features(i), ds.features(j))
                    .expect("dataset rows share a dimension");
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        KernelMatrix {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Pairwise inner products and squared distances between two sample sets,
/// computed once so that kernel matrices for many `KernelSpec`s can be
/// derived cheaply. Matrices built from the cache are bit-identical to
/// evaluating [`kernel_eval`] pair by pair.
#[derive(Clone, Debug)]
pub struct KernelCache<T> {
    rows: usize,
    cols: usize,
    symmetric: bool,
    dots: Vec<T>,
    sq_dists: Vec<T>,
}

impl<T: Scalar> KernelCache<T> {
    /// Cache of `ds` against itself.
    pub fn symmetric(ds: &Dataset<T>) -> Self {
        let n = ds.len();
        let mut dots = vec![T::zero(); n * n];
        let mut sq_dists = vec![T::zero(); n * n];
        for i in 0..n {
            for j in i..n {
                let (a, b) = (ds.features(i), ds.features(j));
                let (d, s) = (dot(a, b), sq_dist(a, b));
                dots[i * n + j] = d;
                dots[j * n + i] = d;
                sq_dists[i * n + j] = s;
                sq_dists[j * n + i] = s;
            }
        }
        KernelCache {
            rows: n,
            cols: n,
            symmetric: true,
            dots,
            sq_dists,
        }
    }

    /// Cache of every row sample against every column sample.
    pub fn cross(rows: &Dataset<T>, cols: &Dataset<T>) -> Result<Self> {
        if rows.q() != cols.q() && !rows.is_empty() && !cols.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: cols.q(),
                got: rows.q(),
            });
        }
        let (r, c) = (rows.len(), cols.len());
        let mut dots = Vec::with_capacity(r * c);
        let mut sq_dists = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                let (a, b) = (cols.features(j), rows.features(i));
                dots.push(dot(a, b));
                sq_dists.push(sq_dist(a, b));
            }
        }
        Ok(KernelCache {
            rows: r,
            cols: c,
            symmetric: false,
            dots,
            sq_dists,
        })
    }

    pub fn matrix(&self, spec: &KernelSpec<T>) -> KernelMatrix<T> {
        let (r, c) = (self.rows, self.cols);
        if !self.symmetric {
            let data = self
                .dots
                .iter()
                .zip(&self.sq_dists)
                .map(|(&d, &s)| spec.apply(d, s))
                .collect();
            return KernelMatrix {
                rows: r,
                cols: c,
                data,
            };
        }
        let mut data = vec![T::zero(); r * c];
        for i in 0..r {
            for j in i..c {
                let k = i * c + j;
                let v = spec.apply(self.dots[k], self.sq_dists[k]);
                data[k] = v;
                data[j * c + i] = v;
            }
        }
        KernelMatrix {
            rows: r,
            cols: c,
            data,
        }
    }
}

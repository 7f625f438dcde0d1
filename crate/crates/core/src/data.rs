//! Dataset ingestion, min-max normalization and stratified splitting.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Two-class label, encoded as +1 / -1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn from_sign(positive: bool) -> Self {
        if positive {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn value(self) -> i8 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }

    pub fn as_scalar<T: Scalar>(self) -> T {
        match self {
            Label::Positive => T::one(),
            Label::Negative => -T::one(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample<T> {
    pub features: Vec<T>,
    pub label: Label,
}

/// Labelled samples sharing one feature dimension `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T = f64> {
    samples: Vec<Sample<T>>,
    q: usize,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(samples: Vec<Sample<T>>) -> Result<Self> {
        let q = samples.first().map(|s| s.features.len()).unwrap_or(0);
        if let Some((i, s)) = samples
            .iter()
            .enumerate()
            .find(|(_, s)| s.features.len() != q)
        {
            return Err(Error::Dataset(format!(
                "sample {i} has {} features, expected {q}",
                s.features.len()
            )));
        }
        Ok(Dataset { samples, q })
    }

    /// Builds a dataset from parallel feature rows and ±1 labels.
    pub fn from_rows(rows: Vec<Vec<T>>, labels: &[i8]) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Dataset(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let samples = rows
            .into_iter()
            .zip(labels)
            .map(|(features, &l)| match l {
                1 => Ok(Sample {
                    features,
                    label: Label::Positive,
                }),
                -1 => Ok(Sample {
                    features,
                    label: Label::Negative,
                }),
                other => Err(Error::Dataset(format!("label {other} is not +1 or -1"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(samples)
    }

    pub fn samples(&self) -> &[Sample<T>] {
        &self.samples
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn features(&self, i: usize) -> &[T] {
        &self.samples[i].features
    }

    pub fn label(&self, i: usize) -> Label {
        self.samples[i].label
    }

    /// `(positive, negative)` sample counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self
            .samples
            .iter()
            .filter(|s| s.label == Label::Positive)
            .count();
        (pos, self.samples.len() - pos)
    }

    pub fn has_both_classes(&self) -> bool {
        let (p, n) = self.class_counts();
        p > 0 && n > 0
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset<T> {
        Dataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            q: self.q,
        }
    }

    /// Converts the scalar type, e.g. to run the `f32` instantiation on data read as `f64`.
    pub fn cast<U: Scalar>(&self) -> Dataset<U> {
        Dataset {
            samples: self
                .samples
                .iter()
                .map(|s| Sample {
                    features: s.features.iter().map(|v| U::lit(v.as_f64())).collect(),
                    label: s.label,
                })
                .collect(),
            q: self.q,
        }
    }
}

/// Column selector for the label column.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

impl std::str::FromStr for ColumnRef {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnRef::Index(i),
            Err(_) => ColumnRef::Name(s.to_string()),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvOptions {
    pub label_column: ColumnRef,
    pub positive_label: String,
    #[serde(default = "default_true")]
    pub has_header: bool,
}

fn default_true() -> bool {
    true
}

fn resolve_column(
    col: &ColumnRef,
    header: Option<&csv::StringRecord>,
    width: usize,
) -> Result<usize> {
    let idx = match col {
        ColumnRef::Index(i) => *i,
        ColumnRef::Name(name) => {
            let header = header.ok_or_else(|| {
                Error::Config(format!(
                    "label column `{name}` given by name but the file has no header"
                ))
            })?;
            header
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Config(format!("no column named `{name}`")))?
        }
    };
    if idx >= width {
        return Err(Error::Config(format!(
            "label column {idx} out of range for {width} columns"
        )));
    }
    Ok(idx)
}

struct RawTable {
    header: Option<csv::StringRecord>,
    rows: Vec<(u64, csv::StringRecord)>,
    width: usize,
}

fn read_table(path: &Path, has_header: bool) -> Result<RawTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(file);
    let mut header = None;
    let mut rows = Vec::new();
    let mut width = None;
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::Parse {
                line,
                message: e.to_string(),
            }
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {w} columns, found {}", rec.len()),
                })
            }
            _ => {}
        }
        if has_header && header.is_none() {
            header = Some(rec);
        } else {
            rows.push((line, rec));
        }
    }
    Ok(RawTable {
        header,
        rows,
        width: width.unwrap_or(0),
    })
}

fn parse_cell<T: Scalar>(line: u64, col: usize, cell: &str) -> Result<T> {
    cell.parse::<T>().map_err(|_| Error::Parse {
        line,
        message: format!("column {col}: `{cell}` is not a number"),
    })
}

/// Reads a two-class CSV file. Labels equal to `positive_label` become +1,
/// the single other value becomes -1. Features are not normalized.
pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset<T>> {
    let table = read_table(path.as_ref(), opts.has_header)?;
    let label_idx = resolve_column(&opts.label_column, table.header.as_ref(), table.width)?;

    let distinct: BTreeSet<&str> = table.rows.iter().map(|(_, r)| &r[label_idx]).collect();
    if distinct.len() != 2 {
        return Err(Error::LabelCardinality {
            found: distinct.len(),
            values: distinct.into_iter().map(str::to_string).collect(),
        });
    }
    if !distinct.contains(opts.positive_label.as_str()) {
        return Err(Error::Config(format!(
            "positive label `{}` not among {:?}",
            opts.positive_label, distinct
        )));
    }

    let mut samples = Vec::with_capacity(table.rows.len());
    for (line, rec) in &table.rows {
        let mut features = Vec::with_capacity(table.width - 1);
        for (col, cell) in rec.iter().enumerate() {
            if col != label_idx {
                features.push(parse_cell(*line, col, cell)?);
            }
        }
        samples.push(Sample {
            features,
            label: Label::from_sign(rec[label_idx] == opts.positive_label),
        });
    }
    Dataset::new(samples)
}

/// Reads feature rows only, optionally skipping one column (e.g. a label
/// column present in the file).
pub fn load_unlabeled_csv<T: Scalar>(
    path: impl AsRef<Path>,
    has_header: bool,
    skip_column: Option<&ColumnRef>,
) -> Result<Vec<Vec<T>>> {
    let table = read_table(path.as_ref(), has_header)?;
    let skip = skip_column
        .map(|c| resolve_column(c, table.header.as_ref(), table.width))
        .transpose()?;
    table
        .rows
        .iter()
        .map(|(line, rec)| {
            rec.iter()
                .enumerate()
                .filter(|(col, _)| Some(*col) != skip)
                .map(|(col, cell)| parse_cell(*line, col, cell))
                .collect()
        })
        .collect()
}

/// Per-characteristic min-max scaling parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler<T> {
    pub mins: Vec<T>,
    pub maxs: Vec<T>,
}

impl<T: Scalar> MinMaxScaler<T> {
    pub fn fit(ds: &Dataset<T>) -> Self {
        let q = ds.q();
        let mut mins = vec![T::infinity(); q];
        let mut maxs = vec![T::neg_infinity(); q];
        for s in ds.samples() {
            for (l, &v) in s.features.iter().enumerate() {
                mins[l] = mins[l].min(v);
                maxs[l] = maxs[l].max(v);
            }
        }
        MinMaxScaler { mins, maxs }
    }

    pub fn transform_row(&self, row: &[T]) -> Vec<T> {
        row.iter()
            .zip(self.mins.iter().zip(&self.maxs))
            .map(|(&v, (&lo, &hi))| {
                let width = hi - lo;
                if width > T::zero() {
                    (v - lo) / width
                } else {
                    T::zero()
                }
            })
            .collect()
    }

    pub fn transform(&self, ds: &Dataset<T>) -> Dataset<T> {
        Dataset {
            samples: ds
                .samples()
                .iter()
                .map(|s| Sample {
                    features: self.transform_row(&s.features),
                    label: s.label,
                })
                .collect(),
            q: ds.q(),
        }
    }
}

/// Maps every characteristic onto [0, 1]; constant characteristics map to 0.
pub fn normalize<T: Scalar>(ds: &Dataset<T>) -> Dataset<T> {
    MinMaxScaler::fit(ds).transform(ds)
}

/// Lower and upper bounds of the accepted test-set fraction.
pub const TEST_FRACTION_BAND: (f64, f64) = (0.1, 1.0 / 3.0);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    /// Accept test fractions outside [`TEST_FRACTION_BAND`].
    #[serde(default)]
    pub allow_any_fraction: bool,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Self {
        SplitSpec {
            train_fraction,
            seed,
            allow_any_fraction: false,
        }
    }

    /// Fraction chosen so that `train` of `total` samples land in the training set.
    pub fn with_train_count(train: usize, total: usize, seed: u64) -> Self {
        Self::new(train as f64 / total as f64, seed)
    }

    pub fn allow_any_fraction(mut self) -> Self {
        self.allow_any_fraction = true;
        self
    }

    fn validate(&self) -> Result<()> {
        let f = self.train_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::Config(format!(
                "train fraction {f} must lie strictly between 0 and 1"
            )));
        }
        let test = 1.0 - f;
        let (lo, hi) = TEST_FRACTION_BAND;
        let slack = 1e-9;
        if !self.allow_any_fraction && (test < lo - slack || test > hi + slack) {
            return Err(Error::Config(format!(
                "test fraction {test:.4} outside [{lo}, {hi:.4}]; pass allow_any_fraction to override"
            )));
        }
        Ok(())
    }
}

/// Stratified train/test partition as sorted index lists.
pub fn stratified_split_indices<T: Scalar>(
    ds: &Dataset<T>,
    spec: &SplitSpec,
) -> Result<(Vec<usize>, Vec<usize>)> {
    spec.validate()?;
    let mut classes: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, s) in ds.samples().iter().enumerate() {
        classes[(s.label == Label::Negative) as usize].push(i);
    }
    if classes.iter().any(|c| c.len() < 2) {
        return Err(Error::Dataset(format!(
            "each class needs at least 2 samples for a split, have {} / {}",
            classes[0].len(),
            classes[1].len()
        )));
    }

    // Largest-remainder apportionment of the train quota between the classes.
    let total = ds.len();
    let target = ((spec.train_fraction * total as f64).round() as usize).clamp(2, total - 2);
    let exact: Vec<f64> = classes
        .iter()
        .map(|c| target as f64 * c.len() as f64 / total as f64)
        .collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut remaining = target - quota.iter().sum::<usize>();
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &c in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        quota[c] += 1;
        remaining -= 1;
    }
    for (q, c) in quota.iter_mut().zip(&classes) {
        *q = (*q).clamp(1, c.len() - 1);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train = Vec::with_capacity(target);
    let mut test = Vec::with_capacity(total - target);
    for (members, &k) in classes.iter_mut().zip(&quota) {
        members.shuffle(&mut rng);
        train.extend_from_slice(&members[..k]);
        test.extend_from_slice(&members[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn stratified_split<T: Scalar>(
    ds: &Dataset<T>,
    spec: &SplitSpec,
) -> Result<(Dataset<T>, Dataset<T>)> {
    let (train, test) = stratified_split_indices(ds, spec)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

/// Writes the dataset as CSV: `f0..f{q-1}` then a `label` column of +1/-1.
pub fn write_csv<T: Scalar, W: Write>(ds: &Dataset<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..ds.q()).map(|l| format!("f{l}")).collect();
    header.push("label".into());
    let to_err = |e: csv::Error| Error::Dataset(format!("csv write: {e}"));
    w.write_record(&header).map_err(to_err)?;
    for s in ds.samples() {
        let mut row: Vec<String> = s.features.iter().map(|v| v.to_string()).collect();
        row.push(format!("{:+}", s.label.value()));
        w.write_record(&row).map_err(to_err)?;
    }
    w.flush()
        .map_err(|e| Error::Dataset(format!("csv write: {e}")))?;
    Ok(())
}

pub fn dump_csv<T: Scalar>(ds: &Dataset<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(ds, file)
}

/// Synthetic 2-D linearly separable set: points uniform on the unit square,
/// labelled by the side of `x + y = 1`, with an empty band of width `gap`
/// (measured along `x + y`) around the boundary.
///
/// A smoke-test set, not real data.
pub fn synthetic_separable<T: Scalar>(n: usize, gap: f64, seed: u64) -> Dataset<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n);
    while samples.len() < n {
        let x: f64 = rng.gen();
        let y: f64 = rng.gen();
        let s = x + y - 1.0;
        if s.abs() < gap / 2.0 {
            continue;
        }
        samples.push(Sample {
            features: vec![T::lit(x), T::lit(y)],
            label: Label::from_sign(s > 0.0),
        });
    }
    Dataset { samples, q: 2 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn opts(col: &str, pos: &str) -> CsvOptions {
        CsvOptions {
            label_column: col.parse().unwrap(),
            positive_label: pos.into(),
            has_header: true,
        }
    }

    #[test]
    fn minimal_two_class_file() {
        let f = write_tmp("a,b,cls\n1,2,A\n3,4,B\n5,6,B\n");
        let ds: Dataset<f64> = load_csv(f.path(), &opts("cls", "A")).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.q(), 2);
        assert_eq!(ds.class_counts(), (1, 2));
        assert_eq!(ds.features(1), &[3.0, 4.0]);
    }

    #[test]
    fn label_by_index_without_header() {
        let f = write_tmp("A,1,2\nB,3,4\n");
        let o = CsvOptions {
            label_column: ColumnRef::Index(0),
            positive_label: "B".into(),
            has_header: false,
        };
        let ds: Dataset<f32> = load_csv(f.path(), &o).unwrap();
        assert_eq!(ds.label(0), Label::Negative);
        assert_eq!(ds.label(1), Label::Positive);
        assert_eq!(ds.features(0), &[1.0f32, 2.0]);
    }

    #[test]
    fn three_labels_rejected() {
        let f = write_tmp("a,cls\n1,A\n2,B\n3,C\n");
        let err = load_csv::<f64>(f.path(), &opts("cls", "A")).unwrap_err();
        assert!(
            matches!(err, Error::LabelCardinality { found: 3, .. }),
            "{err}"
        );
    }

    #[test]
    fn ragged_row_names_line() {
        let f = write_tmp("a,b,cls\n1,2,A\n3,B\n");
        match load_csv::<f64>(f.path(), &opts("cls", "A")).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn non_numeric_cell_names_line() {
        let f = write_tmp("a,b,cls\n1,2,A\n3,x,B\n");
        match load_csv::<f64>(f.path(), &opts("cls", "A")).unwrap_err() {
            Error::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("`x`"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_csv::<f64>("/nonexistent/file.csv", &opts("0", "A")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    fn column(values: &[f64]) -> Dataset<f64> {
        let rows = values.iter().map(|&v| vec![v]).collect();
        let labels: Vec<i8> = (0..values.len())
            .map(|i| if i % 2 == 0 { 1 } else { -1 })
            .collect();
        Dataset::from_rows(rows, &labels).unwrap()
    }

    fn col0(ds: &Dataset<f64>) -> Vec<f64> {
        ds.samples().iter().map(|s| s.features[0]).collect()
    }

    #[test]
    fn normalize_linear_rescale() {
        assert_eq!(
            col0(&normalize(&column(&[2.0, 4.0, 6.0]))),
            vec![0.0, 0.5, 1.0]
        );
    }

    #[test]
    fn normalize_constant_column_is_zero() {
        assert_eq!(col0(&normalize(&column(&[5.0, 5.0, 5.0]))), vec![0.0; 3]);
    }

    #[test]
    fn normalize_keeps_unit_extremes() {
        assert_eq!(col0(&normalize(&column(&[0.0, 1.0]))), vec![0.0, 1.0]);
    }

    #[test]
    fn split_four_samples_perfectly_stratified() {
        let ds = Dataset::from_rows(
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            &[1, 1, -1, -1],
        )
        .unwrap();
        let spec = SplitSpec::new(0.5, 7).allow_any_fraction();
        let (train, test) = stratified_split(&ds, &spec).unwrap();
        assert_eq!(train.class_counts(), (1, 1));
        assert_eq!(test.class_counts(), (1, 1));
    }

    #[test]
    fn split_fraction_out_of_range() {
        let ds = column(&[0.0, 1.0, 2.0, 3.0]);
        for f in [0.0, 1.0, -0.2, 1.5] {
            let spec = SplitSpec::new(f, 0).allow_any_fraction();
            assert!(matches!(
                stratified_split(&ds, &spec),
                Err(Error::Config(_))
            ));
        }
    }

    #[test]
    fn split_band_enforced_unless_overridden() {
        let ds = column(&(0..20).map(f64::from).collect::<Vec<_>>());
        assert!(matches!(
            stratified_split(&ds, &SplitSpec::new(0.5, 0)),
            Err(Error::Config(_))
        ));
        assert!(stratified_split(&ds, &SplitSpec::new(0.8, 0)).is_ok());
        assert!(stratified_split(&ds, &SplitSpec::new(0.5, 0).allow_any_fraction()).is_ok());
    }

    #[test]
    fn split_needs_two_per_class() {
        let ds = Dataset::from_rows(vec![vec![0.0], vec![1.0], vec![2.0]], &[1, -1, -1]).unwrap();
        let spec = SplitSpec::new(0.5, 0).allow_any_fraction();
        assert!(matches!(
            stratified_split(&ds, &spec),
            Err(Error::Dataset(_))
        ));
    }

    #[test]
    fn dump_writes_signed_labels() {
        let ds = Dataset::from_rows(vec![vec![0.25, 1.0], vec![0.5, 0.0]], &[1, -1]).unwrap();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "f0,f1,label\n0.25,1,+1\n0.5,0,-1\n"
        );
    }

    #[test]
    fn synthetic_respects_gap() {
        let ds: Dataset<f64> = synthetic_separable(200, 0.3, 3);
        assert_eq!(ds.len(), 200);
        for s in ds.samples() {
            let v = s.features[0] + s.features[1] - 1.0;
            assert!(v.abs() >= 0.15);
            assert_eq!(s.label == Label::Positive, v > 0.0);
        }
    }
}

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelKind;
use crate::scalar::Scalar;

/// State of one particle after the evaluation step of an iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ParticleSnapshot<T> {
    pub iteration: usize,
    pub particle: usize,
    pub kind: KernelKind,
    pub x1: T,
    pub x2: T,
    pub c: T,
    pub fitness: T,
    pub regenerated: bool,
}

/// Writes snapshots as CSV with a header row.
pub fn write_trace_csv<T: Scalar>(
    snapshots: &[ParticleSnapshot<T>],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for s in snapshots {
        w.serialize(s).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Dataset(format!("{}: {other:?}", path.display())),
    }
}

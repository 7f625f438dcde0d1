//! Versioned text format for trained classifiers.
//!
//! ```text
//! psosvm-model 1
//! kernel 2
//! sigma 4.01
//! c 9.83
//! bias -0.41
//! dim 2
//! converged true
//! iterations 57
//! objective -12.5
//! scale_min 0 0          (optional, with scale_max)
//! scale_max 1 1
//! vectors 3
//! <train index> <alpha> <label +1|-1> <feature 1> ... <feature dim>
//! ...
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! save/load cycle reproduces the model exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::data::{Label, MinMaxScaler};
use crate::error::{Error, Result};
use crate::kernels::{KernelKind, KernelSpec};
use crate::scalar::Scalar;
use crate::solver::SvmModel;

const MAGIC: &str = "psosvm-model";
const VERSION: u32 = 1;

/// A model plus the feature scaling that was applied to its training data.
#[derive(Clone, Debug, PartialEq)]
pub struct SavedModel<T> {
    pub model: SvmModel<T>,
    pub scaler: Option<MinMaxScaler<T>>,
}

fn join<T: Scalar>(values: &[T]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn to_text<T: Scalar>(saved: &SavedModel<T>) -> String {
    let m = &saved.model;
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {VERSION}");
    let _ = writeln!(out, "kernel {}", m.kernel.kind().code());
    match m.kernel {
        KernelSpec::Linear => {}
        KernelSpec::Polynomial { degree } => {
            let _ = writeln!(out, "d {degree}");
        }
        KernelSpec::Rbf { sigma } => {
            let _ = writeln!(out, "sigma {sigma}");
        }
        KernelSpec::Sigmoid { k1, k2 } => {
            let _ = writeln!(out, "k1 {k1}");
            let _ = writeln!(out, "k2 {k2}");
        }
    }
    let _ = writeln!(out, "c {}", m.c);
    let _ = writeln!(out, "bias {}", m.bias);
    let _ = writeln!(out, "dim {}", m.dim);
    let _ = writeln!(out, "converged {}", m.converged);
    let _ = writeln!(out, "iterations {}", m.iterations);
    let _ = writeln!(out, "objective {}", m.objective);
    if let Some(s) = &saved.scaler {
        let _ = writeln!(out, "scale_min {}", join(&s.mins));
        let _ = writeln!(out, "scale_max {}", join(&s.maxs));
    }
    let _ = writeln!(out, "vectors {}", m.support_count());
    for i in 0..m.support_count() {
        let _ = writeln!(
            out,
            "{} {} {:+} {}",
            m.support_indices[i],
            m.alphas[i],
            m.labels[i].value(),
            join(&m.support_vectors[i])
        );
    }
    out
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::ModelFormat(format!("line {line}: {msg}"))
}

fn parse<V: FromStr>(line: usize, key: &str, s: &str) -> Result<V> {
    s.parse()
        .map_err(|_| bad(line, format!("invalid value `{s}` for `{key}`")))
}

fn parse_list<T: Scalar>(line: usize, key: &str, s: &str) -> Result<Vec<T>> {
    s.split_whitespace().map(|v| parse(line, key, v)).collect()
}

pub fn from_text<T: Scalar>(text: &str) -> Result<SavedModel<T>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (_, first) = lines.next().ok_or_else(|| bad(1, "empty file"))?;
    let mut head = first.split_whitespace();
    if head.next() != Some(MAGIC) {
        return Err(bad(1, format!("missing `{MAGIC}` header")));
    }
    let version: u32 = parse(1, "version", head.next().unwrap_or(""))?;
    if version != VERSION {
        return Err(bad(1, format!("unsupported version {version}")));
    }

    let mut kind = None;
    let (mut d, mut sigma, mut k1, mut k2) = (None, None, None, None);
    let (mut c, mut bias, mut dim) = (None, None, None);
    let (mut converged, mut iterations, mut objective) = (false, 0usize, T::nan());
    let (mut mins, mut maxs) = (None, None);
    let mut count = None;

    for (no, line) in lines.by_ref() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once(' ').unwrap_or((line, ""));
        let value = value.trim();
        match key {
            "kernel" => kind = Some(KernelKind::from_code(parse(no, key, value)?)?),
            "d" => d = Some(parse::<u32>(no, key, value)?),
            "sigma" => sigma = Some(parse::<T>(no, key, value)?),
            "k1" => k1 = Some(parse::<T>(no, key, value)?),
            "k2" => k2 = Some(parse::<T>(no, key, value)?),
            "c" => c = Some(parse::<T>(no, key, value)?),
            "bias" => bias = Some(parse::<T>(no, key, value)?),
            "dim" => dim = Some(parse::<usize>(no, key, value)?),
            "converged" => converged = parse(no, key, value)?,
            "iterations" => iterations = parse(no, key, value)?,
            "objective" => objective = parse(no, key, value)?,
            "scale_min" => mins = Some(parse_list::<T>(no, key, value)?),
            "scale_max" => maxs = Some(parse_list::<T>(no, key, value)?),
            "vectors" => {
                count = Some(parse::<usize>(no, key, value)?);
                break;
            }
            other => return Err(bad(no, format!("unknown key `{other}`"))),
        }
    }

    let need = |name: &str| Error::ModelFormat(format!("missing `{name}`"));
    let kernel = match kind.ok_or_else(|| need("kernel"))? {
        KernelKind::Linear => KernelSpec::Linear,
        KernelKind::Polynomial => KernelSpec::Polynomial {
            degree: d.ok_or_else(|| need("d"))?,
        },
        KernelKind::Rbf => KernelSpec::Rbf {
            sigma: sigma.ok_or_else(|| need("sigma"))?,
        },
        KernelKind::Sigmoid => KernelSpec::Sigmoid {
            k1: k1.ok_or_else(|| need("k1"))?,
            k2: k2.ok_or_else(|| need("k2"))?,
        },
    };
    kernel.validate()?;
    let dim = dim.ok_or_else(|| need("dim"))?;
    let count = count.ok_or_else(|| need("vectors"))?;

    let mut model = SvmModel {
        support_indices: Vec::with_capacity(count),
        alphas: Vec::with_capacity(count),
        labels: Vec::with_capacity(count),
        support_vectors: Vec::with_capacity(count),
        bias: bias.ok_or_else(|| need("bias"))?,
        kernel,
        c: c.ok_or_else(|| need("c"))?,
        dim,
        converged,
        iterations,
        objective,
    };
    for (no, line) in lines {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != dim + 3 {
            return Err(bad(
                no,
                format!("expected {} fields, found {}", dim + 3, fields.len()),
            ));
        }
        model.support_indices.push(parse(no, "index", fields[0])?);
        model.alphas.push(parse(no, "alpha", fields[1])?);
        model.labels.push(match fields[2] {
            "+1" | "1" => Label::Positive,
            "-1" => Label::Negative,
            other => return Err(bad(no, format!("label `{other}` is not +1/-1"))),
        });
        model.support_vectors.push(
            fields[3..]
                .iter()
                .map(|f| parse(no, "feature", f))
                .collect::<Result<_>>()?,
        );
    }
    if model.support_count() != count {
        return Err(Error::ModelFormat(format!(
            "header announces {count} vectors, found {}",
            model.support_count()
        )));
    }

    let scaler = match (mins, maxs) {
        (Some(mins), Some(maxs)) if mins.len() == dim && maxs.len() == dim => {
            Some(MinMaxScaler { mins, maxs })
        }
        (None, None) => None,
        _ => {
            return Err(Error::ModelFormat(
                "scale_min/scale_max must both be present with `dim` entries".into(),
            ))
        }
    };
    Ok(SavedModel { model, scaler })
}

pub fn save<T: Scalar>(saved: &SavedModel<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_text(saved)).map_err(|e| Error::io(path, e))
}

pub fn load<T: Scalar>(path: impl AsRef<Path>) -> Result<SavedModel<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_text(&text)
}

use std::fmt::Write as _;
use std::path::Path;

use psosvm::swarm::SearchReport;
use psosvm::{FitnessMode, KernelKind};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Traditional,
    Modified,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Traditional => "traditional",
            Method::Modified => "modified",
        })
    }
}

/// One result line: kernel, parameters, errors, support vectors and accuracy,
/// followed by the evaluation count and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub dataset: String,
    pub objects: usize,
    pub characteristics: usize,
    pub method: Method,
    pub kernel: KernelKind,
    pub c: f64,
    pub x1: f64,
    /// Only meaningful for the sigmoid kernel.
    pub x2: Option<f64>,
    pub train_errors: usize,
    pub train_total: usize,
    pub test_errors: usize,
    pub test_total: usize,
    pub support_vectors: usize,
    pub accuracy: f64,
    pub fitness_evaluations: usize,
    pub seed: u64,
}

impl ReportRow {
    pub fn from_search(
        dataset: &str,
        objects: usize,
        characteristics: usize,
        method: Method,
        fitness_evaluations: usize,
        run: &SearchReport<f64>,
    ) -> Self {
        let [x1, x2, c] = run.best.position;
        let kernel = run.best.kind;
        let e = &run.best_eval;
        ReportRow {
            dataset: dataset.to_string(),
            objects,
            characteristics,
            method,
            kernel,
            c,
            x1: if kernel == KernelKind::Polynomial {
                x1.round()
            } else {
                x1
            },
            x2: (kernel == KernelKind::Sigmoid).then_some(x2),
            train_errors: e.train_errors,
            train_total: e.train_total,
            test_errors: e.test_errors,
            test_total: e.test_total,
            support_vectors: e.support_vectors,
            accuracy: e.accuracy,
            fitness_evaluations,
            seed: run.seed,
        }
    }

    /// `(S - train errors - test errors) / S` in percent.
    pub fn combined_accuracy(&self) -> f64 {
        let total = self.train_total + self.test_total;
        (total - self.train_errors - self.test_errors) as f64 / total as f64 * 100.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub method: Method,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub fitness_mode: FitnessMode,
    pub split_seed: u64,
    pub rows: Vec<ReportRow>,
    /// Wall-clock search times. Kept apart from `rows` so that reruns with
    /// the same seeds give identical rows.
    pub timing: Vec<Timing>,
}

impl ComparisonReport {
    pub fn row(&self, method: Method) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    /// JSON of everything except timing.
    pub fn body_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            fitness_mode: FitnessMode,
            split_seed: u64,
            rows: &'a [ReportRow],
        }
        serde_json::to_string_pretty(&Body {
            fitness_mode: self.fitness_mode,
            split_seed: self.split_seed,
            rows: &self.rows,
        })
        .expect("report serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| HarnessError::output(path, e))
    }

    /// Plain-text table for the terminal.
    pub fn render_table(&self) -> String {
        let header = [
            "dataset",
            "objects",
            "chars",
            "pso",
            "T",
            "C",
            "x1",
            "x2",
            "train err",
            "test err",
            "SVs",
            "acc %",
            "evals",
            "time s",
        ];
        let mut cells: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        for r in &self.rows {
            let seconds = self
                .timing
                .iter()
                .find(|t| t.method == r.method)
                .map_or_else(|| "-".into(), |t| format!("{:.1}", t.seconds));
            cells.push(vec![
                r.dataset.clone(),
                r.objects.to_string(),
                r.characteristics.to_string(),
                r.method.to_string(),
                r.kernel.code().to_string(),
                format!("{:.2}", r.c),
                format!("{:.2}", r.x1),
                r.x2.map_or_else(|| "-".into(), |v| format!("{v:.2}")),
                format!("{} of {}", r.train_errors, r.train_total),
                format!("{} of {}", r.test_errors, r.test_total),
                r.support_vectors.to_string(),
                format!("{:.2}", r.accuracy),
                r.fitness_evaluations.to_string(),
                seconds,
            ]);
        }
        let widths: Vec<usize> = (0..header.len())
            .map(|j| cells.iter().map(|row| row[j].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (i, row) in cells.iter().enumerate() {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(cell, w)| format!("{cell:<w$}"))
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
            if i == 0 {
                let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
                let _ = writeln!(out, "{}", "-".repeat(total));
            }
        }
        out
    }
}

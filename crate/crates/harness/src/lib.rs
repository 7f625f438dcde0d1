//! Experiment harness: loads a dataset, runs the traditional and/or modified
//! swarm searches and produces a comparison report plus optional particle
//! traces.

pub mod error;
pub mod plots;
pub mod report;
pub mod spec;

use std::path::{Path, PathBuf};

use psosvm::data::{load_csv, stratified_split, Dataset, MinMaxScaler};
use psosvm::model_io::SavedModel;
use psosvm::solver::{count_errors, train, EvalReport, TrainConfig};
use psosvm::swarm::{
    decode, modified_search, traditional_search, write_trace_csv, Coords, SearchReport,
    TraditionalReport,
};
use psosvm::KernelKind;

pub use error::{HarnessError, Result};
pub use plots::{emit_trace_plots_data, final_type_counts};
pub use report::{ComparisonReport, Method, ReportRow, Timing};
pub use spec::{DataSpec, ExperimentSpec, Mode, SplitSettings};

use error::{data_error, search_error};

/// A dataset ready for searching.
#[derive(Clone, Debug)]
pub struct PreparedData {
    pub name: String,
    pub objects: usize,
    pub characteristics: usize,
    pub train: Dataset<f64>,
    pub test: Dataset<f64>,
    /// Scaling fitted on the whole file, if normalization is on.
    pub scaler: Option<MinMaxScaler<f64>>,
}

/// Loads, optionally normalizes, and splits the spec's dataset.
pub fn prepare_data(spec: &ExperimentSpec) -> Result<PreparedData> {
    let full: Dataset<f64> =
        load_csv(&spec.data.path, &spec.data.csv_options()).map_err(data_error)?;
    let scaler = spec.data.normalize.then(|| MinMaxScaler::fit(&full));
    let scaled = match &scaler {
        Some(s) => s.transform(&full),
        None => full,
    };
    let split = spec.split.resolve(scaled.len())?;
    let (train, test) = stratified_split(&scaled, &split).map_err(data_error)?;
    Ok(PreparedData {
        name: spec.data.display_name(),
        objects: scaled.len(),
        characteristics: scaled.q(),
        train,
        test,
        scaler,
    })
}

/// Everything a finished experiment produced.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub report: ComparisonReport,
    pub modified: Option<SearchReport<f64>>,
    pub traditional: Option<TraditionalReport<f64>>,
    pub data: PreparedData,
}

impl Experiment {
    /// The search whose best position scored highest; the modified search
    /// wins ties.
    pub fn best_search(&self) -> Option<&SearchReport<f64>> {
        let m = self.modified.as_ref();
        let t = self.traditional.as_ref().map(|t| t.best());
        match (m, t) {
            (Some(m), Some(t)) => Some(if t.best.fitness > m.best.fitness {
                t
            } else {
                m
            }),
            (m, t) => m.or(t),
        }
    }
}

/// Runs the searches requested by `spec`.
///
/// When `spec.out` is set the report goes to `report.json` there, the
/// modified search trace to `trace.csv` and its plot data to `plots/`. If a
/// search fails, the rows finished so far are saved to `report.partial.json`
/// before the error is returned.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Experiment> {
    spec.validate()?;
    let data = prepare_data(spec)?;
    let mut swarm = spec.swarm.clone();
    swarm.record_trace = swarm.record_trace || spec.trace;
    let mut report = ComparisonReport {
        fitness_mode: swarm.fitness_mode,
        split_seed: spec.split.seed,
        rows: Vec::new(),
        timing: Vec::new(),
    };
    let row = |method, evals, run: &SearchReport<f64>| {
        ReportRow::from_search(
            &data.name,
            data.objects,
            data.characteristics,
            method,
            evals,
            run,
        )
    };

    let mut traditional = None;
    if spec.mode.runs_traditional() {
        let mut cfg = swarm.clone();
        cfg.record_trace = false;
        match traditional_search(&data.train, &data.test, &spec.kinds, &spec.ranges, &cfg) {
            Ok(t) => {
                report
                    .rows
                    .push(row(Method::Traditional, t.fitness_evaluations, t.best()));
                report.timing.push(Timing {
                    method: Method::Traditional,
                    seconds: t.elapsed.as_secs_f64(),
                });
                traditional = Some(t);
            }
            Err(e) => return Err(save_partial(spec, &report, search_error(e))),
        }
    }

    let mut modified = None;
    if spec.mode.runs_modified() {
        match modified_search(&data.train, &data.test, &spec.ranges, &swarm) {
            Ok(m) => {
                report
                    .rows
                    .push(row(Method::Modified, m.fitness_evaluations, &m));
                report.timing.push(Timing {
                    method: Method::Modified,
                    seconds: m.elapsed.as_secs_f64(),
                });
                modified = Some(m);
            }
            Err(e) => return Err(save_partial(spec, &report, search_error(e))),
        }
    }

    let experiment = Experiment {
        report,
        modified,
        traditional,
        data,
    };
    if let Some(out) = &spec.out {
        write_outputs(&experiment, out, spec.trace)?;
    }
    Ok(experiment)
}

fn save_partial(
    spec: &ExperimentSpec,
    report: &ComparisonReport,
    err: HarnessError,
) -> HarnessError {
    if let Some(out) = &spec.out {
        if std::fs::create_dir_all(out).is_ok() {
            let _ = report.write_json(out.join("report.partial.json"));
        }
    }
    err
}

/// Writes `report.json` and, with `trace`, `trace.csv` plus `plots/`.
pub fn write_outputs(experiment: &Experiment, out: &Path, trace: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out).map_err(|e| HarnessError::output(out, e))?;
    let report_path = out.join("report.json");
    experiment.report.write_json(&report_path)?;
    let mut written = vec![report_path];
    if trace {
        if let Some(m) = &experiment.modified {
            let trace_path = out.join("trace.csv");
            if let Some(snaps) = &m.trace {
                write_trace_csv(snaps, &trace_path).map_err(search_error)?;
                written.push(trace_path);
            }
            written.extend(emit_trace_plots_data(m, out.join("plots"))?);
        }
    }
    Ok(written)
}

/// Trains one classifier at a fixed position (`x1`, `x2`, `C`, read as in
/// the report columns) on the training split and evaluates it on both sets.
pub fn train_fixed(
    data: &PreparedData,
    kind: KernelKind,
    position: &Coords<f64>,
    spec: &ExperimentSpec,
) -> Result<(SavedModel<f64>, EvalReport<f64>)> {
    let (kernel, c) = decode(kind, position);
    let s = &spec.swarm.solver;
    let mut cfg = TrainConfig::new(kernel, c)
        .with_tolerance(s.tolerance)
        .with_max_passes(s.max_passes);
    cfg.sv_threshold = s.sv_threshold;
    let model = train(&data.train, &cfg).map_err(search_error)?;
    let report = EvalReport::from_counts(
        count_errors(&model, &data.train).map_err(search_error)?,
        data.train.len(),
        count_errors(&model, &data.test).map_err(search_error)?,
        data.test.len(),
        model.support_count(),
    );
    Ok((
        SavedModel {
            model,
            scaler: data.scaler.clone(),
        },
        report,
    ))
}

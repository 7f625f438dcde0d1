use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use psosvm::swarm::SearchReport;
use psosvm::KernelKind;

use crate::error::{HarnessError, Result};

/// Writes one CSV per iteration and kernel type, `iter_XXX_type_T.csv`, with
/// the particles of that type after the iteration. `best.csv` holds the
/// global and per-type bests of every iteration and `final_best.csv` the
/// final best position. Together they are the particle scatter plots as data.
///
/// Fails if the search ran without `record_trace`.
pub fn emit_trace_plots_data(
    report: &SearchReport<f64>,
    dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let trace = report.trace.as_ref().ok_or_else(|| {
        HarnessError::Config("search ran without a trace; enable record_trace".into())
    })?;
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::output(dir, e))?;
    let write = |name: String, body: String| -> Result<PathBuf> {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| HarnessError::output(&path, e))?;
        Ok(path)
    };

    let mut written = Vec::new();
    for rec in &report.per_iteration {
        for &kind in &report.kinds {
            let mut body = String::from("particle,x1,x2,c,fitness,regenerated\n");
            for s in trace
                .iter()
                .filter(|s| s.iteration == rec.iteration && s.kind == kind)
            {
                let _ = writeln!(
                    body,
                    "{},{},{},{},{},{}",
                    s.particle, s.x1, s.x2, s.c, s.fitness, s.regenerated
                );
            }
            written.push(write(
                format!("iter_{:03}_type_{}.csv", rec.iteration, kind.code()),
                body,
            )?);
        }
    }

    let mut best = String::from("iteration,kind,fitness");
    for kind in &report.kinds {
        let _ = write!(best, ",type_{}_best", kind.code());
    }
    best.push('\n');
    for rec in &report.per_iteration {
        let _ = write!(
            best,
            "{},{},{}",
            rec.iteration,
            rec.global_best_kind.code(),
            rec.global_best_fitness
        );
        for kind in &report.kinds {
            let f = rec
                .per_type
                .iter()
                .find(|t| t.kind == *kind)
                .and_then(|t| t.fitness);
            match f {
                Some(f) => {
                    let _ = write!(best, ",{f}");
                }
                None => best.push(','),
            }
        }
        best.push('\n');
    }
    written.push(write("best.csv".into(), best)?);

    let b = &report.best;
    let final_best = format!(
        "kind,x1,x2,c,fitness,particle,iteration\n{},{},{},{},{},{},{}\n",
        b.kind.code(),
        b.position[0],
        b.position[1],
        b.position[2],
        b.fitness,
        b.particle,
        b.iteration
    );
    written.push(write("final_best.csv".into(), final_best)?);
    Ok(written)
}

/// Number of particles of each type after the last iteration.
pub fn final_type_counts(report: &SearchReport<f64>) -> Vec<(KernelKind, usize)> {
    report
        .per_iteration
        .last()
        .map(|r| r.per_type.iter().map(|t| (t.kind, t.particles)).collect())
        .unwrap_or_default()
}

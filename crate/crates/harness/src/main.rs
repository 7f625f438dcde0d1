use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use psosvm::data::{load_unlabeled_csv, ColumnRef};
use psosvm::model_io;
use psosvm::solver::sign_label;
use psosvm::swarm::RegenBase;
use psosvm::{FitnessMode, KernelKind};
use psosvm_harness::{
    prepare_data, run_experiment, train_fixed, DataSpec, ExperimentSpec, HarnessError, Mode, Result,
};

#[derive(Parser)]
#[command(
    name = "psosvm",
    version,
    about = "SVM kernel and parameter search by particle swarm"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one search engine.
    Optimize {
        #[command(flatten)]
        run: RunArgs,
        /// `traditional` or `modified`.
        #[arg(long, default_value = "modified")]
        mode: Mode,
    },
    /// Run both engines and print the comparison table.
    Compare {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Train one classifier with fixed kernel and parameters.
    Train {
        #[command(flatten)]
        data: DataArgs,
        /// Kernel type: 0 linear, 1 polynomial, 2 RBF, 3 sigmoid.
        #[arg(long)]
        kernel: u8,
        /// Degree, sigma, or the sigmoid offset.
        #[arg(long, default_value_t = 0.0)]
        x1: f64,
        /// Sigmoid slope.
        #[arg(long, default_value_t = 0.0)]
        x2: f64,
        #[arg(long)]
        c: f64,
        /// Model file to write.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify the rows of a CSV with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Column to ignore, e.g. a label column present in the file.
        #[arg(long)]
        label_col: Option<ColumnRef>,
        #[arg(long)]
        no_header: bool,
        /// Write predictions here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the modified search and write its particle trace and plot data.
    DumpTrace {
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct DataArgs {
    /// Experiment file (TOML). Flags given alongside override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Label column, by header name or zero-based index.
    #[arg(long)]
    label_col: Option<ColumnRef>,
    /// Label value of the positive class; every other value is negative.
    #[arg(long)]
    positive_label: Option<String>,
    #[arg(long)]
    no_header: bool,
    /// Keep raw feature values instead of scaling them to [0, 1].
    #[arg(long)]
    no_normalize: bool,
    #[arg(long, conflicts_with = "train_fraction")]
    train_count: Option<usize>,
    #[arg(long)]
    train_fraction: Option<f64>,
    /// Seed for both the split and the swarm.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    /// `train_accuracy` or `combined_accuracy`.
    #[arg(long)]
    fitness_mode: Option<FitnessMode>,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    regen_percent: Option<f64>,
    /// `swarm` or `eligible`.
    #[arg(long, value_parser = parse_regen_base)]
    regen_base: Option<RegenBase>,
    /// Evaluate fitness on one thread.
    #[arg(long)]
    serial: bool,
    /// Output directory for `report.json` and traces.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record the particle trace of the modified search.
    #[arg(long)]
    trace: bool,
}

fn parse_regen_base(s: &str) -> std::result::Result<RegenBase, String> {
    match s {
        "swarm" => Ok(RegenBase::Swarm),
        "eligible" => Ok(RegenBase::Eligible),
        other => Err(format!("unknown regeneration base `{other}`")),
    }
}

impl DataArgs {
    fn spec(&self) -> Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::load(path)?,
            None => {
                let missing = |flag: &str| {
                    HarnessError::Config(format!("{flag} is required without --config"))
                };
                ExperimentSpec::new(DataSpec {
                    path: self.data.clone().ok_or_else(|| missing("--data"))?,
                    name: None,
                    label_column: self
                        .label_col
                        .clone()
                        .ok_or_else(|| missing("--label-col"))?,
                    positive_label: self
                        .positive_label
                        .clone()
                        .ok_or_else(|| missing("--positive-label"))?,
                    has_header: true,
                    normalize: true,
                })
            }
        };
        if let Some(p) = &self.data {
            spec.data.path = p.clone();
        }
        if let Some(c) = &self.label_col {
            spec.data.label_column = c.clone();
        }
        if let Some(l) = &self.positive_label {
            spec.data.positive_label = l.clone();
        }
        if self.no_header {
            spec.data.has_header = false;
        }
        if self.no_normalize {
            spec.data.normalize = false;
        }
        if self.train_count.is_some() || self.train_fraction.is_some() {
            spec.split.train_count = self.train_count;
            spec.split.train_fraction = self.train_fraction;
        }
        if let Some(seed) = self.seed {
            spec.split.seed = seed;
            spec.swarm.seed = seed;
        }
        Ok(spec)
    }
}

impl RunArgs {
    fn spec(&self, mode: Mode) -> Result<ExperimentSpec> {
        let mut spec = self.data.spec()?;
        spec.mode = mode;
        if let Some(f) = self.fitness_mode {
            spec.swarm.fitness_mode = f;
        }
        if let Some(m) = self.particles {
            spec.swarm.particles = m;
        }
        if let Some(n) = self.iters {
            spec.swarm.max_iters = n;
        }
        if let Some(p) = self.regen_percent {
            spec.swarm.regen_percent = p;
        }
        if let Some(b) = self.regen_base {
            spec.swarm.regen_base = b;
        }
        if self.serial {
            spec.swarm.parallel = false;
        }
        if self.out.is_some() {
            spec.out = self.out.clone();
        }
        spec.trace |= self.trace;
        Ok(spec)
    }
}

fn search(spec: &ExperimentSpec) -> Result<()> {
    let exp = run_experiment(spec)?;
    print!("{}", exp.report.render_table());
    if let Some(out) = &spec.out {
        println!("report written to {}", out.join("report.json").display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Optimize { run, mode } => {
            if mode == Mode::Both {
                return Err(HarnessError::Config(
                    "optimize runs one mode; use `compare` for both".into(),
                ));
            }
            search(&run.spec(mode)?)
        }
        Command::Compare { run } => search(&run.spec(Mode::Both)?),
        Command::DumpTrace { run } => {
            let mut spec = run.spec(Mode::Modified)?;
            if spec.out.is_none() {
                return Err(HarnessError::Config("dump-trace needs --out".into()));
            }
            spec.trace = true;
            search(&spec)
        }
        Command::Train {
            data,
            kernel,
            x1,
            x2,
            c,
            out,
        } => {
            let spec = data.spec()?;
            let kind =
                KernelKind::from_code(kernel).map_err(|e| HarnessError::Config(e.to_string()))?;
            spec.validate()?;
            let prepared = prepare_data(&spec)?;
            let (saved, eval) = train_fixed(&prepared, kind, &[x1, x2, c], &spec)?;
            println!(
                "kernel {} C {c}: train errors {} of {}, test errors {} of {}, support vectors {}, accuracy {:.2}%",
                kind.code(),
                eval.train_errors,
                eval.train_total,
                eval.test_errors,
                eval.test_total,
                eval.support_vectors,
                eval.accuracy
            );
            if let Some(path) = out {
                model_io::save(&saved, &path).map_err(|e| {
                    HarnessError::output(&path, std::io::Error::other(e.to_string()))
                })?;
                println!("model written to {}", path.display());
            }
            Ok(())
        }
        Command::Predict {
            model,
            data,
            label_col,
            no_header,
            out,
        } => {
            let saved =
                model_io::load::<f64>(&model).map_err(|e| HarnessError::Config(e.to_string()))?;
            let rows: Vec<Vec<f64>> = load_unlabeled_csv(&data, !no_header, label_col.as_ref())
                .map_err(|e| HarnessError::Data(e.to_string()))?;
            let mut body = String::from("label,decision\n");
            for row in &rows {
                let row = match &saved.scaler {
                    Some(s) => s.transform_row(row),
                    None => row.clone(),
                };
                let v = saved
                    .model
                    .decision_value(&row)
                    .map_err(|e| HarnessError::Data(e.to_string()))?;
                let label = sign_label(v).value();
                body.push_str(&format!("{label},{v}\n"));
            }
            match out {
                Some(path) => {
                    std::fs::write(&path, body).map_err(|e| HarnessError::output(&path, e))?
                }
                None => print!("{body}"),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::{Path, PathBuf};

use psosvm::data::{ColumnRef, CsvOptions, SplitSpec};
use psosvm::swarm::{ParamRanges, SwarmConfig};
use psosvm::KernelKind;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Which search engines an experiment runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Traditional,
    Modified,
    #[default]
    Both,
}

impl Mode {
    pub fn runs_traditional(self) -> bool {
        matches!(self, Mode::Traditional | Mode::Both)
    }

    pub fn runs_modified(self) -> bool {
        matches!(self, Mode::Modified | Mode::Both)
    }
}

impl std::str::FromStr for Mode {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "traditional" => Ok(Mode::Traditional),
            "modified" => Ok(Mode::Modified),
            "both" => Ok(Mode::Both),
            other => Err(HarnessError::Config(format!(
                "unknown mode `{other}` (expected traditional, modified or both)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub path: PathBuf,
    /// Display name; defaults to the file stem.
    #[serde(default)]
    pub name: Option<String>,
    pub label_column: ColumnRef,
    pub positive_label: String,
    #[serde(default = "yes")]
    pub has_header: bool,
    /// Min-max scale every characteristic to [0, 1] before splitting.
    #[serde(default = "yes")]
    pub normalize: bool,
}

fn yes() -> bool {
    true
}

impl DataSpec {
    pub fn csv_options(&self) -> CsvOptions {
        CsvOptions {
            label_column: self.label_column.clone(),
            positive_label: self.positive_label.clone(),
            has_header: self.has_header,
        }
    }

    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into())
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSettings {
    /// Exact number of training samples. Takes precedence over `train_fraction`.
    pub train_count: Option<usize>,
    /// Defaults to 0.75.
    pub train_fraction: Option<f64>,
    pub seed: u64,
    pub allow_any_fraction: bool,
}

impl SplitSettings {
    pub fn resolve(&self, total: usize) -> Result<SplitSpec> {
        let mut spec = match (self.train_count, self.train_fraction) {
            (Some(_), Some(_)) => {
                return Err(HarnessError::Config(
                    "set either split.train_count or split.train_fraction, not both".into(),
                ))
            }
            (Some(n), None) => {
                if n == 0 || n >= total {
                    return Err(HarnessError::Config(format!(
                        "train_count {n} must lie in 1..{total}"
                    )));
                }
                SplitSpec::with_train_count(n, total, self.seed)
            }
            (None, Some(f)) => SplitSpec::new(f, self.seed),
            (None, None) => SplitSpec::new(0.75, self.seed),
        };
        if self.allow_any_fraction {
            spec = spec.allow_any_fraction();
        }
        Ok(spec)
    }
}

/// A complete experiment, usually read from a TOML file.
///
/// ```toml
/// mode = "both"
///
/// [data]
/// path = "data/wdbc.csv"
/// label_column = "diagnosis"
/// positive_label = "M"
///
/// [split]
/// train_count = 427
/// seed = 1
///
/// [swarm]
/// particles = 150
/// max_iters = 15
/// fitness_mode = "combined_accuracy"
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub data: DataSpec,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub split: SplitSettings,
    #[serde(default)]
    pub swarm: SwarmConfig<f64>,
    #[serde(default)]
    pub ranges: ParamRanges<f64>,
    /// Kernel types searched by the traditional engine.
    #[serde(default = "searchable")]
    pub kinds: Vec<KernelKind>,
    /// Keep the per-particle trace of the modified search.
    #[serde(default)]
    pub trace: bool,
    /// Where `report.json` and trace files go. Nothing is written when unset.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn searchable() -> Vec<KernelKind> {
    KernelKind::SEARCHABLE.to_vec()
}

impl ExperimentSpec {
    pub fn new(data: DataSpec) -> Self {
        ExperimentSpec {
            data,
            mode: Mode::default(),
            split: SplitSettings::default(),
            swarm: SwarmConfig::default(),
            ranges: ParamRanges::default(),
            kinds: searchable(),
            trace: false,
            out: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Reads a TOML spec. Relative data paths are resolved against the
    /// directory holding the spec file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let mut spec = Self::from_toml(&text)?;
        if spec.data.path.is_relative() {
            if let Some(dir) = path.parent() {
                spec.data.path = dir.join(&spec.data.path);
            }
        }
        if let Some(out) = spec.out.as_mut() {
            if out.is_relative() {
                if let Some(dir) = path.parent() {
                    *out = dir.join(&*out);
                }
            }
        }
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let config = |e: psosvm::Error| HarnessError::Config(e.to_string());
        self.swarm.validate().map_err(config)?;
        self.ranges.validate().map_err(config)?;
        if self.kinds.is_empty() || self.kinds.contains(&KernelKind::Linear) {
            return Err(HarnessError::Config(
                "kinds must list searchable kernel types (1, 2, 3)".into(),
            ));
        }
        if !self.data.path.is_file() {
            return Err(HarnessError::Data(format!(
                "data file {} not found",
                self.data.path.display()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use psosvm::FitnessMode;

    const MINIMAL: &str = r#"
[data]
path = "wdbc.csv"
label_column = "diagnosis"
positive_label = "M"
"#;

    #[test]
    fn minimal_spec_uses_defaults() {
        let spec = ExperimentSpec::from_toml(MINIMAL).unwrap();
        assert_eq!(spec.mode, Mode::Both);
        assert_eq!(spec.swarm, SwarmConfig::default());
        assert_eq!(spec.kinds, KernelKind::SEARCHABLE.to_vec());
        assert!(spec.data.has_header && spec.data.normalize);
        assert_eq!(spec.data.display_name(), "wdbc");
        assert!(matches!(spec.validate(), Err(HarnessError::Data(_))));
    }

    #[test]
    fn partial_swarm_table_keeps_other_defaults() {
        let text = format!(
            "{MINIMAL}\n[swarm]\nparticles = 30\nfitness_mode = \"combined_accuracy\"\n[swarm.solver]\ntolerance = 0.01\n"
        );
        let spec = ExperimentSpec::from_toml(&text).unwrap();
        assert_eq!(spec.swarm.particles, 30);
        assert_eq!(spec.swarm.max_iters, 20);
        assert_eq!(spec.swarm.fitness_mode, FitnessMode::CombinedAccuracy);
        assert_eq!(spec.swarm.solver.tolerance, 0.01);
        assert_eq!(spec.swarm.solver.max_passes, 100);
    }

    #[test]
    fn round_trips_through_toml() {
        let mut spec = ExperimentSpec::from_toml(MINIMAL).unwrap();
        spec.split.train_count = Some(427);
        spec.kinds = vec![KernelKind::Rbf];
        assert_eq!(ExperimentSpec::from_toml(&spec.to_toml()).unwrap(), spec);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let text = format!("bogus = 1\n{MINIMAL}");
        assert!(matches!(
            ExperimentSpec::from_toml(&text),
            Err(HarnessError::Config(_))
        ));
        let text = format!("{MINIMAL}\n[swarm]\nphi_global = 1.0\n");
        let spec = ExperimentSpec::from_toml(&text).unwrap();
        assert!(matches!(spec.validate(), Err(HarnessError::Config(_))));
        let text = format!("kinds = [0]\n{MINIMAL}");
        let spec = ExperimentSpec::from_toml(&text).unwrap();
        assert!(spec.validate().is_err());
    }

    #[test]
    fn split_resolution() {
        let s = SplitSettings {
            train_count: Some(427),
            ..Default::default()
        };
        assert_eq!(s.resolve(569).unwrap().train_fraction, 427.0 / 569.0);
        let both = SplitSettings {
            train_count: Some(10),
            train_fraction: Some(0.8),
            ..Default::default()
        };
        assert!(both.resolve(20).is_err());
        let too_many = SplitSettings {
            train_count: Some(20),
            ..Default::default()
        };
        assert!(too_many.resolve(20).is_err());
    }
}

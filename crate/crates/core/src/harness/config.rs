//! Flat `key = value` experiment configuration.
//!
//! Grammar: one `key = value` pair per line; blank lines and lines starting
//! with `#` are ignored; lists are comma separated. Unknown keys are errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::datasets::{DecayProfile, SynthSpec};
use crate::model::{Architecture, ModelShape, Precision};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    Synthetic,
    /// Long-tailed training file and balanced test file.
    Files {
        train: PathBuf,
        test: PathBuf,
        format: FileFormat,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FileFormat {
    Csv { header: bool },
    RawF32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub data: DataSource,
    pub classes: usize,
    pub dims: usize,
    pub n_head: usize,
    pub imbalance_ratio: f64,
    pub class_sep: f64,
    pub noise_sd: f64,
    pub test_per_class: usize,
    /// Rows per class of the balanced set used by the feature probe.
    pub probe_per_class: usize,
    pub standardize: bool,
    pub arch: Architecture,
    pub hidden: usize,
    pub precision: Precision,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Epochs at which the learning rate is multiplied by `lr_decay`.
    pub lr_milestones: Vec<usize>,
    pub lr_decay: f64,
    pub probe_epochs: usize,
    pub tau: f64,
    pub gamma: f64,
    pub warm_start: bool,
    pub seeds: Vec<u64>,
    pub test_mus: Vec<f64>,
    pub many_threshold: usize,
    pub few_threshold: usize,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "synthetic-ib100".into(),
            data: DataSource::Synthetic,
            classes: 10,
            dims: 8,
            n_head: 500,
            imbalance_ratio: 100.0,
            class_sep: 2.5,
            noise_sd: 1.0,
            test_per_class: 500,
            probe_per_class: 100,
            standardize: true,
            arch: Architecture::Mlp1,
            hidden: 32,
            precision: Precision::F32,
            epochs: 60,
            batch_size: 64,
            lr: 0.05,
            momentum: 0.9,
            weight_decay: 5e-4,
            lr_milestones: vec![40, 50],
            lr_decay: 0.1,
            probe_epochs: 30,
            tau: 1.0,
            gamma: 2.0,
            warm_start: false,
            seeds: vec![0, 1, 2, 3, 4],
            test_mus: vec![0.01],
            many_threshold: 100,
            few_threshold: 20,
            out: PathBuf::from("runs/default"),
        }
    }
}

const KEYS: &[&str] = &[
    "name",
    "dataset",
    "train_path",
    "test_path",
    "data_format",
    "csv_header",
    "classes",
    "dims",
    "n_head",
    "imbalance_ratio",
    "class_sep",
    "noise_sd",
    "test_per_class",
    "probe_per_class",
    "standardize",
    "arch",
    "hidden",
    "precision",
    "epochs",
    "batch_size",
    "lr",
    "momentum",
    "weight_decay",
    "lr_milestones",
    "lr_decay",
    "probe_epochs",
    "tau",
    "gamma",
    "warm_start",
    "seeds",
    "test_mus",
    "many_threshold",
    "few_threshold",
    "out",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, HarnessError> {
    value
        .parse()
        .map_err(|_| HarnessError::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, HarnessError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool, HarnessError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(HarnessError::Config(format!("{key}: expected true/false, got {value:?}"))),
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// File-source fields collected while parsing, resolved at the end.
#[derive(Default)]
struct PendingFiles {
    dataset: Option<String>,
    train: Option<PathBuf>,
    test: Option<PathBuf>,
    format: Option<String>,
    header: Option<bool>,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut config = Self::default();
        let mut pending = PendingFiles::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            config
                .set_inner(key.trim(), value.trim(), &mut pending)
                .map_err(|e| match e {
                    HarnessError::Config(msg) => HarnessError::Config(format!("line {}: {msg}", lineno + 1)),
                    other => other,
                })?;
        }
        config.resolve(pending)?;
        config.validate()?;
        Ok(config)
    }

    /// Applies `key=value` overrides (as given on the command line).
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<(), HarnessError> {
        let mut pending = self.pending_from_current();
        for item in overrides {
            let item = item.as_ref();
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("override {item:?} is not key=value")))?;
            self.set_inner(key.trim(), value.trim(), &mut pending)?;
        }
        self.resolve(pending)?;
        self.validate()
    }

    fn pending_from_current(&self) -> PendingFiles {
        match &self.data {
            DataSource::Synthetic => PendingFiles::default(),
            DataSource::Files { train, test, format } => PendingFiles {
                dataset: Some("files".into()),
                train: Some(train.clone()),
                test: Some(test.clone()),
                format: Some(match format {
                    FileFormat::Csv { .. } => "csv".into(),
                    FileFormat::RawF32 => "raw-f32".into(),
                }),
                header: match format {
                    FileFormat::Csv { header } => Some(*header),
                    FileFormat::RawF32 => None,
                },
            },
        }
    }

    fn set_inner(&mut self, key: &str, value: &str, pending: &mut PendingFiles) -> Result<(), HarnessError> {
        match key {
            "name" => self.name = value.to_string(),
            "dataset" => pending.dataset = Some(value.to_string()),
            "train_path" => pending.train = Some(PathBuf::from(value)),
            "test_path" => pending.test = Some(PathBuf::from(value)),
            "data_format" => pending.format = Some(value.to_string()),
            "csv_header" => pending.header = Some(parse_bool(key, value)?),
            "classes" => self.classes = parse_value(key, value)?,
            "dims" => self.dims = parse_value(key, value)?,
            "n_head" => self.n_head = parse_value(key, value)?,
            "imbalance_ratio" => self.imbalance_ratio = parse_value(key, value)?,
            "class_sep" => self.class_sep = parse_value(key, value)?,
            "noise_sd" => self.noise_sd = parse_value(key, value)?,
            "test_per_class" => self.test_per_class = parse_value(key, value)?,
            "probe_per_class" => self.probe_per_class = parse_value(key, value)?,
            "standardize" => self.standardize = parse_bool(key, value)?,
            "arch" => self.arch = value.parse().map_err(HarnessError::Config)?,
            "hidden" => self.hidden = parse_value(key, value)?,
            "precision" => self.precision = value.parse().map_err(HarnessError::Config)?,
            "epochs" => self.epochs = parse_value(key, value)?,
            "batch_size" => self.batch_size = parse_value(key, value)?,
            "lr" => self.lr = parse_value(key, value)?,
            "momentum" => self.momentum = parse_value(key, value)?,
            "weight_decay" => self.weight_decay = parse_value(key, value)?,
            "lr_milestones" => self.lr_milestones = parse_list(key, value)?,
            "lr_decay" => self.lr_decay = parse_value(key, value)?,
            "probe_epochs" => self.probe_epochs = parse_value(key, value)?,
            "tau" => self.tau = parse_value(key, value)?,
            "gamma" => self.gamma = parse_value(key, value)?,
            "warm_start" => self.warm_start = parse_bool(key, value)?,
            "seeds" => self.seeds = parse_list(key, value)?,
            "test_mus" => self.test_mus = parse_list(key, value)?,
            "many_threshold" => self.many_threshold = parse_value(key, value)?,
            "few_threshold" => self.few_threshold = parse_value(key, value)?,
            "out" => self.out = PathBuf::from(value),
            other => return Err(HarnessError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    fn resolve(&mut self, pending: PendingFiles) -> Result<(), HarnessError> {
        let kind = pending.dataset.as_deref().unwrap_or("synthetic");
        self.data = match kind {
            "synthetic" => DataSource::Synthetic,
            "files" => {
                let format = match pending.format.as_deref().unwrap_or("csv") {
                    "csv" => FileFormat::Csv {
                        header: pending.header.unwrap_or(false),
                    },
                    "raw-f32" => FileFormat::RawF32,
                    other => {
                        return Err(HarnessError::Config(format!(
                            "data_format: unknown format {other:?} (csv|raw-f32)"
                        )))
                    }
                };
                DataSource::Files {
                    train: pending
                        .train
                        .ok_or_else(|| HarnessError::Config("dataset = files needs train_path".into()))?,
                    test: pending
                        .test
                        .ok_or_else(|| HarnessError::Config("dataset = files needs test_path".into()))?,
                    format,
                }
            }
            other => {
                return Err(HarnessError::Config(format!(
                    "dataset: unknown source {other:?} (synthetic|files)"
                )))
            }
        };
        Ok(())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if self.classes < 2 {
            return bad(format!("classes = {} (need >= 2)", self.classes));
        }
        if self.data == DataSource::Synthetic {
            if self.dims < 2 {
                return bad(format!("dims = {} (need >= 2)", self.dims));
            }
            if !(self.class_sep > 0.0 && self.noise_sd > 0.0) {
                return bad("class_sep and noise_sd must be positive".into());
            }
            if self.test_per_class < 1 || self.probe_per_class < 1 {
                return bad("test_per_class and probe_per_class must be >= 1".into());
            }
            self.profile()?;
        }
        if self.arch == Architecture::Mlp1 && self.hidden == 0 {
            return bad("mlp1 needs hidden >= 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if !(self.lr > 0.0) || !(0.0..1.0).contains(&self.momentum) || self.weight_decay < 0.0 {
            return bad("need lr > 0, momentum in [0, 1), weight_decay >= 0".into());
        }
        if !(self.lr_decay > 0.0) {
            return bad("lr_decay must be positive".into());
        }
        if !(self.tau >= 0.0) || !self.gamma.is_finite() {
            return bad("need tau >= 0 and finite gamma".into());
        }
        if let Some(mu) = self.test_mus.iter().find(|&&mu| !(mu > 0.0 && mu <= 1.0)) {
            return bad(format!("test_mus entry {mu} outside (0, 1]"));
        }
        if self.few_threshold < 1 || self.few_threshold > self.many_threshold {
            return bad(format!(
                "need 1 <= few_threshold ({}) <= many_threshold ({})",
                self.few_threshold, self.many_threshold
            ));
        }
        Ok(())
    }

    pub fn profile(&self) -> Result<DecayProfile, HarnessError> {
        DecayProfile::from_imbalance_ratio(self.n_head, self.classes, self.imbalance_ratio)
            .map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn synth_spec(&self) -> Result<SynthSpec, HarnessError> {
        Ok(SynthSpec {
            dims: self.dims,
            profile: self.profile()?,
            class_sep: self.class_sep,
            noise_sd: self.noise_sd,
            test_per_class: self.test_per_class,
        })
    }

    pub fn model_shape(&self, dims: usize, classes: usize) -> ModelShape {
        ModelShape::new(self.arch, dims, self.hidden, classes)
    }

    /// `(epoch, multiplier)` pairs for the optimizer.
    pub fn lr_schedule(&self) -> Vec<(usize, f64)> {
        let mut milestones = self.lr_milestones.clone();
        milestones.sort_unstable();
        let mut schedule = vec![(0, 1.0)];
        let mut m = 1.0;
        for epoch in milestones {
            m *= self.lr_decay;
            schedule.push((epoch, m));
        }
        schedule
    }

    /// Canonical text form; parsing it yields an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, value) in self.entries() {
            writeln!(out, "{key} = {value}").unwrap();
        }
        out
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        let mut entries = Vec::new();
        for &key in KEYS {
            let value = match key {
                "name" => self.name.clone(),
                "dataset" => match self.data {
                    DataSource::Synthetic => "synthetic".into(),
                    DataSource::Files { .. } => "files".into(),
                },
                "train_path" | "test_path" | "data_format" | "csv_header" => {
                    let DataSource::Files { train, test, format } = &self.data else {
                        continue;
                    };
                    match (key, format) {
                        ("train_path", _) => train.display().to_string(),
                        ("test_path", _) => test.display().to_string(),
                        ("data_format", FileFormat::Csv { .. }) => "csv".into(),
                        ("data_format", FileFormat::RawF32) => "raw-f32".into(),
                        (_, FileFormat::Csv { header }) => header.to_string(),
                        (_, FileFormat::RawF32) => continue,
                    }
                }
                "classes" => self.classes.to_string(),
                "dims" => self.dims.to_string(),
                "n_head" => self.n_head.to_string(),
                "imbalance_ratio" => self.imbalance_ratio.to_string(),
                "class_sep" => self.class_sep.to_string(),
                "noise_sd" => self.noise_sd.to_string(),
                "test_per_class" => self.test_per_class.to_string(),
                "probe_per_class" => self.probe_per_class.to_string(),
                "standardize" => self.standardize.to_string(),
                "arch" => self.arch.to_string(),
                "hidden" => self.hidden.to_string(),
                "precision" => match self.precision {
                    Precision::F32 => "f32".into(),
                    Precision::F64 => "f64".into(),
                },
                "epochs" => self.epochs.to_string(),
                "batch_size" => self.batch_size.to_string(),
                "lr" => self.lr.to_string(),
                "momentum" => self.momentum.to_string(),
                "weight_decay" => self.weight_decay.to_string(),
                "lr_milestones" => join(&self.lr_milestones),
                "lr_decay" => self.lr_decay.to_string(),
                "probe_epochs" => self.probe_epochs.to_string(),
                "tau" => self.tau.to_string(),
                "gamma" => self.gamma.to_string(),
                "warm_start" => self.warm_start.to_string(),
                "seeds" => join(&self.seeds),
                "test_mus" => join(&self.test_mus),
                "many_threshold" => self.many_threshold.to_string(),
                "few_threshold" => self.few_threshold.to_string(),
                "out" => self.out.display().to_string(),
                _ => unreachable!("key list and match disagree"),
            };
            entries.push((key, value));
        }
        entries
    }

    /// SHA-256 of the canonical text without `seeds` and `out`, so runs of
    /// the same experiment under different seeds share a hash.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (key, value) in self.entries() {
            if key == "seeds" || key == "out" {
                continue;
            }
            hasher.update(format!("{key}={value}\n").as_bytes());
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

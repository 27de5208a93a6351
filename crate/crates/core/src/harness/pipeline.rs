//! Train XE, derive the balanced model, weight, retrain with xERM, evaluate.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{DataSource, ExperimentConfig, FileFormat};
use super::train::{train_model, EpochStats, Objective, TrainOptions};
use super::{derive_seed, sha256_hex, write_atomic, HarnessError};
use crate::argmax;
use crate::balanced_adjust::{adjust_logits_in_place, estimate_prior, ClassPrior};
use crate::datasets::{
    load_tabular, partition_subsets, subsample_longtail, synth_gaussian_longtail, DecayProfile,
    LongTailDataset, Standardizer, SubsetPartition, TabularFormat,
};
use crate::metrics::{evaluate, MetricsReport};
use crate::model::{save_checkpoint, Architecture, ModelParams, Scratch, CHECKPOINT_VERSION_F32, CHECKPOINT_VERSION_F64};
use crate::xerm::{precompute_sample_weights, SampleWeights, SoftTargets};

/// Splits of one run after loading and standardization.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: LongTailDataset,
    /// Balanced test split.
    pub test: LongTailDataset,
    /// Balanced training set for the feature probe.
    pub probe_train: LongTailDataset,
    pub probe_test: LongTailDataset,
    pub partition: SubsetPartition,
    pub standardizer: Option<Standardizer>,
}

/// One evaluation distribution: the balanced test split or a long-tailed
/// downsample of it.
#[derive(Debug, Clone)]
pub struct Suite {
    pub name: String,
    pub mu: f64,
    pub data: LongTailDataset,
}

/// Everything the xERM stage and the sweeps share for one seed.
#[derive(Debug, Clone)]
pub struct BaseRun {
    pub seed: u64,
    pub data: PreparedData,
    pub suites: Vec<Suite>,
    pub xe: ModelParams,
    pub xe_curve: Vec<EpochStats>,
    pub prior: ClassPrior,
    /// Weights at the configured gamma.
    pub weights: SampleWeights,
    pub targets: SoftTargets,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub model: String,
    pub suite: String,
    pub mu: f64,
    pub suite_class_counts: Vec<usize>,
    pub report: MetricsReport,
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub base: BaseRun,
    pub xerm: ModelParams,
    pub xerm_curve: Vec<EpochStats>,
    pub evaluations: Vec<Evaluation>,
}

impl PipelineRun {
    pub fn evaluation(&self, model: &str, suite: &str) -> Option<&Evaluation> {
        self.evaluations
            .iter()
            .find(|e| e.model == model && e.suite == suite)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix_ms: u64,
    pub wall_clock_secs: f64,
    pub stage_secs: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub crate_version: String,
    pub checkpoint_format: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    /// Canonical config text.
    pub config: String,
    pub seed: u64,
    pub versions: Versions,
    pub train_class_counts: Vec<usize>,
    pub partition: SubsetPartition,
    pub prior: Vec<f64>,
    pub mean_w_f: f64,
    /// Stage name to checkpoint path, relative to the manifest.
    pub checkpoints: BTreeMap<String, String>,
    pub checkpoint_sha256: BTreeMap<String, String>,
    /// Loss curves, weights and per-class tables, relative to the manifest.
    pub artifacts: BTreeMap<String, String>,
    pub evaluations: Vec<Evaluation>,
    pub timing: Timing,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// JSON with the timing block cleared; equal for equal (config, seed).
    pub fn content_json(&self) -> String {
        let mut copy = self.clone();
        copy.timing = Timing::default();
        copy.to_json()
    }

    pub fn evaluation(&self, model: &str, suite: &str) -> Option<&Evaluation> {
        self.evaluations
            .iter()
            .find(|e| e.model == model && e.suite == suite)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub seed: u64,
    pub value: f64,
    pub balanced_accuracy: f64,
    /// One per entry of `test_mus`.
    pub imbalanced_accuracy: Vec<f64>,
    pub balanced_l1: f64,
    pub xe_checkpoint_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub parameter: String,
    pub test_mus: Vec<f64>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Mean balanced-test accuracy over seeds for one swept value.
    pub fn mean_balanced(&self, value: f64) -> Option<f64> {
        let accs: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.value == value)
            .map(|r| r.balanced_accuracy)
            .collect();
        (!accs.is_empty()).then(|| accs.iter().sum::<f64>() / accs.len() as f64)
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut out = format!("seed,{},balanced_accuracy,balanced_l1", self.parameter);
        for mu in &self.test_mus {
            out.push_str(&format!(",accuracy_mu_{mu}"));
        }
        out.push_str(",xe_checkpoint_sha256\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}", r.seed, r.value, r.balanced_accuracy, r.balanced_l1));
            for a in &r.imbalanced_accuracy {
                out.push_str(&format!(",{a}"));
            }
            out.push_str(&format!(",{}\n", r.xe_checkpoint_sha256));
        }
        out.into_bytes()
    }
}

fn dataset_err(stage: &'static str) -> impl Fn(crate::datasets::DatasetError) -> HarnessError {
    move |e| HarnessError::stage(stage, e)
}

/// Loads or generates the splits for `seed` and fits the standardizer on the
/// training split.
pub fn prepare_data(config: &ExperimentConfig, seed: u64) -> Result<PreparedData, HarnessError> {
    let stage = "data";
    let (mut train, mut test, probe) = match &config.data {
        DataSource::Synthetic => {
            let spec = config.synth_spec()?;
            let data_seed = derive_seed(seed, "data");
            let (train, test) = synth_gaussian_longtail(&spec, data_seed).map_err(dataset_err(stage))?;
            // same seed, so the same class means; balanced counts
            let mut probe_spec = spec;
            probe_spec.profile =
                DecayProfile::new(config.probe_per_class, config.classes, 1.0).map_err(dataset_err(stage))?;
            probe_spec.test_per_class = 1;
            let (probe_train, _) = synth_gaussian_longtail(&probe_spec, data_seed).map_err(dataset_err(stage))?;
            (train, test, Some(probe_train))
        }
        DataSource::Files { train, test, format } => {
            let format = match format {
                FileFormat::Csv { header } => TabularFormat::Csv { has_header: *header },
                FileFormat::RawF32 => TabularFormat::RawF32,
            };
            let train = load_tabular(train, format).map_err(dataset_err(stage))?;
            let test = load_tabular(test, format).map_err(dataset_err(stage))?;
            (train, test, None)
        }
    };
    if train.num_classes() != test.num_classes() || train.dims() != test.dims() {
        return Err(HarnessError::stage(
            stage,
            format!(
                "train has {} dims / {} classes, test has {} / {}",
                train.dims(),
                train.num_classes(),
                test.dims(),
                test.num_classes()
            ),
        ));
    }
    let (mut probe_train, mut probe_test) = match probe {
        Some(p) => (p, test.clone()),
        None => split_alternate(&test)?,
    };
    let standardizer = config.standardize.then(|| Standardizer::fit(&train));
    if let Some(s) = &standardizer {
        for d in [&mut train, &mut test, &mut probe_train, &mut probe_test] {
            s.apply(d);
        }
    }
    let partition = partition_subsets(train.class_counts(), config.many_threshold, config.few_threshold)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(PreparedData {
        train,
        test,
        probe_train,
        probe_test,
        partition,
        standardizer,
    })
}

/// Alternating rows of each class go to the probe's train and test halves.
fn split_alternate(test: &LongTailDataset) -> Result<(LongTailDataset, LongTailDataset), HarnessError> {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for rows in test.rows_by_class() {
        if rows.len() < 2 {
            return Err(HarnessError::stage(
                "data",
                "the feature probe needs at least 2 test rows per class",
            ));
        }
        for (k, r) in rows.into_iter().enumerate() {
            if k % 2 == 0 { a.push(r) } else { b.push(r) }
        }
    }
    a.sort_unstable();
    b.sort_unstable();
    Ok((
        test.select(&a, "probe-train").map_err(dataset_err("data"))?,
        test.select(&b, "probe-test").map_err(dataset_err("data"))?,
    ))
}

/// The balanced test split followed by one downsample per `test_mus` entry.
pub fn build_suites(config: &ExperimentConfig, data: &PreparedData, seed: u64) -> Result<Vec<Suite>, HarnessError> {
    let mut suites = vec![Suite {
        name: "balanced".into(),
        mu: 1.0,
        data: data.test.clone(),
    }];
    let n_head = *data.test.class_counts().iter().min().unwrap_or(&0);
    for (k, &mu) in config.test_mus.iter().enumerate() {
        let profile = DecayProfile::new(n_head, config.classes, mu).map_err(dataset_err("suites"))?;
        let sub = subsample_longtail(
            &data.test,
            data.train.class_counts(),
            &profile,
            derive_seed(seed, &format!("suite-{k}")),
        )
        .map_err(dataset_err("suites"))?;
        suites.push(Suite {
            name: format!("mu={mu}"),
            mu,
            data: sub,
        });
    }
    Ok(suites)
}

fn options(config: &ExperimentConfig) -> TrainOptions {
    TrainOptions {
        epochs: config.epochs,
        batch_size: config.batch_size,
        lr: config.lr,
        momentum: config.momentum,
        weight_decay: config.weight_decay,
        schedule: config.lr_schedule(),
        head_only: false,
    }
}

fn check_dims(config: &ExperimentConfig, data: &PreparedData) -> Result<(), HarnessError> {
    if data.train.num_classes() != config.classes {
        return Err(HarnessError::Config(format!(
            "config says {} classes, data has {}",
            config.classes,
            data.train.num_classes()
        )));
    }
    Ok(())
}

fn train_xe_on(
    config: &ExperimentConfig,
    data: &PreparedData,
    seed: u64,
) -> Result<(ModelParams, Vec<EpochStats>), HarnessError> {
    check_dims(config, data)?;
    let shape = config.model_shape(data.train.dims(), data.train.num_classes());
    let mut params = ModelParams::init(shape, config.precision, derive_seed(seed, "init-xe"))
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let curve = train_model(
        &mut params,
        &data.train,
        Objective::CrossEntropy,
        &options(config),
        derive_seed(seed, "shuffle-xe"),
    )
    .map_err(|e| stage_context("train_xe", e))?;
    Ok((params, curve))
}

fn stage_context(stage: &'static str, err: HarnessError) -> HarnessError {
    match err {
        HarnessError::Stage { message, .. } => HarnessError::Stage { stage, message },
        HarnessError::Diverged { epoch, detail } => HarnessError::Stage {
            stage,
            message: format!("diverged at epoch {epoch}: {detail}"),
        },
        other => other,
    }
}

/// Plain cross-entropy training of the imbalanced model.
pub fn train_xe(config: &ExperimentConfig, seed: u64) -> Result<(ModelParams, Vec<EpochStats>), HarnessError> {
    let data = prepare_data(config, seed)?;
    train_xe_on(config, &data, seed)
}

/// Data, suites, the XE model, the prior and weights at the configured gamma.
pub fn prepare_base(config: &ExperimentConfig, seed: u64) -> Result<BaseRun, HarnessError> {
    config.validate()?;
    let data = prepare_data(config, seed)?;
    let suites = build_suites(config, &data, seed)?;
    let (xe, xe_curve) = train_xe_on(config, &data, seed)?;
    let prior = estimate_prior(&data.train).map_err(|e| HarnessError::stage("estimate_prior", e))?;
    let (weights, targets) = precompute_sample_weights(&data.train, &xe, &prior, config.tau, config.gamma)
        .map_err(|e| HarnessError::stage("precompute_sample_weights", e))?;
    Ok(BaseRun {
        seed,
        data,
        suites,
        xe,
        xe_curve,
        prior,
        weights,
        targets,
    })
}

/// Trains the xERM model against `weights` and the base's soft targets.
///
/// Initialization and sample order depend only on the seed, so runs that
/// differ only in their weights are directly comparable.
pub fn train_xerm_stage(
    config: &ExperimentConfig,
    base: &BaseRun,
    weights: &SampleWeights,
) -> Result<(ModelParams, Vec<EpochStats>), HarnessError> {
    let mut params = if config.warm_start {
        base.xe.clone()
    } else {
        ModelParams::init(base.xe.shape, config.precision, derive_seed(base.seed, "init-xerm"))
            .map_err(|e| HarnessError::Config(e.to_string()))?
    };
    let curve = train_model(
        &mut params,
        &base.data.train,
        Objective::Composite {
            weights,
            targets: &base.targets,
        },
        &options(config),
        derive_seed(base.seed, "shuffle-xerm"),
    )
    .map_err(|e| stage_context("train_xerm", e))?;
    Ok((params, curve))
}

/// Argmax predictions, optionally after logit adjustment.
pub fn predict(params: &ModelParams, data: &LongTailDataset, adjust: Option<(&ClassPrior, f64)>) -> Vec<usize> {
    let mut scratch = Scratch::default();
    let mut logits = vec![0.0; params.shape.classes];
    (0..data.len())
        .map(|i| {
            logits.copy_from_slice(params.forward_into(data.row(i), &mut scratch));
            if let Some((prior, tau)) = adjust {
                adjust_logits_in_place(&mut logits, prior, tau);
            }
            argmax(&logits)
        })
        .collect()
}

pub fn evaluate_model(
    params: &ModelParams,
    adjust: Option<(&ClassPrior, f64)>,
    data: &LongTailDataset,
    partition: &SubsetPartition,
) -> Result<MetricsReport, HarnessError> {
    if data.dims() != params.shape.dims || data.num_classes() != params.shape.classes {
        return Err(HarnessError::stage("evaluate", "dataset and model shapes differ"));
    }
    let preds = predict(params, data, adjust);
    evaluate(&preds, data.labels(), data.num_classes(), partition).map_err(|e| HarnessError::stage("evaluate", e))
}

fn evaluate_suites(
    model: &str,
    params: &ModelParams,
    adjust: Option<(&ClassPrior, f64)>,
    base: &BaseRun,
) -> Result<Vec<Evaluation>, HarnessError> {
    base.suites
        .iter()
        .map(|suite| {
            Ok(Evaluation {
                model: model.into(),
                suite: suite.name.clone(),
                mu: suite.mu,
                suite_class_counts: suite.data.class_counts().to_vec(),
                report: evaluate_model(params, adjust, &suite.data, &base.data.partition)?,
            })
        })
        .collect()
}

/// All three stages and the XE / PC / xERM evaluations, without touching disk.
pub fn execute_pipeline(config: &ExperimentConfig, seed: u64) -> Result<PipelineRun, HarnessError> {
    let base = prepare_base(config, seed)?;
    let (xerm, xerm_curve) = train_xerm_stage(config, &base, &base.weights)?;
    let mut evaluations = evaluate_suites("xe", &base.xe, None, &base)?;
    evaluations.extend(evaluate_suites("pc", &base.xe, Some((&base.prior, config.tau)), &base)?);
    evaluations.extend(evaluate_suites("xerm", &xerm, None, &base)?);
    Ok(PipelineRun {
        base,
        xerm,
        xerm_curve,
        evaluations,
    })
}

fn unix_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn slug(name: &str) -> String {
    name.replace('=', "-")
}

/// Runs [`execute_pipeline`] and writes its artifacts and manifest under
/// `<out>/seed-<seed>/`.
pub fn run_xerm_pipeline(config: &ExperimentConfig, seed: u64) -> Result<RunManifest, HarnessError> {
    let started_unix_ms = unix_ms();
    let clock = Instant::now();
    let run = execute_pipeline(config, seed)?;
    let train_secs = clock.elapsed().as_secs_f64();
    let dir = run_dir(config, seed);

    let mut checkpoints = BTreeMap::new();
    let mut checkpoint_sha256 = BTreeMap::new();
    for (stage, params) in [("xe", &run.base.xe), ("xerm", &run.xerm)] {
        let bytes = save_checkpoint(params);
        let rel = format!("{stage}.ckpt");
        write_atomic(&dir.join(&rel), &bytes)?;
        checkpoint_sha256.insert(stage.to_string(), sha256_hex(&bytes));
        checkpoints.insert(stage.to_string(), rel);
    }
    let mut artifacts = BTreeMap::new();
    let mut put = |key: String, rel: String, bytes: &[u8]| -> Result<(), HarnessError> {
        write_atomic(&dir.join(&rel), bytes)?;
        artifacts.insert(key, rel);
        Ok(())
    };
    put("xe_loss".into(), "xe_loss.csv".into(), &EpochStats::curve_csv(&run.base.xe_curve))?;
    put("xerm_loss".into(), "xerm_loss.csv".into(), &EpochStats::curve_csv(&run.xerm_curve))?;
    put("weights".into(), "weights.csv".into(), &run.base.weights.to_csv())?;
    for e in &run.evaluations {
        let key = format!("{}/{}", e.model, e.suite);
        let rel = format!("metrics/{}-{}.csv", e.model, slug(&e.suite));
        put(key, rel, &e.report.per_class_csv(&run.base.data.partition))?;
    }

    let manifest = RunManifest {
        config_hash: config.hash(),
        config: config.to_text(),
        seed,
        versions: Versions {
            crate_version: env!("CARGO_PKG_VERSION").into(),
            checkpoint_format: match config.precision {
                crate::model::Precision::F32 => CHECKPOINT_VERSION_F32,
                crate::model::Precision::F64 => CHECKPOINT_VERSION_F64,
            },
        },
        train_class_counts: run.base.data.train.class_counts().to_vec(),
        partition: run.base.data.partition.clone(),
        prior: run.base.prior.pi.clone(),
        mean_w_f: run.base.weights.mean_w_f(),
        checkpoints,
        checkpoint_sha256,
        artifacts,
        evaluations: run.evaluations,
        timing: Timing {
            started_unix_ms,
            wall_clock_secs: clock.elapsed().as_secs_f64(),
            stage_secs: BTreeMap::from([("pipeline".to_string(), train_secs)]),
        },
    };
    write_atomic(&dir.join("manifest.json"), manifest.to_json().as_bytes())?;
    Ok(manifest)
}

pub fn run_dir(config: &ExperimentConfig, seed: u64) -> PathBuf {
    config.out.join(format!("seed-{seed}"))
}

fn sweep_rows(
    config: &ExperimentConfig,
    base: &BaseRun,
    values: &[f64],
    weights_for: impl Fn(f64) -> SampleWeights,
) -> Result<Vec<SweepRow>, HarnessError> {
    let xe_sha = sha256_hex(&save_checkpoint(&base.xe));
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let (params, _) = train_xerm_stage(config, base, &weights_for(value))?;
        let mut reports = base
            .suites
            .iter()
            .map(|s| evaluate_model(&params, None, &s.data, &base.data.partition));
        let balanced = reports.next().expect("balanced suite")?;
        let imbalanced_accuracy = reports.map(|r| r.map(|r| r.accuracy)).collect::<Result<_, _>>()?;
        rows.push(SweepRow {
            seed: base.seed,
            value,
            balanced_accuracy: balanced.accuracy,
            imbalanced_accuracy,
            balanced_l1: balanced.l1_to_truth,
            xe_checkpoint_sha256: xe_sha.clone(),
        });
    }
    Ok(rows)
}

/// One xERM retrain per gamma on a shared base; only the weights change.
pub fn sweep_gamma_on(config: &ExperimentConfig, base: &BaseRun, gammas: &[f64]) -> Result<Vec<SweepRow>, HarnessError> {
    sweep_rows(config, base, gammas, |g| base.weights.with_gamma(g))
}

/// Constant `(1 − w, w)` distillation per `w` on a shared base.
pub fn ablate_on(config: &ExperimentConfig, base: &BaseRun, ws: &[f64]) -> Result<Vec<SweepRow>, HarnessError> {
    if let Some(w) = ws.iter().find(|w| !(0.0..=1.0).contains(*w)) {
        return Err(HarnessError::Config(format!("constant weight {w} outside [0, 1]")));
    }
    sweep_rows(config, base, ws, |w| base.weights.constant(w))
}

fn sweep_all_seeds(
    config: &ExperimentConfig,
    parameter: &str,
    values: &[f64],
    run: impl Fn(&BaseRun) -> Result<Vec<SweepRow>, HarnessError>,
) -> Result<SweepTable, HarnessError> {
    let mut rows = Vec::new();
    for &seed in &config.seeds {
        let base = prepare_base(config, seed)?;
        rows.extend(run(&base)?);
    }
    debug_assert!(rows.len() == values.len() * config.seeds.len());
    Ok(SweepTable {
        parameter: parameter.into(),
        test_mus: config.test_mus.clone(),
        rows,
    })
}

pub fn sweep_gamma(config: &ExperimentConfig, gammas: &[f64]) -> Result<SweepTable, HarnessError> {
    sweep_all_seeds(config, "gamma", gammas, |base| sweep_gamma_on(config, base, gammas))
}

pub fn ablate_constant_w(config: &ExperimentConfig, ws: &[f64]) -> Result<SweepTable, HarnessError> {
    sweep_all_seeds(config, "w", ws, |base| ablate_on(config, base, ws))
}

/// Freezes the feature layer of `backbone`, redraws and retrains the head on
/// `balanced_train`, and evaluates on `balanced_test`.
pub fn feature_probe(
    backbone: &ModelParams,
    balanced_train: &LongTailDataset,
    balanced_test: &LongTailDataset,
    partition: &SubsetPartition,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<MetricsReport, HarnessError> {
    if backbone.shape.arch != Architecture::Mlp1 {
        return Err(HarnessError::NoFeatureLayer);
    }
    let mut params = backbone.clone();
    params.reinit_head(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, "probe-head")));
    let opts = TrainOptions {
        epochs: config.probe_epochs,
        head_only: true,
        schedule: vec![(config.probe_epochs * 2 / 3, config.lr_decay)],
        ..options(config)
    };
    train_model(
        &mut params,
        balanced_train,
        Objective::CrossEntropy,
        &opts,
        derive_seed(seed, "probe-shuffle"),
    )
    .map_err(|e| stage_context("feature_probe", e))?;
    evaluate_model(&params, None, balanced_test, partition)
}

/// Writes `table` as `<dir>/<name>.csv`.
pub fn write_sweep(table: &SweepTable, dir: &Path, name: &str) -> Result<PathBuf, HarnessError> {
    let path = dir.join(format!("{name}.csv"));
    write_atomic(&path, &table.to_csv())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            classes: 4,
            dims: 3,
            n_head: 60,
            imbalance_ratio: 10.0,
            test_per_class: 20,
            probe_per_class: 10,
            hidden: 8,
            epochs: 4,
            lr_milestones: vec![3],
            probe_epochs: 3,
            seeds: vec![1],
            test_mus: vec![0.1],
            many_threshold: 30,
            few_threshold: 10,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn pipeline_reports_every_model_suite_pair() {
        let run = execute_pipeline(&tiny_config(), 1).unwrap();
        assert_eq!(run.evaluations.len(), 3 * 2);
        for model in ["xe", "pc", "xerm"] {
            for suite in ["balanced", "mu=0.1"] {
                let e = run.evaluation(model, suite).unwrap();
                assert_eq!(e.suite_class_counts, e.report.label_histogram);
            }
        }
        let imbalanced = run.evaluation("xe", "mu=0.1").unwrap();
        assert_eq!(imbalanced.suite_class_counts, vec![20, 9, 4, 2]);
    }

    #[test]
    fn manifest_files_exist_and_content_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = tiny_config();
        config.out = dir.path().to_path_buf();
        let a = run_xerm_pipeline(&config, 1).unwrap();
        let run = run_dir(&config, 1);
        for rel in a.checkpoints.values().chain(a.artifacts.values()) {
            assert!(run.join(rel).is_file(), "{rel}");
        }
        assert!(run.join("manifest.json").is_file());
        let b = run_xerm_pipeline(&config, 1).unwrap();
        assert_eq!(a.content_json(), b.content_json());
    }

    #[test]
    fn gamma_zero_matches_half_weight_ablation() {
        let config = tiny_config();
        let base = prepare_base(&config, 1).unwrap();
        let g = sweep_gamma_on(&config, &base, &[0.0, 0.0]).unwrap();
        let w = ablate_on(&config, &base, &[0.5]).unwrap();
        assert_eq!(g[0], g[1]);
        assert_eq!(g[0].balanced_accuracy, w[0].balanced_accuracy);
        assert_eq!(g[0].imbalanced_accuracy, w[0].imbalanced_accuracy);
    }

    #[test]
    fn constant_w_zero_is_plain_cross_entropy() {
        let config = tiny_config();
        let base = prepare_base(&config, 1).unwrap();
        let shape = base.xe.shape;
        let init = ModelParams::init(shape, config.precision, 9).unwrap();
        let weights = base.weights.constant(0.0);
        let mut a = init.clone();
        let mut b = init;
        let ca = train_model(&mut a, &base.data.train, Objective::CrossEntropy, &options(&config), 4).unwrap();
        let cb = train_model(
            &mut b,
            &base.data.train,
            Objective::Composite {
                weights: &weights,
                targets: &base.targets,
            },
            &options(&config),
            4,
        )
        .unwrap();
        assert_eq!(ca, cb);
        assert_eq!(a, b);
    }

    #[test]
    fn probe_rejects_linear_and_is_deterministic() {
        let mut config = tiny_config();
        let run = execute_pipeline(&config, 1).unwrap();
        let d = &run.base.data;
        let a = feature_probe(&run.xerm, &d.probe_train, &d.probe_test, &d.partition, &config, 1).unwrap();
        let b = feature_probe(&run.xerm, &d.probe_train, &d.probe_test, &d.partition, &config, 1).unwrap();
        assert_eq!(a, b);
        config.arch = Architecture::Linear;
        let linear = train_xe(&config, 1).unwrap().0;
        let err = feature_probe(&linear, &d.probe_train, &d.probe_test, &d.partition, &config, 1).unwrap_err();
        assert!(matches!(err, HarnessError::NoFeatureLayer));
    }

    #[test]
    fn ablation_rejects_out_of_range_w() {
        let config = tiny_config();
        let base = prepare_base(&config, 1).unwrap();
        assert!(ablate_on(&config, &base, &[1.5]).is_err());
    }
}

//! Experiment orchestration: configuration, the three-stage pipeline, sweeps,
//! the feature probe and run artifacts.

mod config;
mod pipeline;
mod report;
mod train;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::{DataSource, ExperimentConfig, FileFormat};
pub use pipeline::{
    ablate_constant_w, ablate_on, build_suites, evaluate_model, execute_pipeline, feature_probe,
    predict, prepare_base, prepare_data, run_dir, run_xerm_pipeline, sweep_gamma, sweep_gamma_on,
    train_xe, train_xerm_stage, write_sweep, BaseRun, Evaluation, PipelineRun, PreparedData,
    RunManifest, Suite, SweepRow, SweepTable, Timing, Versions,
};
pub use report::{load_manifest, report, write_report, CellSummary, HistogramRow, ReportTables};
pub use train::{train_model, EpochStats, Objective, TrainOptions};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("stage {stage}: {message}")]
    Stage { stage: &'static str, message: String },
    #[error("training diverged at epoch {epoch}: {detail}")]
    Diverged { epoch: usize, detail: String },
    #[error("no feature layer: the feature probe needs an mlp1 backbone")]
    NoFeatureLayer,
    #[error("config mismatch: {0}")]
    ConfigMismatch(String),
    #[error("missing manifest: {0}")]
    MissingManifest(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl HarnessError {
    pub(crate) fn stage(stage: &'static str, err: impl std::fmt::Display) -> Self {
        HarnessError::Stage {
            stage,
            message: err.to_string(),
        }
    }

    fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

/// Independent 64-bit seed for a named random stream of a run.
pub fn derive_seed(seed: u64, stream: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(stream.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    let mut tmp = PathBuf::from(path);
    let file_name = path
        .file_name()
        .ok_or_else(|| HarnessError::io(path, "not a file path"))?
        .to_string_lossy()
        .into_owned();
    tmp.set_file_name(format!(".{file_name}.tmp{}", std::process::id()));
    let mut file = fs::File::create(&tmp).map_err(|e| HarnessError::io(&tmp, e))?;
    file.write_all(bytes)
        .and_then(|_| file.sync_all())
        .map_err(|e| HarnessError::io(&tmp, e))?;
    drop(file);
    fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ_by_stream_and_seed() {
        assert_eq!(derive_seed(1, "data"), derive_seed(1, "data"));
        assert_ne!(derive_seed(1, "data"), derive_seed(1, "init"));
        assert_ne!(derive_seed(1, "data"), derive_seed(2, "data"));
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/file.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        let leftovers: Vec<_> = fs::read_dir(path.parent().unwrap()).unwrap().collect();
        assert_eq!(leftovers.len(), 1);
    }
}

//! Aggregation of per-seed manifests into mean ± std tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::pipeline::{Evaluation, RunManifest};
use super::{write_atomic, HarnessError};
use crate::datasets::Subset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub model: String,
    pub suite: String,
    pub metric: String,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single seed.
    pub std: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub model: String,
    pub suite: String,
    pub class: usize,
    pub mean_predicted: f64,
    pub mean_label: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTables {
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub cells: Vec<CellSummary>,
    pub histograms: Vec<HistogramRow>,
}

impl ReportTables {
    pub fn cell(&self, model: &str, suite: &str, metric: &str) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.model == model && c.suite == suite && c.metric == metric)
    }

    pub fn summary_csv(&self) -> Vec<u8> {
        let mut out = String::from("model,suite,metric,mean,std,n\n");
        for c in &self.cells {
            out.push_str(&format!("{},{},{},{},{},{}\n", c.model, c.suite, c.metric, c.mean, c.std, c.n));
        }
        out.into_bytes()
    }

    pub fn histogram_csv(&self) -> Vec<u8> {
        let mut out = String::from("model,suite,class,mean_predicted,mean_label\n");
        for h in &self.histograms {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                h.model, h.suite, h.class, h.mean_predicted, h.mean_label
            ));
        }
        out.into_bytes()
    }
}

pub fn load_manifest(path: &Path) -> Result<RunManifest, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::MissingManifest(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Io {
        path: path.display().to_string(),
        message: format!("manifest does not parse: {e}"),
    })
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn metrics_of(e: &Evaluation) -> Vec<(String, f64)> {
    let r = &e.report;
    let mut m = vec![
        ("accuracy".to_string(), r.accuracy),
        ("macro_recall".into(), r.overall.recall),
        ("macro_precision".into(), r.overall.precision),
        ("macro_f1".into(), r.overall.f1),
        ("l1_to_truth".into(), r.l1_to_truth),
    ];
    for subset in Subset::ALL {
        if let Some(s) = r.subsets.get(subset) {
            m.push((format!("{subset}_recall"), s.recall));
            m.push((format!("{subset}_precision"), s.precision));
            m.push((format!("{subset}_f1"), s.f1));
        }
    }
    m
}

/// Mean and sample std across manifests of every (model, suite, metric)
/// cell. All manifests must share one config hash.
pub fn report(paths: &[PathBuf]) -> Result<ReportTables, HarnessError> {
    if paths.is_empty() {
        return Err(HarnessError::MissingManifest("no manifest paths given".into()));
    }
    let manifests = paths
        .iter()
        .map(|p| load_manifest(p))
        .collect::<Result<Vec<_>, _>>()?;
    let hash = manifests[0].config_hash.clone();
    if let Some((path, m)) = paths.iter().zip(&manifests).find(|(_, m)| m.config_hash != hash) {
        return Err(HarnessError::ConfigMismatch(format!(
            "{} has config hash {}, expected {hash}",
            path.display(),
            m.config_hash
        )));
    }

    // keyed by first-seen order of (model, suite, metric)
    let mut order: Vec<(String, String, String)> = Vec::new();
    let mut values: BTreeMap<(String, String, String), Vec<f64>> = BTreeMap::new();
    let mut hist_order: Vec<(String, String)> = Vec::new();
    let mut hists: BTreeMap<(String, String), (Vec<f64>, Vec<f64>, usize)> = BTreeMap::new();
    for m in &manifests {
        for e in &m.evaluations {
            for (metric, v) in metrics_of(e) {
                let key = (e.model.clone(), e.suite.clone(), metric);
                values
                    .entry(key.clone())
                    .or_insert_with(|| {
                        order.push(key);
                        Vec::new()
                    })
                    .push(v);
            }
            let key = (e.model.clone(), e.suite.clone());
            let classes = e.report.prediction_histogram.len();
            let entry = hists.entry(key.clone()).or_insert_with(|| {
                hist_order.push(key);
                (vec![0.0; classes], vec![0.0; classes], 0)
            });
            for (acc, &v) in entry.0.iter_mut().zip(&e.report.prediction_histogram) {
                *acc += v as f64;
            }
            for (acc, &v) in entry.1.iter_mut().zip(&e.report.label_histogram) {
                *acc += v as f64;
            }
            entry.2 += 1;
        }
    }

    let cells = order
        .into_iter()
        .map(|key| {
            let v = &values[&key];
            let (mean, std) = mean_std(v);
            CellSummary {
                model: key.0,
                suite: key.1,
                metric: key.2,
                mean,
                std,
                n: v.len(),
            }
        })
        .collect();
    let mut histograms = Vec::new();
    for key in hist_order {
        let (pred, label, n) = &hists[&key];
        for class in 0..pred.len() {
            histograms.push(HistogramRow {
                model: key.0.clone(),
                suite: key.1.clone(),
                class,
                mean_predicted: pred[class] / *n as f64,
                mean_label: label[class] / *n as f64,
            });
        }
    }
    Ok(ReportTables {
        config_hash: hash,
        seeds: manifests.iter().map(|m| m.seed).collect(),
        cells,
        histograms,
    })
}

/// Writes `summary.csv` and `histograms.csv` into `dir`.
pub fn write_report(tables: &ReportTables, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let summary = dir.join("summary.csv");
    let hist = dir.join("histograms.csv");
    write_atomic(&summary, &tables.summary_csv())?;
    write_atomic(&hist, &tables.histogram_csv())?;
    Ok(vec![summary, hist])
}

//! Cross-domain adjustment weights and the composite cross-domain risk.
//!
//! Each training sample gets a pair `(w_f, w_cf)` from the relative
//! cross-entropies of the imbalanced model `p^F` and the balanced model
//! `p^CF`:
//!
//! ```text
//! w_f  = ce_f^γ / (ce_f^γ + ce_cf^γ)
//! w_cf = 1 − w_f
//! ```
//!
//! The training loss is cross-entropy against the ground truth scaled by
//! `w_f` plus cross-entropy against the balanced prediction `ŷ` scaled by
//! `w_cf`. Both weights and soft targets are computed once, against frozen
//! base models.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::balanced_adjust::{adjust_logits_in_place, ClassPrior};
use crate::datasets::LongTailDataset;
use crate::model::{softmax_in_place, ModelError, ModelParams, Scratch};

/// Floor applied to probabilities before taking logs, and the offset inside
/// the weight power that defines the both-zero case.
pub const EPS: f64 = 1e-12;

const DISTRIBUTION_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum XermError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn check_distribution(p: &[f64], what: &str) -> Result<(), XermError> {
    if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(XermError::InvalidDistribution(format!(
            "{what} has a negative or non-finite entry"
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > DISTRIBUTION_TOL {
        return Err(XermError::InvalidDistribution(format!(
            "{what} sums to {sum}"
        )));
    }
    Ok(())
}

fn check_label(p: &[f64], y: usize) -> Result<(), XermError> {
    if y >= p.len() {
        return Err(XermError::InvalidDistribution(format!(
            "label {y} outside {} classes",
            p.len()
        )));
    }
    Ok(())
}

/// `−ln p[y]`, with `p[y]` floored at [`EPS`].
pub fn cross_entropy(p: &[f64], y: usize) -> Result<f64, XermError> {
    check_distribution(p, "prediction")?;
    check_label(p, y)?;
    Ok(-p[y].max(EPS).ln())
}

/// `(w_f, w_cf)` for one sample.
///
/// Evaluated as a logistic of `γ·(ln(ce_f+ε) − ln(ce_cf+ε))`, which equals the
/// power-ratio form and cannot overflow for large `|γ|`.
pub fn compute_weights(ce_f: f64, ce_cf: f64, gamma: f64) -> (f64, f64) {
    let log_ratio = (ce_f + EPS).ln() - (ce_cf + EPS).ln();
    let t = gamma * log_ratio;
    let w_f = if t == 0.0 { 0.5 } else { 1.0 / (1.0 + (-t).exp()) };
    (w_f, 1.0 - w_f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightRecord {
    pub sample_id: usize,
    pub ce_f: f64,
    pub ce_cf: f64,
    pub w_f: f64,
    pub w_cf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleWeights {
    pub gamma: f64,
    pub records: Vec<WeightRecord>,
}

impl SampleWeights {
    /// Same cross-entropies, weights recomputed for another `gamma`.
    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self {
            gamma,
            records: self
                .records
                .iter()
                .map(|r| {
                    let (w_f, w_cf) = compute_weights(r.ce_f, r.ce_cf, gamma);
                    WeightRecord { w_f, w_cf, ..*r }
                })
                .collect(),
        }
    }

    /// `(1 − w, w)` for every sample, the constant-weight distillation mix.
    pub fn constant(&self, w: f64) -> Self {
        Self {
            gamma: f64::NAN,
            records: self
                .records
                .iter()
                .map(|r| WeightRecord {
                    w_f: 1.0 - w,
                    w_cf: w,
                    ..*r
                })
                .collect(),
        }
    }

    pub fn mean_w_f(&self) -> f64 {
        self.records.iter().map(|r| r.w_f).sum::<f64>() / self.records.len().max(1) as f64
    }

    /// `sample_id,ce_f,ce_cf,w_f,w_cf` with a header row.
    pub fn to_csv(&self) -> Vec<u8> {
        let mut out = Vec::new();
        writeln!(out, "sample_id,ce_f,ce_cf,w_f,w_cf").unwrap();
        for r in &self.records {
            writeln!(out, "{},{},{},{},{}", r.sample_id, r.ce_f, r.ce_cf, r.w_f, r.w_cf).unwrap();
        }
        out
    }
}

/// Balanced-model prediction per training sample, row-major `[n × C]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftTargets {
    pub classes: usize,
    pub values: Vec<f64>,
}

impl SoftTargets {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.classes..(i + 1) * self.classes]
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.classes.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Cross-entropies of the frozen imbalanced model and its logit-adjusted
/// counterpart on every training sample, the resulting weights, and the
/// balanced predictions used as soft targets.
pub fn precompute_sample_weights(
    train: &LongTailDataset,
    imbalanced: &ModelParams,
    prior: &ClassPrior,
    tau: f64,
    gamma: f64,
) -> Result<(SampleWeights, SoftTargets), XermError> {
    let c = imbalanced.shape.classes;
    if train.dims() != imbalanced.shape.dims || train.num_classes() != c || prior.num_classes() != c {
        return Err(ModelError::ShapeMismatch(format!(
            "dataset ({} dims, {} classes), model ({} dims, {} classes), prior ({} classes)",
            train.dims(),
            train.num_classes(),
            imbalanced.shape.dims,
            c,
            prior.num_classes()
        ))
        .into());
    }
    let mut scratch = Scratch::default();
    let mut records = Vec::with_capacity(train.len());
    let mut targets = Vec::with_capacity(train.len() * c);
    let mut p_f = vec![0.0; c];
    let mut p_cf = vec![0.0; c];
    for i in 0..train.len() {
        let logits = imbalanced.forward_into(train.row(i), &mut scratch);
        if logits.iter().any(|z| !z.is_finite()) {
            return Err(ModelError::NonFinite(format!("logits of sample {i}")).into());
        }
        p_f.copy_from_slice(logits);
        p_cf.copy_from_slice(logits);
        softmax_in_place(&mut p_f);
        adjust_logits_in_place(&mut p_cf, prior, tau);
        softmax_in_place(&mut p_cf);
        let y = train.labels()[i];
        let ce_f = cross_entropy(&p_f, y)?;
        let ce_cf = cross_entropy(&p_cf, y)?;
        let (w_f, w_cf) = compute_weights(ce_f, ce_cf, gamma);
        records.push(WeightRecord {
            sample_id: i,
            ce_f,
            ce_cf,
            w_f,
            w_cf,
        });
        targets.extend_from_slice(&p_cf);
    }
    Ok((
        SampleWeights { gamma, records },
        SoftTargets {
            classes: c,
            values: targets,
        },
    ))
}

/// Composite loss `−w_f·ln f_y − w_cf·Σ ŷ_i ln f_i` and its gradient with
/// respect to the logits that produced `f_probs`, `f − (w_f·y + w_cf·ŷ)`.
pub fn xerm_loss(
    f_probs: &[f64],
    y: usize,
    y_hat: &[f64],
    w_f: f64,
    w_cf: f64,
) -> Result<(f64, Vec<f64>), XermError> {
    check_distribution(f_probs, "prediction")?;
    check_distribution(y_hat, "soft target")?;
    check_label(f_probs, y)?;
    if y_hat.len() != f_probs.len() {
        return Err(XermError::InvalidDistribution(format!(
            "soft target has {} classes, prediction has {}",
            y_hat.len(),
            f_probs.len()
        )));
    }
    if !(0.0..=1.0).contains(&w_f) || !(0.0..=1.0).contains(&w_cf) || (w_f + w_cf - 1.0).abs() > 1e-9 {
        return Err(XermError::InvalidWeights(format!(
            "w_f={w_f}, w_cf={w_cf} must lie in [0, 1] and sum to 1"
        )));
    }
    let mut grad = vec![0.0; f_probs.len()];
    let loss = xerm_loss_unchecked(f_probs, y, y_hat, w_f, w_cf, &mut grad);
    Ok((loss, grad))
}

/// [`xerm_loss`] without validation, writing the gradient into `grad`.
pub fn xerm_loss_unchecked(
    f_probs: &[f64],
    y: usize,
    y_hat: &[f64],
    w_f: f64,
    w_cf: f64,
    grad: &mut [f64],
) -> f64 {
    let mut soft = 0.0;
    for (i, ((&f, &t), g)) in f_probs.iter().zip(y_hat).zip(grad.iter_mut()).enumerate() {
        if t != 0.0 {
            soft -= t * f.max(EPS).ln();
        }
        let target = w_cf * t + if i == y { w_f } else { 0.0 };
        *g = f - target;
    }
    let hard = -f_probs[y].max(EPS).ln();
    w_f * hard + w_cf * soft
}

/// Constant-weight distillation: [`xerm_loss`] with `(w_f, w_cf) = (1 − w, w)`.
pub fn kd_constant_loss(
    f_probs: &[f64],
    y: usize,
    y_hat: &[f64],
    w: f64,
) -> Result<(f64, Vec<f64>), XermError> {
    xerm_loss(f_probs, y, y_hat, 1.0 - w, w)
}

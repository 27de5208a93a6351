//! Post-hoc logit adjustment: the balanced model obtained from an imbalanced
//! one by subtracting the scaled log training prior from its logits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datasets::LongTailDataset;
use crate::model::{softmax, ModelError, ModelParams};

#[derive(Debug, Error, PartialEq)]
pub enum PriorError {
    #[error("class {0} has no training samples")]
    EmptyClass(usize),
    #[error("prior needs at least one class")]
    NoClasses,
}

/// Empirical class frequencies of a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassPrior {
    pub pi: Vec<f64>,
    pub source_counts: Vec<usize>,
}

impl ClassPrior {
    pub fn from_counts(counts: &[usize]) -> Result<Self, PriorError> {
        if counts.is_empty() {
            return Err(PriorError::NoClasses);
        }
        if let Some(c) = counts.iter().position(|&n| n == 0) {
            return Err(PriorError::EmptyClass(c));
        }
        let total: usize = counts.iter().sum();
        Ok(Self {
            pi: counts.iter().map(|&n| n as f64 / total as f64).collect(),
            source_counts: counts.to_vec(),
        })
    }

    pub fn uniform(classes: usize) -> Self {
        Self::from_counts(&vec![1; classes]).expect("non-empty uniform prior")
    }

    pub fn num_classes(&self) -> usize {
        self.pi.len()
    }
}

pub fn estimate_prior(train: &LongTailDataset) -> Result<ClassPrior, PriorError> {
    ClassPrior::from_counts(train.class_counts())
}

/// `z'_c = z_c − tau·ln(pi_c)`.
pub fn adjust_logits(logits: &[f64], prior: &ClassPrior, tau: f64) -> Vec<f64> {
    let mut out = logits.to_vec();
    adjust_logits_in_place(&mut out, prior, tau);
    out
}

pub fn adjust_logits_in_place(logits: &mut [f64], prior: &ClassPrior, tau: f64) {
    if tau == 0.0 {
        return;
    }
    for (z, &p) in logits.iter_mut().zip(&prior.pi) {
        *z -= tau * p.ln();
    }
}

/// `softmax(adjust_logits(forward_logits(params, x)))`.
pub fn balanced_predict(
    params: &ModelParams,
    x: &[f64],
    prior: &ClassPrior,
    tau: f64,
) -> Result<Vec<f64>, ModelError> {
    if prior.num_classes() != params.shape.classes {
        return Err(ModelError::ShapeMismatch(format!(
            "prior has {} classes, model has {}",
            prior.num_classes(),
            params.shape.classes
        )));
    }
    let logits = params.forward_logits(x)?;
    Ok(softmax(&adjust_logits(&logits, prior, tau)))
}

//! Cross-domain empirical risk minimization (xERM) for long-tailed
//! classification.
//!
//! The crate covers the whole loop at desk scale:
//!
//! - [`datasets`]: long-tailed dataset construction, tabular I/O, subset splits
//!   and imbalanced test-suite downsampling.
//! - [`model`]: softmax-linear and one-hidden-layer ReLU classifiers with
//!   hand-written gradients, SGD with momentum and binary checkpoints.
//! - [`balanced_adjust`]: the post-hoc logit-adjusted ("PC") balanced model.
//! - [`xerm`]: per-sample cross-domain weights and the composite risk.
//! - [`causal_oracle`]: exact enumeration checks of the backdoor identities on
//!   small discrete structural causal models.
//! - [`metrics`]: accuracy, per-subset macro recall/precision/F1 and
//!   prediction-bias statistics.
//! - [`harness`]: configuration, the three-step pipeline, sweeps, probes and
//!   run manifests.

pub mod balanced_adjust;
pub mod causal_oracle;
pub mod datasets;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod xerm;

pub use balanced_adjust::ClassPrior;
pub use datasets::{DecayProfile, LongTailDataset, SubsetPartition};
pub use metrics::MetricsReport;
pub use model::{Architecture, ModelParams};
pub use xerm::{SampleWeights, SoftTargets};

/// Lowest-index argmax. Ties resolve to the smallest class id.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::argmax;

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[0.0, 0.0]), 0);
    }
}

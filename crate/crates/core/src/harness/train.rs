//! Minibatch SGD over cross-entropy or the composite xERM objective.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::argmax;
use crate::datasets::LongTailDataset;
use crate::model::{sgd_step, softmax_in_place, ModelParams, OptimizerState, Scratch};
use crate::xerm::{xerm_loss_unchecked, SampleWeights, SoftTargets, EPS};

#[derive(Debug, Clone, Copy)]
pub enum Objective<'a> {
    CrossEntropy,
    /// Per-sample `(w_f, w_cf)` and balanced soft targets, indexed like the
    /// training set.
    Composite {
        weights: &'a SampleWeights,
        targets: &'a SoftTargets,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    /// L2 penalty on weight matrices (biases are not decayed).
    pub weight_decay: f64,
    pub schedule: Vec<(usize, f64)>,
    /// Update only `W2`/`b2`.
    pub head_only: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr: f64,
    pub mean_loss: f64,
    pub train_accuracy: f64,
}

impl EpochStats {
    pub fn curve_csv(curve: &[EpochStats]) -> Vec<u8> {
        let mut out = String::from("epoch,lr,mean_loss,train_accuracy\n");
        for s in curve {
            out.push_str(&format!("{},{},{},{}\n", s.epoch, s.lr, s.mean_loss, s.train_accuracy));
        }
        out.into_bytes()
    }
}

/// Trains `params` in place and returns one [`EpochStats`] per epoch.
///
/// Sample order is reshuffled every epoch from a ChaCha8 stream seeded with
/// `shuffle_seed`, so a run is a pure function of its inputs.
pub fn train_model(
    params: &mut ModelParams,
    data: &LongTailDataset,
    objective: Objective<'_>,
    options: &TrainOptions,
    shuffle_seed: u64,
) -> Result<Vec<EpochStats>, HarnessError> {
    let shape = params.shape;
    let c = shape.classes;
    if data.dims() != shape.dims || data.num_classes() != c {
        return Err(HarnessError::stage(
            "train",
            format!(
                "dataset has {} dims / {} classes, model expects {} / {}",
                data.dims(),
                data.num_classes(),
                shape.dims,
                c
            ),
        ));
    }
    if let Objective::Composite { weights, targets } = objective {
        if weights.records.len() != data.len() || targets.len() != data.len() || targets.classes != c {
            return Err(HarnessError::stage(
                "train",
                format!(
                    "{} weights and {} soft targets for {} samples",
                    weights.records.len(),
                    targets.len(),
                    data.len()
                ),
            ));
        }
    }
    if options.batch_size == 0 {
        return Err(HarnessError::Config("batch_size must be >= 1".into()));
    }

    let mut state = OptimizerState::new(params, options.lr, options.momentum, options.schedule.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut scratch = Scratch::default();
    let mut grads = vec![0.0; params.values.len()];
    let mut probs = vec![0.0; c];
    let mut grad_logits = vec![0.0; c];
    let mut decayed = vec![shape.w2()];
    let mut trainable = vec![shape.w2(), shape.b2()];
    if !options.head_only && shape.hidden > 0 {
        decayed.push(shape.w1());
        trainable.extend([shape.w1(), shape.b1()]);
    }
    let mut curve = Vec::with_capacity(options.epochs);

    for epoch in 0..options.epochs {
        order.shuffle(&mut rng);
        let mut total_loss = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(options.batch_size) {
            grads.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let x = data.row(i);
                let y = data.labels()[i];
                probs.copy_from_slice(params.forward_into(x, &mut scratch));
                if argmax(&probs) == y {
                    correct += 1;
                }
                softmax_in_place(&mut probs);
                let loss = match objective {
                    Objective::CrossEntropy => {
                        for (k, (g, &p)) in grad_logits.iter_mut().zip(&probs).enumerate() {
                            *g = if k == y { p - 1.0 } else { p };
                        }
                        -probs[y].max(EPS).ln()
                    }
                    Objective::Composite { weights, targets } => {
                        let r = &weights.records[i];
                        xerm_loss_unchecked(&probs, y, targets.row(i), r.w_f, r.w_cf, &mut grad_logits)
                    }
                };
                if !loss.is_finite() {
                    return Err(HarnessError::Diverged {
                        epoch,
                        detail: format!("non-finite loss {loss} on sample {i}"),
                    });
                }
                total_loss += loss;
                params.accumulate_gradient(x, &grad_logits, scale, &mut scratch, &mut grads);
            }
            if options.weight_decay > 0.0 {
                for range in &decayed {
                    for (g, &p) in grads[range.clone()].iter_mut().zip(&params.values[range.clone()]) {
                        *g += options.weight_decay * p;
                    }
                }
            }
            if options.head_only {
                let mut mask = vec![false; grads.len()];
                for range in &trainable {
                    mask[range.clone()].iter_mut().for_each(|m| *m = true);
                }
                for (g, keep) in grads.iter_mut().zip(mask) {
                    if !keep {
                        *g = 0.0;
                    }
                }
            }
            sgd_step(params, &grads, &mut state, epoch).map_err(|e| HarnessError::stage("train", e))?;
        }
        if !params.is_finite() {
            return Err(HarnessError::Diverged {
                epoch,
                detail: "non-finite parameters after update".into(),
            });
        }
        let n = data.len().max(1) as f64;
        curve.push(EpochStats {
            epoch,
            lr: state.lr_at(epoch),
            mean_loss: total_loss / n,
            train_accuracy: correct as f64 / n,
        });
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelShape, Precision};

    fn options(epochs: usize) -> TrainOptions {
        TrainOptions {
            epochs,
            batch_size: 4,
            lr: 0.1,
            momentum: 0.9,
            weight_decay: 0.0,
            schedule: vec![],
            head_only: false,
        }
    }

    fn separable() -> LongTailDataset {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..20 {
            let t = i as f64 / 10.0;
            x.extend([1.0 + t, 0.5 - t]);
            y.push(0);
            x.extend([-1.0 - t, 0.3 + t]);
            y.push(1);
        }
        LongTailDataset::new("toy", 2, 2, x, y).unwrap()
    }

    #[test]
    fn separable_toy_reaches_full_accuracy() {
        let data = separable();
        let mut params = ModelParams::init(ModelShape::linear(2, 2), Precision::F64, 3).unwrap();
        let curve = train_model(&mut params, &data, Objective::CrossEntropy, &options(30), 1).unwrap();
        assert_eq!(curve.last().unwrap().train_accuracy, 1.0);
        assert!(curve.last().unwrap().mean_loss < curve[0].mean_loss);
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let data = separable();
        let init = ModelParams::init(ModelShape::mlp1(2, 4, 2), Precision::F32, 3).unwrap();
        let mut params = init.clone();
        let curve = train_model(&mut params, &data, Objective::CrossEntropy, &options(0), 1).unwrap();
        assert!(curve.is_empty());
        assert_eq!(params, init);
    }

    #[test]
    fn head_only_freezes_feature_layer() {
        let data = separable();
        let init = ModelParams::init(ModelShape::mlp1(2, 4, 2), Precision::F64, 5).unwrap();
        let mut params = init.clone();
        let mut opts = options(3);
        opts.head_only = true;
        opts.weight_decay = 1e-3;
        train_model(&mut params, &data, Objective::CrossEntropy, &opts, 1).unwrap();
        let s = params.shape;
        assert_eq!(params.values[s.w1()], init.values[s.w1()]);
        assert_eq!(params.values[s.b1()], init.values[s.b1()]);
        assert_ne!(params.values[s.w2()], init.values[s.w2()]);
    }

    #[test]
    fn divergence_is_reported() {
        let data = separable();
        let mut params = ModelParams::init(ModelShape::linear(2, 2), Precision::F64, 3).unwrap();
        let mut opts = options(50);
        opts.lr = 1e308;
        let err = train_model(&mut params, &data, Objective::CrossEntropy, &opts, 1).unwrap_err();
        assert!(matches!(err, HarnessError::Diverged { .. }), "{err}");
    }
}

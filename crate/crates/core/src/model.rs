//! Softmax-linear and one-hidden-layer ReLU classifiers with analytic
//! gradients, SGD with momentum, and the binary checkpoint format.
//!
//! Parameters live in one flat buffer laid out as `W1 | b1 | W2 | b2`
//! (row-major, `W1: [dims × H]`, `W2: [in × C]`). The linear architecture has
//! empty `W1`/`b1` blocks. Arithmetic is always 64-bit; with
//! [`Precision::F32`] every stored parameter is rounded to the nearest `f32`
//! after initialization and after each optimizer step.

use std::fmt;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"XERM";
/// Parameter blocks stored as f32.
pub const CHECKPOINT_VERSION_F32: u32 = 1;
/// Parameter blocks stored as f64.
pub const CHECKPOINT_VERSION_F64: u32 = 2;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Linear,
    Mlp1,
}

impl Architecture {
    fn tag(self) -> u8 {
        match self {
            Architecture::Linear => 0,
            Architecture::Mlp1 => 1,
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Architecture::Linear),
            1 => Some(Architecture::Mlp1),
            _ => None,
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Architecture::Linear => "linear",
            Architecture::Mlp1 => "mlp1",
        })
    }
}

impl std::str::FromStr for Architecture {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(Architecture::Linear),
            "mlp1" => Ok(Architecture::Mlp1),
            other => Err(format!("unknown architecture {other:?} (linear|mlp1)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    #[inline]
    pub fn round(self, v: f64) -> f64 {
        match self {
            Precision::F32 => v as f32 as f64,
            Precision::F64 => v,
        }
    }
}

impl std::str::FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(format!("unknown precision {other:?} (f32|f64)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelShape {
    pub arch: Architecture,
    pub dims: usize,
    /// Hidden width; 0 for the linear architecture.
    pub hidden: usize,
    pub classes: usize,
}

impl ModelShape {
    pub fn linear(dims: usize, classes: usize) -> Self {
        Self {
            arch: Architecture::Linear,
            dims,
            hidden: 0,
            classes,
        }
    }

    pub fn mlp1(dims: usize, hidden: usize, classes: usize) -> Self {
        Self {
            arch: Architecture::Mlp1,
            dims,
            hidden,
            classes,
        }
    }

    pub fn new(arch: Architecture, dims: usize, hidden: usize, classes: usize) -> Self {
        match arch {
            Architecture::Linear => Self::linear(dims, classes),
            Architecture::Mlp1 => Self::mlp1(dims, hidden, classes),
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        let hidden_ok = match self.arch {
            Architecture::Linear => self.hidden == 0,
            Architecture::Mlp1 => self.hidden > 0,
        };
        if self.dims == 0 || self.classes < 2 || !hidden_ok {
            return Err(ModelError::ShapeMismatch(format!(
                "invalid {} shape dims={} hidden={} classes={}",
                self.arch, self.dims, self.hidden, self.classes
            )));
        }
        Ok(())
    }

    /// Width of the layer feeding the output head.
    pub fn head_inputs(&self) -> usize {
        match self.arch {
            Architecture::Linear => self.dims,
            Architecture::Mlp1 => self.hidden,
        }
    }

    pub fn w1(&self) -> Range<usize> {
        0..self.dims * self.hidden
    }

    pub fn b1(&self) -> Range<usize> {
        let start = self.w1().end;
        start..start + self.hidden
    }

    pub fn w2(&self) -> Range<usize> {
        let start = self.b1().end;
        start..start + self.head_inputs() * self.classes
    }

    pub fn b2(&self) -> Range<usize> {
        let start = self.w2().end;
        start..start + self.classes
    }

    pub fn num_params(&self) -> usize {
        self.b2().end
    }
}

/// Flat parameter (or gradient) buffer for one classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub shape: ModelShape,
    pub precision: Precision,
    pub values: Vec<f64>,
}

/// Reusable per-sample buffers for the forward/backward passes.
#[derive(Debug, Clone, Default)]
pub struct Scratch {
    pre: Vec<f64>,
    hidden: Vec<f64>,
    logits: Vec<f64>,
    grad_hidden: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(shape: ModelShape, precision: Precision) -> Result<Self, ModelError> {
        shape.validate()?;
        Ok(Self {
            shape,
            precision,
            values: vec![0.0; shape.num_params()],
        })
    }

    /// Glorot-uniform weights in ±sqrt(6/(fan_in+fan_out)), zero biases.
    pub fn init(shape: ModelShape, precision: Precision, seed: u64) -> Result<Self, ModelError> {
        let mut params = Self::zeros(shape, precision)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if shape.arch == Architecture::Mlp1 {
            let limit = (6.0 / (shape.dims + shape.hidden) as f64).sqrt();
            for v in &mut params.values[shape.w1()] {
                *v = precision.round(rng.gen_range(-limit..limit));
            }
        }
        params.reinit_head(&mut rng);
        Ok(params)
    }

    /// Redraws `W2` and zeroes `b2`, leaving any feature layer untouched.
    pub fn reinit_head(&mut self, rng: &mut impl Rng) {
        let shape = self.shape;
        let limit = (6.0 / (shape.head_inputs() + shape.classes) as f64).sqrt();
        for v in &mut self.values[shape.w2()] {
            *v = self.precision.round(rng.gen_range(-limit..limit));
        }
        self.values[shape.b2()].iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn w1(&self) -> &[f64] {
        &self.values[self.shape.w1()]
    }

    pub fn b1(&self) -> &[f64] {
        &self.values[self.shape.b1()]
    }

    pub fn w2(&self) -> &[f64] {
        &self.values[self.shape.w2()]
    }

    pub fn b2(&self) -> &[f64] {
        &self.values[self.shape.b2()]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    fn check_input(&self, x: &[f64]) -> Result<(), ModelError> {
        if x.len() != self.shape.dims {
            return Err(ModelError::ShapeMismatch(format!(
                "input has {} entries, model expects {}",
                x.len(),
                self.shape.dims
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("input features".into()));
        }
        Ok(())
    }

    /// Head inputs for `x`: the ReLU hidden layer for mlp1, `x` itself for
    /// the linear model.
    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_input(x)?;
        let mut scratch = Scratch::default();
        self.forward_into(x, &mut scratch);
        Ok(match self.shape.arch {
            Architecture::Linear => x.to_vec(),
            Architecture::Mlp1 => scratch.hidden,
        })
    }

    pub fn forward_logits(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_input(x)?;
        let mut scratch = Scratch::default();
        self.forward_into(x, &mut scratch);
        Ok(scratch.logits)
    }

    /// Forward pass without validation; fills `scratch` and returns the logits.
    pub fn forward_into<'s>(&self, x: &[f64], scratch: &'s mut Scratch) -> &'s [f64] {
        let s = self.shape;
        let c = s.classes;
        scratch.logits.clear();
        scratch.logits.extend_from_slice(self.b2());
        let head_in: &[f64] = match s.arch {
            Architecture::Linear => x,
            Architecture::Mlp1 => {
                let h = s.hidden;
                scratch.pre.clear();
                scratch.pre.extend_from_slice(self.b1());
                let w1 = self.w1();
                for (i, &xi) in x.iter().enumerate() {
                    if xi == 0.0 {
                        continue;
                    }
                    let row = &w1[i * h..(i + 1) * h];
                    for (a, &w) in scratch.pre.iter_mut().zip(row) {
                        *a += xi * w;
                    }
                }
                scratch.hidden.clear();
                scratch.hidden.extend(scratch.pre.iter().map(|&a| a.max(0.0)));
                &scratch.hidden
            }
        };
        let w2 = self.w2();
        for (j, &hj) in head_in.iter().enumerate() {
            if hj == 0.0 {
                continue;
            }
            let row = &w2[j * c..(j + 1) * c];
            for (z, &w) in scratch.logits.iter_mut().zip(row) {
                *z += hj * w;
            }
        }
        &scratch.logits
    }

    /// Adds `scale ·` ∂(logits·grad_logits)/∂params into `grads`.
    ///
    /// `scratch` must hold the forward pass of the same `x`.
    pub fn accumulate_gradient(
        &self,
        x: &[f64],
        grad_logits: &[f64],
        scale: f64,
        scratch: &mut Scratch,
        grads: &mut [f64],
    ) {
        let s = self.shape;
        let c = s.classes;
        for (g, &gl) in grads[s.b2()].iter_mut().zip(grad_logits) {
            *g += scale * gl;
        }
        let head_in: &[f64] = match s.arch {
            Architecture::Linear => x,
            Architecture::Mlp1 => &scratch.hidden,
        };
        let w2_grad = &mut grads[s.w2()];
        for (j, &hj) in head_in.iter().enumerate() {
            if hj == 0.0 {
                continue;
            }
            let row = &mut w2_grad[j * c..(j + 1) * c];
            for (g, &gl) in row.iter_mut().zip(grad_logits) {
                *g += scale * hj * gl;
            }
        }
        if s.arch == Architecture::Linear {
            return;
        }
        let h = s.hidden;
        let w2 = self.w2();
        scratch.grad_hidden.clear();
        scratch.grad_hidden.extend((0..h).map(|j| {
            if scratch.pre[j] > 0.0 {
                let row = &w2[j * c..(j + 1) * c];
                scale * row.iter().zip(grad_logits).map(|(w, g)| w * g).sum::<f64>()
            } else {
                0.0
            }
        }));
        for (g, &d) in grads[s.b1()].iter_mut().zip(&scratch.grad_hidden) {
            *g += d;
        }
        let w1_grad = &mut grads[s.w1()];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &mut w1_grad[i * h..(i + 1) * h];
            for (g, &d) in row.iter_mut().zip(&scratch.grad_hidden) {
                *g += xi * d;
            }
        }
    }
}

/// Gradient of `logits(x) · grad_logits` with respect to every parameter.
pub fn backward(
    params: &ModelParams,
    x: &[f64],
    grad_logits: &[f64],
) -> Result<ModelParams, ModelError> {
    params.check_input(x)?;
    if grad_logits.len() != params.shape.classes {
        return Err(ModelError::ShapeMismatch(format!(
            "grad_logits has {} entries, model has {} classes",
            grad_logits.len(),
            params.shape.classes
        )));
    }
    if grad_logits.iter().any(|g| !g.is_finite()) {
        return Err(ModelError::NonFinite("grad_logits".into()));
    }
    let mut scratch = Scratch::default();
    params.forward_into(x, &mut scratch);
    let mut grads = ModelParams::zeros(params.shape, Precision::F64)?;
    params.accumulate_gradient(x, grad_logits, 1.0, &mut scratch, &mut grads.values);
    Ok(grads)
}

/// Numerically stable softmax (max subtraction).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let mut out = logits.to_vec();
    softmax_in_place(&mut out);
    out
}

pub fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub learning_rate: f64,
    pub momentum: f64,
    pub velocity: Vec<f64>,
    /// `(epoch, multiplier)`, sorted by epoch; the last entry with
    /// `epoch <= current` applies.
    pub schedule: Vec<(usize, f64)>,
}

impl OptimizerState {
    pub fn new(params: &ModelParams, learning_rate: f64, momentum: f64, schedule: Vec<(usize, f64)>) -> Self {
        let mut schedule = schedule;
        schedule.sort_by_key(|&(epoch, _)| epoch);
        Self {
            learning_rate,
            momentum,
            velocity: vec![0.0; params.values.len()],
            schedule,
        }
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        let multiplier = self
            .schedule
            .iter()
            .take_while(|&&(e, _)| e <= epoch)
            .last()
            .map_or(1.0, |&(_, m)| m);
        self.learning_rate * multiplier
    }
}

/// `v ← momentum·v − lr(epoch)·g; p ← p + v`.
pub fn sgd_step(
    params: &mut ModelParams,
    grads: &[f64],
    state: &mut OptimizerState,
    epoch: usize,
) -> Result<(), ModelError> {
    if grads.len() != params.values.len() || state.velocity.len() != params.values.len() {
        return Err(ModelError::ShapeMismatch(format!(
            "params {}, grads {}, velocity {}",
            params.values.len(),
            grads.len(),
            state.velocity.len()
        )));
    }
    let lr = state.lr_at(epoch);
    let precision = params.precision;
    for ((p, v), &g) in params.values.iter_mut().zip(&mut state.velocity).zip(grads) {
        *v = state.momentum * *v - lr * g;
        *p = precision.round(*p + *v);
    }
    Ok(())
}

pub fn save_checkpoint(params: &ModelParams) -> Vec<u8> {
    let s = params.shape;
    let version = match params.precision {
        Precision::F32 => CHECKPOINT_VERSION_F32,
        Precision::F64 => CHECKPOINT_VERSION_F64,
    };
    let width = if version == CHECKPOINT_VERSION_F32 { 4 } else { 8 };
    let mut out = Vec::with_capacity(33 + params.values.len() * width);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&version.to_le_bytes());
    out.push(s.arch.tag());
    for dim in [s.dims, s.hidden, s.classes] {
        out.extend_from_slice(&(dim as u64).to_le_bytes());
    }
    for &v in &params.values {
        match params.precision {
            Precision::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
            Precision::F64 => out.extend_from_slice(&v.to_le_bytes()),
        }
    }
    out
}

pub fn load_checkpoint(bytes: &[u8]) -> Result<ModelParams, ModelError> {
    let corrupt = |msg: String| ModelError::CorruptCheckpoint(msg);
    const HEADER: usize = 4 + 4 + 1 + 3 * 8;
    if bytes.len() < HEADER {
        return Err(corrupt(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(corrupt("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let (precision, width) = match version {
        CHECKPOINT_VERSION_F32 => (Precision::F32, 4),
        CHECKPOINT_VERSION_F64 => (Precision::F64, 8),
        v => return Err(corrupt(format!("unsupported version {v}"))),
    };
    let arch = Architecture::from_tag(bytes[8])
        .ok_or_else(|| corrupt(format!("unknown architecture tag {}", bytes[8])))?;
    let dim = |i: usize| {
        let at = 9 + 8 * i;
        u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap()) as usize
    };
    let shape = ModelShape {
        arch,
        dims: dim(0),
        hidden: dim(1),
        classes: dim(2),
    };
    shape
        .validate()
        .map_err(|e| corrupt(format!("header shape: {e}")))?;
    let n = shape.num_params();
    let body = &bytes[HEADER..];
    if body.len() != n * width {
        return Err(corrupt(format!(
            "expected {} parameter bytes, found {}",
            n * width,
            body.len()
        )));
    }
    let values: Vec<f64> = match precision {
        Precision::F32 => body
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect(),
        Precision::F64 => body
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect(),
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(corrupt("non-finite parameter".into()));
    }
    Ok(ModelParams {
        shape,
        precision,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_params(shape: ModelShape, seed: u64) -> ModelParams {
        let mut p = ModelParams::init(shape, Precision::F64, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb1a5);
        for v in p.values.iter_mut() {
            *v += rng.gen_range(-0.5..0.5);
        }
        p
    }

    #[test]
    fn zero_linear_model_gives_zero_logits() {
        let p = ModelParams::zeros(ModelShape::linear(3, 4), Precision::F32).unwrap();
        assert_eq!(p.forward_logits(&[1.0, -2.0, 0.5]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn identity_linear_model() {
        let mut p = ModelParams::zeros(ModelShape::linear(2, 2), Precision::F64).unwrap();
        let w2 = p.shape.w2();
        p.values[w2].copy_from_slice(&[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(p.forward_logits(&[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let p = ModelParams::zeros(ModelShape::mlp1(3, 4, 2), Precision::F64).unwrap();
        assert!(matches!(
            p.forward_logits(&[1.0]),
            Err(ModelError::ShapeMismatch(_))
        ));
        assert!(backward(&p, &[1.0, 2.0, 3.0], &[1.0]).is_err());
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&[0.0, 0.0]), vec![0.5, 0.5]);
        let p = softmax(&[1000.0, 0.0]);
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p[0] - 1.0).abs() < 1e-300_f64.max(f64::EPSILON));
        let a = softmax(&[0.3, -1.2, 2.0]);
        let b = softmax(&[100.3, 98.8, 102.0]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_grad_logits_give_zero_gradient() {
        let p = random_params(ModelShape::mlp1(3, 5, 4), 1);
        let g = backward(&p, &[0.5, -1.0, 2.0], &[0.0; 4]).unwrap();
        assert!(g.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_weight_gradient_is_outer_product() {
        let p = random_params(ModelShape::linear(3, 2), 2);
        let x = [0.5, -1.0, 2.0];
        let gl = [0.25, -0.75];
        let g = backward(&p, &x, &gl).unwrap();
        for i in 0..3 {
            for c in 0..2 {
                assert_eq!(g.w2()[i * 2 + c], x[i] * gl[c]);
            }
        }
        assert_eq!(g.b2(), &gl);
    }

    #[test]
    fn sgd_examples() {
        let mut p = ModelParams::zeros(ModelShape::linear(1, 2), Precision::F64).unwrap();
        let mut state = OptimizerState::new(&p, 1.0, 0.0, vec![]);
        let mut g = vec![0.0; p.values.len()];
        g[0] = 1.0;
        sgd_step(&mut p, &g, &mut state, 0).unwrap();
        assert_eq!(p.values[0], -1.0);

        let before = p.clone();
        let mut state = OptimizerState::new(&p, 0.5, 0.9, vec![]);
        let zeros = vec![0.0; p.values.len()];
        for epoch in 0..20 {
            sgd_step(&mut p, &zeros, &mut state, epoch).unwrap();
        }
        assert_eq!(p, before);

        let state = OptimizerState::new(&p, 0.2, 0.9, vec![(10, 0.1), (0, 1.0)]);
        assert_eq!(state.lr_at(9), 0.2);
        assert_eq!(state.lr_at(10), 0.2 * 0.1);
        assert_eq!(state.lr_at(50), 0.2 * 0.1);
    }

    #[test]
    fn momentum_accumulates() {
        let mut p = ModelParams::zeros(ModelShape::linear(1, 2), Precision::F64).unwrap();
        let mut state = OptimizerState::new(&p, 1.0, 0.5, vec![]);
        let mut g = vec![0.0; p.values.len()];
        g[0] = 1.0;
        sgd_step(&mut p, &g, &mut state, 0).unwrap();
        sgd_step(&mut p, &g, &mut state, 1).unwrap();
        assert_eq!(p.values[0], -1.0 + (-1.5));
    }

    #[test]
    fn f32_precision_rounds_storage() {
        let p = ModelParams::init(ModelShape::mlp1(4, 6, 3), Precision::F32, 9).unwrap();
        assert!(p.values.iter().all(|&v| v == v as f32 as f64));
    }

    #[test]
    fn checkpoint_roundtrip_and_corruption() {
        for precision in [Precision::F32, Precision::F64] {
            for shape in [ModelShape::linear(3, 4), ModelShape::mlp1(3, 5, 4)] {
                let p = ModelParams::init(shape, precision, 4).unwrap();
                let bytes = save_checkpoint(&p);
                let back = load_checkpoint(&bytes).unwrap();
                assert_eq!(back, p);
                assert_eq!(save_checkpoint(&back), bytes);
                assert!(matches!(
                    load_checkpoint(&bytes[..bytes.len() - 1]),
                    Err(ModelError::CorruptCheckpoint(_))
                ));
                let mut bad = bytes.clone();
                bad[0] = b'Y';
                assert!(matches!(
                    load_checkpoint(&bad),
                    Err(ModelError::CorruptCheckpoint(_))
                ));
            }
        }
        assert!(load_checkpoint(b"XE").is_err());
    }

    #[test]
    fn checkpoint_header_layout() {
        let p = ModelParams::init(ModelShape::mlp1(2, 3, 4), Precision::F32, 0).unwrap();
        let bytes = save_checkpoint(&p);
        assert_eq!(&bytes[..4], b"XERM");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(bytes[8], 1);
        assert_eq!(u64::from_le_bytes(bytes[9..17].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(bytes[17..25].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(bytes[25..33].try_into().unwrap()), 4);
        assert_eq!(bytes.len(), 33 + 4 * (2 * 3 + 3 + 3 * 4 + 4));
    }

    proptest! {
        #[test]
        fn forward_is_finite(seed in any::<u64>(), x in proptest::collection::vec(-10.0f64..10.0, 4)) {
            let p = random_params(ModelShape::mlp1(4, 7, 3), seed);
            let z = p.forward_logits(&x).unwrap();
            prop_assert!(z.iter().all(|v| v.is_finite()));
        }

        #[test]
        fn softmax_normalizes(z in proptest::collection::vec(-500.0f64..500.0, 2..12), shift in -1e3f64..1e3) {
            let p = softmax(&z);
            let sum: f64 = p.iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
            prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
            let shifted: Vec<f64> = z.iter().map(|v| v + shift).collect();
            let q = softmax(&shifted);
            prop_assert_eq!(crate::argmax(&p), crate::argmax(&q));
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() <= 1e-9);
            }
        }
    }
}

//! Long-tailed dataset construction, tabular I/O and subset partitions.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid decay profile: {0}")]
    InvalidProfile(String),
    #[error("class {class} has {available} samples but {needed} are required")]
    InsufficientSamples {
        class: usize,
        needed: usize,
        available: usize,
    },
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("labels are not contiguous from 0: class {missing} never appears")]
    NonContiguousLabels { missing: usize },
    #[error("invalid subset thresholds: many={many}, few={few}")]
    InvalidThresholds { many: usize, few: usize },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl DatasetError {
    fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        DatasetError::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}

/// Feature matrix with integer labels and cached per-class counts.
#[derive(Debug, Clone, PartialEq)]
pub struct LongTailDataset {
    pub name: String,
    dims: usize,
    num_classes: usize,
    /// Row-major `[n_samples × dims]`.
    features: Vec<f64>,
    labels: Vec<usize>,
    class_counts: Vec<usize>,
    /// Decay profile the class counts were drawn from, if any.
    pub profile: Option<DecayProfile>,
}

impl LongTailDataset {
    /// Validates shapes, label range, finiteness and that no class is empty.
    pub fn new(
        name: impl Into<String>,
        dims: usize,
        num_classes: usize,
        features: Vec<f64>,
        labels: Vec<usize>,
    ) -> Result<Self, DatasetError> {
        if dims == 0 {
            return Err(DatasetError::Invalid("dims must be positive".into()));
        }
        if features.len() != labels.len() * dims {
            return Err(DatasetError::Invalid(format!(
                "{} feature values do not match {} rows of {} dims",
                features.len(),
                labels.len(),
                dims
            )));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(DatasetError::Invalid(format!(
                "non-finite feature in row {}",
                i / dims
            )));
        }
        let mut class_counts = vec![0usize; num_classes];
        for (row, &y) in labels.iter().enumerate() {
            if y >= num_classes {
                return Err(DatasetError::Invalid(format!(
                    "label {y} in row {row} is outside [0, {num_classes})"
                )));
            }
            class_counts[y] += 1;
        }
        if let Some(missing) = class_counts.iter().position(|&c| c == 0) {
            return Err(DatasetError::NonContiguousLabels { missing });
        }
        Ok(Self {
            name: name.into(),
            dims,
            num_classes,
            features,
            labels,
            class_counts,
            profile: None,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dims..(i + 1) * self.dims]
    }

    /// Largest over smallest class count.
    pub fn imbalance_ratio(&self) -> f64 {
        let max = self.class_counts.iter().copied().max().unwrap_or(0);
        let min = self.class_counts.iter().copied().min().unwrap_or(0);
        max as f64 / min as f64
    }

    /// Copy holding only `rows`, in the given order.
    pub fn select(&self, rows: &[usize], name: impl Into<String>) -> Result<Self, DatasetError> {
        let mut features = Vec::with_capacity(rows.len() * self.dims);
        let mut labels = Vec::with_capacity(rows.len());
        for &r in rows {
            features.extend_from_slice(self.row(r));
            labels.push(self.labels[r]);
        }
        LongTailDataset::new(name, self.dims, self.num_classes, features, labels)
    }

    /// Row indices grouped by label.
    pub fn rows_by_class(&self) -> Vec<Vec<usize>> {
        let mut by_class = vec![Vec::new(); self.num_classes];
        for (i, &y) in self.labels.iter().enumerate() {
            by_class[y].push(i);
        }
        by_class
    }
}

/// Exponential class-size decay `n_i = N · mu^((i-1)/(C-1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub n_head: usize,
    pub num_classes: usize,
    /// Reciprocal of the imbalance ratio.
    pub mu: f64,
}

impl DecayProfile {
    pub fn new(n_head: usize, num_classes: usize, mu: f64) -> Result<Self, DatasetError> {
        let profile = Self {
            n_head,
            num_classes,
            mu,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn from_imbalance_ratio(
        n_head: usize,
        num_classes: usize,
        ratio: f64,
    ) -> Result<Self, DatasetError> {
        if !(ratio >= 1.0) {
            return Err(DatasetError::InvalidProfile(format!(
                "imbalance ratio {ratio} must be >= 1"
            )));
        }
        Self::new(n_head, num_classes, 1.0 / ratio)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.num_classes < 2 {
            return Err(DatasetError::InvalidProfile(format!(
                "need at least 2 classes, got {}",
                self.num_classes
            )));
        }
        if self.n_head < 1 {
            return Err(DatasetError::InvalidProfile("n_head must be >= 1".into()));
        }
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(DatasetError::InvalidProfile(format!(
                "mu {} outside (0, 1]",
                self.mu
            )));
        }
        Ok(())
    }
}

/// Per-rank class sizes of a decay profile: floor, then clamp to 1.
///
/// Values within a relative 1e-9 below an integer snap up to it so that
/// products like `500 · 0.01` are not floored to 4 by representation error.
pub fn decay_counts(profile: &DecayProfile) -> Result<Vec<usize>, DatasetError> {
    profile.validate()?;
    let c = profile.num_classes;
    let n = profile.n_head as f64;
    Ok((0..c)
        .map(|i| {
            let exponent = i as f64 / (c - 1) as f64;
            let raw = n * profile.mu.powf(exponent);
            let snapped = if raw.ceil() - raw < 1e-9 * raw.max(1.0) {
                raw.ceil()
            } else {
                raw.floor()
            };
            (snapped as usize).max(1)
        })
        .collect())
}

/// Class ids sorted by descending count; ties by ascending id.
pub fn rank_classes(train_counts: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..train_counts.len()).collect();
    order.sort_by(|&a, &b| train_counts[b].cmp(&train_counts[a]).then(a.cmp(&b)));
    order
}

/// Downsamples a balanced split so that the class of rank `i` in
/// training-frequency order keeps exactly `decay_counts(profile)[i]` rows.
///
/// Rows are drawn uniformly without replacement; retained rows keep their
/// original relative order.
pub fn subsample_longtail(
    balanced: &LongTailDataset,
    train_counts: &[usize],
    profile: &DecayProfile,
    seed: u64,
) -> Result<LongTailDataset, DatasetError> {
    let counts = decay_counts(profile)?;
    let c = balanced.num_classes();
    if profile.num_classes != c || train_counts.len() != c {
        return Err(DatasetError::Invalid(format!(
            "class count mismatch: dataset {c}, profile {}, train counts {}",
            profile.num_classes,
            train_counts.len()
        )));
    }
    let by_class = balanced.rows_by_class();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = Vec::new();
    for (rank, &class) in rank_classes(train_counts).iter().enumerate() {
        let pool = &by_class[class];
        let needed = counts[rank];
        if pool.len() < needed {
            return Err(DatasetError::InsufficientSamples {
                class,
                needed,
                available: pool.len(),
            });
        }
        let picked = index::sample(&mut rng, pool.len(), needed);
        keep.extend(picked.into_iter().map(|j| pool[j]));
    }
    keep.sort_unstable();
    let mut out = balanced.select(&keep, format!("{}-mu{}", balanced.name, profile.mu))?;
    out.profile = Some(*profile);
    Ok(out)
}

/// Parameters of the synthetic Gaussian-mixture benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub dims: usize,
    pub profile: DecayProfile,
    /// Radius of the sphere the class means sit on.
    pub class_sep: f64,
    pub noise_sd: f64,
    /// Rows per class in the balanced test split.
    pub test_per_class: usize,
}

/// Generates a long-tailed training split and a balanced test split from one
/// isotropic Gaussian per class. Class 0 is the head class.
pub fn synth_gaussian_longtail(
    spec: &SynthSpec,
    seed: u64,
) -> Result<(LongTailDataset, LongTailDataset), DatasetError> {
    let counts = decay_counts(&spec.profile)?;
    let c = spec.profile.num_classes;
    if spec.dims < 2 {
        return Err(DatasetError::Invalid("synthetic data needs dims >= 2".into()));
    }
    if !(spec.class_sep > 0.0) || !(spec.noise_sd > 0.0) {
        return Err(DatasetError::Invalid(
            "class_sep and noise_sd must be positive".into(),
        ));
    }
    if spec.test_per_class < 1 {
        return Err(DatasetError::Invalid("test_per_class must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means = Vec::with_capacity(c * spec.dims);
    for _ in 0..c {
        let dir: Vec<f64> = (0..spec.dims)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        means.extend(dir.iter().map(|v| v / norm * spec.class_sep));
    }
    let mut draw = |per_class: &dyn Fn(usize) -> usize| {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for class in 0..c {
            let mean = &means[class * spec.dims..(class + 1) * spec.dims];
            for _ in 0..per_class(class) {
                for &m in mean {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    features.push(m + spec.noise_sd * z);
                }
                labels.push(class);
            }
        }
        (features, labels)
    };
    let (train_x, train_y) = draw(&|class| counts[class]);
    let (test_x, test_y) = draw(&|_| spec.test_per_class);
    let mut train = LongTailDataset::new("synthetic-train", spec.dims, c, train_x, train_y)?;
    train.profile = Some(spec.profile);
    let mut test = LongTailDataset::new("synthetic-test", spec.dims, c, test_x, test_y)?;
    test.profile = Some(DecayProfile::new(spec.test_per_class, c, 1.0)?);
    Ok((train, test))
}

/// Per-dimension affine standardization fitted on one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &LongTailDataset) -> Self {
        let d = data.dims();
        let n = data.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for i in 0..data.len() {
            for (m, v) in mean.iter_mut().zip(data.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for i in 0..data.len() {
            for ((s, v), m) in var.iter_mut().zip(data.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        // constant columns are left unscaled
        let scale = var
            .iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, data: &mut LongTailDataset) {
        let d = data.dims;
        for row in data.features.chunks_mut(d) {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    Many,
    Medium,
    Few,
}

impl Subset {
    pub const ALL: [Subset; 3] = [Subset::Many, Subset::Medium, Subset::Few];

    pub fn as_str(self) -> &'static str {
        match self {
            Subset::Many => "many",
            Subset::Medium => "medium",
            Subset::Few => "few",
        }
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Many/medium/few tag per class, from training counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetPartition {
    pub many_threshold: usize,
    pub few_threshold: usize,
    pub assignment: Vec<Subset>,
}

impl SubsetPartition {
    pub fn classes(&self, subset: Subset) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == subset)
            .map(|(c, _)| c)
            .collect()
    }
}

/// Many iff count > `many_threshold`, few iff count < `few_threshold`.
pub fn partition_subsets(
    train_counts: &[usize],
    many_threshold: usize,
    few_threshold: usize,
) -> Result<SubsetPartition, DatasetError> {
    if few_threshold < 1 || few_threshold > many_threshold {
        return Err(DatasetError::InvalidThresholds {
            many: many_threshold,
            few: few_threshold,
        });
    }
    let assignment = train_counts
        .iter()
        .map(|&n| {
            if n > many_threshold {
                Subset::Many
            } else if n < few_threshold {
                Subset::Few
            } else {
                Subset::Medium
            }
        })
        .collect();
    Ok(SubsetPartition {
        many_threshold,
        few_threshold,
        assignment,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TabularFormat {
    /// Label in the last column.
    Csv { has_header: bool },
    /// Three little-endian u64 (n_samples, n_dims, C), f32 features, u32 labels.
    RawF32,
}

pub fn load_tabular(path: &Path, format: TabularFormat) -> Result<LongTailDataset, DatasetError> {
    let bytes = fs::read(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "tabular".into());
    match format {
        TabularFormat::Csv { has_header } => parse_csv(&bytes, has_header, name),
        TabularFormat::RawF32 => parse_raw_f32(&bytes, name),
    }
}

pub fn parse_csv(
    bytes: &[u8],
    has_header: bool,
    name: String,
) -> Result<LongTailDataset, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut dims = None;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            DatasetError::parse(format!("line {line}"), e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let at = || format!("line {line}");
        if record.len() < 2 {
            return Err(DatasetError::parse(
                at(),
                "need at least one feature column and a label column",
            ));
        }
        let d = record.len() - 1;
        match dims {
            None => dims = Some(d),
            Some(expected) if expected != d => {
                return Err(DatasetError::parse(
                    at(),
                    format!("expected {expected} feature columns, found {d}"),
                ))
            }
            _ => {}
        }
        for field in record.iter().take(d) {
            let v: f64 = field
                .parse()
                .map_err(|_| DatasetError::parse(at(), format!("bad number {field:?}")))?;
            features.push(v);
        }
        let label_field = &record[d];
        let label: usize = label_field
            .parse()
            .map_err(|_| DatasetError::parse(at(), format!("bad label {label_field:?}")))?;
        labels.push(label);
    }
    let Some(dims) = dims else {
        return Err(DatasetError::parse("line 1", "no data rows"));
    };
    let num_classes = labels.iter().copied().max().unwrap_or(0) + 1;
    LongTailDataset::new(name, dims, num_classes, features, labels)
}

pub fn parse_raw_f32(bytes: &[u8], name: String) -> Result<LongTailDataset, DatasetError> {
    fn u64_at(bytes: &[u8], offset: usize) -> Result<u64, DatasetError> {
        bytes
            .get(offset..offset + 8)
            .map(|b| u64::from_le_bytes(b.try_into().unwrap()))
            .ok_or_else(|| DatasetError::parse(format!("offset {offset}"), "truncated header"))
    }
    let n = u64_at(bytes, 0)? as usize;
    let dims = u64_at(bytes, 8)? as usize;
    let num_classes = u64_at(bytes, 16)? as usize;
    if n == 0 || dims == 0 || num_classes == 0 {
        return Err(DatasetError::parse("offset 0", "header declares an empty dataset"));
    }
    let feature_bytes = n
        .checked_mul(dims)
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| DatasetError::parse("offset 0", "header sizes overflow"))?;
    let expected = 24 + feature_bytes + n * 4;
    if bytes.len() != expected {
        return Err(DatasetError::parse(
            format!("offset {}", bytes.len().min(expected)),
            format!("expected {expected} bytes, found {}", bytes.len()),
        ));
    }
    let features = bytes[24..24 + feature_bytes]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
        .collect();
    let mut labels = Vec::with_capacity(n);
    for (i, b) in bytes[24 + feature_bytes..].chunks_exact(4).enumerate() {
        let label = u32::from_le_bytes(b.try_into().unwrap()) as usize;
        if label >= num_classes {
            return Err(DatasetError::parse(
                format!("offset {}", 24 + feature_bytes + 4 * i),
                format!("label {label} >= declared class count {num_classes}"),
            ));
        }
        labels.push(label);
    }
    LongTailDataset::new(name, dims, num_classes, features, labels)
}

pub fn encode_csv(data: &LongTailDataset, header: bool) -> Vec<u8> {
    let mut out = Vec::new();
    if header {
        let mut cols: Vec<String> = (0..data.dims()).map(|j| format!("x{j}")).collect();
        cols.push("label".into());
        writeln!(out, "{}", cols.join(",")).unwrap();
    }
    for i in 0..data.len() {
        for v in data.row(i) {
            write!(out, "{v},").unwrap();
        }
        writeln!(out, "{}", data.labels()[i]).unwrap();
    }
    out
}

pub fn encode_raw_f32(data: &LongTailDataset) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + data.features().len() * 4 + data.len() * 4);
    out.extend_from_slice(&(data.len() as u64).to_le_bytes());
    out.extend_from_slice(&(data.dims() as u64).to_le_bytes());
    out.extend_from_slice(&(data.num_classes() as u64).to_le_bytes());
    for &v in data.features() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    for &y in data.labels() {
        out.extend_from_slice(&(y as u32).to_le_bytes());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn profile(n: usize, c: usize, mu: f64) -> DecayProfile {
        DecayProfile::new(n, c, mu).unwrap()
    }

    #[test]
    fn decay_counts_examples() {
        let counts = decay_counts(&profile(100, 100, 0.01)).unwrap();
        assert_eq!(counts[0], 100);
        assert_eq!(counts[99], 1);
        assert_eq!(decay_counts(&profile(50, 3, 1.0)).unwrap(), vec![50, 50, 50]);
        assert_eq!(decay_counts(&profile(50, 3, 0.25)).unwrap(), vec![50, 25, 12]);
    }

    #[test]
    fn decay_counts_rejects_bad_profiles() {
        assert!(DecayProfile::new(10, 1, 0.5).is_err());
        assert!(DecayProfile::new(10, 3, 0.0).is_err());
        assert!(DecayProfile::new(10, 3, 1.5).is_err());
        let raw = DecayProfile {
            n_head: 10,
            num_classes: 3,
            mu: f64::NAN,
        };
        assert!(matches!(
            decay_counts(&raw),
            Err(DatasetError::InvalidProfile(_))
        ));
    }

    #[test]
    fn rank_breaks_ties_by_id() {
        assert_eq!(rank_classes(&[5, 9, 5, 1]), vec![1, 0, 2, 3]);
    }

    fn balanced(per_class: usize, c: usize) -> LongTailDataset {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for class in 0..c {
            for k in 0..per_class {
                features.push((class * 1000 + k) as f64);
                features.push(k as f64);
                labels.push(class);
            }
        }
        LongTailDataset::new("bal", 2, c, features, labels).unwrap()
    }

    #[test]
    fn subsample_mu_one_keeps_everything() {
        let data = balanced(7, 4);
        let out = subsample_longtail(&data, &[9, 8, 7, 6], &profile(7, 4, 1.0), 3).unwrap();
        assert_eq!(out.class_counts(), data.class_counts());
        assert_eq!(out.features(), data.features());
    }

    #[test]
    fn subsample_cifar_like_matches_decay() {
        let data = balanced(100, 100);
        let train_counts: Vec<usize> = (0..100).map(|c| 500 - c).collect();
        let p = profile(100, 100, 0.01);
        let out = subsample_longtail(&data, &train_counts, &p, 11).unwrap();
        assert_eq!(out.class_counts(), decay_counts(&p).unwrap().as_slice());
        assert_eq!(out.imbalance_ratio(), 100.0);
    }

    #[test]
    fn subsample_follows_train_rank_not_id() {
        let data = balanced(10, 3);
        let out = subsample_longtail(&data, &[1, 50, 20], &profile(10, 3, 0.25), 0).unwrap();
        // rank order is class 1, class 2, class 0
        assert_eq!(out.class_counts(), &[2, 10, 5]);
    }

    #[test]
    fn subsample_is_deterministic() {
        let data = balanced(20, 5);
        let p = profile(20, 5, 0.1);
        let a = subsample_longtail(&data, &[5, 4, 3, 2, 1], &p, 42).unwrap();
        let b = subsample_longtail(&data, &[5, 4, 3, 2, 1], &p, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn subsample_reports_short_class() {
        let data = balanced(5, 3);
        let err = subsample_longtail(&data, &[3, 2, 1], &profile(6, 3, 1.0), 0).unwrap_err();
        assert!(matches!(
            err,
            DatasetError::InsufficientSamples {
                class: 0,
                needed: 6,
                available: 5
            }
        ));
    }

    fn synth(mu: f64) -> SynthSpec {
        SynthSpec {
            dims: 4,
            profile: profile(500, 10, mu),
            class_sep: 2.0,
            noise_sd: 1.0,
            test_per_class: 20,
        }
    }

    #[test]
    fn synth_counts_follow_profile() {
        let (train, test) = synth_gaussian_longtail(&synth(1.0), 1).unwrap();
        assert!(train.class_counts().iter().all(|&n| n == 500));
        assert!(test.class_counts().iter().all(|&n| n == 20));

        let (train, _) = synth_gaussian_longtail(&synth(0.01), 1).unwrap();
        assert_eq!(train.class_counts()[0], 500);
        assert_eq!(train.class_counts()[9], 5);
        assert_eq!(train.imbalance_ratio(), 100.0);
    }

    #[test]
    fn synth_is_seeded() {
        let a = synth_gaussian_longtail(&synth(0.1), 5).unwrap();
        let b = synth_gaussian_longtail(&synth(0.1), 5).unwrap();
        let c = synth_gaussian_longtail(&synth(0.1), 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0.features(), c.0.features());
        assert_eq!(a.0.class_counts(), c.0.class_counts());
    }

    #[test]
    fn standardizer_zero_mean_unit_variance() {
        let (mut train, _) = synth_gaussian_longtail(&synth(0.1), 2).unwrap();
        Standardizer::fit(&train).apply(&mut train);
        let refit = Standardizer::fit(&train);
        for (m, s) in refit.mean.iter().zip(&refit.scale) {
            assert!(m.abs() < 1e-12);
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn partition_examples() {
        use Subset::*;
        let p = partition_subsets(&[150, 50, 10], 100, 20).unwrap();
        assert_eq!(p.assignment, vec![Many, Medium, Few]);
        let p = partition_subsets(&[100; 4], 100, 20).unwrap();
        assert!(p.assignment.iter().all(|&s| s == Medium));
        assert!(matches!(
            partition_subsets(&[1], 10, 20),
            Err(DatasetError::InvalidThresholds { .. })
        ));
    }

    #[test]
    fn csv_examples() {
        let d = parse_csv(b"0.5,1.0,0\n1.5,2.0,0\n3.0,1.0,1\n", false, "t".into()).unwrap();
        assert_eq!(d.class_counts(), &[2, 1]);
        assert_eq!(d.row(2), &[3.0, 1.0]);

        let d = parse_csv(b"a,b,label\n0.5,1.0,0\n3.0,1.0,1\n", true, "t".into()).unwrap();
        assert_eq!(d.len(), 2);

        assert!(matches!(
            parse_csv(b"", false, "t".into()),
            Err(DatasetError::Parse { .. })
        ));
        assert!(matches!(
            parse_csv(b"1,0\n2,2\n", false, "t".into()),
            Err(DatasetError::NonContiguousLabels { missing: 1 })
        ));
        match parse_csv(b"1,0\n2,x\n", false, "t".into()) {
            Err(DatasetError::Parse { location, .. }) => assert_eq!(location, "line 2"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn raw_f32_roundtrip_and_truncation() {
        let d = parse_csv(b"0.5,1.0,0\n1.5,2.0,1\n", false, "t".into()).unwrap();
        let bytes = encode_raw_f32(&d);
        let back = parse_raw_f32(&bytes, "t".into()).unwrap();
        assert_eq!(back.features(), d.features());
        assert_eq!(back.labels(), d.labels());
        assert!(parse_raw_f32(&bytes[..bytes.len() - 1], "t".into()).is_err());
        assert!(parse_raw_f32(&[], "t".into()).is_err());
    }

    proptest! {
        #[test]
        fn decay_counts_non_increasing(n in 1usize..5000, c in 2usize..200, mu in 1e-4f64..=1.0) {
            let counts = decay_counts(&profile(n, c, mu)).unwrap();
            prop_assert_eq!(counts.len(), c);
            prop_assert_eq!(counts[0], n);
            prop_assert!(counts.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(counts.iter().all(|&k| k >= 1));
            // flooring the tail can only raise the realized ratio; clamping
            // to 1 caps it at n
            let realized = counts[0] as f64 / counts[c - 1] as f64;
            let requested = 1.0 / mu;
            let tail = n as f64 * mu;
            if tail < 1.0 {
                prop_assert_eq!(realized, n as f64);
                prop_assert!(realized <= requested);
            } else {
                prop_assert!(realized >= requested * (1.0 - 1e-9));
            }
        }

        #[test]
        fn realized_ratio_exact_for_integral_tail(tail in 1usize..50, ratio in 1usize..60, c in 2usize..40) {
            let n = tail * ratio;
            let counts = decay_counts(&profile(n, c, 1.0 / ratio as f64)).unwrap();
            prop_assert_eq!(counts[c - 1], tail);
            prop_assert_eq!(counts[0] / counts[c - 1], ratio);
        }

        #[test]
        fn partition_tags_every_class(counts in proptest::collection::vec(1usize..500, 1..50),
                                      few in 1usize..50, extra in 0usize..100) {
            let p = partition_subsets(&counts, few + extra, few).unwrap();
            let total: usize = Subset::ALL.iter().map(|&s| p.classes(s).len()).sum();
            prop_assert_eq!(total, counts.len());
        }
    }
}

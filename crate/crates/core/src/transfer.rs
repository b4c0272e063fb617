//! Knowledge transfer from a source operating point to a target one:
//! fine-tuning a pre-trained detector on labeled target data, fine-tuning
//! it on source data moved onto the target's cluster means, and a
//! network-free detector that moves target data onto the source means.

use thiserror::Error;

use crate::channel::{DomainDataset, Symbol};
use crate::detect::Detector;
use crate::neuralnet::{init_xavier, train, FreezeMask, NetworkParams, NnError, TrainConfig, TrainOutcome};
use crate::oracle::{DecisionMap, ThresholdSet};

#[derive(Debug, Error, PartialEq)]
pub enum TransferError {
    #[error("no voltages to cluster")]
    EmptyInput,
    #[error("need at least one initial centroid")]
    NoCentroids,
    #[error("dataset is unlabeled")]
    Unlabeled,
    #[error("state {0} has no labeled samples")]
    MissingState(usize),
    #[error("expected {expected} means, got {got}")]
    MeansLength { expected: usize, got: usize },
    #[error(transparent)]
    Training(#[from] NnError),
}

/// K-means stopping rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KmeansConfig {
    pub max_iter: usize,
    /// Stop once no centroid moves by more than this (volts).
    pub tol: f64,
}

impl Default for KmeansConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    /// Ascending.
    pub centroids: Vec<f64>,
    /// Index into `centroids` for every sample; doubles as a pseudo label.
    pub assignments: Vec<Symbol>,
    pub iterations: usize,
    /// Sum of squared distances to the assigned centroid.
    pub objective: f64,
    /// Objective after each assignment step.
    pub history: Vec<f64>,
}

/// Nearest centroid among ascending `centroids`; ties go to the higher one.
fn assign(voltages: &[f64], centroids: &[f64], out: &mut [Symbol]) -> f64 {
    let mids: Vec<f64> = centroids.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let mut obj = 0.0;
    for (a, &v) in out.iter_mut().zip(voltages) {
        let k = mids.partition_point(|&m| m <= v);
        *a = k as Symbol;
        let d = v - centroids[k];
        obj += d * d;
    }
    obj
}

/// One-dimensional Lloyd iterations from `initial` centroids.
///
/// An empty cluster keeps its previous centroid.
pub fn kmeans(
    voltages: &[f64],
    initial: &[f64],
    config: &KmeansConfig,
) -> Result<ClusterResult, TransferError> {
    if voltages.is_empty() {
        return Err(TransferError::EmptyInput);
    }
    if initial.is_empty() {
        return Err(TransferError::NoCentroids);
    }
    let k = initial.len();
    let mut centroids = initial.to_vec();
    centroids.sort_by(f64::total_cmp);
    let mut assignments = vec![0 as Symbol; voltages.len()];
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    while iterations < config.max_iter.max(1) {
        iterations += 1;
        history.push(assign(voltages, &centroids, &mut assignments));
        sums.fill(0.0);
        counts.fill(0);
        for (&v, &a) in voltages.iter().zip(&assignments) {
            sums[a as usize] += v;
            counts[a as usize] += 1;
        }
        let mut moved: f64 = 0.0;
        for i in 0..k {
            if counts[i] > 0 {
                let c = sums[i] / counts[i] as f64;
                moved = moved.max((c - centroids[i]).abs());
                centroids[i] = c;
            }
        }
        // Retained centroids can break the ordering.
        centroids.sort_by(f64::total_cmp);
        if moved < config.tol {
            break;
        }
    }
    let objective = assign(voltages, &centroids, &mut assignments);
    Ok(ClusterResult {
        centroids,
        assignments,
        iterations,
        objective,
        history,
    })
}

/// Per-state means of the source and target domains.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainMeans {
    pub source: Vec<f64>,
    pub target: Vec<f64>,
}

/// Empirical mean voltage of every labeled state.
pub fn source_means(dataset: &DomainDataset) -> Result<Vec<f64>, TransferError> {
    let labels = dataset.labels().ok_or(TransferError::Unlabeled)?;
    let k = dataset.num_states();
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (&v, &s) in dataset.voltages().iter().zip(labels) {
        sums[s as usize] += v;
        counts[s as usize] += 1;
    }
    (0..k)
        .map(|i| match counts[i] {
            0 => Err(TransferError::MissingState(i)),
            c => Ok(sums[i] / c as f64),
        })
        .collect()
}

fn shift_by_label(
    voltages: &[f64],
    labels: &[Symbol],
    from: &[f64],
    to: &[f64],
) -> Result<Vec<f64>, TransferError> {
    if from.len() != to.len() {
        return Err(TransferError::MeansLength {
            expected: from.len(),
            got: to.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&s| s as usize >= from.len()) {
        return Err(TransferError::MissingState(bad as usize));
    }
    Ok(voltages
        .iter()
        .zip(labels)
        .map(|(&v, &s)| v - from[s as usize] + to[s as usize])
        .collect())
}

/// Moves every labeled source sample by `target[s] - source[s]`.
pub fn align_source_to_target(
    source: &DomainDataset,
    means: &DomainMeans,
) -> Result<Vec<f64>, TransferError> {
    let labels = source.labels().ok_or(TransferError::Unlabeled)?;
    shift_by_label(source.voltages(), labels, &means.source, &means.target)
}

/// Moves every target sample by `source[c] - target[c]` of its cluster `c`.
pub fn align_target_to_source(
    voltages: &[f64],
    pseudo_labels: &[Symbol],
    means: &DomainMeans,
) -> Result<Vec<f64>, TransferError> {
    shift_by_label(voltages, pseudo_labels, &means.target, &means.source)
}

/// Training schedules for the two stages of a transfer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtlConfig {
    pub pretrain: TrainConfig,
    pub finetune: TrainConfig,
    pub init_seed: u64,
}

impl Default for DtlConfig {
    fn default() -> Self {
        Self {
            pretrain: TrainConfig::default(),
            finetune: TrainConfig {
                seed: 1,
                ..TrainConfig::default()
            },
            init_seed: 0,
        }
    }
}

/// Trains a fresh network on labeled source data.
pub fn pretrain(source: &DomainDataset, config: &DtlConfig) -> Result<TrainOutcome, TransferError> {
    Ok(train(source, &config.pretrain, init_xavier(config.init_seed), FreezeMask::NONE)?)
}

/// Continues training a pre-trained network with the first GRU layer fixed.
pub fn finetune(
    pretrained: &NetworkParams,
    data: &DomainDataset,
    config: &TrainConfig,
) -> Result<TrainOutcome, TransferError> {
    Ok(train(data, config, pretrained.clone(), FreezeMask::GRU1)?)
}

/// Pre-train on labeled source data, then fine-tune on labeled target data.
pub fn model_based_dtl(
    source: &DomainDataset,
    target: &DomainDataset,
    config: &DtlConfig,
) -> Result<NetworkParams, TransferError> {
    if !target.is_labeled() {
        return Err(TransferError::Unlabeled);
    }
    let pre = pretrain(source, config)?;
    Ok(finetune(&pre.params, target, &config.finetune)?.params)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UdaOutcome {
    pub params: NetworkParams,
    pub clusters: ClusterResult,
    pub means: DomainMeans,
    pub loss_curve: Vec<f64>,
}

/// Fine-tunes a pre-trained network on source data shifted onto the
/// cluster means of unlabeled target voltages.
///
/// `initial_centroids` seeds the clustering (normally the nominal state
/// voltages). Only the first `finetune_samples` source samples are used for
/// fine-tuning when given.
pub fn uda_dtl(
    pretrained: &NetworkParams,
    source: &DomainDataset,
    target_voltages: &[f64],
    initial_centroids: &[f64],
    kmeans_config: &KmeansConfig,
    finetune_config: &TrainConfig,
    finetune_samples: Option<usize>,
) -> Result<UdaOutcome, TransferError> {
    let clusters = kmeans(target_voltages, initial_centroids, kmeans_config)?;
    let means = DomainMeans {
        source: source_means(source)?,
        target: clusters.centroids.clone(),
    };
    let source = match finetune_samples {
        Some(n) => source.truncated(n),
        None => source.clone(),
    };
    let moved = align_source_to_target(&source, &means)?;
    let data = source.with_voltages(moved).expect("alignment preserves length");
    let out = finetune(pretrained, &data, finetune_config)?;
    Ok(UdaOutcome {
        params: out.params,
        clusters,
        means,
        loss_curve: out.loss_curve,
    })
}

/// Network-free detection: cluster the target voltages, move each cluster
/// onto the matching source mean and apply the source read thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct UdaThresholdDetector {
    pub source_means: Vec<f64>,
    pub source_thresholds: ThresholdSet,
    pub initial_centroids: Vec<f64>,
    pub kmeans: KmeansConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UdaDetection {
    pub symbols: Vec<Symbol>,
    pub clusters: ClusterResult,
}

impl UdaThresholdDetector {
    pub fn run(&self, target_voltages: &[f64]) -> Result<UdaDetection, TransferError> {
        let clusters = kmeans(target_voltages, &self.initial_centroids, &self.kmeans)?;
        let means = DomainMeans {
            source: self.source_means.clone(),
            target: clusters.centroids.clone(),
        };
        let moved = align_target_to_source(target_voltages, &clusters.assignments, &means)?;
        let symbols = moved.iter().map(|&v| self.source_thresholds.symbol(v)).collect();
        Ok(UdaDetection { symbols, clusters })
    }
}

impl Detector for UdaThresholdDetector {
    fn detect(&self, voltages: &[f64]) -> Vec<Symbol> {
        self.run(voltages).map(|d| d.symbols).unwrap_or_default()
    }
}

/// Free-function form of [`UdaThresholdDetector::run`] with default
/// clustering settings.
pub fn uda_threshold_detect(
    source_means: &[f64],
    source_thresholds: &ThresholdSet,
    target_voltages: &[f64],
    initial_centroids: &[f64],
) -> Result<UdaDetection, TransferError> {
    UdaThresholdDetector {
        source_means: source_means.to_vec(),
        source_thresholds: source_thresholds.clone(),
        initial_centroids: initial_centroids.to_vec(),
        kmeans: KmeansConfig::default(),
    }
    .run(target_voltages)
}

/// The voltage-to-symbol map realised by the network-free detector once
/// the target centroids are fixed: nearest-centroid cells, each shifted by
/// its mean offset before thresholding.
pub fn uda_decision_map(
    target_centroids: &[f64],
    source_means: &[f64],
    source_thresholds: &ThresholdSet,
) -> DecisionMap {
    let k = target_centroids.len();
    let mids: Vec<f64> = target_centroids.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let mut edges = Vec::new();
    let mut symbols = Vec::new();
    for c in 0..k {
        let lo = if c == 0 { f64::NEG_INFINITY } else { mids[c - 1] };
        let hi = if c + 1 == k { f64::INFINITY } else { mids[c] };
        let shift = source_means[c] - target_centroids[c];
        if c > 0 {
            edges.push(lo);
        }
        symbols.push(source_thresholds.symbol(lo + shift));
        for &t in source_thresholds.as_slice() {
            let e = t - shift;
            if e > lo && e < hi {
                edges.push(e);
                symbols.push(source_thresholds.symbol(t));
            }
        }
    }
    DecisionMap::new(edges, symbols)
}

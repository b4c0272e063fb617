//! Figure-style sweeps over target operating points.

use rayon::prelude::*;
use thiserror::Error;

use flash_dtl::channel::{make_dataset, state_moments, ChannelError, DomainDataset, GrayMap, OperatingPoint, Symbol};
use flash_dtl::detect::{derive_thresholds_dp, rnna_thresholds, DetectError, Detector};
use flash_dtl::ecc::{coded_ber_experiment, read_alist, AlistError, EncodeError, Encoder, ExperimentError, ParityCheckMatrix};
use flash_dtl::neuralnet::{init_xavier, train, FreezeMask, NetworkParams, NnError, TrainConfig};
use flash_dtl::oracle::{bit_error_rate, mmi_thresholds, optimal_thresholds, DecisionMap, OracleError, ThresholdSet};
use flash_dtl::rng::derive_seed;
use flash_dtl::transfer::{
    finetune, kmeans, source_means, uda_decision_map, uda_dtl, ClusterResult, KmeansConfig, TransferError,
    UdaThresholdDetector,
};

use crate::config::{ConfigError, DetectorKind, ExperimentConfig, StudyMode};
use crate::output::{Row, RowContext};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Training(#[from] NnError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Alist(#[from] AlistError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Coded(#[from] ExperimentError),
}

/// Name used for the analytic-optimum rows.
pub const OPTIMUM: &str = "optimum";

// Seed tags below a point seed.
const TAG_SOURCE: u64 = 0;
const TAG_POINTS: u64 = 1;
const TAG_TEST: u64 = 100;
const TAG_CODED: u64 = 101;
const TAG_DETECTOR: u64 = 200;

/// Labeled source data and the network and statistics derived from it.
#[derive(Debug, Clone)]
pub struct SourceModel {
    pub params: NetworkParams,
    pub data: DomainDataset,
    pub means: Vec<f64>,
    /// Read thresholds fitted to the source labels.
    pub thresholds: ThresholdSet,
}

pub fn train_source(cfg: &ExperimentConfig) -> Result<SourceModel, HarnessError> {
    let seed = derive_seed(cfg.seed, TAG_SOURCE);
    let data = make_dataset(&cfg.channel, cfg.source_train, &cfg.source, seed, true)?;
    let train_cfg = TrainConfig {
        seed: derive_seed(seed, 1),
        ..cfg.train
    };
    let params = train(&data, &train_cfg, init_xavier(derive_seed(seed, 2)), FreezeMask::NONE)?.params;
    let means = source_means(&data)?;
    let labels = data.labels().expect("generated labeled");
    let thresholds = derive_thresholds_dp(data.voltages(), labels, cfg.channel.num_states(), &cfg.dp)?.thresholds;
    Ok(SourceModel {
        params,
        data,
        means,
        thresholds,
    })
}

fn needs_source(cfg: &ExperimentConfig) -> bool {
    cfg.detectors
        .iter()
        .any(|d| !matches!(d, DetectorKind::Mmi | DetectorKind::TargetTrained))
}

pub fn point_seed(cfg: &ExperimentConfig, index: usize) -> u64 {
    derive_seed(derive_seed(cfg.seed, TAG_POINTS), index as u64)
}

fn detector_seed(point_seed: u64, kind: DetectorKind) -> u64 {
    let idx = DetectorKind::ALL.iter().position(|&d| d == kind).expect("listed") as u64;
    derive_seed(point_seed, TAG_DETECTOR + idx)
}

/// A detector after fitting at one operating point.
enum Fitted {
    Thresholds(ThresholdSet),
    Uda {
        detector: UdaThresholdDetector,
        map: DecisionMap,
        clusters: ClusterResult,
    },
}

impl Fitted {
    fn map(&self) -> DecisionMap {
        match self {
            Fitted::Thresholds(t) => DecisionMap::from_thresholds(t),
            Fitted::Uda { map, .. } => map.clone(),
        }
    }

    fn extra_rows(&self, ctx: &RowContext, name: &str, rows: &mut Vec<Row>) {
        match self {
            Fitted::Thresholds(t) => {
                for (i, &v) in t.as_slice().iter().enumerate() {
                    rows.push(ctx.row(name, format!("threshold_{}", i + 1), v));
                }
            }
            Fitted::Uda { clusters, .. } => {
                rows.push(ctx.row(name, "kmeans_iterations", clusters.iterations as f64));
                for (i, &c) in clusters.centroids.iter().enumerate() {
                    rows.push(ctx.row(name, format!("centroid_{i}"), c));
                }
            }
        }
    }
}

struct Point<'a> {
    cfg: &'a ExperimentConfig,
    source: Option<&'a SourceModel>,
    op: OperatingPoint,
    seed: u64,
}

impl Point<'_> {
    fn source(&self) -> &SourceModel {
        self.source.expect("source model trained for transfer detectors")
    }

    /// RNNA thresholds use the unlabeled voltages being detected.
    fn rnna(&self, params: &NetworkParams, voltages: &[f64]) -> Result<ThresholdSet, HarnessError> {
        Ok(rnna_thresholds(params, voltages, self.cfg.channel.bits_per_cell, &self.cfg.dp)?.thresholds)
    }

    fn train_cfg(&self, seed: u64) -> TrainConfig {
        TrainConfig { seed, ..self.cfg.train }
    }

    fn fit(&self, kind: DetectorKind, voltages: &[f64]) -> Result<Fitted, HarnessError> {
        let cfg = self.cfg;
        let seed = detector_seed(self.seed, kind);
        let fitted = match kind {
            DetectorKind::SourceOnly => Fitted::Thresholds(self.rnna(&self.source().params, voltages)?),
            DetectorKind::TargetTrained => {
                let data = make_dataset(&cfg.channel, cfg.source_train, &self.op, seed, true)?;
                let init = init_xavier(derive_seed(seed, 1));
                let params = train(&data, &self.train_cfg(derive_seed(seed, 2)), init, FreezeMask::NONE)?.params;
                Fitted::Thresholds(self.rnna(&params, voltages)?)
            }
            DetectorKind::ModelDtl => {
                let data = make_dataset(&cfg.channel, cfg.target_train, &self.op, seed, true)?;
                let params = finetune(&self.source().params, &data, &self.train_cfg(derive_seed(seed, 2)))?.params;
                Fitted::Thresholds(self.rnna(&params, voltages)?)
            }
            DetectorKind::UdaDtl => {
                let src = self.source();
                let data = make_dataset(&cfg.channel, cfg.target_train, &self.op, seed, false)?;
                let out = uda_dtl(
                    &src.params,
                    &src.data,
                    data.voltages(),
                    &src.means,
                    &KmeansConfig::default(),
                    &self.train_cfg(derive_seed(seed, 2)),
                    Some(cfg.target_train),
                )?;
                Fitted::Thresholds(self.rnna(&out.params, voltages)?)
            }
            DetectorKind::UdaThreshold => {
                let src = self.source();
                let detector = UdaThresholdDetector {
                    source_means: src.means.clone(),
                    source_thresholds: src.thresholds.clone(),
                    initial_centroids: src.means.clone(),
                    kmeans: KmeansConfig::default(),
                };
                let clusters = kmeans(voltages, &src.means, &detector.kmeans)?;
                let map = uda_decision_map(&clusters.centroids, &src.means, &src.thresholds);
                Fitted::Uda {
                    detector,
                    map,
                    clusters,
                }
            }
            DetectorKind::Mmi => Fitted::Thresholds(mmi_thresholds(&state_moments(&cfg.channel, &self.op))?),
        };
        Ok(fitted)
    }

    fn optimum(&self) -> Result<ThresholdSet, HarnessError> {
        Ok(optimal_thresholds(&state_moments(&self.cfg.channel, &self.op))?)
    }

    fn exact_ber(&self, map: &DecisionMap) -> f64 {
        bit_error_rate(
            &state_moments(&self.cfg.channel, &self.op),
            map,
            &GrayMap::for_bits(self.cfg.channel.bits_per_cell),
        )
    }

    fn context(&self) -> RowContext {
        RowContext {
            cell: self.cfg.cell,
            point: self.op,
            seed: self.seed,
            config_hash: self.cfg.hash(),
        }
    }
}

/// Bit error rate of `detected` against `truth` and its 95% normal-approximation
/// half-width.
pub fn monte_carlo_ber(detected: &[Symbol], truth: &[Symbol], gray: &GrayMap) -> (f64, f64) {
    let errors: u64 = detected
        .iter()
        .zip(truth)
        .map(|(&a, &b)| gray.distance(a as usize, b as usize) as u64)
        .sum();
    let bits = (truth.len() * gray.bits() as usize) as f64;
    let p = errors as f64 / bits;
    (p, 1.96 * (p * (1.0 - p) / bits).sqrt())
}

fn for_each_point<F>(cfg: &ExperimentConfig, source: Option<&SourceModel>, f: F) -> Result<Vec<Row>, HarnessError>
where
    F: Fn(&Point) -> Result<Vec<Row>, HarnessError> + Sync,
{
    let points = cfg.target_points();
    let per_point: Vec<Result<Vec<Row>, HarnessError>> = points
        .par_iter()
        .enumerate()
        .map(|(i, &op)| {
            f(&Point {
                cfg,
                source,
                op,
                seed: point_seed(cfg, i),
            })
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_point {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Uncoded RBER of the analytic optimum and every selected detector at each
/// target point.
pub fn run_rber_sweep(cfg: &ExperimentConfig) -> Result<Vec<Row>, HarnessError> {
    cfg.validate()?;
    let source = if needs_source(cfg) { Some(train_source(cfg)?) } else { None };
    let gray = GrayMap::for_bits(cfg.channel.bits_per_cell);
    for_each_point(cfg, source.as_ref(), |pt| {
        let ctx = pt.context();
        let test = make_dataset(&cfg.channel, cfg.test, &pt.op, derive_seed(pt.seed, TAG_TEST), true)?;
        let truth = test.labels().expect("generated labeled");
        let mut rows = Vec::new();
        let record = |name: &str, fitted: &Fitted, rows: &mut Vec<Row>| {
            let map = fitted.map();
            let (ber, ci) = monte_carlo_ber(&map.detect(test.voltages()), truth, &gray);
            rows.push(ctx.row(name, "rber", ber));
            rows.push(ctx.row(name, "rber_ci95", ci));
            rows.push(ctx.row(name, "rber_exact", pt.exact_ber(&map)));
            fitted.extra_rows(&ctx, name, rows);
        };
        record(OPTIMUM, &Fitted::Thresholds(pt.optimum()?), &mut rows);
        for &kind in &cfg.detectors {
            let fitted = pt.fit(kind, test.voltages())?;
            record(kind.name(), &fitted, &mut rows);
        }
        Ok(rows)
    })
}

pub fn load_code(cfg: &ExperimentConfig) -> Result<(ParityCheckMatrix, Encoder), HarnessError> {
    let h = match &cfg.code {
        Some(path) => read_alist(path)?,
        None => ParityCheckMatrix::default_code(),
    };
    let enc = Encoder::new(&h)?;
    Ok((h, enc))
}

/// Coded BER through the LDPC code with hard-decision NMS decoding. Every
/// detector at a point sees the same written data and channel noise.
pub fn run_coded_sweep(cfg: &ExperimentConfig) -> Result<Vec<Row>, HarnessError> {
    cfg.validate()?;
    let source = if needs_source(cfg) { Some(train_source(cfg)?) } else { None };
    let (h, enc) = load_code(cfg)?;
    for_each_point(cfg, source.as_ref(), |pt| {
        let ctx = pt.context();
        // Unlabeled reads used to fit the threshold detectors.
        let fit_reads = make_dataset(&cfg.channel, cfg.test, &pt.op, derive_seed(pt.seed, TAG_TEST), false)?;
        let coded_seed = derive_seed(pt.seed, TAG_CODED);
        let mut rows = Vec::new();
        let record = |name: &str, det: &dyn Detector, rows: &mut Vec<Row>| -> Result<(), HarnessError> {
            let r = coded_ber_experiment(
                &cfg.channel,
                &pt.op,
                det,
                &h,
                &enc,
                cfg.frames,
                cfg.nms_alpha,
                cfg.nms_iterations,
                coded_seed,
            )?;
            rows.push(ctx.row(name, "raw_ber", r.raw_ber()));
            rows.push(ctx.row(name, "coded_ber", r.coded_ber()));
            rows.push(ctx.row(name, "info_bit_errors", r.info_bit_errors as f64));
            rows.push(ctx.row(name, "frame_errors", r.frame_errors as f64));
            rows.push(ctx.row(name, "frames", r.frames as f64));
            Ok(())
        };
        record(OPTIMUM, &pt.optimum()?, &mut rows)?;
        for &kind in &cfg.detectors {
            match pt.fit(kind, fit_reads.voltages())? {
                Fitted::Thresholds(t) => record(kind.name(), &t, &mut rows)?,
                // Re-clusters the coded block itself.
                Fitted::Uda { detector, .. } => record(kind.name(), &detector, &mut rows)?,
            }
        }
        Ok(rows)
    })
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// RBER against training-set size, `study_trials` independent trials per
/// size, with per-size min, median and max.
pub fn run_training_size_study(cfg: &ExperimentConfig) -> Result<Vec<Row>, HarnessError> {
    cfg.validate()?;
    let source = match cfg.study_mode {
        StudyMode::Dtl => Some(train_source(cfg)?),
        StudyMode::Direct => None,
    };
    let label = match cfg.study_mode {
        StudyMode::Direct => "direct",
        StudyMode::Dtl => "model-dtl",
    };
    let points = cfg.target_points();
    let jobs: Vec<(usize, usize, usize)> = (0..points.len())
        .flat_map(|p| {
            cfg.study_sizes
                .iter()
                .enumerate()
                .flat_map(move |(s, _)| (0..cfg.study_trials).map(move |t| (p, s, t)))
        })
        .collect();
    let tests: Vec<DomainDataset> = points
        .iter()
        .enumerate()
        .map(|(i, op)| make_dataset(&cfg.channel, cfg.test, op, derive_seed(point_seed(cfg, i), TAG_TEST), false))
        .collect::<Result<_, _>>()?;

    let results: Vec<Result<(usize, usize, Row), HarnessError>> = jobs
        .par_iter()
        .map(|&(p, s, t)| {
            let size = cfg.study_sizes[s];
            let seed = derive_seed(derive_seed(point_seed(cfg, p), s as u64 + 1), t as u64);
            let pt = Point {
                cfg,
                source: source.as_ref(),
                op: points[p],
                seed,
            };
            let data = make_dataset(&cfg.channel, size, &pt.op, derive_seed(seed, 1), true)?;
            let train_cfg = pt.train_cfg(derive_seed(seed, 2));
            let params = match cfg.study_mode {
                StudyMode::Direct => train(&data, &train_cfg, init_xavier(derive_seed(seed, 3)), FreezeMask::NONE)?.params,
                StudyMode::Dtl => finetune(&pt.source().params, &data, &train_cfg)?.params,
            };
            let th = pt.rnna(&params, tests[p].voltages())?;
            let ber = pt.exact_ber(&DecisionMap::from_thresholds(&th));
            let row = pt.context().row(&format!("{label}[n={size}]"), format!("rber_exact_trial_{t}"), ber);
            Ok((p, s, row))
        })
        .collect();

    let mut rows = Vec::new();
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); points.len() * cfg.study_sizes.len()];
    for r in results {
        let (p, s, row) = r?;
        groups[p * cfg.study_sizes.len() + s].push(row.value);
        rows.push(row);
    }
    for (p, op) in points.iter().enumerate() {
        let ctx = RowContext {
            cell: cfg.cell,
            point: *op,
            seed: point_seed(cfg, p),
            config_hash: cfg.hash(),
        };
        let optimum = optimal_thresholds(&state_moments(&cfg.channel, op))?;
        let opt_ber = bit_error_rate(
            &state_moments(&cfg.channel, op),
            &DecisionMap::from_thresholds(&optimum),
            &GrayMap::for_bits(cfg.channel.bits_per_cell),
        );
        rows.push(ctx.row(OPTIMUM, "rber_exact", opt_ber));
        for (s, &size) in cfg.study_sizes.iter().enumerate() {
            let mut v = groups[p * cfg.study_sizes.len() + s].clone();
            v.sort_by(f64::total_cmp);
            let name = format!("{label}[n={size}]");
            rows.push(ctx.row(&name, "rber_exact_min", v[0]));
            rows.push(ctx.row(&name, "rber_exact_median", median(&v)));
            rows.push(ctx.row(&name, "rber_exact_max", v[v.len() - 1]));
        }
    }
    Ok(rows)
}

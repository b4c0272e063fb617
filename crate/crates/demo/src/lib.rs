//! WebAssembly bindings for the static page in `www/`. Each exported
//! function returns a JSON string; the plain-Rust versions are public so
//! they can be tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use flash_dtl::channel::{make_dataset, state_moments, CellType, ChannelParams, GrayMap, NoiseFamily, OperatingPoint, StateMoments};
use flash_dtl::oracle::{
    bit_error_rate, mmi_thresholds, mutual_information, optimal_thresholds, state_pdf, DecisionMap, ThresholdSet,
};
use flash_dtl::transfer::{align_target_to_source, kmeans, uda_decision_map, DomainMeans, KmeansConfig};

const GRID_POINTS: usize = 400;
const HIST_BINS: usize = 120;

fn parse_inputs(cell: &str, family: &str) -> Result<(ChannelParams, NoiseFamily), String> {
    let cell: CellType = cell.parse()?;
    let params = ChannelParams::for_cell(cell).ok_or_else(|| format!("no built-in levels for {cell}"))?;
    Ok((params, family.parse()?))
}

fn point(n_pe: f64, t_hours: f64, family: NoiseFamily) -> Result<OperatingPoint, String> {
    let op = OperatingPoint::new(n_pe, t_hours, family);
    op.validate().map_err(|e| e.to_string())?;
    Ok(op)
}

fn ber(m: &StateMoments, map: &DecisionMap, bits: u32) -> f64 {
    bit_error_rate(m, map, &GrayMap::for_bits(bits))
}

#[derive(Debug, Serialize)]
pub struct ChannelView {
    pub voltages: Vec<f64>,
    /// One density curve per state.
    pub pdfs: Vec<Vec<f64>>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub optimal: Vec<f64>,
    pub mmi: Vec<f64>,
    pub ber_optimal: f64,
    pub ber_mmi: f64,
    pub mi_optimal: f64,
    pub mi_mmi: f64,
}

pub fn channel_view(cell: &str, family: &str, n_pe: f64, t_hours: f64) -> Result<ChannelView, String> {
    let (p, family) = parse_inputs(cell, family)?;
    let m = state_moments(&p, &point(n_pe, t_hours, family)?);
    let k = m.num_states();
    let lo = (0..k).map(|s| m.means[s] - 5.0 * m.std(s)).fold(f64::INFINITY, f64::min);
    let hi = (0..k).map(|s| m.means[s] + 5.0 * m.std(s)).fold(f64::NEG_INFINITY, f64::max);
    let voltages: Vec<f64> = (0..GRID_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64)
        .collect();
    let pdfs = (0..k)
        .map(|s| voltages.iter().map(|&v| state_pdf(&m, s, v)).collect())
        .collect();
    let opt = optimal_thresholds(&m).map_err(|e| e.to_string())?;
    let mmi = mmi_thresholds(&m).map_err(|e| e.to_string())?;
    let bits = p.bits_per_cell;
    Ok(ChannelView {
        voltages,
        pdfs,
        means: m.means.clone(),
        stds: (0..k).map(|s| m.std(s)).collect(),
        ber_optimal: ber(&m, &DecisionMap::from_thresholds(&opt), bits),
        ber_mmi: ber(&m, &DecisionMap::from_thresholds(&mmi), bits),
        mi_optimal: mutual_information(&m, &opt).map_err(|e| e.to_string())?,
        mi_mmi: mutual_information(&m, &mmi).map_err(|e| e.to_string())?,
        optimal: opt.into_vec(),
        mmi: mmi.into_vec(),
    })
}

#[derive(Debug, Serialize)]
pub struct Sweep {
    pub n_pe: Vec<f64>,
    /// Exact BER at the optimal thresholds of each point.
    pub optimum: Vec<f64>,
    /// Fresh-cell optimal thresholds applied unchanged.
    pub source_thresholds: Vec<f64>,
    /// Mean alignment onto the fresh-cell thresholds, centroids at the true means.
    pub aligned: Vec<f64>,
}

/// Exact BER against P/E cycles at a fixed retention time.
pub fn error_rate_sweep(cell: &str, family: &str, t_hours: f64) -> Result<Sweep, String> {
    let (p, family) = parse_inputs(cell, family)?;
    let fresh = state_moments(&p, &OperatingPoint::fresh());
    let src_th = optimal_thresholds(&fresh).map_err(|e| e.to_string())?;
    let n_pe: Vec<f64> = (0..=20).map(|i| 100.0 * 200f64.powf(i as f64 / 20.0)).collect();
    let mut out = Sweep {
        n_pe: n_pe.clone(),
        optimum: Vec::new(),
        source_thresholds: Vec::new(),
        aligned: Vec::new(),
    };
    for &n in &n_pe {
        let m = state_moments(&p, &point(n, t_hours, family)?);
        let opt = optimal_thresholds(&m).map_err(|e| e.to_string())?;
        out.optimum.push(ber(&m, &DecisionMap::from_thresholds(&opt), p.bits_per_cell));
        out.source_thresholds
            .push(ber(&m, &DecisionMap::from_thresholds(&src_th), p.bits_per_cell));
        let map = uda_decision_map(&m.means, &fresh.means, &src_th);
        out.aligned.push(ber(&m, &map, p.bits_per_cell));
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct Alignment {
    pub bin_edges: Vec<f64>,
    /// Histogram of the raw target reads.
    pub target_counts: Vec<usize>,
    /// Histogram after moving each cluster onto its source mean.
    pub aligned_counts: Vec<usize>,
    pub source_means: Vec<f64>,
    pub centroids: Vec<f64>,
    pub true_means: Vec<f64>,
    pub iterations: usize,
    pub objective_history: Vec<f64>,
    pub source_thresholds: Vec<f64>,
    pub ber_aligned: f64,
    pub ber_source: f64,
    pub ber_optimum: f64,
}

fn histogram(values: &[f64], lo: f64, hi: f64) -> Vec<usize> {
    let mut counts = vec![0; HIST_BINS];
    let w = (hi - lo) / HIST_BINS as f64;
    for &v in values {
        let i = ((v - lo) / w).floor();
        if i >= 0.0 && (i as usize) < HIST_BINS {
            counts[i as usize] += 1;
        }
    }
    counts
}

/// K-means on simulated unlabeled target reads, then per-cluster mean
/// alignment onto the fresh-cell state means.
pub fn uda_alignment(
    cell: &str,
    family: &str,
    n_pe: f64,
    t_hours: f64,
    samples: usize,
    seed: u64,
) -> Result<Alignment, String> {
    let (p, family) = parse_inputs(cell, family)?;
    let op = point(n_pe, t_hours, family)?;
    let fresh = state_moments(&p, &OperatingPoint::fresh());
    let target = state_moments(&p, &op);
    let src_th: ThresholdSet = optimal_thresholds(&fresh).map_err(|e| e.to_string())?;
    let reads = make_dataset(&p, samples.clamp(100, 200_000), &op, seed, false).map_err(|e| e.to_string())?;
    let v = reads.voltages();
    let clusters = kmeans(v, &fresh.means, &KmeansConfig::default()).map_err(|e| e.to_string())?;
    let means = DomainMeans {
        source: fresh.means.clone(),
        target: clusters.centroids.clone(),
    };
    let aligned = align_target_to_source(v, &clusters.assignments, &means).map_err(|e| e.to_string())?;
    let lo = v.iter().chain(&aligned).copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().chain(&aligned).copied().fold(f64::NEG_INFINITY, f64::max) + 1e-9;
    let bin_edges = (0..=HIST_BINS)
        .map(|i| lo + (hi - lo) * i as f64 / HIST_BINS as f64)
        .collect();
    let bits = p.bits_per_cell;
    let opt = optimal_thresholds(&target).map_err(|e| e.to_string())?;
    Ok(Alignment {
        bin_edges,
        target_counts: histogram(v, lo, hi),
        aligned_counts: histogram(&aligned, lo, hi),
        source_means: fresh.means.clone(),
        true_means: target.means.clone(),
        iterations: clusters.iterations,
        objective_history: clusters.history.clone(),
        ber_aligned: ber(&target, &uda_decision_map(&clusters.centroids, &fresh.means, &src_th), bits),
        ber_source: ber(&target, &DecisionMap::from_thresholds(&src_th), bits),
        ber_optimum: ber(&target, &DecisionMap::from_thresholds(&opt), bits),
        centroids: clusters.centroids,
        source_thresholds: src_th.into_vec(),
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = channelView)]
pub fn channel_view_js(cell: &str, family: &str, n_pe: f64, t_hours: f64) -> Result<String, JsValue> {
    to_js(channel_view(cell, family, n_pe, t_hours))
}

#[wasm_bindgen(js_name = errorRateSweep)]
pub fn error_rate_sweep_js(cell: &str, family: &str, t_hours: f64) -> Result<String, JsValue> {
    to_js(error_rate_sweep(cell, family, t_hours))
}

#[wasm_bindgen(js_name = udaAlignment)]
pub fn uda_alignment_js(
    cell: &str,
    family: &str,
    n_pe: f64,
    t_hours: f64,
    samples: u32,
    seed: u32,
) -> Result<String, JsValue> {
    to_js(uda_alignment(cell, family, n_pe, t_hours, samples as usize, seed as u64))
}

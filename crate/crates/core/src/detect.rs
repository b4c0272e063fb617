//! Symbol decisions from network outputs or read thresholds, and read
//! thresholds fitted to another detector's decisions.

use thiserror::Error;

use crate::channel::Symbol;
use crate::neuralnet::{predict, NetworkParams, WINDOW};
use crate::oracle::{DecisionMap, OracleError, ThresholdSet};

#[derive(Debug, Error, PartialEq)]
pub enum DetectError {
    #[error("voltages ({voltages}) and reference symbols ({symbols}) differ in length")]
    LengthMismatch { voltages: usize, symbols: usize },
    #[error("no voltages to fit thresholds to")]
    Empty,
    #[error("reference symbol {symbol} out of range for {states} states")]
    SymbolOutOfRange { symbol: usize, states: usize },
    #[error("only {occupied} occupied grid intervals for {thresholds} thresholds")]
    TooFewRegions { occupied: usize, thresholds: usize },
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error(transparent)]
    Thresholds(#[from] OracleError),
}

/// Anything that maps read-back voltages to symbols.
pub trait Detector {
    fn detect(&self, voltages: &[f64]) -> Vec<Symbol>;
}

/// Rounds network outputs to the nearest symbol in `0..2^bits`.
pub fn rnn_detect(params: &NetworkParams, voltages: &[f64], bits: u32) -> Vec<Symbol> {
    let top = ((1u32 << bits) - 1) as f64;
    predict(params, voltages, WINDOW)
        .into_iter()
        .map(|y| y.round().clamp(0.0, top) as Symbol)
        .collect()
}

/// Symbol = number of thresholds at or below the voltage.
pub fn threshold_detect(thresholds: &ThresholdSet, voltages: &[f64]) -> Vec<Symbol> {
    voltages.iter().map(|&v| thresholds.symbol(v)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RnnDetector {
    pub params: NetworkParams,
    pub bits: u32,
}

impl Detector for RnnDetector {
    fn detect(&self, voltages: &[f64]) -> Vec<Symbol> {
        rnn_detect(&self.params, voltages, self.bits)
    }
}

impl Detector for ThresholdSet {
    fn detect(&self, voltages: &[f64]) -> Vec<Symbol> {
        threshold_detect(self, voltages)
    }
}

impl Detector for DecisionMap {
    fn detect(&self, voltages: &[f64]) -> Vec<Symbol> {
        voltages.iter().map(|&v| self.symbol(v)).collect()
    }
}

/// Quantization grid for the threshold search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpConfig {
    /// Number of uniform intervals.
    pub intervals: usize,
    /// Search range; `None` spans the data plus one interval on each side.
    pub range: Option<(f64, f64)>,
}

impl Default for DpConfig {
    fn default() -> Self {
        Self {
            intervals: 200,
            range: None,
        }
    }
}

/// Fitted thresholds and their number of disagreements with the reference.
#[derive(Debug, Clone, PartialEq)]
pub struct DpOutcome {
    pub thresholds: ThresholdSet,
    pub cost: usize,
}

/// Per-interval symbol histogram on the grid boundaries `b_0 < ... < b_m`.
struct Histogram {
    boundaries: Vec<f64>,
    /// `prefix[s][i]`: samples with reference symbol `s` in intervals `0..i`.
    prefix: Vec<Vec<usize>>,
    /// Samples in intervals `0..i`.
    total: Vec<usize>,
    occupied: usize,
}

impl Histogram {
    fn build(
        voltages: &[f64],
        reference: &[Symbol],
        states: usize,
        config: &DpConfig,
    ) -> Result<Self, DetectError> {
        if voltages.len() != reference.len() {
            return Err(DetectError::LengthMismatch {
                voltages: voltages.len(),
                symbols: reference.len(),
            });
        }
        if voltages.is_empty() {
            return Err(DetectError::Empty);
        }
        if let Some(&s) = reference.iter().find(|&&s| s as usize >= states) {
            return Err(DetectError::SymbolOutOfRange {
                symbol: s as usize,
                states,
            });
        }
        let m = config.intervals;
        if m < 2 {
            return Err(DetectError::Grid("need at least 2 intervals".into()));
        }
        let (lo, hi) = match config.range {
            Some(r) => r,
            None => {
                let min = voltages.iter().copied().fold(f64::INFINITY, f64::min);
                let max = voltages.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let step = if m > 2 { (max - min) / (m - 2) as f64 } else { max - min };
                (min - step, max + step)
            }
        };
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(DetectError::Grid(format!("range [{lo}, {hi}] is empty or not finite")));
        }
        let step = (hi - lo) / m as f64;
        let boundaries: Vec<f64> = (0..=m).map(|i| lo + i as f64 * step).collect();
        let interior = &boundaries[1..m];

        let mut counts = vec![vec![0usize; m]; states];
        for (&v, &s) in voltages.iter().zip(reference) {
            counts[s as usize][interior.partition_point(|&b| b <= v)] += 1;
        }
        let prefix: Vec<Vec<usize>> = counts
            .iter()
            .map(|c| {
                let mut p = vec![0; m + 1];
                for i in 0..m {
                    p[i + 1] = p[i] + c[i];
                }
                p
            })
            .collect();
        let total: Vec<usize> = (0..=m).map(|i| prefix.iter().map(|p| p[i]).sum()).collect();
        let occupied = (0..m).filter(|&i| total[i + 1] > total[i]).count();
        Ok(Self {
            boundaries,
            prefix,
            total,
            occupied,
        })
    }

    fn intervals(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// Mismatches when intervals `a..b` are all decided as `symbol`.
    fn cost(&self, symbol: usize, a: usize, b: usize) -> usize {
        (self.total[b] - self.total[a]) - (self.prefix[symbol][b] - self.prefix[symbol][a])
    }

    fn placement_cost(&self, cuts: &[usize]) -> usize {
        let m = self.intervals();
        let mut prev = 0;
        let mut c = 0;
        for (k, &t) in cuts.iter().chain(std::iter::once(&m)).enumerate() {
            c += self.cost(k, prev, t);
            prev = t;
        }
        c
    }

    fn check_regions(&self, thresholds: usize) -> Result<(), DetectError> {
        if self.occupied < thresholds || self.intervals() <= thresholds {
            return Err(DetectError::TooFewRegions {
                occupied: self.occupied,
                thresholds,
            });
        }
        Ok(())
    }

    fn outcome(&self, cuts: &[usize]) -> Result<DpOutcome, DetectError> {
        Ok(DpOutcome {
            thresholds: ThresholdSet::new(cuts.iter().map(|&t| self.boundaries[t]).collect())?,
            cost: self.placement_cost(cuts),
        })
    }
}

/// Read thresholds on the grid minimizing the number of disagreements
/// between [`threshold_detect`] and `reference`.
///
/// Dynamic program over (threshold index, boundary) in `O(K m^2)`. Among
/// equal-cost placements each threshold is then moved to the middle of the
/// flat stretch of grid boundaries it can occupy without changing the cost,
/// so thresholds sitting in sparsely populated gaps are not pushed against
/// one side of the gap.
pub fn derive_thresholds_dp(
    voltages: &[f64],
    reference: &[Symbol],
    states: usize,
    config: &DpConfig,
) -> Result<DpOutcome, DetectError> {
    let hist = Histogram::build(voltages, reference, states, config)?;
    let k = states - 1;
    hist.check_regions(k)?;
    let m = hist.intervals();
    if k == 0 {
        return hist.outcome(&[]);
    }

    // best[j][t]: symbols 0..=j decided on intervals 0..t, threshold j at t.
    let mut best = vec![vec![usize::MAX; m]; k];
    let mut from = vec![vec![0usize; m]; k];
    for t in 1..m {
        best[0][t] = hist.cost(0, 0, t);
    }
    for j in 1..k {
        for t in (j + 1)..m {
            let mut b = usize::MAX;
            let mut arg = 0;
            for tp in j..t {
                if best[j - 1][tp] == usize::MAX {
                    continue;
                }
                let c = best[j - 1][tp] + hist.cost(j, tp, t);
                if c < b {
                    b = c;
                    arg = tp;
                }
            }
            best[j][t] = b;
            from[j][t] = arg;
        }
    }
    let mut last = 0;
    let mut total = usize::MAX;
    for t in k..m {
        if best[k - 1][t] == usize::MAX {
            continue;
        }
        let c = best[k - 1][t] + hist.cost(k, t, m);
        if c < total {
            total = c;
            last = t;
        }
    }
    let mut cuts = vec![0; k];
    cuts[k - 1] = last;
    for j in (1..k).rev() {
        cuts[j - 1] = from[j][cuts[j]];
    }

    // Center every threshold on its zero-cost plateau.
    for j in 0..k {
        let prev = if j == 0 { 0 } else { cuts[j - 1] };
        let next = if j + 1 == k { m } else { cuts[j + 1] };
        let local = |t: usize| hist.cost(j, prev, t) + hist.cost(j + 1, t, next);
        let here = local(cuts[j]);
        let mut a = cuts[j];
        while a > prev + 1 && local(a - 1) == here {
            a -= 1;
        }
        let mut b = cuts[j];
        while b + 1 < next && local(b + 1) == here {
            b += 1;
        }
        cuts[j] = (a + b) / 2;
    }
    let out = hist.outcome(&cuts)?;
    debug_assert_eq!(out.cost, total);
    Ok(out)
}

/// Exhaustive search over every grid placement. Exponential in the number
/// of thresholds; intended for small grids.
pub fn derive_thresholds_brute(
    voltages: &[f64],
    reference: &[Symbol],
    states: usize,
    config: &DpConfig,
) -> Result<DpOutcome, DetectError> {
    let hist = Histogram::build(voltages, reference, states, config)?;
    let k = states - 1;
    hist.check_regions(k)?;
    let m = hist.intervals();
    let mut cuts: Vec<usize> = (1..=k).collect();
    let mut best_cuts = cuts.clone();
    let mut best = hist.placement_cost(&cuts);
    loop {
        // Next k-combination of 1..m-1 in lexicographic order.
        let mut i = k;
        while i > 0 && cuts[i - 1] == m - 1 - (k - i) {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        cuts[i - 1] += 1;
        for j in i..k {
            cuts[j] = cuts[j - 1] + 1;
        }
        let c = hist.placement_cost(&cuts);
        if c < best {
            best = c;
            best_cuts = cuts.clone();
        }
    }
    hist.outcome(&best_cuts)
}

/// RNN-aided thresholds: grid thresholds that best reproduce the network's
/// own decisions on unlabeled voltages.
pub fn rnna_thresholds(
    params: &NetworkParams,
    voltages: &[f64],
    bits: u32,
    config: &DpConfig,
) -> Result<DpOutcome, DetectError> {
    let decisions = rnn_detect(params, voltages, bits);
    derive_thresholds_dp(voltages, &decisions, 1usize << bits, config)
}

/// Number of positions where two symbol sequences differ.
pub fn hamming(a: &[Symbol], b: &[Symbol]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

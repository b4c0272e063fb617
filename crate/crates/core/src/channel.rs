//! Threshold-voltage channel of a q-bit NAND flash cell.
//!
//! A cell written to state `s` is read back as
//! `v = V_s + n_ispp + n_program + n_retention + n_wear`. The combined
//! per-state moments are closed form (see [`state_moments`]); samples are
//! drawn either from the combined Gaussian or from a moment-matched,
//! left-skewed Gamma.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use thiserror::Error;

use crate::kv::{KvDocument, KvError};
use crate::rng::{stream, stream_rng};

/// Symbol (state index) type. At most 16 states.
pub type Symbol = u8;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("bits per cell must be in 1..=4, got {0}")]
    BitsPerCell(u32),
    #[error("expected {expected} nominal voltages, got {got}")]
    LevelCount { expected: usize, got: usize },
    #[error("nominal voltages must be strictly increasing")]
    LevelsNotIncreasing,
    #[error("parameter `{0}` must be strictly positive and finite")]
    NonPositive(&'static str),
    #[error("operating point must have n_pe >= 0 and retention_hours >= 0")]
    OperatingPoint,
    #[error("state {state} out of range for {states} states")]
    StateOutOfRange { state: usize, states: usize },
    #[error("empty label list")]
    EmptyLabels,
    #[error("dataset needs at least one sample")]
    EmptyDataset,
    #[error("labels and voltages differ in length ({labels} vs {voltages})")]
    LengthMismatch { labels: usize, voltages: usize },
    #[error(transparent)]
    Config(#[from] KvError),
}

/// Cell technology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellType {
    Mlc,
    Tlc,
    Qlc,
}

impl CellType {
    pub fn bits(self) -> u32 {
        match self {
            CellType::Mlc => 2,
            CellType::Tlc => 3,
            CellType::Qlc => 4,
        }
    }

    pub fn from_bits(bits: u32) -> Option<Self> {
        match bits {
            2 => Some(CellType::Mlc),
            3 => Some(CellType::Tlc),
            4 => Some(CellType::Qlc),
            _ => None,
        }
    }
}

impl fmt::Display for CellType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CellType::Mlc => "mlc",
            CellType::Tlc => "tlc",
            CellType::Qlc => "qlc",
        })
    }
}

impl FromStr for CellType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mlc" => Ok(CellType::Mlc),
            "tlc" => Ok(CellType::Tlc),
            "qlc" => Ok(CellType::Qlc),
            other => Err(format!("unknown cell type `{other}` (expected mlc, tlc or qlc)")),
        }
    }
}

/// Physical constants of the channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub bits_per_cell: u32,
    /// Write level of each state, volts, strictly increasing.
    pub nominal_voltages: Vec<f64>,
    /// ISPP step (volts).
    pub delta_vpp: f64,
    /// Programming noise std of the erased state.
    pub sigma_erase: f64,
    /// Programming noise std of the programmed states.
    pub sigma_program: f64,
    pub x0: f64,
    pub a_t: f64,
    pub b_t: f64,
    pub alpha_i: f64,
    pub alpha_o: f64,
    pub wear_coeff: f64,
    pub wear_exp: f64,
    /// Shape of the mirrored Gamma used by [`NoiseFamily::Gamma`].
    pub gamma_shape: f64,
}

const MLC_LEVELS: [f64; 4] = [1.4, 2.6, 3.2, 3.93];
const TLC_LEVELS: [f64; 8] = [1.4, 2.2, 2.6, 3.0, 3.4, 3.8, 4.2, 4.6];

impl ChannelParams {
    fn with_levels(levels: &[f64]) -> Self {
        Self {
            bits_per_cell: levels.len().trailing_zeros(),
            nominal_voltages: levels.to_vec(),
            delta_vpp: 0.2,
            sigma_erase: 0.35,
            sigma_program: 0.05,
            x0: 1.4,
            a_t: 0.000035,
            b_t: 0.000235,
            alpha_i: 0.62,
            alpha_o: 0.3,
            wear_coeff: 0.00027,
            wear_exp: 0.62,
            gamma_shape: 6.0,
        }
    }

    pub fn mlc() -> Self {
        Self::with_levels(&MLC_LEVELS)
    }

    pub fn tlc() -> Self {
        Self::with_levels(&TLC_LEVELS)
    }

    /// Built-in defaults; QLC has no built-in level set and must come from a
    /// config file.
    pub fn for_cell(cell: CellType) -> Option<Self> {
        match cell {
            CellType::Mlc => Some(Self::mlc()),
            CellType::Tlc => Some(Self::tlc()),
            CellType::Qlc => None,
        }
    }

    pub fn num_states(&self) -> usize {
        self.nominal_voltages.len()
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if !(1..=4).contains(&self.bits_per_cell) {
            return Err(ChannelError::BitsPerCell(self.bits_per_cell));
        }
        let expected = 1usize << self.bits_per_cell;
        if self.nominal_voltages.len() != expected {
            return Err(ChannelError::LevelCount {
                expected,
                got: self.nominal_voltages.len(),
            });
        }
        if self.nominal_voltages.iter().any(|v| !v.is_finite())
            || self.nominal_voltages.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(ChannelError::LevelsNotIncreasing);
        }
        let positive = [
            ("delta_vpp", self.delta_vpp),
            ("sigma_erase", self.sigma_erase),
            ("sigma_program", self.sigma_program),
            ("gamma_shape", self.gamma_shape),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ChannelError::NonPositive(name));
            }
        }
        let nonneg = [
            ("a_t", self.a_t),
            ("b_t", self.b_t),
            ("wear_coeff", self.wear_coeff),
        ];
        for (name, value) in nonneg {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ChannelError::NonPositive(name));
            }
        }
        Ok(())
    }

    /// Load from a key-value document. Keys may be bare or under a
    /// `[channel]` section; missing keys fall back to the built-in defaults
    /// of the cell type given by `bits_per_cell` (MLC when absent).
    pub fn from_kv(doc: &KvDocument) -> Result<Self, ChannelError> {
        let key = |k: &str| {
            if doc.raw(&format!("channel.{k}")).is_some() {
                format!("channel.{k}")
            } else {
                k.to_string()
            }
        };
        let bits: u32 = doc.get(&key("bits_per_cell"))?.unwrap_or(2);
        let mut p = match CellType::from_bits(bits).and_then(Self::for_cell) {
            Some(p) => p,
            None => {
                let mut p = Self::mlc();
                p.bits_per_cell = bits;
                p.nominal_voltages.clear();
                p
            }
        };
        if let Some(levels) = doc.get_list::<f64>(&key("nominal_voltages"))? {
            p.nominal_voltages = levels;
        }
        let scalars: [(&str, &mut f64); 11] = [
            ("delta_vpp", &mut p.delta_vpp),
            ("sigma_erase", &mut p.sigma_erase),
            ("sigma_program", &mut p.sigma_program),
            ("x0", &mut p.x0),
            ("a_t", &mut p.a_t),
            ("b_t", &mut p.b_t),
            ("alpha_i", &mut p.alpha_i),
            ("alpha_o", &mut p.alpha_o),
            ("wear_coeff", &mut p.wear_coeff),
            ("wear_exp", &mut p.wear_exp),
            ("gamma_shape", &mut p.gamma_shape),
        ];
        for (name, slot) in scalars {
            if let Some(v) = doc.get::<f64>(&key(name))? {
                *slot = v;
            }
        }
        p.validate()?;
        Ok(p)
    }

    pub fn from_kv_str(text: &str) -> Result<Self, ChannelError> {
        Self::from_kv(&KvDocument::parse(text)?)
    }

    pub fn to_kv(&self) -> KvDocument {
        let mut doc = KvDocument::default();
        doc.set("channel.bits_per_cell", self.bits_per_cell);
        let levels: Vec<String> = self.nominal_voltages.iter().map(|v| v.to_string()).collect();
        doc.set("channel.nominal_voltages", levels.join(", "));
        for (name, value) in [
            ("delta_vpp", self.delta_vpp),
            ("sigma_erase", self.sigma_erase),
            ("sigma_program", self.sigma_program),
            ("x0", self.x0),
            ("a_t", self.a_t),
            ("b_t", self.b_t),
            ("alpha_i", self.alpha_i),
            ("alpha_o", self.alpha_o),
            ("wear_coeff", self.wear_coeff),
            ("wear_exp", self.wear_exp),
            ("gamma_shape", self.gamma_shape),
        ] {
            doc.set(format!("channel.{name}"), value);
        }
        doc
    }

    /// Wear-out noise std, `wear_coeff * n_pe^wear_exp`.
    pub fn wearout_std(&self, n_pe: f64) -> f64 {
        if n_pe <= 0.0 {
            return 0.0;
        }
        self.wear_coeff * n_pe.powf(self.wear_exp)
    }

    /// Retention-induced downward shift of `state` and its std.
    pub fn retention_shift(&self, state: usize, n_pe: f64, retention_hours: f64) -> (f64, f64) {
        let cycling = if n_pe > 0.0 {
            self.a_t * n_pe.powf(self.alpha_i) + self.b_t * n_pe.powf(self.alpha_o)
        } else {
            0.0
        };
        let shift = (self.nominal_voltages[state] - self.x0) * cycling * retention_hours.ln_1p();
        (shift, 0.3 * shift.abs())
    }
}

/// Wear-out noise std with the default constants (0.00027, 0.62).
pub fn wearout_std(n_pe: f64) -> f64 {
    ChannelParams::mlc().wearout_std(n_pe)
}

/// Retention shift of one state; see [`ChannelParams::retention_shift`].
pub fn retention_shift(
    params: &ChannelParams,
    state: usize,
    n_pe: f64,
    retention_hours: f64,
) -> Result<(f64, f64), ChannelError> {
    if state >= params.num_states() {
        return Err(ChannelError::StateOutOfRange {
            state,
            states: params.num_states(),
        });
    }
    if !(n_pe >= 0.0 && retention_hours >= 0.0) {
        return Err(ChannelError::OperatingPoint);
    }
    Ok(params.retention_shift(state, n_pe, retention_hours))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseFamily {
    Gaussian,
    Gamma,
}

impl fmt::Display for NoiseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseFamily::Gaussian => "gaussian",
            NoiseFamily::Gamma => "gamma",
        })
    }
}

impl FromStr for NoiseFamily {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(NoiseFamily::Gaussian),
            "gamma" => Ok(NoiseFamily::Gamma),
            other => Err(format!("unknown noise family `{other}` (expected gaussian or gamma)")),
        }
    }
}

/// `(N_PE, T)` plus the noise family used at that point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub n_pe: f64,
    pub retention_hours: f64,
    pub noise_family: NoiseFamily,
}

impl OperatingPoint {
    pub fn new(n_pe: f64, retention_hours: f64, noise_family: NoiseFamily) -> Self {
        Self {
            n_pe,
            retention_hours,
            noise_family,
        }
    }

    pub fn gaussian(n_pe: f64, retention_hours: f64) -> Self {
        Self::new(n_pe, retention_hours, NoiseFamily::Gaussian)
    }

    /// The fresh-cell point `(0, 0)`.
    pub fn fresh() -> Self {
        Self::gaussian(0.0, 0.0)
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.n_pe >= 0.0 && self.retention_hours >= 0.0 {
            Ok(())
        } else {
            Err(ChannelError::OperatingPoint)
        }
    }
}

/// Per-state distribution shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseShape {
    Gaussian,
    /// `v = mean + std*sqrt(k) - G`, `G ~ Gamma(k, std/sqrt(k))`.
    MirroredGamma { shape: f64 },
}

/// Per-state means and variances at one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMoments {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub shape: NoiseShape,
}

impl StateMoments {
    pub fn num_states(&self) -> usize {
        self.means.len()
    }

    pub fn std(&self, state: usize) -> f64 {
        self.variances[state].sqrt()
    }

    pub fn max_std(&self) -> f64 {
        (0..self.num_states()).map(|i| self.std(i)).fold(0.0, f64::max)
    }

    /// Bits per cell implied by the number of states.
    pub fn bits(&self) -> u32 {
        self.num_states().trailing_zeros()
    }
}

/// Combined per-state moments at `op`.
pub fn state_moments(params: &ChannelParams, op: &OperatingPoint) -> StateMoments {
    let wear_var = params.wearout_std(op.n_pe).powi(2);
    let (means, variances) = (0..params.num_states())
        .map(|s| {
            let (shift, ret_std) = params.retention_shift(s, op.n_pe, op.retention_hours);
            if s == 0 {
                (
                    params.nominal_voltages[0] - shift,
                    params.sigma_erase.powi(2) + wear_var + ret_std.powi(2),
                )
            } else {
                (
                    params.nominal_voltages[s] + params.delta_vpp / 2.0 - shift,
                    params.sigma_program.powi(2) + wear_var + ret_std.powi(2),
                )
            }
        })
        .unzip();
    let shape = match op.noise_family {
        NoiseFamily::Gaussian => NoiseShape::Gaussian,
        NoiseFamily::Gamma => NoiseShape::MirroredGamma {
            shape: params.gamma_shape,
        },
    };
    StateMoments {
        means,
        variances,
        shape,
    }
}

/// Draw one read-back voltage per label. Deterministic in `seed`.
pub fn sample_voltages(
    params: &ChannelParams,
    labels: &[Symbol],
    op: &OperatingPoint,
    seed: u64,
) -> Result<Vec<f64>, ChannelError> {
    if labels.is_empty() {
        return Err(ChannelError::EmptyLabels);
    }
    op.validate()?;
    let states = params.num_states();
    if let Some(&bad) = labels.iter().find(|&&l| l as usize >= states) {
        return Err(ChannelError::StateOutOfRange {
            state: bad as usize,
            states,
        });
    }
    let moments = state_moments(params, op);
    let mut rng = stream_rng(seed, stream::VOLTAGES);
    let out = match moments.shape {
        NoiseShape::Gaussian => labels
            .iter()
            .map(|&l| {
                let z: f64 = StandardNormal.sample(&mut rng);
                moments.means[l as usize] + moments.std(l as usize) * z
            })
            .collect(),
        NoiseShape::MirroredGamma { shape } => {
            let gammas: Vec<Gamma<f64>> = (0..states)
                .map(|s| Gamma::new(shape, moments.std(s) / shape.sqrt()).expect("validated shape"))
                .collect();
            labels
                .iter()
                .map(|&l| {
                    let s = l as usize;
                    let g = gammas[s].sample(&mut rng);
                    moments.means[s] + moments.std(s) * shape.sqrt() - g
                })
                .collect()
        }
    };
    Ok(out)
}

/// Bit pattern of every state; adjacent states differ in one bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayMap {
    bits: u32,
    patterns: Vec<u8>,
}

impl GrayMap {
    /// MLC `{11, 10, 00, 01}`, TLC `{111, 110, 100, 000, 010, 011, 001, 101}`;
    /// other widths use the complemented reflected binary code.
    pub fn for_bits(bits: u32) -> Self {
        let patterns = match bits {
            2 => vec![0b11, 0b10, 0b00, 0b01],
            3 => vec![0b111, 0b110, 0b100, 0b000, 0b010, 0b011, 0b001, 0b101],
            _ => {
                let mask = ((1u32 << bits) - 1) as u8;
                (0..1u32 << bits)
                    .map(|i| ((i ^ (i >> 1)) as u8) ^ mask)
                    .collect()
            }
        };
        Self { bits, patterns }
    }

    pub fn from_patterns(bits: u32, patterns: Vec<u8>) -> Option<Self> {
        let map = Self { bits, patterns };
        map.is_valid().then_some(map)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn num_states(&self) -> usize {
        self.patterns.len()
    }

    pub fn pattern(&self, state: usize) -> u8 {
        self.patterns[state]
    }

    pub fn patterns(&self) -> &[u8] {
        &self.patterns
    }

    /// Number of differing bits between the patterns of two states.
    pub fn distance(&self, a: usize, b: usize) -> u32 {
        (self.patterns[a] ^ self.patterns[b]).count_ones()
    }

    pub fn is_valid(&self) -> bool {
        let n = 1usize << self.bits;
        if self.patterns.len() != n || self.patterns.iter().any(|&p| (p as usize) >= n) {
            return false;
        }
        let mut seen = vec![false; n];
        for &p in &self.patterns {
            if std::mem::replace(&mut seen[p as usize], true) {
                return false;
            }
        }
        (1..n).all(|i| self.distance(i - 1, i) == 1)
    }
}

/// Read-back voltages of one domain, optionally with their labels.
///
/// Unlabeled datasets may still carry the written symbols for scoring
/// ([`DomainDataset::truth`]); no detector in this crate reads them.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainDataset {
    voltages: Vec<f64>,
    labels: Option<Vec<Symbol>>,
    truth: Option<Vec<Symbol>>,
    op: OperatingPoint,
    num_states: usize,
}

impl DomainDataset {
    pub fn labeled(
        voltages: Vec<f64>,
        labels: Vec<Symbol>,
        op: OperatingPoint,
        num_states: usize,
    ) -> Result<Self, ChannelError> {
        if labels.len() != voltages.len() {
            return Err(ChannelError::LengthMismatch {
                labels: labels.len(),
                voltages: voltages.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= num_states) {
            return Err(ChannelError::StateOutOfRange {
                state: bad as usize,
                states: num_states,
            });
        }
        Ok(Self {
            voltages,
            truth: Some(labels.clone()),
            labels: Some(labels),
            op,
            num_states,
        })
    }

    pub fn unlabeled(voltages: Vec<f64>, op: OperatingPoint, num_states: usize) -> Self {
        Self {
            voltages,
            labels: None,
            truth: None,
            op,
            num_states,
        }
    }

    pub fn voltages(&self) -> &[f64] {
        &self.voltages
    }

    pub fn labels(&self) -> Option<&[Symbol]> {
        self.labels.as_deref()
    }

    /// Written symbols, when known. Only for scoring.
    pub fn truth(&self) -> Option<&[Symbol]> {
        self.truth.as_deref()
    }

    pub fn operating_point(&self) -> &OperatingPoint {
        &self.op
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn len(&self) -> usize {
        self.voltages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voltages.is_empty()
    }

    pub fn is_labeled(&self) -> bool {
        self.labels.is_some()
    }

    /// Drop the labels (the scoring copy is kept).
    pub fn without_labels(mut self) -> Self {
        self.labels = None;
        self
    }

    /// First `n` samples.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            voltages: self.voltages[..n].to_vec(),
            labels: self.labels.as_ref().map(|l| l[..n].to_vec()),
            truth: self.truth.as_ref().map(|l| l[..n].to_vec()),
            op: self.op,
            num_states: self.num_states,
        }
    }

    /// Same labels, different voltages.
    pub fn with_voltages(&self, voltages: Vec<f64>) -> Result<Self, ChannelError> {
        if voltages.len() != self.len() {
            return Err(ChannelError::LengthMismatch {
                labels: self.len(),
                voltages: voltages.len(),
            });
        }
        Ok(Self {
            voltages,
            ..self.clone()
        })
    }
}

/// `n` uniformly distributed symbols and their read-back voltages.
pub fn make_dataset(
    params: &ChannelParams,
    n: usize,
    op: &OperatingPoint,
    seed: u64,
    labeled: bool,
) -> Result<DomainDataset, ChannelError> {
    if n == 0 {
        return Err(ChannelError::EmptyDataset);
    }
    params.validate()?;
    let states = params.num_states();
    let mut rng = stream_rng(seed, stream::LABELS);
    let labels: Vec<Symbol> = (0..n).map(|_| rng.random_range(0..states) as Symbol).collect();
    let voltages = sample_voltages(params, &labels, op, seed)?;
    let ds = DomainDataset::labeled(voltages, labels, *op, states)?;
    Ok(if labeled { ds } else { ds.without_labels() })
}

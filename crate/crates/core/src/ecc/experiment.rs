use rand::Rng;
use thiserror::Error;

use super::{bits_to_symbols, hard_llr, nms_decode, symbols_to_bits, Encoder, GrayError, ParityCheckMatrix};
use crate::channel::{sample_voltages, ChannelError, ChannelParams, GrayMap, OperatingPoint};
use crate::detect::Detector;
use crate::rng::{stream, stream_rng};

#[derive(Debug, Error, PartialEq)]
pub enum ExperimentError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Gray(#[from] GrayError),
    #[error("detector returned {got} symbols for {expected} voltages")]
    DetectorLength { expected: usize, got: usize },
    #[error("encoder length {encoder} does not match the {code}-bit code")]
    CodeMismatch { encoder: usize, code: usize },
    #[error("need at least one frame")]
    NoFrames,
}

/// Error counts of one coded run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CodedBer {
    pub frames: usize,
    pub frame_errors: usize,
    pub info_bits: usize,
    pub info_bit_errors: usize,
    pub code_bits: usize,
    /// Detected code bits that differ from the written ones.
    pub raw_bit_errors: usize,
}

impl CodedBer {
    pub fn coded_ber(&self) -> f64 {
        self.info_bit_errors as f64 / self.info_bits.max(1) as f64
    }

    pub fn raw_ber(&self) -> f64 {
        self.raw_bit_errors as f64 / self.code_bits.max(1) as f64
    }
}

/// Random information words are encoded, Gray-mapped onto cells (the last
/// cell of a frame is padded with zero bits when `n` is not a multiple of
/// the bits per cell), read back through the channel, detected, turned into
/// hard LLRs and decoded. All frames are detected as one block.
#[allow(clippy::too_many_arguments)]
pub fn coded_ber_experiment(
    channel: &ChannelParams,
    op: &OperatingPoint,
    detector: &dyn Detector,
    h: &ParityCheckMatrix,
    encoder: &Encoder,
    frames: usize,
    alpha: f64,
    max_iter: usize,
    seed: u64,
) -> Result<CodedBer, ExperimentError> {
    if frames == 0 {
        return Err(ExperimentError::NoFrames);
    }
    if encoder.n() != h.n() {
        return Err(ExperimentError::CodeMismatch {
            encoder: encoder.n(),
            code: h.n(),
        });
    }
    let gray = GrayMap::for_bits(channel.bits_per_cell);
    let q = channel.bits_per_cell as usize;
    let n = h.n();
    let cells = n.div_ceil(q);
    let mut rng = stream_rng(seed, stream::INFO_BITS);

    let mut infos = Vec::with_capacity(frames);
    let mut codewords = Vec::with_capacity(frames);
    let mut symbols = Vec::with_capacity(frames * cells);
    for _ in 0..frames {
        let info: Vec<u8> = (0..encoder.k()).map(|_| rng.random_range(0..2u8)).collect();
        let mut cw = encoder.encode(&info).expect("info length matches encoder");
        infos.push(info);
        let real = cw.len();
        cw.resize(cells * q, 0);
        symbols.extend(bits_to_symbols(&cw, &gray)?);
        cw.truncate(real);
        codewords.push(cw);
    }

    let voltages = sample_voltages(channel, &symbols, op, seed)?;
    let detected = detector.detect(&voltages);
    if detected.len() != voltages.len() {
        return Err(ExperimentError::DetectorLength {
            expected: voltages.len(),
            got: detected.len(),
        });
    }

    let mut out = CodedBer {
        frames,
        ..CodedBer::default()
    };
    for (f, (info, cw)) in infos.iter().zip(&codewords).enumerate() {
        let mut bits = symbols_to_bits(&detected[f * cells..(f + 1) * cells], &gray)?;
        bits.truncate(n);
        out.code_bits += n;
        out.raw_bit_errors += bits.iter().zip(cw).filter(|(a, b)| a != b).count();
        let decoded = nms_decode(h, &hard_llr(&bits), alpha, max_iter);
        let errors = encoder
            .extract(&decoded.bits)
            .iter()
            .zip(info)
            .filter(|(a, b)| a != b)
            .count();
        out.info_bits += info.len();
        out.info_bit_errors += errors;
        out.frame_errors += (errors > 0) as usize;
    }
    Ok(out)
}

//! LDPC coding over the detected bits: parity-check matrices in alist
//! form, systematic encoding, normalized min-sum decoding and the
//! bit/symbol/LLR conversions between a detector and the decoder.

mod alist;
mod construct;
mod decode;
mod encode;
mod experiment;

pub use alist::{parse_alist, read_alist, write_alist, AlistError};
pub use construct::{construct_code, degree_counts, ConstructError, DegreeProfile};
pub use decode::{min_sum_decode, nms_decode, DecodeOutcome, LLR_CLIP};
pub use encode::{EncodeError, Encoder};
pub use experiment::{coded_ber_experiment, CodedBer, ExperimentError};

use thiserror::Error;

use crate::channel::{GrayMap, Symbol};

/// Magnitude of the hard-decision channel LLR.
pub const HARD_LLR: f64 = 5.0;

/// The shipped 4544-bit, rate-0.9 code.
pub const DEFAULT_CODE_ALIST: &str = include_str!("../../data/ldpc_4544_4096.alist");

/// Sparse binary parity-check matrix stored by rows and by columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
}

#[derive(Debug, Error, PartialEq)]
pub enum MatrixError {
    #[error("entry ({row}, {col}) outside a {rows} x {cols} matrix")]
    OutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("duplicate entry ({row}, {col})")]
    Duplicate { row: usize, col: usize },
    #[error("row {0} is empty")]
    EmptyRow(usize),
    #[error("column {0} is empty")]
    EmptyColumn(usize),
}

impl ParityCheckMatrix {
    /// Builds the matrix from per-row column indices (0-based).
    pub fn from_rows(n: usize, rows: Vec<Vec<usize>>) -> Result<Self, MatrixError> {
        let m = rows.len();
        let mut cols = vec![Vec::new(); n];
        let mut rows = rows;
        for (r, row) in rows.iter_mut().enumerate() {
            if row.is_empty() {
                return Err(MatrixError::EmptyRow(r));
            }
            row.sort_unstable();
            for w in row.windows(2) {
                if w[0] == w[1] {
                    return Err(MatrixError::Duplicate { row: r, col: w[0] });
                }
            }
            for &c in row.iter() {
                if c >= n {
                    return Err(MatrixError::OutOfRange {
                        row: r,
                        col: c,
                        rows: m,
                        cols: n,
                    });
                }
                cols[c].push(r);
            }
        }
        if let Some(c) = cols.iter().position(Vec::is_empty) {
            return Err(MatrixError::EmptyColumn(c));
        }
        Ok(Self { rows, cols })
    }

    /// Code length.
    pub fn n(&self) -> usize {
        self.cols.len()
    }

    /// Number of checks.
    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, r: usize) -> &[usize] {
        &self.rows[r]
    }

    pub fn col(&self, c: usize) -> &[usize] {
        &self.cols[c]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn cols(&self) -> &[Vec<usize>] {
        &self.cols
    }

    pub fn num_edges(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// `H c` over GF(2), one entry per check.
    pub fn syndrome(&self, bits: &[u8]) -> Vec<u8> {
        assert_eq!(bits.len(), self.n());
        self.rows
            .iter()
            .map(|row| row.iter().fold(0u8, |acc, &c| acc ^ (bits[c] & 1)))
            .collect()
    }

    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        self.syndrome(bits).iter().all(|&s| s == 0)
    }

    /// The shipped 4544/4096 code.
    pub fn default_code() -> Self {
        parse_alist(DEFAULT_CODE_ALIST).expect("shipped alist is valid")
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GrayError {
    #[error("{bits} bits do not fill whole {per_symbol}-bit symbols")]
    Length { bits: usize, per_symbol: u32 },
    #[error("symbol {0} outside the map")]
    Symbol(usize),
}

/// Bits of every symbol, most significant first.
pub fn symbols_to_bits(symbols: &[Symbol], gray: &GrayMap) -> Result<Vec<u8>, GrayError> {
    let q = gray.bits();
    let mut bits = Vec::with_capacity(symbols.len() * q as usize);
    for &s in symbols {
        if s as usize >= gray.num_states() {
            return Err(GrayError::Symbol(s as usize));
        }
        let p = gray.pattern(s as usize);
        bits.extend((0..q).rev().map(|i| (p >> i) & 1));
    }
    Ok(bits)
}

/// Inverse of [`symbols_to_bits`].
pub fn bits_to_symbols(bits: &[u8], gray: &GrayMap) -> Result<Vec<Symbol>, GrayError> {
    let q = gray.bits();
    if bits.len() % q as usize != 0 {
        return Err(GrayError::Length {
            bits: bits.len(),
            per_symbol: q,
        });
    }
    let mut inverse = vec![0 as Symbol; gray.num_states()];
    for s in 0..gray.num_states() {
        inverse[gray.pattern(s) as usize] = s as Symbol;
    }
    Ok(bits
        .chunks(q as usize)
        .map(|c| inverse[c.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize)])
        .collect())
}

/// `+5` for a detected 0, `-5` for a detected 1.
pub fn hard_llr(bits: &[u8]) -> Vec<f64> {
    bits.iter()
        .map(|&b| if b == 0 { HARD_LLR } else { -HARD_LLR })
        .collect()
}

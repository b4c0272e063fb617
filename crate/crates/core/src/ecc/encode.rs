use thiserror::Error;

use super::ParityCheckMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum EncodeError {
    #[error("parity-check matrix has rank {rank}, expected {rows} (full row rank)")]
    RankDeficient { rank: usize, rows: usize },
    #[error("expected {expected} information bits, got {got}")]
    Length { expected: usize, got: usize },
}

fn words(bits: usize) -> usize {
    bits.div_ceil(64)
}

/// Systematic encoder obtained by GF(2) elimination on `H`.
///
/// Elimination picks one pivot column per check; the remaining columns
/// carry the information bits unchanged and each pivot column holds the
/// parity bit solving its reduced row.
#[derive(Debug, Clone)]
pub struct Encoder {
    n: usize,
    info_cols: Vec<usize>,
    parity_cols: Vec<usize>,
    /// Reduced row `i` restricted to the information columns.
    parity_rows: Vec<Vec<u64>>,
}

impl Encoder {
    pub fn new(h: &ParityCheckMatrix) -> Result<Self, EncodeError> {
        let (n, m) = (h.n(), h.m());
        let w = words(n);
        let mut rows: Vec<Vec<u64>> = h
            .rows()
            .iter()
            .map(|r| {
                let mut bits = vec![0u64; w];
                for &c in r {
                    bits[c / 64] |= 1 << (c % 64);
                }
                bits
            })
            .collect();
        let get = |row: &[u64], c: usize| (row[c / 64] >> (c % 64)) & 1 == 1;

        // Reduced row echelon form, pivots chosen left to right.
        let mut pivots = Vec::with_capacity(m);
        let mut rank = 0;
        for c in 0..n {
            if rank == m {
                break;
            }
            let Some(p) = (rank..m).find(|&r| get(&rows[r], c)) else {
                continue;
            };
            rows.swap(rank, p);
            let pivot = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && get(row, c) {
                    for (a, b) in row.iter_mut().zip(&pivot) {
                        *a ^= b;
                    }
                }
            }
            pivots.push(c);
            rank += 1;
        }
        if rank < m {
            return Err(EncodeError::RankDeficient { rank, rows: m });
        }

        let mut is_pivot = vec![false; n];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        let info_cols: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
        let k = info_cols.len();
        let parity_rows = rows
            .iter()
            .map(|row| {
                let mut packed = vec![0u64; words(k)];
                for (j, &c) in info_cols.iter().enumerate() {
                    if get(row, c) {
                        packed[j / 64] |= 1 << (j % 64);
                    }
                }
                packed
            })
            .collect();
        Ok(Self {
            n,
            info_cols,
            parity_cols: pivots,
            parity_rows,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.info_cols.len()
    }

    /// Codeword positions carrying the information bits, in order.
    pub fn info_positions(&self) -> &[usize] {
        &self.info_cols
    }

    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>, EncodeError> {
        if info.len() != self.k() {
            return Err(EncodeError::Length {
                expected: self.k(),
                got: info.len(),
            });
        }
        let mut packed = vec![0u64; words(self.k())];
        let mut cw = vec![0u8; self.n];
        for (j, (&b, &c)) in info.iter().zip(&self.info_cols).enumerate() {
            let b = b & 1;
            packed[j / 64] |= (b as u64) << (j % 64);
            cw[c] = b;
        }
        for (row, &c) in self.parity_rows.iter().zip(&self.parity_cols) {
            let ones: u32 = row.iter().zip(&packed).map(|(a, b)| (a & b).count_ones()).sum();
            cw[c] = (ones & 1) as u8;
        }
        Ok(cw)
    }

    /// Information bits of a codeword.
    pub fn extract(&self, codeword: &[u8]) -> Vec<u8> {
        self.info_cols.iter().map(|&c| codeword[c]).collect()
    }
}

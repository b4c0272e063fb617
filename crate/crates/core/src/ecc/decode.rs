use super::ParityCheckMatrix;

/// Saturation of channel LLRs and of every message inside the decoder.
pub const LLR_CLIP: f64 = 31.75;

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub bits: Vec<u8>,
    /// All checks satisfied.
    pub converged: bool,
    /// Message-passing iterations performed.
    pub iterations: usize,
}

fn hard(llr: &[f64]) -> Vec<u8> {
    llr.iter().map(|&l| (l < 0.0) as u8).collect()
}

/// Normalized min-sum decoding with a flooding schedule.
///
/// Check-to-variable messages are `alpha * prod(signs) * min(|inputs|)`
/// over the other edges of the check. Stops as soon as the hard decision
/// has a zero syndrome, including before the first iteration.
pub fn nms_decode(h: &ParityCheckMatrix, llr: &[f64], alpha: f64, max_iter: usize) -> DecodeOutcome {
    assert_eq!(llr.len(), h.n(), "one LLR per code bit");
    let clip = |x: f64| x.clamp(-LLR_CLIP, LLR_CLIP);
    let channel: Vec<f64> = llr.iter().map(|&l| clip(l)).collect();
    let mut bits = hard(&channel);
    if h.is_codeword(&bits) {
        return DecodeOutcome {
            bits,
            converged: true,
            iterations: 0,
        };
    }

    // Edges in check-major order.
    let mut offsets = Vec::with_capacity(h.m() + 1);
    let mut edge_var = Vec::with_capacity(h.num_edges());
    offsets.push(0);
    for row in h.rows() {
        edge_var.extend_from_slice(row);
        offsets.push(edge_var.len());
    }
    let mut v2c: Vec<f64> = edge_var.iter().map(|&v| channel[v]).collect();
    let mut c2v = vec![0.0; edge_var.len()];
    let mut total = vec![0.0; h.n()];

    for iter in 1..=max_iter {
        for r in 0..h.m() {
            let edges = offsets[r]..offsets[r + 1];
            let mut sign = 1.0;
            let (mut min1, mut min2, mut arg) = (f64::INFINITY, f64::INFINITY, usize::MAX);
            for e in edges.clone() {
                let x = v2c[e];
                if x < 0.0 {
                    sign = -sign;
                }
                let a = x.abs();
                if a < min1 {
                    min2 = min1;
                    min1 = a;
                    arg = e;
                } else if a < min2 {
                    min2 = a;
                }
            }
            for e in edges {
                let own = if v2c[e] < 0.0 { -1.0 } else { 1.0 };
                let mag = if e == arg { min2 } else { min1 };
                c2v[e] = alpha * sign * own * mag;
            }
        }
        total.copy_from_slice(&channel);
        for (e, &v) in edge_var.iter().enumerate() {
            total[v] += c2v[e];
        }
        for (e, &v) in edge_var.iter().enumerate() {
            v2c[e] = clip(total[v] - c2v[e]);
        }
        bits = hard(&total);
        if h.is_codeword(&bits) {
            return DecodeOutcome {
                bits,
                converged: true,
                iterations: iter,
            };
        }
    }
    DecodeOutcome {
        bits,
        converged: false,
        iterations: max_iter,
    }
}

/// Plain min-sum: [`nms_decode`] with `alpha = 1`.
pub fn min_sum_decode(h: &ParityCheckMatrix, llr: &[f64], max_iter: usize) -> DecodeOutcome {
    nms_decode(h, llr, 1.0, max_iter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecc::{hard_llr, Encoder};

    fn hamming74() -> ParityCheckMatrix {
        ParityCheckMatrix::from_rows(7, vec![vec![0, 1, 2, 4], vec![0, 1, 3, 5], vec![0, 2, 3, 6]]).unwrap()
    }

    #[test]
    fn clean_codeword_needs_no_iterations() {
        let h = hamming74();
        let cw = Encoder::new(&h).unwrap().encode(&[1, 0, 1, 1]).unwrap();
        let out = nms_decode(&h, &hard_llr(&cw), 0.75, 20);
        assert!(out.converged);
        assert!(out.iterations <= 1);
        assert_eq!(out.bits, cw);
    }

    #[test]
    fn every_single_error_is_corrected() {
        let h = hamming74();
        let enc = Encoder::new(&h).unwrap();
        for u in 0..16u8 {
            let info: Vec<u8> = (0..4).map(|i| (u >> i) & 1).collect();
            let cw = enc.encode(&info).unwrap();
            for flip in 0..7 {
                let mut llr: Vec<f64> = hard_llr(&cw);
                llr[flip] = -llr[flip] * 0.5;
                let out = nms_decode(&h, &llr, 0.75, 20);
                assert!(out.converged, "u={u} flip={flip}");
                assert_eq!(out.bits, cw, "u={u} flip={flip}");
            }
        }
    }

    #[test]
    fn converged_implies_zero_syndrome() {
        let h = hamming74();
        let llr = [0.3, -1.2, 2.0, -0.1, 0.4, -2.5, 1.0];
        let out = nms_decode(&h, &llr, 0.75, 20);
        assert_eq!(out.converged, h.is_codeword(&out.bits));
    }
}

//! Seeded irregular LDPC construction: random socket matching followed by
//! edge swaps that remove repeated edges and length-4 cycles.

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use super::{Encoder, ParityCheckMatrix};
use crate::rng::{derive_seed, stream, stream_rng};

#[derive(Debug, Error, PartialEq)]
pub enum ConstructError {
    #[error("degree profile is empty or inconsistent")]
    Profile,
    #[error("no full-rank, 4-cycle-free code found after {0} attempts")]
    Exhausted(usize),
}

/// Edge-perspective variable degree distribution plus code dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeProfile {
    pub n: usize,
    pub m: usize,
    /// `(degree, fraction of edges)`.
    pub lambda: Vec<(usize, f64)>,
}

impl DegreeProfile {
    /// The 4544-bit, 448-check profile with
    /// `lambda(x) = 0.0682x + 0.1822x^2 + 0.1329x^3 + 0.6167x^4`.
    pub fn flash_4544() -> Self {
        Self {
            n: 4544,
            m: 448,
            lambda: vec![(2, 0.0682), (3, 0.1822), (4, 0.1329), (5, 0.6167)],
        }
    }

    /// Variable degrees in ascending order, node counts rounded so they sum
    /// to `n` (largest remainders get the extra nodes).
    pub fn variable_degrees(&self) -> Vec<usize> {
        let node_weight: Vec<f64> = self.lambda.iter().map(|&(d, f)| f / d as f64).collect();
        let total: f64 = node_weight.iter().sum();
        let exact: Vec<f64> = node_weight.iter().map(|w| w / total * self.n as f64).collect();
        let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
        let mut short = self.n - counts.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..counts.len()).collect();
        order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
        for &i in order.iter().cycle() {
            if short == 0 {
                break;
            }
            counts[i] += 1;
            short -= 1;
        }
        let mut degrees = Vec::with_capacity(self.n);
        for (&(d, _), &c) in self.lambda.iter().zip(&counts) {
            degrees.extend(std::iter::repeat_n(d, c));
        }
        degrees
    }
}

/// Number of columns of each degree, ascending by degree.
pub fn degree_counts(h: &ParityCheckMatrix) -> Vec<(usize, usize)> {
    let mut map = std::collections::BTreeMap::new();
    for c in h.cols() {
        *map.entry(c.len()).or_insert(0) += 1;
    }
    map.into_iter().collect()
}

struct Graph {
    var: Vec<Vec<usize>>,
    chk: Vec<Vec<usize>>,
    mark: Vec<u32>,
    stamp: u32,
}

impl Graph {
    fn has_edge(&self, v: usize, c: usize) -> bool {
        self.var[v].contains(&c)
    }

    fn remove(&mut self, v: usize, c: usize) {
        let i = self.var[v].iter().position(|&x| x == c).expect("edge present");
        self.var[v].swap_remove(i);
        let j = self.chk[c].iter().position(|&x| x == v).expect("edge present");
        self.chk[c].swap_remove(j);
    }

    fn add(&mut self, v: usize, c: usize) {
        self.var[v].push(c);
        self.chk[c].push(v);
    }

    /// Whether the edge `(v, c)` is repeated or closes a length-4 cycle.
    fn is_bad(&mut self, v: usize, c: usize) -> bool {
        if self.var[v].iter().filter(|&&x| x == c).count() > 1 {
            return true;
        }
        self.stamp += 1;
        let stamp = self.stamp;
        for &u in &self.chk[c] {
            if u != v {
                self.mark[u] = stamp;
            }
        }
        for &c2 in &self.var[v] {
            if c2 == c {
                continue;
            }
            if self.chk[c2].iter().any(|&u| u != v && self.mark[u] == stamp) {
                return true;
            }
        }
        false
    }

    fn bad_edges(&mut self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for v in 0..self.var.len() {
            let checks = self.var[v].clone();
            for c in checks {
                if self.is_bad(v, c) {
                    out.push((v, c));
                }
            }
        }
        out
    }
}

const MAX_PASSES: usize = 200;
const ATTEMPTS: usize = 8;

fn try_construct(profile: &DegreeProfile, seed: u64) -> Option<ParityCheckMatrix> {
    let mut rng = stream_rng(seed, stream::CODE_CONSTRUCTION);
    let degrees = profile.variable_degrees();
    let edges: usize = degrees.iter().sum();
    let m = profile.m;
    // Check degrees as equal as possible.
    let mut check_sockets: Vec<usize> = (0..edges).map(|i| i % m).collect();
    check_sockets.shuffle(&mut rng);

    let mut g = Graph {
        var: vec![Vec::new(); profile.n],
        chk: vec![Vec::new(); m],
        mark: vec![0; profile.n],
        stamp: 0,
    };
    let mut socket = 0;
    for (v, &d) in degrees.iter().enumerate() {
        for _ in 0..d {
            g.add(v, check_sockets[socket]);
            socket += 1;
        }
    }

    for _ in 0..MAX_PASSES {
        let bad = g.bad_edges();
        if bad.is_empty() {
            let rows = g.chk.iter().map(|r| r.clone()).collect();
            return ParityCheckMatrix::from_rows(profile.n, rows).ok();
        }
        for (v, c) in bad {
            if !g.has_edge(v, c) || !g.is_bad(v, c) {
                continue;
            }
            // Swap check endpoints with a random edge elsewhere.
            for _ in 0..50 {
                let v2 = rng.random_range(0..profile.n);
                let c2 = g.var[v2][rng.random_range(0..g.var[v2].len())];
                if v2 == v || c2 == c || g.has_edge(v, c2) || g.has_edge(v2, c) {
                    continue;
                }
                g.remove(v, c);
                g.remove(v2, c2);
                g.add(v, c2);
                g.add(v2, c);
                if !g.is_bad(v, c2) && !g.is_bad(v2, c) {
                    break;
                }
                g.remove(v, c2);
                g.remove(v2, c);
                g.add(v, c);
                g.add(v2, c2);
            }
        }
    }
    None
}

/// Builds a full-rank parity-check matrix without repeated edges or
/// 4-cycles. Seeds derived from `seed` are tried in turn.
pub fn construct_code(profile: &DegreeProfile, seed: u64) -> Result<ParityCheckMatrix, ConstructError> {
    let lambda_sum: f64 = profile.lambda.iter().map(|&(_, f)| f).sum();
    if profile.n == 0
        || profile.m == 0
        || profile.m >= profile.n
        || profile.lambda.iter().any(|&(d, f)| d == 0 || f < 0.0)
        || (lambda_sum - 1.0).abs() > 1e-3
    {
        return Err(ConstructError::Profile);
    }
    for attempt in 0..ATTEMPTS {
        if let Some(h) = try_construct(profile, derive_seed(seed, attempt as u64)) {
            if Encoder::new(&h).is_ok() {
                return Ok(h);
            }
        }
    }
    Err(ConstructError::Exhausted(ATTEMPTS))
}

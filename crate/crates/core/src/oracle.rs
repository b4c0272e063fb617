//! Closed-form error rates and optimal read thresholds for a known channel.
//!
//! Everything here assumes equiprobable states and full knowledge of the
//! per-state distributions ([`StateMoments`]). Gaussian masses use `erfc`;
//! mirrored-Gamma masses use adaptive Simpson quadrature.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use thiserror::Error;

use crate::channel::{GrayMap, NoiseShape, StateMoments, Symbol};

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("thresholds must be finite and strictly increasing")]
    Unordered,
    #[error("expected {expected} thresholds, got {got}")]
    Count { expected: usize, got: usize },
    #[error("state means must be strictly increasing (states {0} and {1} collide)")]
    Degenerate(usize, usize),
    #[error("gray map has {map} states but the channel has {channel}")]
    GrayMismatch { map: usize, channel: usize },
}

/// Ordered hard-decision read thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSet(Vec<f64>);

impl ThresholdSet {
    pub fn new(values: Vec<f64>) -> Result<Self, OracleError> {
        if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(OracleError::Unordered);
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Number of thresholds at or below `v`.
    pub fn symbol(&self, v: f64) -> Symbol {
        self.0.partition_point(|&t| t <= v) as Symbol
    }
}

/// Piecewise-constant voltage-to-symbol map. Segment `j` covers
/// `[edges[j-1], edges[j])` with `edges[-1] = -inf` and `edges[len] = +inf`.
///
/// Threshold detectors produce monotone maps; detectors that shift voltages
/// per cluster before thresholding can produce non-monotone ones.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionMap {
    edges: Vec<f64>,
    symbols: Vec<Symbol>,
}

impl DecisionMap {
    pub fn new(edges: Vec<f64>, symbols: Vec<Symbol>) -> Self {
        assert_eq!(symbols.len(), edges.len() + 1, "one symbol per segment");
        debug_assert!(edges.windows(2).all(|w| w[0] <= w[1]));
        Self { edges, symbols }
    }

    pub fn from_thresholds(thresholds: &ThresholdSet) -> Self {
        let symbols = (0..=thresholds.len()).map(|s| s as Symbol).collect();
        Self::new(thresholds.as_slice().to_vec(), symbols)
    }

    pub fn symbol(&self, v: f64) -> Symbol {
        self.symbols[self.edges.partition_point(|&e| e <= v)]
    }

    /// `(lo, hi, symbol)` for every segment.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, Symbol)> + '_ {
        self.symbols.iter().enumerate().map(move |(j, &s)| {
            let lo = if j == 0 { f64::NEG_INFINITY } else { self.edges[j - 1] };
            let hi = self.edges.get(j).copied().unwrap_or(f64::INFINITY);
            (lo, hi, s)
        })
    }
}

const SIMPSON_TOL: f64 = 1e-9;

fn gaussian_mass(mean: f64, std: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let za = (lo - mean) / std;
    let zb = (hi - mean) / std;
    let m = if za > 0.0 {
        0.5 * (libm::erfc(za * FRAC_1_SQRT_2) - libm::erfc(zb * FRAC_1_SQRT_2))
    } else {
        0.5 * (libm::erfc(-zb * FRAC_1_SQRT_2) - libm::erfc(-za * FRAC_1_SQRT_2))
    };
    m.max(0.0)
}

fn gamma_pdf(shape: f64, scale: f64, u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    ((shape - 1.0) * u.ln() - u / scale - libm::lgamma(shape) - shape * scale.ln()).exp()
}

fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    // A few fixed panels first so narrow peaks are not skipped.
    const PANELS: usize = 8;
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = if i + 1 == PANELS { b } else { lo + h };
            let fa = f(lo);
            let fb = f(hi);
            let fm = f(0.5 * (lo + hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            simpson_step(&f, lo, hi, fa, fm, fb, whole, tol / PANELS as f64, 40)
        })
        .sum()
}

/// `P(G < u)` for `G ~ Gamma(shape, scale)` by quadrature.
fn gamma_lower(shape: f64, scale: f64, u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    // Mass beyond mean + 60 sd-equivalents is far below the tolerance.
    let cap = scale * (shape + 60.0 * shape.sqrt() + 60.0);
    if u >= cap {
        return 1.0;
    }
    adaptive_simpson(|x| gamma_pdf(shape, scale, x), 0.0, u, SIMPSON_TOL).clamp(0.0, 1.0)
}

/// Density of `state` at `v`.
pub fn state_pdf(moments: &StateMoments, state: usize, v: f64) -> f64 {
    let mean = moments.means[state];
    let std = moments.std(state);
    match moments.shape {
        NoiseShape::Gaussian => {
            let z = (v - mean) / std;
            (-0.5 * z * z).exp() / (std * (2.0 * PI).sqrt())
        }
        NoiseShape::MirroredGamma { shape } => {
            let scale = std / shape.sqrt();
            gamma_pdf(shape, scale, mean + std * shape.sqrt() - v)
        }
    }
}

/// `P(V < v | state)`.
pub fn state_cdf(moments: &StateMoments, state: usize, v: f64) -> f64 {
    region_mass(moments, state, f64::NEG_INFINITY, v)
}

/// `P(lo <= V < hi | state)`.
pub fn region_mass(moments: &StateMoments, state: usize, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let mean = moments.means[state];
    let std = moments.std(state);
    match moments.shape {
        NoiseShape::Gaussian => gaussian_mass(mean, std, lo, hi),
        NoiseShape::MirroredGamma { shape } => {
            // V <= v  <=>  G >= c - v.
            let scale = std / shape.sqrt();
            let c = mean + std * shape.sqrt();
            let upper_g = |v: f64| {
                if v == f64::NEG_INFINITY {
                    0.0
                } else if v == f64::INFINITY {
                    1.0
                } else {
                    1.0 - gamma_lower(shape, scale, c - v)
                }
            };
            (upper_g(hi) - upper_g(lo)).max(0.0)
        }
    }
}

/// `P(Y = j | X = i)` for the decision map, one row per written state.
pub fn transition_matrix(moments: &StateMoments, map: &DecisionMap) -> Vec<Vec<f64>> {
    let k = moments.num_states();
    (0..k)
        .map(|i| {
            let mut row = vec![0.0; k];
            for (lo, hi, s) in map.segments() {
                if (s as usize) < k {
                    row[s as usize] += region_mass(moments, i, lo, hi);
                }
            }
            row
        })
        .collect()
}

fn check_count(moments: &StateMoments, thresholds: &ThresholdSet) -> Result<(), OracleError> {
    let expected = moments.num_states() - 1;
    if thresholds.len() != expected {
        return Err(OracleError::Count {
            expected,
            got: thresholds.len(),
        });
    }
    Ok(())
}

/// Probability that `state` falls outside its own decision region.
fn state_error(moments: &StateMoments, th: &[f64], state: usize) -> f64 {
    let k = moments.num_states();
    let mut e = 0.0;
    if state > 0 {
        e += region_mass(moments, state, f64::NEG_INFINITY, th[state - 1]);
    }
    if state + 1 < k {
        e += region_mass(moments, state, th[state], f64::INFINITY);
    }
    e
}

/// Symbol error rate with equiprobable states.
pub fn ser(moments: &StateMoments, thresholds: &ThresholdSet) -> Result<f64, OracleError> {
    check_count(moments, thresholds)?;
    let k = moments.num_states();
    let th = thresholds.as_slice();
    Ok((0..k).map(|i| state_error(moments, th, i)).sum::<f64>() / k as f64)
}

/// BER assuming every symbol error is a one-bit error: `ser / q`.
pub fn ber_adjacent(
    moments: &StateMoments,
    thresholds: &ThresholdSet,
    bits: u32,
) -> Result<f64, OracleError> {
    Ok(ser(moments, thresholds)? / bits as f64)
}

/// BER counting errors into the two neighbouring regions as one bit and all
/// farther errors as two bits.
pub fn ber_two_bit(
    moments: &StateMoments,
    thresholds: &ThresholdSet,
    gray: &GrayMap,
) -> Result<f64, OracleError> {
    check_count(moments, thresholds)?;
    let k = moments.num_states();
    if gray.num_states() != k {
        return Err(OracleError::GrayMismatch {
            map: gray.num_states(),
            channel: k,
        });
    }
    let q = gray.bits() as f64;
    let th = thresholds.as_slice();
    let lower = |j: usize| if j == 0 { f64::NEG_INFINITY } else { th[j - 1] };
    let upper = |j: usize| if j + 1 == k { f64::INFINITY } else { th[j] };
    let mut total = 0.0;
    for i in 0..k {
        let mut e1 = 0.0;
        if i > 0 {
            e1 += region_mass(moments, i, lower(i - 1), upper(i - 1));
        }
        if i + 1 < k {
            e1 += region_mass(moments, i, lower(i + 1), upper(i + 1));
        }
        let e2 = (state_error(moments, th, i) - e1).max(0.0);
        total += e1 / q + 2.0 * e2 / q;
    }
    Ok(total / k as f64)
}

/// Exact bit error rate of any decision map under a Gray map.
pub fn bit_error_rate(moments: &StateMoments, map: &DecisionMap, gray: &GrayMap) -> f64 {
    let k = moments.num_states();
    let q = gray.bits() as f64;
    let p = transition_matrix(moments, map);
    let mut total = 0.0;
    for (i, row) in p.iter().enumerate() {
        for (j, &pij) in row.iter().enumerate() {
            if i != j {
                total += pij * gray.distance(i, j) as f64 / q;
            }
        }
    }
    total / k as f64
}

/// Symbol error rate of any decision map.
pub fn symbol_error_rate(moments: &StateMoments, map: &DecisionMap) -> f64 {
    let p = transition_matrix(moments, map);
    let k = p.len();
    p.iter().enumerate().map(|(i, row)| 1.0 - row[i]).sum::<f64>() / k as f64
}

/// SER and both BER approximations at one threshold set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRates {
    pub ser: f64,
    pub ber_adjacent: f64,
    pub ber_two_bit: f64,
}

pub fn error_rates(
    moments: &StateMoments,
    thresholds: &ThresholdSet,
    gray: &GrayMap,
) -> Result<ErrorRates, OracleError> {
    Ok(ErrorRates {
        ser: ser(moments, thresholds)?,
        ber_adjacent: ber_adjacent(moments, thresholds, gray.bits())?,
        ber_two_bit: ber_two_bit(moments, thresholds, gray)?,
    })
}

const GRID_POINTS: usize = 1000;
const GOLDEN_ITERATIONS: usize = 30;

/// Grid argmin of `f` over `[lo, hi]` (lowest voltage wins ties) followed by
/// golden-section refinement inside the neighbouring grid cells.
fn grid_golden_min<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64) -> f64 {
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let mut best_x = lo;
    let mut best_f = f64::INFINITY;
    for g in 0..GRID_POINTS {
        let x = lo + g as f64 * step;
        let fx = f(x);
        if fx < best_f {
            best_f = fx;
            best_x = x;
        }
    }
    let (mut a, mut b) = ((best_x - step).max(lo), (best_x + step).min(hi));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_ITERATIONS {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    let (x, fx) = if fc <= fd { (c, fc) } else { (d, fd) };
    if fx < best_f {
        x
    } else {
        best_x
    }
}

fn check_means(moments: &StateMoments) -> Result<(), OracleError> {
    for i in 1..moments.num_states() {
        if !(moments.means[i] > moments.means[i - 1]) {
            return Err(OracleError::Degenerate(i - 1, i));
        }
    }
    Ok(())
}

/// Thresholds minimizing the symbol error rate.
///
/// The SER separates into one term per threshold, so each threshold is
/// searched independently between the means of its two neighbouring states.
pub fn optimal_thresholds(moments: &StateMoments) -> Result<ThresholdSet, OracleError> {
    check_means(moments)?;
    let th = (1..moments.num_states())
        .map(|k| {
            let cost = |t: f64| {
                region_mass(moments, k - 1, t, f64::INFINITY)
                    + region_mass(moments, k, f64::NEG_INFINITY, t)
            };
            grid_golden_min(cost, moments.means[k - 1], moments.means[k])
        })
        .collect();
    ThresholdSet::new(th)
}

/// Mutual information (bits) between a uniform input state and the
/// hard-decision output region.
pub fn mutual_information(
    moments: &StateMoments,
    thresholds: &ThresholdSet,
) -> Result<f64, OracleError> {
    check_count(moments, thresholds)?;
    Ok(map_mutual_information(moments, &DecisionMap::from_thresholds(thresholds)))
}

fn map_mutual_information(moments: &StateMoments, map: &DecisionMap) -> f64 {
    let p = transition_matrix(moments, map);
    let k = p.len();
    let prior = 1.0 / k as f64;
    let out: Vec<f64> = (0..k).map(|j| p.iter().map(|row| row[j]).sum::<f64>() * prior).collect();
    let mut mi = 0.0;
    for row in &p {
        for (j, &pij) in row.iter().enumerate() {
            if pij > 0.0 && out[j] > 0.0 {
                mi += prior * pij * (pij / out[j]).log2();
            }
        }
    }
    mi.max(0.0)
}

/// Thresholds maximizing [`mutual_information`].
///
/// Coordinate ascent started from [`optimal_thresholds`]: every sweep runs
/// the grid + golden-section search on each threshold between its
/// neighbours, keeping a move only when it increases the information.
pub fn mmi_thresholds(moments: &StateMoments) -> Result<ThresholdSet, OracleError> {
    let mut th = optimal_thresholds(moments)?.into_vec();
    let k = moments.num_states();
    let mi_of = |th: &[f64]| {
        let symbols = (0..k).map(|s| s as Symbol).collect();
        map_mutual_information(moments, &DecisionMap::new(th.to_vec(), symbols))
    };
    let mut best = mi_of(&th);
    for _ in 0..GOLDEN_ITERATIONS {
        let mut moved = false;
        for c in 0..th.len() {
            let lo = if c == 0 { moments.means[0] } else { th[c - 1] };
            let hi = if c + 1 == th.len() { moments.means[k - 1] } else { th[c + 1] };
            let span = hi - lo;
            let (lo, hi) = (lo + span * 1e-6, hi - span * 1e-6);
            let mut trial = th.clone();
            let x = grid_golden_min(
                |t| {
                    trial[c] = t;
                    -mi_of(&trial)
                },
                lo,
                hi,
            );
            let mut candidate = th.clone();
            candidate[c] = x;
            let mi = mi_of(&candidate);
            if mi > best + 1e-15 {
                moved |= (x - th[c]).abs() > 1e-12;
                best = mi;
                th = candidate;
            }
        }
        if !moved {
            break;
        }
    }
    ThresholdSet::new(th)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{state_moments, ChannelParams, OperatingPoint};

    fn two_state(m0: f64, s0: f64, m1: f64, s1: f64) -> StateMoments {
        StateMoments {
            means: vec![m0, m1],
            variances: vec![s0 * s0, s1 * s1],
            shape: NoiseShape::Gaussian,
        }
    }

    #[test]
    fn pdf_mode_and_symmetry() {
        let m = two_state(0.0, 1.0, 2.0, 0.5);
        assert!((state_pdf(&m, 1, 2.0) - 1.0 / (0.5 * (2.0 * PI).sqrt())).abs() < 1e-15);
        assert!((state_pdf(&m, 1, 2.3) - state_pdf(&m, 1, 1.7)).abs() < 1e-14);
    }

    #[test]
    fn pdfs_integrate_to_one() {
        let p = ChannelParams::mlc();
        for family in [crate::channel::NoiseFamily::Gaussian, crate::channel::NoiseFamily::Gamma] {
            let m = state_moments(&p, &OperatingPoint::new(1e4, 1e4, family));
            for s in 0..4 {
                let (mu, sd) = (m.means[s], m.std(s));
                let total = adaptive_simpson(|v| state_pdf(&m, s, v), mu - 40.0 * sd, mu + 40.0 * sd, 1e-11);
                assert!((total - 1.0).abs() < 1e-6, "{family} state {s}: {total}");
            }
        }
    }

    #[test]
    fn symmetric_two_state_ser_is_q_of_one() {
        let m = two_state(0.0, 1.0, 2.0, 1.0);
        let th = ThresholdSet::new(vec![1.0]).unwrap();
        assert!((ser(&m, &th).unwrap() - 0.158_655_253_931_457).abs() < 1e-12);
        // q = 1: the one-bit approximation equals the SER.
        assert_eq!(ber_adjacent(&m, &th, 1).unwrap(), ser(&m, &th).unwrap());
    }

    #[test]
    fn threshold_below_all_mass_makes_state_zero_always_wrong() {
        let p = ChannelParams::mlc();
        let m = state_moments(&p, &OperatingPoint::fresh());
        let opt = optimal_thresholds(&m).unwrap();
        let mut low = opt.clone().into_vec();
        low[0] = -10.0;
        let s = ser(&m, &ThresholdSet::new(low).unwrap()).unwrap();
        assert!(s > 0.25 - 1e-9 && s > ser(&m, &opt).unwrap());
    }

    #[test]
    fn two_state_optimum_is_midpoint_or_density_crossing() {
        let m = two_state(0.0, 1.0, 2.0, 1.0);
        let t = optimal_thresholds(&m).unwrap().as_slice()[0];
        assert!((t - 1.0).abs() < 1e-7, "{t}");
        let mmi = mmi_thresholds(&m).unwrap().as_slice()[0];
        assert!((mmi - 1.0).abs() < 1e-6, "{mmi}");

        // Unequal variances: solve p0(v) = p1(v) between the means.
        let (m0, s0, m1, s1) = (0.0f64, 1.0f64, 3.0f64, 0.5f64);
        let m = two_state(m0, s0, m1, s1);
        let a = 1.0 / (s1 * s1) - 1.0 / (s0 * s0);
        let b = 2.0 * (m0 / (s0 * s0) - m1 / (s1 * s1));
        let c = m1 * m1 / (s1 * s1) - m0 * m0 / (s0 * s0) - 2.0 * (s0 / s1).ln();
        let disc = (b * b - 4.0 * a * c).sqrt();
        let root = [(-b - disc) / (2.0 * a), (-b + disc) / (2.0 * a)]
            .into_iter()
            .find(|r| *r > m0 && *r < m1)
            .unwrap();
        let t = optimal_thresholds(&m).unwrap().as_slice()[0];
        assert!((t - root).abs() < 1e-6, "{t} vs {root}");
    }

    #[test]
    fn degenerate_channel_is_rejected() {
        let m = two_state(1.0, 1.0, 1.0, 1.0);
        assert_eq!(optimal_thresholds(&m), Err(OracleError::Degenerate(0, 1)));
        assert!(mmi_thresholds(&m).is_err());
    }

    #[test]
    fn mutual_information_extremes() {
        let clean = StateMoments {
            means: vec![0.0, 10.0, 20.0, 30.0],
            variances: vec![1e-6; 4],
            shape: NoiseShape::Gaussian,
        };
        let th = ThresholdSet::new(vec![5.0, 15.0, 25.0]).unwrap();
        assert!((mutual_information(&clean, &th).unwrap() - 2.0).abs() < 1e-12);
        let mush = StateMoments {
            means: vec![0.0; 4],
            variances: vec![1.0; 4],
            shape: NoiseShape::Gaussian,
        };
        assert!(mutual_information(&mush, &th).unwrap().abs() < 1e-12);
    }

    #[test]
    fn mmi_dominates_min_ser_thresholds_in_information() {
        let m = state_moments(&ChannelParams::mlc(), &OperatingPoint::gaussian(1e4, 1.2e4));
        let opt = optimal_thresholds(&m).unwrap();
        let mmi = mmi_thresholds(&m).unwrap();
        assert!(mutual_information(&m, &opt).unwrap() <= mutual_information(&m, &mmi).unwrap());
        assert!(mmi.as_slice().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn noiseless_two_bit_ber_is_zero() {
        let m = StateMoments {
            means: vec![0.0, 1.0, 2.0, 3.0],
            variances: vec![1e-8; 4],
            shape: NoiseShape::Gaussian,
        };
        let th = ThresholdSet::new(vec![0.5, 1.5, 2.5]).unwrap();
        let r = error_rates(&m, &th, &GrayMap::for_bits(2)).unwrap();
        assert_eq!((r.ser, r.ber_adjacent, r.ber_two_bit), (0.0, 0.0, 0.0));
    }

    #[test]
    fn threshold_count_and_order_checked() {
        assert_eq!(ThresholdSet::new(vec![1.0, 1.0]), Err(OracleError::Unordered));
        let m = two_state(0.0, 1.0, 2.0, 1.0);
        let th = ThresholdSet::new(vec![0.5, 1.5]).unwrap();
        assert_eq!(ser(&m, &th), Err(OracleError::Count { expected: 1, got: 2 }));
    }

    #[test]
    fn decision_map_ties_resolve_upward() {
        let th = ThresholdSet::new(vec![1.0, 2.0]).unwrap();
        let map = DecisionMap::from_thresholds(&th);
        assert_eq!(map.symbol(1.0), 1);
        assert_eq!(th.symbol(1.0), 1);
        assert_eq!(map.symbol(0.999), 0);
        assert_eq!(map.symbol(5.0), 2);
    }

    #[test]
    fn exact_ber_matches_two_bit_formula_when_far_errors_vanish() {
        let m = state_moments(&ChannelParams::mlc(), &OperatingPoint::gaussian(1e3, 1e3));
        let th = optimal_thresholds(&m).unwrap();
        let gray = GrayMap::for_bits(2);
        let exact = bit_error_rate(&m, &DecisionMap::from_thresholds(&th), &gray);
        let approx = ber_two_bit(&m, &th, &gray).unwrap();
        assert!((exact - approx).abs() / exact < 1e-3, "{exact} {approx}");
        let ser_map = symbol_error_rate(&m, &DecisionMap::from_thresholds(&th));
        assert!((ser_map - ser(&m, &th).unwrap()).abs() < 1e-15);
    }
}

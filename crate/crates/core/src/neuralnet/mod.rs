//! Two stacked GRU layers followed by a per-timestep affine + softplus
//! output, with hand-written backpropagation through time.
//!
//! Gate rows are stacked in the order reset, update, candidate (`r`, `z`,
//! `n`), so `w_ih` is `3L x D` and `w_hh` is `3L x L`, both row-major.
//! The reset gate multiplies the previous state before the candidate's
//! recurrent affine map:
//!
//! ```text
//! r = sigmoid(W_ir x + b_ir + W_hr h + b_hr)
//! z = sigmoid(W_iz x + b_iz + W_hz h + b_hz)
//! n = tanh(W_in x + b_in + W_hn (r * h) + b_hn)
//! h' = (1 - z) * n + z * h
//! ```

mod checkpoint;
mod train;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CheckpointError};
pub use train::{train, Adam, TrainConfig, TrainOutcome};

use rand::Rng;
use thiserror::Error;

use crate::rng::{stream, stream_rng};

/// Hidden width of both GRU layers.
pub const HIDDEN: usize = 20;
/// Default window length.
pub const WINDOW: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum NnError {
    #[error("expected a window of {expected} values, got {got}")]
    WindowLength { expected: usize, got: usize },
    #[error("labels ({labels}) and voltages ({voltages}) differ in length")]
    LengthMismatch { labels: usize, voltages: usize },
    #[error("training requires a labeled dataset")]
    Unlabeled,
    #[error("need at least {window} samples to form one window, got {got}")]
    TooFewSamples { window: usize, got: usize },
    #[error("invalid training configuration: {0}")]
    Config(String),
}

/// One GRU layer.
#[derive(Debug, Clone, PartialEq)]
pub struct GruLayerParams {
    pub input: usize,
    pub hidden: usize,
    pub w_ih: Vec<f64>,
    pub w_hh: Vec<f64>,
    pub b_ih: Vec<f64>,
    pub b_hh: Vec<f64>,
}

impl GruLayerParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            input,
            hidden,
            w_ih: vec![0.0; 3 * hidden * input],
            w_hh: vec![0.0; 3 * hidden * hidden],
            b_ih: vec![0.0; 3 * hidden],
            b_hh: vec![0.0; 3 * hidden],
        }
    }

    /// `3 L (D + L + 2)`.
    pub fn num_params(&self) -> usize {
        3 * self.hidden * (self.input + self.hidden + 2)
    }

    fn tensors(&self) -> [&[f64]; 4] {
        [&self.w_ih, &self.w_hh, &self.b_ih, &self.b_hh]
    }

    fn tensors_mut(&mut self) -> [&mut [f64]; 4] {
        [&mut self.w_ih, &mut self.w_hh, &mut self.b_ih, &mut self.b_hh]
    }
}

/// Full detector network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub gru1: GruLayerParams,
    pub gru2: GruLayerParams,
    pub out_w: Vec<f64>,
    pub out_b: f64,
}

/// Which parameter groups the optimizer may change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FreezeMask {
    pub gru1: bool,
    pub gru2: bool,
    pub output: bool,
}

impl FreezeMask {
    pub const NONE: FreezeMask = FreezeMask {
        gru1: false,
        gru2: false,
        output: false,
    };
    /// Fine-tuning setting: the first GRU layer is kept fixed.
    pub const GRU1: FreezeMask = FreezeMask {
        gru1: true,
        gru2: false,
        output: false,
    };
}

/// Parameter groups in a fixed order, used by the optimizer and checkpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    Gru1,
    Gru2,
    Output,
}

impl Group {
    pub fn frozen(self, mask: FreezeMask) -> bool {
        match self {
            Group::Gru1 => mask.gru1,
            Group::Gru2 => mask.gru2,
            Group::Output => mask.output,
        }
    }
}

impl NetworkParams {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            gru1: GruLayerParams::zeros(1, hidden),
            gru2: GruLayerParams::zeros(hidden, hidden),
            out_w: vec![0.0; hidden],
            out_b: 0.0,
        }
    }

    pub fn hidden(&self) -> usize {
        self.out_w.len()
    }

    pub fn num_params(&self) -> usize {
        self.gru1.num_params() + self.gru2.num_params() + self.out_w.len() + 1
    }

    pub fn num_trainable(&self, mask: FreezeMask) -> usize {
        let mut n = 0;
        if !mask.gru1 {
            n += self.gru1.num_params();
        }
        if !mask.gru2 {
            n += self.gru2.num_params();
        }
        if !mask.output {
            n += self.out_w.len() + 1;
        }
        n
    }

    /// Xavier-uniform weights (per gate matrix), zero biases.
    pub fn xavier(hidden: usize, seed: u64) -> Self {
        let mut p = Self::zeros(hidden);
        let mut rng = stream_rng(seed, stream::INIT);
        let mut fill = |w: &mut [f64], fan_in: usize, fan_out: usize| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for x in w {
                *x = rng.random_range(-limit..limit);
            }
        };
        for layer in [&mut p.gru1, &mut p.gru2] {
            let (d, l) = (layer.input, layer.hidden);
            for gate in 0..3 {
                fill(&mut layer.w_ih[gate * l * d..(gate + 1) * l * d], d, l);
                fill(&mut layer.w_hh[gate * l * l..(gate + 1) * l * l], l, l);
            }
        }
        fill(&mut p.out_w, hidden, 1);
        p
    }

    /// Every tensor with its group. The output bias is a one-element slice.
    pub fn tensors(&self) -> Vec<(Group, &[f64])> {
        let mut v: Vec<(Group, &[f64])> = Vec::with_capacity(10);
        v.extend(self.gru1.tensors().map(|t| (Group::Gru1, t)));
        v.extend(self.gru2.tensors().map(|t| (Group::Gru2, t)));
        v.push((Group::Output, &self.out_w));
        v.push((Group::Output, std::slice::from_ref(&self.out_b)));
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<(Group, &mut [f64])> {
        let mut v: Vec<(Group, &mut [f64])> = Vec::with_capacity(10);
        v.extend(self.gru1.tensors_mut().map(|t| (Group::Gru1, t)));
        v.extend(self.gru2.tensors_mut().map(|t| (Group::Gru2, t)));
        v.push((Group::Output, &mut self.out_w));
        v.push((Group::Output, std::slice::from_mut(&mut self.out_b)));
        v
    }

    fn fill_zero(&mut self) {
        for (_, t) in self.tensors_mut() {
            t.fill(0.0);
        }
    }
}

/// Xavier-initialized network of the default width.
pub fn init_xavier(seed: u64) -> NetworkParams {
    NetworkParams::xavier(HIDDEN, seed)
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..n {
        s += a[i] * b[i];
    }
    s
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Per-timestep activations of one layer over a window.
struct LayerTrace {
    /// `(T + 1) x L`; row 0 is the zero initial state.
    h: Vec<f64>,
    r: Vec<f64>,
    z: Vec<f64>,
    n: Vec<f64>,
    /// `r * h_prev`.
    rh: Vec<f64>,
}

fn layer_forward(p: &GruLayerParams, xs: &[f64], steps: usize) -> LayerTrace {
    let (d, l) = (p.input, p.hidden);
    let mut tr = LayerTrace {
        h: vec![0.0; (steps + 1) * l],
        r: vec![0.0; steps * l],
        z: vec![0.0; steps * l],
        n: vec![0.0; steps * l],
        rh: vec![0.0; steps * l],
    };
    for t in 0..steps {
        let x = &xs[t * d..(t + 1) * d];
        let (h_hist, h_next) = tr.h.split_at_mut((t + 1) * l);
        let h_prev = &h_hist[t * l..];
        let h_out = &mut h_next[..l];
        let rt = &mut tr.r[t * l..(t + 1) * l];
        let zt = &mut tr.z[t * l..(t + 1) * l];
        let nt = &mut tr.n[t * l..(t + 1) * l];
        let rht = &mut tr.rh[t * l..(t + 1) * l];
        for j in 0..l {
            let ar = dot(&p.w_ih[j * d..(j + 1) * d], x)
                + p.b_ih[j]
                + dot(&p.w_hh[j * l..(j + 1) * l], h_prev)
                + p.b_hh[j];
            let jz = l + j;
            let az = dot(&p.w_ih[jz * d..(jz + 1) * d], x)
                + p.b_ih[jz]
                + dot(&p.w_hh[jz * l..(jz + 1) * l], h_prev)
                + p.b_hh[jz];
            rt[j] = sigmoid(ar);
            zt[j] = sigmoid(az);
            rht[j] = rt[j] * h_prev[j];
        }
        for j in 0..l {
            let jn = 2 * l + j;
            let an = dot(&p.w_ih[jn * d..(jn + 1) * d], x)
                + p.b_ih[jn]
                + dot(&p.w_hh[jn * l..(jn + 1) * l], rht)
                + p.b_hh[jn];
            nt[j] = an.tanh();
            h_out[j] = (1.0 - zt[j]) * nt[j] + zt[j] * h_prev[j];
        }
    }
    tr
}

/// Backward pass of one layer. `dh_ext` holds `dL/dh_t` coming from above
/// (`T x L`). Gradients are accumulated into `g`; returns `dL/dx` (`T x D`).
fn layer_backward(
    p: &GruLayerParams,
    xs: &[f64],
    tr: &LayerTrace,
    dh_ext: &[f64],
    steps: usize,
    g: &mut GruLayerParams,
    want_dx: bool,
) -> Vec<f64> {
    let (d, l) = (p.input, p.hidden);
    let mut dx = if want_dx { vec![0.0; steps * d] } else { Vec::new() };
    let mut dh = vec![0.0; l];
    let mut da = vec![0.0; 3 * l];
    let mut drh = vec![0.0; l];
    for t in (0..steps).rev() {
        for j in 0..l {
            dh[j] += dh_ext[t * l + j];
        }
        let x = &xs[t * d..(t + 1) * d];
        let h_prev = &tr.h[t * l..(t + 1) * l];
        let rt = &tr.r[t * l..(t + 1) * l];
        let zt = &tr.z[t * l..(t + 1) * l];
        let nt = &tr.n[t * l..(t + 1) * l];
        let rht = &tr.rh[t * l..(t + 1) * l];
        let mut dh_prev = vec![0.0; l];

        for j in 0..l {
            let dn = dh[j] * (1.0 - zt[j]);
            let dz = dh[j] * (h_prev[j] - nt[j]);
            dh_prev[j] = dh[j] * zt[j];
            da[2 * l + j] = dn * (1.0 - nt[j] * nt[j]);
            da[l + j] = dz * zt[j] * (1.0 - zt[j]);
        }
        // Candidate recurrent map acts on r * h_prev.
        drh.fill(0.0);
        for j in 0..l {
            let row = 2 * l + j;
            let a = da[row];
            axpy(a, &p.w_hh[row * l..(row + 1) * l], &mut drh);
            axpy(a, rht, &mut g.w_hh[row * l..(row + 1) * l]);
        }
        for j in 0..l {
            da[j] = drh[j] * h_prev[j] * rt[j] * (1.0 - rt[j]);
            dh_prev[j] += drh[j] * rt[j];
        }
        for row in 0..2 * l {
            let a = da[row];
            axpy(a, &p.w_hh[row * l..(row + 1) * l], &mut dh_prev);
            axpy(a, h_prev, &mut g.w_hh[row * l..(row + 1) * l]);
        }
        for row in 0..3 * l {
            let a = da[row];
            g.b_ih[row] += a;
            g.b_hh[row] += a;
            axpy(a, x, &mut g.w_ih[row * d..(row + 1) * d]);
            if want_dx {
                axpy(a, &p.w_ih[row * d..(row + 1) * d], &mut dx[t * d..(t + 1) * d]);
            }
        }
        dh = dh_prev;
    }
    dx
}

/// Network output for one window (hidden state starts at zero).
pub fn forward(params: &NetworkParams, window: &[f64]) -> Vec<f64> {
    let steps = window.len();
    let l = params.hidden();
    let t1 = layer_forward(&params.gru1, window, steps);
    let t2 = layer_forward(&params.gru2, &t1.h[l..], steps);
    (0..steps)
        .map(|t| softplus(dot(&params.out_w, &t2.h[(t + 1) * l..(t + 2) * l]) + params.out_b))
        .collect()
}

/// Forward pass that checks the window length.
pub fn forward_checked(
    params: &NetworkParams,
    window: &[f64],
    expected: usize,
) -> Result<Vec<f64>, NnError> {
    if window.len() != expected {
        return Err(NnError::WindowLength {
            expected,
            got: window.len(),
        });
    }
    Ok(forward(params, window))
}

/// Mean squared error.
pub fn loss_mse(estimates: &[f64], labels: &[f64]) -> f64 {
    assert_eq!(estimates.len(), labels.len());
    if estimates.is_empty() {
        return 0.0;
    }
    estimates
        .iter()
        .zip(labels)
        .map(|(e, y)| (e - y) * (e - y))
        .sum::<f64>()
        / estimates.len() as f64
}

/// Adds `weight * dL/dtheta` of the window MSE into `grad` and returns the
/// window loss.
pub fn accumulate_gradients(
    params: &NetworkParams,
    window: &[f64],
    labels: &[f64],
    weight: f64,
    grad: &mut NetworkParams,
) -> f64 {
    accumulate(params, window, labels, weight, grad, true)
}

/// As [`accumulate_gradients`]; `with_gru1 = false` skips backpropagating
/// into the first layer, whose gradient is then left untouched.
pub(crate) fn accumulate(
    params: &NetworkParams,
    window: &[f64],
    labels: &[f64],
    weight: f64,
    grad: &mut NetworkParams,
    with_gru1: bool,
) -> f64 {
    let steps = window.len();
    assert_eq!(labels.len(), steps);
    let l = params.hidden();
    let t1 = layer_forward(&params.gru1, window, steps);
    let x2 = &t1.h[l..];
    let t2 = layer_forward(&params.gru2, x2, steps);

    let mut loss = 0.0;
    let mut dh2 = vec![0.0; steps * l];
    for t in 0..steps {
        let h = &t2.h[(t + 1) * l..(t + 2) * l];
        let a = dot(&params.out_w, h) + params.out_b;
        let y = softplus(a);
        let resid = y - labels[t];
        loss += resid * resid;
        let da = weight * 2.0 * resid / steps as f64 * sigmoid(a);
        grad.out_b += da;
        axpy(da, h, &mut grad.out_w);
        axpy(da, &params.out_w, &mut dh2[t * l..(t + 1) * l]);
    }
    let dh1 = layer_backward(&params.gru2, x2, &t2, &dh2, steps, &mut grad.gru2, with_gru1);
    if with_gru1 {
        layer_backward(&params.gru1, window, &t1, &dh1, steps, &mut grad.gru1, false);
    }
    loss / steps as f64
}

/// Exact gradient of the window MSE.
pub fn gradients(params: &NetworkParams, window: &[f64], labels: &[f64]) -> NetworkParams {
    let mut g = NetworkParams::zeros(params.hidden());
    accumulate_gradients(params, window, labels, 1.0, &mut g);
    g
}

/// Raw network outputs for a voltage sequence of any length.
///
/// The sequence is cut into consecutive windows of `window` samples, each
/// starting from a zero state. A trailing partial window is padded by
/// repeating its last voltage; padded outputs are dropped.
pub fn predict(params: &NetworkParams, voltages: &[f64], window: usize) -> Vec<f64> {
    assert!(window > 0);
    let mut out = Vec::with_capacity(voltages.len());
    let mut buf = vec![0.0; window];
    for chunk in voltages.chunks(window) {
        if chunk.len() == window {
            out.extend(forward(params, chunk));
        } else {
            buf[..chunk.len()].copy_from_slice(chunk);
            let last = chunk[chunk.len() - 1];
            buf[chunk.len()..].fill(last);
            out.extend_from_slice(&forward(params, &buf)[..chunk.len()]);
        }
    }
    out
}

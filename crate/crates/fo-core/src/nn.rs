//! Minimal dense-MLP engine: forward, backward, Adam.
//!
//! All networks in this crate (policies, critics, goal predictors) are plain
//! feed-forward nets with ReLU hidden layers, built small enough that a
//! hand-rolled f64 implementation is both fast and finite-difference
//! checkable. Weights are row-major `(out_dim, in_dim)`.

use crate::error::{Error, Result};
use crate::rng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::io::{Read, Write};

/// Activation applied to the final layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputActivation {
    Identity,
    /// `scale * tanh(z)`, used by actors to map into the action box.
    ScaledTanh { scale: f64 },
}

/// Network shape. Hidden layers are always ReLU.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpSpec {
    /// Input dim, hidden dims..., output dim. At least two entries.
    pub layer_sizes: Vec<usize>,
    pub output_activation: OutputActivation,
}

impl MlpSpec {
    pub fn new(layer_sizes: Vec<usize>, output_activation: OutputActivation) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::Config(format!(
                "MlpSpec needs at least 2 layers, got {}",
                layer_sizes.len()
            )));
        }
        if layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::Config("MlpSpec layer sizes must be >= 1".into()));
        }
        Ok(MlpSpec {
            layer_sizes,
            output_activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }
}

/// One dense layer's parameters (or gradients; the storage is the same).
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// Row-major `(out_dim, in_dim)`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl LayerParams {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        LayerParams {
            weights: vec![0.0; in_dim * out_dim],
            biases: vec![0.0; out_dim],
            in_dim,
            out_dim,
        }
    }
}

/// All layer parameters of one network.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<LayerParams>,
}

/// Gradients with the same shapes as [`MlpParams`].
pub type Gradients = MlpParams;

impl MlpParams {
    /// All-zero parameters for `spec`.
    pub fn zeros(spec: &MlpSpec) -> Self {
        let layers = spec
            .layer_sizes
            .windows(2)
            .map(|w| LayerParams::zeros(w[0], w[1]))
            .collect();
        MlpParams { layers }
    }

    /// Uniform fan-in init: `U(-1/sqrt(in), 1/sqrt(in))` weights, zero biases.
    /// `final_scale` shrinks the last layer (actors start near-zero actions).
    pub fn init(spec: &MlpSpec, rng: &mut ChaCha8Rng, final_scale: f64) -> Self {
        let mut params = Self::zeros(spec);
        let n = params.layers.len();
        for (li, layer) in params.layers.iter_mut().enumerate() {
            let bound = 1.0 / (layer.in_dim as f64).sqrt();
            let scale = if li + 1 == n { final_scale } else { 1.0 };
            for w in layer.weights.iter_mut() {
                *w = rng.gen_range(-bound..bound) * scale;
            }
        }
        params
    }

    /// Convenience seeded init with a stream tag.
    pub fn init_seeded(spec: &MlpSpec, seed: u64, tag: &str, final_scale: f64) -> Self {
        let mut r = rng::stream0(seed, tag);
        Self::init(spec, &mut r, final_scale)
    }

    pub fn shapes_match(&self, other: &MlpParams) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.in_dim == b.in_dim && a.out_dim == b.out_dim)
    }

    /// Elementwise `self = tau * online + (1 - tau) * self`.
    pub fn polyak_from(&mut self, online: &MlpParams, tau: f64) {
        for (t, o) in self.layers.iter_mut().zip(&online.layers) {
            for (tw, ow) in t.weights.iter_mut().zip(&o.weights) {
                *tw = tau * ow + (1.0 - tau) * *tw;
            }
            for (tb, ob) in t.biases.iter_mut().zip(&o.biases) {
                *tb = tau * ob + (1.0 - tau) * *tb;
            }
        }
    }

    pub fn scale(&mut self, k: f64) {
        for l in self.layers.iter_mut() {
            for w in l.weights.iter_mut() {
                *w *= k;
            }
            for b in l.biases.iter_mut() {
                *b *= k;
            }
        }
    }

    pub fn add_scaled(&mut self, other: &MlpParams, k: f64) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (aw, bw) in a.weights.iter_mut().zip(&b.weights) {
                *aw += k * bw;
            }
            for (ab, bb) in a.biases.iter_mut().zip(&b.biases) {
                *ab += k * bb;
            }
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }
}

fn check_input(spec: &MlpSpec, input: &[f64], context: &str) -> Result<()> {
    if input.len() != spec.input_dim() {
        return Err(Error::dim(context, spec.input_dim(), input.len()));
    }
    Ok(())
}

fn affine(layer: &LayerParams, x: &[f64], out: &mut Vec<f64>) {
    out.clear();
    for o in 0..layer.out_dim {
        let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
        let mut acc = layer.biases[o];
        for (w, xi) in row.iter().zip(x) {
            acc += w * xi;
        }
        out.push(acc);
    }
}

fn apply_output_activation(act: OutputActivation, z: &mut [f64]) {
    match act {
        OutputActivation::Identity => {}
        OutputActivation::ScaledTanh { scale } => {
            for v in z.iter_mut() {
                *v = scale * v.tanh();
            }
        }
    }
}

/// Forward pass. Pure: identical inputs give bit-identical outputs.
pub fn mlp_forward(params: &MlpParams, spec: &MlpSpec, input: &[f64]) -> Result<Vec<f64>> {
    check_input(spec, input, "mlp_forward input")?;
    let n = params.layers.len();
    let mut x = input.to_vec();
    let mut z = Vec::new();
    for (li, layer) in params.layers.iter().enumerate() {
        if layer.in_dim != x.len() {
            return Err(Error::dim("mlp_forward layer input", layer.in_dim, x.len()));
        }
        affine(layer, &x, &mut z);
        if li + 1 < n {
            for v in z.iter_mut() {
                *v = v.max(0.0);
            }
        } else {
            apply_output_activation(spec.output_activation, &mut z);
        }
        std::mem::swap(&mut x, &mut z);
    }
    Ok(x)
}

/// Per-layer caches from a forward pass, consumed by the backward pass.
pub struct Tape {
    /// Input to each layer (post-activation of the previous one).
    xs: Vec<Vec<f64>>,
    /// Pre-activation of each layer.
    zs: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

/// Forward pass that keeps the per-layer caches needed by
/// [`mlp_backprop`]. Lets callers inspect the output before choosing the
/// upstream gradient, without paying for a second forward pass.
pub fn mlp_forward_tape(params: &MlpParams, spec: &MlpSpec, input: &[f64]) -> Result<Tape> {
    check_input(spec, input, "mlp_backward input")?;
    let n = params.layers.len();
    let mut xs = Vec::with_capacity(n);
    let mut zs = Vec::with_capacity(n);
    let mut x = input.to_vec();
    for (li, layer) in params.layers.iter().enumerate() {
        let mut z = Vec::new();
        affine(layer, &x, &mut z);
        xs.push(std::mem::take(&mut x));
        zs.push(z.clone());
        if li + 1 < n {
            for v in z.iter_mut() {
                *v = v.max(0.0);
            }
        } else {
            apply_output_activation(spec.output_activation, &mut z);
        }
        x = z;
    }
    Ok(ForwardTape {
        xs,
        zs,
        output: x,
    })
}

fn backprop_delta(
    params: &MlpParams,
    spec: &MlpSpec,
    tape: &ForwardTape,
    upstream: &[f64],
    mut grads: Option<&mut Gradients>,
) -> Vec<f64> {
    let n = params.layers.len();
    // dL/dz for the output layer.
    let mut delta: Vec<f64> = match spec.output_activation {
        OutputActivation::Identity => upstream.to_vec(),
        OutputActivation::ScaledTanh { scale } => {
            let z = &tape.zs[n - 1];
            upstream
                .iter()
                .zip(z)
                .map(|(u, zi)| {
                    let t = zi.tanh();
                    u * scale * (1.0 - t * t)
                })
                .collect()
        }
    };
    for li in (0..n).rev() {
        let layer = &params.layers[li];
        let x = &tape.xs[li];
        if let Some(g) = grads.as_deref_mut() {
            let gl = &mut g.layers[li];
            for o in 0..layer.out_dim {
                let d = delta[o];
                if d != 0.0 {
                    let row = &mut gl.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (gw, xi) in row.iter_mut().zip(x) {
                        *gw += d * xi;
                    }
                }
                gl.biases[o] += d;
            }
        }
        // dL/dx = W^T delta, accumulated row-wise to stay contiguous.
        let mut dx = vec![0.0; layer.in_dim];
        for o in 0..layer.out_dim {
            let d = delta[o];
            if d != 0.0 {
                let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (dxi, w) in dx.iter_mut().zip(row) {
                    *dxi += d * w;
                }
            }
        }
        if li > 0 {
            // ReLU mask of the previous layer.
            for (dxi, z) in dx.iter_mut().zip(&tape.zs[li - 1]) {
                if *z <= 0.0 {
                    *dxi = 0.0;
                }
            }
        }
        delta = dx;
    }
    delta
}

/// Gradients of `<upstream, output>` w.r.t. every parameter and the input.
pub fn mlp_backward(
    params: &MlpParams,
    spec: &MlpSpec,
    input: &[f64],
    upstream: &[f64],
) -> Result<(Gradients, Vec<f64>)> {
    if upstream.len() != spec.output_dim() {
        return Err(Error::dim(
            "mlp_backward upstream",
            spec.output_dim(),
            upstream.len(),
        ));
    }
    let tape = forward_tape(params, spec, input)?;
    let mut grads = MlpParams::zeros(spec);
    let input_grad = backprop_delta(params, spec, &tape, upstream, Some(&mut grads));
    Ok((grads, input_grad))
}

/// Like [`mlp_backward`] but accumulates into `grads` and also returns the
/// forward output, saving a pass in batch training loops.
pub fn mlp_backward_acc(
    params: &MlpParams,
    spec: &MlpSpec,
    input: &[f64],
    upstream: &[f64],
    grads: &mut Gradients,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let tape = forward_tape(params, spec, input)?;
    let input_grad = backprop_delta(params, spec, &tape, upstream, Some(grads));
    Ok((tape.output, input_grad))
}

/// Input gradient only; parameter gradients are not touched. Used when
/// differentiating through a frozen network (e.g. the critic during actor
/// updates).
pub fn mlp_backward_input(
    params: &MlpParams,
    spec: &MlpSpec,
    input: &[f64],
    upstream: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let tape = forward_tape(params, spec, input)?;
    let input_grad = backprop_delta(params, spec, &tape, upstream, None);
    Ok((tape.output, input_grad))
}

/// Adam optimizer state. Moment shapes mirror the parameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: MlpParams,
    pub v: MlpParams,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(spec: &MlpSpec) -> Self {
        AdamState {
            m: MlpParams::zeros(spec),
            v: MlpParams::zeros(spec),
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One Adam update with bias correction. `lr = 0` is a legal no-op on the
/// parameters (moments and step counter still advance).
pub fn adam_step(
    params: &mut MlpParams,
    grads: &Gradients,
    adam: &mut AdamState,
    lr: f64,
) -> Result<()> {
    if !lr.is_finite() || lr < 0.0 {
        return Err(Error::Config(format!("adam_step lr must be >= 0, got {lr}")));
    }
    if !params.shapes_match(grads) {
        return Err(Error::Config("adam_step: gradient shape mismatch".into()));
    }
    for (li, g) in grads.layers.iter().enumerate() {
        let finite = g.weights.iter().chain(&g.biases).all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite(format!("gradient for layer {li}")));
        }
    }
    adam.t += 1;
    let t = adam.t as f64;
    let bc1 = 1.0 - adam.beta1.powf(t);
    let bc2 = 1.0 - adam.beta2.powf(t);
    for li in 0..params.layers.len() {
        let p = &mut params.layers[li];
        let g = &grads.layers[li];
        let m = &mut adam.m.layers[li];
        let v = &mut adam.v.layers[li];
        let update = |pv: &mut [f64], gv: &[f64], mv: &mut [f64], vv: &mut [f64]| {
            for i in 0..pv.len() {
                mv[i] = adam.beta1 * mv[i] + (1.0 - adam.beta1) * gv[i];
                vv[i] = adam.beta2 * vv[i] + (1.0 - adam.beta2) * gv[i] * gv[i];
                let mhat = mv[i] / bc1;
                let vhat = vv[i] / bc2;
                pv[i] -= lr * mhat / (vhat.sqrt() + adam.eps);
            }
        };
        update(&mut p.weights, &g.weights, &mut m.weights, &mut v.weights);
        update(&mut p.biases, &g.biases, &mut m.biases, &mut v.biases);
    }
    Ok(())
}

// --- checkpoint format ---------------------------------------------------
//
// Little-endian binary:
//   magic    8 bytes  "FOMLP1\0\0"
//   n_sizes  u32
//   sizes    n_sizes * u64
//   hidden   u8 (0 = relu)
//   out_act  u8 (0 = identity, 1 = scaled tanh)
//   scale    f64 (tanh scale; 0 for identity)
//   layers   per layer: weights row-major (out*in * f64), biases (out * f64)

pub const MLP_MAGIC: &[u8; 8] = b"FOMLP1\0\0";

pub fn write_mlp(w: &mut impl Write, spec: &MlpSpec, params: &MlpParams) -> Result<()> {
    w.write_all(MLP_MAGIC)?;
    w.write_all(&(spec.layer_sizes.len() as u32).to_le_bytes())?;
    for &s in &spec.layer_sizes {
        w.write_all(&(s as u64).to_le_bytes())?;
    }
    w.write_all(&[0u8])?;
    let (code, scale) = match spec.output_activation {
        OutputActivation::Identity => (0u8, 0.0),
        OutputActivation::ScaledTanh { scale } => (1u8, scale),
    };
    w.write_all(&[code])?;
    w.write_all(&scale.to_le_bytes())?;
    for l in &params.layers {
        for v in &l.weights {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &l.biases {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_exact_buf(r: &mut impl Read, n: usize) -> Result<Vec<u8>> {
    let mut buf = vec![0u8; n];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    Ok(u32::from_le_bytes(read_exact_buf(r, 4)?.try_into().unwrap()))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    Ok(u64::from_le_bytes(read_exact_buf(r, 8)?.try_into().unwrap()))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_le_bytes(read_exact_buf(r, 8)?.try_into().unwrap()))
}

pub fn read_mlp(r: &mut impl Read) -> Result<(MlpSpec, MlpParams)> {
    let magic = read_exact_buf(r, 8)?;
    if magic != MLP_MAGIC {
        return Err(Error::Checkpoint("bad MLP magic".into()));
    }
    let n_sizes = read_u32(r)? as usize;
    if n_sizes < 2 || n_sizes > 64 {
        return Err(Error::Checkpoint(format!("implausible layer count {n_sizes}")));
    }
    let mut sizes = Vec::with_capacity(n_sizes);
    for _ in 0..n_sizes {
        sizes.push(read_u64(r)? as usize);
    }
    let hidden = read_exact_buf(r, 1)?[0];
    if hidden != 0 {
        return Err(Error::Checkpoint(format!("unknown hidden activation {hidden}")));
    }
    let code = read_exact_buf(r, 1)?[0];
    let scale = read_f64(r)?;
    let act = match code {
        0 => OutputActivation::Identity,
        1 => OutputActivation::ScaledTanh { scale },
        _ => return Err(Error::Checkpoint(format!("unknown output activation {code}"))),
    };
    let spec = MlpSpec::new(sizes, act)?;
    let mut params = MlpParams::zeros(&spec);
    for l in params.layers.iter_mut() {
        for v in l.weights.iter_mut() {
            *v = read_f64(r)?;
        }
        for v in l.biases.iter_mut() {
            *v = read_f64(r)?;
        }
    }
    Ok((spec, params))
}

//! Feedforward `2 → tanh⋯tanh → 3` network with exact derivatives.
//!
//! A forward pass propagates the activations together with their two input
//! tangents, which yields the outputs `y = (p₁, p₂, V)` and the full input
//! Jacobian `∂y/∂x` in one sweep. The backward pass differentiates that whole
//! augmented sweep, so losses that depend on `∇ₓṼ` get exact parameter
//! gradients, second-order terms included.

mod adam;
mod checkpoint;
mod expr;

use std::cell::RefCell;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{Point, QuasipotentialModel};

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT};
pub use expr::{
    loss_gradient, loss_value, CompositeLoss, ExprBuilder, LossTerm, LossValues, NodeId, PointExpr,
    PointSet,
};

pub const INPUT_DIM: usize = 2;
pub const OUTPUT_DIM: usize = 3;

/// Output channel of the scalar quasipotential; channels 0 and 1 are `p`.
pub const V_CHANNEL: usize = 2;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("invalid architecture: {0}")]
    Architecture(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid loss expression: {0}")]
    Expression(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetArchitecture {
    pub input_dim: usize,
    pub hidden_sizes: Vec<usize>,
    pub output_dim: usize,
    pub hidden_activation: String,
    pub output_activation: String,
}

impl Default for NetArchitecture {
    fn default() -> Self {
        Self::with_hidden(vec![20; 4])
    }
}

impl NetArchitecture {
    pub fn with_hidden(hidden_sizes: Vec<usize>) -> Self {
        Self {
            input_dim: INPUT_DIM,
            hidden_sizes,
            output_dim: OUTPUT_DIM,
            hidden_activation: "tanh".to_owned(),
            output_activation: "identity".to_owned(),
        }
    }

    pub fn validate(&self) -> Result<(), NetError> {
        if self.input_dim != INPUT_DIM || self.output_dim != OUTPUT_DIM {
            return Err(NetError::Architecture(format!(
                "expected {INPUT_DIM} inputs and {OUTPUT_DIM} outputs, got {} and {}",
                self.input_dim, self.output_dim
            )));
        }
        if self.hidden_sizes.contains(&0) {
            return Err(NetError::Architecture("empty hidden layer".to_owned()));
        }
        if self.hidden_activation != "tanh" || self.output_activation != "identity" {
            return Err(NetError::Architecture(format!(
                "unsupported activations {}/{}",
                self.hidden_activation, self.output_activation
            )));
        }
        Ok(())
    }

    /// `(fan_out, fan_in)` for every affine layer, output layer last.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut dims = vec![self.input_dim];
        dims.extend(&self.hidden_sizes);
        dims.push(self.output_dim);
        dims.windows(2).map(|w| (w[1], w[0])).collect()
    }

    pub fn num_params(&self) -> usize {
        self.layer_shapes().iter().map(|(o, i)| o * i + o).sum()
    }

    fn widest(&self) -> usize {
        self.hidden_sizes
            .iter()
            .copied()
            .chain([self.input_dim, self.output_dim])
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct LayerSlot {
    pub fan_out: usize,
    pub fan_in: usize,
    pub weights: usize,
    pub bias: usize,
}

fn layout(arch: &NetArchitecture) -> Vec<LayerSlot> {
    let mut offset = 0;
    arch.layer_shapes()
        .into_iter()
        .map(|(fan_out, fan_in)| {
            let slot = LayerSlot {
                fan_out,
                fan_in,
                weights: offset,
                bias: offset + fan_out * fan_in,
            };
            offset += fan_out * fan_in + fan_out;
            slot
        })
        .collect()
}

/// All weights and biases in one flat buffer. Layer `l` stores its
/// `fan_out × fan_in` weight matrix row-major, followed by its bias.
#[derive(Debug, Clone, PartialEq)]
pub struct NetParams {
    arch: NetArchitecture,
    seed: u64,
    slots: Vec<LayerSlot>,
    data: Vec<f64>,
}

/// Parameter gradient, laid out exactly like [`NetParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient(pub Vec<f64>);

impl Gradient {
    pub fn zeros_like(params: &NetParams) -> Self {
        Gradient(vec![0.0; params.data.len()])
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// Glorot-uniform weights, zero biases, drawn from a ChaCha stream keyed by
/// `seed`.
pub fn init_params(arch: &NetArchitecture, seed: u64) -> Result<NetParams, NetError> {
    arch.validate()?;
    let mut params = NetParams::zeros(arch, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for l in 0..params.slots.len() {
        let s = params.slots[l];
        let limit = (6.0 / (s.fan_in + s.fan_out) as f64).sqrt();
        for w in params.weights_mut(l) {
            *w = rng.random_range(-limit..=limit);
        }
    }
    Ok(params)
}

impl NetParams {
    pub fn zeros(arch: &NetArchitecture, seed: u64) -> Result<Self, NetError> {
        arch.validate()?;
        let slots = layout(arch);
        Ok(Self {
            arch: arch.clone(),
            seed,
            slots,
            data: vec![0.0; arch.num_params()],
        })
    }

    /// Assembles parameters from per-layer `(weights, bias)`, weights
    /// row-major.
    pub fn from_layers(
        arch: &NetArchitecture,
        seed: u64,
        layers: &[(Vec<f64>, Vec<f64>)],
    ) -> Result<Self, NetError> {
        let mut params = Self::zeros(arch, seed)?;
        if layers.len() != params.slots.len() {
            return Err(NetError::Shape(format!(
                "expected {} layers, got {}",
                params.slots.len(),
                layers.len()
            )));
        }
        for (l, (w, b)) in layers.iter().enumerate() {
            let s = params.slots[l];
            if w.len() != s.fan_out * s.fan_in || b.len() != s.fan_out {
                return Err(NetError::Shape(format!(
                    "layer {l}: expected {}x{} weights and {} biases, got {} and {}",
                    s.fan_out,
                    s.fan_in,
                    s.fan_out,
                    w.len(),
                    b.len()
                )));
            }
            params.weights_mut(l).copy_from_slice(w);
            params.bias_mut(l).copy_from_slice(b);
        }
        if !params.data.iter().all(|v| v.is_finite()) {
            return Err(NetError::Shape("non-finite parameter".to_owned()));
        }
        Ok(params)
    }

    pub fn architecture(&self) -> &NetArchitecture {
        &self.arch
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn num_layers(&self) -> usize {
        self.slots.len()
    }

    pub fn num_params(&self) -> usize {
        self.data.len()
    }

    /// `(fan_out, fan_in)` of layer `l`.
    pub fn layer_shape(&self, l: usize) -> (usize, usize) {
        (self.slots[l].fan_out, self.slots[l].fan_in)
    }

    pub fn weights(&self, l: usize) -> &[f64] {
        let s = self.slots[l];
        &self.data[s.weights..s.bias]
    }

    pub fn bias(&self, l: usize) -> &[f64] {
        let s = self.slots[l];
        &self.data[s.bias..s.bias + s.fan_out]
    }

    pub fn weights_mut(&mut self, l: usize) -> &mut [f64] {
        let s = self.slots[l];
        &mut self.data[s.weights..s.bias]
    }

    pub fn bias_mut(&mut self, l: usize) -> &mut [f64] {
        let s = self.slots[l];
        &mut self.data[s.bias..s.bias + s.fan_out]
    }

    /// Flat view of every parameter.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Network outputs at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetOutput {
    pub p: Point,
    pub v: f64,
}

/// Scratch buffers for one evaluation; reused across points.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    /// Activations per level, level 0 is the input.
    acts: Vec<Vec<f64>>,
    /// Input tangents of the activations, `[∂/∂x₁, ∂/∂x₂]`.
    tans: Vec<[Vec<f64>; 2]>,
    /// Input tangents of the pre-activations of each hidden level.
    ztans: Vec<[Vec<f64>; 2]>,
    hbar: Vec<f64>,
    dhbar: [Vec<f64>; 2],
    zbar: Vec<f64>,
    dzbar: [Vec<f64>; 2],
}

impl Workspace {
    pub fn new(arch: &NetArchitecture) -> Self {
        let mut ws = Self::default();
        ws.prepare(arch);
        ws
    }

    fn prepare(&mut self, arch: &NetArchitecture) {
        let fits = self.acts.len() == arch.hidden_sizes.len() + 1
            && self.acts[0].len() == arch.input_dim
            && self.acts[1..]
                .iter()
                .zip(&arch.hidden_sizes)
                .all(|(a, &n)| a.len() == n);
        if fits {
            return;
        }
        let mut sizes = vec![arch.input_dim];
        sizes.extend(&arch.hidden_sizes);
        self.acts = sizes.iter().map(|&n| vec![0.0; n]).collect();
        self.tans = sizes
            .iter()
            .map(|&n| [vec![0.0; n], vec![0.0; n]])
            .collect();
        self.ztans = sizes
            .iter()
            .map(|&n| [vec![0.0; n], vec![0.0; n]])
            .collect();
        let w = arch.widest();
        self.hbar = vec![0.0; w];
        self.dhbar = [vec![0.0; w], vec![0.0; w]];
        self.zbar = vec![0.0; w];
        self.dzbar = [vec![0.0; w], vec![0.0; w]];
    }
}

/// Outputs `y` and input Jacobian `jac[i][j] = ∂yᵢ/∂xⱼ`.
pub type Jet = ([f64; OUTPUT_DIM], [[f64; INPUT_DIM]; OUTPUT_DIM]);

fn dot3(row: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> (f64, f64, f64) {
    // four interleaved partial sums per product keep the FMA pipeline busy
    let (mut s0, mut s1, mut s2) = ([0.0; 4], [0.0; 4], [0.0; 4]);
    let n = row.len() / 4 * 4;
    for (((w, a), b), c) in row[..n]
        .chunks_exact(4)
        .zip(a[..n].chunks_exact(4))
        .zip(b[..n].chunks_exact(4))
        .zip(c[..n].chunks_exact(4))
    {
        for j in 0..4 {
            s0[j] += w[j] * a[j];
            s1[j] += w[j] * b[j];
            s2[j] += w[j] * c[j];
        }
    }
    let fold = |s: [f64; 4]| (s[0] + s[1]) + (s[2] + s[3]);
    let (mut r0, mut r1, mut r2) = (fold(s0), fold(s1), fold(s2));
    for k in n..row.len() {
        r0 += row[k] * a[k];
        r1 += row[k] * b[k];
        r2 += row[k] * c[k];
    }
    (r0, r1, r2)
}

/// `g += a·x + b0·t0 + b1·t1`.
fn axpy3(g: &mut [f64], a: f64, x: &[f64], b0: f64, t0: &[f64], b1: f64, t1: &[f64]) {
    for (((g, &x), &t0), &t1) in g.iter_mut().zip(x).zip(t0).zip(t1) {
        *g += a * x + b0 * t0 + b1 * t1;
    }
}

/// Transposed products `(Wᵀa, Wᵀb, Wᵀc)` of a row-major `fan_out × fan_in`
/// matrix, written to `out`.
fn transpose_mul3(
    w: &[f64],
    fan_in: usize,
    a: &[f64],
    b: &[f64],
    c: &[f64],
    out: (&mut [f64], &mut [f64], &mut [f64]),
) {
    let (oa, ob, oc) = out;
    let (oa, ob, oc) = (&mut oa[..fan_in], &mut ob[..fan_in], &mut oc[..fan_in]);
    oa.fill(0.0);
    ob.fill(0.0);
    oc.fill(0.0);
    for (((row, &ai), &bi), &ci) in w.chunks_exact(fan_in).zip(a).zip(b).zip(c) {
        for (((&wik, ha), hb), hc) in row
            .iter()
            .zip(oa.iter_mut())
            .zip(ob.iter_mut())
            .zip(oc.iter_mut())
        {
            *ha += wik * ai;
            *hb += wik * bi;
            *hc += wik * ci;
        }
    }
}

impl NetParams {
    /// Forward sweep with input tangents; leaves everything the backward
    /// sweep needs in `ws`.
    pub fn jet(&self, x: Point, ws: &mut Workspace) -> Jet {
        ws.prepare(&self.arch);
        ws.acts[0].copy_from_slice(&x);
        ws.tans[0][0].copy_from_slice(&[1.0, 0.0]);
        ws.tans[0][1].copy_from_slice(&[0.0, 1.0]);
        let hidden = self.slots.len() - 1;
        for l in 0..hidden {
            let s = self.slots[l];
            let w = &self.data[s.weights..s.bias];
            let b = &self.data[s.bias..s.bias + s.fan_out];
            let (lower, upper) = ws.acts.split_at_mut(l + 1);
            let (tl, tu) = ws.tans.split_at_mut(l + 1);
            let input = &lower[l];
            let [t0, t1] = &tl[l];
            let out = &mut upper[0];
            let [o0, o1] = &mut tu[0];
            let [z0, z1] = &mut ws.ztans[l + 1];
            for i in 0..s.fan_out {
                let row = &w[i * s.fan_in..(i + 1) * s.fan_in];
                let (z, d0, d1) = dot3(row, input, t0, t1);
                let h = (z + b[i]).tanh();
                let slope = 1.0 - h * h;
                out[i] = h;
                z0[i] = d0;
                z1[i] = d1;
                o0[i] = slope * d0;
                o1[i] = slope * d1;
            }
        }
        let s = self.slots[hidden];
        let w = &self.data[s.weights..s.bias];
        let b = &self.data[s.bias..s.bias + s.fan_out];
        let last = &ws.acts[hidden];
        let [t0, t1] = &ws.tans[hidden];
        let mut y = [0.0; OUTPUT_DIM];
        let mut jac = [[0.0; INPUT_DIM]; OUTPUT_DIM];
        for i in 0..OUTPUT_DIM {
            let row = &w[i * s.fan_in..(i + 1) * s.fan_in];
            let (v, d0, d1) = dot3(row, last, t0, t1);
            y[i] = v + b[i];
            jac[i] = [d0, d1];
        }
        (y, jac)
    }

    /// Accumulates into `grad` the parameter gradient of
    /// `⟨ybar, y⟩ + ⟨jbar, ∂y/∂x⟩` at the point of the last [`jet`](Self::jet)
    /// call on `ws`.
    pub fn backward(
        &self,
        ws: &mut Workspace,
        ybar: &[f64; OUTPUT_DIM],
        jbar: &[[f64; INPUT_DIM]; OUTPUT_DIM],
        grad: &mut [f64],
    ) {
        debug_assert_eq!(grad.len(), self.data.len());
        let hidden = self.slots.len() - 1;
        let s = self.slots[hidden];
        let w = &self.data[s.weights..s.bias];
        {
            let last = &ws.acts[hidden];
            let [t0, t1] = &ws.tans[hidden];
            for i in 0..s.fan_out {
                let (a, b0, b1) = (ybar[i], jbar[i][0], jbar[i][1]);
                let g = &mut grad[s.weights + i * s.fan_in..s.weights + (i + 1) * s.fan_in];
                axpy3(g, a, last, b0, t0, b1, t1);
                grad[s.bias + i] += a;
            }
            let jb0: [f64; OUTPUT_DIM] = std::array::from_fn(|i| jbar[i][0]);
            let jb1: [f64; OUTPUT_DIM] = std::array::from_fn(|i| jbar[i][1]);
            let [d0, d1] = &mut ws.dhbar;
            transpose_mul3(w, s.fan_in, ybar, &jb0, &jb1, (&mut ws.hbar, d0, d1));
        }
        for l in (0..hidden).rev() {
            let s = self.slots[l];
            let w = &self.data[s.weights..s.bias];
            let out = &ws.acts[l + 1];
            let [z0, z1] = &ws.ztans[l + 1];
            for i in 0..s.fan_out {
                let h = out[i];
                let slope = 1.0 - h * h;
                let (e0, e1) = (ws.dhbar[0][i], ws.dhbar[1][i]);
                ws.dzbar[0][i] = slope * e0;
                ws.dzbar[1][i] = slope * e1;
                let slope_bar = e0 * z0[i] + e1 * z1[i];
                ws.zbar[i] = (ws.hbar[i] - 2.0 * h * slope_bar) * slope;
            }
            let input = &ws.acts[l];
            let [t0, t1] = &ws.tans[l];
            for i in 0..s.fan_out {
                let (a, b0, b1) = (ws.zbar[i], ws.dzbar[0][i], ws.dzbar[1][i]);
                let g = &mut grad[s.weights + i * s.fan_in..s.weights + (i + 1) * s.fan_in];
                axpy3(g, a, input, b0, t0, b1, t1);
                grad[s.bias + i] += a;
            }
            if l > 0 {
                let n = s.fan_out;
                let [d0, d1] = &mut ws.dhbar;
                transpose_mul3(
                    w,
                    s.fan_in,
                    &ws.zbar[..n],
                    &ws.dzbar[0][..n],
                    &ws.dzbar[1][..n],
                    (&mut ws.hbar, d0, d1),
                );
            }
        }
    }
}

thread_local! {
    static SCRATCH: RefCell<Workspace> = RefCell::new(Workspace::default());
}

fn with_scratch<R>(f: impl FnOnce(&mut Workspace) -> R) -> R {
    SCRATCH.with(|ws| f(&mut ws.borrow_mut()))
}

pub fn forward(params: &NetParams, x: Point) -> NetOutput {
    let (y, _) = with_scratch(|ws| params.jet(x, ws));
    NetOutput {
        p: [y[0], y[1]],
        v: y[V_CHANNEL],
    }
}

/// Jacobian of `(p₁, p₂, V)` with respect to `x`; row 2 is `∇Ṽ`.
pub fn input_jacobian(params: &NetParams, x: Point) -> [[f64; INPUT_DIM]; OUTPUT_DIM] {
    with_scratch(|ws| params.jet(x, ws)).1
}

impl QuasipotentialModel for NetParams {
    fn value(&self, x: Point) -> f64 {
        forward(self, x).v
    }

    fn momentum(&self, x: Point) -> Point {
        forward(self, x).p
    }

    fn gradient(&self, x: Point) -> Point {
        input_jacobian(self, x)[V_CHANNEL]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_point(rng: &mut ChaCha8Rng) -> Point {
        [rng.random_range(-1.5..0.5), rng.random_range(-0.8..0.8)]
    }

    #[test]
    fn init_is_deterministic_with_expected_shapes() {
        let arch = NetArchitecture::default();
        let a = init_params(&arch, 42).unwrap();
        let b = init_params(&arch, 42).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
        let shapes: Vec<_> = (0..a.num_layers()).map(|l| a.layer_shape(l)).collect();
        assert_eq!(shapes, vec![(20, 2), (20, 20), (20, 20), (20, 20), (3, 20)]);
        for l in 0..a.num_layers() {
            assert!(a.bias(l).iter().all(|&b| b == 0.0));
            let (o, i) = a.layer_shape(l);
            let limit = (6.0 / (o + i) as f64).sqrt();
            assert!(a.weights(l).iter().all(|w| w.abs() <= limit));
        }
        assert_ne!(init_params(&arch, 43).unwrap().as_slice(), a.as_slice());
    }

    #[test]
    fn zero_network_outputs_zero() {
        let p = NetParams::zeros(&NetArchitecture::default(), 0).unwrap();
        assert_eq!(
            forward(&p, [0.3, -0.7]),
            NetOutput {
                p: [0.0, 0.0],
                v: 0.0
            }
        );
        assert_eq!(input_jacobian(&p, [0.3, -0.7]), [[0.0; 2]; 3]);
    }

    #[test]
    fn zero_preactivation_passes_output_bias() {
        let arch = NetArchitecture::with_hidden(vec![4]);
        let mut p = init_params(&arch, 1).unwrap();
        p.weights_mut(0).fill(0.0);
        p.bias_mut(1).copy_from_slice(&[0.5, -1.0, 2.0]);
        let out = forward(&p, [0.9, 0.1]);
        assert_eq!(
            out,
            NetOutput {
                p: [0.5, -1.0],
                v: 2.0
            }
        );
    }

    #[test]
    fn outputs_respect_tanh_bound() {
        let arch = NetArchitecture::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..10 {
            let p = init_params(&arch, seed).unwrap();
            let last = p.num_layers() - 1;
            let (_, fan_in) = p.layer_shape(last);
            let x = random_point(&mut rng);
            let y = forward(&p, x);
            for (i, value) in [y.p[0], y.p[1], y.v].into_iter().enumerate() {
                let row = &p.weights(last)[i * fan_in..(i + 1) * fan_in];
                let bound: f64 = row.iter().map(|w| w.abs()).sum::<f64>() + p.bias(last)[i].abs();
                assert!(value.is_finite() && value.abs() <= bound);
            }
        }
    }

    fn fd_input_jacobian(p: &NetParams, x: Point, h: f64) -> [[f64; 2]; 3] {
        let mut jac = [[0.0; 2]; 3];
        for j in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let (a, b) = (forward(p, xp), forward(p, xm));
            let (ya, yb) = ([a.p[0], a.p[1], a.v], [b.p[0], b.p[1], b.v]);
            for i in 0..3 {
                jac[i][j] = (ya[i] - yb[i]) / (2.0 * h);
            }
        }
        jac
    }

    #[test]
    fn input_jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let arch = NetArchitecture::default();
        for case in 0..100 {
            let p = init_params(&arch, case).unwrap();
            let x = random_point(&mut rng);
            let exact = input_jacobian(&p, x);
            let approx = fd_input_jacobian(&p, x, 1e-5);
            for i in 0..3 {
                for j in 0..2 {
                    let scale = exact[i][j].abs().max(1e-2);
                    assert!(
                        (exact[i][j] - approx[i][j]).abs() / scale <= 1e-6,
                        "case {case} entry ({i},{j}): {} vs {}",
                        exact[i][j],
                        approx[i][j]
                    );
                }
            }
        }
    }

    #[test]
    fn small_weights_give_product_of_weight_matrices() {
        let arch = NetArchitecture::with_hidden(vec![5]);
        let mut p = init_params(&arch, 3).unwrap();
        for w in p.as_mut_slice() {
            *w *= 1e-4;
        }
        let jac = input_jacobian(&p, [0.2, -0.1]);
        let (w1, w2) = (p.weights(0), p.weights(1));
        for i in 0..3 {
            for j in 0..2 {
                let prod: f64 = (0..5).map(|k| w2[i * 5 + k] * w1[k * 2 + j]).sum();
                assert!((jac[i][j] - prod).abs() <= 1e-6 * prod.abs());
            }
        }
    }

    #[test]
    fn zero_output_layer_gives_zero_jacobian() {
        let arch = NetArchitecture::default();
        let mut p = init_params(&arch, 8).unwrap();
        let last = p.num_layers() - 1;
        p.weights_mut(last).fill(0.0);
        assert_eq!(input_jacobian(&p, [-0.4, 0.3]), [[0.0; 2]; 3]);
    }

    #[test]
    fn from_layers_rejects_bad_shapes() {
        let arch = NetArchitecture::with_hidden(vec![2]);
        let ok = vec![(vec![0.0; 4], vec![0.0; 2]), (vec![0.0; 6], vec![0.0; 3])];
        assert!(NetParams::from_layers(&arch, 0, &ok).is_ok());
        let bad = vec![(vec![0.0; 4], vec![0.0; 2]), (vec![0.0; 5], vec![0.0; 3])];
        assert!(matches!(
            NetParams::from_layers(&arch, 0, &bad),
            Err(NetError::Shape(_))
        ));
        assert!(NetArchitecture::with_hidden(vec![0]).validate().is_err());
    }
}

//! Two-layer tanh multilayer perceptron with exact reverse-mode gradients.
//!
//! The network is `f(x) = W2 · tanh(W1 · x + b1) + b2` with a linear output
//! head. Parameters live in flat row-major buffers; all arithmetic is `f64`.
//! Forward and backward passes are pure functions of the parameter value, so
//! values can be shared read-only across threads.

use crate::error::{Error, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Parameters of a two-layer perceptron.
///
/// `w1` is `hidden × d_in` row-major, `w2` is `d_out × hidden` row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    /// Input dimension.
    pub d_in: usize,
    /// Hidden width.
    pub hidden: usize,
    /// Output dimension.
    pub d_out: usize,
    /// First-layer weights, `hidden × d_in` row-major.
    pub w1: Vec<f64>,
    /// First-layer biases, length `hidden`.
    pub b1: Vec<f64>,
    /// Second-layer weights, `d_out × hidden` row-major.
    pub w2: Vec<f64>,
    /// Second-layer biases, length `d_out`.
    pub b2: Vec<f64>,
}

/// Parameter-shaped gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    /// Gradient w.r.t. `w1`.
    pub w1: Vec<f64>,
    /// Gradient w.r.t. `b1`.
    pub b1: Vec<f64>,
    /// Gradient w.r.t. `w2`.
    pub w2: Vec<f64>,
    /// Gradient w.r.t. `b2`.
    pub b2: Vec<f64>,
}

impl MlpParams {
    /// Number of scalar parameters.
    pub fn len(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// True when the network has no parameters (never for valid dims).
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flatten all parameters into one vector (w1, b1, w2, b2 order).
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.w1);
        v.extend_from_slice(&self.b1);
        v.extend_from_slice(&self.w2);
        v.extend_from_slice(&self.b2);
        v
    }

    /// Rebuild parameters from a flat vector produced by [`MlpParams::to_flat`].
    pub fn from_flat(&self, flat: &[f64]) -> Result<MlpParams> {
        if flat.len() != self.len() {
            return Err(Error::invalid(format!(
                "flat parameter vector has length {}, expected {}",
                flat.len(),
                self.len()
            )));
        }
        let mut p = self.clone();
        let (a, rest) = flat.split_at(p.w1.len());
        let (b, rest) = rest.split_at(p.b1.len());
        let (c, d) = rest.split_at(p.w2.len());
        p.w1.copy_from_slice(a);
        p.b1.copy_from_slice(b);
        p.w2.copy_from_slice(c);
        p.b2.copy_from_slice(d);
        Ok(p)
    }
}

impl Gradient {
    /// Zero gradient with shapes matching `params`.
    pub fn zeros_like(params: &MlpParams) -> Self {
        Gradient {
            w1: vec![0.0; params.w1.len()],
            b1: vec![0.0; params.b1.len()],
            w2: vec![0.0; params.w2.len()],
            b2: vec![0.0; params.b2.len()],
        }
    }

    /// Elementwise sum with another gradient of identical shape.
    pub fn add(&mut self, other: &Gradient) {
        for (a, b) in self.w1.iter_mut().zip(&other.w1) {
            *a += b;
        }
        for (a, b) in self.b1.iter_mut().zip(&other.b1) {
            *a += b;
        }
        for (a, b) in self.w2.iter_mut().zip(&other.w2) {
            *a += b;
        }
        for (a, b) in self.b2.iter_mut().zip(&other.b2) {
            *a += b;
        }
    }

    /// Flatten in the same order as [`MlpParams::to_flat`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len());
        v.extend_from_slice(&self.w1);
        v.extend_from_slice(&self.b1);
        v.extend_from_slice(&self.w2);
        v.extend_from_slice(&self.b2);
        v
    }
}

/// Initialize a two-layer perceptron.
///
/// Weights are drawn uniformly from `±1/√fan_in`; biases start at zero.
/// The draw order is fixed (w1 row-major, then w2 row-major), so a given
/// seed always produces the same network.
pub fn init_mlp(d_in: usize, hidden: usize, d_out: usize, seed: u64) -> Result<MlpParams> {
    if d_in == 0 || hidden == 0 || d_out == 0 {
        return Err(Error::invalid(format!(
            "network dimensions must be positive, got {d_in}-{hidden}-{d_out}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s1 = 1.0 / (d_in as f64).sqrt();
    let s2 = 1.0 / (hidden as f64).sqrt();
    let w1 = (0..hidden * d_in).map(|_| rng.gen_range(-s1..s1)).collect();
    let w2 = (0..d_out * hidden).map(|_| rng.gen_range(-s2..s2)).collect();
    Ok(MlpParams {
        d_in,
        hidden,
        d_out,
        w1,
        b1: vec![0.0; hidden],
        w2,
        b2: vec![0.0; d_out],
    })
}

fn check_batch(params: &MlpParams, xs: &[f64]) -> Result<usize> {
    if params.d_in == 0 || xs.len() % params.d_in != 0 {
        return Err(Error::invalid(format!(
            "batch length {} is not a multiple of input dimension {}",
            xs.len(),
            params.d_in
        )));
    }
    Ok(xs.len() / params.d_in)
}

/// Forward pass over a batch.
///
/// `xs` holds `n` points of dimension `d_in` row-major; the result holds
/// `n` outputs of dimension `d_out` row-major. An empty batch yields an
/// empty output.
pub fn mlp_forward(params: &MlpParams, xs: &[f64]) -> Result<Vec<f64>> {
    let n = check_batch(params, xs)?;
    let mut out = vec![0.0; n * params.d_out];
    let mut h = vec![0.0; params.hidden];
    for i in 0..n {
        let x = &xs[i * params.d_in..(i + 1) * params.d_in];
        forward_one(params, x, &mut h, &mut out[i * params.d_out..(i + 1) * params.d_out]);
    }
    Ok(out)
}

#[inline]
fn forward_one(params: &MlpParams, x: &[f64], h: &mut [f64], out: &mut [f64]) {
    for j in 0..params.hidden {
        let row = &params.w1[j * params.d_in..(j + 1) * params.d_in];
        let mut z = params.b1[j];
        for (w, xv) in row.iter().zip(x) {
            z += w * xv;
        }
        h[j] = z.tanh();
    }
    for o in 0..params.d_out {
        let row = &params.w2[o * params.hidden..(o + 1) * params.hidden];
        let mut z = params.b2[o];
        for (w, hv) in row.iter().zip(h.iter()) {
            z += w * hv;
        }
        out[o] = z;
    }
}

/// Weighted batch gradient: `∇_θ Σᵢ wᵢ · gᵢᵀ f(xᵢ)`.
///
/// `upstream` holds one `d_out`-vector per sample (row-major); `weights`
/// holds one scalar per sample. The result matches central finite
/// differences of the weighted sum to high accuracy and is additive over
/// batches. An empty batch yields the zero gradient.
pub fn mlp_backward(
    params: &MlpParams,
    xs: &[f64],
    weights: &[f64],
    upstream: &[f64],
) -> Result<Gradient> {
    let n = check_batch(params, xs)?;
    if weights.len() != n {
        return Err(Error::invalid(format!(
            "got {} sample weights for a batch of {n}",
            weights.len()
        )));
    }
    if upstream.len() != n * params.d_out {
        return Err(Error::invalid(format!(
            "upstream gradient length {} does not match batch {n} × output {}",
            upstream.len(),
            params.d_out
        )));
    }
    let mut grad = Gradient::zeros_like(params);
    let mut h = vec![0.0; params.hidden];
    let mut out = vec![0.0; params.d_out];
    let mut dh = vec![0.0; params.hidden];
    for i in 0..n {
        let x = &xs[i * params.d_in..(i + 1) * params.d_in];
        forward_one(params, x, &mut h, &mut out);
        let g = &upstream[i * params.d_out..(i + 1) * params.d_out];
        let w = weights[i];
        // Output layer: d/dw2[o][j] = w * g[o] * h[j]; d/db2[o] = w * g[o].
        for o in 0..params.d_out {
            let go = w * g[o];
            grad.b2[o] += go;
            let row = &mut grad.w2[o * params.hidden..(o + 1) * params.hidden];
            for (gw, hv) in row.iter_mut().zip(h.iter()) {
                *gw += go * hv;
            }
        }
        // Hidden layer: dh[j] = (Σ_o w g[o] w2[o][j]) · (1 − h[j]²).
        for j in 0..params.hidden {
            let mut e = 0.0;
            for o in 0..params.d_out {
                e += w * g[o] * params.w2[o * params.hidden + j];
            }
            dh[j] = e * (1.0 - h[j] * h[j]);
        }
        for j in 0..params.hidden {
            grad.b1[j] += dh[j];
            let row = &mut grad.w1[j * params.d_in..(j + 1) * params.d_in];
            for (gw, xv) in row.iter_mut().zip(x) {
                *gw += dh[j] * xv;
            }
        }
    }
    Ok(grad)
}

/// One gradient-descent step with optional weight decay:
/// `θ' = (1 − η·decay)·θ − η·grad`.
pub fn sgd_step(
    params: &MlpParams,
    grad: &Gradient,
    eta: f64,
    weight_decay: f64,
) -> Result<MlpParams> {
    if !(eta > 0.0) {
        return Err(Error::invalid(format!("step size must be positive, got {eta}")));
    }
    if weight_decay < 0.0 {
        return Err(Error::invalid(format!(
            "weight decay must be nonnegative, got {weight_decay}"
        )));
    }
    let shrink = 1.0 - eta * weight_decay;
    let step = |p: &[f64], g: &[f64]| -> Vec<f64> {
        p.iter().zip(g).map(|(pv, gv)| shrink * pv - eta * gv).collect()
    };
    Ok(MlpParams {
        d_in: params.d_in,
        hidden: params.hidden,
        d_out: params.d_out,
        w1: step(&params.w1, &grad.w1),
        b1: step(&params.b1, &grad.b1),
        w2: step(&params.w2, &grad.w2),
        b2: step(&params.b2, &grad.b2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small_net(seed: u64) -> MlpParams {
        init_mlp(2, 5, 1, seed).unwrap()
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = init_mlp(3, 8, 2, 42).unwrap();
        let b = init_mlp(3, 8, 2, 42).unwrap();
        assert_eq!(a, b);
        let s1 = 1.0 / 3f64.sqrt();
        assert!(a.w1.iter().all(|w| w.abs() < s1));
        assert!(a.b1.iter().all(|&b| b == 0.0) && a.b2.iter().all(|&b| b == 0.0));
        let c = init_mlp(3, 8, 2, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_rejects_zero_dims() {
        assert!(init_mlp(0, 4, 1, 0).is_err());
        assert!(init_mlp(2, 0, 1, 0).is_err());
        assert!(init_mlp(2, 4, 0, 0).is_err());
    }

    #[test]
    fn forward_empty_batch() {
        let p = small_net(1);
        assert!(mlp_forward(&p, &[]).unwrap().is_empty());
    }

    #[test]
    fn forward_rejects_ragged_batch() {
        let p = small_net(1);
        assert!(mlp_forward(&p, &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn backward_empty_batch_is_zero() {
        let p = small_net(2);
        let g = mlp_backward(&p, &[], &[], &[]).unwrap();
        assert!(g.to_flat().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_weight_linearity() {
        // One sample duplicated with weights (0.3, 0.7) equals the sample at weight 1.
        let p = small_net(3);
        let x = [0.4, -1.2];
        let dup = [0.4, -1.2, 0.4, -1.2];
        let once = mlp_backward(&p, &x, &[1.0], &[2.5]).unwrap();
        let twice = mlp_backward(&p, &dup, &[0.3, 0.7], &[2.5, 2.5]).unwrap();
        for (a, b) in once.to_flat().iter().zip(twice.to_flat()) {
            assert_relative_eq!(a, &b, max_relative = 1e-12);
        }
    }

    #[test]
    fn backward_additive_over_batches() {
        let p = init_mlp(3, 6, 2, 7).unwrap();
        let xs: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin()).collect();
        let ws = [0.5, -1.0, 2.0, 0.25];
        let gs: Vec<f64> = (0..8).map(|i| (i as f64 * 0.11).cos()).collect();
        let full = mlp_backward(&p, &xs, &ws, &gs).unwrap();
        let ga = mlp_backward(&p, &xs[..6], &ws[..2], &gs[..4]).unwrap();
        let mut gb = mlp_backward(&p, &xs[6..], &ws[2..], &gs[4..]).unwrap();
        gb.add(&ga);
        for (a, b) in full.to_flat().iter().zip(gb.to_flat()) {
            assert_relative_eq!(a, &b, max_relative = 1e-12, epsilon = 1e-15);
        }
    }

    /// Central-difference oracle for `Σᵢ wᵢ gᵢᵀ f(xᵢ)` over every parameter.
    fn finite_difference(p: &MlpParams, xs: &[f64], ws: &[f64], gs: &[f64]) -> Vec<f64> {
        let flat = p.to_flat();
        let eps = 1e-5;
        let objective = |theta: &[f64]| -> f64 {
            let q = p.from_flat(theta).unwrap();
            let out = mlp_forward(&q, xs).unwrap();
            let n = ws.len();
            let mut s = 0.0;
            for i in 0..n {
                for o in 0..q.d_out {
                    s += ws[i] * gs[i * q.d_out + o] * out[i * q.d_out + o];
                }
            }
            s
        };
        (0..flat.len())
            .map(|k| {
                let mut plus = flat.clone();
                let mut minus = flat.clone();
                plus[k] += eps;
                minus[k] -= eps;
                (objective(&plus) - objective(&minus)) / (2.0 * eps)
            })
            .collect()
    }

    #[test]
    fn backward_matches_finite_differences() {
        // 20 random (net, batch) instances; max relative error < 1e-5.
        for seed in 0..20u64 {
            let d_in = 1 + (seed as usize % 3);
            let d_out = 1 + (seed as usize % 2);
            let p = init_mlp(d_in, 4 + (seed as usize % 5), d_out, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
            let n = 1 + (seed as usize % 4);
            let xs: Vec<f64> = (0..n * d_in).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let ws: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let gs: Vec<f64> = (0..n * d_out).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let analytic = mlp_backward(&p, &xs, &ws, &gs).unwrap().to_flat();
            let numeric = finite_difference(&p, &xs, &ws, &gs);
            for (a, b) in analytic.iter().zip(&numeric) {
                let scale = a.abs().max(b.abs()).max(1e-8);
                assert!(
                    (a - b).abs() / scale < 1e-5,
                    "seed {seed}: analytic {a} vs numeric {b}"
                );
            }
        }
    }

    #[test]
    fn sgd_step_arithmetic() {
        // θ=1, grad=2, η=0.1, decay=0 → 0.8; θ=1, grad=0, η=0.1, decay=0.1 → 0.99.
        let mut p = small_net(4);
        p.w1[0] = 1.0;
        let mut g = Gradient::zeros_like(&p);
        g.w1[0] = 2.0;
        let stepped = sgd_step(&p, &g, 0.1, 0.0).unwrap();
        assert_relative_eq!(stepped.w1[0], 0.8, max_relative = 1e-12);
        let decayed = sgd_step(&p, &Gradient::zeros_like(&p), 0.1, 0.1).unwrap();
        assert_relative_eq!(decayed.w1[0], 0.99, max_relative = 1e-12);
    }

    #[test]
    fn sgd_step_zero_grad_zero_decay_is_identity() {
        let p = small_net(5);
        let q = sgd_step(&p, &Gradient::zeros_like(&p), 0.5, 0.0).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn sgd_step_rejects_bad_eta() {
        let p = small_net(6);
        let g = Gradient::zeros_like(&p);
        assert!(sgd_step(&p, &g, 0.0, 0.0).is_err());
        assert!(sgd_step(&p, &g, -1.0, 0.0).is_err());
        assert!(sgd_step(&p, &g, 0.1, -0.5).is_err());
    }
}

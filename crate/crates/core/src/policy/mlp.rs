//! MLP-parameterized Gaussian policy with hand-rolled reverse-mode gradients.
//!
//! The network maps a state `x ∈ R^D` through ReLU hidden layers to an
//! output of length `2D`, split into `(z1, z2)`. The action mean is a
//! centered moving average of `z1` (window shrinks at the edges) and the
//! std is `softplus(z2)` floored at `min_std`. The flat parameter layout is
//! weights then biases, layer by layer, row-major, so θ checkpoints are
//! portable.

use nalgebra::DVector;
use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::policy::{diag_gaussian_log_density, Policy};
use crate::rng::{substream, StreamDomain};

/// Numerically stable `ln(1 + e^z)`; strictly positive and monotone.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Stable logistic function, the derivative of [`softplus`].
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Centered moving average with an odd window; at the boundaries the window
/// shrinks to the entries that exist.
pub fn moving_average(z: &DVector<f64>, window: usize) -> Result<DVector<f64>> {
    if window == 0 || window % 2 == 0 {
        return Err(Error::Config(format!(
            "moving-average window must be odd and positive, got {window}"
        )));
    }
    let n = z.len();
    let r = window / 2;
    Ok(DVector::from_fn(n, |i, _| {
        let lo = i.saturating_sub(r);
        let hi = (i + r).min(n - 1);
        let mut acc = 0.0;
        for j in lo..=hi {
            acc += z[j];
        }
        acc / (hi - lo + 1) as f64
    }))
}

/// Adjoint of the moving-average map: `out[j] += Σ_{i: j ∈ W_i} v[i]/|W_i|`.
fn moving_average_transpose_into(v: &[f64], window: usize, out: &mut [f64]) {
    let n = v.len();
    let r = window / 2;
    for i in 0..n {
        let lo = i.saturating_sub(r);
        let hi = (i + r).min(n - 1);
        let w = 1.0 / (hi - lo + 1) as f64;
        for j in lo..=hi {
            out[j] += v[i] * w;
        }
    }
}

/// Feed-forward Gaussian policy.
pub struct MlpPolicy {
    /// `[D, hidden..., 2D]`
    layer_sizes: Vec<usize>,
    theta: Vec<f64>,
    min_std: f64,
    ma_window: usize,
    /// Byte offsets of each layer's (weights, biases) block in `theta`.
    offsets: Vec<(usize, usize)>,
}

impl MlpPolicy {
    /// Zero-initialized policy; use [`MlpPolicy::random_init`] for training.
    pub fn new(state_dim: usize, hidden: &[usize], min_std: f64, ma_window: usize) -> Result<Self> {
        if state_dim == 0 {
            return Err(Error::Config("state dimension must be positive".into()));
        }
        if hidden.iter().any(|&h| h == 0) {
            return Err(Error::Config("hidden layer sizes must be positive".into()));
        }
        if !(min_std > 0.0) {
            return Err(Error::Config(format!(
                "min_std must be positive, got {min_std}"
            )));
        }
        if ma_window == 0 || ma_window % 2 == 0 {
            return Err(Error::Config(format!(
                "moving-average window must be odd, got {ma_window}"
            )));
        }
        let mut layer_sizes = Vec::with_capacity(hidden.len() + 2);
        layer_sizes.push(state_dim);
        layer_sizes.extend_from_slice(hidden);
        layer_sizes.push(2 * state_dim);

        let mut offsets = Vec::new();
        let mut cursor = 0;
        for l in 0..layer_sizes.len() - 1 {
            let (n_in, n_out) = (layer_sizes[l], layer_sizes[l + 1]);
            offsets.push((cursor, cursor + n_in * n_out));
            cursor += n_in * n_out + n_out;
        }
        Ok(Self {
            layer_sizes,
            theta: vec![0.0; cursor],
            min_std,
            ma_window,
            offsets,
        })
    }

    /// Uniform fan-based initialization `U(±√(6/(n_in+n_out)))`, biases zero.
    pub fn random_init(
        state_dim: usize,
        hidden: &[usize],
        min_std: f64,
        ma_window: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut policy = Self::new(state_dim, hidden, min_std, ma_window)?;
        let mut rng = substream(seed, StreamDomain::PolicyInit, 0);
        for l in 0..policy.layer_count() {
            let (n_in, n_out) = policy.layer_dims(l);
            let bound = (6.0 / (n_in + n_out) as f64).sqrt();
            let (w_start, b_start) = policy.offsets[l];
            for w in &mut policy.theta[w_start..b_start] {
                *w = rng.random_range(-bound..bound);
            }
        }
        Ok(policy)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn min_std(&self) -> f64 {
        self.min_std
    }

    pub fn ma_window(&self) -> usize {
        self.ma_window
    }

    fn layer_count(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    fn layer_dims(&self, l: usize) -> (usize, usize) {
        (self.layer_sizes[l], self.layer_sizes[l + 1])
    }

    fn weights(&self, l: usize) -> &[f64] {
        let (w, b) = self.offsets[l];
        &self.theta[w..b]
    }

    fn biases(&self, l: usize) -> &[f64] {
        let (_, b) = self.offsets[l];
        let (_, n_out) = self.layer_dims(l);
        &self.theta[b..b + n_out]
    }

    /// Dense forward pass; ReLU on hidden layers, linear output. Returns the
    /// post-activation of every layer (entry 0 is the input itself).
    fn forward_activations(&self, x: &DVector<f64>) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layer_count() + 1);
        acts.push(x.iter().copied().collect::<Vec<f64>>());
        for l in 0..self.layer_count() {
            let (n_in, n_out) = self.layer_dims(l);
            let w = self.weights(l);
            let b = self.biases(l);
            let input = &acts[l];
            let mut out = vec![0.0; n_out];
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                let mut acc = b[o];
                for i in 0..n_in {
                    acc += row[i] * input[i];
                }
                // Hidden layers are rectified; the output layer is linear.
                out[o] = if l + 1 < self.layer_count() && acc < 0.0 {
                    0.0
                } else {
                    acc
                };
            }
            acts.push(out);
        }
        acts
    }

    /// Raw network heads `(z1, z2)` before the mean/std transforms.
    pub fn forward(&self, x: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let acts = self.forward_activations(x);
        let out = acts.last().unwrap();
        let d = self.state_dim();
        (
            DVector::from_row_slice(&out[..d]),
            DVector::from_row_slice(&out[d..]),
        )
    }

    /// Action distribution parameters at state `x`.
    pub fn mean_std(&self, x: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let (z1, z2) = self.forward(x);
        let mean = moving_average(&z1, self.ma_window).expect("window validated at construction");
        let std = z2.map(|z| softplus(z).max(self.min_std));
        (mean, std)
    }
}

/// Checked forward pass returning the raw heads `(z1, z2)`.
pub fn mlp_forward(policy: &MlpPolicy, x: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
    if x.len() != policy.state_dim() {
        return Err(Error::ShapeMismatch {
            context: "mlp_forward",
            expected: policy.state_dim(),
            got: x.len(),
        });
    }
    Ok(policy.forward(x))
}

impl Policy for MlpPolicy {
    fn state_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    fn param_len(&self) -> usize {
        self.theta.len()
    }

    fn params(&self) -> &[f64] {
        &self.theta
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    fn sample_action(&self, x: &DVector<f64>, rng: &mut dyn RngCore) -> DVector<f64> {
        let (mean, std) = self.mean_std(x);
        DVector::from_fn(mean.len(), |i, _| {
            let z: f64 = StandardNormal.sample(rng);
            mean[i] + std[i] * z
        })
    }

    fn log_density(&self, x: &DVector<f64>, a: &DVector<f64>) -> f64 {
        let (mean, std) = self.mean_std(x);
        diag_gaussian_log_density(&mean, &std, a)
    }

    fn accumulate_grad_log_density(
        &self,
        x: &DVector<f64>,
        a: &DVector<f64>,
        scale: f64,
        acc: &mut [f64],
    ) {
        debug_assert_eq!(acc.len(), self.theta.len());
        let d = self.state_dim();
        let acts = self.forward_activations(x);
        let out = acts.last().unwrap();

        let mean = {
            let z1 = DVector::from_row_slice(&out[..d]);
            moving_average(&z1, self.ma_window).expect("window validated at construction")
        };

        // Head adjoints: d ln π / d mean_i and d ln π / d std_i, then pulled
        // back through the moving average and the floored softplus.
        let mut delta = vec![0.0; 2 * d];
        let mut d_mean = vec![0.0; d];
        for i in 0..d {
            let z2 = out[d + i];
            let sp = softplus(z2);
            let std = sp.max(self.min_std);
            let resid = a[i] - mean[i];
            let inv_var = 1.0 / (std * std);
            d_mean[i] = resid * inv_var;
            if sp > self.min_std {
                let d_std = resid * resid * inv_var / std - 1.0 / std;
                delta[d + i] = d_std * sigmoid(z2);
            }
        }
        moving_average_transpose_into(&d_mean, self.ma_window, &mut delta[..d]);

        // Standard reverse sweep over the dense layers.
        for l in (0..self.layer_count()).rev() {
            let (n_in, n_out) = self.layer_dims(l);
            let (w_start, b_start) = self.offsets[l];
            let input = &acts[l];
            let w = self.weights(l);

            let mut prev = vec![0.0; n_in];
            for o in 0..n_out {
                let g = delta[o];
                if g == 0.0 {
                    continue;
                }
                let row = &w[o * n_in..(o + 1) * n_in];
                let acc_row = &mut acc[w_start + o * n_in..w_start + (o + 1) * n_in];
                for i in 0..n_in {
                    acc_row[i] += scale * g * input[i];
                    prev[i] += g * row[i];
                }
                acc[b_start + o] += scale * g;
            }
            if l > 0 {
                // ReLU mask: the stored activation is zero exactly where the
                // unit was clamped.
                for i in 0..n_in {
                    if acts[l][i] == 0.0 {
                        prev[i] = 0.0;
                    }
                }
            }
            delta = prev;
        }
    }
}

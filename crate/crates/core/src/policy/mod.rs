//! Gaussian action-selection rules π_θ(·|x).
//!
//! Three families share one interface: two affine-analytic policies with
//! closed-form score functions, and an MLP-parameterized policy whose score
//! is accumulated by hand-rolled reverse-mode differentiation. Policies are
//! immutable value objects during rollout; the trainer holds the single
//! mutable copy and touches it only through [`Policy::params_mut`].

mod affine;
mod mlp;

pub use affine::{AffinePolicyI, AffinePolicyII};
pub use mlp::{mlp_forward, moving_average, softplus, MlpPolicy};

use nalgebra::DVector;
use rand::RngCore;

use crate::error::Result;

/// A parameterized Gaussian policy over actions.
///
/// `log_density` and `grad_log_density` require a nondegenerate action
/// covariance; constructors guarantee this except for [`AffinePolicyII`]
/// with `sigma = 0`, which is valid for chain simulation only. Call
/// [`Policy::check_trainable`] before differentiating.
pub trait Policy: Send + Sync {
    /// Dimension of states and actions.
    fn state_dim(&self) -> usize;

    /// Length of the flat trainable parameter vector θ.
    fn param_len(&self) -> usize;

    /// Flat view of θ.
    fn params(&self) -> &[f64];

    /// Mutable flat view of θ (the trainer's update path).
    fn params_mut(&mut self) -> &mut [f64];

    /// Err when the policy cannot be differentiated (degenerate covariance).
    fn check_trainable(&self) -> Result<()> {
        Ok(())
    }

    /// Draws `a ~ π_θ(·|x)` as `mean(x) + L·u` with `u` standard normal.
    fn sample_action(&self, x: &DVector<f64>, rng: &mut dyn RngCore) -> DVector<f64>;

    /// Exact Gaussian log-density of `a` under `π_θ(·|x)`.
    fn log_density(&self, x: &DVector<f64>, a: &DVector<f64>) -> f64;

    /// Gradient of [`Policy::log_density`] with respect to θ.
    fn grad_log_density(&self, x: &DVector<f64>, a: &DVector<f64>) -> DVector<f64> {
        let mut acc = vec![0.0; self.param_len()];
        self.accumulate_grad_log_density(x, a, 1.0, &mut acc);
        DVector::from_vec(acc)
    }

    /// `acc += scale * ∇_θ ln π_θ(a|x)`, avoiding a temporary per call.
    fn accumulate_grad_log_density(
        &self,
        x: &DVector<f64>,
        a: &DVector<f64>,
        scale: f64,
        acc: &mut [f64],
    );
}

/// Log-density of a diagonal Gaussian, shared by the concrete families.
pub(crate) fn diag_gaussian_log_density(
    mean: &DVector<f64>,
    std: &DVector<f64>,
    a: &DVector<f64>,
) -> f64 {
    const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
    let mut acc = 0.0;
    for i in 0..a.len() {
        let z = (a[i] - mean[i]) / std[i];
        acc -= HALF_LN_2PI + std[i].ln() + 0.5 * z * z;
    }
    acc
}

/// Owned policy of any family; the concrete type carries its architecture,
/// which checkpointing and config loading need at runtime.
pub enum AnyPolicy {
    AffineI(AffinePolicyI),
    AffineII(AffinePolicyII),
    Mlp(MlpPolicy),
}

impl AnyPolicy {
    pub fn as_policy(&self) -> &dyn Policy {
        match self {
            AnyPolicy::AffineI(p) => p,
            AnyPolicy::AffineII(p) => p,
            AnyPolicy::Mlp(p) => p,
        }
    }

    pub fn as_policy_mut(&mut self) -> &mut dyn Policy {
        match self {
            AnyPolicy::AffineI(p) => p,
            AnyPolicy::AffineII(p) => p,
            AnyPolicy::Mlp(p) => p,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            AnyPolicy::AffineI(_) => "affine-i",
            AnyPolicy::AffineII(_) => "affine-ii",
            AnyPolicy::Mlp(_) => "mlp",
        }
    }
}

impl Policy for AnyPolicy {
    fn state_dim(&self) -> usize {
        self.as_policy().state_dim()
    }

    fn param_len(&self) -> usize {
        self.as_policy().param_len()
    }

    fn params(&self) -> &[f64] {
        self.as_policy().params()
    }

    fn params_mut(&mut self) -> &mut [f64] {
        self.as_policy_mut().params_mut()
    }

    fn check_trainable(&self) -> Result<()> {
        self.as_policy().check_trainable()
    }

    fn sample_action(&self, x: &DVector<f64>, rng: &mut dyn RngCore) -> DVector<f64> {
        self.as_policy().sample_action(x, rng)
    }

    fn log_density(&self, x: &DVector<f64>, a: &DVector<f64>) -> f64 {
        self.as_policy().log_density(x, a)
    }

    fn grad_log_density(&self, x: &DVector<f64>, a: &DVector<f64>) -> DVector<f64> {
        self.as_policy().grad_log_density(x, a)
    }

    fn accumulate_grad_log_density(
        &self,
        x: &DVector<f64>,
        a: &DVector<f64>,
        scale: f64,
        acc: &mut [f64],
    ) {
        self.as_policy().accumulate_grad_log_density(x, a, scale, acc)
    }
}

//! The two affine-analytic policy families for linear problems.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::norm_i_minus;
use crate::policy::{diag_gaussian_log_density, Policy};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Policy `π_θ(·|x) = N(θ − x, Σ)` with a pre-selected SPD covariance.
///
/// The induced chain `x_{t+1} = x_t + a_t` is distributed `N(θ, Σ)` from the
/// first step on, so θ is itself the stationary mean.
pub struct AffinePolicyI {
    theta: DVector<f64>,
    sigma: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    l_factor: DMatrix<f64>,
    log_det: f64,
}

impl AffinePolicyI {
    /// Fails unless `sigma` is symmetric positive definite.
    pub fn new(theta: DVector<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        let d = theta.len();
        if sigma.nrows() != d || sigma.ncols() != d {
            return Err(Error::ShapeMismatch {
                context: "AffinePolicyI covariance",
                expected: d,
                got: sigma.nrows(),
            });
        }
        let chol = sigma
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numeric("covariance is not positive definite".into()))?;
        let l_factor = chol.l();
        let log_det = 2.0 * l_factor.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(Self {
            theta,
            sigma,
            chol,
            l_factor,
            log_det,
        })
    }

    /// Isotropic convenience constructor with `Σ = std² I`.
    pub fn isotropic(theta: DVector<f64>, std: f64) -> Result<Self> {
        let d = theta.len();
        Self::new(theta, DMatrix::identity(d, d) * (std * std))
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    fn mean(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.theta - x
    }
}

impl Policy for AffinePolicyI {
    fn state_dim(&self) -> usize {
        self.theta.len()
    }

    fn param_len(&self) -> usize {
        self.theta.len()
    }

    fn params(&self) -> &[f64] {
        self.theta.as_slice()
    }

    fn params_mut(&mut self) -> &mut [f64] {
        self.theta.as_mut_slice()
    }

    fn sample_action(&self, x: &DVector<f64>, rng: &mut dyn RngCore) -> DVector<f64> {
        let u = DVector::from_fn(self.theta.len(), |_, _| StandardNormal.sample(rng));
        self.mean(x) + &self.l_factor * u
    }

    fn log_density(&self, x: &DVector<f64>, a: &DVector<f64>) -> f64 {
        let r = a - self.mean(x);
        let w = self.chol.solve(&r);
        -0.5 * r.dot(&w) - 0.5 * self.log_det - self.theta.len() as f64 * HALF_LN_2PI
    }

    fn accumulate_grad_log_density(
        &self,
        x: &DVector<f64>,
        a: &DVector<f64>,
        scale: f64,
        acc: &mut [f64],
    ) {
        // ∇_θ ln π = Σ⁻¹ (a − (θ − x))
        let r = a - self.mean(x);
        let g = self.chol.solve(&r);
        for (slot, gi) in acc.iter_mut().zip(g.iter()) {
            *slot += scale * gi;
        }
    }
}

/// Policy `π_θ(·|x) = N(θ − Bx, σ² I)` with `B = ω(AᵀA + εI)`.
///
/// The trained optimum reproduces damped Landweber iterations; `sigma = 0`
/// gives the deterministic scheme and is allowed for chain simulation but
/// rejected for training, where the log-density is undefined.
pub struct AffinePolicyII {
    theta: DVector<f64>,
    b: DMatrix<f64>,
    sigma: f64,
}

impl AffinePolicyII {
    /// `b` must be a contraction target: `‖I − B‖ < 1`.
    pub fn new(theta: DVector<f64>, b: DMatrix<f64>, sigma: f64) -> Result<Self> {
        let d = theta.len();
        if b.nrows() != d || b.ncols() != d {
            return Err(Error::ShapeMismatch {
                context: "AffinePolicyII matrix",
                expected: d,
                got: b.nrows(),
            });
        }
        if sigma < 0.0 {
            return Err(Error::Config(format!("sigma must be >= 0, got {sigma}")));
        }
        let contraction = norm_i_minus(&b);
        if contraction >= 1.0 {
            return Err(Error::Config(format!(
                "|I - B| = {contraction:.6} >= 1; the induced chain would not converge"
            )));
        }
        Ok(Self { theta, b, sigma })
    }

    /// Builds `B = ω(AᵀA + εI)` from the operator, rejecting ω outside the
    /// admissible interval `(0, 1/(3(‖A‖² + ε)))`.
    pub fn from_operator(
        a: &DMatrix<f64>,
        omega: f64,
        epsilon: f64,
        theta: DVector<f64>,
        sigma: f64,
    ) -> Result<Self> {
        let b = crate::baselines::build_b(a, omega, epsilon)?;
        Self::new(theta, b, sigma)
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    pub fn b_matrix(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn mean(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.theta - &self.b * x
    }
}

impl Policy for AffinePolicyII {
    fn state_dim(&self) -> usize {
        self.theta.len()
    }

    fn param_len(&self) -> usize {
        self.theta.len()
    }

    fn params(&self) -> &[f64] {
        self.theta.as_slice()
    }

    fn params_mut(&mut self) -> &mut [f64] {
        self.theta.as_mut_slice()
    }

    fn check_trainable(&self) -> Result<()> {
        if self.sigma == 0.0 {
            return Err(Error::Config(
                "policy with sigma = 0 has no log-density and cannot be trained".into(),
            ));
        }
        Ok(())
    }

    fn sample_action(&self, x: &DVector<f64>, rng: &mut dyn RngCore) -> DVector<f64> {
        let mut a = self.mean(x);
        if self.sigma > 0.0 {
            for v in a.iter_mut() {
                let z: f64 = StandardNormal.sample(rng);
                *v += self.sigma * z;
            }
        }
        a
    }

    fn log_density(&self, x: &DVector<f64>, a: &DVector<f64>) -> f64 {
        assert!(self.sigma > 0.0, "log-density undefined for sigma = 0");
        let mean = self.mean(x);
        let std = DVector::from_element(a.len(), self.sigma);
        diag_gaussian_log_density(&mean, &std, a)
    }

    fn accumulate_grad_log_density(
        &self,
        x: &DVector<f64>,
        a: &DVector<f64>,
        scale: f64,
        acc: &mut [f64],
    ) {
        assert!(self.sigma > 0.0, "score undefined for sigma = 0");
        // ∇_θ ln π = (a − (θ − Bx)) / σ²
        let mean = self.mean(x);
        let inv_var = 1.0 / (self.sigma * self.sigma);
        for i in 0..acc.len() {
            acc[i] += scale * (a[i] - mean[i]) * inv_var;
        }
    }
}

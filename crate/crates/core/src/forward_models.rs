//! Forward operators and noisy-observation generation.
//!
//! A forward model evaluates the deterministic map `f: R^D -> R^M` whose
//! inversion we are after. The concrete instances here are a general linear
//! map, the trapezoid discretization of the auto-convolution integral
//! operator on [0,1], and a scalar double-well loss used by the
//! escape-from-local-minimum demo. User-supplied operators plug in through
//! the [`ForwardModel`] trait without touching the trainer.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::{substream, StreamDomain};

/// A deterministic forward operator `f: R^D -> R^M`.
///
/// Implementations must be total on finite inputs (no NaN/Inf) and
/// bit-reproducible: repeated evaluation at the same input yields identical
/// output. `eval` may assume `x.len() == input_dim()`; the checked entry
/// points below return a shape error instead.
pub trait ForwardModel: Send + Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn eval(&self, x: &DVector<f64>) -> DVector<f64>;
}

/// Linear inverse problem `f(x) = A x`.
#[derive(Debug, Clone)]
pub struct LinearModel {
    matrix: DMatrix<f64>,
}

impl LinearModel {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

impl ForwardModel for LinearModel {
    fn input_dim(&self) -> usize {
        self.matrix.ncols()
    }

    fn output_dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }
}

/// Applies a linear model with an explicit shape check.
pub fn linear_apply(model: &LinearModel, x: &DVector<f64>) -> Result<DVector<f64>> {
    if x.len() != model.input_dim() {
        return Err(Error::ShapeMismatch {
            context: "linear_apply",
            expected: model.input_dim(),
            got: x.len(),
        });
    }
    Ok(model.eval(x))
}

/// Discretized auto-convolution operator on the uniform grid `t_j = j/(D-1)`.
///
/// Maps the grid samples of `x` to the trapezoid approximation of
/// `y(t) = ∫_0^t x(t-s) x(s) ds`, with `y_0 = 0` and, for `j >= 1`,
///
/// ```text
/// y_j = 1/(D-1) * Σ_{i=1..j} ½ (x_{j-i} x_i + x_{j-i+1} x_{i-1})
/// ```
///
/// Grid-point differences are resolved in integer index arithmetic, never by
/// floating-point subtraction of abscissae.
#[derive(Debug, Clone, Copy)]
pub struct AutoConvModel {
    grid_points: usize,
}

impl AutoConvModel {
    pub fn new(grid_points: usize) -> Result<Self> {
        if grid_points < 2 {
            return Err(Error::Config(format!(
                "auto-convolution needs at least 2 grid points, got {grid_points}"
            )));
        }
        Ok(Self { grid_points })
    }

    pub fn grid_points(&self) -> usize {
        self.grid_points
    }
}

impl ForwardModel for AutoConvModel {
    fn input_dim(&self) -> usize {
        self.grid_points
    }

    fn output_dim(&self) -> usize {
        self.grid_points
    }

    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        let d = self.grid_points;
        let h = 1.0 / (d - 1) as f64;
        let mut y = DVector::zeros(d);
        for j in 1..d {
            let mut acc = 0.0;
            for i in 1..=j {
                acc += 0.5 * (x[j - i] * x[i] + x[j - i + 1] * x[i - 1]);
            }
            y[j] = h * acc;
        }
        y
    }
}

/// Applies the auto-convolution operator with an explicit shape check.
pub fn autoconv_forward(model: &AutoConvModel, x: &DVector<f64>) -> Result<DVector<f64>> {
    if x.len() != model.input_dim() {
        return Err(Error::ShapeMismatch {
            context: "autoconv_forward",
            expected: model.input_dim(),
            got: x.len(),
        });
    }
    Ok(model.eval(x))
}

/// Grid samples of the reference source `x(t) = 10 t (1-t)^2` on `D` points.
///
/// Entries 0 and D-1 are exactly zero.
pub fn exact_solution(grid_points: usize) -> Result<DVector<f64>> {
    if grid_points < 2 {
        return Err(Error::Config(format!(
            "exact_solution needs at least 2 grid points, got {grid_points}"
        )));
    }
    let dm1 = (grid_points - 1) as f64;
    Ok(DVector::from_fn(grid_points, |j, _| {
        let t = j as f64 / dm1;
        10.0 * t * (1.0 - t) * (1.0 - t)
    }))
}

/// Double-well scalar loss `(x² − 1)² + 0.3 (x − 1)²`.
///
/// Global minimum at x = 1 with value 0; a strictly positive local minimum
/// sits in (-0.9, -0.8).
pub fn toy_scalar_loss(x: f64) -> f64 {
    let q = x * x - 1.0;
    q * q + 0.3 * (x - 1.0) * (x - 1.0)
}

/// How noisy observations are synthesized from a clean signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    /// Entrywise Gaussian with std `level * |y_i|`.
    GaussianRelative,
    /// Entrywise Gaussian with std `level`.
    GaussianAbsolute,
    /// First shift the signal left or right (probability ½ each) by
    /// `shift_magnitude` grid units, zero-filling the vacated entries, then
    /// add relative Gaussian noise against the shifted signal.
    ShiftThenGaussian,
}

/// Noise model for observation generation.
#[derive(Debug, Clone)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Noise level, e.g. 0.05 for 5%.
    pub level: f64,
    /// Shift distance in grid units for [`NoiseKind::ShiftThenGaussian`].
    pub shift_magnitude: usize,
    /// Number of observation samples K.
    pub sample_count: usize,
}

impl NoiseSpec {
    pub fn gaussian_relative(level: f64, sample_count: usize) -> Self {
        Self {
            kind: NoiseKind::GaussianRelative,
            level,
            shift_magnitude: 1,
            sample_count,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.level >= 0.0) {
            return Err(Error::Config(format!(
                "noise level must be nonnegative, got {}",
                self.level
            )));
        }
        if self.sample_count == 0 {
            return Err(Error::Config("noise sample_count must be >= 1".into()));
        }
        Ok(())
    }
}

/// A set of K observed right-hand sides, all of the same dimension.
#[derive(Debug, Clone)]
pub struct ObservationSet {
    samples: Vec<DVector<f64>>,
    clean: Option<DVector<f64>>,
}

impl ObservationSet {
    pub fn new(samples: Vec<DVector<f64>>, clean: Option<DVector<f64>>) -> Result<Self> {
        let Some(first) = samples.first() else {
            return Err(Error::Config("observation set must be nonempty".into()));
        };
        let m = first.len();
        if samples.iter().any(|s| s.len() != m)
            || clean.as_ref().is_some_and(|c| c.len() != m)
        {
            return Err(Error::ShapeMismatch {
                context: "ObservationSet",
                expected: m,
                got: samples
                    .iter()
                    .map(DVector::len)
                    .find(|&l| l != m)
                    .unwrap_or(m),
            });
        }
        Ok(Self { samples, clean })
    }

    /// Single noise-free observation.
    pub fn exact(y: DVector<f64>) -> Self {
        Self {
            samples: vec![y.clone()],
            clean: Some(y),
        }
    }

    pub fn samples(&self) -> &[DVector<f64>] {
        &self.samples
    }

    pub fn clean(&self) -> Option<&DVector<f64>> {
        self.clean.as_ref()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples[0].len()
    }
}

fn shifted(y: &DVector<f64>, magnitude: usize, left: bool) -> DVector<f64> {
    let m = y.len();
    let s = magnitude.min(m);
    let mut out = DVector::zeros(m);
    if left {
        // [y_s, ..., y_{m-1}, 0, ..., 0]
        for i in 0..m - s {
            out[i] = y[i + s];
        }
    } else {
        // [0, ..., 0, y_0, ..., y_{m-1-s}]
        for i in s..m {
            out[i] = y[i - s];
        }
    }
    out
}

/// Draws `spec.sample_count` noisy observations of `model.eval(x_true)`.
///
/// Deterministic given `seed`; the generator is private to this call.
pub fn generate_observations(
    model: &dyn ForwardModel,
    x_true: &DVector<f64>,
    spec: &NoiseSpec,
    seed: u64,
) -> Result<ObservationSet> {
    spec.validate()?;
    if x_true.len() != model.input_dim() {
        return Err(Error::ShapeMismatch {
            context: "generate_observations",
            expected: model.input_dim(),
            got: x_true.len(),
        });
    }
    let clean = model.eval(x_true);
    let mut rng = substream(seed, StreamDomain::Noise, 0);
    let normal = StandardNormal;
    let mut samples = Vec::with_capacity(spec.sample_count);
    for _ in 0..spec.sample_count {
        let base = match spec.kind {
            NoiseKind::ShiftThenGaussian => {
                let left = rand::Rng::random::<bool>(&mut rng);
                shifted(&clean, spec.shift_magnitude, left)
            }
            _ => clean.clone(),
        };
        let sample = DVector::from_fn(base.len(), |i, _| {
            let std = match spec.kind {
                NoiseKind::GaussianAbsolute => spec.level,
                _ => spec.level * base[i].abs(),
            };
            let z: f64 = normal.sample(&mut rng);
            base[i] + std * z
        });
        samples.push(sample);
    }
    ObservationSet::new(samples, Some(clean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn linear_apply_identity_and_diag() {
        let identity = LinearModel::new(DMatrix::identity(2, 2));
        assert_eq!(linear_apply(&identity, &dv(&[1.0, 2.0])).unwrap(), dv(&[1.0, 2.0]));

        let diag = LinearModel::new(DMatrix::from_diagonal(&dv(&[1.0, 2.0])));
        assert_eq!(linear_apply(&diag, &dv(&[1.0, 2.0])).unwrap(), dv(&[1.0, 4.0]));
    }

    #[test]
    fn linear_apply_hand_product() {
        // [[1,1],[0,1]] * (1,1) = (2,1), by hand.
        let a = LinearModel::new(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]));
        assert_eq!(linear_apply(&a, &dv(&[1.0, 1.0])).unwrap(), dv(&[2.0, 1.0]));
    }

    #[test]
    fn linear_apply_shape_error() {
        let a = LinearModel::new(DMatrix::identity(2, 2));
        assert!(matches!(
            linear_apply(&a, &dv(&[1.0, 2.0, 3.0])),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn autoconv_zero_input() {
        let model = AutoConvModel::new(64).unwrap();
        let y = autoconv_forward(&model, &DVector::zeros(64)).unwrap();
        assert_eq!(y, DVector::zeros(64));
    }

    #[test]
    fn autoconv_hand_trapezoid_d3() {
        // Grid {0, 1/2, 1}, x = (1,1,1):
        //   y_1 = (1/2) * ½ (x0 x1 + x1 x0) = 0.5
        //   y_2 = (1/2) * [½ (x1 x1 + x2 x0) + ½ (x0 x2 + x1 x1)] = 1.0
        let model = AutoConvModel::new(3).unwrap();
        let y = autoconv_forward(&model, &dv(&[1.0, 1.0, 1.0])).unwrap();
        assert_relative_eq!(y[0], 0.0);
        assert_relative_eq!(y[1], 0.5);
        assert_relative_eq!(y[2], 1.0);
    }

    #[test]
    fn autoconv_first_entry_always_zero() {
        let model = AutoConvModel::new(64).unwrap();
        let x = exact_solution(64).unwrap();
        let y = model.eval(&x);
        assert_eq!(y[0], 0.0);
    }

    #[test]
    fn autoconv_rejects_tiny_grid() {
        assert!(matches!(AutoConvModel::new(1), Err(Error::Config(_))));
    }

    #[test]
    fn autoconv_quadratic_homogeneity_and_sign_symmetry() {
        let mut rng = substream(11, StreamDomain::Misc, 0);
        for d in 3..=16 {
            let model = AutoConvModel::new(d).unwrap();
            let x = DVector::from_fn(d, |_, _| {
                rand_distr::Distribution::sample(&StandardNormal, &mut rng)
            });
            let y = model.eval(&x);
            for c in [-2.0, 0.5, 3.0] {
                let scaled = model.eval(&(&x * c));
                for i in 0..d {
                    let expect = c * c * y[i];
                    assert!(
                        (scaled[i] - expect).abs() <= 1e-12 * expect.abs().max(1e-300),
                        "homogeneity failed at d={d} c={c} i={i}"
                    );
                }
            }
            let negated = model.eval(&(-&x));
            assert_eq!(negated, y, "sign symmetry must be exact");
        }
    }

    #[test]
    fn exact_solution_values() {
        assert_eq!(exact_solution(2).unwrap(), dv(&[0.0, 0.0]));
        let d3 = exact_solution(3).unwrap();
        assert_eq!(d3[0], 0.0);
        assert_relative_eq!(d3[1], 1.25);
        assert_eq!(d3[2], 0.0);
        // Entry 1 of D=5: 10 * 0.25 * 0.75^2 = 1.40625.
        assert_relative_eq!(exact_solution(5).unwrap()[1], 1.40625);
    }

    #[test]
    fn exact_solution_endpoints_zero() {
        for d in 2..40 {
            let x = exact_solution(d).unwrap();
            assert_eq!(x[0], 0.0);
            assert_eq!(x[d - 1], 0.0);
        }
    }

    #[test]
    fn toy_loss_values() {
        assert_eq!(toy_scalar_loss(1.0), 0.0);
        assert_relative_eq!(toy_scalar_loss(-1.0), 1.2);
        // (1.5625) + 0.3 * 6.25 = 3.4375
        assert_relative_eq!(toy_scalar_loss(-1.5), 3.4375);
    }

    #[test]
    fn toy_loss_derivative_changes_sign_on_local_min_bracket() {
        // d/dx = 4x³ − 3.4x − 0.6
        let deriv = |x: f64| 4.0 * x.powi(3) - 3.4 * x - 0.6;
        assert!(deriv(-0.9) < 0.0);
        assert!(deriv(-0.8) > 0.0);
    }

    #[test]
    fn observations_zero_noise_are_copies() {
        let model = AutoConvModel::new(8).unwrap();
        let x = exact_solution(8).unwrap();
        let y = model.eval(&x);
        for kind in [
            NoiseKind::GaussianRelative,
            NoiseKind::GaussianAbsolute,
            NoiseKind::ShiftThenGaussian,
        ] {
            let spec = NoiseSpec {
                kind,
                level: 0.0,
                shift_magnitude: 0,
                sample_count: 3,
            };
            let obs = generate_observations(&model, &x, &spec, 1).unwrap();
            assert_eq!(obs.len(), 3);
            for s in obs.samples() {
                assert_eq!(s, &y);
            }
        }
    }

    #[test]
    fn observations_relative_std_matches_level() {
        // Monte Carlo check of the generator itself: the per-entry sample std
        // over K draws should approximate level * |y_i|.
        let a = LinearModel::new(DMatrix::identity(4, 4));
        let x = dv(&[1.0, -2.0, 0.5, 3.0]);
        let spec = NoiseSpec::gaussian_relative(0.05, 100);
        let obs = generate_observations(&a, &x, &spec, 42).unwrap();
        let clean = obs.clean().unwrap().clone();
        for i in 0..4 {
            if clean[i].abs() <= 0.1 {
                continue;
            }
            let mean: f64 =
                obs.samples().iter().map(|s| s[i]).sum::<f64>() / obs.len() as f64;
            let var: f64 = obs
                .samples()
                .iter()
                .map(|s| (s[i] - mean) * (s[i] - mean))
                .sum::<f64>()
                / (obs.len() - 1) as f64;
            let target = 0.05 * clean[i].abs();
            assert!(
                (var.sqrt() - target).abs() <= 0.3 * target,
                "entry {i}: std {} vs target {target}",
                var.sqrt()
            );
        }
    }

    #[test]
    fn observations_shift_only() {
        let model = LinearModel::new(DMatrix::identity(3, 3));
        let x = dv(&[1.0, 2.0, 3.0]);
        let spec = NoiseSpec {
            kind: NoiseKind::ShiftThenGaussian,
            level: 0.0,
            shift_magnitude: 1,
            sample_count: 40,
        };
        let obs = generate_observations(&model, &x, &spec, 9).unwrap();
        let left = dv(&[2.0, 3.0, 0.0]);
        let right = dv(&[0.0, 1.0, 2.0]);
        let mut saw_left = false;
        let mut saw_right = false;
        for s in obs.samples() {
            if s == &left {
                saw_left = true;
            } else if s == &right {
                saw_right = true;
            } else {
                panic!("unexpected shifted sample {s:?}");
            }
        }
        assert!(saw_left && saw_right, "both shift directions should occur");
    }

    #[test]
    fn observations_reproducible() {
        let model = AutoConvModel::new(16).unwrap();
        let x = exact_solution(16).unwrap();
        let spec = NoiseSpec::gaussian_relative(0.05, 10);
        let a = generate_observations(&model, &x, &spec, 123).unwrap();
        let b = generate_observations(&model, &x, &spec, 123).unwrap();
        for (s, t) in a.samples().iter().zip(b.samples()) {
            assert_eq!(s, t);
        }
    }

    #[test]
    fn observations_reject_negative_level() {
        let model = AutoConvModel::new(4).unwrap();
        let x = exact_solution(4).unwrap();
        let spec = NoiseSpec::gaussian_relative(-0.01, 3);
        assert!(matches!(
            generate_observations(&model, &x, &spec, 0),
            Err(Error::Config(_))
        ));
    }
}

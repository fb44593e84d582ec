//! Kernel estimators for the information-theoretic quantities the PRI
//! objective is built from.
//!
//! All quantities reduce to sums of Gaussian kernel evaluations over sample
//! pairs: the information potential `V(Y)` (a plug-in estimator of the
//! integral of the squared density), the cross information potential
//! `V(Y;X)` (estimator of the density overlap), the Renyi quadratic entropy
//! `H2 = -log V`, the Cauchy-Schwarz divergence, and the two-term PRI
//! objective they combine into.
//!
//! Pairwise sums are accumulated with tree (pairwise) summation in `f64`:
//! the sums have up to `N^2` terms of similar magnitude and feed a `log`,
//! so error growth matters. Potentials are floored at the smallest positive
//! normal before `log`, turning underflow into a large finite value instead
//! of `-inf`.

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

/// A set of `N` points in `R^p`, stored one point per row. Nonempty and
/// finite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    points: Array2<f64>,
}

impl Sample {
    pub fn new(points: Array2<f64>) -> Result<Self> {
        if points.nrows() == 0 || points.ncols() == 0 {
            return Err(Error::EmptySample);
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sample points"));
        }
        Ok(Sample { points })
    }

    /// One-dimensional sample from a list of scalars.
    pub fn one_dim(values: &[f64]) -> Result<Self> {
        Sample::new(Array2::from_shape_vec((values.len(), 1), values.to_vec()).expect("shape"))
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false // nonempty by construction
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.points.row(i)
    }

    pub fn into_points(self) -> Array2<f64> {
        self.points
    }
}

/// Gaussian kernel width `delta`; positive and finite by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelWidth {
    delta: f64,
}

impl KernelWidth {
    pub fn new(delta: f64) -> Result<Self> {
        if !delta.is_finite() || delta <= 0.0 {
            return Err(Error::InvalidKernelWidth(delta));
        }
        Ok(KernelWidth { delta })
    }

    pub fn get(self) -> f64 {
        self.delta
    }

    /// The factor `1 / (2 delta^2)` the kernel exponent is scaled by.
    pub(crate) fn inv_two_sq(self) -> f64 {
        1.0 / (2.0 * self.delta * self.delta)
    }
}

/// Tree summation: split-in-half recursion with a small base case. Keeps
/// rounding error at O(log n) ulps instead of O(n).
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

pub(crate) fn squared_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(ai, bi)| {
            let d = ai - bi;
            d * d
        })
        .sum()
}

/// `G_delta(diff) = exp(-||diff||^2 / (2 delta^2))`, in `(0, 1]`.
///
/// Equals 1 exactly when `diff` is the zero vector.
pub fn gaussian_kernel(diff: &[f64], width: KernelWidth) -> Result<f64> {
    if diff.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("kernel argument"));
    }
    let sq: f64 = diff.iter().map(|d| d * d).sum();
    Ok((-sq * width.inv_two_sq()).exp())
}

/// Mean of all pairwise kernel values between the rows of `a` and the rows
/// of `b`, with both levels of the double sum accumulated pairwise.
pub(crate) fn mean_kernel_sum(a: &Array2<f64>, b: &Array2<f64>, inv_two_sq: f64) -> f64 {
    let mut row_sums = Vec::with_capacity(a.nrows());
    let mut terms = Vec::with_capacity(b.nrows());
    for i in 0..a.nrows() {
        terms.clear();
        let ai = a.row(i);
        for j in 0..b.nrows() {
            let sq = squared_distance(ai, b.row(j));
            terms.push((-sq * inv_two_sq).exp());
        }
        row_sums.push(pairwise_sum(&terms));
    }
    pairwise_sum(&row_sums) / (a.nrows() as f64 * b.nrows() as f64)
}

/// Information potential `V(Y) = (1/N^2) sum_ij G_delta(y_i - y_j)`.
///
/// Lies in `(0, 1]` and equals 1 exactly when all points coincide.
pub fn information_potential(y: &Sample, width: KernelWidth) -> f64 {
    mean_kernel_sum(y.points(), y.points(), width.inv_two_sq())
}

/// Cross information potential `V(Y;X) = (1/(N_Y N_X)) sum_ij G_delta(y_j - x_i)`.
///
/// Unequal sample counts are normalized by `1/(N_Y N_X)`; the dimensions
/// must match.
pub fn cross_information_potential(y: &Sample, x: &Sample, width: KernelWidth) -> Result<f64> {
    if y.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            left: y.dim(),
            right: x.dim(),
        });
    }
    Ok(mean_kernel_sum(y.points(), x.points(), width.inv_two_sq()))
}

/// Floor at the smallest positive normal before the log, so a vanished
/// potential yields a large finite value rather than `-inf`.
pub(crate) fn log_potential(v: f64) -> f64 {
    v.max(f64::MIN_POSITIVE).ln()
}

/// Renyi quadratic entropy estimator `H2(Y) = -log V(Y)`; nonnegative since
/// `V <= 1`.
pub fn renyi_quadratic_entropy(y: &Sample, width: KernelWidth) -> f64 {
    -log_potential(information_potential(y, width))
}

/// Cauchy-Schwarz divergence estimator
/// `D_cs = -2 log V(Y;X) + log V(Y) + log V(X)`.
///
/// Nonnegative, symmetric in its arguments, and exactly 0 when `Y = X`.
pub fn cs_divergence(y: &Sample, x: &Sample, width: KernelWidth) -> Result<f64> {
    let vyx = cross_information_potential(y, x, width)?;
    let vy = information_potential(y, width);
    let vx = information_potential(x, width);
    Ok(-2.0 * log_potential(vyx) + log_potential(vy) + log_potential(vx))
}

/// The sample PRI objective
/// `J(Y) = -(1 - beta) log V(Y) - 2 beta log V(Y;X)`,
/// the quantity the fixed-point solver minimizes over `Y`.
pub fn pri_objective(y: &Sample, x: &Sample, beta: f64, width: KernelWidth) -> Result<f64> {
    validate_beta(beta)?;
    let vy = information_potential(y, width);
    let vyx = cross_information_potential(y, x, width)?;
    Ok(-(1.0 - beta) * log_potential(vy) - 2.0 * beta * log_potential(vyx))
}

pub(crate) fn validate_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidBeta(beta));
    }
    Ok(())
}

//! Fixed-point minimization of the PRI objective.
//!
//! Setting the gradient of the objective to zero and rearranging gives a
//! per-point update: with `sy = sum_j G(y - y_j)`, `sx = sum_j G(y - x_j)`,
//! vector numerators `sy_vec = sum_j G(y - y_j) y_j`,
//! `sx_vec = sum_j G(y - x_j) x_j`, and `c = V(Y;X) / V(Y)`,
//!
//! ```text
//! y' = c (1 - beta) / beta * (sy_vec - sy y) / sx  +  sx_vec / sx
//! ```
//!
//! A sweep applies this update to every point of `Y` simultaneously from the
//! same pre-sweep state, with `c` recomputed once per sweep; asynchronous
//! updates would make the result depend on point order. The rule divides by
//! `beta`, so `beta = 0` is handled analytically in [`pri_solve`]: the
//! minimizer is the arithmetic mean of `X` replicated over all points.
//!
//! No damping or step-size control is applied; the sweep count `tau` is
//! small in practice and the optional displacement early stop catches
//! premature convergence.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::itl::{
    mean_kernel_sum, pairwise_sum, pri_objective, squared_distance, validate_beta, KernelWidth,
    Sample,
};

/// How [`pri_solve`] chooses the initial `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriInit {
    /// Start from `Y = X`. Makes the large-beta regime return the input by
    /// construction.
    #[default]
    CopyInput,
    /// Start from a caller-supplied sample.
    Provided,
}

/// Solver settings: the relevance trade-off `beta`, the kernel width, the
/// sweep count `tau`, the initialization mode, and an optional early stop on
/// per-point displacement.
#[derive(Debug, Clone)]
pub struct PriConfig {
    /// Trade-off between entropy minimization (small) and fidelity to `X`
    /// (large). Nonnegative.
    pub beta: f64,
    pub delta: KernelWidth,
    /// Number of synchronous sweeps; at least 1.
    pub tau: usize,
    pub init: PriInit,
    /// Stop once the largest per-point move of a sweep falls below this.
    pub displacement_tol: Option<f64>,
}

impl PriConfig {
    /// Settings with 3 sweeps, `Y = X` initialization, and no early stop.
    pub fn new(beta: f64, delta: KernelWidth) -> Self {
        PriConfig {
            beta,
            delta,
            tau: 3,
            init: PriInit::CopyInput,
            displacement_tol: None,
        }
    }

    fn validate(&self) -> Result<()> {
        validate_beta(self.beta)?;
        if self.tau == 0 {
            return Err(Error::InvalidConfig("tau must be at least 1".into()));
        }
        if let Some(tol) = self.displacement_tol {
            if !tol.is_finite() || tol < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "displacement_tol must be a nonnegative real, got {tol}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-sweep progress: the objective after each sweep and the largest
/// per-point move made during it. Both lists have one entry per executed
/// sweep.
#[derive(Debug, Clone, Default)]
pub struct PriTrace {
    pub objective_per_iteration: Vec<f64>,
    pub max_displacement_per_iteration: Vec<f64>,
}

impl PriTrace {
    pub fn iterations(&self) -> usize {
        self.objective_per_iteration.len()
    }

    /// True when the last executed sweep moved every point less than `tol`.
    pub fn converged(&self, tol: f64) -> bool {
        self.max_displacement_per_iteration
            .last()
            .is_some_and(|d| *d < tol)
    }
}

/// One synchronous sweep of the fixed-point update over every point of `Y`.
///
/// Requires `beta > 0`; `beta = 0` is only reachable through [`pri_solve`],
/// which handles it in closed form.
pub fn fixed_point_step(y: &Sample, x: &Sample, cfg: &PriConfig) -> Result<Sample> {
    step_impl(y, x, cfg, None)
}

/// Like [`fixed_point_step`] but moves only the point at `row`, leaving the
/// rest of `Y` fixed. `c` is still computed from the whole sample. Used by
/// the pipeline's center-only sweep mode, where just the window center is
/// optimized.
pub fn fixed_point_step_at(y: &Sample, x: &Sample, cfg: &PriConfig, row: usize) -> Result<Sample> {
    if row >= y.len() {
        return Err(Error::InvalidConfig(format!(
            "row {row} out of range for a sample of {} points",
            y.len()
        )));
    }
    step_impl(y, x, cfg, Some(row))
}

fn step_impl(y: &Sample, x: &Sample, cfg: &PriConfig, only: Option<usize>) -> Result<Sample> {
    if !cfg.beta.is_finite() || cfg.beta <= 0.0 {
        return Err(Error::InvalidBeta(cfg.beta));
    }
    if y.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            left: y.dim(),
            right: x.dim(),
        });
    }

    let inv2 = cfg.delta.inv_two_sq();
    let yp = y.points();
    let xp = x.points();
    let (ny, p) = (yp.nrows(), yp.ncols());
    let nx = xp.nrows();

    // c = V(Y;X) / V(Y) from the pre-sweep Y. V(Y) >= 1/N because the
    // diagonal kernel terms are 1, so the ratio is always finite.
    let c = mean_kernel_sum(yp, xp, inv2) / mean_kernel_sum(yp, yp, inv2);
    let coef = c * (1.0 - cfg.beta) / cfg.beta;

    let mut out = yp.clone();
    let mut wy = vec![0.0; ny];
    let mut wx = vec![0.0; nx];
    let mut ynum = vec![0.0; p];
    let mut xnum = vec![0.0; p];

    let targets: Vec<usize> = match only {
        None => (0..ny).collect(),
        Some(r) => vec![r],
    };
    for &star in &targets {
        let ys = yp.row(star);
        for (j, w) in wy.iter_mut().enumerate() {
            *w = (-squared_distance(ys, yp.row(j)) * inv2).exp();
        }
        for (j, w) in wx.iter_mut().enumerate() {
            *w = (-squared_distance(ys, xp.row(j)) * inv2).exp();
        }
        let sy = pairwise_sum(&wy);
        let sx = pairwise_sum(&wx);
        if sx == 0.0 {
            return Err(Error::DenominatorUnderflow { point: star });
        }

        ynum.iter_mut().for_each(|v| *v = 0.0);
        xnum.iter_mut().for_each(|v| *v = 0.0);
        for (j, &w) in wy.iter().enumerate() {
            if w != 0.0 {
                for (acc, v) in ynum.iter_mut().zip(yp.row(j)) {
                    *acc += w * v;
                }
            }
        }
        for (j, &w) in wx.iter().enumerate() {
            if w != 0.0 {
                for (acc, v) in xnum.iter_mut().zip(xp.row(j)) {
                    *acc += w * v;
                }
            }
        }

        for (q, o) in out.row_mut(star).iter_mut().enumerate() {
            *o = coef * (ynum[q] - sy * ys[q]) / sx + xnum[q] / sx;
        }
    }

    Sample::new(out)
}

/// Minimize the PRI objective over `Y` for fixed `X`.
///
/// For `beta = 0` the minimizer is emitted in closed form: every point of
/// `Y` becomes the arithmetic mean of `X`, in a single recorded step. For
/// `beta > 0` the solver runs up to `cfg.tau` synchronous sweeps of
/// [`fixed_point_step`] from the initial `Y` (`X` itself under
/// [`PriInit::CopyInput`], or `y0` under [`PriInit::Provided`]), stopping
/// early once the largest per-point move falls below
/// `cfg.displacement_tol`.
pub fn pri_solve(x: &Sample, cfg: &PriConfig, y0: Option<&Sample>) -> Result<(Sample, PriTrace)> {
    cfg.validate()?;
    let init: Sample = match (cfg.init, y0) {
        (PriInit::CopyInput, None) => x.clone(),
        (PriInit::CopyInput, Some(_)) => {
            return Err(Error::InvalidConfig(
                "init CopyInput does not take an explicit Y0; use init Provided".into(),
            ))
        }
        (PriInit::Provided, Some(y)) => {
            if y.dim() != x.dim() {
                return Err(Error::DimensionMismatch {
                    left: y.dim(),
                    right: x.dim(),
                });
            }
            y.clone()
        }
        (PriInit::Provided, None) => {
            return Err(Error::InvalidConfig(
                "init Provided requires a Y0 sample".into(),
            ))
        }
    };

    let mut trace = PriTrace::default();

    if cfg.beta == 0.0 {
        let mean = column_means(x.points());
        let n = init.len();
        let mut pts = Array2::zeros((n, x.dim()));
        for mut row in pts.rows_mut() {
            for (o, m) in row.iter_mut().zip(&mean) {
                *o = *m;
            }
        }
        let disp = (0..n)
            .map(|i| squared_distance(init.row(i), pts.row(i)).sqrt())
            .fold(0.0f64, f64::max);
        let y = Sample::new(pts)?;
        trace
            .objective_per_iteration
            .push(pri_objective(&y, x, cfg.beta, cfg.delta)?);
        trace.max_displacement_per_iteration.push(disp);
        return Ok((y, trace));
    }

    let mut y = init;
    for _ in 0..cfg.tau {
        let next = step_impl(&y, x, cfg, None)?;
        let disp = (0..y.len())
            .map(|i| squared_distance(y.row(i), next.row(i)).sqrt())
            .fold(0.0f64, f64::max);
        y = next;
        trace
            .objective_per_iteration
            .push(pri_objective(&y, x, cfg.beta, cfg.delta)?);
        trace.max_displacement_per_iteration.push(disp);
        if let Some(tol) = cfg.displacement_tol {
            if disp < tol {
                break;
            }
        }
    }
    Ok((y, trace))
}

/// Analytic gradient of [`pri_objective`] with respect to every point of
/// `Y`, one row per point. The fixed-point update is the stationarity
/// condition of this gradient, so it vanishes at a converged solve.
///
/// Vanished potentials are floored at the smallest positive normal, matching
/// the objective's flooring, so the gradient stays finite.
pub fn objective_gradient(y: &Sample, x: &Sample, cfg: &PriConfig) -> Result<Array2<f64>> {
    validate_beta(cfg.beta)?;
    if y.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            left: y.dim(),
            right: x.dim(),
        });
    }

    let inv2 = cfg.delta.inv_two_sq();
    let inv_sq = 2.0 * inv2;
    let yp = y.points();
    let xp = x.points();
    let ny = yp.nrows() as f64;
    let nx = xp.nrows() as f64;

    let vy = mean_kernel_sum(yp, yp, inv2).max(f64::MIN_POSITIVE);
    let vyx = mean_kernel_sum(yp, xp, inv2).max(f64::MIN_POSITIVE);
    let ay = -(1.0 - cfg.beta) * 2.0 / (ny * ny * vy);
    let ax = -2.0 * cfg.beta / (ny * nx * vyx);

    let mut g = Array2::zeros((yp.nrows(), yp.ncols()));
    for star in 0..yp.nrows() {
        let ys = yp.row(star);
        let mut grow = g.row_mut(star);
        for j in 0..yp.nrows() {
            let w = (-squared_distance(ys, yp.row(j)) * inv2).exp();
            let f = ay * w * inv_sq;
            for (acc, (yj, yq)) in grow.iter_mut().zip(yp.row(j).iter().zip(ys.iter())) {
                *acc += f * (yj - yq);
            }
        }
        for j in 0..xp.nrows() {
            let w = (-squared_distance(ys, xp.row(j)) * inv2).exp();
            let f = ax * w * inv_sq;
            for (acc, (xj, yq)) in grow.iter_mut().zip(xp.row(j).iter().zip(ys.iter())) {
                *acc += f * (xj - yq);
            }
        }
    }
    Ok(g)
}

// Plain left-to-right summation so the result is bit-identical to the
// conventional arithmetic mean; tree summation buys nothing at these sizes.
fn column_means(m: &Array2<f64>) -> Vec<f64> {
    (0..m.ncols())
        .map(|q| m.column(q).iter().sum::<f64>() / m.nrows() as f64)
        .collect()
}

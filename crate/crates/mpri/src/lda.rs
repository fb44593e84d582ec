//! Regularized linear discriminant analysis.
//!
//! The discriminant directions solve the generalized eigenproblem of the
//! between-class scatter `S_b` against the shrunk within-class scatter
//! `Sigma = (1 - gamma) S_w + gamma (trace(S_w) / D) I`. Shrinkage toward
//! the scaled identity keeps `Sigma` invertible when training rows are
//! scarce relative to the feature dimension.
//!
//! The eigenproblem is reduced instead of solved at full size: with
//! `Sigma = L L^T` (Cholesky) and `S_b = A A^T`, where column `c` of the
//! `D x C` matrix `A` is `sqrt(n_c) (mu_c - mu)`, the nonzero eigenpairs of
//! `L^{-1} S_b L^{-T}` are those of the `C x C` matrix `W^T W` with
//! `W = L^{-1} A`. Only a `C x C` symmetric eigensolve is needed; `C` is
//! the class count, far below `D`. Eigenvectors map back as
//! `v = L^{-T} u` with `u = W s / |W s|`, which lands exactly on the
//! `v^T Sigma v = 1` normalization.
//!
//! Each direction's sign is fixed deterministically: the projected class
//! means must trend upward with class id (ties broken by making the first
//! nonzero coefficient positive).

use ndarray::{Array1, Array2, Axis};

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// A fitted discriminant projection: `project` maps centered features onto
/// the leading discriminant directions, columns ordered by decreasing
/// generalized eigenvalue.
#[derive(Debug, Clone)]
pub struct LdaModel {
    projection: Array2<f64>,
    class_ids: Vec<u16>,
    class_means: Array2<f64>,
    global_mean: Array1<f64>,
    eigenvalues: Vec<f64>,
    shrinkage: f64,
}

impl LdaModel {
    pub fn in_dim(&self) -> usize {
        self.projection.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.projection.ncols()
    }

    /// `D_in x D_out` projection matrix; `x` maps to `(x - mean)^T P`.
    pub fn projection(&self) -> &Array2<f64> {
        &self.projection
    }

    pub fn class_ids(&self) -> &[u16] {
        &self.class_ids
    }

    /// Per-class training means, one row per entry of `class_ids`.
    pub fn class_means(&self) -> &Array2<f64> {
        &self.class_means
    }

    pub fn global_mean(&self) -> &Array1<f64> {
        &self.global_mean
    }

    /// Generalized eigenvalues of the kept directions, decreasing.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn shrinkage(&self) -> f64 {
        self.shrinkage
    }

    /// Project rows of `features` (one vector per row) into the
    /// discriminant space.
    pub fn project(&self, features: &Array2<f64>) -> Result<Array2<f64>> {
        if features.ncols() != self.in_dim() {
            return Err(Error::DimensionMismatch {
                left: features.ncols(),
                right: self.in_dim(),
            });
        }
        let centered = features - &self.global_mean;
        Ok(centered.dot(&self.projection))
    }
}

/// Fit the shrinkage-regularized LDA on `features` (one row per training
/// vector) with nonzero class labels. `out_dim` must not exceed
/// `min(D, C - 1)`.
pub fn fit_regularized_lda(
    features: &Array2<f64>,
    labels: &[u16],
    shrinkage: f64,
    out_dim: usize,
) -> Result<LdaModel> {
    let n = features.nrows();
    let d = features.ncols();
    if n == 0 || d == 0 {
        return Err(Error::EmptySample);
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: labels.len(),
        });
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training features"));
    }
    if labels.iter().any(|&l| l == 0) {
        return Err(Error::InvalidConfig(
            "training labels must be nonzero class ids".into(),
        ));
    }
    if !shrinkage.is_finite() || !(0.0..=1.0).contains(&shrinkage) {
        return Err(Error::InvalidConfig(format!(
            "lda shrinkage must lie in [0, 1], got {shrinkage}"
        )));
    }

    let mut class_ids: Vec<u16> = labels.to_vec();
    class_ids.sort_unstable();
    class_ids.dedup();
    let c = class_ids.len();
    if c < 2 {
        return Err(Error::TooFewClasses(c));
    }
    let max_dim = d.min(c - 1);
    if out_dim == 0 {
        return Err(Error::InvalidConfig(
            "lda output dimension must be at least 1".into(),
        ));
    }
    if out_dim > max_dim {
        return Err(Error::ProjectionDimension {
            requested: out_dim,
            max: max_dim,
        });
    }

    let class_index = |l: u16| class_ids.binary_search(&l).expect("label seen above");

    let mut counts = vec![0usize; c];
    let mut class_means = Array2::<f64>::zeros((c, d));
    for (i, &l) in labels.iter().enumerate() {
        let k = class_index(l);
        counts[k] += 1;
        let mut row = class_means.row_mut(k);
        row += &features.row(i);
    }
    for (k, &count) in counts.iter().enumerate() {
        let mut row = class_means.row_mut(k);
        row /= count as f64;
    }
    let global_mean = features.mean_axis(Axis(0)).expect("nonempty");

    // Within-class scatter, two passes so that identical rows give an
    // exactly zero contribution.
    let mut sw = DMatrix::<f64>::zeros(d, d);
    let mut diff = vec![0.0; d];
    for (i, &l) in labels.iter().enumerate() {
        let k = class_index(l);
        for (q, dv) in diff.iter_mut().enumerate() {
            *dv = features[[i, q]] - class_means[[k, q]];
        }
        for a in 0..d {
            let da = diff[a];
            if da != 0.0 {
                for b in a..d {
                    sw[(a, b)] += da * diff[b];
                }
            }
        }
    }
    for a in 0..d {
        for b in (a + 1)..d {
            sw[(b, a)] = sw[(a, b)];
        }
    }
    let trace_w: f64 = (0..d).map(|i| sw[(i, i)]).sum();

    let mut a_mat = DMatrix::<f64>::zeros(d, c);
    for k in 0..c {
        let w = (counts[k] as f64).sqrt();
        for q in 0..d {
            a_mat[(q, k)] = w * (class_means[[k, q]] - global_mean[q]);
        }
    }
    let trace_b: f64 = a_mat.iter().map(|v| v * v).sum();

    // Shrinkage target trace(S_w)/D; when the within-class scatter is
    // numerically zero the target degenerates too, so fall back to the
    // plain identity to keep gamma > 0 usable on separable data.
    let target = if trace_w <= 1e-10 * (trace_w + trace_b) {
        1.0
    } else {
        trace_w / d as f64
    };
    sw *= 1.0 - shrinkage;
    for i in 0..d {
        sw[(i, i)] += shrinkage * target;
    }

    let chol = Cholesky::new(sw).ok_or(Error::SingularScatter)?;
    let l = chol.l();
    let w = l
        .solve_lower_triangular(&a_mat)
        .ok_or(Error::SingularScatter)?;
    let small = w.transpose() * &w;
    let eig = SymmetricEigen::new(small);

    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .expect("finite eigenvalues")
            .then(i.cmp(&j))
    });
    let lam_max = eig.eigenvalues[order[0]].max(0.0);
    let rank = order
        .iter()
        .take_while(|&&i| eig.eigenvalues[i] > lam_max * 1e-12 && eig.eigenvalues[i] > 0.0)
        .count();
    if out_dim > rank {
        return Err(Error::ProjectionDimension {
            requested: out_dim,
            max: rank,
        });
    }

    let mut projection = Array2::<f64>::zeros((d, out_dim));
    let mut eigenvalues = Vec::with_capacity(out_dim);
    for (col, &oi) in order.iter().take(out_dim).enumerate() {
        let s: DVector<f64> = eig.eigenvectors.column(oi).into();
        let ws = &w * s;
        let norm = ws.norm();
        let u = ws / norm;
        let mut v = l
            .tr_solve_lower_triangular(&u)
            .ok_or(Error::SingularScatter)?;

        let mut score = 0.0;
        for k in 0..c {
            let mut p = 0.0;
            for q in 0..d {
                p += (class_means[[k, q]] - global_mean[q]) * v[q];
            }
            score += f64::from(class_ids[k]) * p;
        }
        let flip = if score < 0.0 {
            true
        } else if score > 0.0 {
            false
        } else {
            v.iter().find(|x| **x != 0.0).is_some_and(|x| *x < 0.0)
        };
        if flip {
            v.neg_mut();
        }

        for q in 0..d {
            projection[[q, col]] = v[q];
        }
        eigenvalues.push(eig.eigenvalues[oi]);
    }

    Ok(LdaModel {
        projection,
        class_ids,
        class_means,
        global_mean,
        eigenvalues,
        shrinkage,
    })
}

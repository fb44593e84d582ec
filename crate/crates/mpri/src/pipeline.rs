//! The multiscale relevant-information pipeline: per-pixel PRI
//! characterization across window scales and beta values, per-layer
//! concatenation and regularized LDA, layer stacking with each layer's
//! reduced output feeding the next, and final cross-layer concatenation.

use ndarray::{s, Array1, Array2, ArrayView1};
use rayon::prelude::*;

use crate::cube::HyperCube;
use crate::error::{Error, Result};
use crate::itl::{KernelWidth, Sample};
use crate::lda::{fit_regularized_lda, LdaModel};
use crate::solver::{fixed_point_step_at, pri_solve, PriConfig};

/// Per-layer kernel-width policy.
#[derive(Debug, Clone, PartialEq)]
pub enum BandwidthPolicy {
    /// Midpoint of the Silverman range of the layer's input pixels.
    SilvermanMidpoint,
    /// Explicit width per layer; layers past the end of the list reuse the
    /// last entry.
    Fixed(Vec<f64>),
}

/// Which window rows move during the sweeps of one characterization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepMode {
    /// Every window vector iterates; the center row is read out at the end.
    #[default]
    FullWindow,
    /// Only the center row iterates against the fixed window.
    CenterOnly,
}

/// Settings for the full pipeline. `lda_dim = None` means one less than the
/// number of training classes.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Odd window widths, one spatial scale each.
    pub scales: Vec<usize>,
    /// Relevance trade-offs characterized per scale. Nonnegative.
    pub betas: Vec<f64>,
    pub layers: usize,
    /// Fixed-point sweeps per window.
    pub tau: usize,
    pub bandwidth: BandwidthPolicy,
    pub lda_shrinkage: f64,
    pub lda_dim: Option<usize>,
    pub sweep: SweepMode,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            scales: vec![3, 5, 7, 9, 11, 13],
            betas: vec![2.0, 3.0, 4.0],
            layers: 5,
            tau: 3,
            bandwidth: BandwidthPolicy::SilvermanMidpoint,
            lda_shrinkage: 0.1,
            lda_dim: None,
            sweep: SweepMode::FullWindow,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scales.is_empty() {
            return Err(Error::InvalidConfig("scales must be nonempty".into()));
        }
        for &w in &self.scales {
            if w % 2 == 0 {
                return Err(Error::EvenWindowWidth(w));
            }
        }
        if self.betas.is_empty() {
            return Err(Error::InvalidConfig("betas must be nonempty".into()));
        }
        for &b in &self.betas {
            if !b.is_finite() || b < 0.0 {
                return Err(Error::InvalidBeta(b));
            }
        }
        if self.layers == 0 {
            return Err(Error::InvalidConfig("layers must be at least 1".into()));
        }
        if self.tau == 0 {
            return Err(Error::InvalidConfig("tau must be at least 1".into()));
        }
        if !self.lda_shrinkage.is_finite()
            || !(0.0..=1.0).contains(&self.lda_shrinkage)
        {
            return Err(Error::InvalidConfig(format!(
                "lda_shrinkage must lie in [0, 1], got {}",
                self.lda_shrinkage
            )));
        }
        if self.lda_dim == Some(0) {
            return Err(Error::InvalidConfig("lda_dim must be at least 1".into()));
        }
        if let BandwidthPolicy::Fixed(deltas) = &self.bandwidth {
            if deltas.is_empty() {
                return Err(Error::InvalidConfig(
                    "fixed bandwidth list must be nonempty".into(),
                ));
            }
            for &d in deltas {
                KernelWidth::new(d)?;
            }
        }
        Ok(())
    }

    /// Kernel width for `layer` (0-based) given that layer's input pixels.
    pub fn layer_delta(&self, input: &HyperCube, layer: usize) -> Result<KernelWidth> {
        match &self.bandwidth {
            BandwidthPolicy::SilvermanMidpoint => {
                let (lo, hi) = silverman_range(&pixels_sample(input)?)?;
                KernelWidth::new(0.5 * (lo.get() + hi.get()))
            }
            BandwidthPolicy::Fixed(deltas) => {
                KernelWidth::new(deltas[layer.min(deltas.len() - 1)])
            }
        }
    }
}

/// Per-pixel feature vectors over an `rows x cols` grid. Feature row
/// `r * cols + c` holds pixel `(r, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Array2<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Array2<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.ncols() == 0 {
            return Err(Error::EmptyImage);
        }
        if data.nrows() != rows * cols {
            return Err(Error::DimensionMismatch {
                left: rows * cols,
                right: data.nrows(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature matrix"));
        }
        Ok(FeatureMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of pixels (feature rows).
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Feature dimension.
    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn feature(&self, row: usize, col: usize) -> ArrayView1<'_, f64> {
        self.data.row(row * self.cols + col)
    }

    /// Reinterpret as a cube with one band per feature dimension.
    pub fn to_cube(&self) -> Result<HyperCube> {
        HyperCube::from_flat(
            self.rows,
            self.cols,
            self.dim(),
            self.data.iter().copied().collect(),
        )
    }

    /// View every pixel of `cube` as one feature row.
    pub fn from_cube(cube: &HyperCube) -> FeatureMatrix {
        let data = Array2::from_shape_vec(
            (cube.pixels(), cube.bands()),
            cube.data().iter().copied().collect(),
        )
        .expect("cube is dense pixel-major");
        FeatureMatrix {
            rows: cube.rows(),
            cols: cube.cols(),
            data,
        }
    }

    /// Feature rows and labels for the given labeled pixels.
    pub fn gather(&self, pixels: &[(usize, usize, u16)]) -> Result<(Array2<f64>, Vec<u16>)> {
        let mut out = Array2::zeros((pixels.len(), self.dim()));
        let mut labels = Vec::with_capacity(pixels.len());
        for (i, &(r, c, l)) in pixels.iter().enumerate() {
            if r >= self.rows || c >= self.cols {
                return Err(Error::PixelOutOfBounds {
                    row: r,
                    col: c,
                    rows: self.rows,
                    cols: self.cols,
                });
            }
            out.row_mut(i).assign(&self.feature(r, c));
            labels.push(l);
        }
        Ok((out, labels))
    }
}

/// One spectral-spatial unit's output: reduced per-pixel features plus the
/// dimensions and kernel width the unit used.
#[derive(Debug, Clone)]
pub struct LayerOutput {
    pub features: FeatureMatrix,
    pub raw_dim: usize,
    pub reduced_dim: usize,
    pub delta: KernelWidth,
}

/// Kernel-width range from the multivariate rule of thumb: the factor
/// `(4/(d+2))^{1/(d+4)} * n^{-1/(d+4)}` times the smallest and largest
/// per-dimension sample standard deviations. Dimensions with zero deviation
/// are excluded from the lower end.
pub fn silverman_range(sample: &Sample) -> Result<(KernelWidth, KernelWidth)> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let d = sample.dim();
    let pts = sample.points();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for j in 0..d {
        let col = pts.column(j);
        let mean = col.sum() / n as f64;
        let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
        let sd = (ss / (n - 1) as f64).sqrt();
        if sd > 0.0 {
            lo = lo.min(sd);
            hi = hi.max(sd);
        }
    }
    if hi == 0.0 {
        return Err(Error::ConstantSample);
    }
    let df = d as f64;
    let factor = (4.0 / (df + 2.0)).powf(1.0 / (df + 4.0)) * (n as f64).powf(-1.0 / (df + 4.0));
    Ok((KernelWidth::new(factor * lo)?, KernelWidth::new(factor * hi)?))
}

fn pixels_sample(cube: &HyperCube) -> Result<Sample> {
    Sample::new(
        Array2::from_shape_vec(
            (cube.pixels(), cube.bands()),
            cube.data().iter().copied().collect(),
        )
        .expect("cube is dense pixel-major"),
    )
}

/// Solve settings for one window: kernel width, sweep count, and which rows
/// move.
#[derive(Debug, Clone, Copy)]
pub struct WindowSolve {
    pub delta: KernelWidth,
    pub tau: usize,
    pub sweep: SweepMode,
}

/// New representation of pixel `(row, col)` at one scale and one beta: the
/// center row of the window's PRI solution. `beta = 0` short-circuits to the
/// window mean in either sweep mode.
pub fn characterize_pixel(
    cube: &HyperCube,
    row: usize,
    col: usize,
    width: usize,
    beta: f64,
    cfg: WindowSolve,
) -> Result<Array1<f64>> {
    let window = cube.extract_window(row, col, width)?;
    let center = window.center_index();
    let pri = PriConfig {
        tau: cfg.tau,
        ..PriConfig::new(beta, cfg.delta)
    };
    if beta == 0.0 || matches!(cfg.sweep, SweepMode::FullWindow) {
        let (y, _) = pri_solve(window.points(), &pri, None)?;
        return Ok(y.row(center).to_owned());
    }
    let x = window.points();
    let mut y = x.clone();
    for _ in 0..cfg.tau {
        y = fixed_point_step_at(&y, x, &pri, center)?;
    }
    Ok(y.row(center).to_owned())
}

/// Raw (pre-LDA) per-pixel features: `characterize_pixel` concatenated over
/// every scale and every beta, scale-major then beta, giving
/// `bands * scales * betas` values per pixel. Pixels are processed in
/// parallel; the output is identical for any thread count.
pub fn characterize_cube(
    cube: &HyperCube,
    cfg: &PipelineConfig,
    delta: KernelWidth,
) -> Result<FeatureMatrix> {
    cfg.validate()?;
    let d = cube.bands();
    let raw_dim = d * cfg.scales.len() * cfg.betas.len();
    let cols = cube.cols();
    let solve = WindowSolve {
        delta,
        tau: cfg.tau,
        sweep: cfg.sweep,
    };
    let rows_vec: Vec<Vec<f64>> = (0..cube.pixels())
        .into_par_iter()
        .map(|idx| -> Result<Vec<f64>> {
            let (r, c) = (idx / cols, idx % cols);
            let mut out = Vec::with_capacity(raw_dim);
            for &width in &cfg.scales {
                for &beta in &cfg.betas {
                    let v = characterize_pixel(cube, r, c, width, beta, solve)?;
                    out.extend(v.iter());
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut flat = Vec::with_capacity(cube.pixels() * raw_dim);
    for row in rows_vec {
        flat.extend(row);
    }
    let data = Array2::from_shape_vec((cube.pixels(), raw_dim), flat)
        .expect("one raw_dim row per pixel");
    FeatureMatrix::new(cube.rows(), cube.cols(), data)
}

/// One spectral-spatial feature learning unit: raw multiscale multi-beta
/// characterization of every pixel, regularized LDA fitted on the training
/// pixels only, and projection of all pixels. `layer_index` is 0-based and
/// selects the fixed bandwidth entry when that policy is active.
pub fn spectral_spatial_unit(
    cube: &HyperCube,
    labels_train: &[(usize, usize, u16)],
    cfg: &PipelineConfig,
    layer_index: usize,
) -> Result<(LayerOutput, LdaModel)> {
    cfg.validate()?;
    if labels_train.is_empty() {
        return Err(Error::NoLabeledPixels);
    }
    let delta = cfg.layer_delta(cube, layer_index)?;
    let raw = characterize_cube(cube, cfg, delta)?;
    assert_eq!(
        raw.dim(),
        cube.bands() * cfg.scales.len() * cfg.betas.len(),
        "raw dimension bookkeeping"
    );
    let (train_x, train_y) = raw.gather(labels_train)?;
    let classes = {
        let mut ids = train_y.clone();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    };
    let out_dim = cfg.lda_dim.unwrap_or_else(|| classes.saturating_sub(1).max(1));
    let model = fit_regularized_lda(&train_x, &train_y, cfg.lda_shrinkage, out_dim)?;
    let projected = model.project(raw.data())?;
    let features = FeatureMatrix::new(raw.rows(), raw.cols(), projected)?;
    let output = LayerOutput {
        features,
        raw_dim: raw.dim(),
        reduced_dim: out_dim,
        delta,
    };
    Ok((output, model))
}

/// Full stacked pipeline returning both the final concatenated features and
/// each layer's output. Layer 1 consumes the normalized cube; layer `l + 1`
/// consumes layer `l`'s reduced features reinterpreted as a cube. The final
/// per-pixel feature concatenates all layer outputs in depth order.
pub fn run_pipeline_with_trace(
    cube: &HyperCube,
    labels_train: &[(usize, usize, u16)],
    cfg: &PipelineConfig,
) -> Result<(FeatureMatrix, Vec<LayerOutput>)> {
    cfg.validate()?;
    let mut outputs: Vec<LayerOutput> = Vec::with_capacity(cfg.layers);
    let mut input = cube.normalize();
    for layer in 0..cfg.layers {
        let (out, _model) = spectral_spatial_unit(&input, labels_train, cfg, layer)
            .map_err(|e| e.in_stage(format!("layer {}", layer + 1)))?;
        if layer + 1 < cfg.layers {
            input = out.features.to_cube()?;
        }
        outputs.push(out);
    }

    let total: usize = outputs.iter().map(|o| o.reduced_dim).sum();
    assert_eq!(
        total,
        cfg.layers * outputs[0].reduced_dim,
        "final dimension bookkeeping"
    );
    let mut concat = Array2::zeros((cube.pixels(), total));
    let mut off = 0;
    for out in &outputs {
        concat
            .slice_mut(s![.., off..off + out.reduced_dim])
            .assign(out.features.data());
        off += out.reduced_dim;
    }
    let features = FeatureMatrix::new(cube.rows(), cube.cols(), concat)?;
    Ok((features, outputs))
}

/// [`run_pipeline_with_trace`] without the per-layer outputs.
pub fn run_pipeline(
    cube: &HyperCube,
    labels_train: &[(usize, usize, u16)],
    cfg: &PipelineConfig,
) -> Result<FeatureMatrix> {
    run_pipeline_with_trace(cube, labels_train, cfg).map(|(features, _)| features)
}

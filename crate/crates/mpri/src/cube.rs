//! Data model and binary I/O for 3D image cubes and label maps, plus the
//! synthetic generators used by the demo and the test harness.
//!
//! A cube is an `m x n` image with `d` values per pixel, stored pixel-major
//! (row, col, band). Windows are extracted with mirror padding (reflection
//! without repeating the border sample), so every window has exactly
//! `width^2` rows regardless of image position and no foreign statistics
//! are injected at the borders.
//!
//! File formats are fixed and bit-exact:
//!
//! * cube: magic `PRICUBE1`, little-endian u32 `m, n, d`, then `m*n*d`
//!   little-endian 32-bit floats, pixel-major;
//! * labels: magic `PRILAB01`, little-endian u32 `m, n`, then `m*n`
//!   little-endian u16 class ids, row-major, 0 meaning unlabeled.

use std::path::Path;

use ndarray::{s, Array2, Array3, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::itl::Sample;

pub const CUBE_MAGIC: &[u8; 8] = b"PRICUBE1";
pub const LABEL_MAGIC: &[u8; 8] = b"PRILAB01";

/// An `m x n x d` cube of finite reals, indexed `[row, col, band]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperCube {
    data: Array3<f64>,
}

impl HyperCube {
    pub fn new(data: Array3<f64>) -> Result<Self> {
        let (m, n, d) = data.dim();
        if m == 0 || n == 0 || d == 0 {
            return Err(Error::EmptyImage);
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("cube values"));
        }
        Ok(HyperCube { data })
    }

    /// Build from a pixel-major flat vector of length `rows * cols * bands`.
    pub fn from_flat(rows: usize, cols: usize, bands: usize, values: Vec<f64>) -> Result<Self> {
        let data = Array3::from_shape_vec((rows, cols, bands), values).map_err(|_| {
            Error::InvalidConfig("flat data length does not equal rows*cols*bands".into())
        })?;
        HyperCube::new(data)
    }

    pub fn rows(&self) -> usize {
        self.data.dim().0
    }

    pub fn cols(&self) -> usize {
        self.data.dim().1
    }

    pub fn bands(&self) -> usize {
        self.data.dim().2
    }

    pub fn pixels(&self) -> usize {
        self.rows() * self.cols()
    }

    pub fn data(&self) -> &Array3<f64> {
        &self.data
    }

    pub fn pixel(&self, row: usize, col: usize) -> ArrayView1<'_, f64> {
        self.data.slice(s![row, col, ..])
    }

    /// Per-band min-max scaling to `[0, 1]`; constant bands map to 0.
    /// Idempotent and order-preserving within each band.
    pub fn normalize(&self) -> HyperCube {
        let mut out = self.data.clone();
        for b in 0..self.bands() {
            let band = self.data.slice(s![.., .., b]);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &v in band.iter() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let mut target = out.slice_mut(s![.., .., b]);
            if hi > lo {
                target.mapv_inplace(|v| (v - lo) / (hi - lo));
            } else {
                target.fill(0.0);
            }
        }
        HyperCube { data: out }
    }

    /// The `width x width` neighborhood of `(row, col)` flattened row-major
    /// into a sample, out-of-image positions filled by mirror reflection.
    /// Requires odd `width` no larger than `2*min(m, n) - 1` (one reflection
    /// reaches at most one image length).
    pub fn extract_window(&self, row: usize, col: usize, width: usize) -> Result<Window> {
        if width % 2 == 0 {
            return Err(Error::EvenWindowWidth(width));
        }
        let (m, n, d) = self.data.dim();
        let limit = 2 * m.min(n) - 1;
        if width > limit {
            return Err(Error::WindowTooWide {
                width,
                limit,
                rows: m,
                cols: n,
            });
        }
        if row >= m || col >= n {
            return Err(Error::PixelOutOfBounds {
                row,
                col,
                rows: m,
                cols: n,
            });
        }

        let half = (width / 2) as isize;
        let mut pts = Array2::zeros((width * width, d));
        let mut k = 0;
        for dr in -half..=half {
            let r = reflect(row as isize + dr, m);
            for dc in -half..=half {
                let c = reflect(col as isize + dc, n);
                pts.row_mut(k).assign(&self.data.slice(s![r, c, ..]));
                k += 1;
            }
        }
        Ok(Window {
            width,
            center_index: (width / 2) * width + width / 2,
            points: Sample::new(pts)?,
        })
    }
}

/// Reflect an out-of-range coordinate back into `[0, n)` without repeating
/// the border sample: -1 -> 1, n -> n-2.
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let j = if i < 0 {
        -i
    } else if i >= n {
        2 * n - 2 - i
    } else {
        i
    };
    j as usize
}

/// One extracted neighborhood: `width^2` spectra, the pixel's own spectrum
/// at `center_index`.
#[derive(Debug, Clone)]
pub struct Window {
    width: usize,
    center_index: usize,
    points: Sample,
}

impl Window {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn center_index(&self) -> usize {
        self.center_index
    }

    pub fn points(&self) -> &Sample {
        &self.points
    }

    pub fn center(&self) -> ArrayView1<'_, f64> {
        self.points.row(self.center_index)
    }

    pub fn into_sample(self) -> Sample {
        self.points
    }
}

/// An `m x n` map of class ids; 0 means unlabeled, classes are `1..=C`.
/// Holds at least one labeled pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    labels: Array2<u16>,
}

impl LabelMap {
    pub fn new(labels: Array2<u16>) -> Result<Self> {
        if labels.nrows() == 0 || labels.ncols() == 0 {
            return Err(Error::EmptyImage);
        }
        if labels.iter().all(|&l| l == 0) {
            return Err(Error::NoLabeledPixels);
        }
        Ok(LabelMap { labels })
    }

    pub fn rows(&self) -> usize {
        self.labels.nrows()
    }

    pub fn cols(&self) -> usize {
        self.labels.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.labels[[row, col]]
    }

    pub fn labels(&self) -> &Array2<u16> {
        &self.labels
    }

    /// Largest class id present; class ids are assumed dense in `1..=C`.
    pub fn max_class(&self) -> u16 {
        *self.labels.iter().max().expect("nonempty")
    }

    /// Sorted distinct nonzero class ids.
    pub fn distinct_classes(&self) -> Vec<u16> {
        let mut ids: Vec<u16> = self.labels.iter().copied().filter(|&l| l > 0).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn labeled_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l > 0).count()
    }

    /// Labeled pixels in row-major order as `(row, col, class)`.
    pub fn iter_labeled(&self) -> impl Iterator<Item = (usize, usize, u16)> + '_ {
        let cols = self.cols();
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 0)
            .map(move |(i, &l)| (i / cols, i % cols, l))
    }
}

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

fn read_u32_at(bytes: &[u8], offset: usize, path: &str, what: &str) -> Result<u32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(Error::format(
            path,
            bytes.len() as u64,
            format!("truncated before {what}"),
        ));
    }
    Ok(u32::from_le_bytes(bytes[offset..end].try_into().unwrap()))
}

fn read_positive_dim(bytes: &[u8], offset: usize, path: &str, what: &str) -> Result<usize> {
    let v = read_u32_at(bytes, offset, path, what)?;
    if v == 0 {
        return Err(Error::format(
            path,
            offset as u64,
            format!("{what} must be positive"),
        ));
    }
    Ok(v as usize)
}

pub fn load_cube(path: impl AsRef<Path>) -> Result<HyperCube> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path_str(path), e))?;
    parse_cube(&bytes, &path_str(path))
}

fn parse_cube(bytes: &[u8], path: &str) -> Result<HyperCube> {
    if bytes.len() < 8 || &bytes[..8] != CUBE_MAGIC {
        return Err(Error::format(path, 0, "bad magic, expected PRICUBE1"));
    }
    let m = read_positive_dim(bytes, 8, path, "row count")?;
    let n = read_positive_dim(bytes, 12, path, "column count")?;
    let d = read_positive_dim(bytes, 16, path, "band count")?;
    let count = (m as u64) * (n as u64) * (d as u64);
    let expected = 20 + count * 4;
    if (bytes.len() as u64) < expected {
        return Err(Error::format(
            path,
            bytes.len() as u64,
            format!(
                "truncated payload: {m}x{n}x{d} needs {expected} bytes, file has {}",
                bytes.len()
            ),
        ));
    }
    if bytes.len() as u64 > expected {
        return Err(Error::format(path, expected, "trailing bytes after payload"));
    }
    let mut values = Vec::with_capacity(count as usize);
    for (i, chunk) in bytes[20..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::format(
                path,
                20 + (i as u64) * 4,
                "non-finite value in payload",
            ));
        }
        values.push(v as f64);
    }
    HyperCube::from_flat(m, n, d, values)
}

/// Values are stored as 32-bit floats; anything not representable in that
/// range is rejected rather than silently saturated.
pub fn save_cube(cube: &HyperCube, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (m, n, d) = cube.data.dim();
    let mut bytes = Vec::with_capacity(20 + m * n * d * 4);
    bytes.extend_from_slice(CUBE_MAGIC);
    bytes.extend_from_slice(&(m as u32).to_le_bytes());
    bytes.extend_from_slice(&(n as u32).to_le_bytes());
    bytes.extend_from_slice(&(d as u32).to_le_bytes());
    for &v in cube.data.iter() {
        let f = v as f32;
        if !f.is_finite() {
            return Err(Error::NonFinite("cube value outside 32-bit float range"));
        }
        bytes.extend_from_slice(&f.to_le_bytes());
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path_str(path), e))
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelMap> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path_str(path), e))?;
    parse_labels(&bytes, &path_str(path))
}

fn parse_labels(bytes: &[u8], path: &str) -> Result<LabelMap> {
    if bytes.len() < 8 || &bytes[..8] != LABEL_MAGIC {
        return Err(Error::format(path, 0, "bad magic, expected PRILAB01"));
    }
    let m = read_positive_dim(bytes, 8, path, "row count")?;
    let n = read_positive_dim(bytes, 12, path, "column count")?;
    let count = (m as u64) * (n as u64);
    let expected = 16 + count * 2;
    if (bytes.len() as u64) < expected {
        return Err(Error::format(
            path,
            bytes.len() as u64,
            format!(
                "truncated payload: {m}x{n} needs {expected} bytes, file has {}",
                bytes.len()
            ),
        ));
    }
    if bytes.len() as u64 > expected {
        return Err(Error::format(path, expected, "trailing bytes after payload"));
    }
    let values: Vec<u16> = bytes[16..]
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let labels = Array2::from_shape_vec((m, n), values).expect("shape");
    LabelMap::new(labels)
}

pub fn save_labels(labels: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (m, n) = (labels.rows(), labels.cols());
    let mut bytes = Vec::with_capacity(16 + m * n * 2);
    bytes.extend_from_slice(LABEL_MAGIC);
    bytes.extend_from_slice(&(m as u32).to_le_bytes());
    bytes.extend_from_slice(&(n as u32).to_le_bytes());
    for &l in labels.labels.iter() {
        bytes.extend_from_slice(&l.to_le_bytes());
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path_str(path), e))
}

/// Two line segments crossing at the origin with slopes +-0.55, plus i.i.d.
/// Gaussian coordinate noise. Deterministic for a given seed.
pub fn synth_intersect(n_points: usize, noise_sd: f64, seed: u64) -> Result<Sample> {
    if n_points < 4 {
        return Err(Error::TooFewPoints {
            needed: 4,
            got: n_points,
        });
    }
    if !noise_sd.is_finite() || noise_sd < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "noise_sd must be a nonnegative real, got {noise_sd}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sd).expect("finite sd");
    let first = n_points.div_ceil(2);
    let mut pts = Array2::zeros((n_points, 2));
    for i in 0..n_points {
        let t: f64 = rng.gen_range(-1.0..1.0);
        let slope = if i < first { 0.55 } else { -0.55 };
        pts[[i, 0]] = t + noise.sample(&mut rng);
        pts[[i, 1]] = t * slope + noise.sample(&mut rng);
    }
    Sample::new(pts)
}

/// Layout of the synthetic labeled cube: `rows x cols` pixels tiled by
/// square blocks of side `block`, block class ids cycling `1..=classes`
/// in row-major tile order.
#[derive(Debug, Clone)]
pub struct BlockSpec {
    pub rows: usize,
    pub cols: usize,
    pub block: usize,
    pub classes: usize,
}

impl BlockSpec {
    fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 || self.block == 0 {
            return Err(Error::InvalidConfig(
                "block layout dimensions must be positive".into(),
            ));
        }
        if self.classes < 2 {
            return Err(Error::TooFewClasses(self.classes));
        }
        if self.classes > usize::from(u16::MAX) {
            return Err(Error::InvalidConfig(format!(
                "at most {} classes supported, got {}",
                u16::MAX,
                self.classes
            )));
        }
        let tiles = self.rows.div_ceil(self.block) * self.cols.div_ceil(self.block);
        if tiles < self.classes {
            return Err(Error::InvalidConfig(format!(
                "{tiles} blocks cannot cover {} classes",
                self.classes
            )));
        }
        Ok(())
    }

    fn class_at(&self, row: usize, col: usize) -> u16 {
        let tr = row / self.block;
        let tc = col / self.block;
        let tiles_c = self.cols.div_ceil(self.block);
        ((tr * tiles_c + tc) % self.classes + 1) as u16
    }
}

/// Mean spectrum of class `c` (1-based): a phase-shifted sinusoid over the
/// band axis plus a small per-class offset, so spectra stay distinct even
/// for one band.
fn class_mean(c: u16, classes: usize, band: usize, bands: usize) -> f64 {
    let phase = 2.0 * std::f64::consts::PI * f64::from(c - 1) / classes as f64;
    let t = 2.0 * std::f64::consts::PI * (band as f64 + 0.5) / bands as f64;
    let offset = 0.08 * (2.0 * f64::from(c - 1) / (classes as f64 - 1.0) - 1.0);
    0.5 + 0.35 * (t + phase).sin() + offset
}

/// Fully labeled block cube: per-class mean spectra plus i.i.d. Gaussian
/// noise. Deterministic for a given seed.
pub fn synth_labeled_cube(
    blocks: &BlockSpec,
    bands: usize,
    noise_sd: f64,
    seed: u64,
) -> Result<(HyperCube, LabelMap)> {
    blocks.validate()?;
    if bands == 0 {
        return Err(Error::EmptyImage);
    }
    if !noise_sd.is_finite() || noise_sd < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "noise_sd must be a nonnegative real, got {noise_sd}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sd).expect("finite sd");
    let mut data = Array3::zeros((blocks.rows, blocks.cols, bands));
    let mut labels = Array2::zeros((blocks.rows, blocks.cols));
    for r in 0..blocks.rows {
        for c in 0..blocks.cols {
            let class = blocks.class_at(r, c);
            labels[[r, c]] = class;
            for b in 0..bands {
                data[[r, c, b]] =
                    class_mean(class, blocks.classes, b, bands) + noise.sample(&mut rng);
            }
        }
    }
    Ok((HyperCube::new(data)?, LabelMap::new(labels)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    fn cube_from(values: Vec<f64>, m: usize, n: usize, d: usize) -> HyperCube {
        HyperCube::from_flat(m, n, d, values).unwrap()
    }

    #[test]
    fn zero_cube_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z.cube");
        let cube = cube_from(vec![0.0; 4], 2, 2, 1);
        save_cube(&cube, &path).unwrap();
        let back = load_cube(&path).unwrap();
        assert_eq!(cube, back);
        // Second save reproduces the file byte-for-byte.
        let first = std::fs::read(&path).unwrap();
        let path2 = dir.path().join("z2.cube");
        save_cube(&back, &path2).unwrap();
        assert_eq!(first, std::fs::read(&path2).unwrap());
    }

    #[test]
    fn save_load_of_representable_values_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.cube");
        let cube = cube_from(vec![0.5, -2.25, 3.0, 100.0, -0.125, 7.75], 1, 3, 2);
        save_cube(&cube, &path).unwrap();
        assert_eq!(load_cube(&path).unwrap(), cube);
    }

    #[test]
    fn short_payload_is_a_truncation_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.cube");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(CUBE_MAGIC);
        bytes.extend_from_slice(&145u32.to_le_bytes());
        bytes.extend_from_slice(&145u32.to_le_bytes());
        bytes.extend_from_slice(&200u32.to_le_bytes());
        bytes.extend_from_slice(&[0u8; 64]);
        std::fs::write(&path, bytes).unwrap();
        match load_cube(&path).unwrap_err() {
            Error::Format { message, .. } => assert!(message.contains("truncated")),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn bad_magic_and_trailing_bytes_are_format_errors() {
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("bad.cube");
        std::fs::write(&bad, b"NOTACUBE").unwrap();
        assert!(matches!(
            load_cube(&bad).unwrap_err(),
            Error::Format { offset: 0, .. }
        ));

        let trailing = dir.path().join("trail.cube");
        let cube = cube_from(vec![1.0], 1, 1, 1);
        save_cube(&cube, &trailing).unwrap();
        let mut bytes = std::fs::read(&trailing).unwrap();
        bytes.push(0);
        std::fs::write(&trailing, bytes).unwrap();
        match load_cube(&trailing).unwrap_err() {
            Error::Format { offset, message, .. } => {
                assert_eq!(offset, 24);
                assert!(message.contains("trailing"));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn non_finite_payload_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nan.cube");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(CUBE_MAGIC);
        for dim in [1u32, 2, 1] {
            bytes.extend_from_slice(&dim.to_le_bytes());
        }
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        bytes.extend_from_slice(&f32::NAN.to_le_bytes());
        std::fs::write(&path, bytes).unwrap();
        match load_cube(&path).unwrap_err() {
            Error::Format { offset, .. } => assert_eq!(offset, 24),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn zero_dimension_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("zd.cube");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(CUBE_MAGIC);
        for dim in [1u32, 0, 1] {
            bytes.extend_from_slice(&dim.to_le_bytes());
        }
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            load_cube(&path).unwrap_err(),
            Error::Format { offset: 12, .. }
        ));
    }

    #[test]
    fn normalize_band_examples() {
        let cube = cube_from(vec![10.0, 20.0, 30.0], 3, 1, 1);
        let norm = cube.normalize();
        assert_eq!(norm.data()[[0, 0, 0]], 0.0);
        assert_eq!(norm.data()[[1, 0, 0]], 0.5);
        assert_eq!(norm.data()[[2, 0, 0]], 1.0);

        let constant = cube_from(vec![7.0, 7.0, 7.0], 3, 1, 1);
        assert!(constant.normalize().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn normalize_is_idempotent_and_per_band() {
        let cube = cube_from(vec![1.0, 5.0, -2.0, 0.0, 3.0, 10.0, 0.5, 2.0], 2, 2, 2);
        let once = cube.normalize();
        assert_eq!(once.normalize(), once);
        for b in 0..2 {
            let band = once.data().slice(s![.., .., b]);
            let lo = band.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = band.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(lo, 0.0);
            assert_eq!(hi, 1.0);
        }
    }

    #[test]
    fn interior_window_is_the_literal_neighborhood() {
        // 4x4x1 with v(r,c) = 4r + c.
        let cube = cube_from((0..16).map(f64::from).collect(), 4, 4, 1);
        let w = cube.extract_window(1, 2, 3).unwrap();
        let got: Vec<f64> = w.points().points().column(0).to_vec();
        assert_eq!(got, vec![1.0, 2.0, 3.0, 5.0, 6.0, 7.0, 9.0, 10.0, 11.0]);
        assert_eq!(w.center_index(), 4);
        assert_eq!(w.center()[0], 6.0);
    }

    #[test]
    fn corner_window_reflects_without_repeating_border() {
        // 3x3x1 with v(r,c) = 3r + c; window at (0,0).
        let cube = cube_from((0..9).map(f64::from).collect(), 3, 3, 1);
        let w = cube.extract_window(0, 0, 3).unwrap();
        let got: Vec<f64> = w.points().points().column(0).to_vec();
        assert_eq!(got, vec![4.0, 3.0, 4.0, 1.0, 0.0, 1.0, 4.0, 3.0, 4.0]);
    }

    #[test]
    fn width_one_window_is_the_pixel_spectrum() {
        let cube = cube_from(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0], 2, 2, 2);
        let w = cube.extract_window(1, 0, 1).unwrap();
        assert_eq!(w.points().len(), 1);
        assert_eq!(w.center_index(), 0);
        assert_eq!(w.center().to_vec(), vec![5.0, 6.0]);
    }

    #[test]
    fn window_validation_errors() {
        let cube = cube_from((0..9).map(f64::from).collect(), 3, 3, 1);
        assert!(matches!(
            cube.extract_window(0, 0, 2).unwrap_err(),
            Error::EvenWindowWidth(2)
        ));
        assert!(matches!(
            cube.extract_window(0, 0, 7).unwrap_err(),
            Error::WindowTooWide { width: 7, limit: 5, .. }
        ));
        assert!(matches!(
            cube.extract_window(3, 0, 3).unwrap_err(),
            Error::PixelOutOfBounds { .. }
        ));
    }

    #[test]
    fn every_window_has_width_squared_rows_and_true_center() {
        let cube = cube_from((0..40).map(f64::from).collect(), 4, 5, 2);
        for width in [1, 3, 5, 7] {
            for r in 0..4 {
                for c in 0..5 {
                    let w = cube.extract_window(r, c, width).unwrap();
                    assert_eq!(w.points().len(), width * width);
                    assert_eq!(w.center().to_vec(), cube.pixel(r, c).to_vec());
                }
            }
        }
    }

    #[test]
    fn windows_match_explicitly_prepadded_cube() {
        let cube = cube_from((0..24).map(|i| (i * i) as f64).collect(), 3, 4, 2);
        let half = 1usize;
        // Pad by one ring of explicit reflection, then compare interior
        // extraction (no padding engaged) against direct extraction.
        let (m, n, d) = (3usize, 4usize, 2usize);
        let mut padded = Array3::zeros((m + 2 * half, n + 2 * half, d));
        for r in 0..m + 2 * half {
            for c in 0..n + 2 * half {
                let sr = reflect(r as isize - half as isize, m);
                let sc = reflect(c as isize - half as isize, n);
                for b in 0..d {
                    padded[[r, c, b]] = cube.data()[[sr, sc, b]];
                }
            }
        }
        let padded = HyperCube::new(padded).unwrap();
        for r in 0..m {
            for c in 0..n {
                let direct = cube.extract_window(r, c, 3).unwrap();
                let via_pad = padded.extract_window(r + half, c + half, 3).unwrap();
                assert_eq!(
                    direct.points().points(),
                    via_pad.points().points(),
                    "pixel ({r},{c})"
                );
            }
        }
    }

    #[test]
    fn intersect_cloud_is_deterministic_and_on_segments_without_noise() {
        let a = synth_intersect(100, 0.0, 9).unwrap();
        let b = synth_intersect(100, 0.0, 9).unwrap();
        assert_eq!(a.points(), b.points());
        let c = synth_intersect(100, 0.0, 10).unwrap();
        assert_ne!(a.points(), c.points());

        assert_eq!(a.len(), 100);
        assert_eq!(a.dim(), 2);
        for i in 0..a.len() {
            let (x, y) = (a.points()[[i, 0]], a.points()[[i, 1]]);
            assert!(
                (y - 0.55 * x).abs() < 1e-12 || (y + 0.55 * x).abs() < 1e-12,
                "point {i} off both segments"
            );
        }
        // Both segments are populated.
        assert!((0..50).all(|i| (a.points()[[i, 1]] - 0.55 * a.points()[[i, 0]]).abs() < 1e-12));
        assert!((50..100).all(|i| (a.points()[[i, 1]] + 0.55 * a.points()[[i, 0]]).abs() < 1e-12));

        assert!(matches!(
            synth_intersect(3, 0.0, 1).unwrap_err(),
            Error::TooFewPoints { needed: 4, got: 3 }
        ));
    }

    #[test]
    fn labeled_cube_is_deterministic_and_separable_without_noise() {
        let spec = BlockSpec {
            rows: 12,
            cols: 12,
            block: 4,
            classes: 3,
        };
        let (cube, labels) = synth_labeled_cube(&spec, 8, 0.0, 42).unwrap();
        let (cube2, labels2) = synth_labeled_cube(&spec, 8, 0.0, 42).unwrap();
        assert_eq!(cube, cube2);
        assert_eq!(labels, labels2);

        assert_eq!(cube.rows(), 12);
        assert_eq!(cube.cols(), 12);
        assert_eq!(cube.bands(), 8);
        assert_eq!(labels.distinct_classes(), vec![1, 2, 3]);
        assert_eq!(labels.labeled_count(), 144);

        // Same class, identical spectra; different classes, different spectra.
        let mut reference: Vec<Option<Vec<f64>>> = vec![None; 4];
        for (r, c, class) in labels.iter_labeled() {
            let spectrum = cube.pixel(r, c).to_vec();
            match &reference[class as usize] {
                None => reference[class as usize] = Some(spectrum),
                Some(prev) => assert_eq!(prev, &spectrum),
            }
        }
        let s1 = reference[1].as_ref().unwrap();
        let s2 = reference[2].as_ref().unwrap();
        let s3 = reference[3].as_ref().unwrap();
        assert_ne!(s1, s2);
        assert_ne!(s2, s3);
        assert_ne!(s1, s3);
    }

    #[test]
    fn labeled_cube_with_noise_changes_per_seed() {
        let spec = BlockSpec {
            rows: 6,
            cols: 6,
            block: 3,
            classes: 2,
        };
        let (a, _) = synth_labeled_cube(&spec, 4, 0.3, 1).unwrap();
        let (b, _) = synth_labeled_cube(&spec, 4, 0.3, 2).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn block_spec_validation() {
        let bad = BlockSpec {
            rows: 4,
            cols: 4,
            block: 4,
            classes: 2,
        };
        // One tile cannot cover two classes.
        assert!(synth_labeled_cube(&bad, 4, 0.0, 0).is_err());
        let one_class = BlockSpec {
            rows: 8,
            cols: 8,
            block: 2,
            classes: 1,
        };
        assert!(matches!(
            synth_labeled_cube(&one_class, 4, 0.0, 0).unwrap_err(),
            Error::TooFewClasses(1)
        ));
    }

    #[test]
    fn label_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.labels");
        let labels = LabelMap::new(array![[1u16, 2, 0], [1, 3, 2]]).unwrap();
        save_labels(&labels, &path).unwrap();
        let back = load_labels(&path).unwrap();
        assert_eq!(labels, back);
        assert_eq!(back.max_class(), 3);
        assert_eq!(back.labeled_count(), 5);

        assert!(matches!(
            LabelMap::new(Array2::zeros((2, 2))).unwrap_err(),
            Error::NoLabeledPixels
        ));

        let bad = dir.path().join("bad.labels");
        std::fs::write(&bad, b"PRILAB99").unwrap();
        assert!(matches!(
            load_labels(&bad).unwrap_err(),
            Error::Format { offset: 0, .. }
        ));
    }

    #[test]
    fn golden_cube_and_labels_parse_bit_exactly() {
        let cube_path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/golden_3x2x2.cube");
        let cube = load_cube(cube_path).unwrap();
        assert_eq!((cube.rows(), cube.cols(), cube.bands()), (3, 2, 2));
        assert_eq!(cube.pixel(0, 0).to_vec(), vec![0.0, 1.0]);
        assert_eq!(cube.pixel(0, 1).to_vec(), vec![0.5, -2.25]);
        assert_eq!(cube.pixel(1, 0).to_vec(), vec![3.5, 7.0]);
        assert_eq!(cube.pixel(1, 1).to_vec(), vec![-0.125, 100.0]);
        assert_eq!(cube.pixel(2, 0).to_vec(), vec![42.5, -1.5]);
        assert_eq!(cube.pixel(2, 1).to_vec(), vec![0.75, 9.0]);

        let dir = tempfile::tempdir().unwrap();
        let resaved = dir.path().join("resaved.cube");
        save_cube(&cube, &resaved).unwrap();
        assert_eq!(
            std::fs::read(cube_path).unwrap(),
            std::fs::read(&resaved).unwrap()
        );

        let label_path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/golden_3x2.labels");
        let labels = load_labels(label_path).unwrap();
        assert_eq!((labels.rows(), labels.cols()), (3, 2));
        assert_eq!(
            labels.labels().iter().copied().collect::<Vec<u16>>(),
            vec![1, 2, 0, 1, 3, 2]
        );
        let relabeled = dir.path().join("resaved.labels");
        save_labels(&labels, &relabeled).unwrap();
        assert_eq!(
            std::fs::read(label_path).unwrap(),
            std::fs::read(&relabeled).unwrap()
        );
    }

    #[test]
    fn class_means_are_distinct_even_for_one_band() {
        for classes in [2usize, 3, 5] {
            for bands in [1usize, 2, 8] {
                for c1 in 1..=classes as u16 {
                    for c2 in (c1 + 1)..=classes as u16 {
                        let diff: f64 = (0..bands)
                            .map(|b| {
                                (class_mean(c1, classes, b, bands)
                                    - class_mean(c2, classes, b, bands))
                                .abs()
                            })
                            .sum();
                        assert!(diff > 1e-3, "classes {c1},{c2} bands {bands}");
                    }
                }
            }
        }
    }

    #[test]
    fn normalize_preserves_order_within_band() {
        let values = vec![3.0, -1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let cube = cube_from(values.clone(), 8, 1, 1);
        let norm = cube.normalize();
        for i in 0..8 {
            for j in 0..8 {
                let before = values[i].partial_cmp(&values[j]).unwrap();
                let after = norm.data()[[i, 0, 0]]
                    .partial_cmp(&norm.data()[[j, 0, 0]])
                    .unwrap();
                assert_eq!(before, after);
            }
        }
        let _ = assert_relative_eq!(norm.data()[[5, 0, 0]], 1.0);
    }
}

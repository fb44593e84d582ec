//! Lossless image emission: indexed-color classification maps where the
//! palette index IS the class id, and RGB scatter plots for point clouds.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::cube::LabelMap;
use crate::error::{Error, Result};
use crate::itl::Sample;

/// Deterministic, id-stable class color: golden-angle hue walk with
/// alternating value so neighboring ids stay distinguishable. Class 0
/// (unlabeled) is black.
pub fn class_color(class: u16) -> [u8; 3] {
    if class == 0 {
        return [0, 0, 0];
    }
    let i = f64::from(class - 1);
    let hue = (i * 137.507_764).rem_euclid(360.0);
    let value = if class % 2 == 0 { 0.70 } else { 0.95 };
    hsv_to_rgb(hue, 0.72, value)
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let c = v * s;
    let x = c * (1.0 - ((h / 60.0).rem_euclid(2.0) - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match h as u32 / 60 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let to_byte = |f: f64| ((f + m) * 255.0).round() as u8;
    [to_byte(r), to_byte(g), to_byte(b)]
}

fn png_error(path: &Path, e: png::EncodingError) -> Error {
    Error::io(
        path.display().to_string(),
        std::io::Error::other(e.to_string()),
    )
}

/// Write `labels` as an 8-bit indexed PNG whose pixel value at `(r, c)` is
/// the class id there. Requires all ids <= 255.
pub fn write_class_map(labels: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let max = labels.max_class();
    if max > 255 {
        return Err(Error::InvalidConfig(format!(
            "indexed map supports class ids up to 255, got {max}"
        )));
    }
    let mut palette = Vec::with_capacity((usize::from(max) + 1) * 3);
    for class in 0..=max {
        palette.extend_from_slice(&class_color(class));
    }
    let indices: Vec<u8> = labels.labels().iter().map(|&l| l as u8).collect();

    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut encoder = png::Encoder::new(
        BufWriter::new(file),
        labels.cols() as u32,
        labels.rows() as u32,
    );
    encoder.set_color(png::ColorType::Indexed);
    encoder.set_depth(png::BitDepth::Eight);
    encoder.set_palette(palette);
    let mut writer = encoder.write_header().map_err(|e| png_error(path, e))?;
    writer
        .write_image_data(&indices)
        .map_err(|e| png_error(path, e))?;
    writer.finish().map_err(|e| png_error(path, e))?;
    Ok(())
}

/// Write point sets as a square RGB scatter image on a white background.
/// The first two coordinates of each point are used; 1-D samples sit on the
/// horizontal axis. Sets are drawn in order, so later sets paint over
/// earlier ones.
pub fn write_scatter(
    sets: &[(&Sample, [u8; 3])],
    size: u32,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    if sets.is_empty() || size < 8 {
        return Err(Error::InvalidConfig(
            "scatter needs at least one point set and size >= 8".into(),
        ));
    }

    let coords = |s: &Sample, i: usize| -> (f64, f64) {
        let row = s.row(i);
        (row[0], if s.dim() > 1 { row[1] } else { 0.0 })
    };

    let mut lo = (f64::INFINITY, f64::INFINITY);
    let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (sample, _) in sets {
        for i in 0..sample.len() {
            let (x, y) = coords(sample, i);
            lo = (lo.0.min(x), lo.1.min(y));
            hi = (hi.0.max(x), hi.1.max(y));
        }
    }
    // 5% margin; degenerate extents become a unit box around the data.
    let pad = |l: f64, h: f64| -> (f64, f64) {
        let span = h - l;
        if span <= 0.0 {
            (l - 0.5, 1.0)
        } else {
            (l - 0.05 * span, 1.1 * span)
        }
    };
    let (x0, xs) = pad(lo.0, hi.0);
    let (y0, ys) = pad(lo.1, hi.1);

    let n = size as usize;
    let mut rgb = vec![255u8; n * n * 3];
    for (sample, color) in sets {
        for i in 0..sample.len() {
            let (x, y) = coords(sample, i);
            let px = ((x - x0) / xs * (n - 1) as f64).round() as isize;
            // Image rows grow downward; data y grows upward.
            let py = ((1.0 - (y - y0) / ys) * (n - 1) as f64).round() as isize;
            for dr in -1..=1isize {
                for dc in -1..=1isize {
                    let (r, c) = (py + dr, px + dc);
                    if (0..n as isize).contains(&r) && (0..n as isize).contains(&c) {
                        let at = (r as usize * n + c as usize) * 3;
                        rgb[at..at + 3].copy_from_slice(color);
                    }
                }
            }
        }
    }

    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), size, size);
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header().map_err(|e| png_error(path, e))?;
    writer
        .write_image_data(&rgb)
        .map_err(|e| png_error(path, e))?;
    writer.finish().map_err(|e| png_error(path, e))?;
    Ok(())
}

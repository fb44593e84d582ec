//! Sliding-window pixel characterization: mirror-padded window extraction
//! and the center-vector PRI representation at several scales and betas.
//!
//! Run with: cargo run --example window_features

use mpri::cube::{synth_labeled_cube, BlockSpec};
use mpri::itl::KernelWidth;
use mpri::pipeline::{characterize_pixel, SweepMode, WindowSolve};

fn main() -> mpri::Result<()> {
    let (cube, labels) = synth_labeled_cube(
        &BlockSpec {
            rows: 7,
            cols: 7,
            block: 4,
            classes: 2,
        },
        3,
        0.05,
        42,
    )?;
    let cube = cube.normalize();

    // A corner window is mirror-padded: width 3 at (0, 0) reflects row and
    // column 1 back across the edge.
    let window = cube.extract_window(0, 0, 3)?;
    println!(
        "corner window: {} points of dimension {}, center index {}",
        window.points().len(),
        window.points().dim(),
        window.center_index()
    );
    println!("center spectrum: {:?}\n", window.center().to_vec());

    let solve = WindowSolve {
        delta: KernelWidth::new(0.35)?,
        tau: 3,
        sweep: SweepMode::FullWindow,
    };
    // A pixel near the block boundary mixes two classes; growing the scale
    // pulls its representation toward the neighborhood structure.
    let (r, c) = (3, 3);
    println!("pixel ({r}, {c}) is class {}", labels.get(r, c));
    for width in [3, 5, 7] {
        for beta in [0.0, 1.0, 3.0] {
            let v = characterize_pixel(&cube, r, c, width, beta, solve)?;
            let shown: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
            println!("width {width}, beta {beta}: [{}]", shown.join(", "));
        }
    }
    Ok(())
}

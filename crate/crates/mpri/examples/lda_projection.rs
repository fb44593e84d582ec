//! Shrinkage-regularized LDA on a toy two-class problem: the learned
//! direction separates the classes, and full shrinkage reduces to the
//! PCA-of-class-means direction.
//!
//! Run with: cargo run --example lda_projection

use mpri::lda::fit_regularized_lda;
use ndarray::Array2;

fn main() -> mpri::Result<()> {
    // Two elongated clusters whose within-class spread points along x.
    let features = Array2::from_shape_vec(
        (8, 2),
        vec![
            0.0, 0.0, 1.0, 0.1, 2.0, -0.1, 3.0, 0.0, // class 1
            0.0, 2.0, 1.0, 2.1, 2.0, 1.9, 3.0, 2.0, // class 2
        ],
    )
    .expect("static shape");
    let labels = vec![1u16, 1, 1, 1, 2, 2, 2, 2];

    let model = fit_regularized_lda(&features, &labels, 0.1, 1)?;
    println!("eigenvalues: {:?}", model.eigenvalues());
    println!(
        "projection column: {:?}",
        model.projection().column(0).to_vec()
    );

    let z = model.project(&features)?;
    let mean = |range: std::ops::Range<usize>| -> f64 {
        range.clone().map(|i| z[[i, 0]]).sum::<f64>() / range.len() as f64
    };
    let (m1, m2) = (mean(0..4), mean(4..8));
    println!("projected class means: {m1:.6} vs {m2:.6}");
    assert!(
        m1 < m2,
        "the sign convention orders class means by class id"
    );

    // Within-class spread along x barely leaks into the projection.
    let spread = (0..4)
        .map(|i| (z[[i, 0]] - m1).abs())
        .fold(0.0f64, f64::max);
    println!("max within-class deviation: {spread:.6}");
    assert!((m2 - m1) > 10.0 * spread);

    // gamma = 1 whitens isotropically, so the direction is the line between
    // the class means, here the y axis.
    let pca = fit_regularized_lda(&features, &labels, 1.0, 1)?;
    let col = pca.projection().column(0);
    let norm = (col[0] * col[0] + col[1] * col[1]).sqrt();
    println!(
        "gamma = 1 direction: [{:.6}, {:.6}]",
        col[0] / norm,
        col[1] / norm
    );
    assert!((col[0] / norm).abs() < 1e-9);
    Ok(())
}

//! The full stacked pipeline on a synthetic labeled cube: split, multiscale
//! multi-beta characterization with per-layer LDA, KNN classification, and
//! the OA/AA/kappa report.
//!
//! Run with: cargo run --example synthetic_pipeline

use mpri::commands::knn_eval;
use mpri::cube::{synth_labeled_cube, BlockSpec};
use mpri::eval::split_train_test;
use mpri::pipeline::{run_pipeline_with_trace, BandwidthPolicy, PipelineConfig, SweepMode};

fn main() -> mpri::Result<()> {
    let (cube, labels) = synth_labeled_cube(
        &BlockSpec {
            rows: 10,
            cols: 10,
            block: 4,
            classes: 3,
        },
        4,
        0.08,
        19,
    )?;
    let split = split_train_test(&labels, 0.15, 19)?;
    println!(
        "cube {}x{}x{}, {} train / {} test pixels",
        cube.rows(),
        cube.cols(),
        cube.bands(),
        split.train.len(),
        split.test.len()
    );

    let cfg = PipelineConfig {
        scales: vec![3, 5],
        betas: vec![2.0, 3.0],
        layers: 2,
        tau: 2,
        bandwidth: BandwidthPolicy::SilvermanMidpoint,
        lda_shrinkage: 0.1,
        lda_dim: None,
        sweep: SweepMode::FullWindow,
    };
    let (features, trace) = run_pipeline_with_trace(&cube, &split.train, &cfg)?;
    for (i, layer) in trace.iter().enumerate() {
        println!(
            "layer {}: delta {:.4}, raw {} -> reduced {}",
            i + 1,
            layer.delta.get(),
            layer.raw_dim,
            layer.reduced_dim
        );
    }
    println!(
        "final features: {} per pixel ({} layers x {})\n",
        features.dim(),
        trace.len(),
        trace[0].reduced_dim
    );

    let report = knn_eval(&features, &split, 1)?;
    print!("{}", report.render());
    Ok(())
}

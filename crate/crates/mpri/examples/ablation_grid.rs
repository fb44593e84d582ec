//! The 8-row ablation grid over {multi-layer, multi-scale, multi-beta} on a
//! small synthetic cube: each axis switched off degrades the configuration
//! toward a single-layer, single-scale, single-beta baseline.
//!
//! Run with: cargo run --example ablation_grid

use mpri::commands::{ablation_config, knn_eval};
use mpri::cube::{synth_labeled_cube, BlockSpec};
use mpri::eval::split_train_test;
use mpri::pipeline::{run_pipeline, PipelineConfig};

fn main() -> mpri::Result<()> {
    let (cube, labels) = synth_labeled_cube(
        &BlockSpec {
            rows: 9,
            cols: 9,
            block: 3,
            classes: 3,
        },
        3,
        0.12,
        31,
    )?;
    let base = PipelineConfig {
        scales: vec![3, 5, 7],
        betas: vec![2.0, 3.0, 4.0],
        layers: 2,
        tau: 2,
        ..PipelineConfig::default()
    };
    let seeds = [1u64, 2];

    println!(
        "{:>12} {:>12} {:>11} {:>10}",
        "multi-layer", "multi-scale", "multi-beta", "mean OA"
    );
    for multi_layer in [true, false] {
        for multi_scale in [true, false] {
            for multi_beta in [true, false] {
                let cfg = ablation_config(&base, multi_layer, multi_scale, multi_beta);
                let mut oa = 0.0;
                for &seed in &seeds {
                    let split = split_train_test(&labels, 0.2, seed)?;
                    let features = run_pipeline(&cube, &split.train, &cfg)?;
                    oa += knn_eval(&features, &split, 1)?.oa();
                }
                let onoff = |v| if v { "on" } else { "off" };
                println!(
                    "{:>12} {:>12} {:>11} {:>10.4}",
                    onoff(multi_layer),
                    onoff(multi_scale),
                    onoff(multi_beta),
                    oa / seeds.len() as f64
                );
            }
        }
    }
    Ok(())
}

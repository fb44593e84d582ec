//! At beta = 1 the PRI update is exactly mean shift: every point climbs to
//! a density mode of the input. Two well-separated pairs yield two modes,
//! matching a hand-rolled mean-shift iteration.
//!
//! Run with: cargo run --example mean_shift_modes

use mpri::commands::distinct_points;
use mpri::itl::{gaussian_kernel, KernelWidth, Sample};
use mpri::solver::{pri_solve, PriConfig};

/// One plain mean-shift pass of `y` against `x`.
fn mean_shift_step(y: &[f64], x: &[f64], width: KernelWidth) -> Vec<f64> {
    y.iter()
        .map(|&p| {
            let mut num = 0.0;
            let mut den = 0.0;
            for &q in x {
                let w = gaussian_kernel(&[p - q], width).unwrap();
                num += w * q;
                den += w;
            }
            num / den
        })
        .collect()
}

fn main() -> mpri::Result<()> {
    let data = [0.0, 0.1, 5.0, 5.1];
    let width = KernelWidth::new(0.5)?;
    let x = Sample::one_dim(&data)?;

    let cfg = PriConfig {
        tau: 200,
        displacement_tol: Some(1e-12),
        ..PriConfig::new(1.0, width)
    };
    let (y, trace) = pri_solve(&x, &cfg, None)?;
    let modes = distinct_points(&y, 1e-3);
    println!(
        "solver: {} sweeps, {} modes: {:?}",
        trace.iterations(),
        modes.len(),
        modes.iter().map(|m| m[0]).collect::<Vec<_>>()
    );

    // The oracle: iterate plain mean shift until it stops moving.
    let mut oracle = data.to_vec();
    loop {
        let next = mean_shift_step(&oracle, &data, width);
        let moved = oracle
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        oracle = next;
        if moved < 1e-12 {
            break;
        }
    }
    let oracle_sample = Sample::one_dim(&oracle)?;
    let oracle_modes = distinct_points(&oracle_sample, 1e-3);
    println!(
        "oracle: {} modes: {:?}",
        oracle_modes.len(),
        oracle_modes.iter().map(|m| m[0]).collect::<Vec<_>>()
    );

    assert_eq!(modes.len(), oracle_modes.len());
    for (a, b) in modes.iter().zip(&oracle_modes) {
        assert!((a[0] - b[0]).abs() < 1e-6);
    }
    println!("solver modes match the mean-shift oracle");
    Ok(())
}

//! The PRI regimes on the two-segment intersect cloud: beta 0 collapses to
//! the mean, beta 1 finds modes, moderate beta traces the segment skeleton,
//! and large beta returns the data nearly unchanged.
//!
//! Run with: cargo run --example pri_regimes

use mpri::commands::distinct_points;
use mpri::cube::synth_intersect;
use mpri::pipeline::silverman_range;
use mpri::solver::{pri_solve, PriConfig};

fn main() -> mpri::Result<()> {
    let x = synth_intersect(400, 0.04, 7)?;
    let (lo, hi) = silverman_range(&x)?;
    let delta = mpri::itl::KernelWidth::new(0.5 * (lo.get() + hi.get()))?;
    println!(
        "400 points, Silverman range [{:.4}, {:.4}], using delta = {:.4}\n",
        lo.get(),
        hi.get(),
        delta.get()
    );

    // Data diameter, for reading the large-beta displacement.
    let mut diameter: f64 = 0.0;
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            let d: f64 = x
                .row(i)
                .iter()
                .zip(x.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            diameter = diameter.max(d.sqrt());
        }
    }

    println!(
        "{:>6} {:>8} {:>14} {:>10} {:>16}",
        "beta", "sweeps", "objective", "distinct", "mean move/diam"
    );
    for beta in [0.0, 1.0, 2.0, 4.0, 100.0] {
        let cfg = PriConfig {
            tau: 30,
            displacement_tol: Some(1e-9),
            ..PriConfig::new(beta, delta)
        };
        let (y, trace) = pri_solve(&x, &cfg, None)?;
        let mean_move: f64 = (0..x.len())
            .map(|i| {
                let d: f64 = x
                    .row(i)
                    .iter()
                    .zip(y.row(i))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                d.sqrt()
            })
            .sum::<f64>()
            / x.len() as f64;
        println!(
            "{:>6} {:>8} {:>14.6} {:>10} {:>16.6}",
            beta,
            trace.iterations(),
            trace.objective_per_iteration.last().unwrap(),
            distinct_points(&y, 1e-3).len(),
            mean_move / diameter
        );
    }
    Ok(())
}

//! Kernel estimators on small samples: Gaussian kernel, information
//! potential, Renyi quadratic entropy, cross potential, and CS divergence.
//!
//! Run with: cargo run --example itl_estimators

use mpri::itl::{
    cross_information_potential, cs_divergence, gaussian_kernel, information_potential,
    renyi_quadratic_entropy, KernelWidth, Sample,
};

fn main() -> mpri::Result<()> {
    let width = KernelWidth::new(1.0)?;

    // A unit-width kernel at distance 1 is exp(-1/2).
    let g = gaussian_kernel(&[1.0], width)?;
    println!("G(1) = {g:.12}  (exp(-1/2) = {:.12})", (-0.5f64).exp());

    // Two points at distance 1: V(Y) averages two unit diagonal terms and
    // two off-diagonal kernels.
    let y = Sample::one_dim(&[0.0, 1.0])?;
    let v = information_potential(&y, width);
    println!("V({{0, 1}})    = {v:.12}");
    println!("H2({{0, 1}})   = {:.12}", renyi_quadratic_entropy(&y, width));

    // The cross potential against a shifted copy drops as the shift grows.
    for shift in [0.0, 0.5, 2.0] {
        let x = Sample::one_dim(&[shift, 1.0 + shift])?;
        let vyx = cross_information_potential(&y, &x, width)?;
        let d = cs_divergence(&y, &x, width)?;
        println!("shift {shift:>3}: V(Y;X) = {vyx:.12}, D_cs = {d:.12}");
    }

    // The divergence of a sample against itself vanishes identically.
    let self_d = cs_divergence(&y, &y, width)?;
    assert_eq!(self_d, 0.0);
    println!("D_cs(Y, Y)   = {self_d}");
    Ok(())
}

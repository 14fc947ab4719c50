//! Observation Gramians on a coarse mesh and the regularized observability curve.
//!
//! Run with `cargo run --release --example observability`.

use kdvb_lab::experiment::{eigen_oracle, nested_regions};
use kdvb_lab::observability::{assemble_gramians, observability_curve, EigenMethod, DEFAULT_TAUS};
use kdvb_lab::Grid;

fn main() -> kdvb_lab::Result<()> {
    let grid = Grid::symmetric(1.0, 64)?;
    let gr = assemble_gramians(&grid, 1.0, 256, (-0.5, 0.5))?;
    for c in observability_curve(&gr, &DEFAULT_TAUS, EigenMethod::Auto)? {
        match c.c_obs {
            Some(v) => println!(
                "tau = {:<6e} floor = {:.3e}  C_obs = {v:.6e}  ({})",
                c.tau, c.floor, c.method
            ),
            None => println!("tau = {:<6e} localized form not positive definite", c.tau),
        }
    }

    let small = assemble_gramians(&Grid::symmetric(1.0, 8)?, 1.0, 64, (-0.5, 0.5))?;
    let dense = observability_curve(&small, &[1e-10], EigenMethod::Dense)?[0]
        .c_obs
        .unwrap_or(f64::NAN);
    println!(
        "n = 8: Cholesky route {dense:.12e}, Schur route {:.12e}",
        eigen_oracle(&small, 1e-10)?
    );

    for region in nested_regions((-0.5, 0.5), 1.0) {
        let g = assemble_gramians(&grid, 1.0, 256, region)?;
        let c = observability_curve(&g, &[1e-10], EigenMethod::Auto)?[0]
            .c_obs
            .unwrap_or(f64::NAN);
        println!(
            "region ({:+.3}, {:+.3}): C_obs = {c:.6e}",
            region.0, region.1
        );
    }
    Ok(())
}

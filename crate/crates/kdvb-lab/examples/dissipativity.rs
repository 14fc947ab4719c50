//! Quadratic form of the discrete generator and the decay of the energy-identity defect.
//!
//! Run with `cargo run --release --example dissipativity`.

use kdvb_lab::experiment::{dissipativity_scan, residual_refinement};
use kdvb_lab::{build_operator, Grid, OperatorKind};

fn main() -> kdvb_lab::Result<()> {
    let grid = Grid::symmetric(1.0, 128)?;
    let scan = dissipativity_scan(&grid, 100, 7)?;
    println!(
        "max (Au, u)/|u|^2 over {} random states: {:.4e}",
        scan.states, scan.max_normalized_form
    );

    let adjoint = build_operator(&grid, OperatorKind::Adjoint)?;
    let u = grid.sample(|x| (1.0 - x * x) * (3.0 * x).cos());
    println!(
        "adjoint form on a smooth state: {:.4e}",
        adjoint.quadratic_form(u.values())
    );

    println!("{:>6} {:>12} {:>8}", "n", "defect", "order");
    for row in residual_refinement(1.0, &[32, 64, 128, 256, 512])? {
        let order = row.order.map_or("-".to_string(), |p| format!("{p:.4}"));
        println!("{:>6} {:>12.4e} {:>8}", row.n, row.residual, order);
    }
    Ok(())
}

//! Weighted contraction on a truncated half-line and the weighted trajectory construction.
//!
//! Run with `cargo run --release --example half_line`.

use kdvb_lab::control::{half_line_trajectory, HalfLineSettings};
use kdvb_lab::evolution::{half_line_grid, weighted_contraction_check};

fn main() -> kdvb_lab::Result<()> {
    for b in [1.0 / 3.0, 0.5, 1.0] {
        let grid = half_line_grid(b, 128)?;
        let u0 = grid.sample(|y| y * y * (-y).exp());
        let c = weighted_contraction_check(b, &grid, &u0, 2.0, 400)?;
        println!(
            "b = {b:.4}: truncation at {:.2}, largest weighted step ratio {:.10}",
            grid.right(),
            c.max_step_ratio
        );

        let mut s = HalfLineSettings::new(b);
        s.nodes = 128;
        let target = grid.sample(|y| (-(y - 3.0) * (y - 3.0)).exp());
        let (_, rep) = half_line_trajectory(&u0, &target, &s)?;
        println!(
            "         initial defect {:e}, weighted terminal defect {:.3e}",
            rep.initial_defect, rep.terminal_defect
        );
    }
    Ok(())
}

//! Connects a free trajectory from `u0` to the free trajectory through a
//! target by a smooth time cutoff plus a compactly supported corrector.
//!
//! Run with `cargo run --release --example cutoff_control`.

use std::f64::consts::PI;

use kdvb_lab::control::{cutoff_trajectory, CutoffSettings, HumSettings};
use kdvb_lab::Grid;

fn main() -> kdvb_lab::Result<()> {
    let grid = Grid::symmetric(1.0, 128)?;
    let u0 = grid.sample(|x| (1.0 + x) * (1.0 - x).powi(2) * x.exp());
    let target = grid.sample(|x| (PI * (x + 1.0)).sin());
    let settings = CutoffSettings {
        horizon: 2.0,
        steps: 400,
        eps: 0.25,
        eps_prime: 0.6,
        region: (-0.5, 0.5),
        hum: HumSettings {
            tau: 1e-10,
            tol: 1e-10,
            max_iterations: 500,
        },
    };
    let (_, rep) = cutoff_trajectory(&u0, &target, &settings)?;
    println!("initial defect   {:e}", rep.initial_defect);
    println!("terminal defect  {:.3e}", rep.terminal_defect);
    println!("early deviation  {:e}", rep.early_deviation);
    println!("late deviation   {:.3e}", rep.late_deviation);
    println!("cutoff source    {:.3e}", rep.source_norm);
    Ok(())
}

//! Drives the first Dirichlet mode to rest with a control supported in the middle half of the domain.
//!
//! Run with `cargo run --release --example null_control`.

use kdvb_lab::control::{
    control_distance, dense_control, null_control, ControlProblem, HumSettings,
};
use kdvb_lab::experiment::first_mode;
use kdvb_lab::Grid;

fn main() -> kdvb_lab::Result<()> {
    let grid = Grid::symmetric(1.0, 100)?;
    let settings = HumSettings {
        tau: 1e-10,
        tol: 1e-6,
        max_iterations: 500,
    };
    let problem =
        ControlProblem::null(grid, 1.0, 200, (-0.5, 0.5), first_mode(&grid).into_values())
            .with_settings(settings);
    let res = null_control(&problem)?;
    for (i, d) in res.history.iter().enumerate() {
        println!("iteration {i:>3}: relative endpoint defect {d:.3e}");
    }
    println!(
        "control energy {:.4e}, support violation {}",
        res.control_energy,
        res.support_violation()
    );

    let coarse = Grid::symmetric(1.0, 32)?;
    let small = ControlProblem::null(
        coarse,
        1.0,
        200,
        (-0.5, 0.5),
        first_mode(&coarse).into_values(),
    )
    .with_settings(HumSettings {
        tol: 0.0,
        ..settings
    });
    let gap = control_distance(
        &coarse,
        &null_control(&small)?.controls,
        &dense_control(&small)?.controls,
    );
    println!("n = 32: iterative vs dense control distance {gap:.3e}");
    Ok(())
}

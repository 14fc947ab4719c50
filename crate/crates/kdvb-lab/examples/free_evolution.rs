//! Crank-Nicolson evolution of smooth random data, with the matrix-exponential check.
//!
//! Run with `cargo run --release --example free_evolution`.

use kdvb_lab::evolution::evolve;
use kdvb_lab::experiment::{exponential_oracle, random_smooth_state, ORACLE_NODES};
use kdvb_lab::{build_operator, Grid, OperatorKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> kdvb_lab::Result<()> {
    let grid = Grid::symmetric(1.0, 128)?;
    let op = build_operator(&grid, OperatorKind::Forward)?;
    let u0 = random_smooth_state(&grid, &mut ChaCha8Rng::seed_from_u64(11), 8);
    let traj = evolve(&op, &u0, 0.0, 1.0, 256)?;
    for k in (0..traj.len()).step_by(32) {
        println!("t = {:.3}  |u| = {:.6e}", traj.time(k), traj.norms()[k]);
    }
    println!("largest one-step norm ratio: {:.12}", traj.max_step_ratio());

    let oracle = exponential_oracle(1.0, ORACLE_NODES, 1.0, &[128, 256, 512, 1024])?;
    for (nt, e) in oracle.steps.iter().zip(&oracle.errors) {
        println!("nt = {nt:>5}  relative error vs exp(TA) = {e:.3e}");
    }
    println!("error ratios under step halving: {:?}", oracle.ratios);
    Ok(())
}

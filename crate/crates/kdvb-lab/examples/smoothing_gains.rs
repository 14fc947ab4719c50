//! Gain from a space-time source to the solution in fractional Sobolev norms across meshes.
//!
//! Run with `cargo run --release --example smoothing_gains`.

use kdvb_lab::experiment::smoothing_sweep;

fn main() -> kdvb_lab::Result<()> {
    let sizes = [64, 128, 256];
    for row in smoothing_sweep(1.0, &sizes, 1.0, 256, &[0.25, 0.5, 1.0])? {
        let ratios: Vec<String> = row.ratios.iter().map(|r| format!("{r:.5}")).collect();
        println!(
            "theta = {:<4}  ratios {}  spread {:.3}%",
            row.theta,
            ratios.join(" "),
            100.0 * row.spread
        );
    }
    Ok(())
}

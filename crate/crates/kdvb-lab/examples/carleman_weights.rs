//! Builds the spatial weight for an observation region, certifies its shape
//! conditions, and locates the parameter threshold above which the
//! coefficient scans are positive.
//!
//! Run with `cargo run --release --example carleman_weights`.

use kdvb_lab::carleman::{
    build_psi, coefficient_bundle, find_s_star, CarlemanParams, ScanGrid, COEFFICIENT_NAMES,
    SCAN_POINTS,
};

fn main() -> kdvb_lab::Result<()> {
    let psi = build_psi(1.0, (-0.5, 0.5))?;
    for c in psi.verify(SCAN_POINTS).checks {
        println!(
            "{:<20} holds = {:<5} margin = {:.3e}",
            c.name, c.holds, c.margin
        );
    }

    let threshold = find_s_star(&psi, 1.0, ScanGrid::default())?;
    println!("s* = {:.4}", threshold.s_star);
    for m in &threshold.multiples {
        println!(
            "  s = {:>9.3}  min D = {:.3e}  min G = {:.3e}  min H = {:.3e}",
            m.s, m.d_min, m.g_min, m.h_min
        );
    }

    let params = CarlemanParams::new(2.0 * threshold.s_star, 1.0, psi)?;
    let gaps = coefficient_bundle(&params, 0.3, -0.8)?.relative_gaps();
    for (name, g) in COEFFICIENT_NAMES.iter().zip(gaps) {
        println!("coefficient {name}: dual-path relative gap {g:.2e}");
    }
    Ok(())
}

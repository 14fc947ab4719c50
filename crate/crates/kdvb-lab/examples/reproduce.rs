//! Runs every configuration of a directory and prints the aggregate verdicts.
//!
//! Run with `cargo run --release --example reproduce -- configs results`.

use std::path::PathBuf;

use kdvb_lab::experiment::reproduce_all;

fn main() -> kdvb_lab::Result<()> {
    let mut args = std::env::args().skip(1);
    let configs = args
        .next()
        .map_or_else(|| PathBuf::from("configs"), PathBuf::from);
    let out = args
        .next()
        .map_or_else(|| PathBuf::from("results"), PathBuf::from);
    let suite = reproduce_all(&configs, &out, None)?;
    for r in &suite.runs {
        let verdict = if r.passed {
            "pass".to_string()
        } else {
            format!("fail {:?}", r.failed_checks)
        };
        println!(
            "{:<16} {:<14} {}  {}",
            r.name,
            r.command.name(),
            &r.input_hash[..12],
            verdict
        );
    }
    println!("all passed: {}", suite.passed);
    Ok(())
}

//! Exponentially weighted half-line flow `u_t = -u_xx - u_xxx` on a truncation `(0, X)`.

use serde::Serialize;

use super::evolve;
use crate::error::{invalid, Result};
use crate::grid::{Grid, StateVector};
use crate::operator::{build_operator, OperatorKind};

/// Relative size of `exp(-2 b X)` at the truncation point.
pub const WEIGHT_CUTOFF: f64 = 1e-12;

/// Mesh of `(0, X)` with `exp(-2 b X)` a little below [`WEIGHT_CUTOFF`].
pub fn half_line_grid(decay: f64, n: usize) -> Result<Grid> {
    if !(decay > 0.0) || !decay.is_finite() {
        return Err(invalid(format!(
            "half-line truncation needs a positive weight exponent, got {decay}"
        )));
    }
    let x_max = 1.05 * (1.0 / WEIGHT_CUTOFF).ln() / (2.0 * decay);
    Grid::interval(0.0, x_max, n)
}

/// `h sum exp(2 sign b x_i) u_i^2`, square-rooted.
pub fn weighted_norm(grid: &Grid, u: &[f64], decay: f64, sign: f64) -> f64 {
    let h = grid.spacing();
    u.iter()
        .enumerate()
        .map(|(i, v)| h * (2.0 * sign * decay * grid.node(i)).exp() * v * v)
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightedReport {
    pub decay: f64,
    pub truncation: f64,
    /// Largest step ratio in the `exp(2 b x)` norm.
    pub max_step_ratio: f64,
    /// Largest step ratio in the `exp(-2 b x)` norm, for comparison.
    pub max_step_ratio_decaying: f64,
    pub final_to_initial: f64,
}

fn max_ratio(norms: &[f64]) -> f64 {
    norms
        .windows(2)
        .map(|w| match (w[0] > 0.0, w[1] > 0.0) {
            (true, _) => w[1] / w[0],
            (false, false) => 1.0,
            (false, true) => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

pub fn weighted_contraction_check(
    decay: f64,
    grid: &Grid,
    u0: &StateVector,
    t_final: f64,
    nt: usize,
) -> Result<WeightedReport> {
    let op = build_operator(grid, OperatorKind::Weighted { decay })?;
    let traj = evolve(&op, u0, 0.0, t_final, nt)?;
    let grow: Vec<f64> = traj
        .states()
        .iter()
        .map(|u| weighted_norm(grid, u, decay, 1.0))
        .collect();
    let fall: Vec<f64> = traj
        .states()
        .iter()
        .map(|u| weighted_norm(grid, u, decay, -1.0))
        .collect();
    Ok(WeightedReport {
        decay,
        truncation: grid.right(),
        max_step_ratio: max_ratio(&grow),
        max_step_ratio_decaying: max_ratio(&fall),
        final_to_initial: if grow[0] > 0.0 {
            grow[grow.len() - 1] / grow[0]
        } else {
            1.0
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probe(decay: f64) -> WeightedReport {
        let g = half_line_grid(decay, 160).unwrap();
        let x_max = g.right();
        let u0 = g.sample(|x| x * (x_max - x) * (-x).exp() * (3.0 * x).sin());
        weighted_contraction_check(decay, &g, &u0, 1.0, 200).unwrap()
    }

    #[test]
    fn zero_data_reports_unit_ratio() {
        let g = half_line_grid(0.5, 32).unwrap();
        let r = weighted_contraction_check(0.5, &g, &StateVector::zeros(g), 1.0, 10).unwrap();
        assert_eq!(r.max_step_ratio, 1.0);
    }

    #[test]
    fn contraction_at_threshold_and_above() {
        for b in [1.0 / 3.0, 0.5, 1.0] {
            let r = probe(b);
            assert!(
                r.max_step_ratio <= 1.0 + 1e-8,
                "b = {b}: {}",
                r.max_step_ratio
            );
        }
    }

    #[test]
    fn truncation_meets_cutoff() {
        let g = half_line_grid(1.0 / 3.0, 16).unwrap();
        assert!((-2.0 / 3.0 * g.right()).exp() < WEIGHT_CUTOFF);
        assert!(half_line_grid(-0.1, 16).is_err());
        assert!(weighted_contraction_check(-0.1, &g, &StateVector::zeros(g), 1.0, 4).is_err());
    }
}

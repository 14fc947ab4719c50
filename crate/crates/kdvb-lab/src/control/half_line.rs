//! Cutoff construction on a truncated half-line with exponentially weighted data.
//!
//! The half-line `(0, X)` is embedded in the window `(-X, X)` with `2n + 1`
//! nodes, so that `x = 0` is a node and the positive nodes coincide with those
//! of [`half_line_grid`]. The target branch is built from the flow of
//! `B = -d_xx - d_xxx` started at the reflected target and read backwards in
//! time and space, `u2(x, t) = v(-x, T - t)`, so that `u2(T) = u_T` exactly.
//! Data are extended by zero to the left half of the window.

use serde::Serialize;

use super::cutoff::cutoff_with_branch;
use super::{CutoffReport, CutoffSettings, HumSettings};
use crate::error::{Error, Result};
use crate::evolution::{evolve, half_line_grid, Trajectory};
use crate::grid::{Grid, StateVector};
use crate::operator::{build_operator, OperatorKind};

/// Smallest admissible weight exponent.
pub const MIN_DECAY: f64 = 1.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfLineSettings {
    pub decay: f64,
    /// Interior nodes of the half-line `(0, X)`.
    pub nodes: usize,
    pub horizon: f64,
    pub steps: usize,
    pub eps: f64,
    pub eps_prime: f64,
    /// Control region as a fraction of `X`: `(-c X, c X)`.
    pub region_fraction: f64,
    pub hum: HumSettings,
}

impl HalfLineSettings {
    pub fn new(decay: f64) -> Self {
        Self {
            decay,
            nodes: 128,
            horizon: 2.0,
            steps: 400,
            eps: 0.25,
            eps_prime: 0.6,
            region_fraction: 0.5,
            hum: HumSettings {
                tau: 1e-10,
                tol: 1e-10,
                max_iterations: 500,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HalfLineReport {
    pub decay: f64,
    pub truncation: f64,
    /// `|u(0) - u0|_{L^2(0, X)} / |u0|`.
    pub initial_defect: f64,
    /// `|u(T) - u_T| / |u_T|` in the norm weighted by `exp(-2 b x)` on `(0, X)`.
    pub terminal_defect: f64,
    /// Same quotient in the norm weighted by `exp(2 b x)`.
    pub terminal_defect_growing: f64,
    pub cutoff: CutoffReport,
}

fn weighted(grid: &Grid, u: &[f64], offset: usize, sign: f64, decay: f64) -> f64 {
    let h = grid.spacing();
    u.iter()
        .enumerate()
        .skip(offset)
        .map(|(i, v)| h * (2.0 * sign * decay * grid.node(i)).exp() * v * v)
        .sum::<f64>()
        .sqrt()
}

fn quotient(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// Cutoff trajectory from `u0` to `u_T`, both given on `half_line_grid(b, n)`.
/// Exponents below [`MIN_DECAY`] are refused.
pub fn half_line_trajectory(
    u0: &StateVector,
    target: &StateVector,
    settings: &HalfLineSettings,
) -> Result<(Trajectory, HalfLineReport)> {
    let b = settings.decay;
    if !(b >= MIN_DECAY) {
        return Err(Error::Refused(format!(
            "weight exponent {b} is below {MIN_DECAY}"
        )));
    }
    let half = half_line_grid(b, settings.nodes)?;
    if u0.grid() != &half || target.grid() != &half {
        return Err(Error::GridMismatch(
            "data must live on the half-line mesh of this weight".into(),
        ));
    }
    let (n, nt) = (settings.nodes, settings.steps);
    let x_max = half.right();
    let window = Grid::interval(-x_max, x_max, 2 * n + 1)?;
    // positive window nodes are n + 1 ..= 2n, mirrored by n - 1 ..= 0
    let embed = |u: &[f64]| {
        let mut w = vec![0.0; 2 * n + 1];
        w[n + 1..].copy_from_slice(u);
        w
    };
    let start = embed(u0.values());
    let tgt = embed(target.values());
    let reflected: Vec<f64> = tgt.iter().rev().copied().collect();

    let b_op = build_operator(&window, OperatorKind::Weighted { decay: b })?;
    let v = evolve(
        &b_op,
        &StateVector::new(window, reflected)?,
        0.0,
        settings.horizon,
        nt,
    )?;
    let branch: Vec<Vec<f64>> = (0..=nt)
        .map(|k| v.values(nt - k).iter().rev().copied().collect())
        .collect();
    let branch = Trajectory::new(window, 0.0, v.dt(), "reflected".into(), branch)?;

    let cut = CutoffSettings {
        horizon: settings.horizon,
        steps: nt,
        eps: settings.eps,
        eps_prime: settings.eps_prime,
        region: (
            -settings.region_fraction * x_max,
            settings.region_fraction * x_max,
        ),
        hum: settings.hum,
    };
    let (traj, cutoff) = cutoff_with_branch(
        &StateVector::new(window, start)?,
        &branch,
        window.norm(&tgt),
        &cut,
    )?;

    let d0: Vec<f64> = traj.values(0)[n + 1..]
        .iter()
        .zip(u0.values())
        .map(|(a, c)| a - c)
        .collect();
    let initial_defect = quotient(half.norm(&d0), half.norm(u0.values()));
    let d_t: Vec<f64> = traj.last().iter().zip(&tgt).map(|(a, c)| a - c).collect();
    let ratio = |sign: f64| {
        quotient(
            weighted(&window, &d_t, n + 1, sign, b),
            weighted(&window, &tgt, n + 1, sign, b),
        )
    };
    let report = HalfLineReport {
        decay: b,
        truncation: x_max,
        initial_defect,
        terminal_defect: ratio(-1.0),
        terminal_defect_growing: ratio(1.0),
        cutoff,
    };
    Ok((traj, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(b: f64, n: usize) -> (StateVector, StateVector) {
        let g = half_line_grid(b, n).unwrap();
        (
            g.sample(|y| y * y * (-y).exp()),
            g.sample(|y| (-(y - 3.0) * (y - 3.0)).exp()),
        )
    }

    #[test]
    fn small_exponents_are_refused() {
        let (u0, ut) = data(0.5, 32);
        let err = half_line_trajectory(&u0, &ut, &HalfLineSettings::new(0.3)).unwrap_err();
        assert!(matches!(err, Error::Refused(_)));
    }

    #[test]
    fn zero_data_give_zero_trajectory() {
        let g = half_line_grid(0.5, 32).unwrap();
        let z = StateVector::zeros(g);
        let mut s = HalfLineSettings::new(0.5);
        s.nodes = 32;
        let (traj, rep) = half_line_trajectory(&z, &z, &s).unwrap();
        assert!(traj.states().iter().flatten().all(|&v| v == 0.0));
        assert_eq!((rep.initial_defect, rep.terminal_defect), (0.0, 0.0));
    }

    #[test]
    fn data_are_matched_at_both_ends() {
        let b = 0.5;
        let (u0, ut) = data(b, 48);
        let mut s = HalfLineSettings::new(b);
        s.nodes = 48;
        let (_, rep) = half_line_trajectory(&u0, &ut, &s).unwrap();
        assert_eq!(rep.initial_defect, 0.0);
        assert!(rep.terminal_defect <= 1e-3, "{}", rep.terminal_defect);
    }
}

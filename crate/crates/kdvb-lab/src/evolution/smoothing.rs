//! Regularity gain of the forced problem with zero initial data.
//!
//! For index `theta` the solution is measured in `L^2_t H^a` plus `C_t H^b` and
//! the source in `L^2_t H^c`, with `(a, b, c)` equal to `(1, 0, -1)`,
//! `(2, 1, 0)` and `(4, 3, 2)`. The first two use the spectral norms. The top
//! index uses difference norms: the spectral scale charges the boundary layer
//! that the Neumann condition creates, so it has no mesh-independent limit there.

use serde::{Deserialize, Serialize};

use super::{evolve_forced, SourceTerm, Trajectory};
use crate::error::{invalid, Result};
use crate::grid::{Grid, StateVector};
use crate::operator::{build_operator, OperatorKind};
use crate::sobolev::{difference_sobolev_norm, SineBasis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SmoothingIndex {
    Quarter,
    Half,
    One,
}

impl SmoothingIndex {
    pub fn from_value(theta: f64) -> Result<Self> {
        match theta {
            t if (t - 0.25).abs() < 1e-12 => Ok(Self::Quarter),
            t if (t - 0.5).abs() < 1e-12 => Ok(Self::Half),
            t if (t - 1.0).abs() < 1e-12 => Ok(Self::One),
            _ => Err(invalid(format!("unsupported smoothing index {theta}"))),
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            Self::Quarter => 0.25,
            Self::Half => 0.5,
            Self::One => 1.0,
        }
    }

    /// `(a, b, c)`: solution in `L^2 H^a` and `C H^b`, source in `L^2 H^c`.
    pub fn orders(&self) -> (i32, i32, i32) {
        match self {
            Self::Quarter => (1, 0, -1),
            Self::Half => (2, 1, 0),
            Self::One => (4, 3, 2),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GainReport {
    pub theta: f64,
    /// `None` when the source vanishes identically.
    pub ratio: Option<f64>,
    pub solution_l2: f64,
    pub solution_sup: f64,
    pub source_l2: f64,
    /// Spectral-norm ratio for the top index, reported for comparison only.
    pub spectral_ratio: Option<f64>,
}

enum Scale<'a> {
    Spectral(&'a SineBasis),
    Difference,
}

impl Scale<'_> {
    fn norm(&self, grid: &Grid, u: &[f64], order: i32) -> f64 {
        match self {
            Scale::Spectral(b) => b.norm(u, order as f64),
            Scale::Difference => difference_sobolev_norm(grid, u, order.max(0) as usize),
        }
    }
}

struct Measured {
    solution_l2: f64,
    solution_sup: f64,
    source_l2: f64,
}

fn measure(
    traj: &Trajectory,
    sources: &[Option<Vec<f64>>],
    orders: (i32, i32, i32),
    scale: &Scale,
) -> Measured {
    let g = traj.grid();
    let dt = traj.dt();
    let nt = traj.len() - 1;
    let sol_a: Vec<f64> = traj
        .states()
        .iter()
        .map(|u| scale.norm(g, u, orders.0))
        .collect();
    let mut l2 = 0.0;
    for k in 0..nt {
        l2 += 0.5 * dt * (sol_a[k] * sol_a[k] + sol_a[k + 1] * sol_a[k + 1]);
    }
    let sup = traj
        .states()
        .iter()
        .map(|u| scale.norm(g, u, orders.1))
        .fold(0.0, f64::max);
    let src: f64 = sources
        .iter()
        .map(|f| {
            f.as_ref()
                .map_or(0.0, |v| dt * scale.norm(g, v, orders.2).powi(2))
        })
        .sum();
    Measured {
        solution_l2: l2.sqrt(),
        solution_sup: sup,
        source_l2: src.sqrt(),
    }
}

fn solve(
    f: &SourceTerm,
    grid: &Grid,
    t_final: f64,
    nt: usize,
) -> Result<(Trajectory, Vec<Option<Vec<f64>>>)> {
    let op = build_operator(grid, OperatorKind::Forward)?;
    let traj = evolve_forced(&op, &StateVector::zeros(*grid), f, 0.0, t_final, nt)?;
    let dt = traj.dt();
    let sources = (0..nt).map(|k| f.at((k as f64 + 0.5) * dt, grid)).collect();
    Ok((traj, sources))
}

fn ratio(m: &Measured) -> Option<f64> {
    (m.source_l2 > 0.0).then(|| (m.solution_l2 + m.solution_sup) / m.source_l2)
}

/// Gain ratio for index `theta` with the source sampled at the step midpoints.
pub fn smoothing_gain(
    theta: f64,
    f: &SourceTerm,
    grid: &Grid,
    t_final: f64,
    nt: usize,
) -> Result<GainReport> {
    let index = SmoothingIndex::from_value(theta)?;
    let (traj, sources) = solve(f, grid, t_final, nt)?;
    let basis = SineBasis::new(grid);
    let spectral = measure(&traj, &sources, index.orders(), &Scale::Spectral(&basis));
    let (main, spectral_ratio) = match index {
        SmoothingIndex::One => (
            measure(&traj, &sources, index.orders(), &Scale::Difference),
            ratio(&spectral),
        ),
        _ => (spectral, None),
    };
    Ok(GainReport {
        theta,
        ratio: ratio(&main),
        solution_l2: main.solution_l2,
        solution_sup: main.solution_sup,
        source_l2: main.source_l2,
        spectral_ratio,
    })
}

/// `|u|_{L^2 H^a} / |f|_{L^2 H^c}` in the spectral scale for arbitrary orders.
pub fn order_ratio(
    f: &SourceTerm,
    grid: &Grid,
    t_final: f64,
    nt: usize,
    solution_order: i32,
    source_order: i32,
) -> Result<Option<f64>> {
    let (traj, sources) = solve(f, grid, t_final, nt)?;
    let basis = SineBasis::new(grid);
    let m = measure(
        &traj,
        &sources,
        (solution_order, 0, source_order),
        &Scale::Spectral(&basis),
    );
    Ok((m.source_l2 > 0.0).then(|| m.solution_l2 / m.source_l2))
}

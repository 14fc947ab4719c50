//! Discrete Sobolev norms.
//!
//! The spectral family expands a grid function in the eigenvectors of the
//! discrete Dirichlet Laplacian, `lambda_k = (4 / h^2) sin^2(k pi / (2 (n + 1)))`,
//! and weights the squared coefficients by `lambda_k^s`. The difference family
//! sums squared forward differences of the zero-extended vector up to an
//! integer order and does not presume any boundary behaviour of the derivatives.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::grid::{Grid, StateVector};

/// Orders accepted by [`discrete_sobolev_norm`].
pub const SUPPORTED_ORDERS: [f64; 13] = [
    -1.0,
    0.0,
    1.0 / 3.0,
    2.0 / 3.0,
    1.0,
    4.0 / 3.0,
    1.5,
    5.0 / 3.0,
    2.0,
    7.0 / 3.0,
    8.0 / 3.0,
    3.0,
    4.0,
];

fn check_order(order: f64) -> Result<()> {
    if SUPPORTED_ORDERS.iter().any(|&s| (s - order).abs() < 1e-12) {
        Ok(())
    } else {
        Err(invalid(format!("unsupported Sobolev order {order}")))
    }
}

/// Orthonormal sine basis of a grid, reusable across many norm evaluations.
#[derive(Debug, Clone)]
pub struct SineBasis {
    grid: Grid,
    eigenvalues: Vec<f64>,
    // row k holds mode k + 1 sampled at the nodes, scaled to unit Euclidean norm
    modes: Vec<f64>,
}

impl SineBasis {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.len();
        let h = grid.spacing();
        let m = (n + 1) as f64;
        let scale = (2.0 / m).sqrt();
        let eigenvalues = (1..=n)
            .map(|k| {
                let s = (k as f64 * PI / (2.0 * m)).sin();
                4.0 * s * s / (h * h)
            })
            .collect();
        let mut modes = vec![0.0; n * n];
        for k in 0..n {
            for i in 0..n {
                modes[k * n + i] = scale * (((k + 1) * (i + 1)) as f64 * PI / m).sin();
            }
        }
        Self {
            grid: *grid,
            eigenvalues,
            modes,
        }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Coefficients normalized so that their squared sum is the discrete `L^2` norm squared.
    pub fn coefficients(&self, u: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        let sh = self.grid.spacing().sqrt();
        (0..n)
            .map(|k| {
                let row = &self.modes[k * n..(k + 1) * n];
                sh * row.iter().zip(u).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    /// Spectral norm of order `order`; any real order is accepted here.
    pub fn norm(&self, u: &[f64], order: f64) -> f64 {
        self.coefficients(u)
            .iter()
            .zip(&self.eigenvalues)
            .map(|(c, l)| l.powf(order) * c * c)
            .sum::<f64>()
            .sqrt()
    }
}

/// Spectral Sobolev norm of order `order` from the supported list.
pub fn discrete_sobolev_norm(u: &StateVector, order: f64) -> Result<f64> {
    check_order(order)?;
    Ok(SineBasis::new(u.grid()).norm(u.values(), order))
}

/// Full difference Sobolev norm: the sum over `j <= order` of squared
/// `j`-th forward differences of the vector extended by its zero boundary values.
pub fn difference_sobolev_norm(grid: &Grid, u: &[f64], order: usize) -> f64 {
    let h = grid.spacing();
    let mut d: Vec<f64> = std::iter::once(0.0)
        .chain(u.iter().copied())
        .chain(std::iter::once(0.0))
        .collect();
    let mut total = grid.dot(u, u);
    for _ in 0..order {
        d = d.windows(2).map(|w| (w[1] - w[0]) / h).collect();
        total += h * d.iter().map(|v| v * v).sum::<f64>();
    }
    total.sqrt()
}

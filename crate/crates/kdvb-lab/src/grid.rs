//! Uniform interior meshes and grid functions.
//!
//! Boundary values are eliminated: a grid on `(a, b)` with `n` interior nodes
//! has spacing `h = (b - a) / (n + 1)` and nodes `a + (i + 1) h`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Smallest admissible number of interior nodes.
pub const MIN_NODES: usize = 8;

/// Uniform mesh of an open interval, interior nodes only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    left: f64,
    right: f64,
    n: usize,
    h: f64,
}

impl Grid {
    /// Mesh of `(-half_length, half_length)`.
    pub fn symmetric(half_length: f64, n: usize) -> Result<Self> {
        if !(half_length > 0.0) || !half_length.is_finite() {
            return Err(invalid(format!(
                "half length must be positive, got {half_length}"
            )));
        }
        Self::interval(-half_length, half_length, n)
    }

    /// Mesh of `(left, right)`.
    pub fn interval(left: f64, right: f64, n: usize) -> Result<Self> {
        if !(left.is_finite() && right.is_finite() && right > left) {
            return Err(invalid(format!(
                "empty or non-finite interval ({left}, {right})"
            )));
        }
        if n < MIN_NODES {
            return Err(invalid(format!(
                "need at least {MIN_NODES} interior nodes, got {n}"
            )));
        }
        let h = (right - left) / (n as f64 + 1.0);
        Ok(Self { left, right, n, h })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    /// Half of the interval length; equals `L` for a symmetric mesh.
    pub fn half_length(&self) -> f64 {
        0.5 * (self.right - self.left)
    }

    pub fn node(&self, i: usize) -> f64 {
        self.left + (i as f64 + 1.0) * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Indicator of the nodes lying strictly inside `(a, b)`.
    pub fn mask(&self, a: f64, b: f64) -> Vec<bool> {
        (0..self.n)
            .map(|i| {
                let x = self.node(i);
                x > a && x < b
            })
            .collect()
    }

    /// Samples `f` at the interior nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> StateVector {
        StateVector {
            values: (0..self.n).map(|i| f(self.node(i))).collect(),
            grid: *self,
        }
    }

    /// Discrete `L^2` pairing of raw node values.
    pub fn dot(&self, u: &[f64], v: &[f64]) -> f64 {
        self.h * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.dot(u, u).sqrt()
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len == self.n {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "vector of length {len} on a grid of {} nodes",
                self.n
            )))
        }
    }
}

/// Values of a grid function at the interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    values: Vec<f64>,
    grid: Grid,
}

impl StateVector {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite entry at node {i}")));
        }
        Ok(Self { values, grid })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        self.grid.norm(&self.values)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| factor * v).collect(),
            grid: self.grid,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// `h`-weighted trapezoid pairing; boundary terms vanish by the Dirichlet data.
pub fn inner_product(u: &StateVector, v: &StateVector) -> Result<f64> {
    if u.grid != v.grid {
        return Err(Error::GridMismatch(
            "inner product of vectors on different grids".into(),
        ));
    }
    Ok(u.grid.dot(&u.values, &v.values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn spacing_and_first_node() {
        let g = Grid::symmetric(1.0, 9).unwrap();
        assert!((g.spacing() - 0.2).abs() < 1e-15);
        assert!((g.node(0) + 0.8).abs() < 1e-15);
        let g = Grid::symmetric(30.0, 299).unwrap();
        assert!((g.spacing() - 0.2).abs() < 1e-13);
    }

    #[test]
    fn rejects_small_or_degenerate_meshes() {
        assert!(matches!(
            Grid::symmetric(1.0, 4),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            Grid::symmetric(0.0, 16),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            Grid::symmetric(-1.0, 16),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn nodes_are_strictly_inside() {
        let g = Grid::symmetric(2.5, 31).unwrap();
        let x = g.nodes();
        assert!(x[0] > -2.5 && x[30] < 2.5);
        assert!(x.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn constant_has_mass_close_to_length() {
        let g = Grid::symmetric(1.0, 9).unwrap();
        let one = g.sample(|_| 1.0);
        let m = inner_product(&one, &one).unwrap();
        assert!((m - 2.0).abs() <= 2.0 * g.spacing() + 1e-14);
    }

    #[test]
    fn pairing_matches_direct_sum() {
        let g = Grid::symmetric(1.0, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut direct = 0.0;
        for i in 0..8 {
            direct += g.spacing() * u[i] * v[i];
        }
        let su = StateVector::new(g, u).unwrap();
        let sv = StateVector::new(g, v).unwrap();
        assert!((inner_product(&su, &sv).unwrap() - direct).abs() < 1e-14);
        let zero = StateVector::zeros(g);
        assert_eq!(inner_product(&zero, &sv).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = StateVector::zeros(Grid::symmetric(1.0, 8).unwrap());
        let b = StateVector::zeros(Grid::symmetric(1.0, 9).unwrap());
        assert!(matches!(inner_product(&a, &b), Err(Error::GridMismatch(_))));
        assert!(StateVector::new(Grid::symmetric(1.0, 8).unwrap(), vec![f64::NAN; 8]).is_err());
    }
}

//! Finite-difference realizations of the KdV-Burgers generator, its adjoint
//! and the weighted half-line operator.
//!
//! Boundary values are eliminated. The third difference of `A` leans toward
//! the end carrying the derivative condition and reads the node beyond it as
//! zero, a first-order encoding of that condition; the adjoint leans the other
//! way, so that it is the exact transpose. Both stencils add the numerical
//! viscosity `-(h/2) d_xxxx`, which damps the highest grid modes.

use serde::{Deserialize, Serialize};

use crate::banded::BandMatrix;
use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, StateVector};

/// Which generator a [`DiscreteOperator`] realizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OperatorKind {
    /// `u_xx - u_xxx` with `u(left) = u(right) = u_x(right) = 0`.
    Forward,
    /// `u_xx + u_xxx` with `u(left) = u(right) = u_x(left) = 0`.
    Adjoint,
    /// `-u_xx - u_xxx` on a half-line truncation, studied in the norm weighted by `exp(2 b x)`.
    Weighted { decay: f64 },
}

/// Boundary triple closed by the assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryClosure {
    /// Dirichlet at both ends, Neumann at the right end.
    DirichletNeumannRight,
    /// Dirichlet at both ends, Neumann at the left end.
    DirichletNeumannLeft,
}

/// Largest admissible number of stored diagonals.
pub const MAX_WIDTH: usize = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    kind: OperatorKind,
    closure: BoundaryClosure,
    grid: Grid,
    matrix: BandMatrix,
}

fn second_difference(grid: &Grid, m: &mut BandMatrix, factor: f64) {
    let n = grid.len();
    let c = factor / (grid.spacing() * grid.spacing());
    for i in 0..n {
        m.add(i, i, -2.0 * c);
        if i > 0 {
            m.add(i, i - 1, c);
        }
        if i + 1 < n {
            m.add(i, i + 1, c);
        }
    }
}

/// Four-point third difference leaning right (`i-1..=i+2`) or left (`i-2..=i+1`).
/// Nodes beyond the boundary nodes are taken as zero.
fn biased_third_difference(grid: &Grid, m: &mut BandMatrix, factor: f64, lean_right: bool) {
    let n = grid.len() as isize;
    let c = factor / grid.spacing().powi(3);
    let stencil: [(isize, f64); 4] = if lean_right {
        [(-1, -1.0), (0, 3.0), (1, -3.0), (2, 1.0)]
    } else {
        [(-2, -1.0), (-1, 3.0), (0, -3.0), (1, 1.0)]
    };
    for i in 0..n {
        for &(off, w) in &stencil {
            let j = i + off;
            if (0..n).contains(&j) {
                m.add(i as usize, j as usize, c * w);
            }
        }
    }
}

/// Four-point third difference on nodes `i-1..=i+2` with an even ghost node
/// beyond the right end.
fn upwind_third_difference(grid: &Grid, m: &mut BandMatrix, factor: f64) {
    let n = grid.len() as isize;
    let c = factor / grid.spacing().powi(3);
    let stencil = [(-1isize, -1.0), (0, 3.0), (1, -3.0), (2, 1.0)];
    for i in 0..n {
        for &(off, w) in &stencil {
            let j = i + off;
            if (0..n).contains(&j) {
                m.add(i as usize, j as usize, c * w);
            } else if j == n + 1 {
                m.add(i as usize, (n - 1) as usize, c * w);
            }
        }
    }
}

/// Assembles the discrete operator of the requested kind.
pub fn build_operator(grid: &Grid, kind: OperatorKind) -> Result<DiscreteOperator> {
    let n = grid.len();
    let (matrix, closure) = match kind {
        OperatorKind::Forward => {
            let mut m = BandMatrix::zeros(n, 2, 2);
            second_difference(grid, &mut m, 1.0);
            biased_third_difference(grid, &mut m, -1.0, true);
            (m, BoundaryClosure::DirichletNeumannRight)
        }
        OperatorKind::Adjoint => {
            let mut m = BandMatrix::zeros(n, 2, 2);
            second_difference(grid, &mut m, 1.0);
            biased_third_difference(grid, &mut m, 1.0, false);
            (m, BoundaryClosure::DirichletNeumannLeft)
        }
        OperatorKind::Weighted { decay } => {
            if !(decay >= 0.0) || !decay.is_finite() {
                return Err(invalid(format!(
                    "weight exponent must be non-negative, got {decay}"
                )));
            }
            let mut m = BandMatrix::zeros(n, 1, 2);
            second_difference(grid, &mut m, -1.0);
            upwind_third_difference(grid, &mut m, -1.0);
            (m, BoundaryClosure::DirichletNeumannRight)
        }
    };
    debug_assert!(matrix.width() <= MAX_WIDTH);
    Ok(DiscreteOperator {
        kind,
        closure,
        grid: *grid,
        matrix,
    })
}

impl DiscreteOperator {
    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn closure(&self) -> BoundaryClosure {
        self.closure
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn matrix(&self) -> &BandMatrix {
        &self.matrix
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.matrix.apply(u)
    }

    /// `(A u, u)_h`.
    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        self.grid.dot(&self.apply(u), u)
    }

    /// The same operator multiplied by `factor` (used by small-generator probes).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            matrix: self.matrix.shifted(0.0, factor),
            ..self.clone()
        }
    }

    /// Assembles the operator of the dual kind on the same grid.
    pub fn dual(&self) -> Result<Self> {
        match self.kind {
            OperatorKind::Forward => build_operator(&self.grid, OperatorKind::Adjoint),
            OperatorKind::Adjoint => build_operator(&self.grid, OperatorKind::Forward),
            OperatorKind::Weighted { .. } => {
                Err(invalid("the weighted operator has no assembled dual"))
            }
        }
    }
}

/// Defect of the discrete energy identity
/// `(A u, u) + |D+ u|^2 + (D- u at the left end)^2 / 2 + (D+ u at the right end)^2 / 2`.
///
/// `D+` runs over all `n + 1` cells including the two boundary cells, and the
/// one-sided end differences use the eliminated boundary value zero. The
/// right-end term is the slope left over by the zero ghost closure; it is
/// `O(h^2)` when `u_x(right) = 0` and makes the defect exactly the numerical
/// viscosity of the biased stencil.
pub fn dissipativity_residual(op: &DiscreteOperator, u: &StateVector) -> Result<f64> {
    if op.kind != OperatorKind::Forward {
        return Err(invalid(
            "energy identity is defined for the forward operator only",
        ));
    }
    if u.grid() != op.grid() {
        return Err(Error::GridMismatch(
            "state and operator live on different grids".into(),
        ));
    }
    let h = op.grid.spacing();
    let v = u.values();
    let n = v.len();
    let mut grad = 0.0;
    for i in 0..=n {
        let right = if i < n { v[i] } else { 0.0 };
        let left = if i > 0 { v[i - 1] } else { 0.0 };
        let d = (right - left) / h;
        grad += h * d * d;
    }
    let left_slope = v[0] / h;
    let right_slope = v[n - 1] / h;
    Ok(op.quadratic_form(v) + grad + 0.5 * (left_slope * left_slope + right_slope * right_slope))
}

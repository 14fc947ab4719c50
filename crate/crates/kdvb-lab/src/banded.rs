//! Banded matrices and an LU factorization with partial pivoting.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Square matrix with `kl` sub- and `ku` super-diagonals, stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            data: vec![0.0; n * (kl + ku + 1)],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, 0, 0);
        m.data.fill(1.0);
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower(&self) -> usize {
        self.kl
    }

    pub fn upper(&self) -> usize {
        self.ku
    }

    /// Number of stored diagonals.
    pub fn width(&self) -> usize {
        self.kl + self.ku + 1
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n || j >= self.n || j + self.kl < i || j > i + self.ku {
            return None;
        }
        Some(i * self.width() + (j + self.kl - i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Adds `v` to entry `(i, j)`; the entry must lie inside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside band ({}, {})", self.kl, self.ku));
        self.data[s] += v;
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        let w = self.width();
        for (i, yi) in y.iter_mut().enumerate() {
            let row = &self.data[i * w..(i + 1) * w];
            let j0 = i.saturating_sub(self.kl);
            let j1 = (i + self.ku).min(self.n - 1);
            let mut acc = 0.0;
            for j in j0..=j1 {
                acc += row[j + self.kl - i] * x[j];
            }
            *yi = acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec(x, &mut y);
        y
    }

    /// `alpha I + beta self`.
    pub fn shifted(&self, alpha: f64, beta: f64) -> Self {
        let mut m = self.clone();
        m.data.iter_mut().for_each(|v| *v *= beta);
        for i in 0..self.n {
            m.add(i, i, alpha);
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n, self.ku, self.kl);
        for i in 0..self.n {
            for j in i.saturating_sub(self.kl)..=(i + self.ku).min(self.n - 1) {
                t.add(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}

/// LU factors of a band matrix, stored in the LAPACK band layout with room
/// for the fill-in produced by row interchanges.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandLu {
    pub fn factor(m: &BandMatrix) -> Result<Self> {
        let (n, kl, ku) = (m.n, m.kl, m.ku);
        let ld = 2 * kl + ku + 1;
        let kv = kl + ku;
        let mut lu = Self {
            n,
            kl,
            ku,
            ab: vec![0.0; ld * n],
            pivots: vec![0; n],
        };
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                *lu.at_mut(i, j) = m.get(i, j);
            }
        }
        let mut last_col = 0usize;
        for j in 0..n {
            let below = kl.min(n - 1 - j);
            let mut p = 0;
            let mut best = lu.at(j, j).abs();
            for r in 1..=below {
                let v = lu.at(j + r, j).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            lu.pivots[j] = j + p;
            if best == 0.0 || !best.is_finite() {
                return Err(Error::NumericalBreakdown(format!(
                    "singular band matrix at column {j}"
                )));
            }
            last_col = last_col.max((j + ku + p).min(n - 1));
            if p != 0 {
                for c in j..=last_col {
                    let a = lu.idx(j, c);
                    let b = lu.idx(j + p, c);
                    lu.ab.swap(a, b);
                }
            }
            let pivot = lu.at(j, j);
            for r in 1..=below {
                *lu.at_mut(j + r, j) /= pivot;
            }
            for c in j + 1..=last_col {
                let top = lu.at(j, c);
                if top != 0.0 {
                    for r in 1..=below {
                        let l = lu.at(j + r, j);
                        *lu.at_mut(j + r, c) -= l * top;
                    }
                }
            }
        }
        debug_assert!(kv < ld);
        Ok(lu)
    }

    fn idx(&self, r: usize, c: usize) -> usize {
        let ld = 2 * self.kl + self.ku + 1;
        (self.kl + self.ku + r - c) + c * ld
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.ab[self.idx(r, c)]
    }

    fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        let k = self.idx(r, c);
        &mut self.ab[k]
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Overwrites `b` with the solution of `M x = b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        for j in 0..n {
            let p = self.pivots[j];
            if p != j {
                b.swap(p, j);
            }
            let bj = b[j];
            if bj != 0.0 {
                for r in 1..=self.kl.min(n - 1 - j) {
                    b[j + r] -= self.at(j + r, j) * bj;
                }
            }
        }
        let kv = self.kl + self.ku;
        for j in (0..n).rev() {
            b[j] /= self.at(j, j);
            let bj = b[j];
            if bj != 0.0 {
                for r in j.saturating_sub(kv)..j {
                    b[r] -= self.at(r, j) * bj;
                }
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

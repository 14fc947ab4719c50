//! Truncated bivariate Taylor series in `(t, x)` for forward-mode differentiation.
//!
//! A jet holds the normalized coefficients `c[i][j] = d^i_t d^j_x f / (i! j!)`
//! for `i <= 2`, `j <= 6`. Differentiation shifts coefficients down and lowers
//! the trusted degree, which is tracked so that reading a value whose
//! constant term was computed from truncated data is detected.

use std::ops::{Add, Mul, Neg, Sub};

pub(crate) const T_DEG: usize = 2;
pub(crate) const X_DEG: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Jet {
    c: [[f64; X_DEG + 1]; T_DEG + 1],
    // highest degrees still exact
    valid: (i32, i32),
}

impl Jet {
    #[cfg(test)]
    pub fn constant(v: f64) -> Self {
        let mut c = [[0.0; X_DEG + 1]; T_DEG + 1];
        c[0][0] = v;
        Jet {
            c,
            valid: (T_DEG as i32, X_DEG as i32),
        }
    }

    /// Separable seed `theta(t) psi(x)` from the Taylor coefficients of each factor.
    pub fn separable(theta: [f64; T_DEG + 1], psi: [f64; X_DEG + 1]) -> Self {
        let mut c = [[0.0; X_DEG + 1]; T_DEG + 1];
        for (i, row) in c.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = theta[i] * psi[j];
            }
        }
        Jet {
            c,
            valid: (T_DEG as i32, X_DEG as i32),
        }
    }

    pub fn dx(&self) -> Self {
        let mut c = [[0.0; X_DEG + 1]; T_DEG + 1];
        for i in 0..=T_DEG {
            for j in 0..X_DEG {
                c[i][j] = (j + 1) as f64 * self.c[i][j + 1];
            }
        }
        Jet {
            c,
            valid: (self.valid.0, self.valid.1 - 1),
        }
    }

    pub fn dt(&self) -> Self {
        let mut c = [[0.0; X_DEG + 1]; T_DEG + 1];
        for i in 0..T_DEG {
            c[i] = self.c[i + 1].map(|v| v * (i + 1) as f64);
        }
        Jet {
            c,
            valid: (self.valid.0 - 1, self.valid.1),
        }
    }

    pub fn dx_n(&self, n: usize) -> Self {
        (0..n).fold(*self, |j, _| j.dx())
    }

    pub fn scale(&self, a: f64) -> Self {
        Jet {
            c: self.c.map(|row| row.map(|v| a * v)),
            valid: self.valid,
        }
    }

    /// Constant term, or `None` if it depends on truncated coefficients.
    pub fn value(&self) -> Option<f64> {
        (self.valid.0 >= 0 && self.valid.1 >= 0).then_some(self.c[0][0])
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut c = self.c;
        for i in 0..=T_DEG {
            for j in 0..=X_DEG {
                c[i][j] += o.c[i][j];
            }
        }
        Jet {
            c,
            valid: (self.valid.0.min(o.valid.0), self.valid.1.min(o.valid.1)),
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [[0.0; X_DEG + 1]; T_DEG + 1];
        for i in 0..=T_DEG {
            for j in 0..=X_DEG {
                let mut acc = 0.0;
                for a in 0..=i {
                    for b in 0..=j {
                        acc += self.c[a][b] * o.c[i - a][j - b];
                    }
                }
                c[i][j] = acc;
            }
        }
        Jet {
            c,
            valid: (self.valid.0.min(o.valid.0), self.valid.1.min(o.valid.1)),
        }
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, v: f64) -> Jet {
        let mut out = self;
        out.c[0][0] += v;
        out
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, j: Jet) -> Jet {
        j.scale(self)
    }
}

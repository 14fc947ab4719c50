//! Dense univariate polynomials in a local variable.

/// Coefficients in ascending order.
#[derive(Debug, Clone, PartialEq, Default)]
pub(crate) struct Poly(pub Vec<f64>);

impl Poly {
    pub fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * z + c)
    }

    pub fn derivative(&self) -> Self {
        if self.0.len() <= 1 {
            return Poly(vec![0.0]);
        }
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        )
    }

    /// Antiderivative taking the value `at_zero` at `z = 0`.
    pub fn integral(&self, at_zero: f64) -> Self {
        let mut out = Vec::with_capacity(self.0.len() + 1);
        out.push(at_zero);
        out.extend(self.0.iter().enumerate().map(|(k, c)| c / (k + 1) as f64));
        Poly(out)
    }

    /// `self(z)` followed by `k` derivatives.
    pub fn derivative_at(&self, k: usize, z: f64) -> f64 {
        let mut p = self.clone();
        for _ in 0..k {
            p = p.derivative();
        }
        p.eval(z)
    }

    #[cfg(test)]
    pub fn axpy(&self, alpha: f64, other: &Poly) -> Self {
        let len = self.0.len().max(other.0.len());
        Poly(
            (0..len)
                .map(|k| {
                    self.0.get(k).copied().unwrap_or(0.0)
                        + alpha * other.0.get(k).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calculus_round_trip() {
        let p = Poly(vec![1.0, -2.0, 0.5, 3.0]);
        assert_eq!(p.eval(2.0), 1.0 - 4.0 + 2.0 + 24.0);
        let q = p.integral(7.0).derivative();
        for (a, b) in q.0.iter().zip(&p.0) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(p.derivative_at(3, 10.0), 18.0);
        assert_eq!(p.derivative_at(4, 10.0), 0.0);
        assert_eq!(p.axpy(2.0, &Poly::constant(1.0)).0[0], 3.0);
    }
}

//! Pointwise bounds `|phi_t| <= K1 phi^2`, `|phi_tt| <= K2 phi^3`, `|d^k_x phi| <= C_k phi`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{evaluate_phi, CarlemanParams};
use crate::error::Result;

#[derive(Debug, Clone, Serialize)]
pub struct WeightEstimates {
    pub samples: usize,
    /// Fitted constants: maxima of the ratios over the samples.
    pub k1: f64,
    pub k2: f64,
    pub c: [f64; 6],
    /// Analytic bounds `T / psi_min`, `2 T^2 / psi_min^2` and `max |psi^(k)| / psi_min`.
    pub k1_bound: f64,
    pub k2_bound: f64,
    pub c_bound: [f64; 6],
    /// Largest relative excess of any sample over the analytic bounds; zero when they hold.
    pub max_violation: f64,
}

/// Samples `(t, x)` uniformly in `(0, T) x [-L, L]` from a seeded stream.
pub fn verify_weight_estimates(
    params: &CarlemanParams,
    sample_count: usize,
    seed: u64,
) -> Result<WeightEstimates> {
    let horizon = params.horizon();
    let psi = params.psi();
    let big_l = psi.half_length();
    let psi_min = psi.min_value();
    let mut c_bound = [0.0; 6];
    for i in 0..=20_000 {
        let d = psi.derivatives(-big_l + 2.0 * big_l * i as f64 / 20_000.0);
        for k in 0..6 {
            c_bound[k] = f64::max(c_bound[k], d[k + 1].abs() / psi_min);
        }
    }
    // the sampled maxima of |psi^(k)| may exceed the grid maxima slightly
    let slack = 1.0 + 1e-3;
    let k1_bound = horizon / psi_min;
    let k2_bound = 2.0 * horizon * horizon / (psi_min * psi_min);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut k1, mut k2, mut c) = (0.0f64, 0.0f64, [0.0f64; 6]);
    let mut violation = 0.0f64;
    for _ in 0..sample_count {
        let t = horizon * rng.random_range(f64::EPSILON..1.0);
        let x = rng.random_range(-big_l..=big_l);
        if t >= horizon {
            continue;
        }
        let p = evaluate_phi(params, t, x)?;
        let phi = p.phi();
        let r1 = p.phi_t().abs() / (phi * phi);
        let r2 = p.phi_tt().abs() / (phi * phi * phi);
        k1 = k1.max(r1);
        k2 = k2.max(r2);
        violation = violation.max(r1 / k1_bound - 1.0).max(r2 / k2_bound - 1.0);
        for k in 0..6 {
            let rk = p.phi_x(k + 1).abs() / phi;
            c[k] = c[k].max(rk);
            if c_bound[k] > 0.0 {
                violation = violation.max(rk / (slack * c_bound[k]) - 1.0);
            } else if rk > 0.0 {
                violation = f64::INFINITY;
            }
        }
    }
    Ok(WeightEstimates {
        samples: sample_count,
        k1,
        k2,
        c,
        k1_bound,
        k2_bound,
        c_bound,
        max_violation: violation.max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carleman::{build_psi, WeightPsi};

    #[test]
    fn constant_profile_has_zero_spatial_constants() {
        let p = CarlemanParams::new(1.0, 1.0, WeightPsi::constant(1.0, 2.0).unwrap()).unwrap();
        let r = verify_weight_estimates(&p, 1000, 1).unwrap();
        assert_eq!(r.c, [0.0; 6]);
        assert_eq!(r.max_violation, 0.0);
    }

    #[test]
    fn bounds_hold_and_fit_is_stable() {
        let p = CarlemanParams::new(5.0, 1.0, build_psi(1.0, (-0.5, 0.5)).unwrap()).unwrap();
        let a = verify_weight_estimates(&p, 50_000, 2).unwrap();
        let b = verify_weight_estimates(&p, 100_000, 2).unwrap();
        assert_eq!(a.max_violation, 0.0);
        assert!(a.k1 <= a.k1_bound && a.k2 <= a.k2_bound);
        assert!((b.k2 - a.k2).abs() / a.k2 < 0.01);
    }
}

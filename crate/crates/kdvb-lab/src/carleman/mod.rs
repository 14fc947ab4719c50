//! Carleman weights `phi(t, x) = psi(x) / (t (T - t))` and the coefficient algebra built on them.
//!
//! Every coefficient is a polynomial in `s` whose coefficients are products of
//! `p_ij = theta^(i)(t) psi^(j)(x)`. They are evaluated twice: from expanded
//! term tables and by forward-mode differentiation of the defining expressions.

mod coefficients;
mod estimates;
mod inequality;
mod jet;
mod poly;
mod psi;

use serde::Serialize;

pub use coefficients::{
    coefficient_bundle, find_s_star, positivity_scan, CoefficientBundle, Coefficients,
    PositivityScan, ScanGrid, ThresholdReport, COEFFICIENT_NAMES,
};
pub use estimates::{verify_weight_estimates, WeightEstimates};
pub use inequality::{
    carleman_ratio, weighted_observability_ineq, RatioOutcome, WeightedObservability,
};
pub use psi::{
    build_psi, ConditionCheck, PsiReport, WeightPsi, BOUNDARY_SLOPES, EXTERIOR_SHAPE,
    MAX_MIN_RATIO, POSITIVITY, SCAN_POINTS, WELL_STRUCTURE,
};

use crate::error::{invalid, Result};

/// Large parameter, horizon and spatial profile.
#[derive(Debug, Clone, PartialEq)]
pub struct CarlemanParams {
    s: f64,
    horizon: f64,
    psi: WeightPsi,
}

impl CarlemanParams {
    pub fn new(s: f64, horizon: f64, psi: WeightPsi) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(invalid(format!(
                "Carleman parameter must be positive, got {s}"
            )));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(invalid(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { s, horizon, psi })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn psi(&self) -> &WeightPsi {
        &self.psi
    }

    pub fn with_s(&self, s: f64) -> Result<Self> {
        Self::new(s, self.horizon, self.psi.clone())
    }
}

/// `[theta, theta', theta'']` for `theta = 1 / (t (T - t))`.
pub fn time_factor(t: f64, horizon: f64) -> [f64; 3] {
    let th = 1.0 / (t * (horizon - t));
    let lin = 2.0 * t - horizon;
    [
        th,
        lin * th * th,
        2.0 * th * th + 2.0 * lin * lin * th * th * th,
    ]
}

/// Mixed derivatives `p_ij = d^i_t d^j_x phi` at one point, `i <= 2`, `j <= 6`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiDerivatives {
    pub theta: [f64; 3],
    pub psi: [f64; 7],
}

impl PhiDerivatives {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.theta[i] * self.psi[j]
    }

    pub fn phi(&self) -> f64 {
        self.get(0, 0)
    }

    pub fn phi_t(&self) -> f64 {
        self.get(1, 0)
    }

    pub fn phi_tt(&self) -> f64 {
        self.get(2, 0)
    }

    /// `k`-th spatial derivative, `k <= 6`.
    pub fn phi_x(&self, k: usize) -> f64 {
        self.get(0, k)
    }
}

/// Closed-form derivatives of the weight at `(t, x)`, `0 < t < T`, `|x| <= L`.
pub fn evaluate_phi(params: &CarlemanParams, t: f64, x: f64) -> Result<PhiDerivatives> {
    if !(t > 0.0 && t < params.horizon) {
        return Err(invalid(format!("time {t} outside (0, {})", params.horizon)));
    }
    let big_l = params.psi.half_length();
    if !(x.abs() <= big_l * (1.0 + 1e-12)) {
        return Err(invalid(format!("point {x} outside [-{big_l}, {big_l}]")));
    }
    Ok(PhiDerivatives {
        theta: time_factor(t, params.horizon),
        psi: params.psi.derivatives(x),
    })
}

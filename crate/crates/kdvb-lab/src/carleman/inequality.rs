//! Weighted space-time inequalities measured on computed trajectories.
//!
//! All sums are formed in log space: every integrand carries a factor
//! `exp(-2 s phi)` that under- or overflows long before the ratio does.

use serde::Serialize;

use super::{time_factor, CarlemanParams};
use crate::error::{invalid, Error, Result};
use crate::evolution::Trajectory;

/// Outcome of a left-to-right ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RatioOutcome {
    Value(f64),
    /// The right side vanishes while the left does not.
    Infinite,
    /// Both sides vanish.
    NotApplicable,
}

impl RatioOutcome {
    fn from_logs(lhs: f64, rhs: f64) -> Self {
        match (lhs == f64::NEG_INFINITY, rhs == f64::NEG_INFINITY) {
            (true, true) => RatioOutcome::NotApplicable,
            (false, true) => RatioOutcome::Infinite,
            _ => RatioOutcome::Value((lhs - rhs).exp()),
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            RatioOutcome::Value(v) => Some(*v),
            _ => None,
        }
    }
}

/// Running `log(sum exp(a_k))`.
#[derive(Debug, Clone, Copy)]
struct LogSum {
    max: f64,
    scaled: f64,
}

impl LogSum {
    fn new() -> Self {
        LogSum {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    /// Adds `weight * exp(exponent)` for `weight >= 0`.
    fn push(&mut self, weight: f64, exponent: f64) {
        if weight <= 0.0 {
            return;
        }
        let a = weight.ln() + exponent;
        if a > self.max {
            self.scaled = self.scaled * (self.max - a).exp() + 1.0;
            self.max = a;
        } else {
            self.scaled += (a - self.max).exp();
        }
    }

    fn log(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

fn check_alignment(traj: &Trajectory, params: &CarlemanParams) -> Result<()> {
    let g = traj.grid();
    let big_l = params.psi().half_length();
    if (g.left() + big_l).abs() > 1e-12 * big_l || (g.right() - big_l).abs() > 1e-12 * big_l {
        return Err(Error::GridMismatch(format!(
            "trajectory mesh does not cover (-{big_l}, {big_l})"
        )));
    }
    if traj.start().abs() > 1e-12
        || (traj.end() - params.horizon()).abs() > 1e-12 * params.horizon()
    {
        return Err(invalid(format!(
            "trajectory spans [{}, {}] but the weight horizon is {}",
            traj.start(),
            traj.end(),
            params.horizon()
        )));
    }
    if traj.len() < 3 {
        return Err(invalid("need at least one interior time level"));
    }
    Ok(())
}

/// Left over right side of the Carleman inequality on a homogeneous trajectory.
///
/// Space integrals use the trapezoid rule over the interior nodes and the two
/// end points (weight `h / 2`), where `u` vanishes and the derivatives come from
/// one-sided second-order differences; `u_x(L) = 0` is imposed. Time levels
/// `0` and `T` are dropped since the weight vanishes there to all orders.
pub fn carleman_ratio(traj: &Trajectory, params: &CarlemanParams) -> Result<RatioOutcome> {
    check_alignment(traj, params)?;
    let g = traj.grid();
    let (n, h, s) = (g.len(), g.spacing(), params.s());
    if n < 3 {
        return Err(invalid("need at least three interior nodes"));
    }
    let (l1, l2) = params.psi().omega();
    let big_l = params.psi().half_length();
    // nodes -L, x_0..x_{n-1}, L
    let xs: Vec<f64> = std::iter::once(-big_l)
        .chain(g.nodes())
        .chain(std::iter::once(big_l))
        .collect();
    let psi: Vec<f64> = xs.iter().map(|&x| params.psi().value(x)).collect();
    let in_omega: Vec<bool> = xs.iter().map(|&x| x > l1 && x < l2).collect();
    let psi_end = params.psi().value(big_l).max(params.psi().value(-big_l));

    let (mut lhs, mut rhs) = (LogSum::new(), LogSum::new());
    let dt = traj.dt();
    for k in 1..traj.len() - 1 {
        let th = time_factor(traj.time(k), params.horizon())[0];
        let u = traj.values(k);
        let at = |i: isize| {
            if i < 0 || i >= n as isize {
                0.0
            } else {
                u[i as usize]
            }
        };
        for (m, &x_psi) in psi.iter().enumerate() {
            let i = m as isize - 1;
            let (val, ux, uxx, w) = if m == 0 {
                (
                    0.0,
                    (4.0 * u[0] - u[1]) / (2.0 * h),
                    (-5.0 * u[0] + 4.0 * u[1] - u[2]) / (h * h),
                    0.5,
                )
            } else if m == n + 1 {
                (
                    0.0,
                    0.0,
                    (-5.0 * u[n - 1] + 4.0 * u[n - 2] - u[n - 3]) / (h * h),
                    0.5,
                )
            } else {
                let c = at(i);
                (
                    c,
                    (at(i + 1) - at(i - 1)) / (2.0 * h),
                    (at(i + 1) - 2.0 * c + at(i - 1)) / (h * h),
                    1.0,
                )
            };
            let sp = s * th * x_psi;
            let density = sp.powi(5) * val * val + sp.powi(3) * ux * ux + sp * uxx * uxx;
            let exponent = -2.0 * sp;
            lhs.push(dt * w * h * density, exponent);
            if in_omega[m] {
                rhs.push(dt * w * h * density, exponent);
            }
            if m == 0 {
                let se = s * th * psi_end;
                lhs.push(dt * (se.powi(3) * ux * ux + se * uxx * uxx), -2.0 * se);
            }
        }
    }
    Ok(RatioOutcome::from_logs(lhs.log(), rhs.log()))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct WeightedObservability {
    pub ratio: RatioOutcome,
    /// `log10` of the ratio when it is finite and nonzero.
    pub log10_ratio: Option<f64>,
    /// `max psi / min psi`; the time-dependent bound needs it below `4/3`.
    pub extremal_ratio: f64,
}

/// Ratio of the two sides of the weighted observability inequality, using the
/// true extrema of the profile for the upper and lower weights.
pub fn weighted_observability_ineq(
    traj: &Trajectory,
    params: &CarlemanParams,
) -> Result<WeightedObservability> {
    check_alignment(traj, params)?;
    let g = traj.grid();
    let s = params.s();
    let (lo, hi) = (params.psi().min_value(), params.psi().max_value());
    let (l1, l2) = params.psi().omega();
    let mask = g.mask(l1, l2);
    let (mut lhs, mut rhs) = (LogSum::new(), LogSum::new());
    let dt = traj.dt();
    for k in 1..traj.len() - 1 {
        let th = time_factor(traj.time(k), params.horizon())[0];
        let (hat, check) = (hi * th, lo * th);
        let u = traj.values(k);
        let full = g.dot(u, u);
        let local: f64 = g.spacing()
            * u.iter()
                .zip(&mask)
                .filter(|(_, &m)| m)
                .map(|(v, _)| v * v)
                .sum::<f64>();
        lhs.push(dt * full, 5.0 * (s * check).ln() - 2.0 * s * hat);
        rhs.push(
            dt * local,
            10.0 * s.ln() + s * (6.0 * hat - 8.0 * check) + 31.0 * check.ln(),
        );
    }
    let ratio = RatioOutcome::from_logs(lhs.log(), rhs.log());
    let log10_ratio = match ratio {
        RatioOutcome::Value(_) => Some((lhs.log() - rhs.log()) / std::f64::consts::LN_10),
        _ => None,
    };
    Ok(WeightedObservability {
        ratio,
        log10_ratio,
        extremal_ratio: hi / lo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carleman::build_psi;
    use crate::evolution::evolve;
    use crate::grid::{Grid, StateVector};
    use crate::operator::{build_operator, OperatorKind};

    fn setup(u0: impl Fn(f64) -> f64) -> (Trajectory, CarlemanParams) {
        let g = Grid::symmetric(1.0, 48).unwrap();
        let op = build_operator(&g, OperatorKind::Forward).unwrap();
        let traj = evolve(&op, &g.sample(u0), 0.0, 1.0, 64).unwrap();
        let p = CarlemanParams::new(20.0, 1.0, build_psi(1.0, (-0.5, 0.5)).unwrap()).unwrap();
        (traj, p)
    }

    #[test]
    fn logsum_matches_direct_sum() {
        let mut l = LogSum::new();
        for (w, e) in [(1.0, 0.0), (2.0, 1.0), (0.5, -3.0), (0.0, 5.0)] {
            l.push(w, e);
        }
        let direct = 1.0 + 2.0 * 1f64.exp() + 0.5 * (-3f64).exp();
        assert!((l.log() - direct.ln()).abs() < 1e-14);
    }

    #[test]
    fn zero_solution_is_not_applicable() {
        let (traj, p) = setup(|_| 0.0);
        assert_eq!(
            carleman_ratio(&traj, &p).unwrap(),
            RatioOutcome::NotApplicable
        );
        assert_eq!(
            weighted_observability_ineq(&traj, &p).unwrap().ratio,
            RatioOutcome::NotApplicable
        );
    }

    #[test]
    fn ratio_is_scale_invariant() {
        let f = |x: f64| (1.0 - x * x) * (3.0 * x).sin() + 0.2 * (1.0 - x * x);
        let (traj, p) = setup(f);
        let (traj5, _) = setup(move |x| 5.0 * f(x));
        let a = carleman_ratio(&traj, &p).unwrap().value().unwrap();
        let b = carleman_ratio(&traj5, &p).unwrap().value().unwrap();
        assert!(a >= 1.0 && (a - b).abs() <= 1e-10 * a);
        let w = weighted_observability_ineq(&traj, &p).unwrap();
        assert!(w.extremal_ratio < 4.0 / 3.0 && w.ratio.value().unwrap().is_finite());
    }

    #[test]
    fn misaligned_inputs_are_rejected() {
        let (traj, p) = setup(|x| 1.0 - x * x);
        let other = CarlemanParams::new(1.0, 2.0, p.psi().clone()).unwrap();
        assert!(carleman_ratio(&traj, &other).is_err());
        let g = Grid::symmetric(2.0, 16).unwrap();
        let t = evolve(
            &build_operator(&g, OperatorKind::Forward).unwrap(),
            &StateVector::zeros(g),
            0.0,
            1.0,
            4,
        )
        .unwrap();
        assert!(carleman_ratio(&t, &p).is_err());
    }
}

//! Coefficient functions of the conjugated operator.
//!
//! Tables list `(power of s, factor, [p_ij, ...])`. `D` is assembled from the
//! expansions of `A_t`, `A_xxx`, `(A B)_x` and `(A C_x)_x`; `G` and `H` are the
//! boundary coefficients used at `x = -L`.

use rayon::prelude::*;
use serde::Serialize;

use super::jet::{Jet, T_DEG, X_DEG};
use super::{evaluate_phi, time_factor, CarlemanParams, PhiDerivatives, WeightPsi};
use crate::error::{Error, Result};

type Term = (i32, f64, &'static [(usize, usize)]);

const A: &[Term] = &[
    (3, 1.0, &[(0, 1), (0, 1), (0, 1)]),
    (2, -1.0, &[(0, 1), (0, 1)]),
    (2, 3.0, &[(0, 1), (0, 2)]),
    (1, -1.0, &[(0, 2)]),
    (1, 1.0, &[(0, 3)]),
    (1, 1.0, &[(1, 0)]),
];

const B: &[Term] = &[
    (2, 3.0, &[(0, 1), (0, 1)]),
    (1, -2.0, &[(0, 1)]),
    (1, 3.0, &[(0, 2)]),
];

const C: &[Term] = &[(1, 3.0, &[(0, 1)]), (0, -1.0, &[])];

const A_T: &[Term] = &[
    (3, 3.0, &[(0, 1), (0, 1), (1, 1)]),
    (2, -2.0, &[(0, 1), (1, 1)]),
    (2, 3.0, &[(0, 1), (1, 2)]),
    (2, 3.0, &[(0, 2), (1, 1)]),
    (1, -1.0, &[(1, 2)]),
    (1, 1.0, &[(1, 3)]),
    (1, 1.0, &[(2, 0)]),
];

const A_XXX: &[Term] = &[
    (3, 3.0, &[(0, 1), (0, 1), (0, 4)]),
    (3, 18.0, &[(0, 1), (0, 2), (0, 3)]),
    (3, 6.0, &[(0, 2), (0, 2), (0, 2)]),
    (2, -2.0, &[(0, 1), (0, 4)]),
    (2, 3.0, &[(0, 1), (0, 5)]),
    (2, -6.0, &[(0, 2), (0, 3)]),
    (2, 12.0, &[(0, 2), (0, 4)]),
    (2, 9.0, &[(0, 3), (0, 3)]),
    (1, -1.0, &[(0, 5)]),
    (1, 1.0, &[(0, 6)]),
    (1, 1.0, &[(1, 3)]),
];

const AB_X: &[Term] = &[
    (5, 15.0, &[(0, 1), (0, 1), (0, 1), (0, 1), (0, 2)]),
    (4, -20.0, &[(0, 1), (0, 1), (0, 1), (0, 2)]),
    (4, 12.0, &[(0, 1), (0, 1), (0, 1), (0, 3)]),
    (4, 36.0, &[(0, 1), (0, 1), (0, 2), (0, 2)]),
    (3, 6.0, &[(0, 1), (0, 1), (0, 2)]),
    (3, -12.0, &[(0, 1), (0, 1), (0, 3)]),
    (3, 3.0, &[(0, 1), (0, 1), (0, 4)]),
    (3, 3.0, &[(0, 1), (0, 1), (1, 1)]),
    (3, -24.0, &[(0, 1), (0, 2), (0, 2)]),
    (3, 24.0, &[(0, 1), (0, 2), (0, 3)]),
    (3, 6.0, &[(0, 1), (0, 2), (1, 0)]),
    (3, 9.0, &[(0, 2), (0, 2), (0, 2)]),
    (2, 2.0, &[(0, 1), (0, 3)]),
    (2, -2.0, &[(0, 1), (0, 4)]),
    (2, -2.0, &[(0, 1), (1, 1)]),
    (2, 2.0, &[(0, 2), (0, 2)]),
    (2, -8.0, &[(0, 2), (0, 3)]),
    (2, 3.0, &[(0, 2), (0, 4)]),
    (2, -2.0, &[(0, 2), (1, 0)]),
    (2, 3.0, &[(0, 2), (1, 1)]),
    (2, 3.0, &[(0, 3), (0, 3)]),
    (2, 3.0, &[(0, 3), (1, 0)]),
];

const ACX_X: &[Term] = &[
    (4, 3.0, &[(0, 1), (0, 1), (0, 1), (0, 3)]),
    (4, 9.0, &[(0, 1), (0, 1), (0, 2), (0, 2)]),
    (3, -3.0, &[(0, 1), (0, 1), (0, 3)]),
    (3, -6.0, &[(0, 1), (0, 2), (0, 2)]),
    (3, 18.0, &[(0, 1), (0, 2), (0, 3)]),
    (3, 9.0, &[(0, 2), (0, 2), (0, 2)]),
    (2, -6.0, &[(0, 2), (0, 3)]),
    (2, 3.0, &[(0, 2), (0, 4)]),
    (2, 3.0, &[(0, 2), (1, 1)]),
    (2, 3.0, &[(0, 3), (0, 3)]),
    (2, 3.0, &[(0, 3), (1, 0)]),
];

const E: &[Term] = &[
    (2, -9.0, &[(0, 1), (0, 3)]),
    (2, 9.0, &[(0, 2), (0, 2)]),
    (1, -2.0, &[(0, 2)]),
    (1, 3.0, &[(0, 3)]),
    (1, 6.0, &[(0, 4)]),
    (1, 6.0, &[(1, 1)]),
];

const F: &[Term] = &[(1, -9.0, &[(0, 2)])];

const G: &[Term] = &[
    (3, -8.0, &[(0, 1), (0, 1), (0, 1)]),
    (2, 8.0, &[(0, 1), (0, 1)]),
    (2, -15.0, &[(0, 1), (0, 2)]),
    (2, -9.0, &[(0, 2), (0, 2)]),
    (1, -2.0, &[(0, 1)]),
    (1, 5.0, &[(0, 2)]),
    (1, 4.0, &[(0, 3)]),
    (1, 1.0, &[(1, 0)]),
];

const H: &[Term] = &[(1, -3.0, &[(0, 1)])];

/// `(value, sum of term magnitudes)`.
fn eval_table(table: &[Term], s: f64, p: &PhiDerivatives) -> (f64, f64) {
    table.iter().fold((0.0, 0.0), |(v, m), (k, c, f)| {
        let term = c * s.powi(*k) * f.iter().map(|&(i, j)| p.get(i, j)).product::<f64>();
        (v + term, m + term.abs())
    })
}

/// The eight coefficient functions at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub h: f64,
}

impl Coefficients {
    pub fn as_array(&self) -> [f64; 8] {
        [
            self.a, self.b, self.c, self.d, self.e, self.f, self.g, self.h,
        ]
    }
}

pub const COEFFICIENT_NAMES: [&str; 8] = ["A", "B", "C", "D", "E", "F", "G", "H"];

/// Both evaluations of every coefficient plus the split of `D` into its leading term and remainder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientBundle {
    pub closed: Coefficients,
    pub automatic: Coefficients,
    /// Sum of absolute term values of each closed form; the scale for relative gaps.
    pub magnitude: Coefficients,
    pub d_leading: f64,
    pub d_rest: f64,
}

impl CoefficientBundle {
    /// Relative gap of each coefficient between the two evaluations.
    pub fn relative_gaps(&self) -> [f64; 8] {
        let (c, a, m) = (
            self.closed.as_array(),
            self.automatic.as_array(),
            self.magnitude.as_array(),
        );
        std::array::from_fn(|k| {
            let scale = c[k].abs().max(a[k].abs()).max(m[k]);
            if scale == 0.0 {
                0.0
            } else {
                (c[k] - a[k]).abs() / scale
            }
        })
    }

    pub fn max_relative_gap(&self) -> f64 {
        self.relative_gaps().into_iter().fold(0.0, f64::max)
    }
}

fn closed_forms(s: f64, p: &PhiDerivatives) -> (Coefficients, Coefficients, f64) {
    let ev = |t: &[Term]| eval_table(t, s, p);
    let parts = [ev(A_T), ev(A_XXX), ev(AB_X), ev(ACX_X)];
    let d = -parts.iter().map(|x| x.0).sum::<f64>();
    let dm = parts.iter().map(|x| x.1).sum::<f64>();
    let (a, b, c, e, f, g, h) = (ev(A), ev(B), ev(C), ev(E), ev(F), ev(G), ev(H));
    let leading = -15.0 * s.powi(5) * p.get(0, 1).powi(4) * p.get(0, 2);
    (
        Coefficients {
            a: a.0,
            b: b.0,
            c: c.0,
            d,
            e: e.0,
            f: f.0,
            g: g.0,
            h: h.0,
        },
        Coefficients {
            a: a.1,
            b: b.1,
            c: c.1,
            d: dm,
            e: e.1,
            f: f.1,
            g: g.1,
            h: h.1,
        },
        leading,
    )
}

fn automatic(s: f64, p: &PhiDerivatives) -> Coefficients {
    let theta = [p.theta[0], p.theta[1], 0.5 * p.theta[2]];
    let mut psi = [0.0; X_DEG + 1];
    let mut fact = 1.0;
    for (j, v) in psi.iter_mut().enumerate() {
        if j > 0 {
            fact *= j as f64;
        }
        *v = p.psi[j] / fact;
    }
    debug_assert_eq!(theta.len(), T_DEG + 1);
    let phi = Jet::separable(theta, psi);
    let (px, pxx, pxxx) = (phi.dx(), phi.dx_n(2), phi.dx_n(3));
    let a = s * (phi.dt() - pxx + pxxx) + (3.0 * s * s) * (px * pxx) + (s * s * s) * (px * px * px)
        - (s * s) * (px * px);
    let b = (3.0 * s) * pxx + (3.0 * s * s) * (px * px) - (2.0 * s) * px;
    let c = (3.0 * s) * px + -1.0;
    let cx = c.dx();
    let d = -(a.dt() + a.dx_n(3) + (a * b).dx() + (cx * a).dx());
    let e = 3.0 * a.dx() + b * cx - b.dx() * c - (c * cx).dx() + c.dx_n(3) + c.dt();
    let f = -3.0 * cx;
    let g = a - b * c - c * cx + c.dx_n(2) - cx * cx;
    let h = -c + -1.0;
    let v = |j: Jet| j.value().expect("jet degrees cover every coefficient");
    Coefficients {
        a: v(a),
        b: v(b),
        c: v(c),
        d: v(d),
        e: v(e),
        f: v(f),
        g: v(g),
        h: v(h),
    }
}

/// Evaluates every coefficient at `(t, x)` by both paths.
pub fn coefficient_bundle(params: &CarlemanParams, t: f64, x: f64) -> Result<CoefficientBundle> {
    let p = evaluate_phi(params, t, x)?;
    let (closed, magnitude, d_leading) = closed_forms(params.s(), &p);
    Ok(CoefficientBundle {
        closed,
        automatic: automatic(params.s(), &p),
        magnitude,
        d_leading,
        d_rest: closed.d - d_leading,
    })
}

/// Sampling lattice for the positivity scans: interior times and equispaced exterior points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanGrid {
    pub times: usize,
    pub points: usize,
}

impl Default for ScanGrid {
    fn default() -> Self {
        ScanGrid {
            times: 200,
            points: 1001,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PositivityScan {
    pub s: f64,
    /// Minimum of `D` over exterior points.
    pub d_min: f64,
    /// Minimum of the leading term `-15 s^5 phi_x^4 phi_xx` over exterior points.
    pub leading_min: f64,
    /// Minima of `G` and `H` at `x = -L`.
    pub g_min: f64,
    pub h_min: f64,
}

impl PositivityScan {
    pub fn holds(&self) -> bool {
        self.d_min > 0.0 && self.g_min > 0.0 && self.h_min > 0.0
    }
}

fn scan_times(horizon: f64, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|k| horizon * k as f64 / (count + 1) as f64)
        .collect()
}

fn exterior_points(psi: &WeightPsi, count: usize) -> Vec<f64> {
    let big_l = psi.half_length();
    let (l1, l2) = psi.omega();
    (0..count)
        .map(|i| -big_l + 2.0 * big_l * i as f64 / (count - 1).max(1) as f64)
        .filter(|&x| x <= l1 || x >= l2)
        .collect()
}

pub fn positivity_scan(psi: &WeightPsi, horizon: f64, s: f64, grid: ScanGrid) -> PositivityScan {
    let times = scan_times(horizon, grid.times);
    let xs = exterior_points(psi, grid.points);
    let psi_x: Vec<[f64; 7]> = xs.iter().map(|&x| psi.derivatives(x)).collect();
    let left = psi.derivatives(-psi.half_length());
    let per_time: Vec<(f64, f64, f64, f64)> = times
        .par_iter()
        .map(|&t| {
            let theta = time_factor(t, horizon);
            let (mut d_min, mut lead_min) = (f64::INFINITY, f64::INFINITY);
            for ps in &psi_x {
                let (c, _, lead) = closed_forms(s, &PhiDerivatives { theta, psi: *ps });
                d_min = d_min.min(c.d);
                lead_min = lead_min.min(lead);
            }
            let (b, _, _) = closed_forms(s, &PhiDerivatives { theta, psi: left });
            (d_min, lead_min, b.g, b.h)
        })
        .collect();
    let fold =
        |f: fn(&(f64, f64, f64, f64)) -> f64| per_time.iter().map(f).fold(f64::INFINITY, f64::min);
    PositivityScan {
        s,
        d_min: fold(|v| v.0),
        leading_min: fold(|v| v.1),
        g_min: fold(|v| v.2),
        h_min: fold(|v| v.3),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub s_star: f64,
    /// Scans at `s*` times 1, 2, 4, 8 and 16.
    pub multiples: Vec<PositivityScan>,
}

impl ThresholdReport {
    pub fn all_hold(&self) -> bool {
        self.multiples.iter().all(PositivityScan::holds)
    }
}

/// Smallest `s` (to bisection accuracy) at which the `D`, `G` and `H` scans are positive.
pub fn find_s_star(psi: &WeightPsi, horizon: f64, grid: ScanGrid) -> Result<ThresholdReport> {
    let ok = |s: f64| positivity_scan(psi, horizon, s, grid).holds();
    let mut hi = 1.0;
    let mut doublings = 0;
    while !ok(hi) {
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::NumericalBreakdown(
                "no positive threshold found below 2^60".into(),
            ));
        }
    }
    let mut lo = if doublings == 0 { 1e-6 } else { 0.5 * hi };
    if ok(lo) {
        hi = lo;
    } else {
        for _ in 0..50 {
            let mid = (lo * hi).sqrt();
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    let multiples = [1.0, 2.0, 4.0, 8.0, 16.0]
        .iter()
        .map(|m| positivity_scan(psi, horizon, m * hi, grid))
        .collect();
    Ok(ThresholdReport {
        s_star: hi,
        multiples,
    })
}

//! Spatial weight profiles.
//!
//! The profile is `psi(x) = K + g(|x - l3|)` on each side of the well centre
//! `l3`. With `y` the distance to `l3` and `d` the half width of `omega`,
//! `g'' = 2` on `[0, a d]`, a cubic Hermite blend on `[a d, (a + 0.4) d]` and
//! the affine `-eps - c (y - (a + 0.4) d)` beyond, with `a = 1/2` for a centred region. The slope `c` is fixed by
//! `g'(R) = f g'(d)` at the side's extent `R` (`f = 1/2` by default), the offset is `K = 4 g(R)`, so
//! the boundary-to-centre ratio is exactly `5/4`.

use serde::Serialize;

use super::poly::Poly;
use crate::error::{invalid, Error, Result};

pub const POSITIVITY: &str = "positivity";
pub const EXTERIOR_SHAPE: &str = "exterior-concavity";
pub const BOUNDARY_SLOPES: &str = "boundary-slopes";
pub const WELL_STRUCTURE: &str = "well-structure";
pub const MAX_MIN_RATIO: &str = "max-min-ratio";

/// Number of points in the construction-time scan.
pub const SCAN_POINTS: usize = 20_001;

const DEFAULT_KNOT: f64 = 0.5;
const BLEND_WIDTH: f64 = 0.4;
const DEFAULT_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
struct Segment {
    start: f64,
    end: f64,
    // polynomial in the local variable y - start
    g: Poly,
}

#[derive(Debug, Clone, PartialEq)]
struct Side {
    extent: f64,
    knot: f64,
    fraction: f64,
    slope: f64,
    segments: Vec<Segment>,
}

impl Side {
    fn derivative(&self, k: usize, y: f64) -> f64 {
        let seg = self
            .segments
            .iter()
            .find(|s| y <= s.end)
            .unwrap_or_else(|| self.segments.last().expect("three segments"));
        seg.g.derivative_at(k, y - seg.start)
    }

    fn boundary_value(&self) -> f64 {
        self.derivative(0, self.extent)
    }
}

/// Knot position and slope fraction of one side, moved together by a single
/// balancing parameter in `[-1, 1]`; negative values flatten the side.
fn side_parameters(sigma: f64) -> (f64, f64) {
    if sigma < 0.0 {
        (DEFAULT_KNOT + 0.4 * sigma, DEFAULT_FRACTION + 0.48 * sigma)
    } else {
        (DEFAULT_KNOT + 0.05 * sigma, DEFAULT_FRACTION + 0.48 * sigma)
    }
}

fn curvature_pieces(d: f64, extent: f64, knot: f64, c: f64) -> [(f64, f64, Poly); 3] {
    let y1 = knot * d;
    let y0 = (knot + BLEND_WIDTH) * d;
    let hw = y0 - y1;
    let eps = c * (extent - y0) / 4.0;
    // 2 h00(s) - eps h01(s) - c hw h11(s) with s = z / hw
    let s2 = -6.0 - 3.0 * eps + c * hw;
    let s3 = 4.0 + 2.0 * eps - c * hw;
    let blend = Poly(vec![2.0, 0.0, s2 / (hw * hw), s3 / (hw * hw * hw)]);
    [
        (0.0, y1, Poly::constant(2.0)),
        (y1, y0, blend),
        (y0, extent, Poly(vec![-eps, -c])),
    ]
}

fn integrate(pieces: [(f64, f64, Poly); 3]) -> Vec<Segment> {
    let (mut slope, mut value) = (0.0, 0.0);
    pieces
        .into_iter()
        .map(|(start, end, curv)| {
            let first = curv.integral(slope);
            let g = first.integral(value);
            slope = first.eval(end - start);
            value = g.eval(end - start);
            Segment { start, end, g }
        })
        .collect()
}

fn build_side(d: f64, extent: f64, sigma: f64) -> Result<Side> {
    let (knot, fraction) = side_parameters(sigma);
    let segments = |c: f64| integrate(curvature_pieces(d, extent, knot, c));
    let mismatch = |c: f64| {
        let side = Side {
            extent,
            knot,
            fraction,
            slope: c,
            segments: segments(c),
        };
        side.derivative(1, extent) - fraction * side.derivative(1, d)
    };
    let (f0, f1) = (mismatch(0.0), mismatch(1.0));
    let slope = -f0 / (f1 - f0);
    if !(slope > 0.0) || !slope.is_finite() {
        return Err(Error::ConstructionFailure {
            condition: EXTERIOR_SHAPE,
            detail: format!("no decreasing slope profile for extent {extent} and half width {d}"),
        });
    }
    Ok(Side {
        extent,
        knot,
        fraction,
        slope,
        segments: segments(slope),
    })
}

/// Flattens the longer side, and if that is not enough steepens the shorter
/// one, until both boundary values agree.
fn balance(d: f64, long: f64, short: f64) -> Result<(Side, Side)> {
    let solve = |extent: f64, range: (f64, f64), target: f64| -> Result<Side> {
        let (mut lo, mut hi) = range;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if build_side(d, extent, mid)?.boundary_value() > target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        build_side(d, extent, 0.5 * (lo + hi))
    };
    let reference = build_side(d, short, 0.0)?;
    let flattest = build_side(d, long, -1.0)?;
    if flattest.boundary_value() <= reference.boundary_value() {
        return Ok((
            solve(long, (-1.0, 0.0), reference.boundary_value())?,
            reference,
        ));
    }
    let target = flattest.boundary_value();
    if build_side(d, short, 1.0)?.boundary_value() < target {
        return Err(Error::ConstructionFailure {
            condition: WELL_STRUCTURE,
            detail: format!("boundary values cannot be balanced for extents {long} and {short}"),
        });
    }
    Ok((flattest, solve(short, (0.0, 1.0), target)?))
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Well {
        half_width: f64,
        offset: f64,
        left: Side,
        right: Side,
    },
    Constant(f64),
}

/// Weight profile on `[-L, L]` with a well centred inside `omega = (l1, l2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightPsi {
    half_length: f64,
    omega: (f64, f64),
    centre: f64,
    shape: Shape,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub holds: bool,
    /// Smallest slack over the scan; negative when violated.
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PsiReport {
    pub samples: usize,
    pub checks: Vec<ConditionCheck>,
    pub boundary_to_centre: f64,
}

impl PsiReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn first_violation(&self) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| !c.holds)
    }
}

/// Builds and verifies a well profile for `omega` strictly inside `(-L, L)`.
pub fn build_psi(half_length: f64, omega: (f64, f64)) -> Result<WeightPsi> {
    let (l1, l2) = omega;
    if !(half_length > 0.0) || !half_length.is_finite() {
        return Err(invalid(format!(
            "half length must be positive, got {half_length}"
        )));
    }
    if !(l1 < l2) {
        return Err(invalid(format!("empty control region ({l1}, {l2})")));
    }
    if !(l1 > -half_length && l2 < half_length) {
        return Err(Error::ConstructionFailure {
            condition: BOUNDARY_SLOPES,
            detail: format!(
                "region ({l1}, {l2}) reaches the boundary of (-{half_length}, {half_length})"
            ),
        });
    }
    let centre = 0.5 * (l1 + l2);
    let d = 0.5 * (l2 - l1);
    let (left_extent, right_extent) = (centre + half_length, half_length - centre);
    let (left, right) = if (left_extent - right_extent).abs() <= 1e-14 * half_length {
        (
            build_side(d, left_extent, 0.0)?,
            build_side(d, right_extent, 0.0)?,
        )
    } else if left_extent > right_extent {
        balance(d, left_extent, right_extent)?
    } else {
        let (r, l) = balance(d, right_extent, left_extent)?;
        (l, r)
    };
    let offset = 4.0 * left.boundary_value().max(right.boundary_value());
    let psi = WeightPsi {
        half_length,
        omega,
        centre,
        shape: Shape::Well {
            half_width: d,
            offset,
            left,
            right,
        },
    };
    let report = psi.verify(SCAN_POINTS);
    if let Some(bad) = report.first_violation() {
        return Err(Error::ConstructionFailure {
            condition: bad.name,
            detail: format!(
                "smallest slack {:e} over {} samples",
                bad.margin, report.samples
            ),
        });
    }
    Ok(psi)
}

impl WeightPsi {
    /// Constant test profile; it satisfies none of the shape conditions.
    pub fn constant(half_length: f64, value: f64) -> Result<Self> {
        if !(half_length > 0.0) || !(value > 0.0) {
            return Err(invalid(
                "constant profile needs a positive half length and value",
            ));
        }
        Ok(Self {
            half_length,
            omega: (-0.5 * half_length, 0.5 * half_length),
            centre: 0.0,
            shape: Shape::Constant(value),
        })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn omega(&self) -> (f64, f64) {
        self.omega
    }

    pub fn centre(&self) -> f64 {
        self.centre
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.shape, Shape::Constant(_))
    }

    /// `[psi, psi', ..., psi^(6)]` at `x`.
    pub fn derivatives(&self, x: f64) -> [f64; 7] {
        let mut out = [0.0; 7];
        match &self.shape {
            Shape::Constant(v) => out[0] = *v,
            Shape::Well {
                offset,
                left,
                right,
                ..
            } => {
                let y = (x - self.centre).abs();
                let (side, sign) = if x < self.centre {
                    (left, -1.0)
                } else {
                    (right, 1.0)
                };
                let mut factor = 1.0;
                for (k, slot) in out.iter_mut().enumerate() {
                    *slot = factor * side.derivative(k, y);
                    factor *= sign;
                }
                out[0] += offset;
            }
        }
        out
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivatives(x)[0]
    }

    /// Smallest value over `[-L, L]`, attained at the well centre.
    pub fn min_value(&self) -> f64 {
        match &self.shape {
            Shape::Constant(v) => *v,
            Shape::Well { offset, .. } => *offset,
        }
    }

    /// Largest value over `[-L, L]`, attained at the end points.
    pub fn max_value(&self) -> f64 {
        self.value(-self.half_length)
            .max(self.value(self.half_length))
    }

    /// Points where the piecewise definition changes, plus the end points and region edges.
    pub fn knots(&self) -> Vec<f64> {
        let mut k = vec![
            -self.half_length,
            self.omega.0,
            self.centre,
            self.omega.1,
            self.half_length,
        ];
        if let Shape::Well {
            half_width,
            left,
            right,
            ..
        } = &self.shape
        {
            for f in [0.0, BLEND_WIDTH] {
                k.push(self.centre - (left.knot + f) * half_width);
                k.push(self.centre + (right.knot + f) * half_width);
            }
        }
        k.sort_by(f64::total_cmp);
        k
    }

    /// Slope fractions `(left, right)` chosen by the construction.
    pub fn fractions(&self) -> Option<(f64, f64)> {
        match &self.shape {
            Shape::Well { left, right, .. } => Some((left.fraction, right.fraction)),
            Shape::Constant(_) => None,
        }
    }

    /// Exterior slope parameters `(left, right)`.
    pub fn slopes(&self) -> Option<(f64, f64)> {
        match &self.shape {
            Shape::Well { left, right, .. } => Some((left.slope, right.slope)),
            Shape::Constant(_) => None,
        }
    }

    /// Scans `samples` equispaced points plus the knots and evaluates every shape condition.
    pub fn verify(&self, samples: usize) -> PsiReport {
        let big_l = self.half_length;
        let (l1, l2) = self.omega;
        let mut xs: Vec<f64> = (0..samples.max(2))
            .map(|i| -big_l + 2.0 * big_l * i as f64 / (samples.max(2) - 1) as f64)
            .collect();
        xs.extend(self.knots());
        let vals: Vec<[f64; 7]> = xs.iter().map(|&x| self.derivatives(x)).collect();
        let left_end = self.derivatives(-big_l);
        let right_end = self.derivatives(big_l);
        let at_centre = self.value(self.centre);
        let at_edge = self.value(l2).max(self.value(l1));
        let top = left_end[0].max(right_end[0]);
        let tol = 1e-12 * top.abs().max(1.0);

        let positivity = vals.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);

        let exterior = xs
            .iter()
            .zip(&vals)
            .filter(|(&x, _)| x <= l1 || x >= l2)
            .map(|(_, v)| v[1].abs().min(-v[2]).min(-v[1] * v[3]))
            .fold(f64::INFINITY, f64::min);

        let slopes = (-left_end[1]).min(right_end[1]);

        let mut well = f64::INFINITY;
        for (&x, v) in xs.iter().zip(&vals) {
            if x > l1 && x < l2 {
                well = well.min(v[0] - at_centre + tol).min(at_edge - v[0] + tol);
            }
            well = well.min(top - v[0] + tol);
        }
        well = well
            .min(at_edge - at_centre)
            .min(tol - (left_end[0] - right_end[0]).abs());

        let ratio = 4.0 / 3.0 * at_centre - top + tol;

        let check = |name, margin: f64| ConditionCheck {
            name,
            holds: margin > 0.0,
            margin,
        };
        PsiReport {
            samples: xs.len(),
            checks: vec![
                check(POSITIVITY, positivity),
                check(EXTERIOR_SHAPE, exterior),
                check(BOUNDARY_SLOPES, slopes),
                check(WELL_STRUCTURE, well),
                check(MAX_MIN_RATIO, ratio),
            ],
            boundary_to_centre: top / at_centre,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_region_gives_a_valid_well() {
        let psi = build_psi(1.0, (-0.5, 0.5)).unwrap();
        let d = psi.derivatives(-1.0);
        assert!(d[1] < 0.0 && psi.derivatives(1.0)[1] > 0.0);
        assert!(psi.value(-1.0) / psi.value(0.0) <= 4.0 / 3.0);
        assert!((psi.verify(10_001).boundary_to_centre - 1.25).abs() < 1e-12);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let psi = build_psi(1.0, (-0.3, 0.6)).unwrap();
        for &x in &[-0.9, -0.7, -0.2, 0.05, 0.3, 0.55, 0.8] {
            let d = psi.derivatives(x);
            for k in 0..5 {
                let e = 1e-5;
                let fd = (psi.derivatives(x + e)[k] - psi.derivatives(x - e)[k]) / (2.0 * e);
                assert!(
                    (fd - d[k + 1]).abs() <= 1e-5 * (1.0 + d[k + 1].abs()),
                    "x={x} k={k}"
                );
            }
        }
    }

    #[test]
    fn asymmetric_region_balances_end_values() {
        for omega in [(-0.3, 0.6), (0.1, 0.5), (-0.6, 0.2)] {
            let psi = build_psi(1.0, omega).unwrap();
            let (a, b) = (psi.value(-1.0), psi.value(1.0));
            assert!((a - b).abs() <= 1e-12 * a, "{omega:?}: {a} {b}");
            assert!(psi.verify(20_001).all_hold());
        }
    }

    #[test]
    fn degenerate_region_succeeds_or_names_the_condition() {
        match build_psi(1.0, (-0.999, 0.999)) {
            Ok(psi) => assert!(psi.verify(SCAN_POINTS).all_hold()),
            Err(Error::ConstructionFailure { condition, .. }) => assert!(!condition.is_empty()),
            Err(e) => panic!("unexpected error {e}"),
        }
        // a region hugging one end leaves too little room to balance the end values
        assert!(matches!(
            build_psi(1.0, (-0.9, -0.2)),
            Err(Error::ConstructionFailure {
                condition: WELL_STRUCTURE,
                ..
            })
        ));
        assert!(matches!(
            build_psi(1.0, (-1.0, 0.5)),
            Err(Error::ConstructionFailure {
                condition: BOUNDARY_SLOPES,
                ..
            })
        ));
    }

    #[test]
    fn constant_profile_fails_the_shape_scan() {
        let psi = WeightPsi::constant(1.0, 2.0).unwrap();
        assert_eq!(psi.derivatives(0.3), [2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(
            psi.verify(100).first_violation().unwrap().name,
            EXTERIOR_SHAPE
        );
    }
}

//! Implicit time integration.
//!
//! Every step has the form `u^{k+1} = S_k u^k + dt R_k F^k` with the source
//! sampled at the interval midpoint. Crank-Nicolson steps use
//! `S = (I - dt/2 A)^{-1} (I + dt/2 A)` and `R = (I - dt/2 A)^{-1}`. The smoothed
//! scheme replaces the first and the last interval by `m` implicit Euler
//! substeps, which damps the stiff components Crank-Nicolson leaves undamped.
//!
//! The dual recursion `phi^k = S_k^T phi^{k+1}`, `psi^k = R_k^T phi^{k+1}` uses
//! the factorization of the adjoint operator, so that
//! `(u^N, phi^N) - (u^0, phi^0) = sum_k dt (F^k, psi^k)` holds to roundoff.

mod smoothing;
mod weighted;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use smoothing::{order_ratio, smoothing_gain, GainReport, SmoothingIndex};
pub use weighted::{half_line_grid, weighted_contraction_check, WeightedReport, WEIGHT_CUTOFF};

use crate::banded::{BandLu, BandMatrix};
use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, StateVector};
use crate::operator::{DiscreteOperator, OperatorKind};

/// Time discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeScheme {
    CrankNicolson,
    /// Crank-Nicolson with `substeps` implicit Euler substeps on the first and last interval.
    Smoothed {
        substeps: usize,
    },
}

impl TimeScheme {
    pub fn tag(&self) -> String {
        match self {
            TimeScheme::CrankNicolson => "crank-nicolson".into(),
            TimeScheme::Smoothed { substeps } => format!("crank-nicolson+euler{substeps}"),
        }
    }
}

/// Default smoothing used by the control solvers.
pub const CONTROL_SCHEME: TimeScheme = TimeScheme::Smoothed { substeps: 4 };

/// Factored step matrices for one operator, step size and step count.
#[derive(Debug, Clone)]
pub struct Propagator {
    grid: Grid,
    kind: OperatorKind,
    dt: f64,
    steps: usize,
    scheme: TimeScheme,
    implicit: BandLu,
    explicit: BandMatrix,
    euler: Option<(BandLu, usize)>,
}

impl Propagator {
    pub fn new(op: &DiscreteOperator, dt: f64, steps: usize, scheme: TimeScheme) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid(format!("time step must be positive, got {dt}")));
        }
        if steps == 0 {
            return Err(invalid("at least one time step is required"));
        }
        let a = op.matrix();
        let implicit = BandLu::factor(&a.shifted(1.0, -0.5 * dt))?;
        let explicit = a.shifted(1.0, 0.5 * dt);
        let euler = match scheme {
            TimeScheme::CrankNicolson => None,
            TimeScheme::Smoothed { substeps } => {
                if substeps == 0 {
                    return Err(invalid("smoothed scheme needs at least one substep"));
                }
                Some((
                    BandLu::factor(&a.shifted(1.0, -dt / substeps as f64))?,
                    substeps,
                ))
            }
        };
        Ok(Self {
            grid: *op.grid(),
            kind: op.kind(),
            dt,
            steps,
            scheme,
            implicit,
            explicit,
            euler,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn scheme(&self) -> TimeScheme {
        self.scheme
    }

    fn euler_on(&self, k: usize) -> Option<&(BandLu, usize)> {
        self.euler
            .as_ref()
            .filter(|_| k == 0 || k + 1 == self.steps)
    }

    /// Advances over interval `k`: `S_k u + dt R_k f`.
    pub fn step(&self, k: usize, u: &[f64], source: Option<&[f64]>) -> Vec<f64> {
        match self.euler_on(k) {
            Some((lu, m)) => {
                let sub = self.dt / *m as f64;
                let mut v = u.to_vec();
                for _ in 0..*m {
                    if let Some(f) = source {
                        v.iter_mut().zip(f).for_each(|(a, b)| *a += sub * b);
                    }
                    lu.solve_in_place(&mut v);
                }
                v
            }
            None => {
                let mut v = self.explicit.apply(u);
                if let Some(f) = source {
                    v.iter_mut().zip(f).for_each(|(a, b)| *a += self.dt * b);
                }
                self.implicit.solve_in_place(&mut v);
                v
            }
        }
    }

    /// Dual step over interval `k` for a propagator assembled from the adjoint
    /// operator: returns `(S_k^T phi, R_k^T phi)` where `S_k`, `R_k` belong to the
    /// forward propagator with the same step size and scheme.
    pub fn step_back(&self, k: usize, phi_next: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match self.euler_on(k) {
            Some((lu, m)) => {
                let mut z = phi_next.to_vec();
                let mut mean = vec![0.0; z.len()];
                for _ in 0..*m {
                    lu.solve_in_place(&mut z);
                    mean.iter_mut().zip(&z).for_each(|(a, b)| *a += b);
                }
                let inv = 1.0 / *m as f64;
                mean.iter_mut().for_each(|a| *a *= inv);
                (z, mean)
            }
            None => {
                let y = self.implicit.solve(phi_next);
                (self.explicit.apply(&y), y)
            }
        }
    }
}

/// Space profile of a source at a given time.
pub type SourceEval = Arc<dyn Fn(f64, &Grid) -> Vec<f64> + Send + Sync>;

/// Forcing term of the inhomogeneous problem.
#[derive(Clone)]
pub enum SourceTerm {
    /// Evaluator with a declared time support `[start, end]`.
    Function {
        support: (f64, f64),
        eval: SourceEval,
    },
    /// One vector per interval of a fixed time mesh; empty entries mean zero.
    Sampled {
        t0: f64,
        dt: f64,
        support: (f64, f64),
        values: Vec<Option<Vec<f64>>>,
    },
}

impl std::fmt::Debug for SourceTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SourceTerm::Function { support, .. } => write!(f, "SourceTerm::Function({support:?})"),
            SourceTerm::Sampled {
                support, values, ..
            } => {
                write!(
                    f,
                    "SourceTerm::Sampled({support:?}, {} intervals)",
                    values.len()
                )
            }
        }
    }
}

impl SourceTerm {
    pub fn function(
        support: (f64, f64),
        eval: impl Fn(f64, &Grid) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        SourceTerm::Function {
            support,
            eval: Arc::new(eval),
        }
    }

    /// Separable source `time(t) * space(x)` supported on `support`.
    pub fn separable(
        support: (f64, f64),
        time: impl Fn(f64) -> f64 + Send + Sync + 'static,
        space: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::function(support, move |t, g| {
            let a = time(t);
            g.nodes().into_iter().map(|x| a * space(x)).collect()
        })
    }

    pub fn zero() -> Self {
        Self::Sampled {
            t0: 0.0,
            dt: 1.0,
            support: (0.0, 0.0),
            values: Vec::new(),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            SourceTerm::Function { support, .. } | SourceTerm::Sampled { support, .. } => *support,
        }
    }

    /// Value on the interval whose midpoint is `t`, or `None` when the source vanishes there.
    pub fn at(&self, t: f64, grid: &Grid) -> Option<Vec<f64>> {
        match self {
            SourceTerm::Function { support, eval } => {
                (t >= support.0 && t <= support.1).then(|| eval(t, grid))
            }
            SourceTerm::Sampled { t0, dt, values, .. } => {
                let k = ((t - t0) / dt - 0.5).round();
                if k < 0.0 {
                    return None;
                }
                values.get(k as usize).and_then(|v| v.clone())
            }
        }
    }

    /// Samples the evaluator outside its declared support and reports the largest magnitude found.
    pub fn support_violation(&self, grid: &Grid, t0: f64, t1: f64, samples: usize) -> f64 {
        let SourceTerm::Function { support, eval } = self else {
            return 0.0;
        };
        let mut worst = 0.0f64;
        for i in 0..=samples {
            let t = t0 + (t1 - t0) * i as f64 / samples as f64;
            if t < support.0 || t > support.1 {
                worst = eval(t, grid).iter().fold(worst, |m, v| m.max(v.abs()));
            }
        }
        worst
    }
}

/// Time-ordered states on a uniform time mesh.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: Grid,
    t0: f64,
    dt: f64,
    scheme: String,
    states: Vec<Vec<f64>>,
    norms: Vec<f64>,
}

impl Trajectory {
    pub fn new(
        grid: Grid,
        t0: f64,
        dt: f64,
        scheme: String,
        states: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if states.is_empty() {
            return Err(invalid("a trajectory needs at least one state"));
        }
        for s in &states {
            grid.check_len(s.len())?;
        }
        let norms = states.iter().map(|s| grid.norm(s)).collect();
        Ok(Self {
            grid,
            t0,
            dt,
            scheme,
            states,
            norms,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn start(&self) -> f64 {
        self.t0
    }

    pub fn end(&self) -> f64 {
        self.t0 + self.dt * (self.states.len() - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn scheme(&self) -> &str {
        &self.scheme
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + self.dt * k as f64
    }

    pub fn values(&self, k: usize) -> &[f64] {
        &self.states[k]
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn state(&self, k: usize) -> StateVector {
        StateVector::new(self.grid, self.states[k].clone()).expect("stored states are validated")
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().expect("non-empty")
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// Largest ratio `|u^{k+1}| / |u^k|` over the steps; steps starting from zero count as 1.
    pub fn max_step_ratio(&self) -> f64 {
        self.norms
            .windows(2)
            .map(|w| {
                if w[0] > 0.0 {
                    w[1] / w[0]
                } else if w[1] == 0.0 {
                    1.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
            .max(if self.norms.len() < 2 { 1.0 } else { 0.0 })
    }
}

/// Adjoint states `phi^k` together with the interval values `psi^k` that pair with sources.
#[derive(Debug, Clone)]
pub struct AdjointTrajectory {
    pub states: Trajectory,
    pub interval_values: Vec<Vec<f64>>,
}

fn check_window(t0: f64, t1: f64, nt: usize) -> Result<f64> {
    if !(t1 > t0) {
        return Err(invalid(format!(
            "final time {t1} must exceed start time {t0}"
        )));
    }
    if nt == 0 {
        return Err(invalid("at least one time step is required"));
    }
    Ok((t1 - t0) / nt as f64)
}

/// Unforced Crank-Nicolson evolution.
pub fn evolve(
    op: &DiscreteOperator,
    u0: &StateVector,
    t0: f64,
    t1: f64,
    nt: usize,
) -> Result<Trajectory> {
    evolve_with(op, u0, t0, t1, nt, TimeScheme::CrankNicolson)
}

pub fn evolve_with(
    op: &DiscreteOperator,
    u0: &StateVector,
    t0: f64,
    t1: f64,
    nt: usize,
    scheme: TimeScheme,
) -> Result<Trajectory> {
    evolve_forced_with(op, u0, &SourceTerm::zero(), t0, t1, nt, scheme)
}

/// Forced evolution with the source sampled at interval midpoints.
pub fn evolve_forced(
    op: &DiscreteOperator,
    u0: &StateVector,
    f: &SourceTerm,
    t0: f64,
    t1: f64,
    nt: usize,
) -> Result<Trajectory> {
    evolve_forced_with(op, u0, f, t0, t1, nt, TimeScheme::CrankNicolson)
}

pub fn evolve_forced_with(
    op: &DiscreteOperator,
    u0: &StateVector,
    f: &SourceTerm,
    t0: f64,
    t1: f64,
    nt: usize,
    scheme: TimeScheme,
) -> Result<Trajectory> {
    if u0.grid() != op.grid() {
        return Err(Error::GridMismatch(
            "initial state and operator live on different grids".into(),
        ));
    }
    let dt = check_window(t0, t1, nt)?;
    let prop = Propagator::new(op, dt, nt, scheme)?;
    let grid = *op.grid();
    let mut states = Vec::with_capacity(nt + 1);
    states.push(u0.values().to_vec());
    for k in 0..nt {
        let mid = t0 + (k as f64 + 0.5) * dt;
        let src = f.at(mid, &grid);
        if let Some(s) = &src {
            grid.check_len(s.len())?;
        }
        let next = prop.step(k, &states[k], src.as_deref());
        states.push(next);
    }
    Trajectory::new(grid, t0, dt, scheme.tag(), states)
}

/// Backward integration of the adjoint flow from `phi_final` at `t1` down to `t0`.
pub fn evolve_adjoint(
    op: &DiscreteOperator,
    phi_final: &StateVector,
    t0: f64,
    t1: f64,
    nt: usize,
) -> Result<AdjointTrajectory> {
    evolve_adjoint_with(op, phi_final, t0, t1, nt, TimeScheme::CrankNicolson)
}

pub fn evolve_adjoint_with(
    op: &DiscreteOperator,
    phi_final: &StateVector,
    t0: f64,
    t1: f64,
    nt: usize,
    scheme: TimeScheme,
) -> Result<AdjointTrajectory> {
    if op.kind() != OperatorKind::Adjoint {
        return Err(invalid("backward integration expects the adjoint operator"));
    }
    if phi_final.grid() != op.grid() {
        return Err(Error::GridMismatch(
            "terminal state and operator live on different grids".into(),
        ));
    }
    let dt = check_window(t0, t1, nt)?;
    let prop = Propagator::new(op, dt, nt, scheme)?;
    let mut states = vec![Vec::new(); nt + 1];
    let mut interval = vec![Vec::new(); nt];
    states[nt] = phi_final.values().to_vec();
    for k in (0..nt).rev() {
        let (phi, psi) = prop.step_back(k, &states[k + 1]);
        states[k] = phi;
        interval[k] = psi;
    }
    Ok(AdjointTrajectory {
        states: Trajectory::new(*op.grid(), t0, dt, scheme.tag(), states)?,
        interval_values: interval,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::build_operator;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize) -> (Grid, DiscreteOperator, DiscreteOperator) {
        let g = Grid::symmetric(1.0, n).unwrap();
        let a = build_operator(&g, OperatorKind::Forward).unwrap();
        let b = build_operator(&g, OperatorKind::Adjoint).unwrap();
        (g, a, b)
    }

    fn random_state(g: &Grid, rng: &mut ChaCha8Rng) -> StateVector {
        StateVector::new(
            *g,
            (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_data_stays_zero() {
        let (g, a, b) = setup(16);
        let t = evolve(&a, &StateVector::zeros(g), 0.0, 1.0, 10).unwrap();
        assert!(t.states().iter().all(|s| s.iter().all(|&v| v == 0.0)));
        let adj = evolve_adjoint(&b, &StateVector::zeros(g), 0.0, 1.0, 10).unwrap();
        assert!(adj
            .states
            .states()
            .iter()
            .all(|s| s.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn unforced_steps_contract() {
        let (g, a, _) = setup(64);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for scheme in [TimeScheme::CrankNicolson, CONTROL_SCHEME] {
            let u0 = random_state(&g, &mut rng);
            let t = evolve_with(&a, &u0, 0.0, 1.0, 64, scheme).unwrap();
            assert!(t.max_step_ratio() <= 1.0 + 1e-10);
            assert!(t.norms()[64] <= t.norms()[0]);
        }
    }

    #[test]
    fn time_mesh_is_consistent() {
        let (g, a, _) = setup(16);
        let t = evolve(&a, &g.sample(|x| 1.0 - x * x), 0.25, 1.5, 7).unwrap();
        assert!(((t.len() - 1) as f64 * t.dt() - 1.25).abs() < 1e-12);
        assert!((t.end() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn zero_source_matches_unforced_bitwise() {
        let (g, a, _) = setup(24);
        let u0 = g.sample(|x| (1.0 - x * x) * (2.0 * x).cos());
        let free = evolve(&a, &u0, 0.0, 1.0, 20).unwrap();
        let f = SourceTerm::function((0.0, 1.0), |_, g| vec![0.0; g.len()]);
        let forced = evolve_forced(&a, &u0, &f, 0.0, 1.0, 20).unwrap();
        assert_eq!(free.states(), forced.states());
    }

    #[test]
    fn superposition_holds() {
        let (g, a, _) = setup(32);
        let u0 = g.sample(|x| (1.0 - x * x) * x.exp());
        let f = SourceTerm::separable((0.2, 0.8), |t| (t * 5.0).sin(), |x| (-(x * x) * 8.0).exp());
        let both = evolve_forced(&a, &u0, &f, 0.0, 1.0, 40).unwrap();
        let free = evolve(&a, &u0, 0.0, 1.0, 40).unwrap();
        let forced = evolve_forced(&a, &StateVector::zeros(g), &f, 0.0, 1.0, 40).unwrap();
        for k in 0..=40 {
            let sum: Vec<f64> = free
                .values(k)
                .iter()
                .zip(forced.values(k))
                .map(|(p, q)| p + q)
                .collect();
            let diff: Vec<f64> = sum.iter().zip(both.values(k)).map(|(p, q)| p - q).collect();
            assert!(g.norm(&diff) <= 1e-12 * g.norm(both.values(k)).max(1e-300));
        }
    }

    #[test]
    fn duality_identity_is_exact() {
        let (g, a, b) = setup(40);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for scheme in [TimeScheme::CrankNicolson, CONTROL_SCHEME] {
            let u0 = random_state(&g, &mut rng);
            let phi_t = random_state(&g, &mut rng);
            let nt = 30;
            let dt = 1.0 / nt as f64;
            let samples: Vec<Option<Vec<f64>>> = (0..nt)
                .map(|_| Some(random_state(&g, &mut rng).into_values()))
                .collect();
            let f = SourceTerm::Sampled {
                t0: 0.0,
                dt,
                support: (0.0, 1.0),
                values: samples.clone(),
            };
            let u = evolve_forced_with(&a, &u0, &f, 0.0, 1.0, nt, scheme).unwrap();
            let phi = evolve_adjoint_with(&b, &phi_t, 0.0, 1.0, nt, scheme).unwrap();
            let lhs = g.dot(u.last(), phi_t.values()) - g.dot(u0.values(), phi.states.values(0));
            let rhs: f64 = (0..nt)
                .map(|k| dt * g.dot(samples[k].as_ref().unwrap(), &phi.interval_values[k]))
                .sum();
            assert!(
                (lhs - rhs).abs() <= 1e-8 * lhs.abs().max(rhs.abs()).max(1e-12),
                "{lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn adjoint_flow_contracts() {
        let (g, _, b) = setup(48);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let phi_t = random_state(&g, &mut rng);
        let phi = evolve_adjoint(&b, &phi_t, 0.0, 1.0, 48).unwrap();
        assert!(phi.states.norms()[0] <= phi_t.norm());
        assert!(evolve_adjoint(
            &build_operator(&g, OperatorKind::Forward).unwrap(),
            &phi_t,
            0.0,
            1.0,
            4
        )
        .is_err());
    }

    #[test]
    fn second_order_against_dense_exponential() {
        let (g, a, _) = setup(16);
        let u0 = g.sample(|x| (1.0 + x) * (1.0 - x).powi(2) * x.exp());
        let dense = a.matrix().to_dense();
        let exact = (dense * 0.25).exp() * DVector::from_vec(u0.values().to_vec());
        let err = |nt: usize| {
            let t = evolve(&a, &u0, 0.0, 0.25, nt).unwrap();
            let d: Vec<f64> = t
                .last()
                .iter()
                .zip(exact.iter())
                .map(|(p, q)| p - q)
                .collect();
            g.norm(&d) / g.norm(exact.as_slice())
        };
        let (e1, e2) = (err(64), err(128));
        let ratio = e1 / e2;
        assert!(
            e1 < 1e-3 && (3.0..=5.0).contains(&ratio),
            "errors {e1} {e2}"
        );
    }

    #[test]
    fn sampled_support_is_checked() {
        let g = Grid::symmetric(1.0, 10).unwrap();
        let leaky = SourceTerm::function((0.4, 0.6), |_, g| vec![1.0; g.len()]);
        assert!(leaky.support_violation(&g, 0.0, 1.0, 100) > 0.0);
        let tight = SourceTerm::separable(
            (0.4, 0.6),
            |t| if (0.4..=0.6).contains(&t) { 1.0 } else { 0.0 },
            |_| 1.0,
        );
        assert_eq!(tight.support_violation(&g, 0.0, 1.0, 100), 0.0);
    }
}

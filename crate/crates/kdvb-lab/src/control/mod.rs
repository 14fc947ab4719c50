//! Control synthesis by duality.
//!
//! A control on the region `omega` is sought in the form `F^k = chi psi^k`,
//! where `psi` is the discrete adjoint state started from terminal data `x`.
//! The endpoint map `Lambda x = u(T; 0, F)` is symmetric and positive
//! semidefinite, and the terminal datum solves
//! `(Lambda + tau_eff I) x = -u_free(T)` by conjugate residuals, which
//! minimizes the residual over the Krylov space so that the endpoint defect
//! never increases from one iteration to the next.

mod cutoff;
mod half_line;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use cutoff::{
    compact_support_source_solution, cutoff_trajectory, CompactSupportReport, CutoffFunction,
    CutoffReport, CutoffSettings,
};
pub use half_line::{half_line_trajectory, HalfLineReport, HalfLineSettings, MIN_DECAY};

use crate::error::{invalid, Error, Result};
use crate::evolution::{Propagator, TimeScheme, CONTROL_SCHEME};
use crate::grid::Grid;
use crate::operator::{build_operator, OperatorKind};

/// Regularization, stopping rule and budget of the dual solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HumSettings {
    /// Relative level; the shift is `tau * trace(Lambda) / n`.
    pub tau: f64,
    /// Stop once the relative endpoint defect is at or below this.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for HumSettings {
    fn default() -> Self {
        Self {
            tau: 1e-10,
            tol: 1e-6,
            max_iterations: 500,
        }
    }
}

/// Steering or null-control problem on `(0, T)`.
#[derive(Debug, Clone)]
pub struct ControlProblem {
    pub grid: Grid,
    pub horizon: f64,
    pub steps: usize,
    pub region: (f64, f64),
    pub initial: Vec<f64>,
    /// `u_T`; the endpoint sought is its free evolution `S(T) u_T`. `None` means null control.
    pub target: Option<Vec<f64>>,
    pub settings: HumSettings,
    pub scheme: TimeScheme,
}

impl ControlProblem {
    pub fn null(
        grid: Grid,
        horizon: f64,
        steps: usize,
        region: (f64, f64),
        initial: Vec<f64>,
    ) -> Self {
        Self {
            grid,
            horizon,
            steps,
            region,
            initial,
            target: None,
            settings: HumSettings::default(),
            scheme: CONTROL_SCHEME,
        }
    }

    pub fn with_target(mut self, target: Vec<f64>) -> Self {
        self.target = Some(target);
        self
    }

    pub fn with_settings(mut self, settings: HumSettings) -> Self {
        self.settings = settings;
        self
    }

    fn validate(&self) -> Result<Vec<bool>> {
        self.grid.check_len(self.initial.len())?;
        if let Some(t) = &self.target {
            self.grid.check_len(t.len())?;
        }
        if !(self.horizon > 0.0) || self.steps == 0 {
            return Err(invalid("control horizon and step count must be positive"));
        }
        let s = &self.settings;
        if !(s.tol > 0.0) && s.max_iterations == 0 {
            return Err(invalid(
                "either a positive tolerance or an iteration budget is required",
            ));
        }
        if !(s.tau >= 0.0) || s.tol < 0.0 {
            return Err(invalid("regularization and tolerance must be nonnegative"));
        }
        let mask = self.grid.mask(self.region.0, self.region.1);
        if !mask.iter().any(|&m| m) {
            return Err(invalid(format!(
                "control region {:?} contains no grid node",
                self.region
            )));
        }
        Ok(mask)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ControlResult {
    /// `F^k` on each time interval, exactly zero outside the region.
    pub controls: Vec<Vec<f64>>,
    /// Controlled states `u^0..u^N`.
    pub states: Vec<Vec<f64>>,
    pub endpoint: Vec<f64>,
    /// `|u(T) - S(T) u_T| / max(|u0|, |u_T|, 1)`.
    pub error: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `|(|F|^2 + (u_free(T), x) + tau_eff |x|^2)| / |F|^2`, zero at the exact optimum.
    pub duality_gap: f64,
    /// `sum_k dt |F^k|^2`.
    pub control_energy: f64,
    pub tau_effective: f64,
    /// Relative endpoint defect after each iteration, starting with the uncontrolled one.
    pub history: Vec<f64>,
    pub region_mask: Vec<bool>,
}

impl ControlResult {
    /// Largest magnitude of any control value outside the region.
    pub fn support_violation(&self) -> f64 {
        self.controls
            .iter()
            .flat_map(|f| {
                f.iter()
                    .zip(&self.region_mask)
                    .filter(|(_, &m)| !m)
                    .map(|(v, _)| v.abs())
            })
            .fold(0.0, f64::max)
    }
}

/// Forward and dual sweeps for one grid, window and scheme.
pub(crate) struct DualityEngine {
    grid: Grid,
    forward: Propagator,
    backward: Propagator,
    mask: Vec<bool>,
    dt: f64,
    steps: usize,
}

impl DualityEngine {
    pub(crate) fn new(
        grid: &Grid,
        horizon: f64,
        steps: usize,
        mask: Vec<bool>,
        scheme: TimeScheme,
    ) -> Result<Self> {
        let dt = horizon / steps as f64;
        let fwd = build_operator(grid, OperatorKind::Forward)?;
        let adj = build_operator(grid, OperatorKind::Adjoint)?;
        Ok(Self {
            grid: *grid,
            forward: Propagator::new(&fwd, dt, steps, scheme)?,
            backward: Propagator::new(&adj, dt, steps, scheme)?,
            mask,
            dt,
            steps,
        })
    }

    fn masked(&self, mut v: Vec<f64>) -> Vec<f64> {
        v.iter_mut()
            .zip(&self.mask)
            .filter(|(_, &m)| !m)
            .for_each(|(a, _)| *a = 0.0);
        v
    }

    /// Controls generated by terminal adjoint data `x`.
    fn controls(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); self.steps];
        let mut phi = x.to_vec();
        for k in (0..self.steps).rev() {
            let (prev, psi) = self.backward.step_back(k, &phi);
            out[k] = self.masked(psi);
            phi = prev;
        }
        out
    }

    pub(crate) fn run(&self, u0: &[f64], controls: Option<&[Vec<f64>]>) -> Vec<Vec<f64>> {
        let mut states = Vec::with_capacity(self.steps + 1);
        states.push(u0.to_vec());
        for k in 0..self.steps {
            let f = controls.map(|c| c[k].as_slice());
            let next = self.forward.step(k, &states[k], f);
            states.push(next);
        }
        states
    }

    fn endpoint(&self, u0: &[f64], controls: Option<&[Vec<f64>]>) -> Vec<f64> {
        let mut u = u0.to_vec();
        for k in 0..self.steps {
            u = self.forward.step(k, &u, controls.map(|c| c[k].as_slice()));
        }
        u
    }

    fn lambda(&self, x: &[f64]) -> Vec<f64> {
        let c = self.controls(x);
        self.endpoint(&vec![0.0; x.len()], Some(&c))
    }

    /// `trace(Lambda) = sum_i sum_k dt |chi psi^k(e_i)|^2 / h`, from `n` dual sweeps.
    fn trace(&self) -> f64 {
        use rayon::prelude::*;
        let n = self.grid.len();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                self.controls(&e)
                    .iter()
                    .map(|f| self.dt * f.iter().map(|v| v * v).sum::<f64>())
                    .sum::<f64>()
            })
            .collect::<Vec<f64>>()
            .into_iter()
            .sum()
    }

    fn energy(&self, controls: &[Vec<f64>]) -> f64 {
        controls.iter().map(|f| self.dt * self.grid.dot(f, f)).sum()
    }

    /// Dense `Lambda`, column by column.
    fn dense_lambda(&self) -> DMatrix<f64> {
        use rayon::prelude::*;
        let n = self.grid.len();
        let cols: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                self.lambda(&e)
            })
            .collect();
        DMatrix::from_iterator(n, n, cols.into_iter().flatten())
    }
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(b, v)| *b += a * v);
}

struct Prepared {
    engine: DualityEngine,
    /// Initial state of the difference system `u0 - u_T`.
    shifted: Vec<f64>,
    /// Free endpoint `S(T) u_T` to be added back.
    target_endpoint: Vec<f64>,
    free_end: Vec<f64>,
    scale: f64,
    tau_eff: f64,
}

fn prepare(p: &ControlProblem) -> Result<Prepared> {
    let mask = p.validate()?;
    let engine = DualityEngine::new(&p.grid, p.horizon, p.steps, mask, p.scheme)?;
    let n = p.grid.len();
    let target = p.target.clone().unwrap_or_else(|| vec![0.0; n]);
    let shifted: Vec<f64> = p.initial.iter().zip(&target).map(|(a, b)| a - b).collect();
    let target_endpoint = engine.endpoint(&target, None);
    let free_end = engine.endpoint(&shifted, None);
    let scale = p.grid.norm(&p.initial).max(p.grid.norm(&target)).max(1.0);
    let tau_eff = if p.settings.tau > 0.0 {
        p.settings.tau * engine.trace() / n as f64
    } else {
        0.0
    };
    Ok(Prepared {
        engine,
        shifted,
        target_endpoint,
        free_end,
        scale,
        tau_eff,
    })
}

fn finish(
    p: &ControlProblem,
    prep: &Prepared,
    x: &[f64],
    iterations: usize,
    converged: bool,
    history: Vec<f64>,
) -> ControlResult {
    let e = &prep.engine;
    let controls = e.controls(x);
    let mut states = e.run(&prep.shifted, Some(&controls));
    let free_target = e.run(
        &p.target.clone().unwrap_or_else(|| vec![0.0; p.grid.len()]),
        None,
    );
    for (s, t) in states.iter_mut().zip(&free_target) {
        axpy(1.0, t, s);
    }
    let endpoint = states.last().expect("non-empty").clone();
    let defect: Vec<f64> = endpoint
        .iter()
        .zip(&prep.target_endpoint)
        .map(|(a, b)| a - b)
        .collect();
    let error = p.grid.norm(&defect) / prep.scale;
    let energy = e.energy(&controls);
    let pairing = p.grid.dot(&prep.free_end, x) + prep.tau_eff * p.grid.dot(x, x);
    let duality_gap = if energy > 0.0 {
        (energy + pairing).abs() / energy
    } else {
        0.0
    };
    ControlResult {
        controls,
        states,
        endpoint,
        error,
        iterations,
        converged,
        duality_gap,
        control_energy: energy,
        tau_effective: prep.tau_eff,
        history,
        region_mask: e.mask.clone(),
    }
}

/// Drives `u0` to zero at `T` with a control supported in the region.
pub fn null_control(p: &ControlProblem) -> Result<ControlResult> {
    if p.target
        .as_ref()
        .is_some_and(|t| t.iter().any(|&v| v != 0.0))
    {
        return Err(invalid(
            "null control expects a vanishing target; use steering_control",
        ));
    }
    solve(p)
}

/// Drives `u0` to the free endpoint `S(T) u_T` by null-controlling `u0 - u_T`.
pub fn steering_control(p: &ControlProblem) -> Result<ControlResult> {
    if p.target.is_none() {
        return Err(invalid("steering needs a target state"));
    }
    solve(p)
}

fn solve(p: &ControlProblem) -> Result<ControlResult> {
    let prep = prepare(p)?;
    let e = &prep.engine;
    let g = &p.grid;
    let n = g.len();
    let op = |v: &[f64]| {
        let mut out = e.lambda(v);
        axpy(prep.tau_eff, v, &mut out);
        out
    };
    let tol = p.settings.tol;
    let mut x = vec![0.0; n];
    let mut r: Vec<f64> = prep.free_end.iter().map(|v| -v).collect();
    let defect = |r: &[f64], x: &[f64]| {
        let d: Vec<f64> = r.iter().zip(x).map(|(a, b)| a + prep.tau_eff * b).collect();
        g.norm(&d) / prep.scale
    };
    let mut history = vec![defect(&r, &x)];
    if history[0] <= tol || g.norm(&r) == 0.0 {
        return Ok(finish(p, &prep, &x, 0, true, history));
    }
    let mut ar = op(&r);
    let mut pdir = r.clone();
    let mut ap = ar.clone();
    let mut rar = g.dot(&r, &ar);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < p.settings.max_iterations {
        let app = g.dot(&ap, &ap);
        if rar < -1e-12 * g.norm(&r) * g.norm(&ar) {
            return Err(Error::NumericalBreakdown(format!(
                "negative curvature {rar:e} at iteration {iterations} (defect {:e})",
                history.last().copied().unwrap_or(f64::NAN)
            )));
        }
        if app == 0.0 || rar == 0.0 {
            converged = history.last().is_some_and(|&d| d <= tol);
            break;
        }
        let alpha = rar / app;
        axpy(alpha, &pdir, &mut x);
        axpy(-alpha, &ap, &mut r);
        iterations += 1;
        let d = defect(&r, &x);
        history.push(d);
        if d <= tol {
            converged = true;
            break;
        }
        ar = op(&r);
        let next = g.dot(&r, &ar);
        let beta = next / rar;
        rar = next;
        for i in 0..n {
            pdir[i] = r[i] + beta * pdir[i];
            ap[i] = ar[i] + beta * ap[i];
        }
    }
    Ok(finish(p, &prep, &x, iterations, converged, history))
}

/// Direct solve of the same regularized dual system with a dense `Lambda`.
pub fn dense_control(p: &ControlProblem) -> Result<ControlResult> {
    let prep = prepare(p)?;
    let n = p.grid.len();
    let lam = prep.engine.dense_lambda();
    let sym = 0.5 * (&lam + lam.transpose()) + DMatrix::identity(n, n) * prep.tau_eff;
    let rhs = DVector::from_iterator(n, prep.free_end.iter().map(|v| -v));
    let x = match sym.clone().cholesky() {
        Some(c) => c.solve(&rhs),
        None => sym
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::NumericalBreakdown("singular dual system".into()))?,
    };
    Ok(finish(p, &prep, x.as_slice(), 0, true, Vec::new()))
}

/// Relative space-time `L^2` distance between two control histories.
pub fn control_distance(grid: &Grid, a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (fa, fb) in a.iter().zip(b) {
        let d: Vec<f64> = fa.iter().zip(fb).map(|(x, y)| x - y).collect();
        num += grid.dot(&d, &d);
        den += grid.dot(fb, fb);
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

//! Sources with compact time support and the cutoff trajectory between two free motions.

use serde::Serialize;

use super::{ControlProblem, ControlResult, HumSettings};
use crate::error::{invalid, Result};
use crate::evolution::{evolve, Propagator, SourceTerm, TimeScheme, Trajectory, CONTROL_SCHEME};
use crate::grid::{Grid, StateVector};
use crate::operator::{build_operator, OperatorKind};

/// Time cutoff equal to 1 up to `eps_prime` and 0 from `T - eps_prime` on,
/// joined by the degree-9 smooth step, which is `C^4` at both joints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffFunction {
    eps_prime: f64,
    horizon: f64,
}

impl CutoffFunction {
    pub fn new(eps_prime: f64, horizon: f64) -> Result<Self> {
        if !(eps_prime > 0.0 && eps_prime < 0.5 * horizon) {
            return Err(invalid(format!(
                "transition start {eps_prime} must lie in (0, T/2) for T = {horizon}"
            )));
        }
        Ok(Self { eps_prime, horizon })
    }

    pub fn eps_prime(&self) -> f64 {
        self.eps_prime
    }

    fn width(&self) -> f64 {
        self.horizon - 2.0 * self.eps_prime
    }

    fn progress(&self, t: f64) -> f64 {
        ((t - self.eps_prime) / self.width()).clamp(0.0, 1.0)
    }

    pub fn value(&self, t: f64) -> f64 {
        if t >= self.horizon - self.eps_prime {
            return 0.0;
        }
        let s = self.progress(t);
        let p =
            s.powi(5) * (126.0 - 420.0 * s + 540.0 * s * s - 315.0 * s.powi(3) + 70.0 * s.powi(4));
        1.0 - p
    }

    /// Analytic time derivative.
    pub fn derivative(&self, t: f64) -> f64 {
        let s = self.progress(t);
        -630.0 * s.powi(4) * (1.0 - s).powi(4) / self.width()
    }
}

fn mesh_index(t: f64, dt: f64, steps: usize, what: &str) -> Result<usize> {
    let k = (t / dt).round();
    if (k * dt - t).abs() > 1e-9 * dt.max(t.abs()) || k < 0.0 || k as usize > steps {
        return Err(invalid(format!(
            "{what} = {t} is not a point of the time mesh with step {dt}"
        )));
    }
    Ok(k as usize)
}

#[derive(Debug, Clone, Serialize)]
pub struct CompactSupportReport {
    /// Indices of `t1 - eps`, `t2` and `t2 + eps` on the time mesh.
    pub window: [usize; 3],
    /// Largest `|v|` on `[0, t1 - eps]`.
    pub before_max: f64,
    /// `|v(t2 + eps)| / |v(t2)|`, zero when `v(t2)` vanishes.
    pub after_ratio: f64,
    /// `|v(T)|`.
    pub terminal_norm: f64,
    /// `|v|_{L^2 L^2} / |f|_{L^2 L^2}`.
    pub constant: Option<f64>,
    pub control: ControlResult,
    /// Total source on each interval, the given one plus the control.
    #[serde(skip)]
    pub sources: Vec<Vec<f64>>,
}

/// Solution of `v_t = A v + f` that vanishes before `t1 - eps` and, up to the
/// control tolerance, after `t2 + eps`, where `[t1, t2]` is the support of `f`.
///
/// The state is forced from zero on `[t1 - eps, t2]` and brought back to rest
/// on `[t2, t2 + eps]` by an internal control on `region`. The tolerance in
/// `settings` is relative to `|v(t2)|`.
pub fn compact_support_source_solution(
    f: &SourceTerm,
    eps: f64,
    region: (f64, f64),
    grid: &Grid,
    horizon: f64,
    nt: usize,
    settings: HumSettings,
) -> Result<(Trajectory, CompactSupportReport)> {
    let (t1, t2) = f.support();
    if !(eps > 0.0 && t1 - eps > 0.0 && t2 + eps < horizon && t1 <= t2) {
        return Err(invalid(format!(
            "need 0 < t1 - eps and t2 + eps < T, got [{t1}, {t2}], eps {eps}, T {horizon}"
        )));
    }
    let dt = horizon / nt as f64;
    let k1 = mesh_index(t1 - eps, dt, nt, "t1 - eps")?;
    let k2 = mesh_index(t2, dt, nt, "t2")?;
    let k3 = mesh_index(t2 + eps, dt, nt, "t2 + eps")?;
    let n = grid.len();
    let op = build_operator(grid, OperatorKind::Forward)?;
    let prop = Propagator::new(&op, dt, nt, TimeScheme::CrankNicolson)?;

    let mut states = vec![vec![0.0; n]; nt + 1];
    let mut sources = vec![vec![0.0; n]; nt];
    for k in k1..k2 {
        let src = f.at((k as f64 + 0.5) * dt, grid);
        if let Some(s) = &src {
            grid.check_len(s.len())?;
            sources[k] = s.clone();
        }
        states[k + 1] = prop.step(k, &states[k], src.as_deref());
    }
    let start_norm = grid.norm(&states[k2]);
    let scale = start_norm.max(1.0);
    let mut window_settings = settings;
    window_settings.tol = settings.tol * start_norm / scale;
    let problem = ControlProblem {
        grid: *grid,
        horizon: (k3 - k2) as f64 * dt,
        steps: k3 - k2,
        region,
        initial: states[k2].clone(),
        target: None,
        settings: window_settings,
        scheme: CONTROL_SCHEME,
    };
    let control = super::null_control(&problem)?;
    for (j, s) in control.states.iter().enumerate() {
        states[k2 + j] = s.clone();
    }
    for (j, c) in control.controls.iter().enumerate() {
        sources[k2 + j] = c.clone();
    }
    for k in k3..nt {
        states[k + 1] = prop.step(k, &states[k], None);
    }

    let before_max = states[..=k1]
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let after_ratio = if start_norm > 0.0 {
        grid.norm(&states[k3]) / start_norm
    } else {
        0.0
    };
    let traj = Trajectory::new(
        *grid,
        0.0,
        dt,
        format!("crank-nicolson/{}", CONTROL_SCHEME.tag()),
        states,
    )?;
    let v_norm = space_time_norm(&traj);
    let f_norm = (0..nt)
        .filter_map(|k| f.at((k as f64 + 0.5) * dt, grid))
        .map(|s| dt * grid.dot(&s, &s))
        .sum::<f64>()
        .sqrt();
    let report = CompactSupportReport {
        window: [k1, k2, k3],
        before_max,
        after_ratio,
        terminal_norm: grid.norm(traj.last()),
        constant: (f_norm > 0.0).then(|| v_norm / f_norm),
        control,
        sources,
    };
    Ok((traj, report))
}

/// Trapezoid in time of `|u|^2`, square-rooted.
pub(crate) fn space_time_norm(traj: &Trajectory) -> f64 {
    let last = traj.len() - 1;
    traj.norms()
        .iter()
        .enumerate()
        .map(|(k, v)| if k == 0 || k == last { 0.5 } else { 1.0 } * traj.dt() * v * v)
        .sum::<f64>()
        .sqrt()
}

/// Inputs of the cutoff construction besides the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffSettings {
    pub horizon: f64,
    pub steps: usize,
    pub eps: f64,
    pub eps_prime: f64,
    pub region: (f64, f64),
    pub hum: HumSettings,
}

impl CutoffSettings {
    /// `eps_prime = (eps + T / 2) / 2`.
    pub fn with_default_transition(
        horizon: f64,
        steps: usize,
        eps: f64,
        region: (f64, f64),
    ) -> Self {
        Self {
            horizon,
            steps,
            eps,
            eps_prime: 0.5 * (eps + 0.5 * horizon),
            region,
            hum: HumSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffReport {
    /// `|u(0) - u0|`, exactly zero by construction.
    pub initial_defect: f64,
    /// `|u(T) - S(T) u_T| / |u_T|`, or the absolute defect when `u_T = 0`.
    pub terminal_defect: f64,
    /// Largest `|u(t) - S(t) u0|` over mesh times `t <= eps_prime`.
    pub early_deviation: f64,
    /// Largest `|u(t) - S(t) u_T|` over mesh times `t >= T - eps_prime + eps`.
    pub late_deviation: f64,
    /// `|phi' (u2 - u1)|_{L^2 L^2}`.
    pub source_norm: f64,
    /// Corrector report; `None` when the source vanishes identically.
    pub corrector: Option<CompactSupportReport>,
}

/// `u = phi u1 + (1 - phi) u2 + w` with `u1 = S(t) u0`, `u2 = S(t) u_T` and a
/// corrector `w` absorbing `phi' (u2 - u1)` that vanishes near both ends.
pub fn cutoff_trajectory(
    u0: &StateVector,
    target: &StateVector,
    settings: &CutoffSettings,
) -> Result<(Trajectory, CutoffReport)> {
    if target.grid() != u0.grid() {
        return Err(crate::error::Error::GridMismatch(
            "data and target live on different grids".into(),
        ));
    }
    let op = build_operator(u0.grid(), OperatorKind::Forward)?;
    let u2 = evolve(&op, target, 0.0, settings.horizon, settings.steps)?;
    cutoff_with_branch(u0, &u2, grid_norm(target), settings)
}

fn grid_norm(u: &StateVector) -> f64 {
    u.grid().norm(u.values())
}

/// Cutoff combination with a precomputed second branch `u2` on the same mesh.
/// The terminal defect is `|u(T) - u2(T)|` divided by `reference` when positive.
pub(crate) fn cutoff_with_branch(
    u0: &StateVector,
    u2: &Trajectory,
    reference: f64,
    settings: &CutoffSettings,
) -> Result<(Trajectory, CutoffReport)> {
    let grid = *u0.grid();
    let CutoffSettings {
        horizon,
        steps: nt,
        eps,
        eps_prime,
        region,
        hum,
    } = *settings;
    if !(eps > 0.0 && eps < eps_prime) {
        return Err(invalid(format!(
            "need 0 < eps < eps_prime, got {eps} and {eps_prime}"
        )));
    }
    if u2.grid() != &grid || u2.len() != nt + 1 {
        return Err(crate::error::Error::GridMismatch(
            "second branch does not match the mesh".into(),
        ));
    }
    let cut = CutoffFunction::new(eps_prime, horizon)?;
    let op = build_operator(&grid, OperatorKind::Forward)?;
    let u1 = evolve(&op, u0, 0.0, horizon, nt)?;
    let dt = u1.dt();
    let n = grid.len();

    let mut values = Vec::with_capacity(nt);
    let mut any = false;
    for k in 0..nt {
        let d = cut.derivative((k as f64 + 0.5) * dt);
        if d == 0.0 {
            values.push(None);
            continue;
        }
        let (a, b) = (u1.values(k), u1.values(k + 1));
        let (c, e) = (u2.values(k), u2.values(k + 1));
        let v: Vec<f64> = (0..n)
            .map(|i| d * 0.5 * ((c[i] + e[i]) - (a[i] + b[i])))
            .collect();
        any |= v.iter().any(|&x| x != 0.0);
        values.push(Some(v));
    }
    let source = SourceTerm::Sampled {
        t0: 0.0,
        dt,
        support: (eps_prime, horizon - eps_prime),
        values,
    };
    let source_norm = (0..nt)
        .filter_map(|k| source.at((k as f64 + 0.5) * dt, &grid))
        .map(|s| dt * grid.dot(&s, &s))
        .sum::<f64>()
        .sqrt();

    let (w, corrector) = if any {
        let (w, rep) =
            compact_support_source_solution(&source, eps, region, &grid, horizon, nt, hum)?;
        (w.states().to_vec(), Some(rep))
    } else {
        (vec![vec![0.0; n]; nt + 1], None)
    };

    let mut states = Vec::with_capacity(nt + 1);
    for k in 0..=nt {
        let phi = cut.value(k as f64 * dt);
        let (a, b) = (u1.values(k), u2.values(k));
        states.push(
            (0..n)
                .map(|i| phi * a[i] + (1.0 - phi) * b[i] + w[k][i])
                .collect::<Vec<f64>>(),
        );
    }
    let diff = |x: &[f64], y: &[f64]| {
        grid.norm(&x.iter().zip(y).map(|(p, q)| p - q).collect::<Vec<f64>>())
    };
    let initial_defect = diff(&states[0], u0.values());
    let end_gap = diff(&states[nt], u2.last());
    let terminal_defect = if reference > 0.0 {
        end_gap / reference
    } else {
        end_gap
    };
    let early_deviation = (0..=nt)
        .filter(|&k| k as f64 * dt <= eps_prime + 1e-12)
        .map(|k| diff(&states[k], u1.values(k)))
        .fold(0.0, f64::max);
    let late_deviation = (0..=nt)
        .filter(|&k| k as f64 * dt >= horizon - eps_prime + eps - 1e-12)
        .map(|k| diff(&states[k], u2.values(k)))
        .fold(0.0, f64::max);
    let traj = Trajectory::new(grid, 0.0, dt, "cutoff".into(), states)?;
    Ok((
        traj,
        CutoffReport {
            initial_defect,
            terminal_defect,
            early_deviation,
            late_deviation,
            source_norm,
            corrector,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cutoff_profile_is_flat_at_the_joints() {
        let c = CutoffFunction::new(0.6, 2.0).unwrap();
        assert_eq!(c.value(0.3), 1.0);
        assert_eq!(c.value(0.6), 1.0);
        assert_eq!(c.value(1.4), 0.0);
        assert_eq!(c.derivative(0.5), 0.0);
        assert!((c.value(1.0) - 0.5).abs() < 1e-14);
        let e = 1e-6;
        for t in [0.7, 1.0, 1.3] {
            let fd = (c.value(t + e) - c.value(t - e)) / (2.0 * e);
            assert!((fd - c.derivative(t)).abs() < 1e-7);
        }
        assert!(CutoffFunction::new(1.0, 2.0).is_err());
    }

    fn setup(n: usize) -> (Grid, CutoffSettings) {
        let g = Grid::symmetric(1.0, n).unwrap();
        (
            g,
            CutoffSettings {
                horizon: 2.0,
                steps: 200,
                eps: 0.25,
                eps_prime: 0.6,
                region: (-0.5, 0.5),
                hum: HumSettings::default(),
            },
        )
    }

    #[test]
    fn zero_source_gives_zero_solution() {
        let g = Grid::symmetric(1.0, 16).unwrap();
        let f = SourceTerm::Sampled {
            t0: 0.0,
            dt: 0.01,
            support: (0.5, 1.0),
            values: Vec::new(),
        };
        let (traj, rep) = compact_support_source_solution(
            &f,
            0.2,
            (-0.5, 0.5),
            &g,
            2.0,
            200,
            HumSettings::default(),
        )
        .unwrap();
        assert!(traj.states().iter().flatten().all(|&v| v == 0.0));
        assert_eq!(rep.constant, None);
    }

    #[test]
    fn bump_source_is_brought_to_rest() {
        let g = Grid::symmetric(1.0, 32).unwrap();
        let f = SourceTerm::separable(
            (0.5, 1.0),
            |t| (PI * (t - 0.5) / 0.5).sin().powi(2),
            |x| (1.0 - x * x) * (1.0 + x),
        );
        let hum = HumSettings {
            tau: 1e-10,
            tol: 1e-8,
            max_iterations: 500,
        };
        let (traj, rep) =
            compact_support_source_solution(&f, 0.25, (-0.5, 0.5), &g, 2.0, 200, hum).unwrap();
        assert_eq!(rep.before_max, 0.0);
        assert!(rep.after_ratio <= 1e-6, "{}", rep.after_ratio);
        assert_eq!(rep.control.support_violation(), 0.0);
        assert!(traj.norms()[rep.window[1]] > 0.0);
        assert!(compact_support_source_solution(&f, 0.6, (-0.5, 0.5), &g, 2.0, 200, hum).is_err());
    }

    #[test]
    fn trajectory_joins_two_free_motions() {
        let (g, s) = setup(32);
        let m1 = g.sample(|x| (PI * (x + 1.0) / 2.0).sin());
        let m2 = g.sample(|x| (PI * (x + 1.0)).sin());
        let u0 = StateVector::new(
            g,
            m1.values()
                .iter()
                .zip(m2.values())
                .map(|(a, b)| a + 0.3 * b)
                .collect(),
        )
        .unwrap();
        let ut = StateVector::new(
            g,
            m1.values()
                .iter()
                .zip(m2.values())
                .map(|(a, b)| b - 0.3 * a)
                .collect(),
        )
        .unwrap();
        let (traj, rep) = cutoff_trajectory(&u0, &ut, &s).unwrap();
        assert_eq!(traj.values(0), u0.values());
        assert_eq!(rep.initial_defect, 0.0);
        assert_eq!(rep.early_deviation, 0.0);
        assert!(rep.terminal_defect <= 1e-4, "{}", rep.terminal_defect);
    }

    #[test]
    fn equal_data_need_no_corrector() {
        let (g, s) = setup(16);
        let u0 = g.sample(|x| (1.0 - x * x) * x.cos());
        let (traj, rep) = cutoff_trajectory(&u0, &u0, &s).unwrap();
        assert!(rep.source_norm <= 1e-8 && rep.corrector.is_none());
        let free = evolve(
            &build_operator(&g, OperatorKind::Forward).unwrap(),
            &u0,
            0.0,
            2.0,
            200,
        )
        .unwrap();
        for k in 0..traj.len() {
            let d: f64 = traj
                .values(k)
                .iter()
                .zip(free.values(k))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(d <= 1e-14);
        }
        let z = StateVector::zeros(g);
        let (zt, _) = cutoff_trajectory(&z, &z, &s).unwrap();
        assert!(zt.states().iter().flatten().all(|&v| v == 0.0));
    }
}

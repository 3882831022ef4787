//! Finite-volume evolution of `u_t + f(u)_x − εu_xx = v_x`, `v − v_xx = g(u)_x`
//! on a bounded interval, used to check fronts against the travelling-wave solver.

use crate::error::{Error, Result};
use crate::linalg::solve_tridiagonal;
use crate::model::{rankine_hugoniot_speed, WaveProblem};
use crate::par::{self, Exec};
use serde::Serialize;

pub const MIN_CELLS: usize = 256;
pub const CFL: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::InvalidInput(format!("bad interval [{x_min}, {x_max}]")));
        }
        if n_cells < MIN_CELLS {
            return Err(Error::InvalidInput(format!("need at least {MIN_CELLS} cells, got {n_cells}")));
        }
        Ok(Grid1D { x_min, x_max, n_cells })
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_cells as f64
    }

    /// Cell centre.
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    pub fn centres(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.x(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdeState {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Spatial reconstruction inside the Rusanov flux.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reconstruction {
    /// Cell averages, forward Euler in time.
    Constant,
    /// Minmod-limited slopes, two-stage SSP Runge–Kutta in time.
    Minmod,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeSolver {
    pub problem: WaveProblem,
    pub epsilon: f64,
    pub grid: Grid1D,
    pub reconstruction: Reconstruction,
    pub exec: Exec,
}

impl PdeSolver {
    pub fn new(problem: WaveProblem, epsilon: f64, grid: Grid1D) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(PdeSolver { problem, epsilon, grid, reconstruction: Reconstruction::Constant, exec: Exec::default() })
    }

    fn ghost_u(&self, u: &[f64], i: isize) -> f64 {
        if i < 0 {
            self.problem.u_minus
        } else if i as usize >= u.len() {
            self.problem.u_plus
        } else {
            u[i as usize]
        }
    }

    /// `(I − D_xx) v = D_x g(u)` with `v = 0` outside the grid.
    pub fn elliptic_solve(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let dx = self.grid.dx();
        let m = &self.problem.model;
        let k = 1.0 / (dx * dx);
        let rhs: Vec<f64> = (0..n as isize)
            .map(|i| (m.g(self.ghost_u(u, i + 1)) - m.g(self.ghost_u(u, i - 1))) / (2.0 * dx))
            .collect();
        let lower = vec![-k; n];
        let upper = vec![-k; n];
        let diag = vec![1.0 + 2.0 * k; n];
        solve_tridiagonal(&lower, &diag, &upper, &rhs)
    }

    /// Max-norm residual of the elliptic equation for the pair `(u, v)`.
    pub fn elliptic_residual(&self, u: &[f64], v: &[f64]) -> f64 {
        let dx = self.grid.dx();
        let m = &self.problem.model;
        let vv = |i: isize| if i < 0 || i as usize >= v.len() { 0.0 } else { v[i as usize] };
        (0..u.len() as isize)
            .map(|i| {
                let lhs = vv(i) - (vv(i + 1) - 2.0 * vv(i) + vv(i - 1)) / (dx * dx);
                let rhs = (m.g(self.ghost_u(u, i + 1)) - m.g(self.ghost_u(u, i - 1))) / (2.0 * dx);
                (lhs - rhs).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn initial_state(&self, u: Vec<f64>) -> Result<PdeState> {
        if u.len() != self.grid.n_cells || u.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("initial data must be finite with one value per cell".into()));
        }
        let v = self.elliptic_solve(&u);
        Ok(PdeState { t: 0.0, u, v })
    }

    /// Samples `profile` at the cell centres.
    pub fn state_from_profile(&self, profile: impl Fn(f64) -> f64) -> Result<PdeState> {
        self.initial_state(self.grid.centres().iter().map(|&x| profile(x)).collect())
    }

    pub fn max_dt(&self, u: &[f64]) -> f64 {
        let m = &self.problem.model;
        let speed = u
            .iter()
            .chain([self.problem.u_minus, self.problem.u_plus].iter())
            .map(|&x| m.df(x).abs())
            .fold(0.0, f64::max);
        let dx = self.grid.dx();
        let hyperbolic = if speed > 0.0 { dx / speed } else { f64::INFINITY };
        CFL * hyperbolic.min(dx * dx / (2.0 * self.epsilon))
    }

    /// Total flux through each face `i − ½`, `i = 0..=n`.
    pub fn face_fluxes(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let n = u.len();
        let dx = self.grid.dx();
        let m = &self.problem.model;
        let eps = self.epsilon;
        let uu = |i: isize| self.ghost_u(u, i);
        let vv = |i: isize| if i < 0 || i as usize >= n { 0.0 } else { v[i as usize] };
        let minmod = |a: f64, b: f64| if a * b <= 0.0 { 0.0 } else if a.abs() < b.abs() { a } else { b };
        let slope = |i: isize| match self.reconstruction {
            Reconstruction::Constant => 0.0,
            Reconstruction::Minmod => minmod(uu(i) - uu(i - 1), uu(i + 1) - uu(i)),
        };
        par::map_range(self.exec, n + 1, |k| {
            let i = k as isize;
            let ul = uu(i - 1) + 0.5 * slope(i - 1);
            let ur = uu(i) - 0.5 * slope(i);
            let a = m.df(ul).abs().max(m.df(ur).abs());
            let convective = 0.5 * (m.f(ul) + m.f(ur)) - 0.5 * a * (ur - ul);
            let viscous = eps * (uu(i) - uu(i - 1)) / dx;
            let coupling = 0.5 * (vv(i - 1) + vv(i));
            convective - viscous - coupling
        })
    }

    fn euler(&self, u: &[f64], v: &[f64], dt: f64) -> Vec<f64> {
        let flux = self.face_fluxes(u, v);
        let r = dt / self.grid.dx();
        let mut out = vec![0.0; u.len()];
        par::fill(self.exec, &mut out, |i| u[i] - r * (flux[i + 1] - flux[i]));
        out
    }

    /// One explicit step followed by the elliptic solve.
    pub fn step(&self, state: &PdeState, dt: f64) -> Result<PdeState> {
        let bound = self.max_dt(&state.u);
        if !(dt > 0.0 && dt <= bound * (1.0 + 1e-12)) {
            return Err(Error::CflViolated { dt, bound });
        }
        let u = match self.reconstruction {
            Reconstruction::Constant => self.euler(&state.u, &state.v, dt),
            Reconstruction::Minmod => {
                let u1 = self.euler(&state.u, &state.v, dt);
                let v1 = self.elliptic_solve(&u1);
                let u2 = self.euler(&u1, &v1, dt);
                state.u.iter().zip(&u2).map(|(a, b)| 0.5 * (a + b)).collect()
            }
        };
        let v = self.elliptic_solve(&u);
        Ok(PdeState { t: state.t + dt, u, v })
    }

    /// Evolves to `t_end`, keeping a snapshot every `interval` time units
    /// (the initial state included).
    pub fn evolve(&self, initial: PdeState, t_end: f64, interval: f64) -> Result<Vec<PdeState>> {
        if !(interval > 0.0) || !(t_end >= initial.t) {
            return Err(Error::InvalidInput("need t_end >= t and a positive snapshot interval".into()));
        }
        let mut next = initial.t + interval;
        let mut state = initial;
        let mut out = vec![state.clone()];
        while state.t < t_end - 1e-12 {
            let target = next.min(t_end);
            let dt = self.max_dt(&state.u).min(target - state.t);
            state = self.step(&state, dt)?;
            if state.t >= target - 1e-12 {
                state.t = target;
                out.push(state.clone());
                next += interval;
            }
            if !self.front_inside(&state.u) {
                return Err(Error::FrontLeftDomain);
            }
        }
        log::debug!("evolved to t = {} with {} snapshots", state.t, out.len());
        Ok(out)
    }

    fn front_inside(&self, u: &[f64]) -> bool {
        let n = u.len();
        let margin = (n / 20).max(2);
        let mid = 0.5 * (self.problem.u_minus + self.problem.u_plus);
        match crossing_index(u, mid) {
            Some(k) => k >= margin && k + margin < n,
            None => false,
        }
    }

    pub fn rh_speed(&self) -> f64 {
        rankine_hugoniot_speed(&self.problem.model, self.problem.u_minus, self.problem.u_plus).unwrap_or(f64::NAN)
    }
}

fn crossing_index(u: &[f64], level: f64) -> Option<usize> {
    u.windows(2).position(|w| (w[0] - level) * (w[1] - level) <= 0.0 && w[0] != w[1])
}

/// Position where `u` first crosses `level`, interpolated linearly between cells.
pub fn front_position(grid: &Grid1D, u: &[f64], level: f64) -> Option<f64> {
    let k = crossing_index(u, level)?;
    let s = (level - u[k]) / (u[k + 1] - u[k]);
    Some(grid.x(k) + s * grid.dx())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontReport {
    pub speed_estimate: f64,
    pub rh_speed: f64,
    pub positions: Vec<(f64, f64)>,
    /// One entry per snapshot when a reference profile was given.
    pub shape_error_series: Vec<f64>,
}

impl FrontReport {
    pub fn shape_error(&self) -> f64 {
        self.shape_error_series.iter().copied().fold(0.0, f64::max)
    }
}

/// Front speed by least squares over the snapshots and, given a reference
/// profile, the sup-norm shape error minimised over shifts.
pub fn measure_front(
    solver: &PdeSolver,
    snapshots: &[PdeState],
    reference: Option<&(dyn Fn(f64) -> f64 + Sync)>,
) -> Result<FrontReport> {
    if snapshots.len() < 10 {
        return Err(Error::InvalidInput(format!("need at least 10 snapshots, got {}", snapshots.len())));
    }
    let p = &solver.problem;
    let mid = 0.5 * (p.u_minus + p.u_plus);
    let grid = &solver.grid;
    let positions = snapshots
        .iter()
        .map(|s| front_position(grid, &s.u, mid).map(|x| (s.t, x)).ok_or(Error::FrontLeftDomain))
        .collect::<Result<Vec<_>>>()?;
    let n = positions.len() as f64;
    let tm = positions.iter().map(|p| p.0).sum::<f64>() / n;
    let xm = positions.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = positions.iter().map(|p| (p.0 - tm) * (p.1 - xm)).sum();
    let sxx: f64 = positions.iter().map(|p| (p.0 - tm) * (p.0 - tm)).sum();
    let speed_estimate = sxy / sxx;
    let shape_error_series = match reference {
        None => Vec::new(),
        Some(r) => {
            let x_ref = crossing_of(r, mid, grid.x_min, grid.x_max);
            snapshots
                .iter()
                .zip(&positions)
                .map(|(s, &(_, x))| best_shift_error(solver, &s.u, r, x - x_ref))
                .collect()
        }
    };
    Ok(FrontReport { speed_estimate, rh_speed: solver.rh_speed(), positions, shape_error_series })
}

fn crossing_of(r: &dyn Fn(f64) -> f64, level: f64, lo: f64, hi: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    let fa = r(a) - level;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (r(m) - level) * fa > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn best_shift_error(solver: &PdeSolver, u: &[f64], r: &(dyn Fn(f64) -> f64 + Sync), guess: f64) -> f64 {
    let grid = &solver.grid;
    let err = |s: f64| par::max_range(solver.exec, u.len(), |i| (u[i] - r(grid.x(i) - s)).abs());
    // Golden-section search over a few cells around the crossing-based shift.
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (guess - 4.0 * grid.dx(), guess + 4.0 * grid.dx());
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (err(c), err(d));
    for _ in 0..40 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = err(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = err(d);
        }
    }
    fc.min(fd).min(err(guess))
}

//! Hermite–Simpson (three-point Lobatto) collocation for autonomous 3-D
//! connecting-orbit problems, solved by damped Newton on a banded system.

use crate::error::{Error, Result};
use crate::linalg::BandMatrix;
use crate::par::{self, Exec};
use nalgebra::{Matrix3, Vector3};

/// Autonomous vector field `y' = f(y)` with its Jacobian.
pub trait Field3: Sync {
    fn eval(&self, y: &[f64; 3]) -> [f64; 3];
    fn jacobian(&self, y: &[f64; 3]) -> Matrix3<f64>;
}

/// `coeffs · y = rhs` at one end of the interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearCondition {
    pub coeffs: [f64; 3],
    pub rhs: f64,
}

/// `y[component](mesh[node]) = value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCondition {
    pub node: usize,
    pub component: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub exec: Exec,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { max_iter: 25, tol: 1e-9, exec: Exec::default() }
    }
}

pub struct Bvp<'a, F: Field3> {
    pub field: &'a F,
    pub mesh: &'a [f64],
    pub left: Vec<LinearCondition>,
    pub right: Vec<LinearCondition>,
    pub phase: PhaseCondition,
}

#[derive(Debug, Clone)]
pub struct BvpSolution {
    pub mesh: Vec<f64>,
    pub values: Vec<[f64; 3]>,
    pub slopes: Vec<[f64; 3]>,
    /// Max over cells of `|p'(x_m) − f(p(x_m))|` at the cell midpoints, and of
    /// the boundary/phase residuals.
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Nodes `x_p + L sinh(β s)/sinh(β)` for `s` uniform on `[−1, 1]`; `n` even so
/// `x_p` is node `n/2` and doubling `n` keeps every old node.
pub fn sinh_mesh(center: f64, half_length: f64, n: usize, beta: f64) -> Vec<f64> {
    assert!(n >= 2 && n % 2 == 0, "mesh size must be even");
    let half = n / 2;
    (0..=n)
        .map(|i| {
            if i == half {
                return center;
            }
            let s = (i as f64 - half as f64) / half as f64;
            let off = if beta < 1e-8 { half_length * s } else { half_length * (beta * s).sinh() / beta.sinh() };
            center + off
        })
        .collect()
}

/// Clustering strength giving a central spacing close to `h_center`.
pub fn sinh_beta(half_length: f64, n: usize, h_center: f64) -> f64 {
    let spacing = |b: f64| {
        let ds = 2.0 / n as f64;
        if b < 1e-8 {
            half_length * ds
        } else {
            half_length * b * ds / b.sinh()
        }
    };
    if spacing(0.0) <= h_center {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while spacing(hi) > h_center && hi < 700.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if spacing(mid) > h_center {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

struct CellEval {
    /// Scaled residual `R / h`.
    res: [f64; 3],
    /// Blocks of `∂(R/h)/∂y_i` and `∂(R/h)/∂y_{i+1}`.
    left: Matrix3<f64>,
    right: Matrix3<f64>,
}

fn cell<F: Field3>(field: &F, h: f64, ya: &[f64; 3], yb: &[f64; 3], with_jac: bool) -> CellEval {
    let fa = Vector3::from(field.eval(ya));
    let fb = Vector3::from(field.eval(yb));
    let (va, vb) = (Vector3::from(*ya), Vector3::from(*yb));
    let ym = 0.5 * (va + vb) + h / 8.0 * (fa - fb);
    let fm = Vector3::from(field.eval(&ym.into()));
    let res = (vb - va) / h - (fa + 4.0 * fm + fb) / 6.0;
    if !with_jac {
        return CellEval { res: res.into(), left: Matrix3::zeros(), right: Matrix3::zeros() };
    }
    let ja = field.jacobian(ya);
    let jb = field.jacobian(yb);
    let jm = field.jacobian(&ym.into());
    let id = Matrix3::identity();
    let dm_da = 0.5 * id + h / 8.0 * ja;
    let dm_db = 0.5 * id - h / 8.0 * jb;
    let left = -id / h - (ja + 4.0 * jm * dm_da) / 6.0;
    let right = id / h - (jb + 4.0 * jm * dm_db) / 6.0;
    CellEval { res: res.into(), left, right }
}

impl<F: Field3> Bvp<'_, F> {
    fn check(&self, n_nodes: usize) -> Result<()> {
        if self.left.len() + self.right.len() != 2 {
            return Err(Error::InvalidInput("boundary and phase conditions must total three".into()));
        }
        if self.mesh.len() < 3 || self.mesh.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("mesh must be strictly increasing with at least two cells".into()));
        }
        if n_nodes != self.mesh.len() || self.phase.node >= n_nodes || self.phase.component > 2 {
            return Err(Error::InvalidInput("initial guess or phase condition does not fit the mesh".into()));
        }
        Ok(())
    }

    fn residual(&self, y: &[[f64; 3]], exec: Exec) -> (Vec<CellEval>, Vec<f64>) {
        let cells = par::map_range(exec, self.mesh.len() - 1, |i| {
            cell(self.field, self.mesh[i + 1] - self.mesh[i], &y[i], &y[i + 1], true)
        });
        let n = y.len() - 1;
        let dot = |c: &LinearCondition, v: &[f64; 3]| c.coeffs[0] * v[0] + c.coeffs[1] * v[1] + c.coeffs[2] * v[2] - c.rhs;
        let mut extra: Vec<f64> = self.left.iter().map(|c| dot(c, &y[0])).collect();
        extra.push(y[self.phase.node][self.phase.component] - self.phase.value);
        extra.extend(self.right.iter().map(|c| dot(c, &y[n])));
        (cells, extra)
    }

    fn norm(cells: &[CellEval], extra: &[f64]) -> f64 {
        let c = cells.iter().flat_map(|c| c.res).fold(0.0, |m, r| f64::max(m, 1.5 * r.abs()));
        extra.iter().fold(c, |m, r| m.max(r.abs()))
    }

    /// Solves from `guess` (values at the mesh nodes).
    pub fn solve(&self, guess: Vec<[f64; 3]>, opts: &NewtonOptions) -> Result<BvpSolution> {
        self.check(guess.len())?;
        let n = self.mesh.len() - 1;
        let dim = 3 * (n + 1);
        let nl = self.left.len();
        let (kl, ku) = (nl + 3, (5 - nl.min(3)).max(2));
        let p = self.phase.node;
        // Row layout: left conditions, cells 0..p, phase row, cells p..n, right conditions.
        let cell_row = |i: usize| nl + 3 * i + usize::from(i >= p);
        let phase_row = nl + 3 * p;
        let right_row = nl + 3 * n + 1;

        let mut y = guess;
        let (mut cells, mut extra) = self.residual(&y, opts.exec);
        let mut norm = Self::norm(&cells, &extra);
        let mut iterations = 0;
        while norm >= opts.tol {
            if iterations == opts.max_iter {
                return Err(Error::NewtonDiverged { iterations, residual: norm });
            }
            iterations += 1;
            let mut a = BandMatrix::zeros(dim, kl, ku);
            let mut rhs = vec![0.0; dim];
            for (k, c) in self.left.iter().enumerate() {
                for j in 0..3 {
                    a.add(k, j, c.coeffs[j]);
                }
                rhs[k] = -extra[k];
            }
            a.add(phase_row, 3 * p + self.phase.component, 1.0);
            rhs[phase_row] = -extra[nl];
            for (k, c) in self.right.iter().enumerate() {
                for j in 0..3 {
                    a.add(right_row + k, 3 * n + j, c.coeffs[j]);
                }
                rhs[right_row + k] = -extra[nl + 1 + k];
            }
            for (i, c) in cells.iter().enumerate() {
                let r0 = cell_row(i);
                for r in 0..3 {
                    for j in 0..3 {
                        a.add(r0 + r, 3 * i + j, c.left[(r, j)]);
                        a.add(r0 + r, 3 * i + 3 + j, c.right[(r, j)]);
                    }
                    rhs[r0 + r] = -c.res[r];
                }
            }
            a.factor()?;
            a.solve(&mut rhs);
            // Damped update: halve until the residual decreases.
            let mut lambda = 1.0;
            loop {
                let trial: Vec<[f64; 3]> = y
                    .iter()
                    .enumerate()
                    .map(|(i, v)| [v[0] + lambda * rhs[3 * i], v[1] + lambda * rhs[3 * i + 1], v[2] + lambda * rhs[3 * i + 2]])
                    .collect();
                let (tc, te) = self.residual(&trial, opts.exec);
                let tn = Self::norm(&tc, &te);
                if tn.is_finite() && (tn < (1.0 - 1e-4 * lambda) * norm || tn < opts.tol) {
                    y = trial;
                    cells = tc;
                    extra = te;
                    norm = tn;
                    break;
                }
                lambda *= 0.5;
                if lambda < 1.0 / 1024.0 {
                    return Err(Error::NewtonDiverged { iterations, residual: norm });
                }
            }
            log::debug!("newton iteration {iterations}: residual {norm:e}, step {lambda}");
        }
        let slopes = y.iter().map(|v| self.field.eval(v)).collect();
        Ok(BvpSolution { mesh: self.mesh.to_vec(), values: y, slopes, residual_norm: norm, iterations })
    }
}

/// Cubic Hermite interpolation of nodal data at `x` (clamped to the mesh).
pub fn interpolate(mesh: &[f64], values: &[[f64; 3]], slopes: &[[f64; 3]], x: f64) -> [f64; 3] {
    let n = mesh.len();
    if x <= mesh[0] {
        return values[0];
    }
    if x >= mesh[n - 1] {
        return values[n - 1];
    }
    let i = mesh.partition_point(|&m| m <= x).clamp(1, n - 1);
    let (xa, xb) = (mesh[i - 1], mesh[i]);
    let h = xb - xa;
    let s = (x - xa) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    let mut out = [0.0; 3];
    for k in 0..3 {
        out[k] = h00 * values[i - 1][k] + h10 * h * slopes[i - 1][k] + h01 * values[i][k] + h11 * h * slopes[i][k];
    }
    out
}

//! Viscous profiles for ε > 0: the heteroclinic boundary-value problem of the
//! slow system `εu' = F(u, v)`, `v' = w − g(u)`, `w' = v`, and its continuation in ε.

pub mod bvp;
pub mod shooting;
pub mod singular;

use crate::error::{Error, Result};
use crate::model::{Branch, WaveProblem};
use crate::par::Exec;
use crate::spectral::fast_jacobian_spectrum;
use bvp::{interpolate, sinh_beta, sinh_mesh, Bvp, Field3, LinearCondition, NewtonOptions, PhaseCondition};
use nalgebra::Matrix3;
use serde::Serialize;
pub use singular::{assemble_singular_orbit, hausdorff, SingularOrbit};

pub const MIN_EPSILON: f64 = 1e-4;
pub const MAX_EPSILON: f64 = 1.0;
/// Endpoint tolerance for the truncated orbit.
pub const BOUNDARY_TOL: f64 = 1e-6;
const MAX_BISECTIONS: usize = 6;

/// `(u, v, w)' = (F(u, v)/ε, w − g(u), v)`.
#[derive(Debug, Clone, Copy)]
pub struct ProfileField {
    pub problem: WaveProblem,
    pub epsilon: f64,
}

impl Field3 for ProfileField {
    fn eval(&self, y: &[f64; 3]) -> [f64; 3] {
        let p = &self.problem;
        [p.fast_field(y[0], y[1]) / self.epsilon, y[2] - p.model.g(y[0]), y[1]]
    }

    fn jacobian(&self, y: &[f64; 3]) -> Matrix3<f64> {
        let p = &self.problem;
        let e = self.epsilon;
        Matrix3::new(p.dfc(y[0]) / e, -1.0 / e, 0.0, -p.model.dg(y[0]), 0.0, 1.0, 0.0, 1.0, 0.0)
    }
}

/// Left eigenvector of `a` for the simple eigenvalue `lambda`, unit length.
pub fn left_eigenvector(a: &Matrix3<f64>, lambda: f64) -> [f64; 3] {
    let m = a - Matrix3::identity() * lambda;
    // lᵀ(A − λI) = 0: l is orthogonal to every column.
    let cols = [m.column(0).into_owned(), m.column(1).into_owned(), m.column(2).into_owned()];
    let best = [(0, 1), (0, 2), (1, 2)]
        .iter()
        .map(|&(i, j)| cols[i].cross(&cols[j]))
        .max_by(|x, y| x.norm().total_cmp(&y.norm()))
        .expect("three pairs");
    let l = best / best.norm();
    [l[0], l[1], l[2]]
}

/// Projection conditions at both ends: the deviation from `u₋` has no component
/// along the stable direction, the deviation from `u₊` none along the unstable one.
pub fn projection_conditions(problem: &WaveProblem, epsilon: f64) -> Result<(LinearCondition, LinearCondition)> {
    let field = ProfileField { problem: *problem, epsilon };
    let make = |branch: Branch, positive: bool| -> Result<LinearCondition> {
        let p = problem.end_point(branch);
        let spec = fast_jacobian_spectrum(problem, p, epsilon);
        let lambda = spec.sole_real(positive).ok_or(Error::NotASaddle)? / epsilon;
        let l = left_eigenvector(&field.jacobian(&p), lambda);
        Ok(LinearCondition { coeffs: l, rhs: l[0] * p[0] + l[1] * p[1] + l[2] * p[2] })
    };
    Ok((make(Branch::Minus, false)?, make(Branch::Plus, true)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeteroOptions {
    /// Domain half-length; defaults to `max(40, 60ε)`.
    pub half_length: Option<f64>,
    /// Number of mesh cells (even).
    pub mesh_size: usize,
    /// Position of the phase point (centre of the domain).
    pub phase_x: f64,
    /// Mesh spacing at the phase point; defaults to `ε/4`.
    pub center_spacing: Option<f64>,
    pub newton: NewtonOptions,
}

impl Default for HeteroOptions {
    fn default() -> Self {
        HeteroOptions { half_length: None, mesh_size: 1600, phase_x: 0.0, center_spacing: None, newton: NewtonOptions::default() }
    }
}

impl HeteroOptions {
    pub fn half_length_for(&self, epsilon: f64) -> f64 {
        self.half_length.unwrap_or_else(|| (60.0 * epsilon).max(40.0))
    }

    pub fn mesh_for(&self, epsilon: f64) -> Vec<f64> {
        let l = self.half_length_for(epsilon);
        let beta = sinh_beta(l, self.mesh_size, self.center_spacing.unwrap_or(0.25 * epsilon));
        sinh_mesh(self.phase_x, l, self.mesh_size, beta)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HeteroclinicSolution {
    pub epsilon: f64,
    pub mesh: Vec<f64>,
    pub values: Vec<[f64; 3]>,
    #[serde(skip)]
    pub slopes: Vec<[f64; 3]>,
    pub residual_norm: f64,
    pub boundary_defect: f64,
    pub layer_width_80: f64,
    pub hausdorff_to_singular: Option<f64>,
    pub phase_x: f64,
    pub phase_value: f64,
    /// Layer end states `(u_ℓ, u_r)` whose middle 80% defines the width.
    pub layer_states: (f64, f64),
    pub iterations: usize,
}

/// Starting point for Newton.
pub enum InitialGuess<'a> {
    /// The singular orbit with its layer mollified to width ε.
    Singular(&'a SingularOrbit),
    /// A converged profile, typically at a nearby ε.
    Previous(&'a HeteroclinicSolution),
}

fn validate_epsilon(epsilon: f64) -> Result<()> {
    if !(MIN_EPSILON..=MAX_EPSILON).contains(&epsilon) {
        return Err(Error::InvalidInput(format!("epsilon must lie in [{MIN_EPSILON}, {MAX_EPSILON}], got {epsilon}")));
    }
    Ok(())
}

/// Solves the truncated heteroclinic problem on `[x_p − L, x_p + L]` with
/// `u(x_p) = (u_ℓ + u_r)/2`.
pub fn solve_heteroclinic(
    problem: &WaveProblem,
    epsilon: f64,
    opts: &HeteroOptions,
    guess: InitialGuess<'_>,
) -> Result<HeteroclinicSolution> {
    validate_epsilon(epsilon)?;
    problem.require_lax()?;
    if opts.mesh_size < 4 || opts.mesh_size % 2 != 0 {
        return Err(Error::InvalidInput(format!("mesh_size must be even and >= 4, got {}", opts.mesh_size)));
    }
    let mesh = opts.mesh_for(epsilon);
    let (states, values) = match guess {
        InitialGuess::Singular(orbit) => {
            let m = &orbit.matching;
            let v: Vec<[f64; 3]> = mesh.iter().map(|&x| orbit.mollified_at(x - opts.phase_x, epsilon)).collect();
            ((m.u_left, m.u_right), v)
        }
        InitialGuess::Previous(prev) => {
            let shift = prev.phase_x - opts.phase_x;
            let v = mesh.iter().map(|&x| interpolate(&prev.mesh, &prev.values, &prev.slopes, x + shift)).collect();
            (prev.layer_states, v)
        }
    };
    let phase_value = 0.5 * (states.0 + states.1);
    let field = ProfileField { problem: *problem, epsilon };
    let (left, right) = projection_conditions(problem, epsilon)?;
    let bvp = Bvp {
        field: &field,
        mesh: &mesh,
        left: vec![left],
        right: vec![right],
        phase: PhaseCondition { node: opts.mesh_size / 2, component: 0, value: phase_value },
    };
    let sol = bvp.solve(values, &opts.newton)?;
    let n = sol.values.len() - 1;
    let defect = singular::dist(&sol.values[0], &problem.end_point(Branch::Minus))
        .max(singular::dist(&sol.values[n], &problem.end_point(Branch::Plus)));
    if defect > BOUNDARY_TOL {
        return Err(Error::BoundaryDefectTooLarge(defect));
    }
    let mut out = HeteroclinicSolution {
        epsilon,
        mesh: sol.mesh,
        values: sol.values,
        slopes: sol.slopes,
        residual_norm: sol.residual_norm,
        boundary_defect: defect,
        layer_width_80: f64::NAN,
        hausdorff_to_singular: None,
        phase_x: opts.phase_x,
        phase_value,
        layer_states: states,
        iterations: sol.iterations,
    };
    let d = states.0 - states.1;
    out.layer_width_80 = out.crossing(states.1 + 0.1 * d) - out.crossing(states.1 + 0.9 * d);
    log::info!(
        "epsilon {epsilon}: residual {:e} after {} Newton steps, width_80 {}",
        out.residual_norm,
        out.iterations,
        out.layer_width_80
    );
    Ok(out)
}

/// The scalar diagnostics of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeteroDiagnostics {
    pub epsilon: f64,
    pub residual_norm: f64,
    pub boundary_defect: f64,
    pub layer_width_80: f64,
    pub hausdorff_to_singular: Option<f64>,
    pub iterations: usize,
}

impl HeteroclinicSolution {
    pub fn diagnostics(&self) -> HeteroDiagnostics {
        HeteroDiagnostics {
            epsilon: self.epsilon,
            residual_norm: self.residual_norm,
            boundary_defect: self.boundary_defect,
            layer_width_80: self.layer_width_80,
            hausdorff_to_singular: self.hausdorff_to_singular,
            iterations: self.iterations,
        }
    }

    pub fn at(&self, x: f64) -> [f64; 3] {
        interpolate(&self.mesh, &self.values, &self.slopes, x)
    }

    /// Position where the (decreasing) `u` crosses `level`.
    pub fn crossing(&self, level: f64) -> f64 {
        let k = self.values.partition_point(|v| v[0] > level);
        if k == 0 {
            return self.mesh[0];
        }
        if k >= self.values.len() {
            return self.mesh[self.mesh.len() - 1];
        }
        let (mut a, mut b) = (self.mesh[k - 1], self.mesh[k]);
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if self.at(m)[0] > level {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    pub fn u_strictly_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1][0] < w[0][0])
    }

    /// `v ≤ tol` everywhere with a single interior local minimum.
    pub fn v_single_well(&self, tol: f64) -> bool {
        if self.values.iter().any(|v| v[1] > tol) {
            return false;
        }
        let mut turns = 0;
        let mut descending = true;
        for w in self.values.windows(2) {
            let dv = w[1][1] - w[0][1];
            if descending && dv > 0.0 {
                descending = false;
                turns += 1;
            } else if !descending && dv < 0.0 {
                // Ignore sign flicker at rounding level in the flat tails.
                if dv.abs() > 1e-13 {
                    return false;
                }
            }
        }
        turns == 1
    }

    /// The profile as a polyline in `(u, v, w)` with chords at most `spacing`.
    pub fn trace(&self, spacing: f64) -> Vec<[f64; 3]> {
        let mut pts = vec![self.values[0]];
        for i in 0..self.values.len() - 1 {
            let chord = singular::dist(&self.values[i], &self.values[i + 1]);
            let pieces = ((chord / spacing).ceil() as usize).max(1);
            for k in 1..pieces {
                let x = self.mesh[i] + (self.mesh[i + 1] - self.mesh[i]) * k as f64 / pieces as f64;
                pts.push(self.at(x));
            }
            pts.push(self.values[i + 1]);
        }
        pts
    }

    pub fn hausdorff_to(&self, orbit: &SingularOrbit, exec: Exec) -> f64 {
        const SPACING: f64 = 1e-3;
        hausdorff(&self.trace(SPACING), &orbit.trace(SPACING), exec)
    }

    /// Sup over mesh nodes of the `(v, w)` distance to the singular orbit
    /// placed with its sub-shock at the phase point.
    pub fn sup_vw_distance(&self, orbit: &SingularOrbit) -> f64 {
        self.mesh
            .iter()
            .zip(&self.values)
            .map(|(&x, y)| {
                let s = orbit.outer_at(x - self.phase_x);
                (y[1] - s[1]).hypot(y[2] - s[2])
            })
            .fold(0.0, f64::max)
    }
}

/// Natural-parameter continuation down a descending list of ε values.
pub fn sweep_epsilon(
    problem: &WaveProblem,
    eps_list: &[f64],
    opts: &HeteroOptions,
    exec: Exec,
) -> Result<Vec<HeteroclinicSolution>> {
    if eps_list.is_empty() {
        return Err(Error::InvalidInput("eps_list is empty".into()));
    }
    for &e in eps_list {
        validate_epsilon(e)?;
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("eps_list must be strictly descending".into()));
    }
    let orbit = assemble_singular_orbit(problem, exec)?;
    let mut out: Vec<HeteroclinicSolution> = Vec::with_capacity(eps_list.len());
    for &target in eps_list {
        let mut sol = match out.last() {
            None => solve_heteroclinic(problem, target, opts, InitialGuess::Singular(&orbit))?,
            Some(prev) => continue_to(problem, prev, target, opts)?,
        };
        sol.hausdorff_to_singular = Some(sol.hausdorff_to(&orbit, exec));
        out.push(sol);
    }
    Ok(out)
}

fn continue_to(
    problem: &WaveProblem,
    prev: &HeteroclinicSolution,
    target: f64,
    opts: &HeteroOptions,
) -> Result<HeteroclinicSolution> {
    let mut base = prev.clone();
    let mut trial = target;
    let mut bisections = 0;
    loop {
        match solve_heteroclinic(problem, trial, opts, InitialGuess::Previous(&base)) {
            Ok(sol) if trial == target => return Ok(sol),
            Ok(sol) => {
                base = sol;
                trial = target;
            }
            Err(e) => {
                bisections += 1;
                log::info!("continuation step {} -> {trial} failed ({e}); bisecting", base.epsilon);
                if bisections > MAX_BISECTIONS {
                    return Err(Error::ContinuationStalled(target));
                }
                trial = 0.5 * (base.epsilon + trial);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn left_eigenvector_annihilates() {
        let p = WaveProblem::hamer(1.0, -1.0).unwrap();
        let f = ProfileField { problem: p, epsilon: 0.1 };
        let a = f.jacobian(&p.end_point(Branch::Plus));
        let spec = fast_jacobian_spectrum(&p, p.end_point(Branch::Plus), 0.1);
        let lam = spec.sole_real(true).unwrap() / 0.1;
        let l = nalgebra::Vector3::from(left_eigenvector(&a, lam));
        let r = a.transpose() * l - l * lam;
        assert!(r.norm() < 1e-12);
    }

    #[test]
    fn sweep_validation() {
        let p = WaveProblem::hamer(1.0, -1.0).unwrap();
        let o = HeteroOptions::default();
        assert!(matches!(sweep_epsilon(&p, &[1.5, 0.1], &o, Exec::Sequential), Err(Error::InvalidInput(_))));
        assert!(matches!(sweep_epsilon(&p, &[0.1, 0.2], &o, Exec::Sequential), Err(Error::InvalidInput(_))));
        assert!(matches!(sweep_epsilon(&p, &[], &o, Exec::Sequential), Err(Error::InvalidInput(_))));
    }
}

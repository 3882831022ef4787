//! Small shocks at ε = 1 for the Hamer model: the system in `X = (z, v, ũ)`,
//! its transcritical bifurcation at `δ = u₊ − u₋ = 0`, and the front profile.

use crate::error::{Error, Result};
use crate::hetero::bvp::{sinh_mesh, Bvp, Field3, LinearCondition, NewtonOptions, PhaseCondition};
use crate::hetero::{left_eigenvector, HeteroclinicSolution};
use crate::model::WaveProblem;
use crate::spectral::{matrix_spectrum, SpectralReport};
use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

/// Largest `|δ|` for which profiles are computed.
pub const MAX_DELTA: f64 = 0.3;
/// Central-difference step for the Sotomayor quantities.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallShockSystem {
    pub delta: f64,
    pub u_plus: f64,
}

impl SmallShockSystem {
    pub fn new(delta: f64, u_plus: f64) -> Result<Self> {
        if !delta.is_finite() || !u_plus.is_finite() || delta > 0.0 {
            return Err(Error::InvalidInput(format!("need finite delta <= 0 and u_plus, got {delta}, {u_plus}")));
        }
        Ok(SmallShockSystem { delta, u_plus })
    }

    /// The Hamer problem with its end states; other models are not covered.
    pub fn from_problem(problem: &WaveProblem) -> Result<Self> {
        if !problem.model.is_hamer() {
            return Err(Error::NotImplemented("small-shock analysis covers the Hamer model only"));
        }
        Self::new(problem.u_plus - problem.u_minus, problem.u_plus)
    }

    pub fn u_minus(&self) -> f64 {
        self.u_plus - self.delta
    }

    pub fn speed(&self) -> f64 {
        0.5 * (2.0 * self.u_plus - self.delta)
    }

    pub fn p1(&self) -> [f64; 3] {
        [0.0; 3]
    }

    pub fn p2(&self) -> [f64; 3] {
        [-self.delta, 0.0, -self.delta]
    }

    pub fn field(&self, x: &[f64; 3]) -> [f64; 3] {
        field(x, self.delta)
    }

    pub fn jacobian(&self, x: &[f64; 3]) -> Matrix3<f64> {
        Matrix3::new(0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, -1.0, x[2] + 0.5 * self.delta)
    }

    /// `(z, v, ũ) ↦ (u, v, w)` of the slow system at ε = 1.
    pub fn to_original(&self, x: &[f64; 3]) -> [f64; 3] {
        [x[2] + self.u_plus, x[1], x[0] + self.u_plus]
    }
}

fn field(x: &[f64; 3], delta: f64) -> [f64; 3] {
    let (z, v, u) = (x[0], x[1], x[2]);
    [v, z - u, 0.5 * u * u + 0.5 * u * delta - v]
}

impl Field3 for SmallShockSystem {
    fn eval(&self, y: &[f64; 3]) -> [f64; 3] {
        self.field(y)
    }

    fn jacobian(&self, y: &[f64; 3]) -> Matrix3<f64> {
        SmallShockSystem::jacobian(self, y)
    }
}

/// Spectra at `p₁` and `p₂`.
pub fn equilibria_and_spectra(sys: &SmallShockSystem) -> Result<(SpectralReport, SpectralReport)> {
    if sys.delta >= 0.0 {
        return Err(Error::InvalidInput("delta must be negative".into()));
    }
    let at = |p: [f64; 3]| matrix_spectrum(&sys.jacobian(&p), p, 1.0);
    Ok((at(sys.p1()), at(sys.p2())))
}

/// Eigenvectors of the δ = 0 linearization at the origin, as columns.
pub fn eigenbasis() -> Matrix3<f64> {
    let r = std::f64::consts::SQRT_2;
    Matrix3::new(1.0, -1.0, 1.0, 0.0, r, r, 1.0, 1.0, -1.0)
}

/// `C⁻¹`; the columns of `C` are orthogonal with squared lengths 2, 4, 4.
pub fn eigenbasis_inverse() -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(0.5, 0.25, 0.25)) * eigenbasis().transpose()
}

pub fn to_eigen(x: &[f64; 3]) -> [f64; 3] {
    let y = eigenbasis_inverse() * Vector3::from(*x);
    [y[0], y[1], y[2]]
}

pub fn from_eigen(y: &[f64; 3]) -> [f64; 3] {
    let x = eigenbasis() * Vector3::from(*y);
    [x[0], x[1], x[2]]
}

/// The field in eigen-coordinates, `C⁻¹ F(C Y; δ)`.
pub fn transformed_field(y: &[f64; 3], delta: f64) -> [f64; 3] {
    to_eigen(&field(&from_eigen(y), delta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SotomayorReport {
    /// `wᵀ F_δ`.
    pub c1: f64,
    /// `wᵀ DF_δ v`.
    pub c2: f64,
    /// `wᵀ D²F (v, v)`.
    pub c3: f64,
}

/// The three Sotomayor quantities at `Y = 0`, `δ = 0` with `v = w = e₁`, by
/// central differences with step `h`.
pub fn sotomayor_values(h: f64) -> SotomayorReport {
    let g = |w1: f64, d: f64| transformed_field(&[w1, 0.0, 0.0], d)[0];
    let c1 = (g(0.0, h) - g(0.0, -h)) / (2.0 * h);
    let c2 = (g(h, h) - g(h, -h) - g(-h, h) + g(-h, -h)) / (4.0 * h * h);
    let c3 = (g(h, 0.0) - 2.0 * g(0.0, 0.0) + g(-h, 0.0)) / (h * h);
    SotomayorReport { c1, c2, c3 }
}

/// Sotomayor conditions for a transcritical bifurcation at the origin.
pub fn sotomayor_check() -> Result<SotomayorReport> {
    let r = sotomayor_values(FD_STEP);
    if r.c1.abs() >= 1e-9 {
        return Err(Error::ConditionFailed { which: "(i) w.F_delta = 0", value: r.c1 });
    }
    if r.c2.abs() < 1e-6 {
        return Err(Error::ConditionFailed { which: "(ii) w.DF_delta v != 0", value: r.c2 });
    }
    if r.c3.abs() < 1e-6 {
        return Err(Error::ConditionFailed { which: "(iii) w.D2F(v,v) != 0", value: r.c3 });
    }
    Ok(r)
}

/// `w₁' ≈ q δ w₁ + p w₁²` along the centre direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalForm {
    pub p: f64,
    pub q: f64,
    /// Fitted coefficient of `w₁` (equals `qδ`).
    pub linear: f64,
    /// Max fit residual relative to the sampled magnitude.
    pub residual: f64,
}

impl NormalForm {
    /// Equilibria of the fitted scalar field with their stability.
    pub fn equilibria(&self) -> [(f64, bool); 2] {
        let other = -self.linear / self.p;
        let stable = |w: f64| self.linear + 2.0 * self.p * w < 0.0;
        [(0.0, stable(0.0)), (other, stable(other))]
    }
}

/// Least-squares fit of the first transformed component on the `w₁` axis.
pub fn normal_form_coefficients(delta: f64) -> Result<NormalForm> {
    if !(-0.2..=0.0).contains(&delta) {
        return Err(Error::InvalidInput(format!("delta must lie in [-0.2, 0], got {delta}")));
    }
    const SAMPLES: usize = 41;
    let span = delta.abs().max(0.05);
    let pts: Vec<(f64, f64)> = (0..SAMPLES)
        .map(|k| {
            let w1 = span * (2.0 * k as f64 / (SAMPLES - 1) as f64 - 1.0);
            (w1, transformed_field(&[w1, 0.0, 0.0], delta)[0])
        })
        .collect();
    // Normal equations for g ≈ a w₁ + p w₁².
    let (mut s11, mut s12, mut s22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, g) in &pts {
        s11 += x * x;
        s12 += x * x * x;
        s22 += x * x * x * x;
        b1 += x * g;
        b2 += x * x * g;
    }
    let det = s11 * s22 - s12 * s12;
    let a = (b1 * s22 - b2 * s12) / det;
    let p = (s11 * b2 - s12 * b1) / det;
    let scale = pts.iter().map(|t| t.1.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let residual = pts.iter().map(|&(x, g)| (a * x + p * x * x - g).abs()).fold(0.0, f64::max) / scale;
    if residual > 1e-6 {
        return Err(Error::FitResidualTooLarge(residual));
    }
    let q = if delta != 0.0 {
        a / delta
    } else {
        sotomayor_values(FD_STEP).c2
    };
    Ok(NormalForm { p, q, linear: a, residual })
}

/// `ũ` of the normal-form front, `−δ / (1 + e^{|δ|x/4})`.
pub fn normal_form_profile(delta: f64, x: f64) -> f64 {
    -delta / (1.0 + (0.25 * delta.abs() * x).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallShockOptions {
    /// Domain half-length; the default resolves the `|δ|/4` decay to 1e-8.
    pub half_length: Option<f64>,
    pub mesh_size: usize,
    pub newton: NewtonOptions,
}

impl Default for SmallShockOptions {
    fn default() -> Self {
        SmallShockOptions { half_length: None, mesh_size: 4000, newton: NewtonOptions::default() }
    }
}

impl SmallShockOptions {
    pub fn half_length_for(&self, delta: f64) -> f64 {
        self.half_length.unwrap_or_else(|| (4.0 / delta.abs() * (1e8 * delta.abs()).ln()).max(40.0))
    }
}

/// Front from `p₂` at −∞ to `p₁` at +∞ with `ũ(0) = −δ/2`, returned in `(u, v, w)`.
pub fn small_shock_profile(sys: &SmallShockSystem, opts: &SmallShockOptions) -> Result<HeteroclinicSolution> {
    let delta = sys.delta;
    if !(delta >= -MAX_DELTA && delta < 0.0) {
        return Err(Error::InvalidInput(format!("delta must lie in [-{MAX_DELTA}, 0), got {delta}")));
    }
    if opts.mesh_size < 4 || opts.mesh_size % 2 != 0 {
        return Err(Error::InvalidInput(format!("mesh_size must be even and >= 4, got {}", opts.mesh_size)));
    }
    let l = opts.half_length_for(delta);
    let mesh = sinh_mesh(0.0, l, opts.mesh_size, 0.0);
    let (s1, s2) = equilibria_and_spectra(sys)?;
    let condition = |p: [f64; 3], lambda: f64| {
        let c = left_eigenvector(&sys.jacobian(&p), lambda);
        LinearCondition { coeffs: c, rhs: c[0] * p[0] + c[1] * p[1] + c[2] * p[2] }
    };
    let left = condition(sys.p2(), s2.sole_real(false).ok_or(Error::NotASaddle)?);
    let right = condition(sys.p1(), s1.sole_real(true).ok_or(Error::NotASaddle)?);
    let guess: Vec<[f64; 3]> = mesh
        .iter()
        .map(|&x| {
            let w1 = normal_form_profile(delta, x);
            [w1, 0.0, w1]
        })
        .collect();
    let bvp = Bvp {
        field: sys,
        mesh: &mesh,
        left: vec![left],
        right: vec![right],
        phase: PhaseCondition { node: opts.mesh_size / 2, component: 2, value: -0.5 * delta },
    };
    let sol = bvp.solve(guess, &opts.newton)?;
    let values: Vec<[f64; 3]> = sol.values.iter().map(|x| sys.to_original(x)).collect();
    let slopes: Vec<[f64; 3]> = sol.slopes.iter().map(|d| [d[2], d[1], d[0]]).collect();
    let n = values.len() - 1;
    let end = |y: &[f64; 3], u: f64| (y[0] - u).hypot(y[1]);
    let defect = end(&values[0], sys.u_minus()).max(end(&values[n], sys.u_plus));
    let mut out = HeteroclinicSolution {
        epsilon: 1.0,
        mesh: sol.mesh,
        values,
        slopes,
        residual_norm: sol.residual_norm,
        boundary_defect: defect,
        layer_width_80: f64::NAN,
        hausdorff_to_singular: None,
        phase_x: 0.0,
        phase_value: 0.5 * (sys.u_minus() + sys.u_plus),
        layer_states: (sys.u_minus(), sys.u_plus),
        iterations: sol.iterations,
    };
    let d = sys.u_minus() - sys.u_plus;
    out.layer_width_80 = out.crossing(sys.u_plus + 0.1 * d) - out.crossing(sys.u_plus + 0.9 * d);
    if defect > 1e-6 {
        return Err(Error::BoundaryDefectTooLarge(defect));
    }
    Ok(out)
}

//! Fast layer at the sub-shock and the two transversality checks.
//!
//! For the quadratic flux the layer field `f_c(u) − f_c(u±) − v*` factors as
//! `½a (u − u_ℓ)(u − u_r)`. Each half of the layer is integrated in its
//! distance to the end state it decays to, which keeps the exponentially small
//! tails representable, together with `ln ψ` for the adjoint equation.

use crate::error::{Error, Result};
use crate::model::{Flux, WaveProblem};
use crate::ode::{dopri5, hermite, hermite_solve, Control, OdeOptions, Sample};
use crate::slowdyn::MatchingData;
use serde::Serialize;

/// Linearized decay predicts an endpoint residual of about `e^{-25}`.
pub const TRUNCATION_DECAY: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LayerSample {
    pub y: f64,
    pub u: f64,
    /// `u_left − u`, accurate in the left tail.
    pub dist_left: f64,
    /// `u − u_right`, accurate in the right tail.
    pub dist_right: f64,
    /// `ln ψ` for the adjoint solution with `ψ(0) = 1`.
    pub log_psi: f64,
}

#[derive(Debug, Clone)]
pub struct LayerSolution {
    pub samples: Vec<LayerSample>,
    pub u_left: f64,
    pub u_right: f64,
    pub v_star: f64,
    pub truncation: f64,
    pub width_80: f64,
    /// Sup distance to `m − r·tanh(a r y / 2)` for the Hamer model.
    pub closed_form_error: Option<f64>,
    a: f64,
    /// Steps in `y ≥ 0`, state `(u − u_r, ln ψ)`.
    forward: Vec<Sample<2>>,
    /// Steps in `s = −y ≥ 0`, state `(u_ℓ − u, ln ψ)`.
    backward: Vec<Sample<2>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdjointReport {
    pub grows_plus: bool,
    pub grows_minus: bool,
    /// Slopes of `ln ψ` in `y` over the outer fifth of each side: `(y < 0, y > 0)`.
    pub rates: (f64, f64),
}

/// Default truncation `Y = 25 / min(|df_c(u_ℓ)|, |df_c(u_r)|)`.
pub fn default_truncation(problem: &WaveProblem, m: &MatchingData) -> f64 {
    let rate = problem.dfc(m.u_left).abs().min(problem.dfc(m.u_right).abs());
    TRUNCATION_DECAY / rate
}

fn check_sign_structure(problem: &WaveProblem, m: &MatchingData) -> Result<()> {
    if !(m.u_left > m.u_right) {
        return Err(Error::WrongSignStructure);
    }
    let scale = 1.0 + m.v_star.abs();
    if problem.fast_field(m.u_left, m.v_star).abs() > 1e-9 * scale
        || problem.fast_field(m.u_right, m.v_star).abs() > 1e-9 * scale
    {
        return Err(Error::WrongSignStructure);
    }
    const PROBES: usize = 64;
    for k in 1..PROBES {
        let u = m.u_right + (m.u_left - m.u_right) * k as f64 / PROBES as f64;
        if !(problem.fast_field(u, m.v_star) < 0.0) {
            return Err(Error::WrongSignStructure);
        }
    }
    Ok(())
}

/// Solves `u̇ = f_c(u) − f_c(u±) − v*` on `[−Y, Y]` with `u(0)` at the midpoint.
pub fn solve_layer(problem: &WaveProblem, m: &MatchingData, truncation: Option<f64>) -> Result<LayerSolution> {
    check_sign_structure(problem, m)?;
    let Flux::Quadratic { a, .. } = problem.model.flux;
    let y_max = truncation.unwrap_or_else(|| default_truncation(problem, m));
    if !(y_max > 0.0 && y_max.is_finite()) {
        return Err(Error::InvalidInput(format!("layer truncation must be positive, got {y_max}")));
    }
    let (ul, ur) = (m.u_left, m.u_right);
    let delta = ul - ur;
    // ln ψ starts at zero, so a pure relative tolerance would stall the first step.
    let opts = OdeOptions { rtol: 1e-12, atol: 1e-15, h_init: 1e-3, h_max: y_max / 50.0, max_steps: 200_000 };
    // Distance d to the end state decays as d' = −½a d (Δ − d) in both halves.
    let half = |sign: f64| {
        dopri5(
            move |_, z: &[f64; 2]| {
                let d = z[0];
                let u = if sign > 0.0 { ur + d } else { ul - d };
                Some([-0.5 * a * d * (delta - d), -sign * problem.dfc(u)])
            },
            0.0,
            [0.5 * delta, 0.0],
            y_max,
            &opts,
            |_| Control::Continue,
        )
    };
    let forward = half(1.0)?;
    let backward = half(-1.0)?;

    let mut samples = Vec::with_capacity(forward.len() + backward.len());
    for s in backward.iter().rev() {
        let d = s.y[0];
        samples.push(LayerSample { y: -s.t, u: ul - d, dist_left: d, dist_right: delta - d, log_psi: s.y[1] });
    }
    for s in forward.iter().skip(1) {
        let d = s.y[0];
        samples.push(LayerSample { y: s.t, u: ur + d, dist_left: delta - d, dist_right: d, log_psi: s.y[1] });
    }
    let y_right = level_crossing(&forward, 0.1 * delta);
    let y_left = -level_crossing(&backward, 0.1 * delta);
    let mut layer = LayerSolution {
        samples,
        u_left: ul,
        u_right: ur,
        v_star: m.v_star,
        truncation: y_max,
        width_80: y_right - y_left,
        closed_form_error: None,
        a,
        forward,
        backward,
    };
    if problem.model.is_hamer() {
        let (mid, r) = (0.5 * (ul + ur), 0.5 * delta);
        let err = layer
            .samples
            .iter()
            .map(|s| (s.u - (mid - r * (0.5 * a * r * s.y).tanh())).abs())
            .fold(0.0, f64::max);
        layer.closed_form_error = Some(err);
    }
    Ok(layer)
}

/// Time at which the decaying distance falls to `level`.
fn level_crossing(traj: &[Sample<2>], level: f64) -> f64 {
    let i = traj.partition_point(|s| s.y[0] > level).clamp(1, traj.len() - 1);
    hermite_solve(&traj[i - 1], &traj[i], 0, level)
}

impl LayerSolution {
    fn eval(&self, y: f64) -> [f64; 2] {
        let (traj, t) = if y >= 0.0 { (&self.forward, y) } else { (&self.backward, -y) };
        let n = traj.len();
        if t >= traj[n - 1].t {
            return traj[n - 1].y;
        }
        let i = traj.partition_point(|s| s.t <= t).clamp(1, n - 1);
        hermite(&traj[i - 1], &traj[i], t)
    }

    /// Layer profile at `y`, held constant beyond the truncation.
    pub fn u_at(&self, y: f64) -> f64 {
        let d = self.eval(y)[0];
        if y >= 0.0 {
            self.u_right + d
        } else {
            self.u_left - d
        }
    }

    /// Adjoint solution `ψ(y)` with `ψ(0) = psi0`.
    pub fn adjoint_at(&self, y: f64, psi0: f64) -> f64 {
        psi0 * self.eval(y)[1].exp()
    }

    /// Strict decrease of `u` along the samples, judged on the tail distances.
    pub fn strictly_decreasing(&self) -> bool {
        self.samples.windows(2).all(|w| {
            let (p, q) = (&w[0], &w[1]);
            if q.y <= 0.0 {
                q.dist_left > p.dist_left
            } else if p.y >= 0.0 {
                q.dist_right < p.dist_right
            } else {
                q.u < p.u
            }
        })
    }

    /// `|u(±Y) − u_{r/ℓ}|` at the truncation, `(left, right)`.
    pub fn endpoint_residuals(&self) -> (f64, f64) {
        let first = self.samples.first().expect("layer has samples");
        let last = self.samples.last().expect("layer has samples");
        (first.dist_left, last.dist_right)
    }

    pub fn quadratic_coefficient(&self) -> f64 {
        self.a
    }
}

/// `det [(G, H)(u_ℓ, v*, w*); (G, H)(u_r, v*, w*)] = v*(g(u_r) − g(u_ℓ))`,
/// with `G = w − g(u)` and `H = v`.
pub fn transversality_determinant(problem: &WaveProblem, m: &MatchingData) -> Result<f64> {
    let g = |u| problem.model.g(u);
    let row_l = [m.w_star - g(m.u_left), m.v_star];
    let row_r = [m.w_star - g(m.u_right), m.v_star];
    let det = row_l[0] * row_r[1] - row_l[1] * row_r[0];
    if !(det.abs() >= 1e-10) {
        return Err(Error::DegenerateTransversality(det));
    }
    if det < 0.0 {
        return Err(Error::InvalidMatching(format!("transversality determinant {det} has the wrong sign")));
    }
    Ok(det)
}

fn tail_slope(samples: &[(f64, f64)]) -> f64 {
    let n = samples.len() as f64;
    let (sx, sy) = samples.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = samples.iter().fold((0.0, 0.0), |(p, q), &(x, y)| (p + (x - mx) * (y - my), q + (x - mx).powi(2)));
    num / den
}

/// Growth of `ψ' = −df_c(u₀)ψ` away from the layer centre in both directions.
pub fn adjoint_growth_check(layer: &LayerSolution) -> Result<AdjointReport> {
    const POINTS: usize = 200;
    let y_max = layer.truncation;
    let side = |sign: f64| -> Vec<(f64, f64)> {
        (0..=POINTS)
            .map(|k| {
                let y = sign * y_max * (0.8 + 0.2 * k as f64 / POINTS as f64);
                (y, layer.eval(y)[1])
            })
            .collect()
    };
    let minus = tail_slope(&side(-1.0));
    let plus = tail_slope(&side(1.0));
    let report = AdjointReport { grows_plus: plus > 0.0, grows_minus: minus < 0.0, rates: (minus, plus) };
    if !(report.grows_plus && report.grows_minus) {
        return Err(Error::BoundedAdjoint(minus, plus));
    }
    Ok(report)
}

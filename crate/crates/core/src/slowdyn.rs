//! Reduced dynamics on the slow branches and the sub-shock matching point.
//!
//! On a branch the reduced system reads `v' = w − g(h(v))`, `w' = v`, which is
//! singular at the fold `u = u*`. Curves are integrated instead in the
//! desingularized time `τ` with `dx/dτ = df_c(u)`:
//!
//! ```text
//! du/dτ = w − g(u),   dw/dτ = df_c(u) (f_c(u) − f_c(u±)),   dx/dτ = df_c(u)
//! ```
//!
//! which is regular through the fold. The fold point `(u*, g(u*))` is an
//! equilibrium of this field; below the sub-shock threshold the curves converge
//! to it and never cross, above it the left curve spirals across `u = u*`.

use crate::error::{Error, Result};
use crate::model::{branch_inverse, Branch, WaveProblem, ROOT_TOL};
use crate::ode::{dopri5, hermite, hermite_solve, Control, OdeOptions, Sample};
use crate::par::{self, Exec};
use crate::spectral::reduced_eigenvalues;
use serde::Serialize;

/// Distance of the seed from the equilibrium, relative to the `w`-scale.
pub const SEED_OFFSET: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCurveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Integration stops once this close to the fold equilibrium.
    pub fold_distance: f64,
    /// Target chord error for the exported `(v, w)` samples.
    pub chord_tol: f64,
}

impl Default for PhaseCurveOptions {
    fn default() -> Self {
        PhaseCurveOptions { rtol: 1e-10, atol: 1e-12, max_steps: 1_000_000, fold_distance: 1e-12, chord_tol: 1e-8 }
    }
}

/// A point on the saddle manifold of the planar reduced system, near `(0, g(u∓))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Seed {
    pub branch: Branch,
    /// `(v, w)` of the seed.
    pub point: [f64; 2],
    /// `h_branch(v)` at the seed.
    pub u: f64,
    pub eigenvalue: f64,
    /// Unit eigenvector in the `(v, w)` plane, oriented into the curve.
    pub eigenvector: [f64; 2],
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    ForwardFromMinusInfinity,
    BackwardFromPlusInfinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The curve reached the fold line `u = u*` (end of the maximal solution).
    CrossedFold,
    /// The curve converged onto the fold equilibrium without crossing.
    ConvergedToFold,
    /// `v` stopped being monotone in `x`.
    TurningPoint,
    /// The seed was an equilibrium.
    Equilibrium,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveSample {
    pub x: f64,
    pub v: f64,
    pub w: f64,
    pub u: f64,
}

/// Sampled maximal solution on one branch, ordered by increasing `x`.
#[derive(Debug, Clone)]
pub struct PhaseCurve {
    pub branch: Branch,
    pub orientation: Orientation,
    pub termination: Termination,
    pub samples: Vec<CurveSample>,
    problem: WaveProblem,
    /// Accepted steps in desingularized time, state `(u, w, x)`.
    trajectory: Vec<Sample<3>>,
}

/// Sub-shock location in the `(v, w)` plane together with the layer end states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchingData {
    pub v_star: f64,
    pub w_star: f64,
    pub u_left: f64,
    pub u_right: f64,
    pub x_star: f64,
    /// Position of the matching point in each curve's own `x` coordinate.
    pub x_on_minus: f64,
    pub x_on_plus: f64,
}

/// Seeds the maximal solution of `branch` on its saddle eigenvector.
pub fn seed_saddle_manifold(problem: &WaveProblem, branch: Branch) -> Result<Seed> {
    problem.require_lax()?;
    let (l1, l2) = reduced_eigenvalues(problem, branch)?;
    if !(l1 < 0.0 && l2 > 0.0) {
        return Err(Error::NotASaddle);
    }
    // The left curve leaves u₋ along the unstable direction, the right one
    // enters u₊ along the stable direction.
    let lambda = match branch {
        Branch::Minus => l2,
        Branch::Plus => l1,
    };
    // Eigenvector of [[−dg/df_c, 1], [1, 0]] is (λ, 1).
    let norm = lambda.hypot(1.0);
    let sign = match branch {
        Branch::Minus => -1.0,
        Branch::Plus => 1.0,
    };
    let e = [sign * lambda / norm, sign / norm];
    let u_end = problem.end_state(branch);
    let dg = (problem.model.g(problem.u_minus) - problem.model.g(problem.u_plus)).abs();
    let offset = SEED_OFFSET * dg.min(1.0);
    let v = offset * e[0];
    let w = problem.model.g(u_end) + offset * e[1];
    let u = branch_inverse(problem, branch, v)?;
    Ok(Seed { branch, point: [v, w], u, eigenvalue: lambda, eigenvector: e, offset })
}

fn desingularized(problem: &WaveProblem, y: &[f64; 3]) -> [f64; 3] {
    let [u, w, _] = *y;
    let d = problem.dfc(u);
    [w - problem.model.g(u), d * problem.fast_field(u, 0.0), d]
}

/// Integrates the maximal solution from `seed` until it reaches the fold.
pub fn integrate_phase_curve(problem: &WaveProblem, seed: &Seed, opts: &PhaseCurveOptions) -> Result<PhaseCurve> {
    let branch = seed.branch;
    let orientation = match branch {
        Branch::Minus => Orientation::ForwardFromMinusInfinity,
        Branch::Plus => Orientation::BackwardFromPlusInfinity,
    };
    // Direction in which u moves toward the fold.
    let toward = match branch {
        Branch::Minus => -1.0,
        Branch::Plus => 1.0,
    };
    let u_star = problem.u_star;
    let g_star = problem.model.g(u_star);
    let y0 = [seed.u, seed.point[1], 0.0];
    let f0 = desingularized(problem, &y0);
    if f0.iter().take(2).all(|&c| c == 0.0) {
        let trajectory = vec![Sample { t: 0.0, y: y0, dy: f0 }];
        return Ok(PhaseCurve::finish(problem, branch, orientation, Termination::Equilibrium, trajectory, opts));
    }

    let ode = OdeOptions { rtol: opts.rtol, atol: opts.atol, h_init: 1e-3, h_max: 1.0, max_steps: opts.max_steps };
    let mut termination = None;
    let mut trajectory = dopri5(
        |_, y: &[f64; 3]| Some(desingularized(problem, y)),
        0.0,
        y0,
        1e6,
        &ode,
        |s: &Sample<3>| {
            let [u, w, _] = s.y;
            if toward * (u - u_star) >= 0.0 {
                termination = Some(Termination::CrossedFold);
                return Control::Stop;
            }
            if (u - u_star).hypot(w - g_star) < opts.fold_distance {
                termination = Some(Termination::ConvergedToFold);
                return Control::Stop;
            }
            if s.t > 0.0 && toward * s.dy[0] <= 0.0 {
                termination = Some(Termination::TurningPoint);
                return Control::StopBefore;
            }
            Control::Continue
        },
    )?;
    let termination = termination.ok_or(Error::StepCapExceeded(opts.max_steps))?;
    if termination == Termination::CrossedFold {
        // Cut the last step exactly at the fold line.
        let n = trajectory.len();
        let (a, b) = (trajectory[n - 2], trajectory[n - 1]);
        let tc = hermite_solve(&a, &b, 0, u_star);
        let mut y = hermite(&a, &b, tc);
        y[0] = u_star;
        trajectory[n - 1] = Sample { t: tc, y, dy: desingularized(problem, &y) };
    }
    Ok(PhaseCurve::finish(problem, branch, orientation, termination, trajectory, opts))
}

impl PhaseCurve {
    fn finish(
        problem: &WaveProblem,
        branch: Branch,
        orientation: Orientation,
        termination: Termination,
        trajectory: Vec<Sample<3>>,
        opts: &PhaseCurveOptions,
    ) -> Self {
        let bound = problem.branch_domain_bound();
        let to_sample = |y: [f64; 3]| CurveSample { x: y[2], v: problem.fast_field(y[0], 0.0), w: y[1], u: y[0] };
        let mut samples = vec![to_sample(trajectory[0].y)];
        for pair in trajectory.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            let mid = hermite(a, b, 0.5 * (a.t + b.t));
            let (sa, sb, sm) = (to_sample(a.y), to_sample(b.y), to_sample(mid));
            let dev = (sm.v - 0.5 * (sa.v + sb.v)).hypot(sm.w - 0.5 * (sa.w + sb.w));
            let pieces = ((dev / opts.chord_tol).sqrt().ceil() as usize).clamp(1, 256);
            for k in 1..pieces {
                let t = a.t + (b.t - a.t) * k as f64 / pieces as f64;
                samples.push(to_sample(hermite(a, b, t)));
            }
            samples.push(sb);
        }
        // The fold itself (v = bound) is not part of the open branch.
        samples.retain(|s| s.v > bound);
        if orientation == Orientation::BackwardFromPlusInfinity {
            samples.reverse();
        }
        PhaseCurve { branch, orientation, termination, samples, problem: *problem, trajectory }
    }

    pub fn problem(&self) -> &WaveProblem {
        &self.problem
    }

    /// Range of `w` covered by the curve, `(min, max)`.
    pub fn w_range(&self) -> (f64, f64) {
        let a = self.trajectory[0].y[1];
        let b = self.trajectory[self.trajectory.len() - 1].y[1];
        (a.min(b), a.max(b))
    }

    /// Range of `x` covered by the curve, `(min, max)`.
    pub fn x_range(&self) -> (f64, f64) {
        let a = self.trajectory[0].y[2];
        let b = self.trajectory[self.trajectory.len() - 1].y[2];
        (a.min(b), a.max(b))
    }

    /// State `(u, w, x)` where component `k` (monotone along the curve) equals `target`.
    fn locate(&self, k: usize, target: f64) -> Option<[f64; 3]> {
        let tr = &self.trajectory;
        let n = tr.len();
        if n == 1 {
            return (tr[0].y[k] == target).then_some(tr[0].y);
        }
        let increasing = tr[n - 1].y[k] > tr[0].y[k];
        let key = |s: &Sample<3>| if increasing { s.y[k] } else { -s.y[k] };
        let t = if increasing { target } else { -target };
        if t < key(&tr[0]) || t > key(&tr[n - 1]) {
            return None;
        }
        let i = tr.partition_point(|s| key(s) < t).clamp(1, n - 1);
        let (a, b) = (&tr[i - 1], &tr[i]);
        let tau = hermite_solve(a, b, k, target);
        Some(hermite(a, b, tau))
    }

    /// `(u, v, x)` on the curve at slow value `w`.
    pub fn at_w(&self, w: f64) -> Option<(f64, f64, f64)> {
        let [u, _, x] = self.locate(1, w)?;
        Some((u, self.problem.fast_field(u, 0.0), x))
    }

    /// `(u, v, w)` on the curve at position `x` (curve coordinates).
    pub fn at_x(&self, x: f64) -> Option<[f64; 3]> {
        let [u, w, _] = self.locate(2, x)?;
        Some([u, self.problem.fast_field(u, 0.0), w])
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Computes both maximal solutions, concurrently when `exec` allows it.
pub fn phase_curves(problem: &WaveProblem, opts: &PhaseCurveOptions, exec: Exec) -> Result<(PhaseCurve, PhaseCurve)> {
    let run = |b: Branch| seed_saddle_manifold(problem, b).and_then(|s| integrate_phase_curve(problem, &s, opts));
    let (m, p) = par::join(exec, || run(Branch::Minus), || run(Branch::Plus));
    Ok((m?, p?))
}

/// Intersects the two curves in the `(v, w)` plane.
pub fn find_matching_point(curve_minus: &PhaseCurve, curve_plus: &PhaseCurve) -> Result<MatchingData> {
    if curve_minus.branch != Branch::Minus || curve_plus.branch != Branch::Plus {
        return Err(Error::InvalidInput("expected the Minus curve first and the Plus curve second".into()));
    }
    let problem = curve_minus.problem;
    if problem != curve_plus.problem {
        return Err(Error::InvalidInput("curves belong to different problems".into()));
    }
    let u_star = problem.u_star;
    let (a0, a1) = curve_minus.w_range();
    let (b0, b1) = curve_plus.w_range();
    let (lo, hi) = (a0.max(b0), a1.min(b1));
    if !(hi - lo > ROOT_TOL * (1.0 + lo.abs().max(hi.abs()))) {
        return Err(Error::NoIntersection);
    }
    // For quadratic flux v₋ − v₊ = ½a (u₋ − u₊)(u₋ + u₊ − 2u*), so the sign of
    // v₋ − v₊ is that of the distances to the fold, which stay accurate where
    // v itself is flat.
    let phi = |w: f64| -> f64 {
        let (um, _, _) = curve_minus.at_w(w).expect("w inside the overlap");
        let (up, _, _) = curve_plus.at_w(w).expect("w inside the overlap");
        (um - u_star) - (u_star - up)
    };
    const GRID: usize = 2000;
    let mut brackets = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..=GRID {
        let w = if k == GRID { hi } else { lo + (hi - lo) * k as f64 / GRID as f64 };
        let f = phi(w);
        if f == 0.0 {
            brackets.push((w, w));
            prev = None;
            continue;
        }
        if let Some((wp, fp)) = prev {
            if (fp < 0.0) != (f < 0.0) {
                brackets.push((wp, w));
            }
        }
        prev = Some((w, f));
    }
    match brackets.len() {
        0 => return Err(Error::NoIntersection),
        1 => {}
        n => return Err(Error::MultipleIntersections(n)),
    }
    let (mut a, mut b) = brackets[0];
    let fa = phi(a);
    while b - a > 0.0 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = phi(m);
        if fm == 0.0 {
            a = m;
            b = m;
            break;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    let w_star = 0.5 * (a + b);
    let (u_left, v_left, x_on_minus) = curve_minus.at_w(w_star).expect("w_star inside the overlap");
    let (u_right, v_right, x_on_plus) = curve_plus.at_w(w_star).expect("w_star inside the overlap");
    let v_star = 0.5 * (v_left + v_right);
    let m = MatchingData { v_star, w_star, u_left, u_right, x_star: 0.0, x_on_minus, x_on_plus };
    validate_matching(&problem, &m)?;
    Ok(m)
}

fn validate_matching(problem: &WaveProblem, m: &MatchingData) -> Result<()> {
    if !(m.v_star < 0.0) {
        return Err(Error::InvalidMatching(format!("v_star = {} is not negative", m.v_star)));
    }
    if !(m.u_right < problem.u_star && problem.u_star < m.u_left) {
        return Err(Error::InvalidMatching(format!(
            "u_right = {}, u_star = {}, u_left = {} are not ordered",
            m.u_right, problem.u_star, m.u_left
        )));
    }
    Ok(())
}

/// `g(u_r) ≤ w* ≤ g(u_ℓ)` within `tol`: the slow value at the sub-shock lies
/// between the coupling values of the two layer end states.
pub fn sandwich_holds(problem: &WaveProblem, m: &MatchingData, tol: f64) -> bool {
    let g = |u| problem.model.g(u);
    g(m.u_right) - tol <= m.w_star && m.w_star <= g(m.u_left) + tol
}

/// Both maximal solutions and their matching point.
pub fn singular_matching(
    problem: &WaveProblem,
    opts: &PhaseCurveOptions,
    exec: Exec,
) -> Result<(PhaseCurve, PhaseCurve, MatchingData)> {
    let (m, p) = phase_curves(problem, opts, exec)?;
    let data = find_matching_point(&m, &p)?;
    Ok((m, p, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn hamer() -> WaveProblem {
        WaveProblem::hamer(1.0, -1.0).unwrap()
    }

    #[test]
    fn seeds_follow_eigenvectors() {
        let p = hamer();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let s = seed_saddle_manifold(&p, Branch::Minus).unwrap();
        assert_relative_eq!(s.eigenvalue, phi - 1.0, epsilon = 1e-15);
        // Direction (1, φ) up to sign, with v < 0.
        assert_relative_eq!(s.eigenvector[1] / s.eigenvector[0], phi, epsilon = 1e-13);
        assert!(s.point[0] < 0.0 && s.point[1] < 1.0);
        assert_relative_eq!(s.point[0].hypot(s.point[1] - 1.0), 1e-6, epsilon = 1e-15);
        let s = seed_saddle_manifold(&p, Branch::Plus).unwrap();
        assert!(s.point[0] < 0.0 && s.point[1] > -1.0);
        assert_relative_eq!(s.eigenvalue, 1.0 - phi, epsilon = 1e-15);
    }

    #[test]
    fn hamer_curves_are_monotone() {
        let p = hamer();
        let (m, pl) = phase_curves(&p, &PhaseCurveOptions::default(), Exec::Sequential).unwrap();
        assert_eq!(m.termination, Termination::CrossedFold);
        assert_eq!(pl.termination, Termination::CrossedFold);
        let bound = p.branch_domain_bound();
        for w in m.samples.windows(2) {
            assert!(w[1].x > w[0].x && w[1].w < w[0].w && w[1].v < w[0].v);
        }
        for w in pl.samples.windows(2) {
            assert!(w[1].x > w[0].x && w[1].w < w[0].w && w[1].v > w[0].v);
        }
        assert!(m.samples.iter().chain(&pl.samples).all(|s| s.v > bound));
        // Left curve starts near (0, 1); right curve ends near (0, -1).
        assert!((m.samples[0].w - 1.0).abs() < 2e-6);
        assert!((pl.samples.last().unwrap().w + 1.0).abs() < 2e-6);
    }

    #[test]
    fn equilibrium_seed_gives_trivial_curve() {
        let p = hamer();
        let mut s = seed_saddle_manifold(&p, Branch::Minus).unwrap();
        s.point = [0.0, 1.0];
        s.u = 1.0;
        let c = integrate_phase_curve(&p, &s, &PhaseCurveOptions::default()).unwrap();
        assert_eq!(c.termination, Termination::Equilibrium);
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn hamer_matching_is_symmetric() {
        let p = hamer();
        let (_, _, m) = singular_matching(&p, &PhaseCurveOptions::default(), Exec::Sequential).unwrap();
        assert!(m.w_star.abs() < 1e-8);
        assert!((m.u_left + m.u_right).abs() < 1e-8);
        assert!(m.v_star > -0.5 && m.v_star < 0.0);
        assert!(sandwich_holds(&p, &m, 1e-8));
        assert!(p.fast_field(m.u_left, m.v_star).abs() < 1e-9);
        assert!(p.fast_field(m.u_right, m.v_star).abs() < 1e-9);
    }

    #[test]
    fn weak_shock_has_no_intersection() {
        let p = WaveProblem::hamer(0.6, -0.6).unwrap();
        let r = singular_matching(&p, &PhaseCurveOptions::default(), Exec::Sequential);
        assert_eq!(r.err(), Some(Error::NoIntersection));
    }

    #[test]
    fn non_lax_rejected() {
        let p = WaveProblem::hamer(-1.0, 1.0).unwrap();
        assert!(matches!(seed_saddle_manifold(&p, Branch::Minus), Err(Error::LaxViolated { .. })));
    }
}

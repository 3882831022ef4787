//! Independent check of the collocation profile by two-sided shooting from the
//! section `u = (u_ℓ + u_r)/2`.
//!
//! For a trial `v₀`, the `w₀` that keeps the forward orbit on the stable
//! manifold of the right end state is found by bisection on the side to which
//! the orbit escapes; likewise backwards for the left end state. The heteroclinic
//! is where the two values of `w₀` agree.

use super::{left_eigenvector, Field3, ProfileField};
use crate::error::{Error, Result};
use crate::model::{Branch, WaveProblem};
use crate::ode::{dopri5, hermite, Control, OdeOptions, Sample};
use crate::spectral::fast_jacobian_spectrum;

const ESCAPE: f64 = 0.1;
const NEAR: f64 = 0.2;
const FAR: f64 = 10.0;
const X_MAX: f64 = 80.0;

#[derive(Debug, Clone)]
pub struct ShootingProfile {
    pub epsilon: f64,
    pub v0: f64,
    pub w0: f64,
    pub u0: f64,
    /// Trajectory for `x ≥ 0`.
    pub forward: Vec<Sample<3>>,
    /// Trajectory for `x ≤ 0`, in decreasing `x`.
    pub backward: Vec<Sample<3>>,
}

impl ShootingProfile {
    pub fn at(&self, x: f64) -> Option<[f64; 3]> {
        let s = if x >= 0.0 { &self.forward } else { &self.backward };
        let k = s.partition_point(|p| (p.t - x) * x.signum() < 0.0);
        if k == 0 {
            return Some(s[0].y);
        }
        s.get(k).map(|b| hermite(&s[k - 1], b, x))
    }
}

struct Side {
    field: ProfileField,
    end: [f64; 3],
    l: [f64; 3],
    dir: f64,
    opts: OdeOptions,
}

impl Side {
    fn new(problem: &WaveProblem, epsilon: f64, branch: Branch) -> Result<Self> {
        let field = ProfileField { problem: *problem, epsilon };
        let end = problem.end_point(branch);
        // Forward: the right end state repels along its unstable direction.
        // Backward: the left end state repels along its stable one.
        let positive = branch == Branch::Plus;
        let lambda = fast_jacobian_spectrum(problem, end, epsilon).sole_real(positive).ok_or(Error::NotASaddle)? / epsilon;
        let l = left_eigenvector(&field.jacobian(&end), lambda);
        let opts = OdeOptions { rtol: 1e-12, atol: 1e-14, h_max: 0.05, ..OdeOptions::default() };
        Ok(Side { field, end, l, dir: if positive { 1.0 } else { -1.0 }, opts })
    }

    fn project(&self, y: &[f64; 3]) -> f64 {
        (0..3).map(|i| self.l[i] * (y[i] - self.end[i])).sum()
    }

    fn run(&self, y0: [f64; 3], x_end: f64) -> Result<(f64, Vec<Sample<3>>)> {
        let mut escape = 0.0;
        let mut armed = false;
        let samples = dopri5(
            |_, y| Some(self.field.eval(y)),
            0.0,
            y0,
            self.dir * x_end,
            &self.opts,
            |s| {
                let p = self.project(&s.y);
                escape = p.signum();
                let d = super::singular::dist(&s.y, &self.end);
                armed |= d < NEAR;
                if (armed && p.abs() > ESCAPE) || d > FAR {
                    Control::Stop
                } else {
                    Control::Continue
                }
            },
        )?;
        Ok((escape, samples))
    }

    /// `w₀` on this side's manifold at `(u₀, v₀)`.
    fn tune(&self, u0: f64, v0: f64, w_guess: f64) -> Result<f64> {
        let sign = |w: f64| self.run([u0, v0, w], X_MAX).map(|r| r.0);
        let mut step = 0.05;
        let (mut lo, mut hi) = (w_guess - step, w_guess + step);
        let (mut slo, mut shi) = (sign(lo)?, sign(hi)?);
        while slo == shi || slo == 0.0 || shi == 0.0 {
            if slo == 0.0 {
                return Ok(lo);
            }
            if shi == 0.0 {
                return Ok(hi);
            }
            step *= 2.0;
            if step > 10.0 {
                return Err(Error::NoIntersection);
            }
            lo = w_guess - step;
            hi = w_guess + step;
            slo = sign(lo)?;
            shi = sign(hi)?;
        }
        while hi - lo > 1e-15 * (1.0 + w_guess.abs()) {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            let s = sign(mid)?;
            if s == 0.0 {
                return Ok(mid);
            }
            if s == slo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Shoots the profile at `epsilon`, starting the search in `v₀` from `v_guess`
/// with `w₀` near `w_guess`. Trajectories are kept on `|x| ≤ x_keep`.
pub fn shoot_profile(
    problem: &WaveProblem,
    epsilon: f64,
    u0: f64,
    v_guess: f64,
    w_guess: f64,
    x_keep: f64,
) -> Result<ShootingProfile> {
    let fwd = Side::new(problem, epsilon, Branch::Plus)?;
    let bwd = Side::new(problem, epsilon, Branch::Minus)?;
    let gap = |v: f64| -> Result<(f64, f64)> {
        let wf = fwd.tune(u0, v, w_guess)?;
        let wb = bwd.tune(u0, v, w_guess)?;
        Ok((wf - wb, wf))
    };
    // Bracket the root of the gap in v₀, then Illinois.
    let mut dv = 0.02;
    let (mut a, mut b) = (v_guess - dv, (v_guess + dv).min(-1e-6));
    let (mut fa, mut fb) = (gap(a)?.0, gap(b)?.0);
    while fa.signum() == fb.signum() {
        dv *= 2.0;
        if dv > 2.0 {
            return Err(Error::NoIntersection);
        }
        a = v_guess - dv;
        b = (v_guess + dv).min(-1e-6);
        fa = gap(a)?.0;
        fb = gap(b)?.0;
    }
    let mut side = 0;
    let mut v = b;
    let mut w = w_guess;
    for _ in 0..100 {
        v = (a * fb - b * fa) / (fb - fa);
        let (fv, wf) = gap(v)?;
        w = wf;
        if fv == 0.0 || (b - a).abs() < 1e-14 {
            break;
        }
        if fv.signum() == fb.signum() {
            b = v;
            fb = fv;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = v;
            fa = fv;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if fv.abs() < 1e-13 {
            break;
        }
    }
    let (_, forward) = fwd.run([u0, v, w], x_keep)?;
    let (_, backward) = bwd.run([u0, v, w], x_keep)?;
    Ok(ShootingProfile { epsilon, v0: v, w0: w, u0, forward, backward })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_front_has_zero_w_at_centre() {
        let p = WaveProblem::hamer(1.0, -1.0).unwrap();
        let s = shoot_profile(&p, 0.2, 0.0, -0.45, 0.0, 3.0).unwrap();
        assert!(s.w0.abs() < 1e-12);
        // u is odd about the centre.
        let (a, b) = (s.at(1.5).unwrap(), s.at(-1.5).unwrap());
        assert!((a[0] + b[0]).abs() < 1e-8 && (a[1] - b[1]).abs() < 1e-8);
    }
}

//! The ε = 0 orbit: left slow curve, fast layer, right slow curve.

use crate::error::Result;
use crate::layer::{solve_layer, LayerSolution};
use crate::model::{Branch, WaveProblem};
use crate::par::{self, Exec};
use crate::slowdyn::{find_matching_point, phase_curves, MatchingData, PhaseCurve, PhaseCurveOptions};

#[derive(Debug, Clone)]
pub struct SingularOrbit {
    pub problem: WaveProblem,
    pub left: PhaseCurve,
    pub layer: LayerSolution,
    pub right: PhaseCurve,
    pub matching: MatchingData,
}

/// Builds the singular orbit with its sub-shock at `x = 0`.
pub fn assemble_singular_orbit(problem: &WaveProblem, exec: Exec) -> Result<SingularOrbit> {
    let (left, right) = phase_curves(problem, &PhaseCurveOptions::default(), exec)?;
    let matching = find_matching_point(&left, &right)?;
    let layer = solve_layer(problem, &matching, None)?;
    Ok(SingularOrbit { problem: *problem, left, layer, right, matching })
}

impl SingularOrbit {
    /// Outer `(u, v, w)` at `x`; the left limit is returned at `x = 0`.
    pub fn outer_at(&self, x: f64) -> [f64; 3] {
        let m = &self.matching;
        let (curve, xc, branch) = if x <= 0.0 {
            (&self.left, m.x_on_minus + x, Branch::Minus)
        } else {
            (&self.right, m.x_on_plus + x, Branch::Plus)
        };
        let (lo, hi) = curve.x_range();
        if xc < lo || xc > hi {
            return self.problem.end_point(branch);
        }
        curve.at_x(xc).unwrap_or_else(|| self.problem.end_point(branch))
    }

    /// Jump of the outer `u` across the sub-shock.
    pub fn jump(&self) -> f64 {
        self.matching.u_left - self.matching.u_right
    }

    /// Outer solution with the layer inserted at width `ε` (v, w untouched).
    pub fn mollified_at(&self, x: f64, epsilon: f64) -> [f64; 3] {
        let mut p = self.outer_at(x);
        let inner = self.layer.u_at(x / epsilon);
        let end = if x <= 0.0 { self.matching.u_left } else { self.matching.u_right };
        p[0] += inner - end;
        p
    }

    /// The orbit as a polyline in `(u, v, w)`, vertices at least `spacing` apart
    /// along the slow curves; the layer is the straight segment at `(v*, w*)`.
    pub fn trace(&self, spacing: f64) -> Vec<[f64; 3]> {
        let m = &self.matching;
        let mut pts: Vec<[f64; 3]> = Vec::new();
        let mut push = |p: [f64; 3], force: bool| {
            if force || pts.last().is_none_or(|q| dist(q, &p) >= spacing) {
                pts.push(p);
            }
        };
        for s in self.left.samples.iter().filter(|s| s.x < m.x_on_minus) {
            push([s.u, s.v, s.w], false);
        }
        push([m.u_left, m.v_star, m.w_star], true);
        push([m.u_right, m.v_star, m.w_star], true);
        for s in self.right.samples.iter().filter(|s| s.x > m.x_on_plus) {
            push([s.u, s.v, s.w], false);
        }
        let last = self.right.samples.last().map(|s| [s.u, s.v, s.w]);
        if let Some(p) = last {
            push(p, true);
        }
        pts
    }
}

pub(crate) fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn point_segment(p: &[f64; 3], a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let len2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1] + (p[2] - a[2]) * d[2]) / len2).clamp(0.0, 1.0)
    };
    dist(p, &[a[0] + t * d[0], a[1] + t * d[1], a[2] + t * d[2]])
}

fn point_polyline(p: &[f64; 3], line: &[[f64; 3]]) -> f64 {
    if line.len() == 1 {
        return dist(p, &line[0]);
    }
    line.windows(2).map(|s| point_segment(p, &s[0], &s[1])).fold(f64::INFINITY, f64::min)
}

/// Hausdorff distance between two polylines, measured from the vertices of
/// each to the segments of the other.
pub fn hausdorff(a: &[[f64; 3]], b: &[[f64; 3]], exec: Exec) -> f64 {
    let ab = par::max_range(exec, a.len(), |i| point_polyline(&a[i], b));
    let ba = par::max_range(exec, b.len(), |i| point_polyline(&b[i], a));
    ab.max(ba)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hamer_orbit_shape() {
        let p = WaveProblem::hamer(1.0, -1.0).unwrap();
        let o = assemble_singular_orbit(&p, Exec::Sequential).unwrap();
        let ul = o.matching.u_left;
        assert!((o.outer_at(0.0)[0] - ul).abs() < 1e-12);
        assert!((o.outer_at(1e-12)[0] + ul).abs() < 1e-9);
        // v and w continuous across the sub-shock, w' = v on both sides.
        let (a, b) = (o.outer_at(-1e-7), o.outer_at(1e-7));
        assert!((a[1] - b[1]).abs() < 1e-6 && (a[2] - b[2]).abs() < 1e-6);
        let h = 1e-4;
        let dl = (o.outer_at(0.0)[2] - o.outer_at(-h)[2]) / h;
        let dr = (o.outer_at(h)[2] - o.outer_at(1e-15)[2]) / h;
        assert!((dl - dr).abs() < 1e-3, "{dl} {dr}");
        // Far field.
        let far = o.outer_at(-30.0);
        assert!((far[0] - 1.0).abs() < 1e-5 && far[1].abs() < 1e-5);
        let far = o.outer_at(30.0);
        assert!((far[0] + 1.0).abs() < 1e-5 && (far[2] + 1.0).abs() < 1e-5);
        // Mollified profile passes through the layer midpoint.
        assert!(o.mollified_at(0.0, 0.1)[0].abs() < 1e-12);
    }

    #[test]
    fn hausdorff_basics() {
        let a = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]];
        let b = vec![[0.0, 0.5, 0.0], [1.0, 0.5, 0.0], [1.0, 0.5, 2.0]];
        assert!((hausdorff(&a, &b, Exec::Sequential) - 2.0f64.hypot(0.5)).abs() < 1e-15);
        assert_eq!(hausdorff(&a, &a, Exec::Parallel), 0.0);
    }
}

//! Eigenvalues of the linearizations around the end states and the slow manifold.

use crate::error::{Error, Result};
use crate::linalg::{cubic_roots, C64};
use crate::model::{Branch, WaveProblem};
use nalgebra::Matrix3;
use serde::Serialize;

/// Real parts below this magnitude count as zero.
pub const ZERO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for Eigenvalue {
    fn from(z: C64) -> Self {
        Eigenvalue { re: z.re, im: z.im }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RootStructure {
    /// All roots real and pairwise separated.
    RealDistinct,
    /// One real root and a complex-conjugate pair.
    ComplexPair,
    /// Repeated roots (to tolerance).
    Repeated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    pub point: [f64; 3],
    pub epsilon: f64,
    pub eigenvalues: Vec<Eigenvalue>,
    pub n_stable: usize,
    pub n_unstable: usize,
    pub n_center: usize,
    pub structure: RootStructure,
}

impl SpectralReport {
    pub fn from_roots(point: [f64; 3], epsilon: f64, roots: &[C64]) -> Self {
        let mut n_stable = 0;
        let mut n_unstable = 0;
        let mut n_center = 0;
        for z in roots {
            if z.re.abs() < ZERO_TOL {
                n_center += 1;
            } else if z.re < 0.0 {
                n_stable += 1;
            } else {
                n_unstable += 1;
            }
        }
        let structure = if roots.iter().any(|z| z.im != 0.0) {
            RootStructure::ComplexPair
        } else {
            let scale = roots.iter().map(|z| z.re.abs()).fold(0.0, f64::max).max(1e-300);
            let mut re: Vec<f64> = roots.iter().map(|z| z.re).collect();
            re.sort_by(f64::total_cmp);
            if re.windows(2).any(|w| (w[1] - w[0]).abs() <= 1e-12 * scale) {
                RootStructure::Repeated
            } else {
                RootStructure::RealDistinct
            }
        };
        SpectralReport {
            point,
            epsilon,
            eigenvalues: roots.iter().map(|&z| z.into()).collect(),
            n_stable,
            n_unstable,
            n_center,
            structure,
        }
    }

    pub fn roots(&self) -> Vec<C64> {
        self.eigenvalues.iter().map(|e| C64::new(e.re, e.im)).collect()
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().map(|e| e.re).sum()
    }

    pub fn product(&self) -> f64 {
        self.roots().iter().product::<C64>().re
    }

    /// The single real root with the given sign, if exactly one exists.
    pub fn sole_real(&self, positive: bool) -> Option<f64> {
        let mut it = self
            .eigenvalues
            .iter()
            .filter(|e| e.im == 0.0 && e.re.abs() >= ZERO_TOL && (e.re > 0.0) == positive);
        let first = it.next()?;
        it.next().is_none().then_some(first.re)
    }
}

/// Eigenvalues of a general 3×3 matrix through its characteristic polynomial.
pub fn matrix_spectrum(a: &Matrix3<f64>, point: [f64; 3], epsilon: f64) -> SpectralReport {
    let tr = a.trace();
    let minors = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)] + a[(0, 0)] * a[(2, 2)]
        - a[(0, 2)] * a[(2, 0)]
        + a[(1, 1)] * a[(2, 2)]
        - a[(1, 2)] * a[(2, 1)];
    let det = a.determinant();
    SpectralReport::from_roots(point, epsilon, &cubic_roots(-tr, minors, -det))
}

/// Jacobian of the fast system `u̇ = F, v̇ = ε(w − g(u)), ẇ = εv` at `u`.
pub fn fast_jacobian(problem: &WaveProblem, u: f64, epsilon: f64) -> Matrix3<f64> {
    let d = problem.dfc(u);
    let dg = problem.model.dg(u);
    Matrix3::new(d, -1.0, 0.0, -epsilon * dg, 0.0, epsilon, 0.0, epsilon, 0.0)
}

/// Spectrum of the fast Jacobian: roots of `λ³ − dλ² − ε(dg + ε)λ + ε²d`,
/// with `d = df_c(u)`.
pub fn fast_jacobian_spectrum(problem: &WaveProblem, point: [f64; 3], epsilon: f64) -> SpectralReport {
    let d = problem.dfc(point[0]);
    let dg = problem.model.dg(point[0]);
    let roots = cubic_roots(-d, -epsilon * (dg + epsilon), epsilon * epsilon * d);
    SpectralReport::from_roots(point, epsilon, &roots)
}

/// Spectrum of the extended system (fast system with ε as a state) at ε = 0,
/// at a point of the slow manifold: a triple zero and `df_c(u)`.
pub fn extended_spectrum_eps0(problem: &WaveProblem, point: [f64; 3]) -> Result<SpectralReport> {
    let [u, v, _] = point;
    let residual = problem.fast_field(u, v).abs();
    if residual >= 1e-10 {
        return Err(Error::NotOnSlowManifold(residual));
    }
    let d = problem.dfc(u);
    if d.abs() < 1e-8 {
        return Err(Error::NotNormallyHyperbolic(d.abs()));
    }
    let zero = C64::new(0.0, 0.0);
    Ok(SpectralReport::from_roots(point, 0.0, &[zero, zero, zero, C64::new(d, 0.0)]))
}

/// Roots `(λ¹, λ²)` of `λ² + βλ − 1`, `λ¹ < 0 < λ²`, without cancellation.
pub fn reduced_pair(beta: f64) -> (f64, f64) {
    let s = (beta * beta + 4.0).sqrt();
    if beta >= 0.0 {
        let l1 = -0.5 * (beta + s);
        (l1, -1.0 / l1)
    } else {
        let l2 = 0.5 * (s - beta);
        (-1.0 / l2, l2)
    }
}

/// The nontrivial reduced eigenvalues at the end state of `branch`.
pub fn reduced_eigenvalues(problem: &WaveProblem, branch: Branch) -> Result<(f64, f64)> {
    let u = problem.end_state(branch);
    let d = problem.dfc(u);
    if d.abs() < 1e-8 {
        return Err(Error::NotNormallyHyperbolic(d.abs()));
    }
    Ok(reduced_pair(problem.model.dg(u) / d))
}

/// All four reduced eigenvalues `[λ₋¹, λ₊¹, λ₋², λ₊²]` after checking the chain
/// `λ₋¹ < −1 < λ₊¹ < 0 < λ₋² < 1 < λ₊²`.
pub fn reduced_ordering(problem: &WaveProblem) -> Result<[f64; 4]> {
    let (m1, m2) = reduced_eigenvalues(problem, Branch::Minus)?;
    let (p1, p2) = reduced_eigenvalues(problem, Branch::Plus)?;
    let chain = [m1, -1.0, p1, 0.0, m2, 1.0, p2];
    if let Some(k) = chain.windows(2).position(|w| !(w[0] < w[1])) {
        return Err(Error::OrderingViolated(format!(
            "chain λ₋¹={m1}, λ₊¹={p1}, λ₋²={m2}, λ₊²={p2} breaks at position {k}"
        )));
    }
    Ok([m1, p1, m2, p2])
}

/// Spectrum `{0, λ¹, λ²}` of the reduced system at `u∓`, with the ordering check.
pub fn reduced_jacobian_spectrum(problem: &WaveProblem, which: Branch) -> Result<SpectralReport> {
    let [m1, p1, m2, p2] = reduced_ordering(problem)?;
    let (l1, l2) = match which {
        Branch::Minus => (m1, m2),
        Branch::Plus => (p1, p2),
    };
    let roots = [C64::new(l1, 0.0), C64::new(0.0, 0.0), C64::new(l2, 0.0)];
    Ok(SpectralReport::from_roots(problem.end_point(which), 0.0, &roots))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Coupling, Flux, ModelSpec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn hamer() -> WaveProblem {
        WaveProblem::hamer(1.0, -1.0).unwrap()
    }

    fn cubic_problem() -> WaveProblem {
        let model = ModelSpec::new(
            Flux::Quadratic { a: 1.0, b: 0.0 },
            Coupling::PowerPlusLinear { kappa: 0.2, m: 3 },
        )
        .unwrap();
        WaveProblem::admissible(model, 1.0, -1.0).unwrap()
    }

    #[test]
    fn eps_zero_double_root() {
        let p = hamer();
        let r = fast_jacobian_spectrum(&p, [-1.0, 0.0, -1.0], 0.0);
        let mut re: Vec<f64> = r.eigenvalues.iter().map(|e| e.re).collect();
        re.sort_by(f64::total_cmp);
        assert_eq!(re, vec![-1.0, 0.0, 0.0]);
        assert_eq!((r.n_stable, r.n_center), (1, 2));
    }

    #[test]
    fn splitting_at_end_states() {
        let p = hamer();
        let plus = fast_jacobian_spectrum(&p, p.end_point(Branch::Plus), 0.1);
        assert_eq!((plus.n_stable, plus.n_unstable, plus.n_center), (2, 1, 0));
        let minus = fast_jacobian_spectrum(&p, p.end_point(Branch::Minus), 0.1);
        assert_eq!((minus.n_stable, minus.n_unstable, minus.n_center), (1, 2, 0));
    }

    #[test]
    fn agrees_with_dense_eigensolver() {
        for p in [hamer(), cubic_problem()] {
            for eps in [1e-3, 0.1, 1.0] {
                for u in [p.u_minus, p.u_plus, 0.4] {
                    let j = fast_jacobian(&p, u, eps);
                    let mut want: Vec<C64> = j.complex_eigenvalues().iter().copied().collect();
                    let got = fast_jacobian_spectrum(&p, [u, 0.0, 0.0], eps).roots();
                    for z in got {
                        let k = (0..want.len())
                            .min_by(|&a, &b| (want[a] - z).norm().total_cmp(&(want[b] - z).norm()))
                            .unwrap();
                        assert!((want[k] - z).norm() < 1e-9, "u={u} eps={eps}");
                        want.remove(k);
                    }
                    let m = matrix_spectrum(&j, [u, 0.0, 0.0], eps);
                    assert_relative_eq!(m.trace(), j.trace(), epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn extended_spectrum() {
        let p = hamer();
        let r = extended_spectrum_eps0(&p, [1.0, 0.0, 7.0]).unwrap();
        assert_eq!(r.sole_real(true), Some(1.0));
        assert_eq!(r.n_center, 3);
        let r = extended_spectrum_eps0(&p, [-1.0, 0.0, 0.0]).unwrap();
        assert_eq!(r.sole_real(false), Some(-1.0));
        // u* = 0 lies on S at v = -1/2.
        assert_eq!(
            extended_spectrum_eps0(&p, [0.0, -0.5, 0.0]),
            Err(Error::NotNormallyHyperbolic(0.0))
        );
        assert!(matches!(extended_spectrum_eps0(&p, [0.5, 0.0, 0.0]), Err(Error::NotOnSlowManifold(_))));
    }

    #[test]
    fn hamer_reduced_values() {
        let p = hamer();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let [m1, p1, m2, p2] = reduced_ordering(&p).unwrap();
        assert_relative_eq!(m1, -phi, epsilon = 1e-15);
        assert_relative_eq!(m2, phi - 1.0, epsilon = 1e-15);
        assert_relative_eq!(p1, 1.0 - phi, epsilon = 1e-15);
        assert_relative_eq!(p2, phi, epsilon = 1e-15);
        let r = reduced_jacobian_spectrum(&p, Branch::Minus).unwrap();
        assert_eq!(r.eigenvalues[1].re, 0.0);
        assert_eq!((r.n_stable, r.n_center, r.n_unstable), (1, 1, 1));
    }

    proptest! {
        #[test]
        fn trace_and_product_identities(
            u in -3.0f64..3.0, leps in -4.0f64..0.0, kappa in 0.0f64..1.0,
        ) {
            let model = ModelSpec::new(
                Flux::Quadratic { a: 1.0, b: 0.0 },
                Coupling::PowerPlusLinear { kappa, m: 3 },
            ).unwrap();
            let p = WaveProblem::admissible(model, 1.2, -0.7).unwrap();
            let eps = 10f64.powf(leps);
            let r = fast_jacobian_spectrum(&p, [u, 0.0, 0.0], eps);
            let d = p.dfc(u);
            prop_assert!((r.trace() - d).abs() <= 1e-10 * (1.0 + d.abs()));
            let want = -eps * eps * d;
            prop_assert!((r.product() - want).abs() <= 1e-10 * want.abs().max(eps * eps * 1e-3));
            prop_assert_eq!(r.n_stable + r.n_unstable + r.n_center, 3);
        }

        #[test]
        fn reduced_products_are_minus_one(beta in -50.0f64..50.0) {
            let (l1, l2) = reduced_pair(beta);
            prop_assert!((l1 * l2 + 1.0).abs() < 1e-12);
            prop_assert!((l1 * l1 + beta * l1 - 1.0).abs() < 1e-12 * (1.0 + l1 * l1));
            prop_assert!(l1 < 0.0 && l2 > 0.0);
        }

        #[test]
        fn splitting_holds_on_log_grid(k in 0usize..5, um in 0.2f64..3.0, du in 0.1f64..3.0) {
            let eps = [1e-4, 1e-3, 1e-2, 1e-1, 1.0][k];
            let p = WaveProblem::hamer(um, um - du).unwrap();
            let plus = fast_jacobian_spectrum(&p, p.end_point(Branch::Plus), eps);
            let minus = fast_jacobian_spectrum(&p, p.end_point(Branch::Minus), eps);
            prop_assert_eq!((plus.n_stable, plus.n_unstable), (2, 1));
            prop_assert_eq!((minus.n_stable, minus.n_unstable), (1, 2));
            prop_assert!(reduced_ordering(&p).is_ok());
        }
    }
}

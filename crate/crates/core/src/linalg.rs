//! Small numerical kernels: cubic roots, banded LU, tridiagonal elimination.

use crate::error::{Error, Result};
use nalgebra::Complex;

pub type C64 = Complex<f64>;

/// Roots of the monic cubic `x³ + p2 x² + p1 x + p0`.
///
/// One real root is taken in closed form (trigonometric or Cardano), polished
/// by Newton, and deflated out; the remaining quadratic is solved with the
/// cancellation-free formula. Real roots come first, sorted ascending, then the
/// complex pair with negative imaginary part first.
pub fn cubic_roots(p2: f64, p1: f64, p0: f64) -> [C64; 3] {
    let eval = |x: f64| ((x + p2) * x + p1) * x + p0;
    let deriv = |x: f64| (3.0 * x + 2.0 * p2) * x + p1;

    let shift = p2 / 3.0;
    let p = p1 - p2 * p2 / 3.0;
    let q = 2.0 * p2 * p2 * p2 / 27.0 - p2 * p1 / 3.0 + p0;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let t = if disc <= 0.0 && p < 0.0 {
        // Three real roots: take the one of largest magnitude.
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let cands = [0, 1, 2].map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos());
        let mut best = cands[0] - shift;
        for c in cands {
            if (c - shift).abs() > best.abs() {
                best = c - shift;
            }
        }
        best + shift
    } else {
        let s = disc.max(0.0).sqrt();
        (-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt()
    };
    let mut r = t - shift;
    for _ in 0..8 {
        let d = deriv(r);
        if d == 0.0 {
            break;
        }
        let next = r - eval(r) / d;
        if !next.is_finite() || eval(next).abs() >= eval(r).abs() {
            break;
        }
        r = next;
    }

    // Deflate: x³ + p2 x² + p1 x + p0 = (x − r)(x² + b1 x + b0).
    let b1 = p2 + r;
    let b0 = if r.abs() > 1e-300 && r.abs() >= 1.0 { -p0 / r } else { p1 + r * b1 };
    let [q1, q2] = quadratic_roots(b1, b0);
    let mut roots = [C64::new(r, 0.0), q1, q2];
    for z in roots.iter_mut().skip(1) {
        *z = polish(*z, p2, p1, p0);
    }
    if roots[1].im == 0.0 && roots[2].im == 0.0 {
        let mut re = [roots[0].re, roots[1].re, roots[2].re];
        re.sort_by(f64::total_cmp);
        roots = re.map(|x| C64::new(x, 0.0));
    }
    roots
}

fn polish(z: C64, p2: f64, p1: f64, p0: f64) -> C64 {
    let eval = |x: C64| ((x + p2) * x + p1) * x + p0;
    let deriv = |x: C64| (x * 3.0 + 2.0 * p2) * x + p1;
    let mut z = z;
    for _ in 0..4 {
        let d = deriv(z);
        if d.norm() == 0.0 {
            break;
        }
        let mut next = z - eval(z) / d;
        if z.im == 0.0 {
            next.im = 0.0;
        }
        if !(next.re.is_finite() && next.im.is_finite()) || eval(next).norm() >= eval(z).norm() {
            break;
        }
        z = next;
    }
    z
}

/// Roots of `x² + b x + c`.
pub fn quadratic_roots(b: f64, c: f64) -> [C64; 2] {
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let s = disc.sqrt();
        let qq = -0.5 * (b + b.signum() * s);
        let (x1, x2) = if qq == 0.0 { (0.0, 0.0) } else { (qq, c / qq) };
        let (lo, hi) = if x1 <= x2 { (x1, x2) } else { (x2, x1) };
        [C64::new(lo, 0.0), C64::new(hi, 0.0)]
    } else {
        let im = 0.5 * (-disc).sqrt();
        [C64::new(-0.5 * b, -im), C64::new(-0.5 * b, im)]
    }
}

/// Square band matrix with `kl` sub- and `ku` super-diagonals, factored in place
/// by Gaussian elimination with partial pivoting (fill-in up to `kl + ku`).
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    piv: Vec<usize>,
    factored: bool,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, width, data: vec![0.0; n * width], piv: vec![0; n], factored: false }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl, "({i},{j}) outside band");
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku + self.kl {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Adds `val` at `(i, j)`; panics outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, val: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "entry ({i},{j}) outside band");
        let k = self.idx(i, j);
        self.data[k] += val;
    }

    pub fn factor(&mut self) -> Result<()> {
        let n = self.n;
        let span = self.kl + self.ku;
        let mut scale = 0.0f64;
        for v in &self.data {
            scale = scale.max(v.abs());
        }
        for k in 0..n {
            let last = (k + self.kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=last {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= 1e-300 || best <= f64::EPSILON * 1e-4 * scale {
                return Err(Error::SingularMatrix);
            }
            self.piv[k] = p;
            let jmax = (k + span).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let a = self.idx(k, j);
                    let b = self.idx(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            for i in k + 1..=last {
                let ik = self.idx(i, k);
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                if l != 0.0 {
                    for j in k + 1..=jmax {
                        let kj = self.data[self.idx(k, j)];
                        let ij = self.idx(i, j);
                        self.data[ij] -= l * kj;
                    }
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Solves `A x = b` in place using a prior `factor`.
    pub fn solve(&self, b: &mut [f64]) {
        assert!(self.factored, "call factor() first");
        let n = self.n;
        let span = self.kl + self.ku;
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let last = (k + self.kl).min(n - 1);
            for i in k + 1..=last {
                b[i] -= self.data[self.idx(i, k)] * b[k];
            }
        }
        for i in (0..n).rev() {
            let jmax = (i + span).min(n - 1);
            let mut s = b[i];
            for j in i + 1..=jmax {
                s -= self.data[self.idx(i, j)] * b[j];
            }
            b[i] = s / self.data[self.idx(i, i)];
        }
    }
}

/// Thomas algorithm for a tridiagonal system. `lower[0]` and `upper[n-1]` are ignored.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    if n == 0 {
        return d;
    }
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector, Matrix3};
    use proptest::prelude::*;

    fn sorted_re_im(z: &[C64]) -> Vec<(f64, f64)> {
        let mut v: Vec<_> = z.iter().map(|c| (c.re, c.im)).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        v
    }

    #[test]
    fn cubic_known_roots() {
        // (x-1)(x-2)(x+3) = x³ - 7x + 6
        let r = cubic_roots(0.0, -7.0, 6.0);
        let v = sorted_re_im(&r);
        for (got, want) in v.iter().zip([-3.0, 1.0, 2.0]) {
            assert!((got.0 - want).abs() < 1e-14 && got.1 == 0.0);
        }
        // x²(x - 1): double zero.
        let r = cubic_roots(-1.0, 0.0, 0.0);
        let v = sorted_re_im(&r);
        assert_eq!(v[0], (0.0, 0.0));
        assert_eq!(v[1], (0.0, 0.0));
        assert!((v[2].0 - 1.0).abs() < 1e-15);
        // (x - 2)(x² + 1)
        let r = cubic_roots(-2.0, 1.0, -2.0);
        let v = sorted_re_im(&r);
        assert!((v[0].0).abs() < 1e-14 && (v[0].1 + 1.0).abs() < 1e-14);
        assert!((v[2].0 - 2.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn cubic_matches_companion_eigenvalues(
            p2 in -5.0f64..5.0, p1 in -5.0f64..5.0, p0 in -5.0f64..5.0,
        ) {
            let roots = cubic_roots(p2, p1, p0);
            let comp = Matrix3::new(0.0, 0.0, -p0, 1.0, 0.0, -p1, 0.0, 1.0, -p2);
            let ev = comp.complex_eigenvalues();
            let mut want: Vec<C64> = ev.iter().copied().collect();
            // Match every root to its nearest eigenvalue.
            for r in roots {
                let (k, d) = want
                    .iter()
                    .enumerate()
                    .map(|(k, e)| (k, (e - r).norm()))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                // Near-multiple roots are ill-conditioned for both methods.
                prop_assert!(d < 1e-5, "root {r} vs {:?}", want);
                want.remove(k);
            }
            // Vieta identities are the sharper check.
            let s: C64 = roots.iter().sum();
            let pr: C64 = roots.iter().product();
            prop_assert!((s.re + p2).abs() < 1e-10 * (1.0 + p2.abs()));
            prop_assert!((pr.re + p0).abs() < 1e-10 * (1.0 + p0.abs() + p1.abs() + p2.abs()));
        }
    }

    #[test]
    fn band_lu_matches_dense() {
        let n = 23;
        let (kl, ku) = (3, 2);
        let mut band = BandMatrix::zeros(n, kl, ku);
        let mut dense = DMatrix::<f64>::zeros(n, n);
        let mut seed = 12345u64;
        let mut rnd = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                // Weak diagonal forces pivoting.
                let v = if i == j { 0.01 * rnd() } else { rnd() };
                band.add(i, j, v);
                dense[(i, j)] = v;
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut x = b.clone();
        band.factor().unwrap();
        band.solve(&mut x);
        let want = dense.lu().solve(&DVector::from_vec(b)).unwrap();
        for i in 0..n {
            assert!((x[i] - want[i]).abs() < 1e-9 * (1.0 + want[i].abs()), "{i}: {} {}", x[i], want[i]);
        }
    }

    #[test]
    fn singular_band_detected() {
        let mut band = BandMatrix::zeros(3, 1, 1);
        band.add(0, 0, 1.0);
        band.add(1, 1, 1.0);
        assert_eq!(band.factor(), Err(Error::SingularMatrix));
    }

    #[test]
    fn thomas_solves_poisson() {
        let n = 50;
        let lower = vec![-1.0; n];
        let upper = vec![-1.0; n];
        let diag = vec![3.0; n];
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos()).collect();
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            rhs[i] = 3.0 * x_true[i];
            if i > 0 {
                rhs[i] -= x_true[i - 1];
            }
            if i + 1 < n {
                rhs[i] -= x_true[i + 1];
            }
        }
        let x = solve_tridiagonal(&lower, &diag, &upper, &rhs);
        for i in 0..n {
            assert!((x[i] - x_true[i]).abs() < 1e-13);
        }
    }
}

//! Adaptive Dormand–Prince 5(4) integrator for small fixed-size systems.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step magnitude; `0` picks a default from the interval length.
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-12, h_init: 0.0, h_max: f64::INFINITY, max_steps: 1_000_000 }
    }
}

/// An accepted point of the trajectory together with the field value there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub dy: [f64; N],
}

/// What to do after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    /// Keep the step and stop.
    Stop,
    /// Discard the step and stop.
    StopBefore,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` towards `t_end`.
///
/// `f` returns `None` when `y` lies outside the field's domain; the step is then
/// rejected and retried with a smaller step. `observe` sees every accepted sample
/// (including the initial one) and may stop the integration. Returns all kept samples.
pub fn dopri5<const N: usize, F, C>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &OdeOptions,
    mut observe: C,
) -> Result<Vec<Sample<N>>>
where
    F: FnMut(f64, &[f64; N]) -> Option<[f64; N]>,
    C: FnMut(&Sample<N>) -> Control,
{
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let span = (t_end - t0).abs();
    let k1 = f(t0, &y0).ok_or(Error::LeftDomain(f64::NAN))?;
    let first = Sample { t: t0, y: y0, dy: k1 };
    let mut out = vec![first];
    match observe(&first) {
        Control::Continue => {}
        Control::Stop => return Ok(out),
        Control::StopBefore => {
            out.clear();
            return Ok(out);
        }
    }
    if span == 0.0 {
        return Ok(out);
    }
    let mut h = if opts.h_init > 0.0 { opts.h_init } else { (1e-3 * span).min(1e-2) };
    h = h.min(opts.h_max).min(span);
    let (mut t, mut y, mut k1) = (t0, y0, k1);
    let mut steps = 0usize;
    let mut fsal_rejects = 0usize;
    while dir * (t_end - t) > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::StepCapExceeded(opts.max_steps));
        }
        let hmin = 16.0 * f64::EPSILON * t.abs().max(1.0);
        if h < hmin {
            return Err(Error::LeftDomain(y[0]));
        }
        if h > (t_end - t).abs() {
            h = (t_end - t).abs();
        }
        let hs = dir * h;
        let stages = (|| {
            let k2 = f(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]))?;
            let k3 = f(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]))?;
            let k4 = f(t + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
            let k5 = f(
                t + C5 * hs,
                &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            )?;
            let k6 = f(
                t + hs,
                &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            )?;
            let y_new = axpy(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = f(t + hs, &y_new)?;
            Some((k3, k4, k5, k6, k7, y_new))
        })();
        let Some((k3, k4, k5, k6, k7, y_new)) = stages else {
            h *= 0.25;
            fsal_rejects += 1;
            continue;
        };
        let mut err = 0.0;
        for i in 0..N {
            let e = hs
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / N as f64).sqrt();
        if !err.is_finite() || err > 1.0 {
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).max(0.1) } else { 0.1 };
            h *= fac;
            continue;
        }
        let t_new = if (t_end - (t + hs)).abs() <= hmin { t_end } else { t + hs };
        let sample = Sample { t: t_new, y: y_new, dy: k7 };
        match observe(&sample) {
            Control::Continue => out.push(sample),
            Control::Stop => {
                out.push(sample);
                break;
            }
            Control::StopBefore => break,
        }
        t = t_new;
        y = y_new;
        k1 = k7;
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * fac).min(opts.h_max);
    }
    log::trace!("dopri5: {} steps, {} domain rejections", steps, fsal_rejects);
    Ok(out)
}

/// Cubic Hermite interpolation between two samples.
pub fn hermite<const N: usize>(a: &Sample<N>, b: &Sample<N>, t: f64) -> [f64; N] {
    let h = b.t - a.t;
    if h == 0.0 {
        return a.y;
    }
    let s = (t - a.t) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = h00 * a.y[i] + h10 * h * a.dy[i] + h01 * b.y[i] + h11 * h * b.dy[i];
    }
    out
}

/// Finds `t` in `[a.t, b.t]` where component `k` of the Hermite interpolant hits
/// `target`, assuming it is bracketed.
pub fn hermite_solve<const N: usize>(a: &Sample<N>, b: &Sample<N>, k: usize, target: f64) -> f64 {
    let (mut lo, mut hi) = (a.t, b.t);
    let mut flo = a.y[k] - target;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = hermite(a, b, mid)[k] - target;
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

//! Flux/coupling model, end states, wave speed and the slow-manifold branches.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Root-find tolerance shared by every scalar solve in the crate.
pub const ROOT_TOL: f64 = 1e-12;

/// Convex flux `f(u) = ½ a u² + b u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Flux {
    Quadratic { a: f64, b: f64 },
}

/// Strictly increasing coupling `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Coupling {
    /// `g(u) = slope · u`
    Linear { slope: f64 },
    /// `g(u) = u + kappa · u^m` with `m` odd.
    PowerPlusLinear { kappa: f64, m: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub flux: Flux,
    pub coupling: Coupling,
}

impl ModelSpec {
    /// The Hamer model: `f(u) = u²/2`, `g(u) = u`.
    pub fn hamer() -> Self {
        ModelSpec {
            flux: Flux::Quadratic { a: 1.0, b: 0.0 },
            coupling: Coupling::Linear { slope: 1.0 },
        }
    }

    pub fn new(flux: Flux, coupling: Coupling) -> Result<Self> {
        let m = ModelSpec { flux, coupling };
        m.validate()?;
        Ok(m)
    }

    /// Checks uniform convexity of `f` and strict monotonicity of `g`.
    pub fn validate(&self) -> Result<()> {
        let Flux::Quadratic { a, b } = self.flux;
        if !(a > 0.0 && a.is_finite()) || !b.is_finite() {
            return Err(Error::InvalidInput(format!(
                "flux must be uniformly convex: need a > 0, got a = {a}"
            )));
        }
        match self.coupling {
            Coupling::Linear { slope } => {
                if !(slope > 0.0 && slope.is_finite()) {
                    return Err(Error::InvalidInput(format!(
                        "coupling must be strictly increasing: need slope > 0, got {slope}"
                    )));
                }
            }
            Coupling::PowerPlusLinear { kappa, m } => {
                if !(kappa >= 0.0 && kappa.is_finite()) {
                    return Err(Error::InvalidInput(format!("need kappa >= 0, got {kappa}")));
                }
                if m < 3 || m % 2 == 0 {
                    return Err(Error::InvalidInput(format!(
                        "power m must be an odd integer >= 3, got {m}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// True for `f = ½u² + bu`, `g = u`: the setting of the √2 sub-shock threshold.
    pub fn is_hamer(&self) -> bool {
        let Flux::Quadratic { a, .. } = self.flux;
        a == 1.0 && matches!(self.coupling, Coupling::Linear { slope } if slope == 1.0)
    }

    pub fn f(&self, u: f64) -> f64 {
        let Flux::Quadratic { a, b } = self.flux;
        0.5 * a * u * u + b * u
    }

    pub fn df(&self, u: f64) -> f64 {
        let Flux::Quadratic { a, b } = self.flux;
        a * u + b
    }

    pub fn d2f(&self, _u: f64) -> f64 {
        let Flux::Quadratic { a, .. } = self.flux;
        a
    }

    pub fn g(&self, u: f64) -> f64 {
        match self.coupling {
            Coupling::Linear { slope } => slope * u,
            Coupling::PowerPlusLinear { kappa, m } => u + kappa * u.powi(m as i32),
        }
    }

    pub fn dg(&self, u: f64) -> f64 {
        match self.coupling {
            Coupling::Linear { slope } => slope,
            Coupling::PowerPlusLinear { kappa, m } => 1.0 + kappa * m as f64 * u.powi(m as i32 - 1),
        }
    }
}

/// `(f(u₊) − f(u₋)) / (u₊ − u₋)`, evaluated in factored form so that weak
/// jumps do not lose digits to cancellation.
pub fn rankine_hugoniot_speed(model: &ModelSpec, u_minus: f64, u_plus: f64) -> Result<f64> {
    if u_minus == u_plus {
        return Err(Error::EqualStates(u_minus));
    }
    let Flux::Quadratic { a, b } = model.flux;
    Ok(0.5 * a * (u_plus + u_minus) + b)
}

/// Unique state with `df(u*) = c`; closed form for the quadratic flux.
pub fn sonic_point(model: &ModelSpec, c: f64) -> f64 {
    let Flux::Quadratic { a, b } = model.flux;
    (c - b) / a
}

/// Slow-manifold branch: `Minus` carries the left end state (`df_c > 0`),
/// `Plus` the right one (`df_c < 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Minus,
    Plus,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::Minus => "minus",
            Branch::Plus => "plus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaxReport {
    pub lax_ok: bool,
    pub laxbis_ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubshockExpectation {
    Yes,
    No,
    Unknown,
}

/// End states, speed and the derived co-moving flux data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveProblem {
    pub model: ModelSpec,
    pub u_minus: f64,
    pub u_plus: f64,
    pub c: f64,
    pub u_star: f64,
    pub fc_plateau: f64,
    pub epsilon: f64,
}

impl WaveProblem {
    /// Builds the problem at `epsilon = 0`. Reversed (non-Lax) jumps are allowed
    /// here so they can be reported by [`check_lax`]; use [`WaveProblem::admissible`]
    /// to reject them.
    pub fn new(model: ModelSpec, u_minus: f64, u_plus: f64) -> Result<Self> {
        model.validate()?;
        if !u_minus.is_finite() || !u_plus.is_finite() {
            return Err(Error::InvalidInput("end states must be finite".into()));
        }
        let c = rankine_hugoniot_speed(&model, u_minus, u_plus)?;
        let u_star = sonic_point(&model, c);
        let fc_plateau = model.f(u_minus) - c * u_minus;
        Ok(WaveProblem { model, u_minus, u_plus, c, u_star, fc_plateau, epsilon: 0.0 })
    }

    /// Same as [`WaveProblem::new`] but also enforces the Lax condition.
    pub fn admissible(model: ModelSpec, u_minus: f64, u_plus: f64) -> Result<Self> {
        let p = Self::new(model, u_minus, u_plus)?;
        p.require_lax()?;
        Ok(p)
    }

    pub fn hamer(u_minus: f64, u_plus: f64) -> Result<Self> {
        Self::new(ModelSpec::hamer(), u_minus, u_plus)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidInput(format!("epsilon must be >= 0, got {epsilon}")));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    pub fn require_lax(&self) -> Result<()> {
        if check_lax(self).lax_ok {
            Ok(())
        } else {
            Err(Error::LaxViolated { u_minus: self.u_minus, u_plus: self.u_plus })
        }
    }

    /// Shifted flux `f_c(u) = f(u) − c u`.
    pub fn fc(&self, u: f64) -> f64 {
        self.model.f(u) - self.c * u
    }

    pub fn dfc(&self, u: f64) -> f64 {
        self.model.df(u) - self.c
    }

    /// `F(u, v) = f_c(u) − f_c(u±) − v`, the fast component of the slow system.
    pub fn fast_field(&self, u: f64, v: f64) -> f64 {
        self.fc(u) - self.fc_plateau - v
    }

    /// Lower end of the slow-value domain shared by both branches.
    pub fn branch_domain_bound(&self) -> f64 {
        self.fc(self.u_star) - self.fc_plateau
    }

    /// Equilibrium `(u, 0, g(u))` at the left or right end state.
    pub fn end_point(&self, branch: Branch) -> [f64; 3] {
        let u = self.end_state(branch);
        [u, 0.0, self.model.g(u)]
    }

    pub fn end_state(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Minus => self.u_minus,
            Branch::Plus => self.u_plus,
        }
    }

    /// Bracket width used by [`branch_inverse`].
    fn branch_span(&self) -> f64 {
        (self.u_minus - self.u_plus).abs() + 2.0
    }
}

/// Lax admissibility in the original and the co-moving form.
pub fn check_lax(problem: &WaveProblem) -> LaxReport {
    let m = &problem.model;
    let c = problem.c;
    LaxReport {
        lax_ok: m.df(problem.u_plus) < c && c < m.df(problem.u_minus),
        laxbis_ok: problem.dfc(problem.u_plus) < 0.0 && 0.0 < problem.dfc(problem.u_minus),
    }
}

/// Inverse `h±(v)` of the constraint `f_c(u) − f_c(u±) = v` on the chosen branch.
///
/// Safeguarded Newton iteration inside a sign-changing bracket on the branch's
/// side of the sonic point.
pub fn branch_inverse(problem: &WaveProblem, branch: Branch, v: f64) -> Result<f64> {
    let bound = problem.branch_domain_bound();
    let tol = 4.0 * f64::EPSILON * (1.0 + bound.abs());
    if !(v > bound + tol) || !v.is_finite() {
        return Err(Error::OutOfDomain { v, bound });
    }
    let phi = |u: f64| problem.fast_field(u, v);
    let u_star = problem.u_star;
    // Orient so that phi is increasing on [lo, hi].
    let sign = match branch {
        Branch::Minus => 1.0,
        Branch::Plus => -1.0,
    };
    let mut span = problem.branch_span();
    let far = |s: f64| u_star + sign * s;
    // phi is positive far out on either branch.
    while phi(far(span)) <= 0.0 {
        span *= 2.0;
        if !span.is_finite() {
            return Err(Error::OutOfDomain { v, bound });
        }
    }
    let (mut lo, mut hi) = match branch {
        Branch::Minus => (u_star, far(span)),
        Branch::Plus => (far(span), u_star),
    };
    // psi is increasing on [lo, hi] and changes sign there.
    let psi = |u: f64| sign * phi(u);
    let mut u = match branch {
        Branch::Minus => problem.u_minus.max(u_star + 1e-3 * span).min(hi),
        Branch::Plus => problem.u_plus.min(u_star - 1e-3 * span).max(lo),
    };
    for _ in 0..200 {
        let r = psi(u);
        if r == 0.0 {
            return Ok(u);
        }
        if r < 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let d = sign * problem.dfc(u);
        let mut next = if d != 0.0 { u - r / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let converged = (next - u).abs() <= 2.0 * f64::EPSILON * (1.0 + u.abs());
        u = next;
        if converged || hi - lo <= 2.0 * f64::EPSILON * (1.0 + u.abs()) {
            break;
        }
    }
    Ok(u)
}

/// Sub-shock expectation for the Hamer model (`|u₊ − u₋| > √2`); `Unknown` otherwise.
pub fn subshock_expected(problem: &WaveProblem) -> SubshockExpectation {
    if !problem.model.is_hamer() {
        return SubshockExpectation::Unknown;
    }
    if (problem.u_plus - problem.u_minus).abs() > std::f64::consts::SQRT_2 {
        SubshockExpectation::Yes
    } else {
        SubshockExpectation::No
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn hamer_speeds() {
        let m = ModelSpec::hamer();
        assert_eq!(rankine_hugoniot_speed(&m, 1.0, -1.0).unwrap(), 0.0);
        assert_eq!(rankine_hugoniot_speed(&m, 2.0, 0.0).unwrap(), 1.0);
        let m2 = ModelSpec::new(Flux::Quadratic { a: 1.0, b: 1.0 }, Coupling::Linear { slope: 1.0 })
            .unwrap();
        assert_relative_eq!(rankine_hugoniot_speed(&m2, 1.0, -1.0).unwrap(), 1.0);
        assert_eq!(rankine_hugoniot_speed(&m, 0.3, 0.3), Err(Error::EqualStates(0.3)));
    }

    #[test]
    fn lax_flags() {
        let p = WaveProblem::hamer(1.0, -1.0).unwrap();
        assert_eq!(check_lax(&p), LaxReport { lax_ok: true, laxbis_ok: true });
        let p = WaveProblem::hamer(-1.0, 1.0).unwrap();
        assert_eq!(check_lax(&p), LaxReport { lax_ok: false, laxbis_ok: false });
        assert!(p.require_lax().is_err());
        let p = WaveProblem::hamer(0.2 + 1e-9, 0.2).unwrap();
        assert_eq!(check_lax(&p), LaxReport { lax_ok: true, laxbis_ok: true });
    }

    #[test]
    fn sonic_points() {
        assert_eq!(sonic_point(&ModelSpec::hamer(), 0.0), 0.0);
        let m = ModelSpec::new(Flux::Quadratic { a: 2.0, b: 0.0 }, Coupling::Linear { slope: 1.0 })
            .unwrap();
        assert_eq!(sonic_point(&m, 1.0), 0.5);
        let m = ModelSpec::new(Flux::Quadratic { a: 1.0, b: 3.0 }, Coupling::Linear { slope: 1.0 })
            .unwrap();
        assert_eq!(sonic_point(&m, 3.0), 0.0);
    }

    #[test]
    fn hamer_branch_inverse() {
        let p = WaveProblem::hamer(1.0, -1.0).unwrap();
        assert_relative_eq!(branch_inverse(&p, Branch::Minus, 0.0).unwrap(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(branch_inverse(&p, Branch::Plus, 0.0).unwrap(), -1.0, epsilon = 1e-14);
        assert_relative_eq!(branch_inverse(&p, Branch::Minus, -0.375).unwrap(), 0.5, epsilon = 1e-14);
        assert!(matches!(branch_inverse(&p, Branch::Minus, -0.5), Err(Error::OutOfDomain { .. })));
        assert!(matches!(branch_inverse(&p, Branch::Plus, -0.7), Err(Error::OutOfDomain { .. })));
        for v in [-0.49f64, -0.2, 0.3, 5.0, 1e3] {
            let exact = (1.0 + 2.0 * v).sqrt();
            assert_relative_eq!(branch_inverse(&p, Branch::Minus, v).unwrap(), exact, epsilon = 1e-12);
            assert_relative_eq!(branch_inverse(&p, Branch::Plus, v).unwrap(), -exact, epsilon = 1e-12);
        }
    }

    #[test]
    fn subshock_flags() {
        let p = WaveProblem::hamer(1.0, -1.0).unwrap();
        assert_eq!(subshock_expected(&p), SubshockExpectation::Yes);
        let p = WaveProblem::hamer(0.5, -0.5).unwrap();
        assert_eq!(subshock_expected(&p), SubshockExpectation::No);
        let m = ModelSpec::new(
            Flux::Quadratic { a: 1.0, b: 0.0 },
            Coupling::PowerPlusLinear { kappa: 0.2, m: 3 },
        )
        .unwrap();
        let p = WaveProblem::new(m, 1.0, -1.0).unwrap();
        assert_eq!(subshock_expected(&p), SubshockExpectation::Unknown);
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(ModelSpec::new(Flux::Quadratic { a: 0.0, b: 0.0 }, Coupling::Linear { slope: 1.0 })
            .is_err());
        assert!(ModelSpec::new(Flux::Quadratic { a: 1.0, b: 0.0 }, Coupling::Linear { slope: -1.0 })
            .is_err());
        assert!(ModelSpec::new(
            Flux::Quadratic { a: 1.0, b: 0.0 },
            Coupling::PowerPlusLinear { kappa: 1.0, m: 4 }
        )
        .is_err());
    }

    fn arb_model() -> impl Strategy<Value = ModelSpec> {
        (0.2f64..3.0, -1.0f64..1.0, prop_oneof![Just(None), (0.0f64..1.0).prop_map(Some)]).prop_map(
            |(a, b, kappa)| ModelSpec {
                flux: Flux::Quadratic { a, b },
                coupling: match kappa {
                    None => Coupling::Linear { slope: 1.0 + a },
                    Some(kappa) => Coupling::PowerPlusLinear { kappa, m: 3 },
                },
            },
        )
    }

    proptest! {
        #[test]
        fn branch_round_trip_and_sign(model in arb_model(), um in 0.1f64..3.0, du in 0.1f64..3.0, t in 0.001f64..4.0) {
            let p = WaveProblem::new(model, um, um - du).unwrap();
            let bound = p.branch_domain_bound();
            let v = bound + t * (p.fc_plateau.abs() + 1.0);
            for br in [Branch::Minus, Branch::Plus] {
                let h = branch_inverse(&p, br, v).unwrap();
                let scale = 1.0 + v.abs() + p.fc_plateau.abs();
                prop_assert!(p.fast_field(h, v).abs() < 1e-12 * scale);
                match br {
                    Branch::Minus => prop_assert!(h > p.u_star && p.dfc(h) > 0.0),
                    Branch::Plus => prop_assert!(h < p.u_star && p.dfc(h) < 0.0),
                }
            }
        }

        #[test]
        fn speed_symmetric_and_closed_form(model in arb_model(), um in -3.0f64..3.0, up in -3.0f64..3.0) {
            prop_assume!((um - up).abs() > 1e-3);
            let c1 = rankine_hugoniot_speed(&model, um, up).unwrap();
            let c2 = rankine_hugoniot_speed(&model, up, um).unwrap();
            prop_assert_eq!(c1, c2);
            let quotient = (model.f(up) - model.f(um)) / (up - um);
            prop_assert!((c1 - quotient).abs() <= 1e-10 * (1.0 + quotient.abs()));
            let p = WaveProblem::new(model, um, up).unwrap();
            prop_assert!((p.fc(um) - p.fc(up)).abs() <= 1e-12 * (1.0 + p.fc_plateau.abs()));
            prop_assert!(p.dfc(p.u_star).abs() < 1e-12);
            let lax = check_lax(&p);
            prop_assert_eq!(lax.lax_ok, lax.laxbis_ok);
            prop_assert_eq!(lax.lax_ok, up < um);
        }
    }
}

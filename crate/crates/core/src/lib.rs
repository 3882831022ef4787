//! Traveling-wave fronts for the viscous Hamer-type parabolic–elliptic system
//!
//! ```text
//! u_t + f(u)_x - ε u_xx = v_x,    v - v_xx = g(u)_x
//! ```
//!
//! The crate builds the inviscid sub-shock profile from its slow pieces and
//! fast layer, continues it to ε > 0 by collocation, analyses the small-shock
//! transcritical regime at ε = 1, and cross-checks fronts with a finite-volume
//! evolution of the PDE.

pub mod bifurc;
pub mod error;
pub mod hetero;
pub mod layer;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod par;
pub mod pdecheck;
pub mod slowdyn;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{Branch, Coupling, Flux, ModelSpec, WaveProblem};

use thiserror::Error;

/// Failure modes shared by every stage of the pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("end states coincide (u_minus = u_plus = {0}); no front exists")]
    EqualStates(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("Lax condition violated: need u_plus < u_minus, got u_minus = {u_minus}, u_plus = {u_plus}")]
    LaxViolated { u_minus: f64, u_plus: f64 },
    #[error("slow value {v} outside the branch domain (must exceed {bound})")]
    OutOfDomain { v: f64, bound: f64 },
    #[error("point is not on the slow manifold (|F| = {0:e})")]
    NotOnSlowManifold(f64),
    #[error("slow manifold is not normally hyperbolic here (|df_c| = {0:e})")]
    NotNormallyHyperbolic(f64),
    #[error("reduced eigenvalue ordering violated: {0}")]
    OrderingViolated(String),
    #[error("equilibrium of the reduced planar system is not a saddle")]
    NotASaddle,
    #[error("integration step cap of {0} steps exceeded")]
    StepCapExceeded(usize),
    #[error("trajectory left the branch domain at v = {0}")]
    LeftDomain(f64),
    #[error("reduced phase curves do not intersect (shock below the sub-shock threshold)")]
    NoIntersection,
    #[error("reduced phase curves intersect {0} times")]
    MultipleIntersections(usize),
    #[error("layer vector field is not negative between its roots")]
    WrongSignStructure,
    #[error("transversality determinant vanishes ({0:e})")]
    DegenerateTransversality(f64),
    #[error("adjoint solution does not grow in both directions (rates {0}, {1})")]
    BoundedAdjoint(f64, f64),
    #[error("Newton iteration diverged after {iterations} iterations (residual {residual:e}); try a smaller epsilon step or a larger domain")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("boundary defect {0:e} too large; increase the domain half-length")]
    BoundaryDefectTooLarge(f64),
    #[error("epsilon continuation stalled near epsilon = {0}")]
    ContinuationStalled(f64),
    #[error("Sotomayor condition ({which}) failed: value {value}")]
    ConditionFailed { which: &'static str, value: f64 },
    #[error("normal form fit residual {0:e} too large")]
    FitResidualTooLarge(f64),
    #[error("not implemented for this model: {0}")]
    NotImplemented(&'static str),
    #[error("time step {dt} violates the CFL bound {bound}")]
    CflViolated { dt: f64, bound: f64 },
    #[error("front left the computational domain")]
    FrontLeftDomain,
    #[error("singular linear system")]
    SingularMatrix,
    #[error("matching point fails its admissibility checks: {0}")]
    InvalidMatching(String),
}

pub type Result<T> = std::result::Result<T, Error>;

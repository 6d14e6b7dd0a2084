use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("singular matrix: smallest pivot {pivot:e} against scale {scale:e}")]
    SingularMatrix { pivot: f64, scale: f64 },

    #[error("eigenvalue iteration did not converge: {0}")]
    ConvergenceFailure(String),

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:e})")]
    AsymmetricInput { asymmetry: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("jωI − A is singular at ω = {omega}")]
    SingularAtFrequency { omega: f64 },

    #[error("frequency grid is empty")]
    EmptyGrid,

    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),

    #[error("Hamiltonian test requires CB + BᵀCᵀ > 0 (smallest eigenvalue {min_eigenvalue:e})")]
    PreconditionQ0 { min_eigenvalue: f64 },

    #[error("B + A·Y·Cᵀ = 0 has no symmetric solution (relative residual {relative_residual:e})")]
    EqualityInfeasible { relative_residual: f64 },

    #[error("certificate search inconclusive after {iterations} iterations (best φ = {best_phi:e})")]
    SearchInconclusive { best_phi: f64, iterations: usize },

    #[error("state outside the HIGS sector: {0}")]
    OutsideSector(String),

    #[error("parameter violation: {0}")]
    ParameterViolation(String),

    #[error("Lyapunov function is not positive definite: {0}")]
    PreconditionDefiniteness(String),

    #[error("switching rate exceeded {limit} per second at t = {time}")]
    ZenoGuard { time: f64, limit: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("plant is not SISO ({inputs} inputs, {outputs} outputs)")]
    NotSiso { inputs: usize, outputs: usize },

    #[error("plant is not square: {0}")]
    NotSquare(String),

    #[error("no feasible gain: largest DC-gain eigenvalue {largest_eigenvalue:e}")]
    Infeasible { largest_eigenvalue: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),
}

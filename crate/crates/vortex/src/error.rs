//! Error type shared by all modules, plus the CLI exit-code classification.

use thiserror::Error;

/// Everything that can go wrong across the library.
#[derive(Debug, Error)]
pub enum VortexError {
    #[error("circulation/position dimension mismatch: {expected} vortices expected, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("vortex strength Γ_{index} must be nonzero")]
    InvalidCirculation { index: usize },

    #[error("vortices {i} and {j} collide (distance {distance:.3e} below floor {floor:.3e})")]
    Collision {
        i: usize,
        j: usize,
        distance: f64,
        floor: f64,
    },

    #[error("vortex {index} at ({x:.6}, {y:.6}) lies outside the domain")]
    OutsideDomain { index: usize, x: f64, y: f64 },

    #[error("Newton did not converge: residual {residual:.3e} after {iterations} iterations")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("Jacobian singular beyond the pinned directions (estimated extra kernel dimension {kernel_dim})")]
    SingularJacobian { kernel_dim: usize },

    #[error("eigenvalue {re:.6e}{im:+.6e}i sits {distance:.3e} from the lattice iωZ, inside the ambiguity band ({tol:.1e}, {band:.1e}]")]
    ToleranceAmbiguity {
        re: f64,
        im: f64,
        distance: f64,
        tol: f64,
        band: f64,
    },

    #[error("configuration is not fixed by the prescribed symmetry (defect {defect:.3e} > tol {tol:.1e})")]
    NotSymmetric { defect: f64, tol: f64 },

    #[error("kernel count did not stabilize under truncation refinement: {count_n} at n={n}, {count_2n} at n={n2}")]
    TruncationUnstable {
        n: usize,
        n2: usize,
        count_n: usize,
        count_2n: usize,
    },

    #[error("∇h vanishes on the test contour (sample {sample})")]
    ZeroOnContour { sample: usize },

    #[error("winding number ambiguous: accumulated angle {raw:.6} not within 0.1 of an integer multiple of 2π")]
    AmbiguousWinding { raw: f64 },

    #[error("vortex strengths of the loop do not match the system")]
    StrengthMismatch,

    #[error("collision on the loop at sample {sample} (distance {distance:.3e})")]
    CollisionOnLoop { sample: usize, distance: f64 },

    #[error("loop leaves the domain at sample {sample}")]
    OutsideDomainOnLoop { sample: usize },

    #[error("seed rejected: {reason}")]
    SeedRejected { reason: String },

    #[error("not applicable: {reason}")]
    NotApplicable { reason: String },

    #[error("isotypical block {k} is singular (smallest singular value {sigma_min:.3e})")]
    SingularBlock { k: i32, sigma_min: f64 },

    #[error("orbit is degenerate: slice Jacobian has smallest singular value {sigma_min:.3e}")]
    DegenerateOrbit { sigma_min: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used for the CLI's exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitClass {
    /// Malformed or inconsistent input (exit 2).
    ConfigError,
    /// Well-posed problem, numerics failed (exit 3).
    NumericalFailure,
    /// Well-posed input, mathematically rejected (exit 4).
    InfeasibleProblem,
}

impl ExitClass {
    pub fn code(self) -> i32 {
        match self {
            ExitClass::ConfigError => 2,
            ExitClass::NumericalFailure => 3,
            ExitClass::InfeasibleProblem => 4,
        }
    }
}

impl VortexError {
    /// Which exit class this error belongs to when surfaced by the CLI.
    pub fn exit_class(&self) -> ExitClass {
        use VortexError::*;
        match self {
            DimensionMismatch { .. } | InvalidCirculation { .. } | Config(_) | Json(_) => {
                ExitClass::ConfigError
            }
            Io(_) => ExitClass::ConfigError,
            OutsideDomain { .. }
            | NotSymmetric { .. }
            | StrengthMismatch
            | SeedRejected { .. }
            | NotApplicable { .. }
            | SingularBlock { .. }
            | DegenerateOrbit { .. }
            | ZeroOnContour { .. } => ExitClass::InfeasibleProblem,
            Collision { .. }
            | NoConvergence { .. }
            | SingularJacobian { .. }
            | ToleranceAmbiguity { .. }
            | TruncationUnstable { .. }
            | AmbiguousWinding { .. }
            | CollisionOnLoop { .. }
            | OutsideDomainOnLoop { .. } => ExitClass::NumericalFailure,
        }
    }
}

pub type Result<T> = std::result::Result<T, VortexError>;

use std::fmt;

use thiserror::Error;

use crate::reconstruct::IterationTrace;

/// The three manifolds the library works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Manifold {
    S2,
    S2xS2,
    SO3,
}

impl Manifold {
    /// Topological dimension.
    pub fn dim(self) -> usize {
        match self {
            Manifold::S2 => 2,
            Manifold::S2xS2 => 4,
            Manifold::SO3 => 3,
        }
    }

    /// Operator-scale constant `a` of the Sobolev operator `(I - a*L)`.
    pub fn sobolev_scale(self) -> f64 {
        match self {
            Manifold::S2 => 1.0,
            Manifold::S2xS2 => 2.0,
            Manifold::SO3 => 4.0,
        }
    }

    pub fn parse(s: &str) -> Option<Manifold> {
        match s {
            "S2" => Some(Manifold::S2),
            "S2xS2" => Some(Manifold::S2xS2),
            "SO3" => Some(Manifold::SO3),
            _ => None,
        }
    }
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Manifold::S2 => "S2",
            Manifold::S2xS2 => "S2xS2",
            Manifold::SO3 => "SO3",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("harmonic index out of range: k={k}, i={i}, j={j:?}")]
    IndexOutOfRange { k: usize, i: usize, j: Option<usize> },

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("integer overflow computing {0}")]
    Overflow(String),

    #[error("manifold mismatch: expected {expected}, found {found}")]
    ManifoldMismatch { expected: Manifold, found: Manifold },

    #[error("input is not even: degree {degree} carries magnitude {magnitude:e}")]
    NotEven { degree: usize, magnitude: f64 },

    #[error("input is not odd: degree {degree} carries magnitude {magnitude:e}")]
    NotOdd { degree: usize, magnitude: f64 },

    #[error("input is outside the diagonal subspace: degree pair ({k1}, {k2}) carries magnitude {magnitude:e}")]
    NotDiagonal { k1: usize, k2: usize, magnitude: f64 },

    #[error("degree {degree} lies beyond the multiplier table (max {max})")]
    BeyondTable { degree: usize, max: usize },

    #[error("lattice generation failed: covering radius {covering_radius} exceeds target {target}")]
    LatticeGeneration { covering_radius: f64, target: f64 },

    #[error("operation requires a symmetric (antipodally closed) lattice")]
    NotSymmetric,

    #[error("smoothness t={t} too small for series convergence; need t > {min_t}")]
    SmoothnessTooSmall { t: f64, min_t: f64 },

    #[error("Gram matrix is not positive definite (smallest eigenvalue estimate {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("cubature infeasible: residual {residual:e}, worst moment index {worst_moment}")]
    CubatureInfeasible { residual: f64, worst_moment: usize },

    #[error("cubature exactness {available} insufficient; need at least {required}")]
    InsufficientExactness { required: f64, available: f64 },

    #[error("sample weights must be strictly positive")]
    NonPositiveWeight,

    #[error("cubature certificate absent")]
    CertificateMissing,

    #[error("sampling is rank deficient: lower frame bound {lower:e}")]
    RankDeficient { lower: f64 },

    #[error("iteration diverged at step {}", trace.steps)]
    Divergence { trace: Box<IterationTrace> },

    #[error("frame level {level}: {source}")]
    FrameLevel {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("bandwidth {found} exceeds coverage {coverage}")]
    BandwidthExceeded { found: f64, coverage: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

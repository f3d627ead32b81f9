use crate::CVec;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("not hermitian: max |A[i][j] - conj(A[j][i])| = {defect:.3e} exceeds tolerance {tol:.1e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("eigen routine did not converge (dim {dim}, residual {residual:.3e})")]
    EigenFailure { dim: usize, residual: f64 },

    #[error("not positive semidefinite: eigenvalue {min_eigenvalue:.6e} below -{tol:.1e}")]
    NotPsd {
        min_eigenvalue: f64,
        tol: f64,
        witness: CVec,
    },

    #[error("Schwartz condition violated on side {side}: min eigenvalue of gram(L {side} K) = {min_eigenvalue:.6e}")]
    SchwartzViolation {
        /// "+" when L+K fails, "-" when L-K fails.
        side: &'static str,
        min_eigenvalue: f64,
        witness: CVec,
    },

    #[error("null space of L is not contained in null space of K: residual {residual:.3e} exceeds {tol:.1e}")]
    NullSpaceInconsistency { residual: f64, tol: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("kernel not invariant under generator '{generator}' at labels ({x}, {y}): defect {defect:.3e}")]
    InvarianceViolation {
        generator: String,
        x: String,
        y: String,
        defect: f64,
    },

    #[error("inconsistent linear system for {what}: residual {residual:.3e}")]
    InconsistentSystem { what: String, residual: f64 },

    #[error("decomposition is not minimal: stacked factor rank {rank} below model dimension {k}")]
    NotMinimal { rank: usize, k: usize },

    #[error("no unitary equivalence: residual {residual:.3e}")]
    NoEquivalence { residual: f64 },

    #[error("missing moment for word {word}")]
    MissingMoment { word: String },

    #[error("moments not hermitian at word {word}: |s[rev(w)] - conj(s[w])| = {defect:.3e}")]
    NonHermitianMoments { word: String, defect: f64 },

    #[error("out of truncated domain: {0}")]
    OutOfDomain(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

//! Frobenius-algebra-valued KP hierarchy toolkit.
//!
//! The crate is organised around five layers:
//!
//! * [`frobenius`] — exact arithmetic for finite-dimensional commutative
//!   Frobenius algebras (structure constants, trace forms, inversion).
//! * [`jet`] — differential polynomials in jet variables with rational
//!   coefficients, the total derivative and the Euler (variational) operator.
//! * [`psido`] — algebra-valued pseudo-differential operators with explicit
//!   truncation bookkeeping, plus the Lax machinery built on top of them
//!   ([`hierarchy`], [`hamiltonian`]).
//! * [`dkp`] — the dispersionless twin, with Laurent symbols in `p` and the
//!   canonical Poisson bracket in place of operator composition.
//! * [`soliton`] — numeric verification of the closed-form tau-function
//!   soliton via truncated Taylor-jet arithmetic.

pub mod dkp;
pub mod frobenius;
pub mod hamiltonian;
pub mod hierarchy;
pub mod jet;
pub mod psido;
pub mod report;
pub mod soliton;

pub use frobenius::{AlgebraElement, AlgebraRef, FrobeniusAlgebra, Rat};
pub use jet::{Functional, JetPoly, JetVar};
pub use psido::{GradOperator, PsiDO};

/// Errors shared across the symbolic layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("algebra mismatch: {0} vs {1}")]
    AlgebraMismatch(String, String),
    #[error("coordinate vector has length {got}, algebra dimension is {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("element is not invertible")]
    NotInvertible,
    #[error("exact exponential requires a nilpotent element")]
    NonNilpotentExp,
    #[error("trust window underflow: order {requested} is below certified minimum {trusted_min}")]
    TrustUnderflow { requested: i64, trusted_min: i64 },
    #[error("operator is not monic of order {0}")]
    NotMonic(i64),
    #[error("degenerate trace form: Gram matrix is singular")]
    DegenerateTrace,
    #[error("invalid algebra specification: {0}")]
    BadAlgebraSpec(String),
    #[error("flow rule missing for field {0}[{1}]")]
    MissingFlowRule(String, u8),
    #[error("density is not a total x-derivative")]
    NotExactDerivative,
    #[error("convention mismatch in Dirac completion: {0}")]
    DiracMismatch(String),
    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, Error>;

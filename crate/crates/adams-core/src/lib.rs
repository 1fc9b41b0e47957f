//! Numerics for sharp exponential-integrability inequalities on radial
//! metric measure spaces.
//!
//! The library provides, at desk scale:
//!
//! * volume profiles for Euclidean space, the Heisenberg group (Korányi
//!   norm), and user-tabulated radial spaces ([`space`]);
//! * decreasing rearrangements, distribution functions, and level-set
//!   machinery for radial grid functions ([`rearrange`]);
//! * Riesz-like kernels with numerical certification of their log-growth
//!   normalization constants ([`kernel`]);
//! * potential operators, the O'Neil upper bound, the truncated potential,
//!   and the annuli decomposition used in exact-growth estimates
//!   ([`potential`], [`annuli`]);
//! * sharp Moser–Trudinger/Adams constants and the regularized exponential
//!   functionals with exact growth denominators ([`mt`]);
//! * the discrete constrained-minimization lemma behind the exact growth
//!   condition ([`seqlemma`]);
//! * extremal families (truncated logarithms, kernel powers) and blow-up
//!   probes ([`extremal`]);
//! * machine-readable verification reports and suite runners ([`report`],
//!   [`suites`]).

pub mod annuli;
pub mod extremal;
pub mod gridfn;
pub mod interp;
pub mod kernel;
pub mod mt;
pub mod potential;
pub mod quad;
pub mod rearrange;
pub mod report;
pub mod seqlemma;
pub mod space;
pub mod special;
pub mod suites;
pub mod synth;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A value is outside the representable/attainable range of a profile.
    #[error("range error: {0}")]
    Range(String),
    /// A constrained problem has no feasible point.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// Malformed input data (CSV/JSON/config).
    #[error("parse error: {0}")]
    Parse(String),
    /// I/O failure, with path context where available.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub(crate) fn range(msg: impl Into<String>) -> Self {
        Error::Range(msg.into())
    }
}

use crate::angle::Angle;
use num_complex::Complex64;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),
    #[error("invalid angle: {0}")]
    InvalidAngle(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("cap exceeded: {0}")]
    CapExceeded(String),
    #[error("root finder did not converge after {iterations} iterations (worst residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("duplicate-root ambiguity: roots {0} and {1} closer than the separation threshold; use a smaller tol")]
    DuplicateRoots(Complex64, Complex64),
    #[error("neutral cycle (|multiplier| = {0:.12}) violates the no-neutral-cycle hypothesis")]
    NeutralCycle(f64),
    #[error("below critical equipotential: potential {potential:.3e} <= r_f = {critical_level:.3e}")]
    BelowCriticalLevel { potential: f64, critical_level: f64 },
    #[error("ray {0} suspected to bifurcate (Newton continuation failed repeatedly)")]
    Bifurcation(Angle),
    #[error("ray {angle} could not be certified: {reason}")]
    Uncertified { angle: Angle, reason: String },
    #[error("angle universes differ: {0}")]
    UniverseMismatch(String),
    #[error("not a geometric ray pair: {0}")]
    NotARayPair(String),
    #[error("no admissible set found at desk scale: {summary}")]
    NoAdmissibleSet { summary: String, near_misses: Vec<String> },
    #[error("no superattracting cycle through the critical point 0")]
    NoSuperattractingCycle,
    #[error("internal Böttcher construction failed: {0}")]
    InternalBoettcher(String),
    #[error("puzzle construction failed: {0}")]
    Puzzle(String),
    #[error("not renormalizable at this depth: {0}")]
    NotRenormalizable(String),
    #[error("non-hyperbolic renormalization: straightening unsupported at desk scale ({0})")]
    NonHyperbolic(String),
    #[error("no external angle found for the marked point: {0}")]
    NoMarking(String),
    #[error("corpus entry {label} failed re-verification (residual {residual:.3e})")]
    CorpusVerification { label: String, residual: f64 },
    #[error("parse error: {0}")]
    Parse(String),
}

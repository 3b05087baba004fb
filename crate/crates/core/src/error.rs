use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("value is zero at precision O(p^{0}); a unit was required")]
    PrecisionExhausted(i64),
    #[error("prime mismatch: {0} vs {1}")]
    PrimeMismatch(u64, u64),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("not a simple root modulo p")]
    NotSimpleRoot,
    #[error("modulus {0} is divisible by p")]
    BadModulus(u64),
    #[error("{0} does not induce an automorphism of this ring")]
    BadGaloisIndex(u64),
    #[error("level mismatch: expected {expected}, found {found}")]
    LevelMismatch { expected: u32, found: u32 },
    #[error("character is not primitive")]
    NotPrimitive,
    #[error("sequence depth {have} is below required level {need}")]
    InsufficientDepth { have: u32, need: u32 },
    #[error("level {0} is not stored")]
    LevelUnavailable(u32),
    #[error("measure does not vanish to order {0} at the trivial character")]
    InsufficientVanishing(u32),
    #[error("measure is not divisible by (gamma - 1)")]
    NotDivisible,
    #[error("Coleman operator output is not integral")]
    IntegralityViolation,
    #[error("series truncation too short: {0}")]
    TruncationTooShort(String),
    #[error("no Coleman series is available for this sequence")]
    MissingSeries,
    #[error("sequence is not in the requested isotypic part")]
    NotInIsotypicPart,
    #[error("sequence cannot be brought into the principal units")]
    NotStabilizable,
    #[error("matrix is singular at precision O(p^{0})")]
    SingularAtPrecision(i64),
    #[error("complex determinant is within its error bound of zero")]
    SingularWithinBound,
    #[error("character is ramified at p")]
    RamifiedAtP,
    #[error("trivial character is excluded here")]
    TrivialCharacter,
    #[error("character parity is wrong for this operation")]
    OddCharacter,
    #[error("regularizer c={0} is degenerate")]
    DegenerateRegularizer(u64),
    #[error("O^- matrix is singular")]
    SingularOMinus,
    #[error("stabilization is not admissible")]
    InadmissibleStabilization,
    #[error("eigenvalue lists do not match")]
    EigenvalueListMismatch,
    #[error("Galois orbit data is incomplete")]
    IncompleteOrbit,
    #[error("missing unit data: {0}")]
    MissingUnitData(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

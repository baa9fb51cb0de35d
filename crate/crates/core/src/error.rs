use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("duplicate point `{0}`")]
    DuplicatePoint(String),
    #[error("invalid point name `{0}`: must be a nonempty token without whitespace, `.` or parentheses")]
    InvalidPointName(String),
    #[error("block #{index} has {len} members, expected 3")]
    NonTernaryBlock { index: usize, len: usize },
    #[error("unknown point `{0}`")]
    UnknownPoint(String),
    #[error("block {{{}}} repeats a member", .0.join(", "))]
    RepeatedMemberInBlock(Vec<String>),
    #[error("pair ({0}, {1}) lies in two blocks")]
    PairInTwoBlocks(String, String),
    #[error("systems disagree on the product of ({a}, {b})")]
    IncompatibleSystems { a: String, b: String },
    #[error("family members {i} and {j} disagree on the product of ({a}, {b})")]
    IncompatibleFamily {
        i: usize,
        j: usize,
        a: String,
        b: String,
    },
    #[error("subset is not relatively closed: {0} * {1} = {2} escapes")]
    NotRelativelyClosed(String, String, String),
    #[error("search budget exceeded")]
    BudgetExceeded,
    #[error("no completion found up to order {0}")]
    NoCompletionWithinBound(usize),
    #[error("syntax error at offset {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("map is not a homomorphism: block {{{}}} is not preserved", .0.join(", "))]
    NotAHomomorphism(Vec<String>),
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
    #[error("materialization exceeds the size budget of {0}")]
    SizeBudgetExceeded(usize),
    #[error("invalid formula: {0}")]
    InvalidFormula(String),
    #[error("system is not total")]
    NotTotal,
    #[error("not a subquasigroup: {0}")]
    NotASubquasigroup(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("compatibility claim {0} failed")]
    CompatibilityCheckFailed(u8),
    #[error("closure did not stabilize within depth {0}")]
    DepthExceeded(usize),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("family member {0} is too small")]
    FamilyMemberTooSmall(usize),
    #[error("audit failed for property {property}: {witness}")]
    AuditFailed { property: u8, witness: String },
    #[error("{0} is not an admissible order (n = 1 or 3 mod 6)")]
    NotAdmissible(usize),
    #[error("time budget exhausted")]
    Timeout,
    #[error("malformed input: {0}")]
    Format(String),
}

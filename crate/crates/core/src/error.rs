use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabError {
    #[error("{0} is not prime")]
    NonPrime(u64),
    #[error("characteristic 2 is not supported")]
    EvenCharacteristic,
    #[error("modulus is reducible over F_{p}")]
    ReducibleModulus { p: u32 },
    #[error("invalid modulus: {0}")]
    InvalidModulus(String),
    #[error("field of order {0} is too large")]
    FieldTooLarge(u128),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("element {code} is not in a field of order {q}")]
    InvalidElement { code: u64, q: u64 },
    #[error("objects live in different fields")]
    FieldMismatch,
    #[error("grid of size {size} exceeds the limit {limit}")]
    GridTooLarge { size: u128, limit: u64 },
    #[error("work estimate {work} exceeds the budget {budget}")]
    BudgetExceeded { work: u128, budget: u64 },
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),
    #[error("sampler gave up after {attempts} attempts")]
    ExhaustedAttempts { attempts: u32 },
    #[error("n*d = {0} is odd")]
    OddProduct(u32),
    #[error("hyperplane normal is zero")]
    ZeroNormal,
    #[error("radius must be nonzero")]
    ZeroRadius,
    #[error("sphere has no weight")]
    MissingWeight,
    #[error("division by zero: {0}")]
    DivisionByZero(String),
    #[error("lifted incidence count {lifted} disagrees with direct count {direct}")]
    ReductionMismatch { direct: u64, lifted: u64 },
    #[error("invalid moment u = {0}; expected an even integer or infinity")]
    InvalidMoment(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("hard assertion failed: {0}")]
    HardAssertion(String),
    #[error("no rows to emit")]
    EmptyReport,
    #[error("i/o error: {0}")]
    Io(String),
}

impl LabError {
    /// Short machine-readable reason code, used in skipped sweep rows.
    pub fn code(&self) -> &'static str {
        match self {
            LabError::NonPrime(_) => "NonPrime",
            LabError::EvenCharacteristic => "EvenCharacteristic",
            LabError::ReducibleModulus { .. } => "ReducibleModulus",
            LabError::InvalidModulus(_) => "InvalidModulus",
            LabError::FieldTooLarge(_) => "FieldTooLarge",
            LabError::DimensionMismatch { .. } => "DimensionMismatch",
            LabError::InvalidElement { .. } => "InvalidElement",
            LabError::FieldMismatch => "FieldMismatch",
            LabError::GridTooLarge { .. } => "GridTooLarge",
            LabError::BudgetExceeded { .. } => "BudgetExceeded",
            LabError::UnsupportedRegime(_) => "UnsupportedRegime",
            LabError::ExhaustedAttempts { .. } => "ExhaustedAttempts",
            LabError::OddProduct(_) => "OddProduct",
            LabError::ZeroNormal => "ZeroNormal",
            LabError::ZeroRadius => "ZeroRadius",
            LabError::MissingWeight => "MissingWeight",
            LabError::DivisionByZero(_) => "DivisionByZero",
            LabError::ReductionMismatch { .. } => "ReductionMismatch",
            LabError::InvalidMoment(_) => "InvalidMoment",
            LabError::OutOfRange(_) => "OutOfRange",
            LabError::Parse(_) => "Parse",
            LabError::HardAssertion(_) => "HardAssertion",
            LabError::EmptyReport => "EmptyReport",
            LabError::Io(_) => "IoError",
        }
    }

    /// Process exit code for the CLI: 1 for violated identities, 3 for I/O,
    /// 2 for everything that is a configuration or precondition problem.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::HardAssertion(_) | LabError::ReductionMismatch { .. } => 1,
            LabError::Io(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

use thiserror::Error;

/// Errors surfaced by state construction, protocol execution and the
/// optimization and enumeration routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown register `{0}`")]
    UnknownRegister(String),
    #[error("register layouts do not match: {0}")]
    LayoutMismatch(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("flag vector longer than register: {flags} flags for width {width}")]
    FlagLength { flags: usize, width: usize },
    #[error("projector family is not pairwise orthogonal")]
    NonOrthogonalFamily,
    #[error("projector family does not span the register space ({got} of {want} dimensions)")]
    IncompleteFamily { got: usize, want: usize },
    #[error("invalid matching: {0}")]
    InvalidMatching(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("input outside the protocol's declared domain: {0}")]
    DomainMismatch(String),
    #[error("operation requires a one-way protocol")]
    RequiresOneWay,
    #[error("enumeration of 2^{log2_size} candidates exceeds the guard of 2^{guard_log2}")]
    EnumerationTooLarge { log2_size: u64, guard_log2: u32 },
    #[error("internal identity violated: {0}")]
    IdentityViolation(String),
    #[error("malformed protocol table: {0}")]
    MalformedTable(String),
}

pub type Result<T> = std::result::Result<T, Error>;

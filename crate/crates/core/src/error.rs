use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("element {element} does not belong to group {group}")]
    NotInGroup { group: String, element: String },

    #[error("cyclic modulus must be at least 2, got {0}")]
    InvalidModulus(u64),

    #[error("element id {0} is not defined in the construction")]
    UndefinedId(u64),

    /// A free-group sum, inverse or enumeration needs stages the snapshot has not run.
    #[error("construction needs more stages: {0}")]
    NeedMoreStages(String),

    #[error("the distinguished element b must be nonzero")]
    ZeroElement,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("congruence {a}*s = {c} (mod {modulus}) has no solution")]
    Unsolvable {
        a: String,
        c: String,
        modulus: String,
    },

    #[error("element {0} is outside the coloring's domain")]
    OutsideDomain(String),

    #[error("value {value} is out of range for bound {bound}")]
    OutOfRange { value: u64, bound: u64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("case witness is invalid: reduced function agrees with the diagonal at index {index}")]
    InvalidWitness { index: String },

    #[error("coloring violates a precondition: {0}")]
    Precondition(String),

    #[error("stage budget of {0} exhausted")]
    StageBudget(u64),

    #[error("coloring tree died at level {level}")]
    TreeDied { level: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

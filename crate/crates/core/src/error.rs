use thiserror::Error;

/// Everything that can go wrong inside the laboratory.
///
/// Finite-horizon shortfalls (a milestone search that runs out of room, a
/// split that lacks witnesses) are *not* errors; they are reported in the
/// returned values.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("horizon must be at least 1")]
    EmptyHorizon,

    #[error("indices start at 1; got 0")]
    ZeroIndex,

    #[error("set `{set}` is possibly finite: element #{wanted} not found (scanned up to {scanned})")]
    PossiblyFinite { set: String, wanted: u64, scanned: u64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("horizon exceeded: {what} requested at {requested}, available up to {limit}")]
    HorizonExceeded { what: String, requested: u64, limit: u64 },

    #[error("set `{set}` must be infinite and co-infinite")]
    NotInfiniteCoinfinite { set: String },

    #[error("declaration falsified: {0}")]
    Declaration(String),

    #[error("term {index} of `{series}` violates the declared bound |a_n| <= {bound}")]
    TermBound { series: String, index: u64, bound: String },

    #[error("scan exhausted after {scanned} indices while {what}")]
    ScanExhausted { what: String, scanned: u64 },

    #[error("audit failed: {0}")]
    Audit(String),

    #[error("witness too weak: {0}")]
    WitnessTooWeak(String),

    #[error("injection `{label}` is not injective: f({first}) = f({second}) = {value}")]
    NotInjective { label: String, first: u64, second: u64, value: u64 },

    #[error("injection `{0}` has no inverse available")]
    NoInverse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parameter `{name}` out of range: {detail}")]
    ParameterOutOfRange { name: &'static str, detail: String },

    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },

    #[error(
        "log argument λ₂² - (2-λ_min)²/(3·2^(2n)) = {value:e} is not positive for n = {bits}; \
         at least {min_bits} bits are needed for this topology"
    )]
    NonPositiveLogArgument { value: f64, bits: u32, min_bits: u32 },

    #[error("{combination}: no trial could run with {bits} bits; {}", needed_bits(.min_bits))]
    InfeasibleBits {
        combination: String,
        bits: u32,
        min_bits: Option<u32>,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid consensus matrix: {0}")]
    InvalidWeights(String),

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn out_of_range(name: &'static str, detail: impl Into<String>) -> Self {
        Error::ParameterOutOfRange {
            name,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn needed_bits(min_bits: &Option<u32>) -> String {
    match min_bits {
        Some(n) => format!("at least {n} are needed"),
        None => "no bit budget is feasible for this topology".into(),
    }
}

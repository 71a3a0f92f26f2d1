use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("qubit {qubit} out of range for a {qubits}-qubit basis")]
    QubitOutOfRange { qubit: usize, qubits: usize },

    #[error("basis mismatch: expected {expected}, found {found}")]
    BasisMismatch { expected: String, found: String },

    #[error("{name} = {value} is outside its valid range")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("column {column} of transfer operator has sum {sum} > 1 or a negative entry")]
    NotSubStochastic { column: usize, sum: f64 },

    #[error("reference outcome has zero probability; swap output undefined")]
    DegenerateSwap,

    #[error("secret key rate is zero; normalized cost undefined")]
    UndefinedCost,

    #[error("no hop length in the grid yields a positive objective")]
    NoFeasibleHopLength,

    #[error("{qubits} qubits exceeds the simulator limit of {max}")]
    TooManyQubits { qubits: usize, max: usize },

    #[error("unknown hardware stage {0} (expected 1, 2 or 3)")]
    UnknownStage(u8),

    #[error("scheme {scheme} requires code size {expected}, timing has {found}")]
    CodeSizeMismatch {
        scheme: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::InvalidParameter { name, value })
    }
}

use thiserror::Error;

/// Errors raised by the analysis library.
///
/// Every variant maps to a stable, machine-readable code via [`Error::code`],
/// which the CLI uses in its error reports.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("empty input collection")]
    EmptyInput,

    #[error("price signal has {got} slots, grid expects {expected}")]
    SignalLength { expected: usize, got: usize },

    #[error("price at slot {slot} is {value}; prices must be finite and non-negative")]
    InvalidPrice { slot: usize, value: f64 },

    #[error("every day of the price signal carries the same price vector")]
    DegenerateSignal,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("not a permutation of 0..{0}")]
    NotAPermutation(usize),

    #[error("at least two days are required to shuffle, got {0}")]
    TooFewDays(usize),

    #[error("exhaustive enumeration supports at most {max} days, got {got}")]
    TooManyDaysForEnumeration { max: usize, got: usize },

    #[error("sample count must be at least {min}, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("no non-degenerate customers to analyse")]
    NoUsableCustomers,

    #[error("control group is empty")]
    EmptyControl,

    #[error("treatment group is empty")]
    EmptyTreatment,

    #[error("confidence level must lie strictly between 0 and 1, got {0}")]
    InvalidLevel(f64),

    #[error("need at least {min} pairs, got {got}")]
    TooFewPairs { min: usize, got: usize },

    #[error("rank correlation is undefined for a constant sequence")]
    ConstantSequence,

    #[error("score {psi} lies on a singular endpoint of the density")]
    EndpointSingularity { psi: f64 },

    #[error("value {0} is outside [0, 1]")]
    OutOfUnitInterval(f64),

    #[error("invalid mixture parameters: {0}")]
    InvalidParams(String),

    #[error("need at least {min} scores to fit, got {got}")]
    TooFewScores { min: usize, got: usize },

    #[error("bin count must be at least {min}, got {got}")]
    TooFewBins { min: usize, got: usize },

    #[error("all scores are identical")]
    DegenerateScores,

    #[error("infeasible price events: {0}")]
    InfeasibleEvents(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("input file not found: {0}")]
    MissingInput(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    /// Stable snake_case code for machine-readable reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::EmptyInput => "empty_input",
            Error::SignalLength { .. } => "signal_length",
            Error::InvalidPrice { .. } => "invalid_price",
            Error::DegenerateSignal => "degenerate_signal",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NotAPermutation(_) => "not_a_permutation",
            Error::TooFewDays(_) => "too_few_days",
            Error::TooManyDaysForEnumeration { .. } => "too_many_days",
            Error::TooFewSamples { .. } => "too_few_samples",
            Error::NoUsableCustomers => "no_usable_customers",
            Error::EmptyControl => "empty_control",
            Error::EmptyTreatment => "empty_treatment",
            Error::InvalidLevel(_) => "invalid_level",
            Error::TooFewPairs { .. } => "too_few_pairs",
            Error::ConstantSequence => "constant_sequence",
            Error::EndpointSingularity { .. } => "endpoint_singularity",
            Error::OutOfUnitInterval(_) => "out_of_unit_interval",
            Error::InvalidParams(_) => "invalid_params",
            Error::TooFewScores { .. } => "too_few_scores",
            Error::TooFewBins { .. } => "too_few_bins",
            Error::DegenerateScores => "degenerate_scores",
            Error::InfeasibleEvents(_) => "infeasible_events",
            Error::InvalidScenario(_) => "invalid_scenario",
            Error::Malformed(_) => "malformed_input",
            Error::MissingInput(_) => "missing_input",
            Error::Io(_) => "io_error",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Malformed(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

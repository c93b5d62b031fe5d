use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // ---- ingestion
    #[error("csv: {0}")]
    Csv(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("ragged row at line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("duplicate column name '{0}'")]
    DuplicateColumn(String),
    #[error("column '{0}' not found")]
    MissingColumn(String),
    #[error("missing value in column '{column}' at row {row}")]
    MissingCell { column: String, row: usize },
    #[error("non-numeric value '{value}' in continuous column '{column}' at row {row}")]
    NonNumeric {
        column: String,
        row: usize,
        value: String,
    },
    #[error("schema line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("column '{0}' is not continuous")]
    NotContinuous(String),
    #[error("column '{0}' is not categorical")]
    NotCategorical(String),

    // ---- formulas and design matrices
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("response '{0}' appears on the right-hand side")]
    ResponseOnRhs(String),
    #[error("empty right-hand side")]
    EmptyRhs,
    #[error("categorical variable '{0}' has a single level")]
    SingleLevel(String),
    #[error("not enough observations: n = {n} but the design has {columns} columns")]
    TooFewObservations { n: usize, columns: usize },
    #[error("unseen level '{level}' for variable '{variable}'")]
    UnseenLevel { variable: String, level: String },
    #[error("design column mismatch: {0}")]
    ColumnMismatch(String),

    // ---- fitting
    #[error("perfect multicollinearity: column '{0}' is linearly dependent on earlier columns")]
    RankDeficient(String),
    #[error("response is not binary (value {value} at row {row})")]
    NonBinaryResponse { row: usize, value: f64 },
    #[error("response is constant; both outcome classes are required")]
    ConstantResponse,
    #[error("separation: the maximum likelihood estimate does not exist ({0})")]
    Separation(String),
    #[error("fit did not converge after {0} iterations")]
    NotConverged(usize),
    #[error("r2_reduced ({reduced}) exceeds r2_full ({full})")]
    MarginalityViolation { full: f64, reduced: f64 },

    // ---- numerics and arguments
    #[error("probability {0} outside (0, 1)")]
    InvalidProbability(f64),
    #[error("degrees of freedom must be positive, got {0}")]
    InvalidDegreesOfFreedom(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    // ---- model comparison
    #[error("empty candidate list")]
    NoCandidates,
    #[error("candidates use different responses ('{0}' vs '{1}')")]
    DifferingResponses(String, String),
    #[error("mixed model families cannot be compared by likelihood")]
    MixedFamilies,
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

impl Error {
    /// Stable snake_case identifier of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Csv(_) => "csv",
            Error::EmptyDataset => "empty_dataset",
            Error::RaggedRow { .. } => "ragged_row",
            Error::DuplicateColumn(_) => "duplicate_column",
            Error::MissingColumn(_) => "missing_column",
            Error::MissingCell { .. } => "missing_cell",
            Error::NonNumeric { .. } => "non_numeric",
            Error::Schema { .. } => "schema",
            Error::NotContinuous(_) => "not_continuous",
            Error::NotCategorical(_) => "not_categorical",
            Error::Syntax { .. } => "syntax",
            Error::ResponseOnRhs(_) => "response_on_rhs",
            Error::EmptyRhs => "empty_rhs",
            Error::SingleLevel(_) => "single_level",
            Error::TooFewObservations { .. } => "too_few_observations",
            Error::UnseenLevel { .. } => "unseen_level",
            Error::ColumnMismatch(_) => "column_mismatch",
            Error::RankDeficient(_) => "rank_deficient",
            Error::NonBinaryResponse { .. } => "non_binary_response",
            Error::ConstantResponse => "constant_response",
            Error::Separation(_) => "separation",
            Error::NotConverged(_) => "not_converged",
            Error::MarginalityViolation { .. } => "marginality_violation",
            Error::InvalidProbability(_) => "invalid_probability",
            Error::InvalidDegreesOfFreedom(_) => "invalid_degrees_of_freedom",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::NoCandidates => "no_candidates",
            Error::DifferingResponses(..) => "differing_responses",
            Error::MixedFamilies => "mixed_families",
        }
    }
}

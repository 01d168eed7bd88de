use thiserror::Error;

/// Every failure the lab can report.
///
/// Round and arm numbers carried in messages are 1-based.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("loss {value} at round {round}, arm {arm} is outside [0, 1]")]
    Domain {
        round: usize,
        arm: usize,
        value: f64,
    },

    #[error("measured range {measured} at round {round} exceeds declared range {declared}")]
    Range {
        round: usize,
        measured: f64,
        declared: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid environment spec: {0}")]
    Spec(String),

    #[error("invalid round: {0}")]
    Round(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("incomplete run log: {0}")]
    IncompleteLog(String),

    #[error("pseudo-regret needs an environment with known arm means")]
    NotStochastic,

    #[error("numerical fault: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("run {run_id}: {source}")]
    Run {
        run_id: usize,
        #[source]
        source: Box<LabError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LabError {
    /// Short machine-readable category, used in `ERROR:<category>:` lines.
    pub fn category(&self) -> &'static str {
        match self {
            LabError::Domain { .. } => "domain",
            LabError::Range { .. } => "range",
            LabError::Config(_) => "config",
            LabError::Spec(_) => "spec",
            LabError::Round(_) => "round",
            LabError::Precondition(_) => "precondition",
            LabError::IncompleteLog(_) => "log",
            LabError::NotStochastic => "not_stochastic",
            LabError::Numerical(_) => "numerical",
            LabError::Parse(_) => "parse",
            LabError::Verification(_) => "verification",
            LabError::Run { source, .. } => source.category(),
            LabError::Io(_) => "io",
        }
    }

    /// Validation failures are caused by bad input; everything else is a
    /// fault raised while running.
    pub fn is_validation(&self) -> bool {
        match self {
            LabError::Domain { .. }
            | LabError::Range { .. }
            | LabError::Config(_)
            | LabError::Spec(_)
            | LabError::Precondition(_)
            | LabError::Parse(_) => true,
            LabError::Run { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        LabError::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

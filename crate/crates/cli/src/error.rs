use std::fmt;

use relucov::analysis::AnalysisError;
use relucov::coverage::CoverageError;
use relucov::features::FeatureError;
use relucov::generation::GenerationError;
use relucov::io::IoError;
use relucov::network::NetworkError;

/// A failed command, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable, malformed or mis-shaped input files.
    Input(String),
    /// Every problem found while validating the configuration.
    Config(Vec<String>),
    /// The command ran but a checked property does not hold.
    Property(String),
    Internal(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(vec![msg.into()])
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Config(_) => 3,
            CliError::Property(_) => 4,
            CliError::Internal(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Config(problems) => {
                write!(f, "config error:")?;
                for p in problems {
                    write!(f, "\n  - {p}")?;
                }
                Ok(())
            }
            CliError::Property(m) => write!(f, "property failure: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<NetworkError> for CliError {
    fn from(e: NetworkError) -> Self {
        match e {
            NetworkError::NotHidden(_)
            | NetworkError::InvalidObjective(_)
            | NetworkError::ForeignTrace => CliError::Internal(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        CliError::config(e.to_string())
    }
}

impl From<CoverageError> for CliError {
    fn from(e: CoverageError) -> Self {
        match e {
            CoverageError::Network(n) => n.into(),
            CoverageError::ForeignTrace
            | CoverageError::StaleBounds
            | CoverageError::NoBoundsFor(_) => CliError::Internal(e.to_string()),
            _ => CliError::config(e.to_string()),
        }
    }
}

impl From<GenerationError> for CliError {
    fn from(e: GenerationError) -> Self {
        match e {
            GenerationError::Coverage(c) => c.into(),
            GenerationError::Network(n) => n.into(),
            GenerationError::EmptyCorpus => CliError::Input(e.to_string()),
            GenerationError::Lp(_) => CliError::Internal(e.to_string()),
            _ => CliError::config(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Coverage(c) => c.into(),
            AnalysisError::Network(n) => n.into(),
            AnalysisError::Dimension(..) => CliError::Input(e.to_string()),
            AnalysisError::BadOracle(_)
            | AnalysisError::TooManyHidden { .. }
            | AnalysisError::Precondition(_) => CliError::config(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(format!("writing output: {e}"))
    }
}

//! Error classification behind the exit-code contract: 1 usage, 2 data,
//! 3 numeric.

use corrfilter::correlation::CorrelationError;
use corrfilter::dbht::DbhtError;
use corrfilter::dynamics::DynamicsError;
use corrfilter::filtergraph::GraphError;
use corrfilter::ingest::IngestError;
use corrfilter::linkage::LinkageError;
use corrfilter::metrics::MetricsError;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config keys, inconsistent options.
    Usage(String),
    /// Unreadable or malformed inputs, impossible requests on the data.
    Data(String),
    /// The computation itself is undefined on the inputs.
    Numeric(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> CliError {
        CliError::Usage(msg.into())
    }

    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Data(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> CliError {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> CliError {
        CliError::Data(e.to_string())
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> CliError {
        CliError::Data(e.to_string())
    }
}

impl From<CorrelationError> for CliError {
    fn from(e: CorrelationError) -> CliError {
        CliError::Numeric(e.to_string())
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> CliError {
        CliError::Numeric(e.to_string())
    }
}

impl From<LinkageError> for CliError {
    fn from(e: LinkageError) -> CliError {
        CliError::Numeric(e.to_string())
    }
}

impl From<DbhtError> for CliError {
    fn from(e: DbhtError) -> CliError {
        CliError::Numeric(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> CliError {
        CliError::Numeric(e.to_string())
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> CliError {
        match e {
            DynamicsError::InvalidWindowSpec(_) => CliError::Usage(e.to_string()),
            DynamicsError::WindowTooLong { .. } => CliError::Data(e.to_string()),
            DynamicsError::DegenerateReplica { .. } => CliError::Numeric(e.to_string()),
            DynamicsError::Ingest(inner) => inner.into(),
            DynamicsError::Correlation(inner) => inner.into(),
            DynamicsError::Dbht(inner) => inner.into(),
            DynamicsError::Linkage(inner) => inner.into(),
            DynamicsError::Metrics(inner) => inner.into(),
        }
    }
}

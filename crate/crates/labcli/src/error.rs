use thiserror::Error;

use crate::config::ConfigIssue;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid configuration:\n{}", format_issues(.0))]
    Config(Vec<ConfigIssue>),

    #[error(transparent)]
    Core(#[from] fluctlab_core::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed configuration file: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n")
}

impl LabError {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        LabError::Io { context: context.into(), source }
    }

    /// Process exit status: 2 configuration, 3 resource refusal, 4 numerical validity, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use fluctlab_core::Error as E;
        match self {
            LabError::Config(issues) if issues.iter().all(|i| i.resource) => 3,
            LabError::Config(_) | LabError::Parse(_) => 2,
            LabError::Core(E::Input(_) | E::Domain(_) | E::StatisticalPower { .. }) => 2,
            LabError::Core(E::Resource { .. }) => 3,
            LabError::Core(E::Numerical(_)) => 4,
            LabError::Io { .. } | LabError::Csv(_) | LabError::Pool(_) => 1,
        }
    }
}

pub type LabResult<T> = std::result::Result<T, LabError>;

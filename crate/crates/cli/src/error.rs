use streamplan_core::atlas::AtlasError;
use streamplan_core::control::ControlError;
use streamplan_core::env::EnvError;
use streamplan_core::io::IoError;
use streamplan_core::meshgen::MeshError;
use streamplan_core::search::SearchError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: unreadable or malformed files, invalid parameters.
    #[error("{0}")]
    Validation(String),
    /// A solver (grid, search, QP) could not produce a result.
    #[error("{0}")]
    Solver(String),
    /// The closed loop left a safety quadrangle.
    #[error("{0}")]
    Safety(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Safety(_) => 4,
        }
    }
}

impl From<EnvError> for CliError {
    fn from(e: EnvError) -> Self {
        CliError::Validation(format!("environment: {e}"))
    }
}

impl From<MeshError> for CliError {
    fn from(e: MeshError) -> Self {
        match e {
            MeshError::InvalidConfig(_) => CliError::Validation(format!("grid: {e}")),
            _ => CliError::Solver(format!("grid: {e}")),
        }
    }
}

impl From<AtlasError> for CliError {
    fn from(e: AtlasError) -> Self {
        CliError::Solver(format!("atlas: {e}"))
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::NotNavigable { .. } | SearchError::StartBlocked | SearchError::GoalBlocked => {
                CliError::Validation(format!("query: {e}"))
            }
            _ => CliError::Solver(format!("search: {e}")),
        }
    }
}

impl From<ControlError> for CliError {
    fn from(e: ControlError) -> Self {
        match e {
            ControlError::InvalidConfig(_)
            | ControlError::UnstableYaw { .. }
            | ControlError::Schema(_)
            | ControlError::EmptyPath => CliError::Validation(format!("control: {e}")),
            _ => CliError::Solver(format!("control: {e}")),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Validation(e.to_string())
    }
}

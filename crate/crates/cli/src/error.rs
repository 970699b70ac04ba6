use mlvms::mesh::MeshError;
use mlvms::mlvms::MlvmsError;
use mlvms::norms::NormError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("mesh: {0}")]
    Mesh(#[from] MeshError),
    #[error("solver: {0}")]
    Solver(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0} check(s) failed")]
    Verify(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verify(_) => 1,
            CliError::Config(_) => 2,
            CliError::Mesh(_) => 3,
            CliError::Solver(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl From<MlvmsError> for CliError {
    fn from(e: MlvmsError) -> Self {
        match e {
            MlvmsError::Mesh(m) => CliError::Mesh(m),
            other => CliError::Solver(other.to_string()),
        }
    }
}

impl From<NormError> for CliError {
    fn from(e: NormError) -> Self {
        CliError::Solver(e.to_string())
    }
}

impl From<toml::de::Error> for CliError {
    fn from(e: toml::de::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.into())
    }
}

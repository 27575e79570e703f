use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("audit failed: {0}")]
    Audit(String),
    #[error("resource limit: {0}")]
    Resource(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Certification(_) => 3,
            CliError::Audit(_) => 4,
            CliError::Resource(_) => 5,
        }
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Resource(format!("{}: {e}", path.display()))
    }
}

impl From<nonext_bec::Error> for CliError {
    fn from(e: nonext_bec::Error) -> Self {
        use nonext_bec::Error as E;
        match e {
            E::Domain(_) | E::InvalidRequest(_) => CliError::Config(e.to_string()),
            E::Truncation(_) | E::Scale(_) | E::Bracket(_) | E::Sizing(_) => CliError::Certification(e.to_string()),
            E::Resource(_) => CliError::Resource(e.to_string()),
        }
    }
}

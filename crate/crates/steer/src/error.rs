use charmer_cli::error::CliError;
use charmer_core::error::CharmerError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Scene(#[from] CliError),
    #[error("scene rejected: {0}")]
    Rejected(String),
    #[error("bad message: {0}")]
    BadMessage(String),
    #[error("no session; send init first")]
    NoSession,
    #[error("session paused after a failed lift; send reset")]
    Paused,
    #[error("lift stopped: {0}")]
    Stopped(String),
    #[error(transparent)]
    Core(#[from] CharmerError),
}

impl SessionError {
    /// Short machine-readable name sent in error messages.
    pub fn kind(&self) -> &'static str {
        match self {
            SessionError::Scene(e) => e.record().kind,
            SessionError::Rejected(_) => "rejected",
            SessionError::BadMessage(_) => "bad_message",
            SessionError::NoSession => "no_session",
            SessionError::Paused => "paused",
            SessionError::Stopped(_) => "lift_stopped",
            SessionError::Core(e) => CliError::Core(e.clone()).record().kind,
        }
    }
}

pub type SessionResult<T> = Result<T, SessionError>;

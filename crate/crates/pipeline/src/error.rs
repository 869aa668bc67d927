use std::fmt;
use std::path::Path;

/// Broad failure class, which also fixes the process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad invocation: nothing to work on, wrong arguments.
    Usage,
    /// Invalid or unreadable configuration.
    Config,
    /// A numerical precondition failed inside the core library.
    Numerical,
    /// File system or file format problem.
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage | ErrorKind::Config => 2,
            ErrorKind::Numerical => 3,
            ErrorKind::Io => 4,
        }
    }
}

/// Error tagged with the pipeline stage that raised it.
#[derive(Debug, thiserror::Error)]
pub struct PipelineError {
    pub kind: ErrorKind,
    pub stage: String,
    pub message: String,
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.stage, self.message)
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;

impl PipelineError {
    pub fn new(kind: ErrorKind, stage: impl Into<String>, message: impl Into<String>) -> Self {
        PipelineError {
            kind,
            stage: stage.into(),
            message: message.into(),
        }
    }

    pub fn usage(stage: &str, message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Usage, stage, message)
    }

    pub fn config(stage: &str, message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Config, stage, message)
    }

    pub fn io(stage: &str, path: &Path, err: impl fmt::Display) -> Self {
        Self::new(ErrorKind::Io, stage, format!("{}: {err}", path.display()))
    }

    /// Wraps a core error; `context` names what was being computed.
    pub fn core(stage: &str, context: impl fmt::Display, err: biphoton_core::Error) -> Self {
        use biphoton_core::Error as E;
        let kind = match err {
            E::Config { .. } => ErrorKind::Config,
            E::Io(_) | E::Format(_) => ErrorKind::Io,
            _ => ErrorKind::Numerical,
        };
        Self::new(kind, stage, format!("{context}: {err}"))
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }
}

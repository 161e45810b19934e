use thiserror::Error;

/// Errors raised by the library. Each variant maps to a CLI exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-manifold mesh: {0}")]
    Structural(String),

    #[error("topology error: {message} (Euler characteristic {chi})")]
    Topology { message: String, chi: i64 },

    #[error("degenerate boundary loop with {0} vertices")]
    DegenerateBoundary(usize),

    #[error("curvature sums differ: current {current}, target {target}")]
    CurvatureSum { current: f64, target: f64 },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("extraction error: {0}")]
    Extraction(String),

    #[error("{stage} failed: {source}{}", hint_suffix(.hint))]
    Stage {
        stage: String,
        hint: String,
        #[source]
        source: Box<Error>,
    },
}

fn hint_suffix(hint: &str) -> String {
    if hint.is_empty() {
        String::new()
    } else {
        format!(" (hint: {hint})")
    }
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Format(_) | Error::Input(_) | Error::Dimension(_) => 2,
            Error::Structural(_) | Error::Topology { .. } | Error::DegenerateBoundary(_) => 3,
            Error::CurvatureSum { .. } | Error::Numerical(_) => 4,
            Error::Extraction(_) => 5,
            Error::Stage { source, .. } => source.exit_code(),
        }
    }

    /// Wraps the error with the pipeline stage it came from and a remedy hint.
    pub fn in_stage(self, stage: &str, hint: &str) -> Self {
        Error::Stage {
            stage: stage.to_string(),
            hint: hint.to_string(),
            source: Box::new(self),
        }
    }

    /// The innermost error, unwrapping stage annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },

    #[error(transparent)]
    Core(#[from] ascl_core::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    pub fn output(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        HarnessError::Output {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        use ascl_core::Error as E;
        matches!(
            self,
            HarnessError::Core(
                E::CflViolation { .. } | E::BlowUp { .. } | E::NonFinite(_) | E::RankCollapse { .. } | E::NotOrthonormal(_)
            )
        )
    }

    /// 2 for numerical faults, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        if self.is_numerical() {
            2
        } else {
            1
        }
    }
}

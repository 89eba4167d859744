use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] polwork_core::Error),

    /// Some property checks failed; the report has already been printed.
    #[error("{0} check(s) failed")]
    Checks(usize),
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        use polwork_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 4,
            CliError::Checks(_) => 3,
            CliError::Core(e) if e.is_io() => 4,
            CliError::Core(e) if e.is_numeric() => 3,
            CliError::Core(E::Domain(_)) => 3,
            CliError::Core(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;
    use polwork_core::Error as E;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Core(E::Resolution("x".into())).exit_code(), 2);
        assert_eq!(CliError::Core(E::StepUnderflow { t: 0.0, eta: 0.0.into() }).exit_code(), 3);
        assert_eq!(CliError::Core(E::Domain("x".into())).exit_code(), 3);
        assert_eq!(CliError::Checks(1).exit_code(), 3);
        assert_eq!(CliError::Core(E::Malformed("x".into())).exit_code(), 4);
        assert_eq!(CliError::io("x", std::io::Error::other("y")).exit_code(), 4);
    }
}

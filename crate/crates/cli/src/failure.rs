use std::fmt;

/// Bad flags, missing inputs or invalid settings, detected before any work
/// starts. Reported with exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Shorthand for `Err(UsageError(..).into())`.
pub fn usage<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(UsageError(msg.into()).into())
}

/// Maps a validation failure from the library to a usage error.
pub trait OrUsage<T> {
    fn or_usage(self, what: &str) -> anyhow::Result<T>;
}

impl<T> OrUsage<T> for sparse_fkrige::Result<T> {
    fn or_usage(self, what: &str) -> anyhow::Result<T> {
        self.map_err(|e| UsageError(format!("{what}: {e}")).into())
    }
}

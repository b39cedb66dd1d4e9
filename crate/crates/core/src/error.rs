use thiserror::Error;

/// Errors and first-class negative outcomes shared across the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// The constraint family admits no feasible set. Algorithms report this
    /// explicitly instead of returning a partial solution.
    #[error("no feasible solution exists: {0}")]
    Infeasible(String),

    /// Malformed input: unknown element ids, unmapped blocks, broken
    /// preconditions.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An exhaustive routine was asked to run beyond its supported size.
    #[error("instance too large: {0}")]
    TooLarge(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible(_))
    }
}

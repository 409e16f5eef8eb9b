use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{function}: argument {value} is outside the domain ({requirement})")]
    Domain {
        function: &'static str,
        value: f64,
        requirement: &'static str,
    },

    #[error("points coincide to within {separation:e} (self-interaction is not evaluated)")]
    Singular { separation: f64 },

    #[error("medium grid too coarse: {cells_per_length:.2} cells per correlation length (need >= 4)")]
    Resolution { cells_per_length: f64 },

    #[error("invalid configuration: {0}")]
    Configuration(String),

    #[error("image has no peak (all values are zero)")]
    NoPeak,
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Configuration(msg.into())
    }
}

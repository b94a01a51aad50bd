use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated an operation's precondition.
    #[error("usage error: {0}")]
    Usage(String),

    /// Invalid configuration value (order, element count, bounds, case name...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Numerical breakdown: singular transform, non-finite state, etc.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// An element mean left the admissible set, so no squeeze factor can restore the bounds.
    #[error(
        "element {element}: mean violates constraint `{constraint}` (g(mean) = {value:e}) at t = {time:e}"
    )]
    InadmissibleMean {
        element: usize,
        constraint: String,
        value: f64,
        time: f64,
    },

    /// A numerical flux received a non-physical state.
    #[error("inadmissible state at {location}: {detail}")]
    InadmissibleState { location: String, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A point-evaluation was requested where the quantity is undefined
    /// (coincident points, a field point on the screen, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("quadrature error: {0}")]
    Quadrature(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("extrapolation error: {0}")]
    Extrapolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

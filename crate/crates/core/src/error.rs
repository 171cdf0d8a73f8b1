use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pole: {0}")]
    Pole(String),
    #[error("spectral parameter is degenerate: min |mu_j - mu_k| = {0:e}")]
    DegenerateMu(f64),
    #[error("series did not converge within {0} terms")]
    NonConvergence(usize),
    #[error("quadrature did not converge: {0}")]
    Convergence(String),
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("contour geometry: {0}")]
    Geometry(String),
    #[error("matrix is singular")]
    Singular,
    #[error("sign pattern of y does not match variant {0}")]
    SignMismatch(String),
    #[error("stencil sample lands on a coordinate axis")]
    Stencil,
    #[error("{0} does not divide {1}")]
    Divisibility(u64, u64),
    #[error("no Kloosterman sum is attached to Weyl element {0}")]
    UnsupportedWeyl(String),
    #[error("quadrature grid hits a degenerate spectral parameter")]
    DegenerateGrid,
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("index ({i}, {j}) outside the interior of a {mx}x{my} grid")]
    IndexOutOfRange { i: usize, j: usize, mx: usize, my: usize },

    #[error("grids are not nested: {0}")]
    NonNestedGrids(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("nonpositive diffusion coefficient {value} for species {species} at node ({i}, {j})")]
    NonPositiveDiffusion {
        species: usize,
        i: usize,
        j: usize,
        value: f64,
    },

    #[error("Krylov breakdown after {cycles} cycles: {reason}")]
    KrylovBreakdown { cycles: f64, reason: &'static str },

    #[error("Newton iteration did not converge in {iterations} iterations (last increment {increment:.3e})")]
    NewtonDiverged { iterations: usize, increment: f64 },

    #[error("time step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("domain length must be positive, got {0}")]
    NonPositiveLength(f64),
    #[error("mesh needs at least one cell")]
    EmptyMesh,
    #[error("quadrature needs at least one point per half-range")]
    EmptyQuadrature,
    #[error("mesh edges not strictly increasing at cell {cell}")]
    NonIncreasingEdges { cell: usize },
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("{what}: expected length {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("cell {cell}: need sigma_t >= sigma_s >= 0, got sigma_t={sigma_t}, sigma_s={sigma_s}")]
    InvalidCrossSections {
        cell: usize,
        sigma_t: f64,
        sigma_s: f64,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error(
        "singular cell system at cell {cell}, direction {direction} \
         (previous-slope coefficients avg={avg_coeff}, slope={slope_coeff})"
    )]
    SingularCell {
        cell: usize,
        direction: usize,
        avg_coeff: f64,
        slope_coeff: f64,
    },
    #[error("non-finite transport solution at cell {cell}, direction {direction}")]
    NonFinite { cell: usize, direction: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LowOrderError {
    #[error("low-order block system singular at cell {cell}")]
    SingularBlock { cell: usize },
    #[error("non-finite low-order solution at cell {cell}")]
    NonFinite { cell: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReconstructionError {
    #[error("slope reconstruction needs at least 2 cells, mesh has {cells}")]
    TooFewCells { cells: usize },
}

/// Failure while advancing a time step.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(
        "step {step}: no convergence after {iterations} iterations (last differences {tail:?})"
    )]
    NonConvergence {
        step: usize,
        iterations: usize,
        history: Vec<f64>,
        tail: Vec<f64>,
    },
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    LowOrder(#[from] LowOrderError),
    #[error(transparent)]
    Reconstruction(#[from] ReconstructionError),
}

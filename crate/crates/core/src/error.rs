use thiserror::Error;

/// Errors produced by grid construction, assembly, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid sizing: 2M/h = {ratio} must be an even integer >= 8 (M = {half_width}, h = {spacing})")]
    GridSizing {
        ratio: f64,
        half_width: f64,
        spacing: f64,
    },
    #[error("grid dimension {0} unsupported (only 2 and 3)")]
    Dimension(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("ellipticity violated in cell {cell}: quadratic form {value} outside [{lower}, {upper}]")]
    Ellipticity {
        cell: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("solver stagnated after {iterations} iterations at relative residual {residual:.3e}")]
    Stagnation {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },
    #[error("iteration cap {cap} exceeded (residual {residual:.3e})")]
    IterationCap { cap: usize, residual: f64 },
    #[error("continuation step underflow at t = {t} (step {step:.3e})")]
    ContinuationUnderflow { t: f64, step: f64 },
    #[error("no grid nodes within h/2 of the sphere of radius {radius}")]
    EmptyShell { radius: f64 },
    #[error("operation unsupported: {0}")]
    Unsupported(String),
    #[error("grids do not share a layout (dim/spacing/extent mismatch)")]
    MismatchedGrids,
    #[error("extracted set is empty; solver output looks degenerate")]
    EmptySet,
    #[error("field is not a discrete {kind}: worst offender node {node} with residual {value:.3e}")]
    NotSubSuperSolution {
        kind: &'static str,
        node: usize,
        value: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

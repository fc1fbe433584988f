//! Construction and verification of mean value sets for divergence-form
//! elliptic operators with rough coefficients.
//!
//! The pipeline: discretize `L = D_j a^{ij} D_i` on a box grid
//! ([`grid`], [`coeff`], [`operator`]), compute the discrete Green's function
//! with a point source at the center ([`greens`]), solve the obstacle problem
//! that carves out the set `D_R = {w_R < G}` at scale `R` ([`obstacle`]),
//! then extract the sets and check their structure: nesting, the volume
//! identity `R^{-dim} |D_R| = const`, inner/outer ball inclusions, truncation
//! independence, and monotonicity of set averages of sub/supersolutions
//! ([`mvset`]). Empirical regularity diagnostics live in [`analysis`].
//!
//! All kernels are generic over the scalar type via [`scalar::Scalar`];
//! concrete `f64` aliases are exported at the crate root.

pub mod analysis;
pub mod coeff;
pub mod error;
pub mod greens;
pub mod grid;
pub mod mvset;
pub mod obstacle;
pub mod operator;
pub mod scalar;
pub mod sparse;

pub use coeff::{make_coefficients, CoefficientDescriptor};
pub use error::{Error, Result};
pub use greens::{cap_levels, check_lsw_bounds, solve_green};
pub use grid::Grid;
pub use obstacle::{
    comparison_suite, solve_general_gap, solve_lcp, solve_penalized_semilinear,
    solve_variational_penalty, ObstacleProblem, PenaltyProfile,
};
pub use operator::assemble;
pub use scalar::Scalar;

/// Concrete `f64` aliases for the common types.
pub type Grid64 = grid::Grid<f64>;
pub type CoefficientField64 = coeff::CoefficientField<f64>;
pub type Operator64 = operator::DiscreteOperator<f64>;
pub type Greens64 = greens::GreensFunction<f64>;
pub type ObstacleSolution64 = obstacle::ObstacleSolution<f64>;
pub type MeanValueSet64 = mvset::MeanValueSet<f64>;

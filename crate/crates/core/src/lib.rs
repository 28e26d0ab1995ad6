//! Numerical laboratory for Morrey spaces over Muckenhoupt weights and their
//! preduals.
//!
//! Everything lives on a uniform grid over `[-L, L]^n` with `n` in `{1, 2}`.
//! Cube families are finite truncations of the dyadic lattice, so every
//! supremum computed here is a lower estimate of the continuum quantity.

pub mod corpus;
pub mod cube;
pub mod error;
pub mod extrapolation;
pub mod grid;
pub mod morrey;
pub mod muckenhoupt;
pub mod operators;
pub mod predual;
pub mod quadrature;
pub mod report;
pub mod stats;

pub use cube::{enumerate_cubes, enumerate_lattice, finest_scale, AxisBox, Ball, CubeFamily, CubeVariant, DyadicCube, IndexBox, LatticeKind};
pub use error::{Error, Result};
pub use grid::{ComplexGridFunction, Domain, GridFunction, Sample};
pub use morrey::{morrey_norm, MorreyNorm, MorreyParams};
pub use muckenhoupt::{ap_constant, ApEstimate, Weight, WeightKind, WeightSpec};
pub use operators::{Operator, OperatorContext};
pub use predual::{Decomposition, PredualParams};
pub use quadrature::{integrate, restrict, Region};
pub use report::{GridMeta, VerificationReport};

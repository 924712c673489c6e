//! Numerical laboratory for trilinear flag paraproducts on the sampled torus:
//! Fourier multiplier operators, the dyadic decomposition of flag symbols,
//! discrete model operators, sizes and energies, and restricted-weak-type
//! experiments.

pub mod decomposition;
pub mod dyadic;
pub mod error;
pub mod grid;
pub mod harness;
pub mod jet;
pub mod multilinear;
pub mod sampling;
pub mod size_energy;
pub mod symbols;

pub use dyadic::{BumpFamily, CoefficientFamily, DyadicInterval, Flavor, ModelConfig, ModelKind, ModelOp, RatInterval};
pub use error::{FppError, Result};
pub use grid::{SampledFunction, Spectrum, TorusGrid};
pub use harness::{ExperimentReport, ExponentTuple, MeasurableSet, Membership, Polytope, RwtConfig, Vertex};
pub use multilinear::{FormRoute, FormValue, Method, TrilinearResult};
pub use size_energy::{SizeEnergyParams, SizeKind, TreeDecomposition};
pub use symbols::{SymbolSpec, SymbolTable};

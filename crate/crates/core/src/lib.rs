//! Finite-truncation numerics for shift operators built from finite Blaschke
//! products.
//!
//! The crate covers the full pipeline: truncated power series and the
//! Dirichlet-type norms, finite Blaschke products with their model spaces,
//! Wold coordinates with respect to a Blaschke product, subspace calculus in
//! arbitrary weighted inner products, matrix realizations of the operators
//! involved, and the decomposition engine that factors the elements of a
//! nearly invariant subspace as `h = q(T) G0`.
//!
//! Every value is immutable once built and every operation is a pure
//! function, so all types are `Send + Sync`.

pub mod blaschke;
pub mod error;
mod linalg;
pub mod neardecomp;
pub mod operators;
pub mod rng;
pub mod series;
pub mod subspaces;
pub mod suites;
pub mod wold;

pub use blaschke::{FiniteBlaschke, ModelSpaceBasis, ScaledFactorization};
pub use error::{Error, Result};
pub use neardecomp::{
    BeurlingLaxResult, Check, DecompositionTerms, ExampleConfig, FactorizationResult, Factorizer,
    InnerCandidate, InvarianceReport, NearDecomposer, Regime, RepresentationReport, ScenarioReport,
};
pub use operators::{CoordinateMap, OperatorMatrix};
pub use rng::Lcg64;
pub use series::{TruncatedSeries, VectorSeries};
pub use subspaces::{Ambient, AmbientKind, DefectBasis, NearInvarianceReport, Subspace};
pub use suites::{run_all, run_suite, SuiteConfig, SUITES};
pub use wold::{NormParameters, NormSpec, NormVariant, WoldCoordinates};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex column vector (coefficient vector in some ambient).
pub type CVector = nalgebra::DVector<C64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;

//! Boundary triples, Weyl functions and L-resolvent matrices of canonical
//! differential systems with piecewise-constant coefficients.

pub mod error;
pub mod func;
pub mod io;
pub mod matrix;
pub mod nevanlinna;
pub mod pair;
pub mod quadrature;
pub mod resolvent;
pub mod system;
pub mod triple;
pub mod verify;

pub use error::{AbCondition, Error, Invariant, Result};
pub use func::{LambdaFn, MatFn, VecFn};
pub use matrix::{c64, hermitian_inertia, C64, CMat, CVec, Inertia};
pub use quadrature::QuadratureRule;
pub use system::{CanonicalSystem, DefinitenessReport, FundamentalSolution, LoadOptions};
pub use pair::ParameterPair;
pub use triple::{AmaxElement, WeylData};
pub use nevanlinna::{FamilyRep, KernelSample};
pub use resolvent::{PreresolventMatrix, ResolventMatrixW, Side};
pub use verify::{run_suite, CheckRecord, SuiteReport, VerifyConfig};

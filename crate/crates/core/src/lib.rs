//! Construction, k-positivity certification and refutation, and
//! decomposability checks for linear maps between complex matrix algebras.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the double precision instantiation used by the CLI.

pub mod check;
pub mod decomp;
pub mod dtype;
pub mod error;
pub mod falsify;
pub mod io;
pub mod kcriteria;
pub mod linalg;
pub mod maps;
pub mod random;
pub mod scalar;
pub mod suites;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Matrix = linalg::ComplexMatrix<f64>;
pub type Vector = linalg::ComplexVector<f64>;
pub type Map = maps::MapRep<f64>;
pub type Frame = maps::OrthonormalFrame<f64>;
pub type DMatrix = maps::DWeights<f64>;
pub type Verdict = kcriteria::Verdict<f64>;
pub type Witness = kcriteria::Witness<f64>;
pub type Family = kcriteria::OrthoBasisFamily<f64>;
pub type Split = decomp::ChoiSplit<f64>;
pub type Input = check::MapInput<f64>;

pub use check::{run_check, run_criterion, CheckOptions, Criterion};
pub use dtype::PermutationSpec;
pub use falsify::SearchBudget;
pub use kcriteria::Status;

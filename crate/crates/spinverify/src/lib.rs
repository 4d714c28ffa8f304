//! Spinor calculus on coordinate charts, with numerical verification of the
//! identities satisfied by generalized Killing spinors on Spin^c manifolds.
//!
//! The crate is organized bottom-up:
//! - [`clifford`]: concrete Clifford algebra representations,
//! - [`geometry`]: charts, metrics, frames, curvature and exterior calculus,
//! - [`spinc`]: the Spin^c covariant derivative, Dirac operator and the
//!   curvature identities as residual evaluators,
//! - [`killing`]: the Killing equation, associated forms and invariants,
//! - [`constructions`]: explicit Killing-spinor fixtures with exact derivatives,
//! - [`scenario`]: the batch runner behind the `spinverify` CLI.

pub mod clifford;
pub mod constructions;
pub mod error;
pub mod forms;
pub mod geometry;
pub mod killing;
pub mod scenario;
pub mod spinc;

//! Time-dependent one-group discrete-ordinates transport in slab geometry.
//!
//! Linear-discontinuous finite elements in space, backward Euler in time,
//! and second-moment acceleration of the transport iteration. Besides the
//! exact scheme, five reduced-memory variants drop the first spatial moment
//! of the angular flux between time steps and approximate it at the next
//! step (see [`slope_approx`]).

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod driver;
pub mod error;
pub mod grid;
pub mod harness;
pub mod losm;
pub mod slope_approx;
pub mod transport;

pub use driver::{advance_step, persisted_bytes, PersistedState, Problem, Simulation, StepResult};
pub use error::SolveError;
pub use grid::{AngularQuadrature, MaterialField, SlabMesh};
pub use slope_approx::MethodKind;

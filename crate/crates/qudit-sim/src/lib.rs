//! State-vector simulation of d-level quantum systems with a two-party
//! execution engine for teleportation and remote controlled-shift protocols.
//!
//! The crate is organized in layers:
//!
//! * [`state`] — dense register of complex amplitudes with tensor products,
//!   wire reordering, and contraction; wire 0 is the most significant digit.
//! * [`gates`] — generalized Pauli shift/clock operators, the discrete
//!   Fourier gate, controlled shifts, swaps, and their dense matrices.
//! * [`measure`] — single-wire computational-basis measurement, both sampled
//!   and postselected.
//! * [`protocol`] — scripts and correction tables for two teleportation
//!   variants and the entanglement-assisted remote controlled shift, plus a
//!   swap-chain realization for gate-cost comparisons.
//! * [`locc`] — the execution engine: local gates, measurements, classical
//!   messages, and table-driven corrections, with locality enforced on every
//!   operation.
//! * [`oracle`] — an independent dense-matrix checker that recomputes every
//!   identity from scratch and cross-validates the engine.

pub mod error;
pub mod gates;
pub mod locc;
pub mod measure;
pub mod oracle;
pub mod protocol;
pub mod state;

pub use error::{Error, Result};
pub use gates::Gate;
pub use locc::{Order, PartyName, RunOptions, Transcript};
pub use oracle::{ALGEBRA_TOL, PROTOCOL_TOL};
pub use protocol::ProtocolKind;
pub use state::{RegisterLimits, StateVector};

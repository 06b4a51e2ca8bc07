//! Holonomic quantum computation on stabilizer and subsystem codes.
//!
//! The library compiles fault-tolerant gate constructions into adiabatic
//! schedules (ordered interpolations between anticommuting Pauli
//! Hamiltonians), integrates the resulting time-dependent evolutions,
//! extracts the geometric holonomies, and analyses adiabatic errors.
//!
//! Modules:
//! - [`pauli`] — exact phased Pauli-string algebra and Clifford conjugation.
//! - [`codes`] — Bacon-Shor and cat code definitions, starting-element
//!   search, a minimal decoder, and parallel-operation scheduling.
//! - [`schedule`] — envelopes and the gate-to-schedule compilers.
//! - [`engine`] — numerical evolution, parallel-transport oracle, holonomy
//!   extraction, fault injection, and the eigenspace-composition demo.
//! - [`analysis`] — closed-form and numerical adiabatic-error analysis.
//! - [`linalg`] — small dense complex-matrix helpers shared by the above.

pub mod analysis;
pub mod codes;
pub mod engine;
pub mod linalg;
pub mod pauli;
pub mod schedule;

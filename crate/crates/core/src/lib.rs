//! Synthesis and analysis of reduced quantum phase estimation circuits.
//!
//! A finite set of candidate phases `θ = πx/d` is reduced to a short list of
//! `(G, A)` parameters, from which a circuit is built that identifies the
//! true phase with certainty. The remaining modules simulate those circuits,
//! quantify their sensitivity and run Bayesian estimation on them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayes;
pub mod circuit;
pub mod error;
pub mod exactmath;
pub mod metrics;
pub mod reduction;
pub mod simulator;

pub use circuit::{build_circuit, remove_phantoms, Circuit, CircuitLine, CzTerm, GateOrdering};
pub use error::{Error, Result};
pub use exactmath::{normalize_phase_set, rational_from_float, Rational};
pub use reduction::{reduce, PhaseSet, ReductionTrace, Strategy};

pub use simulator::Theta;

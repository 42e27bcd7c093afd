//! Simulator for two-path interferometric circuits built from beam
//! splitters, phase shifters, and non-demolition detectors.
//!
//! The crate provides three independent backends for the same circuit
//! language and shows that they are operationally indistinguishable:
//!
//! * [`gates`] evolves finitely supported distributions over a local
//!   hidden-state space in which one path carries a *real* particle and the
//!   other carries a phase-tagged *ghost* (or nothing at all),
//! * [`classes`] evolves equivalence classes of those distributions with a
//!   closed-form three-vector calculus,
//! * [`quantum`] evolves a qubit on the Bloch sphere, with a complex
//!   amplitude cross-check.
//!
//! [`circuit`] defines the circuit IR, a small text format, and state
//! preparation protocols; [`harness`] runs exact branch trees, seeded Monte
//! Carlo sampling, and the backend comparison used by the CLI.

pub mod circuit;
pub mod classes;
pub mod gates;
pub mod geometry;
pub mod harness;
pub mod ontic;
pub mod quantum;

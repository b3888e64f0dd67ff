//! Core library for the partial code repair chain.
//!
//! Partial code copied from documentation or Q&A answers is usually
//! uncompilable for two mundane reasons: type names are used without their
//! fully qualified names (missing imports), and small "last-mile" syntax
//! slips (a missing comma, an unbalanced parenthesis) block the compiler.
//! This crate repairs such snippets by composing small prompt-based AI
//! units with deterministic non-AI units:
//!
//! * [`prompt`] owns the four AI-unit templates, deterministic prompt
//!   rendering (including sensitivity variants) and response parsing.
//! * [`backend`] is the completion transport: a live HTTP client plus
//!   record and replay modes for deterministic runs.
//! * [`analysis`] holds the non-AI units: compiler-based error judgement,
//!   diagnostic classification and import supplementation.
//! * [`chain`] sequences the units into the repair pipeline and records a
//!   full execution trace.
//! * [`eval`] runs a chain variant over a dataset and computes resolution
//!   metrics, ablations and prompt-sensitivity sweeps.
//! * [`corpus`] bundles a small fixture corpus with known-correct unit
//!   answers, used for hermetic end-to-end runs.

pub mod analysis;
pub mod backend;
pub mod chain;
pub mod corpus;
pub mod eval;
pub mod prompt;
pub mod snippet;

pub use snippet::{CodeSnippet, Language, SnippetError};

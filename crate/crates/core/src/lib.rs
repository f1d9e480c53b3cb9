//! Hyperbolic prompt-safety toolkit.
//!
//! The crate detects harmful text prompts with a one-class classifier in the
//! Lorentz (hyperboloid) model of hyperbolic space, explains verdicts with
//! integrated gradients at word granularity, rewrites flagged prompts with
//! removal / thesaurus / LLM strategies, and stress-tests the detector with
//! embedding-level attacks.
//!
//! Module map:
//!
//! - [`geometry`]  — Lorentz-model primitives: inner product, geodesic
//!   distance, exponential/logarithmic maps at the origin.
//! - [`hsvdd`]     — one-class hyperbolic SVDD: the center is frozen at the
//!   origin and only the radius is learned.
//! - [`encoder`]   — deterministic toy text encoder (tokenizer, pooled
//!   embedding, analytic token gradients, word similarity).
//! - [`embed`]     — embedding file ingestion/storage (binary and JSONL).
//! - [`attribution`] — integrated gradients over token embeddings with exact
//!   word-span aggregation.
//! - [`sanitizer`] — iterative word-level prompt sanitization strategies.
//! - [`llm`]       — chat-completion client used by the LLM strategy
//!   (HTTP or deterministic mock).
//! - [`attacks`]   — adaptive token-substitution attack and concept
//!   combination in tangent space.
//! - [`metrics`]   — detection/retrieval metrics, embedding diagnostics,
//!   radius-parameter sweeps.
//! - [`dataset`]   — JSONL prompt datasets.
//! - [`fixture`]   — deterministic synthetic corpus used by the test suite
//!   and reproducible end-to-end demos.

pub mod attacks;
pub mod attribution;
pub mod dataset;
pub mod embed;
pub mod encoder;
pub mod fixture;
pub mod geometry;
pub mod hsvdd;
pub mod llm;
pub mod metrics;
pub mod sanitizer;

//! Semigroup lifting from the Calkin algebra, decided from the geometry of the
//! generator spectrum.
//!
//! The pipeline builds the squaring tower `Ω_n = cl(exp(2⁻ⁿ σ(A)))`, runs the
//! per-level and whole-tower checks on it and combines them into a
//! [`verdict::Verdict`].

pub mod arcs;
pub mod cli;
pub mod conditions;
pub mod continuity;
pub mod document;
pub mod index;
pub mod raster;
pub mod real;
pub mod spectrum;
pub mod tower;
pub mod verdict;

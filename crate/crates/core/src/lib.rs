//! Discrete causal-tapestry simulation.
//!
//! A process generates primitive events (informons) on an integer space-time
//! lattice, organized into causal tapestries (finite antichains, one per
//! tick). Strengths propagate forward through a light-cone-masked Green's
//! function; band-limited sinc interpolation turns a tapestry into a global
//! wave-function interpretation. Process expressions combine primitives
//! through exclusive/free sums and products, and the set-valued covering
//! maps (over all nondeterministic generation orders) connect the discrete
//! model to configuration-space quantum mechanics.
//!
//! The crate is organized as:
//!
//! - [`lattice`], [`tapestry`]: points, informons, antichain checks
//! - [`kernel`]: sinc interpolation, Green's functions, propagation
//! - [`algebra`]: process expressions, normal forms, textual syntax
//! - [`engine`]: round execution, play sampling, exhaustive enumeration
//! - [`interp`]: global interpretations, covering maps, admissible closure
//! - [`measure`]: detection statistics from strengths alone
//! - [`oracle`]: analytic free evolution and the convergence harness
//! - [`config`], [`io`]: run configuration and on-disk formats
//!
//! The `parallel` feature (on by default) runs propagation, grid evaluation
//! and play sampling data-parallel via rayon; disabling it yields a fully
//! sequential build with identical outputs.

pub mod algebra;
pub mod config;
pub mod engine;
pub mod error;
pub mod interp;
pub mod io;
pub mod kernel;
pub mod lattice;
pub mod measure;
pub mod oracle;
pub mod tapestry;

pub use error::{Error, Result};
pub use num_complex::Complex64;

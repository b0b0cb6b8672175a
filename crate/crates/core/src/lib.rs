//! Finite-dimensional machinery for approximate isometric embeddings between
//! `ℓ_p` spaces.
//!
//! The crate is organised by topic:
//!
//! * [`spaces`]: `ℓ_p` vectors, linear maps, exact disjoint-support (Lamperti)
//!   embeddings, distortion reports, Hilbert rounding and amalgamation.
//! * [`geometry`]: distance to the unit ball of a subspace, the gap metric,
//!   Auerbach bases and Banach–Mazur bounds obtained from a small gap.
//! * [`mazur`]: Mazur maps between spheres and their action on embeddings.
//! * [`measures`]: discrete measures, Lévy–Prokhorov distance,
//!   p-characteristics, CDF inversion for odd `p`, plateau functions.
//! * [`partitions`]: appropriate box partitions, conditional expectations and
//!   finite envelopes of subspaces of `L_p` over a discrete space.
//! * [`equi`]: equisurjections, Hamming geometry, counting, concentration and
//!   replayable certificates.
//! * [`ramsey`]: spread vectors, exhaustive colouring checks, rigid
//!   surjections and the `ℓ_∞`/`ℓ_1` duality encodings.
//! * [`lattice`]: lattice-embedding predicates and rounding in `ℓ_∞`.
//! * [`suite`]: the acceptance battery shared by the test target and the CLI.

pub mod equi;
pub mod error;
pub mod geometry;
pub mod lattice;
pub mod mazur;
pub mod measures;
pub mod numeric;
pub mod partitions;
pub mod ramsey;
pub mod rng;
pub mod spaces;
pub mod suite;

pub use error::{Error, Result};

/// Tolerance used for certified floating-point comparisons.
pub const FLOAT_TOL: f64 = 1e-9;

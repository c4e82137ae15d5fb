//! Operator-valued matrix algebras over relatively separated index sets.
//!
//! Matrices are indexed by a finite point set `X ⊂ R^d` and carry dense
//! `m × m` complex blocks. The crate evaluates the off-diagonal decay norms
//! (Jaffard, weighted Schur, `J_ν`, `B_{u,s}`, Baskakov–Gohberg–Sjöstrand and
//! their anisotropic variants), estimates spectral radii through Gelfand's
//! formula, inverts finite sections and measures how localized the inverse
//! stays.
//!
//! Everything here is a pure function over immutable inputs. Parallel loops
//! go through rayon and always reduce in a fixed index order, so results do
//! not depend on the number of worker threads.

pub mod bgs;
pub mod block;
pub mod blockmat;
pub mod error;
pub mod experiment;
pub mod norms;
pub mod pointset;
pub mod rng;
pub mod spectral;
pub mod verify;
pub mod weights;

pub use block::Block;
pub use blockmat::{BlockMatrix, BlockVector};
pub use error::{Error, Result};
pub use norms::{NormReport, NormSpec, NormTable, NormTag, Witness};
pub use pointset::{Lattice, PointSet, SeparationReport};
pub use spectral::{DecayProfile, NormFunctional, SpectralReport};
pub use weights::{WeightPredicateReport, WeightSpec};

pub use num_complex::Complex64;

/// Version tag written into every JSON report.
pub const SCHEMA: &str = "opband/1";

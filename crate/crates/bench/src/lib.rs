//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use opband_core::experiment::{generate_matrix, GeneratorSpec, PointSetSpec};
use opband_core::{BlockMatrix, PointSet};

/// Jittered line with `n` points (spacing 1, jitter 0.3, seed 42).
pub fn line(n: usize) -> Arc<PointSet> {
    let spec = PointSetSpec::Jittered {
        dim: 1,
        spacing: 1.0,
        jitter: 0.3,
        seed: 42,
        extent: vec![n],
    };
    Arc::new(spec.build().expect("valid point set"))
}

/// Default `J_3`-class matrix with 2x2 blocks.
pub fn matrix(set: &Arc<PointSet>, seed: u64) -> BlockMatrix {
    generate_matrix(set.clone(), &GeneratorSpec::default(), seed).expect("valid generator")
}

/// `I + 0.3 K` with `K` from [`matrix`]; comfortably invertible.
pub fn well_conditioned(set: &Arc<PointSet>, seed: u64) -> BlockMatrix {
    let spec = GeneratorSpec {
        shift: Some(0.3),
        ..GeneratorSpec::default()
    };
    generate_matrix(set.clone(), &spec, seed).expect("valid generator")
}

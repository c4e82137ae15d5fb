//! Seeded matrix generation and experiment configuration.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::block::Block;
use crate::blockmat::BlockMatrix;
use crate::error::{Error, Result};
use crate::norms::NormSpec;
use crate::pointset::{make_jittered, make_lattice, PointSet};
use crate::rng::{complex_unit_box, stream, uniform};
use crate::spectral::NormFunctional;
use crate::verify::{default_suite, CheckSpec};
use crate::weights::WeightSpec;

/// How to build the index set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointSetSpec {
    Lattice {
        dim: usize,
        spacing: f64,
        extent: Vec<usize>,
    },
    Jittered {
        dim: usize,
        spacing: f64,
        jitter: f64,
        seed: u64,
        extent: Vec<usize>,
    },
}

impl Default for PointSetSpec {
    /// 128 points on the line, spacing 1, jitter 0.3, seed 42.
    fn default() -> Self {
        PointSetSpec::Jittered {
            dim: 1,
            spacing: 1.0,
            jitter: 0.3,
            seed: 42,
            extent: vec![128],
        }
    }
}

impl PointSetSpec {
    pub fn build(&self) -> Result<PointSet> {
        match self {
            PointSetSpec::Lattice {
                dim,
                spacing,
                extent,
            } => make_lattice(*dim, *spacing, extent),
            PointSetSpec::Jittered {
                dim,
                spacing,
                jitter,
                seed,
                extent,
            } => make_jittered(*dim, *spacing, *jitter, *seed, extent),
        }
    }

    pub fn extent(&self) -> &[usize] {
        match self {
            PointSetSpec::Lattice { extent, .. } | PointSetSpec::Jittered { extent, .. } => extent,
        }
    }

    /// Same construction with every axis extent multiplied by `factor`.
    pub fn scaled_extent(&self, factor: usize) -> Self {
        let mut out = self.clone();
        match &mut out {
            PointSetSpec::Lattice { extent, .. } | PointSetSpec::Jittered { extent, .. } => {
                extent.iter_mut().for_each(|e| *e *= factor);
            }
        }
        out
    }

    /// The unjittered integer lattice with the same extent.
    pub fn integer_lattice(&self) -> Self {
        match self {
            PointSetSpec::Lattice { dim, extent, .. }
            | PointSetSpec::Jittered { dim, extent, .. } => PointSetSpec::Lattice {
                dim: *dim,
                spacing: 1.0,
                extent: extent.clone(),
            },
        }
    }
}

/// Random matrices `A_{k,l} = amplitude · g_{k,l} · w(k-l)^{-1} · R_{k,l}`
/// with `g` uniform on `[0, 1]` (or `1` for an exact envelope) and `R` a
/// random block of unit spectral norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub weight: WeightSpec,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "two")]
    pub block_dim: usize,
    /// Replace `A` by `(A + A^*)/2`.
    #[serde(default)]
    pub symmetrize: bool,
    /// Replace `A` by `I + ε A`.
    #[serde(default)]
    pub shift: Option<f64>,
    /// Use `g = 1`, so every block norm equals the envelope exactly.
    #[serde(default)]
    pub exact_envelope: bool,
}

fn one() -> f64 {
    1.0
}

fn two() -> usize {
    2
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            weight: WeightSpec::polynomial(3.0),
            amplitude: 1.0,
            block_dim: 2,
            symmetrize: false,
            shift: None,
            exact_envelope: false,
        }
    }
}

impl GeneratorSpec {
    pub fn with_weight(weight: WeightSpec) -> Self {
        GeneratorSpec {
            weight,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.weight.validate()?;
        if !self.amplitude.is_finite() || self.amplitude < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "amplitude must be finite and >= 0, got {}",
                self.amplitude
            )));
        }
        if self.block_dim == 0 {
            return Err(Error::InvalidParameter("block_dim must be positive".into()));
        }
        if let Some(eps) = self.shift {
            if !eps.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "shift must be finite, got {eps}"
                )));
            }
        }
        Ok(())
    }
}

/// Draws a matrix over `set`; pairs are visited in lexicographic order and
/// each consumes one `g` and `m²` complex entries from the stream.
pub fn generate_matrix(set: Arc<PointSet>, spec: &GeneratorSpec, seed: u64) -> Result<BlockMatrix> {
    spec.validate()?;
    let m = spec.block_dim;
    let n = set.len();
    let mut rng = stream(seed);
    let mut a = BlockMatrix::zeros(set.clone(), m)?;
    for k in 0..n {
        for l in 0..n {
            let g = uniform(&mut rng, 0.0, 1.0);
            let r = Block::from_fn(m, |_, _| complex_unit_box(&mut rng));
            let envelope = if spec.exact_envelope { 1.0 } else { g };
            let scale = spec.amplitude * envelope / spec.weight.eval_pair(&set, k, l)?;
            let norm = r.norm();
            if scale != 0.0 && norm > 0.0 {
                a.insert(k, l, r.scale_real(scale / norm))?;
            }
        }
    }
    if spec.symmetrize {
        a = a.add(&a.adjoint())?.scale_real(0.5);
    }
    if let Some(eps) = spec.shift {
        a = BlockMatrix::identity(set, m)?.add(&a.scale_real(eps))?;
    }
    Ok(a)
}

/// One step of an experiment pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Stage {
    /// Evaluate norms of the generated matrix.
    Norms { norms: Vec<NormSpec> },
    /// Gelfand sequences of the generated matrix.
    Spectral {
        functionals: Vec<NormFunctional>,
        n_max: u64,
    },
    /// Invert the finite section and profile the inverse.
    Invert {
        #[serde(default = "default_cond_cap")]
        cond_cap: f64,
        #[serde(default = "one")]
        bucket_width: f64,
    },
    /// Bochner–Phillips verification on the integer lattice of the same extent.
    Bgs {
        weight: WeightSpec,
        grid: Vec<usize>,
    },
    /// Property checks.
    Verify { checks: Vec<CheckSpec> },
}

fn default_cond_cap() -> f64 {
    crate::spectral::DEFAULT_COND_CAP
}

/// Output file names, relative to the working directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
}

/// A complete, seed-determined experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default)]
    pub pointset: PointSetSpec,
    #[serde(default)]
    pub generator: GeneratorSpec,
    #[serde(default)]
    pub pipeline: Vec<Stage>,
    #[serde(default)]
    pub outputs: OutputPaths,
}

impl Default for ExperimentConfig {
    /// Seed 42 on the default point set, running the default verify suite.
    fn default() -> Self {
        ExperimentConfig {
            seed: 42,
            pointset: PointSetSpec::default(),
            generator: GeneratorSpec::default(),
            pipeline: vec![Stage::Verify {
                checks: default_suite(),
            }],
            outputs: OutputPaths::default(),
        }
    }
}

impl ExperimentConfig {
    /// Same setup with an empty pipeline.
    pub fn empty(seed: u64) -> Self {
        ExperimentConfig {
            seed,
            pipeline: Vec::new(),
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

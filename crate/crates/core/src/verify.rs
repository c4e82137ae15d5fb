//! Registry of property checks and the experiment runner.
//!
//! Every check draws its instances from a stream derived from the experiment
//! seed, the check name and the instance index, and reports the worst
//! margin it saw (negative means violated) together with a witness. Reports
//! contain no timings, so the same configuration always serializes to the
//! same bytes.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bgs::{conjugated_symbol, modulation, side_diagonals, verify_bochner_phillips};
use crate::blockmat::BlockMatrix;
use crate::error::{Error, Result};
use crate::experiment::{generate_matrix, ExperimentConfig, GeneratorSpec, Stage};
use crate::norms::{NormSpec, NormTable};
use crate::pointset::{convolution_bound_constant, neighbor_sum_sup, PointSet};
use crate::rng::child_seed;
use crate::spectral::{
    column_lp_bound_check, decay_profile, gelfand_radii, gelfand_radius, invert_finite_section,
    neumann_inverse, op_norm_bound_lp, op_norm_l2, quotient_rule_check, NormFunctional,
    DEFAULT_COND_CAP, DEFAULT_OPNORM_TOL,
};
use crate::weights::{check_submultiplicative, default_sample_pairs, WeightSpec};
use crate::SCHEMA;

/// A check to run and how many random instances to draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSpec {
    pub name: String,
    pub instances: usize,
}

pub type AdjointFn = dyn Fn(&BlockMatrix) -> BlockMatrix + Send + Sync;

/// Shared inputs of the property checks.
pub struct VerifyContext {
    pub seed: u64,
    pub set: Arc<PointSet>,
    /// Integer lattice with the same extent, for side-diagonal checks.
    pub lattice: Arc<PointSet>,
    pub generator: GeneratorSpec,
    /// The involution under test; replaceable so that a corrupted
    /// implementation can be shown to be caught.
    pub adjoint: Arc<AdjointFn>,
}

impl VerifyContext {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        Ok(VerifyContext {
            seed: config.seed,
            set: Arc::new(config.pointset.build()?),
            lattice: Arc::new(config.pointset.integer_lattice().build()?),
            generator: config.generator.clone(),
            adjoint: Arc::new(BlockMatrix::adjoint),
        })
    }

    pub fn with_adjoint(
        mut self,
        adjoint: impl Fn(&BlockMatrix) -> BlockMatrix + Send + Sync + 'static,
    ) -> Self {
        self.adjoint = Arc::new(adjoint);
        self
    }

    fn matrix(&self, set: &Arc<PointSet>, seed: u64) -> Result<BlockMatrix> {
        generate_matrix(set.clone(), &self.generator, seed)
    }

    fn matrix_with(
        &self,
        set: &Arc<PointSet>,
        spec: &GeneratorSpec,
        seed: u64,
    ) -> Result<BlockMatrix> {
        generate_matrix(set.clone(), spec, seed)
    }
}

/// Worst case of one instance: `margin >= 0` means the property held.
struct Observation {
    margin: f64,
    witness: Value,
}

fn inequality(value: f64, bound: f64, slack: f64, witness: Value) -> Observation {
    let scale = bound.abs().max(f64::MIN_POSITIVE);
    Observation {
        margin: (bound - value) / scale + slack,
        witness,
    }
}

fn identity_gap(deviation: f64, scale: f64, tol: f64, witness: Value) -> Observation {
    let relative = if deviation == 0.0 {
        0.0
    } else {
        deviation / scale.max(f64::MIN_POSITIVE)
    };
    Observation {
        margin: tol - relative,
        witness,
    }
}

fn worst(observations: Vec<Observation>) -> Observation {
    observations
        .into_iter()
        .reduce(|a, b| if b.margin < a.margin { b } else { a })
        .unwrap_or(Observation {
            margin: f64::INFINITY,
            witness: Value::Null,
        })
}

type CheckFn = fn(&VerifyContext, u64) -> Result<Observation>;

struct Check {
    name: &'static str,
    description: &'static str,
    default_instances: usize,
    run: CheckFn,
}

const EXACT: f64 = 1e-12;
const SLACK: f64 = 1e-10;

fn registry() -> &'static [Check] {
    &[
        Check {
            name: "adjoint_involution",
            description: "(A*)* = A exactly",
            default_instances: 4,
            run: |ctx, seed| {
                let a = ctx.matrix(&ctx.set, seed)?;
                let adj = &ctx.adjoint;
                let back = adj(&adj(&a));
                Ok(identity_gap(back.max_abs_diff(&a)?, a.max_abs(), 0.0, json!({"seed": seed})))
            },
        },
        Check {
            name: "adjoint_of_product",
            description: "(AB)* = B*A*",
            default_instances: 2,
            run: |ctx, seed| {
                let a = ctx.matrix(&ctx.set, seed)?;
                let b = ctx.matrix(&ctx.set, seed ^ 1)?;
                let adj = &ctx.adjoint;
                let lhs = adj(&a.matmul(&b)?);
                let rhs = adj(&b).matmul(&adj(&a))?;
                Ok(identity_gap(lhs.max_abs_diff(&rhs)?, lhs.max_abs(), EXACT, json!({"seed": seed})))
            },
        },
        Check {
            name: "involution_isometry",
            description: "||A*|| = ||A|| for jaffard, j_nu, symmetric schur and bgs norms",
            default_instances: 4,
            run: |ctx, seed| {
                let a = ctx.matrix(&ctx.set, seed)?;
                let l = ctx.matrix(&ctx.lattice, seed)?;
                let specs = [
                    (NormSpec::Jaffard { s: 3.0 }, &a),
                    (NormSpec::JNu { weight: WeightSpec::Subexponential { alpha: 0.5, beta: 0.5 } }, &a),
                    (NormSpec::schur1(WeightSpec::polynomial(1.0)), &a),
                    (NormSpec::Bgs { weight: WeightSpec::polynomial(1.0) }, &l),
                ];
                let mut obs = Vec::new();
                for (spec, m) in specs {
                    let x = spec.value(m)?;
                    let y = spec.value(&(ctx.adjoint)(m))?;
                    obs.push(identity_gap((x - y).abs(), x, EXACT, json!({"seed": seed, "norm": spec.tag()})));
                }
                Ok(worst(obs))
            },
        },
        Check {
            name: "leibniz_rule",
            description: "delta(AB) = delta(A)B + A delta(B)",
            default_instances: 2,
            run: |ctx, seed| {
                let a = ctx.matrix(&ctx.set, seed)?;
                let b = ctx.matrix(&ctx.set, seed ^ 1)?;
                let lhs = a.matmul(&b)?.derivation(0)?;
                let rhs = a.derivation(0)?.matmul(&b)?.add(&a.matmul(&b.derivation(0)?)?)?;
                Ok(identity_gap(lhs.max_abs_diff(&rhs)?, lhs.max_abs(), EXACT, json!({"seed": seed})))
            },
        },
        Check {
            name: "quotient_rule",
            description: "delta(A^-1) = -A^-1 delta(A) A^-1 and the derivation-norm estimate",
            default_instances: 2,
            run: |ctx, seed| {
                let spec = GeneratorSpec { shift: Some(0.2), ..ctx.generator.clone() };
                let k = ctx.matrix_with(&ctx.set, &GeneratorSpec { shift: None, ..spec.clone() }, seed)?;
                let a = BlockMatrix::identity(ctx.set.clone(), k.block_dim())?
                    .add(&k.scale_real(0.2 / op_norm_l2(&k, DEFAULT_OPNORM_TOL)?))?;
                let r = quotient_rule_check(&a, 0, 3.0)?;
                let identity = Observation { margin: EXACT - r.relative_deviation, witness: json!({"seed": seed}) };
                let estimate = inequality(
                    r.inverse_graph_norm,
                    r.certified_bound,
                    SLACK,
                    json!({"seed": seed, "estimate": true}),
                );
                Ok(worst(vec![identity, estimate]))
            },
        },
        Check {
            name: "side_diagonal_reconstruction",
            description: "sum of side diagonals equals A; f_A(t) = M_t A M_-t",
            default_instances: 2,
            run: |ctx, seed| {
                let a = ctx.matrix(&ctx.lattice, seed)?;
                let mut sum = BlockMatrix::zeros(ctx.lattice.clone(), a.block_dim())?;
                for side in side_diagonals(&a)? {
                    sum = sum.add(&side.matrix)?;
                }
                let rebuilt = identity_gap(sum.max_abs_diff(&a)?, a.max_abs(), 0.0, json!({"seed": seed}));
                let t = vec![0.1 + 0.8 * (seed % 1000) as f64 / 1000.0; ctx.lattice.dim()];
                let neg: Vec<f64> = t.iter().map(|v| -v).collect();
                let m = a.block_dim();
                let oracle = modulation(&t, ctx.lattice.clone(), m)?
                    .matmul(&a)?
                    .matmul(&modulation(&neg, ctx.lattice.clone(), m)?)?;
                let symbol = conjugated_symbol(&a, &t)?;
                let conj = identity_gap(symbol.max_abs_diff(&oracle)?, a.max_abs(), EXACT, json!({"seed": seed, "t": t}));
                Ok(worst(vec![rebuilt, conj]))
            },
        },
        Check {
            name: "schur_submultiplicative",
            description: "||AB|| <= ||A|| ||B|| in S^1_nu for nu in {1, nu_2, subexp(0.5,0.5)}",
            default_instances: 2,
            run: |ctx, seed| {
                let a = ctx.matrix(&ctx.set, seed)?;
                let b = ctx.matrix(&ctx.set, seed ^ 1)?;
                let ab = a.matmul(&b)?;
                let mut obs = Vec::new();
                for w in [
                    WeightSpec::ConstantOne,
                    WeightSpec::polynomial(2.0),
                    WeightSpec::Subexponential { alpha: 0.5, beta: 0.5 },
                ] {
                    let spec = NormSpec::schur1(w.clone());
                    let bound = spec.value(&a)? * spec.value(&b)?;
                    obs.push(inequality(spec.value(&ab)?, bound, SLACK, json!({"seed": seed, "weight": w})));
                }
                Ok(worst(obs))
            },
        },
        Check {
            name: "bgs_submultiplicative",
            description: "||AB||_C <= ||A||_C ||B||_C on the lattice section",
            default_instances: 2,
            run: |ctx, seed| {
                let a = ctx.matrix(&ctx.lattice, seed)?;
                let b = ctx.matrix(&ctx.lattice, seed ^ 1)?;
                let spec = NormSpec::Bgs { weight: WeightSpec::polynomial(1.0) };
                let bound = spec.value(&a)? * spec.value(&b)?;
                Ok(inequality(spec.value(&a.matmul(&b)?)?, bound, SLACK, json!({"seed": seed})))
            },
        },
        Check {
            name: "jaffard_algebra",
            description: "||AB||_J_s <= C ||A||_J_s ||B||_J_s with the convolution constant, s in {2,3,6}",
            default_instances: 2,
            run: |ctx, seed| {
                let a = ctx.matrix(&ctx.set, seed)?;
                let b = ctx.matrix(&ctx.set, seed ^ 1)?;
                let ab = NormTable::new(&a.matmul(&b)?);
                let (ta, tb) = (NormTable::new(&a), NormTable::new(&b));
                let mut obs = Vec::new();
                for s in [2.0, 3.0, 6.0] {
                    let spec = NormSpec::Jaffard { s };
                    let c = convolution_bound_constant(&ctx.set, s)?;
                    let bound = c * spec.eval_table(&ta)?.value * spec.eval_table(&tb)?.value;
                    obs.push(inequality(spec.eval_table(&ab)?.value, bound, SLACK, json!({"seed": seed, "s": s})));
                }
                Ok(worst(obs))
            },
        },
        Check {
            name: "bus_product",
            description: "||AB||_J_nu <= 2^s(||A||_J_nu ||B||_S + ||B||_J_nu ||A||_S), u = nu_0.5, s = 2",
            default_instances: 2,
            run: |ctx, seed| {
                let a = ctx.matrix(&ctx.set, seed)?;
                let b = ctx.matrix(&ctx.set, seed ^ 1)?;
                let u = WeightSpec::polynomial(0.5);
                let jnu = NormSpec::JNu { weight: WeightSpec::product(u.clone(), WeightSpec::polynomial(2.0)) };
                let schur = NormSpec::schur1(u);
                let bound = 4.0 * (jnu.value(&a)? * schur.value(&b)? + jnu.value(&b)? * schur.value(&a)?);
                Ok(inequality(jnu.value(&a.matmul(&b)?)?, bound, SLACK, json!({"seed": seed})))
            },
        },
        Check {
            name: "operator_norm_bounds",
            description: "op norm <= neighbor-sum * ||A||_J_3, <= Schur-test bound, and column estimates",
            default_instances: 3,
            run: |ctx, seed| {
                let a = ctx.matrix(&ctx.set, seed)?;
                let op = op_norm_l2(&a, DEFAULT_OPNORM_TOL)?;
                let embed = neighbor_sum_sup(&ctx.set, 3.0)? * NormSpec::Jaffard { s: 3.0 }.value(&a)?;
                let one = WeightSpec::ConstantOne;
                let schur = op_norm_bound_lp(&a, &WeightSpec::polynomial(1.0), &one, 2.0)?;
                let cols = column_lp_bound_check(&a, 2.0)?;
                Ok(worst(vec![
                    inequality(op, embed, 1e-9, json!({"seed": seed, "bound": "embedding"})),
                    inequality(op, schur, 1e-9, json!({"seed": seed, "bound": "schur_test"})),
                    inequality(cols.max_column_norm, cols.op_norm, 1e-9, json!({"seed": seed, "bound": "column"})),
                    inequality(cols.max_block_norm, cols.op_norm, 1e-9, json!({"seed": seed, "bound": "entry"})),
                ]))
            },
        },
        Check {
            name: "riesz_thorin",
            description: "scalar blocks: op norm <= max(l1, l_inf) norms",
            default_instances: 3,
            run: |ctx, seed| {
                let spec = GeneratorSpec { block_dim: 1, ..ctx.generator.clone() };
                let a = ctx.matrix_with(&ctx.set, &spec, seed)?;
                let schur = NormSpec::schur1(WeightSpec::ConstantOne).value(&a)?;
                Ok(inequality(op_norm_l2(&a, DEFAULT_OPNORM_TOL)?, schur, 1e-9, json!({"seed": seed})))
            },
        },
        Check {
            name: "gelfand_monotone",
            description: "self-adjoint A: every ||A^n||^(1/n) >= radius estimate, radius <= op norm",
            default_instances: 2,
            run: |ctx, seed| {
                let spec = GeneratorSpec { symmetrize: true, ..ctx.generator.clone() };
                let a = ctx.matrix_with(&ctx.set, &spec, seed)?;
                let r = gelfand_radius(&a, &NormFunctional::op_l2(), 64)?;
                let lowest = r.gelfand_sequence.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
                Ok(worst(vec![
                    inequality(r.radius_estimate, lowest, 1e-9, json!({"seed": seed, "bound": "monotone"})),
                    inequality(r.radius_estimate, r.op_norm_l2, 1e-9, json!({"seed": seed, "bound": "op_norm"})),
                ]))
            },
        },
        Check {
            name: "inverse_localization",
            description: "A = I + 0.3K/||K||, K with exact envelope nu_3: inverses agree, decay exponent <= -2.5",
            default_instances: 1,
            run: |ctx, seed| {
                let spec = GeneratorSpec { exact_envelope: true, shift: None, symmetrize: false, ..ctx.generator.clone() };
                let k = ctx.matrix_with(&ctx.set, &spec, seed)?;
                let a = BlockMatrix::identity(ctx.set.clone(), k.block_dim())?
                    .add(&k.scale_real(0.3 / op_norm_l2(&k, DEFAULT_OPNORM_TOL)?))?;
                let direct = invert_finite_section(&a, DEFAULT_COND_CAP)?;
                let series = neumann_inverse(&a, 1e-12)?;
                let gap = direct.max_block_diff(&series)?;
                let slope = decay_profile(&direct, 1.0)?.fitted_exponent.unwrap_or(f64::INFINITY);
                Ok(worst(vec![
                    Observation { margin: 1e-8 - gap, witness: json!({"seed": seed, "gap": gap}) },
                    Observation { margin: -2.5 - slope, witness: json!({"seed": seed, "slope": slope}) },
                ]))
            },
        },
        Check {
            name: "weight_submultiplicative",
            description: "nu(x+y) <= nu(x) nu(y) for polynomial, subexponential and mixed weights",
            default_instances: 1,
            run: |ctx, _seed| {
                let pairs = default_sample_pairs(&ctx.set, 48);
                let mut obs = Vec::new();
                for w in [
                    WeightSpec::polynomial(3.0),
                    WeightSpec::Subexponential { alpha: 0.5, beta: 0.5 },
                    WeightSpec::Mixed { alpha: 0.5, beta: 0.5, s: 1.0, t: 1.0 },
                ] {
                    let r = check_submultiplicative(&w, &pairs)?;
                    obs.push(Observation {
                        margin: 1.0 + r.tolerance - r.worst_ratio,
                        witness: json!({"weight": w, "at": r.witness}),
                    });
                }
                Ok(worst(obs))
            },
        },
        Check {
            name: "subadditivity",
            description: "(1+|k-l|)^s < 2^s((1+|k-n|)^s + (1+|n-l|)^s) over all triples, s in {1.5, 3, 6}",
            default_instances: 1,
            run: |ctx, _seed| {
                let set = &ctx.set;
                let n = set.len();
                let mut best = Observation { margin: f64::INFINITY, witness: Value::Null };
                for s in [1.5f64, 3.0, 6.0] {
                    let c = 2f64.powf(s);
                    for k in 0..n {
                        for l in 0..n {
                            let lhs = (1.0 + set.distance(k, l)).powf(s);
                            for m in 0..n {
                                let rhs = c * ((1.0 + set.distance(k, m)).powf(s) + (1.0 + set.distance(m, l)).powf(s));
                                let margin = (rhs - lhs) / rhs;
                                if margin < best.margin {
                                    best = Observation { margin, witness: json!({"s": s, "k": k, "l": l, "n": m}) };
                                }
                            }
                        }
                    }
                }
                Ok(best)
            },
        },
    ]
}

/// Every registered check with its default instance count.
pub fn default_suite() -> Vec<CheckSpec> {
    registry()
        .iter()
        .map(|c| CheckSpec {
            name: c.name.to_string(),
            instances: c.default_instances,
        })
        .collect()
}

/// Names and one-line descriptions of the registered checks.
pub fn registered_checks() -> Vec<(&'static str, &'static str)> {
    registry().iter().map(|c| (c.name, c.description)).collect()
}

/// Result of one check over all its instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub instances: usize,
    pub passed: bool,
    /// Smallest margin seen; negative when the property was violated.
    pub margin: f64,
    pub witness: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn name_tag(name: &str) -> u64 {
    // FNV-1a, so instance seeds do not depend on registry order.
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

pub fn run_checks(ctx: &VerifyContext, checks: &[CheckSpec]) -> Result<Vec<CheckOutcome>> {
    let reg = registry();
    checks
        .iter()
        .map(|spec| {
            let check = reg
                .iter()
                .find(|c| c.name == spec.name)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown check '{}'", spec.name)))?;
            let base = child_seed(ctx.seed, name_tag(check.name));
            let observations = (0..spec.instances)
                .map(|i| (check.run)(ctx, child_seed(base, i as u64)))
                .collect::<Result<Vec<_>>>()?;
            let w = worst(observations);
            Ok(CheckOutcome {
                name: spec.name.clone(),
                instances: spec.instances,
                passed: w.margin >= 0.0,
                margin: if w.margin.is_finite() { w.margin } else { 0.0 },
                witness: w.witness,
            })
        })
        .collect()
}

/// Runs the checks of every `verify` stage of the pipeline. An empty
/// pipeline passes trivially.
pub fn run_verify_suite(config: &ExperimentConfig) -> Result<VerifyReport> {
    run_verify_suite_with(config, &VerifyContext::new(config)?)
}

pub fn run_verify_suite_with(
    config: &ExperimentConfig,
    ctx: &VerifyContext,
) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    for stage in &config.pipeline {
        if let Stage::Verify { checks: specs } = stage {
            checks.extend(run_checks(ctx, specs)?);
        }
    }
    Ok(VerifyReport {
        schema: SCHEMA.to_string(),
        seed: config.seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

/// Output of a full experiment pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub stages: Vec<Value>,
    pub passed: bool,
}

/// Artifacts produced alongside the report.
pub struct ExperimentArtifacts {
    pub report: ExperimentReport,
    pub matrix: BlockMatrix,
    pub inverse_profile: Option<crate::spectral::DecayProfile>,
}

/// Generates the configured matrix and runs every stage in order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentArtifacts> {
    let ctx = VerifyContext::new(config)?;
    let matrix = generate_matrix(ctx.set.clone(), &config.generator, config.seed)?;
    let mut stages = Vec::new();
    let mut passed = true;
    let mut inverse_profile = None;
    for stage in &config.pipeline {
        let value = match stage {
            Stage::Norms { norms } => {
                let table = NormTable::new(&matrix);
                let reports = norms
                    .iter()
                    .map(|n| n.eval_table(&table))
                    .collect::<Result<Vec<_>>>()?;
                json!({"op": "norms", "reports": reports})
            }
            Stage::Spectral { functionals, n_max } => {
                json!({"op": "spectral", "reports": gelfand_radii(&matrix, functionals, *n_max)?})
            }
            Stage::Invert {
                cond_cap,
                bucket_width,
            } => {
                let inverse = invert_finite_section(&matrix, *cond_cap)?;
                let profile = decay_profile(&inverse, *bucket_width)?;
                let id = BlockMatrix::identity(ctx.set.clone(), matrix.block_dim())?;
                let residual = matrix.matmul(&inverse)?.max_block_diff(&id)?;
                let value = json!({"op": "invert", "residual": residual, "profile": profile});
                inverse_profile = Some(profile);
                value
            }
            Stage::Bgs { weight, grid } => {
                let a = generate_matrix(ctx.lattice.clone(), &config.generator, config.seed)?;
                let r = verify_bochner_phillips(&a, weight, grid)?;
                passed &= r.passed;
                json!({"op": "bgs", "report": r})
            }
            Stage::Verify { checks } => {
                let outcomes = run_checks(&ctx, checks)?;
                passed &= outcomes.iter().all(|c| c.passed);
                json!({"op": "verify", "checks": outcomes})
            }
        };
        stages.push(value);
    }
    Ok(ExperimentArtifacts {
        report: ExperimentReport {
            schema: SCHEMA.to_string(),
            seed: config.seed,
            config: config.clone(),
            stages,
            passed,
        },
        matrix,
        inverse_profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::PointSetSpec;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            pointset: PointSetSpec::Jittered {
                dim: 1,
                spacing: 1.0,
                jitter: 0.3,
                seed: 42,
                extent: vec![24],
            },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn empty_pipeline_passes_trivially() {
        let r = run_verify_suite(&ExperimentConfig::empty(42)).unwrap();
        assert!(r.passed);
        assert!(r.checks.is_empty());
        assert_eq!(r.schema, "opband/1");
    }

    #[test]
    fn default_suite_passes_and_is_deterministic() {
        let config = small_config();
        let a = run_verify_suite(&config).unwrap();
        let failed: Vec<_> = a.checks.iter().filter(|c| !c.passed).collect();
        assert!(a.passed, "{failed:#?}");
        assert_eq!(a.checks.len(), registered_checks().len());
        let b = run_verify_suite(&config).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn corrupted_adjoint_is_caught() {
        let config = small_config();
        let ctx = VerifyContext::new(&config)
            .unwrap()
            .with_adjoint(|a| a.adjoint().scale_real(1.0 + 1e-6));
        let checks = vec![CheckSpec {
            name: "involution_isometry".into(),
            instances: 2,
        }];
        let outcome = run_checks(&ctx, &checks).unwrap().remove(0);
        assert!(!outcome.passed);
        assert!(outcome.margin < 0.0);
        assert!(outcome.witness.get("norm").is_some());
    }

    #[test]
    fn unknown_check_is_rejected() {
        let ctx = VerifyContext::new(&small_config()).unwrap();
        assert!(run_checks(
            &ctx,
            &[CheckSpec {
                name: "nope".into(),
                instances: 1
            }]
        )
        .is_err());
    }

    #[test]
    fn experiment_runs_every_stage() {
        let mut config = small_config();
        config.generator.shift = Some(0.2);
        config.pipeline = vec![
            Stage::Norms {
                norms: vec![NormSpec::Jaffard { s: 3.0 }],
            },
            Stage::Spectral {
                functionals: vec![NormFunctional::op_l2()],
                n_max: 8,
            },
            Stage::Invert {
                cond_cap: 1e8,
                bucket_width: 1.0,
            },
            Stage::Bgs {
                weight: WeightSpec::polynomial(1.0),
                grid: vec![64],
            },
            Stage::Verify {
                checks: vec![CheckSpec {
                    name: "leibniz_rule".into(),
                    instances: 1,
                }],
            },
        ];
        let out = run_experiment(&config).unwrap();
        assert_eq!(out.report.stages.len(), 5);
        assert!(out.inverse_profile.is_some());
        assert!(out.report.passed, "{:#?}", out.report.stages);
    }
}

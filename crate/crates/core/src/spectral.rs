//! Operator norms on `ℓ²(X; C^m)`, spectral radii through Gelfand's formula,
//! finite-section inversion and decay profiling.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::block::Block;
use crate::blockmat::BlockMatrix;
use crate::error::{Error, Result};
use crate::norms::{aniso_norm, jaffard_norm, schur_p_norm, NormSpec, NormTable};
use crate::pointset::convolution_bound_constant;
use crate::rng::{complex_unit_box, stream};
use crate::weights::{check_moderate, default_sample_pairs, WeightSpec};

/// Relative tolerance of [`op_norm_l2`] unless stated otherwise.
pub const DEFAULT_OPNORM_TOL: f64 = 1e-10;
/// Iteration cap of the power method behind [`op_norm_l2`].
pub const POWER_ITERATION_CAP: usize = 10_000;
/// Condition-number cap of [`invert_finite_section`] unless stated otherwise.
pub const DEFAULT_COND_CAP: f64 = 1e8;

const POWER_SEED: u64 = 0x6F70_6E6F_726D_0001;

/// A norm whose Gelfand sequence can be tracked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormFunctional {
    /// One of the matrix-algebra norms.
    Algebra(NormSpec),
    /// The operator norm on `ℓ²`, by power iteration.
    OpL2 { tol: f64 },
}

impl NormFunctional {
    pub fn op_l2() -> Self {
        NormFunctional::OpL2 {
            tol: DEFAULT_OPNORM_TOL,
        }
    }

    pub fn eval(&self, a: &BlockMatrix) -> Result<f64> {
        match self {
            NormFunctional::Algebra(spec) => spec.value(a),
            NormFunctional::OpL2 { tol } => op_norm_l2(a, *tol),
        }
    }

    pub fn label(&self) -> String {
        match self {
            NormFunctional::Algebra(spec) => serde_json::to_value(spec.tag())
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default(),
            NormFunctional::OpL2 { .. } => "op_l2".to_string(),
        }
    }
}

fn normalize(v: &mut [Complex64]) -> f64 {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for z in v.iter_mut() {
            *z /= norm;
        }
    }
    norm
}

fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal
/// `alphas` and off-diagonal `betas`, with the last component of its
/// eigenvector.
fn top_ritz_pair(alphas: &[f64], betas: &[f64]) -> (f64, f64) {
    let k = alphas.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j || j + 1 == i {
            betas[i.min(j)]
        } else {
            0.0
        }
    });
    let eig = t.symmetric_eigen();
    let top = eig.eigenvalues.imax();
    (eig.eigenvalues[top], eig.eigenvectors[(k - 1, top)])
}

/// Largest singular value of `A` by Krylov-accelerated power iteration on
/// `A^*A`.
///
/// Starting from a fixed-seed vector, the iterates `(A^*A)^j x` are
/// orthonormalized as they are produced (Lanczos with full
/// reorthogonalization) and the estimate is the largest Ritz value of
/// `A^*A` on their span. It dominates the plain power-method Rayleigh
/// quotient after the same number of steps, and converges at a useful rate
/// even when the top singular values nearly coincide. Iteration stops once
/// the Ritz residual falls below `tol` relative to the estimate, or the
/// Krylov space becomes invariant.
pub fn op_norm_l2(a: &BlockMatrix, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if a.is_zero() || a.total_dim() == 0 {
        return Ok(0.0);
    }
    let n = a.total_dim();
    let mut rng = stream(POWER_SEED);
    let draw = |rng: &mut crate::rng::Stream| {
        let mut x: Vec<Complex64> = (0..n).map(|_| complex_unit_box(rng)).collect();
        normalize(&mut x);
        x
    };
    let rows = a.csr();
    let columns = a.csc();
    let mut q = draw(&mut rng);
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut estimate = 0.0;
    for step in 0..POWER_ITERATION_CAP {
        let mut w = columns.apply_adjoint(&rows.apply(&q));
        alphas.push(inner(&q, &w).re);
        basis.push(q);
        for _ in 0..2 {
            for v in &basis {
                let c = inner(v, &w);
                w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
            }
        }
        let beta = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let k = alphas.len();
        let scale = alphas.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let exhausted = k == n || beta <= f64::EPSILON * scale;
        let check = k <= 64 || k % (k / 32) == 0 || step + 1 == POWER_ITERATION_CAP;
        if !(exhausted || check) {
            w.iter_mut().for_each(|z| *z /= beta);
            betas.push(beta);
            q = w;
            continue;
        }
        let (theta, last) = top_ritz_pair(&alphas, &betas);
        estimate = theta.max(0.0);
        if exhausted && estimate == 0.0 && k < n {
            // The start vector fell into the kernel of `A`; restart.
            basis.clear();
            alphas.clear();
            betas.clear();
            q = draw(&mut rng);
            continue;
        }
        if exhausted || beta * last.abs() <= tol * estimate {
            return Ok(estimate.sqrt());
        }
        w.iter_mut().for_each(|z| *z /= beta);
        betas.push(beta);
        q = w;
    }
    Err(Error::NoConvergence {
        iterations: POWER_ITERATION_CAP,
        estimate: estimate.sqrt(),
        iterate: q,
    })
}

/// Largest singular value of the densified matrix (full SVD).
pub fn dense_op_norm(a: &BlockMatrix) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    a.densify().singular_values().max()
}

/// Largest eigenvalue modulus of the densified matrix: Hermitian
/// eigensolver when `A = A^*`, complex Schur form otherwise.
pub fn dense_spectral_radius(a: &BlockMatrix) -> Result<f64> {
    if a.is_zero() {
        return Ok(0.0);
    }
    let dense = a.densify();
    if a.is_hermitian(0.0) {
        return Ok(dense
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0f64, |r, v| r.max(v.abs())));
    }
    let eig = dense
        .eigenvalues()
        .ok_or_else(|| Error::Overflow("Schur decomposition did not converge".into()))?;
    Ok(eig.iter().fold(0.0f64, |r, z| r.max(z.norm())))
}

/// Schur-test upper bound for the operator norm on the `m_weight`-weighted
/// `ℓ^p` space: `C ‖A‖_{S¹_ν}` with `C` the sampled moderateness constant of
/// `m_weight` with respect to `ν`.
pub fn op_norm_bound_lp(
    a: &BlockMatrix,
    nu: &WeightSpec,
    m_weight: &WeightSpec,
    p: f64,
) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "p must be >= 1 (inf allowed), got {p}"
        )));
    }
    let samples = default_sample_pairs(a.index_set(), 64);
    let (c, _) = check_moderate(m_weight, nu, &samples)?;
    if !c.is_finite() {
        return Err(Error::Precondition(format!(
            "{m_weight} is not {nu}-moderate on the samples"
        )));
    }
    Ok(c * schur_p_norm(a, nu, 1.0)?.value)
}

/// Column and entry estimates against the `ℓ²` operator norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnBoundReport {
    pub p: f64,
    pub op_norm: f64,
    /// `sup_{l, |f|=1} (Σ_k ‖A_{k,l} f‖²)^{1/2}`, computed exactly.
    pub max_column_norm: f64,
    pub column_witness: Option<usize>,
    /// `sup_{k,l} ‖A_{k,l}‖`.
    pub max_block_norm: f64,
    pub passed: bool,
}

/// Checks `(Σ_k ‖A_{k,l} f‖^p)^{1/p} <= ‖A‖` and `sup ‖A_{k,l}‖ <= ‖A‖`.
///
/// Only `p = 2` is supported: there the supremum over unit `f` is exactly
/// `λ_max(Σ_k A_{k,l}^* A_{k,l})^{1/2}`, so no sampling is needed.
pub fn column_lp_bound_check(a: &BlockMatrix, p: f64) -> Result<ColumnBoundReport> {
    if p != 2.0 {
        return Err(Error::Unsupported(format!(
            "column bound check is implemented for p = 2 only, got {p}"
        )));
    }
    let m = a.block_dim();
    let mut grams = vec![Block::zeros(m); a.size()];
    for (&(_, l), b) in a.entries() {
        grams[l].mul_acc(&b.adjoint(), b);
    }
    let mut max_column = 0.0f64;
    let mut witness = None;
    for (l, g) in grams.iter().enumerate() {
        let v = g.norm().sqrt();
        if v > max_column {
            max_column = v;
            witness = Some(l);
        }
    }
    let op = op_norm_l2(a, 1e-12)?;
    let max_block = a.max_block_norm();
    let slack = 1e-9 * op.max(1.0);
    Ok(ColumnBoundReport {
        p,
        op_norm: op,
        max_column_norm: max_column,
        column_witness: witness,
        max_block_norm: max_block,
        passed: max_column <= op + slack && max_block <= op + slack,
    })
}

/// Gelfand sequence of one norm functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub op_norm_l2: f64,
    /// `(n, ‖A^n‖^{1/n})` for `n = 1, 2, 4, …, n_max`.
    pub gelfand_sequence: Vec<(u64, f64)>,
    pub radius_estimate: f64,
    pub method: GelfandMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GelfandMethod {
    pub functional: NormFunctional,
    pub n_max: u64,
    pub squarings: u32,
    /// `ln` of the total factor divided out of the last iterate.
    pub log_scale: f64,
}

pub fn gelfand_radius(
    a: &BlockMatrix,
    functional: &NormFunctional,
    n_max: u64,
) -> Result<SpectralReport> {
    Ok(gelfand_radii(a, std::slice::from_ref(functional), n_max)?.remove(0))
}

/// Gelfand sequences of several functionals from one chain of repeated
/// squarings.
///
/// Each iterate is stored as `A^{2^j} / c_j` with its largest entry scaled
/// to one; `ln c_j` is accumulated exactly and added back when taking the
/// `2^j`-th root, so radii far from one cannot overflow at `n = 256`.
pub fn gelfand_radii(
    a: &BlockMatrix,
    functionals: &[NormFunctional],
    n_max: u64,
) -> Result<Vec<SpectralReport>> {
    if n_max < 2 {
        return Err(Error::InvalidParameter(format!(
            "n_max must be >= 2, got {n_max}"
        )));
    }
    let op = op_norm_l2(a, DEFAULT_OPNORM_TOL)?;
    let mut sequences: Vec<Vec<(u64, f64)>> = vec![Vec::new(); functionals.len()];
    let mut iterate = a.clone().pruned();
    let mut log_scale = 0.0f64;
    let mut n = 1u64;
    let mut squarings = 0u32;
    let mut vanished = false;
    loop {
        if !vanished {
            let s = iterate.max_abs();
            if s == 0.0 {
                vanished = true;
            } else {
                iterate = iterate.scale_real(1.0 / s);
                log_scale += s.ln();
            }
        }
        for (f, seq) in functionals.iter().zip(sequences.iter_mut()) {
            let value = if vanished {
                0.0
            } else {
                let v = f.eval(&iterate)?;
                if v == 0.0 {
                    0.0
                } else {
                    ((v.ln() + log_scale) / n as f64).exp()
                }
            };
            if !value.is_finite() {
                return Err(Error::Overflow(format!(
                    "Gelfand sequence of {} at n = {n}",
                    f.label()
                )));
            }
            seq.push((n, value));
        }
        if n.saturating_mul(2) > n_max {
            break;
        }
        if !vanished {
            iterate = iterate.matmul(&iterate)?.pruned();
            log_scale *= 2.0;
        }
        n *= 2;
        squarings += 1;
    }
    Ok(functionals
        .iter()
        .zip(sequences)
        .map(|(f, seq)| SpectralReport {
            op_norm_l2: op,
            radius_estimate: seq.last().map(|&(_, v)| v).unwrap_or(0.0),
            gelfand_sequence: seq,
            method: GelfandMethod {
                functional: f.clone(),
                n_max,
                squarings,
                log_scale,
            },
        })
        .collect())
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse of the finite section by dense LU, re-blocked over the same
/// index set. The condition number is estimated as `‖A‖_1 ‖A^{-1}‖_1`.
pub fn invert_finite_section(a: &BlockMatrix, cond_cap: f64) -> Result<BlockMatrix> {
    let dense = a.densify();
    let inverse = dense
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::IllConditioned {
            cond: f64::INFINITY,
            cap: cond_cap,
        })?;
    let cond = one_norm(&dense) * one_norm(&inverse);
    if !(cond <= cond_cap) {
        return Err(Error::IllConditioned {
            cond,
            cap: cond_cap,
        });
    }
    BlockMatrix::from_dense(a.index_set().clone(), a.block_dim(), &inverse)
}

/// `Σ_{n=0}^{N} (I - A)^n`, with `N` the first index whose tail bound
/// `q^{N+1} / (1 - q)` falls below `tol`, `q = ‖I - A‖`.
pub fn neumann_inverse(a: &BlockMatrix, tol: f64) -> Result<BlockMatrix> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let id = BlockMatrix::identity(a.index_set().clone(), a.block_dim())?;
    let b = id.sub(a)?.pruned();
    let q = op_norm_l2(&b, 1e-12)?;
    if q >= 1.0 {
        return Err(Error::Precondition(format!(
            "Neumann series needs ‖I - A‖ < 1, got {q}"
        )));
    }
    let mut terms = 0u32;
    while q > 0.0 && q.powi(terms as i32 + 1) / (1.0 - q) >= tol {
        terms += 1;
    }
    // Horner: S = I + B(I + B(I + …)).
    let mut sum = id.clone();
    for _ in 0..terms {
        sum = id.add(&b.matmul(&sum)?)?;
    }
    Ok(sum)
}

/// Radius-bucketed sup of block norms and the fitted decay exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub bucket_width: f64,
    /// `edges[i]..edges[i+1]` is bucket `i`; the last edge exceeds the diameter.
    pub bucket_edges: Vec<f64>,
    pub bucket_sup: Vec<f64>,
    /// Distance `|k - l|` at which each bucket's sup is attained.
    pub sup_radius: Vec<Option<f64>>,
    /// Least-squares slope of `ln sup` against `ln(1 + r)`.
    pub fitted_exponent: Option<f64>,
    /// Inclusive range of buckets that fed the fit.
    pub fit_range: Option<(usize, usize)>,
}

impl DecayProfile {
    /// Rows `(r_lo, r_hi, sup_norm)`.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.bucket_sup
            .iter()
            .enumerate()
            .map(|(i, &s)| (self.bucket_edges[i], self.bucket_edges[i + 1], s))
    }
}

/// Fraction of the diameter beyond which radii are left out of the fit.
const FIT_RADIUS_FRACTION: f64 = 0.8;

/// Buckets `|k - l|` into `[i w, (i+1) w)` over `[0, diameter]`.
///
/// The fit regresses `ln sup` against `ln(1 + r*)`, with `r*` the distance
/// where the bucket's sup is attained, over nonzero buckets whose `r*` lies
/// within the first 80% of the diameter. Fewer than three such buckets leave
/// the exponent unset.
pub fn decay_profile(a: &BlockMatrix, bucket_width: f64) -> Result<DecayProfile> {
    if !(bucket_width > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bucket width must be positive, got {bucket_width}"
        )));
    }
    let set = a.index_set();
    let diameter = set.diameter();
    let buckets = (diameter / bucket_width).floor() as usize + 1;
    let mut sup = vec![0.0f64; buckets];
    let mut at: Vec<Option<f64>> = vec![None; buckets];
    for &((k, l), v) in NormTable::new(a).entries() {
        let r = set.distance(k, l);
        let i = ((r / bucket_width).floor() as usize).min(buckets - 1);
        if v > sup[i] {
            sup[i] = v;
            at[i] = Some(r);
        }
    }
    let edges = (0..=buckets).map(|i| i as f64 * bucket_width).collect();
    let cutoff = FIT_RADIUS_FRACTION * diameter;
    let used: Vec<usize> = (0..buckets)
        .filter(|&i| sup[i] > 0.0 && at[i].is_some_and(|r| r <= cutoff))
        .collect();
    let (fitted_exponent, fit_range) = if used.len() >= 3 {
        let xs: Vec<f64> = used
            .iter()
            .map(|&i| at[i].map_or(0.0, |r| (1.0 + r).ln()))
            .collect();
        let ys: Vec<f64> = used.iter().map(|&i| sup[i].ln()).collect();
        (
            Some(least_squares_slope(&xs, &ys)),
            Some((used[0], used[used.len() - 1])),
        )
    } else {
        (None, None)
    };
    Ok(DecayProfile {
        bucket_width,
        bucket_edges: edges,
        bucket_sup: sup,
        sup_radius: at,
        fitted_exponent,
        fit_range,
    })
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// `‖A²‖_{J_s} / (‖A‖_{J_s}^{2-γ} ‖A‖_{B(ℓ²)}^γ)` with `γ = 1 - d/s`.
pub fn lemma_gamma_ratio(a: &BlockMatrix, s: f64) -> Result<f64> {
    let d = a.index_set().dim() as f64;
    if !(s > d) {
        return Err(Error::InvalidParameter(format!(
            "need s > d = {d}, got {s}"
        )));
    }
    if a.is_zero() {
        return Err(Error::InvalidParameter(
            "ratio is undefined for the zero matrix".into(),
        ));
    }
    let gamma = 1.0 - d / s;
    let sq = jaffard_norm(&a.matmul(a)?, s)?.value;
    let j = jaffard_norm(a, s)?.value;
    let op = op_norm_l2(a, DEFAULT_OPNORM_TOL)?;
    Ok(sq / (j.powf(2.0 - gamma) * op.powf(gamma)))
}

/// Quotient rule `δ(A^{-1}) = -A^{-1} δ(A) A^{-1}` and the derivation-norm
/// estimate for the inverse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotientRuleReport {
    pub axis: usize,
    /// Max block norm of `δ(A^{-1}) + A^{-1} δ(A) A^{-1}`.
    pub deviation: f64,
    /// `deviation` over the max block norm of `δ(A^{-1})` (zero when both vanish).
    pub relative_deviation: f64,
    pub s: f64,
    /// `‖A^{-1}‖_{D(δ)}` with base norm `J_s`.
    pub inverse_graph_norm: f64,
    /// `(C ‖A^{-1}‖_{J_s})² ‖A‖_{D(δ)}`, with `C` the convolution constant,
    /// which dominates the Banach-algebra norm of `J_s`.
    pub certified_bound: f64,
    pub estimate_holds: bool,
}

pub fn quotient_rule_check(a: &BlockMatrix, axis: usize, s: f64) -> Result<QuotientRuleReport> {
    let inv = invert_finite_section(a, DEFAULT_COND_CAP)?;
    let lhs = inv.derivation(axis)?;
    let rhs = inv.matmul(&a.derivation(axis)?)?.matmul(&inv)?;
    let deviation = lhs.add(&rhs)?.max_block_norm();
    let scale = lhs.max_block_norm();
    let relative_deviation = if deviation == 0.0 {
        0.0
    } else {
        deviation / scale
    };
    let mut alpha = vec![0u32; a.index_set().dim()];
    alpha[axis] = 1;
    let base = NormSpec::Jaffard { s };
    let inverse_graph_norm = aniso_norm(&inv, &base, &alpha)?.value;
    let c = convolution_bound_constant(a.index_set(), s)?.max(1.0);
    let inv_j = jaffard_norm(&inv, s)?.value;
    let certified_bound = (c * inv_j).powi(2) * aniso_norm(a, &base, &alpha)?.value;
    Ok(QuotientRuleReport {
        axis,
        deviation,
        relative_deviation,
        s,
        inverse_graph_norm,
        certified_bound,
        estimate_holds: inverse_graph_norm <= certified_bound * (1.0 + 1e-12),
    })
}

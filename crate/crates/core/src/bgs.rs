//! Side-diagonal and Fourier tools on lattice sections `Z^d ∩ box`.
//!
//! Conjugating `A` by the modulations `M_t = diag(e^{2πi k·t} I)` gives the
//! symbol `f_A(t) = Σ_n D_A(n) e^{2πi n·t}`, a trigonometric polynomial with
//! matrix coefficients. Its Fourier coefficients are computed by uniform
//! quadrature, which is exact once the grid outruns the bandwidth.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::block::Block;
use crate::blockmat::BlockMatrix;
use crate::error::{Error, Result};
use crate::norms::{bgs_norm, side_diagonal_sups, NormTable};
use crate::pointset::PointSet;
use crate::rng::{stream, uniform};
use crate::spectral::{invert_finite_section, op_norm_l2, DEFAULT_COND_CAP, DEFAULT_OPNORM_TOL};
use crate::weights::{
    check_moderate, check_submultiplicative, check_symmetric, default_sample_pairs,
    default_sample_points, grs_profile, grs_trend_ok, WeightSpec,
};

/// Highest lattice dimension the quadrature accepts.
pub const MAX_FOURIER_DIM: usize = 2;
/// Length of the GRS profile used to vet the weight.
const GRS_HORIZON: usize = 4096;
/// Number of sampled `t` in the absolute-convergence check.
pub const SYMBOL_SAMPLES: usize = 32;

/// `e^{2πi f}`; quarter turns are returned exactly.
pub fn unit_phase(f: f64) -> Complex64 {
    let f = f.rem_euclid(1.0);
    let quarter = f * 4.0;
    if quarter == quarter.floor() {
        return match quarter as u8 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    Complex64::from_polar(1.0, TAU * f)
}

fn lattice_coords(set: &PointSet) -> Result<Vec<Vec<i64>>> {
    if !set.is_lattice() {
        return Err(Error::NotLattice);
    }
    (0..set.len())
        .map(|k| set.lattice_coords(k).ok_or(Error::NotLattice))
        .collect()
}

fn check_t(set: &PointSet, t: &[f64]) -> Result<()> {
    if t.len() != set.dim() {
        return Err(Error::DimensionMismatch(format!(
            "t has {} components in dimension {}",
            t.len(),
            set.dim()
        )));
    }
    Ok(())
}

fn dot(n: &[i64], t: &[f64]) -> f64 {
    n.iter().zip(t).map(|(&a, &b)| a as f64 * b).sum()
}

/// `M_t = diag(e^{2πi k·t} I_m)` with `k` the integer lattice coordinates.
pub fn modulation(t: &[f64], set: std::sync::Arc<PointSet>, m: usize) -> Result<BlockMatrix> {
    check_t(&set, t)?;
    let coords = lattice_coords(&set)?;
    let blocks = coords
        .iter()
        .map(|k| Block::scalar(m, unit_phase(dot(k, t))))
        .collect();
    BlockMatrix::diagonal(set, blocks)
}

/// `f_A(t) = M_t A M_{-t}`, entry `A_{k,l} e^{2πi (k-l)·t}`.
pub fn conjugated_symbol(a: &BlockMatrix, t: &[f64]) -> Result<BlockMatrix> {
    check_t(a.index_set(), t)?;
    let coords = lattice_coords(a.index_set())?;
    Ok(a.map_entries(|(k, l), b| {
        let n: Vec<i64> = coords[k]
            .iter()
            .zip(&coords[l])
            .map(|(x, y)| x - y)
            .collect();
        b.scale(unit_phase(dot(&n, t)))
    }))
}

/// The part of `A` supported on `l = k - n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SideDiagonal {
    pub offset: Vec<i64>,
    pub matrix: BlockMatrix,
    /// `d_A(n) = sup_k ‖A_{k,k-n}‖`.
    pub sup_norm: f64,
}

/// Splits `A` into its side diagonals, ordered by offset.
pub fn side_diagonals(a: &BlockMatrix) -> Result<Vec<SideDiagonal>> {
    let coords = lattice_coords(a.index_set())?;
    let mut parts: BTreeMap<Vec<i64>, BlockMatrix> = BTreeMap::new();
    for (&(k, l), b) in a.entries() {
        let n: Vec<i64> = coords[k]
            .iter()
            .zip(&coords[l])
            .map(|(x, y)| x - y)
            .collect();
        let part = match parts.entry(n) {
            std::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(BlockMatrix::zeros(a.index_set().clone(), a.block_dim())?)
            }
        };
        part.insert(k, l, b.clone())?;
    }
    Ok(parts
        .into_iter()
        .map(|(offset, matrix)| {
            let sup_norm = matrix.max_block_norm();
            SideDiagonal {
                offset,
                matrix,
                sup_norm,
            }
        })
        .collect())
}

/// `n ↦ d_A(n)` over the occurring offsets.
pub fn side_diagonal_profile(a: &BlockMatrix) -> Result<BTreeMap<Vec<i64>, f64>> {
    side_diagonal_sups(&NormTable::new(a))
}

/// A matrix-valued trigonometric polynomial on the torus `T^d`.
pub trait Symbol: Sync {
    fn index_set(&self) -> &std::sync::Arc<PointSet>;
    fn block_dim(&self) -> usize;
    /// Largest `|n_j|` of any nonzero Fourier mode, per axis.
    fn bandwidth(&self) -> Vec<i64>;
    fn eval(&self, t: &[f64]) -> Result<BlockMatrix>;
}

/// `t ↦ f_A(t)`.
pub struct MatrixSymbol<'a> {
    matrix: &'a BlockMatrix,
    bandwidth: Vec<i64>,
}

impl<'a> MatrixSymbol<'a> {
    pub fn new(matrix: &'a BlockMatrix) -> Result<Self> {
        let coords = lattice_coords(matrix.index_set())?;
        let mut bandwidth = vec![0i64; matrix.index_set().dim()];
        for (&(k, l), _) in matrix.entries() {
            for (j, bw) in bandwidth.iter_mut().enumerate() {
                *bw = (*bw).max((coords[k][j] - coords[l][j]).abs());
            }
        }
        Ok(MatrixSymbol { matrix, bandwidth })
    }
}

impl Symbol for MatrixSymbol<'_> {
    fn index_set(&self) -> &std::sync::Arc<PointSet> {
        self.matrix.index_set()
    }

    fn block_dim(&self) -> usize {
        self.matrix.block_dim()
    }

    fn bandwidth(&self) -> Vec<i64> {
        self.bandwidth.clone()
    }

    fn eval(&self, t: &[f64]) -> Result<BlockMatrix> {
        conjugated_symbol(self.matrix, t)
    }
}

/// A symbol given by a closure with a declared bandwidth.
pub struct FnSymbol<F> {
    index_set: std::sync::Arc<PointSet>,
    m: usize,
    bandwidth: Vec<i64>,
    f: F,
}

impl<F> FnSymbol<F>
where
    F: Fn(&[f64]) -> Result<BlockMatrix> + Sync,
{
    pub fn new(index_set: std::sync::Arc<PointSet>, m: usize, bandwidth: Vec<i64>, f: F) -> Self {
        FnSymbol {
            index_set,
            m,
            bandwidth,
            f,
        }
    }
}

impl<F> Symbol for FnSymbol<F>
where
    F: Fn(&[f64]) -> Result<BlockMatrix> + Sync,
{
    fn index_set(&self) -> &std::sync::Arc<PointSet> {
        &self.index_set
    }

    fn block_dim(&self) -> usize {
        self.m
    }

    fn bandwidth(&self) -> Vec<i64> {
        self.bandwidth.clone()
    }

    fn eval(&self, t: &[f64]) -> Result<BlockMatrix> {
        (self.f)(t)
    }
}

pub fn fourier_coefficient(symbol: &dyn Symbol, n: &[i64], grid: &[usize]) -> Result<BlockMatrix> {
    Ok(fourier_coefficients(symbol, &[n.to_vec()], grid)?.remove(0))
}

/// Grid points evaluated per parallel batch.
const QUADRATURE_BATCH: usize = 8;

/// `∫_{T^d} symbol(t) e^{-2πi n·t} dt` for every requested `n`, by the
/// uniform rule on `grid[0] × … × grid[d-1]` points.
///
/// The symbol is evaluated once per grid point; contributions are summed in
/// grid order, so the result does not depend on the thread count.
pub fn fourier_coefficients(
    symbol: &dyn Symbol,
    ns: &[Vec<i64>],
    grid: &[usize],
) -> Result<Vec<BlockMatrix>> {
    let set = symbol.index_set().clone();
    let d = set.dim();
    if d > MAX_FOURIER_DIM {
        return Err(Error::Unsupported(format!(
            "Fourier quadrature supports d <= {MAX_FOURIER_DIM}, got {d}"
        )));
    }
    if grid.len() != d || grid.iter().any(|&g| g == 0 || g % 2 != 0) {
        return Err(Error::InvalidParameter(format!(
            "grid must list one positive even size per axis, got {grid:?}"
        )));
    }
    let mut reach = symbol.bandwidth();
    for n in ns {
        if n.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "offset {n:?} in dimension {d}"
            )));
        }
        for (r, &c) in reach.iter_mut().zip(n) {
            *r = (*r).max(c.abs());
        }
    }
    if grid
        .iter()
        .zip(&reach)
        .any(|(&g, &r)| (g as i64) < 2 * r + 2)
    {
        return Err(Error::Aliasing {
            grid: grid.to_vec(),
            bandwidth: reach,
        });
    }

    let total: usize = grid.iter().product();
    let point = |idx: usize| -> Vec<usize> {
        let mut rest = idx;
        let mut out = vec![0; d];
        for j in (0..d).rev() {
            out[j] = rest % grid[j];
            rest /= grid[j];
        }
        out
    };
    // Exact character values: e^{-2πi n·t} with t_j = i_j / g_j.
    let character = |n: &[i64], i: &[usize]| -> Complex64 {
        n.iter()
            .zip(i)
            .zip(grid)
            .map(|((&nj, &ij), &g)| {
                unit_phase(-((nj * ij as i64).rem_euclid(g as i64) as f64) / g as f64)
            })
            .product()
    };

    let dim = set.len() * symbol.block_dim();
    let mut acc: Vec<DMatrix<Complex64>> = vec![DMatrix::zeros(dim, dim); ns.len()];
    let indices: Vec<usize> = (0..total).collect();
    for batch in indices.chunks(QUADRATURE_BATCH) {
        let values: Vec<(Vec<usize>, DMatrix<Complex64>)> = batch
            .par_iter()
            .map(|&idx| {
                let i = point(idx);
                let t: Vec<f64> = i
                    .iter()
                    .zip(grid)
                    .map(|(&ij, &g)| ij as f64 / g as f64)
                    .collect();
                Ok((i, symbol.eval(&t)?.densify()))
            })
            .collect::<Result<_>>()?;
        acc.par_iter_mut().zip(ns).for_each(|(sum, n)| {
            for (i, value) in &values {
                let c = character(n, i);
                sum.zip_apply(value, |s, v| *s += v * c);
            }
        });
    }
    let weight = 1.0 / total as f64;
    acc.into_iter()
        .map(|sum| {
            BlockMatrix::from_dense(
                set.clone(),
                symbol.block_dim(),
                &(sum * Complex64::new(weight, 0.0)),
            )
        })
        .collect()
}

/// Outcome of the finite-section Bochner–Phillips verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BochnerPhillipsReport {
    pub grid: Vec<usize>,
    /// Max block-norm gap between quadrature coefficients of `f_{A^{-1}}`
    /// and the side diagonals of `A^{-1}`.
    pub coefficient_deviation: f64,
    pub coefficient_witness: Option<Vec<i64>>,
    /// `‖A^{-1}‖_{C_ν}`.
    pub inverse_bgs_norm: f64,
    /// `sup_t ‖f_A(t)‖_{B(ℓ²)}` over the sampled `t`.
    pub symbol_sup: f64,
    /// `‖A‖_{C_1} = Σ_n d_A(n)`.
    pub unweighted_bgs_norm: f64,
    pub absolute_convergence_holds: bool,
    /// `‖A‖_{B(ℓ²)}` against `C ‖A‖_{C_ν}` with `C` the moderateness
    /// constant of the constant weight with respect to `ν`.
    pub op_norm: f64,
    pub young_bound: f64,
    pub young_bound_holds: bool,
    /// Offsets of `A^{-1}` with `|n_j| > extent_j / 2` on some axis; their
    /// side diagonals are shortened by the finite section.
    pub boundary_offsets: Vec<Vec<i64>>,
    pub passed: bool,
}

/// Tolerance on the quadrature-versus-side-diagonal comparison.
pub const COEFFICIENT_TOLERANCE: f64 = 1e-8;

fn check_weight(nu: &WeightSpec, set: &PointSet) -> Result<()> {
    let pairs = default_sample_pairs(set, 24);
    let points = default_sample_points(set, 64);
    let sub = check_submultiplicative(nu, &pairs)?;
    let sym = check_symmetric(nu, &points)?;
    let mut axis = vec![0.0; set.dim()];
    axis[0] = 1.0;
    let grs = grs_trend_ok(&grs_profile(nu, &axis, GRS_HORIZON)?);
    if !(sub.passed && sym.passed && grs) {
        return Err(Error::Precondition(format!(
            "weight {nu} must be submultiplicative, symmetric and GRS (ratios {:.3e}, {:.3e}; GRS trend {grs})",
            sub.worst_ratio, sym.worst_ratio
        )));
    }
    Ok(())
}

pub fn verify_bochner_phillips(
    a: &BlockMatrix,
    nu: &WeightSpec,
    grid: &[usize],
) -> Result<BochnerPhillipsReport> {
    let set = a.index_set().clone();
    lattice_coords(&set)?;
    check_weight(nu, &set)?;
    let inverse = invert_finite_section(a, DEFAULT_COND_CAP)?;
    let sides = side_diagonals(&inverse)?;
    let offsets: Vec<Vec<i64>> = sides.iter().map(|s| s.offset.clone()).collect();
    let coefficients = fourier_coefficients(&MatrixSymbol::new(&inverse)?, &offsets, grid)?;
    let mut deviation = 0.0f64;
    let mut witness = None;
    for (side, coefficient) in sides.iter().zip(&coefficients) {
        let gap = coefficient.max_block_diff(&side.matrix)?;
        if gap > deviation {
            deviation = gap;
            witness = Some(side.offset.clone());
        }
    }

    let inverse_bgs_norm = bgs_norm(&inverse, nu)?.value;
    let unweighted = bgs_norm(a, &WeightSpec::ConstantOne)?.value;
    let mut rng = stream(0x6267_7379_6d62_6f6c);
    let mut symbol_sup = 0.0f64;
    for _ in 0..SYMBOL_SAMPLES {
        let t: Vec<f64> = (0..set.dim())
            .map(|_| uniform(&mut rng, 0.0, 1.0))
            .collect();
        symbol_sup = symbol_sup.max(op_norm_l2(&conjugated_symbol(a, &t)?, DEFAULT_OPNORM_TOL)?);
    }
    let slack = 1e-9 * unweighted.max(1.0);
    let absolute_convergence_holds = symbol_sup <= unweighted + slack;

    let (c, _) = check_moderate(
        &WeightSpec::ConstantOne,
        nu,
        &default_sample_pairs(&set, 24),
    )?;
    let op_norm = op_norm_l2(a, DEFAULT_OPNORM_TOL)?;
    let young_bound = c * bgs_norm(a, nu)?.value;
    let young_bound_holds = op_norm <= young_bound + 1e-9 * young_bound.max(1.0);

    let extent = &set.lattice().ok_or(Error::NotLattice)?.extent;
    let boundary_offsets = offsets
        .iter()
        .filter(|n| {
            n.iter()
                .zip(extent)
                .any(|(&c, &e)| 2 * c.unsigned_abs() > e as u64)
        })
        .cloned()
        .collect();

    let passed = deviation <= COEFFICIENT_TOLERANCE
        && inverse_bgs_norm.is_finite()
        && absolute_convergence_holds
        && young_bound_holds;
    Ok(BochnerPhillipsReport {
        grid: grid.to_vec(),
        coefficient_deviation: deviation,
        coefficient_witness: witness,
        inverse_bgs_norm,
        symbol_sup,
        unweighted_bgs_norm: unweighted,
        absolute_convergence_holds,
        op_norm,
        young_bound,
        young_bound_holds,
        boundary_offsets,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointset::{make_jittered, make_lattice};
    use crate::rng::complex_unit_box;
    use crate::spectral::dense_op_norm;
    use std::sync::Arc;

    fn lattice(n: usize) -> Arc<PointSet> {
        Arc::new(make_lattice(1, 1.0, &[n]).unwrap())
    }

    fn shift(set: &Arc<PointSet>, m: usize) -> BlockMatrix {
        let n = set.len();
        BlockMatrix::from_entries(
            set.clone(),
            m,
            (0..n - 1).map(|k| ((k + 1, k), Block::identity(m))),
        )
        .unwrap()
    }

    fn random_banded(set: &Arc<PointSet>, m: usize, seed: u64, band: f64) -> BlockMatrix {
        let mut rng = stream(seed);
        let mut a = BlockMatrix::zeros(set.clone(), m).unwrap();
        for k in 0..set.len() {
            for l in 0..set.len() {
                if set.distance(k, l) <= band {
                    a.insert(k, l, Block::from_fn(m, |_, _| complex_unit_box(&mut rng)))
                        .unwrap();
                }
            }
        }
        a
    }

    #[test]
    fn modulation_examples() {
        let set = lattice(6);
        let id = BlockMatrix::identity(set.clone(), 2).unwrap();
        assert_eq!(modulation(&[0.0], set.clone(), 2).unwrap(), id);
        let m = modulation(&[0.25], set.clone(), 2).unwrap();
        assert_eq!(
            m.get(1, 1).unwrap(),
            &Block::scalar(2, Complex64::new(0.0, 1.0))
        );
        for t in [0.25, 0.1, 0.377] {
            let prod = modulation(&[t], set.clone(), 2)
                .unwrap()
                .matmul(&modulation(&[-t], set.clone(), 2).unwrap())
                .unwrap();
            assert!(prod.max_abs_diff(&id).unwrap() <= 4.0 * f64::EPSILON);
        }
        let jit = Arc::new(make_jittered(1, 1.0, 0.2, 1, &[6]).unwrap());
        assert!(matches!(modulation(&[0.1], jit, 2), Err(Error::NotLattice)));
    }

    #[test]
    fn conjugated_symbol_examples() {
        let set = lattice(12);
        let a = random_banded(&set, 2, 1, 3.0);
        assert_eq!(conjugated_symbol(&a, &[0.0]).unwrap(), a);
        let diag = BlockMatrix::diagonal(
            set.clone(),
            (0..12)
                .map(|k| Block::scalar(2, Complex64::new(k as f64, 1.0)))
                .collect(),
        )
        .unwrap();
        assert_eq!(conjugated_symbol(&diag, &[0.31]).unwrap(), diag);
        for t in [0.1, 0.5, 0.77] {
            let oracle = modulation(&[t], set.clone(), 2)
                .unwrap()
                .matmul(&a)
                .unwrap()
                .matmul(&modulation(&[-t], set.clone(), 2).unwrap())
                .unwrap();
            assert!(
                conjugated_symbol(&a, &[t])
                    .unwrap()
                    .max_abs_diff(&oracle)
                    .unwrap()
                    < 1e-13
            );
            let u = dense_op_norm(&conjugated_symbol(&a, &[t]).unwrap());
            assert!((u - dense_op_norm(&a)).abs() < 1e-10 * u);
        }
    }

    #[test]
    fn side_diagonal_examples() {
        let set = lattice(10);
        let id = BlockMatrix::identity(set.clone(), 2).unwrap();
        let sides = side_diagonals(&id).unwrap();
        assert_eq!(sides.len(), 1);
        assert_eq!(sides[0].offset, vec![0]);
        let sides = side_diagonals(&shift(&set, 2)).unwrap();
        assert_eq!(sides.len(), 1);
        assert_eq!(sides[0].offset, vec![1]);

        let a = random_banded(&set, 2, 2, 3.0);
        let sides = side_diagonals(&a).unwrap();
        let mut sum = BlockMatrix::zeros(set.clone(), 2).unwrap();
        for s in &sides {
            for (&(k, l), _) in s.matrix.entries() {
                assert_eq!(k as i64 - l as i64, s.offset[0]);
            }
            sum = sum.add(&s.matrix).unwrap();
            let op = dense_op_norm(&s.matrix);
            assert!((op - s.sup_norm).abs() <= 1e-12 * op);
        }
        assert_eq!(sum, a);
    }

    #[test]
    fn side_diagonals_in_two_dimensions() {
        let set = Arc::new(make_lattice(2, 1.0, &[4, 3]).unwrap());
        let a = random_banded(&set, 1, 3, 1.5);
        let sides = side_diagonals(&a).unwrap();
        let mut sum = BlockMatrix::zeros(set.clone(), 1).unwrap();
        for s in &sides {
            sum = sum.add(&s.matrix).unwrap();
        }
        assert_eq!(sum, a);
        let c = fourier_coefficient(&MatrixSymbol::new(&a).unwrap(), &[1, -1], &[4, 4]).unwrap();
        let expect = sides.iter().find(|s| s.offset == vec![1, -1]).unwrap();
        assert!(c.max_block_diff(&expect.matrix).unwrap() < 1e-13);
    }

    #[test]
    fn fourier_coefficient_examples() {
        let set = lattice(16);
        let a = random_banded(&set, 2, 4, 2.0);
        let band = side_diagonals(&a)
            .unwrap()
            .into_iter()
            .find(|s| s.offset == vec![2])
            .unwrap()
            .matrix;
        let symbol = MatrixSymbol::new(&band).unwrap();
        for n in -3i64..=3 {
            let c = fourier_coefficient(&symbol, &[n], &[8]).unwrap();
            if n == 2 {
                assert!(c.max_block_diff(&band).unwrap() < 1e-12);
            } else {
                assert!(c.max_abs() < 1e-12);
            }
        }
        let constant = FnSymbol::new(set.clone(), 2, vec![0], |_t: &[f64]| Ok(a.clone()));
        assert!(
            fourier_coefficient(&constant, &[0], &[4])
                .unwrap()
                .max_abs_diff(&a)
                .unwrap()
                < 1e-14
        );
        assert!(
            fourier_coefficient(&constant, &[1], &[4])
                .unwrap()
                .max_abs()
                < 1e-14
        );
        let full = MatrixSymbol::new(&a).unwrap();
        assert!(matches!(
            fourier_coefficient(&full, &[0], &[4]),
            Err(Error::Aliasing { .. })
        ));
        assert!(fourier_coefficient(&full, &[0], &[7]).is_err());
        let cube = Arc::new(make_lattice(3, 1.0, &[2, 2, 2]).unwrap());
        let c3 = BlockMatrix::identity(cube, 1).unwrap();
        assert!(matches!(
            fourier_coefficient(&MatrixSymbol::new(&c3).unwrap(), &[0, 0, 0], &[4, 4, 4]),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn bochner_phillips_examples() {
        let set = lattice(16);
        let nu = WeightSpec::polynomial(1.0);
        let id = BlockMatrix::identity(set.clone(), 2).unwrap();
        let r = verify_bochner_phillips(&id, &nu, &[8]).unwrap();
        assert!(r.passed);
        assert!(r.coefficient_deviation < 1e-15);
        assert_eq!(r.inverse_bgs_norm, 1.0);

        let a = id.add(&shift(&set, 2).scale_real(0.4)).unwrap();
        let r = verify_bochner_phillips(&a, &nu, &[64]).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.coefficient_deviation <= 1e-9);
        assert!(r.boundary_offsets.iter().all(|n| n[0] > 8));
        assert!(r.op_norm <= r.young_bound);

        let lopsided = WeightSpec::custom("lopsided", |x: &[f64]| 1.0 + x[0].max(0.0));
        assert!(matches!(
            verify_bochner_phillips(&a, &lopsided, &[64]),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn neumann_side_diagonals_in_closed_form() {
        let set = lattice(20);
        let id = BlockMatrix::identity(set.clone(), 2).unwrap();
        let a = id.add(&shift(&set, 2).scale_real(0.4)).unwrap();
        let inv = invert_finite_section(&a, DEFAULT_COND_CAP).unwrap();
        for side in side_diagonals(&inv).unwrap() {
            let n = side.offset[0];
            assert!(n >= 0);
            assert!((side.sup_norm - 0.4f64.powi(n as i32)).abs() < 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn side_diagonal_profile_laws(seed in 0u64..10_000) {
                let set = lattice(12);
                let a = random_banded(&set, 2, seed, 3.0);
                let b = random_banded(&set, 2, seed + 1, 2.0);
                let da = side_diagonal_profile(&a).unwrap();
                let db = side_diagonal_profile(&b).unwrap();
                let dab = side_diagonal_profile(&a.matmul(&b).unwrap()).unwrap();
                for (l, &v) in &dab {
                    let conv: f64 = da.iter()
                        .filter_map(|(n, x)| db.get(&vec![l[0] - n[0]]).map(|y| x * y))
                        .sum();
                    prop_assert!(v <= conv * (1.0 + 1e-12));
                }
                let dstar = side_diagonal_profile(&a.adjoint()).unwrap();
                for (l, &v) in &da {
                    prop_assert_eq!(dstar.get(&vec![-l[0]]).copied(), Some(v));
                }
                prop_assert_eq!(conjugated_symbol(&a, &[0.0]).unwrap(), a.clone());
            }
        }
    }
}

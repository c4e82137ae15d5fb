//! Operator-valued matrices `A = [A_{k,l}]_{k,l ∈ X}` with `m × m` blocks.
//!
//! The matrix is sparse over index pairs and dense inside a block. Absent
//! entries are exact zeros; equality treats a stored zero block and an absent
//! entry as the same thing.
//!
//! Products and matrix-vector products run in parallel over result rows. Each
//! entry is summed in increasing inner-index order, so the floating-point
//! result is independent of scheduling.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::block::{gemm_acc, gemv_acc, gemv_adjoint_acc, Block};
use crate::error::{Error, Result};
use crate::pointset::PointSet;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone)]
pub struct BlockMatrix {
    index_set: Arc<PointSet>,
    m: usize,
    entries: BTreeMap<(usize, usize), Block>,
}

fn same_set(a: &Arc<PointSet>, b: &Arc<PointSet>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl BlockMatrix {
    pub fn zeros(index_set: Arc<PointSet>, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter(
                "block dimension must be at least 1".into(),
            ));
        }
        Ok(BlockMatrix {
            index_set,
            m,
            entries: BTreeMap::new(),
        })
    }

    pub fn identity(index_set: Arc<PointSet>, m: usize) -> Result<Self> {
        let n = index_set.len();
        let mut a = Self::zeros(index_set, m)?;
        for k in 0..n {
            a.entries.insert((k, k), Block::identity(m));
        }
        Ok(a)
    }

    /// Block diagonal matrix with the given blocks in index order.
    pub fn diagonal(index_set: Arc<PointSet>, blocks: Vec<Block>) -> Result<Self> {
        if blocks.len() != index_set.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} diagonal blocks for {} points",
                blocks.len(),
                index_set.len()
            )));
        }
        let m = blocks.first().map(Block::dim).unwrap_or(1);
        let mut a = Self::zeros(index_set, m)?;
        for (k, b) in blocks.into_iter().enumerate() {
            a.insert(k, k, b)?;
        }
        Ok(a)
    }

    pub fn from_entries(
        index_set: Arc<PointSet>,
        m: usize,
        entries: impl IntoIterator<Item = ((usize, usize), Block)>,
    ) -> Result<Self> {
        let mut a = Self::zeros(index_set, m)?;
        for ((k, l), b) in entries {
            a.insert(k, l, b)?;
        }
        Ok(a)
    }

    /// Stores `block` at `(k, l)`, replacing any previous entry.
    pub fn insert(&mut self, k: usize, l: usize, block: Block) -> Result<()> {
        self.index_set.check_index(k)?;
        self.index_set.check_index(l)?;
        if block.dim() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "block of size {} in a matrix with block size {}",
                block.dim(),
                self.m
            )));
        }
        self.entries.insert((k, l), block);
        Ok(())
    }

    pub fn get(&self, k: usize, l: usize) -> Option<&Block> {
        self.entries.get(&(k, l))
    }

    /// Stored entries in lexicographic `(k, l)` order.
    pub fn entries(&self) -> impl ExactSizeIterator<Item = (&(usize, usize), &Block)> + '_ {
        self.entries.iter()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn index_set(&self) -> &Arc<PointSet> {
        &self.index_set
    }

    pub fn block_dim(&self) -> usize {
        self.m
    }

    /// Number of index points.
    pub fn size(&self) -> usize {
        self.index_set.len()
    }

    /// Dimension of the densified operator, `|X| * m`.
    pub fn total_dim(&self) -> usize {
        self.size() * self.m
    }

    pub fn is_zero(&self) -> bool {
        self.entries.values().all(Block::is_zero)
    }

    /// Drops stored blocks that are exactly zero.
    pub fn pruned(mut self) -> Self {
        self.entries.retain(|_, b| !b.is_zero());
        self
    }

    fn check_compatible(&self, other: &BlockMatrix) -> Result<()> {
        if !same_set(&self.index_set, &other.index_set) {
            return Err(Error::IndexSetMismatch);
        }
        if self.m != other.m {
            return Err(Error::DimensionMismatch(format!(
                "block sizes {} and {}",
                self.m, other.m
            )));
        }
        Ok(())
    }

    pub(crate) fn row_lists(&self) -> Vec<Vec<(usize, &Block)>> {
        let mut rows: Vec<Vec<(usize, &Block)>> = vec![Vec::new(); self.size()];
        for (&(k, l), b) in &self.entries {
            rows[k].push((l, b));
        }
        rows
    }

    /// Compressed-row copy with contiguous block storage.
    pub(crate) fn csr(&self) -> Csr {
        Csr::build(
            self.size(),
            self.m,
            self.entries.iter().map(|(&(k, l), b)| (k, l, b)),
        )
    }

    /// Compressed-column copy: row `l` of the result lists the entries of
    /// column `l`, in increasing row order.
    pub(crate) fn csc(&self) -> Csr {
        let mut by_column: Vec<(usize, usize, &Block)> =
            self.entries.iter().map(|(&(k, l), b)| (l, k, b)).collect();
        by_column.sort_by_key(|&(l, k, _)| (l, k));
        Csr::build(self.size(), self.m, by_column.into_iter())
    }

    /// `(A f)_k = Σ_l A_{k,l} f_l`.
    pub fn apply(&self, f: &BlockVector) -> Result<BlockVector> {
        if !same_set(&self.index_set, &f.index_set) {
            return Err(Error::IndexSetMismatch);
        }
        if self.m != f.m {
            return Err(Error::DimensionMismatch(format!(
                "block size {} vs vector size {}",
                self.m, f.m
            )));
        }
        let rows = self.row_lists();
        let comps: Vec<Option<(usize, Vec<Complex64>)>> = rows
            .par_iter()
            .enumerate()
            .map(|(k, row)| {
                let mut out: Option<Vec<Complex64>> = None;
                for &(l, b) in row {
                    if let Some(v) = f.components.get(&l) {
                        let acc = out.get_or_insert_with(|| vec![ZERO; self.m]);
                        b.mul_vec_acc(v, acc);
                    }
                }
                out.map(|v| (k, v))
            })
            .collect();
        Ok(BlockVector {
            index_set: self.index_set.clone(),
            m: self.m,
            components: comps.into_iter().flatten().collect(),
        })
    }

    /// `y = A x` on flat vectors of length `total_dim`.
    pub fn apply_flat(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.csr().apply(x)
    }

    /// `y = A^* x` on flat vectors, without forming the adjoint.
    pub fn apply_adjoint_flat(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.csc().apply_adjoint(x)
    }

    /// `[AB]_{k,l} = Σ_n A_{k,n} B_{n,l}` over the product support.
    pub fn matmul(&self, other: &BlockMatrix) -> Result<BlockMatrix> {
        self.check_compatible(other)?;
        let n = self.size();
        let m = self.m;
        let mm = m * m;
        let a = self.csr();
        let b = other.csr();
        let rows: Vec<Vec<(usize, Block)>> = (0..n)
            .into_par_iter()
            .map_init(
                || (vec![ZERO; n * mm], vec![false; n]),
                |(acc, hit), k| {
                    let mut touched = Vec::new();
                    for i in a.row(k) {
                        let inner = a.cols[i];
                        let a_block = a.block(i);
                        for j in b.row(inner) {
                            let l = b.cols[j];
                            if !hit[l] {
                                hit[l] = true;
                                touched.push(l);
                            }
                            gemm_acc(m, &mut acc[l * mm..(l + 1) * mm], a_block, b.block(j));
                        }
                    }
                    touched.sort_unstable();
                    touched
                        .into_iter()
                        .map(|l| {
                            hit[l] = false;
                            let slot = &mut acc[l * mm..(l + 1) * mm];
                            let block = Block::from_slice(m, slot);
                            slot.fill(ZERO);
                            (l, block)
                        })
                        .collect()
                },
            )
            .collect();
        let entries = rows
            .into_iter()
            .enumerate()
            .flat_map(|(k, row)| row.into_iter().map(move |(l, b)| ((k, l), b)))
            .collect();
        Ok(BlockMatrix {
            index_set: self.index_set.clone(),
            m,
            entries,
        })
    }

    /// `A^*`: entry `(k, l)` is the conjugate transpose of `A_{l,k}`.
    pub fn adjoint(&self) -> BlockMatrix {
        BlockMatrix {
            index_set: self.index_set.clone(),
            m: self.m,
            entries: self
                .entries
                .iter()
                .map(|(&(k, l), b)| ((l, k), b.adjoint()))
                .collect(),
        }
    }

    fn combine(&self, other: &BlockMatrix, sign: f64) -> Result<BlockMatrix> {
        self.check_compatible(other)?;
        let mut entries = self.entries.clone();
        for (key, b) in &other.entries {
            let b = b.scale_real(sign);
            entries
                .entry(*key)
                .and_modify(|e| e.add_assign(&b))
                .or_insert(b);
        }
        Ok(BlockMatrix {
            index_set: self.index_set.clone(),
            m: self.m,
            entries,
        })
    }

    pub fn add(&self, other: &BlockMatrix) -> Result<BlockMatrix> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &BlockMatrix) -> Result<BlockMatrix> {
        self.combine(other, -1.0)
    }

    pub fn scale(&self, c: Complex64) -> BlockMatrix {
        self.map_entries(|_, b| b.scale(c))
    }

    pub fn scale_real(&self, c: f64) -> BlockMatrix {
        self.map_entries(|_, b| b.scale_real(c))
    }

    /// Applies `f((k, l), A_{k,l})` to every stored entry.
    pub fn map_entries(&self, mut f: impl FnMut((usize, usize), &Block) -> Block) -> BlockMatrix {
        BlockMatrix {
            index_set: self.index_set.clone(),
            m: self.m,
            entries: self
                .entries
                .iter()
                .map(|(&key, b)| (key, f(key, b)))
                .collect(),
        }
    }

    /// Commutator derivation `δ_j(A) = M_j A - A M_j`, entry `(k_j - l_j) A_{k,l}`,
    /// where `M_j` multiplies by the `j`-th coordinate. `axis` is zero-based.
    pub fn derivation(&self, axis: usize) -> Result<BlockMatrix> {
        let d = self.index_set.dim();
        if axis >= d {
            return Err(Error::InvalidParameter(format!(
                "axis {axis} out of range for dimension {d}"
            )));
        }
        let set = self.index_set.clone();
        Ok(self.map_entries(|(k, l), b| b.scale_real(set.point(k)[axis] - set.point(l)[axis])))
    }

    /// `i δ_j(A)`. Unlike the plain commutator, which satisfies
    /// `δ_j(A^*) = -δ_j(A)^*`, this map commutes with the involution. Block
    /// norms are the same as for [`derivation`](Self::derivation).
    pub fn symmetric_derivation(&self, axis: usize) -> Result<BlockMatrix> {
        Ok(self.derivation(axis)?.scale(Complex64::new(0.0, 1.0)))
    }

    /// `δ^α(A)`, entry `Π_j (k_j - l_j)^{α_j} A_{k,l}`.
    pub fn derivation_multi(&self, alpha: &[u32]) -> Result<BlockMatrix> {
        let d = self.index_set.dim();
        if alpha.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "multi-index of length {} in dimension {d}",
                alpha.len()
            )));
        }
        let set = self.index_set.clone();
        Ok(self.map_entries(|(k, l), b| b.scale_real(derivation_factor(&set, k, l, alpha))))
    }

    /// The coordinate multiplication operator `M_j`.
    pub fn coordinate_diagonal(
        index_set: Arc<PointSet>,
        m: usize,
        axis: usize,
    ) -> Result<BlockMatrix> {
        if axis >= index_set.dim() {
            return Err(Error::InvalidParameter(format!("axis {axis} out of range")));
        }
        let blocks = (0..index_set.len())
            .map(|k| Block::scalar(m, Complex64::new(index_set.point(k)[axis], 0.0)))
            .collect();
        BlockMatrix::diagonal(index_set, blocks)
    }

    /// Dense `(|X| m) × (|X| m)` matrix.
    pub fn densify(&self) -> DMatrix<Complex64> {
        let m = self.m;
        let mut dense = DMatrix::zeros(self.total_dim(), self.total_dim());
        for (&(k, l), b) in &self.entries {
            for i in 0..m {
                for j in 0..m {
                    dense[(k * m + i, l * m + j)] = b.get(i, j);
                }
            }
        }
        dense
    }

    /// Re-blocks a dense matrix, dropping blocks that are exactly zero.
    pub fn from_dense(
        index_set: Arc<PointSet>,
        m: usize,
        dense: &DMatrix<Complex64>,
    ) -> Result<BlockMatrix> {
        let total = index_set.len() * m;
        if dense.nrows() != total || dense.ncols() != total {
            return Err(Error::DimensionMismatch(format!(
                "dense matrix {}x{} does not match {} points with block size {m}",
                dense.nrows(),
                dense.ncols(),
                index_set.len()
            )));
        }
        let n = index_set.len();
        let mut a = Self::zeros(index_set, m)?;
        for k in 0..n {
            for l in 0..n {
                let b = Block::from_fn(m, |i, j| dense[(k * m + i, l * m + j)]);
                if !b.is_zero() {
                    a.entries.insert((k, l), b);
                }
            }
        }
        Ok(a)
    }

    /// Maximal block norm of `self - other` over the union of supports.
    pub fn max_block_diff(&self, other: &BlockMatrix) -> Result<f64> {
        Ok(self
            .sub(other)?
            .entries
            .values()
            .map(Block::norm)
            .fold(0.0, f64::max))
    }

    /// Maximal entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &BlockMatrix) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    pub fn max_abs(&self) -> f64 {
        self.entries
            .values()
            .map(Block::max_abs)
            .fold(0.0, f64::max)
    }

    pub fn max_block_norm(&self) -> f64 {
        self.entries.values().map(Block::norm).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint())
            .map(|d| d <= tol)
            .unwrap_or(false)
    }

    pub fn to_doc(&self, pointset: PointSetRef) -> MatrixDoc {
        MatrixDoc {
            pointset,
            m: self.m,
            entries: self
                .entries
                .iter()
                .map(|(&(k, l), b)| {
                    let (re, im) = b.to_parts();
                    EntryDoc { k, l, re, im }
                })
                .collect(),
        }
    }

    /// Document with the point set inlined.
    pub fn to_inline_doc(&self) -> MatrixDoc {
        self.to_doc(PointSetRef::Inline((*self.index_set).clone()))
    }

    /// Builds a matrix from a document whose point set has been resolved.
    pub fn from_doc(doc: &MatrixDoc, index_set: Arc<PointSet>) -> Result<BlockMatrix> {
        let mut a = Self::zeros(index_set, doc.m)?;
        for e in &doc.entries {
            a.insert(e.k, e.l, Block::from_parts(&e.re, &e.im)?)?;
        }
        Ok(a)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_inline_doc())?)
    }

    /// Parses a document with an inline point set.
    pub fn from_json(text: &str) -> Result<BlockMatrix> {
        let doc: MatrixDoc = serde_json::from_str(text)?;
        match &doc.pointset {
            PointSetRef::Inline(set) => Self::from_doc(&doc, Arc::new(set.clone())),
            PointSetRef::Path(p) => Err(Error::InvalidParameter(format!(
                "matrix refers to point set file '{p}'; resolve it before parsing"
            ))),
        }
    }
}

pub(crate) fn derivation_factor(set: &PointSet, k: usize, l: usize, alpha: &[u32]) -> f64 {
    let (pk, pl) = (set.point(k), set.point(l));
    alpha
        .iter()
        .enumerate()
        .map(|(j, &a)| (pk[j] - pl[j]).powi(a as i32))
        .product()
}

impl PartialEq for BlockMatrix {
    fn eq(&self, other: &Self) -> bool {
        if self.check_compatible(other).is_err() {
            return false;
        }
        let covered = |a: &BlockMatrix, b: &BlockMatrix| {
            a.entries.iter().all(|(key, blk)| match b.entries.get(key) {
                Some(o) => o == blk,
                None => blk.is_zero(),
            })
        };
        covered(self, other) && covered(other, self)
    }
}

/// Point set of a matrix document: inline, or a path to a point-set file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSetRef {
    Inline(PointSet),
    Path(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryDoc {
    pub k: usize,
    pub l: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// JSON matrix format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub pointset: PointSetRef,
    pub m: usize,
    pub entries: Vec<EntryDoc>,
}

/// Element of `ℓ²(X; C^m)` with sparse support.
#[derive(Debug, Clone)]
pub struct BlockVector {
    index_set: Arc<PointSet>,
    m: usize,
    components: BTreeMap<usize, Vec<Complex64>>,
}

impl BlockVector {
    pub fn zeros(index_set: Arc<PointSet>, m: usize) -> Self {
        BlockVector {
            index_set,
            m,
            components: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, k: usize, v: Vec<Complex64>) -> Result<()> {
        self.index_set.check_index(k)?;
        if v.len() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "component of length {} for m = {}",
                v.len(),
                self.m
            )));
        }
        self.components.insert(k, v);
        Ok(())
    }

    pub fn get(&self, k: usize) -> Option<&[Complex64]> {
        self.components.get(&k).map(Vec::as_slice)
    }

    pub fn components(&self) -> impl Iterator<Item = (&usize, &Vec<Complex64>)> + '_ {
        self.components.iter()
    }

    pub fn from_flat(index_set: Arc<PointSet>, m: usize, flat: &[Complex64]) -> Result<Self> {
        if flat.len() != index_set.len() * m {
            return Err(Error::DimensionMismatch("flat vector length".into()));
        }
        let components = flat
            .chunks_exact(m)
            .enumerate()
            .map(|(k, c)| (k, c.to_vec()))
            .collect();
        Ok(BlockVector {
            index_set,
            m,
            components,
        })
    }

    pub fn to_flat(&self) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.index_set.len() * self.m];
        for (&k, v) in &self.components {
            out[k * self.m..(k + 1) * self.m].copy_from_slice(v);
        }
        out
    }

    /// `⟨self, other⟩ = Σ_k Σ_i self_{k,i} conj(other_{k,i})`.
    pub fn inner(&self, other: &BlockVector) -> Complex64 {
        self.to_flat()
            .iter()
            .zip(other.to_flat())
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.components
            .values()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

impl PartialEq for BlockVector {
    fn eq(&self, other: &Self) -> bool {
        same_set(&self.index_set, &other.index_set)
            && self.m == other.m
            && self.to_flat() == other.to_flat()
    }
}

/// Compressed sparse rows with the blocks stored back to back; built once
/// per product or iteration so inner loops touch contiguous memory.
pub(crate) struct Csr {
    m: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    data: Vec<Complex64>,
}

impl Csr {
    /// `entries` must arrive sorted by row, then column.
    fn build<'a>(
        n: usize,
        m: usize,
        entries: impl Iterator<Item = (usize, usize, &'a Block)>,
    ) -> Csr {
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::new();
        let mut data = Vec::new();
        for (k, l, b) in entries {
            row_ptr[k + 1] += 1;
            cols.push(l);
            data.extend_from_slice(b.as_slice());
        }
        for k in 0..n {
            row_ptr[k + 1] += row_ptr[k];
        }
        Csr {
            m,
            row_ptr,
            cols,
            data,
        }
    }

    fn rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    fn row(&self, k: usize) -> std::ops::Range<usize> {
        self.row_ptr[k]..self.row_ptr[k + 1]
    }

    fn block(&self, i: usize) -> &[Complex64] {
        let mm = self.m * self.m;
        &self.data[i * mm..(i + 1) * mm]
    }

    /// `y = A x` for the matrix stored by rows.
    pub(crate) fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let m = self.m;
        let mut y = vec![ZERO; self.rows() * m];
        y.par_chunks_mut(m).enumerate().for_each(|(k, acc)| {
            for i in self.row(k) {
                let l = self.cols[i];
                gemv_acc(m, self.block(i), &x[l * m..(l + 1) * m], acc);
            }
        });
        y
    }

    /// `y = A^* x` for the matrix stored by columns.
    pub(crate) fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        let m = self.m;
        let mut y = vec![ZERO; self.rows() * m];
        y.par_chunks_mut(m).enumerate().for_each(|(l, acc)| {
            for i in self.row(l) {
                let k = self.cols[i];
                gemv_adjoint_acc(m, self.block(i), &x[k * m..(k + 1) * m], acc);
            }
        });
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointset::{make_jittered, make_lattice};
    use crate::rng::{complex_unit_box, stream, Stream};

    fn random_block(rng: &mut Stream, m: usize) -> Block {
        Block::from_fn(m, |_, _| complex_unit_box(rng))
    }

    fn random_matrix(set: &Arc<PointSet>, m: usize, seed: u64, fill: f64) -> BlockMatrix {
        let mut rng = stream(seed);
        let mut a = BlockMatrix::zeros(set.clone(), m).unwrap();
        for k in 0..set.len() {
            for l in 0..set.len() {
                if crate::rng::uniform(&mut rng, 0.0, 1.0) < fill {
                    a.insert(k, l, random_block(&mut rng, m)).unwrap();
                }
            }
        }
        a
    }

    fn random_vector(set: &Arc<PointSet>, m: usize, seed: u64) -> BlockVector {
        let mut rng = stream(seed);
        let flat: Vec<Complex64> = (0..set.len() * m)
            .map(|_| complex_unit_box(&mut rng))
            .collect();
        BlockVector::from_flat(set.clone(), m, &flat).unwrap()
    }

    fn jittered(n: usize, seed: u64) -> Arc<PointSet> {
        Arc::new(make_jittered(1, 1.0, 0.3, seed, &[n]).unwrap())
    }

    #[test]
    fn apply_identity_and_single_entry() {
        let set = jittered(5, 1);
        let f = random_vector(&set, 2, 2);
        let id = BlockMatrix::identity(set.clone(), 2).unwrap();
        assert_eq!(id.apply(&f).unwrap(), f);

        let mut rng = stream(3);
        let b = random_block(&mut rng, 2);
        let a = BlockMatrix::from_entries(set.clone(), 2, [((3, 1), b.clone())]).unwrap();
        let v = vec![Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.0)];
        let mut e = BlockVector::zeros(set.clone(), 2);
        e.set(1, v.clone()).unwrap();
        let out = a.apply(&e).unwrap();
        let mut bv = vec![ZERO; 2];
        b.mul_vec_acc(&v, &mut bv);
        assert_eq!(out.components().count(), 1);
        assert_eq!(out.get(3).unwrap(), &bv[..]);
    }

    #[test]
    fn apply_matches_dense_product() {
        let set = jittered(5, 4);
        let a = random_matrix(&set, 2, 5, 0.7);
        let f = random_vector(&set, 2, 6);
        let dense = a.densify() * nalgebra::DVector::from_vec(f.to_flat());
        let got = a.apply(&f).unwrap().to_flat();
        for (x, y) in got.iter().zip(dense.iter()) {
            assert!((x - y).norm() < 1e-14);
        }
        assert_eq!(a.apply_flat(&f.to_flat()), got);
    }

    #[test]
    fn apply_rejects_mismatch() {
        let a = random_matrix(&jittered(5, 1), 2, 1, 0.5);
        let f = random_vector(&jittered(5, 2), 2, 1);
        assert!(matches!(a.apply(&f), Err(Error::IndexSetMismatch)));
        let g = random_vector(a.index_set(), 3, 1);
        assert!(a.apply(&g).is_err());
    }

    #[test]
    fn matmul_examples() {
        let set = jittered(6, 7);
        let a = random_matrix(&set, 3, 8, 0.6);
        let id = BlockMatrix::identity(set.clone(), 3).unwrap();
        assert_eq!(a.matmul(&id).unwrap(), a);

        let mut rng = stream(9);
        let d1: Vec<Block> = (0..6).map(|_| random_block(&mut rng, 3)).collect();
        let d2: Vec<Block> = (0..6).map(|_| random_block(&mut rng, 3)).collect();
        let p = BlockMatrix::diagonal(set.clone(), d1.clone())
            .unwrap()
            .matmul(&BlockMatrix::diagonal(set.clone(), d2.clone()).unwrap())
            .unwrap();
        assert_eq!(p.nnz(), 6);
        for k in 0..6 {
            assert_eq!(p.get(k, k).unwrap(), &d1[k].mul(&d2[k]));
        }

        let b = random_matrix(&set, 3, 10, 0.6);
        let dense = a.densify() * b.densify();
        let prod = BlockMatrix::from_dense(set.clone(), 3, &dense).unwrap();
        assert!(a.matmul(&b).unwrap().max_abs_diff(&prod).unwrap() < 1e-13);
    }

    #[test]
    fn matmul_support_is_product_support() {
        let set = jittered(6, 11);
        let mut rng = stream(12);
        let a = BlockMatrix::from_entries(set.clone(), 2, [((0, 2), random_block(&mut rng, 2))])
            .unwrap();
        let b = BlockMatrix::from_entries(set.clone(), 2, [((3, 4), random_block(&mut rng, 2))])
            .unwrap();
        assert_eq!(a.matmul(&b).unwrap().nnz(), 0);
    }

    #[test]
    fn adjoint_examples() {
        let set = jittered(6, 13);
        let a = random_matrix(&set, 2, 14, 0.5);
        assert_eq!(a.adjoint().adjoint(), a);
        let id = BlockMatrix::identity(set.clone(), 2).unwrap();
        assert_eq!(id.adjoint(), id);
        let f = random_vector(&set, 2, 15);
        let g = random_vector(&set, 2, 16);
        let lhs = a.apply(&f).unwrap().inner(&g);
        let rhs = f.inner(&a.adjoint().apply(&g).unwrap());
        assert!((lhs - rhs).norm() < 1e-13);
        assert_eq!(a.adjoint().densify(), a.densify().adjoint());
        let x = random_vector(&set, 2, 17).to_flat();
        let via_adj = a.adjoint().apply_flat(&x);
        let direct = a.apply_adjoint_flat(&x);
        for (p, q) in via_adj.iter().zip(&direct) {
            assert!((p - q).norm() < 1e-14);
        }
    }

    #[test]
    fn derivation_examples() {
        let set = Arc::new(make_lattice(1, 1.0, &[7]).unwrap());
        let id = BlockMatrix::identity(set.clone(), 2).unwrap();
        assert!(id.derivation(0).unwrap().is_zero());
        let mut rng = stream(18);
        let b = random_block(&mut rng, 2);
        let single = BlockMatrix::from_entries(set.clone(), 2, [((5, 2), b.clone())]).unwrap();
        assert_eq!(
            single.derivation(0).unwrap().get(5, 2).unwrap(),
            &b.scale_real(3.0)
        );
        assert!(single.derivation(1).is_err());

        let a = random_matrix(&set, 2, 19, 0.8);
        let mj = BlockMatrix::coordinate_diagonal(set.clone(), 2, 0).unwrap();
        let comm = mj.matmul(&a).unwrap().sub(&a.matmul(&mj).unwrap()).unwrap();
        // `k a - a l` and `(k - l) a` differ only by rounding.
        assert!(a.derivation(0).unwrap().max_abs_diff(&comm).unwrap() <= 1e-14 * comm.max_abs());
    }

    #[test]
    fn derivation_commutator_on_jittered_points() {
        let set = Arc::new(make_jittered(2, 1.0, 0.3, 20, &[3, 3]).unwrap());
        let a = random_matrix(&set, 2, 21, 0.8);
        for axis in 0..2 {
            let mj = BlockMatrix::coordinate_diagonal(set.clone(), 2, axis).unwrap();
            let comm = mj.matmul(&a).unwrap().sub(&a.matmul(&mj).unwrap()).unwrap();
            assert!(a.derivation(axis).unwrap().max_abs_diff(&comm).unwrap() < 1e-14);
        }
    }

    #[test]
    fn derivation_multi_examples() {
        let set = Arc::new(make_jittered(2, 1.0, 0.3, 22, &[3, 3]).unwrap());
        let a = random_matrix(&set, 2, 23, 0.8);
        assert_eq!(a.derivation_multi(&[0, 0]).unwrap(), a);
        let d12 = a.derivation(0).unwrap().derivation(1).unwrap();
        let d21 = a.derivation(1).unwrap().derivation(0).unwrap();
        assert!(d12.max_abs_diff(&d21).unwrap() <= 1e-15 * d12.max_abs());
        let multi = a.derivation_multi(&[2, 1]).unwrap();
        let iterated = a
            .derivation(0)
            .unwrap()
            .derivation(0)
            .unwrap()
            .derivation(1)
            .unwrap();
        assert!(multi.max_abs_diff(&iterated).unwrap() <= 1e-15 * iterated.max_abs().max(1.0));
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let set = jittered(4, 24);
        let a = random_matrix(&set, 2, 25, 0.6);
        let text = a.to_json().unwrap();
        let back = BlockMatrix::from_json(&text).unwrap();
        for ((ka, ba), (kb, bb)) in a.entries().zip(back.entries()) {
            assert_eq!(ka, kb);
            for (x, y) in ba.as_slice().iter().zip(bb.as_slice()) {
                assert_eq!(x.re.to_bits(), y.re.to_bits());
                assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(doc["pointset"]["points"].is_array());
        assert_eq!(doc["m"], 2);
        assert!(doc["entries"][0]["re"].is_array());
    }

    #[test]
    fn json_with_path_reference() {
        let set = jittered(3, 26);
        let a = random_matrix(&set, 1, 27, 1.0);
        let doc = a.to_doc(PointSetRef::Path("X.json".into()));
        let text = serde_json::to_string(&doc).unwrap();
        assert!(BlockMatrix::from_json(&text).is_err());
        let parsed: MatrixDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed.pointset, PointSetRef::Path("X.json".into()));
        assert_eq!(BlockMatrix::from_doc(&parsed, set).unwrap(), a);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn rel_close(a: &BlockMatrix, b: &BlockMatrix, tol: f64) -> bool {
            let scale = a.max_abs().max(b.max_abs()).max(1.0);
            a.max_abs_diff(b).unwrap() <= tol * scale
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn product_adjoint_reverses(seed in 0u64..10_000) {
                let set = jittered(8, seed);
                let a = random_matrix(&set, 2, seed + 1, 0.6);
                let b = random_matrix(&set, 2, seed + 2, 0.6);
                let lhs = a.matmul(&b).unwrap().adjoint();
                let rhs = b.adjoint().matmul(&a.adjoint()).unwrap();
                prop_assert!(rel_close(&lhs, &rhs, 1e-13));
            }

            #[test]
            fn leibniz_rule(seed in 0u64..10_000) {
                let set = jittered(8, seed);
                let a = random_matrix(&set, 2, seed + 3, 0.6);
                let b = random_matrix(&set, 2, seed + 4, 0.6);
                let lhs = a.matmul(&b).unwrap().derivation(0).unwrap();
                let rhs = a.matmul(&b.derivation(0).unwrap()).unwrap()
                    .add(&a.derivation(0).unwrap().matmul(&b).unwrap()).unwrap();
                prop_assert!(rel_close(&lhs, &rhs, 1e-12));
            }

            #[test]
            fn derivation_and_adjoint(seed in 0u64..10_000) {
                let set = jittered(8, seed);
                let a = random_matrix(&set, 2, seed + 5, 0.6);
                // [M, A*] = -[M, A]*; the rescaled i[M, .] is symmetric.
                prop_assert_eq!(a.adjoint().derivation(0).unwrap(), a.derivation(0).unwrap().adjoint().scale_real(-1.0));
                prop_assert_eq!(
                    a.adjoint().symmetric_derivation(0).unwrap(),
                    a.symmetric_derivation(0).unwrap().adjoint()
                );
            }

            #[test]
            fn matmul_associative(seed in 0u64..10_000) {
                let set = jittered(7, seed);
                let a = random_matrix(&set, 2, seed + 6, 0.6);
                let b = random_matrix(&set, 2, seed + 7, 0.6);
                let c = random_matrix(&set, 2, seed + 8, 0.6);
                let lhs = a.matmul(&b).unwrap().matmul(&c).unwrap();
                let rhs = a.matmul(&b.matmul(&c).unwrap()).unwrap();
                prop_assert!(rel_close(&lhs, &rhs, 1e-12));
            }
        }
    }
}

//! Norm functionals of the decay algebras, evaluated exactly on finite
//! matrices.
//!
//! Every norm here is solid: it depends only on the block norms
//! `‖A_{k,l}‖`. A [`NormTable`] holds those once so several functionals (or
//! several derivatives `δ^β A`, which only rescale block norms) can be
//! evaluated without repeating the SVDs.
//!
//! Ties between candidate witnesses are broken by lexicographic index order.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::block::Block;
use crate::blockmat::{derivation_factor, BlockMatrix};
use crate::error::{Error, Result};
use crate::pointset::{convolution_bound_constant, PointSet};
use crate::weights::WeightSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormTag {
    Jaffard,
    JNu,
    SchurP,
    Bgs,
    Bus,
    Aniso,
}

/// A norm functional together with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum NormSpec {
    /// `sup ‖A_{k,l}‖ (1+|k-l|)^s`.
    Jaffard { s: f64 },
    /// `sup ‖A_{k,l}‖ ν(k-l)`.
    JNu { weight: WeightSpec },
    /// Max of the `ν`-weighted `ℓ^p` row and column norms.
    SchurP { weight: WeightSpec, p: f64 },
    /// `Σ_l ν(l) sup_k ‖A_{k,k-l}‖` on lattice sections.
    Bgs { weight: WeightSpec },
    /// `2^s ‖A‖_{S¹_u} + ‖A‖_{J_{u ν_s}}`.
    Bus { u: WeightSpec, s: f64 },
    /// `Σ_{β <= α} base(δ^β A)`.
    Aniso {
        base: Box<NormSpec>,
        alpha: Vec<u32>,
    },
}

impl NormSpec {
    pub fn tag(&self) -> NormTag {
        match self {
            NormSpec::Jaffard { .. } => NormTag::Jaffard,
            NormSpec::JNu { .. } => NormTag::JNu,
            NormSpec::SchurP { .. } => NormTag::SchurP,
            NormSpec::Bgs { .. } => NormTag::Bgs,
            NormSpec::Bus { .. } => NormTag::Bus,
            NormSpec::Aniso { .. } => NormTag::Aniso,
        }
    }

    pub fn schur1(weight: WeightSpec) -> Self {
        NormSpec::SchurP { weight, p: 1.0 }
    }

    fn validate(&self) -> Result<()> {
        match self {
            NormSpec::Jaffard { s } if !(*s >= 0.0) => Err(Error::InvalidParameter(format!(
                "Jaffard exponent must be >= 0, got {s}"
            ))),
            NormSpec::SchurP { p, .. } if !(*p >= 1.0 && p.is_finite()) => Err(
                Error::InvalidParameter(format!("Schur exponent must lie in [1, inf), got {p}")),
            ),
            NormSpec::Bus { s, .. } if !(*s > 0.0) => Err(Error::InvalidParameter(format!(
                "B_(u,s) needs s > 0, got {s}"
            ))),
            NormSpec::Aniso { base, .. } => base.validate(),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, a: &BlockMatrix) -> Result<NormReport> {
        self.eval_table(&NormTable::new(a))
    }

    pub fn value(&self, a: &BlockMatrix) -> Result<f64> {
        Ok(self.eval(a)?.value)
    }

    pub fn eval_table(&self, table: &NormTable) -> Result<NormReport> {
        self.validate()?;
        let (value, witness) = match self {
            NormSpec::Jaffard { s } => sup_weighted(table, &WeightSpec::polynomial(*s))?,
            NormSpec::JNu { weight } => sup_weighted(table, weight)?,
            NormSpec::SchurP { weight, p } => schur(table, weight, *p)?,
            NormSpec::Bgs { weight } => bgs(table, weight)?,
            NormSpec::Bus { u, s } => {
                let (schur_part, _) = schur(table, u, 1.0)?;
                let nu = WeightSpec::product(u.clone(), WeightSpec::polynomial(*s));
                let (sup_part, witness) = sup_weighted(table, &nu)?;
                (2f64.powf(*s) * schur_part + sup_part, witness)
            }
            NormSpec::Aniso { base, alpha } => {
                if alpha.len() != table.index_set.dim() {
                    return Err(Error::DimensionMismatch(format!(
                        "multi-index of length {} in dimension {}",
                        alpha.len(),
                        table.index_set.dim()
                    )));
                }
                let mut total = 0.0;
                let mut witness = Witness::None;
                for beta in multi_indices_below(alpha) {
                    let r = base.eval_table(&table.derived(&beta))?;
                    if beta.iter().all(|&b| b == 0) {
                        witness = r.witness;
                    }
                    total += r.value;
                }
                (total, witness)
            }
        };
        if !value.is_finite() {
            return Err(Error::Overflow(format!("{:?} norm", self.tag())));
        }
        Ok(NormReport {
            tag: self.tag(),
            parameters: self.clone(),
            value,
            witness,
        })
    }
}

/// All multi-indices `β` with `β <= α` componentwise, lexicographic order.
pub fn multi_indices_below(alpha: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &a in alpha {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..=a).map(move |b| {
                    let mut v = prefix.clone();
                    v.push(b);
                    v
                })
            })
            .collect();
    }
    out
}

/// Where the defining supremum of a norm was attained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    None,
    Pair { k: usize, l: usize },
    Row { k: usize },
    Column { l: usize },
    Offset { n: Vec<i64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub tag: NormTag,
    pub parameters: NormSpec,
    pub value: f64,
    pub witness: Witness,
}

/// Block norms `‖A_{k,l}‖` of the stored entries, lexicographic order.
#[derive(Debug, Clone)]
pub struct NormTable {
    index_set: Arc<PointSet>,
    entries: Vec<((usize, usize), f64)>,
}

impl NormTable {
    pub fn new(a: &BlockMatrix) -> Self {
        let pairs: Vec<(&(usize, usize), &Block)> = a.entries().collect();
        let entries = pairs.par_iter().map(|&(&key, b)| (key, b.norm())).collect();
        NormTable {
            index_set: a.index_set().clone(),
            entries,
        }
    }

    pub fn from_entries(index_set: Arc<PointSet>, mut entries: Vec<((usize, usize), f64)>) -> Self {
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        NormTable { index_set, entries }
    }

    pub fn index_set(&self) -> &Arc<PointSet> {
        &self.index_set
    }

    pub fn entries(&self) -> &[((usize, usize), f64)] {
        &self.entries
    }

    /// Block norms of `δ^β A`.
    pub fn derived(&self, beta: &[u32]) -> NormTable {
        let set = &self.index_set;
        NormTable {
            index_set: set.clone(),
            entries: self
                .entries
                .iter()
                .map(|&((k, l), v)| ((k, l), v * derivation_factor(set, k, l, beta).abs()))
                .collect(),
        }
    }

    /// Rescales every block norm.
    pub fn scaled(&self, c: f64) -> NormTable {
        NormTable {
            index_set: self.index_set.clone(),
            entries: self.entries.iter().map(|&(key, v)| (key, v * c)).collect(),
        }
    }
}

fn sup_weighted(table: &NormTable, w: &WeightSpec) -> Result<(f64, Witness)> {
    let mut best = 0.0f64;
    let mut witness = Witness::None;
    for &((k, l), v) in &table.entries {
        if v == 0.0 {
            continue;
        }
        let x = v * w.eval_pair(&table.index_set, k, l)?;
        if x > best {
            best = x;
            witness = Witness::Pair { k, l };
        }
    }
    Ok((best, witness))
}

fn schur(table: &NormTable, w: &WeightSpec, p: f64) -> Result<(f64, Witness)> {
    let n = table.index_set.len();
    let mut rows = vec![0.0f64; n];
    let mut cols = vec![0.0f64; n];
    for &((k, l), v) in &table.entries {
        if v == 0.0 {
            continue;
        }
        let x = v * w.eval_pair(&table.index_set, k, l)?;
        let t = if p == 1.0 { x } else { x.powf(p) };
        rows[k] += t;
        cols[l] += t;
    }
    let root = |x: f64| if p == 1.0 { x } else { x.powf(1.0 / p) };
    let mut best = 0.0f64;
    let mut witness = Witness::None;
    for (k, &r) in rows.iter().enumerate() {
        if root(r) > best {
            best = root(r);
            witness = Witness::Row { k };
        }
    }
    for (l, &c) in cols.iter().enumerate() {
        if root(c) > best {
            best = root(c);
            witness = Witness::Column { l };
        }
    }
    Ok((best, witness))
}

/// Side-diagonal sups `d_A(n) = sup_k ‖A_{k,k-n}‖` for every occurring
/// lattice offset `n = k - l`.
pub fn side_diagonal_sups(table: &NormTable) -> Result<BTreeMap<Vec<i64>, f64>> {
    let set = &table.index_set;
    if !set.is_lattice() {
        return Err(Error::NotLattice);
    }
    let mut sups: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    for &((k, l), v) in &table.entries {
        let zk = set.lattice_coords(k).ok_or(Error::NotLattice)?;
        let zl = set.lattice_coords(l).ok_or(Error::NotLattice)?;
        let offset: Vec<i64> = zk.iter().zip(&zl).map(|(a, b)| a - b).collect();
        let slot = sups.entry(offset).or_insert(0.0);
        *slot = slot.max(v);
    }
    Ok(sups)
}

fn bgs(table: &NormTable, w: &WeightSpec) -> Result<(f64, Witness)> {
    let sups = side_diagonal_sups(table)?;
    let mut total = 0.0;
    let mut best = 0.0f64;
    let mut witness = Witness::None;
    for (offset, d) in &sups {
        let x: Vec<f64> = offset.iter().map(|&c| c as f64).collect();
        let term = d * w.eval(&x)?;
        total += term;
        if term > best {
            best = term;
            witness = Witness::Offset { n: offset.clone() };
        }
    }
    Ok((total, witness))
}

pub fn jaffard_norm(a: &BlockMatrix, s: f64) -> Result<NormReport> {
    NormSpec::Jaffard { s }.eval(a)
}

pub fn j_nu_norm(a: &BlockMatrix, weight: &WeightSpec) -> Result<NormReport> {
    NormSpec::JNu {
        weight: weight.clone(),
    }
    .eval(a)
}

pub fn schur_p_norm(a: &BlockMatrix, weight: &WeightSpec, p: f64) -> Result<NormReport> {
    NormSpec::SchurP {
        weight: weight.clone(),
        p,
    }
    .eval(a)
}

/// Requires a lattice-flagged index set.
pub fn bgs_norm(a: &BlockMatrix, weight: &WeightSpec) -> Result<NormReport> {
    NormSpec::Bgs {
        weight: weight.clone(),
    }
    .eval(a)
}

pub fn bus_norm(a: &BlockMatrix, u: &WeightSpec, s: f64) -> Result<NormReport> {
    NormSpec::Bus { u: u.clone(), s }.eval(a)
}

pub fn aniso_norm(a: &BlockMatrix, base: &NormSpec, alpha: &[u32]) -> Result<NormReport> {
    NormSpec::Aniso {
        base: Box::new(base.clone()),
        alpha: alpha.to_vec(),
    }
    .eval(a)
}

/// Certified bracket for the Banach-algebra norm
/// `|‖A‖| = sup_{‖B‖_{J_s} = 1} ‖AB‖_{J_s}`.
///
/// The lower end is the best probe; the upper end is `C ‖A‖_{J_s}` with `C`
/// the convolution constant of `(1+|x|)^{-s}` on the index set.
pub fn jaffard_opnorm_equivalent_bounds(
    a: &BlockMatrix,
    s: f64,
    probes: &[BlockMatrix],
) -> Result<(f64, f64)> {
    if probes.is_empty() {
        return Err(Error::InvalidParameter(
            "probe list must be nonempty".into(),
        ));
    }
    let base = jaffard_norm(a, s)?.value;
    let c = convolution_bound_constant(a.index_set(), s)?;
    let mut lower = 0.0f64;
    for probe in probes {
        let pn = jaffard_norm(probe, s)?.value;
        if pn == 0.0 {
            continue;
        }
        lower = lower.max(jaffard_norm(&a.matmul(probe)?, s)?.value / pn);
    }
    Ok((lower, c * base))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointset::{make_jittered, make_lattice};
    use crate::rng::{complex_unit_box, stream, uniform};
    use num_complex::Complex64;

    fn random_banded(set: &Arc<PointSet>, m: usize, seed: u64, band: f64) -> BlockMatrix {
        let mut rng = stream(seed);
        let mut a = BlockMatrix::zeros(set.clone(), m).unwrap();
        for k in 0..set.len() {
            for l in 0..set.len() {
                if set.distance(k, l) <= band {
                    let scale = uniform(&mut rng, 0.0, 1.0);
                    a.insert(
                        k,
                        l,
                        Block::from_fn(m, |_, _| complex_unit_box(&mut rng) * scale),
                    )
                    .unwrap();
                }
            }
        }
        a
    }

    fn jittered(n: usize, seed: u64) -> Arc<PointSet> {
        Arc::new(make_jittered(1, 1.0, 0.3, seed, &[n]).unwrap())
    }

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

    // Dense oracle: enumerate every pair, absent entries as zero blocks.
    fn dense_sup(a: &BlockMatrix, w: &WeightSpec) -> f64 {
        let set = a.index_set();
        let zero = Block::zeros(a.block_dim());
        let mut best = 0.0f64;
        for k in 0..set.len() {
            for l in 0..set.len() {
                let b = a.get(k, l).unwrap_or(&zero);
                best = best.max(b.norm() * w.eval(&set.diff(k, l)).unwrap());
            }
        }
        best
    }

    #[test]
    fn jaffard_examples() {
        let set = jittered(20, 1);
        let id = BlockMatrix::identity(set.clone(), 2).unwrap();
        assert_eq!(jaffard_norm(&id, 3.0).unwrap().value, 1.0);

        let b = Block::from_fn(2, |i, j| Complex64::new((i + 2 * j) as f64, 0.5));
        let single = BlockMatrix::from_entries(set.clone(), 2, [((4, 9), b.clone())]).unwrap();
        let r = jaffard_norm(&single, 2.5).unwrap();
        assert!(
            (r.value - b.norm() * (1.0 + set.distance(4, 9)).powf(2.5)).abs() < 1e-12 * r.value
        );
        assert_eq!(r.witness, Witness::Pair { k: 4, l: 9 });

        let a = random_banded(&set, 2, 2, 6.0);
        let r = jaffard_norm(&a, 3.0).unwrap();
        assert_eq!(r.value, dense_sup(&a, &WeightSpec::polynomial(3.0)));
    }

    #[test]
    fn j_nu_examples() {
        let set = jittered(20, 3);
        let a = random_banded(&set, 2, 4, 5.0);
        assert_eq!(
            j_nu_norm(&a, &WeightSpec::ConstantOne).unwrap().value,
            a.max_block_norm()
        );
        assert_eq!(
            j_nu_norm(&a, &WeightSpec::polynomial(2.0)).unwrap().value,
            jaffard_norm(&a, 2.0).unwrap().value
        );
        let w = WeightSpec::Subexponential {
            alpha: 0.7,
            beta: 0.5,
        };
        assert_eq!(j_nu_norm(&a, &w).unwrap().value, dense_sup(&a, &w));
    }

    #[test]
    fn schur_examples() {
        let set = jittered(12, 5);
        let id = BlockMatrix::identity(set.clone(), 2).unwrap();
        for p in [1.0, 1.5, 2.0, 7.0] {
            assert_eq!(
                schur_p_norm(&id, &WeightSpec::polynomial(2.0), p)
                    .unwrap()
                    .value,
                1.0
            );
        }
        let b = Block::from_fn(2, |i, j| Complex64::new(1.0 + i as f64, j as f64));
        let single = BlockMatrix::from_entries(set.clone(), 2, [((2, 7), b.clone())]).unwrap();
        let w = WeightSpec::polynomial(1.5);
        let expect = b.norm() * w.eval(&set.diff(2, 7)).unwrap();
        for p in [1.0, 2.0, 3.5] {
            let v = schur_p_norm(&single, &w, p).unwrap().value;
            assert!((v - expect).abs() <= 1e-13 * expect);
        }
        assert!(schur_p_norm(&id, &w, 0.5).is_err());
    }

    #[test]
    fn schur_scalar_matches_row_and_column_sums() {
        let set = jittered(15, 6);
        let a = random_banded(&set, 1, 7, 4.0);
        let dense = a.densify();
        let n = set.len();
        let row_max = (0..n)
            .map(|i| (0..n).map(|j| dense[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max);
        let col_max = (0..n)
            .map(|j| (0..n).map(|i| dense[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max);
        let v = schur_p_norm(&a, &WeightSpec::ConstantOne, 1.0)
            .unwrap()
            .value;
        assert!((v - row_max.max(col_max)).abs() < 1e-13);
    }

    #[test]
    fn bgs_examples() {
        let set = lattice(16);
        let nu = WeightSpec::polynomial(1.0);
        let id = BlockMatrix::identity(set.clone(), 2).unwrap();
        assert_eq!(bgs_norm(&id, &nu).unwrap().value, 1.0);
        assert_eq!(bgs_norm(&shift(&set, 2), &nu).unwrap().value, 2.0);
        let r = bgs_norm(&shift(&set, 2), &nu).unwrap();
        assert_eq!(r.witness, Witness::Offset { n: vec![1] });

        let jit = jittered(16, 8);
        let a = BlockMatrix::identity(jit, 2).unwrap();
        assert!(matches!(bgs_norm(&a, &nu), Err(Error::NotLattice)));
    }

    #[test]
    fn bgs_matches_side_diagonal_decomposition() {
        let set = lattice(20);
        let a = random_banded(&set, 2, 9, 4.0);
        let nu = WeightSpec::polynomial(2.0);
        let n = set.len() as i64;
        let mut oracle = 0.0;
        for offset in -(n - 1)..n {
            let mut d = BlockMatrix::zeros(set.clone(), 2).unwrap();
            for (&(k, l), b) in a.entries() {
                if k as i64 - l as i64 == offset {
                    d.insert(k, l, b.clone()).unwrap();
                }
            }
            oracle += d.max_block_norm() * nu.eval(&[offset as f64]).unwrap();
        }
        let v = bgs_norm(&a, &nu).unwrap().value;
        assert!((v - oracle).abs() <= 1e-13 * oracle);
    }

    #[test]
    fn bus_examples() {
        let set = jittered(14, 10);
        let u = WeightSpec::polynomial(0.5);
        let id = BlockMatrix::identity(set.clone(), 2).unwrap();
        assert_eq!(bus_norm(&id, &u, 2.0).unwrap().value, 5.0);
        let zero = BlockMatrix::zeros(set.clone(), 2).unwrap();
        assert_eq!(bus_norm(&zero, &u, 2.0).unwrap().value, 0.0);
        let a = random_banded(&set, 2, 11, 5.0);
        let schur = schur_p_norm(&a, &u, 1.0).unwrap().value;
        let sup = j_nu_norm(
            &a,
            &WeightSpec::product(u.clone(), WeightSpec::polynomial(2.0)),
        )
        .unwrap()
        .value;
        let v = bus_norm(&a, &u, 2.0).unwrap().value;
        assert!((v - (4.0 * schur + sup)).abs() <= 1e-14 * v);
    }

    #[test]
    fn aniso_examples() {
        let set = jittered(16, 12);
        let a = random_banded(&set, 2, 13, 6.0);
        let base = NormSpec::Jaffard { s: 3.0 };
        assert_eq!(
            aniso_norm(&a, &base, &[0]).unwrap().value,
            base.value(&a).unwrap()
        );
        let id = BlockMatrix::identity(set.clone(), 2).unwrap();
        assert_eq!(aniso_norm(&id, &base, &[3]).unwrap().value, 1.0);

        let mut sup = 0.0f64;
        for (&(k, l), b) in a.entries() {
            let x = set.point(k)[0] - set.point(l)[0];
            sup = sup.max(x.abs() * b.norm() * (1.0 + set.distance(k, l)).powi(3));
        }
        let expect = base.value(&a).unwrap() + sup;
        let v = aniso_norm(&a, &base, &[1]).unwrap().value;
        assert!((v - expect).abs() <= 1e-13 * expect);
        // Table route agrees with norms of explicitly derived matrices.
        let explicit = base.value(&a).unwrap() + base.value(&a.derivation(0).unwrap()).unwrap();
        assert!((v - explicit).abs() <= 1e-13 * v);
    }

    #[test]
    fn multi_index_enumeration() {
        assert_eq!(multi_indices_below(&[1, 2]).len(), 6);
        assert_eq!(multi_indices_below(&[0]), vec![vec![0]]);
    }

    #[test]
    fn equivalent_norm_bounds() {
        let set = jittered(12, 14);
        let a = random_banded(&set, 2, 15, 5.0);
        let id = BlockMatrix::identity(set.clone(), 2).unwrap();
        let (lo, hi) = jaffard_opnorm_equivalent_bounds(&a, 3.0, &[id]).unwrap();
        assert!(lo >= jaffard_norm(&a, 3.0).unwrap().value);
        assert!(lo <= hi);
        let zero = BlockMatrix::zeros(set.clone(), 2).unwrap();
        let probes: Vec<BlockMatrix> = (0..50)
            .map(|i| random_banded(&set, 2, 100 + i, 4.0))
            .collect();
        assert_eq!(
            jaffard_opnorm_equivalent_bounds(&zero, 3.0, &probes).unwrap(),
            (0.0, 0.0)
        );
        let (lo, hi) = jaffard_opnorm_equivalent_bounds(&a, 3.0, &probes).unwrap();
        assert!(lo <= hi);
        assert!(jaffard_opnorm_equivalent_bounds(&a, 3.0, &[]).is_err());
    }

    #[test]
    fn report_serializes_with_tag() {
        let set = jittered(4, 16);
        let r = jaffard_norm(&BlockMatrix::identity(set, 1).unwrap(), 3.0).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["tag"], "jaffard");
        assert_eq!(v["parameters"]["s"], 3.0);
        let spec: NormSpec = serde_json::from_value(
            serde_json::json!({"tag": "schur_p", "weight": "polynomial:1", "p": 1.0}),
        )
        .unwrap();
        assert_eq!(spec, NormSpec::schur1(WeightSpec::polynomial(1.0)));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn all_specs() -> Vec<NormSpec> {
            vec![
                NormSpec::Jaffard { s: 3.0 },
                NormSpec::JNu {
                    weight: WeightSpec::Subexponential {
                        alpha: 0.5,
                        beta: 0.5,
                    },
                },
                NormSpec::schur1(WeightSpec::polynomial(1.0)),
                NormSpec::SchurP {
                    weight: WeightSpec::polynomial(1.0),
                    p: 2.0,
                },
                NormSpec::Bgs {
                    weight: WeightSpec::polynomial(1.0),
                },
                NormSpec::Bus {
                    u: WeightSpec::polynomial(0.5),
                    s: 2.0,
                },
                NormSpec::Aniso {
                    base: Box::new(NormSpec::Jaffard { s: 2.0 }),
                    alpha: vec![1],
                },
            ]
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn solidity(seed in 0u64..10_000, shrink in 0.0f64..1.0) {
                let set = lattice(14);
                let a = random_banded(&set, 2, seed, 5.0);
                let mut rng = stream(seed + 1);
                // Entrywise smaller block norms, different blocks.
                let b = a.map_entries(|_, blk| {
                    let r = Block::from_fn(2, |_, _| complex_unit_box(&mut rng));
                    r.scale_real(shrink * blk.norm() / r.norm())
                });
                for spec in all_specs() {
                    prop_assert!(spec.value(&b).unwrap() <= spec.value(&a).unwrap() * (1.0 + 1e-12));
                }
            }

            #[test]
            fn involution_isometry(seed in 0u64..10_000) {
                let set = lattice(14);
                let a = random_banded(&set, 2, seed, 5.0);
                for spec in [NormSpec::Jaffard { s: 3.0 },
                             NormSpec::JNu { weight: WeightSpec::polynomial(1.5) },
                             NormSpec::schur1(WeightSpec::polynomial(1.0)),
                             NormSpec::Bgs { weight: WeightSpec::polynomial(1.0) }] {
                    let x = spec.value(&a).unwrap();
                    let y = spec.value(&a.adjoint()).unwrap();
                    prop_assert!((x - y).abs() <= 1e-13 * x);
                }
            }

            #[test]
            fn homogeneity_and_triangle(seed in 0u64..10_000, c in -3.0f64..3.0) {
                let set = lattice(12);
                let a = random_banded(&set, 2, seed, 4.0);
                let b = random_banded(&set, 2, seed + 7, 4.0);
                let sum = a.add(&b).unwrap();
                for spec in all_specs() {
                    let na = spec.value(&a).unwrap();
                    let scaled = spec.value(&a.scale_real(c)).unwrap();
                    prop_assert!((scaled - c.abs() * na).abs() <= 1e-12 * na.max(1.0));
                    prop_assert!(spec.value(&sum).unwrap() <= (na + spec.value(&b).unwrap()) * (1.0 + 1e-12));
                }
            }

            #[test]
            fn zero_iff_zero_matrix(seed in 0u64..10_000) {
                let set = lattice(8);
                let a = random_banded(&set, 2, seed, 3.0);
                let zero = BlockMatrix::zeros(set.clone(), 2).unwrap();
                for spec in all_specs() {
                    prop_assert!(spec.value(&a).unwrap() > 0.0);
                    prop_assert_eq!(spec.value(&zero).unwrap(), 0.0);
                }
            }
        }
    }
}

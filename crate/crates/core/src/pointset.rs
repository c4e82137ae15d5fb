//! Finite relatively separated index sets `X ⊂ R^d`.
//!
//! A [`PointSet`] fixes the row/column order of every matrix built on it.
//! Besides the generators, this module measures the counting quantities that
//! control the matrix algebras: the minimal gap, the maximal number of points
//! in a unit cube, neighbour sums of `(1+|k-l|)^{-s}` and the convolution
//! constant of that kernel.
//!
//! Suprema over `x ∈ R^d` are restricted to anchors in `X` itself. The
//! restricted value is a lower bound for the unrestricted one and is what every
//! matrix inequality downstream actually consumes.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_MAX_POINTS: usize = 100_000;

/// Integer lattice metadata: the set is `spacing * {z : 0 <= z_j < extent_j}`
/// in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub spacing: f64,
    pub extent: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PointSetDoc", into = "PointSetDoc")]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    lattice: Option<Lattice>,
}

#[derive(Serialize, Deserialize)]
struct PointSetDoc {
    dim: usize,
    points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lattice: Option<Lattice>,
}

impl TryFrom<PointSetDoc> for PointSet {
    type Error = Error;

    fn try_from(doc: PointSetDoc) -> Result<Self> {
        let set = PointSet::from_points(doc.dim, &doc.points)?;
        match doc.lattice {
            None => Ok(set),
            Some(lattice) => {
                let expected = make_lattice(doc.dim, lattice.spacing, &lattice.extent)?;
                if expected.coords != set.coords {
                    return Err(Error::InvalidParameter(
                        "points do not match the declared lattice".into(),
                    ));
                }
                Ok(expected)
            }
        }
    }
}

impl From<PointSet> for PointSetDoc {
    fn from(set: PointSet) -> Self {
        PointSetDoc {
            dim: set.dim,
            points: set.iter().map(<[f64]>::to_vec).collect(),
            lattice: set.lattice,
        }
    }
}

impl PointSet {
    /// Builds a point set from explicit coordinates, rejecting empty input and
    /// coincident points.
    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "dimension must be at least 1".into(),
            ));
        }
        if points.is_empty() {
            return Err(Error::InvalidParameter("point set must be nonempty".into()));
        }
        let mut coords = Vec::with_capacity(dim * points.len());
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidParameter(format!("point {i} is not finite")));
            }
            coords.extend_from_slice(p);
        }
        let set = PointSet {
            dim,
            coords,
            lattice: None,
        };
        set.check_distinct()?;
        Ok(set)
    }

    fn check_distinct(&self) -> Result<()> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| lex_cmp(self.point(a), self.point(b)));
        for w in order.windows(2) {
            if self.point(w[0]) == self.point(w[1]) {
                let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
                return Err(Error::DuplicatePoint(a, b));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn lattice(&self) -> Option<&Lattice> {
        self.lattice.as_ref()
    }

    pub fn is_lattice(&self) -> bool {
        self.lattice.is_some()
    }

    /// Integer lattice coordinates of point `i`; `None` for non-lattice sets.
    pub fn lattice_coords(&self, i: usize) -> Option<Vec<i64>> {
        let lattice = self.lattice.as_ref()?;
        let mut rest = i;
        let mut z = vec![0i64; self.dim];
        for axis in (0..self.dim).rev() {
            let e = lattice.extent[axis];
            z[axis] = (rest % e) as i64;
            rest /= e;
        }
        Some(z)
    }

    /// Index of the lattice point with integer coordinates `z`, if present.
    pub fn lattice_index(&self, z: &[i64]) -> Option<usize> {
        let lattice = self.lattice.as_ref()?;
        let mut idx = 0usize;
        for (axis, &c) in z.iter().enumerate() {
            let e = lattice.extent[axis];
            if c < 0 || c as usize >= e {
                return None;
            }
            idx = idx * e + c as usize;
        }
        Some(idx)
    }

    /// `x_k - x_l`.
    pub fn diff(&self, k: usize, l: usize) -> Vec<f64> {
        self.point(k)
            .iter()
            .zip(self.point(l))
            .map(|(a, b)| a - b)
            .collect()
    }

    /// Euclidean distance `|x_k - x_l|`.
    pub fn distance(&self, k: usize, l: usize) -> f64 {
        self.point(k)
            .iter()
            .zip(self.point(l))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Max-norm distance `|x_k - x_l|_∞`.
    pub fn distance_inf(&self, k: usize, l: usize) -> f64 {
        self.point(k)
            .iter()
            .zip(self.point(l))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn diameter(&self) -> f64 {
        let n = self.len();
        let mut best = 0.0f64;
        for k in 0..n {
            for l in k + 1..n {
                best = best.max(self.distance(k, l));
            }
        }
        best
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if index < self.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index,
                len: self.len(),
            })
        }
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

fn lattice_count(extent: &[usize], limit: usize) -> Result<usize> {
    let mut count: usize = 1;
    for &e in extent {
        count = count.checked_mul(e).unwrap_or(usize::MAX);
    }
    if count > limit {
        return Err(Error::TooManyPoints { count, limit });
    }
    Ok(count)
}

fn validate_grid(dim: usize, spacing: f64, extent: &[usize]) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidParameter(
            "dimension must be at least 1".into(),
        ));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "spacing must be positive, got {spacing}"
        )));
    }
    if extent.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "extent has {} axes, expected {dim}",
            extent.len()
        )));
    }
    if extent.iter().any(|&e| e == 0) {
        return Err(Error::InvalidParameter(
            "extent must be at least 1 on every axis".into(),
        ));
    }
    Ok(())
}

/// `spacing * Z^d` truncated to `0 <= z_j < extent_j`, lexicographic order.
pub fn make_lattice(dim: usize, spacing: f64, extent: &[usize]) -> Result<PointSet> {
    make_lattice_capped(dim, spacing, extent, DEFAULT_MAX_POINTS)
}

pub fn make_lattice_capped(
    dim: usize,
    spacing: f64,
    extent: &[usize],
    max_points: usize,
) -> Result<PointSet> {
    validate_grid(dim, spacing, extent)?;
    let count = lattice_count(extent, max_points)?;
    let mut coords = Vec::with_capacity(count * dim);
    let mut z = vec![0usize; dim];
    for _ in 0..count {
        coords.extend(z.iter().map(|&c| spacing * c as f64));
        for axis in (0..dim).rev() {
            z[axis] += 1;
            if z[axis] < extent[axis] {
                break;
            }
            z[axis] = 0;
        }
    }
    Ok(PointSet {
        dim,
        coords,
        lattice: Some(Lattice {
            spacing,
            extent: extent.to_vec(),
        }),
    })
}

/// Lattice points perturbed coordinatewise by SplitMix64 offsets drawn
/// uniformly from `[-jitter, jitter)`. With `jitter < spacing/2` the result
/// has minimal gap at least `spacing - 2*jitter`.
///
/// `jitter == 0` returns the lattice itself, lattice flag included.
pub fn make_jittered(
    dim: usize,
    spacing: f64,
    jitter: f64,
    seed: u64,
    extent: &[usize],
) -> Result<PointSet> {
    if !(jitter >= 0.0 && jitter < spacing / 2.0) {
        return Err(Error::InvalidParameter(format!(
            "jitter must lie in [0, spacing/2), got {jitter} for spacing {spacing}"
        )));
    }
    let mut set = make_lattice(dim, spacing, extent)?;
    if jitter == 0.0 {
        return Ok(set);
    }
    let mut stream = rng::stream(seed);
    for c in set.coords.iter_mut() {
        *c += rng::uniform(&mut stream, -jitter, jitter);
    }
    set.lattice = None;
    Ok(set)
}

/// Minimal gap and maximal unit-cube occupancy of a point set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    /// Minimal pairwise Euclidean distance; `+inf` for a singleton.
    pub min_gap: f64,
    /// Maximal number of points in a closed translated unit cube.
    pub cube_count: usize,
}

impl SeparationReport {
    pub fn is_separated(&self) -> bool {
        self.min_gap > 0.0
    }
}

pub fn separation_report(set: &PointSet) -> SeparationReport {
    let n = set.len();
    let mut min_gap = f64::INFINITY;
    for k in 0..n {
        for l in k + 1..n {
            min_gap = min_gap.min(set.distance(k, l));
        }
    }
    let all: Vec<usize> = (0..n).collect();
    let cube_count = max_cube_occupancy(set, &all, 0);
    SeparationReport {
        min_gap,
        cube_count,
    }
}

// An optimal closed cube can be slid up on every axis until its lower face
// touches a point coordinate, so anchors drawn from point coordinates suffice.
// Recurse axis by axis over slabs; the last axis is a sliding window.
fn max_cube_occupancy(set: &PointSet, members: &[usize], axis: usize) -> usize {
    if members.is_empty() {
        return 0;
    }
    let mut vals: Vec<(f64, usize)> = members.iter().map(|&i| (set.point(i)[axis], i)).collect();
    vals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let last_axis = axis + 1 == set.dim();
    let mut best = 0;
    let mut hi = 0;
    for lo in 0..vals.len() {
        if lo > 0 && vals[lo].0 == vals[lo - 1].0 {
            continue;
        }
        let anchor = vals[lo].0;
        hi = hi.max(lo);
        while hi < vals.len() && vals[hi].0 <= anchor + 1.0 {
            hi += 1;
        }
        let count = if last_axis {
            hi - lo
        } else {
            if hi - lo <= best {
                continue;
            }
            let slab: Vec<usize> = vals[lo..hi].iter().map(|v| v.1).collect();
            max_cube_occupancy(set, &slab, axis + 1)
        };
        best = best.max(count);
    }
    best
}

fn check_decay_exponent(set: &PointSet, s: f64) -> Result<()> {
    if !(s > set.dim() as f64) {
        return Err(Error::InvalidParameter(format!(
            "decay exponent s = {s} must exceed the dimension {}",
            set.dim()
        )));
    }
    Ok(())
}

/// Kernel matrix `(1+|x_k - x_l|)^{-s}`, row-major.
fn polynomial_kernel(set: &PointSet, s: f64) -> Vec<f64> {
    let n = set.len();
    let mut w = vec![0.0; n * n];
    for k in 0..n {
        for l in k..n {
            let v = (1.0 + set.distance(k, l)).powf(-s);
            w[k * n + l] = v;
            w[l * n + k] = v;
        }
    }
    w
}

/// `max_{k ∈ X} Σ_{l ∈ X} (1+|k-l|)^{-s}`.
pub fn neighbor_sum_sup(set: &PointSet, s: f64) -> Result<f64> {
    check_decay_exponent(set, s)?;
    let n = set.len();
    let mut best = 0.0f64;
    for k in 0..n {
        let sum: f64 = (0..n).map(|l| (1.0 + set.distance(k, l)).powf(-s)).sum();
        best = best.max(sum);
    }
    Ok(best)
}

/// Smallest `C` with `Σ_n (1+|k-n|)^{-s} (1+|l-n|)^{-s} <= C (1+|k-l|)^{-s}`
/// for all `k, l` in the finite set, found by brute force.
pub fn convolution_bound_constant(set: &PointSet, s: f64) -> Result<f64> {
    Ok(convolution_bound(set, s)?.0)
}

/// Like [`convolution_bound_constant`] but also returns the maximizing pair.
pub fn convolution_bound(set: &PointSet, s: f64) -> Result<(f64, (usize, usize))> {
    check_decay_exponent(set, s)?;
    let n = set.len();
    let w = polynomial_kernel(set, s);
    let mut best = (0.0f64, (0, 0));
    for k in 0..n {
        let row_k = &w[k * n..(k + 1) * n];
        for l in k..n {
            let row_l = &w[l * n..(l + 1) * n];
            let conv: f64 = row_k.iter().zip(row_l).map(|(a, b)| a * b).sum();
            let ratio = conv / w[k * n + l];
            if ratio > best.0 {
                best = (ratio, (k, l));
            }
        }
    }
    Ok(best)
}

/// Splits `X` into points within max-norm distance `ceil(tau)` of `x_k`
/// and the rest.
pub fn tau_partition(set: &PointSet, k: usize, tau: f64) -> Result<(Vec<usize>, Vec<usize>)> {
    set.check_index(k)?;
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tau must be positive, got {tau}"
        )));
    }
    let radius = tau.ceil();
    Ok((0..set.len()).partition(|&n| set.distance_inf(k, n) <= radius))
}

/// Measured constants of the `τ`-partition counting estimates
/// `|M1| <= C τ^d` and `Σ_{n ∈ M2} (1+|k-n|)^{-s} <= C τ^{d-s}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauLemmaReport {
    pub tau0: f64,
    pub s: f64,
    /// `max |M1| / τ^d`.
    pub count_constant: f64,
    /// `max τ^{s-d} Σ_{M2} (1+|k-n|)^{-s}`.
    pub tail_constant: f64,
    /// `2^d γ (1/τ0 + 1)^d` with `γ` the cube occupancy.
    pub count_bound: f64,
    /// Every sampled `|M1|` stayed below `count_bound * τ^d`.
    pub count_bound_holds: bool,
}

impl TauLemmaReport {
    pub fn constant(&self) -> f64 {
        self.count_constant.max(self.tail_constant)
    }
}

/// Sweeps `taus` (each must exceed `tau0`) over all anchors `k ∈ X`.
pub fn tau_lemma_constants(
    set: &PointSet,
    s: f64,
    tau0: f64,
    taus: &[f64],
) -> Result<TauLemmaReport> {
    check_decay_exponent(set, s)?;
    if !(tau0 > 0.0) || taus.iter().any(|&t| !(t > tau0)) {
        return Err(Error::InvalidParameter(
            "all tau must exceed tau0 > 0".into(),
        ));
    }
    let d = set.dim() as f64;
    let gamma = separation_report(set).cube_count as f64;
    let count_bound = 2f64.powf(d) * gamma * (1.0 / tau0 + 1.0).powf(d);
    let n = set.len();
    let mut report = TauLemmaReport {
        tau0,
        s,
        count_constant: 0.0,
        tail_constant: 0.0,
        count_bound,
        count_bound_holds: true,
    };
    for k in 0..n {
        for &tau in taus {
            let radius = tau.ceil();
            let mut inner = 0usize;
            let mut tail = 0.0;
            for l in 0..n {
                if set.distance_inf(k, l) <= radius {
                    inner += 1;
                } else {
                    tail += (1.0 + set.distance(k, l)).powf(-s);
                }
            }
            let vol = tau.powf(d);
            report.count_constant = report.count_constant.max(inner as f64 / vol);
            report.tail_constant = report.tail_constant.max(tail * tau.powf(s - d));
            if inner as f64 > count_bound * vol {
                report.count_bound_holds = false;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> PointSet {
        PointSet::from_points(1, &xs.iter().map(|&x| vec![x]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn lattice_small_cases() {
        let x = make_lattice(1, 1.0, &[3]).unwrap();
        assert_eq!(
            x.iter().map(|p| p[0]).collect::<Vec<_>>(),
            vec![0.0, 1.0, 2.0]
        );
        let x = make_lattice(2, 1.0, &[2, 2]).unwrap();
        let pts: Vec<Vec<f64>> = x.iter().map(<[f64]>::to_vec).collect();
        assert_eq!(
            pts,
            vec![vec![0., 0.], vec![0., 1.], vec![1., 0.], vec![1., 1.]]
        );
        let x = make_lattice(1, 0.5, &[4]).unwrap();
        assert_eq!(
            x.iter().map(|p| p[0]).collect::<Vec<_>>(),
            vec![0.0, 0.5, 1.0, 1.5]
        );
    }

    #[test]
    fn lattice_rejects_oversize_and_bad_params() {
        assert!(matches!(
            make_lattice(2, 1.0, &[1000, 1000]),
            Err(Error::TooManyPoints {
                count: 1_000_000,
                ..
            })
        ));
        assert!(make_lattice_capped(1, 1.0, &[10], 9).is_err());
        assert!(make_lattice(1, 0.0, &[3]).is_err());
        assert!(make_lattice(1, 1.0, &[0]).is_err());
        assert!(make_lattice(2, 1.0, &[3]).is_err());
    }

    #[test]
    fn lattice_coordinates_round_trip() {
        let x = make_lattice(2, 1.0, &[3, 4]).unwrap();
        for i in 0..x.len() {
            let z = x.lattice_coords(i).unwrap();
            assert_eq!(x.lattice_index(&z), Some(i));
            assert_eq!(x.point(i), &[z[0] as f64, z[1] as f64][..]);
        }
        assert_eq!(x.lattice_index(&[3, 0]), None);
    }

    #[test]
    fn jitter_zero_is_lattice_and_seed_is_deterministic() {
        assert_eq!(
            make_jittered(1, 1.0, 0.0, 3, &[5]).unwrap(),
            make_lattice(1, 1.0, &[5]).unwrap()
        );
        let a = make_jittered(1, 1.0, 0.4, 7, &[20]).unwrap();
        let b = make_jittered(1, 1.0, 0.4, 7, &[20]).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_lattice());
        assert!(make_jittered(1, 1.0, 0.5, 7, &[20]).is_err());
    }

    #[test]
    fn jittered_gap_bound_brute_force() {
        for (dim, seed) in [(1usize, 1u64), (1, 2), (2, 3), (2, 4)] {
            let extent = vec![if dim == 1 { 40 } else { 8 }; dim];
            let x = make_jittered(dim, 1.0, 0.3, seed, &extent).unwrap();
            let mut gap = f64::INFINITY;
            for k in 0..x.len() {
                for l in 0..x.len() {
                    if k != l {
                        gap = gap.min(x.distance(k, l));
                    }
                }
            }
            assert!(gap >= 1.0 - 2.0 * 0.3 - 1e-15, "gap {gap}");
        }
    }

    #[test]
    fn from_points_rejects_duplicates() {
        let err = PointSet::from_points(1, &[vec![0.0], vec![1.0], vec![0.0]]).unwrap_err();
        assert!(matches!(err, Error::DuplicatePoint(0, 2)));
        assert!(PointSet::from_points(1, &[]).is_err());
    }

    #[test]
    fn separation_examples() {
        let r = separation_report(&line(&[0.0, 1.0, 2.0]));
        assert_eq!(r.min_gap, 1.0);
        assert_eq!(r.cube_count, 2);
        let r = separation_report(&line(&[0.0]));
        assert_eq!(r.min_gap, f64::INFINITY);
        assert_eq!(r.cube_count, 1);
        let r = separation_report(&make_lattice(2, 1.0, &[4, 4]).unwrap());
        assert_eq!(r.cube_count, 4);
    }

    // Exhaustive oracle: every cube anchored at a coordinate combination.
    fn cube_count_oracle(x: &PointSet) -> usize {
        let d = x.dim();
        let axes: Vec<Vec<f64>> = (0..d).map(|a| x.iter().map(|p| p[a]).collect()).collect();
        let mut best = 0;
        let mut idx = vec![0usize; d];
        loop {
            let anchor: Vec<f64> = (0..d).map(|a| axes[a][idx[a]]).collect();
            let c = x
                .iter()
                .filter(|p| {
                    p.iter()
                        .zip(&anchor)
                        .all(|(v, a)| *v >= *a && *v <= *a + 1.0)
                })
                .count();
            best = best.max(c);
            let mut a = 0;
            loop {
                if a == d {
                    return best;
                }
                idx[a] += 1;
                if idx[a] < axes[a].len() {
                    break;
                }
                idx[a] = 0;
                a += 1;
            }
        }
    }

    #[test]
    fn cube_count_matches_exhaustive_anchor_search() {
        for seed in 0..6 {
            let x = make_jittered(2, 0.7, 0.3, seed, &[6, 5]).unwrap();
            assert_eq!(separation_report(&x).cube_count, cube_count_oracle(&x));
            let x = make_jittered(1, 0.4, 0.15, seed, &[30]).unwrap();
            assert_eq!(separation_report(&x).cube_count, cube_count_oracle(&x));
        }
    }

    #[test]
    fn neighbor_sum_examples() {
        assert_eq!(neighbor_sum_sup(&line(&[0.0]), 3.0).unwrap(), 1.0);
        assert_eq!(neighbor_sum_sup(&line(&[0.0, 1.0]), 2.0).unwrap(), 1.25);
        let x = make_lattice(1, 1.0, &[101]).unwrap();
        let v = neighbor_sum_sup(&x, 2.0).unwrap();
        let mid: f64 = (-50i32..=50).map(|j| (1.0 + j.abs() as f64).powi(-2)).sum();
        let pi2_3 = std::f64::consts::PI.powi(2) / 3.0;
        assert!((1.0..=pi2_3).contains(&v));
        assert!((v - mid).abs() < 0.05);
        assert!(neighbor_sum_sup(&x, 1.0).is_err());
    }

    #[test]
    fn convolution_constant_examples() {
        assert_eq!(convolution_bound_constant(&line(&[0.0]), 2.0).unwrap(), 1.0);
        let (c, pair) = convolution_bound(&line(&[0.0, 1.0]), 2.0).unwrap();
        assert!((c - 2.0).abs() < 1e-15);
        assert_eq!(pair, (0, 1));
        let c60 = convolution_bound_constant(&make_lattice(1, 1.0, &[61]).unwrap(), 3.0).unwrap();
        let c120 = convolution_bound_constant(&make_lattice(1, 1.0, &[121]).unwrap(), 3.0).unwrap();
        assert!(c60.is_finite());
        assert!((c120 / c60 - 1.0).abs() < 0.05, "{c60} {c120}");
    }

    #[test]
    fn tau_partition_examples() {
        let x = line(&[0.0, 1.0, 2.0, 5.0]);
        let (m1, m2) = tau_partition(&x, 0, 1.5).unwrap();
        assert_eq!(m1, vec![0, 1, 2]);
        assert_eq!(m2, vec![3]);
        let (m1, m2) = tau_partition(&x, 2, 10.0).unwrap();
        assert_eq!(m1.len(), 4);
        assert!(m2.is_empty());
        assert!(tau_partition(&x, 4, 1.0).is_err());
    }

    #[test]
    fn tau_lemma_counts_respect_proof_constant() {
        let taus: Vec<f64> = (1..=40).map(|i| 0.5 + 0.25 * i as f64).collect();
        for x in [
            make_lattice(1, 1.0, &[64]).unwrap(),
            make_jittered(2, 1.0, 0.3, 11, &[8, 8]).unwrap(),
        ] {
            let r = tau_lemma_constants(&x, x.dim() as f64 + 2.0, 0.5, &taus).unwrap();
            assert!(r.count_bound_holds);
            assert!(r.constant().is_finite());
        }
    }

    #[test]
    fn json_shape_and_round_trip() {
        let x = make_lattice(1, 1.0, &[2]).unwrap();
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(
            s,
            r#"{"dim":1,"points":[[0.0],[1.0]],"lattice":{"spacing":1.0,"extent":[2]}}"#
        );
        let y = make_jittered(2, 1.0, 0.3, 5, &[3, 3]).unwrap();
        let s = serde_json::to_string(&y).unwrap();
        assert!(!s.contains("lattice"));
        let back: PointSet = serde_json::from_str(&s).unwrap();
        assert_eq!(back, y);
        assert!(serde_json::from_str::<PointSet>(r#"{"dim":1,"points":[[0.0],[0.0]]}"#).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn partition_is_disjoint_cover(seed in 0u64..500, k in 0usize..30, tau in 0.01f64..40.0) {
                let x = make_jittered(1, 1.0, 0.3, seed, &[30]).unwrap();
                let (m1, m2) = tau_partition(&x, k, tau).unwrap();
                let mut all: Vec<usize> = m1.iter().chain(&m2).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..30).collect::<Vec<_>>());
            }

            #[test]
            fn neighbor_sum_non_increasing_in_s(seed in 0u64..200, s in 1.01f64..6.0, ds in 0.0f64..3.0) {
                let x = make_jittered(1, 1.0, 0.3, seed, &[25]).unwrap();
                prop_assert!(neighbor_sum_sup(&x, s + ds).unwrap() <= neighbor_sum_sup(&x, s).unwrap());
            }
        }
    }
}

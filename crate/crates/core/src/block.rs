//! Dense `m × m` complex blocks, the entries of operator-valued matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense square block.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    m: usize,
    data: Vec<Complex64>,
}

impl Block {
    pub fn zeros(m: usize) -> Self {
        Block {
            m,
            data: vec![Complex64::new(0.0, 0.0); m * m],
        }
    }

    pub fn identity(m: usize) -> Self {
        Self::scalar(m, Complex64::new(1.0, 0.0))
    }

    pub fn scalar(m: usize, z: Complex64) -> Self {
        let mut b = Self::zeros(m);
        for i in 0..m {
            b.data[i * m + i] = z;
        }
        b
    }

    pub fn from_fn(m: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                data.push(f(i, j));
            }
        }
        Block { m, data }
    }

    pub fn from_row_major(m: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != m * m {
            return Err(Error::DimensionMismatch(format!(
                "block of size {m} needs {} entries, got {}",
                m * m,
                data.len()
            )));
        }
        Ok(Block { m, data })
    }

    /// From separate real and imaginary row lists.
    pub fn from_parts(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<Self> {
        let m = re.len();
        if im.len() != m || re.iter().chain(im).any(|row| row.len() != m) {
            return Err(Error::DimensionMismatch(
                "real/imaginary parts must both be m x m".into(),
            ));
        }
        Ok(Block::from_fn(m, |i, j| Complex64::new(re[i][j], im[i][j])))
    }

    pub fn to_parts(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let rows = |f: fn(&Complex64) -> f64| {
            self.data
                .chunks_exact(self.m)
                .map(|r| r.iter().map(f).collect())
                .collect()
        };
        (rows(|z| z.re), rows(|z| z.im))
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.m + j]
    }

    pub(crate) fn from_slice(m: usize, data: &[Complex64]) -> Block {
        Block {
            m,
            data: data.to_vec(),
        }
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: Complex64) -> Block {
        Block {
            m: self.m,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn scale_real(&self, c: f64) -> Block {
        Block {
            m: self.m,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn add(&self, other: &Block) -> Block {
        Block {
            m: self.m,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Block) -> Block {
        Block {
            m: self.m,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Block) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Block {
        Block::from_fn(self.m, |i, j| self.get(j, i).conj())
    }

    pub fn mul(&self, other: &Block) -> Block {
        let mut out = Block::zeros(self.m);
        out.mul_acc(self, other);
        out
    }

    /// `self += a * b`.
    pub fn mul_acc(&mut self, a: &Block, b: &Block) {
        gemm_acc(self.m, &mut self.data, &a.data, &b.data);
    }

    /// `out += self * v`.
    pub fn mul_vec_acc(&self, v: &[Complex64], out: &mut [Complex64]) {
        gemv_acc(self.m, &self.data, v, out);
    }

    /// `out += self^* v`.
    pub fn adjoint_mul_vec_acc(&self, v: &[Complex64], out: &mut [Complex64]) {
        gemv_adjoint_acc(self.m, &self.data, v, out);
    }

    pub fn to_dmatrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.m, self.m, &self.data)
    }

    pub fn from_dmatrix(mat: &DMatrix<Complex64>) -> Block {
        Block::from_fn(mat.nrows(), |i, j| mat[(i, j)])
    }

    /// Operator norm on `C^m`: the largest singular value, from a full SVD.
    pub fn norm(&self) -> f64 {
        block_norm(self)
    }
}

/// `out += a b` for row-major `m × m` slices; entries accumulate in
/// increasing inner index.
#[inline]
pub(crate) fn gemm_acc(m: usize, out: &mut [Complex64], a: &[Complex64], b: &[Complex64]) {
    match m {
        1 => out[0] += a[0] * b[0],
        2 => {
            let (Ok(o), Ok(a), Ok(b)) = (
                <&mut [Complex64; 4]>::try_from(out),
                <&[Complex64; 4]>::try_from(a),
                <&[Complex64; 4]>::try_from(b),
            ) else {
                unreachable!("2×2 blocks hold four entries")
            };
            o[0] = o[0] + a[0] * b[0] + a[1] * b[2];
            o[1] = o[1] + a[0] * b[1] + a[1] * b[3];
            o[2] = o[2] + a[2] * b[0] + a[3] * b[2];
            o[3] = o[3] + a[2] * b[1] + a[3] * b[3];
        }
        _ => {
            for i in 0..m {
                let arow = &a[i * m..(i + 1) * m];
                let orow = &mut out[i * m..(i + 1) * m];
                for (p, &aip) in arow.iter().enumerate() {
                    let brow = &b[p * m..(p + 1) * m];
                    for (o, &bpj) in orow.iter_mut().zip(brow) {
                        *o += aip * bpj;
                    }
                }
            }
        }
    }
}

/// `out += a v` for a row-major `m × m` slice.
#[inline]
pub(crate) fn gemv_acc(m: usize, a: &[Complex64], v: &[Complex64], out: &mut [Complex64]) {
    for (i, o) in out.iter_mut().enumerate().take(m) {
        for (x, y) in a[i * m..(i + 1) * m].iter().zip(v) {
            *o += x * y;
        }
    }
}

/// `out += a^* v` for a row-major `m × m` slice.
#[inline]
pub(crate) fn gemv_adjoint_acc(m: usize, a: &[Complex64], v: &[Complex64], out: &mut [Complex64]) {
    for (i, &vi) in v.iter().enumerate().take(m) {
        for (o, x) in out.iter_mut().zip(&a[i * m..(i + 1) * m]) {
            *o += x.conj() * vi;
        }
    }
}

/// Spectral norm (largest singular value) of a block.
///
/// The SVD runs on a canonical one of `B` and `B^*` (the lexicographically
/// smaller by bit pattern), so `‖B^*‖` and `‖B‖` agree to the last bit.
pub fn block_norm(block: &Block) -> f64 {
    match block.m {
        0 => 0.0,
        1 => block.data[0].norm(),
        _ => {
            if block.is_zero() {
                return 0.0;
            }
            let adjoint = block.adjoint();
            let bits = |z: &Complex64| (z.re.to_bits(), z.im.to_bits());
            let canonical = if adjoint
                .data
                .iter()
                .map(bits)
                .lt(block.data.iter().map(bits))
            {
                &adjoint
            } else {
                block
            };
            if canonical.m == 2 {
                if let Some(norm) = norm_2x2(canonical) {
                    return norm;
                }
            }
            canonical.to_dmatrix().singular_values().max()
        }
    }
}

/// Closed form for 2×2 blocks: the largest eigenvalue of `B^* B`, computed
/// from column norms and the column inner product without cancellation.
/// `None` when the intermediate squares leave the finite range.
fn norm_2x2(b: &Block) -> Option<f64> {
    let (a, c) = (b.data[0], b.data[2]);
    let (x, d) = (b.data[1], b.data[3]);
    let p = a.norm_sqr() + c.norm_sqr();
    let q = x.norm_sqr() + d.norm_sqr();
    let r = (a.conj() * x + c.conj() * d).norm();
    let lambda = 0.5 * (p + q) + (0.5 * (p - q)).hypot(r);
    let tiny = f64::MIN_POSITIVE / f64::EPSILON;
    (lambda.is_finite() && lambda > tiny).then(|| lambda.sqrt())
}

/// JSON form of a block entry: separate real and imaginary row lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockParts {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

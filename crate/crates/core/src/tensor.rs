//! Dense complex k-tensors.
//!
//! Entries are stored row-major over the multi-index `(i_1, ..., i_k)`,
//! i.e. the last leg varies fastest.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, ZERO};

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<Complex64>,
}

/// Row-major strides for a shape.
pub fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for j in (0..shape.len().saturating_sub(1)).rev() {
        s[j] = s[j + 1] * shape[j + 1];
    }
    s
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<Complex64>) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::Shape("a tensor needs at least one leg".into()));
        }
        if shape.contains(&0) {
            return Err(Error::Shape(format!("leg dimensions must be positive, got {shape:?}")));
        }
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {len} entries, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let len = shape.iter().product();
        Tensor::new(shape, vec![ZERO; len])
    }

    /// Builds a tensor by evaluating `f` at every multi-index.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> Complex64) -> Result<Self> {
        let mut t = Tensor::zeros(shape)?;
        let mut idx = vec![0usize; t.shape.len()];
        for slot in t.data.iter_mut() {
            *slot = f(&idx);
            increment(&mut idx, &t.shape);
        }
        Ok(t)
    }

    /// Tensor with the given real entries at the listed multi-indices, zero elsewhere.
    pub fn from_sparse(shape: Vec<usize>, entries: &[(Vec<usize>, Complex64)]) -> Result<Self> {
        let mut t = Tensor::zeros(shape)?;
        for (idx, v) in entries {
            let off = t.offset(idx)?;
            t.data[off] += v;
        }
        Ok(t)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Number of parties (legs).
    pub fn parties(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn offset(&self, idx: &[usize]) -> Result<usize> {
        if idx.len() != self.shape.len() {
            return Err(Error::PartyMismatch { left: idx.len(), right: self.shape.len() });
        }
        let mut off = 0;
        for (j, (&i, &d)) in idx.iter().zip(&self.shape).enumerate() {
            if i >= d {
                return Err(Error::Shape(format!("index {i} out of range on leg {j} (dim {d})")));
            }
            off = off * d + i;
        }
        Ok(off)
    }

    pub fn get(&self, idx: &[usize]) -> Result<Complex64> {
        Ok(self.data[self.offset(idx)?])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| *z == ZERO)
    }

    /// Fails with [`Error::ZeroTensor`] on the zero tensor.
    pub fn require_nonzero(&self) -> Result<()> {
        if self.norm_sqr() > 0.0 {
            Ok(())
        } else {
            Err(Error::ZeroTensor)
        }
    }

    pub fn scaled(&self, s: f64) -> Tensor {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(|z| z * s).collect() }
    }

    /// Unit-norm copy.
    pub fn normalized(&self) -> Result<Tensor> {
        self.require_nonzero()?;
        Ok(self.scaled(1.0 / self.norm()))
    }

    /// Party-wise Kronecker product: leg `j` of the result has dimension
    /// `a.d_j * b.d_j`, with combined index `i_j * b.d_j + i'_j`.
    pub fn kronecker(&self, other: &Tensor) -> Result<Tensor> {
        let k = self.parties();
        if k != other.parties() {
            return Err(Error::PartyMismatch { left: k, right: other.parties() });
        }
        let shape: Vec<usize> = self.shape.iter().zip(&other.shape).map(|(a, b)| a * b).collect();
        let out_strides = strides(&shape);
        let mut out = vec![ZERO; self.len() * other.len()];
        let mut ia = vec![0usize; k];
        for &va in &self.data {
            if va != ZERO {
                let mut ib = vec![0usize; k];
                for &vb in &other.data {
                    let off: usize = (0..k)
                        .map(|j| (ia[j] * other.shape[j] + ib[j]) * out_strides[j])
                        .sum();
                    out[off] = va * vb;
                    increment(&mut ib, &other.shape);
                }
            }
            increment(&mut ia, &self.shape);
        }
        Tensor::new(shape, out)
    }

    /// Block-diagonal direct sum: `self` occupies the leading index block on
    /// every leg, `other` the trailing block, cross blocks are zero.
    pub fn direct_sum(&self, other: &Tensor) -> Result<Tensor> {
        let k = self.parties();
        if k != other.parties() {
            return Err(Error::PartyMismatch { left: k, right: other.parties() });
        }
        let shape: Vec<usize> = self.shape.iter().zip(&other.shape).map(|(a, b)| a + b).collect();
        let out_strides = strides(&shape);
        let mut out = vec![ZERO; shape.iter().product()];
        let mut idx = vec![0usize; k];
        for &v in &self.data {
            let off: usize = idx.iter().zip(&out_strides).map(|(i, s)| i * s).sum();
            out[off] = v;
            increment(&mut idx, &self.shape);
        }
        let mut idx = vec![0usize; k];
        for &v in &other.data {
            let off: usize = (0..k).map(|j| (idx[j] + self.shape[j]) * out_strides[j]).sum();
            out[off] = v;
            increment(&mut idx, &other.shape);
        }
        Tensor::new(shape, out)
    }

    /// Applies `m` to leg `leg`; the leg dimension becomes `m.nrows()`.
    pub fn apply_local_map(&self, leg: usize, m: &CMatrix) -> Result<Tensor> {
        if leg >= self.parties() {
            return Err(Error::Shape(format!("leg {leg} out of range for {} parties", self.parties())));
        }
        let d = self.shape[leg];
        if m.ncols() != d {
            return Err(Error::LegDimension { leg, expected: d, got: m.ncols() });
        }
        let rows = m.nrows();
        let outer: usize = self.shape[..leg].iter().product();
        let inner: usize = self.shape[leg + 1..].iter().product();
        let mut out = vec![ZERO; outer * rows * inner];
        for o in 0..outer {
            let src = &self.data[o * d * inner..(o + 1) * d * inner];
            let dst = &mut out[o * rows * inner..(o + 1) * rows * inner];
            for r in 0..rows {
                for c in 0..d {
                    let coef = m[(r, c)];
                    if coef == ZERO {
                        continue;
                    }
                    let s = &src[c * inner..(c + 1) * inner];
                    let t = &mut dst[r * inner..(r + 1) * inner];
                    for (x, y) in t.iter_mut().zip(s) {
                        *x += coef * y;
                    }
                }
            }
        }
        let mut shape = self.shape.clone();
        shape[leg] = rows;
        Tensor::new(shape, out)
    }

    /// `(M_1 ⊗ ... ⊗ M_k) t`.
    pub fn apply_local_maps(&self, maps: &[CMatrix]) -> Result<Tensor> {
        if maps.len() != self.parties() {
            return Err(Error::PartyMismatch { left: maps.len(), right: self.parties() });
        }
        let mut t = self.clone();
        for (leg, m) in maps.iter().enumerate() {
            t = t.apply_local_map(leg, m)?;
        }
        Ok(t)
    }

    /// Reorders legs: leg `i` of the result is leg `order[i]` of `self`.
    pub fn permute_legs(&self, order: &[usize]) -> Result<Tensor> {
        let k = self.parties();
        let mut seen = vec![false; k];
        if order.len() != k || order.iter().any(|&o| o >= k || std::mem::replace(&mut seen[o], true)) {
            return Err(Error::Shape(format!("{order:?} is not a permutation of {k} legs")));
        }
        let old = strides(&self.shape);
        let shape: Vec<usize> = order.iter().map(|&o| self.shape[o]).collect();
        let src: Vec<usize> = order.iter().map(|&o| old[o]).collect();
        let mut out = Vec::with_capacity(self.len());
        let mut idx = vec![0usize; k];
        for _ in 0..self.len() {
            let off: usize = idx.iter().zip(&src).map(|(i, s)| i * s).sum();
            out.push(self.data[off]);
            increment(&mut idx, &shape);
        }
        Tensor::new(shape, out)
    }

    /// Tensor with i.i.d. standard complex Gaussian entries (`E|z|^2 = 1`),
    /// deterministic per seed.
    pub fn random_gaussian(shape: Vec<usize>, seed: u64) -> Result<Tensor> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len: usize = shape.iter().product();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let data = (0..len)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * s, im * s)
            })
            .collect();
        Tensor::new(shape, data)
    }

    /// Reshapes into a matrix with the given row count (row-major).
    pub(crate) fn as_matrix(&self, rows: usize) -> CMatrix {
        let cols = self.len() / rows;
        DMatrix::from_row_slice(rows, cols, &self.data)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&TensorJson::from(self)).expect("tensor serializes")
    }

    pub fn from_json(s: &str) -> Result<Tensor> {
        let raw: TensorJson = serde_json::from_str(s).map_err(|e| Error::Parse {
            pos: e.column(),
            msg: e.to_string(),
        })?;
        raw.try_into()
    }
}

/// Advances a row-major odometer; wraps to all zeros after the last index.
pub(crate) fn increment(idx: &mut [usize], shape: &[usize]) {
    for j in (0..idx.len()).rev() {
        idx[j] += 1;
        if idx[j] < shape[j] {
            return;
        }
        idx[j] = 0;
    }
}

/// On-disk form: `{"shape":[d1,...,dk],"entries":[[re,im],...]}`, row-major.
#[derive(Serialize, Deserialize)]
pub struct TensorJson {
    pub shape: Vec<usize>,
    pub entries: Vec<[f64; 2]>,
}

impl From<&Tensor> for TensorJson {
    fn from(t: &Tensor) -> Self {
        TensorJson { shape: t.shape.clone(), entries: t.data.iter().map(|z| [z.re, z.im]).collect() }
    }
}

impl TryFrom<TensorJson> for Tensor {
    type Error = Error;

    fn try_from(raw: TensorJson) -> Result<Tensor> {
        Tensor::new(raw.shape, raw.entries.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

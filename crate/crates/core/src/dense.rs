//! Full `n^m` tensors. Only used as a verification bridge and by the naive
//! reference engines.

use crate::error::{Error, Result};
use crate::indexing::{advance, MAX_ORDER};

/// Largest number of elements a dense tensor may hold.
pub const DENSE_ELEMENT_LIMIT: usize = 100_000_000;

/// Row-major dense tensor of order `m` with edge `n` in every mode.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    n: usize,
    m: usize,
    data: Vec<f64>,
}

/// Element count `n^m`, rejected above [`DENSE_ELEMENT_LIMIT`].
pub fn dense_len(n: usize, m: usize) -> Result<usize> {
    if n == 0 || m == 0 || m > MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "dense tensor needs n >= 1 and 1 <= m <= {MAX_ORDER}, got n={n}, m={m}"
        )));
    }
    let len = u32::try_from(m)
        .ok()
        .and_then(|m| n.checked_pow(m))
        .filter(|&len| len <= DENSE_ELEMENT_LIMIT);
    len.ok_or_else(|| {
        Error::ResourceGuard(format!(
            "dense tensor with n={n}, m={m} exceeds {DENSE_ELEMENT_LIMIT} elements"
        ))
    })
}

impl DenseTensor {
    pub fn zeros(n: usize, m: usize) -> Result<Self> {
        let len = dense_len(n, m)?;
        Ok(Self {
            n,
            m,
            data: vec![0.0; len],
        })
    }

    pub fn from_vec(n: usize, m: usize, data: Vec<f64>) -> Result<Self> {
        let len = dense_len(n, m)?;
        if data.len() != len {
            return Err(Error::ShapeMismatch(format!(
                "expected {len} elements for n={n}, m={m}, got {}",
                data.len()
            )));
        }
        Ok(Self { n, m, data })
    }

    /// Builds a tensor by evaluating `f` at every zero-based multi-index.
    pub fn from_fn(n: usize, m: usize, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let mut t = Self::zeros(n, m)?;
        let edges = vec![n; m];
        let mut idx = vec![0; m];
        let mut k = 0;
        loop {
            t.data[k] = f(&idx);
            k += 1;
            if !advance(&mut idx, &edges) {
                break;
            }
        }
        Ok(t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Flat offset of a zero-based multi-index.
    #[inline]
    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.m);
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    /// Element at a zero-based multi-index. Panics when out of range.
    #[inline]
    pub fn get(&self, idx: &[usize]) -> f64 {
        assert!(
            idx.len() == self.m && idx.iter().all(|&i| i < self.n),
            "index {idx:?} out of range"
        );
        self.data[self.offset(idx)]
    }

    #[inline]
    pub fn set(&mut self, idx: &[usize], value: f64) {
        let k = self.offset(idx);
        self.data[k] = value;
    }

    /// Largest deviation from super-symmetry, relative to
    /// `max(|a|, |b|, abs_floor)`.
    pub fn symmetry_defect(&self, abs_floor: f64) -> f64 {
        let edges = vec![self.n; self.m];
        let mut idx = vec![0; self.m];
        let mut sorted = vec![0; self.m];
        let mut worst: f64 = 0.0;
        loop {
            sorted.copy_from_slice(&idx);
            sorted.sort_unstable();
            let a = self.get(&idx);
            let b = self.get(&sorted);
            let scale = a.abs().max(b.abs()).max(abs_floor);
            worst = worst.max((a - b).abs() / scale);
            if !advance(&mut idx, &edges) {
                break;
            }
        }
        worst
    }
}

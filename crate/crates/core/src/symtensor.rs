//! Blocked storage of super-symmetric tensors.
//!
//! A tensor of order `m` and dimension `n` is cut into hypercubic blocks of
//! edge `b`. Along every mode there are `n_bar = ceil(n / b)` blocks, the last
//! of which has edge `n - b * (n_bar - 1)` when `b` does not divide `n`. Only
//! blocks whose block multi-index `j = (j_1, ..., j_m)` is nondecreasing are
//! materialised; every other block is a permutation of a stored one.
//!
//! Stored blocks are dense row-major arrays holding all of their offsets,
//! including the redundant ones inside "diagonal" blocks (blocks with
//! repeated block coordinates). Element access always goes through the
//! sorted multi-index, so `get` is exactly permutation invariant.
//!
//! Public element access uses [`TensorIndex`], which is 1-based. Methods
//! taking a raw `&[usize]` are 0-based.

use serde::{Deserialize, Serialize};

use crate::dense::DenseTensor;
use crate::error::{Error, Result};
use crate::indexing::{advance, advance_sorted, binomial, strides, MAX_ORDER};
use crate::tolerance::close;

/// Default block edge.
pub const DEFAULT_BLOCK_SIZE: usize = 2;

/// Relative tolerance used when checking dense input for super-symmetry.
pub const SYMMETRY_REL_TOL: f64 = 1e-8;
/// Absolute floor for the super-symmetry check.
pub const SYMMETRY_ABS_FLOOR: f64 = 1e-12;

/// A 1-based multi-index `(i_1, ..., i_m)` with entries in `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TensorIndex(Vec<usize>);

impl TensorIndex {
    /// Validates that every entry lies in `1..=n`.
    pub fn new(entries: Vec<usize>, n: usize) -> Result<Self> {
        if entries.is_empty() || entries.iter().any(|&i| i == 0 || i > n) {
            return Err(Error::IndexOutOfRange {
                index: entries.clone(),
                n,
                m: entries.len(),
            });
        }
        Ok(Self(entries))
    }

    /// Converts a 0-based index.
    pub fn from_zero_based(idx: &[usize]) -> Self {
        Self(idx.iter().map(|&i| i + 1).collect())
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_zero_based(&self) -> Vec<usize> {
        self.0.iter().map(|&i| i - 1).collect()
    }
}

/// Sorted (nondecreasing) permutation of `i`.
pub fn canonical_index(i: &TensorIndex) -> TensorIndex {
    let mut v = i.0.clone();
    v.sort_unstable();
    TensorIndex(v)
}

/// Block multi-index and within-block offsets of an element, both 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLocation {
    pub block: Vec<usize>,
    pub offsets: Vec<usize>,
}

/// Splits each entry into its block coordinate `ceil(i / b)` and offset
/// `i - (j - 1) * b`. When `i` is sorted the block coordinates are too.
pub fn locate(i: &TensorIndex, b: usize) -> BlockLocation {
    assert!(b >= 1, "block size must be positive");
    let block = i.0.iter().map(|&x| x.div_ceil(b)).collect::<Vec<_>>();
    let offsets =
        i.0.iter()
            .zip(&block)
            .map(|(&x, &j)| x - (j - 1) * b)
            .collect();
    BlockLocation { block, offsets }
}

/// Number of nondecreasing block multi-indices of length `m` over `n_bar`
/// symbols, `C(n_bar + m - 1, m)`.
pub fn unique_block_count(n_bar: usize, m: usize) -> Result<u64> {
    binomial((n_bar + m - 1) as u64, m as u64).ok_or(Error::CountOverflow("unique block count"))
}

/// Geometry shared by all tensors with the same `(n, m, b)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout {
    n: usize,
    m: usize,
    b: usize,
    n_bar: usize,
    /// `rank_tail[p * (n_bar + 1) + v]`: number of sorted keys whose entry at
    /// position `p` is below `v`, given the prefix before `p` starts at 0.
    rank_tail: Vec<usize>,
    block_count: usize,
}

impl BlockLayout {
    pub fn new(n: usize, m: usize, b: usize) -> Result<Self> {
        if n == 0 || m == 0 || b == 0 {
            return Err(Error::InvalidArgument(format!(
                "n, m and b must be positive (n={n}, m={m}, b={b})"
            )));
        }
        if m > MAX_ORDER {
            return Err(Error::InvalidArgument(format!(
                "order {m} exceeds the supported maximum {MAX_ORDER}"
            )));
        }
        // b > n degenerates to a single block of edge n.
        let b = b.min(n);
        let n_bar = n.div_ceil(b);
        let block_count = usize::try_from(unique_block_count(n_bar, m)?)
            .map_err(|_| Error::CountOverflow("unique block count"))?;
        let mut rank_tail = vec![0; m * (n_bar + 1)];
        for p in 0..m {
            let rest = (m - p - 1) as u64;
            for v in 0..n_bar {
                // keys with entry v at position p: multisets of size `rest`
                // over the n_bar - v symbols v..n_bar
                let with_v = binomial((n_bar - v) as u64 + rest - 1, rest)
                    .and_then(|c| usize::try_from(c).ok())
                    .ok_or(Error::CountOverflow("block rank table"))?;
                let row = p * (n_bar + 1);
                rank_tail[row + v + 1] = rank_tail[row + v] + with_v;
            }
        }
        Ok(Self {
            n,
            m,
            b,
            n_bar,
            rank_tail,
            block_count,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn block_size(&self) -> usize {
        self.b
    }

    pub fn blocks_per_mode(&self) -> usize {
        self.n_bar
    }

    pub fn block_count(&self) -> usize {
        self.block_count
    }

    /// Edge of block coordinate `j` (0-based).
    #[inline]
    pub fn edge(&self, j: usize) -> usize {
        if j + 1 < self.n_bar {
            self.b
        } else {
            self.n - self.b * (self.n_bar - 1)
        }
    }

    pub fn edges(&self, key: &[usize]) -> Vec<usize> {
        key.iter().map(|&j| self.edge(j)).collect()
    }

    /// Position of a sorted 0-based key in lexicographic order.
    #[inline]
    pub fn rank(&self, key: &[usize]) -> usize {
        debug_assert!(key.windows(2).all(|w| w[0] <= w[1]), "unsorted key {key:?}");
        let stride = self.n_bar + 1;
        let mut lo = 0;
        let mut r = 0;
        for (p, &j) in key.iter().enumerate() {
            let row = &self.rank_tail[p * stride..(p + 1) * stride];
            r += row[j] - row[lo];
            lo = j;
        }
        r
    }

    /// All sorted 0-based keys in lexicographic order.
    pub fn keys(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::with_capacity(self.block_count);
        let mut key = vec![0; self.m];
        loop {
            out.push(key.clone());
            if !advance_sorted(&mut key, self.n_bar) {
                break;
            }
        }
        out
    }

    /// Total number of stored scalars.
    pub fn stored_len(&self) -> usize {
        self.keys()
            .iter()
            .map(|k| k.iter().map(|&j| self.edge(j)).product::<usize>())
            .sum()
    }
}

/// One stored block: sorted 0-based key, per-mode edges, row-major data.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    key: Vec<usize>,
    edges: Vec<usize>,
    data: Vec<f64>,
}

impl Block {
    pub fn key(&self) -> &[usize] {
        &self.key
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Elementwise operation for [`BlockSymTensor::combine`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineOp {
    Add,
    Subtract,
}

/// Super-symmetric tensor stored as its sorted blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSymTensor {
    layout: BlockLayout,
    blocks: Vec<Block>,
}

impl BlockSymTensor {
    pub fn zeros(n: usize, m: usize, b: usize) -> Result<Self> {
        Self::from_block_fn(n, m, b, |_, edges| vec![0.0; edges.iter().product()])
    }

    /// Fills every stored block with `fill(key, edges)`; keys are 0-based.
    pub fn from_block_fn(
        n: usize,
        m: usize,
        b: usize,
        mut fill: impl FnMut(&[usize], &[usize]) -> Vec<f64>,
    ) -> Result<Self> {
        let layout = BlockLayout::new(n, m, b)?;
        let blocks = layout
            .keys()
            .into_iter()
            .map(|key| {
                let edges = layout.edges(&key);
                let data = fill(&key, &edges);
                assert_eq!(data.len(), edges.iter().product::<usize>());
                Block { key, edges, data }
            })
            .collect();
        Ok(Self { layout, blocks })
    }

    /// Like [`from_block_fn`](Self::from_block_fn) but fills contiguous runs
    /// of blocks on `workers` threads. Each block is computed by exactly one
    /// worker, so the result does not depend on the worker count.
    pub fn from_block_fn_parallel<F>(
        n: usize,
        m: usize,
        b: usize,
        workers: usize,
        fill: F,
    ) -> Result<Self>
    where
        F: Fn(&[usize], &[usize]) -> Vec<f64> + Sync,
    {
        if workers == 0 {
            return Err(Error::InvalidArgument(
                "worker count must be at least 1".into(),
            ));
        }
        let layout = BlockLayout::new(n, m, b)?;
        let keys = layout.keys();
        if workers == 1 || keys.len() < 2 {
            return Self::from_block_fn(n, m, b, fill);
        }
        let chunk = keys.len().div_ceil(workers);
        let fill = &fill;
        let layout_ref = &layout;
        let blocks = std::thread::scope(|scope| {
            let handles: Vec<_> = keys
                .chunks(chunk)
                .map(|run| {
                    scope.spawn(move || {
                        run.iter()
                            .map(|key| {
                                let edges = layout_ref.edges(key);
                                let data = fill(key, &edges);
                                assert_eq!(data.len(), edges.iter().product::<usize>());
                                Block {
                                    key: key.clone(),
                                    edges,
                                    data,
                                }
                            })
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("block worker panicked"))
                .collect::<Vec<_>>()
        });
        Ok(Self { layout, blocks })
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn n(&self) -> usize {
        self.layout.n
    }

    pub fn order(&self) -> usize {
        self.layout.m
    }

    pub fn block_size(&self) -> usize {
        self.layout.b
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Number of stored scalars across all blocks.
    pub fn stored_len(&self) -> usize {
        self.blocks.iter().map(|b| b.data.len()).sum()
    }

    /// Block with the given sorted 0-based key.
    #[inline]
    pub fn block(&self, key: &[usize]) -> &Block {
        &self.blocks[self.layout.rank(key)]
    }

    /// Logical element at a 1-based index.
    pub fn get(&self, i: &TensorIndex) -> Result<f64> {
        if i.len() != self.layout.m || i.0.iter().any(|&x| x == 0 || x > self.layout.n) {
            return Err(Error::IndexOutOfRange {
                index: i.0.clone(),
                n: self.layout.n,
                m: self.layout.m,
            });
        }
        let mut idx = [0usize; MAX_ORDER];
        for (d, &s) in idx.iter_mut().zip(&i.0) {
            *d = s - 1;
        }
        Ok(self.value(&idx[..i.len()]))
    }

    /// Logical element at a 0-based index. Panics when out of range.
    #[inline]
    pub fn value(&self, idx: &[usize]) -> f64 {
        let m = self.layout.m;
        assert!(idx.len() == m, "index length {} != order {m}", idx.len());
        let b = self.layout.b;
        let mut sorted = [0usize; MAX_ORDER];
        sorted[..m].copy_from_slice(idx);
        let sorted = &mut sorted[..m];
        sorted.sort_unstable();
        assert!(sorted[m - 1] < self.layout.n, "index {idx:?} out of range");
        let mut key = [0usize; MAX_ORDER];
        for (k, &i) in key.iter_mut().zip(sorted.iter()) {
            *k = i / b;
        }
        let block = self.block(&key[..m]);
        let mut off = 0;
        for p in 0..m {
            off = off * block.edges[p] + (sorted[p] - key[p] * b);
        }
        block.data[off]
    }

    /// Converts a dense tensor, rejecting inputs that are not super-symmetric
    /// within a relative tolerance of 1e-8 (absolute floor 1e-12).
    pub fn from_dense(d: &DenseTensor, b: usize) -> Result<Self> {
        let (n, m) = (d.n(), d.order());
        let edges = vec![n; m];
        let mut idx = vec![0; m];
        let mut sorted = vec![0; m];
        loop {
            sorted.copy_from_slice(&idx);
            sorted.sort_unstable();
            let (v, c) = (d.get(&idx), d.get(&sorted));
            if !close(v, c, SYMMETRY_REL_TOL, SYMMETRY_ABS_FLOOR) {
                return Err(Error::SymmetryViolation {
                    index: idx.iter().map(|&i| i + 1).collect(),
                    value: v,
                    canonical: c,
                });
            }
            if !advance(&mut idx, &edges) {
                break;
            }
        }
        let b_eff = b.min(n);
        let mut global = vec![0; m];
        Self::from_block_fn(n, m, b, |key, edges| {
            let mut data = Vec::with_capacity(edges.iter().product());
            let mut off = vec![0; m];
            loop {
                for p in 0..m {
                    global[p] = key[p] * b_eff + off[p];
                }
                data.push(d.get(&global));
                if !advance(&mut off, edges) {
                    break;
                }
            }
            data
        })
    }

    /// Expands to the full `n^m` array, every entry read through its sorted index.
    pub fn to_dense(&self) -> Result<DenseTensor> {
        DenseTensor::from_fn(self.layout.n, self.layout.m, |idx| self.value(idx))
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        let (a, b) = (&self.layout, &other.layout);
        if (a.n, a.m, a.b) != (b.n, b.m, b.b) {
            return Err(Error::ShapeMismatch(format!(
                "(n, m, b) = ({}, {}, {}) vs ({}, {}, {})",
                a.n, a.m, a.b, b.n, b.m, b.b
            )));
        }
        Ok(())
    }

    /// Elementwise sum or difference over the stored blocks.
    pub fn combine(&self, other: &Self, op: CombineOp) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (dst, src) in out.blocks.iter_mut().zip(&other.blocks) {
            match op {
                CombineOp::Add => dst
                    .data
                    .iter_mut()
                    .zip(&src.data)
                    .for_each(|(a, b)| *a += b),
                CombineOp::Subtract => dst
                    .data
                    .iter_mut()
                    .zip(&src.data)
                    .for_each(|(a, b)| *a -= b),
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.scale_in_place(s);
        out
    }

    pub fn scale_in_place(&mut self, s: f64) {
        for blk in &mut self.blocks {
            blk.data.iter_mut().for_each(|x| *x *= s);
        }
    }

    /// `self += alpha * other`, block by block in storage order.
    pub fn axpy(&mut self, alpha: f64, other: &Self) -> Result<()> {
        self.check_same_shape(other)?;
        for (dst, src) in self.blocks.iter_mut().zip(&other.blocks) {
            dst.data
                .iter_mut()
                .zip(&src.data)
                .for_each(|(a, b)| *a += alpha * b);
        }
        Ok(())
    }

    /// `self -= other`, in place.
    pub fn sub_assign(&mut self, other: &Self) -> Result<()> {
        self.check_same_shape(other)?;
        for (dst, src) in self.blocks.iter_mut().zip(&other.blocks) {
            dst.data
                .iter_mut()
                .zip(&src.data)
                .for_each(|(a, b)| *a -= b);
        }
        Ok(())
    }

    /// Largest absolute element.
    pub fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.data.iter())
            .fold(0.0, |acc: f64, x| acc.max(x.abs()))
    }

    /// Serialises to the JSON interchange document.
    pub fn to_document(&self) -> TensorDocument {
        TensorDocument {
            n: self.layout.n,
            m: self.layout.m,
            b: self.layout.b,
            blocks: self
                .blocks
                .iter()
                .map(|blk| BlockDocument {
                    j: blk.key.iter().map(|&j| j + 1).collect(),
                    edges: blk.edges.clone(),
                    data: blk.data.clone(),
                })
                .collect(),
        }
    }

    /// Validates and loads a JSON interchange document.
    pub fn from_document(doc: TensorDocument) -> Result<Self> {
        let layout =
            BlockLayout::new(doc.n, doc.m, doc.b).map_err(|e| Error::Document(e.to_string()))?;
        if layout.b != doc.b {
            return Err(Error::Document(format!(
                "block size {} exceeds n = {}; store it as {}",
                doc.b, doc.n, layout.b
            )));
        }
        if doc.blocks.len() != layout.block_count {
            return Err(Error::Document(format!(
                "expected {} blocks, found {}",
                layout.block_count,
                doc.blocks.len()
            )));
        }
        let mut slots: Vec<Option<Block>> = vec![None; layout.block_count];
        for (pos, bd) in doc.blocks.into_iter().enumerate() {
            if bd.j.len() != layout.m {
                return Err(Error::Document(format!(
                    "block {pos}: \"j\" has length {}",
                    bd.j.len()
                )));
            }
            if bd.j.iter().any(|&j| j == 0 || j > layout.n_bar) {
                return Err(Error::Document(format!(
                    "block {pos}: \"j\" {:?} out of range 1..={}",
                    bd.j, layout.n_bar
                )));
            }
            if bd.j.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::Document(format!(
                    "block {pos}: \"j\" {:?} is not sorted",
                    bd.j
                )));
            }
            let key: Vec<usize> = bd.j.iter().map(|&j| j - 1).collect();
            let edges = layout.edges(&key);
            if bd.edges != edges {
                return Err(Error::Document(format!(
                    "block {pos} with j {:?}: edges {:?}, expected {:?}",
                    bd.j, bd.edges, edges
                )));
            }
            let len: usize = edges.iter().product();
            if bd.data.len() != len {
                return Err(Error::Document(format!(
                    "block {pos}: {} data values, expected {len}",
                    bd.data.len()
                )));
            }
            let r = layout.rank(&key);
            if r != pos {
                return Err(Error::Document(format!(
                    "block {pos} with j {:?} is out of lexicographic order or duplicated",
                    bd.j
                )));
            }
            slots[r] = Some(Block {
                key,
                edges,
                data: bd.data,
            });
        }
        let blocks = slots
            .into_iter()
            .map(|b| b.expect("every rank filled"))
            .collect();
        Ok(Self { layout, blocks })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_document())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: TensorDocument =
            serde_json::from_str(s).map_err(|e| Error::Document(e.to_string()))?;
        Self::from_document(doc)
    }

    /// Makes diagonal blocks exactly symmetric in their repeated modes by
    /// copying each canonical offset onto its permutations.
    pub(crate) fn symmetrize_block(key: &[usize], edges: &[usize], data: &mut [f64]) {
        let m = key.len();
        if key.windows(2).all(|w| w[0] != w[1]) {
            return;
        }
        let st = strides(edges);
        let mut off = vec![0; m];
        let mut canon = vec![0; m];
        loop {
            canon.copy_from_slice(&off);
            let mut start = 0;
            while start < m {
                let mut end = start + 1;
                while end < m && key[end] == key[start] {
                    end += 1;
                }
                canon[start..end].sort_unstable();
                start = end;
            }
            if canon != off {
                let src: usize = canon.iter().zip(&st).map(|(o, s)| o * s).sum();
                let dst: usize = off.iter().zip(&st).map(|(o, s)| o * s).sum();
                data[dst] = data[src];
            }
            if !advance(&mut off, edges) {
                break;
            }
        }
    }
}

/// JSON interchange form: `{"n", "m", "b", "blocks": [{"j", "edges", "data"}]}`
/// with 1-based `j`, blocks in lexicographic order of `j`, data row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorDocument {
    pub n: usize,
    pub m: usize,
    pub b: usize,
    pub blocks: Vec<BlockDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockDocument {
    pub j: Vec<usize>,
    pub edges: Vec<usize>,
    pub data: Vec<f64>,
}

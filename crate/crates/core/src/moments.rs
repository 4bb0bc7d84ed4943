//! Data matrices, centring, and moment tensors in block form.
//!
//! Moments use the biased `1/t` normalisation throughout:
//! `m_i = (1/t) * sum_l prod_k x[l, i_k]`. No `1/(t-1)` correction is
//! applied anywhere, so the order-2 moment of centred data is the `1/t`
//! covariance.
//!
//! The summation order over samples is fixed by the chunking alone, so a
//! given input and block size always produce the same bits.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::indexing::{advance, MAX_ORDER};
use crate::symtensor::{BlockLayout, BlockSymTensor};

/// `t x n` matrix of observations: rows are samples, columns are variables.
/// Stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    t: usize,
    n: usize,
    cols: Vec<f64>,
}

impl DataMatrix {
    /// From row-major values (`values[l * n + j]`).
    pub fn from_row_major(t: usize, n: usize, values: &[f64]) -> Result<Self> {
        Self::check_shape(t, n, values.len())?;
        let mut cols = vec![0.0; t * n];
        for l in 0..t {
            for j in 0..n {
                cols[j * t + l] = values[l * n + j];
            }
        }
        Self::from_column_major(t, n, cols)
    }

    /// From column-major values (`values[j * t + l]`).
    pub fn from_column_major(t: usize, n: usize, values: Vec<f64>) -> Result<Self> {
        Self::check_shape(t, n, values.len())?;
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite value {} at row {}, column {}",
                values[k],
                k % t + 1,
                k / t + 1
            )));
        }
        Ok(Self { t, n, cols: values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let t = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::ShapeMismatch("rows have different lengths".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_row_major(t, n, &flat)
    }

    fn check_shape(t: usize, n: usize, len: usize) -> Result<()> {
        if t == 0 || n == 0 {
            return Err(Error::InvalidData(format!(
                "data matrix needs t >= 1 and n >= 1, got t={t}, n={n}"
            )));
        }
        if len != t * n {
            return Err(Error::ShapeMismatch(format!(
                "{len} values for a {t} x {n} matrix"
            )));
        }
        Ok(())
    }

    /// Sample count.
    pub fn t(&self) -> usize {
        self.t
    }

    /// Variable count.
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.cols[j * self.t..(j + 1) * self.t]
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cols[col * self.t + row]
    }

    pub fn row(&self, l: usize) -> Vec<f64> {
        (0..self.n).map(|j| self.get(l, j)).collect()
    }

    /// Row-major copy of the values.
    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.t * self.n];
        for j in 0..self.n {
            for (l, &v) in self.column(j).iter().enumerate() {
                out[l * self.n + j] = v;
            }
        }
        out
    }

    /// Copy of a contiguous range of rows.
    pub fn slice_rows(&self, rows: Range<usize>) -> Result<Self> {
        if rows.start >= rows.end || rows.end > self.t {
            return Err(Error::InvalidArgument(format!(
                "row range {rows:?} invalid for t={}",
                self.t
            )));
        }
        let t = rows.len();
        let mut cols = Vec::with_capacity(t * self.n);
        for j in 0..self.n {
            cols.extend_from_slice(&self.column(j)[rows.clone()]);
        }
        Ok(Self { t, n: self.n, cols })
    }

    /// Arithmetic mean of each column.
    pub fn column_means(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| self.column(j).iter().sum::<f64>() / self.t as f64)
            .collect()
    }

    /// Applies `f(column, value)` to every entry.
    pub fn map(&self, f: impl Fn(usize, f64) -> f64) -> Self {
        let mut cols = self.cols.clone();
        for j in 0..self.n {
            for v in &mut cols[j * self.t..(j + 1) * self.t] {
                *v = f(j, *v);
            }
        }
        Self {
            t: self.t,
            n: self.n,
            cols,
        }
    }

    /// Checks that every column mean is within `rel_tol` of zero relative to
    /// the column's root mean square.
    pub fn check_centered(&self, rel_tol: f64) -> Result<()> {
        for j in 0..self.n {
            let col = self.column(j);
            let mean = col.iter().sum::<f64>() / self.t as f64;
            let rms = (col.iter().map(|v| v * v).sum::<f64>() / self.t as f64).sqrt();
            if mean.abs() > rel_tol * rms {
                return Err(Error::NotCentered {
                    column: j,
                    mean,
                    rms,
                });
            }
        }
        Ok(())
    }
}

/// Subtracts each column's mean.
pub fn center(x: &DataMatrix) -> DataMatrix {
    let means = x.column_means();
    x.map(|j, v| v - means[j])
}

/// How moment and cumulant work is spread over threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    /// Everything on the calling thread.
    #[default]
    None,
    /// Split samples into this many contiguous chunks and reduce.
    Samples(usize),
    /// Split stored blocks across this many workers.
    Blocks(usize),
}

const CHUNK: usize = 128;

/// Reusable buffers for the block kernel.
struct Scratch {
    levels: Vec<Vec<f64>>,
}

impl Scratch {
    fn new() -> Self {
        Self { levels: Vec::new() }
    }
}

/// Register tile of the group product: `acc[r * stride + e] += sum_l
/// rows[r][l] * cols[e][l]` for `R` lead rows and `K` columns, with two
/// interleaved partial sums per entry.
#[inline(always)]
fn tile<const R: usize, const K: usize>(
    rows: [&[f64]; R],
    cols: [&[f64]; K],
    acc: &mut [f64],
    stride: usize,
) {
    let len = rows[0].len();
    let rows = rows.map(|r| &r[..len]);
    let cols = cols.map(|c| &c[..len]);
    let pairs = len / 2;
    let mut s = [[[0.0f64; 2]; K]; R];
    for i in 0..pairs {
        let cv: [&[f64; 2]; K] =
            std::array::from_fn(|e| cols[e][2 * i..2 * i + 2].try_into().expect("pair"));
        for (sr, row) in s.iter_mut().zip(&rows) {
            let av: &[f64; 2] = row[2 * i..2 * i + 2].try_into().expect("pair");
            for (se, c) in sr.iter_mut().zip(&cv) {
                se[0] += av[0] * c[0];
                se[1] += av[1] * c[1];
            }
        }
    }
    if len % 2 == 1 {
        for (sr, row) in s.iter_mut().zip(&rows) {
            for (se, c) in sr.iter_mut().zip(&cols) {
                se[0] += row[len - 1] * c[len - 1];
            }
        }
    }
    for (r, sr) in s.iter().enumerate() {
        for (e, se) in sr.iter().enumerate() {
            acc[r * stride + e] += se[0] + se[1];
        }
    }
}

/// `g[pre * ncols + c] += sum_l lead[pre][l] * cols[c][l]` over one chunk,
/// for the prefix rows listed in `live`.
fn group_product(lead: &[f64], live: &[usize], len: usize, cols: &[&[f64]], g: &mut [f64]) {
    let ncols = cols.len();
    let row = |pre: usize| &lead[pre * CHUNK..pre * CHUNK + len];
    for pair in live.chunks(2) {
        let pre = pair[0];
        let mut c = 0;
        while c < ncols {
            let k = (ncols - c).min(4);
            let out = &mut g[pre * ncols + c..];
            let cs = &cols[c..c + k];
            match (pair, k) {
                (&[p, q], k) => {
                    let rows = [row(p), row(q)];
                    let stride = (q - p) * ncols;
                    match k {
                        4 => tile::<2, 4>(rows, [cs[0], cs[1], cs[2], cs[3]], out, stride),
                        3 => tile::<2, 3>(rows, [cs[0], cs[1], cs[2]], out, stride),
                        2 => tile::<2, 2>(rows, [cs[0], cs[1]], out, stride),
                        _ => tile::<2, 1>(rows, [cs[0]], out, stride),
                    }
                }
                (_, 4) => tile::<1, 4>([row(pre)], [cs[0], cs[1], cs[2], cs[3]], out, ncols),
                (_, 3) => tile::<1, 3>([row(pre)], [cs[0], cs[1], cs[2]], out, ncols),
                (_, 2) => tile::<1, 2>([row(pre)], [cs[0], cs[1]], out, ncols),
                _ => tile::<1, 1>([row(pre)], [cs[0]], out, ncols),
            }
            c += k;
        }
    }
}

/// Prefix rows whose offsets are non-decreasing wherever the block index
/// repeats. The other rows of a diagonal block are copies of these.
fn canonical_rows(starts: &[usize], edges: &[usize]) -> Vec<usize> {
    let mp = starts.len();
    let mut off = vec![0; mp];
    let mut out = Vec::new();
    let mut pre = 0;
    loop {
        if (1..mp).all(|p| starts[p] != starts[p - 1] || off[p] >= off[p - 1]) {
            out.push(pre);
        }
        pre += 1;
        if !advance(&mut off, edges) {
            break;
        }
    }
    out
}

/// Last-mode block of a group member: its first column and edge.
#[derive(Clone, Copy)]
struct Tail {
    c0: usize,
    e: usize,
}

/// Blocks sharing all but the last block index. For every member and every
/// offset tuple, adds `sum_{l in rows} prod_k x[l, col_k]` into the member's
/// row-major accumulator. Partial products over the shared leading modes are
/// built once per chunk of samples; the last mode then enters through one
/// product of those rows with all of the members' columns.
fn accumulate_group(
    x: &DataMatrix,
    rows: Range<usize>,
    starts: &[usize],
    edges: &[usize],
    tails: &[Tail],
    accs: &mut [Vec<f64>],
    scratch: &mut Scratch,
) {
    let mp = starts.len();
    if mp == 0 {
        for (t, acc) in tails.iter().zip(accs.iter_mut()) {
            for (o, a) in acc.iter_mut().enumerate().take(t.e) {
                *a += x.column(t.c0 + o)[rows.clone()].iter().sum::<f64>();
            }
        }
        return;
    }
    if scratch.levels.len() < mp {
        scratch.levels.resize(mp, Vec::new());
    }
    // the members' last-mode blocks tile a contiguous column range
    let c_first = tails[0].c0;
    let c_end = tails.last().map_or(c_first, |t| t.c0 + t.e);
    let ncols = c_end - c_first;
    let width: usize = edges.iter().product();
    let mut g = vec![0.0; width * ncols];
    let live = canonical_rows(starts, edges);
    let mut start = rows.start;
    while start < rows.end {
        let len = CHUNK.min(rows.end - start);
        let span = start..start + len;

        // levels[k] holds prod over modes 0..=k, laid out [prefix][sample]
        let mut w = 1;
        for k in 0..mp {
            let e = edges[k];
            let (done, rest) = scratch.levels.split_at_mut(k);
            let cur = &mut rest[0];
            cur.resize(w * e * CHUNK, 0.0);
            for pre in 0..w {
                for o in 0..e {
                    let col = &x.column(starts[k] + o)[span.clone()];
                    let dst = &mut cur[(pre * e + o) * CHUNK..(pre * e + o) * CHUNK + len];
                    if k == 0 {
                        dst.copy_from_slice(col);
                    } else {
                        let src = &done[k - 1][pre * CHUNK..pre * CHUNK + len];
                        for ((d, &s), &v) in dst.iter_mut().zip(src).zip(col) {
                            *d = s * v;
                        }
                    }
                }
            }
            w *= e;
        }

        let lead = &scratch.levels[mp - 1];
        let cols: Vec<&[f64]> = (c_first..c_end)
            .map(|c| &x.column(c)[span.clone()])
            .collect();
        group_product(lead, &live, len, &cols, &mut g);
        start += len;
    }
    for (t, acc) in tails.iter().zip(accs.iter_mut()) {
        for pre in 0..width {
            let src = &g[pre * ncols + t.c0 - c_first..pre * ncols + t.c0 - c_first + t.e];
            for (a, &v) in acc[pre * t.e..(pre + 1) * t.e].iter_mut().zip(src) {
                *a += v;
            }
        }
    }
}

/// Finished moment blocks for the keys `keys` (all sharing `keys[0][..m-1]`).
fn group_blocks(
    x: &DataMatrix,
    rows: Range<usize>,
    layout: &BlockLayout,
    keys: &[Vec<usize>],
    scratch: &mut Scratch,
) -> Vec<Vec<f64>> {
    let m = layout.order();
    let b = layout.block_size();
    let prefix = &keys[0][..m - 1];
    let starts: Vec<usize> = prefix.iter().map(|&j| j * b).collect();
    let edges: Vec<usize> = prefix.iter().map(|&j| layout.edge(j)).collect();
    let width: usize = edges.iter().product();
    let tails: Vec<Tail> = keys
        .iter()
        .map(|k| Tail {
            c0: k[m - 1] * b,
            e: layout.edge(k[m - 1]),
        })
        .collect();
    let mut accs: Vec<Vec<f64>> = tails.iter().map(|t| vec![0.0; width * t.e]).collect();
    let t = rows.len() as f64;
    accumulate_group(x, rows, &starts, &edges, &tails, &mut accs, scratch);
    for (key, acc) in keys.iter().zip(accs.iter_mut()) {
        for a in acc.iter_mut() {
            *a /= t;
        }
        BlockSymTensor::symmetrize_block(key, &layout.edges(key), acc);
    }
    accs
}

/// Index ranges of `keys` (in lexicographic order) sharing all but the last
/// entry.
fn prefix_groups(keys: &[Vec<usize>]) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < keys.len() {
        let m = keys[i].len();
        let mut j = i + 1;
        while j < keys.len() && keys[j][..m - 1] == keys[i][..m - 1] {
            j += 1;
        }
        out.push(i..j);
        i = j;
    }
    out
}

fn assemble(layout: &BlockLayout, data: Vec<Vec<f64>>) -> Result<BlockSymTensor> {
    let mut it = data.into_iter();
    BlockSymTensor::from_block_fn(layout.n(), layout.order(), layout.block_size(), |_, _| {
        it.next().expect("one data vector per block")
    })
}

fn check_key(x: &DataMatrix, key: &[usize], b: usize) -> Result<BlockLayout> {
    let layout = BlockLayout::new(x.n(), key.len(), b)?;
    if key.iter().any(|&j| j >= layout.blocks_per_mode()) {
        return Err(Error::IndexOutOfRange {
            index: key.iter().map(|&j| j + 1).collect(),
            n: layout.blocks_per_mode(),
            m: key.len(),
        });
    }
    if key.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument(format!(
            "block key {key:?} must be sorted"
        )));
    }
    Ok(layout)
}

/// One block of the moment tensor. `key` is the sorted 0-based block
/// multi-index; the result is row-major over the block's edges.
pub fn moment_block(x: &DataMatrix, key: &[usize], b: usize) -> Result<Vec<f64>> {
    let layout = check_key(x, key, b)?;
    let mut blocks = group_blocks(x, 0..x.t(), &layout, &[key.to_vec()], &mut Scratch::new());
    Ok(blocks.pop().expect("one block"))
}

fn check_order(m: usize) -> Result<()> {
    if m == 0 || m > MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "moment order must lie in 1..={MAX_ORDER}, got {m}"
        )));
    }
    Ok(())
}

fn moment_rows(x: &DataMatrix, rows: Range<usize>, m: usize, b: usize) -> Result<BlockSymTensor> {
    let layout = BlockLayout::new(x.n(), m, b)?;
    let keys = layout.keys();
    let mut scratch = Scratch::new();
    let data = prefix_groups(&keys)
        .into_iter()
        .flat_map(|g| group_blocks(x, rows.clone(), &layout, &keys[g], &mut scratch))
        .collect();
    assemble(&layout, data)
}

/// Moment tensor of order `m`, filling only the sorted blocks.
pub fn moment(x: &DataMatrix, m: usize, b: usize) -> Result<BlockSymTensor> {
    check_order(m)?;
    moment_rows(x, 0..x.t(), m, b)
}

/// Row ranges of `p` contiguous, nearly equal chunks covering `0..t`.
pub fn sample_chunks(t: usize, p: usize) -> Vec<Range<usize>> {
    (0..p).map(|s| s * t / p..(s + 1) * t / p).collect()
}

/// Moment tensor computed on `p` contiguous row chunks in parallel and
/// combined as `sum_s (t_s / t) M(X_s)`, reduced in chunk order.
pub fn moment_parallel(x: &DataMatrix, m: usize, b: usize, p: usize) -> Result<BlockSymTensor> {
    check_order(m)?;
    if p == 0 {
        return Err(Error::InvalidArgument(
            "worker count must be at least 1".into(),
        ));
    }
    if p > x.t() {
        return Err(Error::InvalidArgument(format!(
            "{p} workers for {} samples would leave a chunk empty",
            x.t()
        )));
    }
    if p == 1 {
        return moment(x, m, b);
    }
    let chunks = sample_chunks(x.t(), p);
    let partials = std::thread::scope(|scope| {
        let handles: Vec<_> = chunks
            .iter()
            .cloned()
            .map(|rows| scope.spawn(move || moment_rows(x, rows, m, b)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("moment worker panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    let t = x.t() as f64;
    let mut out = BlockSymTensor::zeros(x.n(), m, b)?;
    for (rows, part) in chunks.iter().zip(&partials) {
        out.axpy(rows.len() as f64 / t, part)?;
    }
    Ok(out)
}

/// Moment tensor with blocks distributed over `workers` threads. Blocks
/// sharing a key prefix stay on one worker; each block is computed exactly
/// as in the serial path.
pub fn moment_block_parallel(
    x: &DataMatrix,
    m: usize,
    b: usize,
    workers: usize,
) -> Result<BlockSymTensor> {
    check_order(m)?;
    if workers == 0 {
        return Err(Error::InvalidArgument(
            "worker count must be at least 1".into(),
        ));
    }
    let layout = BlockLayout::new(x.n(), m, b)?;
    let keys = layout.keys();
    let groups = prefix_groups(&keys);
    let per = keys.len().div_ceil(workers);
    let mut runs: Vec<Vec<Range<usize>>> = vec![Vec::new()];
    let mut filled = 0;
    for g in groups {
        if filled >= per {
            runs.push(Vec::new());
            filled = 0;
        }
        filled += g.len();
        runs.last_mut().expect("non-empty").push(g);
    }
    let (layout_ref, keys_ref) = (&layout, &keys);
    let data: Vec<Vec<f64>> = std::thread::scope(|scope| {
        let handles: Vec<_> = runs
            .into_iter()
            .map(|run| {
                scope.spawn(move || {
                    let mut scratch = Scratch::new();
                    run.into_iter()
                        .flat_map(|g| {
                            group_blocks(x, 0..x.t(), layout_ref, &keys_ref[g], &mut scratch)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("moment worker panicked"))
            .collect()
    });
    assemble(&layout, data)
}

/// Dispatches on the parallel strategy.
pub fn moment_with(x: &DataMatrix, m: usize, b: usize, par: Parallelism) -> Result<BlockSymTensor> {
    match par {
        Parallelism::None => moment(x, m, b),
        Parallelism::Samples(p) => moment_parallel(x, m, b, p),
        Parallelism::Blocks(p) => moment_block_parallel(x, m, b, p),
    }
}

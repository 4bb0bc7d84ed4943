//! Cumulant tensors from central moments.
//!
//! For `m >= 2` the cumulant is the central moment minus, for every
//! `sigma` in `2..=m/2`, the sum over partitions of the index positions into
//! `sigma` parts of size at least two of the product of lower cumulants:
//!
//! `c_i = m_i(X~) - sum_sigma sum_zeta prod_{k in zeta} c_{i_k}`.
//!
//! Orders two and three have an empty correction and equal the central
//! moments. Everything is computed from centred data; cumulants of order two
//! and higher do not change under a shift, so this agrees with formulations
//! that feed raw data to the lower orders.

use crate::error::{Error, Result};
use crate::indexing::{advance, strides};
use crate::moments::{center, moment_with, DataMatrix, Parallelism};
use crate::partitions::{enumerate_partitions_min2, Partition, MAX_ENUMERATION_ORDER};
use crate::symtensor::{BlockLayout, BlockSymTensor};

/// Tolerance of the entry check in [`cumulant`]: every column mean must be
/// within this multiple of the column's root mean square.
pub const CENTERING_TOL: f64 = 1e-10;

/// Cumulants of orders `1..=m_max` sharing one dimension and block size.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantSet {
    mean: Vec<f64>,
    higher: Vec<BlockSymTensor>,
}

impl CumulantSet {
    /// First cumulant: the column means.
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Cumulants of order 2 and up; element `k` has order `k + 2`.
    pub fn higher(&self) -> &[BlockSymTensor] {
        &self.higher
    }

    /// Cumulant tensor of order `k >= 2`.
    pub fn tensor(&self, k: usize) -> Option<&BlockSymTensor> {
        k.checked_sub(2).and_then(|i| self.higher.get(i))
    }

    pub fn max_order(&self) -> usize {
        self.higher.len() + 1
    }

    pub fn n(&self) -> usize {
        self.mean.len()
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<BlockSymTensor>) {
        (self.mean, self.higher)
    }
}

/// Operation counts reported by [`outer_prod_cum_counted`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MultCount {
    /// Scalar products between cumulant elements.
    pub products: u64,
    /// Elements evaluated (diagonal blocks evaluate only canonical offsets).
    pub elements: u64,
}

/// Largest part size in a partition of `m` into `sigma` parts of size >= 2.
fn largest_part(m: usize, sigma: usize) -> usize {
    m - 2 * (sigma - 1)
}

/// Checks that `lower` holds orders `2..=top` consistently and returns the
/// shared dimension and block size.
fn check_lower(lower: &[BlockSymTensor], top: usize) -> Result<(usize, usize)> {
    for (k, c) in lower.iter().enumerate() {
        if c.order() != k + 2 {
            return Err(Error::InvalidArgument(format!(
                "lower cumulant at position {k} has order {}, expected {}",
                c.order(),
                k + 2
            )));
        }
    }
    if lower.len() + 1 < top {
        return Err(Error::MissingCumulant(lower.len() + 2));
    }
    let first = &lower[0];
    let (n, b) = (first.n(), first.block_size());
    if let Some(c) = lower.iter().find(|c| c.n() != n || c.block_size() != b) {
        return Err(Error::ShapeMismatch(format!(
            "lower cumulants disagree: n={n}, b={b} versus n={}, b={} at order {}",
            c.n(),
            c.block_size(),
            c.order()
        )));
    }
    Ok((n, b))
}

fn check_sigma(m: usize, sigma: usize) -> Result<()> {
    if m > MAX_ENUMERATION_ORDER {
        return Err(Error::InvalidArgument(format!(
            "cumulant order {m} exceeds the partition enumeration limit {MAX_ENUMERATION_ORDER}"
        )));
    }
    if sigma < 2 || sigma > m / 2 {
        return Err(Error::InvalidArgument(format!(
            "sigma must lie in 2..={} for m={m}, got {sigma}",
            m / 2
        )));
    }
    Ok(())
}

/// Canonical offsets of a block: within runs of equal key entries the
/// offsets must be non-decreasing. Returns `(flat, offsets)` pairs.
fn canonical_offsets(key: &[usize], edges: &[usize]) -> Vec<(usize, Vec<usize>)> {
    let m = key.len();
    let mut out = Vec::new();
    let mut off = vec![0; m];
    let mut flat = 0;
    loop {
        if (1..m).all(|p| key[p] != key[p - 1] || off[p] >= off[p - 1]) {
            out.push((flat, off.clone()));
        }
        flat += 1;
        if !advance(&mut off, edges) {
            break;
        }
    }
    out
}

/// One part of a partition resolved against a block: the lower-cumulant
/// block data and, per mode of the outer block, the stride that mode
/// contributes to the sub-block offset (zero for modes outside the part).
struct PartView<'a> {
    data: &'a [f64],
    mode_stride: Vec<usize>,
}

fn part_views<'a>(
    key: &[usize],
    zeta: &Partition,
    lower: &'a [BlockSymTensor],
) -> Vec<PartView<'a>> {
    let m = key.len();
    zeta.parts()
        .iter()
        .map(|part| {
            let sub_key: Vec<usize> = part.iter().map(|&p| key[p - 1]).collect();
            let block = lower[part.len() - 2].block(&sub_key);
            let st = strides(block.edges());
            let mut mode_stride = vec![0; m];
            for (&p, &s) in part.iter().zip(&st) {
                mode_stride[p - 1] = s;
            }
            PartView {
                data: block.data(),
                mode_stride,
            }
        })
        .collect()
}

/// Correction block for one key: `sum_zeta prod_k c_{i_k}` at every
/// canonical offset, then symmetrised.
fn correction_block(
    key: &[usize],
    edges: &[usize],
    partitions: &[Partition],
    lower: &[BlockSymTensor],
    count: &mut MultCount,
) -> Vec<f64> {
    let len: usize = edges.iter().product();
    let mut acc = vec![0.0; len];
    let offsets = canonical_offsets(key, edges);
    count.elements += offsets.len() as u64;
    for zeta in partitions {
        let views = part_views(key, zeta, lower);
        for (flat, off) in &offsets {
            let mut prod = 1.0;
            for (k, v) in views.iter().enumerate() {
                let sub: usize = off.iter().zip(&v.mode_stride).map(|(o, s)| o * s).sum();
                let x = v.data[sub];
                if k == 0 {
                    prod = x;
                } else {
                    prod *= x;
                    count.products += 1;
                }
            }
            acc[*flat] += prod;
        }
    }
    BlockSymTensor::symmetrize_block(key, edges, &mut acc);
    acc
}

fn outer_prod_cum_impl(
    m: usize,
    sigma: usize,
    lower: &[BlockSymTensor],
    workers: usize,
) -> Result<(BlockSymTensor, MultCount)> {
    check_sigma(m, sigma)?;
    let (n, b) = check_lower(lower, largest_part(m, sigma))?;
    let partitions = enumerate_partitions_min2(m, sigma)?;
    if workers > 1 {
        let t = BlockSymTensor::from_block_fn_parallel(n, m, b, workers, |key, edges| {
            correction_block(key, edges, &partitions, lower, &mut MultCount::default())
        })?;
        return Ok((t, MultCount::default()));
    }
    let mut count = MultCount::default();
    let t = BlockSymTensor::from_block_fn(n, m, b, |key, edges| {
        correction_block(key, edges, &partitions, lower, &mut count)
    })?;
    Ok((t, count))
}

/// Sum over partitions of `1..m` into `sigma` parts of size >= 2 of the
/// product of lower-cumulant elements, evaluated block by block.
///
/// `lower[k]` must be the cumulant of order `k + 2`; dimension and block size
/// are taken from it.
pub fn outer_prod_cum(m: usize, sigma: usize, lower: &[BlockSymTensor]) -> Result<BlockSymTensor> {
    outer_prod_cum_impl(m, sigma, lower, 1).map(|(t, _)| t)
}

/// [`outer_prod_cum`] with blocks spread over `workers` threads.
pub fn outer_prod_cum_parallel(
    m: usize,
    sigma: usize,
    lower: &[BlockSymTensor],
    workers: usize,
) -> Result<BlockSymTensor> {
    if workers == 0 {
        return Err(Error::InvalidArgument(
            "worker count must be at least 1".into(),
        ));
    }
    outer_prod_cum_impl(m, sigma, lower, workers).map(|(t, _)| t)
}

/// Serial [`outer_prod_cum`] that also reports how many scalar products it
/// performed and over how many elements.
pub fn outer_prod_cum_counted(
    m: usize,
    sigma: usize,
    lower: &[BlockSymTensor],
) -> Result<(BlockSymTensor, MultCount)> {
    outer_prod_cum_impl(m, sigma, lower, 1)
}

/// Element-by-element evaluation of [`outer_prod_cum`] through the public
/// accessor, for differential testing of the blocked path.
pub fn outer_prod_cum_reference(
    m: usize,
    sigma: usize,
    lower: &[BlockSymTensor],
) -> Result<BlockSymTensor> {
    check_sigma(m, sigma)?;
    let (n, b) = check_lower(lower, largest_part(m, sigma))?;
    let partitions = enumerate_partitions_min2(m, sigma)?;
    let layout = BlockLayout::new(n, m, b)?;
    let b = layout.block_size();
    BlockSymTensor::from_block_fn(n, m, b, |key, edges| {
        let mut out = Vec::with_capacity(edges.iter().product());
        let mut off = vec![0; m];
        let mut idx = vec![0; m];
        let mut sub = Vec::with_capacity(m);
        loop {
            for p in 0..m {
                idx[p] = key[p] * b + off[p];
            }
            let mut total = 0.0;
            for zeta in partitions.iter() {
                let mut prod = 1.0;
                for (k, part) in zeta.parts().iter().enumerate() {
                    sub.clear();
                    sub.extend(part.iter().map(|&p| idx[p - 1]));
                    let v = lower[part.len() - 2].value(&sub);
                    prod = if k == 0 { v } else { prod * v };
                }
                total += prod;
            }
            out.push(total);
            if !advance(&mut off, edges) {
                break;
            }
        }
        out
    })
}

fn check_cumulant_order(m: usize) -> Result<()> {
    if !(2..=MAX_ENUMERATION_ORDER).contains(&m) {
        return Err(Error::InvalidArgument(format!(
            "cumulant order must lie in 2..={MAX_ENUMERATION_ORDER}, got {m}"
        )));
    }
    Ok(())
}

fn workers_of(par: Parallelism) -> usize {
    match par {
        Parallelism::None => 1,
        Parallelism::Samples(p) | Parallelism::Blocks(p) => p.max(1),
    }
}

/// [`cumulant_with`] without the order and centring checks, for callers
/// that centred the data themselves.
pub(crate) fn cumulant_unchecked(
    xc: &DataMatrix,
    m: usize,
    lower: &[BlockSymTensor],
    b: usize,
    par: Parallelism,
) -> Result<BlockSymTensor> {
    if m >= 4 {
        let (n, lb) = check_lower(lower, m - 2)?;
        let expect = BlockLayout::new(xc.n(), m, b)?.block_size();
        if n != xc.n() || lb != expect {
            return Err(Error::ShapeMismatch(format!(
                "lower cumulants have n={n}, b={lb}; data needs n={}, b={expect}",
                xc.n()
            )));
        }
    }
    let mut c = moment_with(xc, m, b, par)?;
    let workers = workers_of(par);
    for sigma in 2..=m / 2 {
        let corr = outer_prod_cum_impl(m, sigma, lower, workers)?.0;
        c.sub_assign(&corr)?;
    }
    Ok(c)
}

/// Cumulant of order `m` from centred data and the lower cumulants
/// `lower = [C_2, ..., C_{m-2}]` (ignored for `m < 4`).
pub fn cumulant(
    xc: &DataMatrix,
    m: usize,
    lower: &[BlockSymTensor],
    b: usize,
) -> Result<BlockSymTensor> {
    cumulant_with(xc, m, lower, b, Parallelism::None)
}

/// [`cumulant`] with an explicit parallel strategy. The moment term follows
/// `par`; the correction is split over blocks with the same worker count.
pub fn cumulant_with(
    xc: &DataMatrix,
    m: usize,
    lower: &[BlockSymTensor],
    b: usize,
    par: Parallelism,
) -> Result<BlockSymTensor> {
    check_cumulant_order(m)?;
    xc.check_centered(CENTERING_TOL)?;
    cumulant_unchecked(xc, m, lower, b, par)
}

/// All cumulants up to order `m_max`: the raw column means, then orders
/// `2..=m_max` from the centred data in ascending order.
pub fn cumulants_upto(x: &DataMatrix, m_max: usize, b: usize) -> Result<CumulantSet> {
    cumulants_upto_with(x, m_max, b, Parallelism::None)
}

pub fn cumulants_upto_with(
    x: &DataMatrix,
    m_max: usize,
    b: usize,
    par: Parallelism,
) -> Result<CumulantSet> {
    if m_max == 0 || m_max > MAX_ENUMERATION_ORDER {
        return Err(Error::InvalidArgument(format!(
            "maximum order must lie in 1..={MAX_ENUMERATION_ORDER}, got {m_max}"
        )));
    }
    if m_max >= 2 && x.t() < 2 {
        return Err(Error::InvalidData(
            "cumulants of order >= 2 need at least two samples".into(),
        ));
    }
    let mean = x.column_means();
    let xc = center(x);
    let mut higher: Vec<BlockSymTensor> = Vec::with_capacity(m_max.saturating_sub(1));
    for m in 2..=m_max {
        let c = cumulant_unchecked(&xc, m, &higher, b, par)?;
        higher.push(c);
    }
    Ok(CumulantSet { mean, higher })
}

//! Small multi-index utilities shared by the block and dense code paths.

/// Largest tensor order accepted anywhere in the crate.
pub const MAX_ORDER: usize = 16;

/// Advance a row-major multi-index (last position fastest). Returns `false`
/// after the last index has been visited.
#[inline]
pub(crate) fn advance(idx: &mut [usize], edges: &[usize]) -> bool {
    for p in (0..idx.len()).rev() {
        idx[p] += 1;
        if idx[p] < edges[p] {
            return true;
        }
        idx[p] = 0;
    }
    false
}

/// Advance a nondecreasing multi-index over `0..bound`. Returns `false` after
/// the last sorted index has been visited.
#[inline]
pub(crate) fn advance_sorted(idx: &mut [usize], bound: usize) -> bool {
    let m = idx.len();
    for p in (0..m).rev() {
        if idx[p] + 1 < bound {
            let v = idx[p] + 1;
            for q in &mut idx[p..] {
                *q = v;
            }
            return true;
        }
    }
    false
}

/// Row-major strides for the given edges.
pub(crate) fn strides(edges: &[usize]) -> Vec<usize> {
    let mut s = vec![1; edges.len()];
    for p in (0..edges.len().saturating_sub(1)).rev() {
        s[p] = s[p + 1] * edges[p + 1];
    }
    s
}

/// Exact binomial coefficient, `None` on overflow.
pub(crate) fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c.checked_mul(u128::from(n - i))? / u128::from(i + 1);
    }
    u64::try_from(c).ok()
}

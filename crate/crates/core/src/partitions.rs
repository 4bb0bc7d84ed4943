//! Set partitions of the mode tuple `(1, ..., m)` and the counting functions
//! that describe the cost of the cumulant recursion.
//!
//! Partitions are enumerated as restricted growth strings (Knuth's
//! Algorithm H order), pruned so that only partitions with exactly `sigma`
//! parts, and optionally no part smaller than two, are produced. Each
//! partition is emitted once, in canonical form: entries inside a part are
//! increasing and parts are ordered by their smallest entry.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::indexing::binomial;

/// Largest `m` for which partitions are enumerated (`Bell(12)` is about 4.2M).
pub const MAX_ENUMERATION_ORDER: usize = 12;

/// Canonical partition of `(1, ..., m)` into disjoint parts, 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    parts: Vec<Vec<usize>>,
}

impl Partition {
    /// Builds a partition from parts, validating and canonicalising them.
    pub fn new(mut parts: Vec<Vec<usize>>) -> Result<Self> {
        let m: usize = parts.iter().map(Vec::len).sum();
        let mut seen = vec![false; m];
        for part in &mut parts {
            if part.is_empty() {
                return Err(Error::InvalidArgument("empty part in partition".into()));
            }
            part.sort_unstable();
            for &e in part.iter() {
                if e == 0 || e > m || seen[e - 1] {
                    return Err(Error::InvalidArgument(format!(
                        "parts do not partition 1..={m}"
                    )));
                }
                seen[e - 1] = true;
            }
        }
        parts.sort_unstable_by_key(|p| p[0]);
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[Vec<usize>] {
        &self.parts
    }

    /// Number of parts.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Size of the partitioned tuple.
    pub fn order(&self) -> usize {
        self.parts.iter().map(Vec::len).sum()
    }

    pub fn min_part_size(&self) -> usize {
        self.parts.iter().map(Vec::len).min().unwrap_or(0)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for part in &self.parts {
            write!(f, "(")?;
            for (k, e) in part.iter().enumerate() {
                if k > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{e}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

type CacheKey = (usize, usize, usize);

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<Vec<Partition>>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<Vec<Partition>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cached(m: usize, sigma: usize, min_size: usize) -> Arc<Vec<Partition>> {
    let mut map = cache().lock().unwrap_or_else(|e| e.into_inner());
    map.entry((m, sigma, min_size))
        .or_insert_with(|| Arc::new(generate(m, sigma, min_size)))
        .clone()
}

struct Generator {
    m: usize,
    sigma: usize,
    min_size: usize,
    labels: Vec<usize>,
    sizes: Vec<usize>,
    out: Vec<Partition>,
}

impl Generator {
    fn feasible(&self, pos: usize) -> bool {
        let remaining = self.m - pos;
        let open = self.sizes.len();
        let deficit: usize = self
            .sizes
            .iter()
            .map(|&s| self.min_size.saturating_sub(s))
            .sum::<usize>()
            + (self.sigma - open) * self.min_size.max(1);
        deficit <= remaining
    }

    fn emit(&mut self) {
        let mut parts = vec![Vec::new(); self.sigma];
        for (pos, &label) in self.labels.iter().enumerate() {
            parts[label].push(pos + 1);
        }
        self.out.push(Partition { parts });
    }

    fn visit(&mut self, pos: usize) {
        if pos == self.m {
            if self.sizes.len() == self.sigma && self.sizes.iter().all(|&s| s >= self.min_size) {
                self.emit();
            }
            return;
        }
        if !self.feasible(pos) {
            return;
        }
        for label in 0..self.sizes.len() {
            self.labels.push(label);
            self.sizes[label] += 1;
            self.visit(pos + 1);
            self.sizes[label] -= 1;
            self.labels.pop();
        }
        if self.sizes.len() < self.sigma {
            let label = self.sizes.len();
            self.labels.push(label);
            self.sizes.push(1);
            self.visit(pos + 1);
            self.sizes.pop();
            self.labels.pop();
        }
    }
}

fn generate(m: usize, sigma: usize, min_size: usize) -> Vec<Partition> {
    if sigma == 0 || sigma > m {
        return Vec::new();
    }
    let mut g = Generator {
        m,
        sigma,
        min_size,
        labels: Vec::with_capacity(m),
        sizes: Vec::with_capacity(sigma),
        out: Vec::new(),
    };
    g.visit(0);
    g.out
}

fn check_enumeration_order(m: usize) -> Result<()> {
    if m == 0 || m > MAX_ENUMERATION_ORDER {
        return Err(Error::InvalidArgument(format!(
            "partition enumeration supports 1 <= m <= {MAX_ENUMERATION_ORDER}, got {m}"
        )));
    }
    Ok(())
}

/// All canonical partitions of `(1, ..., m)` into exactly `sigma` parts.
pub fn enumerate_partitions(m: usize, sigma: usize) -> Result<Arc<Vec<Partition>>> {
    check_enumeration_order(m)?;
    if sigma == 0 || sigma > m {
        return Err(Error::InvalidArgument(format!(
            "sigma must lie in 1..={m}, got {sigma}"
        )));
    }
    Ok(cached(m, sigma, 1))
}

/// Canonical partitions of `(1, ..., m)` into exactly `sigma` parts, each of
/// size at least two. Empty when no such partition exists.
pub fn enumerate_partitions_min2(m: usize, sigma: usize) -> Result<Arc<Vec<Partition>>> {
    check_enumeration_order(m)?;
    Ok(cached(m, sigma, 2))
}

/// Stirling number of the second kind from the alternating sum
/// `S(m, s) = 1/s! * sum_j (-1)^(s-j) C(s, j) j^m`.
pub fn stirling2(m: usize, sigma: usize) -> Result<u64> {
    const WHAT: &str = "Stirling number of the second kind";
    if sigma > m {
        return Ok(0);
    }
    if sigma == 0 {
        return Ok(u64::from(m == 0));
    }
    let overflow = || Error::CountOverflow(WHAT);
    let exp = u32::try_from(m).map_err(|_| overflow())?;
    let mut sum: i128 = 0;
    for j in 0..=sigma {
        let c = i128::from(binomial(sigma as u64, j as u64).ok_or_else(overflow)?);
        let term = (j as i128)
            .checked_pow(exp)
            .and_then(|p| p.checked_mul(c))
            .ok_or_else(overflow)?;
        sum = if (sigma - j).is_multiple_of(2) {
            sum.checked_add(term)
        } else {
            sum.checked_sub(term)
        }
        .ok_or_else(overflow)?;
    }
    let fact = (1..=sigma as i128)
        .try_fold(1i128, |acc, k| acc.checked_mul(k))
        .ok_or_else(overflow)?;
    debug_assert_eq!(sum % fact, 0);
    u64::try_from(sum / fact).map_err(|_| overflow())
}

/// Count of partitions of an `m`-set into `sigma` parts of size at least two,
/// from the nested multinomial sum: ordered compositions
/// `m_1 + ... + m_sigma = m` with every `m_r >= 2`, weighted by
/// `m! / (m_1! ... m_sigma!)`, divided by `sigma!`.
pub fn stirling2_min2_formula(m: usize, sigma: usize) -> Result<u64> {
    const WHAT: &str = "modified Stirling number";
    if sigma == 0 {
        return Ok(u64::from(m == 0));
    }
    if sigma == 1 {
        return Ok(u64::from(m >= 2));
    }
    if 2 * sigma > m {
        return Ok(0);
    }
    fn ordered(rem: usize, parts: usize) -> Option<u128> {
        if parts == 1 {
            return Some(u128::from(rem >= 2));
        }
        let mut total: u128 = 0;
        for k in 2..=rem.saturating_sub(2 * (parts - 1)) {
            let c = u128::from(binomial(rem as u64, k as u64)?);
            total = total.checked_add(c.checked_mul(ordered(rem - k, parts - 1)?)?)?;
        }
        Some(total)
    }
    let ordered_count = ordered(m, sigma).ok_or(Error::CountOverflow(WHAT))?;
    let fact = (1..=sigma as u128)
        .try_fold(1u128, |acc, k| acc.checked_mul(k))
        .ok_or(Error::CountOverflow(WHAT))?;
    u64::try_from(ordered_count / fact).map_err(|_| Error::CountOverflow(WHAT))
}

/// `S'(m, sigma)`: the enumeration count within the enumeration ceiling,
/// the closed form above it.
pub fn stirling2_min2(m: usize, sigma: usize) -> Result<u64> {
    if (1..=MAX_ENUMERATION_ORDER).contains(&m) {
        Ok(enumerate_partitions_min2(m, sigma)?.len() as u64)
    } else {
        stirling2_min2_formula(m, sigma)
    }
}

/// Bell number `B(m) = sum_sigma S(m, sigma)`.
pub fn bell(m: usize) -> Result<u64> {
    (0..=m).try_fold(0u64, |acc, s| {
        acc.checked_add(stirling2(m, s)?)
            .ok_or(Error::CountOverflow("Bell number"))
    })
}

/// `F(m)`: partitions of an `m`-set with no singleton part, via
/// `F(2) = F(3) = 1`, `F(m) = B(m - 1) - F(m - 1)`. `F(0) = 1`, `F(1) = 0`.
pub fn count_f(m: usize) -> Result<u64> {
    match m {
        0 => Ok(1),
        1 => Ok(0),
        2 | 3 => Ok(1),
        _ => {
            let mut f = 1u64;
            for k in 4..=m {
                f = bell(k - 1)?
                    .checked_sub(f)
                    .ok_or(Error::CountOverflow("F(m)"))?;
            }
            Ok(f)
        }
    }
}

fn check_count_order(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!(
            "multiplication counts are defined for m >= 2, got {m}"
        )));
    }
    Ok(())
}

/// `N(m) = sum_{sigma=2}^{floor(m/2)} (sigma - 1) S'(m, sigma)`: scalar
/// multiplications per element of the cumulant correction term.
pub fn mult_count_n(m: usize) -> Result<u64> {
    check_count_order(m)?;
    (2..=m / 2).try_fold(0u64, |acc, s| {
        let term = (s as u64 - 1)
            .checked_mul(stirling2_min2(m, s)?)
            .ok_or(Error::CountOverflow("N(m)"))?;
        acc.checked_add(term).ok_or(Error::CountOverflow("N(m)"))
    })
}

/// Upper bound `U(m) = (floor(m/2) - 1)(F(m) - 1)` on [`mult_count_n`].
pub fn mult_bound_u(m: usize) -> Result<u64> {
    check_count_order(m)?;
    (m as u64 / 2 - 1)
        .checked_mul(count_f(m)? - 1)
        .ok_or(Error::CountOverflow("U(m)"))
}

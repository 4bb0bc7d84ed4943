//! Naive dense reference implementations.
//!
//! Nothing here exploits symmetry: every one of the `n^m` elements is
//! computed. These routines exist to check the block algorithms and to serve
//! as benchmark baselines. They deliberately share no element arithmetic,
//! centring, or partition enumeration with the main path.

pub use crate::dense::{DenseTensor, DENSE_ELEMENT_LIMIT};

use crate::dense::dense_len;
use crate::error::{Error, Result};
use crate::indexing::advance;
use crate::moments::DataMatrix;

/// Highest order accepted by [`dense_cumulants_upto`].
pub const MAX_DENSE_ORDER: usize = 6;

/// Dense moment tensor, `(1/t) * sum_l prod_k x[l, i_k]` at every index.
///
/// For each leading prefix `(i_1, ..., i_{m-2})` a full `n x n` tile of the
/// last two modes is accumulated sample by sample, so each element is still
/// a single left-to-right sum over samples.
pub fn dense_moment(x: &DataMatrix, m: usize) -> Result<DenseTensor> {
    let n = x.n();
    let t = x.t();
    dense_len(n, m)?;
    let rows = x.to_row_major();
    let mut out = DenseTensor::zeros(n, m)?;
    if m == 1 {
        let mut acc = vec![0.0; n];
        for row in rows.chunks_exact(n) {
            for (a, &v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        for (d, a) in out.data_mut().iter_mut().zip(acc) {
            *d = a / t as f64;
        }
        return Ok(out);
    }
    let lead = m - 2;
    let lead_edges = vec![n; lead];
    let mut prefix = vec![0; lead];
    let mut acc = vec![0.0; n * n];
    let mut base = 0;
    loop {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for row in rows.chunks_exact(n) {
            let mut p = 0.0;
            for (k, &i) in prefix.iter().enumerate() {
                p = if k == 0 { row[i] } else { p * row[i] };
            }
            for (a, &va) in row.iter().enumerate() {
                let q = if lead == 0 { va } else { p * va };
                let tile = &mut acc[a * n..(a + 1) * n];
                for (s, &vc) in tile.iter_mut().zip(row) {
                    *s += q * vc;
                }
            }
        }
        for (d, &a) in out.data_mut()[base..base + n * n].iter_mut().zip(&acc) {
            *d = a / t as f64;
        }
        base += n * n;
        if !advance(&mut prefix, &lead_edges) {
            break;
        }
    }
    Ok(out)
}

fn centred_copy(x: &DataMatrix) -> Result<DataMatrix> {
    let (t, n) = (x.t(), x.n());
    let mut vals = x.to_row_major();
    for j in 0..n {
        let mut s = 0.0;
        for l in 0..t {
            s += vals[l * n + j];
        }
        let mean = s / t as f64;
        for l in 0..t {
            vals[l * n + j] -= mean;
        }
    }
    DataMatrix::from_row_major(t, n, &vals)
}

/// Fourth cumulant from the three-pairings formula
/// `c_ijkl = m_ijkl - c_ij c_kl - c_ik c_jl - c_il c_jk` on centred data.
pub fn dense_cumulant4_direct(x: &DataMatrix) -> Result<DenseTensor> {
    if x.t() < 2 {
        return Err(Error::InvalidData("fourth cumulant needs t >= 2".into()));
    }
    let n = x.n();
    dense_len(n, 4)?;
    let xc = centred_copy(x)?;
    let m4 = dense_moment(&xc, 4)?;
    let c2 = dense_moment(&xc, 2)?;
    let c = |a: usize, b: usize| c2.data()[a * n + b];
    let mut out = m4;
    let mut k = 0;
    for i1 in 0..n {
        for i2 in 0..n {
            for i3 in 0..n {
                for i4 in 0..n {
                    let v = out.data()[k]
                        - c(i1, i2) * c(i3, i4)
                        - c(i1, i3) * c(i2, i4)
                        - c(i1, i4) * c(i2, i3);
                    out.data_mut()[k] = v;
                    k += 1;
                }
            }
        }
    }
    Ok(out)
}

/// All set partitions of `0..m`, built by inserting each element into every
/// existing part or a new one.
fn all_set_partitions(m: usize) -> Vec<Vec<Vec<usize>>> {
    let mut acc: Vec<Vec<Vec<usize>>> = vec![vec![]];
    for e in 0..m {
        let mut next = Vec::new();
        for p in &acc {
            for k in 0..p.len() {
                let mut q = p.clone();
                q[k].push(e);
                next.push(q);
            }
            let mut q = p.clone();
            q.push(vec![e]);
            next.push(q);
        }
        acc = next;
    }
    acc
}

/// Cumulants of orders `1..=m_max` from raw moments via the full partition
/// expansion `c_i = sum_zeta (|zeta|-1)! (-1)^(|zeta|-1) prod_{k in zeta} m_{i_k}`.
pub fn dense_cumulants_upto(x: &DataMatrix, m_max: usize) -> Result<Vec<DenseTensor>> {
    if m_max == 0 || m_max > MAX_DENSE_ORDER {
        return Err(Error::ResourceGuard(format!(
            "dense cumulants support orders 1..={MAX_DENSE_ORDER}, got {m_max}"
        )));
    }
    let n = x.n();
    dense_len(n, m_max)?;
    let raw: Vec<DenseTensor> = (1..=m_max)
        .map(|m| dense_moment(x, m))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let partitions = all_set_partitions(m);
        let coef: Vec<f64> = partitions
            .iter()
            .map(|z| {
                let s = z.len();
                let fact: f64 = (1..s).map(|k| k as f64).product();
                if s % 2 == 1 {
                    fact
                } else {
                    -fact
                }
            })
            .collect();
        let mut sub = vec![0; m];
        let c = DenseTensor::from_fn(n, m, |idx| {
            let mut total = 0.0;
            for (z, &w) in partitions.iter().zip(&coef) {
                let mut prod = w;
                for part in z {
                    let sub = &mut sub[..part.len()];
                    for (s, &pos) in sub.iter_mut().zip(part) {
                        *s = idx[pos];
                    }
                    prod *= raw[part.len() - 1].get(sub);
                }
                total += prod;
            }
            total
        })?;
        out.push(c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(rows: &[&[f64]]) -> DataMatrix {
        DataMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn ones_give_ones() {
        let x = DataMatrix::from_row_major(4, 3, &[1.0; 12]).unwrap();
        for m in 1..=4 {
            assert!(dense_moment(&x, m)
                .unwrap()
                .data()
                .iter()
                .all(|&v| v == 1.0));
        }
    }

    #[test]
    fn small_moment_by_hand() {
        let x = data(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let m2 = dense_moment(&x, 2).unwrap();
        assert_eq!(m2.data(), &[5.0, 7.0, 7.0, 10.0]);
        let m3 = dense_moment(&x, 3).unwrap();
        // (1*1*2 + 3*3*4) / 2
        assert_eq!(m3.get(&[0, 0, 1]), 19.0);
    }

    #[test]
    fn partition_generator_counts_bell_numbers() {
        let bell = [1, 1, 2, 5, 15, 52, 203];
        for (m, &b) in bell.iter().enumerate() {
            assert_eq!(all_set_partitions(m).len(), b);
        }
    }

    #[test]
    fn two_point_fourth_cumulant() {
        let x = data(&[&[-1.0], &[1.0], &[-1.0], &[1.0]]);
        let c4 = dense_cumulant4_direct(&x).unwrap();
        assert_eq!(c4.data(), &[-2.0]);
        let all = dense_cumulants_upto(&x, 4).unwrap();
        assert!((all[3].data()[0] + 2.0).abs() < 1e-12);
        assert!(dense_cumulant4_direct(&data(&[&[1.0]])).is_err());
    }

    #[test]
    fn low_orders_are_mean_and_covariance() {
        let x = data(&[&[1.0, 0.0], &[2.0, 5.0], &[4.0, 1.0]]);
        let c = dense_cumulants_upto(&x, 2).unwrap();
        assert_eq!(c[0].data(), &[7.0 / 3.0, 2.0]);
        let mean = [7.0 / 3.0, 2.0];
        for a in 0..2 {
            for b in 0..2 {
                let cov: f64 = (0..3)
                    .map(|l| (x.get(l, a) - mean[a]) * (x.get(l, b) - mean[b]))
                    .sum::<f64>()
                    / 3.0;
                assert!((c[1].get(&[a, b]) - cov).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn guards() {
        let x = DataMatrix::from_row_major(2, 200, &[0.5; 400]).unwrap();
        assert!(matches!(dense_moment(&x, 4), Err(Error::ResourceGuard(_))));
        let y = DataMatrix::from_row_major(2, 2, &[0.5; 4]).unwrap();
        assert!(matches!(
            dense_cumulants_upto(&y, 7),
            Err(Error::ResourceGuard(_))
        ));
    }
}

//! Spread of moment estimators against the bound
//! `std(M_m) < sqrt(M_2m / t)`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::indexing::advance;
use crate::moments::{center, DataMatrix};
use crate::symtensor::BlockSymTensor;

use super::generate::{generate, GeneratorSpec};

/// Multiplier applied to the bound in statistical assertions.
pub const SAFETY_FACTOR: f64 = 5.0;

/// `sqrt(m2m / t)`.
pub fn std_bound(m2m: f64, t: usize) -> f64 {
    (m2m / t as f64).sqrt()
}

/// Per-element bound `sqrt(mean_l (prod_k x[l, i_k])^2 / t)` on centred data:
/// the estimated standard deviation of each order-`m` moment element.
pub fn std_bound_tensor(xc: &DataMatrix, m: usize, b: usize) -> Result<BlockSymTensor> {
    let t = xc.t();
    let mut idx = vec![0; m];
    let mut off = vec![0; m];
    BlockSymTensor::from_block_fn(xc.n(), m, b.min(xc.n()), |key, edges| {
        let b = b.min(xc.n());
        let mut out = Vec::with_capacity(edges.iter().product());
        off.iter_mut().for_each(|o| *o = 0);
        loop {
            for p in 0..m {
                idx[p] = key[p] * b + off[p];
            }
            let mut s = 0.0;
            for l in 0..t {
                let p: f64 = idx.iter().map(|&i| xc.get(l, i)).product();
                s += p * p;
            }
            out.push(std_bound(s / t as f64, t));
            if !advance(&mut off, edges) {
                break;
            }
        }
        out
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpreadSpec {
    /// Data generator; its seed seeds the per-replicate seeds.
    pub generator: GeneratorSpec,
    pub order: usize,
    /// Zero-based column whose moment is tracked.
    pub margin: usize,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpreadReport {
    pub replicates: usize,
    pub t: usize,
    pub order: usize,
    pub mean_moment: f64,
    /// Empirical standard deviation of the moment across replicates.
    pub std: f64,
    pub bound: f64,
    /// `std / bound`, zero when both vanish.
    pub ratio: f64,
    pub pass: bool,
}

/// Draws `replicates` datasets from the generator and compares the spread
/// of the centred `order`-th moment of one margin with the bound.
pub fn estimator_spread_test(spec: &SpreadSpec) -> Result<SpreadReport> {
    let mut seeds = ChaCha8Rng::seed_from_u64(spec.generator.seed);
    spread_test_with(spec.replicates, spec.order, spec.margin, |_| {
        generate(&GeneratorSpec {
            seed: seeds.next_u64(),
            ..spec.generator.clone()
        })
    })
}

/// Spread test over datasets produced by `draw(replicate)`.
pub fn spread_test_with(
    replicates: usize,
    order: usize,
    margin: usize,
    mut draw: impl FnMut(usize) -> Result<DataMatrix>,
) -> Result<SpreadReport> {
    if replicates < 2 || order == 0 {
        return Err(Error::InvalidArgument(format!(
            "spread test needs at least 2 replicates and order >= 1, got {replicates} and {order}"
        )));
    }
    let mut mm = Vec::with_capacity(replicates);
    let mut m2m = Vec::with_capacity(replicates);
    let mut t = 0;
    for r in 0..replicates {
        let x = draw(r)?;
        if margin >= x.n() {
            return Err(Error::InvalidArgument(format!(
                "margin {margin} out of range for {} columns",
                x.n()
            )));
        }
        t = x.t();
        let xc = center(&x);
        let col = xc.column(margin);
        let tf = t as f64;
        mm.push(col.iter().map(|v| v.powi(order as i32)).sum::<f64>() / tf);
        m2m.push(col.iter().map(|v| v.powi(2 * order as i32)).sum::<f64>() / tf);
    }
    let rf = replicates as f64;
    let mean = mm.iter().sum::<f64>() / rf;
    let var = mm.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (rf - 1.0);
    let std = var.sqrt();
    let bound = std_bound(m2m.iter().sum::<f64>() / rf, t);
    let ratio = if std == 0.0 { 0.0 } else { std / bound };
    Ok(SpreadReport {
        replicates,
        t,
        order,
        mean_moment: mean,
        std,
        bound,
        ratio,
        pass: std == 0.0 || std < bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli_io::generate::{Covariance, Distribution};

    #[test]
    fn bound_arithmetic() {
        assert!((std_bound(1.0, 100) - 0.1).abs() < 1e-15);
        assert!((std_bound(3.0, 10_000) - 0.017320508075688773).abs() < 1e-15);
    }

    #[test]
    fn unit_normal_variance_spread() {
        let spec = SpreadSpec {
            generator: GeneratorSpec {
                dist: Distribution::Gaussian(Covariance::Identity),
                n: 1,
                t: 10_000,
                seed: 11,
            },
            order: 2,
            margin: 0,
            replicates: 200,
        };
        let r = estimator_spread_test(&spec).unwrap();
        assert!(r.pass, "{r:?}");
        assert!((r.bound - (3.0f64 / 1e4).sqrt()).abs() < 0.1 * r.bound);
        // the exact spread is sqrt(2/t), so the ratio sits near sqrt(2/3)
        assert!(r.ratio > 0.6 && r.ratio < 1.0, "{r:?}");
    }

    #[test]
    fn constant_data_has_no_spread() {
        let r = spread_test_with(5, 3, 0, |_| DataMatrix::from_rows(&vec![vec![2.0]; 8])).unwrap();
        assert_eq!(r.std, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn bound_tensor_matches_direct_sum() {
        let x = DataMatrix::from_rows(&[vec![1.0, -2.0, 0.5], vec![-1.0, 2.0, -0.5]]).unwrap();
        let b = std_bound_tensor(&x, 2, 2).unwrap();
        // mean of (x0 x1)^2 is 4, so the bound is sqrt(4 / 2)
        assert!((b.value(&[1, 0]) - 2f64.sqrt()).abs() < 1e-15);
        assert!((b.value(&[2, 2]) - (0.0625f64 / 2.0).sqrt()).abs() < 1e-15);
    }
}

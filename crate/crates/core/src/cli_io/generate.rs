//! Seeded synthetic data.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::moments::DataMatrix;

/// Covariance of a Gaussian generator.
#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    Identity,
    /// `A A^T / n + I / 2` with standard normal `A`, drawn from the same
    /// stream before the samples.
    Random,
    /// Row-major `n x n` matrix.
    Supplied(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Gaussian(Covariance),
    /// Independent uniform on `[0, 1)`.
    Uniform,
    /// Independent exponential with rate 1.
    Exponential,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub dist: Distribution,
    pub n: usize,
    pub t: usize,
    pub seed: u64,
}

fn covariance_matrix(
    cov: &Covariance,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Option<DMatrix<f64>>> {
    match cov {
        Covariance::Identity => Ok(None),
        Covariance::Random => {
            let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let s = &a * a.transpose() / n as f64 + DMatrix::identity(n, n) * 0.5;
            Ok(Some(s))
        }
        Covariance::Supplied(v) => {
            if v.len() != n * n {
                return Err(Error::ShapeMismatch(format!(
                    "covariance has {} entries, expected {}",
                    v.len(),
                    n * n
                )));
            }
            let s = DMatrix::from_row_slice(n, n, v);
            let asym = (&s - s.transpose()).amax();
            if !asym.is_finite() || asym > 1e-12 * s.amax() {
                return Err(Error::NotPositiveDefinite);
            }
            Ok(Some(s))
        }
    }
}

/// Draws a `t x n` matrix. The same spec always yields the same matrix.
pub fn generate(spec: &GeneratorSpec) -> Result<DataMatrix> {
    let (n, t) = (spec.n, spec.t);
    if n == 0 || t == 0 {
        return Err(Error::InvalidArgument(format!(
            "generator needs n >= 1 and t >= 1, got n={n}, t={t}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut vals = Vec::with_capacity(n * t);
    match &spec.dist {
        Distribution::Uniform => vals.extend((0..n * t).map(|_| rng.random::<f64>())),
        Distribution::Exponential => vals.extend((0..n * t).map(|_| rng.sample::<f64, _>(Exp1))),
        Distribution::Gaussian(cov) => {
            let chol = match covariance_matrix(cov, n, &mut rng)? {
                None => None,
                Some(s) => Some(s.cholesky().ok_or(Error::NotPositiveDefinite)?.unpack()),
            };
            let mut z = vec![0.0; n];
            for _ in 0..t {
                z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
                match &chol {
                    None => vals.extend_from_slice(&z),
                    Some(l) => {
                        for i in 0..n {
                            vals.push((0..=i).map(|k| l[(i, k)] * z[k]).sum());
                        }
                    }
                }
            }
        }
    }
    DataMatrix::from_row_major(t, n, &vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{center, moment};

    fn spec(dist: Distribution, n: usize, t: usize, seed: u64) -> GeneratorSpec {
        GeneratorSpec { dist, n, t, seed }
    }

    #[test]
    fn reproducible() {
        for d in [
            Distribution::Uniform,
            Distribution::Exponential,
            Distribution::Gaussian(Covariance::Random),
        ] {
            let a = generate(&spec(d.clone(), 3, 50, 7)).unwrap();
            assert_eq!(a, generate(&spec(d.clone(), 3, 50, 7)).unwrap());
            assert_ne!(a, generate(&spec(d, 3, 50, 8)).unwrap());
        }
    }

    #[test]
    fn ranges() {
        let u = generate(&spec(Distribution::Uniform, 2, 1000, 1)).unwrap();
        assert!(u.to_row_major().iter().all(|&v| (0.0..1.0).contains(&v)));
        let e = generate(&spec(Distribution::Exponential, 2, 1000, 1)).unwrap();
        assert!(e.to_row_major().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn rejects_bad_covariance() {
        let not_pd = Covariance::Supplied(vec![1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            generate(&spec(Distribution::Gaussian(not_pd), 2, 10, 0)),
            Err(Error::NotPositiveDefinite)
        ));
        let asym = Covariance::Supplied(vec![2.0, 0.5, 0.0, 2.0]);
        assert!(generate(&spec(Distribution::Gaussian(asym), 2, 10, 0)).is_err());
        let short = Covariance::Supplied(vec![1.0]);
        assert!(generate(&spec(Distribution::Gaussian(short), 2, 10, 0)).is_err());
        assert!(generate(&spec(Distribution::Uniform, 0, 10, 0)).is_err());
    }

    #[test]
    fn supplied_covariance_is_reproduced() {
        let sigma = vec![2.0, 0.6, 0.6, 1.0];
        let t = 100_000;
        let x = generate(&spec(
            Distribution::Gaussian(Covariance::Supplied(sigma.clone())),
            2,
            t,
            3,
        ))
        .unwrap();
        let c = moment(&center(&x), 2, 2).unwrap();
        for (k, &s) in sigma.iter().enumerate() {
            let (i, j) = (k / 2, k % 2);
            // var of x_i x_j for a Gaussian is s_ii s_jj + s_ij^2
            let sd = ((sigma[i * 3] * sigma[j * 3] + s * s) / t as f64).sqrt();
            assert!((c.value(&[i, j]) - s).abs() < 5.0 * sd);
        }
    }
}

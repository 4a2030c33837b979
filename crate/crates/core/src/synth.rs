//! Random test problems `B = A X` with a common row support.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matmul, DenseMatrix};
use crate::sampling::{sample_support, SeededRng};
use crate::solvers::SupportSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticProblem {
    pub a: DenseMatrix,
    pub x_true: DenseMatrix,
    pub b: DenseMatrix,
    pub true_support: SupportSet,
    pub seed: u64,
}

impl SyntheticProblem {
    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn measurements(&self) -> usize {
        self.x_true.cols()
    }

    pub fn sparsity(&self) -> usize {
        self.true_support.len()
    }

    /// Assembles a problem from stored parts, recomputing `B = A X`.
    pub fn from_parts(
        a: DenseMatrix,
        x_true: DenseMatrix,
        true_support: SupportSet,
        seed: u64,
    ) -> Result<Self> {
        if true_support.universe() != a.cols() {
            return Err(Error::Dimension(format!(
                "support over {} columns for A with {}",
                true_support.universe(),
                a.cols()
            )));
        }
        let b = matmul(&a, &x_true)?;
        Ok(SyntheticProblem {
            a,
            x_true,
            b,
            true_support,
            seed,
        })
    }
}

/// Draws `A` (m x n) and the nonzero rows of `X` (n x L) i.i.d. N(0, 1) on a
/// uniformly chosen support of `k` rows shared by every column.
pub fn generate_problem(
    m: usize,
    n: usize,
    measurements: usize,
    k: usize,
    rng: &mut SeededRng,
) -> Result<SyntheticProblem> {
    if m == 0 || n == 0 || measurements == 0 {
        return Err(Error::Dimension(format!(
            "problem dimensions must be positive, got m={m} n={n} L={measurements}"
        )));
    }
    let seed = rng.seed();
    let data: Vec<f64> = (0..m * n).map(|_| rng.sample(StandardNormal)).collect();
    let a = DenseMatrix::new(m, n, data)?;

    let support = sample_support(n, k, rng)?;
    let mut x = DenseMatrix::zeros(n, measurements);
    for &row in support.indices() {
        for col in 0..measurements {
            x.set(row, col, nonzero_normal(rng));
        }
    }
    SyntheticProblem::from_parts(a, x, support, seed)
}

fn nonzero_normal(rng: &mut SeededRng) -> f64 {
    loop {
        let v: f64 = rng.sample(StandardNormal);
        if v != 0.0 {
            return v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_support_square() {
        let p = generate_problem(5, 5, 1, 5, &mut SeededRng::new(1)).unwrap();
        assert_eq!(p.true_support.indices(), &[0, 1, 2, 3, 4]);
        assert!(p.x_true.as_slice().iter().all(|&v| v != 0.0));
        assert_eq!(p.b, matmul(&p.a, &p.x_true).unwrap());
    }

    #[test]
    fn rejects_bad_dims() {
        let mut rng = SeededRng::new(2);
        assert!(matches!(
            generate_problem(5, 5, 1, 6, &mut rng),
            Err(Error::InvalidSparsity { .. })
        ));
        assert!(matches!(
            generate_problem(0, 5, 1, 1, &mut rng),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            generate_problem(5, 5, 0, 1, &mut rng),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn common_support_in_every_column() {
        for seed in 0..50 {
            let p = generate_problem(500, 100, 5, 10, &mut SeededRng::new(seed)).unwrap();
            assert_eq!(p.sparsity(), 10);
            for col in 0..5 {
                let pattern: Vec<usize> = (0..100).filter(|&r| p.x_true.get(r, col) != 0.0).collect();
                assert_eq!(pattern, p.true_support.indices());
            }
        }
    }

    #[test]
    fn reproducible() {
        let p = generate_problem(20, 30, 3, 4, &mut SeededRng::new(9)).unwrap();
        let q = generate_problem(20, 30, 3, 4, &mut SeededRng::new(9)).unwrap();
        assert_eq!(p, q);
        assert_eq!(p.seed, 9);
        let r = generate_problem(20, 30, 3, 4, &mut SeededRng::new(10)).unwrap();
        assert_ne!(p.a, r.a);
    }

    #[test]
    fn gaussian_moments() {
        let p = generate_problem(1000, 1000, 1, 1, &mut SeededRng::new(3)).unwrap();
        let d = p.a.as_slice();
        let count = d.len() as f64;
        let mean = d.iter().sum::<f64>() / count;
        let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count;
        assert!(mean.abs() < 5e-3, "mean {mean}");
        assert!((var - 1.0).abs() < 1e-2, "variance {var}");
    }
}

//! Seeded randomness and norm-proportional row selection.

use rand::{Rng, RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::linalg::{row_norms_sq, DenseMatrix};
use crate::solvers::SupportSet;

/// Reproducible 64-bit generator (xoshiro256++ seeded through SplitMix64).
///
/// The same seed always yields the same stream. Not `Clone` on purpose:
/// each trial owns its generator.
#[derive(Debug)]
pub struct SeededRng {
    seed: u64,
    inner: Xoshiro256PlusPlus,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng {
            seed,
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw from `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

/// SplitMix64 finalizer. Used to derive independent seeds from a base seed
/// and a small tuple of indices.
pub fn mix_seed(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Row distribution `P(i) = ||a_i||² / ||A||_F²` stored as a normalized
/// cumulative sum.
#[derive(Debug, Clone, PartialEq)]
pub struct RowSampler {
    cumulative: Vec<f64>,
}

impl RowSampler {
    pub fn num_rows(&self) -> usize {
        self.cumulative.len()
    }

    /// Nondecreasing, last entry exactly 1.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Selection probability of row `i`.
    pub fn probability(&self, i: usize) -> f64 {
        let prev = if i == 0 { 0.0 } else { self.cumulative[i - 1] };
        self.cumulative[i] - prev
    }

    /// Inverse CDF: the first row whose cumulative mass exceeds `u`.
    ///
    /// Runs of equal cumulative entries (zero-norm rows) resolve to the
    /// highest index of the run, so zero-mass rows are never returned.
    pub fn index_for(&self, u: f64) -> usize {
        let i = self.cumulative.partition_point(|&c| c <= u);
        i.min(self.cumulative.len() - 1)
    }
}

pub fn build_row_sampler(a: &DenseMatrix) -> Result<RowSampler> {
    let norms = row_norms_sq(a);
    let mut cumulative = Vec::with_capacity(norms.len());
    let mut acc = 0.0;
    for &v in norms.as_slice() {
        acc += v;
        cumulative.push(acc);
    }
    if acc <= 0.0 {
        return Err(Error::DegenerateDistribution);
    }
    for c in &mut cumulative {
        *c /= acc;
    }
    // acc/acc is exactly 1 already; pin it against any future change of
    // the normalization.
    *cumulative.last_mut().expect("at least one row") = 1.0;
    Ok(RowSampler { cumulative })
}

/// Draws one row index with probability proportional to its squared norm.
pub fn sample_row(sampler: &RowSampler, rng: &mut SeededRng) -> usize {
    sampler.index_for(rng.uniform())
}

/// `size` distinct indices drawn uniformly from `0..n`, sorted.
pub fn sample_support(n: usize, size: usize, rng: &mut SeededRng) -> Result<SupportSet> {
    if size == 0 || size > n {
        return Err(Error::InvalidSparsity { size, max: n });
    }
    let mut picked = rand::seq::index::sample(rng, n, size).into_vec();
    picked.sort_unstable();
    SupportSet::new(picked, n)
}

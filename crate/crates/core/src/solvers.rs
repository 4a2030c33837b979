//! Kaczmarz row-action solvers.
//!
//! Four variants share one driver:
//!
//! * [`Variant::Cyclic`] sweeps the rows in order, `i = k mod m`.
//! * [`Variant::Randomized`] draws row `i` with probability
//!   `||a_i||² / ||A||_F²`.
//! * [`Variant::Sparse`] (SRK) adds a shrinking support estimate: at global
//!   iteration `j` the `max(k̂, n - j + 1)` largest-magnitude coordinates of
//!   the current iterate keep weight 1, every other coordinate is damped to
//!   `1/√j`, and the projection is taken along the weighted row `w ⊙ a_i`.
//! * [`Variant::SparseMmv`] (SRK-MMV) does the same for `B = A X` with `L`
//!   columns. The support is ranked by row ℓ2 norm of `X`, and one sampled
//!   row and one weight vector are shared by every column so the columns
//!   are pushed towards a common support.
//!
//! Every variant starts from `X = 0` and runs exactly `sweeps * m`
//! iterations.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot_slices, frobenius_norm_sq, matmul, DenseMatrix, Vector};
use crate::sampling::{build_row_sampler, sample_row, SeededRng};

/// Sorted set of distinct column indices into `0..universe`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportSet {
    indices: Vec<usize>,
    universe: usize,
}

impl SupportSet {
    /// Sorts and validates `indices`. Rejects duplicates, out-of-range
    /// entries and the empty set.
    pub fn new(mut indices: Vec<usize>, universe: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.is_empty() || indices.len() > universe {
            return Err(Error::InvalidSparsity {
                size: indices.len(),
                max: universe,
            });
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Dimension("duplicate support index".into()));
        }
        if let Some(&bad) = indices.last().filter(|&&i| i >= universe) {
            return Err(Error::Dimension(format!(
                "support index {bad} outside 0..{universe}"
            )));
        }
        Ok(SupportSet { indices, universe })
    }

    pub fn full(universe: usize) -> Self {
        SupportSet {
            indices: (0..universe).collect(),
            universe,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }
}

/// Per-coordinate weights of SRK iteration `j`: 1 on the support estimate,
/// `1/√j` elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    weights: Vector,
    iteration: usize,
}

impl WeightVector {
    pub fn weights(&self) -> &Vector {
        &self.weights
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }
}

/// # Panics
/// If `j == 0` or the support does not index into `0..n`.
pub fn build_weight_vector(support: &SupportSet, n: usize, j: usize) -> WeightVector {
    assert!(j >= 1, "iterations are counted from 1");
    assert_eq!(support.universe(), n, "support built for a different size");
    let damp = 1.0 / (j as f64).sqrt();
    let mut w = vec![damp; n];
    for &i in support.indices() {
        w[i] = 1.0;
    }
    WeightVector {
        weights: Vector::new(w).expect("weights are finite"),
        iteration: j,
    }
}

/// Running support size `max(k̂, n - j + 1)` at global iteration `j ≥ 1`.
pub fn support_size(estimated_support: usize, n: usize, j: usize) -> usize {
    estimated_support.max((n + 1).saturating_sub(j))
}

/// Projection of `x` onto the hyperplane `⟨a, u⟩ = b`.
pub fn kaczmarz_step(x: &Vector, a: &Vector, b: f64) -> Result<Vector> {
    if x.len() != a.len() {
        return Err(Error::Dimension(format!(
            "iterate of length {} with row of length {}",
            x.len(),
            a.len()
        )));
    }
    let mut out = x.clone();
    project(out.as_mut_slice(), a.as_slice(), b)?;
    Ok(out)
}

/// Projection of `x` onto `⟨w ⊙ a, u⟩ = b`.
pub fn weighted_kaczmarz_step(x: &Vector, a: &Vector, b: f64, w: &WeightVector) -> Result<Vector> {
    if a.len() != w.weights.len() {
        return Err(Error::Dimension(format!(
            "row of length {} with {} weights",
            a.len(),
            w.weights.len()
        )));
    }
    let wa: Vec<f64> = a
        .as_slice()
        .iter()
        .zip(w.weights.as_slice())
        .map(|(a, w)| a * w)
        .collect();
    kaczmarz_step(x, &Vector::new(wa)?, b)
}

/// In-place `x += (b - ⟨a, x⟩) / ||a||² · a`.
#[inline]
fn project(x: &mut [f64], a: &[f64], b: f64) -> Result<()> {
    let norm_sq = dot_slices(a, a);
    if norm_sq == 0.0 {
        return Err(Error::ZeroRow);
    }
    let t = (b - dot_slices(a, x)) / norm_sq;
    for (xk, ak) in x.iter_mut().zip(a) {
        *xk += t * ak;
    }
    Ok(())
}

/// Same arithmetic as [`project`], for column `col` of a row-major
/// `n x cols` matrix.
#[inline]
fn project_column(x: &mut [f64], cols: usize, col: usize, a: &[f64], b: f64) -> Result<()> {
    let norm_sq = dot_slices(a, a);
    if norm_sq == 0.0 {
        return Err(Error::ZeroRow);
    }
    let along: f64 = a.iter().enumerate().map(|(k, ak)| ak * x[k * cols + col]).sum();
    let t = (b - along) / norm_sq;
    for (k, ak) in a.iter().enumerate() {
        x[k * cols + col] += t * ak;
    }
    Ok(())
}

/// Descending score, lower index first on ties.
fn rank(scores: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&p, &q| scores[q].total_cmp(&scores[p]).then(p.cmp(&q))
}

/// Moves the `size` best-ranked indices into `order[..size]`.
fn select_top(scores: &[f64], size: usize, order: &mut Vec<usize>) {
    order.clear();
    order.extend(0..scores.len());
    if size < scores.len() {
        order.select_nth_unstable_by(size, rank(scores));
    }
}

fn check_size(size: usize, n: usize) -> Result<()> {
    if size == 0 || size > n {
        Err(Error::InvalidSparsity { size, max: n })
    } else {
        Ok(())
    }
}

/// Indices of the `size` largest-magnitude entries of `x`; ties go to the
/// lower index. Entries are ranked by `x_k²`, which is what the MMV rule
/// reduces to for one column.
pub fn estimate_support_smv(x: &Vector, size: usize) -> Result<SupportSet> {
    check_size(size, x.len())?;
    let scores: Vec<f64> = x.as_slice().iter().map(|v| v * v).collect();
    let mut order = Vec::new();
    select_top(&scores, size, &mut order);
    order.truncate(size);
    SupportSet::new(order, x.len())
}

/// Indices of the `size` rows of `x` with the largest ℓ2 norm; ties go to
/// the lower index.
pub fn estimate_support_mmv(x: &DenseMatrix, size: usize) -> Result<SupportSet> {
    check_size(size, x.rows())?;
    let scores: Vec<f64> = (0..x.rows()).map(|k| dot_slices(x.row(k), x.row(k))).collect();
    let mut order = Vec::new();
    select_top(&scores, size, &mut order);
    order.truncate(size);
    SupportSet::new(order, x.rows())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Cyclic,
    Randomized,
    Sparse,
    SparseMmv,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Cyclic => "cyclic",
            Variant::Randomized => "rk",
            Variant::Sparse => "srk",
            Variant::SparseMmv => "srk-mmv",
        }
    }

    pub fn is_sparse(self) -> bool {
        matches!(self, Variant::Sparse | Variant::SparseMmv)
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cyclic" => Some(Variant::Cyclic),
            "rk" | "randomized" => Some(Variant::Randomized),
            "srk" | "sparse" => Some(Variant::Sparse),
            "srk-mmv" | "srk_mmv" | "sparse-mmv" => Some(Variant::SparseMmv),
            _ => None,
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub variant: Variant,
    /// Estimated support size k̂. Ignored by the non-sparse variants.
    pub estimated_support: usize,
    /// Number of sweeps J; the solver runs `J * m` iterations.
    pub sweeps: usize,
    pub seed: u64,
    /// Record the relative residual every this many iterations (0 = never).
    pub trace_every: usize,
}

impl SolverConfig {
    pub fn new(variant: Variant, estimated_support: usize, sweeps: usize, seed: u64) -> Self {
        SolverConfig {
            variant,
            estimated_support,
            sweeps,
            seed,
            trace_every: 0,
        }
    }

    pub fn with_trace(mut self, every: usize) -> Self {
        self.trace_every = every;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    /// `||B - A X||_F / ||B||_F`, or the absolute residual when `B = 0`.
    pub relative_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    /// Recovered `X`, `n x L`.
    pub solution: DenseMatrix,
    pub iterations_run: usize,
    /// Length-`n` inner products performed, for equal-work comparisons.
    pub dot_products: u64,
    pub trace: Vec<TracePoint>,
}

fn validate(a: &DenseMatrix, b: &DenseMatrix, cfg: &SolverConfig) -> Result<()> {
    if a.rows() != b.rows() {
        return Err(Error::Dimension(format!(
            "A has {} rows but B has {}",
            a.rows(),
            b.rows()
        )));
    }
    if cfg.sweeps == 0 {
        return Err(Error::SpecValidation("sweeps must be at least 1".into()));
    }
    if cfg.variant != Variant::SparseMmv && b.cols() != 1 {
        return Err(Error::UnsupportedVariant {
            variant: cfg.variant.name(),
            columns: b.cols(),
        });
    }
    if cfg.variant.is_sparse() {
        check_size(cfg.estimated_support, a.cols())?;
    }
    Ok(())
}

fn relative_residual(a: &DenseMatrix, b: &DenseMatrix, x: &DenseMatrix, b_norm: f64) -> f64 {
    let r = matmul(a, x)
        .and_then(|ax| b.sub(&ax))
        .map(|r| frobenius_norm_sq(&r).sqrt())
        .expect("dimensions checked before iterating");
    if b_norm > 0.0 {
        r / b_norm
    } else {
        r
    }
}

/// Runs the configured solver on `B = A X`.
pub fn solve(a: &DenseMatrix, b: &DenseMatrix, cfg: &SolverConfig) -> Result<SolveResult> {
    solve_observed(a, b, cfg, 0, |_, _| {})
}

/// Like [`solve`], additionally handing the iterate to `observer` after
/// every `every`-th iteration (`every == 0` disables it). The observer
/// never influences the iterates.
pub fn solve_observed<F>(
    a: &DenseMatrix,
    b: &DenseMatrix,
    cfg: &SolverConfig,
    every: usize,
    mut observer: F,
) -> Result<SolveResult>
where
    F: FnMut(usize, &DenseMatrix),
{
    validate(a, b, cfg)?;
    let (m, n) = a.shape();
    let cols = b.cols();
    let total = cfg.sweeps * m;

    let sampler = match cfg.variant {
        Variant::Cyclic => None,
        _ => Some(build_row_sampler(a)?),
    };
    let mut rng = SeededRng::new(cfg.seed);
    let b_norm = frobenius_norm_sq(b).sqrt();

    let mut x = DenseMatrix::zeros(n, cols);
    let mut dot_products = 0u64;
    let mut trace = Vec::new();

    let mut scores = vec![0.0; n];
    let mut order = Vec::with_capacity(n);
    let mut in_support = vec![true; n];
    let mut weighted_row = vec![0.0; n];

    for j in 1..=total {
        match cfg.variant {
            Variant::Cyclic => {
                let i = (j - 1) % m;
                let row = a.row(i);
                // A zero row holds no information; computing its norm is
                // the only work done.
                match project(x.data_mut(), row, b.get(i, 0)) {
                    Ok(()) => dot_products += 2,
                    Err(Error::ZeroRow) => dot_products += 1,
                    Err(e) => return Err(e),
                }
            }
            Variant::Randomized => {
                let i = sample_row(sampler.as_ref().expect("sampler"), &mut rng);
                project(x.data_mut(), a.row(i), b.get(i, 0))?;
                dot_products += 2;
            }
            Variant::Sparse | Variant::SparseMmv => {
                let size = support_size(cfg.estimated_support, n, j);
                let sampler = sampler.as_ref().expect("sampler");
                // SRK draws the row before estimating the support, SRK-MMV
                // after; the two steps are independent.
                let i = if cfg.variant == Variant::Sparse {
                    let i = sample_row(sampler, &mut rng);
                    mark_support(&x, size, &mut scores, &mut order, &mut in_support);
                    i
                } else {
                    mark_support(&x, size, &mut scores, &mut order, &mut in_support);
                    sample_row(sampler, &mut rng)
                };
                let damp = 1.0 / (j as f64).sqrt();
                for ((wa, &ak), &keep) in weighted_row.iter_mut().zip(a.row(i)).zip(&in_support) {
                    *wa = if keep { ak } else { ak * damp };
                }
                for col in 0..cols {
                    project_column(x.data_mut(), cols, col, &weighted_row, b.get(i, col))?;
                }
                dot_products += 2 * cols as u64;
            }
        }

        if cfg.trace_every > 0 && j % cfg.trace_every == 0 {
            trace.push(TracePoint {
                iteration: j,
                relative_residual: relative_residual(a, b, &x, b_norm),
            });
        }
        if every > 0 && j % every == 0 {
            observer(j, &x);
        }
    }

    Ok(SolveResult {
        solution: x,
        iterations_run: total,
        dot_products,
        trace,
    })
}

/// Flags the `size` rows of `x` with the largest ℓ2 norm in `in_support`.
fn mark_support(
    x: &DenseMatrix,
    size: usize,
    scores: &mut [f64],
    order: &mut Vec<usize>,
    in_support: &mut [bool],
) {
    let n = x.rows();
    if size >= n {
        in_support.fill(true);
        return;
    }
    for (k, s) in scores.iter_mut().enumerate() {
        *s = dot_slices(x.row(k), x.row(k));
    }
    select_top(scores, size, order);
    in_support.fill(false);
    for &k in &order[..size] {
        in_support[k] = true;
    }
}

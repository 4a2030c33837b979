//! Sparse-representation classification.
//!
//! Training samples are stacked as columns of a dictionary `V`, grouped by
//! class. A test sample (or a sequence of test frames) is expressed as a
//! sparse combination `V α` with SRK (or jointly with SRK-MMV), and the
//! class whose own block reproduces the test data with the smallest
//! residual wins.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius_norm_sq, matmul, DenseMatrix, Vector};
use crate::solvers::{solve, SolverConfig, Variant};

pub type ClassId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDictionary {
    v: DenseMatrix,
    class_ranges: Vec<(ClassId, Range<usize>)>,
}

impl ClassDictionary {
    /// Feature-by-sample matrix `V`.
    pub fn matrix(&self) -> &DenseMatrix {
        &self.v
    }

    pub fn class_ranges(&self) -> &[(ClassId, Range<usize>)] {
        &self.class_ranges
    }

    pub fn num_classes(&self) -> usize {
        self.class_ranges.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.v.rows()
    }

    pub fn class_ids(&self) -> Vec<ClassId> {
        self.class_ranges.iter().map(|(c, _)| *c).collect()
    }

    /// Largest number of training samples in one class.
    pub fn max_class_size(&self) -> usize {
        self.class_ranges.iter().map(|(_, r)| r.len()).max().unwrap_or(0)
    }

    /// SRK configuration with k̂ set to the size of a class block.
    pub fn default_config(&self, sweeps: usize, seed: u64) -> SolverConfig {
        SolverConfig::new(Variant::Sparse, self.max_class_size(), sweeps, seed)
    }
}

/// Stacks samples as columns, grouped contiguously by class in first-seen
/// class order. Samples keep their input order inside a class.
pub fn build_dictionary(samples: &[(ClassId, Vector)]) -> Result<ClassDictionary> {
    let Some((_, first)) = samples.first() else {
        return Err(Error::SpecValidation("no training samples".into()));
    };
    let dim = first.len();
    if let Some((_, bad)) = samples.iter().find(|(_, v)| v.len() != dim) {
        return Err(Error::Dimension(format!(
            "training sample of length {} among samples of length {dim}",
            bad.len()
        )));
    }

    let mut order: Vec<ClassId> = Vec::new();
    for (c, _) in samples {
        if !order.contains(c) {
            order.push(*c);
        }
    }
    let mut columns: Vec<&Vector> = Vec::with_capacity(samples.len());
    let mut class_ranges = Vec::with_capacity(order.len());
    for c in order {
        let start = columns.len();
        columns.extend(samples.iter().filter(|(id, _)| *id == c).map(|(_, v)| v));
        class_ranges.push((c, start..columns.len()));
    }
    Ok(ClassDictionary {
        v: DenseMatrix::from_columns(&columns)?,
        class_ranges,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationResult {
    /// One residual per class, in dictionary order.
    pub residuals: Vec<f64>,
    pub predicted: ClassId,
    /// Coefficients, total-samples x frames.
    pub alpha: DenseMatrix,
}

/// Residual `||Y - V_i α_i||_F` for every class block.
fn class_residuals(dict: &ClassDictionary, y: &DenseMatrix, alpha: &DenseMatrix) -> Result<Vec<f64>> {
    dict.class_ranges
        .iter()
        .map(|(_, range)| {
            let block = dict.v.column_block(range.clone())?;
            let coeffs = alpha.row_block(range.clone())?;
            let diff = y.sub(&matmul(&block, &coeffs)?)?;
            Ok(frobenius_norm_sq(&diff).sqrt())
        })
        .collect()
}

fn decide(dict: &ClassDictionary, y: &DenseMatrix, cfg: &SolverConfig) -> Result<ClassificationResult> {
    if y.rows() != dict.feature_dim() {
        return Err(Error::Dimension(format!(
            "test data of dimension {} for a dictionary of dimension {}",
            y.rows(),
            dict.feature_dim()
        )));
    }
    let alpha = solve(&dict.v, y, cfg)?.solution;
    let residuals = class_residuals(dict, y, &alpha)?;
    // Strict comparison keeps the first (lowest-index) class on ties.
    let mut best = 0;
    for (i, r) in residuals.iter().enumerate().skip(1) {
        if *r < residuals[best] {
            best = i;
        }
    }
    Ok(ClassificationResult {
        residuals,
        predicted: dict.class_ranges[best].0,
        alpha,
    })
}

/// Classifies one test vector using the solver in `cfg`.
pub fn classify_smv(dict: &ClassDictionary, v_test: &Vector, cfg: &SolverConfig) -> Result<ClassificationResult> {
    let y = DenseMatrix::from_columns(&[v_test])?;
    decide(dict, &y, cfg)
}

/// Classifies a sequence of test frames (columns of `v_test`) jointly with
/// SRK-MMV. The variant in `cfg` is overridden; every other knob is kept.
pub fn classify_mmv(dict: &ClassDictionary, v_test: &DenseMatrix, cfg: &SolverConfig) -> Result<ClassificationResult> {
    let cfg = SolverConfig {
        variant: Variant::SparseMmv,
        ..cfg.clone()
    };
    decide(dict, v_test, &cfg)
}

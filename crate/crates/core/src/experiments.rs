//! Monte Carlo harness for the synthetic recovery experiments.
//!
//! Three experiment kinds are supported:
//!
//! * **support sweep**: mean relative error as a function of the estimated
//!   support size k̂, for one or more true sparsities K;
//! * **convergence**: mean relative error after every sweep;
//! * **phase transition**: recovery rate as a function of K, for one or more
//!   numbers of measurement vectors L.
//!
//! Each trial draws a fresh problem and solves it with SRK-MMV. Trial seeds
//! depend only on the base seed, the grid point and the trial index, and
//! results are reduced in trial order, so a report is bit-identical however
//! many worker threads computed it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{relative_error, RecoveryOutcome, DEFAULT_SUCCESS_THRESHOLD};
use crate::sampling::{mix_seed, SeededRng};
use crate::solvers::{solve_observed, SolverConfig, Variant};
use crate::synth::generate_problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SupportSweep,
    Convergence,
    PhaseTransition,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SupportSweep => "support-sweep",
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::PhaseTransition => "phase-transition",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "support-sweep" => Some(ExperimentKind::SupportSweep),
            "convergence" => Some(ExperimentKind::Convergence),
            "phase-transition" => Some(ExperimentKind::PhaseTransition),
            _ => None,
        }
    }
}

/// How k̂ is chosen at each grid point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KhatRule {
    /// Fixed list of k̂ values, each one a grid coordinate.
    Absolute(Vec<usize>),
    /// `k̂ = K + offset`.
    Offset(usize),
    /// `k̂ = 2 K`.
    Twice,
}

impl KhatRule {
    fn values(&self, k: usize) -> Vec<usize> {
        match self {
            KhatRule::Absolute(list) => list.clone(),
            KhatRule::Offset(off) => vec![k + off],
            KhatRule::Twice => vec![2 * k],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    Paper,
    Desk,
}

/// Overdetermined (m > n) or underdetermined (m < n) phase-transition setup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Over,
    Under,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub m: usize,
    pub n: usize,
    /// Values of L. Support sweeps and convergence runs use exactly one.
    pub measurements: Vec<usize>,
    /// Values of K.
    pub sparsity: Vec<usize>,
    pub khat: KhatRule,
    pub sweeps: usize,
    pub trials: usize,
    pub threshold: f64,
    pub base_seed: u64,
}

fn odd_range(lo: usize, hi: usize) -> Vec<usize> {
    (lo..=hi).step_by(2).collect()
}

impl ExperimentSpec {
    /// Built-in configurations. `regime` only matters for phase transitions.
    pub fn preset(kind: ExperimentKind, scale: Scale, regime: Regime) -> Self {
        let paper = scale == Scale::Paper;
        match kind {
            ExperimentKind::SupportSweep => ExperimentSpec {
                kind,
                m: 500,
                n: 100,
                measurements: vec![5],
                sparsity: if paper { vec![10, 20, 30, 40] } else { vec![10] },
                khat: KhatRule::Absolute(odd_range(1, 99)),
                sweeps: 5,
                trials: if paper { 100 } else { 20 },
                threshold: DEFAULT_SUCCESS_THRESHOLD,
                base_seed: 0,
            },
            ExperimentKind::Convergence => ExperimentSpec {
                kind,
                m: 100,
                n: 400,
                measurements: vec![5],
                sparsity: vec![10],
                khat: KhatRule::Absolute(vec![20]),
                sweeps: 50,
                trials: if paper { 500 } else { 50 },
                threshold: DEFAULT_SUCCESS_THRESHOLD,
                base_seed: 0,
            },
            ExperimentKind::PhaseTransition => match regime {
                Regime::Over => ExperimentSpec {
                    kind,
                    m: 500,
                    n: 100,
                    measurements: if paper { vec![2, 5, 10, 15] } else { vec![5] },
                    sparsity: odd_range(5, 49),
                    khat: KhatRule::Offset(15),
                    sweeps: 5,
                    trials: if paper { 500 } else { 50 },
                    threshold: DEFAULT_SUCCESS_THRESHOLD,
                    base_seed: 0,
                },
                Regime::Under => ExperimentSpec {
                    kind,
                    m: 50,
                    n: 200,
                    measurements: if paper { vec![2, 5, 10] } else { vec![2] },
                    sparsity: odd_range(1, 25),
                    khat: KhatRule::Twice,
                    sweeps: 50,
                    trials: if paper { 500 } else { 50 },
                    threshold: DEFAULT_SUCCESS_THRESHOLD,
                    base_seed: 0,
                },
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::SpecValidation(msg));
        if self.m == 0 || self.n == 0 {
            return fail(format!("dimensions must be positive (m={}, n={})", self.m, self.n));
        }
        if self.sweeps == 0 {
            return fail("sweeps must be at least 1".into());
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return fail(format!("threshold must be positive, got {}", self.threshold));
        }
        if self.measurements.is_empty() || self.measurements.contains(&0) {
            return fail("measurement counts must be a nonempty list of positive values".into());
        }
        if self.sparsity.is_empty() {
            return fail("sparsity list is empty".into());
        }
        for &k in &self.sparsity {
            if k == 0 || k > self.n {
                return fail(format!("sparsity {k} outside [1, {}]", self.n));
            }
            let khats = self.khat.values(k);
            if khats.is_empty() {
                return fail("k̂ list is empty".into());
            }
            for khat in khats {
                if khat == 0 || khat > self.n {
                    return fail(format!("k̂ = {khat} (for K = {k}) outside [1, {}]", self.n));
                }
            }
        }
        match self.kind {
            ExperimentKind::SupportSweep => {
                if !matches!(self.khat, KhatRule::Absolute(_)) {
                    return fail("support sweep needs an explicit k̂ list".into());
                }
                if self.measurements.len() != 1 {
                    return fail("support sweep takes a single L".into());
                }
            }
            ExperimentKind::Convergence => {
                if self.measurements.len() != 1 || self.sparsity.len() != 1 {
                    return fail("convergence takes a single L and a single K".into());
                }
                if matches!(&self.khat, KhatRule::Absolute(v) if v.len() != 1) {
                    return fail("convergence takes a single k̂".into());
                }
            }
            ExperimentKind::PhaseTransition => {}
        }
        Ok(())
    }

    fn points(&self) -> Vec<PointKey> {
        let mut out = Vec::new();
        for &l in &self.measurements {
            for &k in &self.sparsity {
                for khat in self.khat.values(k) {
                    out.push(PointKey { measurements: l, sparsity: k, khat });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct PointKey {
    measurements: usize,
    sparsity: usize,
    khat: usize,
}

impl PointKey {
    /// Seed of trial `t` at this grid point.
    fn trial_seed(&self, base: u64, t: usize) -> u64 {
        let mut h = mix_seed(self.measurements as u64);
        h = mix_seed(h ^ self.sparsity as u64);
        h = mix_seed(h ^ self.khat as u64);
        h = mix_seed(h ^ t as u64);
        base.wrapping_add(h)
    }
}

/// One aggregated grid point of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub measurements: usize,
    pub sparsity: usize,
    pub khat: usize,
    /// Set for convergence reports only.
    pub sweep: Option<usize>,
    pub mean_rel_err: f64,
    pub recovery_rate_pct: f64,
    pub mean_dot_products: f64,
    pub trials: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<Vec<RecoveryOutcome>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub kind: ExperimentKind,
    pub spec: ExperimentSpec,
    pub points: Vec<GridPoint>,
}

impl MonteCarloReport {
    /// First point matching the given coordinates.
    pub fn find(&self, measurements: usize, sparsity: usize, khat: usize) -> Option<&GridPoint> {
        self.points
            .iter()
            .find(|p| p.measurements == measurements && p.sparsity == sparsity && p.khat == khat)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    /// Keep per-trial outcomes in the report.
    pub keep_outcomes: bool,
}

/// Outcomes of one trial, one per recorded checkpoint (the final iterate,
/// or every sweep for convergence runs).
type TrialTrace = Vec<RecoveryOutcome>;

fn run_trial(spec: &ExperimentSpec, key: PointKey, t: usize, per_sweep: bool) -> Result<TrialTrace> {
    let seed = key.trial_seed(spec.base_seed, t);
    let mut rng = SeededRng::new(seed);
    let problem = generate_problem(spec.m, spec.n, key.measurements, key.sparsity, &mut rng)?;
    let cfg = SolverConfig::new(Variant::SparseMmv, key.khat, spec.sweeps, mix_seed(seed));

    let every = if per_sweep { spec.m } else { 0 };
    let mut checkpoints = Vec::new();
    let mut err = None;
    let result = solve_observed(&problem.a, &problem.b, &cfg, every, |j, x| {
        match relative_error(&problem.x_true, x) {
            Ok(e) => {
                let dots = 2 * (key.measurements * j) as u64;
                checkpoints.push(RecoveryOutcome::new(e, spec.threshold, dots));
            }
            Err(e) => err = Some(e),
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    if !per_sweep {
        let e = relative_error(&problem.x_true, &result.solution)?;
        checkpoints.push(RecoveryOutcome::new(e, spec.threshold, result.dot_products));
    }
    Ok(checkpoints)
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::SpecValidation(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs every (point, trial) pair in parallel; returns traces grouped by
/// point, each in trial order.
fn run_grid(
    spec: &ExperimentSpec,
    points: &[PointKey],
    per_sweep: bool,
    opts: &RunOptions,
) -> Result<Vec<Vec<TrialTrace>>> {
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..spec.trials).map(move |t| (p, t)))
        .collect();
    let traces: Vec<TrialTrace> = with_pool(opts.threads, || {
        jobs.par_iter()
            .map(|&(p, t)| run_trial(spec, points[p], t, per_sweep))
            .collect::<Result<Vec<_>>>()
    })??;
    let mut grouped: Vec<Vec<TrialTrace>> = Vec::with_capacity(points.len());
    let mut it = traces.into_iter();
    for _ in points {
        grouped.push(it.by_ref().take(spec.trials).collect());
    }
    Ok(grouped)
}

fn aggregate(
    key: PointKey,
    sweep: Option<usize>,
    outcomes: Vec<RecoveryOutcome>,
    keep: bool,
) -> GridPoint {
    let count = outcomes.len() as f64;
    let mean_rel_err = outcomes.iter().map(|o| o.relative_error).sum::<f64>() / count;
    let hits = outcomes.iter().filter(|o| o.success).count();
    let mean_dot_products = outcomes.iter().map(|o| o.dot_products as f64).sum::<f64>() / count;
    GridPoint {
        measurements: key.measurements,
        sparsity: key.sparsity,
        khat: key.khat,
        sweep,
        mean_rel_err,
        recovery_rate_pct: 100.0 * hits as f64 / count,
        mean_dot_products,
        trials: outcomes.len(),
        outcomes: keep.then_some(outcomes),
    }
}

fn expect_kind(spec: &ExperimentSpec, kind: ExperimentKind) -> Result<()> {
    spec.validate()?;
    if spec.kind != kind {
        return Err(Error::SpecValidation(format!(
            "expected a {} spec, got {}",
            kind.name(),
            spec.kind.name()
        )));
    }
    Ok(())
}

fn run_final_error(spec: &ExperimentSpec, opts: &RunOptions) -> Result<MonteCarloReport> {
    let points = spec.points();
    let grouped = run_grid(spec, &points, false, opts)?;
    let points = points
        .iter()
        .zip(grouped)
        .map(|(&key, traces)| {
            let outcomes = traces.into_iter().map(|mut t| t.remove(0)).collect();
            aggregate(key, None, outcomes, opts.keep_outcomes)
        })
        .collect();
    Ok(MonteCarloReport {
        kind: spec.kind,
        spec: spec.clone(),
        points,
    })
}

/// Mean relative error for every (K, k̂) pair.
pub fn run_support_sweep(spec: &ExperimentSpec, opts: &RunOptions) -> Result<MonteCarloReport> {
    expect_kind(spec, ExperimentKind::SupportSweep)?;
    run_final_error(spec, opts)
}

/// Mean relative error after each sweep; one grid point per sweep.
pub fn run_convergence(spec: &ExperimentSpec, opts: &RunOptions) -> Result<MonteCarloReport> {
    expect_kind(spec, ExperimentKind::Convergence)?;
    let keys = spec.points();
    let key = keys[0];
    let traces = run_grid(spec, &keys, true, opts)?.remove(0);
    let points = (0..spec.sweeps)
        .map(|s| {
            let outcomes = traces.iter().map(|t| t[s]).collect();
            aggregate(key, Some(s + 1), outcomes, opts.keep_outcomes)
        })
        .collect();
    Ok(MonteCarloReport {
        kind: spec.kind,
        spec: spec.clone(),
        points,
    })
}

/// Recovery rate for every (L, K) pair.
pub fn run_phase_transition(spec: &ExperimentSpec, opts: &RunOptions) -> Result<MonteCarloReport> {
    expect_kind(spec, ExperimentKind::PhaseTransition)?;
    run_final_error(spec, opts)
}

/// Dispatches on `spec.kind`.
pub fn run_experiment(spec: &ExperimentSpec, opts: &RunOptions) -> Result<MonteCarloReport> {
    match spec.kind {
        ExperimentKind::SupportSweep => run_support_sweep(spec, opts),
        ExperimentKind::Convergence => run_convergence(spec, opts),
        ExperimentKind::PhaseTransition => run_phase_transition(spec, opts),
    }
}

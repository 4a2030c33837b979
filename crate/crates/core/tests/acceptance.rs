//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.
//!
//! Run with `cargo test -p srkmmv-core --test acceptance`.

mod common;

use std::time::Instant;

use srkmmv_core::classify::{classify_mmv, classify_smv};
use srkmmv_core::experiments::{
    run_convergence, run_phase_transition, run_support_sweep, ExperimentKind, ExperimentSpec,
    KhatRule, MonteCarloReport, RunOptions,
};
use srkmmv_core::linalg::{dot, frobenius_norm_sq, least_squares_oracle, row_norms_sq};
use srkmmv_core::metrics::relative_error;
use srkmmv_core::sampling::{build_row_sampler, sample_row, SeededRng};
use srkmmv_core::solvers::{
    build_weight_vector, kaczmarz_step, solve, solve_observed, support_size, weighted_kaczmarz_step,
    SolverConfig, SupportSet, Variant,
};
use srkmmv_core::synth::generate_problem;
use srkmmv_core::{DenseMatrix, Vector};

use common::ClassModel;

const THRESHOLD: f64 = 1e-3;
const BASE_SEED: u64 = 20_140_501;

struct Criterion {
    id: u32,
    name: &'static str,
    checks: Vec<(String, bool)>,
}

impl Criterion {
    fn new(id: u32, name: &'static str) -> Self {
        Criterion { id, name, checks: Vec::new() }
    }

    fn check(&mut self, what: impl Into<String>, ok: bool) {
        self.checks.push((what.into(), ok));
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|(_, ok)| *ok)
    }
}

fn opts() -> RunOptions {
    RunOptions::default()
}

fn point_err(r: &MonteCarloReport, khat: usize) -> f64 {
    r.points.iter().find(|p| p.khat == khat).unwrap().mean_rel_err
}

fn rate(r: &MonteCarloReport, k: usize) -> f64 {
    r.points.iter().find(|p| p.sparsity == k).unwrap().recovery_rate_pct
}

fn support_sweep() -> Criterion {
    let mut c = Criterion::new(1, "support-estimate sweep");
    let spec = ExperimentSpec {
        kind: ExperimentKind::SupportSweep,
        m: 500,
        n: 100,
        measurements: vec![5],
        sparsity: vec![10],
        khat: KhatRule::Absolute((1..=99).step_by(2).collect()),
        sweeps: 5,
        trials: 50,
        threshold: THRESHOLD,
        base_seed: BASE_SEED,
    };
    let r = run_support_sweep(&spec, &opts()).unwrap();
    let (e1, e21, e99) = (point_err(&r, 1), point_err(&r, 21), point_err(&r, 99));
    c.check(format!("err(k̂=21) = {e21:.3e} < 5e-4"), e21 < 5e-4);
    c.check(format!("err(k̂=1) / err(k̂=21) = {:.3e} >= 1000", e1 / e21), e1 >= 1000.0 * e21);
    c.check(format!("err(k̂=99) / err(k̂=21) = {:.3e} >= 100", e99 / e21), e99 >= 100.0 * e21);
    c
}

fn convergence() -> Criterion {
    let mut c = Criterion::new(2, "convergence over sweeps");
    let spec = ExperimentSpec {
        kind: ExperimentKind::Convergence,
        m: 100,
        n: 400,
        measurements: vec![5],
        sparsity: vec![10],
        khat: KhatRule::Absolute(vec![20]),
        sweeps: 50,
        trials: 50,
        threshold: THRESHOLD,
        base_seed: BASE_SEED,
    };
    let r = run_convergence(&spec, &opts()).unwrap();
    let err: Vec<f64> = r.points.iter().map(|p| p.mean_rel_err).collect();
    let (e25, e50) = (err[24], err[49]);
    c.check(format!("err(sweep 50) = {e50:.3e} < 5e-3"), e50 < 5e-3);
    c.check(format!("err(sweep 50) < err(sweep 25) = {e25:.3e}"), e50 < e25);
    let worst = (9..49)
        .map(|s| err[s + 1] / err[s])
        .fold(0.0f64, f64::max);
    c.check(
        format!("largest step ratio over sweeps 10..50 = {worst:.4} <= 1.10"),
        worst <= 1.10,
    );
    c
}

fn overdetermined_transition() -> Criterion {
    const INTERIOR_TOL_PCT: f64 = 5.0;
    let mut c = Criterion::new(3, "overdetermined phase transition");
    let spec = ExperimentSpec {
        kind: ExperimentKind::PhaseTransition,
        m: 500,
        n: 100,
        measurements: vec![5],
        sparsity: (5..=49).step_by(2).collect(),
        khat: KhatRule::Offset(15),
        sweeps: 5,
        trials: 100,
        threshold: THRESHOLD,
        base_seed: BASE_SEED,
    };
    let r = run_phase_transition(&spec, &opts()).unwrap();
    let low: Vec<f64> = (5..=15).step_by(2).map(|k| rate(&r, k)).collect();
    c.check(
        format!("rate = 100% for K <= 15: {low:?}"),
        low.iter().all(|&x| x == 100.0),
    );
    let r25 = rate(&r, 25);
    c.check(
        format!("rate(K=25) = {r25}% <= 10% (+{INTERIOR_TOL_PCT} pts)"),
        r25 <= 10.0 + INTERIOR_TOL_PCT,
    );
    let high: Vec<f64> = (31..=49).step_by(2).map(|k| rate(&r, k)).collect();
    c.check(
        format!("rate = 0% for K >= 31: {high:?}"),
        high.iter().all(|&x| x == 0.0),
    );
    c
}

fn underdetermined_transition() -> Criterion {
    let mut c = Criterion::new(4, "underdetermined phase transition");
    let spec = ExperimentSpec {
        kind: ExperimentKind::PhaseTransition,
        m: 50,
        n: 200,
        measurements: vec![2],
        sparsity: (1..=25).step_by(2).collect(),
        khat: KhatRule::Twice,
        sweeps: 50,
        trials: 100,
        threshold: THRESHOLD,
        base_seed: BASE_SEED,
    };
    let r = run_phase_transition(&spec, &opts()).unwrap();
    let (r1, r5, r9) = (rate(&r, 1), rate(&r, 5), rate(&r, 9));
    c.check(format!("rate(K=1) = {r1}% == 100%"), r1 == 100.0);
    c.check(format!("rate(K=5) = {r5}% in [80, 100]"), (80.0..=100.0).contains(&r5));
    c.check(format!("rate(K=9) = {r9}% <= 10%"), r9 <= 10.0);
    let high: Vec<f64> = (11..=25).step_by(2).map(|k| rate(&r, k)).collect();
    c.check(
        format!("rate = 0% for K >= 11: {high:?}"),
        high.iter().all(|&x| x == 0.0),
    );
    c
}

fn random_vector(len: usize, rng: &mut SeededRng) -> Vector {
    Vector::new((0..len).map(|_| 2.0 * rng.uniform() - 1.0).collect()).unwrap()
}

fn properties() -> Criterion {
    let mut c = Criterion::new(5, "property suite");
    let start = Instant::now();
    let mut rng = SeededRng::new(BASE_SEED);

    // Projection lands on the hyperplane; already-feasible points stay put.
    let mut worst_membership = 0.0f64;
    let mut fixed_ok = true;
    for _ in 0..1000 {
        let x = random_vector(30, &mut rng);
        let a = random_vector(30, &mut rng);
        let b = 10.0 * (rng.uniform() - 0.5);
        let y = kaczmarz_step(&x, &a, b).unwrap();
        let gap = (dot(&a, &y).unwrap() - b).abs() / (1.0 + b.abs());
        worst_membership = worst_membership.max(gap);
        let z = kaczmarz_step(&y, &a, dot(&a, &y).unwrap()).unwrap();
        fixed_ok &= y
            .as_slice()
            .iter()
            .zip(z.as_slice())
            .all(|(p, q)| (p - q).abs() <= 1e-12 * (1.0 + p.abs()));
    }
    c.check(
        format!("hyperplane membership max gap {worst_membership:.2e} < 1e-12"),
        worst_membership < 1e-12,
    );
    c.check("projection fixed point to 1e-12", fixed_ok);

    // At j = 1 every weight is 1, so the weighted step is the plain step.
    let mut reduces = true;
    for _ in 0..200 {
        let x = random_vector(12, &mut rng);
        let a = random_vector(12, &mut rng);
        let s = SupportSet::new(vec![(rng.uniform() * 12.0) as usize], 12).unwrap();
        let w = build_weight_vector(&s, 12, 1);
        reduces &= weighted_kaczmarz_step(&x, &a, 0.7, &w).unwrap() == kaczmarz_step(&x, &a, 0.7).unwrap();
    }
    c.check("weighted step == plain step at j = 1", reduces);

    // SRK-MMV with L = 1 follows the SRK trajectory exactly.
    let p = generate_problem(80, 40, 1, 5, &mut SeededRng::new(1)).unwrap();
    let trajectory = |variant| {
        let mut iterates = Vec::new();
        let cfg = SolverConfig::new(variant, 10, 3, 99);
        solve_observed(&p.a, &p.b, &cfg, 1, |_, x| iterates.push(x.clone())).unwrap();
        iterates
    };
    let srk = trajectory(Variant::Sparse);
    c.check(
        format!("SRK-MMV(L=1) trajectory == SRK trajectory over {} iterates", srk.len()),
        srk == trajectory(Variant::SparseMmv),
    );

    // Support schedule.
    let sizes: Vec<usize> = (1..=300).map(|j| support_size(17, 100, j)).collect();
    let nonincreasing = sizes.windows(2).all(|w| w[1] <= w[0]);
    let stabilizes = sizes[0] == 100 && sizes[100 - 17] == 17 && sizes[100 - 17 - 1] == 18 && sizes[299] == 17;
    c.check("support size max{k̂, n-j+1} nonincreasing, reaches k̂ at j = n-k̂+1", nonincreasing && stabilizes);

    // Exact dot-product accounting.
    let p = generate_problem(60, 30, 4, 3, &mut SeededRng::new(2)).unwrap();
    let r = solve(&p.a, &p.b, &SolverConfig::new(Variant::SparseMmv, 6, 7, 5)).unwrap();
    c.check(
        format!("dot_products {} == 2·L·J·m = {}", r.dot_products, 2 * 4 * 7 * 60),
        r.dot_products == 2 * 4 * 7 * 60 && r.iterations_run == 7 * 60,
    );

    // Row sampler frequencies.
    let mut g = SeededRng::new(3);
    let a = DenseMatrix::new(10, 4, (0..40).map(|_| 2.0 * g.uniform() - 1.0).collect()).unwrap();
    let sampler = build_row_sampler(&a).unwrap();
    let norms = row_norms_sq(&a);
    let total = frobenius_norm_sq(&a);
    let draws = 1_000_000usize;
    let mut counts = [0usize; 10];
    for _ in 0..draws {
        counts[sample_row(&sampler, &mut g)] += 1;
    }
    let worst_z = (0..10)
        .map(|i| {
            let p = norms[i] / total;
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            (counts[i] as f64 / draws as f64 - p).abs() / se
        })
        .fold(0.0f64, f64::max);
    c.check(
        format!("sampler frequencies within 3 standard errors (worst {worst_z:.2})"),
        worst_z < 3.0,
    );

    // Relative error trivial cases.
    let x = p.x_true.clone();
    let zero = DenseMatrix::zeros(x.rows(), x.cols());
    c.check(
        "relative_error(X, X) == 0 and relative_error(X, 0) == 1",
        relative_error(&x, &x).unwrap() == 0.0 && relative_error(&x, &zero).unwrap() == 1.0,
    );

    // Bit-identical reruns, single- and multi-threaded.
    let rerun = solve(&p.a, &p.b, &SolverConfig::new(Variant::SparseMmv, 6, 7, 5)).unwrap();
    let spec = ExperimentSpec {
        kind: ExperimentKind::PhaseTransition,
        m: 60,
        n: 30,
        measurements: vec![2, 3],
        sparsity: vec![2, 5, 8],
        khat: KhatRule::Twice,
        sweeps: 3,
        trials: 8,
        threshold: THRESHOLD,
        base_seed: 7,
    };
    let one = run_phase_transition(&spec, &RunOptions { threads: Some(1), keep_outcomes: true }).unwrap();
    let many = run_phase_transition(&spec, &RunOptions { threads: Some(4), keep_outcomes: true }).unwrap();
    c.check(
        "bit-identical reruns (solver and 1- vs 4-thread experiment)",
        rerun == r && one == many,
    );

    let elapsed = start.elapsed().as_secs_f64();
    c.check(format!("suite time {elapsed:.2}s < 10s"), elapsed < 10.0);
    c
}

fn oracle_equivalence() -> Criterion {
    let mut c = Criterion::new(6, "RK vs least-squares oracle");
    let mut agree = 0;
    let mut worst = 0.0f64;
    for t in 0..50u64 {
        let mut rng = SeededRng::new(BASE_SEED + t);
        let p = generate_problem(200, 20, 1, 20, &mut rng).unwrap();
        let oracle = least_squares_oracle(&p.a, &p.b.column(0)).unwrap();
        let oracle = DenseMatrix::from_columns(&[&oracle]).unwrap();
        let r = solve(&p.a, &p.b, &SolverConfig::new(Variant::Randomized, 1, 50, t)).unwrap();
        let e = relative_error(&oracle, &r.solution).unwrap();
        worst = worst.max(e);
        if e < 1e-3 {
            agree += 1;
        }
    }
    c.check(
        format!("{agree}/50 instances within 1e-3 (worst {worst:.2e}), need >= 95%"),
        agree as f64 >= 0.95 * 50.0,
    );
    c
}

fn classification() -> Criterion {
    const CLASSES: usize = 10;
    const PER_CLASS: usize = 8;
    const DIM: usize = 60;
    const FRAMES: usize = 10;
    const SEQUENCES: usize = 200;
    const NOISE: f64 = 0.5;
    const SWEEPS: usize = 20;

    let mut c = Criterion::new(7, "synthetic sparse classification");
    let mut rng = SeededRng::new(BASE_SEED);
    let model = ClassModel::new(CLASSES, DIM, NOISE, &mut rng);
    let dict = model.dictionary(PER_CLASS, &mut rng);

    let mut mmv_hits = 0;
    let mut vote_hits = 0;
    for s in 0..SEQUENCES {
        let truth = s % CLASSES;
        let seq = model.sequence(truth, FRAMES, &mut rng);
        let cfg = dict.default_config(SWEEPS, s as u64);
        if classify_mmv(&dict, &seq, &cfg).unwrap().predicted == truth {
            mmv_hits += 1;
        }
        let mut votes = [0usize; CLASSES];
        for f in 0..FRAMES {
            votes[classify_smv(&dict, &seq.column(f), &cfg).unwrap().predicted] += 1;
        }
        // Majority vote, ties to the lower class id.
        let winner = (0..CLASSES).fold(0, |best, k| if votes[k] > votes[best] { k } else { best });
        if winner == truth {
            vote_hits += 1;
        }
    }
    let mmv = 100.0 * mmv_hits as f64 / SEQUENCES as f64;
    let vote = 100.0 * vote_hits as f64 / SEQUENCES as f64;
    c.check(format!("MMV accuracy {mmv:.1}% >= 90%"), mmv >= 90.0);
    c.check(
        format!("MMV accuracy {mmv:.1}% >= SMV majority vote {vote:.1}% - 5"),
        mmv >= vote - 5.0,
    );
    c
}

fn main() {
    let runs: Vec<fn() -> Criterion> = vec![
        support_sweep,
        convergence,
        overdetermined_transition,
        underdetermined_transition,
        properties,
        oracle_equivalence,
        classification,
    ];
    let mut failed = 0;
    for run in runs {
        let start = Instant::now();
        let c = run();
        let status = if c.passed() { "PASS" } else { "FAIL" };
        println!(
            "[{status}] criterion {}: {} ({:.1}s)",
            c.id,
            c.name,
            start.elapsed().as_secs_f64()
        );
        for (what, ok) in &c.checks {
            println!("         {} {what}", if *ok { "ok  " } else { "FAIL" });
        }
        if !c.passed() {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}

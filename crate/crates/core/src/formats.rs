//! Plain-text formats shared with other implementations.
//!
//! * **Experiment specs**: one `key = value` per line, `#` starts a comment.
//!   Integer lists accept `a`, `a,b,c` and inclusive ranges `lo:hi[:step]`.
//!   `khat` is either such a list, `K+<offset>` or `2K`. A `preset` key
//!   (`paper` or `desk`, plus optional `regime = over|under`) starts from
//!   a built-in configuration that later keys override.
//! * **Problem fixtures**: header `m n L K seed`, then `A` row-major (m lines
//!   of n numbers), `X_true` (n lines of L numbers) and the support as one
//!   final line of K indices. Whitespace-delimited decimal text.
//! * **Reports**: CSV with a per-kind column set, or JSON.
//! * **Feature files**: one vector per line, `label f_1 ... f_d`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::experiments::{ExperimentKind, ExperimentSpec, KhatRule, MonteCarloReport, Regime, Scale};
use crate::linalg::{DenseMatrix, Vector};
use crate::solvers::SupportSet;
use crate::synth::SyntheticProblem;

/// Formats a float so that parsing it back gives the identical value.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn spec_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.trim()
        .parse()
        .map_err(|_| spec_err(line, format!("expected a nonnegative integer, got {tok:?}")))
}

/// Parses `a`, `a,b,c` and `lo:hi[:step]` (inclusive) into a list.
pub fn parse_usize_list(text: &str, line: usize) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [one] => out.push(parse_usize(one, line)?),
            [lo, hi] | [lo, hi, _] => {
                let lo = parse_usize(lo, line)?;
                let hi = parse_usize(hi, line)?;
                let step = match parts.get(2) {
                    Some(s) => parse_usize(s, line)?,
                    None => 1,
                };
                if step == 0 || lo > hi {
                    return Err(spec_err(line, format!("bad range {item:?}")));
                }
                out.extend((lo..=hi).step_by(step));
            }
            _ => return Err(spec_err(line, format!("bad list item {item:?}"))),
        }
    }
    if out.is_empty() {
        return Err(spec_err(line, "empty list"));
    }
    Ok(out)
}

fn parse_khat(text: &str, line: usize) -> Result<KhatRule> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let upper = compact.to_ascii_uppercase();
    if upper == "2K" || upper == "2*K" {
        return Ok(KhatRule::Twice);
    }
    if upper == "K" {
        return Ok(KhatRule::Offset(0));
    }
    if let Some(off) = upper.strip_prefix("K+") {
        return Ok(KhatRule::Offset(parse_usize(off, line)?));
    }
    Ok(KhatRule::Absolute(parse_usize_list(&compact, line)?))
}

fn render_list(values: &[usize]) -> String {
    values.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

/// Parses an experiment spec file. `kind` fills in the experiment kind
/// when the file does not name one.
pub fn parse_spec(text: &str, kind: Option<ExperimentKind>) -> Result<ExperimentSpec> {
    let mut entries: Vec<(usize, String, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| spec_err(line, format!("expected `key = value`, got {content:?}")))?;
        let key = key.trim().to_string();
        if entries.iter().any(|(_, k, _)| *k == key) {
            return Err(spec_err(line, format!("duplicate key {key:?}")));
        }
        entries.push((line, key, value.trim().to_string()));
    }
    let lookup = |name: &str| entries.iter().find(|(_, k, _)| k == name);

    let kind = match lookup("kind") {
        Some((line, _, v)) => {
            let parsed = ExperimentKind::parse(v)
                .ok_or_else(|| spec_err(*line, format!("unknown experiment kind {v:?}")))?;
            if let Some(expected) = kind.filter(|k| *k != parsed) {
                return Err(Error::SpecValidation(format!(
                    "spec describes a {} experiment, not {}",
                    parsed.name(),
                    expected.name()
                )));
            }
            parsed
        }
        None => kind.ok_or_else(|| Error::SpecValidation("missing `kind`".into()))?,
    };

    let regime = match lookup("regime") {
        Some((line, _, v)) => match v.as_str() {
            "over" | "overdetermined" => Regime::Over,
            "under" | "underdetermined" => Regime::Under,
            _ => return Err(spec_err(*line, format!("unknown regime {v:?}"))),
        },
        None => Regime::Over,
    };
    let spec = match lookup("preset") {
        Some((line, _, v)) => {
            let scale = match v.as_str() {
                "paper" => Scale::Paper,
                "desk" => Scale::Desk,
                _ => return Err(spec_err(*line, format!("unknown preset {v:?}"))),
            };
            Some(ExperimentSpec::preset(kind, scale, regime))
        }
        None => None,
    };

    let mut m = spec.as_ref().map(|s| s.m);
    let mut n = spec.as_ref().map(|s| s.n);
    let mut measurements = spec.as_ref().map(|s| s.measurements.clone());
    let mut sparsity = spec.as_ref().map(|s| s.sparsity.clone());
    let mut khat = spec.as_ref().map(|s| s.khat.clone());
    let mut sweeps = spec.as_ref().map(|s| s.sweeps);
    let mut trials = spec.as_ref().map(|s| s.trials);
    let mut threshold = spec.as_ref().map(|s| s.threshold);
    let mut base_seed = spec.as_ref().map(|s| s.base_seed);

    for (line, key, value) in &entries {
        let line = *line;
        match key.as_str() {
            "kind" | "preset" | "regime" => {}
            "m" => m = Some(parse_usize(value, line)?),
            "n" => n = Some(parse_usize(value, line)?),
            "L" | "measurements" => measurements = Some(parse_usize_list(value, line)?),
            "K" | "sparsity" => sparsity = Some(parse_usize_list(value, line)?),
            "khat" => khat = Some(parse_khat(value, line)?),
            "sweeps" | "J" => sweeps = Some(parse_usize(value, line)?),
            "trials" => trials = Some(parse_usize(value, line)?),
            "threshold" => {
                threshold = Some(
                    value
                        .parse()
                        .map_err(|_| spec_err(line, format!("bad threshold {value:?}")))?,
                )
            }
            "seed" => {
                base_seed = Some(
                    value
                        .parse()
                        .map_err(|_| spec_err(line, format!("bad seed {value:?}")))?,
                )
            }
            other => return Err(spec_err(line, format!("unknown key {other:?}"))),
        }
    }

    let missing = |name: &str| Error::SpecValidation(format!("missing `{name}`"));
    let built = ExperimentSpec {
        kind,
        m: m.ok_or_else(|| missing("m"))?,
        n: n.ok_or_else(|| missing("n"))?,
        measurements: measurements.ok_or_else(|| missing("L"))?,
        sparsity: sparsity.ok_or_else(|| missing("K"))?,
        khat: khat.ok_or_else(|| missing("khat"))?,
        sweeps: sweeps.ok_or_else(|| missing("sweeps"))?,
        trials: trials.ok_or_else(|| missing("trials"))?,
        threshold: threshold.unwrap_or(crate::metrics::DEFAULT_SUCCESS_THRESHOLD),
        base_seed: base_seed.unwrap_or(0),
    };
    built.validate()?;
    Ok(built)
}

/// Writes a spec in the format read by [`parse_spec`].
pub fn render_spec(spec: &ExperimentSpec) -> String {
    let khat = match &spec.khat {
        KhatRule::Absolute(v) => render_list(v),
        KhatRule::Offset(o) => format!("K+{o}"),
        KhatRule::Twice => "2K".to_string(),
    };
    format!(
        "kind = {}\nm = {}\nn = {}\nL = {}\nK = {}\nkhat = {}\nsweeps = {}\ntrials = {}\nthreshold = {}\nseed = {}\n",
        spec.kind.name(),
        spec.m,
        spec.n,
        render_list(&spec.measurements),
        render_list(&spec.sparsity),
        khat,
        spec.sweeps,
        spec.trials,
        fmt_f64(spec.threshold),
        spec.base_seed,
    )
}

fn push_row(out: &mut String, values: &[f64]) {
    let line: Vec<String> = values.iter().map(|&v| fmt_f64(v)).collect();
    out.push_str(&line.join(" "));
    out.push('\n');
}

pub fn write_problem(p: &SyntheticProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {} {} {}",
        p.m(),
        p.n(),
        p.measurements(),
        p.sparsity(),
        p.seed
    );
    for i in 0..p.a.rows() {
        push_row(&mut out, p.a.row(i));
    }
    for i in 0..p.x_true.rows() {
        push_row(&mut out, p.x_true.row(i));
    }
    out.push_str(&render_list(p.true_support.indices()).replace(',', " "));
    out.push('\n');
    out
}

fn parse_numbers(line: &str, lineno: usize, expected: usize) -> Result<Vec<f64>> {
    let vals: Vec<f64> = line
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| spec_err(lineno, format!("bad number {t:?}")))
        })
        .collect::<Result<_>>()?;
    if vals.len() != expected {
        return Err(spec_err(
            lineno,
            format!("expected {expected} values, found {}", vals.len()),
        ));
    }
    Ok(vals)
}

/// Reads a problem fixture; `B` is recomputed from `A` and `X_true`.
pub fn read_problem(text: &str) -> Result<SyntheticProblem> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| spec_err(0, format!("unexpected end of file while reading {what}")))
    };

    let (hl, header) = next("header")?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 5 {
        return Err(spec_err(hl, "header must be `m n L K seed`"));
    }
    let m = parse_usize(head[0], hl)?;
    let n = parse_usize(head[1], hl)?;
    let l = parse_usize(head[2], hl)?;
    let k = parse_usize(head[3], hl)?;
    let seed: u64 = head[4]
        .parse()
        .map_err(|_| spec_err(hl, format!("bad seed {:?}", head[4])))?;

    let mut a = Vec::with_capacity(m * n);
    for _ in 0..m {
        let (ln, line) = next("A")?;
        a.extend(parse_numbers(line, ln, n)?);
    }
    let mut x = Vec::with_capacity(n * l);
    for _ in 0..n {
        let (ln, line) = next("X_true")?;
        x.extend(parse_numbers(line, ln, l)?);
    }
    let (sl, support_line) = next("support")?;
    let support: Vec<usize> = support_line
        .split_whitespace()
        .map(|t| parse_usize(t, sl))
        .collect::<Result<_>>()?;
    if support.len() != k {
        return Err(spec_err(sl, format!("expected {k} support indices, found {}", support.len())));
    }
    if let Ok((ln, _)) = next("trailer") {
        return Err(spec_err(ln, "trailing content after support line"));
    }
    SyntheticProblem::from_parts(
        DenseMatrix::new(m, n, a)?,
        DenseMatrix::new(n, l, x)?,
        SupportSet::new(support, n)?,
        seed,
    )
}

/// CSV rendering of a report with the column set of its kind.
pub fn report_csv(report: &MonteCarloReport) -> String {
    let mut out = String::new();
    match report.kind {
        ExperimentKind::SupportSweep => {
            out.push_str("K,khat,mean_rel_err,trials\n");
            for p in &report.points {
                let _ = writeln!(out, "{},{},{},{}", p.sparsity, p.khat, fmt_f64(p.mean_rel_err), p.trials);
            }
        }
        ExperimentKind::Convergence => {
            out.push_str("sweep,mean_rel_err,trials\n");
            for p in &report.points {
                let _ = writeln!(
                    out,
                    "{},{},{}",
                    p.sweep.unwrap_or(0),
                    fmt_f64(p.mean_rel_err),
                    p.trials
                );
            }
        }
        ExperimentKind::PhaseTransition => {
            out.push_str("L,K,recovery_rate_pct,trials,mean_dot_products\n");
            for p in &report.points {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    p.measurements,
                    p.sparsity,
                    fmt_f64(p.recovery_rate_pct),
                    p.trials,
                    fmt_f64(p.mean_dot_products)
                );
            }
        }
    }
    out
}

pub fn report_json(report: &MonteCarloReport) -> String {
    serde_json::to_string_pretty(report).expect("reports contain only finite numbers")
}

/// Reads `label f_1 ... f_d` lines. Blank lines and `#` comments are
/// skipped; every vector must have the same length.
pub fn read_labeled_vectors(text: &str) -> Result<Vec<(usize, Vector)>> {
    let mut out: Vec<(usize, Vector)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut toks = content.split_whitespace();
        let label = parse_usize(toks.next().expect("nonempty line"), line)?;
        let values: Vec<f64> = toks
            .map(|t| t.parse().map_err(|_| spec_err(line, format!("bad number {t:?}"))))
            .collect::<Result<_>>()?;
        if values.is_empty() {
            return Err(spec_err(line, "label without features"));
        }
        if let Some((_, first)) = out.first() {
            if first.len() != values.len() {
                return Err(spec_err(
                    line,
                    format!("{} features, expected {}", values.len(), first.len()),
                ));
            }
        }
        let v = Vector::new(values).map_err(|e| spec_err(line, e.to_string()))?;
        out.push((label, v));
    }
    if out.is_empty() {
        return Err(spec_err(0, "no feature vectors"));
    }
    Ok(out)
}

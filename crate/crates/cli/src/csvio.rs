//! Benchmark CSV and its JSON-lines path sidecar.

use std::io::{BufRead, Read, Write};

use anyhow::{anyhow, bail, Context};
use dsop_core::{Algorithm, Estimator};

use crate::sweep::{BenchmarkRow, PathRecord};

pub const CSV_VERSION_LINE: &str = "# dsop benchmark csv v1";
pub const CSV_HEADER: [&str; 11] = [
    "instance_id",
    "method",
    "estimator",
    "H",
    "epsilon",
    "theta",
    "reward",
    "prob_matrix",
    "prob_sampling",
    "runtime_s",
    "seed",
];

/// Floats are written in their shortest round-trip form.
pub fn write_csv<W: Write>(mut out: W, rows: &[BenchmarkRow]) -> anyhow::Result<()> {
    writeln!(out, "{CSV_VERSION_LINE}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.instance_id.clone(),
            r.method.label().to_string(),
            r.estimator.to_string(),
            r.deadline.to_string(),
            r.epsilon.to_string(),
            r.theta.clone(),
            r.reward.to_string(),
            r.prob_matrix.to_string(),
            r.prob_sampling.to_string(),
            r.runtime_s.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_estimator(s: &str) -> Result<Estimator, String> {
    match s.to_ascii_lowercase().as_str() {
        "matrix" => Ok(Estimator::Matrix),
        "sampling" => Ok(Estimator::Sampling),
        _ => Err(format!("unknown estimator {s:?}, expected matrix or sampling")),
    }
}

pub fn read_csv<R: Read>(mut input: R) -> anyhow::Result<Vec<BenchmarkRow>> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let Some(body) = text.strip_prefix(CSV_VERSION_LINE) else {
        bail!("missing {CSV_VERSION_LINE:?} line");
    };
    let mut rd = csv::Reader::from_reader(body.trim_start_matches(['\r', '\n']).as_bytes());
    let header = rd.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        bail!("unexpected header {:?}", header.iter().collect::<Vec<_>>());
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = i + 3;
        let f = |k: usize| -> anyhow::Result<f64> {
            rec[k]
                .parse()
                .with_context(|| format!("line {line}: bad {} {:?}", CSV_HEADER[k], &rec[k]))
        };
        rows.push(BenchmarkRow {
            instance_id: rec[0].to_string(),
            method: rec[1].parse::<Algorithm>().map_err(|e| anyhow!("line {line}: {e}"))?,
            estimator: parse_estimator(&rec[2]).map_err(|e| anyhow!("line {line}: {e}"))?,
            deadline: f(3)?,
            epsilon: f(4)?,
            theta: rec[5].to_string(),
            reward: f(6)?,
            prob_matrix: f(7)?,
            prob_sampling: f(8)?,
            runtime_s: f(9)?,
            seed: rec[10].parse().with_context(|| format!("line {line}: bad seed"))?,
        });
    }
    Ok(rows)
}

/// Sidecar file name for a CSV path.
pub fn sidecar_path(csv: &std::path::Path) -> std::path::PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".paths.jsonl");
    name.into()
}

/// One JSON object per line, in row order.
pub fn write_paths<W: Write>(mut out: W, records: &[PathRecord]) -> anyhow::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_paths<R: BufRead>(input: R) -> anyhow::Result<Vec<PathRecord>> {
    input
        .lines()
        .enumerate()
        .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|(i, l)| Ok(serde_json::from_str(&l?).with_context(|| format!("sidecar line {}", i + 1))?))
        .collect()
}

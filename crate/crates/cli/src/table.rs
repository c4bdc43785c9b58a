//! Summary tables: mean reward by deadline and by risk level, probabilities
//! of the local-search solutions, and the improvement of LS over CH.

use std::collections::BTreeMap;
use std::fmt::Write;

use dsop_core::{Algorithm, Estimator};

use crate::sweep::{BenchmarkRow, Unsolved};

/// Relative LS-over-CH improvement of one cell, in percent.
#[derive(Debug, Clone, PartialEq)]
pub struct Improvement {
    pub instance_id: String,
    pub estimator: Estimator,
    pub deadline: f64,
    pub epsilon: f64,
    pub construction: f64,
    pub local_search: f64,
    pub percent: f64,
}

/// Pairs the CH and LS rows of every cell that has both.
pub fn improvements(rows: &[BenchmarkRow]) -> Vec<Improvement> {
    let key = |r: &BenchmarkRow| {
        (
            r.instance_id.clone(),
            r.estimator.to_string(),
            r.deadline.to_bits(),
            r.epsilon.to_bits(),
        )
    };
    let mut ch = BTreeMap::new();
    for r in rows.iter().filter(|r| r.method == Algorithm::Construction) {
        ch.insert(key(r), r.reward);
    }
    rows.iter()
        .filter(|r| r.method == Algorithm::LocalSearch)
        .filter_map(|r| {
            let c = *ch.get(&key(r))?;
            Some(Improvement {
                instance_id: r.instance_id.clone(),
                estimator: r.estimator,
                deadline: r.deadline,
                epsilon: r.epsilon,
                construction: c,
                local_search: r.reward,
                percent: if c > 0.0 { 100.0 * (r.reward - c) / c } else { 0.0 },
            })
        })
        .collect()
}

pub fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

fn distinct(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn cell(x: Option<f64>, prec: usize) -> String {
    x.map_or_else(|| "-".to_string(), |x| format!("{x:.prec$}"))
}

const COMBOS: [(Algorithm, Estimator); 4] = [
    (Algorithm::Construction, Estimator::Matrix),
    (Algorithm::LocalSearch, Estimator::Matrix),
    (Algorithm::Construction, Estimator::Sampling),
    (Algorithm::LocalSearch, Estimator::Sampling),
];

fn reward_table(
    out: &mut String,
    title: &str,
    label: &str,
    rows: &[BenchmarkRow],
    imps: &[Improvement],
    dim: fn(f64, f64) -> f64,
) {
    let _ = writeln!(out, "{title}");
    let _ = writeln!(
        out,
        "{label:>8} {:>10} {:>10} {:>8} {:>10} {:>10} {:>8}",
        "CH-M", "LS-M", "impr-M%", "CH-S", "LS-S", "impr-S%"
    );
    let keys = distinct(rows.iter().map(|r| dim(r.deadline, r.epsilon)));
    for k in keys.iter().copied().map(Some).chain([None]) {
        let in_group = |h: f64, e: f64| k.is_none_or(|k| dim(h, e) == k);
        let m = |a: Algorithm, e: Estimator| {
            mean(
                rows.iter()
                    .filter(|r| r.method == a && r.estimator == e && in_group(r.deadline, r.epsilon))
                    .map(|r| r.reward),
            )
        };
        let imp = |e: Estimator| {
            mean(
                imps.iter()
                    .filter(|i| i.estimator == e && in_group(i.deadline, i.epsilon))
                    .map(|i| i.percent),
            )
        };
        let name = k.map_or_else(|| "all".to_string(), |k| k.to_string());
        let [a, b, c, d] = COMBOS.map(|(a, e)| cell(m(a, e), 1));
        let _ = writeln!(
            out,
            "{name:>8} {a:>10} {b:>10} {:>8} {c:>10} {d:>10} {:>8}",
            cell(imp(Estimator::Matrix), 2),
            cell(imp(Estimator::Sampling), 2)
        );
    }
    let _ = writeln!(out);
}

/// Plain-text summary of a sweep.
pub fn summary(rows: &[BenchmarkRow], unsolved: &[Unsolved], timing: bool) -> String {
    let mut out = String::new();
    let imps = improvements(rows);
    reward_table(&mut out, "Mean reward by deadline H", "H", rows, &imps, |h, _| h);
    reward_table(
        &mut out,
        "Mean reward by risk level epsilon",
        "epsilon",
        rows,
        &imps,
        |_, e| e,
    );

    let _ = writeln!(out, "Mean completion probability of LS solutions by deadline H");
    let _ = writeln!(
        out,
        "{:>8} {:>10} {:>10} {:>10} {:>10}",
        "H", "M:P_M", "M:P_S", "S:P_M", "S:P_S"
    );
    for h in distinct(rows.iter().map(|r| r.deadline)) {
        let ls = |e: Estimator| {
            rows.iter()
                .filter(move |r| r.method == Algorithm::LocalSearch && r.estimator == e && r.deadline == h)
        };
        let _ = writeln!(
            out,
            "{:>8} {:>10} {:>10} {:>10} {:>10}",
            h,
            cell(mean(ls(Estimator::Matrix).map(|r| r.prob_matrix)), 4),
            cell(mean(ls(Estimator::Matrix).map(|r| r.prob_sampling)), 4),
            cell(mean(ls(Estimator::Sampling).map(|r| r.prob_matrix)), 4),
            cell(mean(ls(Estimator::Sampling).map(|r| r.prob_sampling)), 4),
        );
    }
    let _ = writeln!(out);

    if timing {
        let _ = writeln!(out, "Mean runtime (s)");
        for (a, e) in COMBOS {
            let t = mean(
                rows.iter()
                    .filter(|r| r.method == a && r.estimator == e)
                    .map(|r| r.runtime_s),
            );
            if let Some(t) = t {
                let _ = writeln!(out, "  {a}-{e}: {t:.3}");
            }
        }
        let _ = writeln!(out);
    }

    let _ = writeln!(out, "rows: {}, unsolved cells: {}", rows.len(), unsolved.len());
    for u in unsolved {
        let _ = writeln!(
            out,
            "  unsolved {} {} {} H={} epsilon={}: {}",
            u.instance_id, u.method, u.estimator, u.deadline, u.epsilon, u.reason
        );
    }
    out
}

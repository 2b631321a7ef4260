//! Success rates, common-subset powers and workload medians.

use std::collections::{BTreeMap, BTreeSet};

use crate::config::Method;
use crate::sweep::TrialRecord;
use crate::BenchError;

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub gamma_db: f64,
    pub sigma_e2: f64,
    pub n_trials: usize,
    pub success_pct: f64,
    /// Mean total power over the averaging set; NaN when it is empty.
    pub avg_power_common: f64,
    pub median_cycles: f64,
    pub median_bisections: f64,
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Bit-exact key for grouping by a float.
fn key(x: f64) -> u64 {
    x.to_bits()
}

/// Trials at each `σ_e²` on which every method succeeded at every `γ`.
pub fn common_trials(records: &[TrialRecord]) -> BTreeMap<u64, BTreeSet<usize>> {
    let mut all: BTreeMap<u64, BTreeSet<usize>> = BTreeMap::new();
    let mut failed: BTreeMap<u64, BTreeSet<usize>> = BTreeMap::new();
    for r in records {
        all.entry(key(r.sigma_e2)).or_default().insert(r.trial);
        if !r.success {
            failed.entry(key(r.sigma_e2)).or_default().insert(r.trial);
        }
    }
    all.into_iter()
        .map(|(s, trials)| {
            let bad = failed.remove(&s).unwrap_or_default();
            (s, trials.difference(&bad).copied().collect())
        })
        .collect()
}

/// One row per `(method, γ, σ_e²)`, ordered by `σ_e²`, `γ`, then method.
/// With `common_subset` the power average runs over [`common_trials`];
/// otherwise over the successful trials of each row.
pub fn aggregate(records: &[TrialRecord], common_subset: bool) -> Result<Vec<SummaryRow>, BenchError> {
    if records.is_empty() {
        return Err(BenchError::EmptyRecords);
    }
    let common = if common_subset {
        let c = common_trials(records);
        if let Some((s, _)) = c.iter().find(|(_, t)| t.is_empty()) {
            return Err(BenchError::EmptyIntersection { sigma_e2: f64::from_bits(*s) });
        }
        Some(c)
    } else {
        None
    };
    let mut groups: BTreeMap<(u64, u64, Method), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((ordered(r.sigma_e2), ordered(r.gamma_db), r.method)).or_default().push(r);
    }
    Ok(groups
        .into_values()
        .map(|rows| {
            let first = rows[0];
            let n = rows.len();
            let successes = rows.iter().filter(|r| r.success).count();
            let averaged: Vec<f64> = rows
                .iter()
                .filter(|r| match &common {
                    Some(c) => c[&key(r.sigma_e2)].contains(&r.trial),
                    None => r.success,
                })
                .map(|r| r.total_power)
                .collect();
            let avg = if averaged.is_empty() { f64::NAN } else { averaged.iter().sum::<f64>() / averaged.len() as f64 };
            SummaryRow {
                method: first.method,
                gamma_db: first.gamma_db,
                sigma_e2: first.sigma_e2,
                n_trials: n,
                success_pct: 100.0 * successes as f64 / n as f64,
                avg_power_common: avg,
                median_cycles: median(&mut rows.iter().map(|r| r.cycles as f64).collect::<Vec<_>>()),
                median_bisections: median(&mut rows.iter().map(|r| r.bisection_steps as f64).collect::<Vec<_>>()),
            }
        })
        .collect())
}

/// Order-preserving map of finite floats onto `u64`.
fn ordered(x: f64) -> u64 {
    let bits = x.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

//! Temporal splitting, per-issue ranking metrics and their aggregation.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::dataset::LabeledSample;
use crate::links::IssueKey;

pub const DEFAULT_KS: [usize; 3] = [1, 5, 10];

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub validation: Vec<LabeledSample>,
    pub test: Vec<LabeledSample>,
    /// Commit time of the last validation sample.
    pub boundary_time: Option<i64>,
}

/// Orders samples by (commit time, issue key) and puts the first
/// `ceil(ratio * n)` into validation.
pub fn temporal_split(mut samples: Vec<LabeledSample>, ratio: f64) -> Split {
    let ratio = ratio.clamp(0.0, 1.0);
    samples.sort_by(|a, b| {
        a.commit_time
            .cmp(&b.commit_time)
            .then_with(|| a.issue.cmp(&b.issue))
    });
    let cut = libm::ceil(ratio * samples.len() as f64) as usize;
    let test = samples.split_off(cut.min(samples.len()));
    Split {
        boundary_time: samples.last().map(|s| s.commit_time),
        validation: samples,
        test,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    EmptyPositives,
    PositivesNotRanked(Vec<String>),
    EmptyInput,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::EmptyPositives => f.write_str("sample has no positive files"),
            EvalError::PositivesNotRanked(paths) => {
                write!(f, "positives missing from ranking: {}", paths.join(", "))
            }
            EvalError::EmptyInput => f.write_str("no metric rows to aggregate"),
        }
    }
}

impl core::error::Error for EvalError {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtK {
    pub k: usize,
    pub true_positives: usize,
    pub hit: bool,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub issue: IssueKey,
    pub at: Vec<AtK>,
    pub r_precision: f64,
    pub reciprocal_rank: f64,
    pub first_positive_rank: usize,
    pub n_positives: usize,
    pub n_ranked: usize,
}

impl MetricsRow {
    pub fn at_k(&self, k: usize) -> Option<&AtK> {
        self.at.iter().find(|a| a.k == k)
    }
}

/// Metrics of one ranking against its positive set. `ranked` lists paths
/// best first.
pub fn metrics_for_issue<'a, I>(
    issue: IssueKey,
    ranked: I,
    positives: &BTreeSet<String>,
    ks: &[usize],
) -> Result<MetricsRow, EvalError>
where
    I: IntoIterator<Item = &'a str>,
{
    if positives.is_empty() {
        return Err(EvalError::EmptyPositives);
    }
    let ranked: Vec<&str> = ranked.into_iter().collect();
    let seen: BTreeSet<&str> = ranked.iter().copied().collect();
    let missing: Vec<String> = positives
        .iter()
        .filter(|p| !seen.contains(p.as_str()))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(EvalError::PositivesNotRanked(missing));
    }
    let is_pos: Vec<bool> = ranked.iter().map(|p| positives.contains(*p)).collect();
    let n = is_pos.len();
    let tp_at = |k: usize| is_pos.iter().take(k).filter(|&&p| p).count();
    let n_pos = positives.len();
    let at = ks
        .iter()
        .map(|&k| {
            let tp = tp_at(k);
            AtK {
                k,
                true_positives: tp,
                hit: tp > 0,
                precision: tp as f64 / k.min(n) as f64,
                recall: tp as f64 / n_pos as f64,
            }
        })
        .collect();
    let first = is_pos.iter().position(|&p| p).map_or(n, |i| i + 1);
    Ok(MetricsRow {
        issue,
        at,
        r_precision: tp_at(n_pos) as f64 / n_pos as f64,
        reciprocal_rank: 1.0 / first as f64,
        first_positive_rank: first,
        n_positives: n_pos,
        n_ranked: n,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanAtK {
    pub k: usize,
    pub hit: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub count: usize,
    pub at: Vec<MeanAtK>,
    pub r_precision: f64,
    pub mrr: f64,
}

impl AggregateReport {
    pub fn at_k(&self, k: usize) -> Option<&MeanAtK> {
        self.at.iter().find(|a| a.k == k)
    }
}

/// Mean of `values`, summed in sorted order so the result does not depend
/// on the order of the rows.
fn mean(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

/// Per-metric means. The k values are taken from the first row; rows
/// lacking one of them are skipped for that k.
pub fn aggregate(rows: &[MetricsRow]) -> Result<AggregateReport, EvalError> {
    let first = rows.first().ok_or(EvalError::EmptyInput)?;
    let mut ks: Vec<usize> = first.at.iter().map(|a| a.k).collect();
    ks.sort_unstable();
    ks.dedup();
    let at = ks
        .iter()
        .map(|&k| {
            let vals: Vec<&AtK> = rows.iter().filter_map(|r| r.at_k(k)).collect();
            MeanAtK {
                k,
                hit: mean(vals.iter().map(|a| if a.hit { 1.0 } else { 0.0 }).collect()),
                precision: mean(vals.iter().map(|a| a.precision).collect()),
                recall: mean(vals.iter().map(|a| a.recall).collect()),
            }
        })
        .collect();
    Ok(AggregateReport {
        count: rows.len(),
        at,
        r_precision: mean(rows.iter().map(|r| r.r_precision).collect()),
        mrr: mean(rows.iter().map(|r| r.reciprocal_rank).collect()),
    })
}

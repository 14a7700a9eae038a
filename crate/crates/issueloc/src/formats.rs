//! JSON Lines records for every pipeline artifact.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use issueloc_core::dataset::{Issue, LabeledSample, SnapshotRef};
use issueloc_core::eval::MetricsRow;
use issueloc_core::graph::CommitId;
use issueloc_core::links::{IssueKey, LinkRecord, Stage};
use issueloc_core::retrieval::Ranking;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Schema {
        path: String,
        line: usize,
        message: String,
    },
}

impl FormatError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        FormatError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Reads one record per non-blank line; `convert` may reject a
/// well-formed record, which is reported with its line number.
pub fn read_jsonl_with<T, U, F>(path: &Path, mut convert: F) -> Result<Vec<U>, FormatError>
where
    T: DeserializeOwned,
    F: FnMut(T) -> Result<U, String>,
{
    let file = File::open(path).map_err(|e| FormatError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| FormatError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |message: String| FormatError::Schema {
            path: path.display().to_string(),
            line: i + 1,
            message,
        };
        let record: T = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        out.push(convert(record).map_err(schema)?);
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, FormatError> {
    read_jsonl_with(path, Ok::<T, String>)
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), FormatError> {
    let file = File::create(path).map_err(|e| FormatError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| FormatError::io(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| FormatError::io(path, e))?;
    }
    w.flush().map_err(|e| FormatError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FormatError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| FormatError::io(path, e.into()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| FormatError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), FormatError> {
    std::fs::write(path, text).map_err(|e| FormatError::io(path, e))
}

fn parse_key(s: &str) -> Result<IssueKey, String> {
    s.parse().map_err(|e| format!("issue key {s:?}: {e}"))
}

fn parse_commit(s: &str) -> Result<CommitId, String> {
    CommitId::new(s).map_err(|e| e.to_string())
}

/// Issue creation time as epoch seconds or an ISO-8601 timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Timestamp {
    Seconds(i64),
    Text(String),
}

impl Timestamp {
    pub fn to_seconds(&self) -> Result<i64, String> {
        match self {
            Timestamp::Seconds(s) => Ok(*s),
            Timestamp::Text(t) => chrono::DateTime::parse_from_rfc3339(t)
                .or_else(|_| chrono::DateTime::parse_from_str(t, "%Y-%m-%dT%H:%M:%S%.f%z"))
                .map(|d| d.timestamp())
                .map_err(|e| format!("timestamp {t:?}: {e}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IssueRecord {
    pub key: String,
    #[serde(rename = "type")]
    pub issue_type: String,
    pub title: String,
    #[serde(default)]
    pub body: String,
    pub created: Timestamp,
}

impl IssueRecord {
    pub fn into_issue(self) -> Result<Issue, String> {
        Ok(Issue {
            key: parse_key(&self.key)?,
            raw_type: self.issue_type,
            title: self.title,
            body: self.body,
            created: self.created.to_seconds()?,
        })
    }
}

pub fn read_issues(path: &Path) -> Result<BTreeMap<IssueKey, Issue>, FormatError> {
    let issues = read_jsonl_with(path, IssueRecord::into_issue)?;
    Ok(issues.into_iter().map(|i| (i.key.clone(), i)).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkLine {
    pub issue: String,
    pub commits: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dropped_stage: Option<String>,
}

impl LinkLine {
    pub fn kept(link: &LinkRecord) -> Self {
        LinkLine {
            issue: link.issue.to_string(),
            commits: link.commits.iter().map(ToString::to_string).collect(),
            dropped_stage: None,
        }
    }

    pub fn dropped(link: &LinkRecord, stage: Stage) -> Self {
        LinkLine {
            dropped_stage: Some(stage.as_str().to_owned()),
            ..LinkLine::kept(link)
        }
    }

    pub fn to_link(&self) -> Result<LinkRecord, String> {
        Ok(LinkRecord {
            issue: parse_key(&self.issue)?,
            commits: self
                .commits
                .iter()
                .map(|c| parse_commit(c))
                .collect::<Result<_, _>>()?,
        })
    }
}

/// Surviving links only; lines carrying a `dropped_stage` are skipped.
pub fn read_links(path: &Path) -> Result<Vec<LinkRecord>, FormatError> {
    let lines: Vec<LinkLine> = read_jsonl(path)?;
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.dropped_stage.is_some() {
            continue;
        }
        out.push(line.to_link().map_err(|message| FormatError::Schema {
            path: path.display().to_string(),
            line: i + 1,
            message,
        })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub issue: String,
    pub issue_type: String,
    pub title: String,
    pub body: String,
    pub created: i64,
    pub diff_commit: String,
    pub snapshot_commit: String,
    pub positives: Vec<String>,
    pub snapshot_file_count: usize,
    pub commit_time: i64,
    #[serde(default)]
    pub flagged: bool,
}

impl From<&LabeledSample> for SampleRecord {
    fn from(s: &LabeledSample) -> Self {
        SampleRecord {
            issue: s.issue.to_string(),
            issue_type: s.issue_type.clone(),
            title: s.title.clone(),
            body: s.body.clone(),
            created: s.created,
            diff_commit: s.snapshot.diff_commit.to_string(),
            snapshot_commit: s.snapshot.commit.to_string(),
            positives: s.positives.iter().cloned().collect(),
            snapshot_file_count: s.snapshot_file_count,
            commit_time: s.commit_time,
            flagged: s.flagged,
        }
    }
}

impl SampleRecord {
    pub fn into_sample(self) -> Result<LabeledSample, String> {
        if self.positives.is_empty() {
            return Err("sample has no positives".to_owned());
        }
        Ok(LabeledSample {
            issue: parse_key(&self.issue)?,
            issue_type: self.issue_type,
            title: self.title,
            body: self.body,
            created: self.created,
            commit_time: self.commit_time,
            snapshot: SnapshotRef {
                commit: parse_commit(&self.snapshot_commit)?,
                diff_commit: parse_commit(&self.diff_commit)?,
            },
            positives: self.positives.into_iter().collect::<BTreeSet<_>>(),
            snapshot_file_count: self.snapshot_file_count,
            flagged: self.flagged,
        })
    }
}

pub fn write_dataset(path: &Path, samples: &[LabeledSample]) -> Result<(), FormatError> {
    let records: Vec<SampleRecord> = samples.iter().map(SampleRecord::from).collect();
    write_jsonl(path, &records)
}

pub fn read_dataset(path: &Path) -> Result<Vec<LabeledSample>, FormatError> {
    read_jsonl_with(path, SampleRecord::into_sample)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoredPath {
    pub path: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankingRecord {
    pub issue: String,
    pub model: String,
    pub ranking: Vec<ScoredPath>,
}

impl RankingRecord {
    /// `top = 0` keeps the whole ranking.
    pub fn new(issue: &IssueKey, model: &str, ranking: &Ranking, top: usize) -> Self {
        let take = if top == 0 { usize::MAX } else { top };
        RankingRecord {
            issue: issue.to_string(),
            model: model.to_owned(),
            ranking: ranking
                .entries()
                .iter()
                .take(take)
                .map(|e| ScoredPath {
                    path: e.path.clone(),
                    score: e.score,
                })
                .collect(),
        }
    }
}

/// Per-issue metric values keyed by column name (`precision@5`, `mrr`, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsRecord {
    pub issue: String,
    pub model: String,
    pub issue_type: String,
    pub first_positive_rank: usize,
    pub n_positives: usize,
    pub n_ranked: usize,
    pub metrics: BTreeMap<String, f64>,
}

/// Column name used for the reciprocal rank, whose mean is MRR.
pub const RR_COLUMN: &str = "mrr";
pub const RP_COLUMN: &str = "r_precision";

impl MetricsRecord {
    pub fn new(row: &MetricsRow, model: &str, issue_type: &str) -> Self {
        let mut metrics = BTreeMap::new();
        for a in &row.at {
            metrics.insert(format!("hit@{}", a.k), if a.hit { 1.0 } else { 0.0 });
            metrics.insert(format!("precision@{}", a.k), a.precision);
            metrics.insert(format!("recall@{}", a.k), a.recall);
        }
        metrics.insert(RP_COLUMN.to_owned(), row.r_precision);
        metrics.insert(RR_COLUMN.to_owned(), row.reciprocal_rank);
        MetricsRecord {
            issue: row.issue.to_string(),
            model: model.to_owned(),
            issue_type: issue_type.to_owned(),
            first_positive_rank: row.first_positive_rank,
            n_positives: row.n_positives,
            n_ranked: row.n_ranked,
            metrics,
        }
    }
}

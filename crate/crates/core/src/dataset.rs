//! A-priori snapshot resolution, positive/negative label extraction and
//! construction of the first-commit-only dataset.
//!
//! Repository access goes through [`RepoReader`] so the rules can be run
//! against git or against an in-memory model.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::graph::{unique_entry_point_at, AncestorSets, CommitGraph, CommitId};
use crate::links::{IssueKey, LinkRecord};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub key: IssueKey,
    pub raw_type: String,
    pub title: String,
    pub body: String,
    /// Creation time, seconds since the epoch (UTC).
    pub created: i64,
}

impl Issue {
    pub fn text(&self) -> String {
        crate::text::issue_text(&self.title, &self.body)
    }
}

/// The tree files are ranked against, and the commit whose diff supplies
/// the ground truth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotRef {
    pub commit: CommitId,
    pub diff_commit: CommitId,
}

pub const DEFAULT_EXTENSIONS: [&str; 16] = [
    "java", "py", "c", "h", "cpp", "hpp", "cs", "go", "js", "ts", "rb", "php", "rs", "ml", "scala",
    "kt",
];

/// Extension allow-list deciding which files count as source code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionFilter {
    allowed: BTreeSet<String>,
}

impl ExtensionFilter {
    /// Returns `None` for an empty list. Extensions are lowercased and a
    /// leading dot is ignored.
    pub fn new<I, S>(extensions: I) -> Option<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let allowed: BTreeSet<String> = extensions
            .into_iter()
            .map(|e| e.as_ref().trim_start_matches('.').to_lowercase())
            .filter(|e| !e.is_empty())
            .collect();
        (!allowed.is_empty()).then_some(ExtensionFilter { allowed })
    }

    pub fn allowed(&self) -> impl Iterator<Item = &str> {
        self.allowed.iter().map(String::as_str)
    }

    pub fn is_source(&self, path: &str) -> bool {
        let base = path.rsplit('/').next().unwrap_or(path);
        match base.rsplit_once('.') {
            Some((stem, ext)) if !stem.is_empty() => self.allowed.contains(&ext.to_lowercase()),
            _ => false,
        }
    }
}

impl Default for ExtensionFilter {
    fn default() -> Self {
        ExtensionFilter::new(DEFAULT_EXTENSIONS).expect("non-empty default")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DatasetVariant {
    #[default]
    FirstCommitOnly,
    AllFutureFiles,
    ExactCommits,
}

/// One entry of a tree diff, with git's rename detection applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FileChange {
    Added(String),
    Modified(String),
    Deleted(String),
    Renamed { from: String, to: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSample {
    pub issue: IssueKey,
    pub issue_type: String,
    pub title: String,
    pub body: String,
    pub created: i64,
    /// Author time of the diff commit; used for temporal ordering.
    pub commit_time: i64,
    pub snapshot: SnapshotRef,
    pub positives: BTreeSet<String>,
    pub snapshot_file_count: usize,
    /// Set when modified source files outside the snapshot were dropped
    /// (possible only for merge commits).
    pub flagged: bool,
}

impl LabeledSample {
    pub fn text(&self) -> String {
        crate::text::issue_text(&self.title, &self.body)
    }
}

/// Read access to commit trees and diffs.
pub trait RepoReader {
    type Error;

    /// Every file path in the tree of `commit`.
    fn list_files(&self, commit: &CommitId) -> Result<Vec<String>, Self::Error>;

    /// Changes from `parent` to `commit`; `parent = None` diffs against the
    /// empty tree.
    fn diff(
        &self,
        parent: Option<&CommitId>,
        commit: &CommitId,
    ) -> Result<Vec<FileChange>, Self::Error>;
}

/// The a-priori state for a linked commit: its parent for ordinary commits,
/// the fork point of the merged branch for merges. `None` for root commits
/// and merges without a unique entry point.
pub fn resolve_apriori(
    graph: &CommitGraph,
    ancestors: &AncestorSets,
    commit: &CommitId,
) -> Option<SnapshotRef> {
    let pos = graph.position(commit)?;
    let snapshot = match graph.parents_at(pos) {
        [] => return None,
        [parent] => *parent,
        [_, _] => unique_entry_point_at(graph, ancestors, pos).ok()??.1,
        _ => return None,
    };
    Some(SnapshotRef {
        commit: graph.record_at(snapshot).id.clone(),
        diff_commit: commit.clone(),
    })
}

/// The diff parent of a commit is its first parent.
pub fn diff_parent<'g>(graph: &'g CommitGraph, commit: &CommitId) -> Option<&'g CommitId> {
    graph.get(commit)?.parents.first()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Labels {
    pub positives: BTreeSet<String>,
    pub negatives: BTreeSet<String>,
    /// Modified or deleted source files that are not in the snapshot.
    pub outside_snapshot: BTreeSet<String>,
}

/// Applies the labelling rules to a diff: snapshot source files that were
/// modified or deleted are positive, all other snapshot source files are
/// negative. Added files are never positive; a renamed file counts as its
/// old path deleted and its new path added.
pub fn classify_changes(
    changes: &[FileChange],
    snapshot_files: &[String],
    filter: &ExtensionFilter,
) -> Labels {
    let touched = changes.iter().filter_map(|c| match c {
        FileChange::Modified(p) | FileChange::Deleted(p) => Some(p),
        FileChange::Renamed { from, .. } => Some(from),
        FileChange::Added(_) => None,
    });
    let sources: BTreeSet<&String> = snapshot_files
        .iter()
        .filter(|p| filter.is_source(p))
        .collect();
    let mut labels = Labels::default();
    for path in touched.filter(|p| filter.is_source(p)) {
        if sources.contains(path) {
            labels.positives.insert(path.clone());
        } else {
            labels.outside_snapshot.insert(path.clone());
        }
    }
    labels.negatives = sources
        .into_iter()
        .filter(|p| !labels.positives.contains(*p))
        .cloned()
        .collect();
    labels
}

/// Diffs `snapshot.diff_commit` against its first parent and labels the
/// snapshot's source files.
pub fn extract_labels<R: RepoReader>(
    repo: &R,
    graph: &CommitGraph,
    snapshot: &SnapshotRef,
    filter: &ExtensionFilter,
) -> Result<Labels, R::Error> {
    let parent = diff_parent(graph, &snapshot.diff_commit);
    let changes = repo.diff(parent, &snapshot.diff_commit)?;
    let files = repo.list_files(&snapshot.commit)?;
    Ok(classify_changes(&changes, &files, filter))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BuildError<E> {
    UnsupportedVariant(DatasetVariant),
    Repo(E),
}

impl<E: fmt::Display> fmt::Display for BuildError<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuildError::UnsupportedVariant(v) => {
                write!(
                    f,
                    "dataset variant {v:?} is not supported; only FirstCommitOnly is"
                )
            }
            BuildError::Repo(e) => write!(f, "repository error: {e}"),
        }
    }
}

impl<E: fmt::Debug + fmt::Display> core::error::Error for BuildError<E> {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiscardReason {
    UnknownIssue,
    NoCodeChanges,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetBuild {
    pub samples: Vec<LabeledSample>,
    pub discarded: Vec<(IssueKey, DiscardReason)>,
}

/// Builds one sample per issue from the first linked commit that has a
/// resolvable snapshot and at least one positive file.
pub fn build_sample<R: RepoReader>(
    repo: &R,
    graph: &CommitGraph,
    ancestors: &AncestorSets,
    link: &LinkRecord,
    issue: &Issue,
    filter: &ExtensionFilter,
) -> Result<Option<LabeledSample>, R::Error> {
    for commit in &link.commits {
        let Some(snapshot) = resolve_apriori(graph, ancestors, commit) else {
            continue;
        };
        let labels = extract_labels(repo, graph, &snapshot, filter)?;
        if labels.positives.is_empty() {
            continue;
        }
        let commit_time = graph.get(commit).map_or(0, |c| c.author_time);
        return Ok(Some(LabeledSample {
            issue: issue.key.clone(),
            issue_type: issue.raw_type.clone(),
            title: issue.title.clone(),
            body: issue.body.clone(),
            created: issue.created,
            commit_time,
            snapshot,
            snapshot_file_count: labels.positives.len() + labels.negatives.len(),
            flagged: !labels.outside_snapshot.is_empty(),
            positives: labels.positives,
        }));
    }
    Ok(None)
}

pub fn build_dataset<R: RepoReader>(
    repo: &R,
    graph: &CommitGraph,
    ancestors: &AncestorSets,
    links: &[LinkRecord],
    issues: &BTreeMap<IssueKey, Issue>,
    filter: &ExtensionFilter,
    variant: DatasetVariant,
) -> Result<DatasetBuild, BuildError<R::Error>> {
    if variant != DatasetVariant::FirstCommitOnly {
        return Err(BuildError::UnsupportedVariant(variant));
    }
    let mut out = DatasetBuild::default();
    for link in links {
        let Some(issue) = issues.get(&link.issue) else {
            out.discarded
                .push((link.issue.clone(), DiscardReason::UnknownIssue));
            continue;
        };
        match build_sample(repo, graph, ancestors, link, issue, filter).map_err(BuildError::Repo)? {
            Some(sample) => out.samples.push(sample),
            None => out
                .discarded
                .push((link.issue.clone(), DiscardReason::NoCodeChanges)),
        }
    }
    Ok(out)
}

/// Per-position share of changed files over issues with several commits.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommitSizeDistribution {
    /// `shares[i]` holds, for every issue with more than `i` commits, the
    /// fraction of its changed files contributed by its `i`-th commit.
    pub shares: Vec<Vec<f64>>,
}

impl CommitSizeDistribution {
    pub fn is_empty(&self) -> bool {
        self.shares.is_empty()
    }

    pub fn mean_at(&self, position: usize) -> Option<f64> {
        let xs = self.shares.get(position)?;
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Computes commit-size shares given the number of files changed by each
/// commit. Issues whose commits change no files are skipped.
pub fn commit_size_distribution<E>(
    links: &[LinkRecord],
    mut files_changed: impl FnMut(&CommitId) -> Result<usize, E>,
) -> Result<CommitSizeDistribution, E> {
    let mut dist = CommitSizeDistribution::default();
    for link in links.iter().filter(|l| l.commits.len() > 1) {
        let sizes = link
            .commits
            .iter()
            .map(&mut files_changed)
            .collect::<Result<Vec<_>, E>>()?;
        let total: usize = sizes.iter().sum();
        if total == 0 {
            continue;
        }
        for (pos, size) in sizes.into_iter().enumerate() {
            if dist.shares.len() <= pos {
                dist.shares.push(Vec::new());
            }
            dist.shares[pos].push(size as f64 / total as f64);
        }
    }
    Ok(dist)
}

/// In-memory repository model, mainly for tests and examples.
#[derive(Debug, Clone, Default)]
pub struct MemoryRepo {
    pub trees: BTreeMap<CommitId, Vec<String>>,
    pub diffs: BTreeMap<CommitId, Vec<FileChange>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingObject(pub CommitId);

impl fmt::Display for MissingObject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "missing object for commit {}", self.0)
    }
}

impl RepoReader for MemoryRepo {
    type Error = MissingObject;

    fn list_files(&self, commit: &CommitId) -> Result<Vec<String>, MissingObject> {
        self.trees
            .get(commit)
            .cloned()
            .ok_or_else(|| MissingObject(commit.clone()))
    }

    fn diff(
        &self,
        _parent: Option<&CommitId>,
        commit: &CommitId,
    ) -> Result<Vec<FileChange>, MissingObject> {
        self.diffs
            .get(commit)
            .cloned()
            .ok_or_else(|| MissingObject(commit.clone()))
    }
}

impl FileChange {
    pub fn path(&self) -> &str {
        match self {
            FileChange::Added(p) | FileChange::Modified(p) | FileChange::Deleted(p) => p,
            FileChange::Renamed { to, .. } => to,
        }
    }
}

impl fmt::Display for FileChange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FileChange::Added(p) => write!(f, "A {p}"),
            FileChange::Modified(p) => write!(f, "M {p}"),
            FileChange::Deleted(p) => write!(f, "D {p}"),
            FileChange::Renamed { from, to } => write!(f, "R {from} -> {to}"),
        }
    }
}

impl From<&str> for FileChange {
    /// Parses the `Display` form; anything unrecognised is a modification.
    fn from(s: &str) -> Self {
        let (kind, rest) = s.split_once(' ').unwrap_or(("M", s));
        match kind {
            "A" => FileChange::Added(rest.to_string()),
            "D" => FileChange::Deleted(rest.to_string()),
            "R" => match rest.split_once(" -> ") {
                Some((from, to)) => FileChange::Renamed {
                    from: from.to_string(),
                    to: to.to_string(),
                },
                None => FileChange::Modified(rest.to_string()),
            },
            _ => FileChange::Modified(rest.to_string()),
        }
    }
}

//! Issue-key mining from commit summaries and the refinement pipeline that
//! turns raw links into unambiguous ones.
//!
//! Stages run in a fixed order: path requirement, merge disambiguation,
//! unique-entry-point check, unknown-issue pruning. Every stage returns the
//! surviving records and the issues it dropped.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::graph::{
    merged_branch_at, path_requirement, unique_entry_point_at, AncestorSets, CommitGraph, CommitId,
};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IssueKey {
    prefix: String,
    number: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IssueKeyError {
    BadPrefix(String),
    BadNumber(String),
}

impl fmt::Display for IssueKeyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IssueKeyError::BadPrefix(s) => write!(f, "invalid issue key prefix in {s:?}"),
            IssueKeyError::BadNumber(s) => write!(f, "invalid issue number in {s:?}"),
        }
    }
}

impl core::error::Error for IssueKeyError {}

fn valid_prefix(prefix: &str) -> bool {
    let mut chars = prefix.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_uppercase())
        && chars.all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
}

impl IssueKey {
    pub fn new(prefix: impl Into<String>, number: u64) -> Result<Self, IssueKeyError> {
        let prefix = prefix.into();
        if !valid_prefix(&prefix) {
            return Err(IssueKeyError::BadPrefix(prefix));
        }
        if number == 0 {
            return Err(IssueKeyError::BadNumber(prefix));
        }
        Ok(IssueKey { prefix, number })
    }

    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    pub fn number(&self) -> u64 {
        self.number
    }
}

impl fmt::Display for IssueKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.prefix, self.number)
    }
}

impl FromStr for IssueKey {
    type Err = IssueKeyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (prefix, number) = s
            .rsplit_once('-')
            .ok_or_else(|| IssueKeyError::BadPrefix(s.to_string()))?;
        if number.is_empty() || !number.bytes().all(|b| b.is_ascii_digit()) {
            return Err(IssueKeyError::BadNumber(s.to_string()));
        }
        let number = number
            .parse()
            .map_err(|_| IssueKeyError::BadNumber(s.to_string()))?;
        IssueKey::new(prefix, number)
    }
}

/// One issue and the commits mentioning it, in topological order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkRecord {
    pub issue: IssueKey,
    pub commits: Vec<CommitId>,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Finds `\bPREFIX-\d+\b` occurrences in `text`, deduplicated, in order of
/// first appearance.
pub fn find_issue_keys(text: &str, prefix: &str) -> Vec<IssueKey> {
    let mut found: Vec<IssueKey> = Vec::new();
    if prefix.is_empty() {
        return found;
    }
    let mut from = 0;
    while let Some(off) = text[from..].find(prefix) {
        let start = from + off;
        from = start + prefix.len();
        if text[..start].chars().next_back().is_some_and(is_word_char) {
            continue;
        }
        let rest = &text[from..];
        let Some(digits) = rest.strip_prefix('-') else {
            continue;
        };
        let len = digits.bytes().take_while(u8::is_ascii_digit).count();
        if len == 0 || digits[len..].chars().next().is_some_and(is_word_char) {
            continue;
        }
        let Ok(number) = digits[..len].parse::<u64>() else {
            continue;
        };
        if let Ok(key) = IssueKey::new(prefix, number) {
            if !found.contains(&key) {
                found.push(key);
            }
        }
    }
    found
}

/// Scans the summary line of every commit for issue keys with the given
/// project prefix. Records are sorted by issue key; commits within a record
/// follow topological order.
pub fn mine_raw_links(graph: &CommitGraph, project_prefix: &str) -> Vec<LinkRecord> {
    let mut by_issue: BTreeMap<IssueKey, Vec<CommitId>> = BTreeMap::new();
    for commit in graph.commits() {
        let summary = commit.summary.lines().next().unwrap_or("");
        for key in find_issue_keys(summary, project_prefix) {
            by_issue.entry(key).or_default().push(commit.id.clone());
        }
    }
    by_issue
        .into_iter()
        .map(|(issue, commits)| LinkRecord { issue, commits })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    PathRequirement,
    MergeDisambiguation,
    EntryPoint,
    UnknownIssue,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::PathRequirement => "path_requirement",
            Stage::MergeDisambiguation => "merge_disambiguation",
            Stage::EntryPoint => "entry_point",
            Stage::UnknownIssue => "unknown_issue",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StageOutcome {
    pub kept: Vec<LinkRecord>,
    pub dropped: Vec<IssueKey>,
}

/// Drops every issue whose linked commits do not lie on a single
/// root-to-head path.
pub fn apply_path_requirement(
    links: Vec<LinkRecord>,
    graph: &CommitGraph,
    ancestors: &AncestorSets,
) -> StageOutcome {
    let mut out = StageOutcome::default();
    for link in links {
        if path_requirement(graph, ancestors, &link.commits).is_accept() {
            out.kept.push(link);
        } else {
            out.dropped.push(link.issue);
        }
    }
    out
}

/// Resolves merge commits whose merged branch also carries links: the
/// merge's own links are discarded, and issues that only the merge
/// mentioned (none of the branch commits do) are dropped. Merges over
/// unlinked branches keep their links.
pub fn disambiguate_merges(
    links: Vec<LinkRecord>,
    graph: &CommitGraph,
    ancestors: &AncestorSets,
) -> StageOutcome {
    let mut linked_by: BTreeMap<usize, BTreeSet<&IssueKey>> = BTreeMap::new();
    for link in &links {
        for c in &link.commits {
            if let Some(pos) = graph.position(c) {
                linked_by.entry(pos).or_default().insert(&link.issue);
            }
        }
    }

    let mut discarded_merges: BTreeSet<usize> = BTreeSet::new();
    let mut orphaned: BTreeSet<IssueKey> = BTreeSet::new();
    for (&pos, merge_issues) in &linked_by {
        if !graph.is_merge_at(pos) {
            continue;
        }
        let branch = merged_branch_at(graph, ancestors, pos).expect("checked merge");
        let mut branch_issues: BTreeSet<&IssueKey> = BTreeSet::new();
        let mut branch_linked = false;
        for c in branch.into_iter().filter(|&c| c != pos) {
            if let Some(issues) = linked_by.get(&c) {
                branch_linked = true;
                branch_issues.extend(issues.iter().copied());
            }
        }
        if branch_linked {
            discarded_merges.insert(pos);
            orphaned.extend(
                merge_issues
                    .iter()
                    .filter(|i| !branch_issues.contains(*i))
                    .map(|i| (*i).clone()),
            );
        }
    }

    let mut out = StageOutcome::default();
    for mut link in links {
        if orphaned.contains(&link.issue) {
            out.dropped.push(link.issue);
            continue;
        }
        link.commits.retain(|c| {
            graph
                .position(c)
                .is_none_or(|pos| !discarded_merges.contains(&pos))
        });
        if link.commits.is_empty() {
            out.dropped.push(link.issue);
        } else {
            out.kept.push(link);
        }
    }
    out
}

/// Drops issues linked to a merge commit whose branch has no unique entry
/// point, since no a-priori state can be determined for them.
pub fn apply_entry_point_requirement(
    links: Vec<LinkRecord>,
    graph: &CommitGraph,
    ancestors: &AncestorSets,
) -> StageOutcome {
    let mut out = StageOutcome::default();
    for link in links {
        let ok = link.commits.iter().all(|c| match graph.position(c) {
            Some(pos) if graph.is_merge_at(pos) => unique_entry_point_at(graph, ancestors, pos)
                .expect("checked merge")
                .is_some(),
            _ => true,
        });
        if ok {
            out.kept.push(link);
        } else {
            out.dropped.push(link.issue);
        }
    }
    out
}

pub fn prune_unknown(links: Vec<LinkRecord>, known: &BTreeSet<IssueKey>) -> StageOutcome {
    let mut out = StageOutcome::default();
    for link in links {
        if known.contains(&link.issue) {
            out.kept.push(link);
        } else {
            out.dropped.push(link.issue);
        }
    }
    out
}

/// Link mining counts, one column per refinement outcome.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MiningReport {
    /// Distinct mined keys that are absent from the issue corpus.
    pub unknown_issues: usize,
    /// Distinct mined keys that are present in the issue corpus.
    pub max_linkable: usize,
    /// Known issues that survive every refinement stage.
    pub linked: usize,
    pub discarded_path: usize,
    pub discarded_merge: usize,
    pub discarded_entry: usize,
}

/// Computes the report columns from raw links, refined links and the set of
/// known issue keys, pruning unknown keys from `refined`.
pub fn mining_report(
    raw: &[LinkRecord],
    refined: Vec<LinkRecord>,
    known: &BTreeSet<IssueKey>,
) -> (MiningReport, Vec<LinkRecord>) {
    let mentioned: BTreeSet<&IssueKey> = raw.iter().map(|l| &l.issue).collect();
    let unknown_issues = mentioned.iter().filter(|k| !known.contains(**k)).count();
    let pruned = prune_unknown(refined, known);
    let report = MiningReport {
        unknown_issues,
        max_linkable: mentioned.len() - unknown_issues,
        linked: pruned.kept.len(),
        ..MiningReport::default()
    };
    (report, pruned.kept)
}

/// Result of the full refinement pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Refinement {
    pub links: Vec<LinkRecord>,
    pub dropped: Vec<(IssueKey, Stage)>,
    pub report: MiningReport,
}

/// Runs every refinement stage on raw links in the fixed order. The
/// per-stage discard counts only include issues known to the corpus.
pub fn refine_links(
    raw: &[LinkRecord],
    graph: &CommitGraph,
    ancestors: &AncestorSets,
    known: &BTreeSet<IssueKey>,
) -> Refinement {
    let mut dropped = Vec::new();
    let path = apply_path_requirement(raw.to_vec(), graph, ancestors);
    dropped.extend(
        path.dropped
            .into_iter()
            .map(|k| (k, Stage::PathRequirement)),
    );
    let merge = disambiguate_merges(path.kept, graph, ancestors);
    dropped.extend(
        merge
            .dropped
            .into_iter()
            .map(|k| (k, Stage::MergeDisambiguation)),
    );
    let entry = apply_entry_point_requirement(merge.kept, graph, ancestors);
    dropped.extend(entry.dropped.into_iter().map(|k| (k, Stage::EntryPoint)));

    dropped.extend(
        entry
            .kept
            .iter()
            .filter(|l| !known.contains(&l.issue))
            .map(|l| (l.issue.clone(), Stage::UnknownIssue)),
    );
    let (mut report, links) = mining_report(raw, entry.kept, known);
    for (key, stage) in &mut dropped {
        if !known.contains(key) {
            *stage = Stage::UnknownIssue;
        }
    }
    dropped.sort();
    for (_, stage) in &dropped {
        match stage {
            Stage::PathRequirement => report.discarded_path += 1,
            Stage::MergeDisambiguation => report.discarded_merge += 1,
            Stage::EntryPoint => report.discarded_entry += 1,
            Stage::UnknownIssue => {}
        }
    }
    Refinement {
        links,
        dropped,
        report,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn key(s: &str) -> IssueKey {
        s.parse().unwrap()
    }

    fn link(issue: &str, commits: &[&str]) -> LinkRecord {
        LinkRecord {
            issue: key(issue),
            commits: commits.iter().map(|c| id(c)).collect(),
        }
    }

    #[test]
    fn key_parsing() {
        let k = key("AVRO-12");
        assert_eq!(k.prefix(), "AVRO");
        assert_eq!(k.number(), 12);
        assert_eq!(k.to_string(), "AVRO-12");
        assert!("avro-1".parse::<IssueKey>().is_err());
        assert!("AVRO-".parse::<IssueKey>().is_err());
        assert!("AVRO-0".parse::<IssueKey>().is_err());
        assert!("AVRO".parse::<IssueKey>().is_err());
        assert!(key("AVRO-2") < key("AVRO-10"));
    }

    #[test]
    fn finds_keys_with_word_boundaries() {
        assert_eq!(
            find_issue_keys("AVRO-12: fix schema", "AVRO"),
            vec![key("AVRO-12")]
        );
        assert_eq!(
            find_issue_keys("MNG-3 MNG-4 merge work", "MNG"),
            vec![key("MNG-3"), key("MNG-4")]
        );
        assert_eq!(
            find_issue_keys("MNG-3, again MNG-3", "MNG"),
            vec![key("MNG-3")]
        );
        assert!(find_issue_keys("XAVRO-1 AVRO-1x AVRO_1 AVRO-", "AVRO").is_empty());
        assert_eq!(find_issue_keys("(AVRO-7)", "AVRO"), vec![key("AVRO-7")]);
        assert!(find_issue_keys("avro-7", "AVRO").is_empty());
        assert!(find_issue_keys("AVRO-99999999999999999999999", "AVRO").is_empty());
    }

    #[test]
    fn mines_summary_line_only() {
        let mut g = graph(&[("a", &[]), ("b", &["a"]), ("c", &["b"])], "c");
        let recs: Vec<_> = g
            .commits()
            .iter()
            .cloned()
            .zip([
                "AVRO-12: fix schema",
                "clean\n\nAVRO-99 in body",
                "AVRO-12 follow up",
            ])
            .map(|(mut r, s)| {
                r.summary = s.into();
                r
            })
            .collect();
        g = CommitGraph::new(recs, &id("c")).unwrap();
        let links = mine_raw_links(&g, "AVRO");
        assert_eq!(links, vec![link("AVRO-12", &["a", "c"])]);
    }

    #[test]
    fn path_stage() {
        let g = forked_mainline();
        let anc = AncestorSets::compute(&g);
        let out = apply_path_requirement(
            vec![
                link("X-1", &["a3", "a4"]),
                link("X-2", &["a3", "b2"]),
                link("X-3", &["b1"]),
            ],
            &g,
            &anc,
        );
        assert_eq!(
            out.kept,
            vec![link("X-1", &["a3", "a4"]), link("X-3", &["b1"])]
        );
        assert_eq!(out.dropped, vec![key("X-2")]);
    }

    #[test]
    fn merge_keeps_links_over_unlinked_branch() {
        let g = forked_mainline();
        let anc = AncestorSets::compute(&g);
        let input = vec![link("X-1", &["m"]), link("X-2", &["a3"])];
        let out = disambiguate_merges(input.clone(), &g, &anc);
        assert_eq!(out.kept, input);
        assert!(out.dropped.is_empty());
    }

    #[test]
    fn merge_links_discarded_over_linked_branch() {
        let g = forked_mainline();
        let anc = AncestorSets::compute(&g);
        let out = disambiguate_merges(
            vec![link("X-1", &["b1", "m"]), link("X-2", &["m"])],
            &g,
            &anc,
        );
        assert_eq!(out.kept, vec![link("X-1", &["b1"])]);
        assert_eq!(out.dropped, vec![key("X-2")]);
    }

    #[test]
    fn no_merges_unchanged() {
        let g = forked_mainline();
        let anc = AncestorSets::compute(&g);
        let input = vec![link("X-1", &["a1", "a3"]), link("X-2", &["b1"])];
        assert_eq!(disambiguate_merges(input.clone(), &g, &anc).kept, input);
    }

    #[test]
    fn entry_point_stage() {
        let g = three_merges();
        let anc = AncestorSets::compute(&g);
        let out = apply_entry_point_requirement(
            vec![
                link("X-1", &["M1"]),
                link("X-2", &["M3"]),
                link("X-3", &["4"]),
            ],
            &g,
            &anc,
        );
        assert_eq!(out.kept, vec![link("X-1", &["M1"]), link("X-3", &["4"])]);
        assert_eq!(out.dropped, vec![key("X-2")]);
    }

    #[test]
    fn report_counts_and_prunes_unknown() {
        let raw = vec![link("X-1", &["a"]), link("X-2", &["b"])];
        let all: BTreeSet<IssueKey> = [key("X-1"), key("X-2")].into();
        let (r, kept) = mining_report(&raw, raw.clone(), &all);
        assert_eq!(r.unknown_issues, 0);
        assert_eq!(r.linked, r.max_linkable);
        assert_eq!(kept.len(), 2);

        let some: BTreeSet<IssueKey> = [key("X-1")].into();
        let (r, kept) = mining_report(&raw, raw.clone(), &some);
        assert_eq!(r.unknown_issues, 1);
        assert_eq!(r.max_linkable, 1);
        assert_eq!(kept, vec![link("X-1", &["a"])]);
    }

    #[test]
    fn full_refinement_on_three_merges() {
        let g = three_merges();
        let anc = AncestorSets::compute(&g);
        let raw = vec![
            link("X-1", &["M1"]),
            link("X-2", &["M3"]),
            link("X-3", &["3", "5"]),
            link("X-4", &["4"]),
        ];
        let known: BTreeSet<IssueKey> = [key("X-1"), key("X-2"), key("X-3")].into();
        let r = refine_links(&raw, &g, &anc, &known);
        assert_eq!(r.links, vec![link("X-1", &["M1"])]);
        assert_eq!(
            r.dropped,
            vec![
                (key("X-2"), Stage::EntryPoint),
                (key("X-3"), Stage::PathRequirement),
                (key("X-4"), Stage::UnknownIssue),
            ]
        );
        assert_eq!(
            r.report,
            MiningReport {
                unknown_issues: 1,
                max_linkable: 3,
                linked: 1,
                discarded_path: 1,
                discarded_merge: 0,
                discarded_entry: 1,
            }
        );
    }

    fn random_links() -> impl Strategy<Value = Vec<LinkRecord>> {
        let names = ["a1", "a2", "a3", "b1", "a4", "b2", "m", "a5"];
        proptest::collection::vec(proptest::collection::btree_set(0usize..8, 1..4), 0..6).prop_map(
            move |sets| {
                sets.into_iter()
                    .enumerate()
                    .map(|(i, set)| LinkRecord {
                        issue: IssueKey::new("X", i as u64 + 1).unwrap(),
                        commits: set.into_iter().map(|c| id(names[c])).collect(),
                    })
                    .collect()
            },
        )
    }

    proptest! {
        #[test]
        fn stages_idempotent_and_conserving(links in random_links()) {
            let g = forked_mainline();
            let anc = AncestorSets::compute(&g);
            let n = links.len();
            let p = apply_path_requirement(links, &g, &anc);
            prop_assert_eq!(p.kept.len() + p.dropped.len(), n);
            prop_assert_eq!(&apply_path_requirement(p.kept.clone(), &g, &anc).kept, &p.kept);

            let m = disambiguate_merges(p.kept.clone(), &g, &anc);
            prop_assert_eq!(m.kept.len() + m.dropped.len(), p.kept.len());
            prop_assert_eq!(&disambiguate_merges(m.kept.clone(), &g, &anc).kept, &m.kept);

            // No surviving merge commit has a linked branch.
            let linked: BTreeSet<CommitId> =
                m.kept.iter().flat_map(|l| l.commits.iter().cloned()).collect();
            let merge = id("m");
            if linked.contains(&merge) {
                for c in ["b1", "b2"] {
                    prop_assert!(!linked.contains(&id(c)));
                }
            }

            let e = apply_entry_point_requirement(m.kept.clone(), &g, &anc);
            prop_assert_eq!(e.kept.len() + e.dropped.len(), m.kept.len());
            prop_assert_eq!(&apply_entry_point_requirement(e.kept.clone(), &g, &anc).kept, &e.kept);
        }
    }
}

//! Immutable commit DAG plus the ancestor-set algorithms used to refine
//! issue links: merged-branch extraction, the single-path requirement and
//! unique entry points into merged branches.
//!
//! Commits are addressed publicly by [`CommitId`]; internally everything is
//! an index into the topological order, and ancestor sets are dense bitsets
//! over those indices.

use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;
use core::fmt;

/// Opaque commit identifier (a 40-hex object name when loaded from git).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CommitId(String);

impl CommitId {
    pub fn new(value: impl Into<String>) -> Result<Self, GraphError> {
        let value = value.into();
        if value.is_empty() {
            return Err(GraphError::EmptyId);
        }
        Ok(CommitId(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CommitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for CommitId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitRecord {
    pub id: CommitId,
    /// First parent is the branch that was merged into.
    pub parents: Vec<CommitId>,
    /// First line of the commit message.
    pub summary: String,
    /// Author timestamp, seconds since the epoch (UTC).
    pub author_time: i64,
}

impl CommitRecord {
    pub fn is_merge(&self) -> bool {
        self.parents.len() == 2
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    EmptyId,
    DuplicateCommit(CommitId),
    MissingHead(CommitId),
    UnknownParent {
        commit: CommitId,
        parent: CommitId,
    },
    /// Merges with more than two parents are not supported.
    UnsupportedMerge {
        commit: CommitId,
        parents: usize,
    },
    Cycle,
    NotAMerge(CommitId),
    UnknownCommit(CommitId),
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::EmptyId => f.write_str("empty commit id"),
            GraphError::DuplicateCommit(id) => write!(f, "duplicate commit {id}"),
            GraphError::MissingHead(id) => write!(f, "head commit {id} not in history"),
            GraphError::UnknownParent { commit, parent } => {
                write!(f, "commit {commit} references unknown parent {parent}")
            }
            GraphError::UnsupportedMerge { commit, parents } => {
                write!(
                    f,
                    "commit {commit} has {parents} parents; only 2-way merges are supported"
                )
            }
            GraphError::Cycle => f.write_str("commit history contains a cycle"),
            GraphError::NotAMerge(id) => write!(f, "commit {id} is not a merge commit"),
            GraphError::UnknownCommit(id) => write!(f, "commit {id} not in graph"),
        }
    }
}

impl core::error::Error for GraphError {}

/// Commit history reachable from a single head, stored in topological order
/// (parents before children).
#[derive(Debug, Clone)]
pub struct CommitGraph {
    commits: Vec<CommitRecord>,
    parents: Vec<Vec<usize>>,
    index: BTreeMap<CommitId, usize>,
    head: usize,
}

impl CommitGraph {
    /// Builds the graph of everything reachable from `head`. Records not
    /// reachable from `head` are ignored.
    ///
    /// The topological order is deterministic: among commits whose parents
    /// are all placed, the one with the smallest `(author_time, id)` goes
    /// first.
    pub fn new(records: Vec<CommitRecord>, head: &CommitId) -> Result<Self, GraphError> {
        let mut by_id: BTreeMap<CommitId, usize> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            if by_id.insert(r.id.clone(), i).is_some() {
                return Err(GraphError::DuplicateCommit(r.id.clone()));
            }
        }
        let head_pos = *by_id
            .get(head)
            .ok_or_else(|| GraphError::MissingHead(head.clone()))?;

        // Reachability from head.
        let mut reachable = vec![false; records.len()];
        let mut stack = vec![head_pos];
        reachable[head_pos] = true;
        while let Some(i) = stack.pop() {
            let r = &records[i];
            if r.parents.len() > 2 {
                return Err(GraphError::UnsupportedMerge {
                    commit: r.id.clone(),
                    parents: r.parents.len(),
                });
            }
            for p in &r.parents {
                let pi = *by_id.get(p).ok_or_else(|| GraphError::UnknownParent {
                    commit: r.id.clone(),
                    parent: p.clone(),
                })?;
                if !reachable[pi] {
                    reachable[pi] = true;
                    stack.push(pi);
                }
            }
        }

        // Kahn's algorithm over the reachable subgraph.
        let mut pending = vec![0usize; records.len()];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); records.len()];
        let mut ready = BinaryHeap::new();
        let mut total = 0;
        for (i, r) in records.iter().enumerate() {
            if !reachable[i] {
                continue;
            }
            total += 1;
            let mut distinct = BTreeSet::new();
            for p in &r.parents {
                let pi = by_id[p];
                if distinct.insert(pi) {
                    children[pi].push(i);
                }
            }
            pending[i] = distinct.len();
            if pending[i] == 0 {
                ready.push(Reverse((r.author_time, &r.id, i)));
            }
        }
        let mut order = Vec::with_capacity(total);
        while let Some(Reverse((_, _, i))) = ready.pop() {
            order.push(i);
            for &c in &children[i] {
                pending[c] -= 1;
                if pending[c] == 0 {
                    let r = &records[c];
                    ready.push(Reverse((r.author_time, &r.id, c)));
                }
            }
        }
        if order.len() != total {
            return Err(GraphError::Cycle);
        }

        let mut new_pos = vec![usize::MAX; records.len()];
        for (pos, &old) in order.iter().enumerate() {
            new_pos[old] = pos;
        }
        let mut slots: Vec<Option<CommitRecord>> = records.into_iter().map(Some).collect();
        let mut commits = Vec::with_capacity(total);
        let mut parents = Vec::with_capacity(total);
        let mut index = BTreeMap::new();
        for (pos, &old) in order.iter().enumerate() {
            let rec = slots[old].take().expect("each commit placed once");
            parents.push(rec.parents.iter().map(|p| new_pos[by_id[p]]).collect());
            index.insert(rec.id.clone(), pos);
            commits.push(rec);
        }
        Ok(CommitGraph {
            commits,
            parents,
            index,
            head: new_pos[head_pos],
        })
    }

    pub fn len(&self) -> usize {
        self.commits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.commits.is_empty()
    }

    pub fn head(&self) -> &CommitId {
        &self.commits[self.head].id
    }

    /// Records in topological order.
    pub fn commits(&self) -> &[CommitRecord] {
        &self.commits
    }

    pub fn topo_order(&self) -> impl Iterator<Item = &CommitId> {
        self.commits.iter().map(|c| &c.id)
    }

    pub fn get(&self, id: &CommitId) -> Option<&CommitRecord> {
        self.position(id).map(|i| &self.commits[i])
    }

    /// Position of `id` in the topological order.
    pub fn position(&self, id: &CommitId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn record_at(&self, pos: usize) -> &CommitRecord {
        &self.commits[pos]
    }

    pub fn parents_at(&self, pos: usize) -> &[usize] {
        &self.parents[pos]
    }

    pub fn is_merge_at(&self, pos: usize) -> bool {
        self.parents[pos].len() == 2
    }

    fn require(&self, id: &CommitId) -> Result<usize, GraphError> {
        self.position(id)
            .ok_or_else(|| GraphError::UnknownCommit(id.clone()))
    }
}

/// Fixed-size bitset over topological positions.
#[derive(Debug, Clone, PartialEq, Eq)]
struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    fn new(bits: usize) -> Self {
        BitSet {
            words: vec![0; bits.div_ceil(64)],
        }
    }

    fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn contains(&self, i: usize) -> bool {
        self.words[i / 64] & (1 << (i % 64)) != 0
    }

    fn union_with(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
        }
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &bits)| {
            let mut rest = bits;
            core::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let tz = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(w * 64 + tz)
            })
        })
    }

    fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// For every commit, the set of commits that topologically came before it
/// (including itself).
#[derive(Debug, Clone)]
pub struct AncestorSets {
    sets: Vec<BitSet>,
}

impl AncestorSets {
    pub fn compute(graph: &CommitGraph) -> Self {
        let n = graph.len();
        let mut sets: Vec<BitSet> = Vec::with_capacity(n);
        for pos in 0..n {
            let mut set = BitSet::new(n);
            set.insert(pos);
            for &p in graph.parents_at(pos) {
                // Parents precede children in topological order.
                set.union_with(&sets[p]);
            }
            sets.push(set);
        }
        AncestorSets { sets }
    }

    /// True when `ancestor` is reachable from `descendant` (or equal to it).
    pub fn contains_at(&self, descendant: usize, ancestor: usize) -> bool {
        self.sets[descendant].contains(ancestor)
    }

    pub fn positions_of(&self, pos: usize) -> impl Iterator<Item = usize> + '_ {
        self.sets[pos].iter()
    }

    pub fn size_of(&self, pos: usize) -> usize {
        self.sets[pos].len()
    }

    /// The ancestor set of `id` as commit ids.
    pub fn set_of(
        &self,
        graph: &CommitGraph,
        id: &CommitId,
    ) -> Result<BTreeSet<CommitId>, GraphError> {
        let pos = graph.require(id)?;
        Ok(self
            .positions_of(pos)
            .map(|i| graph.record_at(i).id.clone())
            .collect())
    }
}

fn merge_parents(graph: &CommitGraph, merge: usize) -> Result<(usize, usize), GraphError> {
    match graph.parents_at(merge) {
        [first, second] => Ok((*first, *second)),
        _ => Err(GraphError::NotAMerge(graph.record_at(merge).id.clone())),
    }
}

/// Positions of `(ancestors(second parent) ∪ {merge}) ∖ ancestors(first parent)`,
/// ascending.
pub fn merged_branch_at(
    graph: &CommitGraph,
    ancestors: &AncestorSets,
    merge: usize,
) -> Result<Vec<usize>, GraphError> {
    let (first, second) = merge_parents(graph, merge)?;
    let mut branch: Vec<usize> = ancestors
        .positions_of(second)
        .filter(|&c| !ancestors.contains_at(first, c))
        .collect();
    branch.push(merge);
    Ok(branch)
}

/// The branch actually brought in by a two-way merge, including the merge
/// commit itself.
pub fn merged_branch(
    graph: &CommitGraph,
    ancestors: &AncestorSets,
    merge: &CommitId,
) -> Result<BTreeSet<CommitId>, GraphError> {
    let pos = graph.require(merge)?;
    Ok(merged_branch_at(graph, ancestors, pos)?
        .into_iter()
        .map(|i| graph.record_at(i).id.clone())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathViolation {
    /// The commit is not an ancestor of head.
    NotOnHeadPath(CommitId),
    /// Neither commit precedes the other on a root-to-head path.
    Parallel(CommitId, CommitId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathDecision {
    Accept,
    Reject(PathViolation),
}

impl PathDecision {
    pub fn is_accept(&self) -> bool {
        matches!(self, PathDecision::Accept)
    }
}

/// A merge is entered through its second parent; everything else is its own anchor.
fn anchor(graph: &CommitGraph, pos: usize) -> usize {
    match graph.parents_at(pos) {
        [_, second] => *second,
        _ => pos,
    }
}

/// `c` precedes `d` when a root-to-head path can visit `c` and then reach
/// `d` (through its merged branch when `d` is a merge).
fn precedes(graph: &CommitGraph, ancestors: &AncestorSets, c: usize, d: usize) -> bool {
    ancestors.contains_at(anchor(graph, d), c)
}

/// Checks that all `linked` commits lie on a single root-to-head path that
/// passes through the merged branch of every linked merge commit.
pub fn path_requirement(
    graph: &CommitGraph,
    ancestors: &AncestorSets,
    linked: &[CommitId],
) -> PathDecision {
    let mut positions = Vec::with_capacity(linked.len());
    for id in linked {
        match graph.position(id) {
            // Every commit in the graph is reachable from head.
            Some(p) => positions.push((p, id)),
            None => return PathDecision::Reject(PathViolation::NotOnHeadPath(id.clone())),
        }
    }
    // Report the violating pair in topological order so the verdict does
    // not depend on argument order.
    positions.sort();
    positions.dedup_by_key(|(p, _)| *p);
    for (i, &(c, c_id)) in positions.iter().enumerate() {
        for &(d, d_id) in &positions[i + 1..] {
            if !precedes(graph, ancestors, c, d) && !precedes(graph, ancestors, d, c) {
                return PathDecision::Reject(PathViolation::Parallel(c_id.clone(), d_id.clone()));
            }
        }
    }
    PathDecision::Accept
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntryPoint {
    /// First commit of the merged branch.
    pub entry: CommitId,
    /// The commit the branch forked from; the a-priori state for the merge.
    pub apriori_parent: CommitId,
}

/// Index-level variant of [`unique_entry_point`]: `(entry, apriori_parent)`.
pub fn unique_entry_point_at(
    graph: &CommitGraph,
    ancestors: &AncestorSets,
    merge: usize,
) -> Result<Option<(usize, usize)>, GraphError> {
    let mut branch = merged_branch_at(graph, ancestors, merge)?;
    branch.retain(|&c| c != merge);
    let mut found = None;
    for &c in &branch {
        let outside: Vec<usize> = graph
            .parents_at(c)
            .iter()
            .copied()
            .filter(|p| branch.binary_search(p).is_err())
            .collect();
        match outside.as_slice() {
            [] => {}
            [p] if found.is_none() => found = Some((c, *p)),
            _ => return Ok(None),
        }
    }
    Ok(found)
}

/// Returns the single commit through which the merged branch of `merge` was
/// entered, if there is exactly one such commit with exactly one parent
/// outside the branch.
pub fn unique_entry_point(
    graph: &CommitGraph,
    ancestors: &AncestorSets,
    merge: &CommitId,
) -> Result<Option<EntryPoint>, GraphError> {
    let pos = graph.require(merge)?;
    Ok(
        unique_entry_point_at(graph, ancestors, pos)?.map(|(e, p)| EntryPoint {
            entry: graph.record_at(e).id.clone(),
            apriori_parent: graph.record_at(p).id.clone(),
        }),
    )
}

//! The subcommands: mine, build, evaluate, rank, analyze and report.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use issueloc_core::dataset::{
    build_sample, commit_size_distribution, diff_parent, ExtensionFilter, LabeledSample, RepoReader,
};
use issueloc_core::eval::{
    aggregate, metrics_for_issue, temporal_split, AggregateReport, DEFAULT_KS,
};
use issueloc_core::graph::AncestorSets;
use issueloc_core::links::{mine_raw_links, refine_links, IssueKey, MiningReport};
use issueloc_core::retrieval::{rank, CorpusIndex, ModelConfig, ModelKind, Ranking};
use issueloc_core::text::{preprocess_file, preprocess_issue, Document, PreprocessConfig};

use crate::analysis::{
    holdout_compare, spearman, starred, CorrelationStrength, EffectSize, GroupingMode,
    IdentifierCounter, TypeCategory,
};
use crate::config::{ConfigError, RunConfig, SplitChoice};
use crate::formats::{
    read_dataset, read_issues, read_jsonl, read_links, write_dataset, write_json, write_jsonl,
    write_text, FormatError, LinkLine, MetricsRecord, RankingRecord, RR_COLUMN,
};
use crate::git::{GitError, GitRepo};

pub const LINKS_FILE: &str = "links.jsonl";
pub const MINING_REPORT_FILE: &str = "mining_report.json";
pub const DATASET_FILE: &str = "dataset.jsonl";
pub const DATASET_SUMMARY_FILE: &str = "dataset_summary.json";
pub const COMMIT_SIZES_FILE: &str = "commit_sizes.csv";
pub const METRICS_FILE: &str = "metrics.jsonl";
pub const RANKINGS_FILE: &str = "rankings.jsonl";
pub const AGGREGATE_FILE: &str = "aggregate.csv";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Invariant(_) => 4,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<GitError> for CliError {
    fn from(e: GitError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Data(e.to_string())
    }
}

fn thread_pool(cfg: &RunConfig) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn ensure_output_dir(cfg: &RunConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| CliError::Data(format!("{}: {e}", cfg.output_dir.display())))
}

fn filter_of(cfg: &RunConfig) -> Result<ExtensionFilter, CliError> {
    cfg.extension_filter()
        .ok_or_else(|| CliError::Config("extensions must not be empty".to_owned()))
}

fn require_file(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "{what} not found: {}",
            path.display()
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MiningSummary {
    pub project: String,
    pub commits: usize,
    pub unknown_issues: usize,
    pub max_linkable: usize,
    pub linked: usize,
    pub discarded_path: usize,
    pub discarded_merge: usize,
    pub discarded_entry: usize,
}

impl MiningSummary {
    fn new(project: &str, commits: usize, r: &MiningReport) -> Self {
        MiningSummary {
            project: project.to_owned(),
            commits,
            unknown_issues: r.unknown_issues,
            max_linkable: r.max_linkable,
            linked: r.linked,
            discarded_path: r.discarded_path,
            discarded_merge: r.discarded_merge,
            discarded_entry: r.discarded_entry,
        }
    }
}

/// Mines issue keys from commit summaries and refines the links.
pub fn cmd_mine(cfg: &RunConfig) -> Result<MiningSummary, CliError> {
    cfg.validate()?;
    let prefix = cfg.require_prefix()?;
    require_file(&cfg.issues_path, "issue corpus")?;
    let repo = GitRepo::open(&cfg.repo_path)?;
    let graph = repo.load_history(&cfg.head_ref)?;
    let ancestors = AncestorSets::compute(&graph);
    let issues = read_issues(&cfg.issues_path)?;
    let known: BTreeSet<IssueKey> = issues.keys().cloned().collect();

    let raw = mine_raw_links(&graph, prefix);
    let refinement = refine_links(&raw, &graph, &ancestors, &known);
    let kept: BTreeMap<&IssueKey, _> = refinement.links.iter().map(|l| (&l.issue, l)).collect();
    let stages: BTreeMap<&IssueKey, _> = refinement.dropped.iter().map(|(k, s)| (k, *s)).collect();
    let mut lines = Vec::with_capacity(raw.len());
    for link in &raw {
        if let Some(k) = kept.get(&link.issue) {
            lines.push(LinkLine::kept(k));
        } else if let Some(stage) = stages.get(&link.issue) {
            lines.push(LinkLine::dropped(link, *stage));
        } else {
            return Err(CliError::Invariant(format!(
                "issue {} neither kept nor dropped",
                link.issue
            )));
        }
    }
    ensure_output_dir(cfg)?;
    write_jsonl(&cfg.out(LINKS_FILE), &lines)?;
    let summary = MiningSummary::new(prefix, graph.len(), &refinement.report);
    write_json(&cfg.out(MINING_REPORT_FILE), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spread {
    pub min: usize,
    pub max: usize,
    pub mean: f64,
    pub median: f64,
}

impl Spread {
    pub fn of(values: &[usize]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_unstable();
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2] as f64
        } else {
            (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
        };
        Some(Spread {
            min: v[0],
            max: v[n - 1],
            mean: v.iter().sum::<usize>() as f64 / n as f64,
            median,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub project: String,
    pub linked: usize,
    pub in_dataset: usize,
    pub discarded_no_code: usize,
    pub discarded_unknown: usize,
    pub flagged: usize,
    pub files_per_issue: Option<Spread>,
    pub positives_per_issue: Option<Spread>,
}

fn summarize(
    project: &str,
    linked: usize,
    samples: &[LabeledSample],
    no_code: usize,
    unknown: usize,
) -> DatasetSummary {
    let files: Vec<usize> = samples.iter().map(|s| s.snapshot_file_count).collect();
    let positives: Vec<usize> = samples.iter().map(|s| s.positives.len()).collect();
    DatasetSummary {
        project: project.to_owned(),
        linked,
        in_dataset: samples.len(),
        discarded_no_code: no_code,
        discarded_unknown: unknown,
        flagged: samples.iter().filter(|s| s.flagged).count(),
        files_per_issue: Spread::of(&files),
        positives_per_issue: Spread::of(&positives),
    }
}

/// Builds the first-commit-only dataset from the mined links.
pub fn cmd_build(cfg: &RunConfig, links_path: Option<&Path>) -> Result<DatasetSummary, CliError> {
    cfg.validate()?;
    let links_path = links_path.map_or_else(|| cfg.out(LINKS_FILE), Path::to_path_buf);
    require_file(&links_path, "links file")?;
    require_file(&cfg.issues_path, "issue corpus")?;
    let filter = filter_of(cfg)?;
    let repo = GitRepo::open(&cfg.repo_path)?;
    let graph = repo.load_history(&cfg.head_ref)?;
    let ancestors = AncestorSets::compute(&graph);
    let issues = read_issues(&cfg.issues_path)?;
    let links = read_links(&links_path)?;
    for link in &links {
        if let Some(c) = link.commits.iter().find(|c| graph.get(c).is_none()) {
            return Err(CliError::Data(format!(
                "{}: commit {c} is not in the history of {}",
                link.issue, cfg.head_ref
            )));
        }
    }

    let pool = thread_pool(cfg)?;
    let built: Vec<Result<Option<Option<LabeledSample>>, GitError>> = pool.install(|| {
        links
            .par_iter()
            .map(|link| match issues.get(&link.issue) {
                None => Ok(None),
                Some(issue) => {
                    build_sample(&repo, &graph, &ancestors, link, issue, &filter).map(Some)
                }
            })
            .collect()
    });
    let (mut samples, mut no_code, mut unknown) = (Vec::new(), 0, 0);
    for b in built {
        match b? {
            None => unknown += 1,
            Some(None) => no_code += 1,
            Some(Some(s)) => samples.push(s),
        }
    }
    if samples.is_empty() {
        eprintln!("warning: no issue produced a sample; the dataset is empty");
    }

    let sizes = commit_size_distribution(&links, |c| {
        repo.diff(diff_parent(&graph, c), c).map(|d| d.len())
    })?;
    let mut csv = String::from("position,issues,mean_share\n");
    for (pos, shares) in sizes.shares.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{},{}",
            pos + 1,
            shares.len(),
            sizes.mean_at(pos).unwrap_or(0.0)
        );
    }

    ensure_output_dir(cfg)?;
    write_dataset(&cfg.out(DATASET_FILE), &samples)?;
    write_text(&cfg.out(COMMIT_SIZES_FILE), &csv)?;
    let summary = summarize(&cfg.project_prefix, links.len(), &samples, no_code, unknown);
    write_json(&cfg.out(DATASET_SUMMARY_FILE), &summary)?;
    Ok(summary)
}

/// Preprocessed source files of a snapshot.
pub fn snapshot_documents(
    repo: &GitRepo,
    commit: &issueloc_core::graph::CommitId,
    filter: &ExtensionFilter,
    preprocess: &PreprocessConfig,
) -> Result<Vec<Document>, GitError> {
    Ok(repo
        .read_tree_files(commit, |p| filter.is_source(p))?
        .into_iter()
        .map(|(path, bytes)| preprocess_file(&path, &bytes, preprocess))
        .collect())
}

fn sample_index(
    sample: &LabeledSample,
    repo: &GitRepo,
    filter: &ExtensionFilter,
    preprocess: &PreprocessConfig,
) -> Result<CorpusIndex, CliError> {
    let docs = snapshot_documents(repo, &sample.snapshot.commit, filter, preprocess)?;
    if docs.len() != sample.snapshot_file_count {
        return Err(CliError::Invariant(format!(
            "{}: snapshot has {} source files, dataset recorded {}",
            sample.issue,
            docs.len(),
            sample.snapshot_file_count
        )));
    }
    CorpusIndex::build(docs).map_err(|e| CliError::Data(format!("{}: {e}", sample.issue)))
}

/// Ranks every source file of the sample's snapshot against its issue.
pub fn rank_for_sample(
    sample: &LabeledSample,
    repo: &GitRepo,
    model: &ModelConfig,
    preprocess: &PreprocessConfig,
    filter: &ExtensionFilter,
) -> Result<Ranking, CliError> {
    let index = sample_index(sample, repo, filter, preprocess)?;
    let query = preprocess_issue(&sample.title, &sample.body, preprocess);
    rank(&index, &query, model).map_err(|e| CliError::Invariant(e.to_string()))
}

pub fn metric_columns() -> Vec<String> {
    let mut cols = Vec::new();
    for name in ["hit", "precision", "recall"] {
        for k in DEFAULT_KS {
            cols.push(format!("{name}@{k}"));
        }
    }
    cols.push("r_precision".to_owned());
    cols.push(RR_COLUMN.to_owned());
    cols
}

fn report_value(r: &AggregateReport, column: &str) -> Option<f64> {
    if column == RR_COLUMN {
        return Some(r.mrr);
    }
    if column == "r_precision" {
        return Some(r.r_precision);
    }
    let (name, k) = column.split_once('@')?;
    let at = r.at_k(k.parse().ok()?)?;
    match name {
        "hit" => Some(at.hit),
        "precision" => Some(at.precision),
        "recall" => Some(at.recall),
        _ => None,
    }
}

fn table_csv(corner: &str, headers: &[String], rows: &[(String, Vec<Option<String>>)]) -> String {
    let mut out = String::from(corner);
    for h in headers {
        out.push(',');
        out.push_str(h);
    }
    out.push('\n');
    for (name, cells) in rows {
        out.push_str(name);
        for c in cells {
            out.push(',');
            out.push_str(c.as_deref().unwrap_or("NA"));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub evaluated: usize,
    pub aggregates: Vec<(ModelKind, AggregateReport)>,
}

/// Splits the dataset in time and scores the configured models on the
/// selected part.
pub fn cmd_evaluate(cfg: &RunConfig, dataset_path: Option<&Path>) -> Result<Evaluation, CliError> {
    cfg.validate()?;
    let dataset_path = dataset_path.map_or_else(|| cfg.out(DATASET_FILE), Path::to_path_buf);
    require_file(&dataset_path, "dataset")?;
    let filter = filter_of(cfg)?;
    let preprocess = cfg.preprocess_config();
    let kinds = cfg.model_kinds()?;
    let repo = GitRepo::open(&cfg.repo_path)?;
    let samples = read_dataset(&dataset_path)?;
    let split = temporal_split(samples, cfg.split_ratio);
    let selected: Vec<LabeledSample> = match cfg.split {
        SplitChoice::Validation => split.validation,
        SplitChoice::Test => split.test,
        SplitChoice::All => split.validation.into_iter().chain(split.test).collect(),
    };

    let pool = thread_pool(cfg)?;
    type PerSample = Vec<(
        ModelKind,
        MetricsRecord,
        RankingRecord,
        issueloc_core::eval::MetricsRow,
    )>;
    let per_sample: Vec<Result<PerSample, CliError>> = pool.install(|| {
        selected
            .par_iter()
            .map(|sample| {
                let index = sample_index(sample, &repo, &filter, &preprocess)?;
                let query = preprocess_issue(&sample.title, &sample.body, &preprocess);
                kinds
                    .iter()
                    .map(|&kind| {
                        let ranking = rank(&index, &query, &cfg.model_config(kind))
                            .map_err(|e| CliError::Invariant(e.to_string()))?;
                        let row = metrics_for_issue(
                            sample.issue.clone(),
                            ranking.paths(),
                            &sample.positives,
                            &DEFAULT_KS,
                        )
                        .map_err(|e| CliError::Invariant(format!("{}: {e}", sample.issue)))?;
                        Ok((
                            kind,
                            MetricsRecord::new(&row, kind.as_str(), &sample.issue_type),
                            RankingRecord::new(
                                &sample.issue,
                                kind.as_str(),
                                &ranking,
                                cfg.rankings_top,
                            ),
                            row,
                        ))
                    })
                    .collect()
            })
            .collect()
    });

    let mut metrics = Vec::new();
    let mut rankings = Vec::new();
    let mut rows: BTreeMap<ModelKind, Vec<_>> = BTreeMap::new();
    for result in per_sample {
        for (kind, m, r, row) in result? {
            metrics.push(m);
            rankings.push(r);
            rows.entry(kind).or_default().push(row);
        }
    }
    let mut aggregates = Vec::new();
    for (kind, rs) in &rows {
        let agg = aggregate(rs).map_err(|e| CliError::Invariant(e.to_string()))?;
        aggregates.push((*kind, agg));
    }
    if aggregates.is_empty() {
        eprintln!("warning: the selected split is empty; nothing was evaluated");
    }

    let columns = metric_columns();
    let headers: Vec<String> = aggregates.iter().map(|(k, _)| k.to_string()).collect();
    let table: Vec<(String, Vec<Option<String>>)> = columns
        .iter()
        .map(|c| {
            let cells = aggregates
                .iter()
                .map(|(_, a)| report_value(a, c).map(|v| v.to_string()))
                .collect();
            (c.clone(), cells)
        })
        .collect();

    ensure_output_dir(cfg)?;
    write_jsonl(&cfg.out(METRICS_FILE), &metrics)?;
    write_jsonl(&cfg.out(RANKINGS_FILE), &rankings)?;
    write_text(
        &cfg.out(AGGREGATE_FILE),
        &table_csv("metric", &headers, &table),
    )?;
    Ok(Evaluation {
        evaluated: selected.len(),
        aggregates,
    })
}

/// Ranks the snapshot at `commit` against free text; returns the listing
/// that is printed.
pub fn cmd_rank(
    cfg: &RunConfig,
    commit: &str,
    issue_file: &Path,
    top: usize,
) -> Result<String, CliError> {
    cfg.validate()?;
    let text = std::fs::read_to_string(issue_file)
        .map_err(|e| CliError::Config(format!("{}: {e}", issue_file.display())))?;
    let filter = filter_of(cfg)?;
    let preprocess = cfg.preprocess_config();
    let repo = GitRepo::open(&cfg.repo_path)?;
    let id = repo
        .resolve(commit)
        .map_err(|_| CliError::Data(format!("unknown commit: {commit}")))?;
    let docs = snapshot_documents(&repo, &id, &filter, &preprocess)?;
    let index =
        CorpusIndex::build(docs).map_err(|e| CliError::Data(format!("snapshot {commit}: {e}")))?;
    let query = preprocess_issue(&text, "", &preprocess);
    let mut out = String::new();
    for kind in cfg.model_kinds()? {
        let ranking = rank(&index, &query, &cfg.model_config(kind))
            .map_err(|e| CliError::Invariant(e.to_string()))?;
        for (i, e) in ranking.entries().iter().take(top).enumerate() {
            let _ = writeln!(out, "{kind}\t{}\t{}\t{}", i + 1, e.score, e.path);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisSummary {
    pub models: Vec<String>,
    pub tests: usize,
    pub significant: usize,
    pub skipped: Vec<String>,
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Group tests per issue category and identifier correlations over the
/// per-issue metrics.
/// Row label and one optional cell per model column.
type TableRow = (String, Vec<Option<String>>);

pub fn cmd_analyze(
    cfg: &RunConfig,
    metrics_path: Option<&Path>,
) -> Result<AnalysisSummary, CliError> {
    cfg.validate()?;
    let metrics_path = metrics_path.map_or_else(|| cfg.out(METRICS_FILE), Path::to_path_buf);
    require_file(&metrics_path, "metrics file")?;
    let dataset_path = cfg.out(DATASET_FILE);
    require_file(&dataset_path, "dataset")?;
    let records: Vec<MetricsRecord> = read_jsonl(&metrics_path)?;
    let samples = read_dataset(&dataset_path)?;
    let counter = IdentifierCounter::new(&filter_of(cfg)?);
    let identifiers: BTreeMap<String, usize> = samples
        .iter()
        .map(|s| (s.issue.to_string(), counter.count(&s.text())))
        .collect();
    let mapping = cfg.type_mapping();
    let categories: Vec<TypeCategory> = TypeCategory::ALL
        .into_iter()
        .filter(|&c| cfg.analyze_other || c != TypeCategory::Other)
        .collect();
    let project = if cfg.project_prefix.is_empty() {
        "project"
    } else {
        &cfg.project_prefix
    };

    let mut by_model: BTreeMap<&str, Vec<&MetricsRecord>> = BTreeMap::new();
    for r in &records {
        by_model.entry(r.model.as_str()).or_default().push(r);
    }

    let tested: Vec<String> = metric_columns()
        .into_iter()
        .filter(|c| crate::analysis::is_tested_metric(c))
        .collect();
    let mut summary = AnalysisSummary {
        models: by_model.keys().map(|m| (*m).to_owned()).collect(),
        tests: 0,
        significant: 0,
        skipped: Vec::new(),
    };
    let mut kw_long = String::from(
        "mode,model,project,metric,groups,h,p,epsilon_sq,effect,significant,small_groups\n",
    );
    let mut posthoc_long = String::from("mode,model,project,metric,group_a,group_b,p\n");
    let mut spearman_long =
        String::from("model,project,category,metric,n,rho,p,strength,significant\n");
    let mut by_type_long = String::from("model,issue,category,metric,value\n");
    let mut ident_long = String::from("model,issue,category,identifiers,metric,value\n");
    let mut tables: BTreeMap<&str, Vec<TableRow>> = BTreeMap::new();
    let headers: Vec<String> = by_model.keys().map(|m| format!("{project}:{m}")).collect();

    for (model_idx, (model, recs)) in by_model.iter().enumerate() {
        let rows: Vec<(TypeCategory, BTreeMap<String, f64>)> = recs
            .iter()
            .map(|r| (mapping.category(&r.issue_type), r.metrics.clone()))
            .collect();
        for (r, (cat, m)) in recs.iter().zip(&rows) {
            let ids = identifiers.get(&r.issue).copied();
            for metric in &tested {
                let Some(v) = m.get(metric) else { continue };
                let _ = writeln!(
                    by_type_long,
                    "{model},{},{},{metric},{v}",
                    r.issue,
                    csv_escape(cat.as_str())
                );
                if let Some(n) = ids {
                    let _ = writeln!(
                        ident_long,
                        "{model},{},{},{n},{metric},{v}",
                        r.issue,
                        csv_escape(cat.as_str())
                    );
                }
            }
        }

        for mode in [GroupingMode::Isolate, GroupingMode::Holdout] {
            let table = tables.entry(mode.as_str()).or_insert_with(|| {
                tested
                    .iter()
                    .map(|m| (m.clone(), vec![None; headers.len()]))
                    .collect()
            });
            match holdout_compare(&rows, &categories, mode) {
                Ok((done, skipped)) => {
                    for (metric, e) in skipped {
                        summary
                            .skipped
                            .push(format!("{}/{model}/{metric}: {e}", mode.as_str()));
                    }
                    for c in done {
                        summary.tests += 1;
                        summary.significant += c.test.significant() as usize;
                        let groups: Vec<&str> = c.categories.iter().map(|g| g.as_str()).collect();
                        let _ = writeln!(
                            kw_long,
                            "{},{model},{project},{},{},{},{},{},{},{},{}",
                            mode.as_str(),
                            c.metric,
                            csv_escape(&groups.join("|")),
                            c.test.h,
                            c.test.p,
                            c.test.epsilon_sq,
                            EffectSize::of_epsilon_sq(c.test.epsilon_sq).as_str(),
                            c.test.significant(),
                            c.test.small_groups
                        );
                        for i in 0..groups.len() {
                            for j in i + 1..groups.len() {
                                let _ = writeln!(
                                    posthoc_long,
                                    "{},{model},{project},{},{},{},{}",
                                    mode.as_str(),
                                    c.metric,
                                    csv_escape(groups[i]),
                                    csv_escape(groups[j]),
                                    c.posthoc.p[i][j]
                                );
                            }
                        }
                        if let Some(row) = table.iter_mut().find(|(m, _)| *m == c.metric) {
                            row.1[model_idx] = Some(starred(c.test.epsilon_sq, c.test.p));
                        }
                    }
                }
                Err(e) => {
                    eprintln!("warning: {} tests for {model} skipped: {e}", mode.as_str());
                    summary
                        .skipped
                        .push(format!("{}/{model}: {e}", mode.as_str()));
                }
            }
        }

        let ident_table = tables.entry("identifiers").or_insert_with(|| {
            tested
                .iter()
                .map(|m| (m.clone(), vec![None; headers.len()]))
                .collect()
        });
        let scopes: Vec<Option<TypeCategory>> = std::iter::once(None)
            .chain(categories.iter().copied().map(Some))
            .collect();
        for scope in scopes {
            for metric in &tested {
                let (xs, ys): (Vec<f64>, Vec<f64>) = recs
                    .iter()
                    .zip(&rows)
                    .filter(|(_, (cat, _))| scope.is_none_or(|s| s == *cat))
                    .filter_map(|(r, (_, m))| {
                        Some((*identifiers.get(&r.issue)? as f64, *m.get(metric)?))
                    })
                    .unzip();
                let label = scope.map_or("all", |c| c.as_str());
                match spearman(&xs, &ys) {
                    Ok(c) => {
                        let _ = writeln!(
                            spearman_long,
                            "{model},{project},{},{metric},{},{},{},{},{}",
                            csv_escape(label),
                            c.n,
                            c.rho,
                            c.p,
                            CorrelationStrength::of_rho(c.rho).as_str(),
                            c.significant()
                        );
                        if scope.is_none() {
                            if let Some(row) = ident_table.iter_mut().find(|(m, _)| m == metric) {
                                row.1[model_idx] = Some(starred(c.rho, c.p));
                            }
                        }
                    }
                    Err(e) => {
                        let _ = writeln!(
                            spearman_long,
                            "{model},{project},{},{metric},{},NA,NA,NA,NA",
                            csv_escape(label),
                            xs.len()
                        );
                        if scope.is_none() {
                            summary
                                .skipped
                                .push(format!("spearman/{model}/{metric}: {e}"));
                        }
                    }
                }
            }
        }
    }

    ensure_output_dir(cfg)?;
    write_text(&cfg.out("kruskal_wallis.csv"), &kw_long)?;
    write_text(&cfg.out("conover.csv"), &posthoc_long)?;
    write_text(&cfg.out("spearman.csv"), &spearman_long)?;
    write_text(&cfg.out("metrics_by_type.csv"), &by_type_long)?;
    write_text(&cfg.out("identifiers_long.csv"), &ident_long)?;
    for (name, rows) in &tables {
        write_text(
            &cfg.out(&format!("table_{name}.csv")),
            &table_csv("metric", &headers, rows),
        )?;
    }
    write_json(
        &cfg.out("analysis_meta.json"),
        &serde_json::json!({
            "alpha": crate::analysis::ALPHA,
            "kruskal_wallis_p_value": "chi-square approximation",
            "conover_p_adjust": "none",
            "spearman_p_value": "t approximation",
            "categories": categories.iter().map(|c| c.as_str()).collect::<Vec<_>>(),
            "skipped": summary.skipped,
        }),
    )?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary {
    pub projects: Vec<String>,
    /// Per project: mean MRR of bm25 and rvsm, when both were evaluated.
    pub bm25_vs_rvsm: Vec<(String, Option<(f64, f64)>)>,
    pub text: String,
}

fn column_means(records: &[&MetricsRecord]) -> BTreeMap<String, f64> {
    let mut cols: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in records {
        for (k, v) in &r.metrics {
            cols.entry(k.clone()).or_default().push(*v);
        }
    }
    cols.into_iter()
        .map(|(k, mut v)| {
            v.sort_by(f64::total_cmp);
            let n = v.len() as f64;
            (k, v.iter().sum::<f64>() / n)
        })
        .collect()
}

/// Collects metrics of one or more projects into a metrics-by-model table
/// (all issues pooled) and a metrics-by-project table for `model`.
pub fn cmd_report(
    cfg: &RunConfig,
    extra: &[(String, PathBuf)],
    model: &str,
) -> Result<ReportSummary, CliError> {
    let own = if cfg.project_prefix.is_empty() {
        "project".to_owned()
    } else {
        cfg.project_prefix.clone()
    };
    let mut projects = vec![(own, cfg.output_dir.clone())];
    projects.extend(extra.iter().cloned());
    let mut loaded: Vec<(String, Vec<MetricsRecord>)> = Vec::new();
    for (name, dir) in &projects {
        let path = dir.join(METRICS_FILE);
        require_file(&path, "metrics file")?;
        loaded.push((name.clone(), read_jsonl(&path)?));
    }
    let columns = metric_columns();

    let mut by_model: BTreeMap<&str, Vec<&MetricsRecord>> = BTreeMap::new();
    for (_, recs) in &loaded {
        for r in recs {
            by_model.entry(r.model.as_str()).or_default().push(r);
        }
    }
    let model_means: Vec<(String, BTreeMap<String, f64>)> = by_model
        .iter()
        .map(|(m, rs)| ((*m).to_owned(), column_means(rs)))
        .collect();
    let table = |means: &[(String, BTreeMap<String, f64>)]| -> Vec<(String, Vec<Option<String>>)> {
        columns
            .iter()
            .map(|c| {
                (
                    c.clone(),
                    means
                        .iter()
                        .map(|(_, m)| m.get(c).map(|v| v.to_string()))
                        .collect(),
                )
            })
            .collect()
    };
    let model_headers: Vec<String> = model_means.iter().map(|(m, _)| m.clone()).collect();
    let models_csv = table_csv("metric", &model_headers, &table(&model_means));

    let project_means: Vec<(String, BTreeMap<String, f64>)> = loaded
        .iter()
        .map(|(name, recs)| {
            let rs: Vec<&MetricsRecord> = recs.iter().filter(|r| r.model == model).collect();
            (name.clone(), column_means(&rs))
        })
        .collect();
    let project_headers: Vec<String> = project_means.iter().map(|(p, _)| p.clone()).collect();
    let projects_csv = table_csv("metric", &project_headers, &table(&project_means));

    let mut text = String::new();
    let mut comparisons = Vec::new();
    for (name, recs) in &loaded {
        let mrr = |m: &str| {
            let rs: Vec<&MetricsRecord> = recs.iter().filter(|r| r.model == m).collect();
            (!rs.is_empty()).then(|| column_means(&rs)[RR_COLUMN])
        };
        let cmp = mrr("bm25").zip(mrr("rvsm"));
        match cmp {
            Some((b, r)) => {
                let verdict = if b >= r { "yes" } else { "NO" };
                let _ = writeln!(
                    text,
                    "{name}: bm25 MRR {b:.4} >= rvsm MRR {r:.4}: {verdict}"
                );
            }
            None => {
                let _ = writeln!(
                    text,
                    "{name}: bm25/rvsm comparison unavailable (evaluate with both models)"
                );
            }
        }
        comparisons.push((name.clone(), cmp));
    }

    ensure_output_dir(cfg)?;
    write_text(&cfg.out("report_models.csv"), &models_csv)?;
    write_text(&cfg.out("report_projects.csv"), &projects_csv)?;
    write_text(&cfg.out("report.txt"), &text)?;
    Ok(ReportSummary {
        projects: loaded.into_iter().map(|(n, _)| n).collect(),
        bm25_vs_rvsm: comparisons,
        text,
    })
}

//! Issue-type grouping tests, post-hoc comparisons, identifier counting
//! and rank correlation.

use std::collections::BTreeMap;
use std::fmt;

use regex::Regex;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use issueloc_core::dataset::ExtensionFilter;

pub const ALPHA: f64 = 0.05;
/// Groups smaller than this make the chi-square approximation unreliable.
pub const SMALL_GROUP: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("at least two groups are required")]
    InsufficientGroups,
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("input lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TypeCategory {
    Bug,
    #[serde(rename = "New Feature")]
    NewFeature,
    Improvement,
    Task,
    Other,
}

impl TypeCategory {
    pub const ALL: [TypeCategory; 5] = [
        TypeCategory::Bug,
        TypeCategory::NewFeature,
        TypeCategory::Improvement,
        TypeCategory::Task,
        TypeCategory::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TypeCategory::Bug => "Bug",
            TypeCategory::NewFeature => "New Feature",
            TypeCategory::Improvement => "Improvement",
            TypeCategory::Task => "Task",
            TypeCategory::Other => "Other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
    }
}

impl fmt::Display for TypeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Raw tracker type to category; anything unmapped is `Other`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeMapping {
    map: BTreeMap<String, TypeCategory>,
}

impl Default for TypeMapping {
    fn default() -> Self {
        let map = [
            TypeCategory::Bug,
            TypeCategory::NewFeature,
            TypeCategory::Improvement,
            TypeCategory::Task,
        ]
        .into_iter()
        .map(|c| (c.as_str().to_owned(), c))
        .collect();
        TypeMapping { map }
    }
}

impl TypeMapping {
    pub fn new(map: BTreeMap<String, TypeCategory>) -> Self {
        TypeMapping { map }
    }

    /// Adds entries on top of the defaults.
    pub fn with_overrides(entries: impl IntoIterator<Item = (String, TypeCategory)>) -> Self {
        let mut m = TypeMapping::default();
        m.map.extend(entries);
        m
    }

    pub fn category(&self, raw_type: &str) -> TypeCategory {
        self.map
            .get(raw_type)
            .copied()
            .unwrap_or(TypeCategory::Other)
    }
}

pub fn consolidate_types<'a, I>(raw_types: I, mapping: &TypeMapping) -> Vec<TypeCategory>
where
    I: IntoIterator<Item = &'a str>,
{
    raw_types.into_iter().map(|t| mapping.category(t)).collect()
}

/// 1-based average ranks and the tie term `sum(t^3 - t)`.
pub fn average_ranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    (ranks, ties)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupTestResult {
    pub h: f64,
    pub p: f64,
    pub epsilon_sq: f64,
    pub group_sizes: Vec<usize>,
    pub small_groups: bool,
}

impl GroupTestResult {
    pub fn significant(&self) -> bool {
        self.p < ALPHA
    }
}

struct Pooled {
    n: f64,
    ranks: Vec<f64>,
    sizes: Vec<usize>,
    rank_sums: Vec<f64>,
    tie_factor: f64,
    h: f64,
}

fn pool(groups: &[Vec<f64>]) -> Result<Pooled, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::InsufficientGroups);
    }
    if let Some(i) = groups.iter().position(Vec::is_empty) {
        return Err(StatsError::EmptyGroup(i));
    }
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    if all.len() < 3 {
        return Err(StatsError::DegenerateInput("fewer than three observations"));
    }
    let n = all.len() as f64;
    let (ranks, ties) = average_ranks(&all);
    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let mut rank_sums = Vec::with_capacity(groups.len());
    let mut start = 0;
    for &len in &sizes {
        rank_sums.push(ranks[start..start + len].iter().sum::<f64>());
        start += len;
    }
    let h = 12.0 / (n * (n + 1.0))
        * rank_sums
            .iter()
            .zip(&sizes)
            .map(|(r, &len)| r * r / len as f64)
            .sum::<f64>()
        - 3.0 * (n + 1.0);
    Ok(Pooled {
        n,
        ranks,
        sizes,
        rank_sums,
        tie_factor: (1.0 - ties / (n * n * n - n)).min(1.0),
        h,
    })
}

/// Kruskal-Wallis H with tie correction and a chi-square p-value. When
/// every value is identical, H = 0 and p = 1.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<GroupTestResult, StatsError> {
    let pooled = pool(groups)?;
    let n = pooled.n;
    let (h, p) = if pooled.tie_factor <= 0.0 {
        (0.0, 1.0)
    } else {
        let h = (pooled.h / pooled.tie_factor).max(0.0);
        let chi = ChiSquared::new((groups.len() - 1) as f64).expect("positive degrees of freedom");
        (h, chi.sf(h))
    };
    Ok(GroupTestResult {
        h,
        p,
        epsilon_sq: (h * (n + 1.0) / (n * n - 1.0)).clamp(0.0, 1.0),
        small_groups: pooled.sizes.iter().any(|&s| s < SMALL_GROUP),
        group_sizes: pooled.sizes,
    })
}

/// Symmetric matrix of pairwise two-sided p-values with a unit diagonal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosthocMatrix {
    pub p: Vec<Vec<f64>>,
}

/// Conover-Iman pairwise comparisons of mean ranks using the pooled,
/// tie-corrected variance and `n - k` degrees of freedom. No p-value
/// adjustment is applied.
pub fn conover_posthoc(groups: &[Vec<f64>]) -> Result<PosthocMatrix, StatsError> {
    let pooled = pool(groups)?;
    let k = groups.len();
    let n = pooled.n;
    let mut p = vec![vec![1.0; k]; k];
    if pooled.tie_factor <= 0.0 || n <= k as f64 {
        return Ok(PosthocMatrix { p });
    }
    let h_cor = pooled.h / pooled.tie_factor;
    let s2 = if pooled.tie_factor == 1.0 {
        n * (n + 1.0) / 12.0
    } else {
        (pooled.ranks.iter().map(|r| r * r).sum::<f64>() - n * (n + 1.0) * (n + 1.0) / 4.0)
            / (n - 1.0)
    };
    let d = (n - 1.0 - h_cor) / (n - k as f64);
    let t_dist = StudentsT::new(0.0, 1.0, n - k as f64).expect("positive degrees of freedom");
    let means: Vec<f64> = pooled
        .rank_sums
        .iter()
        .zip(&pooled.sizes)
        .map(|(s, &len)| s / len as f64)
        .collect();
    for i in 0..k {
        for j in i + 1..k {
            let diff = (means[i] - means[j]).abs();
            let b = 1.0 / pooled.sizes[i] as f64 + 1.0 / pooled.sizes[j] as f64;
            let var = s2 * b * d;
            let pv = if diff == 0.0 {
                1.0
            } else if var <= 0.0 {
                0.0
            } else {
                2.0 * t_dist.sf(diff / var.sqrt())
            };
            p[i][j] = pv;
            p[j][i] = pv;
        }
    }
    Ok(PosthocMatrix { p })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationResult {
    pub rho: f64,
    pub p: f64,
    pub n: usize,
}

impl CorrelationResult {
    pub fn significant(&self) -> bool {
        self.p < ALPHA
    }
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho on average ranks, with a two-sided p-value from the
/// t approximation on `n - 2` degrees of freedom.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<CorrelationResult, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 3 {
        return Err(StatsError::DegenerateInput("fewer than three pairs"));
    }
    let rho = pearson(&average_ranks(xs).0, &average_ranks(ys).0).ok_or(
        StatsError::DegenerateInput("zero variance; rho is undefined"),
    )?;
    let df = (n - 2) as f64;
    let p = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * (df / ((1.0 + rho) * (1.0 - rho))).sqrt();
        2.0 * StudentsT::new(0.0, 1.0, df).expect("df > 0").sf(t.abs())
    };
    Ok(CorrelationResult { rho, p, n })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EffectSize {
    Negligible,
    Small,
    Medium,
    Large,
}

impl EffectSize {
    pub fn of_epsilon_sq(e: f64) -> Self {
        match e {
            e if e < 0.01 => EffectSize::Negligible,
            e if e < 0.06 => EffectSize::Small,
            e if e < 0.14 => EffectSize::Medium,
            _ => EffectSize::Large,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EffectSize::Negligible => "negligible",
            EffectSize::Small => "small",
            EffectSize::Medium => "medium",
            EffectSize::Large => "large",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CorrelationStrength {
    VeryWeak,
    Weak,
    Moderate,
    Strong,
    VeryStrong,
}

impl CorrelationStrength {
    pub fn of_rho(rho: f64) -> Self {
        match rho.abs() {
            r if r < 0.2 => CorrelationStrength::VeryWeak,
            r if r < 0.4 => CorrelationStrength::Weak,
            r if r < 0.6 => CorrelationStrength::Moderate,
            r if r < 0.8 => CorrelationStrength::Strong,
            _ => CorrelationStrength::VeryStrong,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CorrelationStrength::VeryWeak => "very weak",
            CorrelationStrength::Weak => "weak",
            CorrelationStrength::Moderate => "moderate",
            CorrelationStrength::Strong => "strong",
            CorrelationStrength::VeryStrong => "very strong",
        }
    }
}

/// A cell value with a trailing `*` when significant at [`ALPHA`].
pub fn starred(value: f64, p: f64) -> String {
    if p < ALPHA {
        format!("{value:.4}*")
    } else {
        format!("{value:.4}")
    }
}

/// Counts identifiers and file names in raw issue text.
#[derive(Debug, Clone)]
pub struct IdentifierCounter {
    patterns: Vec<Regex>,
}

pub const CAMEL_CASE: &str = r"\b(?:[a-z][a-z0-9]*|[A-Z][a-z0-9]+)(?:[A-Z][a-zA-Z0-9]*)+\b";
pub const CALL_FORM: &str = r"\b[A-Za-z_][A-Za-z0-9_]*\(\)";

impl IdentifierCounter {
    pub fn new(filter: &ExtensionFilter) -> Self {
        let exts: Vec<String> = filter.allowed().map(regex::escape).collect();
        let file = format!(r"[A-Za-z0-9_\-]+\.(?:{})\b", exts.join("|"));
        Self::from_patterns([CAMEL_CASE, CALL_FORM, file.as_str()]).expect("built-in patterns")
    }

    pub fn from_patterns<I, S>(patterns: I) -> Result<Self, regex::Error>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let patterns = patterns
            .into_iter()
            .map(|p| Regex::new(p.as_ref()))
            .collect::<Result<_, _>>()?;
        Ok(IdentifierCounter { patterns })
    }

    /// Matches of all patterns, overlapping ones resolved leftmost-longest.
    pub fn count(&self, text: &str) -> usize {
        let mut spans: Vec<(usize, usize)> = self
            .patterns
            .iter()
            .flat_map(|re| re.find_iter(text).map(|m| (m.start(), m.end())))
            .collect();
        spans.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        let mut count = 0;
        let mut covered = 0;
        for (start, end) in spans {
            if start >= covered {
                count += 1;
                covered = end;
            }
        }
        count
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GroupingMode {
    /// One group per category.
    Isolate,
    /// Per category, every row except that category's.
    Holdout,
}

impl GroupingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            GroupingMode::Isolate => "isolate",
            GroupingMode::Holdout => "holdout",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricComparison {
    pub metric: String,
    pub categories: Vec<TypeCategory>,
    pub test: GroupTestResult,
    pub posthoc: PosthocMatrix,
}

/// Metric columns entering the group tests: hit@k is excluded.
pub fn is_tested_metric(name: &str) -> bool {
    !name.starts_with("hit@")
}

pub type SkippedMetric = (String, StatsError);

/// Runs a Kruskal-Wallis test and Conover post-hoc per metric over
/// `rows` of `(category, metric values)`. Metrics failing with a
/// degenerate input are reported in the second list.
pub fn holdout_compare(
    rows: &[(TypeCategory, BTreeMap<String, f64>)],
    categories: &[TypeCategory],
    mode: GroupingMode,
) -> Result<(Vec<MetricComparison>, Vec<SkippedMetric>), StatsError> {
    let present: Vec<TypeCategory> = categories
        .iter()
        .copied()
        .filter(|c| rows.iter().any(|(rc, _)| rc == c))
        .collect();
    if present.len() < 2 {
        return Err(StatsError::InsufficientGroups);
    }
    let metrics: Vec<&String> = rows
        .first()
        .map(|(_, m)| m.keys().filter(|k| is_tested_metric(k)).collect())
        .unwrap_or_default();
    let mut done = Vec::new();
    let mut skipped = Vec::new();
    for metric in metrics {
        let groups: Vec<Vec<f64>> = present
            .iter()
            .map(|&c| {
                rows.iter()
                    .filter(|(rc, _)| match mode {
                        GroupingMode::Isolate => *rc == c,
                        GroupingMode::Holdout => *rc != c && present.contains(rc),
                    })
                    .filter_map(|(_, m)| m.get(metric).copied())
                    .collect()
            })
            .collect();
        let result = kruskal_wallis(&groups).and_then(|t| Ok((t, conover_posthoc(&groups)?)));
        match result {
            Ok((test, posthoc)) => done.push(MetricComparison {
                metric: metric.clone(),
                categories: present.clone(),
                test,
                posthoc,
            }),
            Err(e) => skipped.push((metric.clone(), e)),
        }
    }
    Ok((done, skipped))
}

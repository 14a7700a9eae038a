use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use issueloc::config::{MarkupSetting, RunConfig, SplitChoice};
use issueloc::pipeline::{self, CliError};

#[derive(Parser, Debug)]
#[command(
    name = "issueloc",
    version,
    about = "Issue-to-file localisation: mining, datasets, ranking and analysis"
)]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, short = 'c', global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Overrides {
    /// Git repository to mine.
    #[arg(long, global = true)]
    repo: Option<PathBuf>,
    /// Branch or ref whose history is mined.
    #[arg(long, global = true)]
    head: Option<String>,
    /// Issue key prefix, e.g. AVRO.
    #[arg(long, global = true)]
    prefix: Option<String>,
    /// Issue corpus (JSONL).
    #[arg(long, global = true)]
    issues: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, short = 'j', global = true)]
    jobs: Option<usize>,
    /// Comma-separated source extensions.
    #[arg(long, global = true, value_delimiter = ',')]
    extensions: Option<Vec<String>>,
    /// Comma-separated model names, or `all`.
    #[arg(long, global = true, value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// BM25 term-frequency saturation.
    #[arg(long, global = true)]
    k1: Option<f64>,
    /// BM25 length normalisation.
    #[arg(long, global = true)]
    b: Option<f64>,
    /// BM25+ lower bound.
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Latent dimensions for LSI.
    #[arg(long, global = true)]
    lsi_dims: Option<usize>,
    /// BM25F weight of the file-name field.
    #[arg(long, global = true)]
    name_weight: Option<f64>,
    /// BM25F weight of the content field.
    #[arg(long, global = true)]
    content_weight: Option<f64>,
    #[arg(long, global = true, value_enum)]
    markup: Option<MarkupSetting>,
    #[arg(long, global = true)]
    lowercase: Option<bool>,
    #[arg(long, global = true)]
    stem: Option<bool>,
    #[arg(long, global = true)]
    subtoken_split: Option<bool>,
    /// Share of samples, oldest first, in the validation part.
    #[arg(long, global = true)]
    split_ratio: Option<f64>,
    #[arg(long, global = true, value_enum)]
    split: Option<SplitChoice>,
    /// Ranking entries kept per issue; 0 keeps all.
    #[arg(long, global = true)]
    rankings_top: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mine and refine issue-commit links.
    Mine,
    /// Build the labelled dataset from mined links.
    Build {
        #[arg(long)]
        links: Option<PathBuf>,
    },
    /// Rank snapshots and compute metrics on a temporal split.
    Evaluate {
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Rank the files of one commit against free issue text.
    Rank {
        #[arg(long)]
        commit: String,
        #[arg(long)]
        issue_file: PathBuf,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Statistical tests over per-issue metrics.
    Analyze {
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Tables across models and projects.
    Report {
        /// Additional project as NAME=OUTPUT_DIR; repeatable.
        #[arg(long = "project", value_parser = parse_project)]
        projects: Vec<(String, PathBuf)>,
        /// Model for the per-project table.
        #[arg(long, default_value = "bm25")]
        model: String,
    },
}

fn parse_project(s: &str) -> Result<(String, PathBuf), String> {
    let (name, dir) = s.split_once('=').ok_or("expected NAME=DIR")?;
    Ok((name.to_owned(), PathBuf::from(dir)))
}

fn apply(cfg: &mut RunConfig, o: Overrides) {
    macro_rules! set {
        ($($field:expr => $value:expr),* $(,)?) => {
            $(if let Some(v) = $value { $field = v; })*
        };
    }
    set! {
        cfg.repo_path => o.repo,
        cfg.head_ref => o.head,
        cfg.project_prefix => o.prefix,
        cfg.issues_path => o.issues,
        cfg.output_dir => o.out,
        cfg.parallelism => o.jobs,
        cfg.extensions => o.extensions,
        cfg.model.models => o.models,
        cfg.model.k1 => o.k1,
        cfg.model.b => o.b,
        cfg.model.delta => o.delta,
        cfg.model.lsi_dims => o.lsi_dims,
        cfg.model.name_weight => o.name_weight,
        cfg.model.content_weight => o.content_weight,
        cfg.preprocess.markup => o.markup,
        cfg.preprocess.lowercase => o.lowercase,
        cfg.preprocess.stem => o.stem,
        cfg.preprocess.subtoken_split => o.subtoken_split,
        cfg.split_ratio => o.split_ratio,
        cfg.split => o.split,
        cfg.rankings_top => o.rankings_top,
    }
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).unwrap_or_default()
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    apply(&mut cfg, cli.overrides);
    match cli.command {
        Command::Mine => println!("{}", json(&pipeline::cmd_mine(&cfg)?)),
        Command::Build { links } => {
            println!("{}", json(&pipeline::cmd_build(&cfg, links.as_deref())?))
        }
        Command::Evaluate { dataset } => {
            let e = pipeline::cmd_evaluate(&cfg, dataset.as_deref())?;
            println!("evaluated {} issues", e.evaluated);
            for (kind, a) in &e.aggregates {
                println!("{kind}: MRR {:.4}  R-Precision {:.4}", a.mrr, a.r_precision);
            }
        }
        Command::Rank {
            commit,
            issue_file,
            top,
        } => {
            print!("{}", pipeline::cmd_rank(&cfg, &commit, &issue_file, top)?);
        }
        Command::Analyze { metrics } => println!(
            "{}",
            json(&pipeline::cmd_analyze(&cfg, metrics.as_deref())?)
        ),
        Command::Report { projects, model } => {
            print!("{}", pipeline::cmd_report(&cfg, &projects, &model)?.text);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! Repository access through the `git` executable.

use std::ffi::OsStr;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use issueloc_core::dataset::{FileChange, RepoReader};
use issueloc_core::graph::{CommitGraph, CommitId, CommitRecord, GraphError};

/// Overrides the git executable used for every subprocess.
pub const GIT_ENV: &str = "ISSUELOC_GIT";

#[derive(Debug, thiserror::Error)]
pub enum GitError {
    #[error("not a git repository: {0}")]
    RepoNotFound(PathBuf),
    #[error("reference does not resolve to a commit: {0}")]
    RefNotFound(String),
    #[error("unknown commit: {0}")]
    UnknownCommit(String),
    #[error("could not run {program}: {source}")]
    Spawn {
        program: String,
        source: std::io::Error,
    },
    #[error("git {args} failed: {stderr}")]
    Failed { args: String, stderr: String },
    #[error("unexpected git output: {0}")]
    Parse(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A local repository driven through `git` subprocesses. Every call spawns
/// its own process, so one value can be shared across threads.
#[derive(Debug, Clone)]
pub struct GitRepo {
    path: PathBuf,
    program: String,
}

impl GitRepo {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, GitError> {
        let path = path.as_ref().to_path_buf();
        let program = std::env::var(GIT_ENV).unwrap_or_else(|_| "git".to_owned());
        let repo = GitRepo { path, program };
        if !repo.path.is_dir() {
            return Err(GitError::RepoNotFound(repo.path));
        }
        match repo.run(["rev-parse", "--git-dir"]) {
            Ok(_) => Ok(repo),
            Err(GitError::Failed { .. }) => Err(GitError::RepoNotFound(repo.path)),
            Err(e) => Err(e),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn command<I, S>(&self, args: I) -> Command
    where
        I: IntoIterator<Item = S>,
        S: AsRef<OsStr>,
    {
        let mut cmd = Command::new(&self.program);
        cmd.arg("-C").arg(&self.path).args(args);
        cmd.env("GIT_TERMINAL_PROMPT", "0");
        cmd
    }

    fn run<I, S>(&self, args: I) -> Result<Vec<u8>, GitError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<OsStr>,
    {
        let args: Vec<S> = args.into_iter().collect();
        let out = self
            .command(&args)
            .stdin(Stdio::null())
            .output()
            .map_err(|source| GitError::Spawn {
                program: self.program.clone(),
                source,
            })?;
        if !out.status.success() {
            return Err(GitError::Failed {
                args: args
                    .iter()
                    .map(|a| a.as_ref().to_string_lossy().into_owned())
                    .collect::<Vec<_>>()
                    .join(" "),
                stderr: String::from_utf8_lossy(&out.stderr).trim().to_owned(),
            });
        }
        Ok(out.stdout)
    }

    /// Full commit hash of `reference`.
    pub fn resolve(&self, reference: &str) -> Result<CommitId, GitError> {
        let spec = format!("{reference}^{{commit}}");
        let out = self
            .run([
                "rev-parse",
                "--verify",
                "--quiet",
                "--end-of-options",
                &spec,
            ])
            .map_err(|e| match e {
                GitError::Failed { .. } => GitError::RefNotFound(reference.to_owned()),
                e => e,
            })?;
        let hash = String::from_utf8_lossy(&out).trim().to_owned();
        Ok(CommitId::new(hash)?)
    }

    /// Every commit reachable from `head_ref`, with summaries cut to the
    /// first message line.
    pub fn load_history(&self, head_ref: &str) -> Result<CommitGraph, GitError> {
        let head = self.resolve(head_ref)?;
        let out = self.run(["log", "-z", "--format=%H%x1f%P%x1f%at%x1f%B", head.as_str()])?;
        let text = String::from_utf8_lossy(&out);
        let mut records = Vec::new();
        for entry in text.split('\0').filter(|e| !e.trim().is_empty()) {
            records.push(parse_log_entry(entry.trim_start_matches('\n'))?);
        }
        Ok(CommitGraph::new(records, &head)?)
    }

    /// `(path, blob id)` for every regular file in the tree of `commit`.
    pub fn tree_blobs(&self, commit: &CommitId) -> Result<Vec<(String, String)>, GitError> {
        let out = self
            .run(["ls-tree", "-r", "-z", "--full-tree", commit.as_str()])
            .map_err(|e| unknown_commit(e, commit))?;
        let mut files = Vec::new();
        for entry in out.split(|&b| b == 0).filter(|e| !e.is_empty()) {
            let entry = String::from_utf8_lossy(entry);
            let (meta, path) = entry
                .split_once('\t')
                .ok_or_else(|| GitError::Parse(entry.to_string()))?;
            let mut meta = meta.split(' ');
            let (_, kind, id) = (meta.next(), meta.next(), meta.next());
            if let (Some("blob"), Some(id)) = (kind, id) {
                files.push((path.to_owned(), id.to_owned()));
            }
        }
        Ok(files)
    }

    /// Contents of the given blobs, in order, read through one
    /// `cat-file --batch` process.
    pub fn read_blobs(&self, ids: &[String]) -> Result<Vec<Vec<u8>>, GitError> {
        if ids.is_empty() {
            return Ok(Vec::new());
        }
        let mut child = self
            .command(["cat-file", "--batch"])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|source| GitError::Spawn {
                program: self.program.clone(),
                source,
            })?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let request: String = ids.iter().map(|id| format!("{id}\n")).collect();
        let writer = std::thread::spawn(move || stdin.write_all(request.as_bytes()));

        let mut reader = BufReader::new(child.stdout.take().expect("piped stdout"));
        let mut blobs = Vec::with_capacity(ids.len());
        let mut header = String::new();
        for id in ids {
            header.clear();
            reader
                .read_line(&mut header)
                .map_err(|e| GitError::Parse(e.to_string()))?;
            let fields: Vec<&str> = header.trim_end().split(' ').collect();
            let size = match fields.as_slice() {
                [_, "blob", size] => size
                    .parse::<usize>()
                    .map_err(|_| GitError::Parse(header.clone()))?,
                _ => {
                    return Err(GitError::Parse(format!(
                        "object {id}: {}",
                        header.trim_end()
                    )))
                }
            };
            let mut content = vec![0; size + 1];
            reader
                .read_exact(&mut content)
                .map_err(|e| GitError::Parse(e.to_string()))?;
            content.pop();
            blobs.push(content);
        }
        drop(reader);
        writer
            .join()
            .expect("writer thread")
            .map_err(|e| GitError::Parse(e.to_string()))?;
        let _ = child.wait();
        Ok(blobs)
    }

    /// Source files in the tree of `commit`, with their contents.
    pub fn read_tree_files<F>(
        &self,
        commit: &CommitId,
        keep: F,
    ) -> Result<Vec<(String, Vec<u8>)>, GitError>
    where
        F: Fn(&str) -> bool,
    {
        let (paths, ids): (Vec<String>, Vec<String>) = self
            .tree_blobs(commit)?
            .into_iter()
            .filter(|(p, _)| keep(p))
            .unzip();
        let blobs = self.read_blobs(&ids)?;
        Ok(paths.into_iter().zip(blobs).collect())
    }
}

fn unknown_commit(e: GitError, commit: &CommitId) -> GitError {
    match e {
        GitError::Failed { .. } => GitError::UnknownCommit(commit.to_string()),
        e => e,
    }
}

fn parse_log_entry(entry: &str) -> Result<CommitRecord, GitError> {
    let mut fields = entry.splitn(4, '\x1f');
    let (Some(hash), Some(parents), Some(time), Some(message)) =
        (fields.next(), fields.next(), fields.next(), fields.next())
    else {
        return Err(GitError::Parse(entry.chars().take(80).collect()));
    };
    let parents = parents
        .split_whitespace()
        .map(CommitId::new)
        .collect::<Result<Vec<_>, _>>()?;
    let author_time = time
        .trim()
        .parse()
        .map_err(|_| GitError::Parse(format!("author time {time:?}")))?;
    Ok(CommitRecord {
        id: CommitId::new(hash.trim())?,
        parents,
        summary: message.lines().next().unwrap_or("").to_owned(),
        author_time,
    })
}

fn parse_name_status(out: &[u8]) -> Result<Vec<FileChange>, GitError> {
    let mut fields = out
        .split(|&b| b == 0)
        .map(|f| String::from_utf8_lossy(f).into_owned());
    let mut changes = Vec::new();
    while let Some(status) = fields.next() {
        if status.is_empty() {
            continue;
        }
        let mut path = || {
            fields
                .next()
                .ok_or_else(|| GitError::Parse(format!("missing path after {status}")))
        };
        let change = match status.as_bytes()[0] {
            b'A' => FileChange::Added(path()?),
            b'D' => FileChange::Deleted(path()?),
            b'M' | b'T' => FileChange::Modified(path()?),
            b'R' => {
                let from = path()?;
                FileChange::Renamed { from, to: path()? }
            }
            b'C' => {
                let _source = path()?;
                FileChange::Added(path()?)
            }
            _ => return Err(GitError::Parse(format!("diff status {status}"))),
        };
        changes.push(change);
    }
    Ok(changes)
}

impl RepoReader for GitRepo {
    type Error = GitError;

    fn list_files(&self, commit: &CommitId) -> Result<Vec<String>, GitError> {
        Ok(self
            .tree_blobs(commit)?
            .into_iter()
            .map(|(p, _)| p)
            .collect())
    }

    fn diff(
        &self,
        parent: Option<&CommitId>,
        commit: &CommitId,
    ) -> Result<Vec<FileChange>, GitError> {
        let mut args = vec![
            "diff-tree",
            "-r",
            "-z",
            "-M",
            "--name-status",
            "--no-commit-id",
        ];
        match parent {
            Some(p) => args.push(p.as_str()),
            None => args.push("--root"),
        }
        args.push(commit.as_str());
        let out = self.run(&args).map_err(|e| unknown_commit(e, commit))?;
        parse_name_status(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_entry_parsing() {
        let r = parse_log_entry("abc\x1fp1 p2\x1f42\x1fFix X-1\n\nbody\n").unwrap();
        assert_eq!(r.id.as_str(), "abc");
        assert_eq!(r.parents.len(), 2);
        assert_eq!(r.author_time, 42);
        assert_eq!(r.summary, "Fix X-1");
        assert!(parse_log_entry("abc\x1f").is_err());
    }

    #[test]
    fn name_status_parsing() {
        let raw = b"M\0a.java\0R087\0old.py\0new.py\0A\0n.c\0D\0gone.h\0";
        assert_eq!(
            parse_name_status(raw).unwrap(),
            vec![
                FileChange::Modified("a.java".into()),
                FileChange::Renamed {
                    from: "old.py".into(),
                    to: "new.py".into()
                },
                FileChange::Added("n.c".into()),
                FileChange::Deleted("gone.h".into()),
            ]
        );
        assert!(parse_name_status(b"Z\0x\0").is_err());
    }
}

//! Scripted git repositories for tests. Commits are written with plumbing
//! commands and fixed identities and dates, so hashes are reproducible.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

pub const BASE_TIME: i64 = 1_600_000_000;

pub struct RepoBuilder {
    dir: tempfile::TempDir,
    index: PathBuf,
    trees: BTreeMap<String, BTreeMap<String, String>>,
    hashes: BTreeMap<String, String>,
    clock: i64,
}

/// `None` deletes the path.
pub type Change<'a> = (&'a str, Option<&'a str>);

impl RepoBuilder {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().expect("temp dir");
        let index = dir.path().join("fixture-index");
        let b = RepoBuilder {
            dir,
            index,
            trees: BTreeMap::new(),
            hashes: BTreeMap::new(),
            clock: 0,
        };
        b.git(&["init", "-q"], None);
        b
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    fn git(&self, args: &[&str], stdin: Option<&str>) -> String {
        let when = format!("{} +0000", BASE_TIME + self.clock * 60);
        let mut cmd = Command::new("git");
        cmd.arg("-C")
            .arg(self.dir.path())
            .args(args)
            .env("GIT_CONFIG_GLOBAL", "/dev/null")
            .env("GIT_CONFIG_NOSYSTEM", "1")
            .env("GIT_INDEX_FILE", &self.index)
            .env("GIT_AUTHOR_NAME", "Fixture Author")
            .env("GIT_AUTHOR_EMAIL", "author@example.org")
            .env("GIT_COMMITTER_NAME", "Fixture Committer")
            .env("GIT_COMMITTER_EMAIL", "committer@example.org")
            .env("GIT_AUTHOR_DATE", &when)
            .env("GIT_COMMITTER_DATE", &when)
            .stdin(if stdin.is_some() {
                Stdio::piped()
            } else {
                Stdio::null()
            })
            .stdout(Stdio::piped())
            .stderr(Stdio::piped());
        let mut child = cmd.spawn().expect("git on PATH");
        if let Some(input) = stdin {
            child
                .stdin
                .take()
                .unwrap()
                .write_all(input.as_bytes())
                .unwrap();
        }
        let out = child.wait_with_output().unwrap();
        assert!(
            out.status.success(),
            "git {args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap().trim().to_owned()
    }

    /// Records commit `label` whose tree is the first parent's tree with
    /// `changes` applied. Returns the commit hash.
    pub fn commit(
        &mut self,
        label: &str,
        message: &str,
        parents: &[&str],
        changes: &[Change],
    ) -> String {
        self.clock += 1;
        let mut tree = parents
            .first()
            .map(|p| self.trees[*p].clone())
            .unwrap_or_default();
        for (path, content) in changes {
            match content {
                Some(c) => tree.insert((*path).to_owned(), (*c).to_owned()),
                None => tree.remove(*path),
            };
        }
        let mut listing = String::new();
        for (path, content) in &tree {
            let blob = self.git(&["hash-object", "-w", "--stdin"], Some(content));
            listing.push_str(&format!("100644 {blob}\t{path}\n"));
        }
        self.git(&["read-tree", "--empty"], None);
        self.git(&["update-index", "--index-info"], Some(&listing));
        let tree_id = self.git(&["write-tree"], None);
        let mut args = vec![
            "commit-tree".to_owned(),
            tree_id,
            "-m".to_owned(),
            message.to_owned(),
        ];
        for p in parents {
            args.push("-p".to_owned());
            args.push(self.hashes[*p].clone());
        }
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let hash = self.git(&args, None);
        self.trees.insert(label.to_owned(), tree);
        self.hashes.insert(label.to_owned(), hash.clone());
        hash
    }

    /// Points `main` (and HEAD) at `label`.
    pub fn set_head(&self, label: &str) {
        self.git(
            &["update-ref", "refs/heads/main", &self.hashes[label]],
            None,
        );
        self.git(&["symbolic-ref", "HEAD", "refs/heads/main"], None);
    }

    pub fn hash(&self, label: &str) -> &str {
        &self.hashes[label]
    }

    /// Hash to label.
    pub fn labels(&self) -> BTreeMap<String, String> {
        self.hashes
            .iter()
            .map(|(l, h)| (h.clone(), l.clone()))
            .collect()
    }
}

fn file(name: &str) -> String {
    format!("// {name}\n")
}

/// Mainline c11..c16 with a two-commit branch c21, c22 forked at c12 and
/// merged as c15.
pub fn forked_mainline() -> RepoBuilder {
    let mut b = RepoBuilder::new();
    let spec: [(&str, &[&str]); 8] = [
        ("c11", &[]),
        ("c12", &["c11"]),
        ("c13", &["c12"]),
        ("c21", &["c12"]),
        ("c14", &["c13"]),
        ("c22", &["c21"]),
        ("c15", &["c14", "c22"]),
        ("c16", &["c15"]),
    ];
    for (label, parents) in spec {
        let path = format!("{label}.java");
        b.commit(
            label,
            &format!("commit {label}"),
            parents,
            &[(&path, Some(&file(label)))],
        );
    }
    b.set_head("c16");
    b
}

/// Commits 1..7 and merges M1 (3 + 5), M2 (5 + 7), M3 (4 + 6).
pub fn three_merges() -> RepoBuilder {
    let mut b = RepoBuilder::new();
    let spec: [(&str, &[&str]); 10] = [
        ("1", &[]),
        ("2", &["1"]),
        ("3", &["2"]),
        ("5", &["2"]),
        ("7", &["2"]),
        ("M1", &["3", "5"]),
        ("4", &["M1"]),
        ("M2", &["5", "7"]),
        ("6", &["M2"]),
        ("M3", &["4", "6"]),
    ];
    for (label, parents) in spec {
        let path = format!("f{label}.java");
        b.commit(
            label,
            &format!("commit {label}"),
            parents,
            &[(&path, Some(&file(label)))],
        );
    }
    b.set_head("M3");
    b
}

const PARSER: &str = "package demo;\n\n/** Parses tokens into an expression tree. */\npublic class Parser {\n    private final Lexer lexer;\n\n    public Parser(Lexer lexer) {\n        this.lexer = lexer;\n    }\n\n    public Expression parseExpression() {\n        Token token = lexer.nextToken();\n        return Expression.of(token);\n    }\n}\n";
const PARSER_FIXED: &str = "package demo;\n\n/** Parses tokens into an expression tree. */\npublic class Parser {\n    private final Lexer lexer;\n\n    public Parser(Lexer lexer) {\n        this.lexer = lexer;\n    }\n\n    public Expression parseExpression() {\n        Token token = lexer.nextToken();\n        if (token == null) {\n            return Expression.empty();\n        }\n        return Expression.of(token);\n    }\n}\n";
const PARSER_LINES: &str = "package demo;\n\n/** Parses tokens into an expression tree. */\npublic class Parser {\n    private final Lexer lexer;\n    private int line;\n\n    public Parser(Lexer lexer) {\n        this.lexer = lexer;\n    }\n\n    public Expression parseExpression() {\n        Token token = lexer.nextToken();\n        line = token == null ? line : token.line();\n        if (token == null) {\n            return Expression.empty();\n        }\n        return Expression.of(token);\n    }\n}\n";
const LEXER: &str = "package demo;\n\n/** Splits source text into tokens. */\npublic class Lexer {\n    private final String input;\n    private int offset;\n\n    public Lexer(String input) {\n        this.input = input;\n    }\n\n    public Token nextToken() {\n        if (offset >= input.length()) {\n            return null;\n        }\n        char c = input.charAt(offset++);\n        return new Token(c);\n    }\n}\n";
const LEXER_UNICODE: &str = "package demo;\n\n/** Splits source text into tokens, reading unicode code points. */\npublic class Lexer {\n    private final String input;\n    private int offset;\n\n    public Lexer(String input) {\n        this.input = input;\n    }\n\n    public Token nextToken() {\n        if (offset >= input.length()) {\n            return null;\n        }\n        int codePoint = input.codePointAt(offset);\n        offset += Character.charCount(codePoint);\n        return new Token(codePoint);\n    }\n}\n";
const LEXER_TESTED: &str = "package demo;\n\n/** Splits source text into tokens, reading unicode code points. */\npublic class Lexer {\n    private final String input;\n    private int offset;\n\n    public Lexer(String input) {\n        this.input = input;\n    }\n\n    public boolean atEnd() {\n        return offset >= input.length();\n    }\n\n    public Token nextToken() {\n        if (atEnd()) {\n            return null;\n        }\n        int codePoint = input.codePointAt(offset);\n        offset += Character.charCount(codePoint);\n        return new Token(codePoint);\n    }\n}\n";
const LEXER_TEST: &str = "package demo;\n\npublic class LexerTest {\n    public void readsUnicode() {\n        Lexer lexer = new Lexer(\"\\u00e9\");\n        assert lexer.nextToken() != null;\n        assert lexer.atEnd();\n    }\n}\n";
const LEXER_TEST_MERGED: &str = "package demo;\n\npublic class LexerTest {\n    public void readsUnicode() {\n        Lexer lexer = new Lexer(\"\\u00e9\");\n        assert lexer.nextToken() != null;\n        assert lexer.atEnd();\n    }\n\n    public void appStarts() {\n        App.main(new String[0]);\n    }\n}\n";
const MAIN: &str = "package demo;\n\npublic class Main {\n    public static void main(String[] args) {\n        Parser parser = new Parser(new Lexer(args[0]));\n        System.out.println(parser.parseExpression());\n    }\n}\n";
const MAIN_CACHED: &str = "package demo;\n\npublic class Main {\n    private static final Cache CACHE = new Cache();\n\n    public static void main(String[] args) {\n        Parser parser = new Parser(new Lexer(args[0]));\n        System.out.println(CACHE.computeIfAbsent(args[0], k -> parser.parseExpression()));\n    }\n}\n";
const MAIN_VERSION: &str = "package demo;\n\npublic class Main {\n    private static final Cache CACHE = new Cache();\n    static final String VERSION = \"1.0\";\n\n    public static void main(String[] args) {\n        if (args.length == 0) {\n            System.out.println(\"version \" + VERSION);\n            return;\n        }\n        Parser parser = new Parser(new Lexer(args[0]));\n        System.out.println(CACHE.computeIfAbsent(args[0], k -> parser.parseExpression()));\n    }\n}\n";
const APP: &str = "package demo;\n\npublic class App {\n    private static final Cache CACHE = new Cache();\n    static final String VERSION = \"1.0\";\n\n    public static void main(String[] args) {\n        if (args.length == 0) {\n            System.out.println(\"version \" + VERSION);\n            return;\n        }\n        Parser parser = new Parser(new Lexer(args[0]));\n        System.out.println(CACHE.computeIfAbsent(args[0], k -> parser.parseExpression()));\n    }\n}\n";
const APP_BUMPED: &str = "package demo;\n\npublic class App {\n    private static final Cache CACHE = new Cache();\n    static final String VERSION = \"1.1\";\n\n    public static void main(String[] args) {\n        if (args.length == 0) {\n            System.out.println(\"version \" + VERSION);\n            return;\n        }\n        Parser parser = new Parser(new Lexer(args[0]));\n        System.out.println(CACHE.computeIfAbsent(args[0], k -> parser.parseExpression()));\n    }\n}\n";
const CACHE: &str = "package demo;\n\nimport java.util.HashMap;\nimport java.util.Map;\n\n/** Memoizes parsed expressions by source text. */\npublic class Cache extends HashMap<String, Expression> {\n}\n";
const CACHE_BOUNDED: &str = "package demo;\n\nimport java.util.LinkedHashMap;\nimport java.util.Map;\n\n/** Memoizes parsed expressions by source text, evicting the eldest entry. */\npublic class Cache extends LinkedHashMap<String, Expression> {\n    @Override\n    protected boolean removeEldestEntry(Map.Entry<String, Expression> eldest) {\n        return size() > 64;\n    }\n}\n";
const README: &str = "# demo\n\nA tiny expression parser.\n";
const README_USAGE: &str = "# demo\n\nA tiny expression parser.\n\nRun `java demo.Main EXPR`.\n";

/// The synthetic project used for the end-to-end tests. Expected outcomes:
///
/// | key     | mined commits | outcome                                   |
/// |---------|---------------|-------------------------------------------|
/// | DEMO-1  | c2            | sample c2, snapshot c1, {Parser}          |
/// | DEMO-2  | c3, c4        | sample c4, snapshot c3, {Cache, Main}     |
/// | DEMO-3  | c5            | linked, no source change, no sample       |
/// | DEMO-4  | f1, f2, m     | merge link discarded; sample f1, {Lexer}  |
/// | DEMO-5  | c6            | sample c6, snapshot c5, {Main}            |
/// | DEMO-6  | m2            | sample m2, snapshot c6, {Main, Parser}, flagged |
/// | DEMO-7  | f1, c6        | parallel commits: path requirement        |
/// | DEMO-8  | c7            | not in the issue corpus                   |
/// | DEMO-10 | m             | orphaned by merge disambiguation          |
pub fn demo_project() -> RepoBuilder {
    let mut b = RepoBuilder::new();
    b.commit(
        "c1",
        "Initial import",
        &[],
        &[
            ("src/Parser.java", Some(PARSER)),
            ("src/Lexer.java", Some(LEXER)),
            ("src/Main.java", Some(MAIN)),
            ("README.md", Some(README)),
        ],
    );
    b.commit(
        "c2",
        "DEMO-1 fix parser crash on empty input",
        &["c1"],
        &[("src/Parser.java", Some(PARSER_FIXED))],
    );
    b.commit(
        "c3",
        "DEMO-2 add expression cache",
        &["c2"],
        &[
            ("src/Cache.java", Some(CACHE)),
            ("docs/notes.txt", Some("cache notes\n")),
        ],
    );
    b.commit(
        "c4",
        "DEMO-2 wire cache into main",
        &["c3"],
        &[
            ("src/Cache.java", Some(CACHE_BOUNDED)),
            ("src/Main.java", Some(MAIN_CACHED)),
        ],
    );
    b.commit(
        "c5",
        "DEMO-3 document usage",
        &["c4"],
        &[("README.md", Some(README_USAGE))],
    );
    b.commit(
        "f1",
        "DEMO-4 lexer reads unicode code points (DEMO-7)",
        &["c5"],
        &[("src/Lexer.java", Some(LEXER_UNICODE))],
    );
    b.commit(
        "f2",
        "DEMO-4 lexer tests",
        &["f1"],
        &[
            ("src/Lexer.java", Some(LEXER_TESTED)),
            ("test/LexerTest.java", Some(LEXER_TEST)),
        ],
    );
    b.commit(
        "c6",
        "DEMO-5 DEMO-7 print version without arguments",
        &["c5"],
        &[("src/Main.java", Some(MAIN_VERSION))],
    );
    b.commit(
        "m",
        "Merge unicode lexer for DEMO-4 and DEMO-10",
        &["c6", "f2"],
        &[
            ("src/Lexer.java", Some(LEXER_TESTED)),
            ("test/LexerTest.java", Some(LEXER_TEST)),
        ],
    );
    b.commit(
        "r1",
        "Rename main class",
        &["c6"],
        &[("src/Main.java", None), ("src/App.java", Some(APP))],
    );
    b.commit(
        "r2",
        "Parser tracks line numbers",
        &["r1"],
        &[("src/Parser.java", Some(PARSER_LINES))],
    );
    b.commit(
        "m2",
        "Merge refactoring, closes DEMO-6",
        &["m", "r2"],
        &[
            ("src/Main.java", None),
            ("src/App.java", Some(APP)),
            ("src/Parser.java", Some(PARSER_LINES)),
            ("test/LexerTest.java", Some(LEXER_TEST_MERGED)),
        ],
    );
    b.commit(
        "c7",
        "DEMO-8 bump version",
        &["m2"],
        &[("src/App.java", Some(APP_BUMPED))],
    );
    b.set_head("c7");
    b
}

pub const DEMO_ISSUES: &str = r#"{"key":"DEMO-1","type":"Bug","title":"Parser crashes on empty input","body":"Calling parseExpression on an empty string throws a NullPointerException in the parser.","created":"2020-09-01T10:00:00Z"}
{"key":"DEMO-2","type":"New Feature","title":"Cache parsed expressions","body":"Main should reuse the parsed expression when the same input is given twice. An eviction bound keeps the cache small.","created":"2020-09-01T11:00:00Z"}
{"key":"DEMO-3","type":"Task","title":"Document command line usage","body":"The readme does not say how to run the program.","created":"2020-09-01T12:00:00Z"}
{"key":"DEMO-4","type":"Bug","title":"Lexer splits surrogate pairs","body":"The lexer reads char by char, so unicode code points outside the BMP become two tokens.\n{code}input.charAt(offset++){code}","created":"2020-09-02T09:00:00Z"}
{"key":"DEMO-5","type":"Improvement","title":"Print the version when no arguments are given","body":"Main fails with ArrayIndexOutOfBoundsException when args is empty; print the version instead.","created":"2020-09-02T10:00:00Z"}
{"key":"DEMO-6","type":"Improvement","title":"Rename Main to App and track line numbers in the parser","body":"Parser errors should report the line. Main is a confusing class name.","created":"2020-09-03T08:00:00Z"}
{"key":"DEMO-7","type":"Bug","title":"Version output garbles unicode","body":"Printing the version mixes lexer and main changes.","created":"2020-09-03T09:00:00Z"}
{"key":"DEMO-9","type":"Wish","title":"Support comments","body":"Never worked on.","created":"2020-09-04T09:00:00Z"}
{"key":"DEMO-10","type":"Task","title":"Merge the lexer branch","body":"Bookkeeping issue.","created":"2020-09-04T10:00:00Z"}
"#;

/// Writes the demo issue corpus and a config pointing at `repo`, returning
/// the config.
pub fn demo_config(repo: &Path, work: &Path) -> issueloc::config::RunConfig {
    let issues = work.join("issues.jsonl");
    std::fs::write(&issues, DEMO_ISSUES).unwrap();
    issueloc::config::RunConfig {
        repo_path: repo.to_owned(),
        project_prefix: "DEMO".to_owned(),
        issues_path: issues,
        output_dir: work.join("out"),
        parallelism: 2,
        split: issueloc::config::SplitChoice::All,
        ..issueloc::config::RunConfig::default()
    }
}

//! Turning issue text and source files into normalised token streams.

mod markup;
pub mod porter;

use alloc::borrow::ToOwned;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

pub use markup::{strip_jira_markup, MarkupMode};

pub const DEFAULT_MARKER_WORD: &str = "CODEBLOCKMARKER";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreprocessConfig {
    pub markup_mode: MarkupMode,
    pub lowercase: bool,
    pub stem: bool,
    pub subtoken_split: bool,
    /// Inserted for each block under [`MarkupMode::BlocksToMarker`]; must be
    /// a single alphanumeric token.
    pub marker_word: String,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            markup_mode: MarkupMode::KeepRaw,
            lowercase: true,
            stem: true,
            subtoken_split: false,
            marker_word: DEFAULT_MARKER_WORD.to_owned(),
        }
    }
}

impl PreprocessConfig {
    pub fn marker_is_valid(&self) -> bool {
        !self.marker_word.is_empty() && self.marker_word.chars().all(char::is_alphanumeric)
    }
}

/// Ordered tokens, none of them empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenStream(Vec<String>);

impl TokenStream {
    pub fn new(tokens: Vec<String>) -> Self {
        TokenStream(tokens.into_iter().filter(|t| !t.is_empty()).collect())
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, String> {
        self.0.iter()
    }
}

impl<'a> IntoIterator for &'a TokenStream {
    type Item = &'a String;
    type IntoIter = core::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl<S: Into<String>> FromIterator<S> for TokenStream {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        TokenStream::new(iter.into_iter().map(Into::into).collect())
    }
}

/// A source file as seen by the retrieval models: a file-name field and a
/// content field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub path: String,
    pub name: TokenStream,
    pub content: TokenStream,
}

/// Splits on every non-alphanumeric character.
pub fn tokenize(text: &str) -> TokenStream {
    TokenStream(
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(ToOwned::to_owned)
            .collect(),
    )
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Upper,
    Lower,
    Digit,
    Other,
}

fn class(c: char) -> CharClass {
    if c.is_uppercase() {
        CharClass::Upper
    } else if c.is_lowercase() {
        CharClass::Lower
    } else if c.is_numeric() {
        CharClass::Digit
    } else {
        CharClass::Other
    }
}

/// Splits camel-case compounds: at lower-to-upper transitions, at
/// letter/digit transitions, and inside an uppercase run before its last
/// letter when a lowercase letter follows (`parseHTTPResponse` ->
/// `parse`, `HTTP`, `Response`).
pub fn split_subtokens(token: &str) -> Vec<String> {
    let chars: Vec<char> = token.chars().collect();
    let mut parts = Vec::new();
    let mut start = 0;
    for i in 1..chars.len() {
        let prev = class(chars[i - 1]);
        let cur = class(chars[i]);
        let next = chars.get(i + 1).map(|&c| class(c));
        let letter = |c: CharClass| matches!(c, CharClass::Upper | CharClass::Lower);
        let boundary = match (prev, cur) {
            (CharClass::Lower, CharClass::Upper) => true,
            (CharClass::Upper, CharClass::Upper) => next == Some(CharClass::Lower),
            (CharClass::Digit, c) if letter(c) => true,
            (p, CharClass::Digit) if letter(p) => true,
            _ => false,
        };
        if boundary {
            parts.push(chars[start..i].iter().collect());
            start = i;
        }
    }
    if start < chars.len() {
        parts.push(chars[start..].iter().collect());
    }
    parts
}

/// Sub-token splitting, then lowercasing, then stemming, each if enabled.
pub fn normalize(stream: TokenStream, config: &PreprocessConfig) -> TokenStream {
    let mut tokens = stream.into_tokens();
    if config.subtoken_split {
        tokens = tokens.iter().flat_map(|t| split_subtokens(t)).collect();
    }
    if config.lowercase {
        for t in &mut tokens {
            *t = t.to_lowercase();
        }
    }
    if config.stem {
        for t in &mut tokens {
            *t = porter::stem(t);
        }
    }
    TokenStream::new(tokens)
}

/// Issue text is the title and body joined by a newline.
pub fn issue_text(title: &str, body: &str) -> String {
    let mut text = String::with_capacity(title.len() + body.len() + 1);
    text.push_str(title);
    text.push('\n');
    text.push_str(body);
    text
}

pub fn preprocess_issue(title: &str, body: &str, config: &PreprocessConfig) -> TokenStream {
    let text = strip_jira_markup(
        &issue_text(title, body),
        config.markup_mode,
        &config.marker_word,
    );
    normalize(tokenize(&text), config)
}

/// Builds a document from a repository path and raw file bytes (decoded
/// lossily). The name field comes from the base name.
pub fn preprocess_file(path: &str, bytes: &[u8], config: &PreprocessConfig) -> Document {
    let content = String::from_utf8_lossy(bytes);
    let base = path.rsplit('/').next().unwrap_or(path);
    let mut name = normalize(tokenize(base), config);
    if name.is_empty() {
        name = TokenStream::new(vec![String::from(if base.is_empty() {
            path
        } else {
            base
        })]);
    }
    Document {
        path: String::from(path),
        name,
        content: normalize(tokenize(&content), config),
    }
}

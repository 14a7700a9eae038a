//! Removal of Jira wiki notation from issue text.

use alloc::string::String;
use alloc::vec::Vec;

/// How `{code}`, `{noformat}` and `{panel}` blocks are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MarkupMode {
    /// Leave the text untouched.
    #[default]
    KeepRaw,
    /// Remove notation, keep block content.
    StripFormatting,
    /// Remove notation and delete blocks with their content.
    StripBlocks,
    /// Remove notation and replace each block with the marker word.
    BlocksToMarker,
}

const BLOCK_MACROS: [&str; 3] = ["code", "noformat", "panel"];
const TAG_MACROS: [&str; 4] = ["color", "quote", "anchor", "section"];
const EMOTICONS: [&str; 23] = [
    ":)",
    ":(",
    ":P",
    ":D",
    ";)",
    "(y)",
    "(n)",
    "(i)",
    "(/)",
    "(x)",
    "(!)",
    "(+)",
    "(-)",
    "(?)",
    "(on)",
    "(off)",
    "(*)",
    "(*r)",
    "(*g)",
    "(*b)",
    "(*y)",
    "(flag)",
    "(flagoff)",
];
const EFFECT_MARKERS: [char; 6] = ['*', '_', '-', '+', '^', '~'];
const LINK_SCHEMES: [&str; 6] = ["http:", "https:", "ftp:", "mailto:", "file:", "www."];

/// Strips Jira notation. Text modifiers lose their syntax but keep their
/// text; images, attachments and links are removed entirely; rules and
/// emoticons are dropped; blocks are handled according to `mode`.
pub fn strip_jira_markup(text: &str, mode: MarkupMode, marker: &str) -> String {
    if mode == MarkupMode::KeepRaw {
        return String::from(text);
    }
    let mut current = String::from(text);
    // Removing one construct can expose another; iterate to a fixpoint.
    for _ in 0..16 {
        let next = strip_pass(&current, mode, marker);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

fn is_alnum(c: Option<char>) -> bool {
    c.is_some_and(char::is_alphanumeric)
}

/// Appends a space when `out` ends in an alphanumeric character and `next`
/// starts with one, so removals never glue two words together.
fn gap(out: &mut String, next: Option<char>) {
    if is_alnum(out.chars().next_back()) && is_alnum(next) {
        out.push(' ');
    }
}

fn push_separated(out: &mut String, piece: &str, next: Option<char>) {
    gap(out, piece.chars().next());
    out.push_str(piece);
    gap(out, next);
}

/// Parses a `{name}` or `{name:params}` tag at the start of `s`, returning
/// the macro name and the tag length in bytes.
fn parse_tag(s: &str) -> Option<(&str, usize)> {
    let inner = s.strip_prefix('{')?;
    let end = inner.find('}')?;
    let body = &inner[..end];
    let name = body.split(':').next().unwrap_or("");
    if name.is_empty() || !name.bytes().all(|b| b.is_ascii_alphabetic()) {
        return None;
    }
    Some((name, end + 2))
}

fn strip_pass(text: &str, mode: MarkupMode, marker: &str) -> String {
    let without_blocks = strip_blocks(text, mode, marker);
    let mut out = String::with_capacity(without_blocks.len());
    for (i, line) in without_blocks.split('\n').enumerate() {
        if i > 0 {
            out.push('\n');
        }
        strip_line(line, &mut out);
    }
    out
}

fn strip_blocks(text: &str, mode: MarkupMode, marker: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let at = &rest[open..];
        let Some((name, tag_len)) = parse_tag(at) else {
            out.push('{');
            rest = &at[1..];
            continue;
        };
        let after_tag = &at[tag_len..];
        if BLOCK_MACROS.contains(&name) {
            let closing = alloc::format!("{{{name}}}");
            if let Some(close) = after_tag.find(closing.as_str()) {
                let content = &after_tag[..close];
                let after = &after_tag[close + closing.len()..];
                let next = after.chars().next();
                match mode {
                    MarkupMode::StripFormatting => push_separated(&mut out, content, next),
                    MarkupMode::BlocksToMarker => push_separated(&mut out, marker, next),
                    _ => gap(&mut out, next),
                }
                rest = after;
                continue;
            }
        }
        if BLOCK_MACROS.contains(&name) || TAG_MACROS.contains(&name) {
            // Unterminated block or a formatting-only macro: drop the tag.
            gap(&mut out, after_tag.chars().next());
        } else {
            out.push_str(&at[..tag_len]);
        }
        rest = after_tag;
    }
    out.push_str(rest);
    out
}

fn strip_line_prefix(line: &str) -> &str {
    let trimmed = line.trim_start();
    let bytes = trimmed.as_bytes();
    if bytes.len() >= 3 && bytes[0] == b'h' && (b'1'..=b'6').contains(&bytes[1]) && bytes[2] == b'.'
    {
        return trimmed[3..].trim_start();
    }
    if let Some(rest) = trimmed.strip_prefix("bq.") {
        return rest.trim_start();
    }
    let bullets = trimmed
        .bytes()
        .take_while(|b| matches!(b, b'*' | b'#'))
        .count();
    if bullets > 0 && trimmed[bullets..].starts_with(' ') {
        return trimmed[bullets..].trim_start();
    }
    if let Some(rest) = trimmed.strip_prefix("- ") {
        return rest;
    }
    line
}

fn is_horizontal_rule(line: &str) -> bool {
    let t = line.trim();
    t.len() >= 4 && t.bytes().all(|b| b == b'-')
}

fn strip_line(line: &str, out: &mut String) {
    if is_horizontal_rule(line) {
        return;
    }
    let body = strip_line_prefix(line);
    let table = body.trim_start().starts_with('|');
    let chars: Vec<char> = body.chars().collect();
    let mut kept: Vec<char> = Vec::with_capacity(chars.len());
    let mut i = 0;
    while i < chars.len() {
        if let Some(skip) = removable_span(&chars, i) {
            let prev = kept.last().copied();
            let next = chars.get(i + skip).copied();
            if is_alnum(prev) && is_alnum(next) {
                kept.push(' ');
            }
            i += skip;
            continue;
        }
        let c = chars[i];
        if c == '\\' && chars.get(i + 1) == Some(&'\\') {
            kept.push(' ');
            i += 2;
            continue;
        }
        if c == '{' && chars.get(i + 1) == Some(&'{') || c == '}' && chars.get(i + 1) == Some(&'}')
        {
            i += 2;
            continue;
        }
        if c == '?' && chars.get(i + 1) == Some(&'?') {
            i += 2;
            continue;
        }
        if table && c == '|' {
            kept.push(' ');
            i += 1;
            continue;
        }
        kept.push(c);
        i += 1;
    }
    strip_effects(&mut kept);
    out.extend(kept);
}

/// Length of a link, image, bare URL or emoticon starting at `i`.
fn removable_span(chars: &[char], i: usize) -> Option<usize> {
    let prev = if i == 0 { None } else { Some(chars[i - 1]) };
    let rest = &chars[i..];
    match chars[i] {
        '[' => {
            let close = rest.iter().position(|&c| c == ']')?;
            let inner: String = rest[1..close].iter().collect();
            let is_link = inner.contains('|')
                || inner.contains("://")
                || inner.starts_with('^')
                || inner.starts_with('~')
                || inner.starts_with('#')
                || LINK_SCHEMES.iter().any(|s| inner.starts_with(s));
            (close > 1 && is_link).then_some(close + 1)
        }
        '!' => {
            let close = rest[1..].iter().position(|&c| c == '!')? + 1;
            let inner: String = rest[1..close].iter().collect();
            let target = inner.split('|').next().unwrap_or("");
            let looks_like_file = !target.is_empty()
                && !target.chars().any(char::is_whitespace)
                && (target.contains('.') || target.contains("://"));
            looks_like_file.then_some(close + 1)
        }
        _ => {
            if is_alnum(prev) {
                return None;
            }
            let s: String = rest.iter().take(10).collect();
            if LINK_SCHEMES[..5].iter().any(|p| s.starts_with(p)) && s.contains("//")
                || s.starts_with("www.")
            {
                return Some(rest.iter().take_while(|c| !c.is_whitespace()).count());
            }
            if prev.is_some_and(|p| !p.is_whitespace()) {
                return None;
            }
            EMOTICONS.iter().find_map(|e| {
                let n = e.chars().count();
                let matches = rest.len() >= n && rest.iter().zip(e.chars()).all(|(a, b)| *a == b);
                (matches && !is_alnum(rest.get(n).copied())).then_some(n)
            })
        }
    }
}

/// Removes paired single-character text-effect markers such as `*bold*`.
fn strip_effects(chars: &mut Vec<char>) {
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let opens = EFFECT_MARKERS.contains(&c)
            && (i == 0 || !chars[i - 1].is_alphanumeric())
            && chars
                .get(i + 1)
                .is_some_and(|n| !n.is_whitespace() && *n != c);
        if opens {
            let close = (i + 2..chars.len()).find(|&j| {
                chars[j] == c
                    && !chars[j - 1].is_whitespace()
                    && chars.get(j + 1).is_none_or(|n| !n.is_alphanumeric())
            });
            if let Some(j) = close {
                chars.remove(j);
                chars.remove(i);
                continue;
            }
        }
        i += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;
    use alloc::format;
    use proptest::prelude::*;

    const M: &str = "CODEBLOCKMARKER";

    fn fmt(s: &str) -> String {
        strip_jira_markup(s, MarkupMode::StripFormatting, M)
    }

    #[test]
    fn headings_and_effects() {
        assert_eq!(fmt("h1. Title"), "Title");
        assert_eq!(fmt("this is *bold* and _it_"), "this is bold and it");
        assert_eq!(fmt("{{monospace}} and ??cite??"), "monospace and cite");
        assert_eq!(fmt("{color:red}warn{color} here"), "warn here");
        assert_eq!(fmt("bq. quoted"), "quoted");
        assert_eq!(fmt("-struck- +ins+ ^sup^ ~sub~"), "struck ins sup sub");
    }

    #[test]
    fn identifiers_survive() {
        assert_eq!(fmt("call run_server() now"), "call run_server() now");
        assert_eq!(fmt("use -Dfoo=bar flag"), "use -Dfoo=bar flag");
        assert_eq!(fmt("std::Deque f(i)"), "std::Deque f(i)");
    }

    #[test]
    fn lists_tables_rules() {
        assert_eq!(
            fmt("* one\n** two\n# three\n- four"),
            "one\ntwo\nthree\nfour"
        );
        assert_eq!(fmt("||a||b||\n|c|d|"), "  a  b  \n c d ");
        assert_eq!(fmt("above\n----\nbelow"), "above\n\nbelow");
    }

    #[test]
    fn links_images_emoticons_removed() {
        assert_eq!(fmt("see [docs|http://x.org/a b] now"), "see  now");
        assert_eq!(fmt("see [http://x.org] and [^file.txt]"), "see  and ");
        assert_eq!(fmt("pic !shot.png|thumbnail! end"), "pic  end");
        assert_eq!(fmt("go to https://a.b/c?d=e now"), "go to  now");
        assert_eq!(fmt("great :) (y) thanks"), "great   thanks");
        assert_eq!(fmt("keep [0] and a[i]"), "keep [0] and a[i]");
    }

    #[test]
    fn block_modes() {
        let s = "{code}x=1{code}";
        assert_eq!(strip_jira_markup(s, MarkupMode::BlocksToMarker, M), M);
        assert_eq!(strip_jira_markup(s, MarkupMode::StripBlocks, M), "");
        assert_eq!(strip_jira_markup(s, MarkupMode::StripFormatting, M), "x=1");
        assert_eq!(strip_jira_markup(s, MarkupMode::KeepRaw, M), s);

        let s = "before{code:java}int x;{code}after {noformat}raw{noformat}";
        assert_eq!(
            strip_jira_markup(s, MarkupMode::BlocksToMarker, M),
            format!("before {M} after {M}")
        );
        assert_eq!(
            strip_jira_markup(s, MarkupMode::StripBlocks, M),
            "before after "
        );
        assert_eq!(
            strip_jira_markup(s, MarkupMode::StripFormatting, M),
            "before int x;after raw"
        );
    }

    #[test]
    fn unterminated_block_tag_dropped() {
        assert_eq!(
            strip_jira_markup("{code}no end", MarkupMode::StripBlocks, M),
            "no end"
        );
    }

    fn jira_doc() -> impl Strategy<Value = (String, usize)> {
        let piece = prop_oneof![
            "[a-z]{1,6}".prop_map(|w| (w, 0usize)),
            "[a-z]{1,6}".prop_map(|w| (format!("*{w}*"), 0)),
            "[a-z]{1,6}".prop_map(|w| (format!("\nh2. {w}"), 0)),
            "[a-z ]{0,8}".prop_map(|w| (format!("{{code}}{w}{{code}}"), 1)),
            "[a-z ]{0,8}".prop_map(|w| (format!("{{noformat}}{w}{{noformat}}"), 1)),
            "[a-z]{1,5}".prop_map(|w| (format!("[{w}|http://x/{w}]"), 0)),
        ];
        proptest::collection::vec((piece, prop_oneof![Just(" "), Just("\n")]), 0..12).prop_map(
            |parts| {
                let mut text = String::new();
                let mut blocks = 0;
                for ((s, b), sep) in parts {
                    text.push_str(&s);
                    text.push_str(sep);
                    blocks += b;
                }
                (text, blocks)
            },
        )
    }

    proptest! {
        #[test]
        fn stripping_is_idempotent(s in "[a-z *_{}|!\\[\\]:()h1.\\n-]{0,40}") {
            for mode in [MarkupMode::KeepRaw, MarkupMode::StripFormatting, MarkupMode::StripBlocks, MarkupMode::BlocksToMarker] {
                let once = strip_jira_markup(&s, mode, M);
                prop_assert_eq!(strip_jira_markup(&once, mode, M), once.clone());
            }
        }

        #[test]
        fn marker_adds_one_token_per_block((doc, blocks) in jira_doc()) {
            let marked = tokenize(&strip_jira_markup(&doc, MarkupMode::BlocksToMarker, M));
            let stripped = tokenize(&strip_jira_markup(&doc, MarkupMode::StripBlocks, M));
            prop_assert_eq!(marked.len(), stripped.len() + blocks);
        }
    }
}

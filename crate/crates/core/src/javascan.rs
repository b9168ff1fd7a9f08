//! A lightweight scanner for C-family source: comment and literal skipping,
//! brace matching, documentation-block discovery, and doc-text cleanup.
//! This is deliberately not a parser.

use serde::{Deserialize, Serialize};

/// Returns the byte offset just past the comment or literal starting at `i`,
/// or `None` if there is none at `i`.
fn skip_non_code(src: &[u8], i: usize) -> Option<usize> {
    match src[i] {
        b'/' if src.get(i + 1) == Some(&b'/') => {
            let end = src[i..].iter().position(|&c| c == b'\n').map_or(src.len(), |p| i + p);
            Some(end)
        }
        b'/' if src.get(i + 1) == Some(&b'*') => {
            let end = find(src, i + 2, b"*/").map_or(src.len(), |p| p + 2);
            Some(end)
        }
        q @ (b'"' | b'\'') => {
            if q == b'"' && src[i..].starts_with(b"\"\"\"") {
                let end = find(src, i + 3, b"\"\"\"").map_or(src.len(), |p| p + 3);
                return Some(end);
            }
            let mut j = i + 1;
            while j < src.len() {
                match src[j] {
                    b'\\' => j += 2,
                    c if c == q => return Some(j + 1),
                    b'\n' => return Some(j),
                    _ => j += 1,
                }
            }
            Some(src.len())
        }
        _ => None,
    }
}

fn find(src: &[u8], from: usize, pat: &[u8]) -> Option<usize> {
    if from > src.len() {
        return None;
    }
    src[from..].windows(pat.len()).position(|w| w == pat).map(|p| p + from)
}

/// Given the offset of an opening `{`, returns the offset of its matching `}`.
pub fn matching_brace(src: &[u8], open: usize) -> Option<usize> {
    debug_assert_eq!(src[open], b'{');
    let mut depth = 0usize;
    let mut i = open;
    while i < src.len() {
        if let Some(next) = skip_non_code(src, i) {
            i = next;
            continue;
        }
        match src[i] {
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
        i += 1;
    }
    None
}

/// Text between the first top-level `{` and its matching `}`, if any.
pub fn method_body(code: &str) -> Option<&str> {
    let src = code.as_bytes();
    let mut i = 0;
    let mut paren = 0i32;
    while i < src.len() {
        if let Some(next) = skip_non_code(src, i) {
            i = next;
            continue;
        }
        match src[i] {
            b'(' => paren += 1,
            b')' => paren -= 1,
            b';' if paren == 0 => return None,
            b'{' if paren == 0 => {
                let close = matching_brace(src, i)?;
                return Some(&code[i + 1..close]);
            }
            _ => {}
        }
        i += 1;
    }
    None
}

/// True when the text contains something other than whitespace and comments.
pub fn has_statement_text(body: &str) -> bool {
    let src = body.as_bytes();
    let mut i = 0;
    while i < src.len() {
        if src[i] == b'/' && matches!(src.get(i + 1), Some(b'/') | Some(b'*')) {
            i = skip_non_code(src, i).unwrap_or(src.len());
            continue;
        }
        if !src[i].is_ascii_whitespace() {
            return true;
        }
        i += 1;
    }
    false
}

/// Inline and block documentation tags to strip from summaries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocTagConfig {
    /// Inline tags removed along with their argument, e.g. `{@inheritDoc}`.
    pub drop_inline: Vec<String>,
    /// Inline tags replaced by their argument text, e.g. `{@code x}` -> `x`.
    pub unwrap_inline: Vec<String>,
    /// Strip `<tag>` style markup.
    pub strip_html: bool,
}

impl Default for DocTagConfig {
    fn default() -> Self {
        DocTagConfig {
            drop_inline: vec!["inheritDoc".into()],
            unwrap_inline: ["link", "linkplain", "code", "literal", "value"]
                .into_iter()
                .map(String::from)
                .collect(),
            strip_html: true,
        }
    }
}

/// Removes documentation markup according to `cfg`.
///
/// Bare block tags (`@inheritDoc` outside braces) are treated as dropped tags.
pub fn strip_doc_tags(text: &str, cfg: &DocTagConfig) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(pos) = rest.find(['{', '<', '@']) {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        if let Some(inner) = tail.strip_prefix("{@") {
            let close = inner.find('}').unwrap_or(inner.len());
            let body = &inner[..close];
            let (tag, arg) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
            if cfg.unwrap_inline.iter().any(|t| t == tag) {
                // `{@link Foo#bar label}` keeps the label when one is given.
                let arg = arg.trim();
                let shown = match (tag, arg.split_once(char::is_whitespace)) {
                    ("link" | "linkplain", Some((_, label))) => label.trim(),
                    _ => arg,
                };
                out.push_str(shown);
            } else if !cfg.drop_inline.iter().any(|t| t == tag) {
                out.push_str(&tail[..(close + 3).min(tail.len())]);
            }
            rest = &inner[(close + 1).min(inner.len())..];
        } else if tail.starts_with('<') && cfg.strip_html && looks_like_html(tail) {
            let close = tail.find('>').expect("checked by looks_like_html");
            out.push(' ');
            rest = &tail[close + 1..];
        } else if let Some(word) = tail.strip_prefix('@') {
            let len = word
                .find(|c: char| !c.is_ascii_alphanumeric())
                .unwrap_or(word.len());
            if cfg.drop_inline.iter().any(|t| t == &word[..len]) {
                rest = &word[len..];
            } else {
                out.push('@');
                rest = word;
            }
        } else {
            out.push_str(&tail[..1]);
            rest = &tail[1..];
        }
    }
    out.push_str(rest);
    out
}

fn looks_like_html(tail: &str) -> bool {
    let Some(close) = tail.find('>') else {
        return false;
    };
    let inner = &tail[1..close];
    let name = inner.trim_start_matches('/');
    !name.is_empty()
        && name.as_bytes()[0].is_ascii_alphabetic()
        && inner.len() < 64
        && !inner.contains('<')
}

/// Turns a raw `/** ... */` block into its description text: comment
/// delimiters and leading asterisks removed, block tags (`@param` onward) cut.
pub fn doc_description(block: &str) -> String {
    let inner = block
        .trim()
        .trim_start_matches("/**")
        .trim_end_matches("*/");
    let mut lines = Vec::new();
    for line in inner.lines() {
        let line = line.trim_start();
        let line = line.strip_prefix('*').unwrap_or(line).trim();
        if line.starts_with('@') && !line.starts_with("@inheritDoc") {
            break;
        }
        if !line.is_empty() {
            lines.push(line);
        }
    }
    lines.join(" ")
}

/// First sentence: text up to and including the first period followed by
/// whitespace or end of text, with whitespace collapsed.
pub fn first_sentence(text: &str) -> String {
    let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ");
    let bytes = collapsed.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'.' && (i + 1 == bytes.len() || bytes[i + 1] == b' ') {
            return collapsed[..=i].to_string();
        }
    }
    collapsed
}

/// A documented declaration found by [`scan_documented_methods`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentedMethod {
    pub doc: String,
    pub name: String,
    /// Declaration plus body (or terminating `;` for abstract methods).
    pub code: String,
    pub line: usize,
}

const NON_METHOD_KEYWORDS: &[&str] = &[
    "class", "interface", "enum", "record", "new", "return", "throw", "=", "@interface",
];

const MODIFIERS: &[&str] = &[
    "public",
    "protected",
    "private",
    "static",
    "final",
    "abstract",
    "synchronized",
    "native",
    "default",
    "strictfp",
    "transient",
    "volatile",
];

/// Finds every method declaration immediately preceded by a `/** */` block.
///
/// Constructors and type declarations are skipped; scanning continues inside
/// type bodies so nested and inner classes are covered.
pub fn scan_documented_methods(source: &str) -> Vec<DocumentedMethod> {
    let src = source.as_bytes();
    let mut found = Vec::new();
    let mut i = 0;
    while i < src.len() {
        if src[i..].starts_with(b"/**") && !src[i..].starts_with(b"/**/") {
            let end = find(src, i + 3, b"*/").map_or(src.len(), |p| p + 2);
            let doc = &source[i..end];
            if let Some((method, resume)) = declaration_after(source, end) {
                found.push(DocumentedMethod {
                    doc: doc.to_string(),
                    line: source[..i].matches('\n').count() + 1,
                    ..method
                });
                i = resume;
            } else {
                i = end;
            }
            continue;
        }
        if let Some(next) = skip_non_code(src, i) {
            i = next;
            continue;
        }
        i += 1;
    }
    found
}

fn skip_annotation(src: &[u8], mut i: usize) -> usize {
    // `@Name` optionally followed by a parenthesized argument list.
    i += 1;
    while i < src.len() && (src[i].is_ascii_alphanumeric() || src[i] == b'_' || src[i] == b'.') {
        i += 1;
    }
    let mut j = i;
    while j < src.len() && src[j].is_ascii_whitespace() {
        j += 1;
    }
    if src.get(j) == Some(&b'(') {
        let mut depth = 0;
        while j < src.len() {
            if let Some(next) = skip_non_code(src, j) {
                j = next;
                continue;
            }
            match src[j] {
                b'(' => depth += 1,
                b')' => {
                    depth -= 1;
                    if depth == 0 {
                        return j + 1;
                    }
                }
                _ => {}
            }
            j += 1;
        }
        return src.len();
    }
    i
}

/// Parses the declaration that follows a doc block ending at `from`.
fn declaration_after(source: &str, from: usize) -> Option<(DocumentedMethod, usize)> {
    let src = source.as_bytes();
    let mut i = from;
    // Skip whitespace, line comments, and annotations between doc and signature.
    loop {
        while i < src.len() && src[i].is_ascii_whitespace() {
            i += 1;
        }
        if i >= src.len() {
            return None;
        }
        if src[i] == b'@' && !src[i..].starts_with(b"@interface") {
            i = skip_annotation(src, i);
        } else if src[i..].starts_with(b"//")
            || (src[i..].starts_with(b"/*") && !src[i..].starts_with(b"/**"))
        {
            i = skip_non_code(src, i)?;
        } else {
            break;
        }
    }
    let start = i;
    let mut paren = 0i32;
    let mut first_paren = None;
    while i < src.len() {
        if src[i..].starts_with(b"/**") {
            return None;
        }
        if let Some(next) = skip_non_code(src, i) {
            i = next;
            continue;
        }
        match src[i] {
            b'(' => {
                if first_paren.is_none() {
                    first_paren = Some(i);
                }
                paren += 1;
            }
            b')' => paren -= 1,
            b'{' | b';' | b'}' if paren == 0 => break,
            _ => {}
        }
        i += 1;
    }
    if i >= src.len() || src[i] == b'}' {
        return None;
    }
    let open = first_paren?;
    let header = &source[start..open];
    let words: Vec<&str> = header
        .split(|c: char| c.is_whitespace() || c == '<' || c == '>' || c == ',')
        .filter(|w| !w.is_empty())
        .collect();
    if words.iter().any(|w| NON_METHOD_KEYWORDS.contains(w)) || header.contains('=') {
        return None;
    }
    let name = *words.last()?;
    if !is_identifier(name) {
        return None;
    }
    // A constructor has nothing but modifiers (and type parameters) before its name.
    let has_return_type = words[..words.len() - 1]
        .iter()
        .any(|w| !MODIFIERS.contains(w) && !w.starts_with('@'));
    if !has_return_type {
        return None;
    }
    let end = if src[i] == b'{' {
        matching_brace(src, i)? + 1
    } else {
        i + 1
    };
    Some((
        DocumentedMethod {
            doc: String::new(),
            name: name.to_string(),
            code: source[start..end].to_string(),
            line: 0,
        },
        end,
    ))
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_' || c == '$')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$')
}

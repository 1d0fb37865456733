//! Dialect parsers that turn source text into [`IrScript`].
//!
//! These are lightweight structural scanners, not full language parsers:
//! the detection rules only need key/value bindings, comments, and case
//! constructs. Every parser is total — malformed input degrades to
//! line-level extraction with `parse_failed` set, because the evaluation
//! harness has to scan syntactically broken model output.

mod ansible;
mod chef;
mod puppet;

pub use ansible::parse_ansible;
pub use chef::parse_chef;
pub use puppet::parse_puppet;

use crate::error::CoreError;
use crate::ir::{infer_language, IacLanguage, IrScript};

/// Parses a script, choosing the dialect from the path (see
/// [`infer_language`]).
pub fn parse_any(content: &str, path: &str) -> Result<IrScript, CoreError> {
    let language = infer_language(path, content)?;
    Ok(parse_with(language, content, path))
}

/// Parses a script with an explicitly chosen dialect.
pub fn parse_with(language: IacLanguage, content: &str, path: &str) -> IrScript {
    match language {
        IacLanguage::Ansible => parse_ansible(content, path),
        IacLanguage::Chef => parse_chef(content, path),
        IacLanguage::Puppet => parse_puppet(content, path),
    }
}

/// Comment syntax family used when splitting inline comments.
#[derive(Clone, Copy, PartialEq)]
pub(crate) enum CommentStyle {
    /// `#` must be at line start or preceded by whitespace (YAML).
    Yaml,
    /// `#` anywhere outside quotes, except `#{` interpolation (Ruby).
    Ruby,
    /// `#` anywhere outside quotes (Puppet).
    Puppet,
}

/// Splits a line into (code, comment-text) at the first comment marker
/// outside of quotes. The comment text excludes `#` and one following space.
pub(crate) fn split_comment(line: &str, style: CommentStyle) -> (&str, Option<String>) {
    let mut in_single = false;
    let mut in_double = false;
    let mut prev: Option<char> = None;
    for (idx, ch) in line.char_indices() {
        match ch {
            '\'' if !in_double => in_single = !in_single,
            '"' if !in_single => in_double = !in_double,
            '#' if !in_single && !in_double => {
                let ok = match style {
                    CommentStyle::Yaml => {
                        prev.is_none() || prev.is_some_and(|p| p == ' ' || p == '\t')
                    }
                    CommentStyle::Ruby => !line[idx..].starts_with("#{"),
                    CommentStyle::Puppet => true,
                };
                if ok {
                    return (&line[..idx], Some(comment_text(&line[idx..])));
                }
            }
            _ => {}
        }
        prev = Some(ch);
    }
    (line, None)
}

/// Strips the leading `#` (and one following space) from a raw comment.
pub(crate) fn comment_text(raw: &str) -> String {
    let t = raw.trim_start();
    let t = t.strip_prefix('#').unwrap_or(t);
    let t = t.strip_prefix(' ').unwrap_or(t);
    t.trim_end().to_string()
}

/// True when the value interpolates a variable in the given dialect.
pub(crate) fn is_variable_ref(value: &str, language: IacLanguage) -> bool {
    match language {
        IacLanguage::Ansible => value.contains("{{"),
        IacLanguage::Chef => value.contains("#{") || value.contains("node["),
        IacLanguage::Puppet => value.contains('$'),
    }
}

/// Classifies a scalar value after quote stripping.
pub(crate) fn classify_value(stripped: &str, language: IacLanguage) -> crate::ir::ValueKind {
    use crate::ir::ValueKind;
    if stripped.is_empty() {
        ValueKind::Empty
    } else if is_variable_ref(stripped, language) {
        ValueKind::VariableRef
    } else {
        ValueKind::Literal
    }
}

//! Chef (Ruby DSL subset) structural scanner.
//!
//! Recognizes `resource 'name' do ... end` blocks, `key value` and
//! `key: value` attribute lines, and `case/when/else/end` constructs.
//! Never hard-fails: unmatched do/end sets `parse_failed` and the
//! line-level extraction still runs.

use std::sync::LazyLock;

use regex::Regex;

use crate::ir::{
    split_lines_keep_ends, strip_matching_quotes, IacLanguage, IrAttribute, IrCase, IrComment,
    IrScript, IrUnit, Span, ValueKind,
};

use super::{classify_value, split_comment, CommentStyle};

static RESOURCE_QUOTED: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"^([a-z_]\w*)\s+['"]([^'"]*)['"]\s+do\b"#).unwrap()
});
static RESOURCE_UNQUOTED: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^([a-z_]\w*)\s+([\w.\[\]:']+)\s+do\b").unwrap());
static RESOURCE_BARE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^([a-z_]\w*)\s+do\b").unwrap());
static BLOCK_TAIL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\bdo\s*(\|[^|]*\|)?\s*$").unwrap());
static HASH_PAIR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"([A-Za-z_]\w*):\s*('[^']*'|"[^"]*"|[^,{}\]]+)"#).unwrap()
});
static KEY_COLON: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"^['"]?([\w.\-]+)['"]?:\s+(.+)$"#).unwrap());
static KEY_ROCKET: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"^:?['"]?([\w.\-]+)['"]?\s*=>\s*(.+?),?$"#).unwrap());
static KEY_VALUE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^([a-z_]\w*)\s+(.+)$").unwrap());
static HEREDOC: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"<<[-~]?['"]?([A-Z][A-Z0-9_]*)['"]?"#).unwrap());

/// Ruby keywords that open a block terminated by `end` when they start a
/// statement.
const OPENERS: &[&str] = &["if", "unless", "while", "until", "begin", "def", "class", "module"];

/// First words that must not be mistaken for `key value` attributes.
const RESERVED: &[&str] = &[
    "do", "end", "case", "when", "else", "elsif", "if", "unless", "while", "until", "begin",
    "def", "class", "module", "return", "require", "require_relative", "include", "extend",
    "raise", "puts", "next", "break", "yield",
];

enum Block {
    /// `do ... end`; holds the opened unit index, if any.
    Do(Option<usize>),
    Case(CaseState),
    /// if/unless/def/... — consumes an `end`, owns `else`.
    Other,
}

struct CaseState {
    subject: String,
    arms: usize,
    has_default: bool,
    start_line: usize,
}

pub fn parse_chef(content: &str, path: &str) -> IrScript {
    let mut script = IrScript::empty(IacLanguage::Chef, path, content);
    let lines = split_lines_keep_ends(content);

    let mut stack: Vec<Block> = Vec::new();
    let mut unit_stack: Vec<usize> = Vec::new();
    let mut bare_unit: Option<usize> = None;
    let mut heredoc_tag: Option<String> = None;

    for (idx, raw) in lines.iter().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches(['\n', '\r']);

        if let Some(tag) = &heredoc_tag {
            if line.trim() == tag.as_str() {
                heredoc_tag = None;
            }
            continue;
        }

        let (code, comment) = split_comment(line, CommentStyle::Ruby);
        if let Some(text) = comment {
            script.comments.push(IrComment::new(text, Span::line(line_no)));
        }
        let code = code.trim();
        if code.is_empty() {
            continue;
        }

        let first_word = code.split([' ', '\t', '(']).next().unwrap_or("");
        match first_word {
            "case" => {
                let subject = code["case".len()..].trim().trim_end_matches(" then").trim();
                stack.push(Block::Case(CaseState {
                    subject: subject.to_string(),
                    arms: 0,
                    has_default: false,
                    start_line: line_no,
                }));
                continue;
            }
            "when" => {
                if let Some(Block::Case(c)) = stack.last_mut() {
                    c.arms += 1;
                }
                continue;
            }
            "else" => {
                if let Some(Block::Case(c)) = stack.last_mut() {
                    c.has_default = true;
                }
                continue;
            }
            "elsif" => continue,
            "end" => {
                match stack.pop() {
                    Some(Block::Case(c)) => script.cases.push(IrCase {
                        subject: c.subject,
                        branch_count: c.arms,
                        has_default: c.has_default,
                        span: Span::lines(c.start_line, line_no),
                    }),
                    Some(Block::Do(opened)) => {
                        if let Some(unit_idx) = opened {
                            script.units[unit_idx].span.end_line = line_no;
                            unit_stack.pop();
                        }
                    }
                    Some(Block::Other) => {}
                    None => {
                        script.parse_failed = true;
                        script
                            .diagnostics
                            .push(format!("line {line_no}: 'end' without matching block"));
                    }
                }
                continue;
            }
            w if OPENERS.contains(&w) => {
                stack.push(Block::Other);
                continue;
            }
            _ => {}
        }

        if BLOCK_TAIL.is_match(code) {
            let unit = RESOURCE_QUOTED
                .captures(code)
                .map(|c| (c[1].to_string(), c[2].to_string()))
                .or_else(|| {
                    RESOURCE_UNQUOTED
                        .captures(code)
                        .map(|c| (c[1].to_string(), strip_matching_quotes(&c[2])))
                })
                .or_else(|| RESOURCE_BARE.captures(code).map(|c| (c[1].to_string(), String::new())));
            let opened = unit.map(|(kind, name)| {
                script.units.push(IrUnit {
                    kind,
                    name,
                    attributes: Vec::new(),
                    span: Span::line(line_no),
                });
                let idx = script.units.len() - 1;
                unit_stack.push(idx);
                idx
            });
            stack.push(Block::Do(opened));
            continue;
        }

        if let Some(caps) = HEREDOC.captures(code) {
            heredoc_tag = Some(caps[1].to_string());
            continue;
        }

        for (key, value) in extract_attr_pairs(code) {
            push_attribute(&mut script, &mut unit_stack, &mut bare_unit, &key, value, line_no);
        }
    }

    if !stack.is_empty() {
        script.parse_failed = true;
        script.diagnostics.push(format!("{} unterminated block(s) at end of file", stack.len()));
        let last = lines.len().max(1);
        for block in stack.drain(..) {
            if let Block::Case(c) = block {
                script.cases.push(IrCase {
                    subject: c.subject,
                    branch_count: c.arms,
                    has_default: c.has_default,
                    span: Span::lines(c.start_line, last),
                });
            }
        }
    }
    script
}

/// Attribute bindings visible on one code line, in source order.
fn extract_attr_pairs(code: &str) -> Vec<(String, String)> {
    let body = code.strip_prefix("- ").unwrap_or(code);

    if body.contains('{') && HASH_PAIR.is_match(body) {
        return HASH_PAIR
            .captures_iter(body)
            .map(|c| (c[1].to_string(), c[2].trim().to_string()))
            .collect();
    }
    if let Some(c) = KEY_COLON.captures(body) {
        return vec![(c[1].to_string(), c[2].trim().trim_end_matches(',').to_string())];
    }
    if let Some(c) = KEY_ROCKET.captures(body) {
        return vec![(c[1].to_string(), c[2].trim().to_string())];
    }
    if let Some(c) = KEY_VALUE.captures(body) {
        let key = c[1].to_string();
        if !RESERVED.contains(&key.as_str()) {
            return vec![(key, c[2].trim().to_string())];
        }
    }
    Vec::new()
}

fn push_attribute(
    script: &mut IrScript,
    unit_stack: &mut [usize],
    bare_unit: &mut Option<usize>,
    key: &str,
    value: String,
    line_no: usize,
) {
    let stripped = strip_matching_quotes(&value);
    let kind = classify_value(&stripped, IacLanguage::Chef);
    let attr = IrAttribute::new(key, stripped, kind, Span::line(line_no));
    let target = match unit_stack.last() {
        Some(&idx) => idx,
        None => *bare_unit.get_or_insert_with(|| {
            script.units.push(IrUnit {
                kind: "bare".to_string(),
                name: String::new(),
                attributes: Vec::new(),
                span: Span::line(line_no),
            });
            script.units.len() - 1
        }),
    };
    script.units[target].span.end_line = script.units[target].span.end_line.max(line_no);
    script.units[target].attributes.push(attr);
}

#[cfg(test)]
mod tests {
    use super::*;

    const APT_REPO: &str = r#"apt_repository "apache-cassandra" do
  uri "http://www.apache.org/dist/cassandra/debian"
  components ["main"]
  key "F758CE318D77295D"
end
"#;

    #[test]
    fn resource_block_with_attributes() {
        let ir = parse_chef(APT_REPO, "cassandra.rb");
        assert!(!ir.parse_failed);
        assert_eq!(ir.units.len(), 1);
        let unit = &ir.units[0];
        assert_eq!(unit.kind, "apt_repository");
        assert_eq!(unit.name, "apache-cassandra");
        let uri = unit.attributes.iter().find(|a| a.key_norm == "uri").unwrap();
        assert!(uri.value_raw.contains("http://www.apache.org/dist/cassandra/debian"));
        assert_eq!(uri.value_kind, ValueKind::Literal);
    }

    #[test]
    fn case_with_when_arms_and_nested_do() {
        let src = r#"case node['platform_family']
when 'debian'
  package 'libapache2-mod-wsgi'
when 'rhel', 'fedora', 'arch'
  package 'mod_wsgi' do
    notifies :run, 'execute[generate-module-list]', :immediately
  end
end
"#;
        let ir = parse_chef(src, "wsgi.rb");
        assert!(!ir.parse_failed);
        assert_eq!(ir.cases.len(), 1);
        let case = &ir.cases[0];
        assert_eq!(case.subject, "node['platform_family']");
        assert_eq!(case.branch_count, 2);
        assert!(!case.has_default);
        assert_eq!(case.span.start_line, 1);
        assert_eq!(case.span.end_line, 8);
    }

    #[test]
    fn case_with_else_has_default() {
        let ir = parse_chef("case x\nwhen 'a'\nelse\nend\n", "c.rb");
        assert_eq!(ir.cases.len(), 1);
        assert_eq!(ir.cases[0].branch_count, 1);
        assert!(ir.cases[0].has_default);
    }

    #[test]
    fn missing_end_degrades() {
        let src = "apt_repository \"x\" do\n  uri \"http://e.org\"\n";
        let ir = parse_chef(src, "broken.rb");
        assert!(ir.parse_failed);
        assert!(ir.attributes().any(|a| a.key_norm == "uri"));
    }

    #[test]
    fn inline_hash_pairs_are_split() {
        let src = "hba_configuration([\n  {type: 'host', database: 'all', user: 'all', address: '0.0.0.0/0', method: 'md5'},\n])\n";
        let ir = parse_chef(src, "hba.rb");
        let keys: Vec<_> = ir.attributes().map(|a| a.key_norm.as_str()).collect();
        for expected in ["type", "database", "user", "address", "method"] {
            assert!(keys.contains(&expected), "missing {expected} in {keys:?}");
        }
        let method = ir.attributes().find(|a| a.key_norm == "method").unwrap();
        assert_eq!(method.value_raw, "md5");
    }

    #[test]
    fn interpolated_values_are_variable_refs() {
        let src = "remote_file 'pkg' do\n  source \"http://host/#{node['v']}.tgz\"\nend\n";
        let ir = parse_chef(src, "r.rb");
        let source = ir.attributes().find(|a| a.key_norm == "source").unwrap();
        assert_eq!(source.value_kind, ValueKind::VariableRef);
    }

    #[test]
    fn yaml_shaped_lines_still_extract() {
        // Model output sometimes lands in the wrong dialect; the scanner
        // still has to surface key/value bindings.
        let src = "- name: create repo\n  yum_repository:\n    gpgcheck: false\n";
        let ir = parse_chef(src, "mislabeled.rb");
        let gpg = ir.attributes().find(|a| a.key_norm == "gpgcheck");
        assert_eq!(gpg.unwrap().value_raw, "false");
    }

    #[test]
    fn heredoc_content_is_skipped() {
        let src = "bash 'x' do\n  code <<-EOH\n    password: leaked\n  EOH\nend\n";
        let ir = parse_chef(src, "h.rb");
        assert!(!ir.attributes().any(|a| a.key_norm == "password"));
        assert!(!ir.parse_failed);
    }

    #[test]
    fn stray_end_is_flagged() {
        let ir = parse_chef("end\n", "s.rb");
        assert!(ir.parse_failed);
    }
}

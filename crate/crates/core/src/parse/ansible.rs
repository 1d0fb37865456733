//! Ansible (YAML) structural scanner.
//!
//! Builds the IR from an indentation-aware line pass that never fails,
//! so broken YAML still yields comments and `key: value` bindings. A
//! separate full YAML parse only decides the `parse_failed` flag.

use crate::ir::{
    split_lines_keep_ends, IacLanguage, IrAttribute, IrComment, IrScript, IrUnit, Span, ValueKind,
};

use super::{classify_value, split_comment, CommentStyle};

/// Keys that introduce structure rather than naming a module.
const STRUCTURAL_BLOCK_KEYS: &[&str] = &[
    "tasks",
    "handlers",
    "pre_tasks",
    "post_tasks",
    "block",
    "rescue",
    "always",
    "vars",
    "vars_files",
    "defaults",
    "roles",
    "environment",
    "args",
    "with_items",
    "loop",
    "notify",
    "when",
    "tags",
];

struct OpenUnit {
    indent: usize,
    unit: IrUnit,
    /// Value of the unit's own `name:` attribute, used when no module key names it.
    name_attr: Option<String>,
    named_by_module: bool,
}

pub fn parse_ansible(content: &str, path: &str) -> IrScript {
    let mut script = IrScript::empty(IacLanguage::Ansible, path, content);
    let lines = split_lines_keep_ends(content);

    let mut open: Vec<OpenUnit> = Vec::new();
    let mut bare: Option<OpenUnit> = None;
    // (indent of the block-scalar key): lines indented deeper are scalar content.
    let mut block_scalar_indent: Option<usize> = None;

    for (idx, raw) in lines.iter().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches(['\n', '\r']);
        let trimmed = line.trim_start();
        let indent = line.len() - trimmed.len();

        if let Some(scalar_indent) = block_scalar_indent {
            if trimmed.is_empty() || indent > scalar_indent {
                continue;
            }
            block_scalar_indent = None;
        }

        if trimmed.is_empty() {
            continue;
        }
        if trimmed == "---" || trimmed == "..." {
            close_units(&mut open, &mut script, line_no.saturating_sub(1));
            continue;
        }
        if trimmed.starts_with('#') {
            script
                .comments
                .push(IrComment::new(super::comment_text(trimmed), Span::line(line_no)));
            continue;
        }

        let (code, comment) = split_comment(line, CommentStyle::Yaml);
        if let Some(text) = comment {
            script.comments.push(IrComment::new(text, Span::line(line_no)));
        }
        let code_trimmed = code.trim();
        if code_trimmed.is_empty() {
            continue;
        }

        let (is_item, body, body_indent) = match code_trimmed.strip_prefix("- ") {
            Some(rest) => (true, rest.trim_start(), indent),
            None => {
                if code_trimmed == "-" {
                    (true, "", indent)
                } else {
                    (false, code_trimmed, indent)
                }
            }
        };

        if is_item {
            // Pop units at the same or deeper nesting, then open the new item.
            while open.last().is_some_and(|u| u.indent >= body_indent) {
                let finished = open.pop().unwrap();
                finish_unit(finished, &mut script, line_no - 1);
            }
            open.push(OpenUnit {
                indent: body_indent,
                unit: IrUnit {
                    kind: "task".to_string(),
                    name: String::new(),
                    attributes: Vec::new(),
                    span: Span::line(line_no),
                },
                name_attr: None,
                named_by_module: false,
            });
        } else {
            // A mapping key at or left of an open item's indent closes it.
            while open.last().is_some_and(|u| indent <= u.indent) {
                let finished = open.pop().unwrap();
                finish_unit(finished, &mut script, line_no - 1);
            }
        }

        if body.is_empty() {
            continue;
        }
        if let Some((key, value)) = split_key_value(body) {
            let span = Span { start_line: line_no, end_line: line_no, start_col: indent + 1 };
            let value = value.trim();
            let (kind, value_raw) = if value.is_empty() {
                (ValueKind::Block, String::new())
            } else if is_block_scalar_marker(value) {
                block_scalar_indent = Some(indent);
                (ValueKind::Block, String::new())
            } else {
                let stripped = crate::ir::strip_matching_quotes(value);
                (classify_value(&stripped, IacLanguage::Ansible), stripped)
            };
            let attr = IrAttribute::new(key, value_raw, kind, span);

            let target = match open.last_mut() {
                Some(u) => u,
                None => bare.get_or_insert_with(|| OpenUnit {
                    indent: 0,
                    unit: IrUnit {
                        kind: "bare".to_string(),
                        name: String::new(),
                        attributes: Vec::new(),
                        span: Span::line(line_no),
                    },
                    name_attr: None,
                    named_by_module: false,
                }),
            };
            if attr.value_kind == ValueKind::Block
                && !target.named_by_module
                && !STRUCTURAL_BLOCK_KEYS.contains(&attr.key_norm.as_str())
            {
                target.unit.name = attr.key_raw.clone();
                target.named_by_module = true;
            }
            if attr.key_norm == "name" && attr.value_kind != ValueKind::Block {
                target.name_attr.get_or_insert_with(|| attr.value_raw.clone());
            }
            if attr.key_norm == "hosts" && target.unit.kind == "task" {
                target.unit.kind = "play".to_string();
            }
            target.unit.span.end_line = line_no;
            target.unit.attributes.push(attr);
        }
    }

    let last = lines.len().max(1);
    close_units(&mut open, &mut script, last);
    if let Some(b) = bare {
        finish_unit(b, &mut script, last);
    }
    script.units.sort_by_key(|u| u.span.start_line);

    if let Err(err) = validate_yaml(content) {
        script.parse_failed = true;
        script.diagnostics.push(err);
    }
    script
}

fn close_units(open: &mut Vec<OpenUnit>, script: &mut IrScript, end_line: usize) {
    while let Some(u) = open.pop() {
        finish_unit(u, script, end_line);
    }
}

fn finish_unit(mut open: OpenUnit, script: &mut IrScript, end_line: usize) {
    if open.unit.name.is_empty() {
        if let Some(n) = open.name_attr.take() {
            open.unit.name = n;
        }
    }
    open.unit.span.end_line = open.unit.span.end_line.max(open.unit.span.start_line);
    let _ = end_line;
    script.units.push(open.unit);
}

/// Splits `key: value` at the first colon outside quotes. The colon must be
/// followed by a space or end the key part (YAML mapping syntax).
fn split_key_value(body: &str) -> Option<(&str, &str)> {
    let mut in_single = false;
    let mut in_double = false;
    let chars: Vec<(usize, char)> = body.char_indices().collect();
    for (pos, &(idx, ch)) in chars.iter().enumerate() {
        match ch {
            '\'' if !in_double => in_single = !in_single,
            '"' if !in_single => in_double = !in_double,
            ':' if !in_single && !in_double => {
                let next = chars.get(pos + 1).map(|&(_, c)| c);
                if next.is_none() || next == Some(' ') || next == Some('\t') {
                    let key = body[..idx].trim();
                    if key.is_empty() || key.contains(' ') {
                        return None;
                    }
                    return Some((key, body[idx + 1..].trim()));
                }
            }
            _ => {}
        }
    }
    None
}

fn is_block_scalar_marker(value: &str) -> bool {
    let v = value.trim();
    (v.starts_with('|') || v.starts_with('>'))
        && v.chars().skip(1).all(|c| c == '+' || c == '-' || c.is_ascii_digit())
}

/// Full YAML well-formedness check over every document in the stream.
fn validate_yaml(content: &str) -> Result<(), String> {
    use serde::Deserialize;
    for document in serde_yaml::Deserializer::from_str(content) {
        serde_yaml::Value::deserialize(document).map_err(|e| e.to_string())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MYSQL_USER_TASK: &str = r#"- name: Create a MySQL user.
  mysql_user:
    name: "{{ domain }}"
    password: "1234"
    priv: "{{ domain }}.*:ALL"
    host: localhost
    state: present
"#;

    #[test]
    fn task_with_module_block() {
        let ir = parse_ansible(MYSQL_USER_TASK, "user.yml");
        assert!(!ir.parse_failed);
        assert_eq!(ir.units.len(), 1);
        let unit = &ir.units[0];
        assert_eq!(unit.name, "mysql_user");
        let pw = unit.attributes.iter().find(|a| a.key_norm == "password").unwrap();
        assert_eq!(pw.value_raw, "1234");
        assert_eq!(pw.value_kind, ValueKind::Literal);
        assert_eq!(pw.span.start_line, 4);
        let name = unit.attributes.iter().find(|a| a.value_raw == "{{ domain }}").unwrap();
        assert_eq!(name.value_kind, ValueKind::VariableRef);
        // Six scalar bindings: task name plus five module parameters.
        let scalars = unit.attributes.iter().filter(|a| a.value_kind != ValueKind::Block).count();
        assert_eq!(scalars, 6);
    }

    #[test]
    fn empty_file() {
        let ir = parse_ansible("", "empty.yml");
        assert_eq!(ir.units.len(), 0);
        assert_eq!(ir.comments.len(), 0);
        assert!(ir.cases.is_empty());
        assert!(!ir.parse_failed);
    }

    #[test]
    fn bare_mapping_becomes_bare_unit() {
        let ir = parse_ansible("memcached_listen_ip: \"0.0.0.0\"\n", "vars.yml");
        assert_eq!(ir.units.len(), 1);
        assert_eq!(ir.units[0].kind, "bare");
        let attr = &ir.units[0].attributes[0];
        assert_eq!(attr.key_norm, "memcached_listen_ip");
        assert_eq!(attr.value_raw, "0.0.0.0");
    }

    #[test]
    fn play_with_nested_tasks() {
        let src = r#"---
- name: Add a user
  hosts: all
  gather_facts: false
  tasks:
    - name: Add User
      win_user:
        name: ansible
        password: "@ns1bl3"
        state: present
"#;
        let ir = parse_ansible(src, "play.yml");
        assert_eq!(ir.units.len(), 2);
        let play = &ir.units[0];
        assert_eq!(play.kind, "play");
        assert_eq!(play.name, "Add a user");
        let task = &ir.units[1];
        assert_eq!(task.name, "win_user");
        assert!(task.attributes.iter().any(|a| a.key_norm == "password" && a.value_raw == "@ns1bl3"));
    }

    #[test]
    fn malformed_yaml_degrades() {
        let ir = parse_ansible("key: [\nother: value\n", "bad.yml");
        assert!(ir.parse_failed);
        assert!(!ir.diagnostics.is_empty());
        let keys: Vec<_> = ir.attributes().map(|a| a.key_norm.as_str()).collect();
        assert!(keys.contains(&"key"));
        assert!(keys.contains(&"other"));
    }

    #[test]
    fn comments_are_captured_with_spans() {
        let src = "# header note\nkey: value # inline note\n";
        let ir = parse_ansible(src, "c.yml");
        assert_eq!(ir.comments.len(), 2);
        assert_eq!(ir.comments[0].text, "header note");
        assert_eq!(ir.comments[0].span.start_line, 1);
        assert_eq!(ir.comments[1].text, "inline note");
        assert_eq!(ir.comments[1].span.start_line, 2);
        assert!(!ir.comments[0].is_annotation);
    }

    #[test]
    fn annotation_comments_are_flagged() {
        let src = "# Security smell! Hard-coded secret: please remove it.\npassword: x\n";
        let ir = parse_ansible(src, "a.yml");
        assert!(ir.comments[0].is_annotation);
    }

    #[test]
    fn block_scalars_do_not_leak_attributes() {
        let src = "script: |\n  password: fake\n  other: line\nreal_key: v\n";
        let ir = parse_ansible(src, "b.yml");
        let keys: Vec<_> = ir.attributes().map(|a| a.key_norm.as_str()).collect();
        assert!(!keys.contains(&"password"));
        assert!(keys.contains(&"real_key"));
    }

    #[test]
    fn multi_document_streams_merge() {
        let src = "---\nkey_a: 1\n---\nkey_b: 2\n";
        let ir = parse_ansible(src, "m.yml");
        let keys: Vec<_> = ir.attributes().map(|a| a.key_norm.as_str()).collect();
        assert_eq!(keys, vec!["key_a", "key_b"]);
        assert!(!ir.parse_failed);
    }

    #[test]
    fn source_reassembles_byte_exact() {
        for src in [MYSQL_USER_TASK, "a: 1", "a: 1\r\nb: 2\r\n", ""] {
            let ir = parse_ansible(src, "x.yml");
            assert_eq!(ir.source(), src);
        }
    }

    #[test]
    fn reparse_is_deterministic() {
        let a = parse_ansible(MYSQL_USER_TASK, "x.yml");
        let b = parse_ansible(MYSQL_USER_TASK, "x.yml");
        assert_eq!(a, b);
        assert_eq!(a.source_hash, b.source_hash);
    }
}

//! Puppet (DSL subset) structural scanner.
//!
//! Recognizes `type { 'title': key => value }` resources, classes,
//! `case` statements, and `? { }` selectors. Brace imbalance sets
//! `parse_failed` while line extraction continues.

use std::sync::LazyLock;

use regex::Regex;

use crate::ir::{
    split_lines_keep_ends, strip_matching_quotes, IacLanguage, IrAttribute, IrCase, IrComment,
    IrScript, IrUnit, Span, ValueKind,
};

use super::{classify_value, split_comment, CommentStyle};

static CASE_HEAD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^case\s+(.+?)\s*\{").unwrap());
static CLASS_HEAD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(class|define|node)\s+([\w:'.\-]+)").unwrap());
static RESOURCE_HEAD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(\w+)\s*\{\s*(.*)$").unwrap());
static TITLE_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"^['"]([^'"]*)['"]:\s*$"#).unwrap());
static ARM_HEAD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(.*?):\s*\{").unwrap());
static INLINE_ARM: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"(default|'[^']*'|"[^"]*"|[\w.\-\$]+)\s*:\s*\{"#).unwrap()
});
static ATTR_ARROW: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"^['"]?([\w:.\-/]+)['"]?\s*=>\s*(.*?)\s*[,;]?\s*$"#).unwrap()
});
static VAR_ASSIGN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\$([\w:]+)\s*=\s*([^=~].*?)\s*$").unwrap());
static INLINE_ATTRS: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"([\w:.\-]+)\s*=>\s*('[^']*'|"[^"]*"|[^,}]+)"#).unwrap()
});
static SELECTOR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\?\s*\{").unwrap());
static INLINE_SELECTOR_ARM: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"(default|'[^']*'|"[^"]*"|[\w.\-\$/]+)\s*=>"#).unwrap()
});

enum Construct {
    Case(CaseState),
    Selector(CaseState),
    /// Brace-owning unit (class or resource); index into `script.units`.
    Unit(usize),
}

struct CaseState {
    subject: String,
    arms: usize,
    has_default: bool,
    start_line: usize,
    depth: usize,
}

pub fn parse_puppet(content: &str, path: &str) -> IrScript {
    let mut script = IrScript::empty(IacLanguage::Puppet, path, content);
    let lines = split_lines_keep_ends(content);

    // Items are (depth-before-open, construct); a construct closes when the
    // running depth drops back to its recorded value.
    let mut stack: Vec<(usize, Construct)> = Vec::new();
    // Title-body pseudo-units (`'title':` inside a resource or bare) keyed by depth.
    let mut title_units: Vec<(usize, usize)> = Vec::new();
    let mut bare_unit: Option<usize> = None;
    let mut depth: usize = 0;
    let mut negative = false;
    // A `type {` head whose title appears on a following line.
    let mut pending_title: Option<usize> = None;

    for (idx, raw) in lines.iter().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches(['\n', '\r']);
        let (code, comment) = split_comment(line, CommentStyle::Puppet);
        if let Some(text) = comment {
            script.comments.push(IrComment::new(text, Span::line(line_no)));
        }
        let code = code.trim();
        if code.is_empty() {
            continue;
        }
        let depth_at_start = depth;

        let mut handled_head = false;
        if let Some(caps) = CASE_HEAD.captures(code) {
            let mut state = CaseState {
                subject: caps[1].trim().to_string(),
                arms: 0,
                has_default: false,
                start_line: line_no,
                depth: depth_at_start,
            };
            // One-line bodies: count arm heads in the remainder.
            let remainder = &code[caps.get(0).unwrap().end()..];
            for arm in INLINE_ARM.captures_iter(remainder) {
                if arm[1].trim() == "default" {
                    state.has_default = true;
                } else {
                    state.arms += 1;
                }
            }
            stack.push((depth_at_start, Construct::Case(state)));
            handled_head = true;
        } else if selector_head(code) || SELECTOR.is_match(code) && code.contains("=>") {
            let subject = code
                .split('?')
                .next()
                .map(|s| s.rsplit('=').next().unwrap_or(s).trim().to_string())
                .unwrap_or_default();
            let mut state = CaseState {
                subject,
                arms: 0,
                has_default: false,
                start_line: line_no,
                depth: depth_at_start,
            };
            if let Some(m) = SELECTOR.find(code) {
                for arm in INLINE_SELECTOR_ARM.captures_iter(&code[m.end()..]) {
                    if arm[1].trim() == "default" {
                        state.has_default = true;
                    } else {
                        state.arms += 1;
                    }
                }
            }
            stack.push((depth_at_start, Construct::Selector(state)));
            handled_head = true;
        } else if let Some(caps) = CLASS_HEAD.captures(code) {
            script.units.push(IrUnit {
                kind: caps[1].to_string(),
                name: strip_matching_quotes(&caps[2]),
                attributes: Vec::new(),
                span: Span::line(line_no),
            });
            stack.push((depth_at_start, Construct::Unit(script.units.len() - 1)));
            handled_head = true;
        } else if let Some(caps) = RESOURCE_HEAD.captures(code).filter(|c| {
            !matches!(&c[1], "if" | "else" | "elsif" | "unless" | "case")
        }) {
            let kind = caps[1].to_string();
            let rest = caps[2].trim();
            let (name, body) = split_resource_title(rest);
            script.units.push(IrUnit {
                kind,
                name,
                attributes: Vec::new(),
                span: Span::line(line_no),
            });
            let unit_idx = script.units.len() - 1;
            stack.push((depth_at_start, Construct::Unit(unit_idx)));
            if script.units[unit_idx].name.is_empty() && body.is_empty() {
                pending_title = Some(unit_idx);
            }
            if body.contains("=>") {
                for m in INLINE_ATTRS.captures_iter(&body) {
                    add_attr(&mut script, unit_idx, &m[1], m[2].trim(), line_no);
                }
            }
            handled_head = true;
        }

        if !handled_head {
            if let Some(arm) = arm_capture(&stack, depth_at_start, code) {
                if let Some((_, Construct::Case(c))) = stack.last_mut() {
                    if arm == "default" {
                        c.has_default = true;
                    } else {
                        c.arms += 1;
                    }
                }
            } else if is_selector_arm(&stack, code) {
                if let Some((_, Construct::Selector(c))) = stack.last_mut() {
                    let head = code.split("=>").next().unwrap_or("").trim();
                    if head == "default" {
                        c.has_default = true;
                    } else {
                        c.arms += 1;
                    }
                }
            } else if let Some(caps) = TITLE_LINE.captures(code) {
                let title = caps[1].to_string();
                if let Some(unit_idx) = pending_title.take() {
                    script.units[unit_idx].name = title;
                } else {
                    while title_units.last().is_some_and(|&(d, _)| d >= depth_at_start) {
                        title_units.pop();
                    }
                    script.units.push(IrUnit {
                        kind: "resource".to_string(),
                        name: title,
                        attributes: Vec::new(),
                        span: Span::line(line_no),
                    });
                    title_units.push((depth_at_start, script.units.len() - 1));
                }
            } else if let Some(caps) = ATTR_ARROW.captures(code) {
                let target = attr_target(&mut script, &stack, &title_units, &mut bare_unit, line_no);
                add_attr(&mut script, target, &caps[1], caps[2].trim(), line_no);
            } else if let Some(caps) = VAR_ASSIGN.captures(code) {
                let target = attr_target(&mut script, &stack, &title_units, &mut bare_unit, line_no);
                add_attr(&mut script, target, &caps[1], caps[2].trim(), line_no);
            }
        }

        // Update brace depth and close any constructs whose brace ended.
        let (opens, closes) = brace_delta(code);
        depth += opens;
        for _ in 0..closes {
            if depth == 0 {
                negative = true;
                continue;
            }
            depth -= 1;
            while stack.last().is_some_and(|&(d, _)| d >= depth) {
                let (_, construct) = stack.pop().unwrap();
                close_construct(construct, &mut script, line_no);
            }
            while title_units.last().is_some_and(|&(d, _)| d > depth) {
                title_units.pop();
            }
        }
    }

    let last = lines.len().max(1);
    if depth != 0 || negative {
        script.parse_failed = true;
        script.diagnostics.push(if negative {
            "unbalanced braces: too many '}'".to_string()
        } else {
            format!("unbalanced braces: {depth} unterminated block(s)")
        });
    }
    for (_, construct) in stack.drain(..).rev() {
        close_construct(construct, &mut script, last);
    }
    script.units.sort_by_key(|u| u.span.start_line);
    script.cases.sort_by_key(|c| c.span.start_line);
    script
}

fn close_construct(construct: Construct, script: &mut IrScript, line_no: usize) {
    match construct {
        Construct::Case(c) | Construct::Selector(c) => script.cases.push(IrCase {
            subject: c.subject,
            branch_count: c.arms,
            has_default: c.has_default,
            span: Span::lines(c.start_line, line_no),
        }),
        Construct::Unit(idx) => {
            script.units[idx].span.end_line = script.units[idx].span.end_line.max(line_no);
        }
    }
}

/// `$x = $osfamily ? {`-style selector head without inline arms.
fn selector_head(code: &str) -> bool {
    SELECTOR.is_match(code) && code.trim_end().ends_with('{')
}

fn arm_capture(stack: &[(usize, Construct)], depth_at_start: usize, code: &str) -> Option<String> {
    match stack.last() {
        Some((_, Construct::Case(c))) if depth_at_start == c.depth + 1 => {
            ARM_HEAD.captures(code).map(|m| m[1].trim().trim_matches(['\'', '"']).to_string())
        }
        _ => None,
    }
}

fn is_selector_arm(stack: &[(usize, Construct)], code: &str) -> bool {
    matches!(stack.last(), Some((_, Construct::Selector(_)))) && code.contains("=>")
}

/// Splits `'title': rest` from a resource head remainder.
fn split_resource_title(rest: &str) -> (String, String) {
    static TITLED: LazyLock<Regex> = LazyLock::new(|| {
        Regex::new(r#"^(\[[^\]]*\]|'[^']*'|"[^"]*"|[\w./\-\$]+)\s*:\s*(.*)$"#).unwrap()
    });
    match TITLED.captures(rest) {
        Some(caps) => {
            let raw = caps[1].trim().trim_matches(['[', ']']).trim();
            (strip_matching_quotes(raw), caps[2].trim().to_string())
        }
        None => (String::new(), rest.trim().to_string()),
    }
}

fn attr_target(
    script: &mut IrScript,
    stack: &[(usize, Construct)],
    title_units: &[(usize, usize)],
    bare_unit: &mut Option<usize>,
    line_no: usize,
) -> usize {
    if let Some(&(_, idx)) = title_units.last() {
        return idx;
    }
    for (_, construct) in stack.iter().rev() {
        if let Construct::Unit(idx) = construct {
            return *idx;
        }
    }
    *bare_unit.get_or_insert_with(|| {
        script.units.push(IrUnit {
            kind: "bare".to_string(),
            name: String::new(),
            attributes: Vec::new(),
            span: Span::line(line_no),
        });
        script.units.len() - 1
    })
}

fn add_attr(script: &mut IrScript, unit_idx: usize, key: &str, value: &str, line_no: usize) {
    let stripped = strip_matching_quotes(value);
    let kind = classify_value(&stripped, IacLanguage::Puppet);
    script.units[unit_idx].span.end_line = script.units[unit_idx].span.end_line.max(line_no);
    script.units[unit_idx]
        .attributes
        .push(IrAttribute::new(key, stripped, kind, Span::line(line_no)));
}

/// Brace counts outside quotes.
fn brace_delta(code: &str) -> (usize, usize) {
    let mut in_single = false;
    let mut in_double = false;
    let mut opens = 0;
    let mut closes = 0;
    for ch in code.chars() {
        match ch {
            '\'' if !in_double => in_single = !in_single,
            '"' if !in_single => in_double = !in_double,
            '{' if !in_single && !in_double => opens += 1,
            '}' if !in_single && !in_double => closes += 1,
            _ => {}
        }
    }
    (opens, closes)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ITERM_PACKAGE: &str = r#"package { 'iTerm':
  ensure   => $ensure,
  flavor   => 'zip',
  provider => 'compressed_app',
  source   => "http://www.iterm2.com/downloads/stable/iTerm2-${version}.zip"
}
"#;

    #[test]
    fn resource_with_arrow_attributes() {
        let ir = parse_puppet(ITERM_PACKAGE, "iterm.pp");
        assert!(!ir.parse_failed);
        assert_eq!(ir.units.len(), 1);
        let unit = &ir.units[0];
        assert_eq!(unit.kind, "package");
        assert_eq!(unit.name, "iTerm");
        let source = unit.attributes.iter().find(|a| a.key_norm == "source").unwrap();
        assert!(source.value_raw.contains("http://www.iterm2.com"));
        assert_eq!(source.value_kind, ValueKind::VariableRef);
        let ensure = unit.attributes.iter().find(|a| a.key_norm == "ensure").unwrap();
        assert_eq!(ensure.value_kind, ValueKind::VariableRef);
    }

    #[test]
    fn one_line_case() {
        let ir = parse_puppet("case $os { 'deb': {} }\n", "c.pp");
        assert_eq!(ir.cases.len(), 1);
        assert_eq!(ir.cases[0].subject, "$os");
        assert_eq!(ir.cases[0].branch_count, 1);
        assert!(!ir.cases[0].has_default);
    }

    #[test]
    fn case_with_default_arm() {
        let src = r#"case $osfamily {
  'Debian': {
    $pkg = 'apache2'
  }
  default: {
    $pkg = 'httpd'
  }
}
"#;
        let ir = parse_puppet(src, "c.pp");
        assert_eq!(ir.cases.len(), 1);
        assert_eq!(ir.cases[0].branch_count, 1);
        assert!(ir.cases[0].has_default);
    }

    #[test]
    fn class_with_nested_case() {
        let src = r#"---
class gnome::install{
  case $operatingsystem {
    'Debian': {
      package { ['task-gnome-desktop']:
        ensure => 'installed',
      }
    }
  }
}
"#;
        // The leading `---` line shows up in inspection-task material.
        let ir = parse_puppet(src, "gnome.pp");
        assert_eq!(ir.cases.len(), 1);
        let case = &ir.cases[0];
        assert_eq!(case.subject, "$operatingsystem");
        assert_eq!(case.branch_count, 1);
        assert!(!case.has_default);
        assert!(ir.units.iter().any(|u| u.kind == "class" && u.name == "gnome::install"));
        assert!(ir.units.iter().any(|u| u.kind == "package" && u.name == "task-gnome-desktop"));
    }

    #[test]
    fn bare_title_fragment() {
        let src = "# XXX on windows it's named differently :(\n'C:/builds/moz2_slave':\n  ensure => directory;\n";
        let ir = parse_puppet(src, "frag.pp");
        assert!(!ir.parse_failed);
        assert!(ir.comments[0].text.starts_with("XXX on windows"));
        let unit = ir.units.iter().find(|u| u.name == "C:/builds/moz2_slave").unwrap();
        assert_eq!(unit.attributes[0].key_norm, "ensure");
    }

    #[test]
    fn selector_counts_arms() {
        let src = "$pkg = $osfamily ? {\n  'Debian' => 'apache2',\n  default  => 'httpd',\n}\n";
        let ir = parse_puppet(src, "sel.pp");
        assert_eq!(ir.cases.len(), 1);
        assert_eq!(ir.cases[0].subject, "$osfamily");
        assert_eq!(ir.cases[0].branch_count, 1);
        assert!(ir.cases[0].has_default);
    }

    #[test]
    fn unbalanced_braces_degrade() {
        let src = "class x {\n  user => 'root'\n";
        let ir = parse_puppet(src, "b.pp");
        assert!(ir.parse_failed);
        assert!(ir.attributes().any(|a| a.key_norm == "user"));
    }

    #[test]
    fn interpolation_in_braces_is_not_structure() {
        let src = "file { 'x':\n  content => \"${a}b\",\n}\n";
        let ir = parse_puppet(src, "i.pp");
        assert!(!ir.parse_failed);
    }
}

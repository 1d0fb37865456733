//! The nine weakness rules, evaluated over an [`IrScript`].

mod config;

pub use config::RuleConfig;

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::annotate::advice;
use crate::ir::{IrAttribute, IrScript, IrUnit, SmellType, Span, ValueKind};

/// One located weakness instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detection {
    pub smell: SmellType,
    pub span: Span,
    /// Matched key/value/comment excerpt, at most 120 characters.
    pub evidence: String,
    /// Fixed advice sentence for the smell.
    pub message: String,
}

impl Detection {
    fn new(smell: SmellType, span: Span, evidence: &str) -> Detection {
        Detection {
            smell,
            span,
            evidence: truncate(evidence, 120),
            message: advice(smell).to_string(),
        }
    }
}

fn truncate(s: &str, max: usize) -> String {
    if s.chars().count() <= max {
        s.to_string()
    } else {
        s.chars().take(max).collect()
    }
}

/// `0.0.0.0` as an exact dotted quad; an optional `:port` still matches,
/// while a trailing `/`, digit, or dot (CIDR ranges, longer addresses)
/// does not.
static UNRESTRICTED_IP: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?:^|[^0-9.])0\.0\.0\.0(?::\d+)?(?:$|[^0-9./])").unwrap()
});

/// Values that are boolean flags rather than secrets (`update_password: true`).
const BOOLEAN_VALUES: &[&str] = &["true", "false", "yes", "no"];

/// Runs all nine rules and returns detections sorted by
/// (start line, smell, column).
pub fn detect(script: &IrScript, cfg: &RuleConfig) -> Vec<Detection> {
    let mut out = Vec::new();
    let weak_re = token_regex(&cfg.weak_algo_tokens);
    let suspicious_re = token_regex(&cfg.suspicious_tokens);

    for unit in &script.units {
        for attr in &unit.attributes {
            scan_attribute(unit, attr, cfg, &weak_re, &mut out);
        }
    }

    for comment in &script.comments {
        if comment.is_annotation {
            continue;
        }
        if suspicious_re.is_match(&comment.text) {
            out.push(Detection::new(SmellType::SuspiciousComment, comment.span, &comment.text));
        }
    }

    for case in &script.cases {
        if !case.has_default {
            let evidence = format!("case {}", case.subject);
            out.push(Detection::new(SmellType::MissingDefaultCase, case.span, &evidence));
        }
    }

    out.sort_by_key(|d| (d.span.start_line, d.smell, d.span.start_col));
    out
}

fn scan_attribute(
    unit: &IrUnit,
    attr: &IrAttribute,
    cfg: &RuleConfig,
    weak_re: &Regex,
    out: &mut Vec<Detection>,
) {
    let key = attr.key_norm.as_str();
    let value_lower = attr.value_raw.to_ascii_lowercase();
    let evidence = format!("{}: {}", attr.key_raw, attr.value_raw);
    let literal = attr.value_kind == ValueKind::Literal;

    // R1 admin by default.
    let admin_fired = literal
        && cfg.user_keys.contains(key)
        && cfg.privileged_values.contains(value_lower.as_str());
    if admin_fired {
        out.push(Detection::new(SmellType::AdminByDefault, attr.span, &evidence));
    }

    // R2 empty password.
    let empty_fired = attr.value_kind == ValueKind::Empty && cfg.password_keys.contains(key);
    if empty_fired {
        out.push(Detection::new(SmellType::EmptyPassword, attr.span, &evidence));
    }

    // R3 hard-coded secret. An attribute that already fired R1 or R2 is
    // exempt; so are boolean flags and wildcard selector values.
    if literal
        && !admin_fired
        && !empty_fired
        && cfg.secret_keys.contains(key)
        && !attr.value_raw.is_empty()
        && !BOOLEAN_VALUES.contains(&value_lower.as_str())
        && !cfg.nonsecret_values.contains(value_lower.as_str())
    {
        out.push(Detection::new(SmellType::HardCodedSecret, attr.span, &evidence));
    }

    // R4 unrestricted IP address.
    if literal && UNRESTRICTED_IP.is_match(&attr.value_raw) {
        out.push(Detection::new(SmellType::UnrestrictedIpAddress, attr.span, &evidence));
    }

    // R6 HTTP without TLS.
    if literal && value_lower.contains("http://") && !host_allowlisted(&value_lower, cfg) {
        out.push(Detection::new(SmellType::HttpWithoutTls, attr.span, &evidence));
    }

    // R7 weak cryptography tokens in the value or the key itself.
    if (literal && weak_re.is_match(&value_lower)) || weak_re.is_match(key) {
        out.push(Detection::new(SmellType::WeakCryptoAlgorithm, attr.span, &evidence));
    }

    // R8 no integrity check: (a) an explicitly disabled signature check.
    if literal
        && cfg.integrity_disable_keys.contains(key)
        && matches!(value_lower.as_str(), "false" | "no" | "0")
    {
        out.push(Detection::new(SmellType::NoIntegrityCheck, attr.span, &evidence));
    }

    // R8 (b): a downloadable artifact with no checksum-like sibling.
    if literal
        && attr.value_raw.contains("://")
        && has_artifact_extension(&value_lower, cfg)
        && !unit.attributes.iter().any(|sib| cfg.checksum_keys.contains(sib.key_norm.as_str()))
    {
        out.push(Detection::new(SmellType::NoIntegrityCheck, attr.span, &evidence));
    }
}

fn has_artifact_extension(value_lower: &str, cfg: &RuleConfig) -> bool {
    let path = value_lower.split(['?', '#']).next().unwrap_or(value_lower).trim_end_matches('/');
    cfg.artifact_extensions.iter().any(|ext| path.ends_with(ext.as_str()))
}

fn host_allowlisted(value_lower: &str, cfg: &RuleConfig) -> bool {
    if cfg.http_allowlist.is_empty() {
        return false;
    }
    value_lower.split("http://").skip(1).all(|rest| {
        let host = rest.split(['/', ':', '"', '\'', ' ']).next().unwrap_or("");
        cfg.http_allowlist.iter().any(|allowed| host.contains(allowed.as_str()))
    })
}

/// Case-insensitive word-boundary alternation over a token set. Token sets
/// are tiny and configs long-lived, so rebuilding is cheap; the common
/// default sets are cached.
fn token_regex(tokens: &std::collections::BTreeSet<String>) -> Regex {
    use std::collections::HashMap;
    use std::sync::Mutex;
    static CACHE: LazyLock<Mutex<HashMap<String, Regex>>> =
        LazyLock::new(|| Mutex::new(HashMap::new()));

    let mut alternation = tokens.iter().map(|t| regex::escape(t)).collect::<Vec<_>>();
    // Longest first so `sha-1` wins over `sha1` prefixes.
    alternation.sort_by_key(|t| std::cmp::Reverse(t.len()));
    let pattern = format!(r"(?i)\b(?:{})\b", alternation.join("|"));

    let mut cache = CACHE.lock().unwrap();
    cache
        .entry(pattern.clone())
        .or_insert_with(|| Regex::new(&pattern).unwrap())
        .clone()
}

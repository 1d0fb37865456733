//! Technology-agnostic representation of an IaC script.
//!
//! All three dialect parsers emit this model and every detection rule
//! consumes it. The model is deliberately flat: units with key/value
//! attributes, comments, and case constructs are all the rules need.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CoreError;

/// IaC dialect of a script.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IacLanguage {
    Ansible,
    Chef,
    Puppet,
}

impl IacLanguage {
    pub fn as_str(&self) -> &'static str {
        match self {
            IacLanguage::Ansible => "ansible",
            IacLanguage::Chef => "chef",
            IacLanguage::Puppet => "puppet",
        }
    }

    /// Display name used when instructions talk about the script.
    pub fn display_name(&self) -> &'static str {
        match self {
            IacLanguage::Ansible => "Ansible",
            IacLanguage::Chef => "Chef",
            IacLanguage::Puppet => "Puppet",
        }
    }

    /// Canonical file extension for the dialect.
    pub fn extension(&self) -> &'static str {
        match self {
            IacLanguage::Ansible => "yml",
            IacLanguage::Chef => "rb",
            IacLanguage::Puppet => "pp",
        }
    }

    pub fn from_str_loose(s: &str) -> Option<IacLanguage> {
        match s.to_ascii_lowercase().as_str() {
            "ansible" | "yaml" | "yml" => Some(IacLanguage::Ansible),
            "chef" | "ruby" | "rb" => Some(IacLanguage::Chef),
            "puppet" | "pp" => Some(IacLanguage::Puppet),
            _ => None,
        }
    }
}

impl std::fmt::Display for IacLanguage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The nine security weakness categories the scanner recognizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmellType {
    AdminByDefault,
    EmptyPassword,
    HardCodedSecret,
    UnrestrictedIpAddress,
    SuspiciousComment,
    HttpWithoutTls,
    WeakCryptoAlgorithm,
    NoIntegrityCheck,
    MissingDefaultCase,
}

impl SmellType {
    pub const ALL: [SmellType; 9] = [
        SmellType::AdminByDefault,
        SmellType::EmptyPassword,
        SmellType::HardCodedSecret,
        SmellType::UnrestrictedIpAddress,
        SmellType::SuspiciousComment,
        SmellType::HttpWithoutTls,
        SmellType::WeakCryptoAlgorithm,
        SmellType::NoIntegrityCheck,
        SmellType::MissingDefaultCase,
    ];

    /// Display title, as written in annotation comments.
    pub fn canonical_title(&self) -> &'static str {
        match self {
            SmellType::AdminByDefault => "Admin by default",
            SmellType::EmptyPassword => "Empty password",
            SmellType::HardCodedSecret => "Hard-coded secret",
            SmellType::UnrestrictedIpAddress => "Unrestricted IP address",
            SmellType::SuspiciousComment => "Suspicious comment",
            SmellType::HttpWithoutTls => "Use of HTTP without SSL/TLS",
            SmellType::WeakCryptoAlgorithm => "Weak cryptography algorithm",
            SmellType::NoIntegrityCheck => "No integrity check",
            SmellType::MissingDefaultCase => "Missing default in case statement",
        }
    }

    /// CWE identifier of the weakness category.
    pub fn cwe_id(&self) -> u32 {
        match self {
            SmellType::AdminByDefault => 250,
            SmellType::EmptyPassword => 258,
            SmellType::HardCodedSecret => 798,
            SmellType::UnrestrictedIpAddress => 284,
            SmellType::SuspiciousComment => 546,
            SmellType::HttpWithoutTls => 319,
            SmellType::WeakCryptoAlgorithm => 327,
            SmellType::NoIntegrityCheck => 494,
            SmellType::MissingDefaultCase => 478,
        }
    }

    /// Stable snake_case identifier, matching the serde representation.
    pub fn ident(&self) -> &'static str {
        match self {
            SmellType::AdminByDefault => "admin_by_default",
            SmellType::EmptyPassword => "empty_password",
            SmellType::HardCodedSecret => "hard_coded_secret",
            SmellType::UnrestrictedIpAddress => "unrestricted_ip_address",
            SmellType::SuspiciousComment => "suspicious_comment",
            SmellType::HttpWithoutTls => "http_without_tls",
            SmellType::WeakCryptoAlgorithm => "weak_crypto_algorithm",
            SmellType::NoIntegrityCheck => "no_integrity_check",
            SmellType::MissingDefaultCase => "missing_default_case",
        }
    }

    pub fn from_title(title: &str) -> Option<SmellType> {
        SmellType::ALL
            .iter()
            .copied()
            .find(|s| s.canonical_title().eq_ignore_ascii_case(title.trim()))
    }
}

impl std::fmt::Display for SmellType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.canonical_title())
    }
}

/// Line-oriented source region. Lines are 1-based; `start_col` is 1-based
/// with 0 meaning unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start_line: usize,
    pub end_line: usize,
    #[serde(default)]
    pub start_col: usize,
}

impl Span {
    pub fn line(line: usize) -> Span {
        Span { start_line: line, end_line: line, start_col: 0 }
    }

    pub fn lines(start: usize, end: usize) -> Span {
        debug_assert!(start >= 1 && end >= start);
        Span { start_line: start, end_line: end, start_col: 0 }
    }
}

/// Shape of an attribute value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    /// Plain scalar with no interpolation.
    Literal,
    /// Value contains dialect-specific variable interpolation.
    VariableRef,
    /// Empty after stripping quotes.
    Empty,
    /// Key introduces a nested block rather than a scalar.
    Block,
}

/// One key/value binding inside a unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrAttribute {
    pub key_raw: String,
    pub key_norm: String,
    pub value_raw: String,
    pub value_kind: ValueKind,
    pub span: Span,
}

impl IrAttribute {
    pub fn new(key_raw: &str, value_raw: String, value_kind: ValueKind, span: Span) -> IrAttribute {
        IrAttribute {
            key_raw: key_raw.to_string(),
            key_norm: normalize_key(key_raw),
            value_raw,
            value_kind,
            span,
        }
    }
}

/// A comment line. `text` has the leading `#` and one following space removed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrComment {
    pub text: String,
    pub span: Span,
    pub is_annotation: bool,
}

impl IrComment {
    pub fn new(text: String, span: Span) -> IrComment {
        let is_annotation = text.starts_with(crate::annotate::ANNOTATION_TEXT_PREFIX);
        IrComment { text, span, is_annotation }
    }
}

/// A case/when (Chef) or case/selector (Puppet) construct.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrCase {
    pub subject: String,
    /// Number of non-default arms.
    pub branch_count: usize,
    pub has_default: bool,
    pub span: Span,
}

/// A grouping construct: play, task, resource, class, or the synthetic
/// "bare" unit holding top-level bindings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrUnit {
    pub kind: String,
    pub name: String,
    pub attributes: Vec<IrAttribute>,
    pub span: Span,
}

/// Parsed form of one IaC file. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrScript {
    pub language: IacLanguage,
    pub source_path: String,
    /// Hex SHA-256 of the raw source bytes.
    pub source_hash: String,
    /// Raw source lines, each keeping its own line terminator, so that
    /// joining them reproduces the input byte-for-byte.
    pub lines: Vec<String>,
    pub units: Vec<IrUnit>,
    pub comments: Vec<IrComment>,
    pub cases: Vec<IrCase>,
    /// Set when the dialect-level parse failed and the script was degraded
    /// to line extraction.
    pub parse_failed: bool,
    /// Human-readable parse diagnostics (empty when parse_failed is false).
    pub diagnostics: Vec<String>,
}

impl IrScript {
    pub fn empty(language: IacLanguage, path: &str, content: &str) -> IrScript {
        IrScript {
            language,
            source_path: path.to_string(),
            source_hash: content_hash(content.as_bytes()),
            lines: split_lines_keep_ends(content),
            units: Vec::new(),
            comments: Vec::new(),
            cases: Vec::new(),
            parse_failed: false,
            diagnostics: Vec::new(),
        }
    }

    /// Reassembles the original source text.
    pub fn source(&self) -> String {
        self.lines.concat()
    }

    pub fn line_count(&self) -> usize {
        self.lines.len()
    }

    /// Content of one line without its terminator. Lines are 1-based.
    pub fn line_text(&self, line: usize) -> &str {
        self.lines
            .get(line - 1)
            .map(|l| l.trim_end_matches(['\n', '\r']))
            .unwrap_or("")
    }

    /// Iterates every attribute across all units.
    pub fn attributes(&self) -> impl Iterator<Item = &IrAttribute> {
        self.units.iter().flat_map(|u| u.attributes.iter())
    }

    /// Attributes paired with the unit that owns them.
    pub fn attributes_with_unit(&self) -> impl Iterator<Item = (&IrUnit, &IrAttribute)> {
        self.units.iter().flat_map(|u| u.attributes.iter().map(move |a| (u, a)))
    }
}

/// Hex SHA-256 digest of raw bytes.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex_encode(&hasher.finalize())
}

/// Hash that ignores all whitespace, used for near-duplicate exclusion.
pub fn normalized_hash(content: &str) -> String {
    let mut hasher = Sha256::new();
    for ch in content.chars().filter(|c| !c.is_whitespace()) {
        let mut buf = [0u8; 4];
        hasher.update(ch.encode_utf8(&mut buf).as_bytes());
    }
    hex_encode(&hasher.finalize())
}

fn hex_encode(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Splits text into lines that keep their terminators (`\n` or `\r\n`).
/// Concatenating the result reproduces the input exactly.
pub fn split_lines_keep_ends(content: &str) -> Vec<String> {
    let mut lines = Vec::new();
    let mut start = 0;
    let bytes = content.as_bytes();
    for (i, b) in bytes.iter().enumerate() {
        if *b == b'\n' {
            lines.push(content[start..=i].to_string());
            start = i + 1;
        }
    }
    if start < content.len() {
        lines.push(content[start..].to_string());
    }
    lines
}

/// Lowercases a key, strips surrounding quotes, and keeps only the last
/// `.`/`::`-separated segment. Idempotent.
pub fn normalize_key(key: &str) -> String {
    let mut k = key.trim().to_ascii_lowercase();
    loop {
        let stripped = strip_matching_quotes(&k);
        if stripped == k {
            break;
        }
        k = stripped;
    }
    let k = k.rsplit("::").next().unwrap_or(&k);
    let k = k.rsplit('.').next().unwrap_or(k);
    k.trim().to_string()
}

/// Removes one pair of matching outer quotes, if present.
pub fn strip_matching_quotes(s: &str) -> String {
    let t = s.trim();
    if t.len() >= 2 {
        let first = t.chars().next().unwrap();
        let last = t.chars().last().unwrap();
        if (first == '"' && last == '"') || (first == '\'' && last == '\'') {
            return t[1..t.len() - 1].to_string();
        }
    }
    t.to_string()
}

/// Determines the dialect of a file from its extension, falling back to
/// content sniffing for unknown extensions.
pub fn infer_language(path: &str, content: &str) -> Result<IacLanguage, CoreError> {
    if path.is_empty() {
        return Err(CoreError::UnknownLanguage { path: path.to_string() });
    }
    let ext = std::path::Path::new(path)
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    match ext.as_deref() {
        Some("yml") | Some("yaml") => return Ok(IacLanguage::Ansible),
        Some("rb") => return Ok(IacLanguage::Chef),
        Some("pp") => return Ok(IacLanguage::Puppet),
        _ => {}
    }
    if content.contains("---") && content.contains("- name:") {
        return Ok(IacLanguage::Ansible);
    }
    if content.contains("do") && content.contains("end") && content.contains("package ") {
        return Ok(IacLanguage::Chef);
    }
    if content.contains("class ") && content.contains('{') && content.contains("=>") {
        return Ok(IacLanguage::Puppet);
    }
    Err(CoreError::UnknownLanguage { path: path.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extension_rules() {
        assert_eq!(infer_language("site.yml", "").unwrap(), IacLanguage::Ansible);
        assert_eq!(infer_language("default.rb", "").unwrap(), IacLanguage::Chef);
        assert_eq!(infer_language("init.pp", "").unwrap(), IacLanguage::Puppet);
        assert_eq!(infer_language("roles/a/tasks/main.yaml", "").unwrap(), IacLanguage::Ansible);
    }

    #[test]
    fn content_sniffing() {
        let ansible = "---\n- name: do things\n  hosts: all\n";
        assert_eq!(infer_language("playbook", ansible).unwrap(), IacLanguage::Ansible);
        let chef = "package 'x' do\n  action :install\nend\n";
        assert_eq!(infer_language("recipe", chef).unwrap(), IacLanguage::Chef);
        let puppet = "class x {\n  ensure => present,\n}\n";
        assert_eq!(infer_language("manifest", puppet).unwrap(), IacLanguage::Puppet);
    }

    #[test]
    fn unknown_language_is_an_error() {
        assert!(matches!(
            infer_language("notes.txt", "hello"),
            Err(CoreError::UnknownLanguage { .. })
        ));
        assert!(infer_language("", "").is_err());
    }

    #[test]
    fn key_normalization() {
        assert_eq!(normalize_key("Password"), "password");
        assert_eq!(normalize_key("community.mysql.mysql_user"), "mysql_user");
        assert_eq!(normalize_key("dirs::builds::moz2_slave"), "moz2_slave");
        assert_eq!(normalize_key("\"login_password\""), "login_password");
        assert_eq!(normalize_key("'uri'"), "uri");
    }

    #[test]
    fn key_normalization_is_idempotent() {
        for k in ["A.B.C", "\"x::y\"", "  Secret  ", "''", "a"] {
            let once = normalize_key(k);
            assert_eq!(normalize_key(&once), once);
        }
    }

    #[test]
    fn lines_round_trip_exactly() {
        for content in [
            "a\nb\nc\n",
            "a\nb\nc",
            "",
            "\n",
            "a\r\nb\r\n",
            "mixed\r\nendings\nhere",
        ] {
            let lines = split_lines_keep_ends(content);
            assert_eq!(lines.concat(), content);
        }
    }

    #[test]
    fn smell_titles_are_unique() {
        let mut titles: Vec<_> = SmellType::ALL.iter().map(|s| s.canonical_title()).collect();
        titles.sort_unstable();
        titles.dedup();
        assert_eq!(titles.len(), 9);
    }

    #[test]
    fn cwe_ids_match_catalog() {
        assert_eq!(SmellType::AdminByDefault.cwe_id(), 250);
        assert_eq!(SmellType::EmptyPassword.cwe_id(), 258);
        assert_eq!(SmellType::HardCodedSecret.cwe_id(), 798);
        assert_eq!(SmellType::UnrestrictedIpAddress.cwe_id(), 284);
        assert_eq!(SmellType::SuspiciousComment.cwe_id(), 546);
        assert_eq!(SmellType::HttpWithoutTls.cwe_id(), 319);
        assert_eq!(SmellType::WeakCryptoAlgorithm.cwe_id(), 327);
        assert_eq!(SmellType::NoIntegrityCheck.cwe_id(), 494);
        assert_eq!(SmellType::MissingDefaultCase.cwe_id(), 478);
    }

    #[test]
    fn hashes_are_stable_and_whitespace_insensitive() {
        assert_eq!(content_hash(b"abc"), content_hash(b"abc"));
        assert_ne!(content_hash(b"abc"), content_hash(b"abd"));
        assert_eq!(normalized_hash("a b\nc"), normalized_hash("ab\tc"));
        assert_ne!(normalized_hash("abc"), normalized_hash("abd"));
    }
}

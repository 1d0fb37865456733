//! Keyword configuration for the detection rules.
//!
//! The rule keyword lists are overridable so deployments can tune them
//! without recompiling; defaults are chosen to pass the golden corpus.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// Lowercased keyword sets driving the nine rules. All matching against
/// these sets happens on lowercased, quote-stripped text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleConfig {
    pub password_keys: BTreeSet<String>,
    pub user_keys: BTreeSet<String>,
    pub secret_keys: BTreeSet<String>,
    pub privileged_values: BTreeSet<String>,
    pub suspicious_tokens: BTreeSet<String>,
    pub weak_algo_tokens: BTreeSet<String>,
    pub integrity_disable_keys: BTreeSet<String>,
    pub checksum_keys: BTreeSet<String>,
    pub artifact_extensions: BTreeSet<String>,
    /// Host substrings exempt from the HTTP rule.
    pub http_allowlist: BTreeSet<String>,
    /// Wildcard-ish values that are never treated as hard-coded secrets
    /// (`user: all` selects every user, it does not expose one).
    pub nonsecret_values: BTreeSet<String>,
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for RuleConfig {
    fn default() -> Self {
        let password_keys =
            set(&["password", "passwd", "pwd", "pass", "login_password", "root_password"]);
        let user_keys = set(&["user", "username", "remote_user", "become_user", "owner", "admin_user"]);
        let mut secret_keys: BTreeSet<String> = password_keys.union(&user_keys).cloned().collect();
        secret_keys.extend(set(&[
            "secret",
            "token",
            "api_key",
            "apikey",
            "private_key",
            "ssh_key",
            "cert",
            "credential",
        ]));
        RuleConfig {
            password_keys,
            user_keys,
            secret_keys,
            privileged_values: set(&["root", "admin", "administrator"]),
            suspicious_tokens: set(&["todo", "fixme", "hack", "xxx", "bug", "workaround"]),
            weak_algo_tokens: set(&["md4", "md5", "sha1", "sha-1", "rc4", "arcfour"]),
            integrity_disable_keys: set(&["gpgcheck", "repo_gpgcheck"]),
            checksum_keys: set(&[
                "checksum",
                "sha256",
                "sha256sum",
                "sha512",
                "sha512sum",
                "gpg",
                "gpgcheck",
                "signature",
            ]),
            artifact_extensions: set(&[
                ".tar", ".tar.gz", ".tgz", ".zip", ".gz", ".bz2", ".deb", ".rpm", ".jar", ".sh",
            ]),
            http_allowlist: BTreeSet::new(),
            nonsecret_values: set(&["all", "any", "none", "null", "nil", "undef", "undefined", "*"]),
        }
    }
}

impl RuleConfig {
    /// Loads overrides from a TOML file; keys not present keep defaults.
    pub fn from_toml_file(path: &Path) -> Result<RuleConfig, CoreError> {
        let text = std::fs::read_to_string(path)?;
        RuleConfig::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<RuleConfig, CoreError> {
        let mut cfg: RuleConfig =
            toml::from_str(text).map_err(|e| CoreError::InvalidConfig(e.to_string()))?;
        cfg.lowercase_all();
        Ok(cfg)
    }

    fn lowercase_all(&mut self) {
        for field in [
            &mut self.password_keys,
            &mut self.user_keys,
            &mut self.secret_keys,
            &mut self.privileged_values,
            &mut self.suspicious_tokens,
            &mut self.weak_algo_tokens,
            &mut self.integrity_disable_keys,
            &mut self.checksum_keys,
            &mut self.artifact_extensions,
            &mut self.http_allowlist,
            &mut self.nonsecret_values,
        ] {
            *field = field.iter().map(|s| s.to_ascii_lowercase()).collect();
        }
    }
}

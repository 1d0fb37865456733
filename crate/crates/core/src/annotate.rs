//! Inserts and removes security-smell comments.
//!
//! Each detection gets a comment line directly above its start line:
//!
//! ```text
//! # Security smell! Hard-coded secret: please remove hard-coded secrets to prevent exposure of sensitive information.
//! ```
//!
//! The grammar is `# Security smell! <Title>: <advice>` with one fixed
//! advice sentence per smell. Annotation lines are what the training
//! pairs and the response parser key on, so the format is frozen.

use std::collections::BTreeMap;

use crate::detect::Detection;
use crate::error::CoreError;
use crate::ir::{split_lines_keep_ends, IrScript, SmellType};

/// Comment prefix including the `#`.
pub const ANNOTATION_PREFIX: &str = "# Security smell!";
/// Prefix of the comment text after the `#` is stripped.
pub const ANNOTATION_TEXT_PREFIX: &str = "Security smell!";

/// Fixed advice sentence per smell.
pub fn advice(smell: SmellType) -> &'static str {
    match smell {
        SmellType::AdminByDefault => {
            "please avoid default administrative privileges; follow least privilege."
        }
        SmellType::EmptyPassword => "please set a strong, non-empty password.",
        SmellType::HardCodedSecret => {
            "please remove hard-coded secrets to prevent exposure of sensitive information."
        }
        SmellType::UnrestrictedIpAddress => "please do not bind to 0.0.0.0.",
        SmellType::SuspiciousComment => "please resolve the issue referenced by this comment.",
        SmellType::HttpWithoutTls => {
            "please use HTTPS instead of HTTP to prevent man-in-the-middle attacks."
        }
        SmellType::WeakCryptoAlgorithm => {
            "please use a strong cryptographic algorithm such as SHA-256."
        }
        SmellType::NoIntegrityCheck => {
            "please verify downloaded content with checksums or GPG signatures."
        }
        SmellType::MissingDefaultCase => "please handle all input cases in conditionals.",
    }
}

/// The full annotation body for a smell, without indentation.
pub fn annotation_body(smell: SmellType) -> String {
    format!("{} {}: {}", ANNOTATION_PREFIX, smell.canonical_title(), advice(smell))
}

/// True for lines produced by [`annotate`].
pub fn is_annotation_line(line: &str) -> bool {
    line.trim_start().starts_with(ANNOTATION_PREFIX)
}

/// Inserts one annotation comment above each detection site. Original
/// lines are preserved byte-for-byte; multiple detections on one line
/// stack in smell-name order; re-annotating inserts nothing new.
pub fn annotate(script: &IrScript, detections: &[Detection]) -> Result<String, CoreError> {
    let line_count = script.line_count();
    for d in detections {
        if d.span.start_line == 0 || d.span.start_line > line_count {
            return Err(CoreError::SpanOutOfRange { line: d.span.start_line, line_count });
        }
    }

    // Wanted annotation bodies per target line, in smell-name order (the
    // shared prefix makes plain string order equal title order).
    let mut wants: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for d in detections {
        wants.entry(d.span.start_line).or_default().push(annotation_body(d.smell));
    }
    for bodies in wants.values_mut() {
        bodies.sort();
    }

    let mut out = String::with_capacity(script.source().len() + detections.len() * 100);
    for (idx, raw) in script.lines.iter().enumerate() {
        let line_no = idx + 1;
        if let Some(bodies) = wants.get(&line_no) {
            let text = raw.trim_end_matches(['\n', '\r']);
            let indent: String = text.chars().take_while(|c| c.is_whitespace()).collect();
            let terminator = if raw.ends_with("\r\n") { "\r\n" } else { "\n" };

            // Count annotations already stacked directly above this line.
            let mut existing: Vec<&str> = Vec::new();
            let mut j = idx;
            while j > 0 && is_annotation_line(&script.lines[j - 1]) {
                existing.push(script.lines[j - 1].trim_start().trim_end_matches(['\n', '\r']));
                j -= 1;
            }

            let mut distinct: Vec<&String> = Vec::new();
            for body in bodies {
                if distinct.last().map(|b| b.as_str()) != Some(body.as_str()) {
                    distinct.push(body);
                }
            }
            for body in distinct {
                let want = bodies.iter().filter(|b| *b == body).count();
                let have = existing.iter().filter(|e| **e == body.as_str()).count();
                for _ in have..want {
                    out.push_str(&indent);
                    out.push_str(body);
                    out.push_str(terminator);
                }
            }
        }
        out.push_str(raw);
    }
    Ok(out)
}

/// Removes every annotation line; exact inverse of [`annotate`].
pub fn strip_annotations(content: &str) -> String {
    split_lines_keep_ends(content)
        .into_iter()
        .filter(|l| !is_annotation_line(l))
        .collect()
}

//! Detection serialization: flat JSON records and SARIF 2.1.0.

use serde_json::{json, Value};

use crate::detect::Detection;
use crate::ir::SmellType;

/// SARIF rule id, e.g. `IAC-CWE-798`.
pub fn rule_id(smell: SmellType) -> String {
    format!("IAC-CWE-{}", smell.cwe_id())
}

/// One JSON object per detection, carrying the file path alongside.
pub fn detections_to_json(path: &str, detections: &[Detection]) -> Vec<Value> {
    detections
        .iter()
        .map(|d| {
            json!({
                "path": path,
                "smell": d.smell.ident(),
                "title": d.smell.canonical_title(),
                "cwe": d.smell.cwe_id(),
                "rule_id": rule_id(d.smell),
                "start_line": d.span.start_line,
                "end_line": d.span.end_line,
                "start_col": d.span.start_col,
                "evidence": d.evidence,
                "message": d.message,
            })
        })
        .collect()
}

/// SARIF 2.1.0 log with one run covering all scanned files.
pub fn sarif_report(findings: &[(String, Vec<Detection>)], tool_version: &str) -> Value {
    let rules: Vec<Value> = SmellType::ALL
        .iter()
        .map(|s| {
            json!({
                "id": rule_id(*s),
                "name": s.ident(),
                "shortDescription": { "text": s.canonical_title() },
                "fullDescription": { "text": crate::annotate::advice(*s) },
                "properties": { "cwe": format!("CWE-{}", s.cwe_id()) },
            })
        })
        .collect();

    let results: Vec<Value> = findings
        .iter()
        .flat_map(|(path, detections)| {
            detections.iter().map(move |d| {
                json!({
                    "ruleId": rule_id(d.smell),
                    "level": "warning",
                    "message": { "text": format!("{}: {}", d.smell.canonical_title(), d.message) },
                    "locations": [{
                        "physicalLocation": {
                            "artifactLocation": { "uri": path },
                            "region": {
                                "startLine": d.span.start_line,
                                "endLine": d.span.end_line,
                            }
                        }
                    }]
                })
            })
        })
        .collect();

    json!({
        "$schema": "https://raw.githubusercontent.com/oasis-tcs/sarif-spec/master/Schemata/sarif-schema-2.1.0.json",
        "version": "2.1.0",
        "runs": [{
            "tool": {
                "driver": {
                    "name": "iacsec",
                    "version": tool_version,
                    "informationUri": "https://example.invalid/iacsec",
                    "rules": rules,
                }
            },
            "results": results,
        }]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::{detect, RuleConfig};
    use crate::parse::parse_ansible;

    #[test]
    fn sarif_has_required_structure() {
        let ir = parse_ansible("password: x\n", "a.yml");
        let found = detect(&ir, &RuleConfig::default());
        let report = sarif_report(&[("a.yml".to_string(), found)], "0.1.0");

        assert_eq!(report["version"], "2.1.0");
        assert!(report["$schema"].as_str().unwrap().contains("sarif-schema-2.1.0"));
        let runs = report["runs"].as_array().unwrap();
        assert_eq!(runs.len(), 1);
        let driver = &runs[0]["tool"]["driver"];
        assert!(driver["name"].is_string());
        assert_eq!(driver["rules"].as_array().unwrap().len(), 9);
        let results = runs[0]["results"].as_array().unwrap();
        assert_eq!(results.len(), 1);
        assert_eq!(results[0]["ruleId"], "IAC-CWE-798");
        let region = &results[0]["locations"][0]["physicalLocation"]["region"];
        assert_eq!(region["startLine"], 1);
    }

    #[test]
    fn json_records_carry_rule_metadata() {
        let ir = parse_ansible("gpgcheck: no\n", "r.yml");
        let found = detect(&ir, &RuleConfig::default());
        let rows = detections_to_json("r.yml", &found);
        assert_eq!(rows[0]["rule_id"], "IAC-CWE-494");
        assert_eq!(rows[0]["smell"], "no_integrity_check");
        assert_eq!(rows[0]["path"], "r.yml");
    }
}

//! CSV and JSON writers. JSON keys are emitted in sorted order and every
//! summary embeds the resolved config plus the crate version, so a result
//! file is reproducible from its own metadata.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{json, Value};

use crate::config::Config;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// RFC-4180-style quoting: quote only when the field contains a comma,
/// quote, CR or LF; double embedded quotes.
pub fn csv_field(field: &str) -> String {
    if field.contains([',', '"', '\r', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

pub fn csv_line(fields: &[String]) -> String {
    fields
        .iter()
        .map(|f| csv_field(f))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&csv_line(
        &header.iter().map(|h| h.to_string()).collect::<Vec<_>>(),
    ));
    out.push('\n');
    for row in rows {
        out.push_str(&csv_line(row));
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Wrap an experiment result with its provenance and write it as JSON.
/// serde_json maps are BTree-backed, so key order is stable.
pub fn summary(config: &Config, results: Value) -> Value {
    let resolved: BTreeMap<String, String> = config.resolved();
    json!({
        "config": resolved,
        "results": results,
        "version": VERSION,
    })
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoting() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
        assert_eq!(csv_line(&["1".into(), "x,y".into()]), "1,\"x,y\"");
    }

    #[test]
    fn json_key_order_is_sorted() {
        let v = json!({"zeta": 1, "alpha": 2});
        assert_eq!(
            serde_json::to_string(&v).unwrap(),
            "{\"alpha\":2,\"zeta\":1}"
        );
    }
}

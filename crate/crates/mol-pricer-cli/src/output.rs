//! Table serialization: csv with a hash header comment, or json.
//!
//! Numbers print through the shortest-roundtrip formatter, so identical
//! inputs give byte-identical output.

use serde::Serialize;
use serde_json::{json, Value};
use std::error::Error;
use std::io::Write;
use std::path::Path;

/// Renders rows in the chosen format and writes them to `out` (or stdout).
///
/// Rows pass through their json representation in both paths: the csv
/// columns are the serialized field names in declaration order, and an
/// absent reference (null) becomes an empty csv cell.
pub fn emit<R: Serialize>(
    rows: &[R],
    config_hash: &str,
    json_format: bool,
    out: Option<&Path>,
) -> Result<(), Box<dyn Error>> {
    let values: Vec<Value> = rows
        .iter()
        .map(serde_json::to_value)
        .collect::<Result<_, _>>()?;
    let text = if json_format {
        render_json(&values, config_hash)?
    } else {
        render_csv(&values, config_hash)?
    };
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| format!("cannot write {}: {e}", path.display()).into()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn render_json(rows: &[Value], config_hash: &str) -> Result<String, Box<dyn Error>> {
    let document = json!({
        "config_hash": config_hash,
        "rows": rows,
    });
    Ok(format!("{}\n", serde_json::to_string_pretty(&document)?))
}

fn render_csv(rows: &[Value], config_hash: &str) -> Result<String, Box<dyn Error>> {
    let mut text = format!("# config_hash={config_hash}\n");
    let Some(first) = rows.first() else {
        return Ok(text);
    };
    let columns: Vec<&String> = first
        .as_object()
        .ok_or("rows serialize to objects")?
        .keys()
        .collect();
    text.push_str(&columns.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(","));
    text.push('\n');
    for row in rows {
        let object = row.as_object().ok_or("rows serialize to objects")?;
        let cells: Vec<String> = columns
            .iter()
            .map(|&column| cell(&object[column]))
            .collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    Ok(text)
}

fn cell(value: &Value) -> String {
    match value {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

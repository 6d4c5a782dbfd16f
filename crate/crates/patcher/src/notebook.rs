//! Notebook ingestion: code cells become one plain script.

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum NotebookError {
    #[error("notebook is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("notebook has no `cells` array")]
    NoCells,
}

/// A line removed during conversion (IPython magic or shell escape).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedLine {
    /// 0-based index of the code cell among all cells.
    pub cell: usize,
    /// 1-based line within the cell.
    pub line: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvertedNotebook {
    pub script: String,
    pub dropped: Vec<DroppedLine>,
}

fn cell_source(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Array(parts) => parts.iter().filter_map(|p| p.as_str()).collect(),
        _ => String::new(),
    }
}

pub fn notebook_to_script(json: &str) -> Result<ConvertedNotebook, NotebookError> {
    let nb: serde_json::Value = serde_json::from_str(json)?;
    let cells = nb.get("cells").and_then(|c| c.as_array()).ok_or(NotebookError::NoCells)?;
    let mut script = String::new();
    let mut dropped = Vec::new();
    for (idx, cell) in cells.iter().enumerate() {
        if cell.get("cell_type").and_then(|t| t.as_str()) != Some("code") {
            continue;
        }
        let src = cell_source(cell.get("source").unwrap_or(&serde_json::Value::Null));
        let whole_cell_magic = src.trim_start().starts_with("%%");
        let mut body = String::new();
        for (n, line) in src.lines().enumerate() {
            let trimmed = line.trim_start();
            if whole_cell_magic || trimmed.starts_with('%') || trimmed.starts_with('!') {
                dropped.push(DroppedLine { cell: idx, line: n + 1, text: line.to_string() });
                let indent = &line[..line.len() - trimmed.len()];
                // keep indented blocks non-empty
                if !indent.is_empty() && !whole_cell_magic {
                    body.push_str(indent);
                    body.push_str("pass\n");
                }
                continue;
            }
            body.push_str(line);
            body.push('\n');
        }
        if body.trim().is_empty() {
            continue;
        }
        if !script.is_empty() {
            script.push_str("\n\n");
        }
        script.push_str(&format!("# In[{idx}]:\n"));
        script.push_str(&body);
    }
    Ok(ConvertedNotebook { script, dropped })
}

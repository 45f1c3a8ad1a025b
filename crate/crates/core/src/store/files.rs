use std::fs;
use std::path::Path;

use super::{Document, StoreError};

fn io_err(path: &Path, e: impl std::fmt::Display) -> StoreError {
    StoreError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    }
}

/// Reads one JSON document file.
pub fn load_document(path: &Path) -> Result<Document, StoreError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let doc: Document = serde_json::from_str(&text).map_err(|e| io_err(path, e))?;
    doc.check()?;
    Ok(doc)
}

pub fn write_document(path: &Path, doc: &Document) -> Result<(), StoreError> {
    let mut text = serde_json::to_string_pretty(doc).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Every `*.json` file of `dir`, in file-name order.
pub fn load_dir(dir: &Path) -> Result<Vec<Document>, StoreError> {
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
        let path = entry.map_err(|e| io_err(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|x| x == "json") {
            paths.push(path);
        }
    }
    paths.sort();
    paths.iter().map(|p| load_document(p)).collect()
}

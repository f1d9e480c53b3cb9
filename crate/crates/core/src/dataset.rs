//! JSONL prompt datasets.
//!
//! One JSON object per line: `{"id": ..., "text": ..., "label": 0|1,
//! "pair_id": ...}` where `label` and `pair_id` are optional. `label` 0 marks
//! safe prompts, 1 harmful; `pair_id` links semantically matched safe/harmful
//! prompts.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: not valid UTF-8")]
    NonUtf8 { line: usize },
    #[error("line {line}: malformed JSON: {message}")]
    BadJson { line: usize, message: String },
    #[error("line {line}: duplicate id '{id}'")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: label must be 0 or 1, got {label}")]
    BadLabel { line: usize, label: u8 },
    #[error("line {line}: id must be nonempty")]
    EmptyId { line: usize },
}

/// One prompt with optional supervision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_id: Option<String>,
}

/// Loads a JSONL dataset, validating UTF-8 per line, label domain, and id
/// uniqueness. Blank lines are skipped; errors carry 1-based line numbers.
pub fn load_dataset_jsonl(path: &Path) -> Result<Vec<DatasetRecord>, DatasetError> {
    let bytes = fs::read(path)?;
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, raw_line) in bytes.split(|&b| b == b'\n').enumerate() {
        let line = idx + 1;
        let text = std::str::from_utf8(raw_line).map_err(|_| DatasetError::NonUtf8 { line })?;
        if text.trim().is_empty() {
            continue;
        }
        let record: DatasetRecord = serde_json::from_str(text).map_err(|e| DatasetError::BadJson {
            line,
            message: e.to_string(),
        })?;
        if record.id.is_empty() {
            return Err(DatasetError::EmptyId { line });
        }
        if let Some(label) = record.label {
            if label > 1 {
                return Err(DatasetError::BadLabel { line, label });
            }
        }
        if !seen.insert(record.id.clone()) {
            return Err(DatasetError::DuplicateId { line, id: record.id });
        }
        records.push(record);
    }
    Ok(records)
}

/// Writes records as JSONL (one compact object per line, trailing newline).
pub fn save_dataset_jsonl(records: &[DatasetRecord], path: &Path) -> Result<(), DatasetError> {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("record serializes"));
        out.push('\n');
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_preserves_records_and_field_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.jsonl");
        let records = vec![
            DatasetRecord {
                id: "p1".into(),
                text: "a walk in the park".into(),
                label: Some(0),
                pair_id: Some("pair-1".into()),
            },
            DatasetRecord {
                id: "p2".into(),
                text: "unlabeled".into(),
                label: None,
                pair_id: None,
            },
        ];
        save_dataset_jsonl(&records, &path).unwrap();
        assert_eq!(load_dataset_jsonl(&path).unwrap(), records);
        let body = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            body.lines().next().unwrap(),
            r#"{"id":"p1","text":"a walk in the park","label":0,"pair_id":"pair-1"}"#
        );
        // Optional fields are omitted entirely.
        assert_eq!(body.lines().nth(1).unwrap(), r#"{"id":"p2","text":"unlabeled"}"#);
    }

    #[test]
    fn duplicate_ids_report_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dup.jsonl");
        std::fs::write(
            &path,
            "{\"id\":\"x\",\"text\":\"one\"}\n\n{\"id\":\"x\",\"text\":\"two\"}\n",
        )
        .unwrap();
        assert!(matches!(
            load_dataset_jsonl(&path),
            Err(DatasetError::DuplicateId { line: 3, .. })
        ));
    }

    #[test]
    fn non_utf8_and_bad_labels_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, [b'{', 0xff, 0xfe, b'}', b'\n']).unwrap();
        assert!(matches!(
            load_dataset_jsonl(&path),
            Err(DatasetError::NonUtf8 { line: 1 })
        ));
        std::fs::write(&path, "{\"id\":\"x\",\"text\":\"t\",\"label\":3}\n").unwrap();
        assert!(matches!(
            load_dataset_jsonl(&path),
            Err(DatasetError::BadLabel { line: 1, label: 3 })
        ));
    }
}

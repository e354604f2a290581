//! Dataset files and the config hash stamped into every output.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed dataset: {0}")]
    Malformed(String),
    #[error("row {row} has {actual} values, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        actual: usize,
    },
    #[error("row {row} contains a non-finite value")]
    NonFinite { row: usize },
}

/// Reads a dataset: CSV when the file name ends in `.csv`, JSON otherwise.
pub fn load_dataset(path: &Path) -> Result<Vec<Vec<f64>>, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })?;
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        parse_dataset_csv(&text)
    } else {
        parse_dataset_json(&text)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DatasetDoc {
    Rows(Vec<Vec<f64>>),
    /// An emitted suite: the inputs plus run metadata.
    Stamped {
        inputs: Vec<Vec<f64>>,
    },
}

/// A JSON array of input vectors, or an object whose `inputs` field is one.
pub fn parse_dataset_json(text: &str) -> Result<Vec<Vec<f64>>, IoError> {
    let doc: DatasetDoc =
        serde_json::from_str(text).map_err(|e| IoError::Malformed(e.to_string()))?;
    let rows = match doc {
        DatasetDoc::Rows(rows) | DatasetDoc::Stamped { inputs: rows } => rows,
    };
    check_rows(rows)
}

/// One vector per line, comma separated, no header.
pub fn parse_dataset_csv(text: &str) -> Result<Vec<Vec<f64>>, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| IoError::Malformed(e.to_string()))?;
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    IoError::Malformed(format!("row {}: {f:?} is not a number", i + 1))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    check_rows(rows)
}

fn check_rows(rows: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>, IoError> {
    if let Some(first) = rows.first() {
        let expected = first.len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != expected {
                return Err(IoError::Ragged {
                    row: i + 1,
                    expected,
                    actual: r.len(),
                });
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(IoError::NonFinite { row: i + 1 });
            }
        }
    }
    Ok(rows)
}

/// Writes inputs as a JSON array with one vector per line. Floats are
/// written in shortest round-trip form, so equal inputs give equal bytes.
pub fn write_dataset_json<W: Write>(inputs: &[Vec<f64>], mut out: W) -> std::io::Result<()> {
    writeln!(out, "[")?;
    for (i, x) in inputs.iter().enumerate() {
        let sep = if i + 1 == inputs.len() { "" } else { "," };
        writeln!(
            out,
            "  {}{sep}",
            serde_json::to_string(x).expect("finite floats serialize")
        )?;
    }
    writeln!(out, "]")
}

/// Short SHA-256 of the canonical JSON form of `config` (object keys sorted).
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let value = serde_json::to_value(config).expect("configs serialize");
    let canonical = serde_json::to_vec(&value).expect("values serialize");
    hex::encode(&Sha256::digest(&canonical)[..8])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_agree() {
        let a = parse_dataset_csv("0.1, 0\n# comment\n0,-1\n").unwrap();
        let b = parse_dataset_json("[[0.1, 0.0], [0, -1]]").unwrap();
        assert_eq!(a, b);
        let c = parse_dataset_json(r#"{"seed": 1, "inputs": [[0.1, 0.0], [0, -1]]}"#).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn ragged_rows_are_rejected() {
        assert!(matches!(
            parse_dataset_json("[[1,2],[3]]"),
            Err(IoError::Ragged { row: 2, .. })
        ));
        assert!(matches!(
            parse_dataset_csv("1,2\n3\n"),
            Err(IoError::Ragged { row: 2, .. })
        ));
        assert!(matches!(
            parse_dataset_csv("1,x\n"),
            Err(IoError::Malformed(_))
        ));
    }

    #[test]
    fn written_json_reads_back_exactly() {
        let inputs = vec![vec![0.1, -1.0 / 3.0], vec![1e-300, 2.5]];
        let mut buf = Vec::new();
        write_dataset_json(&inputs, &mut buf).unwrap();
        assert_eq!(
            parse_dataset_json(std::str::from_utf8(&buf).unwrap()).unwrap(),
            inputs
        );
        let mut empty = Vec::new();
        write_dataset_json(&[], &mut empty).unwrap();
        assert!(parse_dataset_json(std::str::from_utf8(&empty).unwrap())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn hash_ignores_key_order() {
        let a: serde_json::Value = serde_json::from_str(r#"{"a":1,"b":[2,3]}"#).unwrap();
        let b: serde_json::Value = serde_json::from_str(r#"{"b":[2,3],"a":1}"#).unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_ne!(config_hash(&a), config_hash(&serde_json::json!({"a": 2})));
        assert_eq!(config_hash(&a).len(), 16);
    }
}

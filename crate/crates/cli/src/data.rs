//! CSV ingestion.

use std::path::Path;

use nalgebra::DMatrix;
use optiscore::{Dataset, Error};

use crate::error::{CliError, CliResult};

/// Parsed CSV: feature columns in file order plus the optional `label` column.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvData {
    pub columns: Vec<String>,
    pub features: DMatrix<f64>,
    pub labels: Option<Vec<u8>>,
}

impl CsvData {
    pub fn into_dataset(self) -> CliResult<Dataset> {
        let labels = self.labels.ok_or(CliError::MissingLabelColumn)?;
        Ok(Dataset::new(self.features, labels)?)
    }
}

/// Reads a CSV with a header row. Every column except `label` is a feature.
pub fn load_csv(path: &Path) -> CliResult<CsvData> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_csv(file)
}

/// Like [`load_csv`], but the `label` column must be present.
pub fn load_dataset(path: &Path) -> CliResult<Dataset> {
    load_csv(path)?.into_dataset()
}

pub fn read_csv<R: std::io::Read>(reader: R) -> CliResult<CsvData> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Parse { line: 1, column: String::new(), message: e.to_string() })?
        .iter()
        .map(str::to_owned)
        .collect();
    let label_col = header.iter().position(|h| h == "label");
    let columns: Vec<String> = header.iter().filter(|h| h.as_str() != "label").cloned().collect();
    if columns.is_empty() {
        return Err(CliError::Parse { line: 1, column: String::new(), message: "no feature columns".into() });
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0;
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| CliError::Parse { line, column: String::new(), message: e.to_string() })?;
        if record.len() != header.len() {
            return Err(CliError::Parse {
                line,
                column: String::new(),
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        for (j, field) in record.iter().enumerate() {
            let bad = |message: String| CliError::Parse { line, column: header[j].clone(), message };
            if Some(j) == label_col {
                match field {
                    "0" => labels.push(0u8),
                    "1" => labels.push(1u8),
                    other => return Err(bad(format!("label must be 0 or 1, got '{other}'"))),
                }
            } else {
                let v: f64 = field.parse().map_err(|_| bad(format!("'{field}' is not a number")))?;
                if !v.is_finite() {
                    return Err(bad(format!("non-finite value '{field}'")));
                }
                values.push(v);
            }
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::EmptyInput.into());
    }
    Ok(CsvData {
        features: DMatrix::from_row_slice(rows, columns.len(), &values),
        columns,
        labels: label_col.map(|_| labels),
    })
}

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::table::{finite_median, Column, FeatureTable, Provenance};
use super::DatasetError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDescription {
    pub name: String,
    #[serde(default)]
    pub description: String,
}

/// Sidecar metadata: what the task is and what each column means.
///
/// On disk this is JSON of the form
/// `{"task_description": "...", "target": "...", "features": [{"name": "...", "description": "..."}]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    #[serde(default)]
    pub task_description: String,
    #[serde(rename = "target")]
    pub target_name: String,
    #[serde(rename = "features", default)]
    pub feature_descriptions: Vec<FeatureDescription>,
}

impl DatasetMeta {
    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path)?;
        DatasetMeta::from_json(&text)
    }

    pub fn description_of(&self, name: &str) -> Option<&str> {
        self.feature_descriptions
            .iter()
            .find(|f| f.name == name)
            .map(|f| f.description.as_str())
    }
}

/// Class labels encoded `0..K` in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels {
    pub classes: Vec<String>,
    pub values: Vec<usize>,
}

impl Labels {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }
}

fn is_missing(cell: &str) -> bool {
    matches!(
        cell.to_ascii_lowercase().as_str(),
        "" | "na" | "n/a" | "nan" | "null" | "none" | "?"
    )
}

/// Loads a headed CSV plus its JSON metadata.
pub fn load_csv(
    data_path: impl AsRef<Path>,
    meta_path: impl AsRef<Path>,
) -> Result<(FeatureTable, Labels, DatasetMeta), DatasetError> {
    let meta = DatasetMeta::read(meta_path)?;
    load_csv_reader(File::open(data_path)?, &meta)
}

/// Loads CSV text from any reader against already-parsed metadata.
///
/// The target column is split off as [`Labels`]; non-numeric columns are
/// ordinal-encoded by first appearance; missing cells are median-imputed.
/// The returned metadata lists one description per table column, in table
/// order.
pub fn load_csv_reader<R: Read>(
    reader: R,
    meta: &DatasetMeta,
) -> Result<(FeatureTable, Labels, DatasetMeta), DatasetError> {
    let (headers, raw) = read_raw(reader)?;
    let seen: HashMap<&str, usize> = headers
        .iter()
        .enumerate()
        .map(|(i, h)| (h.as_str(), i))
        .collect();
    let target_idx = *seen.get(meta.target_name.as_str()).ok_or_else(|| {
        DatasetError::Schema(format!("target column `{}` not found", meta.target_name))
    })?;
    for f in &meta.feature_descriptions {
        if f.name == meta.target_name || !seen.contains_key(f.name.as_str()) {
            return Err(DatasetError::Schema(format!(
                "described feature `{}` is not a feature column",
                f.name
            )));
        }
    }

    let rows = raw[0].len();
    if rows == 0 || headers.len() < 2 {
        return Err(DatasetError::Empty);
    }

    let labels = encode_labels(&raw[target_idx])?;
    let mut columns = Vec::with_capacity(headers.len() - 1);
    let mut descriptions = Vec::with_capacity(headers.len() - 1);
    for (i, name) in headers.iter().enumerate() {
        if i == target_idx {
            continue;
        }
        columns.push(encode_feature(name, &raw[i]));
        descriptions.push(FeatureDescription {
            name: name.clone(),
            description: meta.description_of(name).unwrap_or_default().to_string(),
        });
    }

    let table = FeatureTable::new(columns)?;
    let meta = DatasetMeta {
        task_description: meta.task_description.clone(),
        target_name: meta.target_name.clone(),
        feature_descriptions: descriptions,
    };
    Ok((table, labels, meta))
}

/// Loads every column except `exclude` (when present) as a feature.
pub fn load_features_reader<R: Read>(
    reader: R,
    exclude: Option<&str>,
) -> Result<FeatureTable, DatasetError> {
    let (headers, raw) = read_raw(reader)?;
    let columns: Vec<Column> = headers
        .iter()
        .zip(&raw)
        .filter(|(name, _)| Some(name.as_str()) != exclude)
        .map(|(name, cells)| encode_feature(name, cells))
        .collect();
    if columns.is_empty() || raw[0].is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok(FeatureTable::new(columns)?)
}

/// Reads the `column` of a headed CSV as class labels.
pub fn load_labels_reader<R: Read>(reader: R, column: &str) -> Result<Labels, DatasetError> {
    let (headers, raw) = read_raw(reader)?;
    let idx = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| DatasetError::Schema(format!("target column `{column}` not found")))?;
    encode_labels(&raw[idx])
}

fn read_raw<R: Read>(reader: R) -> Result<(Vec<String>, Vec<Vec<String>>), DatasetError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
    let mut seen = HashSet::new();
    for h in &headers {
        if !seen.insert(h.as_str()) {
            return Err(DatasetError::Schema(format!("duplicate column `{h}`")));
        }
    }
    let mut raw: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    for (line, record) in csv.records().enumerate() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { .. } => {
                DatasetError::Schema(format!("ragged row {}: {e}", line + 2))
            }
            _ => DatasetError::Csv(e),
        })?;
        for (col, cell) in raw.iter_mut().zip(record.iter()) {
            col.push(cell.to_string());
        }
    }
    if headers.is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok((headers, raw))
}

fn encode_labels(cells: &[String]) -> Result<Labels, DatasetError> {
    let mut classes: Vec<String> = Vec::new();
    let mut values = Vec::with_capacity(cells.len());
    for (row, cell) in cells.iter().enumerate() {
        if is_missing(cell) {
            return Err(DatasetError::Schema(format!(
                "target value missing in data row {}",
                row + 1
            )));
        }
        let idx = match classes.iter().position(|c| c == cell) {
            Some(i) => i,
            None => {
                classes.push(cell.clone());
                classes.len() - 1
            }
        };
        values.push(idx);
    }
    Ok(Labels { classes, values })
}

fn encode_feature(name: &str, cells: &[String]) -> Column {
    let parsed: Vec<Option<f64>> = cells
        .iter()
        .map(|c| {
            if is_missing(c) {
                None
            } else {
                c.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .or(Some(f64::NAN))
            }
        })
        .collect();
    // NaN marks "present but not a number" so the column is categorical
    let numeric = parsed.iter().all(|v| v.is_none_or(|x| !x.is_nan()));

    let mut values: Vec<f64> = if numeric {
        parsed.iter().map(|v| v.unwrap_or(f64::NAN)).collect()
    } else {
        let mut levels: Vec<&str> = Vec::new();
        cells
            .iter()
            .map(|c| {
                if is_missing(c) {
                    return f64::NAN;
                }
                let code = match levels.iter().position(|l| *l == c) {
                    Some(i) => i,
                    None => {
                        levels.push(c);
                        levels.len() - 1
                    }
                };
                code as f64
            })
            .collect()
    };

    let missing = values.iter().filter(|v| v.is_nan()).count();
    if missing > 0 {
        let fill = finite_median(&values).unwrap_or(0.0);
        for v in values.iter_mut().filter(|v| v.is_nan()) {
            *v = fill;
        }
    }
    Column {
        name: name.to_string(),
        missing_fraction: missing as f64 / cells.len() as f64,
        values,
        provenance: Provenance::Original,
    }
}

/// Writes the table as CSV, optionally appending the target column.
///
/// Numbers use Rust's shortest round-trip formatting, so reading the file
/// back reproduces every value exactly.
pub fn write_csv<W: Write>(
    table: &FeatureTable,
    target: Option<(&str, &Labels)>,
    writer: W,
) -> Result<(), DatasetError> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let mut header: Vec<&str> = table.names().collect();
    if let Some((name, labels)) = target {
        if labels.len() != table.n_rows() {
            return Err(DatasetError::Schema(format!(
                "{} labels for {} rows",
                labels.len(),
                table.n_rows()
            )));
        }
        header.push(name);
    }
    out.write_record(&header)?;
    let mut record: Vec<String> = Vec::with_capacity(header.len());
    for r in 0..table.n_rows() {
        record.clear();
        for col in table.columns() {
            let v = col.values[r];
            record.push(if v.is_nan() {
                String::new()
            } else {
                v.to_string()
            });
        }
        if let Some((_, labels)) = target {
            record.push(labels.classes[labels.values[r]].clone());
        }
        out.write_record(&record)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_csv_string(
    table: &FeatureTable,
    target: Option<(&str, &Labels)>,
) -> Result<String, DatasetError> {
    let mut buf = Vec::new();
    write_csv(table, target, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

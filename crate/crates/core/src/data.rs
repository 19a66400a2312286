//! Flat tabular datasets: CSV/JSON ingestion, role inference and filters.

use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

use crate::json::{JsonError, JsonValue, Map, Number};
use crate::model::{DataRole, Filter, FilterKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("CSV error: {0}")]
    Csv(String),
    #[error("CSV record {record} has {found} fields, header has {expected}")]
    RaggedCsv {
        record: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: {message}")]
    NonFlatJson { row: usize, message: String },
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error(transparent)]
    Json(#[from] JsonError),
    #[error("dataset is {size} bytes, limit is {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("cannot infer data format of {0}")]
    UnknownFormat(String),
    #[error("{0}")]
    Io(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    Json,
}

impl DataFormat {
    pub fn from_path(path: &Path) -> Option<DataFormat> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(DataFormat::Csv),
            "json" => Some(DataFormat::Json),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct LoadOptions {
    pub max_bytes: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: String,
    pub role: DataRole,
    pub role_overridden: bool,
}

/// A single flat table. Rows map column names to atomic values; a key absent
/// from a row reads as null.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    columns: Vec<Column>,
    rows: Vec<Map<JsonValue>>,
}

impl Dataset {
    /// Builds a dataset from rows, inferring one role per column.
    pub fn from_rows(rows: Vec<Map<JsonValue>>) -> Result<Dataset, DataError> {
        if rows.is_empty() {
            return Err(DataError::EmptyDataset);
        }
        let mut names: Vec<String> = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            for (k, v) in row.iter() {
                if !v.is_atomic() {
                    return Err(DataError::NonFlatJson {
                        row: i,
                        message: format!("`{k}` holds a nested {}", v.type_name()),
                    });
                }
                if !names.contains(k) {
                    names.push(k.clone());
                }
            }
        }
        let columns = names
            .into_iter()
            .map(|name| {
                let values: Vec<JsonValue> = rows
                    .iter()
                    .map(|r| r.get(&name).cloned().unwrap_or(JsonValue::Null))
                    .collect();
                Column {
                    role: infer_role(&values),
                    name,
                    role_overridden: false,
                }
            })
            .collect();
        Ok(Dataset { columns, rows })
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn rows(&self) -> &[Map<JsonValue>] {
        &self.rows
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn role_of(&self, name: &str) -> Option<DataRole> {
        self.column(name).map(|c| c.role)
    }

    /// Overrides the inferred role of a column.
    pub fn set_role(&mut self, name: &str, role: DataRole) -> Result<(), DataError> {
        let col = self
            .columns
            .iter_mut()
            .find(|c| c.name == name)
            .ok_or_else(|| DataError::UnknownColumn(name.to_string()))?;
        col.role = role;
        col.role_overridden = true;
        Ok(())
    }

    /// `(name, role)` pairs in column order, the shape catalog search takes.
    pub fn role_query(&self) -> Vec<(String, DataRole)> {
        self.columns.iter().map(|c| (c.name.clone(), c.role)).collect()
    }

    pub fn rows_json(&self) -> Vec<JsonValue> {
        self.rows.iter().cloned().map(JsonValue::Object).collect()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub fn load_dataset(bytes: &[u8], format: DataFormat) -> Result<Dataset, DataError> {
    load_dataset_with(bytes, format, &LoadOptions::default())
}

pub fn load_dataset_with(bytes: &[u8], format: DataFormat, options: &LoadOptions) -> Result<Dataset, DataError> {
    if let Some(limit) = options.max_bytes {
        if bytes.len() > limit {
            return Err(DataError::TooLarge {
                size: bytes.len(),
                limit,
            });
        }
    }
    match format {
        DataFormat::Csv => load_csv(bytes),
        DataFormat::Json => load_json(bytes),
    }
}

/// Reads a `.csv` or `.json` file.
pub fn load_dataset_path(path: &Path, options: &LoadOptions) -> Result<Dataset, DataError> {
    let format = DataFormat::from_path(path).ok_or_else(|| DataError::UnknownFormat(path.display().to_string()))?;
    let bytes = std::fs::read(path).map_err(|e| DataError::Io(format!("{}: {e}", path.display())))?;
    load_dataset_with(&bytes, format, options)
}

fn load_json(bytes: &[u8]) -> Result<Dataset, DataError> {
    let text = std::str::from_utf8(bytes).map_err(|e| DataError::Io(e.to_string()))?;
    let doc = JsonValue::parse(text)?;
    let JsonValue::Array(items) = doc else {
        return Err(DataError::NonFlatJson {
            row: 0,
            message: "expected an array of objects".into(),
        });
    };
    let rows = items
        .into_iter()
        .enumerate()
        .map(|(i, item)| match item {
            JsonValue::Object(m) => Ok(m),
            other => Err(DataError::NonFlatJson {
                row: i,
                message: format!("expected an object, found {}", other.type_name()),
            }),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Dataset::from_rows(rows)
}

fn parse_number(cell: &str) -> Option<Number> {
    cell.parse::<f64>().ok().and_then(Number::new)
}

fn load_csv(bytes: &[u8]) -> Result<Dataset, DataError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(bytes);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| DataError::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    for (i, name) in header.iter().enumerate() {
        if header[..i].contains(name) {
            return Err(DataError::DuplicateColumn(name.clone()));
        }
    }
    let mut cells: Vec<Vec<String>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| DataError::Csv(e.to_string()))?;
        if record.len() != header.len() {
            return Err(DataError::RaggedCsv {
                record: i + 1,
                expected: header.len(),
                found: record.len(),
            });
        }
        cells.push(record.iter().map(str::to_string).collect());
    }
    if cells.is_empty() {
        return Err(DataError::EmptyDataset);
    }
    let numeric: Vec<bool> = (0..header.len())
        .map(|c| cells.iter().all(|row| row[c].is_empty() || parse_number(&row[c]).is_some()))
        .collect();
    let rows = cells
        .into_iter()
        .map(|row| {
            header
                .iter()
                .zip(row)
                .enumerate()
                .map(|(c, (name, cell))| {
                    let value = if cell.is_empty() {
                        JsonValue::Null
                    } else if numeric[c] {
                        JsonValue::Number(parse_number(&cell).expect("checked numeric"))
                    } else {
                        JsonValue::String(cell)
                    };
                    (name.clone(), value)
                })
                .collect()
        })
        .collect();
    Dataset::from_rows(rows)
}

fn temporal_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"^\d{4}(-(0[1-9]|1[0-2])(-(0[1-9]|[12]\d|3[01])([T ]([01]\d|2[0-3]):[0-5]\d(:[0-5]\d(\.\d+)?)?(Z|[+-]\d{2}:?\d{2})?)?)?)?$",
        )
        .expect("valid pattern")
    })
}

pub fn is_temporal_text(s: &str) -> bool {
    temporal_pattern().is_match(s)
}

/// Measure if every non-null value is a number, Time if every one is an
/// ISO date/datetime or a four-digit year string, Dimension otherwise.
pub fn infer_role(values: &[JsonValue]) -> DataRole {
    let present: Vec<&JsonValue> = values.iter().filter(|v| !matches!(v, JsonValue::Null)).collect();
    if present.is_empty() {
        DataRole::Dimension
    } else if present.iter().all(|v| matches!(v, JsonValue::Number(_))) {
        DataRole::Measure
    } else if present
        .iter()
        .all(|v| matches!(v, JsonValue::String(s) if is_temporal_text(s)))
    {
        DataRole::Time
    } else {
        DataRole::Dimension
    }
}

fn coerce_number(v: &JsonValue) -> Option<f64> {
    match v {
        JsonValue::Number(n) => Some(n.get()),
        JsonValue::String(s) => parse_number(s.trim()).map(Number::get),
        _ => None,
    }
}

fn keeps(filter: &Filter, row: &Map<JsonValue>) -> bool {
    let value = match row.get(&filter.column) {
        None | Some(JsonValue::Null) => return false,
        Some(v) => v,
    };
    match &filter.kind {
        FilterKind::Range { min, max } => coerce_number(value).is_some_and(|n| *min <= n && n <= *max),
        FilterKind::OneOf { values } => values.contains(value),
    }
}

/// Keeps the rows that satisfy every filter. Column roles are unchanged.
pub fn apply_filters(d: &Dataset, filters: &[Filter]) -> Result<Dataset, DataError> {
    if let Some(f) = filters.iter().find(|f| d.column(&f.column).is_none()) {
        return Err(DataError::UnknownColumn(f.column.clone()));
    }
    Ok(Dataset {
        columns: d.columns.clone(),
        rows: d
            .rows
            .iter()
            .filter(|row| filters.iter().all(|f| keeps(f, row)))
            .cloned()
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv(text: &str) -> Result<Dataset, DataError> {
        load_dataset(text.as_bytes(), DataFormat::Csv)
    }

    #[test]
    fn single_numeric_column() {
        let d = csv("a\n1\n2").unwrap();
        assert_eq!(d.columns().len(), 1);
        assert_eq!(d.role_of("a"), Some(DataRole::Measure));
        let values: Vec<_> = d.rows().iter().map(|r| r["a"].clone()).collect();
        assert_eq!(values, vec![JsonValue::from(1), JsonValue::from(2)]);
    }

    #[test]
    fn mixed_column_stays_text() {
        let d = csv("a\n1\nx").unwrap();
        assert_eq!(d.role_of("a"), Some(DataRole::Dimension));
        assert_eq!(d.rows()[0]["a"], JsonValue::from("1"));
    }

    #[test]
    fn empty_cells_are_null() {
        let d = csv("a,b\n1,\n,x").unwrap();
        assert_eq!(d.rows()[0]["b"], JsonValue::Null);
        assert_eq!(d.rows()[1]["a"], JsonValue::Null);
        assert_eq!(d.role_of("a"), Some(DataRole::Measure));
    }

    #[test]
    fn load_errors() {
        assert_eq!(load_dataset(b"[]", DataFormat::Json), Err(DataError::EmptyDataset));
        assert_eq!(csv("a,b\n"), Err(DataError::EmptyDataset));
        assert!(matches!(csv("a,b\n1,2,3"), Err(DataError::RaggedCsv { record: 1, .. })));
        assert!(matches!(
            load_dataset(br#"[{"a":{"b":1}}]"#, DataFormat::Json),
            Err(DataError::NonFlatJson { row: 0, .. })
        ));
        assert!(matches!(load_dataset(b"{}", DataFormat::Json), Err(DataError::NonFlatJson { .. })));
        assert_eq!(csv("a,a\n1,2"), Err(DataError::DuplicateColumn("a".into())));
        let opts = LoadOptions { max_bytes: Some(3) };
        assert!(matches!(
            load_dataset_with(b"a\n1\n2", DataFormat::Csv, &opts),
            Err(DataError::TooLarge { .. })
        ));
    }

    #[test]
    fn json_rows_keep_their_shape() {
        let d = load_dataset(br#"[{"x":1,"c":"a"},{"x":2}]"#, DataFormat::Json).unwrap();
        assert_eq!(d.columns().iter().map(|c| c.name.as_str()).collect::<Vec<_>>(), ["x", "c"]);
        assert_eq!(d.rows()[1].len(), 1);
        assert_eq!(d.role_of("c"), Some(DataRole::Dimension));
    }

    #[test]
    fn roles() {
        let n = |x: f64| JsonValue::number(x).unwrap();
        assert_eq!(infer_role(&[n(1.0), n(2.5), n(3.0)]), DataRole::Measure);
        assert_eq!(infer_role(&["2015-01-02".into(), "2016-07-01".into()]), DataRole::Time);
        assert_eq!(infer_role(&["USA".into(), "Chile".into()]), DataRole::Dimension);
        assert_eq!(infer_role(&[JsonValue::Null]), DataRole::Dimension);
        assert_eq!(infer_role(&[n(1990.0), n(2000.0)]), DataRole::Measure);
        assert_eq!(infer_role(&["1990".into(), JsonValue::Null]), DataRole::Time);
        assert_eq!(infer_role(&["2015-13-01".into()]), DataRole::Dimension);
        assert!(is_temporal_text("2020-02-03T04:05:06.789Z"));
        assert!(is_temporal_text("2020-02-03 04:05"));
        assert!(!is_temporal_text("20200"));
    }

    #[test]
    fn role_override() {
        let mut d = csv("year\n1990\n2000").unwrap();
        d.set_role("year", DataRole::Time).unwrap();
        let c = d.column("year").unwrap();
        assert_eq!((c.role, c.role_overridden), (DataRole::Time, true));
        assert!(d.set_role("nope", DataRole::Time).is_err());
    }

    #[test]
    fn filters() {
        let d = csv("year,region,v\n1990,Asia,1\n2000,Asia,2\n2000,Europe,\n2010,Africa,4").unwrap();
        let only = apply_filters(&d, &[Filter::range("year", 2000.0, 2000.0)]).unwrap();
        assert_eq!(only.len(), 2);
        assert!(only.rows().iter().all(|r| r["year"] == JsonValue::from(2000)));
        assert_eq!(apply_filters(&d, &[]).unwrap(), d);
        let asia = apply_filters(&d, &[Filter::one_of("region", vec!["Asia".into()])]).unwrap();
        assert_eq!(asia.len(), 2);
        let v = apply_filters(&d, &[Filter::range("v", 0.0, 10.0)]).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(
            apply_filters(&d, &[Filter::range("nope", 0.0, 1.0)]),
            Err(DataError::UnknownColumn("nope".into()))
        );
    }
}

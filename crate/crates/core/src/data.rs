//! Decision-making units, dataset validation and CSV ingestion.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DataError {
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("row `{row}`: input `{column}` must be strictly positive, got {value}")]
    NonPositiveInput {
        row: String,
        column: String,
        value: f64,
    },
    #[error("row `{row}`: output `{column}` must be nonnegative, got {value}")]
    NegativeOutput {
        row: String,
        column: String,
        value: f64,
    },
    #[error("row `{row}`: every output is zero")]
    AllZeroOutputs { row: String },
    #[error("duplicate DMU id `{0}`")]
    DuplicateId(String),
    #[error("row `{row}` has {got} values, expected {expected}")]
    RaggedRow {
        row: String,
        expected: usize,
        got: usize,
    },
    #[error("row `{row}`: missing value in column `{column}`")]
    MissingValue { row: String, column: String },
    #[error("row `{row}`: column `{column}` is not a number: `{text}`")]
    NotNumeric {
        row: String,
        column: String,
        text: String,
    },
    #[error("declared variable `{0}` has no column")]
    UnknownVariable(String),
    #[error("column `{0}` has no input/output role")]
    UnassignedColumn(String),
    #[error("variable `{0}` is assigned more than one role")]
    DuplicateRole(String),
    #[error("at least one input and one output are required")]
    NoVariables,
    #[error("first CSV column must be `id`, found `{0}`")]
    MissingIdColumn(String),
    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for DataError {
    fn from(err: csv::Error) -> Self {
        DataError::Csv(err.to_string())
    }
}

/// One evaluated unit: its label, input vector and output vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmuRecord {
    pub id: String,
    pub inputs: Vec<f64>,
    pub outputs: Vec<f64>,
}

impl DmuRecord {
    /// Inputs followed by outputs.
    pub fn point(&self) -> Vec<f64> {
        self.inputs.iter().chain(&self.outputs).copied().collect()
    }
}

/// A validated collection of DMUs sharing one variable layout.
///
/// Construct through [`validate_dataset`] or [`Dataset::new`]; both enforce
/// strictly positive inputs, nonnegative outputs with at least one positive
/// output per unit, unique ids and consistent dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    input_names: Vec<String>,
    output_names: Vec<String>,
    records: Vec<DmuRecord>,
}

impl Dataset {
    pub fn new(
        input_names: Vec<String>,
        output_names: Vec<String>,
        records: Vec<DmuRecord>,
    ) -> Result<Self, DataError> {
        if input_names.is_empty() || output_names.is_empty() {
            return Err(DataError::NoVariables);
        }
        if records.is_empty() {
            return Err(DataError::EmptyDataset);
        }
        let mut seen = HashSet::new();
        for name in input_names.iter().chain(&output_names) {
            if !seen.insert(name.as_str()) {
                return Err(DataError::DuplicateRole(name.clone()));
            }
        }
        let mut ids = HashSet::new();
        for rec in &records {
            if !ids.insert(rec.id.as_str()) {
                return Err(DataError::DuplicateId(rec.id.clone()));
            }
            let expected = input_names.len() + output_names.len();
            let got = rec.inputs.len() + rec.outputs.len();
            if rec.inputs.len() != input_names.len() || rec.outputs.len() != output_names.len() {
                return Err(DataError::RaggedRow {
                    row: rec.id.clone(),
                    expected,
                    got,
                });
            }
            for (value, name) in rec.inputs.iter().zip(&input_names) {
                if !(value.is_finite() && *value > 0.0) {
                    return Err(DataError::NonPositiveInput {
                        row: rec.id.clone(),
                        column: name.clone(),
                        value: *value,
                    });
                }
            }
            for (value, name) in rec.outputs.iter().zip(&output_names) {
                if !(value.is_finite() && *value >= 0.0) {
                    return Err(DataError::NegativeOutput {
                        row: rec.id.clone(),
                        column: name.clone(),
                        value: *value,
                    });
                }
            }
            if rec.outputs.iter().all(|&q| q == 0.0) {
                return Err(DataError::AllZeroOutputs {
                    row: rec.id.clone(),
                });
            }
        }
        Ok(Self {
            input_names,
            output_names,
            records,
        })
    }

    /// Number of inputs.
    pub fn m(&self) -> usize {
        self.input_names.len()
    }

    /// Number of outputs.
    pub fn n(&self) -> usize {
        self.output_names.len()
    }

    /// Number of DMUs.
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn input_names(&self) -> &[String] {
        &self.input_names
    }

    pub fn output_names(&self) -> &[String] {
        &self.output_names
    }

    /// Input names followed by output names.
    pub fn variable_names(&self) -> Vec<String> {
        self.input_names
            .iter()
            .chain(&self.output_names)
            .cloned()
            .collect()
    }

    pub fn records(&self) -> &[DmuRecord] {
        &self.records
    }

    pub fn record(&self, k: usize) -> &DmuRecord {
        &self.records[k]
    }

    pub fn ids(&self) -> Vec<String> {
        self.records.iter().map(|r| r.id.clone()).collect()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.records.iter().position(|r| r.id == id)
    }

    /// Values of one variable (inputs first, then outputs) across all DMUs.
    pub fn column(&self, var: usize) -> Vec<f64> {
        let m = self.m();
        self.records
            .iter()
            .map(|r| {
                if var < m {
                    r.inputs[var]
                } else {
                    r.outputs[var - m]
                }
            })
            .collect()
    }

    /// Returns a dataset restricted to the given record indices, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset, DataError> {
        let records = indices.iter().map(|&i| self.records[i].clone()).collect();
        Dataset::new(self.input_names.clone(), self.output_names.clone(), records)
    }

    /// Returns a copy of this dataset with one more record appended.
    pub fn with_record(&self, record: DmuRecord) -> Result<Dataset, DataError> {
        let mut records = self.records.clone();
        records.push(record);
        Dataset::new(self.input_names.clone(), self.output_names.clone(), records)
    }

    /// Writes the dataset as `id,<inputs...>,<outputs...>` CSV.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DataError> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header = vec!["id".to_string()];
        header.extend(self.variable_names());
        out.write_record(&header)?;
        for rec in &self.records {
            let mut row = vec![rec.id.clone()];
            row.extend(rec.point().iter().map(|v| format!("{v:?}")));
            out.write_record(&row)?;
        }
        out.flush().map_err(|e| DataError::Csv(e.to_string()))?;
        Ok(())
    }

    pub fn roles(&self) -> Roles {
        Roles {
            inputs: self.input_names.clone(),
            outputs: self.output_names.clone(),
        }
    }
}

/// Assignment of table columns to the input or output role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roles {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

/// A named numeric table as read from disk, before validation.
///
/// `None` marks an empty cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub columns: Vec<String>,
    pub rows: Vec<RawRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub id: String,
    pub values: Vec<Option<f64>>,
}

impl RawTable {
    /// Parses CSV with a leading `id` column and numeric remaining columns.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, DataError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let mut iter = headers.iter();
        match iter.next() {
            Some("id") => {}
            Some(other) => return Err(DataError::MissingIdColumn(other.to_string())),
            None => return Err(DataError::MissingIdColumn(String::new())),
        }
        let columns: Vec<String> = iter.map(str::to_string).collect();
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let id = record.get(0).unwrap_or_default().to_string();
            let mut values = Vec::with_capacity(columns.len());
            for (i, field) in record.iter().skip(1).enumerate() {
                if field.is_empty() {
                    values.push(None);
                    continue;
                }
                let column = columns.get(i).cloned().unwrap_or_else(|| format!("#{}", i + 1));
                let value = field.parse::<f64>().map_err(|_| DataError::NotNumeric {
                    row: id.clone(),
                    column,
                    text: field.to_string(),
                })?;
                values.push(Some(value));
            }
            rows.push(RawRow { id, values });
        }
        Ok(Self { columns, rows })
    }
}

/// Checks a raw table against a role assignment and builds a [`Dataset`].
///
/// Every declared variable must name a column, and every column must carry
/// exactly one role. Empty cells are rejected; nothing is imputed.
pub fn validate_dataset(raw: &RawTable, roles: &Roles) -> Result<Dataset, DataError> {
    if roles.inputs.is_empty() || roles.outputs.is_empty() {
        return Err(DataError::NoVariables);
    }
    let position: HashMap<&str, usize> = raw
        .columns
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let mut assigned = HashSet::new();
    for name in roles.inputs.iter().chain(&roles.outputs) {
        if !position.contains_key(name.as_str()) {
            return Err(DataError::UnknownVariable(name.clone()));
        }
        if !assigned.insert(name.as_str()) {
            return Err(DataError::DuplicateRole(name.clone()));
        }
    }
    if let Some(col) = raw.columns.iter().find(|c| !assigned.contains(c.as_str())) {
        return Err(DataError::UnassignedColumn(col.clone()));
    }
    if raw.rows.is_empty() {
        return Err(DataError::EmptyDataset);
    }

    let pick = |row: &RawRow, name: &String| -> Result<f64, DataError> {
        row.values[position[name.as_str()]].ok_or_else(|| DataError::MissingValue {
            row: row.id.clone(),
            column: name.clone(),
        })
    };

    let mut records = Vec::with_capacity(raw.rows.len());
    for row in &raw.rows {
        if row.values.len() != raw.columns.len() {
            return Err(DataError::RaggedRow {
                row: row.id.clone(),
                expected: raw.columns.len(),
                got: row.values.len(),
            });
        }
        let inputs = roles
            .inputs
            .iter()
            .map(|name| pick(row, name))
            .collect::<Result<Vec<_>, _>>()?;
        let outputs = roles
            .outputs
            .iter()
            .map(|name| pick(row, name))
            .collect::<Result<Vec<_>, _>>()?;
        records.push(DmuRecord {
            id: row.id.clone(),
            inputs,
            outputs,
        });
    }
    Dataset::new(roles.inputs.clone(), roles.outputs.clone(), records)
}

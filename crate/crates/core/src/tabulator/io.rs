use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Cell, Column, ColumnKind, Dataset, Design, JoinRule, Table, TabulateError};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Serialize, Deserialize)]
struct Manifest {
    design: Design,
    tables: Vec<TableEntry>,
    join_rules: Vec<JoinRule>,
}

#[derive(Serialize, Deserialize)]
struct TableEntry {
    name: String,
    origin: String,
    file: String,
    key: Vec<String>,
    columns: Vec<Column>,
}

/// Writes one CSV per table plus [`MANIFEST_FILE`]. The directory is created
/// if needed.
pub fn export_dataset(dataset: &Dataset, dir: &Path) -> Result<(), TabulateError> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for table in &dataset.tables {
        let file = format!("{}.csv", table.name);
        let mut w = csv::Writer::from_path(dir.join(&file))?;
        w.write_record(table.columns.iter().map(|c| c.name.as_str()))?;
        for row in &table.rows {
            w.write_record(row.iter().map(Cell::to_string))?;
        }
        w.flush()?;
        entries.push(TableEntry {
            name: table.name.clone(),
            origin: table.origin.clone(),
            file,
            key: table.key.clone(),
            columns: table.columns.clone(),
        });
    }
    let manifest = Manifest {
        design: dataset.design,
        tables: entries,
        join_rules: dataset.join_rules.clone(),
    };
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(())
}

fn parse_cell(raw: &str, kind: ColumnKind) -> Result<Cell, String> {
    if raw.is_empty() {
        return Ok(Cell::Empty);
    }
    match kind {
        ColumnKind::Textual => Ok(Cell::text(raw)),
        ColumnKind::Numeric => raw
            .parse::<f64>()
            .map(Cell::Number)
            .map_err(|e| format!("{raw:?} is not a number: {e}")),
        ColumnKind::Date => raw
            .parse::<i32>()
            .map(Cell::Year)
            .map_err(|e| format!("{raw:?} is not a year: {e}")),
    }
}

pub fn import_dataset(dir: &Path) -> Result<Dataset, TabulateError> {
    let manifest: Manifest = serde_json::from_slice(&fs::read(dir.join(MANIFEST_FILE))?)?;
    let mut tables = Vec::new();
    for entry in manifest.tables {
        let mut reader = csv::Reader::from_path(dir.join(&entry.file))?;
        let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
        let expected: Vec<&str> = entry.columns.iter().map(|c| c.name.as_str()).collect();
        if header != expected {
            return Err(TabulateError::BadCell {
                file: entry.file,
                line: 1,
                message: format!("header {header:?} does not match manifest {expected:?}"),
            });
        }
        let mut table = Table::new(entry.name, entry.origin, entry.key, entry.columns);
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let line = i + 2;
            let row = record
                .iter()
                .zip(&table.columns)
                .map(|(raw, col)| parse_cell(raw, col.kind))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|message| TabulateError::BadCell {
                    file: entry.file.clone(),
                    line,
                    message,
                })?;
            table.push_row(row)?;
        }
        tables.push(table);
    }
    Ok(Dataset {
        design: manifest.design,
        tables,
        join_rules: manifest.join_rules,
    })
}

//! Relational views of a [`KnowledgeGraph`](crate::graph::KnowledgeGraph).
//!
//! A [`Dataset`] is a set of typed [`Table`]s following one of six
//! [`Design`]s, plus the join rules that relate them. The canonical column
//! sets are documented in `docs/schemas.md` and built in [`schema`].

mod io;
mod linearize;
pub mod schema;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{export_dataset, import_dataset, MANIFEST_FILE};
pub use linearize::{linearize, table_token_count, BasicTokenizer, LinearizedInput, Tokenizer};
pub use schema::{
    build_event_table, normalize_6nf, precompute_aggregates, tabulate, PersonAggregates,
};

#[derive(Debug, Error)]
pub enum TabulateError {
    #[error("table {0} not found")]
    UnknownTable(String),
    #[error("no join rule between {0} and {1}")]
    MissingJoinRule(String, String),
    #[error("column {column} not found in table {table}")]
    UnknownColumn { column: String, table: String },
    #[error("row has {got} cells but table {table} has {expected} columns")]
    Arity {
        table: String,
        expected: usize,
        got: usize,
    },
    #[error("cell {cell:?} does not fit {kind:?} column {column}")]
    CellKind {
        column: String,
        kind: ColumnKind,
        cell: Cell,
    },
    #[error("design {0} cannot be normalized; expected agg or event")]
    NotAggregative(Design),
    #[error("unknown design {0:?}; expected one of 1t, raw, rel, agg, event, 6nf")]
    UnknownDesign(String),
    #[error("{file}:{line}: {message}")]
    BadCell {
        file: String,
        line: usize,
        message: String,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("manifest error: {0}")]
    Manifest(#[from] serde_json::Error),
}

/// A typed table cell. Inside aggregations an empty cell reads as 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cell {
    Text(String),
    Number(f64),
    Year(i32),
    Empty,
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        let s = s.into();
        if s.is_empty() {
            Cell::Empty
        } else {
            Cell::Text(s)
        }
    }

    pub fn opt_text(s: Option<&str>) -> Self {
        s.map_or(Cell::Empty, Cell::text)
    }

    pub fn opt_year(y: Option<i32>) -> Self {
        y.map_or(Cell::Empty, Cell::Year)
    }

    pub fn opt_number(n: Option<f64>) -> Self {
        n.map_or(Cell::Empty, Cell::Number)
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Cell::Empty)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Number(n) => Some(*n),
            Cell::Year(y) => Some(f64::from(*y)),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Scalar value used by the aggregation arithmetic; missing values are 0.
    pub fn scalar(&self) -> f64 {
        self.as_f64().unwrap_or(0.0)
    }

    pub(crate) fn key(&self) -> CellKey {
        match self {
            Cell::Text(s) => CellKey::Text(s.clone()),
            Cell::Number(n) => CellKey::Number(n.to_bits()),
            Cell::Year(y) => CellKey::Year(*y),
            Cell::Empty => CellKey::Empty,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Text(s) => f.write_str(s),
            Cell::Number(n) => write!(f, "{n}"),
            Cell::Year(y) => write!(f, "{y}"),
            Cell::Empty => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) enum CellKey {
    Text(String),
    Number(u64),
    Year(i32),
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Textual,
    Numeric,
    Date,
}

impl ColumnKind {
    fn accepts(self, cell: &Cell) -> bool {
        matches!(
            (self, cell),
            (_, Cell::Empty)
                | (ColumnKind::Textual, Cell::Text(_))
                | (ColumnKind::Numeric, Cell::Number(_) | Cell::Year(_))
                | (ColumnKind::Date, Cell::Year(_))
        )
    }

    pub fn is_ordered(self) -> bool {
        matches!(self, ColumnKind::Numeric | ColumnKind::Date)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    pub population_descriptor: bool,
}

impl Column {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        Self {
            name: name.into(),
            kind,
            population_descriptor: false,
        }
    }

    pub fn descriptor(mut self) -> Self {
        self.population_descriptor = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    /// Logical table this one was derived from; equals `name` unless the
    /// table came out of a 6NF decomposition.
    pub origin: String,
    pub key: Vec<String>,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(
        name: impl Into<String>,
        origin: impl Into<String>,
        key: Vec<String>,
        columns: Vec<Column>,
    ) -> Self {
        Self {
            name: name.into(),
            origin: origin.into(),
            key,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) -> Result<(), TabulateError> {
        if row.len() != self.columns.len() {
            return Err(TabulateError::Arity {
                table: self.name.clone(),
                expected: self.columns.len(),
                got: row.len(),
            });
        }
        for (col, cell) in self.columns.iter().zip(&row) {
            if !col.kind.accepts(cell) {
                return Err(TabulateError::CellKind {
                    column: col.name.clone(),
                    kind: col.kind,
                    cell: cell.clone(),
                });
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.column_index(name).is_some()
    }

    pub fn require_column(&self, name: &str) -> Result<usize, TabulateError> {
        self.column_index(name)
            .ok_or_else(|| TabulateError::UnknownColumn {
                column: name.to_owned(),
                table: self.name.clone(),
            })
    }

    /// Cells of one column, top to bottom.
    pub fn values<'a>(&'a self, name: &str) -> Option<impl Iterator<Item = &'a Cell> + 'a> {
        let idx = self.column_index(name)?;
        Some(self.rows.iter().map(move |r| &r[idx]))
    }

    pub fn is_key(&self, name: &str) -> bool {
        self.key.iter().any(|k| k == name)
    }

    pub fn non_key_columns(&self) -> impl Iterator<Item = &Column> {
        self.columns.iter().filter(|c| !self.is_key(&c.name))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Design {
    #[serde(rename = "1t")]
    OneTable,
    #[serde(rename = "raw")]
    Raw,
    #[serde(rename = "rel")]
    Rel,
    #[serde(rename = "agg")]
    Agg,
    #[serde(rename = "event")]
    Event,
    #[serde(rename = "6nf")]
    SixNF,
}

impl Design {
    pub const ALL: [Design; 6] = [
        Design::OneTable,
        Design::Raw,
        Design::Rel,
        Design::Agg,
        Design::Event,
        Design::SixNF,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Design::OneTable => "1t",
            Design::Raw => "raw",
            Design::Rel => "rel",
            Design::Agg => "agg",
            Design::Event => "event",
            Design::SixNF => "6nf",
        }
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Design {
    type Err = TabulateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Design::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| TabulateError::UnknownDesign(s.to_owned()))
    }
}

/// `left.left_key = right.right_key`, column by column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinRule {
    pub left: String,
    pub left_key: Vec<String>,
    pub right: String,
    pub right_key: Vec<String>,
}

impl JoinRule {
    pub fn new(left: &str, left_key: &[&str], right: &str, right_key: &[&str]) -> Self {
        Self {
            left: left.to_owned(),
            left_key: left_key.iter().map(|s| s.to_string()).collect(),
            right: right.to_owned(),
            right_key: right_key.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// The rule seen from `table`'s side: (own key, other table, other key).
    fn oriented(&self, table: &str) -> Option<(&[String], &str, &[String])> {
        if self.left == table {
            Some((
                self.left_key.as_slice(),
                self.right.as_str(),
                self.right_key.as_slice(),
            ))
        } else if self.right == table {
            Some((
                self.right_key.as_slice(),
                self.left.as_str(),
                self.left_key.as_slice(),
            ))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub design: Design,
    pub tables: Vec<Table>,
    pub join_rules: Vec<JoinRule>,
}

impl Dataset {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn require_table(&self, name: &str) -> Result<&Table, TabulateError> {
        self.table(name)
            .ok_or_else(|| TabulateError::UnknownTable(name.to_owned()))
    }

    pub fn table_names(&self) -> impl Iterator<Item = &str> {
        self.tables.iter().map(|t| t.name.as_str())
    }

    /// Logical table names in first-appearance order.
    pub fn groups(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for t in &self.tables {
            if !out.contains(&t.origin.as_str()) {
                out.push(&t.origin);
            }
        }
        out
    }

    pub fn group_tables<'a>(&'a self, origin: &'a str) -> impl Iterator<Item = &'a Table> + 'a {
        self.tables.iter().filter(move |t| t.origin == origin)
    }

    /// Rebuilds a logical table by joining every table derived from it.
    pub fn logical_table(&self, origin: &str) -> Result<Table, TabulateError> {
        let names: Vec<&str> = self.group_tables(origin).map(|t| t.name.as_str()).collect();
        match names.as_slice() {
            [] => Err(TabulateError::UnknownTable(origin.to_owned())),
            [single] => Ok(self.require_table(single)?.clone()),
            _ => join_tables(self, &names, None),
        }
    }
}

/// Inner-joins `names` left to right following the dataset's join rules.
///
/// Each table after the first must share a rule with a table already joined.
/// When several rules qualify, `key` selects the one whose key on the incoming
/// table's side contains that column. Key columns that carry the same name on
/// both sides appear once; other name collisions are resolved by prefixing
/// the incoming column with its table name (`table.column`).
pub fn join_tables(
    dataset: &Dataset,
    names: &[&str],
    key: Option<&str>,
) -> Result<Table, TabulateError> {
    let Some((first, rest)) = names.split_first() else {
        return Err(TabulateError::UnknownTable(String::new()));
    };
    let base = dataset.require_table(first)?;
    let mut out = base.clone();
    out.name = names.join("+");
    // (source table, source column, output index); merged keys appear once per source
    let mut provenance: Vec<(String, String, usize)> = base
        .columns
        .iter()
        .enumerate()
        .map(|(i, c)| (base.name.clone(), c.name.clone(), i))
        .collect();
    let mut joined: Vec<&str> = vec![first];

    for &name in rest {
        let incoming = dataset.require_table(name)?;
        let rule = dataset
            .join_rules
            .iter()
            .filter_map(|r| r.oriented(name))
            .filter(|(_, other, _)| joined.contains(other))
            .find(|(own_key, _, _)| key.is_none_or(|k| own_key.iter().any(|c| c == k)))
            .ok_or_else(|| {
                TabulateError::MissingJoinRule(joined.last().unwrap().to_string(), name.to_owned())
            })?;
        let (own_key, other, other_key) = rule;

        let left_idx: Vec<usize> = other_key
            .iter()
            .map(|col| {
                provenance
                    .iter()
                    .find(|(t, c, _)| t == other && c == col)
                    .map(|p| p.2)
                    .ok_or_else(|| TabulateError::UnknownColumn {
                        column: col.clone(),
                        table: other.to_owned(),
                    })
            })
            .collect::<Result<_, _>>()?;
        let right_idx: Vec<usize> = own_key
            .iter()
            .map(|col| incoming.require_column(col))
            .collect::<Result<_, _>>()?;

        // Same-named key columns merge; everything else is appended.
        let merged: Vec<(usize, usize)> = right_idx
            .iter()
            .zip(&left_idx)
            .filter(|(&r, &l)| incoming.columns[r].name == out.columns[l].name)
            .map(|(&r, &l)| (r, l))
            .collect();
        for &(r, l) in &merged {
            provenance.push((incoming.name.clone(), incoming.columns[r].name.clone(), l));
        }
        let appended: Vec<usize> = (0..incoming.columns.len())
            .filter(|i| !merged.iter().any(|(r, _)| r == i))
            .collect();

        let mut index: HashMap<Vec<CellKey>, Vec<usize>> = HashMap::new();
        for (i, row) in incoming.rows.iter().enumerate() {
            let k: Vec<CellKey> = right_idx.iter().map(|&c| row[c].key()).collect();
            index.entry(k).or_default().push(i);
        }

        let mut rows = Vec::new();
        for row in &out.rows {
            let k: Vec<CellKey> = left_idx.iter().map(|&c| row[c].key()).collect();
            for &m in index.get(&k).into_iter().flatten() {
                let mut new_row = row.clone();
                new_row.extend(appended.iter().map(|&c| incoming.rows[m][c].clone()));
                rows.push(new_row);
            }
        }
        for &c in &appended {
            let mut col = incoming.columns[c].clone();
            if out.columns.iter().any(|existing| existing.name == col.name) {
                col.name = format!("{}.{}", incoming.name, col.name);
            }
            provenance.push((incoming.name.clone(), incoming.columns[c].name.clone(), out.columns.len()));
            out.columns.push(col);
        }
        out.rows = rows;
        joined.push(name);
    }
    Ok(out)
}

//! Aggregation arithmetic over cell-selection probabilities.
//!
//! [`compute`] evaluates COUNT, SUM, AVERAGE and PORTION as expectations over
//! per-row selection probabilities; MIN and MAX are selections handled by
//! [`select_extreme`]. [`hard_answer`] is the exact row-scan oracle: with 0/1
//! probabilities both paths agree.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tabulator::{BasicTokenizer, Cell, Table, Tokenizer};

/// Tolerance for numeric equality throughout the crate.
pub const EPSILON: f64 = 1e-9;

/// Probability above which a cell counts as selected for MIN/MAX.
pub const SELECTION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum AggError {
    #[error("{0} is a cell selection, not a computation")]
    SelectionFunction(AggregationFunction),
    #[error("{0} is computed, not selected")]
    ComputedFunction(AggregationFunction),
    #[error("average over zero selected cells is undefined")]
    UndefinedAverage,
    #[error("no cell is selected")]
    NoSelection,
    #[error("PORTION needs population probabilities")]
    MissingPopulation,
    #[error("{0} needs a target column")]
    MissingColumn(AggregationFunction),
    #[error("column {0} not found")]
    UnknownColumn(String),
    #[error("{got} probabilities for a table of {expected} rows")]
    Misaligned { expected: usize, got: usize },
    #[error("probability {0} is outside [0, 1]")]
    OutOfRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AggregationFunction {
    Count,
    Sum,
    Average,
    Portion,
    Min,
    Max,
}

impl AggregationFunction {
    pub const ALL: [AggregationFunction; 6] = [
        AggregationFunction::Count,
        AggregationFunction::Sum,
        AggregationFunction::Average,
        AggregationFunction::Portion,
        AggregationFunction::Min,
        AggregationFunction::Max,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AggregationFunction::Count => "COUNT",
            AggregationFunction::Sum => "SUM",
            AggregationFunction::Average => "AVERAGE",
            AggregationFunction::Portion => "PORTION",
            AggregationFunction::Min => "MIN",
            AggregationFunction::Max => "MAX",
        }
    }

    pub fn is_selection(self) -> bool {
        matches!(self, AggregationFunction::Min | AggregationFunction::Max)
    }

    /// Whether the function reads a target column.
    pub fn needs_column(self) -> bool {
        !matches!(self, AggregationFunction::Count | AggregationFunction::Portion)
    }
}

impl fmt::Display for AggregationFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AggregationFunction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|f| f.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown aggregation function {s:?}"))
    }
}

/// Per-row selection weights `p_s`, aligned to a table's rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionProbabilities(Vec<f64>);

/// Per-row population weights `cp_s` from the population pass.
pub type PopulationProbabilities = SelectionProbabilities;

impl SelectionProbabilities {
    pub fn new(p: Vec<f64>) -> Result<Self, AggError> {
        match p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            Some(&bad) => Err(AggError::OutOfRange(bad)),
            None => Ok(Self(p)),
        }
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        Self(mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect())
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Indices whose probability exceeds [`SELECTION_THRESHOLD`].
    pub fn selected(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > SELECTION_THRESHOLD)
            .map(|(i, _)| i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
    Both,
}

impl Gender {
    pub const ALL: [Gender; 3] = [Gender::Male, Gender::Female, Gender::Both];

    /// The cell value stored in gender columns, if the gender filters at all.
    pub fn code(self) -> Option<&'static str> {
        match self {
            Gender::Male => Some("M"),
            Gender::Female => Some("F"),
            Gender::Both => None,
        }
    }
}

pub const GENDER_COLUMN: &str = "gender";
pub const OCCUPATION_COLUMN: &str = "occupation";

/// The group a population descriptor denotes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Population {
    All,
    Gender(Gender),
    Occupation(String),
}

impl Population {
    pub fn mask(&self, table: &Table) -> Result<Vec<bool>, AggError> {
        let (column, wanted) = match self {
            Population::All | Population::Gender(Gender::Both) => {
                return Ok(vec![true; table.len()])
            }
            Population::Gender(g) => (GENDER_COLUMN, g.code().unwrap_or_default()),
            Population::Occupation(o) => (OCCUPATION_COLUMN, o.as_str()),
        };
        let idx = column_index(table, column)?;
        Ok(table
            .rows
            .iter()
            .map(|r| r[idx].as_text().is_some_and(|v| v.eq_ignore_ascii_case(wanted)))
            .collect())
    }
}

pub const UNIVERSAL_DESCRIPTORS: [&str; 2] = ["people", "persons"];
pub const MALE_DESCRIPTORS: [&str; 2] = ["men", "males"];
pub const FEMALE_DESCRIPTORS: [&str; 2] = ["women", "females"];

/// The predefined population types plus data-dependent ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescriptorList {
    universal: Vec<String>,
    occupations: Vec<String>,
}

impl Default for DescriptorList {
    fn default() -> Self {
        Self::new(Vec::<String>::new(), Vec::<String>::new())
    }
}

impl DescriptorList {
    /// `extra_universal` are row nouns that select every row of their table;
    /// `occupations` are observed occupation values.
    pub fn new<U, O>(extra_universal: U, occupations: O) -> Self
    where
        U: IntoIterator,
        U::Item: Into<String>,
        O: IntoIterator,
        O::Item: Into<String>,
    {
        let mut universal: Vec<String> = UNIVERSAL_DESCRIPTORS.iter().map(|s| s.to_string()).collect();
        for u in extra_universal {
            let u = u.into().to_lowercase();
            if !universal.contains(&u) {
                universal.push(u);
            }
        }
        let mut occ: Vec<String> = Vec::new();
        for o in occupations {
            let o = o.into().to_lowercase();
            if !o.is_empty() && !occ.contains(&o) {
                occ.push(o);
            }
        }
        Self {
            universal,
            occupations: occ,
        }
    }

    pub fn population(&self, descriptor: &str) -> Option<Population> {
        let d = descriptor.to_lowercase();
        if MALE_DESCRIPTORS.contains(&d.as_str()) {
            Some(Population::Gender(Gender::Male))
        } else if FEMALE_DESCRIPTORS.contains(&d.as_str()) {
            Some(Population::Gender(Gender::Female))
        } else if self.universal.contains(&d) {
            Some(Population::All)
        } else if self.occupations.contains(&d) {
            Some(Population::Occupation(d))
        } else {
            None
        }
    }

    /// Every descriptor with its token sequence, longest first so multi-word
    /// descriptors win over their prefixes.
    fn tokenized(&self) -> Vec<(String, Vec<String>)> {
        let tok = BasicTokenizer;
        let mut all: Vec<(String, Vec<String>)> = MALE_DESCRIPTORS
            .iter()
            .chain(FEMALE_DESCRIPTORS.iter())
            .map(|s| s.to_string())
            .chain(self.universal.iter().cloned())
            .chain(self.occupations.iter().cloned())
            .map(|d| {
                let t = tok.tokenize(&d);
                (d, t)
            })
            .filter(|(_, t)| !t.is_empty())
            .collect();
        all.sort_by_key(|(_, t)| std::cmp::Reverse(t.len()));
        all
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "comparator", rename_all = "snake_case")]
pub enum Condition {
    Equals { column: String, value: Cell },
    /// Inclusive year range; only for numeric or date columns.
    Between { column: String, low: i32, high: i32 },
}

impl Condition {
    pub fn column(&self) -> &str {
        match self {
            Condition::Equals { column, .. } | Condition::Between { column, .. } => column,
        }
    }

    pub fn is_range(&self) -> bool {
        matches!(self, Condition::Between { .. })
    }

    pub fn matches(&self, cell: &Cell) -> bool {
        match self {
            Condition::Equals { value, .. } => match (value, cell) {
                (Cell::Text(a), Cell::Text(b)) => a == b,
                (Cell::Empty, _) | (_, Cell::Empty) => false,
                (a, b) => match (a.as_f64(), b.as_f64()) {
                    (Some(x), Some(y)) => (x - y).abs() <= EPSILON,
                    _ => false,
                },
            },
            Condition::Between { low, high, .. } => cell
                .as_f64()
                .is_some_and(|v| v >= f64::from(*low) && v <= f64::from(*high)),
        }
    }
}

/// Conjunction of conditions, a gender filter, and the population descriptor
/// that PORTION divides by.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub gender: Gender,
    pub conditions: Vec<Condition>,
    pub population: Option<Population>,
}

impl Default for Predicate {
    fn default() -> Self {
        Self {
            gender: Gender::Both,
            conditions: Vec::new(),
            population: None,
        }
    }
}

fn column_index(table: &Table, column: &str) -> Result<usize, AggError> {
    table
        .column_index(column)
        .ok_or_else(|| AggError::UnknownColumn(column.to_owned()))
}

impl Predicate {
    pub fn mask(&self, table: &Table) -> Result<Vec<bool>, AggError> {
        let mut mask = Population::Gender(self.gender).mask(table)?;
        for cond in &self.conditions {
            let idx = column_index(table, cond.column())?;
            for (m, row) in mask.iter_mut().zip(&table.rows) {
                *m = *m && cond.matches(&row[idx]);
            }
        }
        Ok(mask)
    }

    /// Columns the predicate reads, gender included when it filters.
    pub fn columns(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        if self.gender != Gender::Both {
            out.push(GENDER_COLUMN);
        }
        match &self.population {
            Some(Population::Gender(g)) if *g != Gender::Both => out.push(GENDER_COLUMN),
            Some(Population::Occupation(_)) => out.push(OCCUPATION_COLUMN),
            _ => {}
        }
        out.extend(self.conditions.iter().map(Condition::column));
        let mut seen = Vec::new();
        out.retain(|c| {
            let fresh = !seen.contains(c);
            seen.push(*c);
            fresh
        });
        out
    }
}

fn check_aligned(p: &SelectionProbabilities, table: &Table) -> Result<(), AggError> {
    if p.len() == table.len() {
        Ok(())
    } else {
        Err(AggError::Misaligned {
            expected: table.len(),
            got: p.len(),
        })
    }
}

fn weighted_sum(p: &SelectionProbabilities, table: &Table, column: Option<&str>, f: AggregationFunction) -> Result<f64, AggError> {
    let idx = column_index(table, column.ok_or(AggError::MissingColumn(f))?)?;
    Ok(p
        .as_slice()
        .iter()
        .zip(&table.rows)
        .map(|(p, row)| p * row[idx].scalar())
        .sum())
}

/// The expectation-style aggregates. Empty cells read as 0; MIN and MAX are
/// rejected because they select rather than compute.
pub fn compute(
    f: AggregationFunction,
    p: &SelectionProbabilities,
    cp: Option<&PopulationProbabilities>,
    table: &Table,
    column: Option<&str>,
) -> Result<f64, AggError> {
    check_aligned(p, table)?;
    let count = |q: &SelectionProbabilities| q.as_slice().iter().sum::<f64>();
    match f {
        AggregationFunction::Count => Ok(count(p)),
        AggregationFunction::Sum => weighted_sum(p, table, column, f),
        AggregationFunction::Average => {
            let n = count(p);
            if n == 0.0 {
                return Err(AggError::UndefinedAverage);
            }
            Ok(weighted_sum(p, table, column, f)? / n)
        }
        AggregationFunction::Portion => {
            let cp = cp.ok_or(AggError::MissingPopulation)?;
            check_aligned(cp, table)?;
            let population = count(cp);
            if population == 0.0 {
                Ok(0.0)
            } else {
                Ok(count(p) / population)
            }
        }
        AggregationFunction::Min | AggregationFunction::Max => Err(AggError::SelectionFunction(f)),
    }
}

/// Extreme value among selected, non-empty cells. Ties go to the lowest row.
pub fn select_extreme(
    p: &SelectionProbabilities,
    table: &Table,
    column: &str,
    f: AggregationFunction,
) -> Result<(usize, f64), AggError> {
    if !f.is_selection() {
        return Err(AggError::ComputedFunction(f));
    }
    check_aligned(p, table)?;
    let idx = column_index(table, column)?;
    let mut best: Option<(usize, f64)> = None;
    for row in p.selected() {
        let Some(v) = table.rows[row][idx].as_f64() else {
            continue;
        };
        let better = match best {
            None => true,
            Some((_, b)) if f == AggregationFunction::Max => v > b,
            Some((_, b)) => v < b,
        };
        if better {
            best = Some((row, v));
        }
    }
    best.ok_or(AggError::NoSelection)
}

/// First descriptor found scanning the question left to right.
pub fn extract_population(question: &str, descriptors: &DescriptorList) -> Option<String> {
    let tokens = BasicTokenizer.tokenize(question);
    let candidates = descriptors.tokenized();
    (0..tokens.len()).find_map(|start| {
        candidates
            .iter()
            .find(|(_, t)| tokens[start..].starts_with(t))
            .map(|(d, _)| d.clone())
    })
}

/// Anything that can answer a COUNT question with a per-row selection.
pub trait CountAnswerer {
    fn count_selection(&self, question: &str, table: &Table) -> SelectionProbabilities;
}

/// Answers "how many {descriptor}?" by matching the descriptor's population.
#[derive(Debug, Clone, Default)]
pub struct DescriptorCountAnswerer {
    pub descriptors: DescriptorList,
}

impl CountAnswerer for DescriptorCountAnswerer {
    fn count_selection(&self, question: &str, table: &Table) -> SelectionProbabilities {
        extract_population(question, &self.descriptors)
            .and_then(|d| self.descriptors.population(&d))
            .and_then(|pop| pop.mask(table).ok())
            .map(|m| SelectionProbabilities::from_mask(&m))
            .unwrap_or_else(|| SelectionProbabilities::zeros(table.len()))
    }
}

/// The population pass: a fixed COUNT question over the descriptor whose
/// selection becomes `cp_s`.
pub fn population_pass(descriptor: &str, table: &Table, answerer: &dyn CountAnswerer) -> PopulationProbabilities {
    answerer.count_selection(&format!("how many {descriptor}?"), table)
}

/// Exact row scan: the row and value MIN or MAX picks.
pub fn hard_select(
    f: AggregationFunction,
    predicate: &Predicate,
    table: &Table,
    column: &str,
) -> Result<(usize, f64), AggError> {
    let p = SelectionProbabilities::from_mask(&predicate.mask(table)?);
    select_extreme(&p, table, column, f)
}

/// Exact oracle: filters rows by the predicate and aggregates them directly.
pub fn hard_answer(
    f: AggregationFunction,
    predicate: &Predicate,
    table: &Table,
    column: Option<&str>,
) -> Result<f64, AggError> {
    let mask = predicate.mask(table)?;
    let rows: Vec<&Vec<Cell>> = table
        .rows
        .iter()
        .zip(&mask)
        .filter(|(_, m)| **m)
        .map(|(r, _)| r)
        .collect();
    let total = |f| -> Result<f64, AggError> {
        let idx = column_index(table, column.ok_or(AggError::MissingColumn(f))?)?;
        Ok(rows.iter().map(|r| r[idx].scalar()).sum())
    };
    match f {
        AggregationFunction::Count => Ok(rows.len() as f64),
        AggregationFunction::Sum => total(f),
        AggregationFunction::Average => {
            if rows.is_empty() {
                return Err(AggError::NoSelection);
            }
            Ok(total(f)? / rows.len() as f64)
        }
        AggregationFunction::Portion => {
            let Some(population) = &predicate.population else {
                return Ok(0.0);
            };
            let denominator = population.mask(table)?.iter().filter(|m| **m).count();
            if denominator == 0 {
                Ok(0.0)
            } else {
                Ok(rows.len() as f64 / denominator as f64)
            }
        }
        AggregationFunction::Min | AggregationFunction::Max => {
            let column = column.ok_or(AggError::MissingColumn(f))?;
            hard_select(f, predicate, table, column).map(|(_, v)| v)
        }
    }
}

/// Runs `compute` with hard 0/1 probabilities built from the predicate and
/// compares against [`hard_answer`].
pub fn soft_matches_hard(
    f: AggregationFunction,
    predicate: &Predicate,
    table: &Table,
    column: Option<&str>,
) -> bool {
    let hard = hard_answer(f, predicate, table, column);
    let soft = (|| {
        let p = SelectionProbabilities::from_mask(&predicate.mask(table)?);
        if f.is_selection() {
            let column = column.ok_or(AggError::MissingColumn(f))?;
            return select_extreme(&p, table, column, f).map(|(_, v)| v);
        }
        let cp = match &predicate.population {
            Some(pop) => SelectionProbabilities::from_mask(&pop.mask(table)?),
            None => SelectionProbabilities::zeros(table.len()),
        };
        compute(f, &p, Some(&cp), table, column)
    })();
    match (hard, soft) {
        (Ok(h), Ok(s)) => (h - s).abs() <= EPSILON,
        // An empty AVERAGE is undefined on both paths.
        (Err(AggError::NoSelection), Err(AggError::UndefinedAverage)) => true,
        (Err(a), Err(b)) => a == b,
        _ => false,
    }
}

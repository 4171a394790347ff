//! Pattern-based question synthesis.
//!
//! [`generate_items`] walks every logical table, target column, pattern,
//! gender and condition set up to a size bound, renders each combination to
//! text and labels it with the exact oracle from [`crate::aggcore`]. The
//! output doubles as training data for table selection via
//! [`export_selection_pairs`].

mod paraphrase;
pub mod phrasebook;

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use paraphrase::{
    paraphrase_items, HttpParaphraser, IdentityParaphraser, Paraphraser, ReplayParaphraser,
};

use crate::aggcore::{
    hard_answer, hard_select, AggError, AggregationFunction, Condition, DescriptorList, Gender,
    Population, Predicate, GENDER_COLUMN,
};
use crate::tabulator::schema::EVENTS;
use crate::tabulator::{join_tables, Cell, Column, ColumnKind, Dataset, Table, TabulateError};
use phrasebook::{
    bare_range, condition_phrase, event_noun, is_condition_column, range_prefix, row_noun,
    target_surface, ADDITIVE_COLUMNS, EVENT_COUNT_COLUMN, EVENT_KIND_COLUMN, EVENT_YEAR_COLUMN,
    ROW_NOUNS,
};

#[derive(Debug, Error)]
pub enum QgenError {
    #[error(transparent)]
    Tabulate(#[from] TabulateError),
    #[error(transparent)]
    Aggregate(#[from] AggError),
    #[error("cannot render {function} question: {message}")]
    Render {
        function: AggregationFunction,
        message: String,
    },
    #[error("line {line}: {source}")]
    Record {
        line: usize,
        source: serde_json::Error,
    },
    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    Ratios([f64; 3]),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// What a pattern can be applied to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub function: AggregationFunction,
    /// Column kinds the pattern aggregates; empty for row-level patterns.
    pub applicable_kinds: Vec<ColumnKind>,
}

impl Pattern {
    pub fn new(function: AggregationFunction) -> Self {
        let applicable_kinds = match function {
            AggregationFunction::Count | AggregationFunction::Portion => vec![],
            AggregationFunction::Sum => vec![ColumnKind::Numeric],
            _ => vec![ColumnKind::Numeric, ColumnKind::Date],
        };
        Self {
            function,
            applicable_kinds,
        }
    }

    pub fn is_row_level(&self) -> bool {
        self.applicable_kinds.is_empty()
    }

    /// Whether the pattern produces questions for `target` in `origin`.
    pub fn applies(&self, origin: &str, target: Option<&Column>) -> bool {
        match target {
            None => self.is_row_level() && origin != EVENTS,
            Some(col) => {
                let class = classify_attribute(origin, col, false);
                class.functions.contains(&self.function)
            }
        }
    }
}

pub fn default_patterns() -> Vec<Pattern> {
    AggregationFunction::ALL.into_iter().map(Pattern::new).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeClass {
    pub kind: ColumnKind,
    /// Functions that may aggregate this column as the question target.
    pub functions: Vec<AggregationFunction>,
    pub is_population_descriptor: bool,
    pub is_condition: bool,
}

pub fn classify_attribute(origin: &str, column: &Column, is_key: bool) -> AttributeClass {
    use AggregationFunction::*;
    let mut functions = Vec::new();
    let event_target = origin != EVENTS || column.name == EVENT_COUNT_COLUMN;
    if !is_key && column.kind.is_ordered() && event_target {
        functions.extend([Average, Min, Max]);
        if column.kind == ColumnKind::Numeric && ADDITIVE_COLUMNS.contains(&column.name.as_str()) {
            functions.insert(0, Sum);
        }
    }
    AttributeClass {
        kind: column.kind,
        functions,
        is_population_descriptor: column.population_descriptor,
        // Event keys (year, place, kind) are exactly what event questions filter on.
        is_condition: is_condition_column(origin, &column.name),
    }
}

/// A question before rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionSpec {
    pub function: AggregationFunction,
    /// Column aggregated or selected over; `None` for row-level COUNT/PORTION.
    pub target: Option<String>,
    /// Column whose value a MIN/MAX answer reports, when not the target.
    pub report: Option<String>,
    pub gender: Gender,
    pub conditions: Vec<Condition>,
    pub descriptor: Option<String>,
    /// Logical table the question is about.
    pub origin: String,
    pub tables: Vec<String>,
}

/// Maps a population descriptor to the rows it denotes.
pub fn descriptor_population(descriptor: &str) -> Option<Population> {
    DescriptorList::new(ROW_NOUNS, Vec::<String>::new()).population(descriptor)
}

impl QuestionSpec {
    pub fn predicate(&self) -> Predicate {
        Predicate {
            gender: self.gender,
            conditions: self.conditions.clone(),
            population: self.descriptor.as_deref().and_then(descriptor_population),
        }
    }

    /// Every column the answer reads, target first.
    pub fn referenced_columns(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let pred = self.predicate();
        let cols = self
            .target
            .iter()
            .chain(&self.report)
            .map(String::as_str)
            .chain(pred.columns());
        for c in cols {
            if !out.iter().any(|o| o == c) {
                out.push(c.to_owned());
            }
        }
        out
    }
}

/// A labeled question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAItem {
    pub function: AggregationFunction,
    pub question: String,
    pub answer: f64,
    pub tables: Vec<String>,
    pub spec: QuestionSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionPair {
    pub question: String,
    pub positive: Vec<String>,
    pub negative: Vec<String>,
}

fn render_error(spec: &QuestionSpec, message: impl Into<String>) -> QgenError {
    QgenError::Render {
        function: spec.function,
        message: message.into(),
    }
}

/// Joins condition phrases; returns the text and whether it opens passive.
fn render_conditions(spec: &QuestionSpec) -> Result<Option<(String, bool)>, QgenError> {
    let mut text = String::new();
    let mut passive = false;
    for (i, cond) in spec.conditions.iter().enumerate() {
        let (phrase, p) = condition_phrase(&spec.origin, cond, i == 0)
            .ok_or_else(|| render_error(spec, format!("no phrase for condition on {}", cond.column())))?;
        if i == 0 {
            passive = p;
        } else if cond.is_range() && bare_range(&spec.origin, cond.column()) {
            text.push(' ');
        } else {
            text.push_str(" and ");
        }
        text.push_str(&phrase);
    }
    Ok((!text.is_empty()).then_some((text, passive)))
}

fn render_event_question(spec: &QuestionSpec) -> Result<String, QgenError> {
    let mut kind = None;
    let mut rest = String::new();
    for cond in &spec.conditions {
        match cond {
            Condition::Equals { column, value } if column == EVENT_KIND_COLUMN => {
                kind = Some(value.to_string());
            }
            _ => {
                let (phrase, _) = condition_phrase(EVENTS, cond, false)
                    .ok_or_else(|| render_error(spec, format!("no phrase for {}", cond.column())))?;
                rest.push(' ');
                rest.push_str(&phrase);
            }
        }
    }
    let noun = event_noun(kind.as_deref());
    let text = match spec.function {
        AggregationFunction::Sum => format!("What is the total number of {noun}{rest}?"),
        AggregationFunction::Average => format!("What is the average number of {noun}{rest}?"),
        AggregationFunction::Min => format!("What is the year with the minimum number of {noun}{rest}?"),
        AggregationFunction::Max => format!("What is the year with the maximum number of {noun}{rest}?"),
        _ => return Err(render_error(spec, "event questions aggregate the count column")),
    };
    Ok(text)
}

/// Renders a spec to question text.
pub fn render_question(spec: &QuestionSpec) -> Result<String, QgenError> {
    if spec.origin == EVENTS {
        return render_event_question(spec);
    }
    let desc = spec
        .descriptor
        .as_deref()
        .ok_or_else(|| render_error(spec, "missing population descriptor"))?;
    let clause = render_conditions(spec)?;
    let that = match &clause {
        Some((text, true)) => format!(" that were {text}"),
        Some((text, false)) => format!(" that {text}"),
        None => String::new(),
    };
    let target = || {
        spec.target
            .as_deref()
            .map(|t| target_surface(&spec.origin, t))
            .ok_or_else(|| render_error(spec, "missing target column"))
    };
    let text = match spec.function {
        AggregationFunction::Count => match &clause {
            None => format!("How many {desc} are there?"),
            Some((text, true)) => format!("How many {desc} were {text}?"),
            Some((text, false)) => format!("How many {desc} {text}?"),
        },
        AggregationFunction::Portion => format!("What is the portion of {desc}{that}?"),
        AggregationFunction::Average => format!("What is the average {} of {desc}{that}?", target()?),
        AggregationFunction::Sum => format!("What is the total {} of {desc}{that}?", target()?),
        AggregationFunction::Min => format!("What is the minimum {} for {desc}{that}?", target()?),
        AggregationFunction::Max => format!("What is the maximum {} for {desc}{that}?", target()?),
    };
    Ok(text)
}

/// Renders `spec` with `pattern`; the two must agree on the function.
pub fn render_pattern(pattern: &Pattern, spec: &QuestionSpec) -> Result<String, QgenError> {
    if pattern.function != spec.function {
        return Err(render_error(
            spec,
            format!("pattern is for {}", pattern.function),
        ));
    }
    if pattern.is_row_level() != spec.target.is_none() {
        return Err(render_error(spec, "target slot does not match the pattern"));
    }
    render_question(spec)
}

/// Columns of a logical table: key columns first, then the non-key columns of
/// each member table in order.
pub fn group_columns(dataset: &Dataset, origin: &str) -> Vec<Column> {
    let mut out: Vec<Column> = Vec::new();
    for t in dataset.group_tables(origin) {
        for c in &t.columns {
            if !out.iter().any(|o| o.name == c.name) {
                out.push(c.clone());
            }
        }
    }
    out
}

/// Canonical condition order: equality before ranges, then by column
/// position in the logical table.
pub fn sort_conditions(conditions: &mut [Condition], columns: &[Column]) {
    let pos = |c: &Condition| columns.iter().position(|col| col.name == c.column()).unwrap_or(usize::MAX);
    conditions.sort_by_key(|c| (c.is_range(), pos(c)));
}

/// Member tables of `origin` holding the given columns, in reference order.
pub fn resolve_tables(dataset: &Dataset, origin: &str, columns: &[String]) -> Vec<String> {
    let members: Vec<&Table> = dataset.group_tables(origin).collect();
    if members.len() == 1 {
        return vec![members[0].name.clone()];
    }
    let mut out: Vec<String> = Vec::new();
    for col in columns {
        let holder = members
            .iter()
            .find(|t| t.has_column(col) && !t.is_key(col))
            .or_else(|| members.iter().find(|t| t.has_column(col)));
        if let Some(t) = holder {
            if !out.contains(&t.name) {
                out.push(t.name.clone());
            }
        }
    }
    if out.is_empty() {
        if let Some(first) = members.first() {
            out.push(first.name.clone());
        }
    }
    out
}

fn answer_on(spec: &QuestionSpec, table: &Table) -> Result<f64, AggError> {
    let pred = spec.predicate();
    match (spec.function, &spec.report, &spec.target) {
        (f, Some(report), Some(target)) if f.is_selection() => {
            let (row, _) = hard_select(f, &pred, table, target)?;
            let idx = table
                .column_index(report)
                .ok_or_else(|| AggError::UnknownColumn(report.clone()))?;
            Ok(table.rows[row][idx].scalar())
        }
        (f, _, target) => hard_answer(f, &pred, table, target.as_deref()),
    }
}

/// The gold answer: the exact oracle over the join of the spec's tables.
pub fn label_answer(spec: &QuestionSpec, dataset: &Dataset) -> Result<f64, QgenError> {
    let names: Vec<&str> = spec.tables.iter().map(String::as_str).collect();
    let table = match names.as_slice() {
        [single] => dataset.require_table(single)?.clone(),
        _ => join_tables(dataset, &names, None)?,
    };
    Ok(answer_on(spec, &table)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerationConfig {
    /// Largest condition set size; sizes 0 through this are enumerated.
    pub max_conditions: usize,
    /// Distinct present values tried per condition column.
    pub values_per_column: usize,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            max_conditions: 3,
            values_per_column: 5,
        }
    }
}

/// Candidate conditions for one column: the most frequent present values,
/// plus for date columns the lower and upper half of the observed range.
fn condition_options(origin: &str, table: &Table, col: usize, cap: usize) -> Vec<Condition> {
    let column = &table.columns[col];
    let mut counts: Vec<(Cell, usize)> = Vec::new();
    for row in &table.rows {
        let cell = &row[col];
        if cell.is_empty() {
            continue;
        }
        match counts.iter_mut().find(|(c, _)| c == cell) {
            Some((_, n)) => *n += 1,
            None => counts.push((cell.clone(), 1)),
        }
    }
    counts.sort_by_key(|(_, n)| std::cmp::Reverse(*n));
    let mut out: Vec<Condition> = counts
        .iter()
        .map(|(cell, _)| Condition::Equals {
            column: column.name.clone(),
            value: cell.clone(),
        })
        .filter(|c| condition_phrase(origin, c, true).is_some())
        .take(cap)
        .collect();
    if column.kind == ColumnKind::Date && range_prefix(origin, &column.name, true).is_some() {
        let years: Vec<i32> = counts.iter().filter_map(|(c, _)| c.as_f64()).map(|y| y as i32).collect();
        if let (Some(&lo), Some(&hi)) = (years.iter().min(), years.iter().max()) {
            if lo < hi {
                let mid = lo + (hi - lo) / 2;
                for (low, high) in [(lo, mid), (mid, hi)] {
                    out.push(Condition::Between {
                        column: column.name.clone(),
                        low,
                        high,
                    });
                }
            }
        }
    }
    out
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (i, &first) in items.iter().enumerate() {
        for mut rest in combinations(&items[i + 1..], k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn product(options: &[&[Condition]]) -> Vec<Vec<Condition>> {
    options.iter().fold(vec![vec![]], |acc, opts| {
        acc.iter()
            .flat_map(|prefix| {
                opts.iter().map(move |o| {
                    let mut next = prefix.clone();
                    next.push(o.clone());
                    next
                })
            })
            .collect()
    })
}

/// Enumerates, labels and renders questions over every logical table.
///
/// Loop order: table, target column (row-level first), pattern, gender,
/// condition-set size, condition columns, condition values. AVERAGE, MIN and
/// MAX specs whose selection is empty are dropped.
pub fn generate_items(
    dataset: &Dataset,
    patterns: &[Pattern],
    config: &GenerationConfig,
) -> Result<Vec<QAItem>, QgenError> {
    let mut items = Vec::new();
    for origin in dataset.groups() {
        let table = dataset.logical_table(origin)?;
        let columns = group_columns(dataset, origin);
        let genders: &[Gender] = if table.has_column(GENDER_COLUMN) {
            &Gender::ALL
        } else {
            &[Gender::Both]
        };
        let options: Vec<(usize, Vec<Condition>)> = (0..table.columns.len())
            .filter(|&i| classify_attribute(origin, &table.columns[i], table.is_key(&table.columns[i].name)).is_condition)
            .map(|i| (i, condition_options(origin, &table, i, config.values_per_column)))
            .filter(|(_, o)| !o.is_empty())
            .collect();
        let targets = std::iter::once(None).chain(
            table
                .columns
                .iter()
                .filter(|c| !table.is_key(&c.name))
                .map(Some),
        );
        for target in targets {
            for pattern in patterns {
                if !pattern.applies(origin, target) {
                    continue;
                }
                let report = (origin == EVENTS && pattern.function.is_selection())
                    .then(|| EVENT_YEAR_COLUMN.to_owned());
                let excluded: Vec<&str> = target
                    .map(|c| c.name.as_str())
                    .into_iter()
                    .chain(report.as_deref())
                    .collect();
                let available: Vec<usize> = options
                    .iter()
                    .enumerate()
                    .filter(|(_, (col, _))| !excluded.contains(&table.columns[*col].name.as_str()))
                    .map(|(i, _)| i)
                    .collect();
                for &gender in genders {
                    let descriptor = (origin != EVENTS).then(|| row_noun(origin, gender).to_owned());
                    for size in 0..=config.max_conditions.min(available.len()) {
                        for combo in combinations(&available, size) {
                            let opts: Vec<&[Condition]> = combo.iter().map(|&i| options[i].1.as_slice()).collect();
                            for mut conditions in product(&opts) {
                                sort_conditions(&mut conditions, &columns);
                                let mut spec = QuestionSpec {
                                    function: pattern.function,
                                    target: target.map(|c| c.name.clone()),
                                    report: report.clone(),
                                    gender,
                                    conditions,
                                    descriptor: descriptor.clone(),
                                    origin: origin.to_owned(),
                                    tables: vec![],
                                };
                                let answer = match answer_on(&spec, &table) {
                                    Ok(a) => a,
                                    Err(AggError::NoSelection | AggError::UndefinedAverage) => continue,
                                    Err(e) => return Err(e.into()),
                                };
                                spec.tables = resolve_tables(dataset, origin, &spec.referenced_columns());
                                let question = render_pattern(pattern, &spec)?;
                                items.push(QAItem {
                                    function: spec.function,
                                    question,
                                    answer,
                                    tables: spec.tables.clone(),
                                    spec,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(items)
}

pub fn generate_questions(
    dataset: &Dataset,
    patterns: &[Pattern],
    config: &GenerationConfig,
) -> Result<Vec<QuestionSpec>, QgenError> {
    Ok(generate_items(dataset, patterns, config)?
        .into_iter()
        .map(|i| i.spec)
        .collect())
}

pub fn write_jsonl<T: Serialize>(records: &[T], writer: impl Write) -> Result<(), QgenError> {
    let mut w = BufWriter::new(writer);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads one record per non-blank line; errors carry the 1-based line.
pub fn read_jsonl<T: for<'de> Deserialize<'de>>(reader: impl Read) -> Result<Vec<T>, QgenError> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| QgenError::Record { line: i + 1, source })?);
    }
    Ok(out)
}

/// Writes QA items as line-delimited JSON.
pub fn export_dataset(items: &[QAItem], path: &Path) -> Result<(), QgenError> {
    write_jsonl(items, File::create(path)?)
}

pub fn import_dataset(path: &Path) -> Result<Vec<QAItem>, QgenError> {
    read_jsonl(File::open(path)?)
}

/// One pair per item: its source tables are positive, every other table of
/// the dataset is negative.
pub fn export_selection_pairs(items: &[QAItem], dataset: &Dataset) -> Vec<SelectionPair> {
    items
        .iter()
        .map(|item| SelectionPair {
            question: item.question.clone(),
            positive: item.tables.clone(),
            negative: dataset
                .table_names()
                .filter(|n| !item.tables.iter().any(|t| t == n))
                .map(str::to_owned)
                .collect(),
        })
        .collect()
}

/// Train, test and evaluation parts.
pub type Splits<T> = (Vec<T>, Vec<T>, Vec<T>);

/// Shuffles with a seeded generator, then cuts train and test sizes at
/// `floor(n * ratio)`; the remainder is the evaluation split.
pub fn split_dataset<T: Clone>(
    items: &[T],
    ratios: [f64; 3],
    seed: u64,
) -> Result<Splits<T>, QgenError> {
    if ratios.iter().any(|r| *r < 0.0) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(QgenError::Ratios(ratios));
    }
    let n = items.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = |r: f64| ((n as f64) * r + 1e-9).floor() as usize;
    let train = cut(ratios[0]).min(n);
    let test = cut(ratios[1]).min(n - train);
    let pick = |range: &[usize]| range.iter().map(|&i| items[i].clone()).collect::<Vec<_>>();
    Ok((
        pick(&order[..train]),
        pick(&order[train..train + test]),
        pick(&order[train + test..]),
    ))
}

/// Counts items per function, for reports.
pub fn function_histogram(items: &[QAItem]) -> HashMap<AggregationFunction, usize> {
    let mut out = HashMap::new();
    for item in items {
        *out.entry(item.function).or_default() += 1;
    }
    out
}

//! Deterministic question answering over a tabulated tree.
//!
//! [`Engine::answer`] parses the question, picks the tables holding the
//! columns it reads, joins them into one dynamic table and checks the
//! linearized size against the token budget. Oversized questions come back as
//! [`Answer::NeedsDegreeReduction`] listing the relation degrees whose
//! subgraph fits; the caller picks one and asks again.

mod parse;
mod scorer;

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::{parse_question, Lexicon, ParseError, ParsedQuestion, QUESTION_TEMPLATES};
pub use scorer::{rank, score_table, select_tables, table_document, Scorer, TableScore, TfIdfScorer, CELL_SAMPLE};

use crate::aggcore::{
    compute, extract_population, hard_answer, hard_select, population_pass, AggError, AggregationFunction,
    Condition, DescriptorCountAnswerer, DescriptorList, Predicate, SelectionProbabilities,
};
use crate::graph::{degree_subgraph, DegreeScope, GraphError, KnowledgeGraph};
use crate::qgen::phrasebook::ROW_NOUNS;
use crate::qgen::{default_patterns, Pattern, QuestionSpec};
use crate::tabulator::{
    join_tables, linearize, tabulate, BasicTokenizer, Dataset, Design, Table, TabulateError, Tokenizer,
};

pub const DEFAULT_BUDGET: usize = 512;
pub const DEFAULT_K: usize = 5;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Tabulate(#[from] TabulateError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AskOptions {
    /// Relation degree around `source`; `None` means the whole tree.
    pub degree: Option<usize>,
    pub k: usize,
    pub budget: usize,
    /// Person the degree is measured from; defaults to the first person.
    pub source: Option<String>,
    /// Bypasses table selection and answers over exactly these tables.
    pub tables: Option<Vec<String>>,
}

impl Default for AskOptions {
    fn default() -> Self {
        Self {
            degree: None,
            k: DEFAULT_K,
            budget: DEFAULT_BUDGET,
            source: None,
            tables: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Unanswerable {
    Parse { message: String, nearest: String },
    ColumnNotFound { column: String },
    UnknownTable { table: String },
    TooManyTables { needed: usize, k: usize },
    NoFittingDegree { token_count: usize, budget: usize },
    UnknownPerson { id: String },
    EmptyTree,
    EmptySelection,
    Failed { message: String },
}

impl fmt::Display for Unanswerable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Unanswerable::Parse { message, .. } => write!(f, "{message}"),
            Unanswerable::ColumnNotFound { column } => write!(f, "column not found: {column}"),
            Unanswerable::UnknownTable { table } => write!(f, "unknown table: {table}"),
            Unanswerable::TooManyTables { needed, k } => {
                write!(f, "question needs {needed} tables but at most {k} may be selected")
            }
            Unanswerable::NoFittingDegree { token_count, budget } => write!(
                f,
                "table needs {token_count} tokens, budget is {budget}, and no relation degree fits"
            ),
            Unanswerable::UnknownPerson { id } => write!(f, "unknown person {id}"),
            Unanswerable::EmptyTree => write!(f, "the tree has no persons"),
            Unanswerable::EmptySelection => write!(f, "no rows match the question"),
            Unanswerable::Failed { message } => write!(f, "{message}"),
        }
    }
}

/// The row MIN or MAX picked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinningRow {
    pub index: usize,
    /// First key cell of the row, e.g. a person id or an event year.
    pub key: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub spec: QuestionSpec,
    pub confidence: f64,
    pub tables: Vec<String>,
    /// Join conditions applied, as `left.col = right.col`.
    pub join_keys: Vec<String>,
    pub predicate: String,
    pub row_count: usize,
    pub matched_rows: usize,
    /// PORTION only: rows in the population pass.
    pub population_rows: Option<usize>,
    pub winning_row: Option<WinningRow>,
    pub token_count: usize,
    pub budget: usize,
    pub degree: Option<usize>,
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Answer {
    Value { value: f64, trace: Box<Trace> },
    Unanswerable { reason: Unanswerable },
    NeedsDegreeReduction {
        token_count: usize,
        budget: usize,
        /// Degrees whose table fits, largest first.
        degrees: Vec<usize>,
    },
}

impl Answer {
    pub fn value(&self) -> Option<f64> {
        match self {
            Answer::Value { value, .. } => Some(*value),
            _ => None,
        }
    }
}

fn describe_predicate(pred: &Predicate) -> String {
    let mut parts: Vec<String> = Vec::new();
    if let Some(code) = pred.gender.code() {
        parts.push(format!("gender = {code}"));
    }
    for c in &pred.conditions {
        match c {
            Condition::Equals { column, value } => parts.push(format!("{column} = {value}")),
            Condition::Between { column, low, high } => {
                parts.push(format!("{low} <= {column} <= {high}"))
            }
        }
    }
    if parts.is_empty() {
        "all rows".into()
    } else {
        parts.join(" and ")
    }
}

/// Human-readable account of how an answer was reached.
pub fn explain(answer: &Answer) -> String {
    let mut out = String::new();
    match answer {
        Answer::Value { value, trace } => {
            let t = trace;
            let _ = writeln!(out, "answer: {value}");
            let _ = writeln!(out, "function: {}", t.spec.function);
            if let Some(target) = &t.spec.target {
                let _ = writeln!(out, "column: {target}");
            }
            let _ = writeln!(out, "tables: {}", t.tables.join(", "));
            if !t.join_keys.is_empty() {
                let _ = writeln!(out, "joined on: {}", t.join_keys.join(", "));
            }
            let _ = writeln!(out, "predicate: {}", t.predicate);
            let _ = writeln!(out, "rows matched: {} of {}", t.matched_rows, t.row_count);
            if let Some(pop) = t.population_rows {
                let _ = writeln!(out, "portion: {} / {}", t.matched_rows, pop);
            }
            if let Some(w) = &t.winning_row {
                let _ = writeln!(out, "winning row: #{} ({}) with {}", w.index, w.key, w.value);
            }
            let _ = writeln!(out, "tokens: {} of {}", t.token_count, t.budget);
            if let Some(d) = t.degree {
                let _ = writeln!(out, "degree: {d} around {}", t.source.as_deref().unwrap_or("?"));
            }
        }
        Answer::Unanswerable { reason } => {
            let _ = writeln!(out, "unanswerable: {reason}");
        }
        Answer::NeedsDegreeReduction { token_count, budget, degrees } => {
            let list: Vec<String> = degrees.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "table needs {token_count} tokens, budget is {budget}");
            let _ = writeln!(out, "degrees that fit: {}", list.join(", "));
        }
    }
    out
}

/// The dynamic table for one question.
struct Dynamic {
    tables: Vec<String>,
    join_keys: Vec<String>,
    table: Table,
    token_count: usize,
}

/// Answers questions about one tree under one design. Shared read-only
/// across threads; the per-degree datasets are computed once and cached.
pub struct Engine {
    graph: KnowledgeGraph,
    dataset: Arc<Dataset>,
    lexicon: Lexicon,
    patterns: Vec<Pattern>,
    scorer: Box<dyn Scorer>,
    tokenizer: Box<dyn Tokenizer>,
    descriptors: DescriptorList,
    scoped: Mutex<HashMap<(String, usize), Arc<Dataset>>>,
}

impl fmt::Debug for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Engine")
            .field("design", &self.dataset.design)
            .field("persons", &self.graph.person_count())
            .finish_non_exhaustive()
    }
}

impl Engine {
    pub fn new(graph: KnowledgeGraph, design: Design) -> Result<Self, EngineError> {
        let dataset = tabulate(&graph, design)?;
        Self::with_dataset(graph, dataset)
    }

    /// Uses a dataset tabulated earlier from `graph`.
    pub fn with_dataset(graph: KnowledgeGraph, dataset: Dataset) -> Result<Self, EngineError> {
        let lexicon = Lexicon::build(&dataset)?;
        let scorer = Box::new(TfIdfScorer::fit(&dataset));
        Ok(Self {
            graph,
            dataset: Arc::new(dataset),
            lexicon,
            patterns: default_patterns(),
            scorer,
            tokenizer: Box::new(BasicTokenizer),
            descriptors: DescriptorList::new(ROW_NOUNS, Vec::<String>::new()),
            scoped: Mutex::new(HashMap::new()),
        })
    }

    pub fn with_scorer(mut self, scorer: Box<dyn Scorer>) -> Self {
        self.scorer = scorer;
        self
    }

    pub fn with_tokenizer(mut self, tokenizer: Box<dyn Tokenizer>) -> Self {
        self.tokenizer = tokenizer;
        self
    }

    pub fn with_lexicon(mut self, lexicon: Lexicon) -> Self {
        self.lexicon = lexicon;
        self
    }

    pub fn graph(&self) -> &KnowledgeGraph {
        &self.graph
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn design(&self) -> Design {
        self.dataset.design
    }

    pub fn parse(&self, question: &str) -> Result<ParsedQuestion, ParseError> {
        parse_question(question, &self.patterns, &self.lexicon)
    }

    /// The dataset tabulated over the degree subgraph around `source`.
    pub fn scoped_dataset(&self, source: &str, degree: usize) -> Result<Arc<Dataset>, EngineError> {
        let key = (source.to_owned(), degree);
        if let Some(d) = self.scoped.lock().expect("cache lock").get(&key) {
            return Ok(d.clone());
        }
        let sub = degree_subgraph(
            &self.graph,
            DegreeScope {
                source_person: source,
                degree,
            },
        )?;
        let dataset = Arc::new(tabulate(&sub, self.dataset.design)?);
        let mut cache = self.scoped.lock().expect("cache lock");
        Ok(cache.entry(key).or_insert(dataset).clone())
    }

    /// Tables of the question's logical table that hold each referenced
    /// column; the best-scoring holder wins when there are several.
    fn choose_tables(&self, question: &str, spec: &QuestionSpec, dataset: &Dataset) -> Result<Vec<String>, Unanswerable> {
        let members: Vec<&Table> = dataset.group_tables(&spec.origin).collect();
        let best = |holders: Vec<&Table>| -> Option<String> {
            if holders.len() == 1 {
                return Some(holders[0].name.clone());
            }
            let mut scores: Vec<TableScore> = holders
                .iter()
                .map(|t| score_table(question, t, self.scorer.as_ref()))
                .collect();
            rank(&mut scores);
            scores.into_iter().next().map(|s| s.table)
        };
        let mut out: Vec<String> = Vec::new();
        for col in spec.referenced_columns() {
            let mut holders: Vec<&Table> = members
                .iter()
                .copied()
                .filter(|t| t.has_column(&col) && !t.is_key(&col))
                .collect();
            if holders.is_empty() {
                holders = members.iter().copied().filter(|t| t.has_column(&col)).collect();
            }
            let name = best(holders).ok_or(Unanswerable::ColumnNotFound { column: col.clone() })?;
            if !out.contains(&name) {
                out.push(name);
            }
        }
        if out.is_empty() {
            out.extend(best(members));
        }
        if out.is_empty() {
            return Err(Unanswerable::UnknownTable {
                table: spec.origin.clone(),
            });
        }
        Ok(out)
    }

    fn dynamic_table(
        &self,
        question: &str,
        spec: &QuestionSpec,
        dataset: &Dataset,
        opts: &AskOptions,
    ) -> Result<Dynamic, Unanswerable> {
        let tables = match &opts.tables {
            Some(t) => t.clone(),
            None => {
                let chosen = self.choose_tables(question, spec, dataset)?;
                if chosen.len() > opts.k {
                    return Err(Unanswerable::TooManyTables {
                        needed: chosen.len(),
                        k: opts.k,
                    });
                }
                chosen
            }
        };
        for t in &tables {
            if dataset.table(t).is_none() {
                return Err(Unanswerable::UnknownTable { table: t.clone() });
            }
        }
        let names: Vec<&str> = tables.iter().map(String::as_str).collect();
        let table = match names.as_slice() {
            [single] => dataset.require_table(single).cloned(),
            _ => join_tables(dataset, &names, None),
        }
        .map_err(|e| Unanswerable::Failed { message: e.to_string() })?;
        if let Some(column) = spec.referenced_columns().into_iter().find(|c| !table.has_column(c)) {
            return Err(Unanswerable::ColumnNotFound { column });
        }
        let join_keys = join_keys(dataset, &names);
        let token_count = linearize(question, &table, self.tokenizer.as_ref()).len();
        Ok(Dynamic {
            tables,
            join_keys,
            table,
            token_count,
        })
    }

    /// Degrees at most `below` whose dynamic table fits the budget, largest
    /// first.
    fn fitting_degrees(&self, question: &str, spec: &QuestionSpec, source: &str, below: usize, opts: &AskOptions) -> Vec<usize> {
        let mut out = Vec::new();
        for d in (0..=below).rev() {
            let Ok(dataset) = self.scoped_dataset(source, d) else {
                continue;
            };
            if let Ok(dy) = self.dynamic_table(question, spec, &dataset, opts) {
                if dy.token_count <= opts.budget {
                    out.push(d);
                }
            }
        }
        out
    }

    pub fn answer(&self, question: &str, opts: &AskOptions) -> Answer {
        let unanswerable = |reason| Answer::Unanswerable { reason };
        let parsed = match self.parse(question) {
            Ok(p) => p,
            Err(e) => {
                return unanswerable(Unanswerable::Parse {
                    message: e.to_string(),
                    nearest: e.nearest,
                })
            }
        };
        let spec = &parsed.spec;
        let source = match &opts.source {
            Some(s) if !self.graph.contains(s) => return unanswerable(Unanswerable::UnknownPerson { id: s.clone() }),
            Some(s) => Some(s.clone()),
            None => self.graph.persons().next().map(|p| p.id.clone()),
        };

        let dataset = match (opts.degree, &source) {
            (None, _) => self.dataset.clone(),
            (Some(_), None) => return unanswerable(Unanswerable::EmptyTree),
            (Some(d), Some(s)) => match self.scoped_dataset(s, d) {
                Ok(ds) => ds,
                Err(e) => return unanswerable(Unanswerable::Failed { message: e.to_string() }),
            },
        };
        let dy = match self.dynamic_table(question, spec, &dataset, opts) {
            Ok(dy) => dy,
            Err(reason) => return unanswerable(reason),
        };

        if dy.token_count > opts.budget {
            let degrees = match &source {
                Some(s) => {
                    let below = match opts.degree {
                        Some(0) => None,
                        Some(d) => Some(d - 1),
                        None => self.graph.eccentricity(s).ok(),
                    };
                    below.map_or_else(Vec::new, |b| self.fitting_degrees(question, spec, s, b, opts))
                }
                None => vec![],
            };
            if degrees.is_empty() {
                return unanswerable(Unanswerable::NoFittingDegree {
                    token_count: dy.token_count,
                    budget: opts.budget,
                });
            }
            return Answer::NeedsDegreeReduction {
                token_count: dy.token_count,
                budget: opts.budget,
                degrees,
            };
        }

        match self.evaluate(question, spec, &dy.table) {
            Ok((value, matched, population_rows, winning_row)) => Answer::Value {
                value,
                trace: Box::new(Trace {
                    spec: spec.clone(),
                    confidence: parsed.confidence,
                    tables: dy.tables,
                    join_keys: dy.join_keys,
                    predicate: describe_predicate(&spec.predicate()),
                    row_count: dy.table.len(),
                    matched_rows: matched,
                    population_rows,
                    winning_row,
                    token_count: dy.token_count,
                    budget: opts.budget,
                    degree: opts.degree,
                    source: opts.degree.and(source),
                }),
            },
            Err(AggError::UnknownColumn(column)) => unanswerable(Unanswerable::ColumnNotFound { column }),
            Err(AggError::NoSelection | AggError::UndefinedAverage) => unanswerable(Unanswerable::EmptySelection),
            Err(e) => unanswerable(Unanswerable::Failed { message: e.to_string() }),
        }
    }

    /// Runs the exact aggregation. PORTION takes two passes: the selection,
    /// then a COUNT over the population descriptor found in the question.
    #[allow(clippy::type_complexity)]
    fn evaluate(
        &self,
        question: &str,
        spec: &QuestionSpec,
        table: &Table,
    ) -> Result<(f64, usize, Option<usize>, Option<WinningRow>), AggError> {
        let pred = spec.predicate();
        let mask = pred.mask(table)?;
        let matched = mask.iter().filter(|m| **m).count();
        let f = spec.function;
        match f {
            AggregationFunction::Portion => {
                let p = SelectionProbabilities::from_mask(&mask);
                let cp = match extract_population(question, &self.descriptors) {
                    Some(d) => population_pass(
                        &d,
                        table,
                        &DescriptorCountAnswerer {
                            descriptors: self.descriptors.clone(),
                        },
                    ),
                    None => SelectionProbabilities::zeros(table.len()),
                };
                let population = cp.selected().count();
                let value = compute(f, &p, Some(&cp), table, None)?;
                Ok((value, matched, Some(population), None))
            }
            AggregationFunction::Min | AggregationFunction::Max => {
                let target = spec.target.as_deref().ok_or(AggError::MissingColumn(f))?;
                let (row, v) = hard_select(f, &pred, table, target)?;
                let value = match &spec.report {
                    Some(report) => {
                        let idx = table
                            .column_index(report)
                            .ok_or_else(|| AggError::UnknownColumn(report.clone()))?;
                        table.rows[row][idx].scalar()
                    }
                    None => v,
                };
                let key = table
                    .key
                    .first()
                    .and_then(|k| table.column_index(k))
                    .map(|i| table.rows[row][i].to_string())
                    .unwrap_or_default();
                Ok((value, matched, None, Some(WinningRow { index: row, key, value: v })))
            }
            _ => {
                let value = hard_answer(f, &pred, table, spec.target.as_deref())?;
                Ok((value, matched, None, None))
            }
        }
    }
}

/// The join conditions `join_tables` applies for `names`, in order.
fn join_keys(dataset: &Dataset, names: &[&str]) -> Vec<String> {
    let mut out = Vec::new();
    for (i, name) in names.iter().enumerate().skip(1) {
        let joined = &names[..i];
        let rule = dataset.join_rules.iter().find(|r| {
            (r.left == *name && joined.contains(&r.right.as_str()))
                || (r.right == *name && joined.contains(&r.left.as_str()))
        });
        if let Some(r) = rule {
            let pairs: Vec<String> = r
                .left_key
                .iter()
                .zip(&r.right_key)
                .map(|(a, b)| format!("{}.{a} = {}.{b}", r.left, r.right))
                .collect();
            out.push(pairs.join(" and "));
        }
    }
    out
}

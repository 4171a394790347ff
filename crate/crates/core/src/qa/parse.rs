//! Reads pattern-shaped questions back into [`QuestionSpec`]s.
//!
//! The parser does not own a grammar of its own. Every phrase it accepts is
//! produced by the same phrasebook functions the generator renders with, over
//! the distinct values present in the dataset, so anything the generator
//! writes is read back to an equal spec.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggcore::{AggregationFunction, Condition, Gender, GENDER_COLUMN};
use crate::qgen::phrasebook::{
    bare_range, condition_phrase, event_noun, range_prefix, row_noun, target_surface,
    EVENT_COUNT_COLUMN, EVENT_KIND_COLUMN, EVENT_YEAR_COLUMN,
};
use crate::qgen::{
    classify_attribute, group_columns, render_question, resolve_tables, sort_conditions, Pattern,
    QuestionSpec,
};
use crate::tabulator::schema::EVENTS;
use crate::tabulator::{BasicTokenizer, Column, ColumnKind, Dataset, TabulateError, Tokenizer};

/// Question shapes, used to name the closest one when parsing fails.
pub const QUESTION_TEMPLATES: [&str; 11] = [
    "How many {descriptor} are there?",
    "How many {descriptor} {conditions}?",
    "What is the portion of {descriptor} that {conditions}?",
    "What is the average {attribute} of {descriptor} that {conditions}?",
    "What is the total {attribute} of {descriptor} that {conditions}?",
    "What is the minimum {attribute} for {descriptor} that {conditions}?",
    "What is the maximum {attribute} for {descriptor} that {conditions}?",
    "What is the total number of {events} {conditions}?",
    "What is the average number of {events} {conditions}?",
    "What is the year with the minimum number of {events} {conditions}?",
    "What is the year with the maximum number of {events} {conditions}?",
];

const DEFAULT_SYNONYMS: [(&str, &str); 7] = [
    ("percentage", "portion"),
    ("proportion", "portion"),
    ("fraction", "portion"),
    ("mean", "average"),
    ("sum", "total"),
    ("lowest", "minimum"),
    ("highest", "maximum"),
];

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[error("cannot parse question (closest pattern: {nearest})")]
pub struct ParseError {
    pub question: String,
    /// Template with the largest token overlap with the question.
    pub nearest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedQuestion {
    pub text: String,
    pub spec: QuestionSpec,
    /// 1.0 when the text is exactly what the generator renders for `spec`.
    pub confidence: f64,
}

#[derive(Debug, Clone)]
struct RangeForm {
    column: String,
    prefixes: Vec<String>,
    bare: bool,
}

/// Known surface forms for one logical table.
#[derive(Debug, Clone)]
struct GroupLexicon {
    origin: String,
    columns: Vec<Column>,
    descriptors: Vec<(String, Gender)>,
    /// (surface, column) for every non-key column.
    targets: Vec<(String, String)>,
    /// Lowercased condition phrase to every condition it can denote.
    phrases: HashMap<String, Vec<Condition>>,
    ranges: Vec<RangeForm>,
    /// Event nouns and the kind condition each implies.
    event_nouns: Vec<(String, Option<Condition>)>,
}

/// Everything the parser can recognize in a dataset: descriptors, target
/// surfaces, condition phrases over observed values, and the schema needed
/// to resolve source tables.
#[derive(Debug, Clone)]
pub struct Lexicon {
    schema: Dataset,
    groups: Vec<GroupLexicon>,
    synonyms: HashMap<String, String>,
}

impl Lexicon {
    pub fn build(dataset: &Dataset) -> Result<Self, TabulateError> {
        let mut groups = Vec::new();
        for origin in dataset.groups() {
            groups.push(GroupLexicon::build(dataset, origin)?);
        }
        let mut schema = dataset.clone();
        for t in &mut schema.tables {
            t.rows.clear();
        }
        Ok(Self {
            schema,
            groups,
            synonyms: DEFAULT_SYNONYMS
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
        })
    }

    /// Adds word-level synonyms; `word` is rewritten to `canonical` before
    /// matching.
    pub fn with_synonyms<I, S>(mut self, pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        for (a, b) in pairs {
            self.synonyms.insert(a.into().to_lowercase(), b.into().to_lowercase());
        }
        self
    }

    fn group(&self, origin: &str) -> Option<&GroupLexicon> {
        self.groups.iter().find(|g| g.origin == origin)
    }
}

impl GroupLexicon {
    fn build(dataset: &Dataset, origin: &str) -> Result<Self, TabulateError> {
        let table = dataset.logical_table(origin)?;
        let columns = group_columns(dataset, origin);
        let descriptors = if origin == EVENTS {
            vec![]
        } else if table.has_column(GENDER_COLUMN) {
            Gender::ALL.iter().map(|&g| (row_noun(origin, g).to_owned(), g)).collect()
        } else {
            vec![(row_noun(origin, Gender::Both).to_owned(), Gender::Both)]
        };
        let targets = table
            .columns
            .iter()
            .filter(|c| !table.is_key(&c.name))
            .map(|c| (target_surface(origin, &c.name).to_lowercase(), c.name.clone()))
            .collect();

        let mut phrases: HashMap<String, Vec<Condition>> = HashMap::new();
        let mut ranges = Vec::new();
        let mut event_nouns = vec![(event_noun(None), None)];
        for (i, col) in table.columns.iter().enumerate() {
            if !classify_attribute(origin, col, table.is_key(&col.name)).is_condition {
                continue;
            }
            let mut seen = Vec::new();
            for row in &table.rows {
                let cell = &row[i];
                if cell.is_empty() || seen.contains(&cell) {
                    continue;
                }
                seen.push(cell);
                let cond = Condition::Equals {
                    column: col.name.clone(),
                    value: cell.clone(),
                };
                if origin == EVENTS && col.name == EVENT_KIND_COLUMN {
                    event_nouns.push((event_noun(Some(&cell.to_string())), Some(cond)));
                    continue;
                }
                if let Some((phrase, _)) = condition_phrase(origin, &cond, true) {
                    phrases.entry(phrase.to_lowercase()).or_default().push(cond);
                }
            }
            if col.kind == ColumnKind::Date {
                let mut prefixes: Vec<String> = [true, false]
                    .iter()
                    .filter_map(|&first| range_prefix(origin, &col.name, first))
                    .collect();
                prefixes.dedup();
                if !prefixes.is_empty() {
                    ranges.push(RangeForm {
                        column: col.name.clone(),
                        prefixes,
                        bare: bare_range(origin, &col.name),
                    });
                }
            }
        }
        Ok(Self {
            origin: origin.to_owned(),
            columns,
            descriptors,
            targets,
            phrases,
            ranges,
            event_nouns,
        })
    }

    /// Conditions a single phrase can denote.
    fn read_phrase(&self, phrase: &str) -> Vec<Condition> {
        let mut out: Vec<Condition> = self.phrases.get(phrase).cloned().unwrap_or_default();
        for r in &self.ranges {
            for prefix in &r.prefixes {
                let Some(rest) = phrase.strip_prefix(prefix.as_str()) else {
                    continue;
                };
                let Some((lo, hi)) = rest.split_once(" to ") else {
                    continue;
                };
                if let (Ok(low), Ok(high)) = (lo.parse::<i32>(), hi.parse::<i32>()) {
                    out.push(Condition::Between {
                        column: r.column.clone(),
                        low,
                        high,
                    });
                }
            }
        }
        out
    }

    fn is_bare(&self, cond: &Condition) -> bool {
        cond.is_range() && self.ranges.iter().any(|r| r.column == cond.column() && r.bare)
    }

    /// Splits `s` into condition phrases joined by " and " (or a single space
    /// before a bare range; every join is a single space in event questions).
    /// Each column appears at most once.
    fn conditions(&self, s: &str, bare_only: bool, used: &mut Vec<String>) -> Option<Vec<Condition>> {
        let events = self.origin == EVENTS;
        let ends = s
            .char_indices()
            .filter(|(_, c)| *c == ' ')
            .map(|(i, _)| i)
            .chain(std::iter::once(s.len()));
        for end in ends {
            for cond in self.read_phrase(&s[..end]) {
                if used.iter().any(|u| u == cond.column()) || (bare_only && !self.is_bare(&cond)) {
                    continue;
                }
                let tail = &s[end..];
                used.push(cond.column().to_owned());
                let rest = if tail.is_empty() {
                    Some(vec![])
                } else if events {
                    tail.strip_prefix(' ').and_then(|r| self.conditions(r, false, used))
                } else {
                    tail.strip_prefix(" and ")
                        .and_then(|r| self.conditions(r, false, used))
                        .or_else(|| tail.strip_prefix(' ').and_then(|r| self.conditions(r, true, used)))
                };
                used.pop();
                if let Some(mut rest) = rest {
                    rest.insert(0, cond);
                    return Some(rest);
                }
            }
        }
        None
    }

    fn clause(&self, s: &str) -> Option<Vec<Condition>> {
        let s = s.strip_prefix("were ").filter(|r| !r.is_empty()).unwrap_or(s);
        self.conditions(s, false, &mut Vec::new())
    }

    /// `{descriptor}` optionally followed by " that [were] {conditions}".
    fn described(&self, s: &str) -> Option<(String, Gender, Vec<Condition>)> {
        for (d, g) in &self.descriptors {
            let Some(rest) = s.strip_prefix(d.as_str()) else {
                continue;
            };
            if rest.is_empty() {
                return Some((d.clone(), *g, vec![]));
            }
            if let Some(conds) = rest.strip_prefix(" that ").and_then(|r| self.clause(r)) {
                return Some((d.clone(), *g, conds));
            }
        }
        None
    }

    /// `{descriptor} are there` or `{descriptor} [were] {conditions}`.
    fn counted(&self, s: &str) -> Option<(String, Gender, Vec<Condition>)> {
        for (d, g) in &self.descriptors {
            let Some(rest) = s.strip_prefix(d.as_str()).and_then(|r| r.strip_prefix(' ')) else {
                continue;
            };
            if rest == "are there" {
                return Some((d.clone(), *g, vec![]));
            }
            if let Some(conds) = self.clause(rest) {
                return Some((d.clone(), *g, conds));
            }
        }
        None
    }

    /// `{noun}{ condition}*` for event questions.
    fn events(&self, s: &str) -> Option<Vec<Condition>> {
        for (noun, kind) in &self.event_nouns {
            let Some(rest) = s.strip_prefix(noun.as_str()) else {
                continue;
            };
            let mut used: Vec<String> = kind.iter().map(|k| k.column().to_owned()).collect();
            let conds = if rest.is_empty() {
                Some(vec![])
            } else {
                rest.strip_prefix(' ').and_then(|r| self.conditions(r, false, &mut used))
            };
            if let Some(mut conds) = conds {
                conds.extend(kind.iter().cloned());
                return Some(conds);
            }
        }
        None
    }
}

/// Lowercases, drops closing punctuation, collapses whitespace and applies
/// word synonyms.
fn normalize(text: &str, synonyms: &HashMap<String, String>) -> String {
    let lower = text.trim().to_lowercase();
    let trimmed = lower.trim_end_matches(['?', '.', '!', ' ']);
    trimmed
        .split_whitespace()
        .map(|w| synonyms.get(w).map_or(w, String::as_str))
        .collect::<Vec<_>>()
        .join(" ")
}

fn nearest_template(text: &str) -> String {
    let tok = BasicTokenizer;
    let q: Vec<String> = tok.tokenize(text);
    let jaccard = |t: &str| {
        let words: Vec<String> = tok
            .tokenize(t)
            .into_iter()
            .filter(|w| !["descriptor", "conditions", "attribute", "events"].contains(&w.as_str()))
            .collect();
        let inter = words.iter().filter(|w| q.contains(w)).count();
        let mut union: Vec<&String> = words.iter().chain(&q).collect();
        union.sort();
        union.dedup();
        if union.is_empty() {
            0.0
        } else {
            inter as f64 / union.len() as f64
        }
    };
    let mut best = (QUESTION_TEMPLATES[0], f64::MIN);
    for t in QUESTION_TEMPLATES {
        let j = jaccard(t);
        if j > best.1 {
            best = (t, j);
        }
    }
    best.0.to_owned()
}

struct Draft {
    function: AggregationFunction,
    target: Option<String>,
    descriptor: Option<(String, Gender)>,
    conditions: Vec<Condition>,
}

fn parse_normalized(s: &str, lexicon: &Lexicon) -> Vec<(String, Draft)> {
    use AggregationFunction::*;
    let mut out = Vec::new();
    let people = lexicon.groups.iter().filter(|g| g.origin != EVENTS);
    let events = lexicon.group(EVENTS);

    if let Some(r) = s.strip_prefix("how many ") {
        for g in people.clone() {
            if let Some((d, gender, conditions)) = g.counted(r) {
                out.push((g.origin.clone(), Draft { function: Count, target: None, descriptor: Some((d, gender)), conditions }));
            }
        }
    }
    if let Some(r) = s.strip_prefix("what is the portion of ") {
        for g in people.clone() {
            if let Some((d, gender, conditions)) = g.described(r) {
                out.push((g.origin.clone(), Draft { function: Portion, target: None, descriptor: Some((d, gender)), conditions }));
            }
        }
    }
    let targeted = [
        ("what is the average ", " of ", Average),
        ("what is the total ", " of ", Sum),
        ("what is the minimum ", " for ", Min),
        ("what is the maximum ", " for ", Max),
    ];
    for (lead, joiner, function) in targeted {
        let Some(r) = s.strip_prefix(lead) else {
            continue;
        };
        for g in people.clone() {
            for (surface, column) in &g.targets {
                let Some(rest) = r.strip_prefix(surface.as_str()).and_then(|x| x.strip_prefix(joiner)) else {
                    continue;
                };
                if let Some((d, gender, conditions)) = g.described(rest) {
                    out.push((g.origin.clone(), Draft { function, target: Some(column.clone()), descriptor: Some((d, gender)), conditions }));
                }
            }
        }
    }
    if let Some(g) = events {
        let event_forms = [
            ("what is the total number of ", Sum),
            ("what is the average number of ", Average),
            ("what is the year with the minimum number of ", Min),
            ("what is the year with the maximum number of ", Max),
        ];
        for (lead, function) in event_forms {
            if let Some(conditions) = s.strip_prefix(lead).and_then(|r| g.events(r)) {
                out.push((
                    g.origin.clone(),
                    Draft { function, target: Some(EVENT_COUNT_COLUMN.to_owned()), descriptor: None, conditions },
                ));
            }
        }
    }
    out
}

/// Parses `text` into a spec over the lexicon's dataset.
///
/// Only functions and targets allowed by `patterns` are accepted. When the
/// text fits no pattern, the error names the closest question template.
pub fn parse_question(text: &str, patterns: &[Pattern], lexicon: &Lexicon) -> Result<ParsedQuestion, ParseError> {
    let fail = || ParseError {
        question: text.to_owned(),
        nearest: nearest_template(text),
    };
    let s = normalize(text, &lexicon.synonyms);
    let plain = normalize(text, &HashMap::new());
    let mut fallback = None;
    for (origin, draft) in parse_normalized(&s, lexicon) {
        let Some(group) = lexicon.group(&origin) else {
            continue;
        };
        let target_col = draft
            .target
            .as_deref()
            .and_then(|t| group.columns.iter().find(|c| c.name == t));
        if !patterns
            .iter()
            .any(|p| p.function == draft.function && p.applies(&origin, target_col))
        {
            continue;
        }
        let mut conditions = draft.conditions;
        sort_conditions(&mut conditions, &group.columns);
        let (descriptor, gender) = match draft.descriptor {
            Some((d, g)) => (Some(d), g),
            None => (None, Gender::Both),
        };
        let report = (origin == EVENTS && draft.function.is_selection()).then(|| EVENT_YEAR_COLUMN.to_owned());
        let mut spec = QuestionSpec {
            function: draft.function,
            target: draft.target,
            report,
            gender,
            conditions,
            descriptor,
            origin: origin.clone(),
            tables: vec![],
        };
        spec.tables = resolve_tables(&lexicon.schema, &origin, &spec.referenced_columns());
        let exact = render_question(&spec).is_ok_and(|r| normalize(&r, &HashMap::new()) == plain);
        let parsed = ParsedQuestion {
            text: text.to_owned(),
            spec,
            confidence: if exact { 1.0 } else { 0.8 },
        };
        if exact {
            return Ok(parsed);
        }
        fallback.get_or_insert(parsed);
    }
    fallback.ok_or_else(fail)
}

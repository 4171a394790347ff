use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::aggcore::{Condition, Gender, GENDER_COLUMN};
use crate::qgen::phrasebook::{condition_phrase, range_prefix, row_noun, target_surface};
use crate::tabulator::{BasicTokenizer, Dataset, Table, Tokenizer};

/// Distinct cell values sampled per table for its bag of words.
pub const CELL_SAMPLE: usize = 200;

/// Similarity between a question and a table. Must be deterministic.
pub trait Scorer: Send + Sync {
    fn score(&self, question: &str, table: &Table) -> f64;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableScore {
    pub table: String,
    pub score: f64,
}

/// Cosine similarity of idf-weighted token bags.
///
/// A table's bag holds its name, its row nouns, its column names, the words
/// questions use for its columns ("married", "number of children", ...) and
/// up to [`CELL_SAMPLE`] distinct cell values. Document frequencies come from the
/// dataset the scorer was fitted on.
#[derive(Debug, Clone, Default)]
pub struct TfIdfScorer {
    idf: HashMap<String, f64>,
    unseen_idf: f64,
}

impl TfIdfScorer {
    pub fn fit(dataset: &Dataset) -> Self {
        let n = dataset.tables.len() as f64;
        let mut df: HashMap<String, usize> = HashMap::new();
        for t in &dataset.tables {
            let mut words = table_document(t);
            words.sort();
            words.dedup();
            for w in words {
                *df.entry(w).or_default() += 1;
            }
        }
        let idf = df
            .into_iter()
            .map(|(w, d)| (w, ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0))
            .collect();
        Self {
            idf,
            unseen_idf: (1.0 + n).ln() + 1.0,
        }
    }

    fn weigh(&self, tokens: Vec<String>) -> HashMap<String, f64> {
        let mut tf: HashMap<String, f64> = HashMap::new();
        for t in tokens {
            *tf.entry(t).or_default() += 1.0;
        }
        for (w, v) in tf.iter_mut() {
            *v *= self.idf.get(w).copied().unwrap_or(self.unseen_idf);
        }
        tf
    }
}

/// The token bag a table is scored by.
pub fn table_document(table: &Table) -> Vec<String> {
    let tok = BasicTokenizer;
    let mut text = vec![table.name.clone()];
    // Row nouns name what a question counts ("couples", "women", ...).
    if table.has_column(GENDER_COLUMN) {
        text.extend(Gender::ALL.iter().map(|&g| row_noun(&table.origin, g).to_owned()));
    } else {
        text.push(row_noun(&table.origin, Gender::Both).to_owned());
    }
    for c in &table.columns {
        text.push(c.name.clone());
        text.push(target_surface(&table.origin, &c.name));
        if let Some(p) = range_prefix(&table.origin, &c.name, true) {
            text.push(p);
        }
    }
    let mut sampled = 0;
    let mut seen: Vec<String> = Vec::new();
    'rows: for row in &table.rows {
        for (c, cell) in table.columns.iter().zip(row) {
            if sampled >= CELL_SAMPLE {
                break 'rows;
            }
            if cell.is_empty() || table.is_key(&c.name) && c.name.ends_with("id") {
                continue;
            }
            let v = cell.to_string();
            if seen.contains(&v) {
                continue;
            }
            // The phrase carries the verb a question uses for this column.
            let cond = Condition::Equals {
                column: c.name.clone(),
                value: cell.clone(),
            };
            match condition_phrase(&table.origin, &cond, true) {
                Some((phrase, _)) => text.push(phrase),
                None => text.push(v.clone()),
            }
            seen.push(v);
            sampled += 1;
        }
    }
    text.iter().flat_map(|t| tok.tokenize(t)).collect()
}

fn cosine(a: &HashMap<String, f64>, b: &HashMap<String, f64>) -> f64 {
    let dot: f64 = a.iter().filter_map(|(w, x)| b.get(w).map(|y| x * y)).sum();
    let norm = |v: &HashMap<String, f64>| v.values().map(|x| x * x).sum::<f64>().sqrt();
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(0.0, 1.0)
    }
}

impl Scorer for TfIdfScorer {
    fn score(&self, question: &str, table: &Table) -> f64 {
        let q = self.weigh(BasicTokenizer.tokenize(question));
        if q.is_empty() {
            return 0.0;
        }
        cosine(&q, &self.weigh(table_document(table)))
    }
}

pub fn score_table(question: &str, table: &Table, scorer: &dyn Scorer) -> TableScore {
    TableScore {
        table: table.name.clone(),
        score: scorer.score(question, table),
    }
}

/// Higher score first, then table name.
pub fn rank(scores: &mut [TableScore]) {
    scores.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.table.cmp(&b.table))
    });
}

/// The `k` best-scoring tables of the dataset, or all of them when there
/// are fewer.
pub fn select_tables(question: &str, dataset: &Dataset, k: usize, scorer: &dyn Scorer) -> Vec<TableScore> {
    let mut scores: Vec<TableScore> = dataset
        .tables
        .iter()
        .map(|t| score_table(question, t, scorer))
        .collect();
    rank(&mut scores);
    scores.truncate(k);
    scores
}

use serde::{Deserialize, Serialize};

use super::{Cell, Table};

/// Splits text into tokens. The budget check only needs a consistent count,
/// so any subword tokenizer can sit behind this trait.
pub trait Tokenizer: Send + Sync {
    fn tokenize(&self, text: &str) -> Vec<String>;
}

/// Lowercased alphanumeric runs. A dot between two digits stays inside the
/// token so decimals like `0.5` count once.
#[derive(Debug, Clone, Copy, Default)]
pub struct BasicTokenizer;

impl Tokenizer for BasicTokenizer {
    fn tokenize(&self, text: &str) -> Vec<String> {
        let chars: Vec<char> = text.chars().collect();
        let mut out = Vec::new();
        let mut cur = String::new();
        for (i, &c) in chars.iter().enumerate() {
            let decimal_point = c == '.'
                && cur.chars().last().is_some_and(|p| p.is_ascii_digit())
                && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit());
            if c.is_alphanumeric() || decimal_point {
                cur.extend(c.to_lowercase());
            } else if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LinearizedInput {
    pub tokens: Vec<String>,
    pub position_ids: Vec<usize>,
    pub segment_ids: Vec<usize>,
    pub column_ids: Vec<usize>,
    pub row_ids: Vec<usize>,
    pub rank_ids: Vec<usize>,
}

impl LinearizedInput {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    fn push(&mut self, token: String, segment: usize, column: usize, row: usize, rank: usize) {
        self.position_ids.push(self.tokens.len());
        self.tokens.push(token);
        self.segment_ids.push(segment);
        self.column_ids.push(column);
        self.row_ids.push(row);
        self.rank_ids.push(rank);
    }
}

/// Dense ascending ranks (starting at 1) for the numeric cells of a column.
fn dense_ranks(table: &Table, col: usize) -> Vec<usize> {
    let values: Vec<Option<f64>> = table.rows.iter().map(|r| r[col].as_f64()).collect();
    let mut sorted: Vec<f64> = values.iter().flatten().copied().collect();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    values
        .iter()
        .map(|v| match v {
            Some(v) => sorted.partition_point(|s| s < v) + 1,
            None => 0,
        })
        .collect()
}

/// Question tokens, then every cell's tokens row by row. Column and row ids
/// are 1-based for table tokens; headers are not emitted.
pub fn linearize(question: &str, table: &Table, tokenizer: &dyn Tokenizer) -> LinearizedInput {
    let mut out = LinearizedInput::default();
    for token in tokenizer.tokenize(question) {
        out.push(token, 0, 0, 0, 0);
    }
    let ranks: Vec<Option<Vec<usize>>> = table
        .columns
        .iter()
        .enumerate()
        .map(|(i, c)| c.kind.is_ordered().then(|| dense_ranks(table, i)))
        .collect();
    for (r, row) in table.rows.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            let rank = ranks[c].as_ref().map_or(0, |rk| rk[r]);
            for token in cell_tokens(cell, tokenizer) {
                out.push(token, 1, c + 1, r + 1, rank);
            }
        }
    }
    out
}

fn cell_tokens(cell: &Cell, tokenizer: &dyn Tokenizer) -> Vec<String> {
    match cell {
        Cell::Empty => Vec::new(),
        other => tokenizer.tokenize(&other.to_string()),
    }
}

/// Number of tokens the table contributes to a linearized input.
pub fn table_token_count(table: &Table, tokenizer: &dyn Tokenizer) -> usize {
    table
        .rows
        .iter()
        .flatten()
        .map(|cell| cell_tokens(cell, tokenizer).len())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabulator::{Column, ColumnKind};

    fn table(values: &[Cell]) -> Table {
        let mut t = Table::new(
            "t",
            "t",
            vec!["name".into()],
            vec![
                Column::new("name", ColumnKind::Textual),
                Column::new("age", ColumnKind::Numeric),
            ],
        );
        for (i, v) in values.iter().enumerate() {
            t.push_row(vec![Cell::text(format!("p{i}")), v.clone()]).unwrap();
        }
        t
    }

    #[test]
    fn tokenizer_splits_and_lowercases() {
        let tok = BasicTokenizer;
        assert_eq!(
            tok.tokenize("How many Men, born in New-Jersey?"),
            vec!["how", "many", "men", "born", "in", "new", "jersey"]
        );
        assert_eq!(tok.tokenize("aged 0.5 in 1900."), vec!["aged", "0.5", "in", "1900"]);
        assert!(tok.tokenize("  ?! ").is_empty());
    }

    #[test]
    fn ranks_are_dense_ascending() {
        let t = table(&[Cell::Number(30.0), Cell::Number(10.0), Cell::Number(20.0)]);
        let lin = linearize("", &t, &BasicTokenizer);
        let ranks: Vec<usize> = lin
            .column_ids
            .iter()
            .zip(&lin.rank_ids)
            .filter(|(c, _)| **c == 2)
            .map(|(_, r)| *r)
            .collect();
        assert_eq!(ranks, vec![3, 1, 2]);
        let t = table(&[Cell::Number(5.0), Cell::Empty, Cell::Number(5.0), Cell::Number(1.0)]);
        let lin = linearize("", &t, &BasicTokenizer);
        let ranks: Vec<usize> = lin
            .column_ids
            .iter()
            .zip(&lin.rank_ids)
            .filter(|(c, _)| **c == 2)
            .map(|(_, r)| *r)
            .collect();
        assert_eq!(ranks, vec![2, 2, 1]);
    }

    #[test]
    fn question_tokens_are_zeroed() {
        let t = table(&[Cell::Number(1.0)]);
        let lin = linearize("how many people", &t, &BasicTokenizer);
        assert_eq!(lin.len(), 5);
        assert_eq!(&lin.segment_ids, &[0, 0, 0, 1, 1]);
        assert_eq!(&lin.column_ids, &[0, 0, 0, 1, 2]);
        assert_eq!(&lin.row_ids, &[0, 0, 0, 1, 1]);
        assert_eq!(&lin.position_ids, &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn empty_table_is_question_only() {
        let t = table(&[]);
        let lin = linearize("how many people", &t, &BasicTokenizer);
        assert_eq!(lin.tokens, vec!["how", "many", "people"]);
        assert_eq!(table_token_count(&t, &BasicTokenizer), 0);
    }

    #[test]
    fn single_row_two_cells() {
        let mut t = Table::new(
            "t",
            "t",
            vec![],
            vec![Column::new("a", ColumnKind::Textual), Column::new("b", ColumnKind::Textual)],
        );
        t.push_row(vec![Cell::text("Rome"), Cell::text("farmer")]).unwrap();
        assert_eq!(table_token_count(&t, &BasicTokenizer), 2);
    }
}

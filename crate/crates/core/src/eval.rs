//! Exact and soft accuracy over answerable questions, and totals that count
//! unanswerable questions as wrong.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggcore::{AggregationFunction, EPSILON};
use crate::qgen::QAItem;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("mean over an empty set of answerable questions")]
    NoAnswerable,
}

/// A model output: a number, some other text, or an explicit refusal
/// (`null` on the wire).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Predicted {
    Number(f64),
    Text(String),
    Unanswerable,
}

/// One prediction; `id` is the 0-based position of the gold item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: usize,
    pub predicted: Predicted,
}

pub fn exact_acc(predicted: &Predicted, gold: f64) -> f64 {
    match predicted {
        Predicted::Number(y) if (y - gold).abs() <= EPSILON => 1.0,
        _ => 0.0,
    }
}

/// `1 - |ŷ - y| / max(ŷ, y)`; 0 for non-numbers, opposite signs, or a
/// non-positive maximum.
pub fn soft_acc(predicted: &Predicted, gold: f64) -> f64 {
    let Predicted::Number(y) = *predicted else {
        return 0.0;
    };
    if y == gold {
        return 1.0;
    }
    let max = y.max(gold);
    if max <= 0.0 || y * gold < 0.0 {
        return 0.0;
    }
    (1.0 - (y - gold).abs() / max).clamp(0.0, 1.0)
}

pub fn answerable_acc(scores: &[f64]) -> Result<f64, EvalError> {
    if scores.is_empty() {
        return Err(EvalError::NoAnswerable);
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Accuracy over all questions when every unanswerable one scores 0.
pub fn total_acc(answerable_acc: f64, answerable_fraction: f64) -> f64 {
    answerable_acc * answerable_fraction
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Scores {
    pub questions: usize,
    pub answerable: usize,
    pub answerable_exact: f64,
    pub answerable_soft: f64,
    pub total_exact: f64,
    pub total_soft: f64,
}

impl Scores {
    fn from_pairs(pairs: &[(Option<&Predicted>, f64)]) -> Self {
        let answered: Vec<(&Predicted, f64)> = pairs
            .iter()
            .filter_map(|(p, y)| p.filter(|p| **p != Predicted::Unanswerable).map(|p| (p, *y)))
            .collect();
        let exact: Vec<f64> = answered.iter().map(|(p, y)| exact_acc(p, *y)).collect();
        let soft: Vec<f64> = answered.iter().map(|(p, y)| soft_acc(p, *y)).collect();
        let answerable_exact = answerable_acc(&exact).unwrap_or(0.0);
        let answerable_soft = answerable_acc(&soft).unwrap_or(0.0);
        let fraction = if pairs.is_empty() {
            0.0
        } else {
            answered.len() as f64 / pairs.len() as f64
        };
        Self {
            questions: pairs.len(),
            answerable: answered.len(),
            answerable_exact,
            answerable_soft,
            total_exact: total_acc(answerable_exact, fraction),
            total_soft: total_acc(answerable_soft, fraction),
        }
    }

    pub fn answerable_fraction(&self) -> f64 {
        if self.questions == 0 {
            0.0
        } else {
            self.answerable as f64 / self.questions as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub answerable_exact: f64,
    pub answerable_soft: f64,
    pub total_exact: f64,
    pub total_soft: f64,
    pub answerable_fraction: f64,
    /// Set when no question was answerable, so the answerable means are
    /// reported as 0 rather than computed.
    pub answerable_undefined: bool,
    /// Gold items with no prediction; they count as unanswerable.
    pub missing: usize,
    pub per_function: BTreeMap<AggregationFunction, Scores>,
    pub overall: Scores,
}

impl EvalReport {
    /// Plain-text summary: one line of overall metrics, then one row per
    /// function.
    pub fn to_text(&self) -> String {
        let pct = |x: f64| format!("{:.2}%", x * 100.0);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<10} {:>10} {:>10} {:>10} {:>12} {:>12} {:>12}",
            "function", "questions", "exact", "soft", "unanswerable", "total exact", "total soft"
        );
        let mut row = |name: &str, s: &Scores| {
            let _ = writeln!(
                out,
                "{:<10} {:>10} {:>10} {:>10} {:>12} {:>12} {:>12}",
                name,
                s.questions,
                pct(s.answerable_exact),
                pct(s.answerable_soft),
                pct(1.0 - s.answerable_fraction()),
                pct(s.total_exact),
                pct(s.total_soft)
            );
        };
        for (f, s) in &self.per_function {
            row(f.as_str(), s);
        }
        row("all", &self.overall);
        if self.answerable_undefined {
            out.push_str("no answerable questions; answerable accuracy reported as 0\n");
        }
        if self.missing > 0 {
            let _ = writeln!(out, "{} gold items had no prediction", self.missing);
        }
        out
    }
}

/// Scores predictions against gold items. Predictions for unknown ids are
/// ignored; gold items without a prediction count as unanswerable.
pub fn evaluate(predictions: &[Prediction], gold: &[QAItem]) -> EvalReport {
    let mut by_id: HashMap<usize, &Predicted> = HashMap::new();
    for p in predictions {
        if p.id >= gold.len() {
            log::warn!("prediction for unknown id {} ignored", p.id);
            continue;
        }
        by_id.insert(p.id, &p.predicted);
    }
    let missing = (0..gold.len()).filter(|i| !by_id.contains_key(i)).count();
    if missing > 0 {
        log::warn!("{missing} gold items have no prediction; treating them as unanswerable");
    }
    let pairs: Vec<(Option<&Predicted>, f64)> = gold
        .iter()
        .enumerate()
        .map(|(i, item)| (by_id.get(&i).copied(), item.answer))
        .collect();
    let overall = Scores::from_pairs(&pairs);
    let mut per_function = BTreeMap::new();
    for f in AggregationFunction::ALL {
        let subset: Vec<(Option<&Predicted>, f64)> = gold
            .iter()
            .zip(&pairs)
            .filter(|(item, _)| item.function == f)
            .map(|(_, p)| *p)
            .collect();
        if !subset.is_empty() {
            per_function.insert(f, Scores::from_pairs(&subset));
        }
    }
    EvalReport {
        answerable_exact: overall.answerable_exact,
        answerable_soft: overall.answerable_soft,
        total_exact: overall.total_exact,
        total_soft: overall.total_soft,
        answerable_fraction: overall.answerable_fraction(),
        answerable_undefined: overall.answerable == 0,
        missing,
        per_function,
        overall,
    }
}

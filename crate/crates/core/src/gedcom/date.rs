use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DateQualifier {
    Exact,
    About,
    Before,
    After,
    Unparsed,
}

/// A GEDCOM date value. `raw` always keeps the trimmed source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenDate {
    pub year: Option<i32>,
    pub month: Option<u8>,
    pub day: Option<u8>,
    pub qualifier: DateQualifier,
    pub raw: String,
}

impl GenDate {
    fn unparsed(raw: &str) -> Self {
        Self {
            year: None,
            month: None,
            day: None,
            qualifier: DateQualifier::Unparsed,
            raw: raw.to_owned(),
        }
    }
}

const MONTHS: [&str; 12] = [
    "JAN", "FEB", "MAR", "APR", "MAY", "JUN", "JUL", "AUG", "SEP", "OCT", "NOV", "DEC",
];

fn month(token: &str) -> Option<u8> {
    MONTHS
        .iter()
        .position(|m| m.eq_ignore_ascii_case(token))
        .map(|i| i as u8 + 1)
}

fn year(token: &str) -> Option<i32> {
    if token.is_empty() || token.len() > 4 || !token.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    token.parse().ok().filter(|&y| y > 0)
}

fn day(token: &str) -> Option<u8> {
    if token.len() > 2 || !token.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    token.parse().ok().filter(|d| (1..=31).contains(d))
}

/// `[DD] [MON] YYYY`
fn calendar(tokens: &[&str]) -> Option<(i32, Option<u8>, Option<u8>)> {
    match tokens {
        [y] => Some((year(y)?, None, None)),
        [m, y] => Some((year(y)?, Some(month(m)?), None)),
        [d, m, y] => Some((year(y)?, Some(month(m)?), Some(day(d)?))),
        _ => None,
    }
}

/// Parses a GEDCOM date. Never fails: anything outside the supported grammar
/// comes back with [`DateQualifier::Unparsed`] and no year.
///
/// Supported: `DD MON YYYY`, `MON YYYY`, `YYYY`, each optionally prefixed by
/// `ABT`, `BEF` or `AFT`. A range `BET x AND y` is reduced to the year of `x`
/// with qualifier `About`.
pub fn parse_date(text: &str) -> GenDate {
    let raw = text.trim();
    let tokens: Vec<&str> = raw.split_whitespace().collect();
    let (qualifier, body): (DateQualifier, &[&str]) = match tokens.split_first() {
        Some((first, rest)) if first.eq_ignore_ascii_case("ABT") => (DateQualifier::About, rest),
        Some((first, rest)) if first.eq_ignore_ascii_case("BEF") => (DateQualifier::Before, rest),
        Some((first, rest)) if first.eq_ignore_ascii_case("AFT") => (DateQualifier::After, rest),
        Some((first, rest)) if first.eq_ignore_ascii_case("BET") => {
            let Some(and) = rest.iter().position(|t| t.eq_ignore_ascii_case("AND")) else {
                return GenDate::unparsed(raw);
            };
            if calendar(&rest[and + 1..]).is_none() {
                return GenDate::unparsed(raw);
            }
            return match calendar(&rest[..and]) {
                Some((y, _, _)) => GenDate {
                    year: Some(y),
                    month: None,
                    day: None,
                    qualifier: DateQualifier::About,
                    raw: raw.to_owned(),
                },
                None => GenDate::unparsed(raw),
            };
        }
        _ => (DateQualifier::Exact, &tokens[..]),
    };
    match calendar(body) {
        Some((y, m, d)) => GenDate {
            year: Some(y),
            month: m,
            day: d,
            qualifier,
            raw: raw.to_owned(),
        },
        None => GenDate::unparsed(raw),
    }
}

//! GEDCOM 5.5 lineage-linked input.
//!
//! Parsing happens in two passes. [`parse_gedcom`] turns the raw bytes into a
//! forest of level-structured [`GedcomNode`]s, and [`extract_records`] walks
//! that forest to build [`Individual`] and [`Family`] records with their
//! cross references resolved. Anomalies that do not prevent a sensible reading
//! of the file are reported as [`Warning`]s instead of errors.

mod date;
mod records;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use date::{parse_date, DateQualifier, GenDate};
pub use records::{extract_records, EventDetail, Family, Individual, Sex};

/// Errors that abort parsing.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum GedcomError {
    #[error("input is not decodable as text: {0}")]
    Encoding(String),
    #[error("line {line}: level {level} cannot follow level {previous}")]
    LevelJump {
        line: usize,
        level: u32,
        previous: i64,
    },
    #[error("duplicate record identifier {0}")]
    DuplicateXref(String),
}

/// A recoverable anomaly. `line` is 1-based; 0 means the warning is not tied
/// to a single line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub line: usize,
    pub message: String,
}

impl Warning {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseReport {
    pub individuals_count: usize,
    pub families_count: usize,
    pub warnings: Vec<Warning>,
}

/// One GEDCOM line together with its subordinate lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GedcomNode {
    pub level: u32,
    pub xref: Option<String>,
    pub tag: String,
    pub value: Option<String>,
    /// 1-based line number in the source.
    pub line: usize,
    pub children: Vec<GedcomNode>,
}

impl GedcomNode {
    /// First direct child carrying `tag`.
    pub fn child(&self, tag: &str) -> Option<&GedcomNode> {
        self.children.iter().find(|c| c.tag == tag)
    }

    pub fn value_str(&self) -> Option<&str> {
        self.value.as_deref()
    }
}

/// Decodes the input as UTF-8, falling back to Latin-1 with a warning.
///
/// Input containing NUL bytes is rejected: it is either binary or UTF-16,
/// neither of which is a supported GEDCOM transport.
fn decode(bytes: &[u8]) -> Result<(String, Option<Warning>), GedcomError> {
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    if let Some(pos) = bytes.iter().position(|&b| b == 0) {
        return Err(GedcomError::Encoding(format!(
            "NUL byte at offset {pos} (UTF-16 and binary input are not supported)"
        )));
    }
    match std::str::from_utf8(bytes) {
        Ok(text) => Ok((text.to_owned(), None)),
        Err(err) => {
            let offset = err.valid_up_to();
            let line = 1 + bytes[..offset].iter().filter(|&&b| b == b'\n').count();
            let text: String = bytes.iter().map(|&b| char::from(b)).collect();
            Ok((
                text,
                Some(Warning::new(
                    line,
                    "input is not valid UTF-8; decoded as Latin-1 (ANSEL is not supported)",
                )),
            ))
        }
    }
}

struct RawLine<'a> {
    level: u32,
    xref: Option<&'a str>,
    tag: &'a str,
    value: Option<&'a str>,
}

fn split_line(line: &str) -> Option<RawLine<'_>> {
    let line = line.trim_start();
    let (level, rest) = line.split_once(' ').unwrap_or((line, ""));
    let level: u32 = level.parse().ok()?;
    let rest = rest.trim_start();
    let (xref, rest) = if rest.starts_with('@') {
        let (xref, rest) = rest.split_once(' ')?;
        if xref.len() < 3 || !xref.ends_with('@') {
            return None;
        }
        (Some(xref), rest.trim_start())
    } else {
        (None, rest)
    };
    let (tag, value) = match rest.split_once(' ') {
        Some((tag, value)) => (tag, Some(value)),
        None => (rest, None),
    };
    if tag.is_empty() {
        return None;
    }
    let value = value.filter(|v| !v.is_empty());
    Some(RawLine {
        level,
        xref,
        tag,
        value,
    })
}

/// Parses GEDCOM bytes into a forest of level-0 records.
///
/// The report's counts are the number of level-0 `INDI` and `FAM` records.
pub fn parse_gedcom(bytes: &[u8]) -> Result<(Vec<GedcomNode>, ParseReport), GedcomError> {
    let (text, encoding_warning) = decode(bytes)?;
    let mut report = ParseReport::default();
    report.warnings.extend(encoding_warning);

    let mut roots: Vec<GedcomNode> = Vec::new();
    let mut stack: Vec<GedcomNode> = Vec::new();

    fn fold_to(stack: &mut Vec<GedcomNode>, roots: &mut Vec<GedcomNode>, depth: usize) {
        while stack.len() > depth {
            let node = stack.pop().expect("stack is non-empty");
            match stack.last_mut() {
                Some(parent) => parent.children.push(node),
                None => roots.push(node),
            }
        }
    }

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let Some(raw) = split_line(line) else {
            report
                .warnings
                .push(Warning::new(line_no, format!("malformed line skipped: {line:?}")));
            continue;
        };

        let previous = stack.last().map_or(-1, |n| i64::from(n.level));
        if i64::from(raw.level) > previous + 1 {
            return Err(GedcomError::LevelJump {
                line: line_no,
                level: raw.level,
                previous,
            });
        }

        let tag = raw.tag.to_ascii_uppercase();
        if tag == "CONC" || tag == "CONT" {
            // Continuations extend the value of their superior line.
            fold_to(&mut stack, &mut roots, raw.level as usize);
            if let Some(parent) = stack.last_mut() {
                let value = parent.value.get_or_insert_with(String::new);
                if tag == "CONT" {
                    value.push('\n');
                }
                value.push_str(raw.value.unwrap_or(""));
            } else {
                report
                    .warnings
                    .push(Warning::new(line_no, "continuation line without a superior"));
            }
            continue;
        }

        fold_to(&mut stack, &mut roots, raw.level as usize);
        stack.push(GedcomNode {
            level: raw.level,
            xref: raw.xref.map(str::to_owned),
            tag,
            value: raw.value.map(str::to_owned),
            line: line_no,
            children: Vec::new(),
        });
    }
    fold_to(&mut stack, &mut roots, 0);

    report.individuals_count = roots.iter().filter(|n| n.tag == "INDI").count();
    report.families_count = roots.iter().filter(|n| n.tag == "FAM").count();
    Ok((roots, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn head_only_file() {
        let (nodes, report) = parse_gedcom(b"0 HEAD\n").unwrap();
        assert_eq!(nodes.len(), 1);
        assert_eq!(nodes[0].tag, "HEAD");
        assert_eq!(report.individuals_count, 0);
    }

    #[test]
    fn level_jump_is_structural_error() {
        let src = "0 @I1@ INDI\n1 BIRT\n3 DATE 1900\n";
        let err = parse_gedcom(src.as_bytes()).unwrap_err();
        assert_eq!(
            err,
            GedcomError::LevelJump {
                line: 3,
                level: 3,
                previous: 1
            }
        );
    }

    #[test]
    fn first_line_must_be_level_zero() {
        let err = parse_gedcom(b"1 NAME x\n").unwrap_err();
        assert!(matches!(err, GedcomError::LevelJump { line: 1, .. }));
    }

    #[test]
    fn continuation_lines_join_values() {
        let src = "0 @N1@ NOTE first\n1 CONC  half\n1 CONT second\n";
        let (nodes, _) = parse_gedcom(src.as_bytes()).unwrap();
        assert_eq!(nodes[0].value.as_deref(), Some("first half\nsecond"));
        assert!(nodes[0].children.is_empty());
    }

    #[test]
    fn crlf_and_bom_are_tolerated() {
        let src = b"\xEF\xBB\xBF0 HEAD\r\n1 CHAR UTF-8\r\n0 TRLR\r\n";
        let (nodes, report) = parse_gedcom(src).unwrap();
        assert_eq!(nodes.len(), 2);
        assert_eq!(nodes[0].children[0].value.as_deref(), Some("UTF-8"));
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn latin1_fallback_warns() {
        let src = b"0 @I1@ INDI\n1 NAME Jos\xE9\n";
        let (nodes, report) = parse_gedcom(src).unwrap();
        assert_eq!(nodes[0].children[0].value.as_deref(), Some("José"));
        assert_eq!(report.warnings.len(), 1);
        assert_eq!(report.warnings[0].line, 2);
    }

    #[test]
    fn nul_bytes_are_an_encoding_error() {
        let src = b"\xFF\xFE0\x00 \x00H\x00";
        assert!(matches!(parse_gedcom(src), Err(GedcomError::Encoding(_))));
    }

    #[test]
    fn malformed_lines_become_warnings() {
        let src = "0 HEAD\nnot a line\n0 TRLR\n";
        let (nodes, report) = parse_gedcom(src.as_bytes()).unwrap();
        assert_eq!(nodes.len(), 2);
        assert_eq!(report.warnings[0].line, 2);
    }
}

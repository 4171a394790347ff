//! Surface forms for descriptors, targets and conditions. Rendering and the
//! question parser both go through these functions, so a phrase is always
//! read back the way it was written.

use crate::aggcore::{Condition, Gender};
use crate::tabulator::schema::{EVENTS, KINSHIP, PARENT_OF, PERSONS, SIBLING_OF, SPOUSE_OF};
use crate::tabulator::Cell;

/// Columns that SUM makes sense for.
pub const ADDITIVE_COLUMNS: [&str; 2] = ["children_count", "count"];

pub const EVENT_KIND_COLUMN: &str = "event_kind";
pub const EVENT_YEAR_COLUMN: &str = "year";
pub const EVENT_PLACE_COLUMN: &str = "place";
pub const EVENT_COUNT_COLUMN: &str = "count";

const ROLES: [(&str, &str); 6] = [
    ("parent", "parent"),
    ("child", "child"),
    ("spouse_a", "first spouse"),
    ("spouse_b", "second spouse"),
    ("sibling_a", "first sibling"),
    ("sibling_b", "second sibling"),
];

const NUMBER_WORDS: [&str; 21] = [
    "no", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven",
    "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen",
    "twenty",
];

/// Plural nouns naming the rows of each logical table.
pub fn row_noun(origin: &str, gender: Gender) -> &'static str {
    match (origin, gender) {
        (_, Gender::Male) => "men",
        (_, Gender::Female) => "women",
        (KINSHIP, _) => "relationships",
        (PARENT_OF, _) => "parent-child pairs",
        (SPOUSE_OF, _) => "couples",
        (SIBLING_OF, _) => "sibling pairs",
        (EVENTS, _) => "events",
        _ => "people",
    }
}

/// Every noun that denotes all rows of some table.
pub const ROW_NOUNS: [&str; 6] = [
    "people",
    "relationships",
    "parent-child pairs",
    "couples",
    "sibling pairs",
    "events",
];

pub fn event_noun(kind: Option<&str>) -> String {
    match kind {
        Some("birth") => "births".into(),
        Some("death") => "deaths".into(),
        Some("marriage") => "marriages".into(),
        Some(other) => format!("{other} events"),
        None => "events".into(),
    }
}

/// Splits an endpoint column such as `spouse_a_birth_year` into its role
/// surface and the attribute.
fn endpoint(column: &str) -> Option<(&'static str, &str)> {
    ROLES.iter().find_map(|(prefix, surface)| {
        column
            .strip_prefix(prefix)
            .and_then(|rest| rest.strip_prefix('_'))
            .filter(|attr| ["name", "gender", "birth_year", "birth_place"].contains(attr))
            .map(|attr| (*surface, attr))
    })
}

pub fn target_surface(origin: &str, column: &str) -> String {
    if origin == EVENTS && column == EVENT_COUNT_COLUMN {
        return "number of events".into();
    }
    match column {
        "age_at_marriage" => "age of marriage".into(),
        "age_at_first_child" => "age at first child".into(),
        "children_count" => "number of children".into(),
        "spouses_count" => "number of spouses".into(),
        "siblings_count" => "number of siblings".into(),
        other => match endpoint(other) {
            Some((role, attr)) => format!("{role} {}", attr.replace('_', " ")),
            None => other.replace('_', " "),
        },
    }
}

fn number_word(n: f64) -> String {
    if n.fract() == 0.0 && (0.0..=20.0).contains(&n) {
        NUMBER_WORDS[n as usize].to_owned()
    } else {
        n.to_string()
    }
}

fn counted(n: f64, singular: &str, plural: &str) -> String {
    if n == 1.0 {
        format!("had one {singular}")
    } else {
        format!("had {} {plural}", number_word(n))
    }
}

fn article(word: &str) -> &'static str {
    match word.chars().next().map(|c| c.to_ascii_lowercase()) {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

/// Whether a column may carry a question condition.
pub fn is_condition_column(origin: &str, column: &str) -> bool {
    if origin == EVENTS {
        return [EVENT_YEAR_COLUMN, EVENT_PLACE_COLUMN, EVENT_KIND_COLUMN].contains(&column);
    }
    match column {
        "birth_year" | "birth_place" | "death_year" | "death_place" | "occupation" | "age"
        | "age_at_marriage" | "age_at_first_child" | "children_count" | "spouses_count"
        | "siblings_count" | "type" | "marriage_year" | "marriage_place" => true,
        other => endpoint(other).is_some_and(|(_, attr)| attr != "name"),
    }
}

/// Leading words of a year-range phrase, or `None` when the column takes no
/// range. `first` selects the form used at the head of the condition list.
pub fn range_prefix(origin: &str, column: &str, first: bool) -> Option<String> {
    if origin == EVENTS {
        return (column == EVENT_YEAR_COLUMN).then(|| "between ".into());
    }
    match column {
        "birth_year" if first => Some("born between ".into()),
        "birth_year" => Some("between ".into()),
        "death_year" => Some("died between ".into()),
        "marriage_year" => Some("married between ".into()),
        other => match endpoint(other) {
            Some((role, "birth_year")) => Some(format!("had a {role} born between ")),
            _ => None,
        },
    }
}

/// Whether a range phrase that is not first joins without "and".
pub fn bare_range(origin: &str, column: &str) -> bool {
    origin == PERSONS && column == "birth_year" || origin == EVENTS
}

/// A condition's phrase and whether it is passive (takes "were" when first).
pub fn condition_phrase(origin: &str, cond: &Condition, first: bool) -> Option<(String, bool)> {
    let column = cond.column();
    if !is_condition_column(origin, column) {
        return None;
    }
    if let Condition::Between { low, high, .. } = cond {
        let prefix = range_prefix(origin, column, first)?;
        let passive = column == "birth_year" && origin != EVENTS;
        return Some((format!("{prefix}{low} to {high}"), passive));
    }
    let Condition::Equals { value, .. } = cond else {
        unreachable!()
    };
    if value.is_empty() {
        return None;
    }
    let v = value.to_string();
    let n = value.as_f64().unwrap_or(f64::NAN);
    if origin == EVENTS {
        return match column {
            EVENT_KIND_COLUMN => Some((event_noun(Some(&v)), false)),
            _ => Some((format!("in {v}"), false)),
        };
    }
    let phrase = match column {
        "birth_year" | "birth_place" => return Some((format!("born in {v}"), true)),
        "age" => return Some((format!("aged {v}"), true)),
        "type" => return Some((format!("of type {v}"), true)),
        "death_year" | "death_place" => format!("died in {v}"),
        "occupation" => format!("worked as {} {v}", article(&v)),
        "age_at_marriage" => format!("married at age {v}"),
        "age_at_first_child" => format!("had their first child at age {v}"),
        "children_count" => counted(n, "child", "children"),
        "spouses_count" => counted(n, "spouse", "spouses"),
        "siblings_count" => counted(n, "sibling", "siblings"),
        "marriage_year" | "marriage_place" => format!("married in {v}"),
        other => {
            let (role, attr) = endpoint(other)?;
            match (attr, value) {
                ("gender", Cell::Text(g)) if g == "F" => format!("had a female {role}"),
                ("gender", Cell::Text(g)) if g == "M" => format!("had a male {role}"),
                ("gender", _) => return None,
                _ => format!("had a {role} born in {v}"),
            }
        }
    };
    Some((phrase, false))
}

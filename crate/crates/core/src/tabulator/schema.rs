//! Canonical table layouts for the six designs.

use std::collections::{BTreeMap, HashSet};

use indexmap::IndexMap;

use super::{Cell, Column, ColumnKind, Dataset, Design, JoinRule, Table, TabulateError};
use crate::gedcom::{Individual, Sex};
use crate::graph::{KinshipType, KnowledgeGraph};

pub const PERSONS: &str = "persons";
pub const KINSHIP: &str = "kinship";
pub const PARENT_OF: &str = "parent_of";
pub const SPOUSE_OF: &str = "spouse_of";
pub const SIBLING_OF: &str = "sibling_of";
pub const EVENTS: &str = "events";

/// Endpoint prefixes used by the aggregative relationship tables.
pub const PARENT_ROLES: [&str; 2] = ["parent", "child"];
pub const SPOUSE_ROLES: [&str; 2] = ["spouse_a", "spouse_b"];
pub const SIBLING_ROLES: [&str; 2] = ["sibling_a", "sibling_b"];

pub const EVENT_KINDS: [&str; 3] = ["birth", "death", "marriage"];

fn text(name: &str) -> Column {
    Column::new(name, ColumnKind::Textual)
}

fn date(name: &str) -> Column {
    Column::new(name, ColumnKind::Date)
}

fn number(name: &str) -> Column {
    Column::new(name, ColumnKind::Numeric)
}

fn keys(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn person_columns() -> Vec<Column> {
    vec![
        text("id"),
        text("name"),
        text("gender").descriptor(),
        date("birth_year"),
        text("birth_place"),
        date("death_year"),
        text("death_place"),
        text("occupation").descriptor(),
    ]
}

fn aggregate_columns() -> Vec<Column> {
    vec![
        number("age"),
        number("age_at_marriage"),
        number("age_at_first_child"),
        number("children_count"),
        number("spouses_count"),
        number("siblings_count"),
    ]
}

fn endpoint_columns(role: &str) -> Vec<Column> {
    vec![
        text(&format!("{role}_name")),
        text(&format!("{role}_gender")),
        date(&format!("{role}_birth_year")),
        text(&format!("{role}_birth_place")),
    ]
}

fn gender_cell(sex: Sex) -> Cell {
    match sex {
        Sex::Male => Cell::text("M"),
        Sex::Female => Cell::text("F"),
        Sex::Unknown => Cell::Empty,
    }
}

fn birth_year(p: &Individual) -> Option<i32> {
    p.birth.as_ref().and_then(|e| e.year())
}

fn death_year(p: &Individual) -> Option<i32> {
    p.death.as_ref().and_then(|e| e.year())
}

fn person_cells(p: &Individual) -> Vec<Cell> {
    vec![
        Cell::text(p.id.as_str()),
        Cell::text(p.name.as_str()),
        gender_cell(p.sex),
        Cell::opt_year(birth_year(p)),
        Cell::opt_text(p.birth.as_ref().and_then(|e| e.place.as_deref())),
        Cell::opt_year(death_year(p)),
        Cell::opt_text(p.death.as_ref().and_then(|e| e.place.as_deref())),
        Cell::opt_text(p.occupation.as_deref()),
    ]
}

fn endpoint_cells(graph: &KnowledgeGraph, id: &str) -> Vec<Cell> {
    match graph.person(id) {
        Some(p) => vec![
            Cell::text(p.name.as_str()),
            gender_cell(p.sex),
            Cell::opt_year(birth_year(p)),
            Cell::opt_text(p.birth.as_ref().and_then(|e| e.place.as_deref())),
        ],
        None => vec![Cell::Empty; 4],
    }
}

/// Year-arithmetic attributes derived per person. Missing inputs give `None`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PersonAggregates {
    pub age: Option<i32>,
    pub age_at_marriage: Option<i32>,
    pub age_at_first_child: Option<i32>,
    pub children_count: usize,
    pub spouses_count: usize,
    pub siblings_count: usize,
}

impl PersonAggregates {
    fn cells(&self) -> Vec<Cell> {
        let n = |v: Option<i32>| Cell::opt_number(v.map(f64::from));
        vec![
            n(self.age),
            n(self.age_at_marriage),
            n(self.age_at_first_child),
            Cell::Number(self.children_count as f64),
            Cell::Number(self.spouses_count as f64),
            Cell::Number(self.siblings_count as f64),
        ]
    }
}

pub fn precompute_aggregates(graph: &KnowledgeGraph) -> IndexMap<String, PersonAggregates> {
    graph
        .persons()
        .map(|p| {
            let born = birth_year(p);
            let mut children: Vec<&str> = Vec::new();
            let mut spouses: Vec<&str> = Vec::new();
            let mut marriage_years = Vec::new();
            for fam in graph.spouse_families(&p.id) {
                for c in &fam.child_ids {
                    if !children.contains(&c.as_str()) {
                        children.push(c);
                    }
                }
                for s in fam.spouse_ids.iter().filter(|s| **s != p.id) {
                    if !spouses.contains(&s.as_str()) {
                        spouses.push(s);
                    }
                }
                if let Some(y) = fam.marriage.as_ref().and_then(|m| m.year()) {
                    marriage_years.push(y);
                }
            }
            let mut siblings: HashSet<&str> = HashSet::new();
            for fam in graph.child_families(&p.id) {
                siblings.extend(fam.child_ids.iter().map(String::as_str).filter(|c| *c != p.id));
            }
            let first_child = children
                .iter()
                .filter_map(|c| graph.person(c).and_then(birth_year))
                .min();
            let since_birth = |y: Option<i32>| born.zip(y).map(|(b, y)| y - b);
            (
                p.id.clone(),
                PersonAggregates {
                    age: since_birth(death_year(p)),
                    age_at_marriage: since_birth(marriage_years.into_iter().min()),
                    age_at_first_child: since_birth(first_child),
                    children_count: children.len(),
                    spouses_count: spouses.len(),
                    siblings_count: siblings.len(),
                },
            )
        })
        .collect()
}

fn persons_table(graph: &KnowledgeGraph, with_aggregates: bool) -> Result<Table, TabulateError> {
    let mut columns = person_columns();
    if with_aggregates {
        columns.extend(aggregate_columns());
    }
    let mut table = Table::new(PERSONS, PERSONS, keys(&["id"]), columns);
    let aggregates = with_aggregates.then(|| precompute_aggregates(graph));
    for p in graph.persons() {
        let mut row = person_cells(p);
        if let Some(aggs) = &aggregates {
            row.extend(aggs[&p.id].cells());
        }
        table.push_row(row)?;
    }
    Ok(table)
}

fn one_table(graph: &KnowledgeGraph) -> Result<Table, TabulateError> {
    let mut columns = person_columns();
    columns.extend([text("spouse_id"), text("father_id"), text("mother_id")]);
    let mut table = Table::new(PERSONS, PERSONS, keys(&["id"]), columns);
    for p in graph.persons() {
        // Only the first marriage survives in the single-table design.
        let spouse = graph
            .spouse_families(&p.id)
            .find_map(|f| f.spouse_ids.iter().find(|s| **s != p.id));
        let mut father = None;
        let mut mother = None;
        if let Some(fam) = graph.child_families(&p.id).next() {
            let mut unknown = Vec::new();
            for s in &fam.spouse_ids {
                match graph.person(s).map(|x| x.sex) {
                    Some(Sex::Male) if father.is_none() => father = Some(s.as_str()),
                    Some(Sex::Female) if mother.is_none() => mother = Some(s.as_str()),
                    _ => unknown.push(s.as_str()),
                }
            }
            for s in unknown {
                if father.is_none() {
                    father = Some(s);
                } else if mother.is_none() {
                    mother = Some(s);
                }
            }
        }
        let mut row = person_cells(p);
        row.extend([
            Cell::opt_text(spouse.map(String::as_str)),
            Cell::opt_text(father),
            Cell::opt_text(mother),
        ]);
        table.push_row(row)?;
    }
    Ok(table)
}

fn kinship_table(graph: &KnowledgeGraph) -> Result<Table, TabulateError> {
    let mut table = Table::new(
        KINSHIP,
        KINSHIP,
        keys(&["person_a", "person_b", "type"]),
        vec![text("person_a"), text("person_b"), text("type")],
    );
    for e in graph.edges() {
        table.push_row(vec![
            Cell::text(e.from.as_str()),
            Cell::text(e.to.as_str()),
            Cell::text(e.kind.as_str()),
        ])?;
    }
    Ok(table)
}

fn edge_pairs(graph: &KnowledgeGraph, kind: KinshipType) -> Vec<(&str, &str)> {
    graph
        .edges()
        .iter()
        .filter(|e| e.kind == kind)
        .map(|e| (e.from.as_str(), e.to.as_str()))
        .collect()
}

fn pair_table(
    graph: &KnowledgeGraph,
    name: &str,
    key: [&str; 2],
    kind: KinshipType,
    roles: Option<[&str; 2]>,
) -> Result<Table, TabulateError> {
    let mut columns = vec![text(key[0]), text(key[1])];
    if let Some(roles) = roles {
        columns.extend(endpoint_columns(roles[0]));
        columns.extend(endpoint_columns(roles[1]));
    }
    let mut table = Table::new(name, name, keys(&key), columns);
    for (a, b) in edge_pairs(graph, kind) {
        let mut row = vec![Cell::text(a), Cell::text(b)];
        if roles.is_some() {
            row.extend(endpoint_cells(graph, a));
            row.extend(endpoint_cells(graph, b));
        }
        table.push_row(row)?;
    }
    Ok(table)
}

fn spouse_table(graph: &KnowledgeGraph, with_endpoints: bool) -> Result<Table, TabulateError> {
    let mut columns = vec![
        text("a_id"),
        text("b_id"),
        date("marriage_year"),
        text("marriage_place"),
    ];
    if with_endpoints {
        columns.extend(endpoint_columns(SPOUSE_ROLES[0]));
        columns.extend(endpoint_columns(SPOUSE_ROLES[1]));
    }
    let mut table = Table::new(SPOUSE_OF, SPOUSE_OF, keys(&["a_id", "b_id"]), columns);
    let mut seen = HashSet::new();
    for fam in graph.families() {
        let [a, b] = fam.spouse_ids.as_slice() else {
            continue;
        };
        let pair = if a <= b { (a, b) } else { (b, a) };
        if !seen.insert(pair) {
            continue;
        }
        let marriage = fam.marriage.as_ref();
        let mut row = vec![
            Cell::text(a.as_str()),
            Cell::text(b.as_str()),
            Cell::opt_year(marriage.and_then(|m| m.year())),
            Cell::opt_text(marriage.and_then(|m| m.place.as_deref())),
        ];
        if with_endpoints {
            row.extend(endpoint_cells(graph, a));
            row.extend(endpoint_cells(graph, b));
        }
        table.push_row(row)?;
    }
    Ok(table)
}

/// Births, deaths and marriages counted per (year, place, kind). Events
/// without a year are left out.
pub fn build_event_table(graph: &KnowledgeGraph) -> Table {
    let mut counts: BTreeMap<(i32, String, &str), usize> = BTreeMap::new();
    let mut add = |year: Option<i32>, place: Option<&str>, kind: &'static str| {
        if let Some(y) = year {
            *counts
                .entry((y, place.unwrap_or("").to_owned(), kind))
                .or_default() += 1;
        }
    };
    for p in graph.persons() {
        if let Some(b) = &p.birth {
            add(b.year(), b.place.as_deref(), EVENT_KINDS[0]);
        }
        if let Some(d) = &p.death {
            add(d.year(), d.place.as_deref(), EVENT_KINDS[1]);
        }
    }
    for f in graph.families() {
        if let Some(m) = &f.marriage {
            add(m.year(), m.place.as_deref(), EVENT_KINDS[2]);
        }
    }
    let mut table = Table::new(
        EVENTS,
        EVENTS,
        keys(&["year", "place", "event_kind"]),
        vec![date("year"), text("place"), text("event_kind"), number("count")],
    );
    table.rows = counts
        .into_iter()
        .map(|((year, place, kind), n)| {
            vec![
                Cell::Year(year),
                Cell::text(place),
                Cell::text(kind),
                Cell::Number(n as f64),
            ]
        })
        .collect();
    table
}

fn person_join_rules(relations: &[(&str, [&str; 2])]) -> Vec<JoinRule> {
    relations
        .iter()
        .flat_map(|(table, cols)| {
            cols.iter()
                .map(move |c| JoinRule::new(PERSONS, &["id"], table, &[c]))
        })
        .collect()
}

/// Materializes `graph` under `design`. Pure: the same graph and design give
/// the same dataset.
pub fn tabulate(graph: &KnowledgeGraph, design: Design) -> Result<Dataset, TabulateError> {
    let relations = [
        (PARENT_OF, ["parent_id", "child_id"]),
        (SPOUSE_OF, ["a_id", "b_id"]),
        (SIBLING_OF, ["a_id", "b_id"]),
    ];
    let dataset = match design {
        Design::OneTable => Dataset {
            design,
            tables: vec![one_table(graph)?],
            join_rules: vec![],
        },
        Design::Raw => Dataset {
            design,
            tables: vec![persons_table(graph, false)?, kinship_table(graph)?],
            join_rules: person_join_rules(&[(KINSHIP, ["person_a", "person_b"])]),
        },
        Design::Rel | Design::Agg | Design::Event => {
            let agg = design != Design::Rel;
            let mut tables = vec![
                persons_table(graph, agg)?,
                pair_table(
                    graph,
                    PARENT_OF,
                    ["parent_id", "child_id"],
                    KinshipType::Parent,
                    agg.then_some(PARENT_ROLES),
                )?,
                spouse_table(graph, agg)?,
                pair_table(
                    graph,
                    SIBLING_OF,
                    ["a_id", "b_id"],
                    KinshipType::Sibling,
                    agg.then_some(SIBLING_ROLES),
                )?,
            ];
            if design == Design::Event {
                tables.push(build_event_table(graph));
            }
            Dataset {
                design,
                tables,
                join_rules: person_join_rules(&relations),
            }
        }
        Design::SixNF => normalize_6nf(&tabulate(graph, Design::Event)?)?,
    };
    Ok(dataset)
}

/// Splits every table with more than one non-key column into one table per
/// non-key column, each carrying the full key. Tables that already hold at
/// most one non-key column pass through unchanged.
///
/// Every key row is kept in every split table, including rows whose value is
/// empty, so joining the pieces back on the key is lossless.
pub fn normalize_6nf(dataset: &Dataset) -> Result<Dataset, TabulateError> {
    if !matches!(dataset.design, Design::Agg | Design::Event) {
        return Err(TabulateError::NotAggregative(dataset.design));
    }
    let mut tables = Vec::new();
    let mut rules = Vec::new();
    let mut first_piece: BTreeMap<&str, String> = BTreeMap::new();
    for table in &dataset.tables {
        let key_idx: Vec<usize> = table
            .key
            .iter()
            .map(|k| table.require_column(k))
            .collect::<Result<_, _>>()?;
        let attrs: Vec<usize> = (0..table.columns.len())
            .filter(|i| !key_idx.contains(i))
            .collect();
        if attrs.len() <= 1 {
            first_piece.insert(&table.name, table.name.clone());
            tables.push(table.clone());
            continue;
        }
        let mut pieces: Vec<String> = Vec::new();
        for &a in &attrs {
            let name = format!("{}_{}", table.name, table.columns[a].name);
            let mut columns: Vec<Column> = key_idx.iter().map(|&k| table.columns[k].clone()).collect();
            columns.push(table.columns[a].clone());
            let mut piece = Table::new(name.clone(), table.origin.clone(), table.key.clone(), columns);
            piece.rows = table
                .rows
                .iter()
                .map(|row| {
                    key_idx
                        .iter()
                        .chain(std::iter::once(&a))
                        .map(|&i| row[i].clone())
                        .collect()
                })
                .collect();
            tables.push(piece);
            pieces.push(name);
        }
        let key: Vec<&str> = table.key.iter().map(String::as_str).collect();
        for (i, a) in pieces.iter().enumerate() {
            for b in &pieces[i + 1..] {
                rules.push(JoinRule::new(a, &key, b, &key));
            }
        }
        first_piece.insert(&table.name, pieces[0].clone());
    }
    for rule in &dataset.join_rules {
        if let (Some(l), Some(r)) = (first_piece.get(rule.left.as_str()), first_piece.get(rule.right.as_str())) {
            rules.push(JoinRule {
                left: l.clone(),
                left_key: rule.left_key.clone(),
                right: r.clone(),
                right_key: rule.right_key.clone(),
            });
        }
    }
    Ok(Dataset {
        design: Design::SixNF,
        tables,
        join_rules: rules,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gedcom::{EventDetail, Family, GenDate};
    use crate::graph::assemble_graph;
    use crate::tabulator::join_tables;

    fn at(year: i32, place: &str) -> Option<EventDetail> {
        Some(EventDetail {
            date: Some(crate::gedcom::parse_date(&year.to_string())),
            place: (!place.is_empty()).then(|| place.to_owned()),
        })
    }

    fn person(id: &str, sex: Sex, birth: Option<EventDetail>, death: Option<EventDetail>) -> Individual {
        Individual {
            id: id.into(),
            name: format!("Name {id}"),
            sex,
            birth,
            death,
            burial: None,
            occupation: None,
            family_as_child: None,
            families_as_spouse: vec![],
        }
    }

    fn family(id: &str, spouses: &[&str], children: &[&str], marriage: Option<EventDetail>) -> Family {
        Family {
            id: id.into(),
            spouse_ids: spouses.iter().map(|s| s.to_string()).collect(),
            child_ids: children.iter().map(|s| s.to_string()).collect(),
            marriage,
        }
    }

    fn fixture() -> KnowledgeGraph {
        let people = vec![
            person("h", Sex::Male, at(1756, "New Jersey, USA"), at(1815, "Philadelphia, USA")),
            person("w1", Sex::Female, at(1760, "New Jersey, USA"), None),
            person("w2", Sex::Female, None, at(1840, "Boston")),
            person("c1", Sex::Female, at(1785, "Boston"), None),
            person("c2", Sex::Male, at(1790, "Boston"), None),
            person("c3", Sex::Unknown, at(1801, "Boston"), None),
        ];
        let fams = vec![
            family("f1", &["h", "w1"], &["c1", "c2"], at(1780, "Boston")),
            family("f2", &["h", "w2"], &["c3"], at(1800, "")),
        ];
        assemble_graph(people, fams).0
    }

    fn cell(t: &Table, row: usize, col: &str) -> Cell {
        t.rows[row][t.column_index(col).unwrap()].clone()
    }

    #[test]
    fn aggregates_from_years() {
        let aggs = precompute_aggregates(&fixture());
        let h = &aggs["h"];
        assert_eq!(h.age, Some(59));
        assert_eq!(h.age_at_marriage, Some(24));
        assert_eq!(h.age_at_first_child, Some(29));
        assert_eq!(h.children_count, 3);
        assert_eq!(h.spouses_count, 2);
        assert_eq!(aggs["w2"].age, None);
        assert_eq!(aggs["c1"].siblings_count, 1);
        assert_eq!(aggs["c3"].siblings_count, 0);
    }

    #[test]
    fn agg_person_row_has_age() {
        let ds = tabulate(&fixture(), Design::Agg).unwrap();
        let persons = ds.table(PERSONS).unwrap();
        assert_eq!(cell(persons, 0, "age"), Cell::Number(59.0));
        assert_eq!(cell(persons, 2, "age"), Cell::Empty);
        assert_eq!(cell(persons, 2, "birth_year"), Cell::Empty);
    }

    #[test]
    fn one_table_keeps_first_spouse() {
        let ds = tabulate(&fixture(), Design::OneTable).unwrap();
        assert_eq!(ds.tables.len(), 1);
        let t = &ds.tables[0];
        assert_eq!(cell(t, 0, "spouse_id"), Cell::text("w1"));
        assert_eq!(cell(t, 3, "father_id"), Cell::text("h"));
        assert_eq!(cell(t, 3, "mother_id"), Cell::text("w1"));
    }

    #[test]
    fn empty_graph_keeps_headers() {
        let g = KnowledgeGraph::default();
        for design in Design::ALL {
            let ds = tabulate(&g, design).unwrap();
            assert!(!ds.tables.is_empty());
            for t in &ds.tables {
                assert!(t.is_empty(), "{design} {}", t.name);
                assert!(!t.columns.is_empty());
            }
        }
    }

    #[test]
    fn event_counts_group_by_year_place_kind() {
        let g = fixture();
        let events = build_event_table(&g);
        // Independent group-by over the raw records.
        let mut expected: BTreeMap<(i32, String, String), f64> = BTreeMap::new();
        for p in g.persons() {
            for (e, kind) in [(&p.birth, "birth"), (&p.death, "death")] {
                if let Some(y) = e.as_ref().and_then(|e| e.year()) {
                    let place = e.as_ref().unwrap().place.clone().unwrap_or_default();
                    *expected.entry((y, place, kind.into())).or_default() += 1.0;
                }
            }
        }
        for f in g.families() {
            if let Some(y) = f.marriage.as_ref().and_then(|m| m.year()) {
                let place = f.marriage.as_ref().unwrap().place.clone().unwrap_or_default();
                *expected.entry((y, place, "marriage".into())).or_default() += 1.0;
            }
        }
        assert_eq!(events.len(), expected.len());
        for row in &events.rows {
            let key = (
                row[0].as_f64().unwrap() as i32,
                row[1].to_string(),
                row[2].to_string(),
            );
            assert_eq!(row[3].as_f64(), expected.get(&key).copied(), "{key:?}");
        }
        let jersey = events
            .rows
            .iter()
            .filter(|r| r[1] == Cell::text("New Jersey, USA"))
            .count();
        assert_eq!(jersey, 2);
    }

    #[test]
    fn two_births_same_year_place_collapse() {
        let people = vec![
            person("a", Sex::Male, at(1756, "New Jersey, USA"), None),
            person("b", Sex::Female, at(1756, "New Jersey, USA"), None),
        ];
        let t = build_event_table(&assemble_graph(people, vec![]).0);
        assert_eq!(t.len(), 1);
        assert_eq!(t.rows[0][3], Cell::Number(2.0));
    }

    #[test]
    fn undated_events_are_excluded() {
        let mut p = person("a", Sex::Male, None, None);
        p.birth = Some(EventDetail {
            date: Some(GenDate {
                year: None,
                month: None,
                day: None,
                qualifier: crate::gedcom::DateQualifier::Unparsed,
                raw: "unknown".into(),
            }),
            place: Some("Rome".into()),
        });
        assert!(build_event_table(&assemble_graph(vec![p], vec![]).0).is_empty());
    }

    #[test]
    fn normalize_splits_each_attribute() {
        let mut t = Table::new(
            "wide",
            "wide",
            keys(&["id"]),
            std::iter::once(text("id"))
                .chain((0..8).map(|i| number(&format!("a{i}"))))
                .collect(),
        );
        t.push_row(std::iter::once(Cell::text("x")).chain((0..8).map(|i| Cell::Number(i as f64))).collect())
            .unwrap();
        let narrow = Table::new("narrow", "narrow", keys(&["id"]), vec![text("id"), text("v")]);
        let ds = Dataset {
            design: Design::Agg,
            tables: vec![t, narrow.clone()],
            join_rules: vec![],
        };
        let six = normalize_6nf(&ds).unwrap();
        assert_eq!(six.tables.len(), 9);
        assert!(six.tables[..8].iter().all(|t| t.columns.len() == 2 && t.origin == "wide"));
        assert_eq!(six.tables[8], narrow);
    }

    #[test]
    fn normalize_rejects_other_designs() {
        let ds = tabulate(&fixture(), Design::Rel).unwrap();
        assert!(matches!(normalize_6nf(&ds), Err(TabulateError::NotAggregative(Design::Rel))));
    }

    #[test]
    fn six_nf_rebuilds_agg_persons() {
        let g = fixture();
        let agg = tabulate(&g, Design::Agg).unwrap();
        let six = normalize_6nf(&agg).unwrap();
        for t in &six.tables {
            assert!(t.non_key_columns().count() <= 1, "{}", t.name);
        }
        let rebuilt = six.logical_table(PERSONS).unwrap();
        let original = agg.table(PERSONS).unwrap();
        assert_eq!(rebuilt.columns, original.columns);
        assert_eq!(rebuilt.rows, original.rows);
    }

    #[test]
    fn chained_join_reproduces_agg_slice() {
        let g = fixture();
        let agg = tabulate(&g, Design::Agg).unwrap();
        let six = normalize_6nf(&agg).unwrap();
        let t = join_tables(&six, &["persons_age", "persons_birth_place", "persons_gender"], Some("id")).unwrap();
        let original = agg.table(PERSONS).unwrap();
        for (i, row) in t.rows.iter().enumerate() {
            for (j, col) in ["id", "age", "birth_place", "gender"].iter().enumerate() {
                assert_eq!(row[j], cell(original, i, col));
            }
        }
        assert_eq!(t.len(), original.len());
    }

    #[test]
    fn remarried_couple_appears_once() {
        let people = vec![
            person("a", Sex::Male, None, None),
            person("b", Sex::Female, None, None),
        ];
        let fams = vec![
            family("f1", &["a", "b"], &[], at(1900, "Rome")),
            family("f2", &["b", "a"], &[], at(1910, "Oslo")),
        ];
        let ds = tabulate(&assemble_graph(people, fams).0, Design::Rel).unwrap();
        let t = ds.table(SPOUSE_OF).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(cell(t, 0, "marriage_place"), Cell::text("Rome"));
    }

    #[test]
    fn table_counts_per_design() {
        let g = fixture();
        let counts: Vec<usize> = Design::ALL
            .iter()
            .map(|&d| tabulate(&g, d).unwrap().tables.len())
            .collect();
        // 6nf: 13 person attributes, 8 parent_of, 10 spouse_of, 8 sibling_of, events.
        assert_eq!(counts, vec![1, 2, 4, 4, 5, 40]);
    }
}

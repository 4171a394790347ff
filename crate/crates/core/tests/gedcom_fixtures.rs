use genagg::gedcom::{extract_records, parse_gedcom, DateQualifier, Sex};
use genagg::graph::{load_graph, KinshipType};

const FIGURE2: &[u8] = include_bytes!("fixtures/figure2.ged");
const FAMILY30: &[u8] = include_bytes!("fixtures/family30.ged");

#[test]
fn figure2_fragment_parses_to_mary_lulu() {
    let (nodes, report) = parse_gedcom(FIGURE2).unwrap();
    let indi = nodes
        .iter()
        .find(|n| n.xref.as_deref() == Some("@I138@"))
        .unwrap();
    assert_eq!(indi.tag, "INDI");
    let tags: Vec<&str> = indi.children.iter().map(|c| c.tag.as_str()).collect();
    for tag in ["NAME", "SEX", "BIRT", "DEAT", "BURI"] {
        assert!(tags.contains(&tag), "{tag} missing from {tags:?}");
    }
    // The "..." elision line is not GEDCOM; it becomes a warning.
    assert!(!report.warnings.is_empty());

    let (people, families, _) = extract_records(&nodes).unwrap();
    assert!(families.is_empty());
    let mary = &people[0];
    assert_eq!(mary.id, "@I138@");
    assert_eq!(mary.name, "Mary Lulu");
    assert_eq!(mary.sex, Sex::Female);
    let birth = mary.birth.as_ref().unwrap();
    let d = birth.date.as_ref().unwrap();
    assert_eq!((d.year, d.month, d.day), (Some(1756), Some(5), Some(27)));
    assert_eq!(birth.place.as_deref(), Some("New Jersey, USA"));
    let death = mary.death.as_ref().unwrap();
    let d = death.date.as_ref().unwrap();
    assert_eq!((d.year, d.month, d.day), (Some(1815), Some(2), Some(7)));
    assert_eq!(death.place.as_deref(), Some("Philadelphia, USA"));
    let burial = mary.burial.as_ref().unwrap();
    let d = burial.date.as_ref().unwrap();
    assert_eq!((d.year, d.month, d.day), (Some(1815), Some(2), Some(8)));
    assert_eq!(burial.place.as_deref(), Some("Philadelphia, USA"));
}

#[test]
fn fixture_tree_loads_cleanly() {
    let (graph, report) = load_graph(FAMILY30).unwrap();
    assert_eq!(graph.person_count(), 30);
    assert_eq!(report.individuals_count, 30);
    assert_eq!(report.families_count, 10);
    assert!(report.warnings.is_empty(), "{:?}", report.warnings);

    let unparsed = graph.person("@I29@").unwrap().birth.as_ref().unwrap();
    assert_eq!(unparsed.date.as_ref().unwrap().qualifier, DateQualifier::Unparsed);
    let range = graph.person("@I26@").unwrap().death.as_ref().unwrap();
    assert_eq!(range.year(), Some(1918));

    // Pedro married twice; his children by different wives are half-siblings.
    let pedro_spouse_edges = graph
        .edges()
        .iter()
        .filter(|e| e.kind == KinshipType::Spouse && (e.from == "@I9@" || e.to == "@I9@"))
        .count();
    assert_eq!(pedro_spouse_edges, 2);
    let half = graph.edges().iter().any(|e| {
        e.kind == KinshipType::Sibling
            && [e.from.as_str(), e.to.as_str()].contains(&"@I20@")
            && [e.from.as_str(), e.to.as_str()].contains(&"@I22@")
    });
    assert!(!half);
}

#[test]
fn parsing_is_stable() {
    let a = extract_records(&parse_gedcom(FAMILY30).unwrap().0).unwrap();
    let b = extract_records(&parse_gedcom(FAMILY30).unwrap().0).unwrap();
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
}

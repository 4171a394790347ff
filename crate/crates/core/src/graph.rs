//! Kinship graph assembled from GEDCOM records, plus relation-degree scoping.
//!
//! Degrees follow generations: one step is a parent or child hop. The
//! traversal used by [`degree_subgraph`] is a breadth-first search where a
//! parent, child or spouse edge each costs one step. A person is in scope at
//! degree `d` when their distance is at most `d`; spouses of in-scope persons
//! are added at the same degree. This keeps in-laws (a spouse's parents) out of
//! degree 1 while still reaching the whole connected component eventually.

use std::collections::{HashMap, HashSet, VecDeque};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gedcom::{self, Family, GedcomError, Individual, ParseReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KinshipType {
    Parent,
    Spouse,
    Sibling,
}

impl KinshipType {
    pub fn as_str(self) -> &'static str {
        match self {
            KinshipType::Parent => "Parent",
            KinshipType::Spouse => "Spouse",
            KinshipType::Sibling => "Sibling",
        }
    }
}

/// A kinship edge. `Parent` edges point from parent to child; `Spouse` and
/// `Sibling` edges are undirected and stored once.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KinshipEdge {
    pub from: String,
    pub to: String,
    pub kind: KinshipType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeScope<'a> {
    pub source_person: &'a str,
    pub degree: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown person {0}")]
    UnknownPerson(String),
    #[error(transparent)]
    Gedcom(#[from] GedcomError),
}

/// Persons, families and the kinship edges derived from them. Immutable once
/// assembled.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnowledgeGraph {
    persons: IndexMap<String, Individual>,
    families: IndexMap<String, Family>,
    edges: Vec<KinshipEdge>,
}

impl KnowledgeGraph {
    pub fn persons(&self) -> impl Iterator<Item = &Individual> {
        self.persons.values()
    }

    pub fn person(&self, id: &str) -> Option<&Individual> {
        self.persons.get(id)
    }

    pub fn families(&self) -> impl Iterator<Item = &Family> {
        self.families.values()
    }

    pub fn family(&self, id: &str) -> Option<&Family> {
        self.families.get(id)
    }

    pub fn edges(&self) -> &[KinshipEdge] {
        &self.edges
    }

    pub fn person_count(&self) -> usize {
        self.persons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.persons.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.persons.contains_key(id)
    }

    /// Families in which `id` is a spouse, in graph order.
    pub fn spouse_families<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Family> + 'a {
        self.families
            .values()
            .filter(move |f| f.spouse_ids.iter().any(|s| s == id))
    }

    /// Families in which `id` is a child, in graph order.
    pub fn child_families<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Family> + 'a {
        self.families
            .values()
            .filter(move |f| f.child_ids.iter().any(|c| c == id))
    }

    /// Persons without parents in the graph, in graph order.
    pub fn roots(&self) -> Vec<&str> {
        let children: HashSet<&str> = self
            .edges
            .iter()
            .filter(|e| e.kind == KinshipType::Parent)
            .map(|e| e.to.as_str())
            .collect();
        self.persons
            .keys()
            .map(String::as_str)
            .filter(|id| !children.contains(id))
            .collect()
    }

    fn adjacency(&self) -> HashMap<&str, Vec<&str>> {
        let mut adj: HashMap<&str, Vec<&str>> = HashMap::new();
        for e in &self.edges {
            if e.kind == KinshipType::Sibling {
                continue;
            }
            adj.entry(e.from.as_str()).or_default().push(e.to.as_str());
            adj.entry(e.to.as_str()).or_default().push(e.from.as_str());
        }
        adj
    }

    fn spouses(&self) -> HashMap<&str, Vec<&str>> {
        let mut out: HashMap<&str, Vec<&str>> = HashMap::new();
        for e in self.edges.iter().filter(|e| e.kind == KinshipType::Spouse) {
            out.entry(e.from.as_str()).or_default().push(e.to.as_str());
            out.entry(e.to.as_str()).or_default().push(e.from.as_str());
        }
        out
    }

    /// Generation-hop distance from `source` to every reachable person.
    pub fn distances(&self, source: &str) -> Result<HashMap<String, usize>, GraphError> {
        if !self.persons.contains_key(source) {
            return Err(GraphError::UnknownPerson(source.to_owned()));
        }
        let adj = self.adjacency();
        let mut dist: HashMap<String, usize> = HashMap::new();
        let mut queue = VecDeque::new();
        dist.insert(source.to_owned(), 0);
        queue.push_back(source);
        while let Some(current) = queue.pop_front() {
            let d = dist[current];
            for &next in adj.get(current).into_iter().flatten() {
                if !dist.contains_key(next) {
                    dist.insert(next.to_owned(), d + 1);
                    queue.push_back(next);
                }
            }
        }
        Ok(dist)
    }

    /// Smallest degree whose subgraph is the source's whole connected component.
    pub fn eccentricity(&self, source: &str) -> Result<usize, GraphError> {
        Ok(self.distances(source)?.into_values().max().unwrap_or(0))
    }

    /// Restricts the graph to `keep`, preserving record order.
    fn restrict(&self, keep: &HashSet<&str>) -> KnowledgeGraph {
        let families: IndexMap<String, Family> = self
            .families
            .values()
            .filter_map(|f| {
                let spouse_ids: Vec<String> = f
                    .spouse_ids
                    .iter()
                    .filter(|s| keep.contains(s.as_str()))
                    .cloned()
                    .collect();
                let child_ids: Vec<String> = f
                    .child_ids
                    .iter()
                    .filter(|c| keep.contains(c.as_str()))
                    .cloned()
                    .collect();
                (!spouse_ids.is_empty() || !child_ids.is_empty()).then(|| {
                    (
                        f.id.clone(),
                        Family {
                            id: f.id.clone(),
                            spouse_ids,
                            child_ids,
                            marriage: f.marriage.clone(),
                        },
                    )
                })
            })
            .collect();
        let persons = self
            .persons
            .values()
            .filter(|p| keep.contains(p.id.as_str()))
            .map(|p| {
                let mut p = p.clone();
                p.families_as_spouse.retain(|f| {
                    families
                        .get(f)
                        .is_some_and(|fam| fam.spouse_ids.contains(&p.id))
                });
                if let Some(f) = &p.family_as_child {
                    if !families
                        .get(f)
                        .is_some_and(|fam| fam.child_ids.contains(&p.id))
                    {
                        p.family_as_child = None;
                    }
                }
                (p.id.clone(), p)
            })
            .collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| keep.contains(e.from.as_str()) && keep.contains(e.to.as_str()))
            .cloned()
            .collect();
        KnowledgeGraph {
            persons,
            families,
            edges,
        }
    }
}

/// Builds the graph from extracted records. References to persons missing
/// from `individuals` are dropped; each drop yields a warning.
pub fn assemble_graph(
    individuals: Vec<Individual>,
    families: Vec<Family>,
) -> (KnowledgeGraph, Vec<String>) {
    let mut warnings = Vec::new();
    let mut persons = IndexMap::new();
    for p in individuals {
        if persons.contains_key(&p.id) {
            warnings.push(format!("duplicate person {} dropped", p.id));
            continue;
        }
        persons.insert(p.id.clone(), p);
    }

    let mut fams: IndexMap<String, Family> = IndexMap::new();
    for mut f in families {
        if fams.contains_key(&f.id) {
            warnings.push(format!("duplicate family {} dropped", f.id));
            continue;
        }
        for list in [&mut f.spouse_ids, &mut f.child_ids] {
            list.retain(|id| {
                let ok = persons.contains_key(id);
                if !ok {
                    warnings.push(format!("family {} drops dangling reference {id}", f.id));
                }
                ok
            });
        }
        fams.insert(f.id.clone(), f);
    }
    for p in persons.values_mut() {
        p.families_as_spouse.retain(|f| {
            let ok = fams.contains_key(f);
            if !ok {
                warnings.push(format!("{} drops dangling family {f}", p.id));
            }
            ok
        });
        if let Some(f) = &p.family_as_child {
            if !fams.contains_key(f) {
                warnings.push(format!("{} drops dangling family {f}", p.id));
                p.family_as_child = None;
            }
        }
    }

    let mut seen: HashSet<(KinshipType, String, String)> = HashSet::new();
    let mut edges = Vec::new();
    let mut push = |from: &str, to: &str, kind: KinshipType| {
        let key = match kind {
            KinshipType::Parent => (kind, from.to_owned(), to.to_owned()),
            _ if from <= to => (kind, from.to_owned(), to.to_owned()),
            _ => (kind, to.to_owned(), from.to_owned()),
        };
        if from != to && seen.insert(key) {
            edges.push(KinshipEdge {
                from: from.to_owned(),
                to: to.to_owned(),
                kind,
            });
        }
    };
    for f in fams.values() {
        for parent in &f.spouse_ids {
            for child in &f.child_ids {
                push(parent, child, KinshipType::Parent);
            }
        }
        if let [a, b] = f.spouse_ids.as_slice() {
            push(a, b, KinshipType::Spouse);
        }
        for (i, a) in f.child_ids.iter().enumerate() {
            for b in &f.child_ids[i + 1..] {
                push(a, b, KinshipType::Sibling);
            }
        }
    }

    (
        KnowledgeGraph {
            persons,
            families: fams,
            edges,
        },
        warnings,
    )
}

/// Parses GEDCOM bytes straight into a graph. Graph assembly warnings are
/// appended to the report with line 0.
pub fn load_graph(bytes: &[u8]) -> Result<(KnowledgeGraph, ParseReport), GraphError> {
    let (nodes, parse_report) = gedcom::parse_gedcom(bytes)?;
    let (individuals, families, mut report) = gedcom::extract_records(&nodes)?;
    let mut warnings = parse_report.warnings;
    warnings.append(&mut report.warnings);
    report.warnings = warnings;
    let (graph, graph_warnings) = assemble_graph(individuals, families);
    report.warnings.extend(
        graph_warnings
            .into_iter()
            .map(|m| gedcom::Warning::new(0, m)),
    );
    Ok((graph, report))
}

/// Subgraph within `scope.degree` generation hops of the source person.
pub fn degree_subgraph(
    graph: &KnowledgeGraph,
    scope: DegreeScope<'_>,
) -> Result<KnowledgeGraph, GraphError> {
    let dist = graph.distances(scope.source_person)?;
    let spouses = graph.spouses();
    let mut keep: HashSet<&str> = HashSet::new();
    for (id, &d) in &dist {
        if d <= scope.degree {
            let id = graph
                .persons
                .get_key_value(id.as_str())
                .map(|(k, _)| k.as_str())
                .expect("distances only contain known persons");
            keep.insert(id);
            for &s in spouses.get(id).into_iter().flatten() {
                keep.insert(s);
            }
        }
    }
    Ok(graph.restrict(&keep))
}

/// The edge list backing the raw design's kinship table.
pub fn kinship_pairs(graph: &KnowledgeGraph) -> Vec<(String, String, KinshipType)> {
    graph
        .edges
        .iter()
        .map(|e| (e.from.clone(), e.to.clone(), e.kind))
        .collect()
}

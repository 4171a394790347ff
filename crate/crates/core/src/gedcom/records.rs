use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{parse_date, GedcomError, GedcomNode, GenDate, ParseReport, Warning};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sex {
    Male,
    Female,
    Unknown,
}

/// Date and place of a life event. Either part may be missing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventDetail {
    pub date: Option<GenDate>,
    pub place: Option<String>,
}

impl EventDetail {
    pub fn year(&self) -> Option<i32> {
        self.date.as_ref().and_then(|d| d.year)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Individual {
    pub id: String,
    pub name: String,
    pub sex: Sex,
    pub birth: Option<EventDetail>,
    pub death: Option<EventDetail>,
    pub burial: Option<EventDetail>,
    pub occupation: Option<String>,
    pub family_as_child: Option<String>,
    pub families_as_spouse: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Family {
    pub id: String,
    /// At most two, in file order (`HUSB` before `WIFE` when both are given that way).
    pub spouse_ids: Vec<String>,
    pub child_ids: Vec<String>,
    pub marriage: Option<EventDetail>,
}

// Standard tags that are understood but not needed for tabulation.
const SILENT_RECORDS: &[&str] = &[
    "HEAD", "TRLR", "SUBM", "SUBN", "SOUR", "REPO", "NOTE", "OBJE", "SNOTE",
];
const SILENT_INDI: &[&str] = &[
    "BAPL", "ENDL", "SLGC", "SLGS", "CHR", "CHRA", "BAPM", "BARM", "BASM", "BLES", "CONF",
    "FCOM", "ORDN", "NATU", "RESI", "NOTE", "SOUR", "OBJE", "CHAN", "RIN", "REFN", "AFN", "EDUC",
    "RELI", "TITL", "NATI", "EMIG", "IMMI", "CENS", "GRAD", "RETI", "WILL", "PROB", "ADOP",
    "NCHI", "NMR", "ALIA", "ASSO", "SUBM", "ANCI", "DESI", "RFN", "FACT", "EVEN", "DSCR",
    "IDNO", "SSN", "CAST", "PROP", "CREM",
];
const SILENT_FAM: &[&str] = &[
    "DIV", "DIVF", "ENGA", "MARB", "MARC", "MARL", "MARS", "ANUL", "NCHI", "SLGS", "NOTE",
    "SOUR", "OBJE", "CHAN", "RIN", "REFN", "EVEN", "RESI", "CENS", "SUBM",
];

fn event(node: &GedcomNode) -> EventDetail {
    EventDetail {
        date: node.child("DATE").and_then(GedcomNode::value_str).map(parse_date),
        place: node
            .child("PLAC")
            .and_then(GedcomNode::value_str)
            .map(|p| p.trim().to_owned())
            .filter(|p| !p.is_empty()),
    }
}

fn clean_name(raw: &str) -> String {
    raw.replace('/', " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

fn pointer(node: &GedcomNode, warnings: &mut Vec<Warning>) -> Option<String> {
    match node.value_str().map(str::trim) {
        Some(v) if v.starts_with('@') && v.ends_with('@') && v.len() > 2 => Some(v.to_owned()),
        _ => {
            warnings.push(Warning::new(
                node.line,
                format!("{} without a record pointer ignored", node.tag),
            ));
            None
        }
    }
}

fn individual(node: &GedcomNode, id: String, warnings: &mut Vec<Warning>) -> Individual {
    let mut indi = Individual {
        id,
        name: String::new(),
        sex: Sex::Unknown,
        birth: None,
        death: None,
        burial: None,
        occupation: None,
        family_as_child: None,
        families_as_spouse: Vec::new(),
    };
    let mut named = false;
    for child in &node.children {
        match child.tag.as_str() {
            "NAME" if !named => {
                indi.name = clean_name(child.value_str().unwrap_or(""));
                named = true;
            }
            "NAME" => {}
            "SEX" => {
                indi.sex = match child.value_str().map(str::trim) {
                    Some(s) if s.eq_ignore_ascii_case("M") => Sex::Male,
                    Some(s) if s.eq_ignore_ascii_case("F") => Sex::Female,
                    _ => Sex::Unknown,
                }
            }
            "BIRT" if indi.birth.is_none() => indi.birth = Some(event(child)),
            "DEAT" if indi.death.is_none() => indi.death = Some(event(child)),
            "BURI" if indi.burial.is_none() => indi.burial = Some(event(child)),
            "BIRT" | "DEAT" | "BURI" => {}
            "OCCU" => {
                if indi.occupation.is_none() {
                    indi.occupation = child
                        .value_str()
                        .map(|o| o.trim().to_owned())
                        .filter(|o| !o.is_empty());
                }
            }
            "FAMC" => {
                if let Some(fam) = pointer(child, warnings) {
                    if indi.family_as_child.is_none() {
                        indi.family_as_child = Some(fam);
                    }
                }
            }
            "FAMS" => {
                if let Some(fam) = pointer(child, warnings) {
                    if !indi.families_as_spouse.contains(&fam) {
                        indi.families_as_spouse.push(fam);
                    }
                }
            }
            tag if SILENT_INDI.contains(&tag) => {}
            tag => warnings.push(Warning::new(
                child.line,
                format!("unknown tag {tag} in INDI {} ignored", indi.id),
            )),
        }
    }
    indi
}

fn family(node: &GedcomNode, id: String, warnings: &mut Vec<Warning>) -> Family {
    let mut fam = Family {
        id,
        spouse_ids: Vec::new(),
        child_ids: Vec::new(),
        marriage: None,
    };
    for child in &node.children {
        match child.tag.as_str() {
            "HUSB" | "WIFE" => {
                if let Some(p) = pointer(child, warnings) {
                    if fam.spouse_ids.len() >= 2 {
                        warnings.push(Warning::new(
                            child.line,
                            format!("family {} has more than two spouses; extra ignored", fam.id),
                        ));
                    } else if !fam.spouse_ids.contains(&p) {
                        fam.spouse_ids.push(p);
                    }
                }
            }
            "CHIL" => {
                if let Some(p) = pointer(child, warnings) {
                    if !fam.child_ids.contains(&p) {
                        fam.child_ids.push(p);
                    }
                }
            }
            "MARR" if fam.marriage.is_none() => fam.marriage = Some(event(child)),
            "MARR" => {}
            tag if SILENT_FAM.contains(&tag) => {}
            tag => warnings.push(Warning::new(
                child.line,
                format!("unknown tag {tag} in FAM {} ignored", fam.id),
            )),
        }
    }
    fam
}

/// Builds individuals and families from a parsed node forest and resolves
/// the links between them.
///
/// Links stated on only one side (a `CHIL` without the matching `FAMC`, a
/// `HUSB` without `FAMS`) are completed. Links that point at records missing
/// from the file are kept and reported as dangling.
pub fn extract_records(
    nodes: &[GedcomNode],
) -> Result<(Vec<Individual>, Vec<Family>, ParseReport), GedcomError> {
    let mut warnings = Vec::new();
    let mut seen = HashSet::new();
    let mut individuals = Vec::new();
    let mut families = Vec::new();
    let mut lines: HashMap<String, usize> = HashMap::new();

    for node in nodes {
        let kind = node.tag.as_str();
        if kind != "INDI" && kind != "FAM" {
            if !SILENT_RECORDS.contains(&kind) {
                warnings.push(Warning::new(
                    node.line,
                    format!("unknown record {kind} ignored"),
                ));
            }
            continue;
        }
        let Some(id) = node.xref.clone() else {
            warnings.push(Warning::new(
                node.line,
                format!("{kind} record without identifier ignored"),
            ));
            continue;
        };
        if !seen.insert(id.clone()) {
            return Err(GedcomError::DuplicateXref(id));
        }
        lines.insert(id.clone(), node.line);
        if kind == "INDI" {
            individuals.push(individual(node, id, &mut warnings));
        } else {
            families.push(family(node, id, &mut warnings));
        }
    }

    resolve_links(&mut individuals, &mut families, &lines, &mut warnings);

    let report = ParseReport {
        individuals_count: individuals.len(),
        families_count: families.len(),
        warnings,
    };
    Ok((individuals, families, report))
}

fn resolve_links(
    individuals: &mut [Individual],
    families: &mut [Family],
    lines: &HashMap<String, usize>,
    warnings: &mut Vec<Warning>,
) {
    let person_index: HashMap<String, usize> = individuals
        .iter()
        .enumerate()
        .map(|(i, p)| (p.id.clone(), i))
        .collect();
    let family_index: HashMap<String, usize> = families
        .iter()
        .enumerate()
        .map(|(i, f)| (f.id.clone(), i))
        .collect();
    let line_of = |id: &str| lines.get(id).copied().unwrap_or(0);

    // Family side first: complete the individuals' back-links.
    for fam in families.iter() {
        for spouse in &fam.spouse_ids {
            match person_index.get(spouse) {
                Some(&i) => {
                    let p = &mut individuals[i];
                    if !p.families_as_spouse.contains(&fam.id) {
                        p.families_as_spouse.push(fam.id.clone());
                    }
                }
                None => warnings.push(Warning::new(
                    line_of(&fam.id),
                    format!("family {} references missing spouse {spouse}", fam.id),
                )),
            }
        }
        for child in &fam.child_ids {
            match person_index.get(child) {
                Some(&i) => {
                    let p = &mut individuals[i];
                    match &p.family_as_child {
                        None => p.family_as_child = Some(fam.id.clone()),
                        Some(existing) if existing != &fam.id => warnings.push(Warning::new(
                            line_of(child),
                            format!(
                                "{child} is a child in {} but FAMC points to {existing}",
                                fam.id
                            ),
                        )),
                        Some(_) => {}
                    }
                }
                None => warnings.push(Warning::new(
                    line_of(&fam.id),
                    format!("family {} references missing child {child}", fam.id),
                )),
            }
        }
    }

    // Individual side: report links the families do not confirm.
    for p in individuals.iter() {
        for fam_id in &p.families_as_spouse {
            match family_index.get(fam_id) {
                Some(&f) if !families[f].spouse_ids.contains(&p.id) => {
                    warnings.push(Warning::new(
                        line_of(&p.id),
                        format!("{} lists FAMS {fam_id} but the family does not list them", p.id),
                    ))
                }
                Some(_) => {}
                None => warnings.push(Warning::new(
                    line_of(&p.id),
                    format!("{} references missing family {fam_id}", p.id),
                )),
            }
        }
        if let Some(fam_id) = &p.family_as_child {
            match family_index.get(fam_id) {
                Some(&f) if !families[f].child_ids.contains(&p.id) => {
                    warnings.push(Warning::new(
                        line_of(&p.id),
                        format!("{} lists FAMC {fam_id} but the family does not list them", p.id),
                    ))
                }
                Some(_) => {}
                None => warnings.push(Warning::new(
                    line_of(&p.id),
                    format!("{} references missing family {fam_id}", p.id),
                )),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gedcom::{parse_gedcom, DateQualifier};

    fn extract(src: &str) -> (Vec<Individual>, Vec<Family>, ParseReport) {
        let (nodes, _) = parse_gedcom(src.as_bytes()).unwrap();
        extract_records(&nodes).unwrap()
    }

    #[test]
    fn missing_death_stays_absent() {
        let (people, _, _) = extract("0 @I1@ INDI\n1 NAME John /Smith/\n1 BIRT\n2 DATE 1900\n");
        assert_eq!(people[0].name, "John Smith");
        assert!(people[0].death.is_none());
        assert_eq!(people[0].birth.as_ref().unwrap().year(), Some(1900));
        assert_eq!(
            people[0].birth.as_ref().unwrap().date.as_ref().unwrap().qualifier,
            DateQualifier::Exact
        );
    }

    #[test]
    fn dangling_child_is_kept_and_reported() {
        let src = "0 @I1@ INDI\n1 FAMS @F1@\n0 @F1@ FAM\n1 HUSB @I1@\n1 CHIL @I9@\n";
        let (_, families, report) = extract(src);
        assert_eq!(families[0].child_ids, vec!["@I9@".to_string()]);
        assert!(report
            .warnings
            .iter()
            .any(|w| w.message.contains("missing child @I9@")));
    }

    #[test]
    fn duplicate_xref_names_the_identifier() {
        let src = "0 @I1@ INDI\n0 @I1@ INDI\n";
        let (nodes, _) = parse_gedcom(src.as_bytes()).unwrap();
        assert_eq!(
            extract_records(&nodes).unwrap_err(),
            GedcomError::DuplicateXref("@I1@".into())
        );
    }

    #[test]
    fn one_sided_links_are_completed() {
        let src = "0 @I1@ INDI\n0 @I2@ INDI\n0 @F1@ FAM\n1 WIFE @I1@\n1 CHIL @I2@\n";
        let (people, _, report) = extract(src);
        assert_eq!(people[0].families_as_spouse, vec!["@F1@".to_string()]);
        assert_eq!(people[1].family_as_child.as_deref(), Some("@F1@"));
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn unconfirmed_fams_is_warned() {
        let src = "0 @I1@ INDI\n1 FAMS @F1@\n0 @F1@ FAM\n";
        let (people, families, report) = extract(src);
        assert_eq!(people[0].families_as_spouse, vec!["@F1@".to_string()]);
        assert!(families[0].spouse_ids.is_empty());
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn unknown_and_vendor_tags_warn() {
        let src = "0 @I1@ INDI\n1 _UID 123\n1 BAPL\n0 _XYZ foo\n";
        let (_, _, report) = extract(src);
        let messages: Vec<_> = report.warnings.iter().map(|w| w.message.as_str()).collect();
        assert_eq!(messages.len(), 2, "{messages:?}");
        assert!(messages[0].contains("_UID"));
        assert!(messages[1].contains("_XYZ"));
    }

    #[test]
    fn marriage_and_spouses() {
        let src = "0 @F1@ FAM\n1 HUSB @I1@\n1 WIFE @I2@\n1 MARR\n2 DATE 3 JUN 1880\n2 PLAC Paris\n";
        let (_, families, _) = extract(src);
        let marr = families[0].marriage.as_ref().unwrap();
        assert_eq!(marr.year(), Some(1880));
        assert_eq!(marr.place.as_deref(), Some("Paris"));
        assert_eq!(families[0].spouse_ids.len(), 2);
    }
}

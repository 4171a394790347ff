#![allow(dead_code)]

use std::fmt::Write as _;

pub const FAMILY30: &[u8] = include_bytes!("../fixtures/family30.ged");
pub const FIGURE2: &[u8] = include_bytes!("../fixtures/figure2.ged");

const PLACES: [&str; 4] = ["Italy", "England", "Spain", "France"];
const JOBS: [&str; 3] = ["farmer", "teacher", "baker"];

/// A patrilineal line: generation `g` is a couple whose first son heads
/// generation `g + 1` and whose daughter stays single. Every person is one
/// hop further from `@H0@` than their parents.
pub fn family_line(generations: usize) -> String {
    let mut out = String::from("0 HEAD\n1 CHAR UTF-8\n");
    let mut fams = String::new();
    for g in 0..generations {
        let year = 1700 + 25 * g as i32;
        let place = PLACES[g % PLACES.len()];
        let job = JOBS[g % JOBS.len()];
        let person = |out: &mut String, id: &str, name: &str, sex: &str, birth: i32, extra: &str| {
            let _ = write!(
                out,
                "0 @{id}@ INDI\n1 NAME {name} /Line{g}/\n1 SEX {sex}\n1 BIRT\n2 DATE {birth}\n2 PLAC {place}\n\
                 1 DEAT\n2 DATE {}\n2 PLAC {place}\n1 OCCU {job}\n{extra}",
                birth + 60 + (g as i32 % 7)
            );
        };
        let mut h_extra = format!("1 FAMS @F{g}@\n");
        if g > 0 {
            let _ = writeln!(h_extra, "1 FAMC @F{}@", g - 1);
        }
        person(&mut out, &format!("H{g}"), "Adam", "M", year, &h_extra);
        person(&mut out, &format!("W{g}"), "Eve", "F", year + 2, &format!("1 FAMS @F{g}@\n"));
        person(&mut out, &format!("D{g}"), "Ada", "F", year + 24, &format!("1 FAMC @F{g}@\n"));
        let _ = write!(
            fams,
            "0 @F{g}@ FAM\n1 HUSB @H{g}@\n1 WIFE @W{g}@\n1 MARR\n2 DATE {}\n2 PLAC {place}\n1 CHIL @D{g}@\n",
            year + 20
        );
        if g + 1 < generations {
            let _ = writeln!(fams, "1 CHIL @H{}@", g + 1);
        }
    }
    out.push_str(&fams);
    out.push_str("0 TRLR\n");
    out
}

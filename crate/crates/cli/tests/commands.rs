use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use genagg::eval::EvalReport;
use genagg::qa::Answer;
use genagg::qgen::{QAItem, SelectionPair};
use genagg_server::{AppState, AskRequest, ServerConfig};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn genagg(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_genagg"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    out
}

fn ok(args: &[&str]) -> String {
    let out = genagg(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Vec<T> {
    genagg::qgen::read_jsonl(std::fs::File::open(path).unwrap()).unwrap()
}

#[test]
fn parse_and_graph_report_counts() {
    let f = fixture("family30.ged");
    let out = ok(&["parse", f.to_str().unwrap()]);
    assert!(out.contains("individuals: 30\n") && out.contains("families: 10\n"), "{out}");
    let report: Value = serde_json::from_str(&ok(&["parse", f.to_str().unwrap(), "--report"])).unwrap();
    assert_eq!(report["individuals_count"], 30);

    let out = ok(&["graph", f.to_str().unwrap(), "--degree", "0", "--source", "@I1@"]);
    assert!(out.contains("persons: "), "{out}");
    let out = genagg(&["graph", f.to_str().unwrap(), "--degree", "1", "--source", "@NOPE@"]);
    assert!(!out.status.success());
}

#[test]
fn tabulate_generate_predict_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("rel");
    let items = dir.path().join("items.jsonl");
    let pred = dir.path().join("pred.jsonl");
    let report = dir.path().join("report.json");
    let ged = fixture("family30.ged");
    let s = |p: &Path| p.to_str().unwrap().to_owned();

    let out = ok(&["tabulate", &s(&ged), "--design", "rel", "--out", &s(&data)]);
    assert!(out.contains("persons: 30 rows"), "{out}");
    ok(&[
        "qgen", "--dataset", &s(&data), "--max-conditions", "1", "--seed", "7", "--out", &s(&items),
        "--split", "0.6", "0.2", "0.2",
    ]);
    let gold: Vec<QAItem> = jsonl(&items);
    assert!(!gold.is_empty());
    let parts: Vec<Vec<QAItem>> = [".train", ".test", ".eval"]
        .iter()
        .map(|x| jsonl(&PathBuf::from(format!("{}{x}", s(&items)))))
        .collect();
    assert_eq!(parts.iter().map(Vec::len).sum::<usize>(), gold.len());
    assert_eq!(parts[0].len(), gold.len() * 6 / 10);

    ok(&["predict", "--dataset", &s(&data), "--gedcom", &s(&ged), "--gold", &s(&items), "--out", &s(&pred)]);
    let text = ok(&["eval", "--gold", &s(&items), "--pred", &s(&pred), "--out", &s(&report)]);
    let parsed: EvalReport = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(parsed.total_exact, 1.0);
    assert_eq!(parsed.missing, 0);
    assert_eq!(std::fs::read_to_string(dir.path().join("report.txt")).unwrap(), text);
}

#[test]
fn eval_rejects_unknown_ids() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold.jsonl");
    let pred = dir.path().join("pred.jsonl");
    std::fs::write(&gold, "").unwrap();
    std::fs::write(&pred, "{\"id\": 3, \"predicted\": 1.0}\n").unwrap();
    let out = genagg(&[
        "eval", "--gold", gold.to_str().unwrap(), "--pred", pred.to_str().unwrap(),
        "--out", dir.path().join("r.json").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("out of range"));
}

#[test]
fn selection_pairs_and_paraphrases() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("6nf");
    let pairs = dir.path().join("pairs.jsonl");
    let items = dir.path().join("items.jsonl");
    let s = |p: &Path| p.to_str().unwrap().to_owned();
    ok(&["tabulate", &s(&fixture("family30.ged")), "--out", &s(&data)]);
    ok(&["qgen", "--dataset", &s(&data), "--max-conditions", "0", "--out", &s(&pairs), "--selection-pairs"]);
    let pairs: Vec<SelectionPair> = jsonl(&pairs);
    assert!(pairs.iter().all(|p| !p.positive.is_empty() && !p.negative.is_empty()));

    // Replay a paraphrase for a question the generator is known to emit.
    ok(&["qgen", "--dataset", &s(&data), "--max-conditions", "0", "--out", &s(&items)]);
    let plain: Vec<QAItem> = jsonl(&items);
    let tsv = dir.path().join("p.tsv");
    std::fs::write(&tsv, format!("{}\tCount everyone, please.\n", plain[0].question)).unwrap();
    ok(&["qgen", "--dataset", &s(&data), "--max-conditions", "0", "--out", &s(&items), "--paraphrase-tsv", &s(&tsv)]);
    let para: Vec<QAItem> = jsonl(&items);
    assert_eq!(para[0].question, "Count everyone, please.");
    assert_eq!((para[0].answer, &para[0].spec), (plain[0].answer, &plain[0].spec));
    assert_eq!(para[1..], plain[1..]);
}

#[test]
fn ask_matches_the_server() {
    let trees = tempfile::tempdir().unwrap();
    std::fs::copy(fixture("family30.ged"), trees.path().join("family30.ged")).unwrap();
    std::fs::copy(fixture("line20.ged"), trees.path().join("line20.ged")).unwrap();
    let state = AppState::new(ServerConfig {
        trees: trees.path().to_owned(),
        ..Default::default()
    });
    state.load();
    let cases = [
        ("family30", "6nf", "How many men were born in London, England?", None),
        ("family30", "agg", "What is the portion of women that worked as a dressmaker?", None),
        ("family30", "rel", "What colour is the sky?", None),
        ("line20", "agg", "What is the average age of people?", None),
        ("line20", "agg", "What is the average age of people?", Some(4)),
    ];
    let mut values = 0;
    for (tree, design, question, degree) in cases {
        let ged = fixture(&format!("{tree}.ged"));
        let mut args = vec!["ask", "--gedcom", ged.to_str().unwrap(), "--design", design, question, "--json"];
        let d = degree.map(|d: usize| d.to_string());
        if let Some(d) = &d {
            args.extend(["--degree", d]);
        }
        let cli: Answer = serde_json::from_str(&ok(&args)).unwrap();
        let server = state
            .ask(&AskRequest {
                tree_id: tree.into(),
                question: question.into(),
                degree,
                k: None,
                source: None,
                design: Some(design.into()),
            })
            .unwrap();
        assert_eq!(cli, server.answer, "{question}");
        values += cli.value().is_some() as usize;
    }
    assert_eq!(values, 3);
}

#[test]
fn ask_prints_a_degree_prompt() {
    let ged = fixture("line20.ged");
    let out = ok(&["ask", "--gedcom", ged.to_str().unwrap(), "--design", "agg", "What is the average age of people?"]);
    assert!(out.contains("degrees that fit: "), "{out}");
    let out = ok(&[
        "ask", "--gedcom", ged.to_str().unwrap(), "--design", "agg", "--source", "@H0@", "--degree", "3",
        "What is the average age of people?",
    ]);
    assert!(out.contains("degree: 3 around @H0@"), "{out}");
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

fn get(port: u16, path: &str) -> Option<String> {
    let mut s = TcpStream::connect(("127.0.0.1", port)).ok()?;
    write!(s, "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").ok()?;
    let mut out = String::new();
    s.read_to_string(&mut out).ok()?;
    Some(out)
}

#[test]
fn serve_flags_override_environment() {
    let trees = tempfile::tempdir().unwrap();
    std::fs::copy(fixture("family30.ged"), trees.path().join("family30.ged")).unwrap();
    let (flag_port, env_port) = (free_port(), free_port());
    let mut child = Command::new(env!("CARGO_BIN_EXE_genagg"))
        .args(["serve", "--listen", &format!("127.0.0.1:{flag_port}")])
        .env("GENAGG_LISTEN", format!("127.0.0.1:{env_port}"))
        .env("GENAGG_TREES", trees.path())
        .env("RUST_LOG", "warn")
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(20);
    let mut health = None;
    while Instant::now() < deadline {
        match get(flag_port, "/health") {
            Some(r) if r.contains("\"ready\"") => {
                health = Some(r);
                break;
            }
            _ => std::thread::sleep(Duration::from_millis(50)),
        }
    }
    let env_reply = get(env_port, "/health");
    child.kill().unwrap();
    child.wait().unwrap();
    let health = health.expect("server never became ready on the flag address");
    assert!(health.contains("\"trees\":1"), "{health}");
    assert!(env_reply.is_none());
}

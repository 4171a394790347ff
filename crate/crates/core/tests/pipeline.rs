mod common;

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::time::Duration;

use genagg::graph::load_graph;
use genagg::qgen::{
    default_patterns, export_selection_pairs, function_histogram, generate_items, paraphrase_items, read_jsonl,
    GenerationConfig, HttpParaphraser, Paraphraser, QAItem, QgenError, ReplayParaphraser,
};
use genagg::tabulator::schema::EVENTS;
use genagg::tabulator::{export_dataset, import_dataset, tabulate, Dataset, Design, TabulateError, MANIFEST_FILE};

fn dataset(design: Design) -> Dataset {
    let (graph, _) = load_graph(common::FAMILY30).unwrap();
    tabulate(&graph, design).unwrap()
}

fn small_items(design: Design) -> Vec<QAItem> {
    let config = GenerationConfig {
        max_conditions: 1,
        values_per_column: 2,
    };
    generate_items(&dataset(design), &default_patterns(), &config).unwrap()
}

#[test]
fn csv_export_round_trips_every_design() {
    for design in Design::ALL {
        let ds = dataset(design);
        let dir = tempfile::tempdir().unwrap();
        export_dataset(&ds, dir.path()).unwrap();
        assert!(dir.path().join(MANIFEST_FILE).exists());
        assert_eq!(import_dataset(dir.path()).unwrap(), ds, "{design}");
    }
}

#[test]
fn bad_cells_name_their_line() {
    let ds = dataset(Design::Rel);
    let dir = tempfile::tempdir().unwrap();
    export_dataset(&ds, dir.path()).unwrap();
    let path = dir.path().join("persons.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    let birth_year = lines[0].split(',').position(|c| c == "birth_year").unwrap();
    let mut cells: Vec<String> = lines[2].split(',').map(str::to_owned).collect();
    cells[birth_year] = "soon".into();
    lines[2] = cells.join(",");
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    match import_dataset(dir.path()) {
        Err(TabulateError::BadCell { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn event_questions_carry_conditions() {
    let items = small_items(Design::Event);
    let events: Vec<&QAItem> = items.iter().filter(|i| i.spec.origin == EVENTS).collect();
    assert!(!events.is_empty());
    assert!(events.iter().any(|i| i.question.contains(" in ") && !i.spec.conditions.is_empty()));
    assert!(events.iter().any(|i| i.question.starts_with("What is the year with the maximum number of births")));
    let hist = function_histogram(&items);
    assert_eq!(hist.values().sum::<usize>(), items.len());
}

#[test]
fn selection_pairs_partition_tables() {
    let ds = dataset(Design::SixNF);
    let items = small_items(Design::SixNF);
    let pairs = export_selection_pairs(&items[..200], &ds);
    for (pair, item) in pairs.iter().zip(&items) {
        assert_eq!(pair.positive, item.tables);
        assert_eq!(pair.positive.len() + pair.negative.len(), ds.tables.len());
        assert!(pair.negative.iter().all(|n| !pair.positive.contains(n)));
    }
}

#[test]
fn replayed_paraphrases_change_only_the_question() {
    let pairs: Vec<(String, String)> = include_str!("fixtures/paraphrases.tsv")
        .lines()
        .filter_map(|l| l.split_once('\t'))
        .map(|(a, b)| (a.to_owned(), b.to_owned()))
        .collect();
    assert_eq!(pairs.len(), 8);
    let replay = ReplayParaphraser::new(pairs.clone());
    assert_eq!(replay.paraphrase(&pairs[1].0), pairs[1].1);
    let mut items = small_items(Design::Agg);
    items.truncate(5);
    items[0].question = pairs[0].0.clone();
    let out = paraphrase_items(&items, &replay);
    assert_eq!(out[0].question, pairs[0].1);
    for (a, b) in items.iter().zip(&out).skip(1) {
        assert_eq!(a, b);
    }
    assert_eq!((out[0].answer, &out[0].spec), (items[0].answer, &items[0].spec));
}

/// Answers one request with a fixed JSON body.
fn one_shot_server(body: &'static str) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        let (mut stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut length = 0;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                length = v.trim().parse().unwrap();
            }
            if line == "\r\n" || line.is_empty() {
                break;
            }
        }
        let mut request = vec![0u8; length];
        std::io::Read::read_exact(&mut reader, &mut request).unwrap();
        assert!(String::from_utf8(request).unwrap().contains("\"text\""));
        write!(
            stream,
            "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
            body.len()
        )
        .unwrap();
    });
    format!("http://{addr}/paraphrase")
}

#[test]
fn http_paraphraser_uses_the_service() {
    let url = one_shot_server(r#"{"paraphrase": "How many males were born in Italy?"}"#);
    let p = HttpParaphraser::new(url, Duration::from_secs(5));
    assert_eq!(p.paraphrase("How many men were born in Italy?"), "How many males were born in Italy?");
}

#[test]
fn http_paraphraser_falls_back_to_the_original() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let p = HttpParaphraser::new(format!("http://{addr}/"), Duration::from_millis(500));
    assert_eq!(p.paraphrase("How many people are there?"), "How many people are there?");
}

#[test]
fn jsonl_errors_carry_the_line() {
    let text = "{\"id\": 1}\n\nnot json\n";
    match read_jsonl::<serde_json::Value>(text.as_bytes()) {
        Err(QgenError::Record { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
}

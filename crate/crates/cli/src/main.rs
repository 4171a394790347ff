use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use genagg::eval::{evaluate, Predicted, Prediction};
use genagg::gedcom::parse_gedcom;
use genagg::graph::{degree_subgraph, load_graph, DegreeScope, KnowledgeGraph};
use genagg::qa::{explain, Answer, AskOptions, Engine, DEFAULT_BUDGET, DEFAULT_K};
use genagg::qgen::{
    self, default_patterns, export_selection_pairs, function_histogram, generate_items, paraphrase_items,
    read_jsonl, split_dataset, write_jsonl, GenerationConfig, HttpParaphraser, Paraphraser, QAItem,
    ReplayParaphraser,
};
use genagg::tabulator::{self, tabulate, Design};
use genagg_server::ServerConfig;

#[derive(Parser)]
#[command(name = "genagg", version, about = "Numerical aggregation questions over GEDCOM family trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a GEDCOM file and print record counts.
    Parse {
        file: PathBuf,
        /// Print the full parse report, warnings included, as JSON.
        #[arg(long)]
        report: bool,
    },
    /// Print statistics for the subgraph within a relation degree of a person.
    Graph {
        file: PathBuf,
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        source: String,
    },
    /// Tabulate a tree under one design into a directory of CSV files.
    Tabulate {
        file: PathBuf,
        #[arg(long, default_value = "6nf")]
        design: Design,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate labeled questions from a tabulated dataset.
    Qgen(QgenArgs),
    /// Answer one question.
    Ask(AskArgs),
    /// Answer every question of a QA file and write predictions.
    Predict(PredictArgs),
    /// Score predictions against gold questions.
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// JSON report; a plain-text table is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Args)]
struct QgenArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 3)]
    max_conditions: usize,
    #[arg(long, default_value_t = 5)]
    values_per_column: usize,
    /// Seed for the train/test/eval shuffle.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Write table-selection pairs instead of QA items.
    #[arg(long)]
    selection_pairs: bool,
    /// Also write `<out>.train`, `<out>.test` and `<out>.eval` with these ratios.
    #[arg(long, num_args = 3, value_names = ["TRAIN", "TEST", "EVAL"])]
    split: Option<Vec<f64>>,
    /// Tab-separated original/paraphrase pairs to replay.
    #[arg(long, conflicts_with = "paraphrase_url")]
    paraphrase_tsv: Option<PathBuf>,
    /// Paraphrase service endpoint; failures keep the original question.
    #[arg(long)]
    paraphrase_url: Option<String>,
    #[arg(long, default_value_t = 10)]
    paraphrase_timeout_secs: u64,
}

#[derive(Args)]
struct EngineArgs {
    /// Tabulated dataset directory; tabulated from the GEDCOM file when absent.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    gedcom: PathBuf,
    /// Design used when tabulating from the GEDCOM file.
    #[arg(long, default_value = "6nf", conflicts_with = "dataset")]
    design: Design,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
    /// Person degrees are measured from; defaults to the first person.
    #[arg(long)]
    source: Option<String>,
}

#[derive(Args)]
struct AskArgs {
    #[command(flatten)]
    engine: EngineArgs,
    question: String,
    #[arg(long)]
    degree: Option<usize>,
    /// Print the answer as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// On a degree prompt, answer at the largest fitting degree instead of
    /// predicting "unanswerable".
    #[arg(long)]
    auto_degree: bool,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "GENAGG_LISTEN", default_value = genagg_server::DEFAULT_LISTEN)]
    listen: SocketAddr,
    /// Directory of `.ged` files.
    #[arg(long, env = "GENAGG_TREES")]
    trees: PathBuf,
    #[arg(long, env = "GENAGG_DESIGN", default_value = "6nf")]
    design: Design,
    #[arg(long, env = "GENAGG_BUDGET", default_value_t = DEFAULT_BUDGET)]
    budget: usize,
    #[arg(long, env = "GENAGG_K", default_value_t = DEFAULT_K)]
    k: usize,
}

fn read_graph(path: &Path) -> Result<KnowledgeGraph> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let (graph, report) = load_graph(&bytes).with_context(|| format!("loading {}", path.display()))?;
    for w in &report.warnings {
        log::warn!("{}:{}: {}", path.display(), w.line, w.message);
    }
    Ok(graph)
}

fn build_engine(args: &EngineArgs) -> Result<Engine> {
    let graph = read_graph(&args.gedcom)?;
    Ok(match &args.dataset {
        Some(dir) => {
            let dataset = tabulator::import_dataset(dir).with_context(|| format!("reading {}", dir.display()))?;
            Engine::with_dataset(graph, dataset)?
        }
        None => Engine::new(graph, args.design)?,
    })
}

fn ask_options(args: &EngineArgs, degree: Option<usize>) -> AskOptions {
    AskOptions {
        degree,
        k: args.k,
        budget: args.budget,
        source: args.source.clone(),
        tables: None,
    }
}

fn create(path: &Path) -> Result<File> {
    File::create(path).with_context(|| format!("creating {}", path.display()))
}

fn parse_cmd(file: &Path, report: bool) -> Result<()> {
    let bytes = std::fs::read(file).with_context(|| format!("reading {}", file.display()))?;
    let (nodes, _) = parse_gedcom(&bytes)?;
    let (graph, full) = load_graph(&bytes)?;
    if report {
        println!("{}", serde_json::to_string_pretty(&full)?);
    } else {
        println!("records: {}", nodes.len());
        println!("individuals: {}", graph.person_count());
        println!("families: {}", graph.families().count());
        println!("warnings: {}", full.warnings.len());
    }
    Ok(())
}

fn graph_cmd(file: &Path, degree: usize, source: &str) -> Result<()> {
    let graph = read_graph(file)?;
    let sub = degree_subgraph(&graph, DegreeScope { source_person: source, degree })?;
    println!("source: {source}");
    println!("degree: {degree}");
    println!("persons: {} of {}", sub.person_count(), graph.person_count());
    println!("families: {} of {}", sub.families().count(), graph.families().count());
    println!("edges: {} of {}", sub.edges().len(), graph.edges().len());
    println!("eccentricity: {}", graph.eccentricity(source)?);
    Ok(())
}

fn tabulate_cmd(file: &Path, design: Design, out: &Path) -> Result<()> {
    let dataset = tabulate(&read_graph(file)?, design)?;
    tabulator::export_dataset(&dataset, out)?;
    for t in &dataset.tables {
        println!("{}: {} rows, {} columns", t.name, t.rows.len(), t.columns.len());
    }
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn qgen_cmd(args: &QgenArgs) -> Result<()> {
    let dataset = tabulator::import_dataset(&args.dataset)
        .with_context(|| format!("reading {}", args.dataset.display()))?;
    let config = GenerationConfig {
        max_conditions: args.max_conditions,
        values_per_column: args.values_per_column,
    };
    let mut items = generate_items(&dataset, &default_patterns(), &config)?;
    let paraphraser: Option<Box<dyn Paraphraser>> = if let Some(tsv) = &args.paraphrase_tsv {
        let text = std::fs::read_to_string(tsv).with_context(|| format!("reading {}", tsv.display()))?;
        let pairs: Vec<(String, String)> = text
            .lines()
            .filter_map(|l| l.split_once('\t'))
            .map(|(a, b)| (a.to_owned(), b.to_owned()))
            .collect();
        Some(Box::new(ReplayParaphraser::new(pairs)))
    } else {
        args.paraphrase_url.as_ref().map(|url| {
            Box::new(HttpParaphraser::new(url.clone(), Duration::from_secs(args.paraphrase_timeout_secs)))
                as Box<dyn Paraphraser>
        })
    };
    if let Some(p) = paraphraser {
        items = paraphrase_items(&items, p.as_ref());
    }
    let hist: BTreeMap<_, _> = function_histogram(&items).into_iter().collect();
    for (f, n) in hist {
        eprintln!("{f}: {n}");
    }
    eprintln!("{} questions", items.len());

    let write = |items: &[QAItem], path: &Path| -> Result<()> {
        if args.selection_pairs {
            write_jsonl(&export_selection_pairs(items, &dataset), create(path)?)?;
        } else {
            write_jsonl(items, create(path)?)?;
        }
        Ok(())
    };
    write(&items, &args.out)?;
    if let Some(r) = &args.split {
        let (train, test, eval) = split_dataset(&items, [r[0], r[1], r[2]], args.seed)?;
        for (part, suffix) in [(&train, ".train"), (&test, ".test"), (&eval, ".eval")] {
            write(part, &with_suffix(&args.out, suffix))?;
        }
        eprintln!("split: {} / {} / {}", train.len(), test.len(), eval.len());
    }
    Ok(())
}

fn ask_cmd(args: &AskArgs) -> Result<()> {
    let engine = build_engine(&args.engine)?;
    let answer = engine.answer(&args.question, &ask_options(&args.engine, args.degree));
    if args.json {
        println!("{}", serde_json::to_string_pretty(&answer)?);
    } else {
        print!("{}", explain(&answer));
    }
    Ok(())
}

fn predict_cmd(args: &PredictArgs) -> Result<()> {
    let engine = build_engine(&args.engine)?;
    let gold: Vec<QAItem> = qgen::import_dataset(&args.gold)?;
    let mut predictions = Vec::with_capacity(gold.len());
    for (id, item) in gold.iter().enumerate() {
        let mut answer = engine.answer(&item.question, &ask_options(&args.engine, None));
        if let (true, Answer::NeedsDegreeReduction { degrees, .. }) = (args.auto_degree, &answer) {
            if let Some(&d) = degrees.first() {
                answer = engine.answer(&item.question, &ask_options(&args.engine, Some(d)));
            }
        }
        let predicted = answer.value().map_or(Predicted::Unanswerable, Predicted::Number);
        predictions.push(Prediction { id, predicted });
    }
    write_jsonl(&predictions, create(&args.out)?)?;
    let answered = predictions
        .iter()
        .filter(|p| !matches!(p.predicted, Predicted::Unanswerable))
        .count();
    eprintln!("answered {answered} of {}", predictions.len());
    Ok(())
}

fn eval_cmd(gold: &Path, pred: &Path, out: &Path) -> Result<()> {
    let gold: Vec<QAItem> = qgen::import_dataset(gold)?;
    let predictions: Vec<Prediction> = read_jsonl(File::open(pred).with_context(|| format!("opening {}", pred.display()))?)?;
    if let Some(p) = predictions.iter().find(|p| p.id >= gold.len()) {
        bail!("prediction id {} is out of range for {} gold items", p.id, gold.len());
    }
    let report = evaluate(&predictions, &gold);
    if report.missing > 0 {
        log::warn!("{} gold items have no prediction and count as unanswerable", report.missing);
    }
    serde_json::to_writer_pretty(create(out)?, &report)?;
    let text = report.to_text();
    create(&out.with_extension("txt"))?.write_all(text.as_bytes())?;
    print!("{text}");
    Ok(())
}

fn serve_cmd(args: &ServeArgs) -> Result<()> {
    let config = ServerConfig {
        listen: args.listen,
        trees: args.trees.clone(),
        design: args.design,
        budget: args.budget,
        k: args.k,
    };
    tokio::runtime::Runtime::new()?.block_on(genagg_server::serve(config))?;
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Parse { file, report } => parse_cmd(&file, report),
        Command::Graph { file, degree, source } => graph_cmd(&file, degree, &source),
        Command::Tabulate { file, design, out } => tabulate_cmd(&file, design, &out),
        Command::Qgen(args) => qgen_cmd(&args),
        Command::Ask(args) => ask_cmd(&args),
        Command::Predict(args) => predict_cmd(&args),
        Command::Eval { gold, pred, out } => eval_cmd(&gold, &pred, &out),
        Command::Serve(args) => serve_cmd(&args),
    }
}

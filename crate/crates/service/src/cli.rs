//! `mirstat` command line.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use mirstat::bim::RelevanceJudgments;
use mirstat::corpus::TokenizerConfig;
use mirstat::engine::{Engine, Model};
use mirstat::eval::parse_qrels;
use mirstat::expansion::LcaParams;
use mirstat::query_store::QueryStore;
use mirstat::RankedList;

use crate::http::{router, AppState};

pub const DEFAULT_PORT: u16 = 8750;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "mirstat", version, about = "Index a corpus and rank it with p-norm, BIM or inference-network models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ingest a directory of .txt files and write an index snapshot.
    Index {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Stopword file, one word per line; replaces the built-in list.
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(long)]
        no_stem: bool,
        #[arg(long, default_value_t = 1)]
        min_token_len: usize,
    },
    /// Rank documents; prints one `doc_id<TAB>score` line per hit.
    Search {
        #[arg(long)]
        index: PathBuf,
        #[arg(long, value_enum, default_value = "pnorm")]
        model: ModelArg,
        #[arg(long)]
        query: String,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// `{"relevant": [...]}` file for the bim model.
        #[arg(long)]
        judgments: Option<PathBuf>,
    },
    /// Expand a query with local context analysis; prints JSON.
    Expand {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = 10)]
        m: usize,
        #[arg(long, default_value_t = 5)]
        k: usize,
    },
    /// Write the concept graph as OWL (RDF/XML).
    ExportOwl {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Precision and recall at k for a query file (one query per line).
    Eval {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        qrels: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, value_enum, default_value = "pnorm")]
        model: ModelArg,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        index: PathBuf,
        #[arg(long, env = "MIRSTAT_PORT", default_value_t = DEFAULT_PORT)]
        port: u16,
        /// Query store; defaults to queries.ndjson next to the index.
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum ModelArg {
    Pnorm,
    Bim,
    Inet,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Pnorm => Model::Pnorm,
            ModelArg::Bim => Model::Bim,
            ModelArg::Inet => Model::Inet,
        }
    }
}

/// One `doc_id<TAB>score` line per result.
pub fn format_ranking(ranked: &RankedList) -> String {
    let mut out = String::new();
    for d in ranked {
        writeln!(out, "{}\t{}", d.doc_id, d.score).expect("writing to a String");
    }
    out
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(err) => {
            eprintln!("error: {err}");
            EXIT_DATA
        }
    }
}

type CliResult = Result<(), Box<dyn std::error::Error>>;

fn read(path: &Path) -> Result<String, mirstat::Error> {
    fs::read_to_string(path).map_err(|e| mirstat::Error::io(path, e))
}

fn print(text: &str) -> CliResult {
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(text.as_bytes())?;
    stdout.flush()?;
    Ok(())
}

fn execute(command: Command) -> CliResult {
    match command {
        Command::Index {
            corpus,
            out,
            stopwords,
            no_stem,
            min_token_len,
        } => {
            let mut config = TokenizerConfig::new(TokenizerConfig::default().stopwords, !no_stem, min_token_len)?;
            if let Some(path) = stopwords {
                config = config.with_stopword_file(path)?;
            }
            let (engine, errors) = Engine::from_dir(&corpus, config)?;
            for err in &errors {
                eprintln!("warning: skipped {err}");
            }
            engine.save(&out)?;
            eprintln!(
                "indexed {} documents, {} terms -> {}",
                engine.corpus().len(),
                engine.index().terms().count(),
                out.display()
            );
        }
        Command::Search {
            index,
            model,
            query,
            p,
            k,
            judgments,
        } => {
            let engine = Engine::load(&index)?;
            let judgments = judgments
                .map(|path| RelevanceJudgments::from_json(&read(&path)?, engine.index()))
                .transpose()?;
            let ranked = engine.search(model.into(), &query, p, k, judgments.as_ref())?;
            print(&format_ranking(&ranked))?;
        }
        Command::Expand { index, query, m, k } => {
            let engine = Engine::load(&index)?;
            let params = LcaParams {
                m_top: m,
                k_concepts: k,
                ..LcaParams::default()
            };
            let expansion = engine.expand(&query, params)?;
            let value = serde_json::json!({
                "expanded": expansion.expanded,
                "concepts": expansion.concepts,
                "vector": expansion.query.weights,
            });
            print(&format!("{}\n", serde_json::to_string_pretty(&value)?))?;
        }
        Command::ExportOwl { index, out } => {
            let owl = Engine::load(&index)?.ontology()?;
            fs::write(&out, &owl.text).map_err(|e| mirstat::Error::io(&out, e))?;
            eprintln!("wrote {} classes -> {}", owl.class_count, out.display());
        }
        Command::Eval {
            index,
            queries,
            qrels,
            k,
            model,
        } => {
            let engine = Engine::load(&index)?;
            let queries: Vec<String> = read(&queries)?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect();
            let qrels = parse_qrels(&read(&qrels)?)?;
            let report = engine.evaluate(&queries, &qrels, model.into(), k)?;
            print(&format!("{}\n", serde_json::to_string_pretty(&report)?))?;
        }
        Command::Serve {
            index,
            port,
            store,
            host,
        } => {
            let engine = Engine::load(&index)?;
            let store_path = store.unwrap_or_else(|| index.with_file_name("queries.ndjson"));
            let store = QueryStore::open(&store_path)?;
            let app = router(AppState::new(Some(engine), store));
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind((host.as_str(), port)).await?;
                eprintln!("listening on http://{}", listener.local_addr()?);
                axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await
            })?;
        }
    }
    Ok(())
}

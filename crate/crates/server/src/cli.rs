//! `cogkit` command line. The knowledge base lives in a JSON state file
//! between invocations; read commands freeze it in memory. A `.nt` path is
//! loaded with the N-Triples importer instead.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cogkit::query::{self, PatternQuery, DEFAULT_LIMIT, DEFAULT_MIN_SIMILARITY};
use cogkit::{fer, linker, pipeline, rdf, schema, world, Error, Store, StoreState};
use serde::Serialize;
use serde_json::json;

pub const DEFAULT_KB: &str = "cogkit-kb.json";
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

#[derive(Debug, Parser)]
#[command(name = "cogkit", version, about = "Frame-semantic knowledge base toolkit")]
pub struct Cli {
    /// Knowledge base file: JSON build state, or `.nt` for read-only use.
    #[arg(long, global = true, env = "COGKIT_KB", default_value = DEFAULT_KB)]
    pub kb: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load F/E/L/ROLE/R schema records.
    IngestFrames {
        file: PathBuf,
        /// Source name recorded on each frame; defaults to the file stem.
        #[arg(long)]
        source: Option<String>,
    },
    /// Load S/H/ROOT taxonomy records.
    IngestTaxonomy { file: PathBuf },
    /// Structure commonsense assertions into FERs and edges.
    IngestAssertions {
        file: PathBuf,
        #[arg(long, default_value = "needs_annotation.tsv")]
        needs_annotation: PathBuf,
    },
    /// Apply manual FER annotations.
    ImportAnnotations { file: PathBuf },
    /// Turn world triples into frame instances.
    IngestWorld {
        file: PathBuf,
        #[arg(long)]
        rules: PathBuf,
    },
    /// Merge entities listed as sameAs pairs.
    MergeEntities { file: PathBuf },
    /// Compute concretizes edges.
    Link,
    /// Validate and report what freezing would produce.
    Freeze,
    /// Write the frozen store as N-Triples.
    ExportRdf {
        #[arg(long)]
        out: PathBuf,
    },
    /// Replace the knowledge base with the contents of an N-Triples file.
    ImportRdf { file: PathBuf },
    /// Keyword search.
    Search {
        query: String,
        #[arg(long, default_value_t = DEFAULT_LIMIT)]
        limit: usize,
        #[arg(long, default_value_t = DEFAULT_MIN_SIMILARITY)]
        min_sim: f64,
    },
    /// Evaluate a triple-pattern query given inline or with --file.
    Pattern {
        #[arg(required_unless_present = "file", conflicts_with = "file")]
        query: Option<String>,
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Frame catalog with linked FER and instance counts.
    Catalog,
    /// Node and edge counts.
    Stats,
    /// Serve the HTTP API.
    Serve {
        /// Defaults to COGKIT_BIND, then 127.0.0.1:8080.
        #[arg(long)]
        bind: Option<String>,
    },
    /// Run the whole pipeline from a manifest and save the result.
    Build {
        #[arg(long)]
        manifest: PathBuf,
        /// Overrides the manifest's annotationOutputPath.
        #[arg(long)]
        needs_annotation: Option<PathBuf>,
    },
}

/// Failure carried to the exit code: 1 with a JSON error object.
#[derive(Debug)]
pub struct Failure {
    code: String,
    message: String,
    details: Option<serde_json::Value>,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let details = match &e {
            Error::ValidationFailed(report) => serde_json::to_value(report).ok(),
            _ => None,
        };
        Failure {
            code: e.code().to_string(),
            message: e.to_string(),
            details,
        }
    }
}

impl Failure {
    fn new(code: &str, message: impl Into<String>) -> Self {
        Failure {
            code: code.to_string(),
            message: message.into(),
            details: None,
        }
    }
}

type Outcome = Result<serde_json::Value, Failure>;

fn to_json(v: &impl Serialize) -> serde_json::Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new("IoError", format!("{}: {e}", path.display())))
}

fn is_ntriples(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "nt")
}

/// Building store from the knowledge-base file; empty when it does not exist.
fn load_building(kb: &Path) -> Result<Store, Failure> {
    if !kb.exists() {
        return Ok(Store::new());
    }
    if is_ntriples(kb) {
        let frozen = rdf::import_ntriples(&read(kb)?)?;
        return Ok(Store::from_state(frozen.to_state())?);
    }
    let state: StoreState = serde_json::from_str(&read(kb)?)
        .map_err(|e| Failure::new("StateError", format!("{}: {e}", kb.display())))?;
    Ok(Store::from_state(state)?)
}

pub fn load_frozen(kb: &Path) -> Result<Store, Failure> {
    if !kb.exists() {
        return Err(Failure::new(
            "IoError",
            format!("{}: knowledge base not found; run `build` first", kb.display()),
        ));
    }
    if is_ntriples(kb) {
        return Ok(rdf::import_ntriples(&read(kb)?)?);
    }
    let mut store = load_building(kb)?;
    store.freeze()?;
    Ok(store)
}

fn save(kb: &Path, store: &Store) -> Result<(), Failure> {
    if is_ntriples(kb) {
        return Err(Failure::new(
            "StateError",
            "N-Triples knowledge bases are read-only; use a .json path",
        ));
    }
    let text = serde_json::to_string(&store.to_state()).expect("state serializes");
    fs::write(kb, text).map_err(|e| Failure::new("IoError", format!("{}: {e}", kb.display())))
}

fn mutate<R: Serialize>(kb: &Path, f: impl FnOnce(&mut Store) -> cogkit::Result<R>) -> Outcome {
    let mut store = load_building(kb)?;
    let report = f(&mut store)?;
    save(kb, &store)?;
    Ok(to_json(&report))
}

fn bind_address(flag: Option<String>) -> String {
    flag.or_else(|| std::env::var("COGKIT_BIND").ok().filter(|s| !s.is_empty()))
        .unwrap_or_else(|| DEFAULT_BIND.to_string())
}

fn serve(kb: &Path, bind: Option<String>) -> Outcome {
    let store = load_frozen(kb)?;
    let addr = bind_address(bind);
    let runtime = tokio::runtime::Runtime::new()
        .map_err(|e| Failure::new("IoError", e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| Failure::new("BindError", format!("{addr}: {e}")))?;
        let local = listener
            .local_addr()
            .map_err(|e| Failure::new("BindError", e.to_string()))?;
        println!("{}", json!({ "listening": local.to_string() }));
        let _ = std::io::stdout().flush();
        let app = crate::api::router(crate::api::AppState::new(store, DEFAULT_MIN_SIMILARITY));
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| Failure::new("IoError", e.to_string()))?;
        Ok(json!({ "stopped": local.to_string() }))
    })
}

pub fn execute(cli: Cli) -> Outcome {
    let kb = cli.kb.as_path();
    match cli.command {
        Command::IngestFrames { file, source } => {
            let text = read(&file)?;
            let source = source.unwrap_or_else(|| {
                file.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "schema".into())
            });
            mutate(kb, |s| schema::ingest_frames(s, &text, &source))
        }
        Command::IngestTaxonomy { file } => {
            let text = read(&file)?;
            mutate(kb, |s| schema::ingest_taxonomy(s, &text))
        }
        Command::IngestAssertions {
            file,
            needs_annotation,
        } => {
            let text = read(&file)?;
            let mut store = load_building(kb)?;
            let report = fer::ingest_assertions(&mut store, &text)?;
            let mut buf = Vec::new();
            fer::write_needs_annotation(&report.rejected, &mut buf).map_err(Error::from)?;
            fs::write(&needs_annotation, buf).map_err(Error::from)?;
            save(kb, &store)?;
            Ok(to_json(&report))
        }
        Command::ImportAnnotations { file } => {
            let text = read(&file)?;
            mutate(kb, |s| fer::import_annotations(s, &text))
        }
        Command::IngestWorld { file, rules } => {
            let text = read(&file)?;
            let rules_text = read(&rules)?;
            mutate(kb, |s| {
                let set = world::load_rules(s, &rules_text)?;
                world::ingest_world(s, &set, &text)
            })
        }
        Command::MergeEntities { file } => {
            let text = read(&file)?;
            mutate(kb, |s| world::merge_entities(s, &text))
        }
        Command::Link => mutate(kb, linker::link_all),
        Command::Freeze => {
            let mut store = load_building(kb)?;
            let report = store.freeze()?;
            Ok(json!({ "validation": report, "stats": store.stats() }))
        }
        Command::ExportRdf { out } => {
            let store = load_frozen(kb)?;
            let file = fs::File::create(&out)
                .map_err(|e| Failure::new("SinkError", format!("{}: {e}", out.display())))?;
            let mut sink = std::io::BufWriter::new(file);
            let stats = rdf::export_ntriples(&store, &mut sink).map_err(|e| match e {
                Error::Io(io) => Failure::new("SinkError", io.to_string()),
                other => other.into(),
            })?;
            Ok(to_json(&stats))
        }
        Command::ImportRdf { file } => {
            let store = rdf::import_ntriples(&read(&file)?)?;
            save(kb, &store)?;
            Ok(to_json(&store.stats()))
        }
        Command::Search {
            query,
            limit,
            min_sim,
        } => {
            if !(0.0..=1.0).contains(&min_sim) {
                return Err(Failure::new("BadParameter", "--min-sim must lie in [0, 1]"));
            }
            let store = load_frozen(kb)?;
            Ok(to_json(&query::search(&store, &query, limit, min_sim)?))
        }
        Command::Pattern { query, file, limit } => {
            let text = match (query, file) {
                (Some(q), _) => q,
                (None, Some(f)) => read(&f)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            let q = PatternQuery::parse(&text)?;
            let store = load_frozen(kb)?;
            Ok(to_json(&query::evaluate_pattern(&store, &q, limit)?))
        }
        Command::Catalog => Ok(to_json(&query::explore_catalog(&load_frozen(kb)?))),
        Command::Stats => Ok(to_json(&load_frozen(kb)?.stats())),
        Command::Serve { bind } => serve(kb, bind),
        Command::Build {
            manifest,
            needs_annotation,
        } => {
            let built = pipeline::build(&manifest, needs_annotation.as_deref())?;
            save(kb, &built.store)?;
            Ok(to_json(&built.report))
        }
    }
}

/// Pretty JSON on stdout; a closed pipe is not an error.
fn emit(value: &serde_json::Value) {
    let text = serde_json::to_string_pretty(value).expect("json");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(report) => {
            emit(&report);
            ExitCode::SUCCESS
        }
        Err(f) => {
            let mut error = json!({ "code": f.code, "message": f.message });
            if let Some(d) = f.details {
                error["details"] = d;
            }
            emit(&json!({ "error": error }));
            ExitCode::from(1)
        }
    }
}

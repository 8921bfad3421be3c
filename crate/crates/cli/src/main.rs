use std::io::Read;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use kapps_client::{Client, ClientError};
use kapps_core::flexconveyor::{FaultConfig, FaultMode, FaultTrigger, SimConfig};
use kapps_core::fixtures;
use kapps_core::term::Iri;
use kapps_core::unscrew::{corpus, LoopMode};
use kapps_core::vocab::{ontology_graph, shapes_graph};
use kapps_core::wire::*;
use kapps_server::AppState;

const EXIT_VIOLATION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "kapps", version, about = "Ontology-governed knowledge graph runtime", arg_required_else_help = true)]
struct Cli {
    /// Service to talk to; an in-process service is started when absent.
    #[arg(long, global = true, value_name = "URL")]
    server: Option<String>,
    /// Write the final data graphs as Turtle to this file.
    #[arg(long, global = true, value_name = "PATH")]
    store_dump: Option<PathBuf>,
    /// Shapes files (or names of bundled fixtures).
    #[arg(long, global = true, num_args = 1.., value_name = "FILES")]
    shapes: Vec<String>,
    /// Ontology files (or names of bundled fixtures).
    #[arg(long, global = true, num_args = 1.., value_name = "FILES")]
    ontology: Vec<String>,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
    /// Load Turtle files into the store.
    Load {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Target graph IRI.
        #[arg(long)]
        graph: Option<String>,
    },
    /// Run a SPARQL query read from a file, or `-` for stdin.
    Query(QueryArgs),
    /// Validate a data file; exit 1 if it violates the shapes.
    Validate {
        data: PathBuf,
        /// Emit the vendor-specific report triples some triple stores add.
        #[arg(long)]
        vendor_compat: bool,
    },
    /// Run the conveyor simulation.
    Simulate(SimulateArgs),
    /// Inspect the transaction log.
    History {
        #[command(subcommand)]
        command: HistoryCommand,
    },
    /// Unscrewing demonstrator.
    Uc1 {
        #[command(subcommand)]
        command: Uc1Command,
    },
    /// Print the data graphs as Turtle.
    Dump,
    /// List invokeable workflows.
    Discover {
        /// Workflow class IRI; all workflows when absent.
        #[arg(long)]
        class: Option<String>,
    },
}

#[derive(Debug, Args)]
struct QueryArgs {
    query: String,
    /// Data files to load before querying.
    #[arg(long, num_args = 1..)]
    data: Vec<PathBuf>,
    /// Transaction id or RFC 3339 instant.
    #[arg(long)]
    at: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    format: Format,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Tsv,
    Json,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 3)]
    width: usize,
    #[arg(long, default_value_t = 3)]
    height: usize,
    #[arg(long, default_value_t = 1)]
    boxes: usize,
    #[arg(long, default_value = "none")]
    fault: FaultMode,
    /// Fire the fault once, at the first opportunity from this transaction on.
    #[arg(long, conflicts_with = "fault_probability")]
    fault_at_txn: Option<u64>,
    #[arg(long)]
    fault_probability: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_ticks: Option<u64>,
    /// 1-based module indices that start out holding a box.
    #[arg(long, value_delimiter = ',')]
    occupy: Vec<usize>,
    /// Also write the summary and rejection reports to this file.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Validate the full graph after every admitted transaction.
    #[arg(long)]
    validate_every_commit: bool,
}

#[derive(Debug, Subcommand)]
enum HistoryCommand {
    /// One line per transaction: id, timestamp, actor, inserts, deletes.
    List,
    /// The state as of a transaction id or RFC 3339 instant.
    At {
        when: String,
        /// Run this query file against that state instead of dumping it.
        #[arg(long)]
        query: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Tsv)]
        format: Format,
    },
    /// Net changes between two points.
    Diff { from: String, to: Option<String> },
}

#[derive(Debug, Subcommand)]
enum Uc1Command {
    /// Run the perceive, classify, learn loop.
    Run {
        /// Corpus directory; a seeded corpus is generated when absent.
        #[arg(long)]
        recordings: Option<PathBuf>,
        #[arg(long, default_value_t = 30)]
        cycles: usize,
        #[arg(long, default_value_t = 20)]
        learn_every: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        min_ops: Option<usize>,
        #[arg(long, value_enum, default_value_t = Mode::Direct)]
        mode: Mode,
        /// Print the reconstructed decision trace of every operation.
        #[arg(long)]
        traces: bool,
    },
    /// Write a seeded synthetic corpus.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 30)]
        cycles: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Reconstruct how an operation was classified.
    Trace { operation: String },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Direct,
    Services,
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let error = e.into();
        let code = match error.downcast_ref::<ClientError>() {
            Some(ClientError::Api(body)) => match body.kind {
                ErrorKind::Usage => EXIT_USAGE,
                ErrorKind::Rejected => EXIT_VIOLATION,
                ErrorKind::NotFound | ErrorKind::Runtime => EXIT_RUNTIME,
            },
            _ => EXIT_RUNTIME,
        };
        Self { code, error }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        error: anyhow!(msg.into()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let filter = if cli.verbose { "debug" } else { "warn" };
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| filter.into()))
        .with_writer(std::io::stderr)
        .init();
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    match runtime.block_on(run(cli)) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            if let Some(ClientError::Api(body)) = f.error.downcast_ref::<ClientError>() {
                if let Some(report) = &body.report {
                    println!("{}", kapps_core::shacl::serialize_report(report, &Default::default()));
                }
            }
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

/// Reads a file, falling back to a bundled fixture of that name.
fn read_source(name: &str) -> Result<String, Failure> {
    let path = Path::new(name);
    if path.exists() || fixtures::bundled(name).is_none() {
        return std::fs::read_to_string(path).with_context(|| format!("reading {name}")).map_err(Failure::from);
    }
    Ok(fixtures::bundled(name).unwrap_or_default().to_owned())
}

fn read_query(name: &str) -> Result<String, Failure> {
    if name == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).context("reading query from stdin")?;
        return Ok(s);
    }
    read_source(name)
}

fn parse_iri(s: &str) -> Result<Iri, Failure> {
    Iri::new(s).map_err(|e| usage(format!("`{s}`: {e}")))
}

async fn connect(cli: &Cli) -> Result<Client, Failure> {
    if let Some(url) = &cli.server {
        return Ok(Client::new(url.clone()));
    }
    let state = Arc::new(AppState::bootstrap()?);
    let addr = kapps_server::spawn(([127, 0, 0, 1], 0).into(), state).await?;
    Ok(Client::new(format!("http://{addr}")))
}

async fn load_globals(cli: &Cli, client: &Client, include_shapes: bool) -> Result<(), Failure> {
    let mut docs: Vec<(&String, Iri)> = cli.ontology.iter().map(|f| (f, ontology_graph())).collect();
    if include_shapes {
        docs.extend(cli.shapes.iter().map(|f| (f, shapes_graph())));
    }
    for (file, graph) in docs {
        client
            .load(&LoadRequest {
                turtle: read_source(file)?,
                graph: Some(graph),
                base: None,
            })
            .await
            .with_context(|| format!("loading {file}"))?;
    }
    Ok(())
}

async fn load_files(client: &Client, files: &[PathBuf], graph: Option<Iri>) -> Result<LoadResponse, Failure> {
    let mut last = None;
    for f in files {
        let turtle = std::fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
        let resp = client
            .load(&LoadRequest {
                turtle,
                graph: graph.clone(),
                base: None,
            })
            .await
            .with_context(|| format!("loading {}", f.display()))?;
        last = Some(resp);
    }
    last.ok_or_else(|| usage("no files given"))
}

fn print_query(resp: &QueryResponse, format: Format) -> Result<(), Failure> {
    match format {
        Format::Tsv => print!("{}", resp.text),
        Format::Json => println!("{}", serde_json::to_string_pretty(resp)?),
    }
    Ok(())
}

async fn run(cli: Cli) -> Result<u8, Failure> {
    if let Command::Serve { addr } = &cli.command {
        let state = Arc::new(AppState::bootstrap()?);
        let listener = tokio::net::TcpListener::bind(addr).await?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        let client = Client::new(format!("http://{}", listener.local_addr()?));
        let server = tokio::spawn(kapps_server::serve(listener, state));
        load_globals(&cli, &client, true).await?;
        server.await.context("server task")??;
        return Ok(0);
    }
    if let Command::Uc1 {
        command: Uc1Command::Generate { out, cycles, seed },
    } = &cli.command
    {
        let cycles = corpus::generate(*seed, *cycles);
        corpus::write_corpus(out, &cycles)?;
        println!("wrote {} cycles to {}", cycles.len(), out.display());
        return Ok(0);
    }

    let client = connect(&cli).await?;
    let validating = matches!(cli.command, Command::Validate { .. });
    load_globals(&cli, &client, !validating).await?;
    let code = match &cli.command {
        Command::Serve { .. } => unreachable!("handled above"),
        Command::Load { files, graph } => {
            let graph = graph.as_deref().map(parse_iri).transpose()?;
            let resp = load_files(&client, files, graph).await?;
            println!("txn {} quads {}", resp.txn, resp.quads);
            0
        }
        Command::Query(q) => {
            if !q.data.is_empty() {
                load_files(&client, &q.data, None).await?;
            }
            let resp = client
                .query(&QueryRequest {
                    query: read_query(&q.query)?,
                    at: q.at.clone(),
                })
                .await?;
            print_query(&resp, q.format)?;
            0
        }
        Command::Validate { data, vendor_compat } => {
            let data = std::fs::read_to_string(data).with_context(|| format!("reading {}", data.display()))?;
            let shapes = if cli.shapes.is_empty() {
                None
            } else {
                let mut all = String::new();
                for s in &cli.shapes {
                    all.push_str(&read_source(s)?);
                    all.push('\n');
                }
                Some(all)
            };
            let resp = client
                .validate(&ValidateRequest {
                    data: Some(data),
                    shapes,
                    vendor_compat: *vendor_compat,
                })
                .await?;
            print!("{}", resp.turtle);
            if resp.conforms {
                0
            } else {
                EXIT_VIOLATION
            }
        }
        Command::Simulate(a) => simulate(&client, a).await?,
        Command::History { command } => history(&client, command).await?,
        Command::Uc1 { command } => uc1(&client, command).await?,
        Command::Dump => {
            print!("{}", client.dump().await?.turtle);
            0
        }
        Command::Discover { class } => {
            let class = class.as_deref().map(parse_iri).transpose()?;
            for d in client.discover(class.as_ref()).await? {
                let resource = d.resource.as_ref().map(|r| r.as_str()).unwrap_or("-");
                println!("{}\t{}\t{}\t{}", d.workflow.as_str(), d.service.as_str(), resource, d.address);
            }
            0
        }
    };
    if let Some(path) = &cli.store_dump {
        let dump = client.dump().await?;
        std::fs::write(path, dump.turtle).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(code)
}

async fn simulate(client: &Client, a: &SimulateArgs) -> Result<u8, Failure> {
    let trigger = match (a.fault_at_txn, a.fault_probability) {
        (Some(t), _) => FaultTrigger::AtTxn(t),
        (None, Some(p)) if (0.0..=1.0).contains(&p) => FaultTrigger::Probability(p),
        (None, Some(p)) => return Err(usage(format!("fault probability {p} is outside [0, 1]"))),
        (None, None) => FaultTrigger::Probability(1.0),
    };
    let cfg = SimConfig {
        width: a.width,
        height: a.height,
        boxes: a.boxes,
        fault: FaultConfig {
            mode: a.fault,
            trigger,
            seed: a.seed,
        },
        seed: a.seed,
        max_ticks: a.max_ticks,
        occupy: a.occupy.clone(),
        safety_observer: a.validate_every_commit,
    };
    let resp = client.simulate(&cfg).await?;
    for line in &resp.report.trace {
        println!("{line}");
    }
    print!("{}", resp.text);
    if let Some(path) = &a.report {
        std::fs::write(path, &resp.text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(if resp.report.safety_violations.is_empty() { 0 } else { EXIT_VIOLATION })
}

async fn history(client: &Client, command: &HistoryCommand) -> Result<u8, Failure> {
    match command {
        HistoryCommand::List => {
            for e in client.history().await?.entries {
                println!(
                    "{}\t{}\t{}\t+{}\t-{}",
                    e.txn,
                    e.timestamp.to_rfc3339(),
                    e.actor.as_str(),
                    e.inserts,
                    e.deletes
                );
            }
        }
        HistoryCommand::At { when, query, format } => match query {
            Some(q) => {
                let resp = client
                    .query(&QueryRequest {
                        query: read_query(q)?,
                        at: Some(when.clone()),
                    })
                    .await?;
                print_query(&resp, *format)?;
            }
            None => print!("{}", client.history_at(when).await?.turtle),
        },
        HistoryCommand::Diff { from, to } => {
            let d = client.history_diff(from, to.as_deref()).await?;
            println!("# txn {} -> {}: {} inserted, {} deleted", d.from, d.to, d.insert_count, d.delete_count);
            println!("# inserted");
            print!("{}", d.inserts);
            println!("# deleted");
            print!("{}", d.deletes);
        }
    }
    Ok(0)
}

async fn uc1(client: &Client, command: &Uc1Command) -> Result<u8, Failure> {
    match command {
        Uc1Command::Run {
            recordings,
            cycles,
            learn_every,
            seed,
            min_ops,
            mode,
            traces,
        } => {
            // The service reads the corpus itself, so hand it an absolute path.
            let recordings = match recordings {
                Some(p) => Some(
                    std::fs::canonicalize(p)
                        .with_context(|| format!("recordings directory {}", p.display()))?
                        .to_string_lossy()
                        .into_owned(),
                ),
                None => None,
            };
            let resp = client
                .uc1_run(&Uc1RunRequest {
                    recordings,
                    cycles: *cycles,
                    learn_every: *learn_every,
                    min_operations: *min_ops,
                    seed: *seed,
                    mode: match mode {
                        Mode::Direct => LoopMode::Direct,
                        Mode::Services => LoopMode::Services,
                    },
                    initial: None,
                })
                .await?;
            print!("{}", resp.text);
            if *traces {
                for c in &resp.report.cycles {
                    print_trace(&client.uc1_trace(&c.operation).await?);
                }
            }
        }
        Uc1Command::Generate { .. } => unreachable!("handled before connecting"),
        Uc1Command::Trace { operation } => {
            print_trace(&client.uc1_trace(&parse_iri(operation)?).await?);
        }
    }
    Ok(0)
}

fn print_trace(t: &TraceResponse) {
    let t = &t.trace;
    let p = &t.parameters;
    println!(
        "{}\tresource {}\tscrew {}\tlabel {}\ttxn {} by {}\ttorque [{}, {}] force {} travel [{}, {}]\trecords {}",
        t.operation.as_str(),
        t.resource.as_str(),
        t.screw.as_str(),
        t.label,
        t.classified_at.0,
        t.classified_by.as_str(),
        p.torque_lower,
        p.torque_upper,
        p.max_axial_force,
        p.min_travel,
        p.max_travel,
        t.records.join(" ")
    );
}

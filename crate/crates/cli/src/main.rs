//! `xannot`: run the link service, inspect a store, move bundles, send
//! captures.

use std::io::Write;
use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use xannot_core::{
    Annotator, CapturePayload, CapturedResource, EntityId, IntegrityReport, InterchangeDocument, PageRegion,
    ResourceKind, SelectorPayload, Store, TextSpan, TimeSegment, WebFragment,
};
use xannot_service::{Client, ClientError, Config, ServiceError, DEFAULT_PORT};

#[derive(Parser)]
#[command(name = "xannot", version, about = "Cross-media annotation link service")]
struct Cli {
    /// Store file.
    #[arg(long, global = true, env = "XANNOT_STORE")]
    store: Option<PathBuf>,
    /// Service port.
    #[arg(long, global = true, env = "XANNOT_PORT", default_value_t = DEFAULT_PORT)]
    port: u16,
    /// Log filter, e.g. `info` or `xannot_service=debug`.
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
    /// Print JSON records instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the REST API until interrupted.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Unlinked selectors older than this many milliseconds are removed at startup.
        #[arg(long, default_value_t = 0)]
        orphan_grace_ms: i64,
    },
    /// Check store integrity; exits 0 only if the store is sound.
    Validate,
    /// Write an interchange bundle.
    Export {
        /// Output file; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Only this document's annotations.
        #[arg(long)]
        document: Option<EntityId>,
    },
    /// Merge an interchange bundle into the store.
    Import { file: PathBuf },
    /// Print stored entities.
    List {
        #[arg(value_enum, default_value_t = Table::All)]
        table: Table,
    },
    /// Post a capture to a running service, like an external-application plug-in.
    CaptureSend(Box<CaptureArgs>),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Table {
    Resources,
    Selectors,
    Links,
    All,
}

#[derive(Args)]
struct CaptureArgs {
    /// API root; defaults to the local service on --port.
    #[arg(long)]
    url: Option<String>,
    #[arg(long)]
    kind: ResourceKind,
    #[arg(long)]
    locator: String,
    #[arg(long)]
    title: Option<String>,
    #[arg(long, default_value = "xannot-cli")]
    source_app: String,
    /// Time segment start (video, audio).
    #[arg(long, requires = "end_ms")]
    start_ms: Option<u64>,
    #[arg(long, requires = "start_ms")]
    end_ms: Option<u64>,
    /// Selected text (pdf text span, web fragment).
    #[arg(long)]
    quote: Option<String>,
    #[arg(long, default_value = "")]
    prefix: String,
    #[arg(long, default_value = "")]
    suffix: String,
    /// Zero-based page (pdf).
    #[arg(long)]
    page: Option<u32>,
    /// Char offset of the quote on the page (pdf text span).
    #[arg(long)]
    char_start: Option<usize>,
    /// Normalized `x,y,w,h` on the page (pdf region).
    #[arg(long, value_delimiter = ',')]
    region: Option<Vec<f64>>,
    /// XPath-like element path (web fragment).
    #[arg(long)]
    element_path: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_new(&cli.log_level).unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}: {e:#}", error_code(&e));
            ExitCode::FAILURE
        }
    }
}

fn error_code(e: &anyhow::Error) -> &str {
    if let Some(e) = e.downcast_ref::<xannot_core::Error>() {
        e.code()
    } else if let Some(e) = e.downcast_ref::<ServiceError>() {
        e.code()
    } else if let Some(e) = e.downcast_ref::<ClientError>() {
        e.code()
    } else if e.downcast_ref::<std::io::Error>().is_some() {
        "IoFailure"
    } else {
        "InvalidArguments"
    }
}

fn store_path(cli: &Cli) -> anyhow::Result<&Path> {
    match &cli.store {
        Some(p) => Ok(p),
        None => bail!("no store given; pass --store or set XANNOT_STORE"),
    }
}

fn open(cli: &Cli) -> anyhow::Result<Annotator> {
    Ok(Annotator::new(Store::open(store_path(cli)?)?))
}

fn run(cli: &Cli) -> anyhow::Result<ExitCode> {
    let mut out = std::io::stdout().lock();
    match &cli.command {
        Command::Serve { host, orphan_grace_ms } => {
            let config =
                Config { host: *host, port: cli.port, store: cli.store.clone(), orphan_grace_ms: *orphan_grace_ms };
            if config.store.is_none() {
                eprintln!("no store given; annotations are kept in memory only");
            }
            xannot_service::run(&config)?;
        }
        Command::Validate => {
            let report = open(cli)?.check_integrity();
            if cli.json {
                writeln!(out, "{}", serde_json::to_string(&report)?)?;
            } else {
                print_report(&mut out, &report)?;
            }
            if !report.ok {
                eprintln!("error: IntegrityViolation");
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Export { out: path, document } => {
            let bytes = open(cli)?.export_bundle(*document)?.to_bytes();
            match path {
                Some(p) => {
                    std::fs::write(p, &bytes).with_context(|| format!("writing {}", p.display()))?;
                    writeln!(out, "{}", p.display())?;
                }
                None => out.write_all(&bytes)?,
            }
        }
        Command::Import { file } => {
            let bytes = std::fs::read(file).with_context(|| format!("reading {}", file.display()))?;
            let doc = InterchangeDocument::parse(&bytes)?;
            let outcome = open(cli)?.import_bundle(&doc)?;
            if cli.json {
                writeln!(out, "{}", serde_json::to_string(&outcome)?)?;
            } else {
                writeln!(out, "resources_created\t{}", outcome.resources_created)?;
                writeln!(out, "resources_reused\t{}", outcome.resources_reused)?;
                writeln!(out, "selectors_created\t{}", outcome.selectors_created)?;
                writeln!(out, "links_created\t{}", outcome.links_created)?;
            }
        }
        Command::List { table } => list(&mut out, &open(cli)?, *table, cli.json)?,
        Command::CaptureSend(args) => {
            let url = args
                .url
                .clone()
                .unwrap_or_else(|| format!("http://127.0.0.1:{}{}", cli.port, xannot_service::API_BASE));
            let receipt = Client::new(url).capture(&capture_payload(args)?)?;
            if cli.json {
                writeln!(out, "{}", serde_json::to_string(&receipt)?)?;
            } else {
                writeln!(out, "resource_id\t{}", receipt.resource_id)?;
                writeln!(out, "selector_id\t{}", receipt.selector_id)?;
                writeln!(out, "resource_created\t{}", receipt.resource_created)?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn print_report(out: &mut impl Write, r: &IntegrityReport) -> std::io::Result<()> {
    for d in &r.dangling_endpoints {
        writeln!(out, "dangling\t{}", serde_json::to_string(d).unwrap_or_default())?;
    }
    for s in &r.orphan_selectors {
        writeln!(out, "orphan_selector\t{s}")?;
    }
    for k in &r.kind_violations {
        writeln!(out, "kind_violation\t{}", serde_json::to_string(k).unwrap_or_default())?;
    }
    for e in &r.invalid_entities {
        writeln!(out, "invalid\t{}", serde_json::to_string(e).unwrap_or_default())?;
    }
    for d in &r.duplicate_locators {
        writeln!(out, "duplicate_locator\t{}", serde_json::to_string(d).unwrap_or_default())?;
    }
    writeln!(out, "{}", if r.ok { "ok" } else { "not ok" })
}

fn list(out: &mut impl Write, a: &Annotator, table: Table, as_json: bool) -> anyhow::Result<()> {
    let doc = a.export_bundle(None)?;
    let want = |t: Table| table == t || table == Table::All;
    if as_json {
        let mut v = serde_json::Map::new();
        if want(Table::Resources) {
            v.insert("resources".into(), json!(doc.resources));
        }
        if want(Table::Selectors) {
            v.insert("selectors".into(), json!(doc.selectors));
        }
        if want(Table::Links) {
            v.insert("links".into(), json!(doc.links));
        }
        writeln!(out, "{}", serde_json::Value::Object(v))?;
        return Ok(());
    }
    if want(Table::Resources) {
        writeln!(out, "id\tkind\tlocator\ttitle")?;
        for r in &doc.resources {
            let locator = match r.kind {
                ResourceKind::Comment => r.comment_body.as_deref().map(|b| format!("{b:?}")).unwrap_or_default(),
                _ => r.locator.clone().unwrap_or_default(),
            };
            writeln!(out, "{}\t{}\t{}\t{}", r.id, r.kind, locator, r.title.as_deref().unwrap_or(""))?;
        }
    }
    if want(Table::Selectors) {
        if table == Table::All {
            writeln!(out)?;
        }
        writeln!(out, "id\tresource\tkind\tpage")?;
        for s in &doc.selectors {
            let page = s.payload.page_index().map(|p| p.to_string()).unwrap_or_default();
            writeln!(out, "{}\t{}\t{}\t{}", s.id, s.resource_id, s.payload.kind(), page)?;
        }
    }
    if want(Table::Links) {
        if table == Table::All {
            writeln!(out)?;
        }
        writeln!(out, "id\tsources\ttargets\tclass")?;
        for l in &doc.links {
            let join = |e: &[xannot_core::Endpoint]| e.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(",");
            let class = serde_json::to_value(l.annotation_class)?;
            writeln!(out, "{}\t{}\t{}\t{}", l.id, join(&l.sources), join(&l.targets), class.as_str().unwrap_or(""))?;
        }
    }
    Ok(())
}

fn capture_payload(args: &CaptureArgs) -> anyhow::Result<CapturePayload> {
    let need_quote = || args.quote.clone().context("--quote is required for this kind");
    let selection = match args.kind {
        ResourceKind::Video | ResourceKind::Audio => match (args.start_ms, args.end_ms) {
            (Some(start_ms), Some(end_ms)) => SelectorPayload::TimeSegment(TimeSegment { start_ms, end_ms }),
            _ => bail!("--start-ms and --end-ms are required for {}", args.kind),
        },
        ResourceKind::WebPage => SelectorPayload::WebFragment(WebFragment {
            exact_quote: need_quote()?,
            prefix: args.prefix.clone(),
            suffix: args.suffix.clone(),
            element_path: args.element_path.clone(),
        }),
        ResourceKind::PdfDocument => {
            let page_index = args.page.context("--page is required for pdf_document")?;
            match &args.region {
                Some(r) => match r[..] {
                    [x, y, w, h] => SelectorPayload::PageRegion(PageRegion { page_index, x, y, w, h }),
                    _ => bail!("--region takes four numbers: x,y,w,h"),
                },
                None => {
                    let exact_quote = need_quote()?;
                    let char_start = args.char_start.context("--char-start is required for a text span")?;
                    SelectorPayload::TextSpan(TextSpan {
                        page_index,
                        char_start,
                        char_end: char_start + exact_quote.chars().count(),
                        exact_quote,
                        prefix: args.prefix.clone(),
                        suffix: args.suffix.clone(),
                    })
                }
            }
        }
        ResourceKind::Image | ResourceKind::Comment => bail!("{} resources take no selection", args.kind),
    };
    Ok(CapturePayload {
        source_app: args.source_app.clone(),
        resource: CapturedResource { kind: args.kind, locator: args.locator.clone(), title: args.title.clone() },
        selection,
        captured_at: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis() as i64)
            .unwrap_or(0),
    })
}

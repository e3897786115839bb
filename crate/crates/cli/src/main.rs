//! `routeplace`: batch analyses, stanza verification and synthesis, the
//! terminal placement dialogue, and the HTTP service.
//!
//! Exit codes: 0 success or pass, 1 failed verification, punted synthesis
//! or infeasible placement, 2 usage, input or parse errors.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context as _;
use clap::{Parser, Subcommand, ValueEnum};
use routeplace_core::disambiguator::{
    Choice, DisambiguationSession, InsertionProblem, Question, SearchMode, SessionState,
};
use routeplace_core::engine::{overlap_census, OverlapKind, OverlapReport};
use routeplace_core::model::{validate_config, Config};
use routeplace_core::parser::{parse_config, parse_stanza_snippet, print_config, ParseError, Snippet};
use routeplace_core::synthesizer::{
    classify_query, run_repair_loop, Fault, FaultyPlugin, GeneratorPlugin, HttpPlugin, LoopOutcome, QueryKind,
    ScriptedFixture, ScriptedPlugin, SynthesisError, SynthesisRequest, DEFAULT_THRESHOLD,
};
use routeplace_core::verifier::{parse_spec, render_feedback, verify_stanza, VerificationResult};
use routeplace_service::{router_with_ui, ServiceConfig, Store};
use serde_json::{json, Value};

#[derive(Debug, Parser)]
#[command(name = "routeplace", version, about = "Verify, synthesize and place route-map stanzas")]
struct Cli {
    /// Output format. `csv` applies to `overlaps` only.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PluginArg {
    Scripted,
    Faulty,
    Http,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FaultArg {
    MultiStanza,
    WrongMetric,
    MatchAll,
}

impl From<FaultArg> for Fault {
    fn from(f: FaultArg) -> Self {
        match f {
            FaultArg::MultiStanza => Fault::MultiStanza,
            FaultArg::WrongMetric => Fault::WrongMetric,
            FaultArg::MatchAll => Fault::MatchAll,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Binary,
    Exhaustive,
}

impl From<ModeArg> for SearchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Binary => SearchMode::Binary,
            ModeArg::Exhaustive => SearchMode::Exhaustive,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a config and list diagnostics. Exits 0 only when clean.
    Parse { file: PathBuf },
    /// Report overlapping rule pairs of every route-map and ACL.
    Overlaps {
        file: PathBuf,
        /// Keep pairs where one rule's match set contains the other's.
        #[arg(long)]
        include_trivial: bool,
    },
    /// Check a one-stanza snippet against a JSON spec. Exits 0 only on pass.
    Verify {
        #[arg(long)]
        snippet: PathBuf,
        #[arg(long)]
        spec: PathBuf,
    },
    /// Run the generate/verify/repair loop for an intent.
    Synthesize {
        /// Config the stanza is meant for; checked for parse errors.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        intent: String,
        #[arg(long, value_enum)]
        plugin: PluginArg,
        /// Scripted answers for the `scripted` and `faulty` plugins.
        #[arg(long)]
        fixtures: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: usize,
        /// Corruption applied by the `faulty` plugin.
        #[arg(long, value_enum, default_value_t = FaultArg::WrongMetric)]
        fault: FaultArg,
        /// Corrupt every attempt instead of only the first.
        #[arg(long)]
        always: bool,
        /// Endpoint for the `http` plugin.
        #[arg(long, env = "ROUTEPLACE_GATEWAY")]
        gateway: Option<String>,
        #[arg(long, default_value_t = 60)]
        timeout_secs: u64,
    },
    /// Place a stanza in a route-map by answering differential questions.
    Disambiguate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        map: String,
        #[arg(long)]
        snippet: PathBuf,
        /// Comma-separated `new`/`existing` (or `1`/`2`) answers; read from
        /// stdin when absent.
        #[arg(long, value_delimiter = ',')]
        answers: Option<Vec<String>>,
        #[arg(long, value_enum, default_value_t = ModeArg::Binary)]
        mode: ModeArg,
        /// Write the final config here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "ROUTEPLACE_ADDR", default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Directory for workspace files; in-memory when absent.
        #[arg(long, env = "ROUTEPLACE_DATA")]
        data: Option<PathBuf>,
        /// Static UI bundle served for non-API paths.
        #[arg(long)]
        ui: Option<PathBuf>,
        /// Fixture file for the `scripted` and `faulty` plugins.
        #[arg(long)]
        fixtures: Option<PathBuf>,
        #[arg(long, env = "ROUTEPLACE_GATEWAY")]
        gateway: Option<String>,
        #[arg(long, default_value_t = 60)]
        timeout_secs: u64,
    },
}

/// An error with an exit code and a stable JSON shape.
#[derive(Debug)]
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
    details: Option<Value>,
}

impl Failure {
    fn new(code: u8, kind: &'static str, message: impl Into<String>) -> Self {
        Self { code, kind, message: message.into(), details: None }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self::new(2, "usage", message)
    }

    fn with_details(mut self, details: Value) -> Self {
        self.details = Some(details);
        self
    }

    fn to_json(&self) -> Value {
        let mut v = json!({ "error": self.kind, "message": self.message, "exitCode": self.code });
        if let Some(d) = &self.details {
            v["details"] = d.clone();
        }
        v
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::new(2, "io", format!("{}: {e}", path.display())))
}

fn parse_failure(path: &Path, errors: &[ParseError]) -> Failure {
    let mut message = format!("{}: {} parse error(s)", path.display(), errors.len());
    for e in errors {
        message.push_str(&format!("\n  {e}"));
    }
    Failure::new(2, "parse", message).with_details(json!(errors))
}

fn load_config(path: &Path) -> Result<Config, Failure> {
    parse_config(&read(path)?).map_err(|e| parse_failure(path, &e))
}

fn load_snippet(path: &Path) -> Result<Snippet, Failure> {
    parse_stanza_snippet(&read(path)?).map_err(|e| parse_failure(path, &e))
}

fn load_fixtures(path: &Path) -> Result<Vec<ScriptedFixture>, Failure> {
    serde_json::from_str(&read(path)?).map_err(|e| Failure::new(2, "parse", format!("{}: {e}", path.display())))
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json value serializes"));
}

/// Rejects `--format csv` for commands without a table.
fn no_csv(format: Format, command: &str) -> Result<(), Failure> {
    if format == Format::Csv {
        return Err(Failure::usage(format!("--format csv is only supported by `overlaps`, not `{command}`")));
    }
    Ok(())
}

fn cmd_parse(format: Format, file: &Path) -> anyhow::Result<ExitCode> {
    no_csv(format, "parse")?;
    let text = read(file)?;
    let (config, errors) = match parse_config(&text) {
        Ok(c) => (Some(c), Vec::new()),
        Err(e) => (None, e),
    };
    let diagnostics = config.as_ref().map(validate_config).unwrap_or_default();
    let clean = errors.is_empty() && diagnostics.is_empty();
    match format {
        Format::Json => {
            let mut v = json!({ "ok": clean, "errors": errors, "diagnostics": diagnostics });
            if let Some(c) = &config {
                v["summary"] = summary(c);
            }
            print_json(&v);
        }
        _ => {
            for e in &errors {
                println!("{}:{e}", file.display());
            }
            for d in &diagnostics {
                println!("{}: {d}", file.display());
            }
            if let (Some(c), true) = (&config, clean) {
                let s = summary(c);
                println!(
                    "ok: {} route-maps, {} prefix-lists, {} community-lists, {} as-path lists, {} ACLs",
                    s["routeMaps"], s["prefixLists"], s["communityLists"], s["asPathLists"], s["acls"]
                );
            }
        }
    }
    Ok(if clean { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn summary(c: &Config) -> Value {
    json!({
        "routeMaps": c.route_maps.len(),
        "prefixLists": c.prefix_lists.len(),
        "communityLists": c.community_lists.len(),
        "asPathLists": c.as_path_lists.len(),
        "acls": c.acls.len(),
    })
}

fn overlap_text(report: &OverlapReport, include_trivial: bool) -> String {
    let mut out = String::new();
    for e in &report.entries {
        let witness = serde_json::to_string(&e.witness).expect("witness serializes");
        out.push_str(&format!(
            "{} {} {}: {}{}\n  witness {witness}\n",
            e.policy,
            e.seq_a,
            e.seq_b,
            e.kind,
            if e.trivial_subset { " (trivial subset)" } else { "" }
        ));
    }
    for p in &report.inconclusive {
        out.push_str(&format!("{} {} {}: inconclusive\n", p.policy, p.seq_a, p.seq_b));
    }
    out.push_str(&format!(
        "{} conflicting, {} overlapping pair(s); trivial-subset pairs {}\n",
        report.count(OverlapKind::Conflicting),
        report.count(OverlapKind::Overlap),
        if include_trivial { "included" } else { "excluded" }
    ));
    out
}

fn cmd_overlaps(format: Format, file: &Path, include_trivial: bool) -> anyhow::Result<ExitCode> {
    let config = load_config(file)?;
    let full = overlap_census(&config).map_err(|e| Failure::new(1, "analysis", e.to_string()))?;
    let report = if include_trivial { full } else { full.without_trivial() };
    match format {
        Format::Json => {
            let mut v = serde_json::to_value(&report).expect("report serializes");
            v["includeTrivial"] = json!(include_trivial);
            v["counts"] = json!({
                "conflicting": report.count(OverlapKind::Conflicting),
                "overlap": report.count(OverlapKind::Overlap),
            });
            print_json(&v);
        }
        Format::Csv => print!("{}", report.to_csv().context("writing csv")?),
        Format::Text => print!("{}", overlap_text(&report, include_trivial)),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(format: Format, snippet: &Path, spec: &Path) -> anyhow::Result<ExitCode> {
    no_csv(format, "verify")?;
    let stanza = load_snippet(snippet)?;
    let spec_text = read(spec)?;
    let spec = parse_spec(&spec_text).map_err(|e| Failure::new(2, "spec", format!("{}: {e}", spec.display())))?;
    let result = verify_stanza(&stanza, &spec).map_err(|e| Failure::new(2, "spec", e.to_string()))?;
    let feedback = render_feedback(&result).ok();
    match format {
        Format::Json => print_json(&json!({ "result": result, "feedback": feedback })),
        _ => match &result {
            VerificationResult::Pass => println!("pass"),
            VerificationResult::Fail { check, .. } => {
                println!(
                    "fail: {}",
                    serde_json::to_value(check).expect("check serializes").as_str().unwrap_or_default()
                );
                print!("{}", feedback.unwrap_or_default());
            }
            VerificationResult::Inconclusive { reason } => println!("inconclusive: {reason}"),
        },
    }
    Ok(if result.is_pass() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

#[allow(clippy::too_many_arguments)]
fn cmd_synthesize(
    format: Format,
    config: Option<&Path>,
    intent: &str,
    plugin: PluginArg,
    fixtures: Option<&Path>,
    threshold: usize,
    fault: Fault,
    always: bool,
    gateway: Option<&str>,
    timeout: Duration,
) -> anyhow::Result<ExitCode> {
    no_csv(format, "synthesize")?;
    if let Some(path) = config {
        load_config(path)?;
    }
    let scripted = || -> Result<ScriptedPlugin, Failure> {
        let path =
            fixtures.ok_or_else(|| Failure::usage("--fixtures is required for the scripted and faulty plugins"))?;
        Ok(ScriptedPlugin::new(load_fixtures(path)?))
    };
    let generator: Box<dyn GeneratorPlugin> = match plugin {
        PluginArg::Scripted => Box::new(scripted()?),
        PluginArg::Faulty if always => Box::new(FaultyPlugin::always(scripted()?, fault)),
        PluginArg::Faulty => Box::new(FaultyPlugin::first_attempt(scripted()?, fault)),
        PluginArg::Http => {
            let endpoint = gateway.ok_or_else(|| Failure::usage("--gateway is required for the http plugin"))?;
            Box::new(HttpPlugin::new(endpoint, timeout).map_err(|e| Failure::new(1, "gateway", e.to_string()))?)
        }
    };
    let kind = generator.classify(intent).unwrap_or_else(|| classify_query(intent));
    let req = SynthesisRequest::new(intent, kind);
    let outcome = run_repair_loop(&req, generator.as_ref(), threshold).map_err(|e| match e {
        SynthesisError::ZeroThreshold | SynthesisError::UnsupportedKind(_) => Failure::usage(e.to_string()),
        SynthesisError::InvalidSpec(_) => Failure::new(1, "spec", e.to_string()),
    })?;
    match format {
        Format::Json => {
            let mut v = serde_json::to_value(&outcome).expect("outcome serializes");
            v["kind"] = json!(kind);
            print_json(&v);
        }
        _ => print!("{}", outcome_text(kind, &outcome)),
    }
    Ok(if outcome.is_verified() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn outcome_text(kind: QueryKind, outcome: &LoopOutcome) -> String {
    let mut out =
        format!("kind: {}\n", serde_json::to_value(kind).expect("kind serializes").as_str().unwrap_or_default());
    let history = match outcome {
        LoopOutcome::Verified { snippet, spec, attempts, history } => {
            out.push_str(&format!(
                "verified after {attempts} attempt(s)\nspec: {}\n",
                serde_json::to_string(spec).expect("spec serializes")
            ));
            out.push_str(snippet);
            history
        }
        LoopOutcome::Punted { attempts, last_feedback, history, .. } => {
            out.push_str(&format!("punted after {attempts} attempt(s)\nlast feedback:\n{last_feedback}"));
            history
        }
    };
    for (i, a) in history.iter().enumerate() {
        out.push_str(&format!("--- rejected attempt {}\n{}--- feedback\n{}", i + 1, a.attempt, a.feedback));
    }
    out
}

/// Where answers come from: a fixed script or the terminal.
enum Answers {
    Scripted(std::vec::IntoIter<Choice>),
    Stdin(io::StdinLock<'static>),
}

impl Answers {
    fn next(&mut self, format: Format, q: &Question) -> Result<Choice, Failure> {
        match self {
            Answers::Scripted(it) => {
                let c = it.next().ok_or_else(|| {
                    Failure::usage(format!("no answer given for the question on stanza {}", q.seq))
                        .with_details(json!({ "question": q }))
                })?;
                if format == Format::Text {
                    eprintln!("> {}", choice_word(c));
                }
                Ok(c)
            }
            Answers::Stdin(lock) => loop {
                if format == Format::Text {
                    eprint!("Choose 1 (new) or 2 (existing): ");
                    let _ = io::stderr().flush();
                }
                let mut line = String::new();
                let n = lock.read_line(&mut line).map_err(|e| Failure::new(2, "io", format!("stdin: {e}")))?;
                if n == 0 {
                    return Err(Failure::usage("stdin closed before the placement was decided"));
                }
                match line.parse::<Choice>() {
                    Ok(c) => return Ok(c),
                    Err(e) => eprintln!("{e}"),
                }
            },
        }
    }

    fn leftover(&self) -> usize {
        match self {
            Answers::Scripted(it) => it.len(),
            Answers::Stdin(_) => 0,
        }
    }
}

fn choice_word(c: Choice) -> &'static str {
    match c {
        Choice::New => "new",
        Choice::Existing => "existing",
    }
}

fn parse_answers(raw: &[String]) -> Result<Vec<Choice>, Failure> {
    raw.iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<Choice>().map_err(|e| Failure::usage(format!("--answers: {e}"))))
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn cmd_disambiguate(
    format: Format,
    config: &Path,
    map: &str,
    snippet: &Path,
    answers: Option<&[String]>,
    mode: SearchMode,
    out: Option<&Path>,
) -> anyhow::Result<ExitCode> {
    no_csv(format, "disambiguate")?;
    let base = load_config(config)?;
    let stanza = load_snippet(snippet)?;
    let insertion =
        |e: routeplace_core::disambiguator::DisambiguationError| Failure::new(2, "insertion", e.to_string());
    let problem = InsertionProblem::new(&base, map, &stanza).map_err(insertion)?;
    let mut session = DisambiguationSession::start(problem, mode).map_err(insertion)?;
    let mut source = match answers {
        Some(raw) => Answers::Scripted(parse_answers(raw)?.into_iter()),
        None => Answers::Stdin(io::stdin().lock()),
    };

    if format == Format::Text {
        eprintln!("{} stanza(s) interact with the new one: {:?}", session.chain.len(), session.chain.seqs());
    }
    let mut asked = Vec::new();
    while let Some(q) = session.pending().cloned() {
        match format {
            Format::Json => eprintln!("{}", json!({ "question": q })),
            _ => eprint!("\nQuestion {} (stanza {}):\n{}", asked.len() + 1, q.seq, q.render()),
        }
        let choice = source.next(format, &q)?;
        session.answer(choice).map_err(insertion)?;
        asked.push(q);
    }
    let unused = source.leftover();
    if unused > 0 {
        return Err(Failure::usage(format!("{unused} answer(s) left over after the placement was decided")).into());
    }

    let answers_json = json!(session.answers);
    match &session.state {
        SessionState::Infeasible { evidence } => {
            let message = format!(
                "no placement satisfies the answers: the new stanza would have to precede stanza {} \
                 yet follow the later stanza {}",
                evidence.new_seq, evidence.existing_seq
            );
            Err(Failure::new(1, "infeasible", message)
                .with_details(json!({ "evidence": evidence, "answers": answers_json }))
                .into())
        }
        SessionState::Done { position, slot, note } => {
            let result = session.result().expect("session is done").map_err(insertion)?;
            let text = print_config(&result);
            if let Some(path) = out {
                std::fs::write(path, &text).map_err(|e| Failure::new(2, "io", format!("{}: {e}", path.display())))?;
            }
            match format {
                Format::Json => {
                    let mut v = json!({
                        "chain": session.chain.seqs(),
                        "questions": asked,
                        "answers": answers_json,
                        "position": position,
                        "slot": slot,
                        "note": note,
                    });
                    if out.is_none() {
                        v["config"] = json!(text);
                    }
                    print_json(&v);
                }
                _ => {
                    if let Some(n) = note {
                        eprintln!("{n}");
                    }
                    eprintln!("inserted at index {slot} of {map} after {} question(s)", session.questions_asked());
                    if out.is_none() {
                        print!("{text}");
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        SessionState::Pending { .. } => unreachable!("loop runs until the session finishes"),
    }
}

fn cmd_serve(
    format: Format,
    addr: SocketAddr,
    data: Option<&Path>,
    ui: Option<PathBuf>,
    fixtures: Option<&Path>,
    gateway: Option<String>,
    timeout: Duration,
) -> anyhow::Result<ExitCode> {
    no_csv(format, "serve")?;
    let store = match data {
        Some(dir) => Store::open(dir).map_err(|e| Failure::new(2, "store", e.to_string()))?,
        None => Store::in_memory(),
    };
    let config = ServiceConfig {
        fixtures: fixtures.map(load_fixtures).transpose()?.unwrap_or_default(),
        gateway,
        gateway_timeout: timeout,
    };
    let app = router_with_ui(store, config, ui);
    let rt = tokio::runtime::Runtime::new().context("starting the async runtime")?;
    rt.block_on(async {
        let listener = routeplace_service::bind(addr).await.with_context(|| format!("binding {addr}"))?;
        let bound = listener.local_addr().context("reading the bound address")?;
        match format {
            Format::Json => eprintln!("{}", json!({ "listening": bound.to_string() })),
            _ => eprintln!("listening on http://{bound}"),
        }
        routeplace_service::serve(listener, app).await.with_context(|| format!("serving on {bound}"))
    })?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let f = cli.format;
    match cli.command {
        Command::Parse { file } => cmd_parse(f, &file),
        Command::Overlaps { file, include_trivial } => cmd_overlaps(f, &file, include_trivial),
        Command::Verify { snippet, spec } => cmd_verify(f, &snippet, &spec),
        Command::Synthesize { config, intent, plugin, fixtures, threshold, fault, always, gateway, timeout_secs } => {
            cmd_synthesize(
                f,
                config.as_deref(),
                &intent,
                plugin,
                fixtures.as_deref(),
                threshold,
                fault.into(),
                always,
                gateway.as_deref(),
                Duration::from_secs(timeout_secs),
            )
        }
        Command::Disambiguate { config, map, snippet, answers, mode, out } => {
            cmd_disambiguate(f, &config, &map, &snippet, answers.as_deref(), mode.into(), out.as_deref())
        }
        Command::Serve { addr, data, ui, fixtures, gateway, timeout_secs } => {
            cmd_serve(f, addr, data.as_deref(), ui, fixtures.as_deref(), gateway, Duration::from_secs(timeout_secs))
        }
    }
}

/// Whether the raw arguments ask for JSON, for errors raised before or
/// while clap runs.
fn wants_json(args: &[String]) -> bool {
    args.iter()
        .enumerate()
        .any(|(i, a)| a == "--format=json" || (a == "--format" && args.get(i + 1).is_some_and(|v| v == "json")))
}

fn report(json_mode: bool, failure: &Failure) {
    if json_mode {
        eprintln!("{}", failure.to_json());
    } else {
        eprintln!("error: {}", failure.message);
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let json_mode = wants_json(&args);
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) if json_mode => {
            report(true, &Failure::usage(e.render().to_string().trim_end()));
            return ExitCode::from(2);
        }
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => match e.downcast::<Failure>() {
            Ok(failure) => {
                report(json_mode, &failure);
                ExitCode::from(failure.code)
            }
            Err(other) => {
                report(json_mode, &Failure::new(1, "internal", format!("{other:#}")));
                ExitCode::from(1)
            }
        },
    }
}

//! Generator plug-ins and the bounded generate, verify, repair loop.
//!
//! A [`GeneratorPlugin`] turns a [`SynthesisRequest`] into stanza text and
//! into a JSON spec. [`run_repair_loop`] asks for that spec once, then keeps
//! asking for stanzas until one verifies or the attempt budget runs out.

use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Action, SetClause};
use crate::parser::{parse_stanza_snippet, ParseErrorKind, Snippet};
use crate::verifier::{parse_spec, render_feedback, verify_stanza, JsonSpec, VerificationResult};

pub const DEFAULT_THRESHOLD: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum QueryKind {
    RouteMap,
    Acl,
    Unknown,
}

impl QueryKind {
    /// Static prompt template handed to remote generators.
    pub fn prompt_template(self) -> &'static str {
        match self {
            QueryKind::RouteMap => include_str!("../prompts/route_map.txt"),
            QueryKind::Acl => include_str!("../prompts/acl.txt"),
            QueryKind::Unknown => "",
        }
    }
}

const ROUTE_WORDS: &[&str] = &[
    "route",
    "routes",
    "route-map",
    "bgp",
    "community",
    "communities",
    "prefix",
    "prefixes",
    "med",
    "metric",
    "local-preference",
    "localpref",
    "as-path",
    "asn",
    "advertise",
    "advertised",
    "announce",
    "next-hop",
    "weight",
];
const ACL_ACTIONS: &[&str] =
    &["permit", "permits", "deny", "denies", "block", "blocks", "allow", "allows", "drop", "filter"];
const ACL_WORDS: &[&str] =
    &["tcp", "udp", "icmp", "ip", "port", "ports", "host", "hosts", "packet", "packets", "traffic", "acl"];

/// Keyword heuristic. Route-map vocabulary wins over packet vocabulary; an
/// ACL needs both an action verb and a protocol/port/host word.
pub fn classify_query(intent: &str) -> QueryKind {
    let lower = intent.to_lowercase();
    let words: Vec<&str> =
        lower.split(|c: char| !(c.is_ascii_alphanumeric() || c == '-')).filter(|w| !w.is_empty()).collect();
    let has = |set: &[&str]| words.iter().any(|w| set.contains(w));
    if has(ROUTE_WORDS) || lower.contains("local preference") || lower.contains("as path") {
        QueryKind::RouteMap
    } else if has(ACL_ACTIONS) && has(ACL_WORDS) {
        QueryKind::Acl
    } else {
        QueryKind::Unknown
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    pub attempt: String,
    pub feedback: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthesisRequest {
    pub intent: String,
    pub kind: QueryKind,
    #[serde(default)]
    pub history: Vec<Attempt>,
}

impl SynthesisRequest {
    pub fn new(intent: impl Into<String>, kind: QueryKind) -> Self {
        Self { intent: intent.into(), kind, history: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum PluginError {
    #[error("generator transport failure: {0}")]
    Transport(String),
    #[error("no fixture matches intent `{0}`")]
    NoFixture(String),
}

/// The generator seam. Implementations must be deterministic for a given
/// request and usable from several threads.
pub trait GeneratorPlugin: Send + Sync {
    fn generate_snippet(&self, req: &SynthesisRequest) -> Result<String, PluginError>;
    fn generate_spec(&self, req: &SynthesisRequest) -> Result<String, PluginError>;
    /// Overrides [`classify_query`] when `Some`.
    fn classify(&self, _intent: &str) -> Option<QueryKind> {
        None
    }
}

/// One entry of a scripted fixture file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedFixture {
    /// Substring of the intent this entry answers.
    #[serde(rename = "match")]
    pub pattern: String,
    pub snippet: String,
    pub spec: serde_json::Value,
}

/// Replays fixture answers; the first entry whose `match` occurs in the
/// intent wins.
#[derive(Debug, Clone, Default)]
pub struct ScriptedPlugin {
    pub fixtures: Vec<ScriptedFixture>,
}

impl ScriptedPlugin {
    pub fn new(fixtures: Vec<ScriptedFixture>) -> Self {
        Self { fixtures }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        Ok(Self::new(serde_json::from_str(text)?))
    }

    fn lookup(&self, intent: &str) -> Result<&ScriptedFixture, PluginError> {
        self.fixtures.iter().find(|f| intent.contains(&f.pattern)).ok_or_else(|| PluginError::NoFixture(intent.into()))
    }
}

impl GeneratorPlugin for ScriptedPlugin {
    fn generate_snippet(&self, req: &SynthesisRequest) -> Result<String, PluginError> {
        Ok(self.lookup(&req.intent)?.snippet.clone())
    }

    fn generate_spec(&self, req: &SynthesisRequest) -> Result<String, PluginError> {
        Ok(self.lookup(&req.intent)?.spec.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Emit the stanza twice.
    MultiStanza,
    /// Bump (or add) the metric.
    WrongMetric,
    /// Drop all match lines.
    MatchAll,
}

/// Wraps another plugin and corrupts its stanza on the first attempt, or on
/// every attempt when `always` is set.
pub struct FaultyPlugin<P> {
    pub inner: P,
    pub fault: Fault,
    pub always: bool,
}

impl<P> FaultyPlugin<P> {
    pub fn first_attempt(inner: P, fault: Fault) -> Self {
        Self { inner, fault, always: false }
    }

    pub fn always(inner: P, fault: Fault) -> Self {
        Self { inner, fault, always: true }
    }
}

/// Applies `fault` to a well-formed snippet; anything unparsable is
/// returned as is.
pub fn inject_fault(text: &str, fault: Fault) -> String {
    let Ok(mut s) = parse_stanza_snippet(text) else { return text.to_string() };
    match fault {
        Fault::MultiStanza => {
            let mut second = s.stanza.clone();
            second.seq += 10;
            let mut c = s.to_config();
            c.route_maps.get_mut(&s.map_name).expect("snippet map").stanzas.push(second);
            return crate::parser::print_config(&c);
        }
        Fault::WrongMetric => {
            let mut found = false;
            for set in &mut s.stanza.sets {
                if let SetClause::Metric(m) = set {
                    *m = m.wrapping_add(1);
                    found = true;
                }
            }
            if !found {
                s.stanza.sets.push(SetClause::Metric(1));
            }
            if s.stanza.action == Action::Deny {
                s.stanza.action = Action::Permit;
            }
        }
        Fault::MatchAll => {
            s.stanza.matches.clear();
            s.lists = Default::default();
        }
    }
    s.to_string()
}

impl<P: GeneratorPlugin> GeneratorPlugin for FaultyPlugin<P> {
    fn generate_snippet(&self, req: &SynthesisRequest) -> Result<String, PluginError> {
        let text = self.inner.generate_snippet(req)?;
        Ok(if self.always || req.history.is_empty() { inject_fault(&text, self.fault) } else { text })
    }

    fn generate_spec(&self, req: &SynthesisRequest) -> Result<String, PluginError> {
        self.inner.generate_spec(req)
    }

    fn classify(&self, intent: &str) -> Option<QueryKind> {
        self.inner.classify(intent)
    }
}

/// What the http plugin asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Want {
    Snippet,
    Spec,
}

/// Request body posted by [`HttpPlugin`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GatewayRequest<'a> {
    pub want: Want,
    pub intent: &'a str,
    pub kind: QueryKind,
    pub history: &'a [Attempt],
    pub prompt_template: &'a str,
}

/// Reply body: `{"snippet": "..."}` or `{"spec": {...}}` (a JSON string
/// holding the JSON spec is accepted too).
#[derive(Debug, Clone, Default, Deserialize)]
struct GatewayReply {
    snippet: Option<String>,
    spec: Option<serde_json::Value>,
}

/// Posts requests to an external generator gateway. No retries of its own.
pub struct HttpPlugin {
    pub endpoint: String,
    client: reqwest::blocking::Client,
}

impl HttpPlugin {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Result<Self, PluginError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| PluginError::Transport(e.to_string()))?;
        Ok(Self { endpoint: endpoint.into(), client })
    }

    fn call(&self, want: Want, req: &SynthesisRequest) -> Result<GatewayReply, PluginError> {
        let body = GatewayRequest {
            want,
            intent: &req.intent,
            kind: req.kind,
            history: &req.history,
            prompt_template: req.kind.prompt_template(),
        };
        let transport = |e: reqwest::Error| PluginError::Transport(e.to_string());
        self.client
            .post(&self.endpoint)
            .json(&body)
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(transport)?
            .json::<GatewayReply>()
            .map_err(transport)
    }
}

impl GeneratorPlugin for HttpPlugin {
    fn generate_snippet(&self, req: &SynthesisRequest) -> Result<String, PluginError> {
        self.call(Want::Snippet, req)?
            .snippet
            .ok_or_else(|| PluginError::Transport("gateway reply has no `snippet`".into()))
    }

    fn generate_spec(&self, req: &SynthesisRequest) -> Result<String, PluginError> {
        match self.call(Want::Spec, req)?.spec {
            Some(serde_json::Value::String(s)) => Ok(s),
            Some(v) => Ok(v.to_string()),
            None => Err(PluginError::Transport("gateway reply has no `spec`".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "status")]
pub enum LoopOutcome {
    #[serde(rename_all = "camelCase")]
    Verified { snippet: String, spec: JsonSpec, attempts: usize, history: Vec<Attempt> },
    #[serde(rename_all = "camelCase")]
    Punted { attempts: usize, last_feedback: String, spec: Option<JsonSpec>, history: Vec<Attempt> },
}

impl LoopOutcome {
    pub fn attempts(&self) -> usize {
        match self {
            LoopOutcome::Verified { attempts, .. } | LoopOutcome::Punted { attempts, .. } => *attempts,
        }
    }

    pub fn is_verified(&self) -> bool {
        matches!(self, LoopOutcome::Verified { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthesisError {
    #[error("threshold must be at least 1")]
    ZeroThreshold,
    #[error("only route-map stanzas can be synthesized and verified (query kind {0:?})")]
    UnsupportedKind(QueryKind),
    #[error("generator returned an invalid spec: {0}")]
    InvalidSpec(String),
}

/// Feedback for a response that is not a single well-formed stanza.
pub fn structural_feedback(errors: &[crate::parser::ParseError]) -> String {
    if let Some(found) = errors.iter().find_map(|e| match e.kind {
        ParseErrorKind::MultipleStanzas { found } => Some(found),
        _ => None,
    }) {
        return format!(
            "The response contains {found} route-map stanzas. Regenerate with only one stanza and the lists it uses.\n"
        );
    }
    let mut out = String::from("The response could not be parsed:\n");
    for e in errors {
        let _ = writeln!(out, "line {}: {}", e.span.line, e.message);
    }
    out.push_str("Fix the stanza and output it again.\n");
    out
}

fn with_retry<T>(mut call: impl FnMut() -> Result<T, PluginError>) -> Result<T, PluginError> {
    call().or_else(|_| call())
}

/// Runs the repair loop. The JSON spec is generated once and stays fixed; each
/// snippet generator call counts as one attempt, transport failures
/// included, and a second consecutive transport failure punts.
pub fn run_repair_loop(
    req: &SynthesisRequest,
    plugin: &dyn GeneratorPlugin,
    threshold: usize,
) -> Result<LoopOutcome, SynthesisError> {
    if threshold == 0 {
        return Err(SynthesisError::ZeroThreshold);
    }
    if req.kind != QueryKind::RouteMap {
        return Err(SynthesisError::UnsupportedKind(req.kind));
    }
    let mut history = req.history.clone();
    let spec_text = match with_retry(|| plugin.generate_spec(req)) {
        Ok(t) => t,
        Err(e) => return Ok(LoopOutcome::Punted { attempts: 0, last_feedback: e.to_string(), spec: None, history }),
    };
    let spec = parse_spec(&spec_text).map_err(|e| SynthesisError::InvalidSpec(e.to_string()))?;

    let mut attempts = 0;
    let mut last_feedback = String::new();
    let mut transport_failures = 0;
    while attempts < threshold {
        attempts += 1;
        let current = SynthesisRequest { intent: req.intent.clone(), kind: req.kind, history: history.clone() };
        let text = match plugin.generate_snippet(&current) {
            Ok(t) => {
                transport_failures = 0;
                t
            }
            Err(e) => {
                last_feedback = e.to_string();
                transport_failures += 1;
                if transport_failures >= 2 {
                    break;
                }
                continue;
            }
        };
        let feedback = match parse_stanza_snippet(&text) {
            Err(errors) => structural_feedback(&errors),
            Ok(snippet) => match check(&snippet, &spec) {
                None => return Ok(LoopOutcome::Verified { snippet: text, spec, attempts, history }),
                Some(f) => f,
            },
        };
        history.push(Attempt { attempt: text, feedback: feedback.clone() });
        last_feedback = feedback;
    }
    Ok(LoopOutcome::Punted { attempts, last_feedback, spec: Some(spec), history })
}

/// `None` on pass, otherwise the feedback text.
fn check(snippet: &Snippet, spec: &JsonSpec) -> Option<String> {
    match verify_stanza(snippet, spec) {
        Ok(VerificationResult::Pass) => None,
        Ok(r @ VerificationResult::Fail { .. }) => Some(render_feedback(&r).expect("failure")),
        Ok(VerificationResult::Inconclusive { reason }) => {
            Some(format!("The stanza could not be checked: {reason}\nSimplify the stanza and output it again.\n"))
        }
        Err(e) => Some(format!("The stanza is invalid: {e}\nFix the stanza and output it again.\n")),
    }
}

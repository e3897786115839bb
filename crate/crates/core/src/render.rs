//! Attribute-per-line text rendering of routes and verdicts, used in
//! questions, feedback and CLI output.

use std::fmt::Write as _;

use crate::engine::Verdict;
use crate::model::{Action, Route};

fn as_path_text(path: &[u32]) -> String {
    if path.is_empty() {
        return "[]".to_string();
    }
    let asns: Vec<String> = path.iter().map(ToString::to_string).collect();
    format!("[{{\"asns\": [{}], \"confederation\": false}}]", asns.join(", "))
}

/// One attribute per line, each line newline-terminated.
pub fn render_route(r: &Route) -> String {
    let comms: Vec<String> = r.communities.iter().map(|c| format!("\"{c}\"")).collect();
    let mut out = String::new();
    let _ = writeln!(out, "Network: {}", r.network);
    let _ = writeln!(out, "AS Path: {}", as_path_text(&r.as_path));
    let _ = writeln!(out, "Communities: [{}]", comms.join(", "));
    let _ = writeln!(out, "Local Preference: {}", r.local_pref);
    let _ = writeln!(out, "Metric: {}", r.med);
    let _ = writeln!(out, "Next Hop IP: {}", r.next_hop);
    let _ = writeln!(out, "Tag: {}", r.tag);
    let _ = writeln!(out, "Weight: {}", r.weight);
    out
}

/// `ACTION: deny`, or `ACTION: permit` followed by the output route.
pub fn render_verdict(v: &Verdict) -> String {
    match (v.action, &v.output_route) {
        (Action::Permit, Some(r)) => format!("ACTION: permit\n{}", render_route(r)),
        _ => "ACTION: deny\n".to_string(),
    }
}

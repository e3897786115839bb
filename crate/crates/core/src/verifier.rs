//! JSON behavioral specs for a single stanza, the stanza-versus-spec check
//! and the feedback text sent back to a generator.
//!
//! Spec format:
//!
//! ```json
//! {"permit": true, "prefix": ["100.0.0.0/16:16-23"], "community": "/_300:3_/", "set": {"metric": 55}}
//! ```
//!
//! Optional input fields: `asPath` (one restricted regex atom), and
//! `localPref`, `med`, `tag`, `weight` in interval notation (`"300"`,
//! `"100-200"`, `"1,5-9"`, or a bare number). `set` accepts `metric`,
//! `local-preference`, `next-hop`, `weight`, `tag` and `community`
//! (`"A:B C:D"` replaces, a trailing `additive` adds).

use std::collections::BTreeSet;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{
    self, differs, search_route_policies, space_communities, CommunityOp, EngineError, Outcome, SearchOutcome,
    Transform,
};
use crate::model::*;
use crate::parser::Snippet;
use crate::render::render_route;
use crate::symbolic::*;
use crate::ScalarSet;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntervalText {
    Number(u32),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<u32>,
    #[serde(default, rename = "local-preference", alias = "localPref", skip_serializing_if = "Option::is_none")]
    pub local_pref: Option<u32>,
    #[serde(default, rename = "next-hop", alias = "nextHop", skip_serializing_if = "Option::is_none")]
    pub next_hop: Option<Ipv4Addr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub community: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct JsonSpec {
    pub permit: bool,
    #[serde(default)]
    pub prefix: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub community: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub as_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_pref: Option<IntervalText>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub med: Option<IntervalText>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<IntervalText>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<IntervalText>,
    #[serde(default)]
    pub set: SetSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("spec field `{path}`: {message}")]
pub struct SpecParseError {
    /// Dotted field path, e.g. `prefix[0]` or `set.metric`.
    pub path: String,
    pub message: String,
}

fn spec_err(path: impl Into<String>, message: impl Into<String>) -> SpecParseError {
    SpecParseError { path: path.into(), message: message.into() }
}

/// Parses and checks a spec; field paths are reported for both JSON shape
/// errors and invalid values.
pub fn parse_spec(text: &str) -> Result<JsonSpec, SpecParseError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let spec: JsonSpec = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        spec_err(if path == "." { String::new() } else { path }, e.into_inner().to_string())
    })?;
    spec_to_constraints(&spec)?;
    expected_outcome(&spec)?;
    Ok(spec)
}

fn strip_slashes(s: &str) -> &str {
    let t = s.trim();
    t.strip_prefix('/').and_then(|x| x.strip_suffix('/')).unwrap_or(t)
}

/// `"N"`, `"A-B"` or comma-separated unions of those.
pub fn parse_intervals(text: &str) -> Option<ScalarSet> {
    let mut ranges = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        let (lo, hi) = match part.split_once('-') {
            Some((a, b)) => (a.trim().parse().ok()?, b.trim().parse().ok()?),
            None => {
                let v = part.parse().ok()?;
                (v, v)
            }
        };
        if lo > hi {
            return None;
        }
        ranges.push((lo, hi));
    }
    Some(ScalarSet::from_ranges(ranges))
}

fn communities_field(path: &str, text: &str) -> Result<BTreeSet<Community>, SpecParseError> {
    let t = strip_slashes(text);
    if let Ok(CommunityMatcher::Expanded(c)) = CommunityMatcher::parse_expanded(t) {
        return Ok(BTreeSet::from([c]));
    }
    let set = t
        .split_whitespace()
        .map(|w| w.parse::<Community>())
        .collect::<Result<BTreeSet<_>, _>>()
        .map_err(|e| spec_err(path, e.to_string()))?;
    if set.is_empty() {
        return Err(spec_err(path, "expected `_A:B_` or a list of communities"));
    }
    Ok(set)
}

/// The input routes the JSON spec describes.
pub fn spec_to_constraints(spec: &JsonSpec) -> Result<RouteConstraints, SpecParseError> {
    let mut rc = RouteConstraints::full();
    if !spec.prefix.is_empty() {
        let atoms = spec
            .prefix
            .iter()
            .enumerate()
            .map(|(i, p)| p.parse::<PrefixAtom>().map_err(|e| spec_err(format!("prefix[{i}]"), e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        rc.prefix = PrefixSpace::from_atoms(atoms);
    }
    if let Some(c) = &spec.community {
        rc.community = CommunityConstraint::requiring(communities_field("community", c)?);
    }
    if let Some(a) = &spec.as_path {
        let atom = AsPathAtom::parse(strip_slashes(a)).map_err(|e| spec_err("asPath", e.to_string()))?;
        rc.as_path = AsPathConstraint::require(atom);
    }
    let dims = [
        ("localPref", &spec.local_pref, ScalarDim::LocalPref),
        ("med", &spec.med, ScalarDim::Med),
        ("tag", &spec.tag, ScalarDim::Tag),
        ("weight", &spec.weight, ScalarDim::Weight),
    ];
    for (name, field, d) in dims {
        let Some(f) = field else { continue };
        let set = match f {
            IntervalText::Number(n) => ScalarSet::single(*n),
            IntervalText::Text(t) => {
                parse_intervals(t).ok_or_else(|| spec_err(name, "expected N, A-B or a comma list"))?
            }
        };
        *rc.scalars.get_mut(d) = set.intersect(&d.universe());
    }
    Ok(rc)
}

/// What a stanza meeting the JSON spec does to a route in its input space.
pub fn expected_outcome(spec: &JsonSpec) -> Result<Outcome, SpecParseError> {
    if !spec.permit {
        return Ok(Outcome::Deny);
    }
    let s = &spec.set;
    let community = match &s.community {
        None => CommunityOp::Pass,
        Some(text) => {
            let t = text.trim();
            match t.strip_suffix("additive") {
                Some(rest) => CommunityOp::Add(communities_field("set.community", rest)?),
                None => CommunityOp::Replace(communities_field("set.community", t)?),
            }
        }
    };
    Ok(Outcome::Permit(Transform {
        metric: s.metric,
        local_pref: s.local_pref,
        next_hop: s.next_hop,
        weight: s.weight,
        tag: s.tag,
        community,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CheckKind {
    /// A route the JSON spec admits is denied.
    InputDenied,
    /// A permitted route comes out with the wrong attributes.
    OutputWrong,
    /// A route outside the JSON spec is permitted.
    OverPermissive,
    /// Deny intent: a route the JSON spec covers is not denied by the stanza.
    InputPermitted,
    /// Deny intent: the stanza also catches a route outside the JSON spec.
    OverDenying,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "verdict")]
pub enum VerificationResult {
    Pass,
    #[serde(rename_all = "camelCase")]
    Fail {
        check: CheckKind,
        stanza: String,
        counterexample: Route,
        /// The stanza's output for the counterexample, when it permits it.
        output: Option<Route>,
    },
    Inconclusive {
        reason: String,
    },
}

impl VerificationResult {
    pub fn is_pass(&self) -> bool {
        matches!(self, VerificationResult::Pass)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Spec(#[from] SpecParseError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Checks that the snippet, run as a one-stanza route-map, behaves exactly
/// as the JSON spec says. Checks run in order and the first failure wins.
pub fn verify_stanza(snippet: &Snippet, spec: &JsonSpec) -> Result<VerificationResult, VerifyError> {
    let config = snippet.to_config();
    let map = snippet.route_map();
    let spec_space: RouteSpace = spec_to_constraints(spec)?.into();
    let outside = spec_space.complement();

    let mut flipped = map.clone();
    flipped.stanzas[0].action = Action::Permit;
    flipped.stanzas[0].sets.clear();

    let checks: Vec<(CheckKind, &RouteMap, Action, RouteSpace)> = if spec.permit {
        let expected = expected_outcome(spec)?;
        let actual = Outcome::of_stanza(&snippet.stanza);
        let mut mentioned = config.mentioned_communities();
        mentioned.extend(space_communities([&spec_space]));
        if let Outcome::Permit(t) = &expected {
            mentioned.extend(t.communities());
        }
        let wrong = spec_space.intersect(&differs(&actual, &expected, &mentioned));
        vec![
            (CheckKind::InputDenied, &map, Action::Deny, spec_space.clone()),
            (CheckKind::OutputWrong, &map, Action::Permit, wrong),
            (CheckKind::OverPermissive, &map, Action::Permit, outside),
        ]
    } else {
        vec![
            (CheckKind::InputPermitted, &map, Action::Permit, spec_space.clone()),
            (CheckKind::InputPermitted, &flipped, Action::Deny, spec_space.clone()),
            (CheckKind::OverDenying, &flipped, Action::Permit, outside),
        ]
    };

    let mut inconclusive = None;
    for (check, rm, action, input) in checks {
        match search_route_policies(rm, &config, action, &input, None)? {
            SearchOutcome::Found(r) => {
                let v = engine::evaluate(&map, &r, &config);
                return Ok(VerificationResult::Fail {
                    check,
                    stanza: snippet.map_name.clone(),
                    output: v.output_route,
                    counterexample: r,
                });
            }
            SearchOutcome::NotFound => {}
            SearchOutcome::Inconclusive(reason) => {
                inconclusive.get_or_insert(reason);
            }
        }
    }
    Ok(match inconclusive {
        Some(reason) => VerificationResult::Inconclusive { reason },
        None => VerificationResult::Pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("feedback requested for a result that is not a failure")]
pub struct NotAFailure;

/// Generator-facing explanation of a failed check, ending with an
/// instruction to fix the stanza.
pub fn render_feedback(result: &VerificationResult) -> Result<String, NotAFailure> {
    let VerificationResult::Fail { check, stanza, counterexample, output } = result else {
        return Err(NotAFailure);
    };
    let route = render_route(counterexample);
    let body = match check {
        CheckKind::InputDenied => {
            format!("The stanza {stanza} denies an input route that it is required to permit. Input route:\n{route}")
        }
        CheckKind::OutputWrong => {
            let out = output.as_ref().map(render_route).unwrap_or_default();
            format!(
                "The stanza {stanza} permits an input route but rewrites its attributes incorrectly. Input route:\n{route}\
                 Output route produced by the stanza:\n{out}"
            )
        }
        CheckKind::OverPermissive => {
            format!("The stanza {stanza} permits an input route that falls outside the intended match set. Input route:\n{route}")
        }
        CheckKind::InputPermitted => {
            format!(
                "The stanza {stanza} does not deny an input route that it is required to deny. Input route:\n{route}"
            )
        }
        CheckKind::OverDenying => {
            format!("The stanza {stanza} denies an input route that falls outside the intended match set. Input route:\n{route}")
        }
    };
    Ok(format!("{body}Fix the stanza and output it again.\n"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_stanza_snippet;

    const SPEC: &str =
        r#"{"permit": true, "prefix": ["100.0.0.0/16:16-23"], "community": "/_300:3_/", "set": {"metric": 55}}"#;

    const SNIPPET: &str = "\
ip community-list expanded COM_LIST permit _300:3_
ip prefix-list PREFIX_100 permit 100.0.0.0/16 le 23
route-map SET_METRIC permit 10
 match community COM_LIST
 match ip address prefix-list PREFIX_100
 set metric 55
";

    #[test]
    fn spec_constraints() {
        let spec = parse_spec(SPEC).unwrap();
        let rc = spec_to_constraints(&spec).unwrap();
        assert_eq!(rc.to_string(), "prefix 100.0.0.0/16:16-23; requires {300:3}");
        let open = parse_spec(r#"{"permit": true}"#).unwrap();
        assert!(spec_to_constraints(&open).unwrap().prefix.is_full());
    }

    #[test]
    fn spec_errors_carry_paths() {
        let e = parse_spec(r#"{"permit": true, "prefix": ["100.0.0.0/16:8-23"]}"#).unwrap_err();
        assert_eq!(e.path, "prefix[0]");
        let e = parse_spec(r#"{"permit": true, "set": {"metric": "x"}}"#).unwrap_err();
        assert_eq!(e.path, "set.metric");
        let e = parse_spec(r#"{"permit": true, "colour": 1}"#).unwrap_err();
        assert!(e.message.contains("colour"));
    }

    #[test]
    fn correct_snippet_passes() {
        let s = parse_stanza_snippet(SNIPPET).unwrap();
        assert_eq!(verify_stanza(&s, &parse_spec(SPEC).unwrap()).unwrap(), VerificationResult::Pass);
    }

    #[test]
    fn match_all_is_over_permissive() {
        let s = parse_stanza_snippet("route-map SET_METRIC permit 10\n set metric 55\n").unwrap();
        let r = verify_stanza(&s, &parse_spec(SPEC).unwrap()).unwrap();
        let VerificationResult::Fail { check, ref counterexample, .. } = r else { panic!("{r:?}") };
        assert_eq!(check, CheckKind::OverPermissive);
        let spec_space = spec_to_constraints(&parse_spec(SPEC).unwrap()).unwrap();
        assert!(!spec_space.matches(counterexample));
        let text = render_feedback(&r).unwrap();
        assert!(text.contains("permits an input route"));
        assert!(text.ends_with("Fix the stanza and output it again.\n"));
    }

    #[test]
    fn wrong_metric_is_output_wrong() {
        let s = parse_stanza_snippet(&SNIPPET.replace("metric 55", "metric 56")).unwrap();
        let r = verify_stanza(&s, &parse_spec(SPEC).unwrap()).unwrap();
        assert!(matches!(r, VerificationResult::Fail { check: CheckKind::OutputWrong, .. }));
        assert!(render_feedback(&r).unwrap().contains("Metric: 56"));
        assert_eq!(render_feedback(&VerificationResult::Pass), Err(NotAFailure));
    }

    #[test]
    fn deny_intent() {
        let spec = parse_spec(r#"{"permit": false, "prefix": ["10.0.0.0/8:8-32"]}"#).unwrap();
        let good = parse_stanza_snippet(
            "ip prefix-list P permit 10.0.0.0/8 le 32\nroute-map X deny 10\n match ip address prefix-list P\n",
        )
        .unwrap();
        assert!(verify_stanza(&good, &spec).unwrap().is_pass());
        let wide = parse_stanza_snippet("route-map X deny 10\n").unwrap();
        assert!(matches!(
            verify_stanza(&wide, &spec).unwrap(),
            VerificationResult::Fail { check: CheckKind::OverDenying, .. }
        ));
        let permit = parse_stanza_snippet(
            "ip prefix-list P permit 10.0.0.0/8 le 32\nroute-map X permit 10\n match ip address prefix-list P\n",
        )
        .unwrap();
        assert!(matches!(
            verify_stanza(&permit, &spec).unwrap(),
            VerificationResult::Fail { check: CheckKind::InputPermitted, .. }
        ));
    }

    #[test]
    fn community_set_expectations() {
        let spec = parse_spec(r#"{"permit": true, "set": {"community": "65001:1 additive"}}"#).unwrap();
        let add = parse_stanza_snippet("route-map X permit 10\n set community 65001:1 additive\n").unwrap();
        assert!(verify_stanza(&add, &spec).unwrap().is_pass());
        let repl = parse_stanza_snippet("route-map X permit 10\n set community 65001:1\n").unwrap();
        let r = verify_stanza(&repl, &spec).unwrap();
        assert!(matches!(r, VerificationResult::Fail { check: CheckKind::OutputWrong, .. }), "{r:?}");
    }
}

//! Fixture-driven end-to-end checks.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use routeplace_core::disambiguator::*;
use routeplace_core::engine::{evaluate, overlap_census, OverlapKind, PolicyKind};
use routeplace_core::model::*;
use routeplace_core::parser::{parse_config, parse_stanza_snippet, print_config};
use routeplace_core::pipeline::{run_steps, Step};
use routeplace_core::render::render_route;
use routeplace_core::synthesizer::*;
use routeplace_core::verifier::*;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn canonical(name: &str) -> String {
    print_config(&parse_config(&fixture(name)).unwrap())
}

fn isp_problem() -> InsertionProblem {
    let c = parse_config(&fixture("isp_out.cfg")).unwrap();
    let snippet = parse_stanza_snippet(&fixture("set_metric.snippet")).unwrap();
    InsertionProblem::new(&c, "ISP_OUT", &snippet).unwrap()
}

fn answer_all(choices: &[Choice]) -> (DisambiguationSession, String) {
    let mut s = DisambiguationSession::start(isp_problem(), SearchMode::Binary).unwrap();
    for &c in choices {
        s.answer(c).unwrap();
    }
    assert!(s.is_finished());
    let text = print_config(&s.result().unwrap().unwrap());
    (s, text)
}

pub fn isp_out_walkthrough() {
    let started = Instant::now();
    let snippet = parse_stanza_snippet(&fixture("set_metric.snippet")).unwrap();
    let spec = parse_spec(&fixture("set_metric.spec.json")).unwrap();
    assert_eq!(verify_stanza(&snippet, &spec).unwrap(), VerificationResult::Pass);

    let p = isp_problem();
    let chain = build_chain(&p).unwrap();
    assert_eq!(chain.seqs(), vec![10, 30]);
    // Two chain stanzas split the map into three placement classes.
    assert_eq!(chain.len() + 1, 3);

    let s = DisambiguationSession::start(p, SearchMode::Binary).unwrap();
    assert_eq!(s.question_bound(), 2);
    let q = s.pending().unwrap().clone();
    let mut expected = Route::new("100.0.0.0/16".parse().unwrap());
    expected.as_path = vec![32];
    expected.communities = BTreeSet::from(["300:3".parse().unwrap()]);
    assert_eq!(q.witness, expected);
    let mut rewritten = expected.clone();
    rewritten.med = 55;
    assert_eq!(q.option_b.action, Action::Permit);
    assert_eq!(q.option_b.output_route, Some(rewritten.clone()));
    assert_eq!(q.option_a.action, Action::Deny);
    assert_eq!(q.option_a.output_route, None);
    assert_eq!(
        q.render(),
        format!(
            "Input route:\n{}\nOPTION 1:\nACTION: permit\n{}\nOPTION 2:\nACTION: deny\n",
            render_route(&expected),
            render_route(&rewritten)
        )
    );
    assert!(q.render().contains("Metric: 55"));

    let (s, text) = answer_all(&[Choice::New]);
    assert_eq!(s.questions_asked(), 1);
    assert_eq!(text, canonical("fig3a.cfg"));

    let (s, text) = answer_all(&[Choice::Existing, Choice::Existing]);
    assert_eq!(s.questions_asked(), 2);
    assert_eq!(text, canonical("fig3b.cfg"));

    // The middle class holds two slots; both give the same routing.
    let (s, text) = answer_all(&[Choice::Existing, Choice::New]);
    assert_eq!(text, canonical("fig3d.cfg"));
    let c = print_config(&insert_at_slot(&s.problem, 1).unwrap());
    assert_eq!(c, canonical("fig3c.cfg"));
    assert!(started.elapsed() < Duration::from_secs(1), "took {:?}", started.elapsed());
}

pub fn match_all_stanza_is_over_permissive() {
    let spec = parse_spec(&fixture("set_metric.spec.json")).unwrap();
    let snippet = parse_stanza_snippet(&fixture("match_all.snippet")).unwrap();
    let result = verify_stanza(&snippet, &spec).unwrap();
    let VerificationResult::Fail { check, counterexample, .. } = &result else { panic!("{result:?}") };
    assert_eq!(*check, CheckKind::OverPermissive);
    let inside = spec_to_constraints(&spec).unwrap();
    assert!(!inside.matches(counterexample), "witness {counterexample:?} lies inside the JSON spec");
    assert!(render_feedback(&result).unwrap().contains(&render_route(counterexample)));

    let wrong = parse_stanza_snippet(&fixture("wrong_metric.snippet")).unwrap();
    let result = verify_stanza(&wrong, &spec).unwrap();
    assert!(matches!(result, VerificationResult::Fail { check: CheckKind::OutputWrong, .. }), "{result:?}");
}

pub fn every_fixture_snippet_verifies() {
    let fixtures: Vec<ScriptedFixture> = serde_json::from_str(&fixture("topology/generator.json")).unwrap();
    let scripted: Vec<ScriptedFixture> = serde_json::from_str(&fixture("scripted.json")).unwrap();
    assert!(fixtures.len() >= 20);
    for f in fixtures.iter().chain(&scripted) {
        let snippet = parse_stanza_snippet(&f.snippet).unwrap_or_else(|e| panic!("{}: {e:?}", f.pattern));
        let spec = parse_spec(&f.spec.to_string()).unwrap();
        assert_eq!(verify_stanza(&snippet, &spec).unwrap(), VerificationResult::Pass, "{}", f.pattern);
    }
}

pub fn acl_pair_has_one_trivial_conflict() {
    let c = parse_config(&fixture("acl_pair.cfg")).unwrap();
    let report = overlap_census(&c).unwrap();
    assert_eq!(report.entries.len(), 1);
    let e = &report.entries[0];
    assert_eq!((e.policy.as_str(), e.policy_kind, e.seq_a, e.seq_b), ("EDGE", PolicyKind::Acl, 0, 1));
    assert_eq!(e.kind, OverlapKind::Conflicting);
    assert!(e.trivial_subset);
    assert_eq!(report.count(OverlapKind::Conflicting), 1);
    assert_eq!(report.without_trivial().count(OverlapKind::Conflicting), 0);
}

fn scripted() -> ScriptedPlugin {
    ScriptedPlugin::from_json(&fixture("scripted.json")).unwrap()
}

const INTENT: &str = "permit routes with community 300:3 and prefix 100.0.0.0/16 up to /23, set metric 55";

pub fn repair_loop_recovers_from_a_bad_first_attempt() {
    let req = SynthesisRequest::new(INTENT, classify_query(INTENT));
    assert_eq!(req.kind, QueryKind::RouteMap);
    let plugin = FaultyPlugin::first_attempt(scripted(), Fault::WrongMetric);
    let LoopOutcome::Verified { attempts, history, snippet, .. } =
        run_repair_loop(&req, &plugin, DEFAULT_THRESHOLD).unwrap()
    else {
        panic!("did not converge")
    };
    assert_eq!(attempts, 2);
    assert_eq!(snippet, fixture("set_metric.snippet"));
    assert_eq!(history.len(), 1);

    // The recorded feedback is exactly the rendered counterexample of the bad attempt.
    let bad = inject_fault(&fixture("set_metric.snippet"), Fault::WrongMetric);
    assert_eq!(history[0].attempt, bad);
    let spec = parse_spec(&fixture("set_metric.spec.json")).unwrap();
    let result = verify_stanza(&parse_stanza_snippet(&bad).unwrap(), &spec).unwrap();
    let VerificationResult::Fail { counterexample, .. } = &result else { panic!("{result:?}") };
    assert_eq!(history[0].feedback, render_feedback(&result).unwrap());
    assert!(history[0].feedback.contains(&render_route(counterexample)));
}

pub fn repair_loop_punts_at_the_threshold() {
    let req = SynthesisRequest::new(INTENT, QueryKind::RouteMap);
    for fault in [Fault::WrongMetric, Fault::MatchAll, Fault::MultiStanza] {
        for threshold in [1, DEFAULT_THRESHOLD, 5] {
            let plugin = FaultyPlugin::always(scripted(), fault);
            let outcome = run_repair_loop(&req, &plugin, threshold).unwrap();
            let LoopOutcome::Punted { attempts, history, last_feedback, .. } = outcome else {
                panic!("{fault:?} verified")
            };
            assert_eq!(attempts, threshold, "{fault:?}");
            assert_eq!(history.len(), threshold);
            assert_eq!(history.last().unwrap().feedback, last_feedback);
        }
    }
}

pub fn topology_rebuilds_byte_for_byte() {
    let steps: Vec<Step> = serde_json::from_str(&fixture("topology/steps.json")).unwrap();
    let plugin = ScriptedPlugin::from_json(&fixture("topology/generator.json")).unwrap();
    let (routers, reports) = run_steps(&steps, &plugin, DEFAULT_THRESHOLD).unwrap();
    assert_eq!(reports.len(), steps.len());
    assert!(reports.iter().all(|r| r.attempts == 1));
    assert!(reports.iter().any(|r| r.questions > 0));
    for (name, maps) in [("M", 4), ("R1", 5), ("R2", 5)] {
        let c = &routers[name];
        assert_eq!(c.route_maps.len(), maps, "{name}");
        assert_eq!(print_config(c), fixture(&format!("topology/{name}.cfg")), "{name}");
    }
}

fn route(net: &str) -> Route {
    Route::new(net.parse().unwrap())
}

/// Runs `r` through `hops` of (router, map) in order; `None` once denied.
fn propagate(routers: &[(&str, Config)], r: &Route, hops: &[(&str, &str)]) -> Option<Route> {
    let mut cur = r.clone();
    for (router, map) in hops {
        let c = &routers.iter().find(|(n, _)| n == router).unwrap().1;
        let v = evaluate(&c.route_maps[*map], &cur, c);
        cur = v.output_route?;
    }
    Some(cur)
}

pub fn topology_policies_hold() {
    let routers: Vec<(&str, Config)> = ["M", "R1", "R2"]
        .into_iter()
        .map(|n| (n, parse_config(&fixture(&format!("topology/{n}.cfg"))).unwrap()))
        .collect();
    let public = route("8.8.0.0/16");
    let dc_reused = route("10.2.0.0/16");
    let dc_service = route("10.1.4.0/24");
    let mgmt = route("192.168.7.0/24");

    // Reused datacenter space stays away from management; the service prefix gets through.
    for r in ["R1", "R2"] {
        let from = if r == "R1" { "FROM_R1" } else { "FROM_R2" };
        assert_eq!(propagate(&routers, &dc_reused, &[(r, "FROM_DC"), (r, "TO_M"), ("M", from)]), None);
        assert!(propagate(&routers, &dc_service, &[(r, "FROM_DC"), (r, "TO_M"), ("M", from)]).is_some());
    }
    // Reused management space stays away from the datacenters.
    for (to, r) in [("TO_R1", "R1"), ("TO_R2", "R2")] {
        assert_eq!(propagate(&routers, &mgmt, &[("M", to)]), None);
        assert_eq!(propagate(&routers, &mgmt, &[(r, "TO_DC")]), None);
        assert!(propagate(&routers, &public, &[("M", to), (r, "TO_DC")]).is_some());
    }
    // M prefers the path through R1 for the service prefix.
    let via_r1 = propagate(&routers, &dc_service, &[("R1", "TO_M"), ("M", "FROM_R1")]).unwrap();
    let via_r2 = propagate(&routers, &dc_service, &[("R2", "TO_M"), ("M", "FROM_R2")]).unwrap();
    assert!(via_r1.local_pref > via_r2.local_pref);
    // Bogons are dropped wherever routes enter a router and on the way out to an ISP.
    for bogon in ["0.1.0.0/16", "127.0.0.1/32", "169.254.3.0/24", "192.0.2.128/25", "224.0.0.0/4", "240.1.0.0/16"] {
        for (name, c) in &routers {
            for rm in c.route_maps.values().filter(|m| m.name.starts_with("FROM_") || m.name.starts_with("TO_ISP")) {
                let v = evaluate(rm, &route(bogon), c);
                assert_eq!(v.action, Action::Deny, "{name} {} lets {bogon} through", rm.name);
            }
        }
    }
    // ISP1 routes never reach ISP2 and the reverse, even through M.
    let paths: [&[(&str, &str)]; 2] = [
        &[("R1", "FROM_ISP1"), ("R1", "TO_M"), ("M", "FROM_R1"), ("M", "TO_R2"), ("R2", "TO_ISP2")],
        &[("R2", "FROM_ISP2"), ("R2", "TO_M"), ("M", "FROM_R2"), ("M", "TO_R1"), ("R1", "TO_ISP1")],
    ];
    for hops in paths {
        assert_eq!(propagate(&routers, &public, hops), None, "{hops:?}");
        // Dropping the last hop shows the route does get that far.
        assert!(propagate(&routers, &public, &hops[..hops.len() - 1]).is_some());
    }
    // ISP routes still reach the datacenter.
    assert!(propagate(&routers, &public, &[("R1", "FROM_ISP1"), ("R1", "TO_DC")]).is_some());
}

pub fn fixtures_round_trip() {
    let mut seen = 0;
    for dir in ["", "topology"] {
        for entry in std::fs::read_dir(fixture_path(dir)).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                continue;
            }
            let text = std::fs::read_to_string(&path).unwrap();
            match path.extension().and_then(|e| e.to_str()) {
                Some("cfg") => {
                    let c = parse_config(&text).unwrap_or_else(|e| panic!("{path:?}: {e:?}"));
                    let printed = print_config(&c);
                    assert_eq!(parse_config(&printed).unwrap(), c, "{path:?}");
                    assert_eq!(print_config(&parse_config(&printed).unwrap()), printed, "{path:?}");
                }
                Some("snippet") => {
                    let s = parse_stanza_snippet(&text);
                    if path.ends_with("two_stanzas.snippet") {
                        assert!(s.is_err());
                        continue;
                    }
                    let s = s.unwrap_or_else(|e| panic!("{path:?}: {e:?}"));
                    assert_eq!(parse_stanza_snippet(&s.to_string()).unwrap(), s, "{path:?}");
                }
                _ => continue,
            }
            seen += 1;
        }
    }
    assert!(seen >= 12, "only {seen} fixtures");
}

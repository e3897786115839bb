//! Symbolic analyses against brute-force enumeration on random configs.

use std::collections::BTreeSet;

use super::*;
use routeplace_core::engine::{
    compare_route_policies, overlap_census, search_filters, search_route_policies, OutputPolarity, OutputQuery,
    OverlapKind, OverlapWitness, PolicyKind, Position, SearchOutcome,
};
use routeplace_core::parser::{parse_config, print_config};
use routeplace_core::symbolic::{stanza_space, HeaderSpace, RouteSpace};

const SEEDS: std::ops::Range<u64> = 0..60;

fn config(seed: u64) -> Config {
    let text = random_config_text(seed);
    let c = parse_config(&text).unwrap_or_else(|e| panic!("seed {seed}: {e:?}\n{text}"));
    assert_eq!(parse_config(&print_config(&c)).unwrap(), c, "seed {seed}: round trip");
    c
}

struct Probes {
    spaces: Vec<RouteSpace>,
    stanzas: Vec<Stanza>,
}

fn probes(c: &Config) -> Probes {
    let stanzas = c.route_maps["PROBE"].stanzas.clone();
    Probes { spaces: stanzas.iter().map(|s| stanza_space(s, c).unwrap()).collect(), stanzas }
}

/// Action, optional input-space index, optional output constraint.
type Query = (Action, Option<usize>, Option<(usize, OutputPolarity)>);

pub fn overlap_census_agrees() {
    let universe = route_universe();
    let packets = packet_universe();
    let mut kinds = BTreeSet::new();
    for seed in SEEDS {
        let c = config(seed);
        let report = overlap_census(&c).unwrap();
        assert!(report.inconclusive.is_empty(), "seed {seed}");
        for rm in c.route_maps.values() {
            let n = rm.stanzas.len();
            let hits: Vec<Vec<bool>> =
                universe.iter().map(|r| rm.stanzas.iter().map(|s| stanza_hits(s, &c, r)).collect()).collect();
            let mut expected = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if !hits.iter().any(|h| h[i] && h[j]) {
                        continue;
                    }
                    let kind = if effect(&rm.stanzas[i]) == effect(&rm.stanzas[j]) {
                        OverlapKind::Overlap
                    } else {
                        OverlapKind::Conflicting
                    };
                    let i_in_j = hits.iter().all(|h| !h[i] || h[j]);
                    let j_in_i = hits.iter().all(|h| !h[j] || h[i]);
                    expected.push((rm.stanzas[i].seq, rm.stanzas[j].seq, kind, i_in_j || j_in_i));
                }
            }
            let got: Vec<_> = report
                .entries
                .iter()
                .filter(|e| e.policy == rm.name && e.policy_kind == PolicyKind::RouteMap)
                .map(|e| {
                    let OverlapWitness::Route(w) = &e.witness else { panic!("route witness") };
                    let a = rm.stanzas.iter().find(|s| s.seq == e.seq_a).unwrap();
                    let b = rm.stanzas.iter().find(|s| s.seq == e.seq_b).unwrap();
                    assert!(stanza_hits(a, &c, w) && stanza_hits(b, &c, w), "seed {seed}: bad witness");
                    (e.seq_a, e.seq_b, e.kind, e.trivial_subset)
                })
                .collect();
            kinds.extend(got.iter().map(|g| (PolicyKind::RouteMap, g.2, g.3)));
            assert_eq!(got, expected, "seed {seed} map {}", rm.name);
        }
        for acl in c.acls.values() {
            let n = acl.rules.len();
            let mut expected = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    let (a, b) = (&acl.rules[i], &acl.rules[j]);
                    if !packets.iter().any(|p| rule_hits(a, p) && rule_hits(b, p)) {
                        continue;
                    }
                    let kind = if a.action == b.action { OverlapKind::Overlap } else { OverlapKind::Conflicting };
                    let sub = packets.iter().all(|p| !rule_hits(a, p) || rule_hits(b, p))
                        || packets.iter().all(|p| !rule_hits(b, p) || rule_hits(a, p));
                    expected.push((i as u32, j as u32, kind, sub));
                }
            }
            let got: Vec<_> = report
                .entries
                .iter()
                .filter(|e| e.policy == acl.name && e.policy_kind == PolicyKind::Acl)
                .map(|e| {
                    let OverlapWitness::Packet(p) = &e.witness else { panic!("packet witness") };
                    assert!(rule_hits(&acl.rules[e.seq_a as usize], p) && rule_hits(&acl.rules[e.seq_b as usize], p));
                    (e.seq_a, e.seq_b, e.kind, e.trivial_subset)
                })
                .collect();
            kinds.extend(got.iter().map(|g| (PolicyKind::Acl, g.2, g.3)));
            assert_eq!(got, expected, "seed {seed} acl {}", acl.name);
        }
    }
    assert_eq!(kinds.len(), 8, "every (policy kind, overlap kind, trivial) combination occurs: {kinds:?}");
}

pub fn search_route_policies_agrees() {
    let universe = route_universe();
    let (mut found, mut missing) = (0, 0);
    for seed in SEEDS {
        let c = config(seed);
        let pr = probes(&c);
        for name in ["RM", "RM2"] {
            let rm = &c.route_maps[name];
            let verdicts: Vec<RefVerdict> = universe.iter().map(|r| ref_evaluate(rm, &c, r)).collect();
            let mut queries: Vec<Query> = Vec::new();
            for action in [Action::Permit, Action::Deny] {
                queries.push((action, None, None));
                for i in 0..3 {
                    queries.push((action, Some(i), None));
                }
            }
            for (i, o) in [(0, 1), (1, 2), (2, 0)] {
                queries.push((Action::Permit, Some(i), Some((o, OutputPolarity::Meets))));
                queries.push((Action::Permit, None, Some((o, OutputPolarity::Violates))));
            }
            for (action, input, output) in queries {
                let holds = |r: &Route, v: &RefVerdict| {
                    v.action == action
                        && input.is_none_or(|i| stanza_hits(&pr.stanzas[i], &c, r))
                        && output.is_none_or(|(o, pol)| {
                            let inside = stanza_hits(&pr.stanzas[o], &c, v.output.as_ref().unwrap());
                            inside == (pol == OutputPolarity::Meets)
                        })
                };
                let expected = universe.iter().zip(&verdicts).any(|(r, v)| holds(r, v));
                let input_space = input.map_or_else(RouteSpace::full, |i| pr.spaces[i].clone());
                let q = output.map(|(o, polarity)| OutputQuery { space: pr.spaces[o].clone(), polarity });
                let got = search_route_policies(rm, &c, action, &input_space, q.as_ref()).unwrap();
                let ctx = format!("seed {seed} map {name} {action:?} input {input:?} output {output:?}");
                match got {
                    SearchOutcome::Found(w) => {
                        assert!(expected, "{ctx}: engine found {w:?} but oracle found none");
                        assert!(holds(&w, &ref_evaluate(rm, &c, &w)), "{ctx}: invalid witness {w:?}");
                        found += 1;
                    }
                    SearchOutcome::NotFound => {
                        assert!(!expected, "{ctx}: engine missed a route");
                        missing += 1;
                    }
                    SearchOutcome::Inconclusive(e) => panic!("{ctx}: inconclusive {e}"),
                }
            }
        }
    }
    assert!(found > 100 && missing > 100, "found {found}, not found {missing}");
}

/// Deterministic variants of a map to compare against.
fn mutants(rm: &RouteMap, other: &RouteMap) -> Vec<RouteMap> {
    let renumber = |mut m: RouteMap| {
        for (i, s) in m.stanzas.iter_mut().enumerate() {
            s.seq = (i as u32 + 1) * 10;
        }
        m
    };
    let mut out = vec![rm.clone(), RouteMap { name: rm.name.clone(), stanzas: other.stanzas.clone() }];
    let n = rm.stanzas.len();
    if n >= 2 {
        let mut m = rm.clone();
        m.stanzas.swap(0, n - 1);
        out.push(renumber(m));
    }
    let mut m = rm.clone();
    m.stanzas.remove(0);
    out.push(renumber(m));
    let mut m = rm.clone();
    let s = &mut m.stanzas[n / 2];
    if s.action == Action::Permit {
        s.action = Action::Deny;
        s.sets.clear();
    } else {
        s.action = Action::Permit;
        s.sets.push(SetClause::Metric(55));
    }
    out.push(m);
    out
}

fn index_of(rm: &RouteMap, p: Position) -> Option<usize> {
    match p {
        Position::Seq(seq) => Some(rm.stanzas.iter().position(|s| s.seq == seq).unwrap()),
        Position::ImplicitDeny => None,
    }
}

pub fn compare_route_policies_agrees() {
    let universe = route_universe();
    let (mut same, mut differing) = (0, 0);
    for seed in SEEDS {
        let c = config(seed);
        let pr = probes(&c);
        let a = &c.route_maps["RM"];
        let va: Vec<RefVerdict> = universe.iter().map(|r| ref_evaluate(a, &c, r)).collect();
        for (k, b) in mutants(a, &c.route_maps["RM2"]).iter().enumerate() {
            let vb: Vec<RefVerdict> = universe.iter().map(|r| ref_evaluate(b, &c, r)).collect();
            for scope in [None, Some(0), Some(1)] {
                let in_scope = |r: &Route| scope.is_none_or(|i| stanza_hits(&pr.stanzas[i], &c, r));
                let expected: BTreeSet<(Option<usize>, Option<usize>)> = universe
                    .iter()
                    .enumerate()
                    .filter(|(i, r)| in_scope(r) && va[*i].behavior() != vb[*i].behavior())
                    .map(|(i, _)| (va[i].index, vb[i].index))
                    .collect();
                let space = scope.map_or_else(RouteSpace::full, |i| pr.spaces[i].clone());
                let got = compare_route_policies(a, b, &c, &space).unwrap();
                let ctx = format!("seed {seed} mutant {k} scope {scope:?}");
                assert!(got.inconclusive.is_empty(), "{ctx}");
                let mut pairs = BTreeSet::new();
                for d in &got.differences {
                    let ra = ref_evaluate(a, &c, &d.input_route);
                    let rb = ref_evaluate(b, &c, &d.input_route);
                    assert!(in_scope(&d.input_route), "{ctx}: witness out of scope");
                    assert_ne!(ra.behavior(), rb.behavior(), "{ctx}: witness does not differ");
                    assert_eq!(
                        (ra.action, ra.output.as_ref()),
                        (d.verdict_a.action, d.verdict_a.output_route.as_ref())
                    );
                    assert_eq!(
                        (rb.action, rb.output.as_ref()),
                        (d.verdict_b.action, d.verdict_b.output_route.as_ref())
                    );
                    pairs.insert((index_of(a, d.verdict_a.matched_seq), index_of(b, d.verdict_b.matched_seq)));
                }
                assert_eq!(pairs, expected, "{ctx}");
                if pairs.is_empty() {
                    same += 1;
                } else {
                    differing += 1;
                }
            }
        }
    }
    assert!(same > 50 && differing > 50, "same {same}, differing {differing}");
}

pub fn search_filters_agrees() {
    let packets = packet_universe();
    for seed in SEEDS {
        let c = config(seed);
        let acl = &c.acls["ACL1"];
        let probe_rules = &c.acls["PROBEACL"].rules;
        for action in [Action::Permit, Action::Deny] {
            for probe in [None, Some(0), Some(1), Some(2)] {
                let headers = probe.map_or_else(HeaderSpace::full, |i| HeaderSpace::of_rule(&probe_rules[i]));
                let holds = |p: &Packet| {
                    ref_evaluate_acl(acl, p).1 == action && probe.is_none_or(|i| rule_hits(&probe_rules[i], p))
                };
                let expected = packets.iter().any(holds);
                let ctx = format!("seed {seed} {action:?} probe {probe:?}");
                match search_filters(acl, action, &headers) {
                    Some(p) => {
                        assert!(expected, "{ctx}: engine found {p:?}, oracle none");
                        assert!(holds(&p), "{ctx}: invalid witness {p:?}");
                    }
                    None => assert!(!expected, "{ctx}: engine missed a packet"),
                }
            }
        }
    }
}

//! Brute-force reference semantics over a finite universe, plus a seeded
//! generator of small random configs whose literals all come from fixed
//! pools. The universe holds a representative of every region those pools
//! can carve out, so "some universe member" is equivalent to "some route".
//!
//! Everything here evaluates the model structs directly and shares no code
//! with the symbolic engine.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::net::Ipv4Addr;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use routeplace_core::model::*;

pub mod golden;
pub mod oracle;
pub mod placement;

pub const COMMUNITIES: [Community; 3] = [Community::new(1, 1), Community::new(1, 2), Community::new(2, 1)];
/// Never mentioned by generated configs.
pub const SPARE_COMMUNITY: Community = Community::new(65535, 65535);
pub const ASNS: [u32; 2] = [10, 20];
pub const SPARE_ASN: u32 = 65000;
pub const MATCH_LOCAL_PREFS: [u32; 2] = [100, 300];
pub const NEXT_HOP: Ipv4Addr = Ipv4Addr::new(1, 1, 1, 1);

/// Prefix-list bases; every generated bound stays within lengths 8..=10.
pub const BASES: [&str; 7] =
    ["10.0.0.0/8", "10.0.0.0/9", "10.128.0.0/9", "10.0.0.0/10", "10.64.0.0/10", "10.128.0.0/10", "10.192.0.0/10"];
pub const OUTSIDE: &str = "203.0.113.0/24";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn subsets<T: Copy>(items: &[T]) -> Vec<Vec<T>> {
    (0..1usize << items.len())
        .map(|mask| items.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, x)| *x).collect())
        .collect()
}

fn paths(alphabet: &[u32], max_len: usize) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for p in &frontier {
            for &a in alphabet {
                let mut q: Vec<u32> = p.clone();
                q.push(a);
                next.push(q);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Every combination of the per-attribute representatives.
pub fn route_universe() -> Vec<Route> {
    let networks: Vec<Ipv4Prefix> = BASES.iter().chain([&OUTSIDE]).map(|p| p.parse().unwrap()).collect();
    let mut comms: Vec<Community> = COMMUNITIES.to_vec();
    comms.push(SPARE_COMMUNITY);
    let comm_sets = subsets(&comms);
    let mut alphabet = ASNS.to_vec();
    alphabet.push(SPARE_ASN);
    let as_paths = paths(&alphabet, 3);
    let mut out = Vec::new();
    for n in &networks {
        for cs in &comm_sets {
            for p in &as_paths {
                for lp in [100, 300, 7] {
                    for med in [0, 55] {
                        for tag in [0, 1] {
                            for weight in [0, 7] {
                                for nh in [Route::DEFAULT_NEXT_HOP, NEXT_HOP] {
                                    out.push(Route {
                                        network: *n,
                                        as_path: p.clone(),
                                        communities: cs.iter().copied().collect(),
                                        local_pref: lp,
                                        med,
                                        next_hop: nh,
                                        tag,
                                        weight,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

pub const ACL_ADDRS: [&str; 5] = ["1.1.1.1", "2.2.2.2", "10.0.0.1", "10.128.0.1", "9.0.0.1"];
pub const ACL_PORTS: [u16; 5] = [0, 50, 53, 80, 1500];

pub fn packet_universe() -> Vec<Packet> {
    let addrs: Vec<Ipv4Addr> = ACL_ADDRS.iter().map(|a| a.parse().unwrap()).collect();
    let mut out = Vec::new();
    for &s in &addrs {
        for &d in &addrs {
            for proto in [Protocol::Ip, Protocol::Icmp] {
                out.push(Packet::new(s, d, proto, 0, 0));
            }
            for proto in [Protocol::Tcp, Protocol::Udp] {
                for &sp in &ACL_PORTS {
                    for &dp in &ACL_PORTS {
                        out.push(Packet::new(s, d, proto, sp, dp));
                    }
                }
            }
        }
    }
    out
}

// ---- reference semantics ----

pub fn within(base: &Ipv4Prefix, net: &Ipv4Prefix) -> bool {
    if net.len() < base.len() {
        return false;
    }
    let shift = 32 - base.len() as u32;
    let mask = if shift == 32 { 0 } else { u32::MAX << shift };
    u32::from(net.addr()) & mask == u32::from(base.addr())
}

pub fn prefix_entry_hits(e: &PrefixListEntry, net: &Ipv4Prefix) -> bool {
    let base = e.prefix.len();
    let (lo, hi) = match (e.ge, e.le) {
        (None, None) => (base, base),
        (Some(g), None) => (g, 32),
        (None, Some(l)) => (base, l),
        (Some(g), Some(l)) => (g, l),
    };
    within(&e.prefix, net) && net.len() >= lo && net.len() <= hi
}

fn first_action<E>(entries: &[E], hit: impl Fn(&E) -> bool, action: impl Fn(&E) -> Action) -> bool {
    entries.iter().find(|e| hit(e)).map(action) == Some(Action::Permit)
}

pub fn path_atom_hits(atom: &AsPathAtom, path: &[u32]) -> bool {
    match *atom {
        AsPathAtom::Contains(n) => path.contains(&n),
        AsPathAtom::EndsWith(n) => !path.is_empty() && path[path.len() - 1] == n,
        AsPathAtom::BeginsWith(n) => !path.is_empty() && path[0] == n,
        AsPathAtom::Empty => path.is_empty(),
        AsPathAtom::ExactSingle(n) => path.len() == 1 && path[0] == n,
    }
}

fn community_entry_hits(m: &CommunityMatcher, have: &BTreeSet<Community>) -> bool {
    match m {
        CommunityMatcher::Standard(all) => all.iter().all(|c| have.contains(c)),
        CommunityMatcher::Expanded(c) => have.contains(c),
    }
}

pub fn condition_holds(m: &MatchCondition, c: &Config, r: &Route) -> bool {
    match m {
        MatchCondition::PrefixList(n) => {
            first_action(&c.prefix_lists[n].entries, |e| prefix_entry_hits(e, &r.network), |e| e.action)
        }
        MatchCondition::CommunityList(n) => first_action(
            &c.community_lists[n].entries,
            |e| community_entry_hits(&e.matcher, &r.communities),
            |e| e.action,
        ),
        MatchCondition::AsPathList(n) => {
            first_action(&c.as_path_lists[n].entries, |e| path_atom_hits(&e.atom, &r.as_path), |e| e.action)
        }
        MatchCondition::LocalPref(v) => r.local_pref == *v,
        MatchCondition::Tag(v) => r.tag == *v,
    }
}

pub fn stanza_hits(s: &Stanza, c: &Config, r: &Route) -> bool {
    s.matches.iter().all(|m| condition_holds(m, c, r))
}

/// Output of a permitting stanza: set clauses in a fixed attribute order.
pub fn apply_sets(sets: &[SetClause], r: &Route) -> Route {
    let mut out = r.clone();
    let last = |f: &dyn Fn(&SetClause) -> bool| sets.iter().rev().find(|s| f(s)).cloned();
    if let Some(SetClause::Metric(v)) = last(&|s| matches!(s, SetClause::Metric(_))) {
        out.med = v;
    }
    if let Some(SetClause::LocalPref(v)) = last(&|s| matches!(s, SetClause::LocalPref(_))) {
        out.local_pref = v;
    }
    if let Some(SetClause::NextHop(v)) = last(&|s| matches!(s, SetClause::NextHop(_))) {
        out.next_hop = v;
    }
    if let Some(SetClause::Weight(v)) = last(&|s| matches!(s, SetClause::Weight(_))) {
        out.weight = v;
    }
    if let Some(SetClause::Tag(v)) = last(&|s| matches!(s, SetClause::Tag(_))) {
        out.tag = v;
    }
    match last(&|s| matches!(s, SetClause::CommunityAdd(_) | SetClause::CommunityReplace(_))) {
        Some(SetClause::CommunityAdd(v)) => out.communities.extend(v),
        Some(SetClause::CommunityReplace(v)) => out.communities = v,
        _ => {}
    }
    out
}

/// (index of the deciding stanza, action, output route when permitted).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefVerdict {
    pub index: Option<usize>,
    pub action: Action,
    pub output: Option<Route>,
}

impl RefVerdict {
    pub fn behavior(&self) -> (Action, Option<&Route>) {
        (self.action, self.output.as_ref())
    }
}

pub fn stanza_verdict(s: &Stanza, r: &Route) -> (Action, Option<Route>) {
    match s.action {
        Action::Permit => (Action::Permit, Some(apply_sets(&s.sets, r))),
        Action::Deny => (Action::Deny, None),
    }
}

pub fn ref_evaluate(rm: &RouteMap, c: &Config, r: &Route) -> RefVerdict {
    for (i, s) in rm.stanzas.iter().enumerate() {
        if stanza_hits(s, c, r) {
            let (action, output) = stanza_verdict(s, r);
            return RefVerdict { index: Some(i), action, output };
        }
    }
    RefVerdict { index: None, action: Action::Deny, output: None }
}

fn addr_hits(m: &AddrMatch, a: Ipv4Addr) -> bool {
    match m {
        AddrMatch::Any => true,
        AddrMatch::Host(h) => *h == a,
        AddrMatch::Prefix(p) => within(p, &Ipv4Prefix::host(a)),
    }
}

fn port_hits(m: &Option<PortMatch>, port: u16) -> bool {
    match m {
        None => true,
        Some(PortMatch::Eq { port: p }) => *p == port,
        Some(PortMatch::Range { lo, hi }) => *lo <= port && port <= *hi,
    }
}

pub fn rule_hits(r: &AclRule, p: &Packet) -> bool {
    (r.protocol == Protocol::Ip || r.protocol == p.protocol)
        && addr_hits(&r.src, p.src_ip)
        && addr_hits(&r.dst, p.dst_ip)
        && port_hits(&r.src_port, p.src_port)
        && port_hits(&r.dst_port, p.dst_port)
}

pub fn ref_evaluate_acl(a: &Acl, p: &Packet) -> (Option<usize>, Action) {
    a.rules.iter().position(|r| rule_hits(r, p)).map_or((None, Action::Deny), |i| (Some(i), a.rules[i].action))
}

/// Effective rewrite of a stanza, for the "actions or set clauses differ"
/// conflict test.
pub fn effect(s: &Stanza) -> (Action, Vec<String>) {
    let mut kinds: Vec<String> = Vec::new();
    for set in s.sets.iter().rev() {
        let k = set.kind_name().to_string();
        if !kinds.iter().any(|x| x.starts_with(&format!("{k}="))) {
            kinds.push(format!("{k}={set:?}"));
        }
    }
    kinds.sort();
    (s.action, kinds)
}

// ---- random configs ----

pub fn pick<'a, T>(r: &mut ChaCha8Rng, xs: &'a [T]) -> &'a T {
    xs.choose(r).expect("non-empty pool")
}

pub fn random_atom(r: &mut ChaCha8Rng) -> String {
    let n = *pick(r, &ASNS);
    match r.random_range(0..5) {
        0 => format!("_{n}_"),
        1 => format!("_{n}$"),
        2 => format!("^{n}_"),
        3 => format!("^{n}$"),
        _ => "^$".to_string(),
    }
}

fn random_prefix_entry(r: &mut ChaCha8Rng) -> String {
    let base = *pick(r, &BASES);
    let len: u8 = base.split('/').nth(1).unwrap().parse().unwrap();
    let action = if r.random_bool(0.75) { "permit" } else { "deny" };
    let bounds = match r.random_range(0..4) {
        0 => String::new(),
        1 => format!(" le {}", r.random_range(len..=10)),
        2 => {
            let ge = r.random_range(len..=10);
            format!(" ge {ge} le {}", r.random_range(ge..=10))
        }
        _ => {
            let ge = r.random_range(len..=10);
            format!(" ge {ge} le 10")
        }
    };
    format!("{action} {base}{bounds}")
}

pub fn random_communities(r: &mut ChaCha8Rng, min: usize) -> Vec<Community> {
    loop {
        let v: Vec<Community> = COMMUNITIES.iter().copied().filter(|_| r.random_bool(0.5)).collect();
        if v.len() >= min {
            return v;
        }
    }
}

pub fn join(cs: &[Community]) -> String {
    cs.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

/// Lists PL0/PL1, CL0/CL1, AP0/AP1 as config text.
pub fn random_lists(r: &mut ChaCha8Rng) -> String {
    let mut out = String::new();
    for name in ["PL0", "PL1"] {
        for i in 0..r.random_range(1..=3) {
            let _ = writeln!(out, "ip prefix-list {name} seq {} {}", (i + 1) * 5, random_prefix_entry(r));
        }
    }
    for name in ["CL0", "CL1"] {
        let expanded = r.random_bool(0.4);
        for _ in 0..r.random_range(1..=2) {
            let action = if r.random_bool(0.75) { "permit" } else { "deny" };
            if expanded {
                let _ = writeln!(out, "ip community-list expanded {name} {action} _{}_", pick(r, &COMMUNITIES));
            } else {
                let cs = random_communities(r, 1);
                let _ = writeln!(out, "ip community-list standard {name} {action} {}", join(&cs[..cs.len().min(2)]));
            }
        }
    }
    for name in ["AP0", "AP1"] {
        for _ in 0..r.random_range(1..=2) {
            let action = if r.random_bool(0.75) { "permit" } else { "deny" };
            let _ = writeln!(out, "ip as-path access-list {name} {action} {}", random_atom(r));
        }
    }
    out
}

pub fn random_matches(r: &mut ChaCha8Rng, suffix: &str) -> String {
    let mut kinds = [0, 1, 2, 3, 4];
    rand::seq::SliceRandom::shuffle(&mut kinds[..], r);
    let mut out = String::new();
    for &kind in &kinds[..r.random_range(0..=2)] {
        let line = match kind {
            0 => format!(" match ip address prefix-list PL{}{suffix}", r.random_range(0..2)),
            1 => format!(" match community CL{}{suffix}", r.random_range(0..2)),
            2 => format!(" match as-path AP{}{suffix}", r.random_range(0..2)),
            3 => format!(" match local-preference {}", pick(r, &MATCH_LOCAL_PREFS)),
            _ => " match tag 1".to_string(),
        };
        let _ = writeln!(out, "{line}");
    }
    out
}

pub fn random_sets(r: &mut ChaCha8Rng) -> String {
    let mut out = String::new();
    let options: [&dyn Fn(&mut ChaCha8Rng) -> String; 6] = [
        &|_| " set metric 55".into(),
        &|_| " set local-preference 300".into(),
        &|_| format!(" set ip next-hop {NEXT_HOP}"),
        &|_| " set weight 7".into(),
        &|_| " set tag 1".into(),
        &|r| {
            let cs = random_communities(r, 1);
            if r.random_bool(0.5) {
                format!(" set community {} additive", join(&cs))
            } else {
                format!(" set community {}", join(&cs))
            }
        },
    ];
    for f in options {
        if r.random_bool(0.3) {
            let _ = writeln!(out, "{}", f(r));
        }
    }
    out
}

pub fn random_stanza(r: &mut ChaCha8Rng, map: &str, seq: u32, suffix: &str) -> String {
    let permit = r.random_bool(0.6);
    let mut out = format!("route-map {map} {} {seq}\n", if permit { "permit" } else { "deny" });
    out.push_str(&random_matches(r, suffix));
    if permit {
        out.push_str(&random_sets(r));
    }
    out
}

pub fn random_route_map(r: &mut ChaCha8Rng, name: &str) -> String {
    let mut out = String::new();
    for i in 0..r.random_range(1..=5) {
        out.push_str(&random_stanza(r, name, (i + 1) * 10, ""));
    }
    out
}

const ACL_SELECTORS: [&str; 6] = [
    "any",
    "host 1.1.1.1",
    "host 2.2.2.2",
    "10.0.0.0 0.255.255.255",
    "10.0.0.0 0.127.255.255",
    "10.128.0.0 0.127.255.255",
];
const ACL_PORT_QUALS: [&str; 4] = ["eq 53", "eq 80", "range 1000 2000", "range 50 60"];

pub fn random_acl_rule(r: &mut ChaCha8Rng) -> String {
    let action = if r.random_bool(0.5) { "permit" } else { "deny" };
    let proto = *pick(r, &["ip", "tcp", "udp", "icmp"]);
    let ported = proto == "tcp" || proto == "udp";
    let side = |r: &mut ChaCha8Rng| {
        let mut s = pick(r, &ACL_SELECTORS).to_string();
        if ported && r.random_bool(0.4) {
            s.push(' ');
            s.push_str(pick(r, &ACL_PORT_QUALS));
        }
        s
    };
    let src = side(r);
    let dst = side(r);
    format!("{action} {proto} {src} {dst}")
}

pub fn random_acl(r: &mut ChaCha8Rng, name: &str) -> String {
    let mut out = format!("ip access-list extended {name}\n");
    for _ in 0..r.random_range(1..=5) {
        let _ = writeln!(out, " {}", random_acl_rule(r));
    }
    out
}

/// Lists, route-maps RM and RM2, ACL ACL1, plus query material: route-map
/// PROBE (three match-only stanzas) and ACL PROBEACL (three rules).
pub fn random_config_text(seed: u64) -> String {
    let mut r = rng(seed);
    let mut out = random_lists(&mut r);
    out.push_str(&random_route_map(&mut r, "RM"));
    out.push_str(&random_route_map(&mut r, "RM2"));
    for seq in [10, 20, 30] {
        let _ = write!(out, "route-map PROBE permit {seq}\n{}", random_matches(&mut r, ""));
    }
    out.push_str(&random_acl(&mut r, "ACL1"));
    out.push_str("ip access-list extended PROBEACL\n");
    for _ in 0..3 {
        let _ = writeln!(out, " {}", random_acl_rule(&mut r));
    }
    out
}

/// A one-stanza snippet with its own lists (suffix `S` on list names).
pub fn random_snippet_text(seed: u64) -> String {
    let mut r = rng(seed ^ 0x5eed);
    let lists = random_lists(&mut r)
        .replace("PL0 ", "PL0S ")
        .replace("PL1 ", "PL1S ")
        .replace("CL0 ", "CL0S ")
        .replace("CL1 ", "CL1S ")
        .replace("AP0 ", "AP0S ")
        .replace("AP1 ", "AP1S ");
    let mut stanza = random_stanza(&mut r, "NEW", 10, "S");
    // Keep only lists the stanza references, so the snippet is clean.
    let mut out = String::new();
    for line in lists.lines() {
        let name = line.split_whitespace().nth(3).unwrap_or_default();
        let name = if line.starts_with("ip prefix-list") { line.split_whitespace().nth(2).unwrap() } else { name };
        if stanza.contains(&format!(" {name}\n")) {
            let _ = writeln!(out, "{line}");
        }
    }
    out.push_str(&std::mem::take(&mut stanza));
    out
}

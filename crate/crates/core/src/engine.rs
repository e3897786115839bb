//! Concrete first-match evaluation and the symbolic policy queries built on
//! top of [`crate::symbolic`].

use std::collections::BTreeSet;
use std::fmt;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::*;
use crate::symbolic::*;
use crate::ScalarSet;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum EngineError {
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error("unknown route-map `{0}`")]
    UnknownRouteMap(String),
}

/// Which rule decided: a stanza sequence number or the trailing implicit
/// deny. Serializes as the number or the string `IMPLICIT_DENY`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Position {
    Seq(u32),
    ImplicitDeny,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Position::Seq(s) => write!(f, "{s}"),
            Position::ImplicitDeny => f.write_str("IMPLICIT_DENY"),
        }
    }
}

impl Serialize for Position {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Position::Seq(n) => s.serialize_u32(*n),
            Position::ImplicitDeny => s.serialize_str("IMPLICIT_DENY"),
        }
    }
}

impl<'de> Deserialize<'de> for Position {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u32),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(Position::Seq(n)),
            Raw::S(s) if s == "IMPLICIT_DENY" => Ok(Position::ImplicitDeny),
            Raw::S(s) => Err(serde::de::Error::custom(format!("bad position `{s}`"))),
        }
    }
}

/// Result of running one route through a route-map.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Verdict {
    pub action: Action,
    pub matched_seq: Position,
    /// Present iff the route is permitted.
    pub output_route: Option<Route>,
}

impl Verdict {
    /// Equal action and output; which stanza decided is ignored.
    pub fn same_behavior(&self, other: &Verdict) -> bool {
        self.action == other.action && self.output_route == other.output_route
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "op", content = "communities")]
pub enum CommunityOp {
    #[default]
    Pass,
    Add(BTreeSet<Community>),
    Replace(BTreeSet<Community>),
}

/// Attribute rewrites of a permitting stanza. `None` leaves the attribute
/// unchanged.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Transform {
    pub metric: Option<u32>,
    pub local_pref: Option<u32>,
    pub next_hop: Option<Ipv4Addr>,
    pub weight: Option<u16>,
    pub tag: Option<u32>,
    pub community: CommunityOp,
}

impl Transform {
    pub fn from_sets(sets: &[SetClause]) -> Self {
        let mut t = Self::default();
        for s in sets {
            match s {
                SetClause::Metric(v) => t.metric = Some(*v),
                SetClause::LocalPref(v) => t.local_pref = Some(*v),
                SetClause::NextHop(a) => t.next_hop = Some(*a),
                SetClause::Weight(v) => t.weight = Some(*v),
                SetClause::Tag(v) => t.tag = Some(*v),
                SetClause::CommunityAdd(c) => t.community = CommunityOp::Add(c.clone()),
                SetClause::CommunityReplace(c) => t.community = CommunityOp::Replace(c.clone()),
            }
        }
        t
    }

    pub fn scalar(&self, d: ScalarDim) -> Option<u32> {
        match d {
            ScalarDim::LocalPref => self.local_pref,
            ScalarDim::Med => self.metric,
            ScalarDim::Tag => self.tag,
            ScalarDim::Weight => self.weight.map(u32::from),
            ScalarDim::NextHop => self.next_hop.map(u32::from),
        }
    }

    /// Applies metric, local preference, next hop, weight, tag, community.
    pub fn apply(&self, r: &Route) -> Route {
        let mut out = r.clone();
        for d in [ScalarDim::Med, ScalarDim::LocalPref, ScalarDim::NextHop, ScalarDim::Weight, ScalarDim::Tag] {
            if let Some(v) = self.scalar(d) {
                d.assign(&mut out, v);
            }
        }
        match &self.community {
            CommunityOp::Pass => {}
            CommunityOp::Add(v) => out.communities.extend(v.iter().copied()),
            CommunityOp::Replace(v) => out.communities = v.clone(),
        }
        out
    }

    pub fn communities(&self) -> BTreeSet<Community> {
        match &self.community {
            CommunityOp::Pass => BTreeSet::new(),
            CommunityOp::Add(v) | CommunityOp::Replace(v) => v.clone(),
        }
    }
}

/// What a rule does to the routes it handles.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "action", content = "transform")]
pub enum Outcome {
    Deny,
    Permit(Transform),
}

impl Outcome {
    pub fn of_stanza(s: &Stanza) -> Self {
        match s.action {
            Action::Deny => Outcome::Deny,
            Action::Permit => Outcome::Permit(Transform::from_sets(&s.sets)),
        }
    }

    pub fn action(&self) -> Action {
        match self {
            Outcome::Deny => Action::Deny,
            Outcome::Permit(_) => Action::Permit,
        }
    }

    pub fn verdict(&self, r: &Route, matched_seq: Position) -> Verdict {
        match self {
            Outcome::Deny => Verdict { action: Action::Deny, matched_seq, output_route: None },
            Outcome::Permit(t) => Verdict { action: Action::Permit, matched_seq, output_route: Some(t.apply(r)) },
        }
    }

    fn communities(&self) -> BTreeSet<Community> {
        match self {
            Outcome::Deny => BTreeSet::new(),
            Outcome::Permit(t) => t.communities(),
        }
    }
}

fn match_condition(m: &MatchCondition, r: &Route, c: &Config) -> bool {
    match m {
        MatchCondition::PrefixList(n) => c.prefix_lists.get(n).is_some_and(|l| l.permits(&r.network)),
        MatchCondition::CommunityList(n) => c.community_lists.get(n).is_some_and(|l| l.permits(&r.communities)),
        MatchCondition::AsPathList(n) => c.as_path_lists.get(n).is_some_and(|l| l.permits(&r.as_path)),
        MatchCondition::LocalPref(v) => r.local_pref == *v,
        MatchCondition::Tag(v) => r.tag == *v,
    }
}

/// Conjunction of the stanza's match lines; a reference to an undefined
/// list never matches.
pub fn matches(r: &Route, s: &Stanza, c: &Config) -> bool {
    s.matches.iter().all(|m| match_condition(m, r, c))
}

pub fn evaluate(rm: &RouteMap, r: &Route, c: &Config) -> Verdict {
    for s in &rm.stanzas {
        if matches(r, s, c) {
            return Outcome::of_stanza(s).verdict(r, Position::Seq(s.seq));
        }
    }
    Outcome::Deny.verdict(r, Position::ImplicitDeny)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AclVerdict {
    pub action: Action,
    /// Index of the deciding rule; `None` for the implicit deny.
    pub matched_index: Option<usize>,
}

pub fn evaluate_acl(a: &Acl, p: &Packet) -> AclVerdict {
    match a.rules.iter().position(|r| r.matches(p)) {
        Some(i) => AclVerdict { action: a.rules[i].action, matched_index: Some(i) },
        None => AclVerdict { action: Action::Deny, matched_index: None },
    }
}

/// A community that appears nowhere in `mentioned`; stands for "some other
/// community" in symbolic queries.
pub fn fresh_community(mentioned: &BTreeSet<Community>) -> Community {
    let mut c = Community::new(u16::MAX, u16::MAX);
    while mentioned.contains(&c) {
        c = if c.value > 0 { Community::new(c.asn, c.value - 1) } else { Community::new(c.asn - 1, u16::MAX) };
    }
    c
}

/// Communities mentioned by a set of route spaces.
pub fn space_communities<'a>(spaces: impl IntoIterator<Item = &'a RouteSpace>) -> BTreeSet<Community> {
    let mut out = BTreeSet::new();
    for s in spaces {
        for c in s.cubes() {
            out.extend(c.community.requires.iter().copied());
            out.extend(c.community.forbids.iter().copied());
        }
    }
    out
}

fn forbid_one(c: Community) -> RouteConstraints {
    RouteConstraints::with_community(CommunityConstraint::forbidding([c]))
}

fn require_one(c: Community) -> RouteConstraints {
    RouteConstraints::with_community(CommunityConstraint::requiring([c]))
}

/// Inputs whose community sets come out different. "Has a community
/// outside V" cannot be written as a finite conjunction, so it is covered by
/// requiring one of the mentioned communities outside V or a fresh one;
/// this is exact for satisfiability whenever every other constraint only
/// mentions communities in `mentioned`.
fn community_differs(a: &CommunityOp, b: &CommunityOp, mentioned: &BTreeSet<Community>) -> Vec<RouteConstraints> {
    use CommunityOp::*;
    let outside = |v: &BTreeSet<Community>| -> Vec<RouteConstraints> {
        let mut all = mentioned.clone();
        all.extend(v.iter().copied());
        let fresh = fresh_community(&all);
        all.insert(fresh);
        all.difference(v).map(|&y| require_one(y)).collect()
    };
    match (a, b) {
        (Pass, Pass) => vec![],
        (Add(v), Add(w)) => v.symmetric_difference(w).map(|&x| forbid_one(x)).collect(),
        (Pass, Add(v)) | (Add(v), Pass) => v.iter().map(|&x| forbid_one(x)).collect(),
        (Replace(v), Replace(w)) => {
            if v == w {
                vec![]
            } else {
                vec![RouteConstraints::full()]
            }
        }
        (Pass, Replace(v)) | (Replace(v), Pass) => {
            let mut out: Vec<RouteConstraints> = v.iter().map(|&x| forbid_one(x)).collect();
            out.extend(outside(v));
            out
        }
        (Add(v), Replace(w)) | (Replace(w), Add(v)) => {
            if !v.is_subset(w) {
                return vec![RouteConstraints::full()];
            }
            let mut out: Vec<RouteConstraints> = w.difference(v).map(|&x| forbid_one(x)).collect();
            out.extend(outside(w));
            out
        }
    }
}

/// Inputs on which the two outcomes produce a different action or output
/// route. `mentioned` must include every community used by constraints the
/// result will be combined with.
pub fn differs(a: &Outcome, b: &Outcome, mentioned: &BTreeSet<Community>) -> RouteSpace {
    match (a, b) {
        (Outcome::Deny, Outcome::Deny) => RouteSpace::empty(),
        (Outcome::Deny, Outcome::Permit(_)) | (Outcome::Permit(_), Outcome::Deny) => RouteSpace::full(),
        (Outcome::Permit(s), Outcome::Permit(t)) => {
            let mut cubes = Vec::new();
            for d in ScalarDim::ALL {
                match (s.scalar(d), t.scalar(d)) {
                    (None, None) => {}
                    (Some(v), Some(w)) => {
                        if v != w {
                            cubes.push(RouteConstraints::full());
                        }
                    }
                    (Some(v), None) | (None, Some(v)) => {
                        cubes.push(RouteConstraints::with_scalar(d, d.universe().subtract(&ScalarSet::single(v))));
                    }
                }
            }
            cubes.extend(community_differs(&s.community, &t.community, mentioned));
            RouteSpace::from_cubes(cubes)
        }
    }
}

/// Inputs whose output under `o` lands in the cube `out`.
fn preimage_cube(t: &Transform, out: &RouteConstraints) -> Option<RouteConstraints> {
    let mut r = out.clone();
    for d in ScalarDim::ALL {
        if let Some(v) = t.scalar(d) {
            if !out.scalars.get(d).contains(v) {
                return None;
            }
            *r.scalars.get_mut(d) = d.universe();
        }
    }
    match &t.community {
        CommunityOp::Pass => {}
        CommunityOp::Add(v) => {
            if !out.community.forbids.is_disjoint(v) {
                return None;
            }
            r.community.requires = out.community.requires.difference(v).copied().collect();
        }
        CommunityOp::Replace(v) => {
            if !(out.community.requires.is_subset(v) && out.community.forbids.is_disjoint(v)) {
                return None;
            }
            r.community = CommunityConstraint::full();
        }
    }
    Some(r)
}

/// Inputs a permitting outcome maps into `out`; empty for deny.
pub fn preimage(o: &Outcome, out: &RouteSpace) -> RouteSpace {
    match o {
        Outcome::Deny => RouteSpace::empty(),
        Outcome::Permit(t) => RouteSpace::from_cubes(out.cubes().iter().filter_map(|c| preimage_cube(t, c))),
    }
}

/// One first-match region of a route-map: the inputs a rule actually
/// decides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Region {
    pub position: Position,
    pub outcome: Outcome,
    /// Everything the rule's match lines select.
    pub space: RouteSpace,
    /// `space` minus everything matched by earlier rules.
    pub reach: RouteSpace,
}

/// Regions of every stanza plus the implicit deny, in evaluation order.
pub fn regions(rm: &RouteMap, c: &Config) -> Result<Vec<Region>, EngineError> {
    let mut out = Vec::with_capacity(rm.stanzas.len() + 1);
    let mut covered = RouteSpace::empty();
    for s in &rm.stanzas {
        let space = stanza_space(s, c)?;
        let reach = space.subtract(&covered);
        covered = covered.union(&space);
        out.push(Region { position: Position::Seq(s.seq), outcome: Outcome::of_stanza(s), space, reach });
    }
    out.push(Region {
        position: Position::ImplicitDeny,
        outcome: Outcome::Deny,
        space: RouteSpace::full(),
        reach: covered.complement(),
    });
    Ok(out)
}

/// Three-valued search result. `Inconclusive` means a region is non-empty
/// but every member needs an AS path longer than the witness bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "result", content = "witness")]
pub enum SearchOutcome<T> {
    Found(T),
    NotFound,
    Inconclusive(String),
}

impl<T> SearchOutcome<T> {
    pub fn found(&self) -> Option<&T> {
        match self {
            SearchOutcome::Found(t) => Some(t),
            _ => None,
        }
    }

    pub fn is_not_found(&self) -> bool {
        matches!(self, SearchOutcome::NotFound)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum OutputPolarity {
    /// The permitted output must lie in the constraint.
    Meets,
    /// The permitted output must lie outside it.
    Violates,
}

/// Constraint on the output route of a permitted input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputQuery {
    pub space: RouteSpace,
    pub polarity: OutputPolarity,
}

/// Searches each candidate region in order and returns the first witness.
fn first_witness(regions: impl IntoIterator<Item = RouteSpace>) -> SearchOutcome<Route> {
    let mut inconclusive = None;
    for r in regions {
        match r.witness() {
            Ok(Some(w)) => return SearchOutcome::Found(w),
            Ok(None) => {}
            Err(e) => inconclusive = Some(e.to_string()),
        }
    }
    match inconclusive {
        Some(e) => SearchOutcome::Inconclusive(e),
        None => SearchOutcome::NotFound,
    }
}

/// A route in `input` that the map handles with `action` (and whose output,
/// when permitted, meets or violates `output`).
pub fn search_route_policies(
    rm: &RouteMap,
    c: &Config,
    action: Action,
    input: &RouteSpace,
    output: Option<&OutputQuery>,
) -> Result<SearchOutcome<Route>, EngineError> {
    let regions = regions(rm, c)?;
    let candidates = regions.into_iter().filter(|r| r.outcome.action() == action).map(|r| {
        let mut space = r.reach.intersect(input);
        if let (Some(q), Outcome::Permit(_)) = (output, &r.outcome) {
            let pre = preimage(&r.outcome, &q.space);
            space = match q.polarity {
                OutputPolarity::Meets => space.intersect(&pre),
                OutputPolarity::Violates => space.subtract(&pre),
            };
        }
        space
    });
    Ok(first_witness(candidates))
}

/// First-match regions of an ACL: per rule index plus the implicit deny.
pub fn acl_regions(a: &Acl) -> Vec<(Option<usize>, Action, HeaderSpace)> {
    let mut out = Vec::with_capacity(a.rules.len() + 1);
    let mut covered = HeaderSpace::empty();
    for (i, r) in a.rules.iter().enumerate() {
        let space = HeaderSpace::of_rule(r);
        out.push((Some(i), r.action, space.subtract(&covered)));
        covered = covered.union(&space);
    }
    out.push((None, Action::Deny, covered.complement()));
    out
}

/// A packet in `headers` the ACL handles with `action`. Exact.
pub fn search_filters(a: &Acl, action: Action, headers: &HeaderSpace) -> Option<Packet> {
    acl_regions(a)
        .into_iter()
        .filter(|(_, act, _)| *act == action)
        .find_map(|(_, _, reach)| reach.intersect(headers).witness())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Difference {
    pub input_route: Route,
    pub verdict_a: Verdict,
    pub verdict_b: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Comparison {
    /// One difference per pair of deciding rules that disagree somewhere,
    /// ordered by (rule in A, rule in B).
    pub differences: Vec<Difference>,
    /// Rule pairs whose disagreement region needs AS paths beyond the bound.
    pub inconclusive: Vec<(Position, Position)>,
}

/// Every pair of deciding rules (one from each map) that treat some input
/// in `scope` differently, with one witness each.
pub fn compare_route_policies(
    a: &RouteMap,
    b: &RouteMap,
    c: &Config,
    scope: &RouteSpace,
) -> Result<Comparison, EngineError> {
    let ra = regions(a, c)?;
    let rb = regions(b, c)?;
    let mut mentioned = c.mentioned_communities();
    mentioned.extend(space_communities([scope]));
    let mut out = Comparison::default();
    for x in &ra {
        let xs = x.reach.intersect(scope);
        if xs.is_empty() {
            continue;
        }
        for y in &rb {
            let both = xs.intersect(&y.reach);
            if both.is_empty() {
                continue;
            }
            let mut m = mentioned.clone();
            m.extend(x.outcome.communities());
            m.extend(y.outcome.communities());
            let region = both.intersect(&differs(&x.outcome, &y.outcome, &m));
            match region.witness() {
                Ok(Some(r)) => out.differences.push(Difference {
                    verdict_a: evaluate(a, &r, c),
                    verdict_b: evaluate(b, &r, c),
                    input_route: r,
                }),
                Ok(None) => {}
                Err(_) => out.inconclusive.push((x.position, y.position)),
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum OverlapKind {
    Overlap,
    Conflicting,
}

impl fmt::Display for OverlapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OverlapKind::Overlap => "overlap",
            OverlapKind::Conflicting => "conflicting",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PolicyKind {
    RouteMap,
    Acl,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OverlapWitness {
    Route(Route),
    Packet(Packet),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OverlapEntry {
    pub policy: String,
    pub policy_kind: PolicyKind,
    /// Stanza sequence numbers for route-maps, 0-based rule indices for ACLs.
    pub seq_a: u32,
    pub seq_b: u32,
    pub kind: OverlapKind,
    /// One rule's match set contains the other's.
    pub trivial_subset: bool,
    pub witness: OverlapWitness,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InconclusivePair {
    pub policy: String,
    pub seq_a: u32,
    pub seq_b: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OverlapReport {
    pub note: String,
    pub entries: Vec<OverlapEntry>,
    pub inconclusive: Vec<InconclusivePair>,
}

pub const OVERLAP_NOTE: &str = "Route-map pairs overlap when one route matches both stanzas regardless of action; \
kind is conflicting when their actions or set clauses differ. ACL pairs are counted per rule pair and are \
conflicting when actions differ. ACL rules are identified by 0-based index.";

/// Overlapping rule pairs of every route-map and ACL in `c`, sorted by
/// (policy, seqA, seqB).
pub fn overlap_census(c: &Config) -> Result<OverlapReport, EngineError> {
    let mut entries = Vec::new();
    let mut inconclusive = Vec::new();
    for rm in c.route_maps.values() {
        let spaces: Vec<RouteSpace> = rm.stanzas.iter().map(|s| stanza_space(s, c)).collect::<Result<_, _>>()?;
        for i in 0..rm.stanzas.len() {
            for j in i + 1..rm.stanzas.len() {
                let (sa, sb) = (&rm.stanzas[i], &rm.stanzas[j]);
                match spaces[i].intersect(&spaces[j]).witness() {
                    Ok(Some(w)) => {
                        let kind = if Outcome::of_stanza(sa) == Outcome::of_stanza(sb) {
                            OverlapKind::Overlap
                        } else {
                            OverlapKind::Conflicting
                        };
                        entries.push(OverlapEntry {
                            policy: rm.name.clone(),
                            policy_kind: PolicyKind::RouteMap,
                            seq_a: sa.seq,
                            seq_b: sb.seq,
                            kind,
                            trivial_subset: spaces[i].is_subset(&spaces[j]) || spaces[j].is_subset(&spaces[i]),
                            witness: OverlapWitness::Route(w),
                        });
                    }
                    Ok(None) => {}
                    Err(_) => {
                        inconclusive.push(InconclusivePair { policy: rm.name.clone(), seq_a: sa.seq, seq_b: sb.seq })
                    }
                }
            }
        }
    }
    for acl in c.acls.values() {
        let spaces: Vec<HeaderSpace> = acl.rules.iter().map(HeaderSpace::of_rule).collect();
        for i in 0..spaces.len() {
            for j in i + 1..spaces.len() {
                if let Some(p) = spaces[i].intersect(&spaces[j]).witness() {
                    let kind = if acl.rules[i].action == acl.rules[j].action {
                        OverlapKind::Overlap
                    } else {
                        OverlapKind::Conflicting
                    };
                    entries.push(OverlapEntry {
                        policy: acl.name.clone(),
                        policy_kind: PolicyKind::Acl,
                        seq_a: i as u32,
                        seq_b: j as u32,
                        kind,
                        trivial_subset: spaces[i].is_subset(&spaces[j]) || spaces[j].is_subset(&spaces[i]),
                        witness: OverlapWitness::Packet(p),
                    });
                }
            }
        }
    }
    entries.sort_by(|a, b| {
        (&a.policy, a.policy_kind, a.seq_a, a.seq_b).cmp(&(&b.policy, b.policy_kind, b.seq_a, b.seq_b))
    });
    Ok(OverlapReport { note: OVERLAP_NOTE.to_string(), entries, inconclusive })
}

impl OverlapReport {
    /// Drops pairs where one rule's match set contains the other's.
    pub fn without_trivial(&self) -> Self {
        Self { entries: self.entries.iter().filter(|e| !e.trivial_subset).cloned().collect(), ..self.clone() }
    }

    pub fn count(&self, kind: OverlapKind) -> usize {
        self.entries.iter().filter(|e| e.kind == kind).count()
    }

    /// Columns: policy, seqA, seqB, kind, trivialSubset, witness (JSON).
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["policy", "seqA", "seqB", "kind", "trivialSubset", "witness"])?;
        for e in &self.entries {
            let witness = serde_json::to_string(&e.witness).expect("witness serializes");
            w.write_record([
                e.policy.clone(),
                e.seq_a.to_string(),
                e.seq_b.to_string(),
                e.kind.to_string(),
                e.trivial_subset.to_string(),
                witness,
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

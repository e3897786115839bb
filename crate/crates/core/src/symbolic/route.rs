use std::collections::BTreeSet;
use std::fmt;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use super::aspath::{AsPathConstraint, AsPathLiteral, DEFAULT_PATH_BOUND};
use super::prefix::PrefixSpace;
use super::SymbolicError;
use crate::model::{Community, Route};
use crate::ScalarSet;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct CommunityConstraint {
    pub requires: BTreeSet<Community>,
    pub forbids: BTreeSet<Community>,
}

impl CommunityConstraint {
    pub fn full() -> Self {
        Self::default()
    }

    pub fn requiring(cs: impl IntoIterator<Item = Community>) -> Self {
        Self { requires: cs.into_iter().collect(), forbids: BTreeSet::new() }
    }

    pub fn forbidding(cs: impl IntoIterator<Item = Community>) -> Self {
        Self { requires: BTreeSet::new(), forbids: cs.into_iter().collect() }
    }

    pub fn is_full(&self) -> bool {
        self.requires.is_empty() && self.forbids.is_empty()
    }

    pub fn is_satisfiable(&self) -> bool {
        self.requires.is_disjoint(&self.forbids)
    }

    pub fn and(&self, other: &Self) -> Self {
        Self {
            requires: self.requires.union(&other.requires).copied().collect(),
            forbids: self.forbids.union(&other.forbids).copied().collect(),
        }
    }

    pub fn matches(&self, cs: &BTreeSet<Community>) -> bool {
        self.requires.is_subset(cs) && self.forbids.is_disjoint(cs)
    }
}

/// The integer-valued route attributes a constraint can range over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ScalarDim {
    LocalPref,
    Med,
    Tag,
    Weight,
    NextHop,
}

impl ScalarDim {
    pub const ALL: [ScalarDim; 5] =
        [ScalarDim::LocalPref, ScalarDim::Med, ScalarDim::Tag, ScalarDim::Weight, ScalarDim::NextHop];

    /// Every value the attribute can take.
    pub fn universe(self) -> ScalarSet {
        match self {
            ScalarDim::Weight => ScalarSet::range(0, u16::MAX as u32),
            _ => ScalarSet::full(),
        }
    }

    /// Value used in witnesses when it is allowed.
    pub fn default_value(self) -> u32 {
        match self {
            ScalarDim::LocalPref => Route::DEFAULT_LOCAL_PREF,
            ScalarDim::NextHop => u32::from(Route::DEFAULT_NEXT_HOP),
            _ => 0,
        }
    }

    pub fn of(self, r: &Route) -> u32 {
        match self {
            ScalarDim::LocalPref => r.local_pref,
            ScalarDim::Med => r.med,
            ScalarDim::Tag => r.tag,
            ScalarDim::Weight => r.weight as u32,
            ScalarDim::NextHop => u32::from(r.next_hop),
        }
    }

    pub fn assign(self, r: &mut Route, v: u32) {
        match self {
            ScalarDim::LocalPref => r.local_pref = v,
            ScalarDim::Med => r.med = v,
            ScalarDim::Tag => r.tag = v,
            ScalarDim::Weight => r.weight = v as u16,
            ScalarDim::NextHop => r.next_hop = Ipv4Addr::from(v),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScalarDim::LocalPref => "localPref",
            ScalarDim::Med => "med",
            ScalarDim::Tag => "tag",
            ScalarDim::Weight => "weight",
            ScalarDim::NextHop => "nextHop",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScalarConstraint {
    pub local_pref: ScalarSet,
    pub med: ScalarSet,
    pub tag: ScalarSet,
    pub weight: ScalarSet,
    pub next_hop: ScalarSet,
}

impl Default for ScalarConstraint {
    fn default() -> Self {
        Self::full()
    }
}

impl ScalarConstraint {
    pub fn full() -> Self {
        Self {
            local_pref: ScalarDim::LocalPref.universe(),
            med: ScalarDim::Med.universe(),
            tag: ScalarDim::Tag.universe(),
            weight: ScalarDim::Weight.universe(),
            next_hop: ScalarDim::NextHop.universe(),
        }
    }

    pub fn get(&self, d: ScalarDim) -> &ScalarSet {
        match d {
            ScalarDim::LocalPref => &self.local_pref,
            ScalarDim::Med => &self.med,
            ScalarDim::Tag => &self.tag,
            ScalarDim::Weight => &self.weight,
            ScalarDim::NextHop => &self.next_hop,
        }
    }

    pub fn get_mut(&mut self, d: ScalarDim) -> &mut ScalarSet {
        match d {
            ScalarDim::LocalPref => &mut self.local_pref,
            ScalarDim::Med => &mut self.med,
            ScalarDim::Tag => &mut self.tag,
            ScalarDim::Weight => &mut self.weight,
            ScalarDim::NextHop => &mut self.next_hop,
        }
    }

    /// Unconstrained except for `d`, which must lie in `set`.
    pub fn only(d: ScalarDim, set: ScalarSet) -> Self {
        let mut s = Self::full();
        *s.get_mut(d) = set.intersect(&d.universe());
        s
    }

    pub fn is_full_in(&self, d: ScalarDim) -> bool {
        *self.get(d) == d.universe()
    }

    pub fn is_empty(&self) -> bool {
        ScalarDim::ALL.iter().any(|&d| self.get(d).is_empty())
    }

    pub fn and(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for d in ScalarDim::ALL {
            *out.get_mut(d) = self.get(d).intersect(other.get(d));
        }
        out
    }

    pub fn matches(&self, r: &Route) -> bool {
        ScalarDim::ALL.iter().all(|&d| self.get(d).contains(d.of(r)))
    }
}

/// A conjunction over every route dimension (a "cube"; the prefix
/// dimension itself may be a union).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RouteConstraints {
    pub prefix: PrefixSpace,
    pub community: CommunityConstraint,
    pub as_path: AsPathConstraint,
    pub scalars: ScalarConstraint,
}

impl Default for RouteConstraints {
    fn default() -> Self {
        Self::full()
    }
}

impl RouteConstraints {
    pub fn full() -> Self {
        Self {
            prefix: PrefixSpace::full(),
            community: CommunityConstraint::full(),
            as_path: AsPathConstraint::full(),
            scalars: ScalarConstraint::full(),
        }
    }

    pub fn with_prefix(prefix: PrefixSpace) -> Self {
        Self { prefix, ..Self::full() }
    }

    pub fn with_community(community: CommunityConstraint) -> Self {
        Self { community, ..Self::full() }
    }

    pub fn with_as_path(as_path: AsPathConstraint) -> Self {
        Self { as_path, ..Self::full() }
    }

    pub fn with_scalar(d: ScalarDim, set: ScalarSet) -> Self {
        Self { scalars: ScalarConstraint::only(d, set), ..Self::full() }
    }

    pub fn intersect(&self, other: &Self) -> Self {
        Self {
            prefix: self.prefix.intersect(&other.prefix),
            community: self.community.and(&other.community),
            as_path: self.as_path.and(&other.as_path),
            scalars: self.scalars.and(&other.scalars),
        }
    }

    /// Cheap necessary condition; used to prune before the AS-path check.
    fn trivially_empty(&self) -> bool {
        self.prefix.is_empty() || !self.community.is_satisfiable() || self.scalars.is_empty()
    }

    pub fn is_satisfiable(&self) -> bool {
        !self.trivially_empty() && self.as_path.is_satisfiable()
    }

    pub fn matches(&self, r: &Route) -> bool {
        self.prefix.contains(&r.network)
            && self.community.matches(&r.communities)
            && self.as_path.matches(&r.as_path)
            && self.scalars.matches(r)
    }

    /// `self \ other` as pairwise disjoint cubes. Each literal of `other` is
    /// negated in turn while the earlier ones are kept, so the pieces are
    /// `self ∧ l1 ∧ … ∧ l(i-1) ∧ ¬li`.
    pub fn subtract(&self, other: &Self) -> Vec<Self> {
        if !self.intersect(other).is_satisfiable() {
            return vec![self.clone()];
        }
        let mut out = Vec::new();
        let mut keep = self.clone();
        let emit = |cube: Self, out: &mut Vec<Self>| {
            if cube.is_satisfiable() {
                out.push(cube);
            }
        };

        if !other.prefix.is_full() {
            emit(Self { prefix: keep.prefix.subtract(&other.prefix), ..keep.clone() }, &mut out);
            keep.prefix = keep.prefix.intersect(&other.prefix);
        }
        for c in &other.community.requires {
            let mut cube = keep.clone();
            cube.community.forbids.insert(*c);
            emit(cube, &mut out);
            keep.community.requires.insert(*c);
        }
        for c in &other.community.forbids {
            let mut cube = keep.clone();
            cube.community.requires.insert(*c);
            emit(cube, &mut out);
            keep.community.forbids.insert(*c);
        }
        for lit in other.as_path.literals() {
            let flipped = AsPathLiteral { atom: lit.atom, required: !lit.required };
            emit(Self { as_path: keep.as_path.with(flipped), ..keep.clone() }, &mut out);
            keep.as_path = keep.as_path.with(*lit);
        }
        for d in ScalarDim::ALL {
            if other.scalars.is_full_in(d) {
                continue;
            }
            let theirs = other.scalars.get(d);
            let mut cube = keep.clone();
            *cube.scalars.get_mut(d) = keep.scalars.get(d).subtract(theirs);
            emit(cube, &mut out);
            *keep.scalars.get_mut(d) = keep.scalars.get(d).intersect(theirs);
        }
        out
    }

    /// Deterministic member: smallest network by (address, length),
    /// communities exactly the required ones, shortest AS path, and each
    /// scalar at its default when allowed, otherwise at its minimum.
    pub fn witness(&self) -> Result<Option<Route>, SymbolicError> {
        self.witness_bounded(DEFAULT_PATH_BOUND)
    }

    pub fn witness_bounded(&self, bound: usize) -> Result<Option<Route>, SymbolicError> {
        if self.trivially_empty() {
            return Ok(None);
        }
        let Some(path) = self.as_path.witness(bound)? else { return Ok(None) };
        let network = self.prefix.min_member().expect("prefix space nonempty");
        let mut r = Route::new(network);
        r.as_path = path;
        r.communities = self.community.requires.clone();
        for d in ScalarDim::ALL {
            let v = self.scalars.get(d).pick(d.default_value()).expect("scalar set nonempty");
            d.assign(&mut r, v);
        }
        Ok(Some(r))
    }
}

impl fmt::Display for RouteConstraints {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if !self.prefix.is_full() {
            parts.push(format!("prefix {}", self.prefix));
        }
        if !self.community.requires.is_empty() {
            let v: Vec<String> = self.community.requires.iter().map(ToString::to_string).collect();
            parts.push(format!("requires {{{}}}", v.join(", ")));
        }
        if !self.community.forbids.is_empty() {
            let v: Vec<String> = self.community.forbids.iter().map(ToString::to_string).collect();
            parts.push(format!("forbids {{{}}}", v.join(", ")));
        }
        if !self.as_path.is_full() {
            parts.push(format!("asPath {}", self.as_path));
        }
        for d in ScalarDim::ALL {
            if !self.scalars.is_full_in(d) {
                parts.push(format!("{} {}", d.name(), self.scalars.get(d)));
            }
        }
        if parts.is_empty() {
            f.write_str("any route")
        } else {
            f.write_str(&parts.join("; "))
        }
    }
}

/// A finite union of [`RouteConstraints`]. The empty union is the empty set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RouteSpace {
    cubes: Vec<RouteConstraints>,
}

impl From<RouteConstraints> for RouteSpace {
    fn from(c: RouteConstraints) -> Self {
        Self::from_cubes([c])
    }
}

impl RouteSpace {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full() -> Self {
        Self { cubes: vec![RouteConstraints::full()] }
    }

    /// Keeps only satisfiable cubes.
    pub fn from_cubes(cubes: impl IntoIterator<Item = RouteConstraints>) -> Self {
        let mut out: Vec<RouteConstraints> = Vec::new();
        for c in cubes {
            if c.is_satisfiable() && !out.contains(&c) {
                out.push(c);
            }
        }
        Self { cubes: out }
    }

    pub fn cubes(&self) -> &[RouteConstraints] {
        &self.cubes
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// Cubes are satisfiable by construction.
    pub fn is_satisfiable(&self) -> bool {
        !self.cubes.is_empty()
    }

    pub fn matches(&self, r: &Route) -> bool {
        self.cubes.iter().any(|c| c.matches(r))
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::from_cubes(self.cubes.iter().chain(&other.cubes).cloned())
    }

    pub fn intersect(&self, other: &Self) -> Self {
        Self::from_cubes(self.cubes.iter().flat_map(|a| other.cubes.iter().map(move |b| a.intersect(b))))
    }

    pub fn subtract(&self, other: &Self) -> Self {
        let mut cur = self.cubes.clone();
        for b in &other.cubes {
            cur = cur.iter().flat_map(|a| a.subtract(b)).collect();
            if cur.is_empty() {
                break;
            }
        }
        Self::from_cubes(cur)
    }

    pub fn complement(&self) -> Self {
        Self::full().subtract(self)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.subtract(other).is_empty()
    }

    pub fn witness(&self) -> Result<Option<Route>, SymbolicError> {
        self.witness_bounded(DEFAULT_PATH_BOUND)
    }

    /// The smallest cube witness under [`witness_order`]. Inconclusive only
    /// when no cube yields a witness and at least one exceeded the bound.
    pub fn witness_bounded(&self, bound: usize) -> Result<Option<Route>, SymbolicError> {
        let mut best: Option<Route> = None;
        let mut exceeded = None;
        for c in &self.cubes {
            match c.witness_bounded(bound) {
                Ok(Some(r)) => {
                    if best.as_ref().is_none_or(|b| witness_order(&r) < witness_order(b)) {
                        best = Some(r);
                    }
                }
                Ok(None) => {}
                Err(e) => exceeded = Some(e),
            }
        }
        match (best, exceeded) {
            (Some(r), _) => Ok(Some(r)),
            (None, Some(e)) => Err(e),
            (None, None) => Ok(None),
        }
    }
}

/// Total order used to pick one witness among several candidates.
pub fn witness_order(r: &Route) -> impl Ord + '_ {
    (
        r.network.bits(),
        r.network.len(),
        r.as_path.len(),
        &r.as_path,
        r.communities.len(),
        &r.communities,
        r.local_pref,
        r.med,
        u32::from(r.next_hop),
        r.tag,
        r.weight,
    )
}

impl fmt::Display for RouteSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.cubes.is_empty() {
            return f.write_str("no route");
        }
        let parts: Vec<String> = self.cubes.iter().map(|c| format!("({c})")).collect();
        f.write_str(&parts.join(" | "))
    }
}

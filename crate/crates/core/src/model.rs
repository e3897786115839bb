//! Domain types: routes, packets, route-maps, filter lists, ACLs and the
//! configuration that ties them together.
//!
//! All types are plain values. A [`Config`] produced by the parser always
//! passes [`validate_config`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid prefix length {0} (max 32)")]
    InvalidPrefixLength(u8),
    #[error("invalid prefix `{0}`")]
    InvalidPrefix(String),
    #[error("prefix {0} has bits set below its mask length")]
    HostBitsSet(String),
    #[error("invalid community `{0}` (expected ASN:VALUE with 16-bit parts)")]
    InvalidCommunity(String),
    #[error("unsupported regex `{0}`")]
    UnsupportedRegex(String),
}

fn mask(len: u8) -> u32 {
    if len == 0 {
        0
    } else {
        u32::MAX << (32 - len as u32)
    }
}

/// An IPv4 prefix with no bits set below the mask length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ipv4Prefix {
    addr: u32,
    len: u8,
}

impl Ipv4Prefix {
    /// Strict constructor: rejects host bits below the mask.
    pub fn new(addr: Ipv4Addr, len: u8) -> Result<Self, ModelError> {
        if len > 32 {
            return Err(ModelError::InvalidPrefixLength(len));
        }
        let raw = u32::from(addr);
        if raw & !mask(len) != 0 {
            return Err(ModelError::HostBitsSet(format!("{addr}/{len}")));
        }
        Ok(Self { addr: raw, len })
    }

    /// Masks the address down to `len` bits.
    pub fn masked(addr: Ipv4Addr, len: u8) -> Result<Self, ModelError> {
        if len > 32 {
            return Err(ModelError::InvalidPrefixLength(len));
        }
        Ok(Self { addr: u32::from(addr) & mask(len), len })
    }

    pub(crate) fn from_bits(addr: u32, len: u8) -> Self {
        debug_assert!(len <= 32);
        Self { addr: addr & mask(len), len }
    }

    pub fn default_route() -> Self {
        Self { addr: 0, len: 0 }
    }

    pub fn host(addr: Ipv4Addr) -> Self {
        Self { addr: addr.into(), len: 32 }
    }

    pub fn addr(&self) -> Ipv4Addr {
        Ipv4Addr::from(self.addr)
    }

    pub fn bits(&self) -> u32 {
        self.addr
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> u8 {
        self.len
    }

    /// Highest address covered by the prefix.
    pub fn last(&self) -> u32 {
        self.addr | !mask(self.len)
    }

    /// True if `other` lies within `self` (including equality).
    pub fn contains(&self, other: &Ipv4Prefix) -> bool {
        other.len >= self.len && other.addr & mask(self.len) == self.addr
    }

    pub fn contains_addr(&self, addr: Ipv4Addr) -> bool {
        u32::from(addr) & mask(self.len) == self.addr
    }

    /// The prefix of length `len` containing `self`; `len` must not exceed
    /// `self.len()`.
    pub fn truncate(&self, len: u8) -> Self {
        Self::from_bits(self.addr, len.min(self.len))
    }

    /// Same address with a longer (or equal) mask; shorter lengths truncate.
    pub fn with_len(&self, len: u8) -> Self {
        Self::from_bits(self.addr, len)
    }

    /// The other half of the parent prefix. `None` for the default route.
    pub fn sibling(&self) -> Option<Self> {
        if self.len == 0 {
            return None;
        }
        let bit = 1u32 << (32 - self.len as u32);
        Some(Self { addr: self.addr ^ bit, len: self.len })
    }
}

impl fmt::Display for Ipv4Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.addr(), self.len)
    }
}

impl FromStr for Ipv4Prefix {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, l) = s.split_once('/').ok_or_else(|| ModelError::InvalidPrefix(s.into()))?;
        let addr: Ipv4Addr = a.parse().map_err(|_| ModelError::InvalidPrefix(s.into()))?;
        let len: u8 = l.parse().map_err(|_| ModelError::InvalidPrefix(s.into()))?;
        Ipv4Prefix::new(addr, len)
    }
}

impl Serialize for Ipv4Prefix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Ipv4Prefix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A classic 16:16 BGP community.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Community {
    pub asn: u16,
    pub value: u16,
}

impl Community {
    pub const fn new(asn: u16, value: u16) -> Self {
        Self { asn, value }
    }
}

impl fmt::Display for Community {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.asn, self.value)
    }
}

impl FromStr for Community {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ModelError::InvalidCommunity(s.into());
        let (a, v) = s.split_once(':').ok_or_else(err)?;
        Ok(Self { asn: a.parse().map_err(|_| err())?, value: v.parse().map_err(|_| err())? })
    }
}

impl Serialize for Community {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Community {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A BGP route advertisement.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Route {
    pub network: Ipv4Prefix,
    pub as_path: Vec<u32>,
    pub communities: BTreeSet<Community>,
    pub local_pref: u32,
    pub med: u32,
    pub next_hop: Ipv4Addr,
    pub tag: u32,
    pub weight: u16,
}

impl Route {
    pub const DEFAULT_LOCAL_PREF: u32 = 100;
    pub const DEFAULT_NEXT_HOP: Ipv4Addr = Ipv4Addr::new(0, 0, 0, 1);

    /// A route for `network` with every other attribute at its default.
    pub fn new(network: Ipv4Prefix) -> Self {
        Self {
            network,
            as_path: Vec::new(),
            communities: BTreeSet::new(),
            local_pref: Self::DEFAULT_LOCAL_PREF,
            med: 0,
            next_hop: Self::DEFAULT_NEXT_HOP,
            tag: 0,
            weight: 0,
        }
    }
}

/// Raw route input as it may arrive from outside (unmasked network, repeated
/// communities). [`normalize_route`] turns it into a [`Route`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RawRoute {
    pub address: Ipv4Addr,
    pub prefix_len: u8,
    #[serde(default)]
    pub as_path: Vec<u32>,
    #[serde(default)]
    pub communities: Vec<Community>,
    #[serde(default = "default_lp")]
    pub local_pref: u32,
    #[serde(default)]
    pub med: u32,
    #[serde(default = "default_nh")]
    pub next_hop: Ipv4Addr,
    #[serde(default)]
    pub tag: u32,
    #[serde(default)]
    pub weight: u16,
}

fn default_lp() -> u32 {
    Route::DEFAULT_LOCAL_PREF
}

fn default_nh() -> Ipv4Addr {
    Route::DEFAULT_NEXT_HOP
}

impl From<&Route> for RawRoute {
    fn from(r: &Route) -> Self {
        Self {
            address: r.network.addr(),
            prefix_len: r.network.len(),
            as_path: r.as_path.clone(),
            communities: r.communities.iter().copied().collect(),
            local_pref: r.local_pref,
            med: r.med,
            next_hop: r.next_hop,
            tag: r.tag,
            weight: r.weight,
        }
    }
}

/// Masks the network to its length and deduplicates communities.
pub fn normalize_route(r: &RawRoute) -> Result<Route, ModelError> {
    Ok(Route {
        network: Ipv4Prefix::masked(r.address, r.prefix_len)?,
        as_path: r.as_path.clone(),
        communities: r.communities.iter().copied().collect(),
        local_pref: r.local_pref,
        med: r.med,
        next_hop: r.next_hop,
        tag: r.tag,
        weight: r.weight,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Ip,
    Tcp,
    Udp,
    Icmp,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [Protocol::Ip, Protocol::Tcp, Protocol::Udp, Protocol::Icmp];

    pub fn has_ports(self) -> bool {
        matches!(self, Protocol::Tcp | Protocol::Udp)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Protocol::Ip => "ip",
            Protocol::Tcp => "tcp",
            Protocol::Udp => "udp",
            Protocol::Icmp => "icmp",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// A packet header. Ports are zero unless the protocol is TCP or UDP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Packet {
    pub src_ip: Ipv4Addr,
    pub dst_ip: Ipv4Addr,
    pub protocol: Protocol,
    pub src_port: u16,
    pub dst_port: u16,
}

impl Packet {
    pub fn new(src_ip: Ipv4Addr, dst_ip: Ipv4Addr, protocol: Protocol, src_port: u16, dst_port: u16) -> Self {
        let (src_port, dst_port) = if protocol.has_ports() { (src_port, dst_port) } else { (0, 0) };
        Self { src_ip, dst_ip, protocol, src_port, dst_port }
    }
}

impl fmt::Display for Packet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.protocol.has_ports() {
            write!(f, "{} {}:{} -> {}:{}", self.protocol, self.src_ip, self.src_port, self.dst_ip, self.dst_port)
        } else {
            write!(f, "{} {} -> {}", self.protocol, self.src_ip, self.dst_ip)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Permit,
    Deny,
}

impl Action {
    pub fn keyword(self) -> &'static str {
        match self {
            Action::Permit => "permit",
            Action::Deny => "deny",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind", content = "value")]
pub enum MatchCondition {
    AsPathList(String),
    PrefixList(String),
    CommunityList(String),
    LocalPref(u32),
    Tag(u32),
}

impl MatchCondition {
    pub fn kind_name(&self) -> &'static str {
        match self {
            MatchCondition::AsPathList(_) => "as-path",
            MatchCondition::PrefixList(_) => "prefix-list",
            MatchCondition::CommunityList(_) => "community",
            MatchCondition::LocalPref(_) => "local-preference",
            MatchCondition::Tag(_) => "tag",
        }
    }

    /// Name of the referenced list, if any.
    pub fn list_ref(&self) -> Option<(ListKind, &str)> {
        match self {
            MatchCondition::AsPathList(n) => Some((ListKind::AsPath, n)),
            MatchCondition::PrefixList(n) => Some((ListKind::Prefix, n)),
            MatchCondition::CommunityList(n) => Some((ListKind::Community, n)),
            _ => None,
        }
    }

    pub fn list_ref_mut(&mut self) -> Option<(ListKind, &mut String)> {
        match self {
            MatchCondition::AsPathList(n) => Some((ListKind::AsPath, n)),
            MatchCondition::PrefixList(n) => Some((ListKind::Prefix, n)),
            MatchCondition::CommunityList(n) => Some((ListKind::Community, n)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ListKind {
    Prefix,
    Community,
    AsPath,
}

impl fmt::Display for ListKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ListKind::Prefix => "prefix-list",
            ListKind::Community => "community-list",
            ListKind::AsPath => "as-path access-list",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind", content = "value")]
pub enum SetClause {
    Metric(u32),
    LocalPref(u32),
    NextHop(Ipv4Addr),
    Weight(u16),
    Tag(u32),
    CommunityAdd(BTreeSet<Community>),
    CommunityReplace(BTreeSet<Community>),
}

impl SetClause {
    /// Add and replace both write the community attribute, so they share a
    /// kind.
    pub fn kind_name(&self) -> &'static str {
        match self {
            SetClause::Metric(_) => "metric",
            SetClause::LocalPref(_) => "local-preference",
            SetClause::NextHop(_) => "ip next-hop",
            SetClause::Weight(_) => "weight",
            SetClause::Tag(_) => "tag",
            SetClause::CommunityAdd(_) | SetClause::CommunityReplace(_) => "community",
        }
    }
}

/// One sequence-numbered rule of a route-map.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Stanza {
    pub seq: u32,
    pub action: Action,
    pub matches: Vec<MatchCondition>,
    pub sets: Vec<SetClause>,
}

impl Stanza {
    pub fn new(seq: u32, action: Action) -> Self {
        Self { seq, action, matches: Vec::new(), sets: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RouteMap {
    pub name: String,
    pub stanzas: Vec<Stanza>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PrefixListEntry {
    pub seq: Option<u32>,
    pub action: Action,
    pub prefix: Ipv4Prefix,
    pub ge: Option<u8>,
    pub le: Option<u8>,
}

impl PrefixListEntry {
    /// Effective mask-length range after defaulting: `ge` defaults to the
    /// base length, `le` to 32 when `ge` is present and to the base length
    /// otherwise.
    pub fn length_range(&self) -> (u8, u8) {
        let lo = self.ge.unwrap_or(self.prefix.len());
        let hi = match (self.ge, self.le) {
            (_, Some(le)) => le,
            (Some(_), None) => 32,
            (None, None) => self.prefix.len(),
        };
        (lo, hi)
    }

    pub fn matches(&self, network: &Ipv4Prefix) -> bool {
        let (lo, hi) = self.length_range();
        self.prefix.contains(network) && (lo..=hi).contains(&network.len())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrefixList {
    pub name: String,
    pub entries: Vec<PrefixListEntry>,
}

impl PrefixList {
    /// First-match evaluation; no matching entry means no match.
    pub fn permits(&self, network: &Ipv4Prefix) -> bool {
        self.entries.iter().find(|e| e.matches(network)).is_some_and(|e| e.action == Action::Permit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommunityListKind {
    Standard,
    Expanded,
}

/// How a community-list entry selects routes. Expanded entries only support
/// the `_ASN:VALUE_` form, which is stored as the community it names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind", content = "value")]
pub enum CommunityMatcher {
    Standard(BTreeSet<Community>),
    Expanded(Community),
}

impl CommunityMatcher {
    /// Communities a route must carry for the entry to apply.
    pub fn required(&self) -> BTreeSet<Community> {
        match self {
            CommunityMatcher::Standard(set) => set.clone(),
            CommunityMatcher::Expanded(c) => BTreeSet::from([*c]),
        }
    }

    pub fn matches(&self, communities: &BTreeSet<Community>) -> bool {
        match self {
            CommunityMatcher::Standard(set) => set.is_subset(communities),
            CommunityMatcher::Expanded(c) => communities.contains(c),
        }
    }

    pub fn regex_text(&self) -> Option<String> {
        match self {
            CommunityMatcher::Expanded(c) => Some(format!("_{c}_")),
            CommunityMatcher::Standard(_) => None,
        }
    }

    /// Parses the restricted expanded form `_A:B_`.
    pub fn parse_expanded(regex: &str) -> Result<Self, ModelError> {
        regex
            .strip_prefix('_')
            .and_then(|r| r.strip_suffix('_'))
            .and_then(|c| c.parse::<Community>().ok())
            .map(CommunityMatcher::Expanded)
            .ok_or_else(|| ModelError::UnsupportedRegex(regex.into()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CommunityListEntry {
    pub action: Action,
    pub matcher: CommunityMatcher,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CommunityList {
    pub name: String,
    pub kind: CommunityListKind,
    pub entries: Vec<CommunityListEntry>,
}

impl CommunityList {
    pub fn permits(&self, communities: &BTreeSet<Community>) -> bool {
        self.entries.iter().find(|e| e.matcher.matches(communities)).is_some_and(|e| e.action == Action::Permit)
    }
}

/// The AS-path regex shapes the toolkit understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind", content = "asn")]
pub enum AsPathAtom {
    /// `_N_`
    Contains(u32),
    /// `_N$`
    EndsWith(u32),
    /// `^N_`
    BeginsWith(u32),
    /// `^$`
    Empty,
    /// `^N$`
    ExactSingle(u32),
}

impl AsPathAtom {
    pub fn parse(regex: &str) -> Result<Self, ModelError> {
        let err = || ModelError::UnsupportedRegex(regex.into());
        let asn = |s: &str| s.parse::<u32>().map_err(|_| err());
        if regex == "^$" {
            return Ok(AsPathAtom::Empty);
        }
        if let Some(rest) = regex.strip_prefix('^') {
            if let Some(n) = rest.strip_suffix('$') {
                return Ok(AsPathAtom::ExactSingle(asn(n)?));
            }
            if let Some(n) = rest.strip_suffix('_') {
                return Ok(AsPathAtom::BeginsWith(asn(n)?));
            }
            return Err(err());
        }
        if let Some(rest) = regex.strip_prefix('_') {
            if let Some(n) = rest.strip_suffix('$') {
                return Ok(AsPathAtom::EndsWith(asn(n)?));
            }
            if let Some(n) = rest.strip_suffix('_') {
                return Ok(AsPathAtom::Contains(asn(n)?));
            }
        }
        Err(err())
    }

    pub fn matches(&self, path: &[u32]) -> bool {
        match *self {
            AsPathAtom::Contains(n) => path.contains(&n),
            AsPathAtom::EndsWith(n) => path.last() == Some(&n),
            AsPathAtom::BeginsWith(n) => path.first() == Some(&n),
            AsPathAtom::Empty => path.is_empty(),
            AsPathAtom::ExactSingle(n) => path == [n],
        }
    }

    pub fn asn(&self) -> Option<u32> {
        match *self {
            AsPathAtom::Contains(n)
            | AsPathAtom::EndsWith(n)
            | AsPathAtom::BeginsWith(n)
            | AsPathAtom::ExactSingle(n) => Some(n),
            AsPathAtom::Empty => None,
        }
    }
}

impl fmt::Display for AsPathAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AsPathAtom::Contains(n) => write!(f, "_{n}_"),
            AsPathAtom::EndsWith(n) => write!(f, "_{n}$"),
            AsPathAtom::BeginsWith(n) => write!(f, "^{n}_"),
            AsPathAtom::Empty => write!(f, "^$"),
            AsPathAtom::ExactSingle(n) => write!(f, "^{n}$"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AsPathListEntry {
    pub action: Action,
    pub atom: AsPathAtom,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AsPathList {
    pub name: String,
    pub entries: Vec<AsPathListEntry>,
}

impl AsPathList {
    pub fn permits(&self, path: &[u32]) -> bool {
        self.entries.iter().find(|e| e.atom.matches(path)).is_some_and(|e| e.action == Action::Permit)
    }
}

/// Source or destination selector of an ACL rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind", content = "value")]
pub enum AddrMatch {
    Any,
    Host(Ipv4Addr),
    Prefix(Ipv4Prefix),
}

impl AddrMatch {
    pub fn matches(&self, addr: Ipv4Addr) -> bool {
        match self {
            AddrMatch::Any => true,
            AddrMatch::Host(h) => *h == addr,
            AddrMatch::Prefix(p) => p.contains_addr(addr),
        }
    }

    /// Inclusive numeric address range covered.
    pub fn bounds(&self) -> (u32, u32) {
        match self {
            AddrMatch::Any => (0, u32::MAX),
            AddrMatch::Host(h) => (u32::from(*h), u32::from(*h)),
            AddrMatch::Prefix(p) => (p.bits(), p.last()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum PortMatch {
    Eq { port: u16 },
    Range { lo: u16, hi: u16 },
}

impl PortMatch {
    pub fn matches(&self, port: u16) -> bool {
        match *self {
            PortMatch::Eq { port: p } => p == port,
            PortMatch::Range { lo, hi } => (lo..=hi).contains(&port),
        }
    }

    pub fn bounds(&self) -> (u16, u16) {
        match *self {
            PortMatch::Eq { port } => (port, port),
            PortMatch::Range { lo, hi } => (lo, hi),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AclRule {
    pub action: Action,
    pub protocol: Protocol,
    pub src: AddrMatch,
    pub src_port: Option<PortMatch>,
    pub dst: AddrMatch,
    pub dst_port: Option<PortMatch>,
}

impl AclRule {
    pub fn matches(&self, p: &Packet) -> bool {
        if self.protocol != Protocol::Ip && self.protocol != p.protocol {
            return false;
        }
        let port_ok = |m: &Option<PortMatch>, port: u16| m.as_ref().is_none_or(|m| m.matches(port));
        self.src.matches(p.src_ip)
            && self.dst.matches(p.dst_ip)
            && port_ok(&self.src_port, p.src_port)
            && port_ok(&self.dst_port, p.dst_port)
    }
}

/// An extended ACL. The trailing implicit deny is part of the semantics and
/// never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Acl {
    pub name: String,
    pub rules: Vec<AclRule>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Config {
    pub route_maps: BTreeMap<String, RouteMap>,
    pub acls: BTreeMap<String, Acl>,
    pub prefix_lists: BTreeMap<String, PrefixList>,
    pub community_lists: BTreeMap<String, CommunityList>,
    pub as_path_lists: BTreeMap<String, AsPathList>,
}

impl Config {
    pub fn has_list(&self, kind: ListKind, name: &str) -> bool {
        match kind {
            ListKind::Prefix => self.prefix_lists.contains_key(name),
            ListKind::Community => self.community_lists.contains_key(name),
            ListKind::AsPath => self.as_path_lists.contains_key(name),
        }
    }

    /// Names used by any filter list, across all list kinds.
    pub fn list_names(&self) -> BTreeSet<&str> {
        self.prefix_lists
            .keys()
            .chain(self.community_lists.keys())
            .chain(self.as_path_lists.keys())
            .map(String::as_str)
            .collect()
    }

    /// Every community literal mentioned by lists and set clauses.
    pub fn mentioned_communities(&self) -> BTreeSet<Community> {
        let mut out = BTreeSet::new();
        for l in self.community_lists.values() {
            for e in &l.entries {
                out.extend(e.matcher.required());
            }
        }
        for s in self.route_maps.values().flat_map(|m| &m.stanzas) {
            for c in &s.sets {
                if let SetClause::CommunityAdd(v) | SetClause::CommunityReplace(v) = c {
                    out.extend(v.iter().copied());
                }
            }
        }
        out
    }

    pub fn mentioned_asns(&self) -> BTreeSet<u32> {
        self.as_path_lists.values().flat_map(|l| &l.entries).filter_map(|e| e.atom.asn()).collect()
    }
}

/// A problem found by [`validate_config`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum Diagnostic {
    DanglingReference { object: String, list_kind: ListKind, name: String },
    NonMonotonicSeq { route_map: String, previous: u32, seq: u32 },
    DuplicateMatchKind { object: String, match_kind: String },
    DuplicateSetKind { object: String, set_kind: String },
    SetUnderDeny { object: String },
    InvalidLengthRange { prefix_list: String, entry: String },
    ZeroSeq { object: String },
}

impl Diagnostic {
    /// The object the diagnostic refers to, e.g. `route-map ISP_OUT seq 10`.
    pub fn object(&self) -> String {
        match self {
            Diagnostic::DanglingReference { object, .. }
            | Diagnostic::DuplicateMatchKind { object, .. }
            | Diagnostic::DuplicateSetKind { object, .. }
            | Diagnostic::SetUnderDeny { object }
            | Diagnostic::ZeroSeq { object } => object.clone(),
            Diagnostic::NonMonotonicSeq { route_map, seq, .. } => format!("route-map {route_map} seq {seq}"),
            Diagnostic::InvalidLengthRange { prefix_list, .. } => format!("prefix-list {prefix_list}"),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::DanglingReference { object, list_kind, name } => {
                write!(f, "{object}: references undefined {list_kind} `{name}`")
            }
            Diagnostic::NonMonotonicSeq { route_map, previous, seq } => {
                write!(f, "route-map {route_map}: sequence {seq} does not follow {previous}")
            }
            Diagnostic::DuplicateMatchKind { object, match_kind } => {
                write!(f, "{object}: more than one `match {match_kind}`")
            }
            Diagnostic::DuplicateSetKind { object, set_kind } => write!(f, "{object}: more than one `set {set_kind}`"),
            Diagnostic::SetUnderDeny { object } => {
                write!(f, "{object}: `set` clauses are not allowed in a deny stanza")
            }
            Diagnostic::InvalidLengthRange { prefix_list, entry } => {
                write!(f, "prefix-list {prefix_list}: entry `{entry}` needs len <= ge <= le <= 32")
            }
            Diagnostic::ZeroSeq { object } => write!(f, "{object}: sequence numbers must be positive"),
        }
    }
}

/// Checks every structural invariant of a configuration. Returns an empty
/// list iff the config is well formed.
pub fn validate_config(c: &Config) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for pl in c.prefix_lists.values() {
        for e in &pl.entries {
            let (lo, hi) = e.length_range();
            if !(e.prefix.len() <= lo && lo <= hi && hi <= 32) {
                out.push(Diagnostic::InvalidLengthRange { prefix_list: pl.name.clone(), entry: e.prefix.to_string() });
            }
        }
    }
    for rm in c.route_maps.values() {
        let mut prev: Option<u32> = None;
        for s in &rm.stanzas {
            let object = format!("route-map {} seq {}", rm.name, s.seq);
            if s.seq == 0 {
                out.push(Diagnostic::ZeroSeq { object: object.clone() });
            }
            if let Some(p) = prev {
                if s.seq <= p {
                    out.push(Diagnostic::NonMonotonicSeq { route_map: rm.name.clone(), previous: p, seq: s.seq });
                }
            }
            prev = Some(s.seq);
            let mut kinds = BTreeSet::new();
            for m in &s.matches {
                if !kinds.insert(m.kind_name()) {
                    out.push(Diagnostic::DuplicateMatchKind {
                        object: object.clone(),
                        match_kind: m.kind_name().into(),
                    });
                }
                if let Some((kind, name)) = m.list_ref() {
                    if !c.has_list(kind, name) {
                        out.push(Diagnostic::DanglingReference {
                            object: object.clone(),
                            list_kind: kind,
                            name: name.to_string(),
                        });
                    }
                }
            }
            let mut kinds = BTreeSet::new();
            for set in &s.sets {
                if !kinds.insert(set.kind_name()) {
                    out.push(Diagnostic::DuplicateSetKind { object: object.clone(), set_kind: set.kind_name().into() });
                }
            }
            if s.action == Action::Deny && !s.sets.is_empty() {
                out.push(Diagnostic::SetUnderDeny { object });
            }
        }
    }
    out
}

//! Parser and canonical printer for the supported Cisco-IOS subset.
//!
//! Accepted constructs:
//!
//! ```text
//! ip prefix-list NAME [seq N] permit|deny A.B.C.D/L [ge N] [le N]
//! ip community-list standard NAME permit|deny ASN:VAL...
//! ip community-list expanded NAME permit|deny _ASN:VAL_
//! ip as-path access-list NAME permit|deny REGEX        (_N_ _N$ ^N_ ^$ ^N$)
//! route-map NAME permit|deny SEQ
//!  match as-path NAME | ip address prefix-list NAME | community NAME
//!        | local-preference N | tag N
//!  set metric N | local-preference N | ip next-hop A.B.C.D | weight N
//!      | tag N | community ASN:VAL... [additive]
//! access-list NUM permit|deny PROTO SRC [PORT] DST [PORT]
//! ip access-list extended NAME
//!  permit|deny PROTO SRC [PORT] DST [PORT]
//! ```
//!
//! `!` and blank lines are ignored; indentation is not significant.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::*;

/// 1-based line and column range of the offending text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpan {
    pub line: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum ParseErrorKind {
    Syntax,
    UnsupportedConstruct,
    DanglingReference { name: String },
    MultipleStanzas { found: usize },
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("line {}:{}: {message} (`{text}`)", span.line, span.start)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: SourceSpan,
    pub message: String,
    pub text: String,
}

#[derive(Debug, Clone, Copy)]
struct Tok<'a> {
    text: &'a str,
    col: usize,
}

struct Line<'a> {
    no: usize,
    raw: &'a str,
    toks: Vec<Tok<'a>>,
}

impl<'a> Line<'a> {
    fn new(no: usize, raw: &'a str) -> Self {
        let mut toks = Vec::new();
        let mut start = None;
        for (i, ch) in raw.char_indices() {
            if ch.is_whitespace() {
                if let Some(s) = start.take() {
                    toks.push(Tok { text: &raw[s..i], col: s + 1 });
                }
            } else if start.is_none() {
                start = Some(i);
            }
        }
        if let Some(s) = start {
            toks.push(Tok { text: &raw[s..], col: s + 1 });
        }
        Self { no, raw, toks }
    }

    fn word(&self, i: usize) -> Option<&'a str> {
        self.toks.get(i).map(|t| t.text)
    }

    fn err_at(&self, i: usize, kind: ParseErrorKind, message: impl Into<String>) -> ParseError {
        let (start, end, text) = match self.toks.get(i) {
            Some(t) => (t.col, t.col + t.text.len().saturating_sub(1), t.text.to_string()),
            None => {
                let c = self.raw.trim_end().len() + 1;
                (c, c, self.raw.trim().to_string())
            }
        };
        ParseError { kind, span: SourceSpan { line: self.no, start, end }, message: message.into(), text }
    }

    fn syntax(&self, i: usize, message: impl Into<String>) -> ParseError {
        self.err_at(i, ParseErrorKind::Syntax, message)
    }

    fn unsupported(&self, i: usize, what: &str) -> ParseError {
        self.err_at(i, ParseErrorKind::UnsupportedConstruct, format!("unsupported construct: {what}"))
    }

    fn expect_end(&self, i: usize) -> Result<(), ParseError> {
        match self.toks.get(i) {
            None => Ok(()),
            Some(_) => Err(self.syntax(i, "expected end of line")),
        }
    }

    fn req(&self, i: usize, what: &str) -> Result<&'a str, ParseError> {
        self.word(i).ok_or_else(|| self.syntax(i, format!("expected {what}")))
    }

    fn action(&self, i: usize) -> Result<Action, ParseError> {
        match self.req(i, "permit or deny")? {
            "permit" => Ok(Action::Permit),
            "deny" => Ok(Action::Deny),
            _ => Err(self.syntax(i, "expected permit or deny")),
        }
    }

    fn number<T: std::str::FromStr>(&self, i: usize, what: &str) -> Result<T, ParseError> {
        self.req(i, what)?.parse().map_err(|_| self.syntax(i, format!("expected {what}")))
    }
}

/// Top-level IOS keywords that are recognized but deliberately out of scope.
const UNSUPPORTED_TOP: &[&str] = &[
    "ipv6",
    "interface",
    "router",
    "hostname",
    "version",
    "service",
    "line",
    "logging",
    "ntp",
    "snmp-server",
    "banner",
    "end",
    "boot",
    "username",
    "enable",
    "aaa",
    "vrf",
    "control-plane",
    "no",
    "class-map",
    "policy-map",
    "object-group",
    "crypto",
    "spanning-tree",
    "vlan",
];

/// Route-map sub-commands that are recognized but unsupported.
const UNSUPPORTED_STANZA: &[&str] = &["continue", "description", "on-match", "call", "goto", "no"];

#[derive(Debug, Clone, PartialEq, Eq)]
enum Context {
    Top,
    Stanza { map: String, idx: usize },
    Acl(String),
}

#[derive(Default)]
struct Builder {
    config: Config,
    errors: Vec<ParseError>,
    /// Header span of every stanza, keyed by `route-map NAME seq N`.
    stanza_spans: BTreeMap<String, SourceSpan>,
    /// Span of each match line that references a list.
    ref_spans: Vec<(String, ListKind, String, SourceSpan)>,
}

/// Parses a full device configuration. On success the returned config
/// passes [`validate_config`].
pub fn parse_config(text: &str) -> Result<Config, Vec<ParseError>> {
    let mut b = Builder::default();
    let mut ctx = Context::Top;
    for (i, raw) in text.lines().enumerate() {
        let line = Line::new(i + 1, raw);
        let Some(first) = line.word(0) else { continue };
        if first.starts_with('!') {
            continue;
        }
        let res = match first {
            "match" | "set" => match &ctx {
                Context::Stanza { map, idx } => {
                    let (map, idx) = (map.clone(), *idx);
                    b.stanza_line(&line, &map, idx)
                }
                _ => Err(line.syntax(0, format!("`{first}` outside of a route-map stanza"))),
            },
            w if UNSUPPORTED_STANZA.contains(&w) && matches!(ctx, Context::Stanza { .. }) => {
                Err(line.unsupported(0, &format!("route-map `{w}`")))
            }
            "permit" | "deny" => match &ctx {
                Context::Acl(name) => {
                    let name = name.clone();
                    b.acl_rule(&line, 0).map(|rule| {
                        b.config.acls.get_mut(&name).expect("acl context exists").rules.push(rule);
                    })
                }
                _ => Err(line.syntax(0, "ACL rule outside of `ip access-list extended`")),
            },
            _ => {
                ctx = Context::Top;
                b.top_line(&line).map(|c| {
                    if let Some(c) = c {
                        ctx = c;
                    }
                })
            }
        };
        if let Err(e) = res {
            b.errors.push(e);
        }
    }
    b.finish()
}

impl Builder {
    fn top_line(&mut self, l: &Line<'_>) -> Result<Option<Context>, ParseError> {
        match l.word(0).unwrap_or_default() {
            "ip" => match l.word(1) {
                Some("prefix-list") => self.prefix_list(l).map(|_| None),
                Some("community-list") => self.community_list(l).map(|_| None),
                Some("as-path") => self.as_path_list(l).map(|_| None),
                Some("access-list") => self.named_acl(l).map(Some),
                Some(_) => Err(l.unsupported(1, &format!("`ip {}`", l.word(1).unwrap_or_default()))),
                None => Err(l.syntax(1, "expected an `ip` sub-command")),
            },
            "route-map" => self.route_map_header(l).map(Some),
            "access-list" => {
                let name = l.req(1, "access-list number")?;
                if name.parse::<u32>().is_err() {
                    return Err(l.syntax(1, "expected access-list number"));
                }
                let rule = self.acl_rule(l, 2)?;
                self.config
                    .acls
                    .entry(name.to_string())
                    .or_insert_with(|| Acl { name: name.to_string(), rules: Vec::new() })
                    .rules
                    .push(rule);
                Ok(None)
            }
            w if UNSUPPORTED_TOP.contains(&w) => Err(l.unsupported(0, &format!("`{w}`"))),
            _ => Err(l.syntax(0, "unrecognized line; expected ip, route-map or access-list")),
        }
    }

    fn prefix_list(&mut self, l: &Line<'_>) -> Result<(), ParseError> {
        let name = l.req(2, "prefix-list name")?;
        let mut i = 3;
        let mut seq = None;
        match l.word(i) {
            Some("seq") => {
                seq = Some(l.number::<u32>(i + 1, "sequence number")?);
                i += 2;
            }
            Some("description") => return Err(l.unsupported(i, "prefix-list description")),
            _ => {}
        }
        let action = l.action(i)?;
        let prefix_text = l.req(i + 1, "prefix A.B.C.D/L")?;
        let prefix: Ipv4Prefix = prefix_text.parse().map_err(|e: ModelError| l.syntax(i + 1, e.to_string()))?;
        i += 2;
        let (mut ge, mut le) = (None, None);
        while let Some(w) = l.word(i) {
            let v = l.number::<u8>(i + 1, "mask length")?;
            match w {
                "ge" if ge.is_none() && le.is_none() => ge = Some(v),
                "le" if le.is_none() => le = Some(v),
                _ => return Err(l.syntax(i, "expected `ge N` followed by optional `le N`")),
            }
            i += 2;
        }
        let entry = PrefixListEntry { seq, action, prefix, ge, le };
        let (lo, hi) = entry.length_range();
        if !(prefix.len() <= lo && lo <= hi && hi <= 32) {
            return Err(l.syntax(3, format!("mask lengths must satisfy {} <= ge <= le <= 32", prefix.len())));
        }
        self.config
            .prefix_lists
            .entry(name.to_string())
            .or_insert_with(|| PrefixList { name: name.to_string(), entries: Vec::new() })
            .entries
            .push(entry);
        Ok(())
    }

    fn community_list(&mut self, l: &Line<'_>) -> Result<(), ParseError> {
        let kind = match l.req(2, "standard or expanded")? {
            "standard" => CommunityListKind::Standard,
            "expanded" => CommunityListKind::Expanded,
            w if w.parse::<u32>().is_ok() => return Err(l.unsupported(2, "numbered community-list")),
            _ => return Err(l.syntax(2, "expected standard or expanded")),
        };
        let name = l.req(3, "community-list name")?;
        let action = l.action(4)?;
        let matcher = match kind {
            CommunityListKind::Standard => {
                let mut set = BTreeSet::new();
                for i in 5..l.toks.len() {
                    set.insert(parse_community(l, i)?);
                }
                if set.is_empty() {
                    return Err(l.syntax(5, "expected at least one community"));
                }
                CommunityMatcher::Standard(set)
            }
            CommunityListKind::Expanded => {
                let regex = l.req(5, "community regex")?;
                l.expect_end(6)?;
                CommunityMatcher::parse_expanded(regex).map_err(|e| {
                    l.err_at(5, ParseErrorKind::UnsupportedConstruct, format!("{e}; only `_ASN:VALUE_` is supported"))
                })?
            }
        };
        let list = self.config.community_lists.entry(name.to_string()).or_insert_with(|| CommunityList {
            name: name.to_string(),
            kind,
            entries: Vec::new(),
        });
        if list.kind != kind {
            return Err(l.syntax(2, format!("community-list {name} mixes standard and expanded entries")));
        }
        list.entries.push(CommunityListEntry { action, matcher });
        Ok(())
    }

    fn as_path_list(&mut self, l: &Line<'_>) -> Result<(), ParseError> {
        if l.word(2) != Some("access-list") {
            return Err(l.syntax(2, "expected `access-list`"));
        }
        let name = l.req(3, "as-path list name")?;
        let action = l.action(4)?;
        let regex = l.req(5, "as-path regex")?;
        l.expect_end(6)?;
        let atom = AsPathAtom::parse(regex).map_err(|e| {
            l.err_at(5, ParseErrorKind::UnsupportedConstruct, format!("{e}; supported forms are _N_ _N$ ^N_ ^$ ^N$"))
        })?;
        self.config
            .as_path_lists
            .entry(name.to_string())
            .or_insert_with(|| AsPathList { name: name.to_string(), entries: Vec::new() })
            .entries
            .push(AsPathListEntry { action, atom });
        Ok(())
    }

    fn named_acl(&mut self, l: &Line<'_>) -> Result<Context, ParseError> {
        match l.req(2, "extended")? {
            "extended" => {}
            "standard" => return Err(l.unsupported(2, "standard ACL")),
            _ => return Err(l.syntax(2, "expected `extended`")),
        }
        let name = l.req(3, "ACL name")?;
        l.expect_end(4)?;
        self.config.acls.entry(name.to_string()).or_insert_with(|| Acl { name: name.to_string(), rules: Vec::new() });
        Ok(Context::Acl(name.to_string()))
    }

    fn acl_rule(&self, l: &Line<'_>, start: usize) -> Result<AclRule, ParseError> {
        let action = l.action(start)?;
        let protocol = match l.req(start + 1, "protocol")? {
            "ip" => Protocol::Ip,
            "tcp" => Protocol::Tcp,
            "udp" => Protocol::Udp,
            "icmp" => Protocol::Icmp,
            _ => return Err(l.unsupported(start + 1, "protocol (only ip, tcp, udp, icmp)")),
        };
        let mut i = start + 2;
        let src = parse_addr(l, &mut i)?;
        let src_port = parse_port(l, &mut i, protocol)?;
        let dst = parse_addr(l, &mut i)?;
        let dst_port = parse_port(l, &mut i, protocol)?;
        if let Some(w) = l.word(i) {
            return Err(match w {
                "log" | "established" | "log-input" | "precedence" | "dscp" | "tos" | "fragments" => {
                    l.unsupported(i, &format!("ACL option `{w}`"))
                }
                _ => l.syntax(i, "expected end of ACL rule"),
            });
        }
        Ok(AclRule { action, protocol, src, src_port, dst, dst_port })
    }

    fn route_map_header(&mut self, l: &Line<'_>) -> Result<Context, ParseError> {
        let name = l.req(1, "route-map name")?;
        let action = match l.req(2, "permit or deny")? {
            "permit" => Action::Permit,
            "deny" => Action::Deny,
            w if UNSUPPORTED_STANZA.contains(&w) => return Err(l.unsupported(2, &format!("route-map `{w}`"))),
            _ => return Err(l.syntax(2, "expected permit or deny")),
        };
        let seq = l.number::<u32>(3, "sequence number")?;
        l.expect_end(4)?;
        let map = self
            .config
            .route_maps
            .entry(name.to_string())
            .or_insert_with(|| RouteMap { name: name.to_string(), stanzas: Vec::new() });
        map.stanzas.push(Stanza::new(seq, action));
        let idx = map.stanzas.len() - 1;
        self.stanza_spans.entry(format!("route-map {name} seq {seq}")).or_insert(SourceSpan {
            line: l.no,
            start: l.toks[0].col,
            end: l.raw.trim_end().len(),
        });
        Ok(Context::Stanza { map: name.to_string(), idx })
    }

    fn stanza_line(&mut self, l: &Line<'_>, map: &str, idx: usize) -> Result<(), ParseError> {
        let stanza = &self.config.route_maps[map].stanzas[idx];
        let object = format!("route-map {map} seq {}", stanza.seq);
        let action = stanza.action;
        if l.word(0) == Some("match") {
            let (cond, end) = match l.req(1, "match kind")? {
                "as-path" => (MatchCondition::AsPathList(l.req(2, "as-path list name")?.into()), 3),
                "ip" => {
                    if l.word(2) != Some("address") {
                        return Err(l.unsupported(2, "`match ip` other than `address prefix-list`"));
                    }
                    if l.word(3) != Some("prefix-list") {
                        return Err(l.unsupported(3, "`match ip address` with an ACL"));
                    }
                    (MatchCondition::PrefixList(l.req(4, "prefix-list name")?.into()), 5)
                }
                "community" => (MatchCondition::CommunityList(l.req(2, "community-list name")?.into()), 3),
                "local-preference" => (MatchCondition::LocalPref(l.number(2, "local preference")?), 3),
                "tag" => (MatchCondition::Tag(l.number(2, "tag")?), 3),
                w => return Err(l.unsupported(1, &format!("`match {w}`"))),
            };
            if l.word(end).is_some() {
                return Err(l.unsupported(end, "multiple values in one match line"));
            }
            if let Some((kind, name)) = cond.list_ref() {
                let span = match l.toks.get(end - 1) {
                    Some(t) => SourceSpan { line: l.no, start: t.col, end: t.col + t.text.len() - 1 },
                    None => SourceSpan { line: l.no, start: 1, end: 1 },
                };
                self.ref_spans.push((object, kind, name.to_string(), span));
            }
            self.config.route_maps.get_mut(map).expect("map exists").stanzas[idx].matches.push(cond);
            return Ok(());
        }
        if action == Action::Deny {
            return Err(l.syntax(0, "`set` is not allowed under a deny stanza"));
        }
        let clause = match l.req(1, "set kind")? {
            "metric" => {
                let v = l.number(2, "metric")?;
                l.expect_end(3)?;
                SetClause::Metric(v)
            }
            "local-preference" => {
                let v = l.number(2, "local preference")?;
                l.expect_end(3)?;
                SetClause::LocalPref(v)
            }
            "weight" => {
                let v = l.number(2, "weight")?;
                l.expect_end(3)?;
                SetClause::Weight(v)
            }
            "tag" => {
                let v = l.number(2, "tag")?;
                l.expect_end(3)?;
                SetClause::Tag(v)
            }
            "ip" => {
                if l.word(2) != Some("next-hop") {
                    return Err(l.unsupported(2, "`set ip` other than next-hop"));
                }
                let a: Ipv4Addr =
                    l.req(3, "next-hop address")?.parse().map_err(|_| l.syntax(3, "expected IPv4 address"))?;
                l.expect_end(4)?;
                SetClause::NextHop(a)
            }
            "community" => {
                let mut set = BTreeSet::new();
                let mut additive = false;
                for i in 2..l.toks.len() {
                    match l.toks[i].text {
                        "additive" if i + 1 == l.toks.len() && i > 2 => additive = true,
                        "none" | "no-export" | "no-advertise" | "internet" | "local-as" => {
                            return Err(l.unsupported(i, "well-known community keyword"));
                        }
                        _ => {
                            set.insert(parse_community(l, i)?);
                        }
                    }
                }
                if set.is_empty() {
                    return Err(l.syntax(2, "expected at least one community"));
                }
                if additive {
                    SetClause::CommunityAdd(set)
                } else {
                    SetClause::CommunityReplace(set)
                }
            }
            w => return Err(l.unsupported(1, &format!("`set {w}`"))),
        };
        self.config.route_maps.get_mut(map).expect("map exists").stanzas[idx].sets.push(clause);
        Ok(())
    }

    fn finish(mut self) -> Result<Config, Vec<ParseError>> {
        for (object, kind, name, span) in &self.ref_spans {
            if !self.config.has_list(*kind, name) {
                self.errors.push(ParseError {
                    kind: ParseErrorKind::DanglingReference { name: name.clone() },
                    span: *span,
                    message: format!("{object}: references undefined {kind} `{name}`"),
                    text: name.clone(),
                });
            }
        }
        for d in validate_config(&self.config) {
            if matches!(d, Diagnostic::DanglingReference { .. }) {
                continue; // reported above with a precise span
            }
            let span = self.stanza_spans.get(&d.object()).copied().unwrap_or(SourceSpan { line: 1, start: 1, end: 1 });
            self.errors.push(ParseError {
                kind: ParseErrorKind::Invalid,
                span,
                message: d.to_string(),
                text: d.object(),
            });
        }
        if self.errors.is_empty() {
            Ok(self.config)
        } else {
            self.errors.sort_by_key(|e| (e.span.line, e.span.start));
            Err(self.errors)
        }
    }
}

fn parse_community(l: &Line<'_>, i: usize) -> Result<Community, ParseError> {
    let w = l.req(i, "community")?;
    if w.matches(':').count() > 1 {
        return Err(l.unsupported(i, "extended or large community"));
    }
    w.parse().map_err(|e: ModelError| l.syntax(i, e.to_string()))
}

fn parse_addr(l: &Line<'_>, i: &mut usize) -> Result<AddrMatch, ParseError> {
    let w = l.req(*i, "address (any, host A.B.C.D, A.B.C.D/L or A.B.C.D WILDCARD)")?;
    let at = *i;
    *i += 1;
    match w {
        "any" => Ok(AddrMatch::Any),
        "host" => {
            let a = l.req(*i, "host address")?.parse().map_err(|_| l.syntax(*i, "expected IPv4 address"))?;
            *i += 1;
            Ok(AddrMatch::Host(a))
        }
        _ if w.contains('/') => {
            let p: Ipv4Prefix = w.parse().map_err(|e: ModelError| l.syntax(at, e.to_string()))?;
            Ok(AddrMatch::Prefix(p))
        }
        _ => {
            let addr: Ipv4Addr = w.parse().map_err(|_| l.syntax(at, "expected address"))?;
            let wild: Ipv4Addr =
                l.req(*i, "wildcard mask")?.parse().map_err(|_| l.syntax(*i, "expected wildcard mask"))?;
            let bits = u32::from(wild);
            // contiguous wildcard masks only: 0...01...1
            if bits & bits.wrapping_add(1) != 0 {
                return Err(l.unsupported(*i, "non-contiguous wildcard mask"));
            }
            let len = bits.leading_zeros() as u8;
            let p = Ipv4Prefix::new(addr, len).map_err(|e| l.syntax(at, e.to_string()))?;
            *i += 1;
            Ok(if len == 32 { AddrMatch::Host(addr) } else { AddrMatch::Prefix(p) })
        }
    }
}

fn parse_port(l: &Line<'_>, i: &mut usize, proto: Protocol) -> Result<Option<PortMatch>, ParseError> {
    let m = match l.word(*i) {
        Some("eq") => {
            let port = l.number(*i + 1, "port")?;
            *i += 2;
            PortMatch::Eq { port }
        }
        Some("range") => {
            let lo: u16 = l.number(*i + 1, "port")?;
            let hi: u16 = l.number(*i + 2, "port")?;
            if lo > hi {
                return Err(l.syntax(*i + 1, "port range must be ascending"));
            }
            *i += 3;
            PortMatch::Range { lo, hi }
        }
        Some(w @ ("gt" | "lt" | "neq")) => return Err(l.unsupported(*i, &format!("port operator `{w}`"))),
        _ => return Ok(None),
    };
    if !proto.has_ports() {
        return Err(l.syntax(*i - 1, "port qualifiers require tcp or udp"));
    }
    Ok(Some(m))
}

/// A single synthesized stanza together with the lists it brings along.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Snippet {
    pub map_name: String,
    pub stanza: Stanza,
    /// Filter lists defined by the snippet (route-maps and ACLs empty).
    pub lists: Config,
}

impl Snippet {
    pub fn to_config(&self) -> Config {
        let mut c = self.lists.clone();
        c.route_maps.insert(
            self.map_name.clone(),
            RouteMap { name: self.map_name.clone(), stanzas: vec![self.stanza.clone()] },
        );
        c
    }

    /// The snippet as a one-stanza route-map.
    pub fn route_map(&self) -> RouteMap {
        RouteMap { name: self.map_name.clone(), stanzas: vec![self.stanza.clone()] }
    }
}

impl fmt::Display for Snippet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_config(&self.to_config()))
    }
}

/// Parses a generator response that must contain exactly one route-map
/// stanza plus the lists it references.
pub fn parse_stanza_snippet(text: &str) -> Result<Snippet, Vec<ParseError>> {
    let mut config = parse_config(text)?;
    let found: usize = config.route_maps.values().map(|m| m.stanzas.len()).sum();
    if found != 1 || !config.acls.is_empty() {
        let (line, message) = if config.acls.is_empty() {
            (1, format!("expected exactly one route-map stanza, found {found}"))
        } else {
            (1, "a route-map snippet must not define ACLs".to_string())
        };
        return Err(vec![ParseError {
            kind: ParseErrorKind::MultipleStanzas { found },
            span: SourceSpan { line, start: 1, end: 1 },
            message,
            text: String::new(),
        }]);
    }
    let map = std::mem::take(&mut config.route_maps).into_values().next().expect("one map");
    Ok(Snippet { map_name: map.name, stanza: map.stanzas.into_iter().next().expect("one stanza"), lists: config })
}

fn print_addr(out: &mut String, a: &AddrMatch) {
    match a {
        AddrMatch::Any => out.push_str(" any"),
        AddrMatch::Host(h) => {
            let _ = write!(out, " host {h}");
        }
        AddrMatch::Prefix(p) => {
            let wild = Ipv4Addr::from(!(u32::MAX.checked_shl(32 - p.len() as u32).unwrap_or(0)));
            let _ = write!(out, " {} {wild}", p.addr());
        }
    }
}

fn print_port(out: &mut String, p: &Option<PortMatch>) {
    match p {
        Some(PortMatch::Eq { port }) => {
            let _ = write!(out, " eq {port}");
        }
        Some(PortMatch::Range { lo, hi }) => {
            let _ = write!(out, " range {lo} {hi}");
        }
        None => {}
    }
}

pub fn print_acl_rule(r: &AclRule) -> String {
    let mut out = format!("{} {}", r.action, r.protocol);
    print_addr(&mut out, &r.src);
    print_port(&mut out, &r.src_port);
    print_addr(&mut out, &r.dst);
    print_port(&mut out, &r.dst_port);
    out
}

fn print_communities(set: &BTreeSet<Community>) -> String {
    set.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

pub fn print_stanza(out: &mut String, map: &str, s: &Stanza) {
    let _ = writeln!(out, "route-map {map} {} {}", s.action, s.seq);
    for m in &s.matches {
        let _ = match m {
            MatchCondition::AsPathList(n) => writeln!(out, " match as-path {n}"),
            MatchCondition::PrefixList(n) => writeln!(out, " match ip address prefix-list {n}"),
            MatchCondition::CommunityList(n) => writeln!(out, " match community {n}"),
            MatchCondition::LocalPref(v) => writeln!(out, " match local-preference {v}"),
            MatchCondition::Tag(v) => writeln!(out, " match tag {v}"),
        };
    }
    for c in &s.sets {
        let _ = match c {
            SetClause::Metric(v) => writeln!(out, " set metric {v}"),
            SetClause::LocalPref(v) => writeln!(out, " set local-preference {v}"),
            SetClause::NextHop(a) => writeln!(out, " set ip next-hop {a}"),
            SetClause::Weight(v) => writeln!(out, " set weight {v}"),
            SetClause::Tag(v) => writeln!(out, " set tag {v}"),
            SetClause::CommunityAdd(s) => writeln!(out, " set community {} additive", print_communities(s)),
            SetClause::CommunityReplace(s) => writeln!(out, " set community {}", print_communities(s)),
        };
    }
}

/// Canonical, byte-stable rendering. Groups appear in the order as-path
/// lists, community lists, prefix lists, ACLs, route-maps, separated by a
/// blank line; within a group objects are sorted by name.
pub fn print_config(c: &Config) -> String {
    let mut groups: Vec<String> = Vec::new();

    let mut g = String::new();
    for l in c.as_path_lists.values() {
        for e in &l.entries {
            let _ = writeln!(g, "ip as-path access-list {} {} {}", l.name, e.action, e.atom);
        }
    }
    groups.push(g);

    let mut g = String::new();
    for l in c.community_lists.values() {
        for e in &l.entries {
            let body = match &e.matcher {
                CommunityMatcher::Standard(set) => print_communities(set),
                CommunityMatcher::Expanded(c) => format!("_{c}_"),
            };
            let kind = match l.kind {
                CommunityListKind::Standard => "standard",
                CommunityListKind::Expanded => "expanded",
            };
            let _ = writeln!(g, "ip community-list {kind} {} {} {body}", l.name, e.action);
        }
    }
    groups.push(g);

    let mut g = String::new();
    for l in c.prefix_lists.values() {
        for e in &l.entries {
            let _ = write!(g, "ip prefix-list {}", l.name);
            if let Some(seq) = e.seq {
                let _ = write!(g, " seq {seq}");
            }
            let _ = write!(g, " {} {}", e.action, e.prefix);
            if let Some(ge) = e.ge {
                let _ = write!(g, " ge {ge}");
            }
            if let Some(le) = e.le {
                let _ = write!(g, " le {le}");
            }
            g.push('\n');
        }
    }
    groups.push(g);

    let mut g = String::new();
    for a in c.acls.values() {
        let _ = writeln!(g, "ip access-list extended {}", a.name);
        for r in &a.rules {
            let _ = writeln!(g, " {}", print_acl_rule(r));
        }
    }
    groups.push(g);

    let mut g = String::new();
    for m in c.route_maps.values() {
        for s in &m.stanzas {
            print_stanza(&mut g, &m.name, s);
        }
    }
    groups.push(g);

    groups.retain(|g| !g.is_empty());
    groups.join("\n")
}

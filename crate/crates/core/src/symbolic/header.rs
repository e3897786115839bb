use std::collections::BTreeSet;
use std::fmt;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use crate::model::{AclRule, Packet, PortMatch, Protocol};
use crate::{AddrSet, PortSet};

/// A product of per-field sets. Packets of protocols without ports carry
/// port 0, so such a protocol only contributes when both port sets admit 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HeaderBox {
    pub src: AddrSet,
    pub dst: AddrSet,
    pub protocols: BTreeSet<Protocol>,
    pub src_port: PortSet,
    pub dst_port: PortSet,
}

fn all_protocols() -> BTreeSet<Protocol> {
    Protocol::ALL.into_iter().collect()
}

fn port_set(m: &Option<PortMatch>) -> PortSet {
    match m {
        Some(m) => {
            let (lo, hi) = m.bounds();
            PortSet::range(lo, hi)
        }
        None => PortSet::full(),
    }
}

impl HeaderBox {
    pub fn full() -> Self {
        Self {
            src: AddrSet::full(),
            dst: AddrSet::full(),
            protocols: all_protocols(),
            src_port: PortSet::full(),
            dst_port: PortSet::full(),
        }
    }

    /// Packets the rule's match part selects, ignoring its action.
    pub fn of_rule(r: &AclRule) -> Self {
        let (slo, shi) = r.src.bounds();
        let (dlo, dhi) = r.dst.bounds();
        let protocols = if r.protocol == Protocol::Ip { all_protocols() } else { BTreeSet::from([r.protocol]) };
        Self {
            src: AddrSet::range(slo, shi),
            dst: AddrSet::range(dlo, dhi),
            protocols,
            src_port: port_set(&r.src_port),
            dst_port: port_set(&r.dst_port),
        }
    }

    pub fn intersect(&self, o: &Self) -> Self {
        Self {
            src: self.src.intersect(&o.src),
            dst: self.dst.intersect(&o.dst),
            protocols: self.protocols.intersection(&o.protocols).copied().collect(),
            src_port: self.src_port.intersect(&o.src_port),
            dst_port: self.dst_port.intersect(&o.dst_port),
        }
    }

    fn protocol_ok(&self, p: Protocol) -> bool {
        if p.has_ports() {
            !self.src_port.is_empty() && !self.dst_port.is_empty()
        } else {
            self.src_port.contains(0) && self.dst_port.contains(0)
        }
    }

    pub fn is_satisfiable(&self) -> bool {
        !self.src.is_empty() && !self.dst.is_empty() && self.protocols.iter().any(|&p| self.protocol_ok(p))
    }

    pub fn matches(&self, p: &Packet) -> bool {
        self.src.contains(u32::from(p.src_ip))
            && self.dst.contains(u32::from(p.dst_ip))
            && self.protocols.contains(&p.protocol)
            && self.src_port.contains(p.src_port)
            && self.dst_port.contains(p.dst_port)
    }

    /// `self \ other` as disjoint boxes, negating one field at a time.
    pub fn subtract(&self, o: &Self) -> Vec<Self> {
        if !self.intersect(o).is_satisfiable() {
            return vec![self.clone()];
        }
        let mut out = Vec::new();
        let mut keep = self.clone();
        let mut emit = |b: Self| {
            if b.is_satisfiable() {
                out.push(b);
            }
        };
        emit(Self { src: keep.src.subtract(&o.src), ..keep.clone() });
        keep.src = keep.src.intersect(&o.src);
        emit(Self { dst: keep.dst.subtract(&o.dst), ..keep.clone() });
        keep.dst = keep.dst.intersect(&o.dst);
        emit(Self { protocols: keep.protocols.difference(&o.protocols).copied().collect(), ..keep.clone() });
        keep.protocols = keep.protocols.intersection(&o.protocols).copied().collect();
        emit(Self { src_port: keep.src_port.subtract(&o.src_port), ..keep.clone() });
        keep.src_port = keep.src_port.intersect(&o.src_port);
        emit(Self { dst_port: keep.dst_port.subtract(&o.dst_port), ..keep.clone() });
        out
    }

    /// Lowest addresses, first usable protocol in `ip, tcp, udp, icmp`
    /// order, lowest ports.
    pub fn witness(&self) -> Option<Packet> {
        if self.src.is_empty() || self.dst.is_empty() {
            return None;
        }
        let proto = self.protocols.iter().copied().find(|&p| self.protocol_ok(p))?;
        let (sp, dp) = if proto.has_ports() { (self.src_port.min()?, self.dst_port.min()?) } else { (0, 0) };
        Some(Packet::new(Ipv4Addr::from(self.src.min()?), Ipv4Addr::from(self.dst.min()?), proto, sp, dp))
    }
}

/// A finite union of [`HeaderBox`]es.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HeaderSpace {
    boxes: Vec<HeaderBox>,
}

impl From<HeaderBox> for HeaderSpace {
    fn from(b: HeaderBox) -> Self {
        Self::from_boxes([b])
    }
}

impl HeaderSpace {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full() -> Self {
        Self { boxes: vec![HeaderBox::full()] }
    }

    pub fn of_rule(r: &AclRule) -> Self {
        HeaderBox::of_rule(r).into()
    }

    pub fn from_boxes(boxes: impl IntoIterator<Item = HeaderBox>) -> Self {
        let mut out: Vec<HeaderBox> = Vec::new();
        for b in boxes {
            if b.is_satisfiable() && !out.contains(&b) {
                out.push(b);
            }
        }
        Self { boxes: out }
    }

    pub fn boxes(&self) -> &[HeaderBox] {
        &self.boxes
    }

    pub fn is_satisfiable(&self) -> bool {
        !self.boxes.is_empty()
    }

    pub fn matches(&self, p: &Packet) -> bool {
        self.boxes.iter().any(|b| b.matches(p))
    }

    pub fn union(&self, o: &Self) -> Self {
        Self::from_boxes(self.boxes.iter().chain(&o.boxes).cloned())
    }

    pub fn intersect(&self, o: &Self) -> Self {
        Self::from_boxes(self.boxes.iter().flat_map(|a| o.boxes.iter().map(move |b| a.intersect(b))))
    }

    pub fn subtract(&self, o: &Self) -> Self {
        let mut cur = self.boxes.clone();
        for b in &o.boxes {
            cur = cur.iter().flat_map(|a| a.subtract(b)).collect();
        }
        Self::from_boxes(cur)
    }

    pub fn complement(&self) -> Self {
        Self::full().subtract(self)
    }

    pub fn is_subset(&self, o: &Self) -> bool {
        self.subtract(o).boxes.is_empty()
    }

    /// Smallest box witness by (src, dst, protocol, ports).
    pub fn witness(&self) -> Option<Packet> {
        self.boxes
            .iter()
            .filter_map(HeaderBox::witness)
            .min_by_key(|p| (u32::from(p.src_ip), u32::from(p.dst_ip), p.protocol, p.src_port, p.dst_port))
    }
}

impl fmt::Display for HeaderBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let protos: Vec<&str> = self.protocols.iter().map(|p| p.keyword()).collect();
        write!(
            f,
            "src {} dst {} proto {{{}}} sport {} dport {}",
            self.src,
            self.dst,
            protos.join(","),
            self.src_port,
            self.dst_port
        )
    }
}

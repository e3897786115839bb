use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SymbolicError;
use crate::model::Ipv4Prefix;

/// All networks inside `base` whose mask length lies in `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PrefixAtom {
    base: Ipv4Prefix,
    lo: u8,
    hi: u8,
}

impl PrefixAtom {
    /// Requires `base.len() <= lo <= hi <= 32`.
    pub fn new(base: Ipv4Prefix, lo: u8, hi: u8) -> Result<Self, SymbolicError> {
        if base.len() <= lo && lo <= hi && hi <= 32 {
            Ok(Self { base, lo, hi })
        } else {
            Err(SymbolicError::InvalidPrefixAtom { atom: format!("{base}:{lo}-{hi}") })
        }
    }

    /// Like [`PrefixAtom::new`] but raises `lo` to the base length and caps
    /// `hi` at 32; `None` when the range is empty.
    pub fn clipped(base: Ipv4Prefix, lo: u8, hi: u8) -> Option<Self> {
        let lo = lo.max(base.len());
        let hi = hi.min(32);
        (lo <= hi).then_some(Self { base, lo, hi })
    }

    pub fn full() -> Self {
        Self { base: Ipv4Prefix::default_route(), lo: 0, hi: 32 }
    }

    /// A single network.
    pub fn exact(p: Ipv4Prefix) -> Self {
        Self { base: p, lo: p.len(), hi: p.len() }
    }

    pub fn base(&self) -> Ipv4Prefix {
        self.base
    }

    pub fn lo(&self) -> u8 {
        self.lo
    }

    pub fn hi(&self) -> u8 {
        self.hi
    }

    pub fn contains(&self, n: &Ipv4Prefix) -> bool {
        self.base.contains(n) && (self.lo..=self.hi).contains(&n.len())
    }

    /// Structural containment (sufficient, not necessary, for set inclusion
    /// against a union).
    pub fn is_subset(&self, other: &Self) -> bool {
        other.base.contains(&self.base) && other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let base = if self.base.contains(&other.base) {
            other.base
        } else if other.base.contains(&self.base) {
            self.base
        } else {
            return None;
        };
        Self::clipped(base, self.lo.max(other.lo), self.hi.min(other.hi))
    }

    /// `self \ other` as a list of pairwise disjoint atoms.
    pub fn subtract(&self, other: &Self) -> Vec<Self> {
        if self.intersect(other).is_none() {
            return vec![*self];
        }
        let mut out = Vec::new();
        if other.base.contains(&self.base) {
            // same or wider base: only the length ranges can separate them
            out.extend(Self::clipped(self.base, self.lo, other.lo.saturating_sub(1)).filter(|_| other.lo > 0));
            out.extend(Self::clipped(self.base, other.hi.saturating_add(1), self.hi).filter(|_| other.hi < 32));
            return out;
        }
        // other.base strictly inside self.base
        let b = other.base;
        let deep = self.lo.max(b.len());
        for len in self.base.len() + 1..=b.len() {
            let sib = b.truncate(len).sibling().expect("len > 0");
            out.extend(Self::clipped(sib, deep, self.hi));
        }
        if other.lo > 0 {
            out.extend(Self::clipped(b, deep, self.hi.min(other.lo - 1)));
        }
        if other.hi < 32 {
            out.extend(Self::clipped(b, deep.max(other.hi + 1), self.hi));
        }
        if b.len() > 0 {
            out.extend(Self::clipped(self.base, self.lo, self.hi.min(b.len() - 1)));
        }
        out
    }

    /// Smallest member by (address, length).
    pub fn min_member(&self) -> Ipv4Prefix {
        self.base.with_len(self.lo)
    }
}

impl fmt::Display for PrefixAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}-{}", self.base, self.lo, self.hi)
    }
}

impl FromStr for PrefixAtom {
    type Err = SymbolicError;

    /// `A.B.C.D/L:lo-hi`, or a bare `A.B.C.D/L` for the exact network.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SymbolicError::InvalidPrefixAtom { atom: s.to_string() };
        let (p, range) = match s.split_once(':') {
            Some((p, r)) => (p, Some(r)),
            None => (s, None),
        };
        let base: Ipv4Prefix = p.trim().parse().map_err(|_| bad())?;
        match range {
            None => Ok(Self::exact(base)),
            Some(r) => {
                let (lo, hi) = r.split_once('-').ok_or_else(bad)?;
                let lo = lo.trim().parse().map_err(|_| bad())?;
                let hi = hi.trim().parse().map_err(|_| bad())?;
                Self::new(base, lo, hi)
            }
        }
    }
}

impl Serialize for PrefixAtom {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PrefixAtom {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// A union of prefix atoms. The empty list is the empty set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PrefixSpace {
    atoms: Vec<PrefixAtom>,
}

impl PrefixSpace {
    pub fn empty() -> Self {
        Self { atoms: Vec::new() }
    }

    pub fn full() -> Self {
        Self { atoms: vec![PrefixAtom::full()] }
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = PrefixAtom>) -> Self {
        let mut s = Self { atoms: Vec::new() };
        for a in atoms {
            s.push(a);
        }
        s
    }

    fn push(&mut self, a: PrefixAtom) {
        if self.atoms.iter().any(|x| a.is_subset(x)) {
            return;
        }
        self.atoms.retain(|x| !x.is_subset(&a));
        self.atoms.push(a);
    }

    pub fn atoms(&self) -> &[PrefixAtom] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.atoms.iter().any(|a| *a == PrefixAtom::full())
    }

    pub fn contains(&self, n: &Ipv4Prefix) -> bool {
        self.atoms.iter().any(|a| a.contains(n))
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::from_atoms(self.atoms.iter().chain(&other.atoms).copied())
    }

    pub fn intersect(&self, other: &Self) -> Self {
        if other.is_full() {
            return self.clone();
        }
        if self.is_full() {
            return other.clone();
        }
        Self::from_atoms(self.atoms.iter().flat_map(|a| other.atoms.iter().filter_map(move |b| a.intersect(b))))
    }

    pub fn subtract(&self, other: &Self) -> Self {
        let mut cur = self.atoms.clone();
        for b in &other.atoms {
            cur = cur.iter().flat_map(|a| a.subtract(b)).collect();
            if cur.is_empty() {
                break;
            }
        }
        Self::from_atoms(cur)
    }

    pub fn complement(&self) -> Self {
        Self::full().subtract(self)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.subtract(other).is_empty()
    }

    /// Smallest member by (address, length).
    pub fn min_member(&self) -> Option<Ipv4Prefix> {
        self.atoms.iter().map(PrefixAtom::min_member).min_by_key(|p| (p.bits(), p.len()))
    }
}

impl fmt::Display for PrefixSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return f.write_str("{}");
        }
        let parts: Vec<String> = self.atoms.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(" | "))
    }
}

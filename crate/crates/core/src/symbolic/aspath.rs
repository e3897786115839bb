use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::SymbolicError;
use crate::model::AsPathAtom;

/// Witness paths are searched up to this length unless told otherwise.
pub const DEFAULT_PATH_BOUND: usize = 4;

/// First private ASN tried as the stand-in for "any ASN not mentioned".
pub const FRESH_ASN_BASE: u32 = 65000;

/// One restricted regex atom with a polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AsPathLiteral {
    pub atom: AsPathAtom,
    /// `true` if the path must match the atom, `false` if it must not.
    pub required: bool,
}

/// Conjunction of AS-path literals. The empty conjunction is unconstrained.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AsPathConstraint {
    literals: Vec<AsPathLiteral>,
}

impl AsPathConstraint {
    pub fn full() -> Self {
        Self::default()
    }

    pub fn require(atom: AsPathAtom) -> Self {
        Self { literals: vec![AsPathLiteral { atom, required: true }] }
    }

    pub fn forbid(atom: AsPathAtom) -> Self {
        Self { literals: vec![AsPathLiteral { atom, required: false }] }
    }

    pub fn literals(&self) -> &[AsPathLiteral] {
        &self.literals
    }

    pub fn is_full(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn and(&self, other: &Self) -> Self {
        let mut literals = self.literals.clone();
        for l in &other.literals {
            if !literals.contains(l) {
                literals.push(*l);
            }
        }
        Self { literals }
    }

    pub fn with(&self, lit: AsPathLiteral) -> Self {
        self.and(&Self { literals: vec![lit] })
    }

    pub fn matches(&self, path: &[u32]) -> bool {
        self.literals.iter().all(|l| l.atom.matches(path) == l.required)
    }

    pub fn mentioned(&self) -> BTreeSet<u32> {
        self.literals.iter().filter_map(|l| l.atom.asn()).collect()
    }

    /// Smallest ASN at or above [`FRESH_ASN_BASE`] not mentioned here.
    pub fn fresh_asn(&self) -> u32 {
        let m = self.mentioned();
        (FRESH_ASN_BASE..).find(|a| !m.contains(a)).expect("u32 space not exhausted")
    }

    /// The ASNs that matter: mentioned ones plus one fresh ASN, ascending.
    fn alphabet(&self) -> Vec<u32> {
        let mut a: Vec<u32> = self.mentioned().into_iter().collect();
        a.push(self.fresh_asn());
        a.sort_unstable();
        a
    }

    /// Exact satisfiability. Atoms only observe emptiness, the first and
    /// last ASN, length one, and membership of mentioned ASNs. So if any
    /// path satisfies the conjunction, one of `[]`, `[x]` or
    /// `[f, (required members), l]` over the alphabet does too.
    pub fn is_satisfiable(&self) -> bool {
        if self.literals.is_empty() {
            return true;
        }
        for l in &self.literals {
            if self.literals.contains(&AsPathLiteral { atom: l.atom, required: !l.required }) {
                return false;
            }
        }
        let alpha = self.alphabet();
        if self.matches(&[]) {
            return true;
        }
        if alpha.iter().any(|&x| self.matches(&[x])) {
            return true;
        }
        let must: BTreeSet<u32> = self
            .literals
            .iter()
            .filter_map(|l| match (l.atom, l.required) {
                (AsPathAtom::Contains(n), true) => Some(n),
                _ => None,
            })
            .collect();
        for &f in &alpha {
            for &l in &alpha {
                let mut path = vec![f];
                path.extend(must.iter().copied().filter(|&n| n != f && n != l));
                path.push(l);
                if self.matches(&path) {
                    return true;
                }
            }
        }
        false
    }

    /// Shortest satisfying path of length at most `bound`, lexicographically
    /// smallest among those of that length. `Ok(None)` means unsatisfiable;
    /// `Err(BoundExceeded)` means satisfiable only by longer paths.
    pub fn witness(&self, bound: usize) -> Result<Option<Vec<u32>>, SymbolicError> {
        if !self.is_satisfiable() {
            return Ok(None);
        }
        let alpha = self.alphabet();
        let n = alpha.len();
        for len in 0..=bound {
            let total = n.checked_pow(len as u32).unwrap_or(usize::MAX);
            // counting in base n enumerates paths in lexicographic order
            for code in 0..total {
                let mut path = vec![0u32; len];
                let mut rest = code;
                for slot in path.iter_mut().rev() {
                    *slot = alpha[rest % n];
                    rest /= n;
                }
                if self.matches(&path) {
                    return Ok(Some(path));
                }
            }
        }
        Err(SymbolicError::BoundExceeded { bound })
    }
}

impl fmt::Display for AsPathConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .literals
            .iter()
            .map(|l| if l.required { l.atom.to_string() } else { format!("!{}", l.atom) })
            .collect();
        f.write_str(&parts.join(" & "))
    }
}

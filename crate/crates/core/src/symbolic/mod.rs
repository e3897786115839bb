//! Symbolic sets of routes and packets.
//!
//! Route sets are unions of cubes ([`RouteConstraints`]) over the prefix,
//! community, AS-path and scalar dimensions. Every operation, including
//! difference and complement, is exact. Packet sets are unions of
//! [`HeaderBox`]es.

mod aspath;
mod header;
mod prefix;
mod route;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use aspath::{AsPathConstraint, AsPathLiteral, DEFAULT_PATH_BOUND, FRESH_ASN_BASE};
pub use header::{HeaderBox, HeaderSpace};
pub use prefix::{PrefixAtom, PrefixSpace};
pub use route::{witness_order, CommunityConstraint, RouteConstraints, RouteSpace, ScalarConstraint, ScalarDim};

use crate::model::*;
use crate::ScalarSet;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "error")]
pub enum SymbolicError {
    #[error("invalid prefix atom `{atom}` (expected A.B.C.D/L:lo-hi with L <= lo <= hi <= 32)")]
    InvalidPrefixAtom { atom: String },
    #[error("AS-path constraints are satisfiable only by paths longer than {bound}")]
    BoundExceeded { bound: usize },
    #[error("undefined {list_kind} `{name}`")]
    UnknownList { list_kind: ListKind, name: String },
}

/// Ordered first-match compilation: an entry contributes what it matches
/// minus everything matched by earlier entries.
pub fn first_match(entries: impl IntoIterator<Item = (Action, RouteSpace)>) -> RouteSpace {
    let mut permitted = RouteSpace::empty();
    let mut covered = RouteSpace::empty();
    for (action, space) in entries {
        if action == Action::Permit {
            permitted = permitted.union(&space.subtract(&covered));
        }
        covered = covered.union(&space);
    }
    permitted
}

/// Networks a prefix-list permits.
pub fn prefix_list_space(pl: &PrefixList) -> PrefixSpace {
    let mut permitted = PrefixSpace::empty();
    let mut covered = PrefixSpace::empty();
    for e in &pl.entries {
        let (lo, hi) = e.length_range();
        let Some(atom) = PrefixAtom::clipped(e.prefix, lo, hi) else { continue };
        let s = PrefixSpace::from_atoms([atom]);
        if e.action == Action::Permit {
            permitted = permitted.union(&s.subtract(&covered));
        }
        covered = covered.union(&s);
    }
    permitted
}

pub fn community_list_space(cl: &CommunityList) -> RouteSpace {
    first_match(cl.entries.iter().map(|e| {
        (e.action, RouteConstraints::with_community(CommunityConstraint::requiring(e.matcher.required())).into())
    }))
}

pub fn as_path_list_space(al: &AsPathList) -> RouteSpace {
    first_match(
        al.entries.iter().map(|e| (e.action, RouteConstraints::with_as_path(AsPathConstraint::require(e.atom)).into())),
    )
}

pub fn match_space(m: &MatchCondition, c: &Config) -> Result<RouteSpace, SymbolicError> {
    let unknown = |kind, name: &str| SymbolicError::UnknownList { list_kind: kind, name: name.to_string() };
    Ok(match m {
        MatchCondition::PrefixList(n) => {
            let pl = c.prefix_lists.get(n).ok_or_else(|| unknown(ListKind::Prefix, n))?;
            RouteConstraints::with_prefix(prefix_list_space(pl)).into()
        }
        MatchCondition::CommunityList(n) => {
            community_list_space(c.community_lists.get(n).ok_or_else(|| unknown(ListKind::Community, n))?)
        }
        MatchCondition::AsPathList(n) => {
            as_path_list_space(c.as_path_lists.get(n).ok_or_else(|| unknown(ListKind::AsPath, n))?)
        }
        MatchCondition::LocalPref(v) => {
            RouteConstraints::with_scalar(ScalarDim::LocalPref, ScalarSet::single(*v)).into()
        }
        MatchCondition::Tag(v) => RouteConstraints::with_scalar(ScalarDim::Tag, ScalarSet::single(*v)).into(),
    })
}

/// Routes the stanza's match lines select (its action is ignored).
pub fn stanza_space(s: &Stanza, c: &Config) -> Result<RouteSpace, SymbolicError> {
    let mut space = RouteSpace::full();
    for m in &s.matches {
        space = space.intersect(&match_space(m, c)?);
        if space.is_empty() {
            break;
        }
    }
    Ok(space)
}

//! Finite unions of closed integer intervals.
//!
//! Used for every scalar dimension in the symbolic algebra (local preference,
//! MED, tag, weight, next hop, packet addresses and ports). The set is generic
//! over the unsigned integer width so that `u16` ports and `u32` attributes
//! share one implementation.

use std::fmt;

use num_traits::{Bounded, PrimInt, Unsigned};
use serde::{Deserialize, Serialize};

/// Integer types an [`IntervalSet`] can range over.
pub trait Bound: PrimInt + Unsigned + Bounded + fmt::Debug + fmt::Display {}

impl<T: PrimInt + Unsigned + Bounded + fmt::Debug + fmt::Display> Bound for T {}

/// A normalized union of closed intervals: sorted, disjoint and with
/// adjacent ranges merged, so structural equality is set equality.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de> + Bound"))]
#[serde(from = "Vec<(T, T)>", into = "Vec<(T, T)>")]
pub struct IntervalSet<T: Bound> {
    ranges: Vec<(T, T)>,
}

impl<T: Bound> From<Vec<(T, T)>> for IntervalSet<T> {
    fn from(ranges: Vec<(T, T)>) -> Self {
        Self::from_ranges(ranges)
    }
}

impl<T: Bound> From<IntervalSet<T>> for Vec<(T, T)> {
    fn from(set: IntervalSet<T>) -> Self {
        set.ranges
    }
}

impl<T: Bound> IntervalSet<T> {
    pub fn empty() -> Self {
        Self { ranges: Vec::new() }
    }

    pub fn full() -> Self {
        Self { ranges: vec![(T::min_value(), T::max_value())] }
    }

    pub fn single(v: T) -> Self {
        Self { ranges: vec![(v, v)] }
    }

    /// The closed range `[lo, hi]`; empty when `lo > hi`.
    pub fn range(lo: T, hi: T) -> Self {
        if lo > hi {
            Self::empty()
        } else {
            Self { ranges: vec![(lo, hi)] }
        }
    }

    /// Builds a set from arbitrary (possibly overlapping, unsorted) ranges.
    /// Ranges with `lo > hi` are dropped.
    pub fn from_ranges(mut ranges: Vec<(T, T)>) -> Self {
        ranges.retain(|(lo, hi)| lo <= hi);
        ranges.sort();
        let mut out: Vec<(T, T)> = Vec::with_capacity(ranges.len());
        for (lo, hi) in ranges {
            if let Some(last) = out.last_mut() {
                // merge overlapping or adjacent
                if last.1 == T::max_value() || lo <= last.1 + T::one() {
                    if hi > last.1 {
                        last.1 = hi;
                    }
                    continue;
                }
            }
            out.push((lo, hi));
        }
        Self { ranges: out }
    }

    pub fn ranges(&self) -> &[(T, T)] {
        &self.ranges
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.ranges.len() == 1 && self.ranges[0] == (T::min_value(), T::max_value())
    }

    pub fn contains(&self, v: T) -> bool {
        // ranges are sorted; binary search on the upper bound
        let idx = self.ranges.partition_point(|&(_, hi)| hi < v);
        self.ranges.get(idx).is_some_and(|&(lo, _)| lo <= v)
    }

    pub fn min(&self) -> Option<T> {
        self.ranges.first().map(|&(lo, _)| lo)
    }

    /// `default` if it is a member, otherwise the smallest member.
    pub fn pick(&self, default: T) -> Option<T> {
        if self.contains(default) {
            Some(default)
        } else {
            self.min()
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut all = self.ranges.clone();
        all.extend_from_slice(&other.ranges);
        Self::from_ranges(all)
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.ranges.len() && j < other.ranges.len() {
            let (alo, ahi) = self.ranges[i];
            let (blo, bhi) = other.ranges[j];
            let lo = alo.max(blo);
            let hi = ahi.min(bhi);
            if lo <= hi {
                out.push((lo, hi));
            }
            if ahi < bhi {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { ranges: out }
    }

    pub fn complement(&self) -> Self {
        let mut out = Vec::new();
        let mut next = Some(T::min_value());
        for &(lo, hi) in &self.ranges {
            if let Some(start) = next {
                if lo > start {
                    out.push((start, lo - T::one()));
                }
            }
            next = if hi == T::max_value() { None } else { Some(hi + T::one()) };
        }
        if let Some(start) = next {
            out.push((start, T::max_value()));
        }
        Self { ranges: out }
    }

    pub fn subtract(&self, other: &Self) -> Self {
        self.intersect(&other.complement())
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.subtract(other).is_empty()
    }

    /// Every interval endpoint together with its outer neighbours. Any
    /// boolean combination of sets built from these intervals is constant on
    /// the gaps between the returned points, which makes them a complete set
    /// of representatives for enumeration.
    pub fn boundary_points(&self) -> Vec<T> {
        let mut pts = Vec::new();
        for &(lo, hi) in &self.ranges {
            pts.push(lo);
            pts.push(hi);
            if lo > T::min_value() {
                pts.push(lo - T::one());
            }
            if hi < T::max_value() {
                pts.push(hi + T::one());
            }
        }
        pts
    }
}

impl<T: Bound> fmt::Debug for IntervalSet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl<T: Bound> fmt::Display for IntervalSet<T> {
    /// `{}` for empty, `*` for full, otherwise `a-b,c,...`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "{{}}");
        }
        if self.is_full() {
            return write!(f, "*");
        }
        for (i, &(lo, hi)) in self.ranges.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            if lo == hi {
                write!(f, "{lo}")?;
            } else {
                write!(f, "{lo}-{hi}")?;
            }
        }
        Ok(())
    }
}

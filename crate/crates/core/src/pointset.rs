//! Subsets of the point set `{1, …, v}` for `v ≤ 64`.
//!
//! A [`PointSet`] is a bitmask where point `p` occupies bit `p - 1`. Ordering
//! is lexicographic on the ascending point sequence, which is how orbit
//! representatives and block lists are ranked everywhere in the crate.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Largest number of points a [`PointSet`] can hold.
pub const MAX_POINTS: usize = 64;

#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct PointSet(u64);

impl PointSet {
    pub const EMPTY: PointSet = PointSet(0);

    pub fn from_bits(bits: u64) -> Self {
        PointSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    /// Builds a set from 1-based points, rejecting out-of-range and repeated points.
    pub fn from_points(points: &[usize], degree: usize) -> Result<Self> {
        if degree > MAX_POINTS {
            return Err(Error::DegreeTooLarge {
                degree,
                max: MAX_POINTS,
            });
        }
        let mut bits = 0u64;
        for &p in points {
            if p == 0 || p > degree {
                return Err(Error::PointOutOfRange { point: p, degree });
            }
            let bit = 1u64 << (p - 1);
            if bits & bit != 0 {
                return Err(Error::RepeatedPoint(p));
            }
            bits |= bit;
        }
        Ok(PointSet(bits))
    }

    /// The full set `{1, …, v}`.
    pub fn full(v: usize) -> Self {
        debug_assert!(v <= MAX_POINTS);
        if v == 64 {
            PointSet(u64::MAX)
        } else {
            PointSet((1u64 << v) - 1)
        }
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, point: usize) -> bool {
        point >= 1 && point <= MAX_POINTS && self.0 & (1u64 << (point - 1)) != 0
    }

    pub fn is_subset_of(self, other: PointSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: PointSet) -> PointSet {
        PointSet(self.0 | other.0)
    }

    pub fn intersection(self, other: PointSet) -> PointSet {
        PointSet(self.0 & other.0)
    }

    pub fn difference(self, other: PointSet) -> PointSet {
        PointSet(self.0 & !other.0)
    }

    /// Largest point in the set, or 0 when empty.
    pub fn max_point(self) -> usize {
        64 - self.0.leading_zeros() as usize
    }

    /// Points in ascending order, 1-based.
    pub fn points(self) -> Points {
        Points(self.0)
    }

    /// Zero-based indices in ascending order.
    pub(crate) fn indices(self) -> Indices {
        Indices(self.0)
    }

    /// All `t`-element subsets of this set.
    pub fn subsets(self, t: usize) -> impl Iterator<Item = PointSet> {
        let members: Vec<usize> = self.indices().collect();
        let n = members.len();
        KSubsets::new(n, t).map(move |idx| {
            let mut bits = 0u64;
            let mut rest = idx.0;
            while rest != 0 {
                let i = rest.trailing_zeros() as usize;
                bits |= 1u64 << members[i];
                rest &= rest - 1;
            }
            PointSet(bits)
        })
    }
}

impl Ord for PointSet {
    fn cmp(&self, other: &Self) -> Ordering {
        let diff = self.0 ^ other.0;
        if diff == 0 {
            return Ordering::Equal;
        }
        let low = diff & diff.wrapping_neg();
        // Both sequences agree below `low`; whoever holds `low` is smaller
        // unless the other one has run out of points.
        let above = !(low | (low - 1));
        if self.0 & low != 0 {
            if other.0 & above != 0 {
                Ordering::Less
            } else {
                Ordering::Greater
            }
        } else if self.0 & above != 0 {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    }
}

impl PartialOrd for PointSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, p) in self.points().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str("}")
    }
}

pub struct Points(u64);

impl Iterator for Points {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i + 1)
    }
}

pub(crate) struct Indices(u64);

impl Iterator for Indices {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }
}

/// All `k`-subsets of `{1, …, n}` in colex order (Gosper's hack).
pub struct KSubsets {
    next: Option<u128>,
    limit: u128,
}

impl KSubsets {
    pub fn new(n: usize, k: usize) -> Self {
        assert!(n <= MAX_POINTS, "at most {MAX_POINTS} points");
        let next = if k > n { None } else { Some((1u128 << k) - 1) };
        KSubsets {
            next,
            limit: 1u128 << n,
        }
    }
}

impl Iterator for KSubsets {
    type Item = PointSet;

    fn next(&mut self) -> Option<PointSet> {
        let x = self.next?;
        self.next = if x == 0 {
            None
        } else {
            let c = x & x.wrapping_neg();
            let r = x + c;
            let y = (((r ^ x) >> 2) / c) | r;
            (y < self.limit).then_some(y)
        };
        Some(PointSet(x as u64))
    }
}

/// Binomial coefficient, exact for all arguments this crate uses.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(points: &[usize]) -> PointSet {
        PointSet::from_points(points, 64).unwrap()
    }

    #[test]
    fn ordering_is_lexicographic() {
        assert!(set(&[1, 2, 9]) < set(&[1, 3, 4]));
        assert!(set(&[1, 2]) < set(&[1, 2, 3]));
        assert!(set(&[2]) > set(&[1, 50]));
        assert!(set(&[]) < set(&[1]));
    }

    #[test]
    fn rejects_bad_points() {
        assert_eq!(
            PointSet::from_points(&[0], 5),
            Err(Error::PointOutOfRange {
                point: 0,
                degree: 5
            })
        );
        assert_eq!(
            PointSet::from_points(&[3, 3], 5),
            Err(Error::RepeatedPoint(3))
        );
    }

    #[test]
    fn k_subsets_count() {
        assert_eq!(KSubsets::new(10, 3).count(), 120);
        assert_eq!(KSubsets::new(5, 0).count(), 1);
        assert_eq!(KSubsets::new(3, 4).count(), 0);
        assert_eq!(KSubsets::new(64, 63).count(), 64);
        assert_eq!(set(&[2, 4, 6, 8]).subsets(2).count(), 6);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(53, 8), 886_322_710);
        assert_eq!(binomial(55, 10), 29_248_649_430);
        assert_eq!(binomial(4, 5), 0);
    }

    proptest! {
        #[test]
        fn ordering_matches_sorted_vectors(a in any::<u64>(), b in any::<u64>()) {
            let pa = PointSet::from_bits(a);
            let pb = PointSet::from_bits(b);
            let va: Vec<usize> = pa.points().collect();
            let vb: Vec<usize> = pb.points().collect();
            prop_assert_eq!(pa.cmp(&pb), va.cmp(&vb));
        }
    }
}

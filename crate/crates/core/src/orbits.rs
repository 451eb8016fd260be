//! Orbits of `k`-subsets under a permutation group.
//!
//! Every orbit is named by its lexicographically smallest member. Two
//! enumerators are provided: [`enumerate_orbits`] walks all `C(v, k)`
//! subsets, and [`enumerate_short_orbits`] finds only the orbits whose size
//! stays under a bound by building subsets fixed by prime-order elements.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::groups::PermutationGroup;
use crate::pointset::{binomial, KSubsets, PointSet};

/// Default ceiling on `C(v, k)` for complete enumeration.
pub const DEFAULT_ENUMERATION_GUARD: u128 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SubsetOrbit {
    pub representative: PointSet,
    pub size: usize,
    pub stabilizer_order: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitSet {
    pub degree: usize,
    pub subset_size: usize,
    /// Sorted by representative.
    pub orbits: Vec<SubsetOrbit>,
    pub complete: bool,
    pub size_bound: Option<usize>,
}

impl OrbitSet {
    pub fn len(&self) -> usize {
        self.orbits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }

    /// Sum of orbit sizes; equals `C(v, k)` when complete.
    pub fn total_size(&self) -> u128 {
        self.orbits.iter().map(|o| o.size as u128).sum()
    }

    pub fn position(&self, representative: PointSet) -> Option<usize> {
        self.orbits
            .binary_search_by(|o| o.representative.cmp(&representative))
            .ok()
    }
}

fn check_subset(g: &PermutationGroup, s: PointSet) -> Result<()> {
    g.check_subset_degree()?;
    if s.max_point() > g.degree() {
        return Err(Error::PointOutOfRange {
            point: s.max_point(),
            degree: g.degree(),
        });
    }
    Ok(())
}

/// The orbit of `s`: its lex-min image, size and stabilizer order.
pub fn orbit_of(s: PointSet, g: &PermutationGroup) -> Result<SubsetOrbit> {
    check_subset(g, s)?;
    Ok(scan_orbit(s, g))
}

fn scan_orbit(s: PointSet, g: &PermutationGroup) -> SubsetOrbit {
    let mut min = s;
    let mut fixers = 0usize;
    for e in g.elements() {
        let img = e.map_set(s);
        if img == s {
            fixers += 1;
        } else if img < min {
            min = img;
        }
    }
    SubsetOrbit {
        representative: min,
        size: g.order() / fixers,
        stabilizer_order: fixers,
    }
}

/// Lex-min image of `s` under `g`.
pub fn canonical_image(s: PointSet, g: &PermutationGroup) -> PointSet {
    g.elements().iter().map(|e| e.map_set(s)).min().unwrap_or(s)
}

fn is_orbit_minimum(s: PointSet, g: &PermutationGroup) -> bool {
    g.elements().iter().all(|e| e.map_set(s) >= s)
}

/// Every orbit of `k`-subsets, with the default guard.
pub fn enumerate_orbits(g: &PermutationGroup, k: usize) -> Result<OrbitSet> {
    enumerate_orbits_guarded(g, k, DEFAULT_ENUMERATION_GUARD)
}

/// Every orbit of `k`-subsets. Refuses when `C(v, k)` exceeds `guard`.
///
/// Subsets are visited in chunks sharing a smallest point; a subset survives
/// only if no group element maps it to a lexicographically smaller one, so
/// memory stays proportional to the number of orbits.
pub fn enumerate_orbits_guarded(g: &PermutationGroup, k: usize, guard: u128) -> Result<OrbitSet> {
    g.check_subset_degree()?;
    let v = g.degree();
    if k > v {
        return Err(Error::InvalidParameters(format!(
            "subset size {k} exceeds degree {v}"
        )));
    }
    let count = binomial(v as u64, k as u64);
    if count > guard {
        return Err(Error::EnumerationGuard { v, k, count, guard });
    }

    let mut orbits: Vec<SubsetOrbit> = if k == 0 {
        vec![scan_orbit(PointSet::EMPTY, g)]
    } else {
        (1..=v + 1 - k)
            .into_par_iter()
            .flat_map_iter(|first| {
                let head = 1u64 << (first - 1);
                KSubsets::new(v - first, k - 1)
                    .map(move |rest| PointSet::from_bits(head | (rest.bits() << first)))
                    .filter(|&s| is_orbit_minimum(s, g))
                    .map(|s| scan_orbit(s, g))
                    .collect::<Vec<_>>()
            })
            .collect()
    };
    orbits.sort_by(|a, b| a.representative.cmp(&b.representative));
    Ok(OrbitSet {
        degree: v,
        subset_size: k,
        orbits,
        complete: true,
        size_bound: None,
    })
}

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

/// One element from each conjugacy class of subgroups of prime order.
pub fn prime_order_class_representatives(g: &PermutationGroup) -> Vec<usize> {
    let elements = g.elements();
    let inverses: Vec<usize> = elements
        .iter()
        .map(|e| {
            g.index_of(&e.inverse())
                .expect("group closed under inverse")
        })
        .collect();
    let mut covered = vec![false; elements.len()];
    let mut reps = Vec::new();
    for (i, e) in elements.iter().enumerate() {
        let order = e.order();
        if covered[i] || !is_prime(order) {
            continue;
        }
        reps.push(i);
        for (x, xinv) in elements.iter().zip(&inverses) {
            let conj = x
                .compose(e)
                .and_then(|xe| xe.compose(&elements[*xinv]))
                .expect("equal degrees");
            let mut power = conj.clone();
            for _ in 1..order {
                let idx = g.index_of(&power).expect("group closed under conjugation");
                covered[idx] = true;
                power = power.compose(&conj).expect("equal degrees");
            }
        }
    }
    reps
}

/// Orbits of `k`-subsets of size at most `bound`, where `bound < |G|`.
///
/// A short orbit has a stabilizer of order at least `⌈|G| / bound⌉ ≥ 2`, so the
/// stabilizer contains an element of prime order and, up to conjugacy, the
/// orbit has a member that is a union of cycles of one of the representatives
/// from [`prime_order_class_representatives`]. Those unions are the only
/// candidates examined.
pub fn enumerate_short_orbits(g: &PermutationGroup, k: usize, bound: usize) -> Result<OrbitSet> {
    g.check_subset_degree()?;
    let v = g.degree();
    if k > v {
        return Err(Error::InvalidParameters(format!(
            "subset size {k} exceeds degree {v}"
        )));
    }
    if bound >= g.order() {
        return Err(Error::InvalidParameters(format!(
            "short-orbit bound {bound} must be below the group order {}",
            g.order()
        )));
    }

    let reps = prime_order_class_representatives(g);
    let found: Vec<Vec<SubsetOrbit>> = reps
        .par_iter()
        .map(|&r| short_orbits_fixed_by(g, r, k, bound))
        .collect();

    let mut merged = BTreeMap::new();
    for orbit in found.into_iter().flatten() {
        merged.entry(orbit.representative).or_insert(orbit);
    }
    Ok(OrbitSet {
        degree: v,
        subset_size: k,
        orbits: merged.into_values().collect(),
        complete: false,
        size_bound: Some(bound),
    })
}

fn short_orbits_fixed_by(
    g: &PermutationGroup,
    element: usize,
    k: usize,
    bound: usize,
) -> Vec<SubsetOrbit> {
    let h = &g.elements()[element];
    let p = h.order() as usize;
    let mut fixed_points = Vec::new();
    let mut cycles = Vec::new();
    for c in h.cycles() {
        let set = PointSet::from_points(&c, g.degree()).expect("cycle points in range");
        if c.len() == 1 {
            fixed_points.push(set);
        } else {
            cycles.push(set);
        }
    }

    // Members of an orbit that are fixed by `h` are skipped once the orbit is scanned.
    let mut seen: HashSet<PointSet> = HashSet::new();
    let mut out = Vec::new();
    for n_cycles in 0..=k / p {
        let n_fixed = k - n_cycles * p;
        if n_fixed > fixed_points.len() || n_cycles > cycles.len() {
            continue;
        }
        for pick_cycles in KSubsets::new(cycles.len(), n_cycles) {
            let cycle_part = pick_cycles
                .indices()
                .fold(PointSet::EMPTY, |acc, i| acc.union(cycles[i]));
            for pick_fixed in KSubsets::new(fixed_points.len(), n_fixed) {
                let s = pick_fixed
                    .indices()
                    .fold(cycle_part, |acc, i| acc.union(fixed_points[i]));
                if seen.contains(&s) {
                    continue;
                }
                let mut min = s;
                let mut fixers = 0usize;
                for e in g.elements() {
                    let img = e.map_set(s);
                    if img == s {
                        fixers += 1;
                    } else if img < min {
                        min = img;
                    }
                    if h.map_set(img) == img {
                        seen.insert(img);
                    }
                }
                let size = g.order() / fixers;
                if size <= bound {
                    out.push(SubsetOrbit {
                        representative: min,
                        size,
                        stabilizer_order: fixers,
                    });
                }
            }
        }
    }
    out
}

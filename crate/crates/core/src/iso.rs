//! Isomorphism tests and automorphism group orders for designs.
//!
//! Points are coloured and the colouring is refined against a hypergraph
//! built from the design: the blocks themselves plus, for the smallest `s`
//! at which the design stops being an `s`-design, every `s`-subset inside a
//! block weighted by the number of blocks containing it. Refinement is
//! deterministic and commutes with relabelling, so two designs can be
//! searched in lockstep: individualise a point on the left, try every point
//! of the same colour on the right, refine both and compare traces. A map is
//! accepted only after checking that it carries blocks onto blocks.
//!
//! Automorphism orders come from a stabilizer chain along the leftmost path
//! of the search tree: the order is the product of the orbit lengths of the
//! individualised points, each orbit found by searching for automorphisms
//! fixing the earlier points. Every search is bounded by a node budget and
//! reports `Unknown` when it runs out.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;

use crate::designs::Design;
use crate::groups::Permutation;
use crate::pointset::{binomial, PointSet};

/// Default cap on refinement nodes per search.
pub const DEFAULT_NODE_BUDGET: u64 = 2_000_000;

/// Cap on `s`-subset incidences materialised for refinement.
const HYPEREDGE_CAP: u128 = 4_000_000;

/// Relabelling-invariant summary of a design.
///
/// `intersections[i]` counts unordered block pairs meeting in `i` points.
/// Each block's profile is the histogram of its intersection sizes with the
/// other blocks (the sorted vector of sizes, run-length encoded); `profiles`
/// is the sorted multiset of those profiles.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    pub v: usize,
    pub k: usize,
    pub b: usize,
    pub intersections: Vec<u64>,
    pub profiles: Vec<(Vec<u64>, u64)>,
}

pub fn fingerprint(d: &Design) -> Fingerprint {
    let k = d.k();
    let blocks = d.blocks();
    let mut intersections = vec![0u64; k + 1];
    let mut per_block = vec![vec![0u64; k + 1]; blocks.len()];
    for i in 0..blocks.len() {
        for j in i + 1..blocks.len() {
            let m = blocks[i].intersection(blocks[j]).len();
            intersections[m] += 1;
            per_block[i][m] += 1;
            per_block[j][m] += 1;
        }
    }
    let mut counts: HashMap<Vec<u64>, u64> = HashMap::new();
    for p in per_block {
        *counts.entry(p).or_insert(0) += 1;
    }
    let mut profiles: Vec<(Vec<u64>, u64)> = counts.into_iter().collect();
    profiles.sort();
    Fingerprint {
        v: d.v(),
        k,
        b: blocks.len(),
        intersections,
        profiles,
    }
}

/// Result of an isomorphism test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IsoOutcome {
    /// The permutation maps the first design onto the second.
    Isomorphic(Permutation),
    NotIsomorphic,
    /// The node budget ran out before the search finished.
    Unknown,
}

/// Order of a group given as a product of orbit lengths along a stabilizer chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupOrder {
    pub orbit_lengths: Vec<usize>,
}

impl GroupOrder {
    /// The order, or `None` if it does not fit in a `u128`.
    pub fn value(&self) -> Option<u128> {
        self.orbit_lengths
            .iter()
            .try_fold(1u128, |acc, &x| acc.checked_mul(x as u128))
    }
}

impl fmt::Display for GroupOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // little-endian base 10^9 digits
        let mut digits: Vec<u64> = vec![1];
        for &x in &self.orbit_lengths {
            let mut carry = 0u64;
            for d in digits.iter_mut() {
                let y = *d * x as u64 + carry;
                *d = y % 1_000_000_000;
                carry = y / 1_000_000_000;
            }
            while carry > 0 {
                digits.push(carry % 1_000_000_000);
                carry /= 1_000_000_000;
            }
        }
        let mut it = digits.iter().rev();
        write!(f, "{}", it.next().unwrap())?;
        for d in it {
            write!(f, "{d:09}")?;
        }
        Ok(())
    }
}

/// Automorphism group of a design.
#[derive(Clone, Debug)]
pub struct Automorphisms {
    /// Exact when `complete`, otherwise the order of the subgroup found so far.
    pub order: GroupOrder,
    pub generators: Vec<Permutation>,
    pub complete: bool,
    chain: Chain,
}

impl Automorphisms {
    /// Exact order, or `None` when the search was cut short or it overflows.
    pub fn exact_order(&self) -> Option<u128> {
        if self.complete {
            self.order.value()
        } else {
            None
        }
    }
}

/// Leftmost search path with the orbits of each point stabilizer on it.
#[derive(Clone, Debug, Default)]
struct Chain {
    path: Vec<usize>,
    /// `orbit_min[i][p]`: least point in the orbit of `p` under the
    /// automorphisms found that fix `path[..i]`.
    orbit_min: Vec<Vec<usize>>,
}

/// The refinement structure of a design.
struct Structure {
    v: usize,
    level: Option<usize>,
    blocks: Vec<PointSet>,
    /// Hyperedge tag and points (0-based).
    edges: Vec<(u64, Vec<u8>)>,
    incident: Vec<Vec<u32>>,
}

impl Structure {
    fn new(d: &Design) -> Self {
        let v = d.v();
        let blocks = d.blocks().to_vec();
        let mut edges: Vec<(u64, Vec<u8>)> = blocks
            .iter()
            .map(|b| (u64::MAX, b.indices().map(|i| i as u8).collect()))
            .collect();
        let level = first_irregular_level(d);
        if let Some(level) = level {
            if level < d.k() {
                let mut counts: HashMap<u64, u64> = HashMap::new();
                for b in &blocks {
                    for s in b.subsets(level) {
                        *counts.entry(s.bits()).or_insert(0) += 1;
                    }
                }
                let mut sets: Vec<(u64, u64)> = counts.into_iter().collect();
                sets.sort_unstable();
                for (bits, c) in sets {
                    let s = PointSet::from_bits(bits);
                    edges.push((c, s.indices().map(|i| i as u8).collect()));
                }
            }
        }
        let mut incident = vec![Vec::new(); v];
        for (e, (_, pts)) in edges.iter().enumerate() {
            for &p in pts {
                incident[p as usize].push(e as u32);
            }
        }
        Structure {
            v,
            level,
            blocks,
            edges,
            incident,
        }
    }

    /// Refines `colors` to a stable colouring; returns a trace hash that
    /// determines the colour classes produced.
    fn refine(&self, colors: &mut [u32], scratch: &mut Scratch) -> u64 {
        let mut trace = 0x9e37_79b9_7f4a_7c15u64;
        let mut classes = count_classes(colors);
        scratch.edge.resize(self.edges.len(), 0);
        loop {
            for (e, (tag, pts)) in self.edges.iter().enumerate() {
                let mut h = 0u64;
                for &p in pts {
                    h = h.wrapping_add(mix(colors[p as usize] as u64 ^ 0x51af_d7ed_558c_cd1d));
                }
                scratch.edge[e] = mix(h ^ mix(*tag));
            }
            let mut pairs: Vec<(u32, u64)> = (0..self.v)
                .map(|p| {
                    let mut s = 0u64;
                    for &e in &self.incident[p] {
                        s = s.wrapping_add(mix(scratch.edge[e as usize]));
                    }
                    (colors[p], s)
                })
                .collect();
            let mut sorted = pairs.clone();
            sorted.sort_unstable();
            let mut distinct: Vec<(u32, u64)> = Vec::with_capacity(sorted.len());
            for w in &sorted {
                match distinct.last() {
                    Some(&last) if last == *w => {}
                    _ => distinct.push(*w),
                }
            }
            for w in &sorted {
                trace = mix(trace ^ mix(w.0 as u64) ^ w.1);
            }
            for (p, pair) in pairs.iter_mut().enumerate() {
                colors[p] = distinct.binary_search(pair).unwrap() as u32;
            }
            if distinct.len() == classes {
                return trace;
            }
            classes = distinct.len();
        }
    }

    /// True when `map` (0-based images) carries `self`'s blocks onto `other`'s.
    fn maps_onto(&self, other: &Structure, map: &[usize]) -> bool {
        self.blocks.len() == other.blocks.len()
            && self.blocks.iter().all(|b| {
                let image = b.indices().fold(0u64, |acc, i| acc | 1 << map[i]);
                other
                    .blocks
                    .binary_search(&PointSet::from_bits(image))
                    .is_ok()
            })
    }
}

#[derive(Default)]
struct Scratch {
    edge: Vec<u64>,
}

fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn count_classes(colors: &[u32]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

/// Smallest `s ≤ k` such that `s`-subsets are not all covered equally often,
/// or `None` if that never happens or counting would be too expensive.
fn first_irregular_level(d: &Design) -> Option<usize> {
    let (v, k, b) = (d.v(), d.k(), d.b() as u128);
    for s in 1..=k {
        if b * binomial(k as u64, s as u64) > HYPEREDGE_CAP {
            return None;
        }
        let mut counts: HashMap<u64, u64> = HashMap::new();
        for blk in d.blocks() {
            for sub in blk.subsets(s) {
                *counts.entry(sub.bits()).or_insert(0) += 1;
            }
        }
        let total = binomial(v as u64, s as u64);
        let mut values = counts.values();
        let first = values.next().copied();
        let uniform = counts.len() as u128 == total && values.all(|&c| Some(c) == first);
        if !uniform {
            return Some(s);
        }
    }
    None
}

/// Cell to branch on: the smallest non-singleton class, ties to the lower colour.
fn target_cell(colors: &[u32]) -> Option<u32> {
    let mut size: HashMap<u32, usize> = HashMap::new();
    for &c in colors {
        *size.entry(c).or_insert(0) += 1;
    }
    size.into_iter()
        .filter(|&(_, n)| n > 1)
        .min_by_key(|&(c, n)| (n, c))
        .map(|(c, _)| c)
}

fn individualize(colors: &[u32], p: usize) -> Vec<u32> {
    let fresh = colors.iter().max().map_or(0, |m| m + 1);
    let mut c = colors.to_vec();
    c[p] = fresh;
    c
}

struct OutOfBudget;

struct Search<'a> {
    left: &'a Structure,
    right: &'a Structure,
    budget: u64,
    nodes: u64,
    scratch: Scratch,
}

impl Search<'_> {
    fn tick(&mut self) -> Result<(), OutOfBudget> {
        self.nodes += 1;
        if self.nodes > self.budget {
            Err(OutOfBudget)
        } else {
            Ok(())
        }
    }

    /// Looks for an isomorphism respecting two equitable colourings with
    /// matching traces. `chain` enables orbit pruning on the right while the
    /// right-hand choices follow its leftmost path.
    fn extend(
        &mut self,
        lc: &[u32],
        rc: &[u32],
        depth: usize,
        chain: Option<&Chain>,
    ) -> Result<Option<Vec<usize>>, OutOfBudget> {
        let Some(cell) = target_cell(lc) else {
            let mut by_color = vec![0usize; self.right.v];
            for (p, &c) in rc.iter().enumerate() {
                by_color[c as usize] = p;
            }
            let map: Vec<usize> = lc.iter().map(|&c| by_color[c as usize]).collect();
            return Ok(self.left.maps_onto(self.right, &map).then_some(map));
        };
        let x = (0..self.left.v).find(|&p| lc[p] == cell).unwrap();
        let lnext = {
            let mut c = individualize(lc, x);
            let t = self.left.refine(&mut c, &mut self.scratch);
            (c, t)
        };
        let orbits = chain.and_then(|ch| ch.orbit_min.get(depth).map(|o| (o, ch.path[depth])));
        for y in (0..self.right.v).filter(|&p| rc[p] == cell) {
            if let Some((orbit_min, on_path)) = orbits {
                let own = orbit_min[on_path];
                if y != on_path && (orbit_min[y] == own || orbit_min[y] != y) {
                    continue;
                }
            }
            self.tick()?;
            let mut c = individualize(rc, y);
            let t = self.right.refine(&mut c, &mut self.scratch);
            if t != lnext.1 {
                continue;
            }
            let follow = chain.filter(|ch| depth + 1 < ch.path.len() && ch.path[depth] == y);
            if let Some(map) = self.extend(&lnext.0, &c, depth + 1, follow)? {
                return Ok(Some(map));
            }
        }
        Ok(None)
    }
}

fn to_permutation(map: &[usize]) -> Permutation {
    let images: Vec<usize> = map.iter().map(|&i| i + 1).collect();
    Permutation::from_images(&images).expect("search produces bijections")
}

/// Union-find over points.
struct Orbits {
    parent: Vec<usize>,
}

impl Orbits {
    fn new(v: usize) -> Self {
        Orbits {
            parent: (0..v).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        // keep the smaller point as root
        if a < b {
            self.parent[b] = a;
        } else if b < a {
            self.parent[a] = b;
        }
    }

    fn add(&mut self, map: &[usize]) {
        for (p, &q) in map.iter().enumerate() {
            self.union(p, q);
        }
    }

    fn minima(&mut self) -> Vec<usize> {
        (0..self.parent.len()).map(|p| self.find(p)).collect()
    }
}

fn automorphisms_of(s: &Structure, budget: u64) -> Automorphisms {
    let v = s.v;
    let mut scratch = Scratch::default();
    // leftmost path
    let mut colors = vec![0u32; v];
    s.refine(&mut colors, &mut scratch);
    let mut levels: Vec<(Vec<u32>, usize, u32)> = Vec::new();
    while let Some(cell) = target_cell(&colors) {
        let x = (0..v).find(|&p| colors[p] == cell).unwrap();
        levels.push((colors.clone(), x, cell));
        colors = individualize(&colors, x);
        s.refine(&mut colors, &mut scratch);
    }
    let path: Vec<usize> = levels.iter().map(|l| l.1).collect();

    let mut gens: Vec<Vec<usize>> = Vec::new();
    let mut orbit_lengths = vec![1usize; levels.len()];
    let mut orbit_min = vec![Vec::new(); levels.len()];
    let mut search = Search {
        left: s,
        right: s,
        budget,
        nodes: 0,
        scratch: Scratch::default(),
    };
    let mut complete = true;
    'levels: for i in (0..levels.len()).rev() {
        let (lc, x, cell) = &levels[i];
        let mut orbits = Orbits::new(v);
        for g in &gens {
            orbits.add(g);
        }
        let mut failed: Vec<usize> = Vec::new();
        let left = {
            let mut c = individualize(lc, *x);
            let t = s.refine(&mut c, &mut search.scratch);
            (c, t)
        };
        for y in (0..v).filter(|&p| lc[p] == *cell) {
            let ry = orbits.find(y);
            if ry == orbits.find(*x) || failed.iter().any(|&f| orbits.find(f) == ry) {
                continue;
            }
            if search.tick().is_err() {
                complete = false;
                orbit_min[i] = orbits.minima();
                orbit_lengths[i] = orbit_size(&mut orbits, *x);
                break 'levels;
            }
            let mut c = individualize(lc, y);
            let t = s.refine(&mut c, &mut search.scratch);
            let found = if t == left.1 {
                match search.extend(&left.0, &c, i + 1, None) {
                    Ok(r) => r,
                    Err(OutOfBudget) => {
                        complete = false;
                        orbit_min[i] = orbits.minima();
                        orbit_lengths[i] = orbit_size(&mut orbits, *x);
                        break 'levels;
                    }
                }
            } else {
                None
            };
            match found {
                Some(map) => {
                    orbits.add(&map);
                    gens.push(map);
                }
                None => failed.push(y),
            }
        }
        orbit_min[i] = orbits.minima();
        orbit_lengths[i] = orbit_size(&mut orbits, *x);
    }
    if !complete {
        // levels above the interruption contribute nothing yet
        for (i, m) in orbit_min.iter_mut().enumerate() {
            if m.is_empty() {
                *m = (0..v).collect();
                orbit_lengths[i] = 1;
            }
        }
    }
    Automorphisms {
        order: GroupOrder { orbit_lengths },
        generators: gens.iter().map(|g| to_permutation(g)).collect(),
        complete,
        chain: Chain { path, orbit_min },
    }
}

fn orbit_size(orbits: &mut Orbits, x: usize) -> usize {
    let r = orbits.find(x);
    (0..orbits.parent.len())
        .filter(|&p| orbits.find(p) == r)
        .count()
}

/// The automorphism group of `d`, searched within `budget` nodes.
pub fn automorphisms(d: &Design, budget: u64) -> Automorphisms {
    automorphisms_of(&Structure::new(d), budget)
}

/// Decides whether `d1` and `d2` are isomorphic within `budget` nodes.
pub fn isomorphic(d1: &Design, d2: &Design, budget: u64) -> IsoOutcome {
    isomorphic_with(d1, d2, None, budget)
}

fn isomorphic_with(
    d1: &Design,
    d2: &Design,
    aut2: Option<&Automorphisms>,
    budget: u64,
) -> IsoOutcome {
    if d1.v() != d2.v() || d1.k() != d2.k() || d1.b() != d2.b() {
        return IsoOutcome::NotIsomorphic;
    }
    let (s1, s2) = (Structure::new(d1), Structure::new(d2));
    let mut search = Search {
        left: &s1,
        right: &s2,
        budget,
        nodes: 0,
        scratch: Scratch::default(),
    };
    let v = d1.v();
    let (mut c1, mut c2) = (vec![0u32; v], vec![0u32; v]);
    let t1 = s1.refine(&mut c1, &mut search.scratch);
    let t2 = s2.refine(&mut c2, &mut search.scratch);
    if t1 != t2 || s1.level != s2.level || s1.edges.len() != s2.edges.len() {
        return IsoOutcome::NotIsomorphic;
    }
    let chain = aut2
        .filter(|a| a.complete)
        .map(|a| &a.chain)
        .filter(|c| !c.path.is_empty());
    match search.extend(&c1, &c2, 0, chain) {
        Ok(Some(map)) => IsoOutcome::Isomorphic(to_permutation(&map)),
        Ok(None) => IsoOutcome::NotIsomorphic,
        Err(OutOfBudget) => IsoOutcome::Unknown,
    }
}

/// One isomorphism class of a list of designs.
#[derive(Clone, Debug)]
pub struct IsoClass {
    /// Indices into the input, ascending; the first is the representative.
    pub members: Vec<usize>,
    pub automorphisms: Automorphisms,
}

/// Partition of a list of designs into isomorphism classes.
#[derive(Clone, Debug)]
pub struct Classification {
    pub classes: Vec<IsoClass>,
    /// False if some test ran out of budget; undecided designs then start
    /// classes of their own.
    pub complete: bool,
}

/// Groups designs into isomorphism classes, bucketing by fingerprint first.
pub fn classify(designs: &[Design], budget: u64) -> Classification {
    let prints: Vec<Fingerprint> = designs.par_iter().map(fingerprint).collect();
    let mut buckets: Vec<Vec<usize>> = Vec::new();
    let mut index: HashMap<&Fingerprint, usize> = HashMap::new();
    for (i, f) in prints.iter().enumerate() {
        let slot = *index.entry(f).or_insert_with(|| {
            buckets.push(Vec::new());
            buckets.len() - 1
        });
        buckets[slot].push(i);
    }
    let results: Vec<(Vec<IsoClass>, bool)> = buckets
        .par_iter()
        .map(|bucket| {
            let mut classes: Vec<IsoClass> = Vec::new();
            let mut complete = true;
            for &i in bucket {
                let mut placed = false;
                for class in classes.iter_mut() {
                    let rep = &designs[class.members[0]];
                    match isomorphic_with(&designs[i], rep, Some(&class.automorphisms), budget) {
                        IsoOutcome::Isomorphic(_) => {
                            class.members.push(i);
                            placed = true;
                            break;
                        }
                        IsoOutcome::NotIsomorphic => {}
                        IsoOutcome::Unknown => complete = false,
                    }
                }
                if !placed {
                    let automorphisms = automorphisms(&designs[i], budget);
                    complete &= automorphisms.complete;
                    classes.push(IsoClass {
                        members: vec![i],
                        automorphisms,
                    });
                }
            }
            (classes, complete)
        })
        .collect();
    let complete = results.iter().all(|r| r.1);
    let mut classes: Vec<IsoClass> = results.into_iter().flat_map(|r| r.0).collect();
    classes.sort_by_key(|c| c.members[0]);
    Classification { classes, complete }
}

//! Designs, their parameters, and the operations that build new designs
//! from old ones.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::groups::PermutationGroup;
use crate::kramer_mesner::KmMatrix;
use crate::pointset::{binomial, KSubsets, PointSet, MAX_POINTS};
use crate::solver::Solution;

/// Ceiling on `C(v, k)` for operations that materialise every `k`-subset.
pub const DEFAULT_SUBSET_GUARD: u128 = 10_000_000;

/// A nonnegative fraction in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fraction {
    pub num: u128,
    pub den: u128,
}

impl Fraction {
    pub fn new(num: u128, den: u128) -> Self {
        assert!(den > 0);
        let g = gcd(num, den);
        Fraction {
            num: num / g,
            den: den / g,
        }
    }

    pub fn integer(self) -> Option<u128> {
        (self.den == 1).then_some(self.num)
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u128, b: u128) -> u128 {
    a / gcd(a, b) * b
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DesignParameters {
    pub t: usize,
    pub v: usize,
    pub k: usize,
    pub lambda: u128,
    /// `λ_0, …, λ_t`; `λ_t = λ`.
    pub lambda_s: Vec<Fraction>,
    /// Number of blocks, `λ_0`.
    pub b: Fraction,
    pub lambda_min: u128,
    pub lambda_max: u128,
    /// Largest `m` with `m·λ_min ≤ λ_max / 2`.
    pub m: u128,
    pub admissible: bool,
    /// False when `λ > 0` and `b < v`, which no design with `t ≥ 2` allows.
    pub fisher_ok: bool,
}

/// Parameter arithmetic for `t-(v,k,λ)`, with `0 < t < k < v`.
pub fn parameters(t: usize, v: usize, k: usize, lambda: u128) -> Result<DesignParameters> {
    if !(0 < t && t < k && k < v) {
        return Err(Error::InvalidParameters(format!(
            "need 0 < t < k < v, got t={t} v={v} k={k}"
        )));
    }
    let (t64, v64, k64) = (t as u64, v as u64, k as u64);
    let lambda_s: Vec<Fraction> = (0..=t64)
        .map(|s| {
            Fraction::new(
                lambda * binomial(v64 - s, t64 - s),
                binomial(k64 - s, t64 - s),
            )
        })
        .collect();
    let lambda_min = (0..=t64).fold(1u128, |acc, s| {
        let num = binomial(v64 - s, t64 - s);
        let den = binomial(k64 - s, t64 - s);
        lcm(acc, den / gcd(num, den))
    });
    let lambda_max = binomial(v64 - t64, k64 - t64);
    let admissible = lambda_s.iter().all(|l| l.den == 1);
    let b = lambda_s[0];
    let fisher_ok = lambda == 0 || t < 2 || b.num >= v as u128 * b.den;
    Ok(DesignParameters {
        t,
        v,
        k,
        lambda,
        b,
        lambda_min,
        lambda_max,
        m: lambda_max / (2 * lambda_min),
        admissible,
        fisher_ok,
        lambda_s,
    })
}

/// `λ` of the complementary design, `Σ_{i=0}^{t} (−1)^i C(t,i) λ_i`.
pub fn complement_lambda(t: usize, v: usize, k: usize, lambda: u128) -> Result<i128> {
    let p = parameters(t, v, k, lambda)?;
    let mut acc: i128 = 0;
    for (i, l) in p.lambda_s.iter().enumerate() {
        let li = l
            .integer()
            .ok_or_else(|| Error::InvalidParameters(format!("λ_{i} = {l} is not an integer")))?
            as i128;
        let term = binomial(t as u64, i as u64) as i128 * li;
        acc += if i % 2 == 0 { term } else { -term };
    }
    Ok(acc)
}

#[derive(Clone, Debug, Default)]
pub struct Provenance {
    pub group: Option<String>,
    pub base_blocks: Vec<PointSet>,
}

/// A simple design: distinct `k`-subsets of `{1, …, v}`, kept sorted.
#[derive(Clone, Debug)]
pub struct Design {
    v: usize,
    k: usize,
    blocks: Vec<PointSet>,
    pub provenance: Option<Provenance>,
}

impl PartialEq for Design {
    fn eq(&self, other: &Self) -> bool {
        self.v == other.v && self.k == other.k && self.blocks == other.blocks
    }
}

impl Eq for Design {}

impl Design {
    pub fn new(v: usize, k: usize, mut blocks: Vec<PointSet>) -> Result<Self> {
        if v > MAX_POINTS {
            return Err(Error::DegreeTooLarge {
                degree: v,
                max: MAX_POINTS,
            });
        }
        if k > v {
            return Err(Error::InvalidParameters(format!(
                "block size {k} exceeds v={v}"
            )));
        }
        for b in &blocks {
            if b.max_point() > v {
                return Err(Error::PointOutOfRange {
                    point: b.max_point(),
                    degree: v,
                });
            }
            if b.len() != k {
                return Err(Error::InvalidParameters(format!(
                    "block {b} does not have {k} points"
                )));
            }
        }
        blocks.sort_unstable();
        if let Some(w) = blocks.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::RepeatedBlock(w[0]));
        }
        Ok(Design {
            v,
            k,
            blocks,
            provenance: None,
        })
    }

    pub fn empty(v: usize, k: usize) -> Self {
        Design::new(v, k, Vec::new()).expect("empty design")
    }

    /// Every `k`-subset as a block.
    pub fn complete(v: usize, k: usize) -> Result<Self> {
        check_subset_guard(v, k)?;
        let blocks: Vec<PointSet> = KSubsets::new(v, k).collect();
        Design::new(v, k, blocks)
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn b(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[PointSet] {
        &self.blocks
    }

    pub fn contains_block(&self, block: PointSet) -> bool {
        self.blocks.binary_search(&block).is_ok()
    }

    /// Applies a point relabelling to every block.
    pub fn relabel(&self, p: &crate::groups::Permutation) -> Result<Design> {
        if p.degree() != self.v {
            return Err(Error::DegreeMismatch(p.degree(), self.v));
        }
        let blocks = self
            .blocks
            .iter()
            .map(|&b| p.apply_to_subset(b))
            .collect::<Result<_>>()?;
        Design::new(self.v, self.k, blocks)
    }
}

fn check_subset_guard(v: usize, k: usize) -> Result<()> {
    let count = binomial(v as u64, k as u64);
    if count > DEFAULT_SUBSET_GUARD {
        return Err(Error::EnumerationGuard {
            v,
            k,
            count,
            guard: DEFAULT_SUBSET_GUARD,
        });
    }
    Ok(())
}

/// Union of the `G`-orbits of the base blocks. Fails if two orbits meet.
pub fn expand(g: &PermutationGroup, base_blocks: &[PointSet]) -> Result<Design> {
    g.check_subset_degree()?;
    let v = g.degree();
    let k = base_blocks.first().map_or(0, |b| b.len());
    let mut owner: HashMap<PointSet, usize> = HashMap::new();
    for (i, &base) in base_blocks.iter().enumerate() {
        if base.len() != k {
            return Err(Error::InvalidParameters(format!(
                "base block {base} does not have {k} points"
            )));
        }
        if base.max_point() > v {
            return Err(Error::PointOutOfRange {
                point: base.max_point(),
                degree: v,
            });
        }
        for e in g.elements() {
            let img = e.map_set(base);
            match owner.get(&img) {
                Some(&j) if j != i => {
                    return Err(Error::DuplicateBlock {
                        first: base_blocks[j],
                        second: base,
                    })
                }
                Some(_) => {}
                None => {
                    owner.insert(img, i);
                }
            }
        }
    }
    let mut d = Design::new(v, k, owner.into_keys().collect())?;
    d.provenance = Some(Provenance {
        group: None,
        base_blocks: base_blocks.to_vec(),
    });
    Ok(d)
}

/// Result of a brute-force `t`-design check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verification {
    /// Every `t`-subset lies in exactly this many blocks.
    Design { lambda: u64 },
    /// `subset` lies in `count` blocks while `{1, …, t}` lies in `expected`.
    Deviant {
        subset: PointSet,
        count: u64,
        expected: u64,
    },
}

impl Verification {
    pub fn lambda(&self) -> Option<u64> {
        match self {
            Verification::Design { lambda } => Some(*lambda),
            Verification::Deviant { .. } => None,
        }
    }
}

/// Colex rank of a subset among subsets of the same size.
fn colex_rank(s: PointSet) -> usize {
    s.indices()
        .enumerate()
        .map(|(i, p)| binomial(p as u64, i as u64 + 1) as usize)
        .sum()
}

/// Counts, for every `t`-subset of points, the blocks containing it.
pub fn verify(d: &Design, t: usize) -> Result<Verification> {
    if t > d.k {
        return Err(Error::InvalidParameters(format!(
            "t={t} exceeds block size {}",
            d.k
        )));
    }
    let total = binomial(d.v as u64, t as u64);
    if total > 100_000_000 {
        return Err(Error::EnumerationGuard {
            v: d.v,
            k: t,
            count: total,
            guard: 100_000_000,
        });
    }
    let mut counts = vec![0u64; total as usize];
    for &block in &d.blocks {
        for sub in block.subsets(t) {
            counts[colex_rank(sub)] += 1;
        }
    }
    let expected = counts[0];
    let deviant = KSubsets::new(d.v, t)
        .filter(|&s| counts[colex_rank(s)] != expected)
        .min();
    Ok(match deviant {
        None => Verification::Design { lambda: expected },
        Some(subset) => Verification::Deviant {
            subset,
            count: counts[colex_rank(subset)],
            expected,
        },
    })
}

fn require_design(d: &Design, t: usize) -> Result<u64> {
    match verify(d, t)? {
        Verification::Design { lambda } => Ok(lambda),
        Verification::Deviant {
            subset,
            count,
            expected,
        } => Err(Error::InvalidParameters(format!(
            "not a {t}-design: {subset} lies in {count} blocks, expected {expected}"
        ))),
    }
}

/// The design whose blocks are the orbits of the chosen columns.
pub fn solution_to_design(a: &KmMatrix, x: &Solution, g: &PermutationGroup) -> Result<Design> {
    if g.degree() != a.v() {
        return Err(Error::DegreeMismatch(g.degree(), a.v()));
    }
    if let Some(&j) = x.columns().iter().find(|&&j| j >= a.n_cols()) {
        return Err(Error::InvalidParameters(format!(
            "column {j} out of range for {} columns",
            a.n_cols()
        )));
    }
    let bases: Vec<PointSet> = x
        .columns()
        .iter()
        .map(|&j| a.cols()[j].representative)
        .collect();
    if bases.is_empty() {
        return Ok(Design::empty(a.v(), a.k()));
    }
    expand(g, &bases)
}

/// All `k`-subsets that are not blocks of `d`.
pub fn supplement(d: &Design, t: usize) -> Result<Design> {
    require_design(d, t)?;
    check_subset_guard(d.v, d.k)?;
    let blocks = KSubsets::new(d.v, d.k)
        .filter(|&s| !d.contains_block(s))
        .collect();
    Design::new(d.v, d.k, blocks)
}

/// Replaces every block by its complement in the point set.
pub fn complement_design(d: &Design, t: usize) -> Result<Design> {
    require_design(d, t)?;
    let full = PointSet::full(d.v);
    let blocks = d.blocks.iter().map(|&b| full.difference(b)).collect();
    Design::new(d.v, d.v - d.k, blocks)
}

/// Union of two designs on the same points with no block in common.
pub fn disjoint_union(d1: &Design, d2: &Design) -> Result<Design> {
    if d1.v != d2.v || d1.k != d2.k {
        return Err(Error::InvalidParameters(format!(
            "cannot join designs with (v,k) = ({},{}) and ({},{})",
            d1.v, d1.k, d2.v, d2.k
        )));
    }
    if let Some(&shared) = d1.blocks.iter().find(|&&b| d2.contains_block(b)) {
        return Err(Error::SharedBlock(shared));
    }
    let mut blocks = d1.blocks.clone();
    blocks.extend_from_slice(&d2.blocks);
    Design::new(d1.v, d1.k, blocks)
}

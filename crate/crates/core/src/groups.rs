//! Permutations of `{1, …, v}` and the finite groups they generate.
//!
//! Composition follows the "right factor acts first" convention:
//! `p.compose(&q)` maps `i` to `p(q(i))`.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::pointset::{PointSet, MAX_POINTS};

/// Element cap for [`PermutationGroup::generate`]; comfortably above M11's 7920.
pub const DEFAULT_GROUP_CAP: usize = 20_000;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    // Zero-based images; never exposed.
    images: Box<[u16]>,
}

impl Permutation {
    pub fn identity(degree: usize) -> Self {
        assert!(degree >= 1 && degree <= u16::MAX as usize);
        Permutation {
            images: (0..degree as u16).collect(),
        }
    }

    /// Builds a permutation from 1-based images: `images[i - 1]` is the image of `i`.
    pub fn from_images(images: &[usize]) -> Result<Self> {
        let degree = images.len();
        if degree == 0 {
            return Err(Error::InvalidParameters("degree must be at least 1".into()));
        }
        if degree > u16::MAX as usize {
            return Err(Error::DegreeTooLarge {
                degree,
                max: u16::MAX as usize,
            });
        }
        let mut seen = vec![false; degree];
        let mut out = Vec::with_capacity(degree);
        for &img in images {
            if img == 0 || img > degree {
                return Err(Error::PointOutOfRange { point: img, degree });
            }
            if std::mem::replace(&mut seen[img - 1], true) {
                return Err(Error::RepeatedPoint(img));
            }
            out.push((img - 1) as u16);
        }
        Ok(Permutation {
            images: out.into_boxed_slice(),
        })
    }

    /// Parses cycle notation such as `(1,2)(3,4)`. Unlisted points are fixed;
    /// `""` and `"()"` both denote the identity.
    pub fn parse_cycles(text: &str, degree: usize) -> Result<Self> {
        if degree == 0 || degree > u16::MAX as usize {
            return Err(Error::InvalidParameters(format!("invalid degree {degree}")));
        }
        let mut images: Vec<u16> = (0..degree as u16).collect();
        let mut used = vec![false; degree];
        let bytes = text.as_bytes();
        let mut pos = 0;
        let malformed = |pos: usize, msg: &str| Error::MalformedCycles {
            pos,
            msg: msg.to_string(),
        };

        let skip_ws = |pos: &mut usize| {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
        };

        loop {
            skip_ws(&mut pos);
            if pos == bytes.len() {
                break;
            }
            if bytes[pos] != b'(' {
                return Err(malformed(pos, "expected '('"));
            }
            pos += 1;
            let mut cycle: Vec<usize> = Vec::new();
            skip_ws(&mut pos);
            if pos < bytes.len() && bytes[pos] == b')' {
                pos += 1;
                continue;
            }
            loop {
                skip_ws(&mut pos);
                let start = pos;
                while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                    pos += 1;
                }
                if start == pos {
                    return Err(malformed(pos, "expected a point"));
                }
                let point: usize = text[start..pos]
                    .parse()
                    .map_err(|_| malformed(start, "point does not fit in an integer"))?;
                if point == 0 || point > degree {
                    return Err(Error::PointOutOfRange { point, degree });
                }
                if std::mem::replace(&mut used[point - 1], true) {
                    return Err(Error::RepeatedPoint(point));
                }
                cycle.push(point - 1);
                skip_ws(&mut pos);
                match bytes.get(pos) {
                    Some(b',') => pos += 1,
                    Some(b')') => {
                        pos += 1;
                        break;
                    }
                    Some(_) => return Err(malformed(pos, "expected ',' or ')'")),
                    None => return Err(malformed(pos, "unclosed cycle")),
                }
            }
            for (i, &p) in cycle.iter().enumerate() {
                images[p] = cycle[(i + 1) % cycle.len()] as u16;
            }
        }
        Ok(Permutation {
            images: images.into_boxed_slice(),
        })
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    /// Image of a 1-based point.
    pub fn apply(&self, point: usize) -> usize {
        self.images[point - 1] as usize + 1
    }

    /// 1-based image list.
    pub fn images(&self) -> Vec<usize> {
        self.images.iter().map(|&i| i as usize + 1).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.images
            .iter()
            .enumerate()
            .all(|(i, &x)| i == x as usize)
    }

    /// `p.compose(q)` maps `i` to `p(q(i))`.
    pub fn compose(&self, q: &Permutation) -> Result<Permutation> {
        if self.degree() != q.degree() {
            return Err(Error::DegreeMismatch(self.degree(), q.degree()));
        }
        Ok(self.compose_unchecked(q))
    }

    fn compose_unchecked(&self, q: &Permutation) -> Permutation {
        Permutation {
            images: q.images.iter().map(|&i| self.images[i as usize]).collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0u16; self.degree()];
        for (i, &x) in self.images.iter().enumerate() {
            inv[x as usize] = i as u16;
        }
        Permutation {
            images: inv.into_boxed_slice(),
        }
    }

    /// Element order (lcm of cycle lengths).
    pub fn order(&self) -> u64 {
        self.cycles().iter().fold(1u64, |acc, c| {
            let len = c.len() as u64;
            acc / gcd(acc, len) * len
        })
    }

    /// Nontrivial and trivial cycles as 1-based point lists, each starting at its smallest point.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.degree()];
        let mut out = Vec::new();
        for start in 0..self.degree() {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut p = start;
            while !seen[p] {
                seen[p] = true;
                cycle.push(p + 1);
                p = self.images[p] as usize;
            }
            out.push(cycle);
        }
        out
    }

    /// `{p(x) : x ∈ s}`.
    pub fn apply_to_subset(&self, s: PointSet) -> Result<PointSet> {
        if s.max_point() > self.degree() {
            return Err(Error::PointOutOfRange {
                point: s.max_point(),
                degree: self.degree(),
            });
        }
        if self.degree() > MAX_POINTS {
            return Err(Error::DegreeTooLarge {
                degree: self.degree(),
                max: MAX_POINTS,
            });
        }
        Ok(self.map_set(s))
    }

    #[inline]
    pub(crate) fn map_set(&self, s: PointSet) -> PointSet {
        let mut out = 0u64;
        for i in s.indices() {
            out |= 1u64 << self.images[i];
        }
        PointSet::from_bits(out)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut any = false;
        for c in self.cycles().into_iter().filter(|c| c.len() > 1) {
            any = true;
            f.write_str("(")?;
            for (i, p) in c.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{p}")?;
            }
            f.write_str(")")?;
        }
        if !any {
            f.write_str("()")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation[{}]{}", self.degree(), self)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// A finite permutation group held as its full element list.
#[derive(Clone, Debug)]
pub struct PermutationGroup {
    degree: usize,
    generators: Vec<Permutation>,
    elements: Vec<Permutation>,
    index: HashMap<Permutation, usize>,
}

impl PermutationGroup {
    /// Breadth-first product closure of `generators`; the identity is element 0.
    pub fn generate(generators: &[Permutation], cap: usize) -> Result<Self> {
        let first = generators.first().ok_or(Error::NoGenerators)?;
        let degree = first.degree();
        for g in generators {
            if g.degree() != degree {
                return Err(Error::DegreeMismatch(degree, g.degree()));
            }
        }
        let identity = Permutation::identity(degree);
        let mut elements = vec![identity.clone()];
        let mut index = HashMap::from([(identity, 0usize)]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(e) = queue.pop_front() {
            for g in generators {
                let product = g.compose_unchecked(&elements[e]);
                if index.contains_key(&product) {
                    continue;
                }
                if elements.len() >= cap {
                    return Err(Error::GroupTooLarge { cap });
                }
                index.insert(product.clone(), elements.len());
                queue.push_back(elements.len());
                elements.push(product);
            }
        }
        Ok(PermutationGroup {
            degree,
            generators: generators.to_vec(),
            elements,
            index,
        })
    }

    /// The trivial group on `degree` points.
    pub fn trivial(degree: usize) -> Self {
        Self::generate(&[Permutation::identity(degree)], 1).expect("trivial group")
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn generators(&self) -> &[Permutation] {
        &self.generators
    }

    pub fn elements(&self) -> &[Permutation] {
        &self.elements
    }

    pub fn index_of(&self, p: &Permutation) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn contains(&self, p: &Permutation) -> bool {
        self.index.contains_key(p)
    }

    pub(crate) fn check_subset_degree(&self) -> Result<()> {
        if self.degree > MAX_POINTS {
            Err(Error::DegreeTooLarge {
                degree: self.degree,
                max: MAX_POINTS,
            })
        } else {
            Ok(())
        }
    }
}

//! Lattice enumeration for `A · x = λ·j` over `{0,1}ⁿ`.
//!
//! The system is embedded so that solutions become lattice vectors with all
//! coordinates in `{−1, +1}`: `x ↦ (2x − 1, 1)`. LLL with a heavily weighted
//! copy of `A` isolates the sublattice on which the equations hold, BKZ
//! shortens that basis, and Schnorr–Euchner enumeration lists every vector of
//! squared length `n + 1`, pruned also by the bound `|v|∞ ≤ 1`.

use crate::kramer_mesner::KmMatrix;

type Basis = Vec<Vec<i64>>;

/// Gram–Schmidt data of a basis.
struct Gso {
    mu: Vec<Vec<f64>>,
    norm: Vec<f64>,
}

fn dot(a: &[i64], b: &[i64]) -> i128 {
    a.iter().zip(b).map(|(&x, &y)| x as i128 * y as i128).sum()
}

fn gso(b: &Basis) -> Gso {
    let d = b.len();
    let mut mu = vec![vec![0.0; d]; d];
    let mut norm = vec![0.0; d];
    for k in 0..d {
        gso_row(b, &mut mu, &mut norm, k);
    }
    Gso { mu, norm }
}

/// Recomputes row `k` of the Gram–Schmidt data from rows below it.
fn gso_row(b: &Basis, mu: &mut [Vec<f64>], norm: &mut [f64], k: usize) {
    let mut r = vec![0.0; k];
    for j in 0..k {
        let mut x = dot(&b[k], &b[j]) as f64;
        for i in 0..j {
            x -= mu[j][i] * r[i];
        }
        r[j] = x;
        mu[k][j] = x / norm[j];
    }
    let mut n = dot(&b[k], &b[k]) as f64;
    for j in 0..k {
        n -= mu[k][j] * r[j];
    }
    mu[k][k] = 1.0;
    norm[k] = n;
}

/// `a -= q·b`, or `None` on overflow.
fn sub_mul(a: &mut [i64], b: &[i64], q: i64) -> Option<()> {
    for (x, &y) in a.iter_mut().zip(b) {
        *x = x.checked_sub(q.checked_mul(y)?)?;
    }
    Some(())
}

/// LLL reduction in place; vectors that become zero are dropped.
fn lll(b: &mut Basis, delta: f64) -> Option<()> {
    let d = b.len();
    let mut mu = vec![vec![0.0; d]; d];
    let mut norm = vec![0.0; d];
    let mut k = 0;
    while k < b.len() {
        loop {
            gso_row(b, &mut mu, &mut norm, k);
            let mut changed = false;
            for j in (0..k).rev() {
                if mu[k][j].abs() <= 0.51 {
                    continue;
                }
                let q = mu[k][j].round();
                if q.abs() > 1e15 {
                    return None;
                }
                let (lo, hi) = b.split_at_mut(k);
                sub_mul(&mut hi[0], &lo[j], q as i64)?;
                for i in 0..j {
                    mu[k][i] -= q * mu[j][i];
                }
                mu[k][j] -= q;
                changed = true;
            }
            if !changed {
                break;
            }
        }
        if b[k].iter().all(|&x| x == 0) {
            b.remove(k);
            continue;
        }
        if k > 0 && norm[k] < (delta - mu[k][k - 1] * mu[k][k - 1]) * norm[k - 1] {
            b.swap(k, k - 1);
            k -= 1;
        } else {
            k += 1;
        }
    }
    Some(())
}

struct Budget {
    nodes: u64,
    deadline: Option<std::time::Instant>,
    timed_out: bool,
}

impl Budget {
    fn new(deadline: Option<std::time::Instant>) -> Self {
        Budget {
            nodes: 0,
            deadline,
            timed_out: false,
        }
    }

    /// Counts a node; true once the deadline has passed.
    fn tick(&mut self) -> bool {
        self.nodes += 1;
        if self.nodes % 65536 == 0 {
            if let Some(d) = self.deadline {
                self.timed_out |= std::time::Instant::now() >= d;
            }
        }
        self.timed_out
    }
}

pub(crate) enum Visit {
    Continue,
    /// Keep going with a smaller squared radius.
    Shrink(f64),
    Stop,
}

/// Schnorr–Euchner enumeration over coefficient vectors of basis indices
/// `lo..hi`, visiting every nonzero vector (up to sign) whose projection
/// orthogonal to `b_0..b_{lo-1}` has squared length at most `radius`.
/// `bound[i]` caps the absolute Gram–Schmidt coordinate at level `i`.
/// Returns false if the visitor stopped early.
fn enumerate(
    g: &Gso,
    lo: usize,
    hi: usize,
    mut radius: f64,
    bound: Option<&[f64]>,
    budget: &mut Budget,
    mut visit: impl FnMut(&[i64], f64) -> Visit,
) -> bool {
    let d = hi - lo;
    if d == 0 {
        return true;
    }
    let mut u = vec![0i64; d];
    let mut c = vec![0.0f64; d];
    let mut dx = vec![0i64; d];
    let mut ddx = vec![0i64; d];
    let mut partial = vec![0.0f64; d + 1];
    // number of nonzero coefficients above each level
    let mut top_zero = vec![true; d + 1];
    let eps = 1e-7;
    let mut i = d - 1;
    loop {
        if budget.tick() {
            return false;
        }
        let diff = u[i] as f64 - c[i];
        let len = partial[i + 1] + diff * diff * g.norm[lo + i];
        let ok = len <= radius + eps && bound.map_or(true, |h| diff.abs() <= h[lo + i] + eps);
        if ok {
            if i == 0 {
                if !(top_zero[1] && u[0] == 0) {
                    match visit(&u, len) {
                        Visit::Continue => {}
                        Visit::Shrink(r) => radius = r,
                        Visit::Stop => return false,
                    }
                }
            } else {
                partial[i] = len;
                top_zero[i] = top_zero[i + 1] && u[i] == 0;
                i -= 1;
                let mut s = 0.0;
                for j in i + 1..d {
                    s -= u[j] as f64 * g.mu[lo + j][lo + i];
                }
                c[i] = s;
                u[i] = s.round() as i64;
                dx[i] = 0;
                ddx[i] = if s < u[i] as f64 { 1 } else { -1 };
                continue;
            }
        } else {
            i += 1;
            if i == d {
                return true;
            }
        }
        // next sibling at level i; with everything above zero only one sign is needed
        if top_zero[i + 1] {
            u[i] += 1;
        } else {
            ddx[i] = -ddx[i];
            dx[i] = ddx[i] - dx[i];
            u[i] += dx[i];
        }
    }
}

fn combine(b: &Basis, lo: usize, u: &[i64]) -> Option<Vec<i64>> {
    let mut v = vec![0i64; b[0].len()];
    for (k, &x) in u.iter().enumerate() {
        if x != 0 {
            sub_mul(&mut v, &b[lo + k], -x)?;
        }
    }
    Some(v)
}

/// BKZ reduction with block size `beta`.
fn bkz(b: &mut Basis, beta: usize, delta: f64, max_tours: usize) -> Option<()> {
    lll(b, delta)?;
    for _ in 0..max_tours {
        let mut clean = true;
        let mut k = 0;
        while k + 1 < b.len() {
            let hi = (k + beta).min(b.len());
            let g = gso(b);
            let mut best: Option<Vec<i64>> = None;
            enumerate(
                &g,
                k,
                hi,
                g.norm[k] * delta,
                None,
                &mut Budget::new(None),
                |u, len| {
                    best = Some(u.to_vec());
                    Visit::Shrink(len * (1.0 - 1e-9) - 1e-6)
                },
            );
            if let Some(u) = best {
                let v = combine(b, k, &u)?;
                b.insert(k, v);
                lll(b, 0.99)?;
                clean = false;
            }
            k += 1;
        }
        if clean {
            break;
        }
    }
    Some(())
}

/// How a lattice run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Ended {
    Exhausted,
    Stopped,
    OutOfTime,
}

/// Rank of the integer matrix `rows` over the rationals, computed modulo two
/// large primes (a rank drop modulo both is vanishingly unlikely and would
/// only make the run fail its consistency check, never return wrong answers).
fn rank(rows: &[Vec<i64>]) -> usize {
    [2_147_483_647i64, 2_147_483_629]
        .iter()
        .map(|&p| rank_mod(rows, p))
        .max()
        .unwrap_or(0)
}

fn rank_mod(rows: &[Vec<i64>], p: i64) -> usize {
    let mut a: Vec<Vec<i64>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| x.rem_euclid(p)).collect())
        .collect();
    let cols = a.first().map_or(0, |r| r.len());
    let pow = |mut b: i64, mut e: i64| {
        let mut r = 1i64;
        while e > 0 {
            if e & 1 == 1 {
                r = (r as i128 * b as i128 % p as i128) as i64;
            }
            b = (b as i128 * b as i128 % p as i128) as i64;
            e >>= 1;
        }
        r
    };
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..a.len()).find(|&i| a[i][c] != 0) else {
            continue;
        };
        a.swap(r, piv);
        let inv = pow(a[r][c], p - 2);
        for i in r + 1..a.len() {
            let f = (a[i][c] as i128 * inv as i128 % p as i128) as i64;
            if f == 0 {
                continue;
            }
            for x in c..cols {
                let v = (a[i][x] as i128 - f as i128 * a[r][x] as i128).rem_euclid(p as i128);
                a[i][x] = v as i64;
            }
        }
        r += 1;
    }
    r
}

/// Reduced basis of the lattice `{(2x − y·1, y) : A·x = λ·y·j}` together
/// with its Gram–Schmidt data and per-level coordinate bounds.
pub(crate) struct Prepared {
    basis: Basis,
    gso: Gso,
    bound: Vec<f64>,
    n: usize,
}

/// Builds and reduces the lattice; `None` if reduction failed numerically.
pub(crate) fn prepare(a: &KmMatrix, lambda: u64, beta: usize) -> Option<Prepared> {
    let (m, n) = (a.n_rows(), a.n_cols());
    let lambda = i64::try_from(lambda).ok()?;
    let weight = 1i64 << 16;
    let mut b: Basis = Vec::with_capacity(n + 1);
    for j in 0..n {
        let mut v = vec![0i64; n + 1 + m];
        v[j] = 2;
        for i in 0..m {
            v[n + 1 + i] = weight * a.entry(i, j) as i64;
        }
        b.push(v);
    }
    let mut last = vec![-1i64; n + 1 + m];
    last[n] = 1;
    for i in 0..m {
        last[n + 1 + i] = weight.checked_mul(lambda)?.checked_neg()?;
    }
    b.push(last);

    let system: Vec<Vec<i64>> = (0..m)
        .map(|i| {
            let mut r: Vec<i64> = (0..n).map(|j| a.entry(i, j) as i64).collect();
            r.push(lambda);
            r
        })
        .collect();
    let dim = n + 1 - rank(&system);

    lll(&mut b, 0.99)?;
    let kernel = b
        .iter()
        .take_while(|v| v[n + 1..].iter().all(|&x| x == 0))
        .count();
    if kernel != dim
        || b[kernel..]
            .iter()
            .any(|v| v[n + 1..].iter().all(|&x| x == 0))
    {
        return None;
    }
    let mut basis: Basis = b
        .into_iter()
        .take(kernel)
        .map(|mut v| {
            v.truncate(n + 1);
            v
        })
        .collect();
    if basis.is_empty() {
        return Some(Prepared {
            basis,
            gso: Gso {
                mu: vec![],
                norm: vec![],
            },
            bound: vec![],
            n,
        });
    }
    bkz(&mut basis, beta, 0.99, 16)?;
    let gso = gso(&basis);
    // Gram–Schmidt vectors, for the bound |⟨v, b*_i⟩| ≤ |b*_i|₁ when |v|∞ ≤ 1
    let d = basis.len();
    let mut star: Vec<Vec<f64>> = Vec::with_capacity(d);
    for i in 0..d {
        let mut s: Vec<f64> = basis[i].iter().map(|&x| x as f64).collect();
        for j in 0..i {
            let f = gso.mu[i][j];
            for (x, y) in s.iter_mut().zip(&star[j]) {
                *x -= f * y;
            }
        }
        star.push(s);
    }
    let bound = (0..d)
        .map(|i| star[i].iter().map(|x| x.abs()).sum::<f64>() / gso.norm[i])
        .collect();
    Some(Prepared {
        basis,
        gso,
        bound,
        n,
    })
}

impl Prepared {
    /// Lists every 0-1 solution (as ascending column lists) until `visit`
    /// returns false or the deadline passes. Also reports visited nodes.
    pub(crate) fn run(
        &self,
        deadline: Option<std::time::Instant>,
        nodes: &mut u64,
        mut visit: impl FnMut(Vec<usize>) -> bool,
    ) -> Ended {
        let n = self.n;
        if self.basis.is_empty() {
            return Ended::Exhausted;
        }
        let d = self.basis.len();
        let mut ended = Ended::Exhausted;
        let radius = (n + 1) as f64;
        let mut budget = Budget::new(deadline);
        let finished = enumerate(
            &self.gso,
            0,
            d,
            radius,
            Some(&self.bound),
            &mut budget,
            |u, _| {
                let Some(mut v) = combine(&self.basis, 0, u) else {
                    return Visit::Continue;
                };
                if v.iter().any(|&x| x != 1 && x != -1) {
                    return Visit::Continue;
                }
                if v[n] == -1 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
                let cols = (0..n).filter(|&j| v[j] == 1).collect();
                if visit(cols) {
                    Visit::Continue
                } else {
                    ended = Ended::Stopped;
                    Visit::Stop
                }
            },
        );
        *nodes += budget.nodes;
        if budget.timed_out {
            Ended::OutOfTime
        } else if finished {
            Ended::Exhausted
        } else {
            ended
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kramer_mesner::OrbitLabel;
    use crate::pointset::PointSet;

    fn det3(b: &Basis) -> i64 {
        b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
            - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
            + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0])
    }

    #[test]
    fn lll_reduces_and_keeps_the_lattice() {
        let mut b: Basis = vec![vec![1, 1, 1], vec![-1, 0, 2], vec![3, 5, 6]];
        let before = det3(&b).abs();
        lll(&mut b, 0.99).unwrap();
        assert_eq!(det3(&b).abs(), before);
        let g = gso(&b);
        for k in 1..3 {
            for j in 0..k {
                assert!(g.mu[k][j].abs() <= 0.51);
            }
            assert!(g.norm[k] >= (0.99 - g.mu[k][k - 1].powi(2)) * g.norm[k - 1] - 1e-9);
        }
        assert_eq!(dot(&b[0], &b[0]), 1);
    }

    #[test]
    fn lll_drops_dependent_vectors() {
        let mut b: Basis = vec![vec![2, 4], vec![1, 2], vec![3, 6]];
        lll(&mut b, 0.99).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(dot(&b[0], &b[0]), 5);
    }

    #[test]
    fn ranks() {
        assert_eq!(rank(&[vec![1, 2, 3], vec![2, 4, 6], vec![0, 1, 1]]), 2);
        assert_eq!(rank(&[vec![0, 0], vec![0, 0]]), 0);
        assert_eq!(rank(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]), 3);
    }

    #[test]
    fn enumerates_every_solution_once() {
        // rows x1 + x2 + x3 + x4 and x1 + x3
        let label = |i: usize| OrbitLabel {
            representative: PointSet::from_bits(1 << i),
            size: 1,
        };
        let a = KmMatrix::from_parts(
            (1, 8, 2),
            (0..2).map(label).collect(),
            (0..4).map(label).collect(),
            vec![vec![1, 1, 1, 1], vec![1, 0, 1, 0]],
            false,
        )
        .unwrap();
        let p = prepare(&a, 1, 20).unwrap();
        let mut found = Vec::new();
        let mut nodes = 0;
        assert_eq!(
            p.run(None, &mut nodes, |c| {
                found.push(c);
                true
            }),
            Ended::Exhausted
        );
        found.sort();
        assert_eq!(found, vec![vec![0], vec![2]]);

        let p = prepare(&a, 2, 20).unwrap();
        let mut found = Vec::new();
        p.run(None, &mut nodes, |c| {
            found.push(c);
            true
        });
        found.sort();
        assert_eq!(found, vec![vec![0, 2]]);
    }
}

//! The Kramer–Mesner matrix of a group: rows are orbits of `t`-subsets,
//! columns are orbits of `k`-subsets, and entry `(i, j)` counts the members
//! of column orbit `j` that contain one fixed member of row orbit `i`.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::groups::PermutationGroup;
use crate::orbits::OrbitSet;
use crate::pointset::{binomial, PointSet};

/// Row or column label: an orbit representative and the orbit size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrbitLabel {
    pub representative: PointSet,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KmMatrix {
    t: usize,
    v: usize,
    k: usize,
    rows: Vec<OrbitLabel>,
    cols: Vec<OrbitLabel>,
    entries: Vec<Vec<u32>>,
    complete_columns: bool,
}

impl KmMatrix {
    /// Assembles a matrix from parts, checking only the shape.
    pub fn from_parts(
        (t, v, k): (usize, usize, usize),
        rows: Vec<OrbitLabel>,
        cols: Vec<OrbitLabel>,
        entries: Vec<Vec<u32>>,
        complete_columns: bool,
    ) -> Result<Self> {
        if entries.len() != rows.len() || entries.iter().any(|r| r.len() != cols.len()) {
            return Err(Error::InvalidParameters(format!(
                "entry table does not match {}x{} labels",
                rows.len(),
                cols.len()
            )));
        }
        Ok(KmMatrix {
            t,
            v,
            k,
            rows,
            cols,
            entries,
            complete_columns,
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rows(&self) -> &[OrbitLabel] {
        &self.rows
    }

    pub fn cols(&self) -> &[OrbitLabel] {
        &self.cols
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn complete_columns(&self) -> bool {
        self.complete_columns
    }

    pub fn entry(&self, row: usize, col: usize) -> u32 {
        self.entries[row][col]
    }

    pub fn entries(&self) -> &[Vec<u32>] {
        &self.entries
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.entries
            .iter()
            .map(|r| r.iter().map(|&a| a as u64).sum())
            .collect()
    }

    /// `A · x` for a set of chosen columns.
    pub fn multiply(&self, columns: &[usize]) -> Vec<u64> {
        self.entries
            .iter()
            .map(|r| columns.iter().map(|&j| r[j] as u64).sum())
            .collect()
    }

    /// Same matrix with columns reordered: new column `j` is old column `order[j]`.
    pub fn permute_columns(&self, order: &[usize]) -> KmMatrix {
        KmMatrix {
            cols: order.iter().map(|&j| self.cols[j]).collect(),
            entries: self
                .entries
                .iter()
                .map(|r| order.iter().map(|&j| r[j]).collect())
                .collect(),
            ..self.clone()
        }
    }
}

/// Builds the matrix from a complete census of `t`-orbits and any census of
/// `k`-orbits (complete or short).
///
/// For column `j`, each `t`-subset of the representative is classified into
/// its row orbit, giving counts `b_ij`; then `a_ij = b_ij·|K_j| / |T_i|`. A
/// non-exact division means an orbit was misclassified and is reported as
/// [`Error::Inconsistent`].
pub fn build_matrix(
    g: &PermutationGroup,
    t: usize,
    k_orbits: &OrbitSet,
    t_orbits: &OrbitSet,
) -> Result<KmMatrix> {
    let v = g.degree();
    let k = k_orbits.subset_size;
    if !(t < k && k <= v) {
        return Err(Error::InvalidParameters(format!(
            "need t < k <= v, got t={t} k={k} v={v}"
        )));
    }
    if t_orbits.subset_size != t || !t_orbits.complete {
        return Err(Error::InvalidParameters(format!(
            "row orbits must be a complete census of {t}-subsets"
        )));
    }
    if t_orbits.degree != v || k_orbits.degree != v {
        return Err(Error::DegreeMismatch(
            v,
            t_orbits.degree.max(k_orbits.degree),
        ));
    }

    let classify = t_orbit_table(g, t_orbits)?;
    let m = t_orbits.len();

    let columns: Vec<Vec<u32>> = k_orbits
        .orbits
        .par_iter()
        .map(|col| {
            let mut counts = vec![0u64; m];
            for sub in col.representative.subsets(t) {
                let row = classify.get(&sub).ok_or_else(|| {
                    Error::Inconsistent(format!("{sub} is not covered by the row orbits"))
                })?;
                counts[*row] += 1;
            }
            counts
                .iter()
                .zip(&t_orbits.orbits)
                .map(|(&b, row)| {
                    let num = b * col.size as u64;
                    if num % row.size as u64 != 0 {
                        return Err(Error::Inconsistent(format!(
                            "b={b} * |K|={} not divisible by |T|={} (column {}, row {})",
                            col.size, row.size, col.representative, row.representative
                        )));
                    }
                    u32::try_from(num / row.size as u64)
                        .map_err(|_| Error::Inconsistent("entry exceeds 32 bits".into()))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let n = columns.len();
    let entries = (0..m)
        .map(|i| (0..n).map(|j| columns[j][i]).collect())
        .collect();
    let label = |o: &crate::orbits::SubsetOrbit| OrbitLabel {
        representative: o.representative,
        size: o.size,
    };
    let matrix = KmMatrix {
        t,
        v,
        k,
        rows: t_orbits.orbits.iter().map(label).collect(),
        cols: k_orbits.orbits.iter().map(label).collect(),
        entries,
        complete_columns: k_orbits.complete,
    };
    if matrix.complete_columns {
        let expected = binomial((v - t) as u64, (k - t) as u64) as u64;
        if let Some(i) = matrix.row_sums().iter().position(|&s| s != expected) {
            return Err(Error::Inconsistent(format!(
                "row {i} sums to {} instead of C(v-t, k-t) = {expected}",
                matrix.row_sums()[i]
            )));
        }
    }
    Ok(matrix)
}

/// Maps every `t`-subset to the index of its row orbit.
fn t_orbit_table(g: &PermutationGroup, t_orbits: &OrbitSet) -> Result<HashMap<PointSet, usize>> {
    let mut table = HashMap::new();
    for (i, o) in t_orbits.orbits.iter().enumerate() {
        for e in g.elements() {
            table.insert(e.map_set(o.representative), i);
        }
    }
    let expected = binomial(g.degree() as u64, t_orbits.subset_size as u64);
    if table.len() as u128 != expected {
        return Err(Error::Inconsistent(format!(
            "row orbits cover {} subsets, expected {expected}",
            table.len()
        )));
    }
    Ok(table)
}

/// Per row, the sum of entries over the columns still marked available.
pub fn row_residual_bound(a: &KmMatrix, remaining: &[bool]) -> Vec<u64> {
    a.entries
        .iter()
        .map(|r| {
            r.iter()
                .zip(remaining)
                .filter(|(_, &keep)| keep)
                .map(|(&x, _)| x as u64)
                .sum()
        })
        .collect()
}

//! Plain-text file formats. Every format accepts blank lines and `#`
//! comments; the first meaningful line is a header of the form
//! `<keyword> key=value ...`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::designs::Design;
use crate::error::{Error, Result};
use crate::groups::{Permutation, PermutationGroup, DEFAULT_GROUP_CAP};
use crate::kramer_mesner::{KmMatrix, OrbitLabel};
use crate::orbits::{OrbitSet, SubsetOrbit};
use crate::pointset::PointSet;
use crate::solver::{Solution, SolveStatus};

/// Meaningful lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

struct Header {
    line: usize,
    fields: HashMap<String, String>,
}

impl Header {
    fn parse(line: usize, text: &str, keyword: &str) -> Result<Header> {
        let mut words = text.split_whitespace();
        if words.next() != Some(keyword) {
            return Err(Error::parse(line, format!("expected a '{keyword}' header")));
        }
        let mut fields = HashMap::new();
        for w in words {
            let (k, v) = w
                .split_once('=')
                .ok_or_else(|| Error::parse(line, format!("expected key=value, got '{w}'")))?;
            fields.insert(k.to_string(), v.to_string());
        }
        Ok(Header { line, fields })
    }

    fn raw(&self, key: &str) -> Result<&str> {
        self.fields
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::parse(self.line, format!("header is missing '{key}'")))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.raw(key)?;
        raw.parse()
            .map_err(|_| Error::parse(self.line, format!("bad value '{raw}' for '{key}'")))
    }

    fn optional<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.fields.get(key).map(String::as_str) {
            None | Some("none") => Ok(None),
            Some(_) => self.get(key).map(Some),
        }
    }
}

fn parse_numbers(line: usize, text: &str) -> Result<Vec<usize>> {
    text.split_whitespace()
        .map(|w| {
            w.parse()
                .map_err(|_| Error::parse(line, format!("'{w}' is not a nonnegative integer")))
        })
        .collect()
}

fn parse_set(line: usize, points: &[usize], v: usize) -> Result<PointSet> {
    PointSet::from_points(points, v).map_err(|e| Error::parse(line, e.to_string()))
}

fn write_points(out: &mut String, s: PointSet) {
    let mut first = true;
    for p in s.points() {
        if !first {
            out.push(' ');
        }
        first = false;
        let _ = write!(out, "{p}");
    }
}

// ---- groups ----

/// Degree and generators from a group file.
pub fn parse_generators(text: &str) -> Result<(usize, Vec<Permutation>)> {
    let mut lines = content_lines(text);
    let (n, first) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty group file"))?;
    let degree: usize = match first.split_whitespace().collect::<Vec<_>>()[..] {
        ["degree", d] => d
            .parse()
            .map_err(|_| Error::parse(n, format!("bad degree '{d}'")))?,
        _ => return Err(Error::parse(n, "expected 'degree <v>'")),
    };
    let generators = lines
        .map(|(n, l)| {
            Permutation::parse_cycles(l, degree).map_err(|e| Error::parse(n, e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    if generators.is_empty() {
        return Err(Error::NoGenerators);
    }
    Ok((degree, generators))
}

pub fn parse_group(text: &str) -> Result<PermutationGroup> {
    let (_, generators) = parse_generators(text)?;
    PermutationGroup::generate(&generators, DEFAULT_GROUP_CAP)
}

pub fn write_group(g: &PermutationGroup) -> String {
    let mut out = format!("degree {}\n", g.degree());
    for p in g.generators() {
        let _ = writeln!(out, "{p}");
    }
    out
}

// ---- orbits ----

pub fn write_orbits(set: &OrbitSet, group: &str) -> String {
    let bound = set
        .size_bound
        .map_or_else(|| "none".to_string(), |b| b.to_string());
    let mut out = format!(
        "orbits v={} k={} group={} complete={} bound={}\n",
        set.degree, set.subset_size, group, set.complete, bound
    );
    for o in &set.orbits {
        let _ = write!(out, "{} {} ", o.size, o.stabilizer_order);
        write_points(&mut out, o.representative);
        out.push('\n');
    }
    out
}

/// The orbit census and the group name recorded in its header.
pub fn parse_orbits(text: &str) -> Result<(OrbitSet, String)> {
    let mut lines = content_lines(text);
    let (n, first) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty orbit file"))?;
    let h = Header::parse(n, first, "orbits")?;
    let v: usize = h.get("v")?;
    let k: usize = h.get("k")?;
    let mut orbits = Vec::new();
    for (n, l) in lines {
        let nums = parse_numbers(n, l)?;
        if nums.len() != k + 2 {
            return Err(Error::parse(
                n,
                format!("expected size, stabilizer and {k} points"),
            ));
        }
        orbits.push(SubsetOrbit {
            size: nums[0],
            stabilizer_order: nums[1],
            representative: parse_set(n, &nums[2..], v)?,
        });
    }
    let set = OrbitSet {
        degree: v,
        subset_size: k,
        orbits,
        complete: h.get("complete")?,
        size_bound: h.optional("bound")?,
    };
    Ok((set, h.raw("group")?.to_string()))
}

// ---- Kramer–Mesner matrices ----

pub fn write_matrix(a: &KmMatrix) -> String {
    let mut out = format!(
        "km t={} v={} k={} rows={} cols={} complete={}\n",
        a.t(),
        a.v(),
        a.k(),
        a.n_rows(),
        a.n_cols(),
        a.complete_columns()
    );
    for label in a.rows().iter().chain(a.cols()) {
        let _ = write!(out, "{} ", label.size);
        write_points(&mut out, label.representative);
        out.push('\n');
    }
    for row in a.entries() {
        let line: Vec<String> = row.iter().map(u32::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<KmMatrix> {
    let mut lines = content_lines(text);
    let (n, first) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty matrix file"))?;
    let h = Header::parse(n, first, "km")?;
    let (t, v, k): (usize, usize, usize) = (h.get("t")?, h.get("v")?, h.get("k")?);
    let (m, cols): (usize, usize) = (h.get("rows")?, h.get("cols")?);

    let mut label = |width: usize| -> Result<OrbitLabel> {
        let (n, l) = lines
            .next()
            .ok_or_else(|| Error::parse(0, "matrix file ends inside the orbit labels"))?;
        let nums = parse_numbers(n, l)?;
        if nums.len() != width + 1 {
            return Err(Error::parse(
                n,
                format!("expected a size and {width} points"),
            ));
        }
        Ok(OrbitLabel {
            size: nums[0],
            representative: parse_set(n, &nums[1..], v)?,
        })
    };
    let row_labels = (0..m).map(|_| label(t)).collect::<Result<Vec<_>>>()?;
    let col_labels = (0..cols).map(|_| label(k)).collect::<Result<Vec<_>>>()?;

    let mut entries = Vec::with_capacity(m);
    for _ in 0..m {
        let (n, l) = lines
            .next()
            .ok_or_else(|| Error::parse(0, "matrix file ends inside the entries"))?;
        let row: Vec<u32> = l
            .split_whitespace()
            .map(|w| {
                w.parse()
                    .map_err(|_| Error::parse(n, format!("bad entry '{w}'")))
            })
            .collect::<Result<_>>()?;
        if row.len() != cols {
            return Err(Error::parse(n, format!("expected {cols} entries")));
        }
        entries.push(row);
    }
    if let Some((n, _)) = lines.next() {
        return Err(Error::parse(n, "unexpected trailing content"));
    }
    KmMatrix::from_parts(
        (t, v, k),
        row_labels,
        col_labels,
        entries,
        h.get("complete")?,
    )
}

// ---- solutions ----

/// Parsed solution file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolutionFile {
    pub matrix: String,
    pub lambda: u64,
    pub count: u64,
    pub complete: bool,
    pub solutions: Vec<Solution>,
}

/// `limit` and `budget` truncations are both written as `incomplete`.
pub fn status_word(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::Complete => "complete",
        SolveStatus::LimitReached | SolveStatus::BudgetExhausted => "incomplete",
    }
}

/// The empty solution is written as a single `-`.
pub fn write_solutions(f: &SolutionFile) -> String {
    let mut out = format!(
        "solutions matrix={} lambda={} count={} status={}\n",
        f.matrix,
        f.lambda,
        f.count,
        if f.complete { "complete" } else { "incomplete" }
    );
    for s in &f.solutions {
        if s.columns().is_empty() {
            out.push('-');
        } else {
            let cols: Vec<String> = s.columns().iter().map(usize::to_string).collect();
            out.push_str(&cols.join(" "));
        }
        out.push('\n');
    }
    out
}

pub fn parse_solutions(text: &str) -> Result<SolutionFile> {
    let mut lines = content_lines(text);
    let (n, first) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty solution file"))?;
    let h = Header::parse(n, first, "solutions")?;
    let complete = match h.raw("status")? {
        "complete" => true,
        "incomplete" => false,
        other => return Err(Error::parse(n, format!("unknown status '{other}'"))),
    };
    let solutions = lines
        .map(|(n, l)| {
            if l == "-" {
                Ok(Solution(Vec::new()))
            } else {
                parse_numbers(n, l).map(Solution)
            }
        })
        .collect::<Result<_>>()?;
    Ok(SolutionFile {
        matrix: h.raw("matrix")?.to_string(),
        lambda: h.get("lambda")?,
        count: h.get("count")?,
        complete,
        solutions,
    })
}

// ---- designs and base blocks ----

/// A design file: the design plus the `t` and `λ` recorded in the header.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DesignFile {
    pub t: usize,
    pub lambda: u64,
    pub design: Design,
}

pub fn write_design(f: &DesignFile) -> String {
    let d = &f.design;
    let mut out = format!(
        "design t={} v={} k={} lambda={} b={}\n",
        f.t,
        d.v(),
        d.k(),
        f.lambda,
        d.b()
    );
    for &b in d.blocks() {
        write_points(&mut out, b);
        out.push('\n');
    }
    out
}

pub fn parse_design(text: &str) -> Result<DesignFile> {
    let mut lines = content_lines(text);
    let (n, first) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty design file"))?;
    let h = Header::parse(n, first, "design")?;
    let (v, k): (usize, usize) = (h.get("v")?, h.get("k")?);
    let blocks = read_blocks(lines, v, k)?;
    let b: usize = h.get("b")?;
    if b != blocks.len() {
        return Err(Error::parse(
            n,
            format!("header says b={b}, file has {}", blocks.len()),
        ));
    }
    Ok(DesignFile {
        t: h.get("t")?,
        lambda: h.get("lambda")?,
        design: Design::new(v, k, blocks).map_err(|e| Error::parse(n, e.to_string()))?,
    })
}

fn read_blocks<'a>(
    lines: impl Iterator<Item = (usize, &'a str)>,
    v: usize,
    k: usize,
) -> Result<Vec<PointSet>> {
    lines
        .map(|(n, l)| {
            let pts = parse_numbers(n, l)?;
            if pts.len() != k {
                return Err(Error::parse(n, format!("expected {k} points")));
            }
            parse_set(n, &pts, v)
        })
        .collect()
}

/// Base blocks for [`crate::designs::expand`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaseBlockFile {
    pub t: Option<usize>,
    pub v: usize,
    pub k: usize,
    pub blocks: Vec<PointSet>,
}

pub fn write_base_blocks(f: &BaseBlockFile) -> String {
    let mut out = String::from("baseblocks");
    if let Some(t) = f.t {
        let _ = write!(out, " t={t}");
    }
    let _ = writeln!(out, " v={} k={}", f.v, f.k);
    for &b in &f.blocks {
        write_points(&mut out, b);
        out.push('\n');
    }
    out
}

pub fn parse_base_blocks(text: &str) -> Result<BaseBlockFile> {
    let mut lines = content_lines(text);
    let (n, first) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty base-block file"))?;
    let h = Header::parse(n, first, "baseblocks")?;
    let (v, k): (usize, usize) = (h.get("v")?, h.get("k")?);
    Ok(BaseBlockFile {
        t: h.optional("t")?,
        v,
        k,
        blocks: read_blocks(lines, v, k)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kramer_mesner::build_matrix;
    use crate::orbits::{enumerate_orbits, enumerate_short_orbits};
    use proptest::prelude::*;

    fn z3s3() -> PermutationGroup {
        parse_group(
            "# comment\n\ndegree 15\n(4,5,6)(7,8,9)(10,11,12)(13,14,15)\n(1,4)(2,5)(3,6)(8,13)(9,10)(11,15)\n",
        )
        .unwrap()
    }

    #[test]
    fn group_file() {
        let g = z3s3();
        assert_eq!(g.order(), 18);
        let again = parse_group(&write_group(&g)).unwrap();
        assert_eq!(again.generators(), g.generators());
        assert!(matches!(
            parse_group("degree 5\n(1,9)\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(parse_group("degree 5\n").is_err());
        assert!(parse_group("(1,2)\n").is_err());
    }

    #[test]
    fn orbit_file_round_trip() {
        let g = z3s3();
        for set in [
            enumerate_orbits(&g, 3).unwrap(),
            enumerate_short_orbits(&g, 3, 6).unwrap(),
        ] {
            let text = write_orbits(&set, "g.grp");
            let (back, name) = parse_orbits(&text).unwrap();
            assert_eq!(back, set);
            assert_eq!(name, "g.grp");
        }
    }

    #[test]
    fn matrix_file_round_trip() {
        let g = z3s3();
        let a = build_matrix(
            &g,
            2,
            &enumerate_orbits(&g, 3).unwrap(),
            &enumerate_orbits(&g, 2).unwrap(),
        )
        .unwrap();
        let text = write_matrix(&a);
        assert!(text.starts_with(&format!(
            "km t=2 v=15 k=3 rows={} cols={} complete=true\n",
            a.n_rows(),
            a.n_cols()
        )));
        assert_eq!(parse_matrix(&text).unwrap(), a);
        let truncated: String = text.lines().take(5).collect::<Vec<_>>().join("\n");
        assert!(parse_matrix(&truncated).is_err());
    }

    #[test]
    fn design_file_errors() {
        assert!(parse_design("design t=1 v=4 k=2 lambda=1 b=2\n1 2\n").is_err());
        assert!(parse_design("design t=1 v=4 k=2 lambda=1 b=1\n1 2 3\n").is_err());
        assert!(parse_design("design t=1 v=4 k=2 lambda=1 b=2\n1 2\n2 1\n").is_err());
        let empty = parse_design("design t=3 v=8 k=4 lambda=0 b=0\n").unwrap();
        assert_eq!(empty.design.b(), 0);
    }

    #[test]
    fn base_block_file() {
        let f = parse_base_blocks("baseblocks t=4 v=15 k=5\n1 2 3 4 5\n1 2 3 7 11\n").unwrap();
        assert_eq!(f.t, Some(4));
        assert_eq!(f.blocks.len(), 2);
        assert_eq!(parse_base_blocks(&write_base_blocks(&f)).unwrap(), f);
        let no_t = parse_base_blocks("baseblocks v=15 k=5\n").unwrap();
        assert_eq!(no_t.t, None);
    }

    fn arb_solutions() -> impl Strategy<Value = SolutionFile> {
        (
            0u64..100,
            any::<bool>(),
            proptest::collection::vec(proptest::collection::btree_set(0usize..50, 0..6), 0..5),
        )
            .prop_map(|(lambda, complete, sols)| SolutionFile {
                matrix: "m.km".into(),
                lambda,
                count: sols.len() as u64,
                complete,
                solutions: sols
                    .into_iter()
                    .map(|s| Solution(s.into_iter().collect()))
                    .collect(),
            })
    }

    fn arb_design() -> impl Strategy<Value = DesignFile> {
        (2usize..=12, 1u64..10)
            .prop_flat_map(|(v, lambda)| {
                (1..=v).prop_flat_map(move |k| {
                    proptest::collection::btree_set(
                        proptest::sample::subsequence((1..=v).collect::<Vec<_>>(), k),
                        0..8,
                    )
                    .prop_map(move |blocks| (v, k, lambda, blocks))
                })
            })
            .prop_map(|(v, k, lambda, blocks)| DesignFile {
                t: 1,
                lambda,
                design: Design::new(
                    v,
                    k,
                    blocks
                        .iter()
                        .map(|b| PointSet::from_points(b, v).unwrap())
                        .collect(),
                )
                .unwrap(),
            })
    }

    proptest! {
        #[test]
        fn solution_files_round_trip(f in arb_solutions()) {
            prop_assert_eq!(parse_solutions(&write_solutions(&f)).unwrap(), f);
        }

        #[test]
        fn design_files_round_trip(f in arb_design()) {
            prop_assert_eq!(parse_design(&write_design(&f)).unwrap(), f);
        }
    }
}

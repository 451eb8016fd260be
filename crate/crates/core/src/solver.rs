//! Exact 0-1 solver for `A · x = λ·j`.
//!
//! Depth-first backtracking over columns. Each row keeps its residual
//! `λ − Σ chosen a_ij` and the sum still attainable from undecided columns;
//! a node dies as soon as some residual is negative or exceeds what is still
//! attainable. Branching picks the unsatisfied row with the fewest undecided
//! columns and splits on its first undecided column.
//!
//! Parallel runs split the tree into a frontier of subtrees listed in
//! depth-first order, so concatenating their results reproduces the
//! sequential run exactly.

use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::kramer_mesner::KmMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMode {
    First,
    Enumerate,
    Count,
}

#[derive(Clone, Debug)]
pub struct SolveRequest<'a> {
    pub matrix: &'a KmMatrix,
    pub lambda: u64,
    pub mode: SolveMode,
    pub solution_limit: Option<u64>,
    pub time_budget: Option<Duration>,
    /// Try including the branching column before excluding it.
    pub include_first: bool,
    pub engine: Engine,
}

/// Search strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    /// Currently the same as `Backtrack`.
    Auto,
    /// Depth-first search over columns.
    Backtrack,
    /// Enumeration of short vectors in a reduced lattice.
    Lattice,
}

impl<'a> SolveRequest<'a> {
    pub fn new(matrix: &'a KmMatrix, lambda: u64, mode: SolveMode) -> Self {
        SolveRequest {
            matrix,
            lambda,
            mode,
            solution_limit: None,
            time_budget: None,
            include_first: true,
            engine: Engine::Auto,
        }
    }
}

/// Chosen column indices, ascending.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Solution(pub Vec<usize>);

impl Solution {
    pub fn columns(&self) -> &[usize] {
        &self.0
    }

    pub fn to_vector(&self, n: usize) -> Vec<u8> {
        let mut x = vec![0u8; n];
        for &j in &self.0 {
            x[j] = 1;
        }
        x
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    /// The whole search space was explored (or, in `First` mode, a solution was found).
    Complete,
    /// Stopped after `solution_limit` solutions.
    LimitReached,
    /// The time budget ran out; results are partial.
    BudgetExhausted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveOutcome {
    /// Sorted lexicographically; empty in `Count` mode.
    pub solutions: Vec<Solution>,
    pub count: u64,
    pub status: SolveStatus,
    pub nodes: u64,
}

struct Problem<'a> {
    matrix: &'a KmMatrix,
    lambda: u64,
    col_nz: Vec<Vec<(usize, i64)>>,
    row_nz: Vec<Vec<(usize, i64)>>,
    zero_cols: Vec<usize>,
    include_first: bool,
}

impl<'a> Problem<'a> {
    fn new(req: &SolveRequest<'a>) -> Self {
        let a = req.matrix;
        let (m, n) = (a.n_rows(), a.n_cols());
        let mut col_nz = vec![Vec::new(); n];
        let mut row_nz = vec![Vec::new(); m];
        for i in 0..m {
            for j in 0..n {
                let x = a.entry(i, j) as i64;
                if x > 0 {
                    col_nz[j].push((i, x));
                    row_nz[i].push((j, x));
                }
            }
        }
        let zero_cols = (0..n).filter(|&j| col_nz[j].is_empty()).collect();
        Problem {
            matrix: a,
            lambda: req.lambda,
            col_nz,
            row_nz,
            zero_cols,
            include_first: req.include_first,
        }
    }

    fn branch_order(&self) -> [bool; 2] {
        if self.include_first {
            [true, false]
        } else {
            [false, true]
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Col {
    Free,
    In,
    Out,
}

struct State<'p, 'a> {
    p: &'p Problem<'a>,
    residual: Vec<i64>,
    attainable: Vec<i64>,
    free_count: Vec<u32>,
    col: Vec<Col>,
    trail: Vec<usize>,
    dirty: Vec<usize>,
    in_dirty: Vec<bool>,
    free: Vec<(usize, u32)>,
    prefix: Vec<u128>,
    suffix: Vec<u128>,
}

impl<'p, 'a> State<'p, 'a> {
    fn new(p: &'p Problem<'a>) -> Self {
        let m = p.row_nz.len();
        let lambda = i64::try_from(p.lambda).unwrap_or(i64::MAX);
        State {
            p,
            residual: vec![lambda; m],
            attainable: p
                .row_nz
                .iter()
                .map(|r| r.iter().map(|e| e.1).sum())
                .collect(),
            free_count: p.row_nz.iter().map(|r| r.len() as u32).collect(),
            col: vec![Col::Free; p.col_nz.len()],
            trail: Vec::new(),
            dirty: (0..m).collect(),
            in_dirty: vec![true; m],
            free: Vec::new(),
            prefix: Vec::new(),
            suffix: Vec::new(),
        }
    }

    /// State after replaying branch decisions from the root; `None` if inconsistent.
    fn replay(p: &'p Problem<'a>, path: &[(usize, bool)]) -> Option<Self> {
        let mut s = State::new(p);
        if !s.propagate() {
            return None;
        }
        for &(c, include) in path {
            s.fix(c, include);
            if !s.propagate() {
                return None;
            }
        }
        Some(s)
    }

    fn fix(&mut self, c: usize, include: bool) {
        self.col[c] = if include { Col::In } else { Col::Out };
        for &(r, a) in &self.p.col_nz[c] {
            self.attainable[r] -= a;
            if include {
                self.residual[r] -= a;
            }
            self.free_count[r] -= 1;
            if !self.in_dirty[r] {
                self.in_dirty[r] = true;
                self.dirty.push(r);
            }
        }
        self.trail.push(c);
    }

    fn undo(&mut self, mark: usize) {
        for r in self.dirty.drain(..) {
            self.in_dirty[r] = false;
        }
        while self.trail.len() > mark {
            let c = self.trail.pop().unwrap();
            let included = self.col[c] == Col::In;
            for &(r, a) in &self.p.col_nz[c] {
                self.attainable[r] += a;
                if included {
                    self.residual[r] += a;
                }
                self.free_count[r] += 1;
            }
            self.col[c] = Col::Free;
        }
    }

    fn propagate(&mut self) -> bool {
        let p = self.p;
        while let Some(r) = self.dirty.pop() {
            self.in_dirty[r] = false;
            let (res, att) = (self.residual[r], self.attainable[r]);
            if res < 0 || res > att {
                for d in self.dirty.drain(..) {
                    self.in_dirty[d] = false;
                }
                return false;
            }
            if att == 0 {
                continue;
            }
            if res == att || res == 0 || res >= 128 {
                for &(c, a) in &p.row_nz[r] {
                    if self.col[c] != Col::Free {
                        continue;
                    }
                    if res == att {
                        self.fix(c, true);
                    } else if a > res {
                        self.fix(c, false);
                    }
                }
            } else if !self.subset_sum_filter(r) {
                for d in self.dirty.drain(..) {
                    self.in_dirty[d] = false;
                }
                return false;
            }
        }
        true
    }

    /// Makes row `r` consistent as a subset-sum constraint: every undecided
    /// column must appear in some subset of undecided entries summing to the
    /// residual, and must be absent from another. Requires residual < 128.
    fn subset_sum_filter(&mut self, r: usize) -> bool {
        let res = self.residual[r] as u32;
        let mask = if res == 127 {
            u128::MAX
        } else {
            (1u128 << (res + 1)) - 1
        };
        let p = self.p;
        self.free.clear();
        for &(c, a) in &p.row_nz[r] {
            if self.col[c] == Col::Free && a <= res as i64 {
                self.free.push((c, a as u32));
            } else if self.col[c] == Col::Free {
                self.fix(c, false);
            }
        }
        let f = self.free.len();
        self.prefix.clear();
        self.prefix.push(1);
        for q in 0..f {
            let last = self.prefix[q];
            self.prefix.push((last | last << self.free[q].1) & mask);
        }
        if self.prefix[f] >> res & 1 == 0 {
            return false;
        }
        // suffix[q] = sums reachable from free[q..]
        self.suffix.clear();
        self.suffix.resize(f + 1, 0);
        self.suffix[f] = 1;
        for q in (0..f).rev() {
            let next = self.suffix[q + 1];
            self.suffix[q] = (next | next << self.free[q].1) & mask;
        }
        // bit s of reversed(x, t) is set iff bit t - s of x is set
        let rev = |x: u128, t: u32| x.reverse_bits() >> (127 - t);
        for q in 0..f {
            let (c, a) = self.free[q];
            let before = self.prefix[q];
            let after = self.suffix[q + 1];
            let can_out = before & rev(after, res) != 0;
            let can_in = a <= res && before & rev(after, res - a) != 0;
            if !can_in {
                self.fix(c, false);
            } else if !can_out {
                self.fix(c, true);
            }
        }
        true
    }

    /// Unsatisfied row with the fewest undecided columns.
    fn branch_row(&self) -> Option<usize> {
        (0..self.residual.len())
            .filter(|&r| self.residual[r] > 0)
            .min_by_key(|&r| (self.free_count[r], r))
    }

    fn branch_column(&self, row: usize) -> usize {
        self.p.row_nz[row]
            .iter()
            .map(|&(c, _)| c)
            .find(|&c| self.col[c] == Col::Free)
            .expect("unsatisfied row keeps an undecided column")
    }

    fn selected(&self) -> Vec<usize> {
        (0..self.col.len())
            .filter(|&c| self.col[c] == Col::In)
            .collect()
    }
}

struct Sink<'d> {
    mode: SolveMode,
    limit: Option<u64>,
    solutions: Vec<Solution>,
    count: u64,
    nodes: u64,
    deadline: Option<Instant>,
    timed_out: &'d AtomicBool,
}

impl Sink<'_> {
    fn full(&self) -> bool {
        self.limit.is_some_and(|l| self.count >= l)
    }

    fn out_of_time(&mut self) -> bool {
        self.nodes += 1;
        if self.timed_out.load(Ordering::Relaxed) {
            return true;
        }
        if self.nodes % 1024 == 0 {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    self.timed_out.store(true, Ordering::Relaxed);
                    return true;
                }
            }
        }
        false
    }

    /// Records the solution(s) at a leaf; returns false once the limit is hit.
    fn emit(&mut self, p: &Problem, selected: Vec<usize>) -> bool {
        let z = p.zero_cols.len();
        assert!(z < 64, "too many all-zero columns to enumerate");
        for mask in 0u64..(1u64 << z) {
            if self.full() {
                return false;
            }
            let mut cols = selected.clone();
            cols.extend(
                (0..z)
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| p.zero_cols[i]),
            );
            cols.sort_unstable();
            let product = p.matrix.multiply(&cols);
            assert!(
                product.iter().all(|&s| s == p.lambda),
                "solver produced a vector that fails A·x = λj"
            );
            self.count += 1;
            if self.mode != SolveMode::Count {
                self.solutions.push(Solution(cols));
            }
        }
        !self.full()
    }
}

fn dfs(state: &mut State, sink: &mut Sink) -> bool {
    if sink.out_of_time() {
        return false;
    }
    let Some(row) = state.branch_row() else {
        return sink.emit(state.p, state.selected());
    };
    let c = state.branch_column(row);
    for include in state.p.branch_order() {
        let mark = state.trail.len();
        state.fix(c, include);
        if state.propagate() && !dfs(state, sink) {
            state.undo(mark);
            return false;
        }
        state.undo(mark);
    }
    true
}

enum Task {
    Leaf(Vec<usize>),
    Open(Vec<(usize, bool)>),
}

/// Splits the tree into roughly `target` subtrees, preserving depth-first order.
fn frontier(p: &Problem, target: usize) -> Vec<Task> {
    let mut tasks = vec![Task::Open(Vec::new())];
    for _ in 0..24 {
        let open = tasks.iter().filter(|t| matches!(t, Task::Open(_))).count();
        if open == 0 || open >= target {
            break;
        }
        let mut next = Vec::with_capacity(tasks.len() * 2);
        for task in tasks {
            let path = match task {
                Task::Open(path) => path,
                leaf => {
                    next.push(leaf);
                    continue;
                }
            };
            let Some(mut s) = State::replay(p, &path) else {
                continue;
            };
            let Some(row) = s.branch_row() else {
                next.push(Task::Leaf(s.selected()));
                continue;
            };
            let c = s.branch_column(row);
            for include in p.branch_order() {
                let mark = s.trail.len();
                s.fix(c, include);
                if s.propagate() {
                    let mut child = path.clone();
                    child.push((c, include));
                    next.push(Task::Open(child));
                }
                s.undo(mark);
            }
        }
        tasks = next;
    }
    tasks
}

/// Solves `A · x = λ·j` over `{0,1}ⁿ`.
///
/// Runs on the current rayon pool; with one thread the search is a single
/// depth-first pass. Results do not depend on the number of threads unless a
/// time budget cuts the search short.
pub fn solve(req: &SolveRequest) -> SolveOutcome {
    let limit = match req.mode {
        SolveMode::First => Some(1),
        _ => req.solution_limit,
    };
    let deadline = req.time_budget.map(|b| Instant::now() + b);
    if req.engine == Engine::Lattice && req.lambda > 0 {
        if let Some(out) = solve_lattice(req, limit, deadline) {
            return out;
        }
    }
    let p = Problem::new(req);
    let timed_out = AtomicBool::new(false);
    let new_sink = || Sink {
        mode: req.mode,
        limit,
        solutions: Vec::new(),
        count: 0,
        nodes: 0,
        deadline,
        timed_out: &timed_out,
    };

    let threads = rayon::current_num_threads();
    let mut sinks: Vec<Sink> = if threads <= 1 {
        let mut sink = new_sink();
        if let Some(mut s) = State::replay(&p, &[]) {
            dfs(&mut s, &mut sink);
        }
        vec![sink]
    } else {
        frontier(&p, threads * 8)
            .into_par_iter()
            .map(|task| {
                let mut sink = new_sink();
                match task {
                    Task::Leaf(selected) => {
                        sink.emit(&p, selected);
                    }
                    Task::Open(path) => {
                        if let Some(mut s) = State::replay(&p, &path) {
                            dfs(&mut s, &mut sink);
                        }
                    }
                }
                sink
            })
            .collect()
    };

    let mut solutions = Vec::new();
    let mut count = 0u64;
    let mut nodes = 0u64;
    for sink in sinks.iter_mut() {
        nodes += sink.nodes;
        let take = limit.map_or(sink.count, |l| sink.count.min(l - count));
        count += take;
        solutions.extend(sink.solutions.drain(..).take(take as usize));
        if limit.is_some_and(|l| count >= l) {
            break;
        }
    }
    solutions.sort();

    let status = if timed_out.load(Ordering::Relaxed) && !limit.is_some_and(|l| count >= l) {
        SolveStatus::BudgetExhausted
    } else if req.mode == SolveMode::First || !limit.is_some_and(|l| count >= l) {
        SolveStatus::Complete
    } else {
        SolveStatus::LimitReached
    };
    SolveOutcome {
        solutions,
        count,
        status,
        nodes,
    }
}

const BKZ_BLOCK: usize = 20;

fn solve_lattice(
    req: &SolveRequest,
    limit: Option<u64>,
    deadline: Option<Instant>,
) -> Option<SolveOutcome> {
    let prepared = crate::lattice::prepare(req.matrix, req.lambda, BKZ_BLOCK)?;
    let mut solutions = Vec::new();
    let mut count = 0u64;
    let mut nodes = 0u64;
    let ended = prepared.run(deadline, &mut nodes, |cols| {
        let product = req.matrix.multiply(&cols);
        assert!(
            product.iter().all(|&s| s == req.lambda),
            "solver produced a vector that fails A·x = λj"
        );
        count += 1;
        if req.mode != SolveMode::Count {
            solutions.push(Solution(cols));
        }
        !limit.is_some_and(|l| count >= l)
    });
    solutions.sort();
    let status = match ended {
        crate::lattice::Ended::OutOfTime => SolveStatus::BudgetExhausted,
        crate::lattice::Ended::Stopped if req.mode != SolveMode::First => SolveStatus::LimitReached,
        _ => SolveStatus::Complete,
    };
    Some(SolveOutcome {
        solutions,
        count,
        status,
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kramer_mesner::OrbitLabel;
    use crate::pointset::PointSet;

    fn matrix(entries: Vec<Vec<u32>>) -> KmMatrix {
        let label = OrbitLabel {
            representative: PointSet::EMPTY,
            size: 1,
        };
        let m = entries.len();
        let n = entries.first().map_or(0, |r| r.len());
        KmMatrix::from_parts((1, 2, 2), vec![label; m], vec![label; n], entries, false).unwrap()
    }

    #[test]
    fn lambda_zero_has_only_the_zero_vector() {
        let a = matrix(vec![vec![1, 2, 0], vec![0, 1, 3]]);
        let out = solve(&SolveRequest::new(&a, 0, SolveMode::Enumerate));
        assert_eq!(out.solutions, vec![Solution(vec![])]);
        assert_eq!(out.status, SolveStatus::Complete);
    }

    #[test]
    fn small_system() {
        // rows: x0 + x1 + x2 = 2 and x0 + 2 x3 = 2
        let a = matrix(vec![vec![1, 1, 1, 0], vec![1, 0, 0, 2]]);
        let out = solve(&SolveRequest::new(&a, 2, SolveMode::Enumerate));
        assert_eq!(out.solutions, vec![Solution(vec![1, 2, 3])]);
        let first = solve(&SolveRequest::new(&a, 2, SolveMode::First));
        assert_eq!(first.count, 1);
    }

    #[test]
    fn zero_columns_double_the_count() {
        let a = matrix(vec![vec![1, 0, 1]]);
        let out = solve(&SolveRequest::new(&a, 1, SolveMode::Enumerate));
        assert_eq!(
            out.solutions,
            vec![
                Solution(vec![0]),
                Solution(vec![0, 1]),
                Solution(vec![1, 2]),
                Solution(vec![2])
            ]
        );
    }

    #[test]
    fn limit_is_reported() {
        let a = matrix(vec![vec![1, 1, 1, 1]]);
        let mut req = SolveRequest::new(&a, 2, SolveMode::Count);
        assert_eq!(solve(&req).count, 6);
        req.solution_limit = Some(4);
        let out = solve(&req);
        assert_eq!((out.count, out.status), (4, SolveStatus::LimitReached));
    }

    #[test]
    fn zero_budget_is_incomplete() {
        let a = matrix(vec![vec![1; 40]]);
        let mut req = SolveRequest::new(&a, 20, SolveMode::Count);
        req.time_budget = Some(Duration::ZERO);
        let out = solve(&req);
        assert_eq!(out.status, SolveStatus::BudgetExhausted);
        assert!(out.count < 137_846_528_820);
    }
}

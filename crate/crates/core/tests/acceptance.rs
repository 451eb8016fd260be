//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `cargo test -p kmdesign --test acceptance -- [--full] [--strict] [--only N]`
//!
//! The two hard solver cases get a 60 second budget each unless `--full`
//! raises it to 30 minutes. `--strict` makes any FAIL a nonzero exit.

mod common;

use std::collections::{HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use kmdesign::designs::{
    complement_design, complement_lambda, disjoint_union, expand, parameters, solution_to_design,
    supplement, verify, Design, Verification,
};
use kmdesign::formats::parse_base_blocks;
use kmdesign::iso::{classify, isomorphic, IsoOutcome, DEFAULT_NODE_BUDGET};
use kmdesign::kramer_mesner::{build_matrix, KmMatrix, OrbitLabel};
use kmdesign::orbits::{enumerate_orbits, enumerate_short_orbits};
use kmdesign::pointset::{binomial, PointSet};
use kmdesign::solver::{solve, Solution, SolveMode, SolveRequest, SolveStatus};
use kmdesign::PermutationGroup;
use rand::{Rng, SeedableRng};

use common::{group, read_fixture, SYSTEMS};

type Check = Result<String, String>;

struct Options {
    hard_budget: Duration,
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn matrix(g: &PermutationGroup, t: usize, k: usize) -> KmMatrix {
    build_matrix(
        g,
        t,
        &enumerate_orbits(g, k).unwrap(),
        &enumerate_orbits(g, t).unwrap(),
    )
    .unwrap()
}

fn psl_system() -> (PermutationGroup, KmMatrix) {
    let g = group("g_psl211");
    let k_set = enumerate_short_orbits(&g, 10, 132).unwrap();
    let a = build_matrix(&g, 2, &k_set, &enumerate_orbits(&g, 2).unwrap()).unwrap();
    (g, a)
}

fn enumerate(a: &KmMatrix, lambda: u64, budget: Option<Duration>) -> (Vec<Solution>, SolveStatus) {
    let mut req = SolveRequest::new(a, lambda, SolveMode::Enumerate);
    req.time_budget = budget;
    let res = solve(&req);
    (res.solutions, res.status)
}

fn group_orders(_: &Options) -> Check {
    let want = [
        ("g_psl211", 660),
        ("g_m11", 7920),
        ("g_d38", 38),
        ("g_a6", 360),
        ("g_s6", 720),
        ("g_z3s3", 18),
        ("g_120", 120),
        ("g_192", 192),
        ("g_272", 272),
    ];
    let mut got = Vec::new();
    for (name, order) in want {
        let n = group(name).order();
        ensure(n == order, || {
            format!("{name}: order {n}, expected {order}")
        })?;
        got.push(n.to_string());
    }
    Ok(got.join(" "))
}

fn orbit_censuses(_: &Options) -> Check {
    let want = [
        ("g_d38", 3, 39, 5, 444),
        ("g_a6", 3, 12, 7, 406),
        ("g_z3s3", 4, 84, 5, 178),
        ("g_120", 4, 25, 8, 132),
        ("g_192", 5, 28, 7, 71),
        ("g_272", 5, 25, 8, 95),
    ];
    let mut got = Vec::new();
    for (name, t, nt, k, nk) in want {
        let g = group(name);
        let (a, b) = (
            enumerate_orbits(&g, t).unwrap().len(),
            enumerate_orbits(&g, k).unwrap().len(),
        );
        ensure(a == nt && b == nk, || {
            format!("{name}: {a} {t}-orbits and {b} {k}-orbits, expected {nt} and {nk}")
        })?;
        got.push(format!("{name} {a}/{b}"));
    }
    Ok(got.join(", "))
}

fn short_orbits(_: &Options) -> Check {
    let n = enumerate_short_orbits(&group("g_psl211"), 10, 132)
        .unwrap()
        .len();
    ensure(n == 97, || {
        format!("PSL(2,11): {n} short orbits, expected 97")
    })?;
    let m = enumerate_short_orbits(&group("g_m11"), 10, 3959)
        .unwrap()
        .len();
    ensure(m == 367, || format!("M11: {m} short orbits, expected 367"))?;
    Ok("PSL(2,11) 97, M11 367".into())
}

fn row_sums(_: &Options) -> Check {
    let mut checked = 0;
    for (name, _, k) in SYSTEMS {
        let g = group(name);
        let k_set = enumerate_orbits(&g, k).unwrap();
        for t in 1..k {
            let a = build_matrix(&g, t, &k_set, &enumerate_orbits(&g, t).unwrap())
                .map_err(|e| format!("{name} t={t}: {e}"))?;
            let want = binomial((g.degree() - t) as u64, (k - t) as u64) as u64;
            ensure(a.row_sums().iter().all(|&s| s == want), || {
                format!("{name} t={t}: row sums differ from {want}")
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} matrices"))
}

fn solution_counts(o: &Options) -> Check {
    let (_, psl) = psl_system();
    let cases: Vec<(&str, KmMatrix, u64, usize, Option<Duration>)> = vec![
        ("4-(15,5,2)", matrix(&group("g_z3s3"), 4, 5), 2, 12, None),
        ("5-(16,7,10)", matrix(&group("g_192"), 5, 7), 10, 2, None),
        ("2-(55,10,4) 6x97", psl, 4, 5, None),
        ("3-(21,7,30)", matrix(&group("g_a6"), 3, 7), 30, 56, None),
        (
            "4-(16,8,45)",
            matrix(&group("g_120"), 4, 8),
            45,
            4,
            Some(o.hard_budget),
        ),
        (
            "5-(17,8,40)",
            matrix(&group("g_272"), 5, 8),
            40,
            61,
            Some(o.hard_budget),
        ),
    ];
    let mut got = Vec::new();
    let mut failures = Vec::new();
    for (name, a, lambda, want, budget) in cases {
        let start = Instant::now();
        let (sols, status) = enumerate(&a, lambda, budget);
        let took = start.elapsed().as_secs_f64();
        if status != SolveStatus::Complete {
            failures.push(format!(
                "{name}: {} found before the {:.0}s budget ran out, expected {want}",
                sols.len(),
                budget.unwrap_or_default().as_secs_f64()
            ));
        } else if sols.len() != want {
            failures.push(format!("{name}: {} solutions, expected {want}", sols.len()));
        } else {
            got.push(format!("{name} {want} ({took:.1}s)"));
        }
    }
    if failures.is_empty() {
        Ok(got.join(", "))
    } else {
        Err(format!(
            "{}; passed: {}",
            failures.join("; "),
            got.join(", ")
        ))
    }
}

/// `t`-subset coverage tallied block by block.
fn coverage(d: &Design, t: usize) -> Option<u64> {
    let mut counts: HashMap<PointSet, u64> = HashMap::new();
    for &b in d.blocks() {
        for s in b.subsets(t) {
            *counts.entry(s).or_default() += 1;
        }
    }
    if (counts.len() as u128) < binomial(d.v() as u64, t as u64) {
        return if counts.is_empty() { Some(0) } else { None };
    }
    let first = *counts.values().next().unwrap();
    counts.values().all(|&c| c == first).then_some(first)
}

fn table(g: &str, file: &str) -> Design {
    let bb = parse_base_blocks(&read_fixture(file)).unwrap();
    expand(&group(g), &bb.blocks).unwrap()
}

fn check_design(name: &str, d: &Design, t: usize, lambda: u64) -> Result<(), String> {
    let v = verify(d, t).unwrap();
    ensure(v == Verification::Design { lambda }, || {
        format!("{name}: verify gave {v:?}, expected lambda={lambda}")
    })?;
    let b0 = parameters(t, d.v(), d.k(), lambda as u128).unwrap().b;
    ensure(b0.integer() == Some(d.b() as u128), || {
        format!("{name}: {} blocks, lambda_0 = {b0}", d.b())
    })
}

fn tables(_: &Options) -> Check {
    let list = [
        ("Table 1a", "g_d38", "t1_blocks_a.blk", 3, 4),
        ("Table 1b", "g_d38", "t1_blocks_b.blk", 3, 10),
        ("Table 2 G1", "g_a6", "t2_blocks_a.blk", 3, 30),
        ("Table 2 G2", "g_s6", "t2_blocks_b.blk", 3, 75),
        ("Table 3", "g_z3s3", "t3_blocks.blk", 4, 2),
        ("Table 4", "g_120", "t4_blocks.blk", 4, 45),
        ("Table 5", "g_192", "t5_blocks.blk", 5, 10),
        ("Table 6", "g_272", "t6_blocks.blk", 5, 40),
    ];
    let mut got = Vec::new();
    for (name, g, file, t, lambda) in list {
        let d = table(g, file);
        check_design(name, &d, t, lambda)?;
        got.push(format!("{name} b={}", d.b()));
    }
    let u = disjoint_union(
        &table("g_d38", "t1_blocks_a.blk"),
        &table("g_d38", "t1_blocks_b.blk"),
    )
    .map_err(|e| e.to_string())?;
    check_design("Table 1 union", &u, 3, 14)?;
    got.push(format!("union b={}", u.b()));
    Ok(got.join(", "))
}

fn parameter_triples(_: &Options) -> Check {
    let list = [
        ((2, 55, 10), (1, 886322710, 443161355)),
        ((3, 20, 5), (2, 136, 34)),
        ((3, 21, 7), (15, 3060, 102)),
        ((4, 15, 5), (1, 11, 5)),
        ((4, 16, 8), (15, 495, 16)),
        ((5, 16, 7), (5, 55, 5)),
        ((5, 17, 8), (20, 220, 5)),
    ];
    for ((t, v, k), want) in list {
        let p = parameters(t, v, k, 1).unwrap();
        let got = (p.lambda_min, p.lambda_max, p.m);
        ensure(got == want, || {
            format!("{t}-({v},{k},·): {got:?}, expected {want:?}")
        })?;
    }
    let f = parameters(2, 55, 10, 1).unwrap();
    ensure(!f.fisher_ok && f.b.integer() == Some(33), || {
        "2-(55,10,1) not flagged by the Fisher check".into()
    })?;
    Ok("7 triples, Fisher flags 2-(55,10,1) b=33".into())
}

fn orders_of(designs: &[Design]) -> Result<Vec<(usize, u128)>, String> {
    let c = classify(designs, DEFAULT_NODE_BUDGET);
    ensure(c.complete, || "classification ran out of budget".into())?;
    c.classes
        .iter()
        .map(|cl| {
            cl.automorphisms
                .exact_order()
                .map(|o| (cl.members.len(), o))
                .ok_or_else(|| "automorphism search ran out of budget".to_string())
        })
        .collect()
}

fn classification(_: &Options) -> Check {
    let expanded = |g: &PermutationGroup, a: &KmMatrix, lambda: u64| -> Vec<Design> {
        enumerate(a, lambda, None)
            .0
            .iter()
            .map(|x| solution_to_design(a, x, g).unwrap())
            .collect()
    };

    let g = group("g_z3s3");
    let six = orders_of(&expanded(&g, &matrix(&g, 4, 5), 2))?;
    ensure(six.len() == 2 && six.iter().all(|&(_, o)| o == 18), || {
        format!("4-(15,5,2): classes (size, |Aut|) {six:?}")
    })?;

    let g = group("g_192");
    let eight = expanded(&g, &matrix(&g, 5, 7), 10);
    ensure(eight.len() == 2, || {
        format!("5-(16,7,10): {} designs", eight.len())
    })?;
    ensure(
        matches!(
            isomorphic(&eight[0], &eight[1], DEFAULT_NODE_BUDGET),
            IsoOutcome::Isomorphic(_)
        ),
        || "5-(16,7,10): the two designs are not found isomorphic".into(),
    )?;
    let o8 = orders_of(&eight)?;
    ensure(o8 == [(2, 192)], || format!("5-(16,7,10): classes {o8:?}"))?;

    let (g, a) = psl_system();
    let mut three: Vec<u128> = orders_of(&expanded(&g, &a, 4))?
        .iter()
        .map(|&(_, o)| o)
        .collect();
    three.sort();
    ensure(three == [660, 660, 1320], || {
        format!("2-(55,10,4): |Aut| {three:?}")
    })?;
    Ok(format!(
        "12 -> 2 classes |Aut|=18; 2 -> 1 class |Aut|=192; 5 -> 3 classes |Aut| {three:?}"
    ))
}

fn orbit_members(g: &PermutationGroup, s: PointSet) -> HashSet<PointSet> {
    g.elements()
        .iter()
        .map(|p| p.apply_to_subset(s).unwrap())
        .collect()
}

fn synthetic(entries: Vec<Vec<u32>>) -> KmMatrix {
    let label = |i: usize| OrbitLabel {
        representative: PointSet::from_bits(1 << (i % 60)),
        size: 1,
    };
    let n = entries[0].len();
    let rows = (0..entries.len()).map(label).collect();
    let cols = (0..n).map(label).collect();
    KmMatrix::from_parts((1, 60, 2), rows, cols, entries, false).unwrap()
}

/// Solutions among all `2^n` vectors, visited in Gray-code order.
fn gray_count(a: &KmMatrix, lambda: u64) -> usize {
    let mut sums = vec![0i64; a.n_rows()];
    let mut x = vec![false; a.n_cols()];
    let mut count = 0;
    for step in 0u32..(1 << a.n_cols()) {
        if step > 0 {
            let j = step.trailing_zeros() as usize;
            x[j] = !x[j];
            let sign = if x[j] { 1 } else { -1 };
            for (i, s) in sums.iter_mut().enumerate() {
                *s += sign * a.entry(i, j) as i64;
            }
        }
        count += usize::from(sums.iter().all(|&s| s == lambda as i64));
    }
    count
}

fn property_suites(_: &Options) -> Check {
    // KM entries against orbit members
    for (name, t, k) in SYSTEMS {
        let g = group(name);
        let a = matrix(&g, t, k);
        for (j, col) in a.cols().iter().enumerate() {
            let members = orbit_members(&g, col.representative);
            for (i, row) in a.rows().iter().enumerate() {
                let n = members
                    .iter()
                    .filter(|m| row.representative.is_subset_of(**m))
                    .count() as u32;
                ensure(a.entry(i, j) == n, || format!("{name}: entry ({i},{j})"))?;
            }
        }
    }

    // derived designs
    for (g, file, t, lambda) in [
        ("g_d38", "t1_blocks_a.blk", 3, 4u64),
        ("g_z3s3", "t3_blocks.blk", 4, 2),
        ("g_192", "t5_blocks.blk", 5, 10),
    ] {
        let d = table(g, file);
        let (v, k) = (d.v(), d.k());
        let lmax = binomial((v - t) as u64, (k - t) as u64) as u64;
        let s = supplement(&d, t).unwrap();
        ensure(coverage(&s, t) == Some(lmax - lambda), || {
            format!("{file}: supplement")
        })?;
        let c = complement_design(&d, t).unwrap();
        let lc = complement_lambda(t, v, k, lambda as u128).unwrap();
        ensure(coverage(&c, t).map(i128::from) == Some(lc), || {
            format!("{file}: complement")
        })?;
        let u = disjoint_union(&d, &s).unwrap();
        ensure(coverage(&u, t) == Some(lmax), || format!("{file}: union"))?;
    }

    // solver against 2^n enumeration
    let mut rng = rand::rngs::StdRng::seed_from_u64(1);
    let mut systems = 0;
    for _ in 0..200 {
        let (m, n) = (rng.gen_range(1..5), rng.gen_range(1..=20));
        let entries: Vec<Vec<u32>> = (0..m)
            .map(|_| (0..n).map(|_| rng.gen_range(0..4)).collect())
            .collect();
        let lambda = rng.gen_range(1..6);
        let a = synthetic(entries);
        let brute = gray_count(&a, lambda);
        let res = solve(&SolveRequest::new(&a, lambda, SolveMode::Count));
        ensure(res.count as usize == brute, || {
            format!(
                "synthetic {m}x{n} lambda={lambda}: {} vs {brute}",
                res.count
            )
        })?;
        systems += 1;
    }

    // worker counts
    let a = matrix(&group("g_z3s3"), 4, 5);
    let runs: Vec<Vec<Solution>> = [1, 2, 4]
        .iter()
        .map(|&w| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .unwrap();
            pool.install(|| enumerate(&a, 2, None).0)
        })
        .collect();
    ensure(runs.iter().all(|r| *r == runs[0]), || {
        "solutions differ across worker counts".into()
    })?;

    Ok(format!(
        "KM oracle on {} systems, 3 derived-design checks, {systems} synthetic systems, 3 worker counts",
        SYSTEMS.len()
    ))
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let full = args.iter().any(|a| a == "--full");
    let strict = args.iter().any(|a| a == "--strict");
    let only: Option<usize> = args
        .iter()
        .position(|a| a == "--only")
        .and_then(|i| args.get(i + 1))
        .and_then(|s| s.parse().ok());
    let opts = Options {
        hard_budget: Duration::from_secs(if full { 1800 } else { 60 }),
    };

    let criteria: [(&str, fn(&Options) -> Check); 9] = [
        ("group orders", group_orders),
        ("orbit censuses", orbit_censuses),
        ("short-orbit enumeration", short_orbits),
        ("row-sum identity", row_sums),
        ("solution counts", solution_counts),
        ("table expansion and verification", tables),
        ("parameter arithmetic", parameter_triples),
        ("isomorphism classification", classification),
        ("property suites", property_suites),
    ];

    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(|| check(&opts))).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let took = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {n} {name} [{took:.1}s]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {n} {name} [{took:.1}s]: {detail}");
            }
        }
    }
    println!("acceptance: {failed} failing");
    if strict && failed > 0 {
        std::process::exit(1);
    }
}

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use kmdesign::designs::{self, Design, Verification};
use kmdesign::formats::{self, BaseBlockFile, DesignFile, SolutionFile};
use kmdesign::iso::{self, DEFAULT_NODE_BUDGET};
use kmdesign::kramer_mesner::{build_matrix, KmMatrix};
use kmdesign::orbits::{enumerate_orbits, enumerate_short_orbits, OrbitSet};
use kmdesign::solver::{self, Engine, SolveMode, SolveRequest, SolveStatus};
use kmdesign::{Error, PermutationGroup};

#[derive(Parser)]
#[command(
    name = "kmdesign",
    version,
    about = "t-designs with a prescribed automorphism group"
)]
struct Cli {
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Extra detail on stderr.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parameter arithmetic for t-(v,k,λ).
    Params {
        #[arg(long)]
        t: usize,
        #[arg(long)]
        v: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        lambda: u128,
    },
    /// Orbits of the group on k-subsets.
    Orbits {
        #[arg(long)]
        group: PathBuf,
        #[arg(long)]
        k: usize,
        /// Keep only orbits of length at most this (short-orbit enumeration).
        #[arg(long)]
        bound: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Kramer–Mesner matrix for t-orbits against k-orbits.
    Matrix {
        #[arg(long)]
        group: PathBuf,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        bound: Option<usize>,
        /// Use this k-orbit file instead of enumerating.
        #[arg(long)]
        orbits: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// 0-1 solutions of A·x = λj.
    Solve {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        lambda: u64,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Expand base blocks under a group.
    Expand {
        #[arg(long)]
        group: PathBuf,
        #[arg(long)]
        base: PathBuf,
        /// Defaults to the t in the base-block header.
        #[arg(long)]
        t: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that a design is a t-design and report λ.
    Verify {
        #[arg(long)]
        design: PathBuf,
        /// Defaults to the t in the design header.
        #[arg(long)]
        t: Option<usize>,
    },
    /// All k-subsets that are not blocks.
    Supplement {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        t: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Complements of the blocks.
    Complement {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        t: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Union of two designs with no common block.
    Union {
        /// Given twice.
        #[arg(long, required = true)]
        design: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Block intersection invariants.
    Fingerprint {
        #[arg(long)]
        design: PathBuf,
    },
    /// Partition designs into isomorphism classes.
    Classes {
        /// Design files.
        #[arg(long)]
        design: Vec<PathBuf>,
        /// Or a solution file, expanded with --matrix and --group.
        #[arg(long, requires_all = ["matrix", "group"])]
        solutions: Option<PathBuf>,
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long)]
        group: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        node_budget: u64,
    },
    /// Order of the full automorphism group of a design.
    Autorder {
        #[arg(long)]
        design: PathBuf,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        node_budget: u64,
    },
    /// group → orbits → matrix → solve → expand → verify.
    Pipeline {
        #[arg(long)]
        group: PathBuf,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        lambda: u64,
        #[arg(long)]
        bound: Option<usize>,
        /// Enumerate every solution and report how many there are.
        #[arg(long)]
        count: bool,
        #[command(flatten)]
        search: SearchArgs,
        /// Directory for the intermediate files.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Stop after this many solutions.
    #[arg(long)]
    limit: Option<u64>,
    #[arg(long)]
    budget_seconds: Option<f64>,
    #[arg(long, value_enum, default_value_t = EngineArg::Auto)]
    engine: EngineArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    First,
    All,
    Count,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Auto,
    Backtrack,
    Lattice,
}

enum Failure {
    /// Verification failed, no solutions and the like.
    Domain(String),
    Usage(String),
    Budget(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Budget(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Domain(m) | Failure::Usage(m) | Failure::Budget(m) => m,
        }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

/// Core errors raised while computing; bad parameters count as usage errors.
fn computing(context: &str) -> impl Fn(Error) -> Failure + '_ {
    move |e| match e {
        Error::InvalidParameters(_) | Error::DegreeMismatch(..) => {
            Failure::Usage(format!("{context}: {e}"))
        }
        _ => Failure::Domain(format!("{context}: {e}")),
    }
}

fn load<T>(path: &Path, parse: impl Fn(&str) -> kmdesign::Result<T>) -> Outcome<T> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn file_stem(p: &Path) -> String {
    p.file_stem()
        .map_or_else(|| "-".to_string(), |s| s.to_string_lossy().into_owned())
}

fn k_orbits(
    g: &PermutationGroup,
    k: usize,
    bound: Option<usize>,
    context: &str,
) -> Outcome<OrbitSet> {
    match bound {
        Some(b) => enumerate_short_orbits(g, k, b),
        None => enumerate_orbits(g, k),
    }
    .map_err(computing(context))
}

fn km_matrix(g: &PermutationGroup, t: usize, k_set: &OrbitSet, context: &str) -> Outcome<KmMatrix> {
    let t_set = enumerate_orbits(g, t).map_err(computing(context))?;
    build_matrix(g, t, k_set, &t_set).map_err(computing(context))
}

fn request<'a>(
    a: &'a KmMatrix,
    lambda: u64,
    s: &SearchArgs,
    default: SolveMode,
) -> Outcome<SolveRequest<'a>> {
    let mode = match s.mode {
        None => default,
        Some(ModeArg::First) => SolveMode::First,
        Some(ModeArg::All) => SolveMode::Enumerate,
        Some(ModeArg::Count) => SolveMode::Count,
    };
    let mut req = SolveRequest::new(a, lambda, mode);
    req.solution_limit = s.limit;
    if let Some(secs) = s.budget_seconds {
        if !(secs.is_finite() && secs >= 0.0) {
            return Err(Failure::Usage(format!(
                "--budget-seconds {secs} is not a valid duration"
            )));
        }
        req.time_budget = Some(Duration::from_secs_f64(secs));
    }
    req.engine = match s.engine {
        EngineArg::Auto => Engine::Auto,
        EngineArg::Backtrack => Engine::Backtrack,
        EngineArg::Lattice => Engine::Lattice,
    };
    Ok(req)
}

fn header_t(flag: Option<usize>, header: Option<usize>, path: &Path) -> Outcome<usize> {
    flag.or(header)
        .ok_or_else(|| Failure::Usage(format!("{}: no t in the header, pass --t", path.display())))
}

/// Verifies `d` and returns λ, or a domain failure naming the deviant subset.
fn lambda_of(d: &Design, t: usize, what: &str) -> Outcome<u64> {
    match designs::verify(d, t).map_err(computing(what))? {
        Verification::Design { lambda } => Ok(lambda),
        Verification::Deviant {
            subset,
            count,
            expected,
        } => Err(Failure::Domain(format!(
            "{what}: not a {t}-design: {subset} lies in {count} blocks, {{1..{t}}} in {expected}"
        ))),
    }
}

fn write_checked(d: Design, t: usize, out: Option<&Path>, what: &str) -> Outcome {
    let lambda = lambda_of(&d, t, what)?;
    eprintln!(
        "{t}-({},{},{lambda}) design with {} blocks",
        d.v(),
        d.k(),
        d.b()
    );
    emit(
        out,
        &formats::write_design(&DesignFile {
            t,
            lambda,
            design: d,
        }),
    )
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Params { t, v, k, lambda } => {
            let p = designs::parameters(t, v, k, lambda).map_err(computing("params"))?;
            let mut s = String::new();
            let _ = writeln!(s, "{t}-({v},{k},{lambda})");
            let levels: Vec<String> = p.lambda_s.iter().map(|f| f.to_string()).collect();
            let _ = writeln!(s, "lambda_s={}", levels.join(" "));
            let _ = writeln!(s, "b={}", p.b);
            let _ = writeln!(s, "lambda_min={}", p.lambda_min);
            let _ = writeln!(s, "lambda_max={}", p.lambda_max);
            let _ = writeln!(s, "M={}", p.m);
            let _ = writeln!(s, "admissible={}", p.admissible);
            let _ = writeln!(s, "fisher={}", if p.fisher_ok { "ok" } else { "violated" });
            print!("{s}");
            if !p.admissible {
                return Err(Failure::Domain(format!(
                    "{t}-({v},{k},{lambda}) is not admissible"
                )));
            }
            if !p.fisher_ok {
                return Err(Failure::Domain(format!(
                    "{t}-({v},{k},{lambda}) has b={} < v={v}",
                    p.b
                )));
            }
            Ok(())
        }
        Command::Orbits {
            group,
            k,
            bound,
            out,
        } => {
            let g = load(&group, formats::parse_group)?;
            let set = k_orbits(&g, k, bound, &group.display().to_string())?;
            eprintln!(
                "{} orbits on {k}-subsets, group order {}",
                set.len(),
                g.order()
            );
            emit(
                out.as_deref(),
                &formats::write_orbits(&set, &file_stem(&group)),
            )
        }
        Command::Matrix {
            group,
            t,
            k,
            bound,
            orbits,
            out,
        } => {
            let g = load(&group, formats::parse_group)?;
            let ctx = group.display().to_string();
            let k_set = match &orbits {
                Some(p) => {
                    let (set, _) = load(p, formats::parse_orbits)?;
                    if set.subset_size != k {
                        return Err(Failure::Usage(format!(
                            "{}: orbits of {}-subsets, --k is {k}",
                            p.display(),
                            set.subset_size
                        )));
                    }
                    set
                }
                None => k_orbits(&g, k, bound, &ctx)?,
            };
            let a = km_matrix(&g, t, &k_set, &ctx)?;
            eprintln!("{}x{} matrix", a.n_rows(), a.n_cols());
            emit(out.as_deref(), &formats::write_matrix(&a))
        }
        Command::Solve {
            matrix,
            lambda,
            search,
            out,
        } => {
            let a = load(&matrix, formats::parse_matrix)?;
            let req = request(&a, lambda, &search, SolveMode::Enumerate)?;
            let res = solver::solve(&req);
            eprintln!(
                "{} solutions ({}), {} nodes",
                res.count,
                status_text(res.status),
                res.nodes
            );
            let file = SolutionFile {
                matrix: file_stem(&matrix),
                lambda,
                count: res.count,
                complete: res.status == SolveStatus::Complete,
                solutions: res.solutions,
            };
            emit(out.as_deref(), &formats::write_solutions(&file))?;
            solve_exit(res.status, res.count, &matrix)
        }
        Command::Expand {
            group,
            base,
            t,
            out,
        } => {
            let g = load(&group, formats::parse_group)?;
            let bb: BaseBlockFile = load(&base, formats::parse_base_blocks)?;
            if bb.v != g.degree() {
                return Err(Failure::Usage(format!(
                    "{}: v={} but the group acts on {} points",
                    base.display(),
                    bb.v,
                    g.degree()
                )));
            }
            let t = header_t(t, bb.t, &base)?;
            let ctx = base.display().to_string();
            let d = designs::expand(&g, &bb.blocks).map_err(computing(&ctx))?;
            write_checked(d, t, out.as_deref(), &ctx)
        }
        Command::Verify { design, t } => {
            let f = load(&design, formats::parse_design)?;
            let t = t.unwrap_or(f.t);
            let ctx = design.display().to_string();
            let lambda = lambda_of(&f.design, t, &ctx)?;
            println!(
                "{t}-({},{},{lambda}) b={}",
                f.design.v(),
                f.design.k(),
                f.design.b()
            );
            println!("lambda={lambda}");
            if t == f.t && lambda != f.lambda {
                return Err(Failure::Domain(format!(
                    "{ctx}: header says lambda={}, blocks give {lambda}",
                    f.lambda
                )));
            }
            Ok(())
        }
        Command::Supplement { design, t, out } => {
            let f = load(&design, formats::parse_design)?;
            let t = t.unwrap_or(f.t);
            let ctx = design.display().to_string();
            let d = designs::supplement(&f.design, t).map_err(computing(&ctx))?;
            write_checked(d, t, out.as_deref(), &format!("supplement of {ctx}"))
        }
        Command::Complement { design, t, out } => {
            let f = load(&design, formats::parse_design)?;
            let t = t.unwrap_or(f.t);
            let ctx = design.display().to_string();
            let d = designs::complement_design(&f.design, t).map_err(computing(&ctx))?;
            write_checked(d, t, out.as_deref(), &format!("complement of {ctx}"))
        }
        Command::Union { design, out } => {
            if design.len() != 2 {
                return Err(Failure::Usage(format!(
                    "union takes --design exactly twice, got {}",
                    design.len()
                )));
            }
            let a = load(&design[0], formats::parse_design)?;
            let b = load(&design[1], formats::parse_design)?;
            let ctx = format!("{} + {}", design[0].display(), design[1].display());
            let t = a.t.min(b.t);
            let d = designs::disjoint_union(&a.design, &b.design).map_err(computing(&ctx))?;
            write_checked(d, t, out.as_deref(), &ctx)
        }
        Command::Fingerprint { design } => {
            let f = load(&design, formats::parse_design)?;
            let fp = iso::fingerprint(&f.design);
            let mut s = format!("v={} k={} b={}\n", fp.v, fp.k, fp.b);
            s.push_str("intersections");
            for (i, c) in fp.intersections.iter().enumerate() {
                if *c > 0 {
                    let _ = write!(s, " {i}:{c}");
                }
            }
            s.push('\n');
            let _ = writeln!(s, "profiles {}", fp.profiles.len());
            for (hist, mult) in &fp.profiles {
                let h: Vec<String> = hist.iter().map(u64::to_string).collect();
                let _ = writeln!(s, "{mult} x [{}]", h.join(" "));
            }
            print!("{s}");
            Ok(())
        }
        Command::Classes {
            design,
            solutions,
            matrix,
            group,
            node_budget,
        } => {
            let mut all: Vec<Design> = Vec::new();
            for p in &design {
                all.push(load(p, formats::parse_design)?.design);
            }
            if let (Some(sp), Some(mp), Some(gp)) = (&solutions, &matrix, &group) {
                let sols = load(sp, formats::parse_solutions)?;
                let a = load(mp, formats::parse_matrix)?;
                let g = load(gp, formats::parse_group)?;
                let ctx = sp.display().to_string();
                for x in &sols.solutions {
                    all.push(designs::solution_to_design(&a, x, &g).map_err(computing(&ctx))?);
                }
            }
            if all.is_empty() {
                return Err(Failure::Usage("classes: no designs given".into()));
            }
            let c = iso::classify(&all, node_budget);
            println!("{} designs, {} classes", all.len(), c.classes.len());
            for (i, class) in c.classes.iter().enumerate() {
                let members: Vec<String> =
                    class.members.iter().map(|m| (m + 1).to_string()).collect();
                let order = if class.automorphisms.complete {
                    class.automorphisms.order.to_string()
                } else {
                    format!(">={}", class.automorphisms.order)
                };
                println!(
                    "class {}: |Aut|={order} members {}",
                    i + 1,
                    members.join(" ")
                );
            }
            if c.complete {
                Ok(())
            } else {
                Err(Failure::Budget(format!(
                    "node budget {node_budget} ran out; some classes may be split"
                )))
            }
        }
        Command::Autorder {
            design,
            node_budget,
        } => {
            let f = load(&design, formats::parse_design)?;
            let aut = iso::automorphisms(&f.design, node_budget);
            if cli.verbose {
                for p in &aut.generators {
                    eprintln!("{p}");
                }
            }
            if aut.complete {
                println!("{}", aut.order);
                Ok(())
            } else {
                println!(">={}", aut.order);
                Err(Failure::Budget(format!(
                    "{}: node budget {node_budget} ran out",
                    design.display()
                )))
            }
        }
        Command::Pipeline {
            group,
            t,
            k,
            lambda,
            bound,
            count,
            search,
            out,
        } => pipeline(&group, t, k, lambda, bound, count, &search, out.as_deref()),
    }
}

#[allow(clippy::too_many_arguments)]
fn pipeline(
    group: &Path,
    t: usize,
    k: usize,
    lambda: u64,
    bound: Option<usize>,
    count: bool,
    search: &SearchArgs,
    out: Option<&Path>,
) -> Outcome {
    let save = |name: &str, text: &str| -> Outcome {
        match out {
            Some(dir) => emit(Some(&dir.join(name)), text),
            None => Ok(()),
        }
    };
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
    }
    let ctx = group.display().to_string();
    let g = load(group, formats::parse_group)?;
    let name = file_stem(group);
    println!("group {name} order {} degree {}", g.order(), g.degree());

    let k_set = k_orbits(&g, k, bound, &ctx)?;
    println!(
        "orbits on {k}-subsets: {}{}",
        k_set.len(),
        bound.map_or(String::new(), |b| format!(" of length <= {b}"))
    );
    save("orbits.orb", &formats::write_orbits(&k_set, &name))?;

    let a = km_matrix(&g, t, &k_set, &ctx)?;
    println!("matrix {}x{}", a.n_rows(), a.n_cols());
    save("matrix.km", &formats::write_matrix(&a))?;

    let default = if count {
        SolveMode::Enumerate
    } else {
        SolveMode::First
    };
    let req = request(&a, lambda, search, default)?;
    let res = solver::solve(&req);
    println!("solutions {} ({})", res.count, status_text(res.status));
    save(
        "solutions.sol",
        &formats::write_solutions(&SolutionFile {
            matrix: "matrix".into(),
            lambda,
            count: res.count,
            complete: res.status == SolveStatus::Complete,
            solutions: res.solutions.clone(),
        }),
    )?;

    if let Some(x) = res.solutions.first() {
        let d = designs::solution_to_design(&a, x, &g).map_err(computing(&ctx))?;
        println!("design from solution 1: {} blocks", d.b());
        let got = lambda_of(&d, t, "pipeline design")?;
        println!("verify lambda={got}");
        if got != lambda {
            return Err(Failure::Domain(format!(
                "expanded design has lambda={got}, expected {lambda}"
            )));
        }
        save(
            "design.dsg",
            &formats::write_design(&DesignFile {
                t,
                lambda,
                design: d,
            }),
        )?;
    }
    solve_exit(res.status, res.count, group)
}

fn status_text(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Complete => "complete",
        SolveStatus::LimitReached => "limit reached",
        SolveStatus::BudgetExhausted => "budget exhausted",
    }
}

fn solve_exit(status: SolveStatus, count: u64, input: &Path) -> Outcome {
    match status {
        SolveStatus::BudgetExhausted => Err(Failure::Budget(format!(
            "{}: time budget ran out after {count} solutions",
            input.display()
        ))),
        _ if count == 0 => Err(Failure::Domain(format!(
            "{}: no solutions",
            input.display()
        ))),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use irg_cli::bench::run_bench;
use irg_cli::lad::run_lad;
use irg_cli::spec::{ExperimentSpec, FileConfig, Overrides, Suite};
use irg_core::baselines::rg_run;
use irg_core::benchmarks::{
    dixon_price_gradient, dixon_price_value, rosenbrock_gradient, rosenbrock_value,
    BenchmarkFunction, ExactOracle, NoisyOracle, Quadratic,
};
use irg_core::diagnostics::{
    check_backtracking_contract, check_null_equivalences, check_projection, check_sandwich,
    check_sufficient_descent, estimate_linear_rate, extract_nonnull, CheckResult,
};
use irg_core::direction::run_irg;
use irg_core::lad::{
    generate_gaussian_instance, irg_lad_run, moreau_gradient_inexact, LadOptions, LadProblem,
    ProxSolver,
};
use irg_core::{Oracle, Point, RunConfig, RunStatus, StepsizeRule, StopMode, Trace};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------------------------------------------------------------------------
// Independent oracles

/// Central differences, written out here rather than taken from the library.
fn central_difference(f: impl Fn(&Point) -> f64, x: &Point, h: f64) -> Point {
    Point::from_fn(x.len(), |i, _| {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        (f(&xp) - f(&xm)) / (2.0 * h)
    })
}

fn phi(pb: &LadProblem, x: &Point, y: &Point) -> f64 {
    (&pb.a * y - &pb.b).lp_norm(1) + 0.5 * (y - x).norm_squared()
}

/// Exact minimizer of `‖Ay − b‖₁ + ½‖y − x‖²` by enumerating residual sign
/// patterns `s ∈ {−1, 0, 1}^m`. For a fixed pattern the stationarity
/// condition is `y = x − A_Sᵀ s_S − A_Zᵀ λ` with `A_Z y = b_Z`; every
/// candidate is feasible, so the best candidate value is the minimum.
fn brute_force_prox(pb: &LadProblem, x: &Point) -> Point {
    let m = pb.m();
    let mut best: Option<(f64, Point)> = None;
    for code in 0..3usize.pow(m as u32) {
        let mut c = code;
        let signs: Vec<i32> = (0..m)
            .map(|_| {
                let s = (c % 3) as i32 - 1;
                c /= 3;
                s
            })
            .collect();
        let mut base = x.clone();
        let mut zero_rows = Vec::new();
        for (i, &s) in signs.iter().enumerate() {
            if s == 0 {
                zero_rows.push(i);
            } else {
                base -= pb.a.row(i).transpose() * f64::from(s);
            }
        }
        let y = if zero_rows.is_empty() {
            base
        } else {
            let az = pb.a.select_rows(zero_rows.iter());
            let bz = Point::from_iterator(zero_rows.len(), zero_rows.iter().map(|&i| pb.b[i]));
            let gram = &az * az.transpose();
            let rhs = &az * &base - bz;
            let Ok(lambda) = gram.svd(true, true).solve(&rhs, 1e-12) else {
                continue;
            };
            let y = &base - az.transpose() * lambda;
            if (&az * &y
                - Point::from_iterator(zero_rows.len(), zero_rows.iter().map(|&i| pb.b[i])))
            .amax()
                > 1e-9
            {
                continue;
            }
            y
        };
        let v = phi(pb, x, &y);
        if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, y));
        }
    }
    best.expect("the all-sign candidates always exist").1
}

// ---------------------------------------------------------------------------
// Criteria

fn tally(checks: &[CheckResult], violations: &mut BTreeMap<&'static str, usize>) {
    for c in checks {
        let e = violations.entry(c.name).or_default();
        if c.failed() {
            *e += 1;
        }
    }
}

enum Objective {
    Bench(BenchmarkFunction),
    Quad(Quadratic),
}

fn structural_run(idx: usize) -> (String, Trace, Box<dyn Oracle>) {
    let n = [2, 10, 50][idx % 3];
    let seed = idx as u64;
    let objective = match (idx / 3) % 3 {
        0 => Objective::Bench(BenchmarkFunction::DixonPrice(n)),
        1 => Objective::Bench(BenchmarkFunction::Rosenbrock(n)),
        _ => Objective::Quad(Quadratic::with_condition_number(n, 10.0, seed)),
    };
    let mut cfg = RunConfig::benchmark_defaults(1e-3);
    cfg.stopping.max_iterations = 400;
    cfg.seed = seed;
    if idx % 2 == 1 {
        cfg.stopping.mode = StopMode::Certified;
    }
    let (lipschitz, name) = match &objective {
        Objective::Bench(f) => (2_000.0 * n as f64, f.label()),
        Objective::Quad(q) => (q.lipschitz(), format!("Q{n}")),
    };
    cfg.rule = match (idx / 9) % 3 {
        0 => StepsizeRule::backtracking(0.7, 0.5),
        1 => StepsizeRule::Constant {
            step: 1.0 / lipschitz,
            lipschitz,
            margin: 1.0,
        },
        _ => StepsizeRule::Diminishing {
            base: 1.0 / lipschitz,
            exponent: 0.5,
        },
    };
    let label = format!("{name}/{:?}/s{seed}", cfg.rule);
    let (trace, oracle): (_, Box<dyn Oracle>) = match objective {
        Objective::Bench(f) => {
            let mut noisy = NoisyOracle::new(f, seed);
            (
                run_irg(&cfg, &mut noisy, f.start_point(), "IRG"),
                Box::new(ExactOracle::new(f)),
            )
        }
        Objective::Quad(q) => {
            let x1 = Point::from_element(n, 1.0);
            let mut noisy = NoisyOracle::new(q.clone(), seed);
            (
                run_irg(&cfg, &mut noisy, x1, "IRG"),
                Box::new(ExactOracle::new(q)),
            )
        }
    };
    let trace = trace.unwrap_or_else(|e| panic!("{label}: {e}"));
    (label, trace, oracle)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut violations = BTreeMap::new();
    let mut iterations = 0;
    for idx in 0..100 {
        let (_, trace, oracle) = structural_run(idx);
        iterations += trace.len();
        tally(
            &[
                check_null_equivalences(&trace),
                check_sandwich(&trace),
                check_projection(&trace),
                check_sufficient_descent(&trace, oracle.as_ref()),
            ],
            &mut violations,
        );
    }
    let elapsed = start.elapsed();
    let total: usize = violations.values().sum();
    outcome(
        total == 0 && elapsed <= Duration::from_secs(120),
        format!(
            "100 runs, {iterations} iterations, violations {violations:?}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut failures = 0;
    let mut steps = 0;
    for seed in 0..20u64 {
        let n = [2, 10, 50][seed as usize % 3];
        let f = if seed % 2 == 0 {
            BenchmarkFunction::Rosenbrock(n)
        } else {
            BenchmarkFunction::DixonPrice(n)
        };
        let mut cfg = RunConfig::benchmark_defaults(1e-3);
        cfg.stopping.max_iterations = 2_000;
        let mut noisy = NoisyOracle::new(f, seed);
        let trace = run_irg(&cfg, &mut noisy, f.start_point(), "IRGB").expect("run");
        steps += trace.records.iter().filter(|r| !r.null_flag).count();
        if check_backtracking_contract(&trace, &ExactOracle::new(f)).failed() {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("20 runs, {steps} accepted stepsizes re-evaluated, {failures} runs violating"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_bench: f64 = 0.0;
    for n in [2, 5, 10] {
        for _ in 0..100 {
            let x = Point::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
            for (value, grad) in [
                (
                    dixon_price_value as fn(&Point) -> f64,
                    dixon_price_gradient as fn(&Point) -> Point,
                ),
                (rosenbrock_value, rosenbrock_gradient),
            ] {
                let g = grad(&x);
                let fd = central_difference(value, &x, 1e-6);
                worst_bench = worst_bench.max((fd - &g).norm() / g.norm().max(1.0));
            }
        }
    }
    let mut worst_env: f64 = 0.0;
    for seed in 0..10u64 {
        let pb = generate_gaussian_instance(5, 5, seed).expect("instance");
        let x = Point::from_fn(5, |_, _| rng.random_range(-2.0..2.0));
        let envelope = |y: &Point| phi(&pb, y, &brute_force_prox(&pb, y));
        let fd = central_difference(envelope, &x, 1e-5);
        let g = moreau_gradient_inexact(&pb, &x, 1e-7).expect("gradient");
        worst_env = worst_env.max((fd - &g).norm() / g.norm().max(1e-12));
    }
    outcome(
        worst_bench <= 1e-6 && worst_env <= 1e-4,
        format!("worst relative error: benchmarks {worst_bench:.2e}, envelope {worst_env:.2e}"),
    )
}

fn criterion_4() -> Outcome {
    let omega = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_dist: f64 = 0.0;
    let mut gap_violations = 0;
    for seed in 0..20u64 {
        let n = 1 + seed as usize % 5;
        let m = 2 + seed as usize % 4;
        let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-2.0..2.0));
        let b = Point::from_fn(m, |_, _| rng.random_range(-2.0..2.0));
        let pb = LadProblem::new(a, b).expect("instance");
        let x = Point::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
        let res = ProxSolver::new(&pb).solve(&x, omega, None).expect("prox");
        let exact = brute_force_prox(&pb, &x);
        worst_dist = worst_dist.max((&res.p - &exact).norm());
        let subopt = phi(&pb, &x, &res.p) - phi(&pb, &x, &exact);
        if subopt > res.gap + 1e-12 {
            gap_violations += 1;
        }
    }
    let bound = (2.0 * omega).sqrt() + 1e-6;
    outcome(
        worst_dist <= bound && gap_violations == 0,
        format!(
            "20 instances, worst distance {worst_dist:.2e} (bound {bound:.2e}), gap violations {gap_violations}"
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut certified = 0;
    let mut unsound = 0;
    let mut worst_ratio: f64 = 0.0;
    for nu in [1e-2, 1e-3] {
        for (i, n) in [2, 10, 50].into_iter().enumerate() {
            for f in [
                BenchmarkFunction::DixonPrice(n),
                BenchmarkFunction::Rosenbrock(n),
            ] {
                for seed in 0..5u64 {
                    let mut cfg = RunConfig::benchmark_defaults(nu);
                    cfg.stopping.mode = StopMode::Certified;
                    cfg.stopping.max_iterations = 100_000;
                    let exact = ExactOracle::new(f);
                    let runs = [
                        run_irg(
                            &cfg,
                            &mut NoisyOracle::new(f, seed + 10 * i as u64),
                            f.start_point(),
                            "IRGB",
                        ),
                        rg_run(&cfg, &exact, f.start_point()),
                    ];
                    for trace in runs {
                        let trace = trace.expect("run");
                        if trace.status != RunStatus::Certified {
                            continue;
                        }
                        certified += 1;
                        let g = trace
                            .records
                            .last()
                            .and_then(|r| r.exact_grad_norm)
                            .unwrap_or(f64::NAN);
                        worst_ratio = worst_ratio.max(g / nu);
                        if g.is_nan() || g > nu {
                            unsound += 1;
                        }
                    }
                }
            }
        }
    }
    outcome(
        certified > 0 && unsound == 0,
        format!("{certified} certified stops, {unsound} unsound, worst ‖∇f‖/ν = {worst_ratio:.3}"),
    )
}

fn criterion_6() -> Outcome {
    let q = Quadratic::with_condition_number(10, 10.0, 6);
    let l = q.lipschitz();
    let x1 = Point::from_element(10, 1.0);
    let xbar = Point::zeros(10);
    let mut lines = Vec::new();
    let mut pass = true;
    for (rule_name, rule) in [
        (
            "constant",
            StepsizeRule::Constant {
                step: 1.0 / l,
                lipschitz: l,
                margin: 1.0,
            },
        ),
        ("backtracking", StepsizeRule::backtracking(0.7, 0.5)),
    ] {
        for scale in [0.0, 0.5] {
            let mut cfg = RunConfig::benchmark_defaults(1e-9);
            cfg.rule = rule;
            cfg.stopping.mode = StopMode::Certified;
            cfg.stopping.max_iterations = 20_000;
            let mut oracle = NoisyOracle::with_scale(q.clone(), 6, scale);
            let trace = run_irg(&cfg, &mut oracle, x1.clone(), "IRG").expect("run");
            let est = extract_nonnull(&trace).and_then(|s| estimate_linear_rate(&s, &xbar));
            match est {
                Ok(e) => {
                    pass &= e.rate < 1.0 && e.residual < 0.1;
                    lines.push(format!(
                        "{rule_name}/noise {scale}: rate {:.4} residual {:.4}",
                        e.rate, e.residual
                    ));
                }
                Err(e) => {
                    pass = false;
                    lines.push(format!("{rule_name}/noise {scale}: {e}"));
                }
            }
        }
    }
    outcome(pass, lines.join("; "))
}

fn bench_spec(problem: &str, n: usize, nu: f64, seeds: &[u64], out: &Path) -> ExperimentSpec {
    let file = FileConfig::parse(&format!(
        "[problem]\nseeds = {seeds:?}\n[stopping]\nmax_iterations = 100000\n"
    ))
    .expect("config");
    let cli = Overrides {
        problem: Some(problem.into()),
        n: Some(n),
        nu: Some(nu),
        out: Some(out.to_path_buf()),
        ..Default::default()
    };
    ExperimentSpec::resolve(Suite::Bench, &file, &cli).expect("spec")
}

fn criterion_7() -> Outcome {
    let seeds = [0, 1, 2];
    let tmp = tempfile::tempdir().expect("tempdir");
    let mut problems = Vec::new();
    let mut pass = true;
    let mut worst_gd: f64 = 0.0;
    let mut worst_nu: f64 = 0.0;
    for problem in ["dixon_price", "rosenbrock"] {
        for n in [10, 50] {
            let mut iters = BTreeMap::new();
            for nu in [0.01, 0.001] {
                let run =
                    run_bench(&bench_spec(problem, n, nu, &seeds, tmp.path())).expect("bench");
                for &seed in &seeds {
                    let irgb = run.trace("IRGB", seed).expect("IRGB trace");
                    let gd = run.trace("GD", seed).expect("GD trace");
                    pass &= irgb.status == RunStatus::GradientTest;
                    let ratio = irgb.len() as f64 / gd.len().max(1) as f64;
                    worst_gd = worst_gd.max(ratio);
                    iters.insert((seed, nu.to_bits()), irgb.len());
                }
            }
            for &seed in &seeds {
                let loose = iters[&(seed, 0.01f64.to_bits())] as f64;
                let tight = iters[&(seed, 0.001f64.to_bits())] as f64;
                worst_nu = worst_nu.max(tight / loose.max(1.0));
            }
            problems.push(format!("{}{n}", problem[..1].to_uppercase()));
        }
    }
    pass &= worst_gd <= 2.0 && worst_nu <= 2.0;
    outcome(
        pass,
        format!(
            "{} x seeds {seeds:?}: worst IRGB/GD {worst_gd:.2}, worst ν-tightening growth {worst_nu:.2}",
            problems.join(",")
        ),
    )
}

fn lad_spec(m: usize, out: &Path) -> ExperimentSpec {
    let file = FileConfig::parse(&format!("[problem]\nm = {m}\nn = 50\nseeds = [0, 1, 2]\n"))
        .expect("config");
    let cli = Overrides {
        out: Some(out.to_path_buf()),
        ..Default::default()
    };
    ExperimentSpec::resolve(Suite::Lad, &file, &cli).expect("spec")
}

/// Longest run of consecutive iterations with non-decreasing `ε_k`.
fn longest_plateau(trace: &Trace) -> usize {
    let eps: Vec<f64> = trace.records.iter().filter_map(|r| r.eps).collect();
    let mut best = 1.min(eps.len());
    let mut cur = best;
    for w in eps.windows(2) {
        cur = if w[1] >= w[0] { cur + 1 } else { 1 };
        best = best.max(cur);
    }
    best
}

fn criterion_8() -> Outcome {
    let tmp = tempfile::tempdir().expect("tempdir");
    let mut pass = true;
    let mut notes = Vec::new();
    for m in [50, 25] {
        let spec = lad_spec(m, tmp.path());
        let run = run_lad(&spec).expect("lad");
        let racers: Vec<_> = run.rows.iter().filter(|r| !r.reference).collect();
        let reached = racers.iter().filter(|r| run.reached(r)).count();
        pass &= reached == racers.len() && racers.len() == 9;
        notes.push(format!(
            "m={m}: {reached}/{} racers reached the reference",
            racers.len()
        ));
        if m == 50 {
            let plateau = racers
                .iter()
                .filter_map(|r| r.trace.as_ref().ok())
                .filter(|t| t.solver.starts_with("IRG"))
                .map(longest_plateau)
                .min()
                .unwrap_or(0);
            pass &= plateau >= 2;
            notes.push(format!("shortest longest eps plateau {plateau}"));
        } else {
            let mut worst: f64 = 0.0;
            for inst in &run.instances {
                for r1 in [5.0, 20.0] {
                    let mut cfg = spec.run.clone();
                    cfg.r1 = r1;
                    let trace = irg_lad_run(&inst.problem, &cfg, LadOptions::default(), "IRG")
                        .expect("run");
                    let fval = trace.terminal.map_or(f64::NAN, |t| t.fval);
                    worst = worst.max(fval);
                }
            }
            pass &= worst <= 1e-6;
            notes.push(format!("worst certified plateau fval {worst:.2e}"));
        }
    }
    outcome(pass, notes.join("; "))
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .expect("read dir")
        .map(|e| {
            let e = e.expect("entry");
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).expect("read"),
            )
        })
        .collect()
}

fn criterion_9() -> Outcome {
    let tmp = tempfile::tempdir().expect("tempdir");
    let mut mismatches = Vec::new();
    let mut files = 0;
    for suite in ["bench", "lad"] {
        let dirs: Vec<_> = (0..2)
            .map(|i| tmp.path().join(format!("{suite}{i}")))
            .collect();
        for dir in &dirs {
            let file =
                FileConfig::parse("[problem]\nseeds = [3, 4]\nn = 10\nm = 20\n").expect("config");
            let cli = Overrides {
                out: Some(dir.clone()),
                solvers: (suite == "bench").then(|| vec!["GD".into(), "RGB".into(), "IRGB".into()]),
                ..Default::default()
            };
            let s = if suite == "bench" {
                Suite::Bench
            } else {
                Suite::Lad
            };
            irg_cli::run_suite(s, &file, &cli).expect("suite");
        }
        let a = read_dir_bytes(&dirs[0]);
        let b = read_dir_bytes(&dirs[1]);
        files += a.len();
        if a != b {
            mismatches.push(suite);
        }
    }
    outcome(
        mismatches.is_empty(),
        format!("{files} artifacts compared, mismatching suites {mismatches:?}"),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("structural invariants", criterion_1),
        ("backtracking contract", criterion_2),
        ("gradient correctness", criterion_3),
        ("prox oracle equivalence", criterion_4),
        ("certified stopping soundness", criterion_5),
        ("KL linear rate", criterion_6),
        ("benchmark trend", criterion_7),
        ("LAD race trend", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        if !out.pass {
            failed += 1;
        }
        println!(
            "criterion {} {verdict} {name}: {} [{:.1}s]",
            i + 1,
            out.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

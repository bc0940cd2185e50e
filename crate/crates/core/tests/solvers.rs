use approx::assert_relative_eq;
use irg_core::baselines::{gd_backtracking_run, ippm_run, rg_run, IppmConfig};
use irg_core::benchmarks::{BenchmarkFunction, ExactOracle, NoisyOracle};
use irg_core::diagnostics::{run_diagnostics, DiagnosticOptions};
use irg_core::direction::run_irg;
use irg_core::lad::{generate_gaussian_instance, irg_lad_run, LadOptions, ProxSolver};
use irg_core::{Oracle, RunConfig, RunStatus, StopMode};

#[test]
fn all_benchmark_solvers_reach_tolerance() {
    for f in [
        BenchmarkFunction::DixonPrice(10),
        BenchmarkFunction::Rosenbrock(10),
    ] {
        let cfg = RunConfig::benchmark_defaults(1e-2);
        let exact = ExactOracle::new(f);
        let gd = gd_backtracking_run(&exact, f.start_point(), 0.7, 0.5, 1e-2, 100_000).unwrap();
        let rg = rg_run(&cfg, &exact, f.start_point()).unwrap();
        let irg = run_irg(&cfg, &mut NoisyOracle::new(f, 0), f.start_point(), "IRGB").unwrap();
        for t in [&gd, &rg, &irg] {
            assert_eq!(
                t.status,
                RunStatus::GradientTest,
                "{} on {}",
                t.solver,
                f.label()
            );
            let g = t.terminal.as_ref().unwrap().exact_grad_norm.unwrap();
            assert!(g <= 1e-2);
        }
    }
}

#[test]
fn diagnostics_pass_on_noisy_runs() {
    for seed in 0..4 {
        let f = BenchmarkFunction::Rosenbrock(4);
        let mut cfg = RunConfig::benchmark_defaults(1e-3);
        cfg.stopping.mode = StopMode::Certified;
        let trace = run_irg(
            &cfg,
            &mut NoisyOracle::new(f, seed),
            f.start_point(),
            "IRGB",
        )
        .unwrap();
        let exact = ExactOracle::new(f);
        let opts = DiagnosticOptions {
            nu: Some(1e-3),
            rate_reference: Some(f.minimizer()),
            ..Default::default()
        };
        let report = run_diagnostics(&trace, Some(&exact as &dyn Oracle), &opts).unwrap();
        assert!(report.all_passed(), "{report}");
    }
}

#[test]
fn lad_irg_and_ippm_agree_on_optimum() {
    let pb = generate_gaussian_instance(20, 10, 5).unwrap();
    let mut cfg = RunConfig::lad_defaults(5.0);
    cfg.stopping.nu = 1e-6;
    cfg.stopping.max_iterations = 5_000;
    let irg = irg_lad_run(&pb, &cfg, LadOptions::default(), "IRG-5").unwrap();
    let ippm = ippm_run(&pb, pb_zero(&pb), &IppmConfig::new(2.1, 200), "IPPM").unwrap();
    let a = irg.terminal.unwrap().fval;
    let b = ippm.terminal.unwrap().fval;
    assert_relative_eq!(a, b, max_relative = 1e-4);
}

fn pb_zero(pb: &irg_core::lad::LadProblem) -> irg_core::Point {
    irg_core::Point::zeros(pb.n())
}

#[test]
fn prox_warm_start_needs_no_more_work() {
    let pb = generate_gaussian_instance(15, 10, 7).unwrap();
    let solver = ProxSolver::new(&pb);
    let x = irg_core::Point::from_element(10, 0.3);
    let cold = solver.solve(&x, 1e-10, None).unwrap();
    let warm = solver.solve(&x, 1e-10, Some(&cold.dual.u)).unwrap();
    assert!(warm.inner_iters <= cold.inner_iters);
    assert!(warm.gap <= 1e-10);
}

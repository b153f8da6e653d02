//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and a final tally. Set `ACCEPTANCE_STRICT=1` to exit nonzero on any
//! failure.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use cssnmf::experiment::{run_experiment, ExperimentConfig, Method, SweepReport, SweepScenario};
use cssnmf::io::write_matrix;
use cssnmf::metrics::{capped_split_minimum, certificate, equal_split_minimum, kappa};
use cssnmf::solver::{
    fgm_solve, fgm_solve_observed, gradient, is_in_omega, objective, project_omega, PenaltyKind,
    SolverConfig,
};
use cssnmf::synth::{gen_example, ideal_self_dictionary, midpoint_noise_grid};
use cssnmf::{DenseMatrix, RngStream};

use common::Halfspace;

struct Check {
    pass: bool,
    detail: String,
}

impl Check {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Check {
            pass,
            detail: detail.into(),
        }
    }
}

/// Files produced by a run, keyed by relative path, for the
/// reproducibility check.
type Artifacts = BTreeMap<String, Vec<u8>>;

fn collect(dir: &Path, prefix: &str, out: &mut Artifacts) {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    for p in entries {
        let name = format!("{prefix}{}", p.file_name().unwrap().to_string_lossy());
        if p.is_dir() {
            collect(&p, &format!("{name}/"), out);
        } else if p.file_name().unwrap() != "timings.csv" {
            out.insert(name, fs::read(&p).unwrap());
        }
    }
}

fn save_sweep(report: &SweepReport, dir: &Path, tag: &str, out: &mut Artifacts) {
    let d = dir.join(tag);
    report.save(&d).unwrap();
    collect(&d, &format!("{tag}/"), out);
}

fn example_one(dir: &Path, out: &mut Artifacts) -> Check {
    let inst = gen_example(1, 20).unwrap();
    let k = kappa(&inst.w_true).unwrap();
    if !(k > 0.1) {
        return Check::new(false, format!("kappa(W) = {k:.3} is not above 0.1"));
    }
    let nf = inst.m.frobenius_norm_sq();
    let cfg = SolverConfig::new(1e-2 * nf)
        .with_maxiter(5000)
        .with_restart_period(200)
        .with_mu_continuation(1e-6 * nf, 0.7);
    let start = Instant::now();
    let res = fgm_solve(&inst.m, &cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let target = ideal_self_dictionary(&inst.h_true, &inst.pure_sets);
    let err = res.x.max_abs_diff(&target);
    write_matrix(dir.join("example_X.csv"), &res.x).unwrap();
    out.insert(
        "example_X.csv".into(),
        fs::read(dir.join("example_X.csv")).unwrap(),
    );
    Check::new(
        err <= 1e-2 && secs < 5.0,
        format!(
            "kappa {k:.3}, max |X - X*| = {err:.2e}, final mu {:.2e}, {secs:.2}s",
            res.final_mu
        ),
    )
}

/// Sweep settings shared by the synthetic criteria: oracle-size selection
/// and the trace target `r`.
fn sweep(scenario: SweepScenario, trials: usize, methods: Vec<Method>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(scenario);
    cfg.trials = trials;
    cfg.seed = 2024;
    cfg.methods = methods;
    cfg
}

fn dirichlet(dir: &Path, out: &mut Artifacts) -> Check {
    let mut cfg = sweep(SweepScenario::Dirichlet, 20, vec![Method::Cssnmf]);
    cfg.noise_grid = Some(vec![1e-5]);
    cfg.solver.target_trace = Some(cfg.dirichlet.r as f64);
    let start = Instant::now();
    let report = run_experiment(&cfg, 0).unwrap();
    let secs = start.elapsed().as_secs_f64();
    save_sweep(&report, dir, "dirichlet", out);
    let row = report.aggregate(1e-5, Method::Cssnmf).unwrap();
    Check::new(
        row.failed == 0 && row.accuracy >= 0.99 && row.d_w <= 1e-2 && secs < 180.0,
        format!(
            "accuracy {:.4}, d_W {:.2e}, {} failed, {secs:.1}s",
            row.accuracy, row.d_w, row.failed
        ),
    )
}

fn midpoints(dir: &Path, out: &mut Artifacts) -> Check {
    let mut cfg = sweep(
        SweepScenario::Midpoints,
        10,
        vec![Method::Cssnmf, Method::Spa],
    );
    cfg.solver.target_trace = Some(cfg.midpoints.r as f64);
    let levels = midpoint_noise_grid();
    let start = Instant::now();
    let report = run_experiment(&cfg, 0).unwrap();
    let secs = start.elapsed().as_secs_f64();
    save_sweep(&report, dir, "midpoints", out);
    let mut pass = secs < 300.0;
    let mut parts = Vec::new();
    let top = *levels.last().unwrap();
    for &eps in &levels {
        let c = report.aggregate(eps, Method::Cssnmf).unwrap();
        let s = report.aggregate(eps, Method::Spa).unwrap();
        pass &= c.failed == 0 && s.failed == 0 && c.accuracy == 1.0;
        if eps < 0.1 {
            pass &= s.accuracy == 1.0;
        }
        if eps == top {
            pass &= s.accuracy < c.accuracy;
        }
        parts.push(format!(
            "eps {eps:.3}: cssnmf {:.3} spa {:.3}",
            c.accuracy, s.accuracy
        ));
    }
    Check::new(pass, format!("{}; {secs:.1}s", parts.join(", ")))
}

fn outliers(dir: &Path, out: &mut Artifacts) -> Check {
    let mut cfg = sweep(
        SweepScenario::Outliers,
        10,
        vec![Method::CssnmfMean, Method::CssnmfMedian],
    );
    cfg.solver.target_trace = Some(cfg.outliers.r as f64);
    let start = Instant::now();
    let report = run_experiment(&cfg, 0).unwrap();
    let secs = start.elapsed().as_secs_f64();
    save_sweep(&report, dir, "outliers", out);
    let mut pass = secs < 300.0;
    let mut worst_best = 0.0f64;
    let mut worst_avg = 0.0f64;
    let mut mean_curve = Vec::new();
    for ell in 1..=15 {
        let l = ell as f64;
        let best = report.best_row(l, Method::CssnmfMedian).unwrap();
        let avg = report.aggregate(l, Method::CssnmfMedian).unwrap();
        pass &= best.failed == 0 && best.d_w <= 1e-8;
        worst_best = worst_best.max(best.d_w);
        if ell <= 9 {
            pass &= avg.d_w <= 1e-8;
            worst_avg = worst_avg.max(avg.d_w);
        }
        let mean = report.aggregate(l, Method::CssnmfMean).unwrap();
        pass &= mean.failed == 0;
        mean_curve.push(mean.d_w);
    }
    let rho = common::spearman_vs_index(&mean_curve);
    pass &= rho > 0.9;
    Check::new(
        pass,
        format!(
            "median best d_W max {worst_best:.1e}, median avg d_W (ell <= 9) max {worst_avg:.1e}, \
             mean-aggregation Spearman {rho:.3}; {secs:.1}s"
        ),
    )
}

fn lemmas() -> Check {
    let mut rng = RngStream::new(5);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = 2 + rng.below(9);
        let alpha = rng.uniform_range(0.5, 2.0);
        let beta = rng.uniform_range(0.0, alpha / p as f64);
        let mut cons: Vec<Halfspace> = (0..p)
            .map(|i| {
                let mut a = vec![0.0; p];
                a[i] = -1.0;
                Halfspace { a, b: 0.0 }
            })
            .collect();
        cons.push(Halfspace {
            a: vec![-1.0; p],
            b: -alpha,
        });
        let (xs, fs) = equal_split_minimum(alpha, p);
        let x = common::projected_gradient_sum_squares(p, &cons, 10_000);
        let f: f64 = x.iter().map(|v| v * v).sum();
        worst = worst.max((f - fs).abs());
        worst = x.iter().fold(worst, |w, v| w.max((v - xs).abs()));

        let mut a = vec![0.0; p];
        a[0] = 1.0;
        cons.push(Halfspace { a, b: beta });
        let x = common::projected_gradient_sum_squares(p, &cons, 10_000);
        let f: f64 = x.iter().map(|v| v * v).sum();
        worst = worst.max((f - capped_split_minimum(alpha, beta, p)).abs());
    }
    Check::new(
        worst <= 1e-6,
        format!("largest deviation {worst:.1e} over 100 triples"),
    )
}

fn solver_suite() -> Check {
    let mut rng = RngStream::new(11);
    let mut grad_err: f64 = 0.0;
    for k in 0..20 {
        let m = common::random_matrix(&mut rng, 6, 6);
        let x = common::random_matrix(&mut rng, 6, 6);
        let penalty = if k % 2 == 0 {
            PenaltyKind::SquaredDiag
        } else {
            PenaltyKind::Trace
        };
        let mu = rng.uniform_range(0.01, 1.0);
        let g = gradient(&m, &x, mu, penalty).unwrap();
        let fd = common::fd_gradient(&m, &x, mu, penalty, 1e-5);
        grad_err = grad_err.max(g.sub(&fd).frobenius_norm() / fd.frobenius_norm());
    }

    let mut proj_err: f64 = 0.0;
    for _ in 0..10 {
        let y = DenseMatrix::from_fn(5, 5, |_, _| rng.uniform_range(-0.5, 1.5));
        let w: Vec<f64> = (0..5).map(|_| rng.uniform_range(0.2, 2.0)).collect();
        let x = project_omega(&y, &w).unwrap();
        for i in 0..5 {
            let row: Vec<f64> = (0..5).map(|j| y[(i, j)]).collect();
            let o = common::active_set_projection(&row, &common::omega_row_constraints(i, &w));
            for j in 0..5 {
                proj_err = proj_err.max((x[(i, j)] - o[j]).abs());
            }
        }
    }

    let mut outside = 0usize;
    let mut iterates = 0usize;
    let mut rises = 0usize;
    for k in 0..5 {
        let m = common::random_matrix(&mut rng, 8, 12);
        let w = m.col_l1_norms();
        let mu = 0.1 * m.frobenius_norm_sq() / 12.0;
        let cfg = SolverConfig::new(mu).with_maxiter(300);
        fgm_solve_observed(&m, &cfg, |_, x| {
            iterates += 1;
            if !is_in_omega(x, &w, 1e-10) {
                outside += 1;
            }
        })
        .unwrap();
        let mono = SolverConfig::new(mu)
            .with_maxiter(300)
            .with_restart_period(1);
        let penalty = if k % 2 == 0 {
            PenaltyKind::SquaredDiag
        } else {
            PenaltyKind::Trace
        };
        let res = fgm_solve(&m, &mono.with_penalty(penalty)).unwrap();
        let t = &res.objective_trace;
        rises += t.windows(2).filter(|p| p[1] > p[0] * (1.0 + 1e-12)).count();
        let last = objective(&m, &res.x, mu, penalty).unwrap();
        if (last - t[t.len() - 1]).abs() > 1e-9 * last.abs().max(1.0) {
            rises += 1;
        }
    }
    Check::new(
        grad_err <= 1e-5 && proj_err <= 1e-8 && outside == 0 && rises == 0,
        format!(
            "gradient rel err {grad_err:.1e}, projection err {proj_err:.1e}, \
             {outside}/{iterates} iterates outside the feasible set, {rises} objective increases"
        ),
    )
}

/// Instance with ℓ1-normalized `W` (30×3), three pure columns per class
/// and 21 mixtures with coefficients at most 1/2. Returns `(W, H, S)`.
fn theorem_instance(rng: &mut RngStream) -> (DenseMatrix, DenseMatrix, Vec<Vec<usize>>) {
    let (m, r, p, mixed) = (30, 3, 3, 21);
    let raw = common::random_matrix(rng, m, r);
    let nrm = raw.col_l1_norms();
    let w = DenseMatrix::from_fn(m, r, |i, j| raw[(i, j)] / nrm[j]);
    let mut cols = Vec::new();
    for t in 0..r {
        for _ in 0..p {
            let mut c = vec![0.0; r];
            c[t] = 1.0;
            cols.push(c);
        }
    }
    while cols.len() < r * p + mixed {
        let c = rng.dirichlet(1.0, r);
        if c.iter().all(|&v| v <= 0.5) {
            cols.push(c);
        }
    }
    let h = DenseMatrix::from_columns(&cols).unwrap();
    let sets = (0..r).map(|t| (t * p..(t + 1) * p).collect()).collect();
    (w, h, sets)
}

fn theorems() -> Check {
    let mut ok6 = 0;
    let mut ok8 = 0;
    for s in 0..20 {
        let mut rng = RngStream::substream(77, s);
        let (w, h, sets) = theorem_instance(&mut rng);
        let thresholds = certificate(&w, &h, &sets, 0.0).unwrap();
        let pure: Vec<usize> = sets.iter().flatten().copied().collect();
        for thm8 in [false, true] {
            let eps = 0.5
                * if thm8 {
                    thresholds.thm8_threshold
                } else {
                    thresholds.thm6_threshold
                };
            // Column noise with ‖N(:,j)‖₁ = ε before clipping.
            let m0 = w.matmul(&h);
            let mut m = m0.clone();
            for j in 0..m.cols() {
                let g: Vec<f64> = (0..m.rows()).map(|_| rng.normal()).collect();
                let l1: f64 = g.iter().map(|v| v.abs()).sum();
                for i in 0..m.rows() {
                    m[(i, j)] = (m0[(i, j)] + eps * g[i] / l1).max(0.0);
                }
            }
            let cert = certificate(&w, &h, &sets, eps).unwrap();
            let nf = m.frobenius_norm_sq();
            let cfg = SolverConfig::new(1e-2 * nf)
                .with_maxiter(5000)
                .with_restart_period(200)
                .with_mu_continuation(1e-4 * nf, 0.7);
            let x = fgm_solve(&m, &cfg).unwrap().x;
            if thm8 {
                ok8 += usize::from(cert.thm8_set(&x) == pure);
            } else {
                let set = cert.thm6_set(&x);
                let covers = sets.iter().all(|st| st.iter().any(|j| set.contains(j)));
                let clean = set.iter().all(|j| pure.contains(j));
                ok6 += usize::from(covers && clean);
            }
        }
    }
    Check::new(
        ok6 == 20 && ok8 == 20,
        format!("first certificate holds on {ok6}/20, second on {ok8}/20"),
    )
}

fn main() {
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let mut runs = [Artifacts::new(), Artifacts::new()];

    let mut results: Vec<(usize, &str, Check, Duration)> = Vec::new();
    let mut record = |n: usize, name: &'static str, f: &mut dyn FnMut() -> Check| {
        let start = Instant::now();
        let c = f();
        let took = start.elapsed();
        println!(
            "criterion {n} [{name}]: {} — {} ({:.1}s)",
            if c.pass { "PASS" } else { "FAIL" },
            c.detail,
            took.as_secs_f64()
        );
        results.push((n, name, c, took));
    };

    let [a, b] = &mut runs;
    record(1, "example", &mut || example_one(first.path(), a));
    record(2, "dirichlet", &mut || dirichlet(first.path(), a));
    record(3, "midpoints", &mut || midpoints(first.path(), a));
    record(4, "outliers", &mut || outliers(first.path(), a));
    record(5, "lemmas", &mut || lemmas());
    record(6, "solver", &mut || solver_suite());
    record(7, "theorems", &mut || theorems());
    record(8, "reproducibility", &mut || {
        example_one(second.path(), b);
        dirichlet(second.path(), b);
        midpoints(second.path(), b);
        outliers(second.path(), b);
        let differing: Vec<&String> = a
            .iter()
            .filter(|(k, v)| b.get(*k) != Some(v))
            .map(|(k, _)| k)
            .collect();
        Check::new(
            differing.is_empty() && a.len() == b.len() && !a.is_empty(),
            format!(
                "{} files compared, {} differ {:?}",
                a.len(),
                differing.len(),
                differing
            ),
        )
    });

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria pass{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failing: {failed:?}")
        }
    );
    if strict && !failed.is_empty() {
        std::process::exit(1);
    }
}

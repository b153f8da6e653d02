use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use cssnmf::baselines::{fgnsr_baseline, spa, sspa, NplpPolicy, SspaConfig};
use cssnmf::experiment::{run_experiment, ExperimentConfig, Method, SolverOverrides};
use cssnmf::io::{read_indices, read_matrix, write_indices, write_matrix, write_text};
use cssnmf::metrics::{evaluate_basis, MetricsReport};
use cssnmf::postprocess::{
    cssnmf_pipeline, nnls_cd, AggregationRule, PostprocessConfig, RowScore, SelectionRule,
};
use cssnmf::synth::{
    gen_dirichlet, gen_example, gen_midpoints, gen_outliers, DirichletParams, MidpointParams,
    OutlierParams, SyntheticInstance,
};
use cssnmf::{CssnmfError, DenseMatrix, Result};

#[derive(Parser)]
#[command(name = "cssnmf", version, about = "Convex smooth-separable NMF")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance directory.
    Synth(SynthArgs),
    /// Factorize a matrix with CSSNMF or a baseline.
    Solve(SolveArgs),
    /// Run a sweep described by a JSON config.
    Experiment(ExperimentArgs),
    /// Recompute quality metrics of a saved solution.
    Metrics(MetricsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthScenario {
    Dirichlet,
    Midpoints,
    Outliers,
    Example,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    scenario: SynthScenario,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Noise level (dirichlet, midpoints).
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    /// Number of outliers (outliers).
    #[arg(long)]
    ell: Option<usize>,
    /// Row dimension.
    #[arg(long)]
    m: Option<usize>,
    /// Number of components.
    #[arg(long)]
    r: Option<usize>,
    /// Pure columns per component.
    #[arg(long)]
    p: Option<usize>,
    /// Mixed columns (dirichlet).
    #[arg(long)]
    mixed: Option<usize>,
    /// Dirichlet concentration.
    #[arg(long)]
    alpha: Option<f64>,
    /// Output directory; defaults to `<scenario>-<seed>`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance directory or matrix CSV.
    #[arg(long)]
    input: PathBuf,
    /// JSON file with solve settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    r: Option<usize>,
    /// cssnmf, spa, sspa_min, sspa_mid, sspa_mean or fgnsr.
    #[arg(long)]
    method: Option<String>,
    /// Keep the `p` rows of `X` with the largest scores.
    #[arg(long, conflicts_with = "threshold")]
    p: Option<usize>,
    /// Keep rows whose score reaches this value.
    #[arg(long)]
    threshold: Option<f64>,
    /// mean or median.
    #[arg(long)]
    agg: Option<String>,
    /// row-l1 or diagonal.
    #[arg(long)]
    score: Option<String>,
    /// A number for a fixed μ, or `auto` to steer it toward the trace target.
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    target_trace: Option<f64>,
    #[arg(long)]
    maxiter: Option<usize>,
    #[arg(long)]
    restart_period: Option<usize>,
    /// Seed of the clustering step.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write `X.csv`.
    #[arg(long)]
    save_x: bool,
    #[arg(long, default_value = "solution")]
    out: PathBuf,
}

#[derive(Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SolveFile {
    r: Option<usize>,
    method: Option<Method>,
    selection: Option<SelectionRule>,
    score: Option<RowScore>,
    aggregation: Option<AggregationRule>,
    seed: Option<u64>,
    solver: SolverOverrides,
    save_x: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON sweep config.
    config: PathBuf,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated method names.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Worker threads; overrides CSSNMF_THREADS. 0 uses every core.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct MetricsArgs {
    /// Instance directory written by `synth`.
    #[arg(long)]
    instance: PathBuf,
    /// Solution directory written by `solve`.
    #[arg(long)]
    solution: PathBuf,
    /// Method name recorded in the report.
    #[arg(long, default_value = "cssnmf")]
    method: String,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Metrics(a) => cmd_metrics(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn invalid(msg: impl Into<String>) -> CssnmfError {
    CssnmfError::InvalidArgument(msg.into())
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let inst = match a.scenario {
        SynthScenario::Dirichlet => {
            let d = DirichletParams::default();
            gen_dirichlet(
                a.seed,
                &DirichletParams {
                    m: a.m.unwrap_or(d.m),
                    r: a.r.unwrap_or(d.r),
                    p: a.p.unwrap_or(d.p),
                    mixed: a.mixed.unwrap_or(d.mixed),
                    alpha: a.alpha.unwrap_or(d.alpha),
                    eps: a.eps,
                },
            )?
        }
        SynthScenario::Midpoints => {
            let d = MidpointParams::default();
            gen_midpoints(
                a.seed,
                &MidpointParams {
                    m: a.m.unwrap_or(d.m),
                    r: a.r.unwrap_or(d.r),
                    p: a.p.unwrap_or(d.p),
                    eps: a.eps,
                },
            )?
        }
        SynthScenario::Outliers => {
            let d = OutlierParams::default();
            gen_outliers(
                a.seed,
                &OutlierParams {
                    m: a.m.unwrap_or(d.m),
                    r: a.r.unwrap_or(d.r),
                    p: a.p.unwrap_or(d.p),
                    ell: a.ell.unwrap_or(d.ell),
                },
            )?
        }
        SynthScenario::Example => gen_example(a.seed, a.m.unwrap_or(20))?,
    };
    let out = a
        .out
        .unwrap_or_else(|| PathBuf::from(format!("{}-{}", inst.scenario.name(), a.seed)));
    inst.save(&out)?;
    println!(
        "{}: M is {}x{}, r = {}",
        out.display(),
        inst.m.rows(),
        inst.m.cols(),
        inst.rank()
    );
    Ok(())
}

fn read_input(path: &Path) -> Result<DenseMatrix> {
    if path.is_dir() {
        read_matrix(path.join("M.csv"))
    } else {
        read_matrix(path)
    }
}

fn parse_agg(s: &str) -> Result<AggregationRule> {
    match s {
        "mean" => Ok(AggregationRule::Mean),
        "median" => Ok(AggregationRule::Median),
        _ => Err(invalid(format!("unknown aggregation {s:?}"))),
    }
}

fn parse_score(s: &str) -> Result<RowScore> {
    match s {
        "row-l1" | "row_l1" => Ok(RowScore::RowL1),
        "diagonal" => Ok(RowScore::Diagonal),
        _ => Err(invalid(format!("unknown row score {s:?}"))),
    }
}

fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CssnmfError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn cmd_solve(a: SolveArgs) -> Result<()> {
    let file: SolveFile = match &a.config {
        Some(p) => load_json(p)?,
        None => SolveFile::default(),
    };
    let m = read_input(&a.input)?;
    let r =
        a.r.or(file.r)
            .ok_or_else(|| invalid("the number of components --r is required"))?;
    let method = match &a.method {
        Some(s) => Method::parse(s)?,
        None => file.method.unwrap_or(Method::Cssnmf),
    };
    let mut solver = file.solver.clone();
    if let Some(mu) = &a.mu {
        if mu == "auto" {
            solver.mu = None;
            solver.fixed_mu = false;
        } else {
            let v: f64 = mu
                .parse()
                .map_err(|_| invalid(format!("--mu expects a number or `auto`, got {mu:?}")))?;
            solver.mu = Some(v);
            solver.fixed_mu = a.target_trace.is_none();
        }
    }
    if a.target_trace.is_some() {
        solver.target_trace = a.target_trace;
    }
    if a.maxiter.is_some() {
        solver.maxiter = a.maxiter;
    }
    if a.restart_period.is_some() {
        solver.restart_period = a.restart_period;
    }
    let aggregation = match &a.agg {
        Some(s) => parse_agg(s)?,
        None => file.aggregation.unwrap_or_default(),
    };
    let selection = match (a.p, a.threshold) {
        (Some(p), _) => SelectionRule::TopP(p),
        (None, Some(d)) => SelectionRule::Threshold(d),
        _ => file.selection.unwrap_or(SelectionRule::Threshold(0.5)),
    };
    let score = match &a.score {
        Some(s) => parse_score(s)?,
        None => file.score.unwrap_or_default(),
    };
    let seed = a.seed.or(file.seed).unwrap_or(0);
    let save_x = a.save_x || file.save_x;
    let out = &a.out;
    std::fs::create_dir_all(out).map_err(|e| CssnmfError::io(out, e))?;

    let start = Instant::now();
    match method {
        Method::Cssnmf | Method::CssnmfMean | Method::CssnmfMedian => {
            let aggregation = match method {
                Method::CssnmfMean => AggregationRule::Mean,
                Method::CssnmfMedian => AggregationRule::Median,
                _ => aggregation,
            };
            let mut post = PostprocessConfig::new(r, selection, aggregation).with_seed(seed);
            post.score = score;
            let res = cssnmf_pipeline(&m, &solver.cssnmf(&m, r), &post)?;
            res.save(out, save_x)?;
            let s = res.summary();
            println!(
                "residual {} | final mu {} | tr(X) {} | {} iterations",
                s.residual, s.final_mu, s.trace_x, s.iterations
            );
        }
        _ => {
            let (k, labels, w, x) = run_baseline(&m, r, method, &solver)?;
            let h = nnls_cd(&m, &w, 1e-12, 2000)?;
            let residual = m.sub(&w.matmul(&h)).frobenius_norm();
            write_indices(out.join("K.csv"), &k)?;
            write_indices(out.join("labels.csv"), &labels)?;
            write_matrix(out.join("W.csv"), &w)?;
            write_matrix(out.join("H.csv"), &h)?;
            if let (true, Some(x)) = (save_x, &x) {
                write_matrix(out.join("X.csv"), x)?;
            }
            let summary = serde_json::json!({
                "method": method.name(),
                "residual": residual,
            });
            write_text(
                out.join("summary.json"),
                &serde_json::to_string_pretty(&summary)?,
            )?;
            println!("residual {residual} | columns {k:?}");
        }
    }
    let timing = serde_json::json!({ "runtime_ms": start.elapsed().as_secs_f64() * 1e3 });
    write_text(
        out.join("timing.json"),
        &serde_json::to_string_pretty(&timing)?,
    )?;
    Ok(())
}

type Baseline = (Vec<usize>, Vec<usize>, DenseMatrix, Option<DenseMatrix>);

fn run_baseline(
    m: &DenseMatrix,
    r: usize,
    method: Method,
    solver: &SolverOverrides,
) -> Result<Baseline> {
    match method {
        Method::Spa => {
            let k = spa(m, r)?;
            Ok((k.clone(), (0..r).collect(), m.select_columns(&k), None))
        }
        Method::Fgnsr => {
            let res = fgnsr_baseline(m, r, &solver.fgnsr(m, r))?;
            let w = m.select_columns(&res.indices);
            Ok((res.indices, (0..r).collect(), w, Some(res.solve.x)))
        }
        _ => {
            // Without ground truth the class sizes are unknown; assume the
            // columns split evenly.
            let policy = match method {
                Method::SspaMin => NplpPolicy::Min,
                Method::SspaMid => NplpPolicy::Mid,
                _ => NplpPolicy::Mean,
            };
            let nplp = policy.nplp(&vec![(m.cols() / r).max(1); r]).min(m.cols());
            let res = sspa(
                m,
                r,
                &SspaConfig {
                    nplp,
                    aggregation: AggregationRule::Mean,
                },
            )?;
            let mut k = Vec::new();
            let mut labels = Vec::new();
            for (t, c) in res.clusters.iter().enumerate() {
                k.extend_from_slice(c);
                labels.extend(std::iter::repeat(t).take(c.len()));
            }
            Ok((k, labels, res.w, None))
        }
    }
}

fn cmd_experiment(a: ExperimentArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(d) = a.output_dir {
        cfg.output_dir = Some(d);
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(ms) = &a.methods {
        cfg.methods = ms.iter().map(|s| Method::parse(s)).collect::<Result<_>>()?;
    }
    cfg.validate()?;
    let threads = match a.threads {
        Some(t) => t,
        None => match std::env::var("CSSNMF_THREADS") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| invalid(format!("CSSNMF_THREADS must be a count, got {v:?}")))?,
            Err(_) => 0,
        },
    };
    let out = cfg
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("experiment-out"));
    let report = run_experiment(&cfg, threads)?;
    report.save(&out)?;
    let failed = report.rows.iter().filter(|r| r.outcome.is_err()).count();
    println!(
        "{}: {} rows, {} failed",
        out.display(),
        report.rows.len(),
        failed
    );
    Ok(())
}

fn cmd_metrics(a: MetricsArgs) -> Result<()> {
    let inst = SyntheticInstance::load(&a.instance)?;
    let w = read_matrix(a.solution.join("W.csv"))?;
    if w.cols() != inst.rank() {
        return Err(CssnmfError::Dimension(format!(
            "W has {} columns but the instance has rank {}",
            w.cols(),
            inst.rank()
        )));
    }
    // Sanity check that the solution belongs to this matrix.
    if let Ok(k) = read_indices(a.solution.join("K.csv")) {
        if k.iter().any(|&j| j >= inst.m.cols()) {
            return Err(CssnmfError::Dimension(
                "K.csv refers to columns outside M".into(),
            ));
        }
    }
    let (accuracy, d_w, rel_error) =
        evaluate_basis(&inst.m, &w, &inst.w_true, &inst.labels, &inst.j0)?;
    let report = MetricsReport {
        scenario: inst.scenario.name().to_string(),
        seed: inst.seed,
        eps: inst.epsilon,
        method: a.method,
        accuracy,
        d_w,
        rel_error,
        runtime_ms: None,
    };
    let text = serde_json::to_string_pretty(&report)?;
    if let Some(p) = &a.out {
        write_text(p, &text)?;
    }
    println!("{text}");
    Ok(())
}

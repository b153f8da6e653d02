//! Noise and outlier sweeps over the synthetic families.
//!
//! Every `(level, trial)` pair draws its instance from its own RNG
//! sub-stream, so adding trials or levels never changes the others. All
//! methods run on the same instance. Result files hold no timing data and
//! are byte-identical across runs; wall-clock times go to `timings.csv`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{fgnsr_baseline, fgnsr_config, spa, sspa, NplpPolicy, SspaConfig};
use crate::error::{CssnmfError, Result};
use crate::io::{format_value, write_text};
use crate::matrix::DenseMatrix;
use crate::metrics::evaluate_basis;
use crate::postprocess::{
    postprocess, AggregationRule, PostprocessConfig, RowScore, SelectionRule,
};
use crate::rng::RngStream;
use crate::solver::{fgm_solve, MuControlConfig, MuStatistic, SolverConfig, SolverResult};
use crate::synth::{
    dirichlet_noise_grid, gen_dirichlet_from, gen_midpoints_from, gen_outliers_from,
    midpoint_noise_grid, DirichletParams, MidpointParams, OutlierParams, SyntheticInstance,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepScenario {
    Dirichlet,
    Midpoints,
    Outliers,
    /// A saved instance directory, evaluated once per trial.
    File,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// CSSNMF with the configured aggregation.
    #[serde(rename = "cssnmf")]
    Cssnmf,
    #[serde(rename = "cssnmf-mean")]
    CssnmfMean,
    #[serde(rename = "cssnmf-median")]
    CssnmfMedian,
    #[serde(rename = "spa")]
    Spa,
    #[serde(rename = "sspa_min")]
    SspaMin,
    #[serde(rename = "sspa_mid")]
    SspaMid,
    #[serde(rename = "sspa_mean")]
    SspaMean,
    #[serde(rename = "fgnsr")]
    Fgnsr,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Cssnmf => "cssnmf",
            Method::CssnmfMean => "cssnmf-mean",
            Method::CssnmfMedian => "cssnmf-median",
            Method::Spa => "spa",
            Method::SspaMin => "sspa_min",
            Method::SspaMid => "sspa_mid",
            Method::SspaMean => "sspa_mean",
            Method::Fgnsr => "fgnsr",
        }
    }

    pub fn parse(s: &str) -> Result<Method> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| CssnmfError::InvalidArgument(format!("unknown method {s:?}")))
    }

    /// The six methods compared on the noise sweeps.
    pub fn standard() -> Vec<Method> {
        vec![
            Method::Cssnmf,
            Method::Spa,
            Method::SspaMin,
            Method::SspaMid,
            Method::SspaMean,
            Method::Fgnsr,
        ]
    }

    fn uses_cssnmf(self) -> bool {
        matches!(
            self,
            Method::Cssnmf | Method::CssnmfMean | Method::CssnmfMedian
        )
    }
}

/// How many rows of `X` CSSNMF keeps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionSpec {
    /// Number of pure columns plus outliers of the instance.
    #[default]
    Oracle,
    TopP(usize),
    Threshold(f64),
}

impl SelectionSpec {
    pub fn resolve(self, inst: &SyntheticInstance) -> SelectionRule {
        match self {
            SelectionSpec::Oracle => SelectionRule::TopP(inst.ideal_selection_size()),
            SelectionSpec::TopP(p) => SelectionRule::TopP(p),
            SelectionSpec::Threshold(d) => SelectionRule::Threshold(d),
        }
    }
}

/// Solver settings for a sweep; unset fields take the sweep defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOverrides {
    /// Initial μ; default `0.1 ‖M‖_F² / n`.
    pub mu: Option<f64>,
    pub maxiter: Option<usize>,
    pub restart_period: Option<usize>,
    pub alpha0: Option<f64>,
    pub lipschitz_safety: Option<f64>,
    /// Trace target of the μ controller; default `r/2 + 1`.
    pub target_trace: Option<f64>,
    pub statistic: Option<MuStatistic>,
    pub sigma0: Option<f64>,
    pub adjust_every: Option<usize>,
    /// Keep μ fixed instead of steering it.
    pub fixed_mu: bool,
}

impl SolverOverrides {
    fn base(&self, m: &DenseMatrix) -> SolverConfig {
        let mu = self.mu.unwrap_or_else(|| default_mu(m));
        let mut cfg = SolverConfig::new(mu);
        if let Some(v) = self.maxiter {
            cfg.maxiter = v;
        }
        if let Some(v) = self.restart_period {
            cfg.restart_period = v;
        }
        if let Some(v) = self.alpha0 {
            cfg.alpha0 = v;
        }
        if let Some(v) = self.lipschitz_safety {
            cfg.lipschitz_safety = v;
        }
        cfg
    }

    fn control(&self, default_target: f64) -> MuControlConfig {
        let mut c = MuControlConfig::diagonal(self.target_trace.unwrap_or(default_target));
        if let Some(s) = self.statistic {
            c.statistic = s;
        }
        if let Some(s) = self.sigma0 {
            c.sigma0 = s;
        }
        if let Some(a) = self.adjust_every {
            c.adjust_every = a;
        }
        c
    }

    /// CSSNMF solver settings for an input with rank `r`.
    pub fn cssnmf(&self, m: &DenseMatrix, r: usize) -> SolverConfig {
        let cfg = self.base(m);
        if self.fixed_mu {
            cfg
        } else {
            cfg.with_mu_control(self.control(r as f64 / 2.0 + 1.0))
        }
    }

    /// FGNSR settings: trace penalty, μ steered toward `tr(X) = r`.
    pub fn fgnsr(&self, m: &DenseMatrix, r: usize) -> SolverConfig {
        let mut cfg = fgnsr_config(m, r);
        let base = self.base(m);
        cfg.maxiter = base.maxiter;
        cfg.restart_period = base.restart_period;
        cfg.alpha0 = base.alpha0;
        cfg.lipschitz_safety = base.lipschitz_safety;
        if let Some(mu) = self.mu {
            cfg.mu = mu;
        }
        if self.fixed_mu {
            cfg.mu_control = None;
        } else {
            let mut c = self.control(r as f64);
            c.target = r as f64;
            c.statistic = MuStatistic::Diagonal;
            cfg.mu_control = Some(c);
        }
        cfg
    }
}

/// `0.1 ‖M‖_F² / n`, the starting μ used when none is given.
pub fn default_mu(m: &DenseMatrix) -> f64 {
    0.1 * m.frobenius_norm_sq() / m.cols().max(1) as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: SweepScenario,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Base seed; trial streams are derived from it.
    #[serde(default)]
    pub seed: u64,
    /// Noise levels; defaults to the scenario's standard grid.
    #[serde(default)]
    pub noise_grid: Option<Vec<f64>>,
    /// Outlier counts; defaults to `1..=15`.
    #[serde(default)]
    pub outlier_grid: Option<Vec<usize>>,
    #[serde(default = "Method::standard")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub solver: SolverOverrides,
    #[serde(default)]
    pub selection: SelectionSpec,
    #[serde(default)]
    pub score: RowScore,
    #[serde(default)]
    pub aggregation: AggregationRule,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Instance directory for the `file` scenario.
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub dirichlet: DirichletParams,
    #[serde(default)]
    pub midpoints: MidpointParams,
    #[serde(default)]
    pub outliers: OutlierParams,
}

fn default_trials() -> usize {
    1
}

impl ExperimentConfig {
    pub fn new(scenario: SweepScenario) -> Self {
        ExperimentConfig {
            scenario,
            trials: 1,
            seed: 0,
            noise_grid: None,
            outlier_grid: None,
            methods: Method::standard(),
            solver: SolverOverrides::default(),
            selection: SelectionSpec::Oracle,
            score: RowScore::RowL1,
            aggregation: AggregationRule::Mean,
            output_dir: None,
            input: None,
            dirichlet: DirichletParams::default(),
            midpoints: MidpointParams::default(),
            outliers: OutlierParams::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CssnmfError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CssnmfError::InvalidArgument(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("no methods selected".into());
        }
        if self.levels().is_empty() {
            return bad("the level grid is empty".into());
        }
        if let Some(g) = &self.noise_grid {
            if g.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
                return bad("noise levels must be finite and nonnegative".into());
            }
        }
        if let Some(g) = &self.outlier_grid {
            if g.contains(&0) {
                return bad("outlier counts must be positive".into());
            }
        }
        if self.scenario == SweepScenario::File && self.input.is_none() {
            return bad("the file scenario needs an input directory".into());
        }
        Ok(())
    }

    /// The x-axis of the sweep.
    pub fn levels(&self) -> Vec<f64> {
        match self.scenario {
            SweepScenario::Dirichlet => {
                self.noise_grid.clone().unwrap_or_else(dirichlet_noise_grid)
            }
            SweepScenario::Midpoints => self.noise_grid.clone().unwrap_or_else(midpoint_noise_grid),
            SweepScenario::Outliers => self
                .outlier_grid
                .clone()
                .unwrap_or_else(|| (1..=15).collect())
                .into_iter()
                .map(|l| l as f64)
                .collect(),
            SweepScenario::File => vec![0.0],
        }
    }

    fn level_name(&self) -> &'static str {
        match self.scenario {
            SweepScenario::Outliers => "ell",
            _ => "eps",
        }
    }

    /// Stream index of `(level, trial)`.
    pub fn stream(level: usize, trial: usize) -> u64 {
        ((level as u64) << 32) | trial as u64
    }

    /// The instance of `(level, trial)`.
    pub fn instance(&self, level: usize, trial: usize) -> Result<SyntheticInstance> {
        let levels = self.levels();
        let x = *levels
            .get(level)
            .ok_or_else(|| CssnmfError::InvalidArgument(format!("level {level} out of range")))?;
        let stream = Self::stream(level, trial);
        let mut rng = RngStream::substream(self.seed, stream);
        let mut inst = match self.scenario {
            SweepScenario::Dirichlet => gen_dirichlet_from(
                &mut rng,
                &DirichletParams {
                    eps: x,
                    ..self.dirichlet
                },
            )?,
            SweepScenario::Midpoints => gen_midpoints_from(
                &mut rng,
                &MidpointParams {
                    eps: x,
                    ..self.midpoints
                },
            )?,
            SweepScenario::Outliers => gen_outliers_from(
                &mut rng,
                &OutlierParams {
                    ell: x as usize,
                    ..self.outliers
                },
            )?,
            SweepScenario::File => {
                let dir = self.input.as_ref().expect("validated");
                return SyntheticInstance::load(dir);
            }
        };
        inst.seed = self.seed;
        inst.stream = stream;
        Ok(inst)
    }
}

/// Outcome of one method on one instance.
#[derive(Clone, Debug, PartialEq)]
pub struct RawRow {
    pub level: f64,
    pub trial: usize,
    pub stream: u64,
    pub method: Method,
    pub outcome: std::result::Result<(f64, f64, f64), String>,
    pub runtime_ms: f64,
}

/// Per `(level, method)` summary over the successful trials.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub level: f64,
    pub method: Method,
    pub accuracy: f64,
    pub d_w: f64,
    pub rel_error: f64,
    pub ok: usize,
    pub failed: usize,
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub config: ExperimentConfig,
    pub rows: Vec<RawRow>,
    /// Trial means.
    pub aggregates: Vec<AggregateRow>,
    /// Best over trials: largest accuracy, smallest errors.
    pub best: Vec<AggregateRow>,
}

/// Runs one trial of every configured method.
fn run_trial(cfg: &ExperimentConfig, level: usize, trial: usize) -> Vec<RawRow> {
    let levels = cfg.levels();
    let stream = ExperimentConfig::stream(level, trial);
    let inst = match cfg.instance(level, trial) {
        Ok(i) => i,
        Err(e) => {
            return cfg
                .methods
                .iter()
                .map(|&method| RawRow {
                    level: levels[level],
                    trial,
                    stream,
                    method,
                    outcome: Err(e.to_string()),
                    runtime_ms: 0.0,
                })
                .collect();
        }
    };
    let level_value = if cfg.scenario == SweepScenario::File {
        inst.epsilon
    } else {
        levels[level]
    };
    // The CSSNMF variants share one solve.
    let mut shared: Option<(std::result::Result<SolverResult, String>, f64)> = None;
    cfg.methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let mut extra_ms = 0.0;
            let basis = if method.uses_cssnmf() {
                if shared.is_none() {
                    let t = Instant::now();
                    let solve = fgm_solve(&inst.m, &cfg.solver.cssnmf(&inst.m, inst.rank()))
                        .map_err(|e| e.to_string());
                    shared = Some((solve, t.elapsed().as_secs_f64() * 1e3));
                } else {
                    extra_ms = shared.as_ref().map_or(0.0, |s| s.1);
                }
                let (solve, _) = shared.as_ref().expect("just set");
                let agg = match method {
                    Method::CssnmfMean => AggregationRule::Mean,
                    Method::CssnmfMedian => AggregationRule::Median,
                    _ => cfg.aggregation,
                };
                solve.clone().and_then(|s| {
                    let mut post =
                        PostprocessConfig::new(inst.rank(), cfg.selection.resolve(&inst), agg)
                            .with_seed(stream);
                    post.score = cfg.score;
                    postprocess(&inst.m, &s.x, &post)
                        .map(|sol| sol.w)
                        .map_err(|e| e.to_string())
                })
            } else {
                baseline_basis(cfg, method, &inst).map_err(|e| e.to_string())
            };
            let outcome = basis.and_then(|w| {
                evaluate_basis(&inst.m, &w, &inst.w_true, &inst.labels, &inst.j0)
                    .map_err(|e| e.to_string())
            });
            RawRow {
                level: level_value,
                trial,
                stream,
                method,
                outcome,
                runtime_ms: start.elapsed().as_secs_f64() * 1e3 + extra_ms,
            }
        })
        .collect()
}

fn baseline_basis(
    cfg: &ExperimentConfig,
    method: Method,
    inst: &SyntheticInstance,
) -> Result<DenseMatrix> {
    let r = inst.rank();
    let m = &inst.m;
    match method {
        Method::Spa => Ok(m.select_columns(&spa(m, r)?)),
        Method::SspaMin | Method::SspaMid | Method::SspaMean => {
            let policy = match method {
                Method::SspaMin => NplpPolicy::Min,
                Method::SspaMid => NplpPolicy::Mid,
                _ => NplpPolicy::Mean,
            };
            let nplp = policy.nplp(&inst.class_sizes()).min(m.cols());
            let cfg = SspaConfig {
                nplp,
                aggregation: AggregationRule::Mean,
            };
            Ok(sspa(m, r, &cfg)?.w)
        }
        Method::Fgnsr => {
            let res = fgnsr_baseline(m, r, &cfg.solver.fgnsr(m, r))?;
            Ok(m.select_columns(&res.indices))
        }
        Method::Cssnmf | Method::CssnmfMean | Method::CssnmfMedian => {
            unreachable!("handled by caller")
        }
    }
}

/// Runs the whole grid. `threads = 0` uses every core.
pub fn run_experiment(cfg: &ExperimentConfig, threads: usize) -> Result<SweepReport> {
    cfg.validate()?;
    let levels = cfg.levels();
    let jobs: Vec<(usize, usize)> = (0..levels.len())
        .flat_map(|l| (0..cfg.trials).map(move |t| (l, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CssnmfError::InvalidArgument(format!("thread pool: {e}")))?;
    let rows: Vec<RawRow> = pool.install(|| {
        jobs.par_iter()
            .map(|&(l, t)| run_trial(cfg, l, t))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    });
    let (aggregates, best) = summarize(
        &rows,
        &levels,
        &cfg.methods,
        cfg.scenario == SweepScenario::File,
    );
    Ok(SweepReport {
        config: cfg.clone(),
        rows,
        aggregates,
        best,
    })
}

fn summarize(
    rows: &[RawRow],
    levels: &[f64],
    methods: &[Method],
    single_level: bool,
) -> (Vec<AggregateRow>, Vec<AggregateRow>) {
    let mut means = Vec::new();
    let mut bests = Vec::new();
    for &level in levels {
        for &method in methods {
            let group: Vec<&RawRow> = rows
                .iter()
                .filter(|r| r.method == method)
                .filter(|r| single_level || r.level == level)
                .collect();
            let ok: Vec<(f64, f64, f64)> = group
                .iter()
                .filter_map(|r| r.outcome.clone().ok())
                .collect();
            let failed = group.len() - ok.len();
            let level_value = group.first().map_or(level, |r| r.level);
            let count = ok.len() as f64;
            let mean = |f: fn(&(f64, f64, f64)) -> f64| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(f).sum::<f64>() / count
                }
            };
            means.push(AggregateRow {
                level: level_value,
                method,
                accuracy: mean(|o| o.0),
                d_w: mean(|o| o.1),
                rel_error: mean(|o| o.2),
                ok: ok.len(),
                failed,
            });
            let pick = |f: fn(&(f64, f64, f64)) -> f64, largest: bool| {
                ok.iter().map(f).fold(f64::NAN, |a, b| {
                    if a.is_nan() || (largest && b > a) || (!largest && b < a) {
                        b
                    } else {
                        a
                    }
                })
            };
            bests.push(AggregateRow {
                level: level_value,
                method,
                accuracy: pick(|o| o.0, true),
                d_w: pick(|o| o.1, false),
                rel_error: pick(|o| o.2, false),
                ok: ok.len(),
                failed,
            });
        }
    }
    (means, bests)
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format_value(v)
    }
}

impl SweepReport {
    pub fn raw_csv(&self) -> String {
        let mut out = format!(
            "{},trial,seed,stream,method,accuracy,d_w,rel_error,status\n",
            self.config.level_name()
        );
        for r in &self.rows {
            let (a, d, e, status) = match &r.outcome {
                Ok((a, d, e)) => (fmt(*a), fmt(*d), fmt(*e), "ok".to_string()),
                Err(msg) => (
                    "nan".into(),
                    "nan".into(),
                    "nan".into(),
                    format!("error: {}", msg.replace([',', '\n'], ";")),
                ),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{a},{d},{e},{status}",
                fmt(r.level),
                r.trial,
                self.config.seed,
                r.stream,
                r.method.name()
            );
        }
        out
    }

    fn table_csv(&self, rows: &[AggregateRow]) -> String {
        let mut out = format!(
            "{},method,accuracy,d_w,rel_error,trials_ok,trials_failed\n",
            self.config.level_name()
        );
        for r in rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                fmt(r.level),
                r.method.name(),
                fmt(r.accuracy),
                fmt(r.d_w),
                fmt(r.rel_error),
                r.ok,
                r.failed
            );
        }
        out
    }

    pub fn aggregates_csv(&self) -> String {
        self.table_csv(&self.aggregates)
    }

    pub fn best_csv(&self) -> String {
        self.table_csv(&self.best)
    }

    /// `x` = level, one column per method.
    pub fn plot_csv(&self, rows: &[AggregateRow], metric: fn(&AggregateRow) -> f64) -> String {
        let methods = &self.config.methods;
        let mut out = String::from(self.config.level_name());
        for m in methods {
            out.push(',');
            out.push_str(m.name());
        }
        out.push('\n');
        for chunk in rows.chunks(methods.len()) {
            out.push_str(&fmt(chunk[0].level));
            for r in chunk {
                out.push(',');
                out.push_str(&fmt(metric(r)));
            }
            out.push('\n');
        }
        out
    }

    pub fn timings_csv(&self) -> String {
        let mut out = format!("{},trial,method,runtime_ms\n", self.config.level_name());
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{:.3}",
                fmt(r.level),
                r.trial,
                r.method.name(),
                r.runtime_ms
            );
        }
        out
    }

    /// Mean row of `method` at `level`.
    pub fn aggregate(&self, level: f64, method: Method) -> Option<&AggregateRow> {
        self.aggregates
            .iter()
            .find(|r| r.level == level && r.method == method)
    }

    pub fn best_row(&self, level: f64, method: Method) -> Option<&AggregateRow> {
        self.best
            .iter()
            .find(|r| r.level == level && r.method == method)
    }

    /// Writes `raw.csv`, `aggregates.csv`, `plotdata/*.csv`,
    /// `timings.csv`, and for outlier sweeps `best.csv` plus the matching
    /// plot files.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let plot = dir.join("plotdata");
        std::fs::create_dir_all(&plot).map_err(|e| CssnmfError::io(&plot, e))?;
        write_text(dir.join("raw.csv"), &self.raw_csv())?;
        write_text(dir.join("aggregates.csv"), &self.aggregates_csv())?;
        write_text(dir.join("timings.csv"), &self.timings_csv())?;
        let metrics: [(&str, fn(&AggregateRow) -> f64); 3] = [
            ("accuracy", |r| r.accuracy),
            ("d_w", |r| r.d_w),
            ("rel_error", |r| r.rel_error),
        ];
        for (name, f) in metrics {
            write_text(
                plot.join(format!("{name}.csv")),
                &self.plot_csv(&self.aggregates, f),
            )?;
        }
        if self.config.scenario == SweepScenario::Outliers {
            write_text(dir.join("best.csv"), &self.best_csv())?;
            for (name, f) in metrics {
                write_text(
                    plot.join(format!("{name}_best.csv")),
                    &self.plot_csv(&self.best, f),
                )?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::standard()
            .into_iter()
            .chain([Method::CssnmfMean, Method::CssnmfMedian])
        {
            assert_eq!(Method::parse(m.name()).unwrap(), m);
        }
        assert!(Method::parse("nmf").is_err());
    }

    #[test]
    fn config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_json(
            r#"{"scenario":"outliers","trials":2,"methods":["cssnmf-mean","cssnmf-median"],
               "selection":{"top_p":50},"solver":{"maxiter":200,"target_trace":5}}"#,
        )
        .unwrap();
        assert_eq!(cfg.levels().len(), 15);
        assert_eq!(cfg.selection, SelectionSpec::TopP(50));
        assert_eq!(cfg.solver.maxiter, Some(200));
        assert!(ExperimentConfig::from_json(r#"{"scenario":"dirichlet","trials":0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"scenario":"dirichlet","bogus":1}"#).is_err());
    }

    #[test]
    fn streams_are_independent_of_grid_size() {
        let mut a = ExperimentConfig::new(SweepScenario::Dirichlet);
        a.noise_grid = Some(vec![1e-3, 1e-2]);
        let mut b = a.clone();
        b.noise_grid = Some(vec![1e-3, 1e-2, 1e-1]);
        b.trials = 5;
        assert_eq!(a.instance(1, 0).unwrap().m, b.instance(1, 0).unwrap().m);
    }
}

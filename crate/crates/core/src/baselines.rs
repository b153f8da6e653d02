//! Comparison methods: SPA, smoothed SPA and an FGNSR-style solver
//! (trace penalty followed by SPA on the rows of `X`).

use serde::{Deserialize, Serialize};

use crate::error::{CssnmfError, Result};
use crate::linalg::argmax_first;
use crate::matrix::{dot, norm2, DenseMatrix};
use crate::postprocess::{aggregate_columns, AggregationRule};
use crate::solver::{fgm_solve, MuControlConfig, PenaltyKind, SolverConfig, SolverResult};

/// Successive projection algorithm. Returns the picked columns in pick
/// order.
pub fn spa(m: &DenseMatrix, r: usize) -> Result<Vec<usize>> {
    check_rank_request(m, r)?;
    let floor = 1e-12 * m.frobenius_norm();
    let mut res = m.clone();
    let mut picked = Vec::with_capacity(r);
    for _ in 0..r {
        let norms = res.col_l2_norms();
        let j = argmax_first(&norms);
        if !(norms[j] > floor) {
            return Err(CssnmfError::RankDeficient {
                picked: picked.len(),
                requested: r,
            });
        }
        picked.push(j);
        let u: Vec<f64> = res.col(j).iter().map(|v| v / norms[j]).collect();
        deflate(&mut res, &u);
    }
    Ok(picked)
}

fn check_rank_request(m: &DenseMatrix, r: usize) -> Result<()> {
    if r == 0 || r > m.cols() {
        return Err(CssnmfError::InvalidArgument(format!(
            "cannot pick {r} columns out of {}",
            m.cols()
        )));
    }
    Ok(())
}

/// `R ← (I − uuᵀ) R` for a unit vector `u`.
fn deflate(res: &mut DenseMatrix, u: &[f64]) {
    for j in 0..res.cols() {
        let c = res.col_mut(j);
        let proj = dot(u, c);
        for (v, &ui) in c.iter_mut().zip(u) {
            *v -= proj * ui;
        }
    }
}

/// How many proximal points SSPA averages, derived from the class sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NplpPolicy {
    /// Smallest class size.
    Min,
    /// `⌊(p_min + p̄)/2⌋`
    Mid,
    /// Mean class size, rounded.
    Mean,
}

impl NplpPolicy {
    pub fn nplp(self, class_sizes: &[usize]) -> usize {
        if class_sizes.is_empty() {
            return 1;
        }
        let pmin = *class_sizes.iter().min().unwrap() as f64;
        let pbar = class_sizes.iter().sum::<usize>() as f64 / class_sizes.len() as f64;
        let v = match self {
            NplpPolicy::Min => pmin,
            NplpPolicy::Mid => ((pmin + pbar) / 2.0).floor(),
            NplpPolicy::Mean => pbar.round(),
        };
        (v as usize).max(1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SspaConfig {
    pub nplp: usize,
    #[serde(default)]
    pub aggregation: AggregationRule,
}

#[derive(Clone, Debug)]
pub struct SspaResult {
    /// Columns averaged into each component, the SPA pick first.
    pub clusters: Vec<Vec<usize>>,
    pub w: DenseMatrix,
}

/// Smoothed SPA: after picking the residual column of largest norm, also
/// take the `nplp − 1` columns best aligned with it, aggregate them, and
/// deflate along the aggregated residual direction.
pub fn sspa(m: &DenseMatrix, r: usize, cfg: &SspaConfig) -> Result<SspaResult> {
    check_rank_request(m, r)?;
    let n = m.cols();
    if cfg.nplp == 0 || cfg.nplp > n {
        return Err(CssnmfError::InvalidArgument(format!(
            "nplp must lie in 1..={n}, got {}",
            cfg.nplp
        )));
    }
    let floor = 1e-12 * m.frobenius_norm();
    let mut res = m.clone();
    let mut clusters = Vec::with_capacity(r);
    let mut columns = Vec::with_capacity(r);
    for t in 0..r {
        let norms = res.col_l2_norms();
        let jstar = argmax_first(&norms);
        if !(norms[jstar] > floor) {
            return Err(CssnmfError::RankDeficient {
                picked: t,
                requested: r,
            });
        }
        let u: Vec<f64> = res.col(jstar).iter().map(|v| v / norms[jstar]).collect();
        let scores: Vec<f64> = (0..n).map(|j| dot(&u, res.col(j))).collect();
        let mut order: Vec<usize> = (0..n).filter(|&j| j != jstar).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let mut cluster = vec![jstar];
        cluster.extend_from_slice(&order[..cfg.nplp - 1]);

        columns.push(aggregate_columns(m, &cluster, cfg.aggregation));
        let mut dir = aggregate_columns(&res, &cluster, cfg.aggregation);
        let nrm = norm2(&dir);
        if !(nrm > floor) {
            return Err(CssnmfError::RankDeficient {
                picked: t,
                requested: r,
            });
        }
        dir.iter_mut().for_each(|v| *v /= nrm);
        deflate(&mut res, &dir);
        clusters.push(cluster);
    }
    Ok(SspaResult {
        clusters,
        w: DenseMatrix::from_columns(&columns)?,
    })
}

/// Default FGNSR-style settings: trace penalty with μ steered so that
/// `tr(X)` approaches `r`.
pub fn fgnsr_config(m: &DenseMatrix, r: usize) -> SolverConfig {
    let mu = 0.1 * m.frobenius_norm_sq() / m.cols().max(1) as f64;
    SolverConfig::new(mu)
        .with_penalty(PenaltyKind::Trace)
        .with_mu_control(MuControlConfig::diagonal(r as f64))
}

#[derive(Clone, Debug)]
pub struct FgnsrResult {
    /// Selected columns in SPA pick order.
    pub indices: Vec<usize>,
    pub solve: SolverResult,
}

/// Solves the trace-penalized model, then runs SPA on `Xᵀ`.
pub fn fgnsr_baseline(m: &DenseMatrix, r: usize, solver: &SolverConfig) -> Result<FgnsrResult> {
    if solver.penalty != PenaltyKind::Trace {
        return Err(CssnmfError::InvalidArgument(
            "the FGNSR baseline uses the trace penalty".into(),
        ));
    }
    check_rank_request(m, r)?;
    let solve = fgm_solve(m, solver)?;
    let indices = spa(&solve.x.transpose(), r)?;
    Ok(FgnsrResult { indices, solve })
}

//! From a self-dictionary solution `X` to a factorization `M ≈ WH`:
//! row selection, spectral clustering of the selected block, aggregation
//! of each cluster into a column of `W`, and NNLS for `H`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CssnmfError, Result};
use crate::io::{write_indices, write_matrix, write_text};
use crate::linalg::{argmax_first, sym_eig};
use crate::matrix::{norm2, DenseMatrix};
use crate::rng::RngStream;
use crate::solver::{fgm_solve, SolverConfig, SolverResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// The `p` rows with the largest score.
    TopP(usize),
    /// Every row whose score reaches `delta`; at least `r` rows are kept.
    Threshold(f64),
}

/// What a row is ranked by.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowScore {
    /// `‖X(j,:)‖₁`
    #[default]
    RowL1,
    /// `X(j,j)`
    Diagonal,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationRule {
    #[default]
    Mean,
    Median,
}

pub fn row_scores(x: &DenseMatrix, score: RowScore) -> Vec<f64> {
    match score {
        RowScore::RowL1 => x.row_l1_norms(),
        RowScore::Diagonal => x.diag(),
    }
}

/// Selects rows of `x` by ℓ1 norm. Indices come back ascending.
///
/// `r` only matters for [`SelectionRule::Threshold`]: when fewer than `r`
/// rows pass, the `r` largest rows are returned instead.
pub fn select_rows(x: &DenseMatrix, rule: SelectionRule, r: usize) -> Result<Vec<usize>> {
    select_rows_by(x, rule, r, RowScore::RowL1)
}

pub fn select_rows_by(
    x: &DenseMatrix,
    rule: SelectionRule,
    r: usize,
    score: RowScore,
) -> Result<Vec<usize>> {
    if !x.is_square() {
        return Err(CssnmfError::Dimension(format!(
            "row selection needs a square matrix, got {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    let scores = row_scores(x, score);
    match rule {
        SelectionRule::TopP(p) => top_p(&scores, p),
        SelectionRule::Threshold(delta) => {
            let kept: Vec<usize> = (0..scores.len()).filter(|&j| scores[j] >= delta).collect();
            if kept.len() >= r {
                Ok(kept)
            } else {
                top_p(&scores, r)
            }
        }
    }
}

fn top_p(scores: &[f64], p: usize) -> Result<Vec<usize>> {
    let n = scores.len();
    if p == 0 || p > n {
        return Err(CssnmfError::InvalidArgument(format!(
            "cannot select {p} rows out of {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut picked = order[..p].to_vec();
    picked.sort_unstable();
    Ok(picked)
}

const KMEANS_RESTARTS: usize = 10;
const KMEANS_MAX_ITER: usize = 100;

/// Normalized spectral clustering (Ng–Jordan–Weiss) of a nonnegative
/// symmetric affinity matrix into `r` groups.
///
/// Rows are first put in a canonical order (by degree, then by their sorted
/// entries) so that relabeling the input relabels the output. Labels are
/// numbered by first appearance in the input order.
pub fn spectral_cluster(s: &DenseMatrix, r: usize, seed: u64) -> Result<Vec<usize>> {
    let p = s.rows();
    if !s.is_square() {
        return Err(CssnmfError::Dimension(format!(
            "affinity matrix must be square, got {}x{}",
            s.rows(),
            s.cols()
        )));
    }
    if r == 0 || r > p {
        return Err(CssnmfError::InvalidArgument(format!(
            "cannot form {r} clusters from {p} points"
        )));
    }
    if !s.is_symmetric(1e-10) {
        return Err(CssnmfError::NotSymmetric {
            asymmetry: s.asymmetry(),
        });
    }
    let s = s.map(|v| v.max(0.0));

    let order = canonical_order(&s);
    let sc = s.submatrix(&order, &order);

    let degree: Vec<f64> = (0..p)
        .map(|i| {
            let d: f64 = sc.col(i).iter().sum();
            if d > 0.0 {
                d
            } else {
                1.0
            }
        })
        .collect();
    let a = DenseMatrix::from_fn(p, p, |i, j| {
        sc[(i, j)] / (degree[i].sqrt() * degree[j].sqrt())
    });
    // Average with the transpose so rounding cannot break symmetry.
    let a = DenseMatrix::from_fn(p, p, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let eig = sym_eig(&a)?;

    let mut points = vec![vec![0.0; r]; p];
    for (c, k) in (p - r..p).rev().enumerate() {
        let v = eig.vectors.col(k);
        for i in 0..p {
            points[i][c] = v[i];
        }
    }
    for pt in &mut points {
        let nrm = norm2(pt);
        if nrm > 0.0 {
            pt.iter_mut().for_each(|v| *v /= nrm);
        }
    }

    let canonical_labels = kmeans(&points, r, seed)?;
    let mut labels = vec![0; p];
    for (pos, &orig) in order.iter().enumerate() {
        labels[orig] = canonical_labels[pos];
    }
    Ok(relabel_by_first_appearance(&labels, r))
}

/// Row order by degree, ties broken by the lexicographic order of the
/// sorted row entries, then by index. Both keys are invariant under a
/// symmetric permutation of the matrix.
fn canonical_order(s: &DenseMatrix) -> Vec<usize> {
    let keys: Vec<(f64, Vec<f64>)> = (0..s.rows())
        .map(|i| {
            let mut row = s.col(i).to_vec();
            row.sort_by(f64::total_cmp);
            let degree: f64 = row.iter().sum();
            (degree, row)
        })
        .collect();
    let mut order: Vec<usize> = (0..s.rows()).collect();
    order.sort_by(|&a, &b| {
        let (da, ra) = &keys[a];
        let (db, rb) = &keys[b];
        db.total_cmp(da)
            .then_with(|| {
                ra.iter()
                    .zip(rb)
                    .map(|(x, y)| y.total_cmp(x))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .then(a.cmp(&b))
    });
    order
}

fn relabel_by_first_appearance(labels: &[usize], r: usize) -> Vec<usize> {
    let mut map = vec![usize::MAX; r];
    let mut next = 0;
    labels
        .iter()
        .map(|&l| {
            if map[l] == usize::MAX {
                map[l] = next;
                next += 1;
            }
            map[l]
        })
        .collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's algorithm with k-means++ seeding, best of several restarts.
fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<usize>> {
    let mut rng = RngStream::new(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let (inertia, labels) = lloyd(points, k, &mut rng);
        if best.as_ref().map_or(true, |(b, _)| inertia < *b) {
            best = Some((inertia, labels));
        }
    }
    let (_, labels) = best.expect("at least one restart");
    for c in 0..k {
        if !labels.contains(&c) {
            return Err(CssnmfError::EmptyCluster(c));
        }
    }
    Ok(labels)
}

fn kmeans_pp(points: &[Vec<f64>], k: usize, rng: &mut RngStream) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points[rng.below(n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.uniform() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.below(n)
        };
        centers.push(points[next].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }
    centers
}

fn lloyd(points: &[Vec<f64>], k: usize, rng: &mut RngStream) -> (f64, Vec<usize>) {
    let dim = points[0].len();
    let mut centers = kmeans_pp(points, k, rng);
    let mut labels = vec![usize::MAX; points.len()];
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let dists: Vec<f64> = centers.iter().map(|c| -sq_dist(p, c)).collect();
            let l = argmax_first(&dists);
            if labels[i] != l {
                labels[i] = l;
                changed = true;
            }
        }
        repair_empty(points, &mut centers, &mut labels, k);
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = points
        .iter()
        .zip(&labels)
        .map(|(p, &l)| sq_dist(p, &centers[l]))
        .sum();
    (inertia, labels)
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair_empty(points: &[Vec<f64>], centers: &mut [Vec<f64>], labels: &mut [usize], k: usize) {
    for c in 0..k {
        let mut counts = vec![0usize; k];
        labels.iter().for_each(|&l| counts[l] += 1);
        if counts[c] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = -1.0;
        for (i, p) in points.iter().enumerate() {
            if counts[labels[i]] < 2 {
                continue;
            }
            let d = sq_dist(p, &centers[labels[i]]);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        if let Some(i) = far {
            labels[i] = c;
            centers[c] = points[i].clone();
        }
    }
}

/// Builds `W(:,t)` from the columns `M(:,K[i])` with `labels[i] = t`.
pub fn aggregate(
    m: &DenseMatrix,
    k: &[usize],
    labels: &[usize],
    r: usize,
    rule: AggregationRule,
) -> Result<DenseMatrix> {
    if k.len() != labels.len() {
        return Err(CssnmfError::Dimension(format!(
            "{} indices but {} labels",
            k.len(),
            labels.len()
        )));
    }
    let mut members = vec![Vec::new(); r];
    for (&j, &l) in k.iter().zip(labels) {
        if l >= r {
            return Err(CssnmfError::InvalidArgument(format!(
                "label {l} out of range for {r} clusters"
            )));
        }
        if j >= m.cols() {
            return Err(CssnmfError::Dimension(format!(
                "column index {j} out of range for {} columns",
                m.cols()
            )));
        }
        members[l].push(j);
    }
    let mut columns = Vec::with_capacity(r);
    for (t, cols) in members.iter().enumerate() {
        if cols.is_empty() {
            return Err(CssnmfError::EmptyCluster(t));
        }
        columns.push(aggregate_columns(m, cols, rule));
    }
    DenseMatrix::from_columns(&columns)
}

pub(crate) fn aggregate_columns(
    m: &DenseMatrix,
    cols: &[usize],
    rule: AggregationRule,
) -> Vec<f64> {
    let rows = m.rows();
    match rule {
        AggregationRule::Mean => {
            let mut out = vec![0.0; rows];
            for &j in cols {
                for (o, v) in out.iter_mut().zip(m.col(j)) {
                    *o += v;
                }
            }
            let c = cols.len() as f64;
            out.iter_mut().for_each(|o| *o /= c);
            out
        }
        AggregationRule::Median => {
            let mut buf = Vec::with_capacity(cols.len());
            (0..rows)
                .map(|i| {
                    buf.clear();
                    buf.extend(cols.iter().map(|&j| m[(i, j)]));
                    median(&mut buf)
                })
                .collect()
        }
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// `argmin_{H ≥ 0} ‖M − WH‖_F` by cyclic coordinate descent from `H = 0`.
///
/// Stops once the largest coordinate change of a sweep is at most `tol`.
pub fn nnls_cd(
    m: &DenseMatrix,
    w: &DenseMatrix,
    tol: f64,
    max_sweeps: usize,
) -> Result<DenseMatrix> {
    if m.rows() != w.rows() {
        return Err(CssnmfError::Dimension(format!(
            "M has {} rows but W has {}",
            m.rows(),
            w.rows()
        )));
    }
    let r = w.cols();
    let n = m.cols();
    let g = w.tr_matmul(w);
    if let Some(t) = (0..r).find(|&t| !(g[(t, t)] > 0.0)) {
        return Err(CssnmfError::ZeroColumn(t));
    }
    let f = w.tr_matmul(m);
    let mut h = DenseMatrix::zeros(r, n);
    for _ in 0..max_sweeps {
        let mut biggest: f64 = 0.0;
        for j in 0..n {
            for t in 0..r {
                let gh: f64 = (0..r).map(|s| g[(t, s)] * h[(s, j)]).sum();
                let old = h[(t, j)];
                let new = (old + (f[(t, j)] - gh) / g[(t, t)]).max(0.0);
                h[(t, j)] = new;
                biggest = biggest.max((new - old).abs());
            }
        }
        if biggest <= tol {
            break;
        }
    }
    Ok(h)
}

/// Settings of the post-processing stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PostprocessConfig {
    pub r: usize,
    pub selection: SelectionRule,
    #[serde(default)]
    pub score: RowScore,
    #[serde(default)]
    pub aggregation: AggregationRule,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_nnls_tol")]
    pub nnls_tol: f64,
    #[serde(default = "default_nnls_sweeps")]
    pub nnls_max_sweeps: usize,
}

fn default_nnls_tol() -> f64 {
    1e-12
}

fn default_nnls_sweeps() -> usize {
    2000
}

impl PostprocessConfig {
    pub fn new(r: usize, selection: SelectionRule, aggregation: AggregationRule) -> Self {
        PostprocessConfig {
            r,
            selection,
            score: RowScore::RowL1,
            aggregation,
            seed: 0,
            nnls_tol: default_nnls_tol(),
            nnls_max_sweeps: default_nnls_sweeps(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Clone, Debug)]
pub struct CssnmfSolution {
    /// Selected columns of `M`, ascending.
    pub k: Vec<usize>,
    /// Cluster of each entry of `k`.
    pub labels: Vec<usize>,
    pub w: DenseMatrix,
    pub h: DenseMatrix,
    /// `‖M − WH‖_F`
    pub residual: f64,
}

impl CssnmfSolution {
    /// Column indices of cluster `t`.
    pub fn cluster(&self, t: usize) -> Vec<usize> {
        self.k
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l == t)
            .map(|(&j, _)| j)
            .collect()
    }

    /// Writes `K.csv`, `labels.csv`, `W.csv` and `H.csv`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| CssnmfError::io(dir, e))?;
        write_indices(dir.join("K.csv"), &self.k)?;
        write_indices(dir.join("labels.csv"), &self.labels)?;
        write_matrix(dir.join("W.csv"), &self.w)?;
        write_matrix(dir.join("H.csv"), &self.h)
    }
}

/// Turns a self-dictionary matrix `X` into a factorization of `M`.
pub fn postprocess(
    m: &DenseMatrix,
    x: &DenseMatrix,
    cfg: &PostprocessConfig,
) -> Result<CssnmfSolution> {
    if x.shape() != (m.cols(), m.cols()) {
        return Err(CssnmfError::Dimension(format!(
            "X is {}x{} but M has {} columns",
            x.rows(),
            x.cols(),
            m.cols()
        )));
    }
    let r = cfg.r;
    if r == 0 {
        return Err(CssnmfError::InvalidArgument("r must be at least 1".into()));
    }
    let k = select_rows_by(x, cfg.selection, r, cfg.score)?;
    if k.len() < r {
        return Err(CssnmfError::InvalidArgument(format!(
            "selected {} columns, fewer than r = {r}",
            k.len()
        )));
    }
    let block = x.submatrix(&k, &k);
    let s = DenseMatrix::from_fn(k.len(), k.len(), |i, j| {
        0.5 * (block[(i, j)] + block[(j, i)])
    });
    let labels = spectral_cluster(&s, r, cfg.seed)?;
    let w = aggregate(m, &k, &labels, r, cfg.aggregation)?;
    let h = nnls_cd(m, &w, cfg.nnls_tol, cfg.nnls_max_sweeps)?;
    let residual = m.sub(&w.matmul(&h)).frobenius_norm();
    Ok(CssnmfSolution {
        k,
        labels,
        w,
        h,
        residual,
    })
}

/// Solver output and the factorization derived from it.
#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub solve: SolverResult,
    pub solution: CssnmfSolution,
}

/// Summary written next to a saved solution.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveSummary {
    pub residual: f64,
    pub final_mu: f64,
    pub iterations: usize,
    pub trace_x: f64,
    pub lipschitz: f64,
    pub objective_tail: Vec<f64>,
}

impl PipelineOutput {
    pub fn summary(&self) -> SolveSummary {
        let t = &self.solve.objective_trace;
        SolveSummary {
            residual: self.solution.residual,
            final_mu: self.solve.final_mu,
            iterations: self.solve.iterations_run,
            trace_x: self.solve.x.trace(),
            lipschitz: self.solve.lipschitz,
            objective_tail: t[t.len().saturating_sub(10)..].to_vec(),
        }
    }

    /// Saves the solution files plus `summary.json`, and `X.csv` when asked.
    pub fn save(&self, dir: impl AsRef<Path>, with_x: bool) -> Result<()> {
        let dir = dir.as_ref();
        self.solution.save(dir)?;
        if with_x {
            write_matrix(dir.join("X.csv"), &self.solve.x)?;
        }
        write_text(
            dir.join("summary.json"),
            &serde_json::to_string_pretty(&self.summary())?,
        )
    }
}

/// Solve, then post-process.
pub fn cssnmf_pipeline(
    m: &DenseMatrix,
    solver: &SolverConfig,
    post: &PostprocessConfig,
) -> Result<PipelineOutput> {
    let solve = fgm_solve(m, solver)?;
    let solution = postprocess(m, &solve.x, post)?;
    Ok(PipelineOutput { solve, solution })
}

//! Quality measures for recovered factorizations and the theory-side
//! diagnostics (conditioning `κ(W)`, mixing bound `β`, effective rank and
//! the noise thresholds of the recovery guarantees).

use serde::{Deserialize, Serialize};

use crate::error::{CssnmfError, Result};
use crate::linalg::argmax_first;
use crate::matrix::DenseMatrix;
use crate::postprocess::nnls_cd;

const PIVOT_TOL: f64 = 1e-12;

/// Minimizes `cᵀz` subject to `Az = b`, `z ≥ 0`, starting from a basis for
/// which `A(:, basis)` is the identity and `b ≥ 0`. Bland's rule keeps the
/// method from cycling.
fn simplex_min(a: &[Vec<f64>], b: &[f64], c: &[f64], mut basis: Vec<usize>) -> Result<f64> {
    let rows = a.len();
    let cols = c.len();
    let mut tab: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    // Reduced costs d_j = c_j − c_Bᵀ A_j; the last slot holds −c_Bᵀ b.
    let mut red: Vec<f64> = c.to_vec();
    red.push(0.0);
    for (i, &bv) in basis.iter().enumerate() {
        for j in 0..=cols {
            red[j] -= c[bv] * tab[i][j];
        }
    }
    let max_pivots = 50 * (rows + cols) + 1000;
    for _ in 0..max_pivots {
        let Some(enter) = (0..cols).find(|&j| red[j] < -PIVOT_TOL) else {
            return Ok(-red[cols]);
        };
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..rows {
            let piv = tab[i][enter];
            if piv > PIVOT_TOL {
                let ratio = tab[i][cols] / piv;
                let better = match leave {
                    None => true,
                    Some(l) => ratio < best_ratio || (ratio == best_ratio && basis[i] < basis[l]),
                };
                if better {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(l) = leave else {
            return Err(CssnmfError::Numerical("linear program is unbounded".into()));
        };
        let piv = tab[l][enter];
        tab[l].iter_mut().for_each(|v| *v /= piv);
        let pivot_row = tab[l].clone();
        for (i, row) in tab.iter_mut().enumerate() {
            if i != l {
                let f = row[enter];
                if f != 0.0 {
                    row.iter_mut()
                        .zip(&pivot_row)
                        .for_each(|(v, p)| *v -= f * p);
                }
            }
        }
        let f = red[enter];
        red.iter_mut()
            .zip(&pivot_row)
            .for_each(|(v, p)| *v -= f * p);
        basis[l] = enter;
    }
    Err(CssnmfError::Numerical(
        "simplex method did not terminate".into(),
    ))
}

/// `min_{x ≥ 0} ‖b − Ax‖₁` as a linear program.
pub fn nonneg_l1_regression(a: &DenseMatrix, b: &[f64]) -> Result<f64> {
    let m = a.rows();
    if b.len() != m {
        return Err(CssnmfError::Dimension(format!(
            "right-hand side has {} entries, expected {m}",
            b.len()
        )));
    }
    let k = a.cols();
    // Variables: x (k), u (m), v (m) with Ax + u − v = b. Rows with b_i < 0
    // are negated so that v_i starts in the basis.
    let cols = k + 2 * m;
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; cols];
        for j in 0..k {
            row[j] = sign * a[(i, j)];
        }
        row[k + i] = sign;
        row[k + m + i] = -sign;
        rows.push(row);
        rhs.push(sign * b[i]);
        basis.push(if sign > 0.0 { k + i } else { k + m + i });
    }
    let mut cost = vec![0.0; cols];
    cost[k..].iter_mut().for_each(|c| *c = 1.0);
    Ok(simplex_min(&rows, &rhs, &cost, basis)?.max(0.0))
}

/// `κ(W) = min_k min_{x ≥ 0} ‖W(:,k) − W(:,k̄)x‖₁`, where `k̄` are the
/// other columns.
pub fn kappa(w: &DenseMatrix) -> Result<f64> {
    let r = w.cols();
    if r < 2 {
        return Err(CssnmfError::InvalidArgument(
            "kappa needs at least two columns".into(),
        ));
    }
    let mut best = f64::INFINITY;
    for k in 0..r {
        let others: Vec<usize> = (0..r).filter(|&j| j != k).collect();
        let v = nonneg_l1_regression(&w.select_columns(&others), w.col(k))?;
        best = best.min(v);
    }
    Ok(best)
}

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method
/// with potentials). Entry `i` of the result is the column matched to row
/// `i`.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays; column 0 is a virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        assign[p[j] - 1] = j - 1;
    }
    assign
}

/// Fraction of labeled columns whose dominant component matches their
/// class, under the best one-to-one matching of components to classes.
pub fn accuracy(h_hat: &DenseMatrix, labels: &[usize], j0: &[usize]) -> Result<f64> {
    if labels.len() != j0.len() {
        return Err(CssnmfError::Dimension(format!(
            "{} labels for {} columns",
            labels.len(),
            j0.len()
        )));
    }
    if j0.is_empty() {
        return Err(CssnmfError::InvalidArgument("no labeled columns".into()));
    }
    if let Some(&j) = j0.iter().find(|&&j| j >= h_hat.cols()) {
        return Err(CssnmfError::Dimension(format!(
            "labeled column {j} out of range for {} columns",
            h_hat.cols()
        )));
    }
    let classes = labels.iter().max().map_or(0, |&l| l + 1);
    let size = h_hat.rows().max(classes);
    let mut confusion = vec![vec![0.0; size]; size];
    for (&j, &l) in j0.iter().zip(labels) {
        let pred = argmax_first(h_hat.col(j));
        confusion[pred][l] += 1.0;
    }
    let cost: Vec<Vec<f64>> = confusion
        .iter()
        .map(|row| row.iter().map(|c| -c).collect())
        .collect();
    let assign = min_cost_assignment(&cost);
    let matches: f64 = assign
        .iter()
        .enumerate()
        .map(|(i, &j)| confusion[i][j])
        .sum();
    Ok(matches / j0.len() as f64)
}

fn l2_normalized_columns(w: &DenseMatrix) -> Result<DenseMatrix> {
    let norms = w.col_l2_norms();
    if let Some(t) = norms.iter().position(|&n| !(n > 0.0)) {
        return Err(CssnmfError::ZeroColumn(t));
    }
    Ok(DenseMatrix::from_fn(w.rows(), w.cols(), |i, j| {
        w[(i, j)] / norms[j]
    }))
}

/// `min_Π ‖ŴΠ − W‖_F / ‖W‖_F` after ℓ2-normalizing the columns of both.
pub fn rel_w_error(w_hat: &DenseMatrix, w_true: &DenseMatrix) -> Result<f64> {
    if w_hat.shape() != w_true.shape() {
        return Err(CssnmfError::Dimension(format!(
            "estimate is {}x{} but truth is {}x{}",
            w_hat.rows(),
            w_hat.cols(),
            w_true.rows(),
            w_true.cols()
        )));
    }
    let a = l2_normalized_columns(w_hat)?;
    let b = l2_normalized_columns(w_true)?;
    let r = a.cols();
    let cost: Vec<Vec<f64>> = (0..r)
        .map(|i| {
            (0..r)
                .map(|j| {
                    a.col(i)
                        .iter()
                        .zip(b.col(j))
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum()
                })
                .collect()
        })
        .collect();
    let assign = min_cost_assignment(&cost);
    let total: f64 = assign.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    Ok(total.sqrt() / (r as f64).sqrt())
}

/// `min_{P ≥ 0} ‖M − WP‖_F / ‖M‖_F`.
pub fn rel_approx_error(m: &DenseMatrix, w: &DenseMatrix) -> Result<f64> {
    let nm = m.frobenius_norm();
    if !(nm > 0.0) {
        return Err(CssnmfError::InvalidArgument("M is zero".into()));
    }
    let p = nnls_cd(m, w, 1e-8, 500)?;
    Ok(m.sub(&w.matmul(&p)).frobenius_norm() / nm)
}

/// Minimizer and minimum of `Σ x_i²` subject to `Σ x_i ≥ α` over `p`
/// variables: every `x_i = α/p`, value `α²/p`.
pub fn equal_split_minimum(alpha: f64, p: usize) -> (f64, f64) {
    let p = p as f64;
    (alpha / p, alpha * alpha / p)
}

/// Minimum of `Σ x_i²` subject to `Σ x_i ≥ α` and `x_j ≤ β` for one fixed
/// `j`, valid when `β < α/p`: `β² + (α − β)²/(p − 1)`.
pub fn capped_split_minimum(alpha: f64, beta: f64, p: usize) -> f64 {
    beta * beta + (alpha - beta).powi(2) / (p as f64 - 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessCertificate {
    pub kappa: f64,
    pub beta: f64,
    pub r_eff: f64,
    pub p_max: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub thm6_threshold: f64,
    pub thm8_threshold: f64,
}

/// Diagnostic quantities of the recovery guarantees for `M = WH + N` with
/// column-stochastic `H`, pure sets `S_t` and column noise `‖N(:,j)‖₁ ≤ ε`.
pub fn certificate(
    w: &DenseMatrix,
    h: &DenseMatrix,
    pure_sets: &[Vec<usize>],
    eps: f64,
) -> Result<RobustnessCertificate> {
    if !(0.0..1.0).contains(&eps) {
        return Err(CssnmfError::InvalidArgument(format!(
            "noise level must lie in [0, 1), got {eps}"
        )));
    }
    if pure_sets.is_empty() || pure_sets.iter().any(Vec::is_empty) {
        return Err(CssnmfError::InvalidArgument(
            "every pure set must be non-empty".into(),
        ));
    }
    let n = h.cols();
    let mut pure = vec![false; n];
    for &j in pure_sets.iter().flatten() {
        if j >= n {
            return Err(CssnmfError::Dimension(format!(
                "pure index {j} out of range for {n} columns"
            )));
        }
        pure[j] = true;
    }
    let mut beta: f64 = 0.0;
    for j in (0..n).filter(|&j| !pure[j]) {
        for t in 0..h.rows() {
            let v = h[(t, j)];
            if v >= 1.0 {
                return Err(CssnmfError::MixingTooLarge { index: j, value: v });
            }
            beta = beta.max(v);
        }
    }
    let kappa = kappa(w)?;
    if !(kappa > 0.0) {
        return Err(CssnmfError::Numerical(
            "kappa(W) is zero: some column is a nonnegative combination of the others".into(),
        ));
    }
    let r_eff: f64 = pure_sets.iter().map(|s| 1.0 / s.len() as f64).sum();
    let p_max = pure_sets.iter().map(Vec::len).max().unwrap_or(1);
    let pm = p_max as f64;
    let delta = 4.0 * eps * (1.0 + kappa * beta) / (kappa * (1.0 - beta) * (1.0 - eps));
    Ok(RobustnessCertificate {
        kappa,
        beta,
        r_eff,
        p_max,
        epsilon: eps,
        delta,
        thm6_threshold: kappa * (1.0 - beta) / (5.0 * (pm + 1.0) * (1.0 + kappa * beta)),
        thm8_threshold: kappa * (1.0 - beta) / (18.0 * pm * pm * r_eff),
    })
}

impl RobustnessCertificate {
    /// Diagonal cut that keeps at least one index per class and nothing
    /// else below the first noise threshold.
    pub fn thm6_cut(&self) -> f64 {
        (1.0 - self.delta) / self.p_max as f64
    }

    /// Diagonal cut that recovers every pure index below the second
    /// noise threshold.
    pub fn thm8_cut(&self) -> f64 {
        self.thm6_cut() - (self.delta * self.r_eff).sqrt()
    }

    pub fn thm6_set(&self, x: &DenseMatrix) -> Vec<usize> {
        diagonal_above(x, self.thm6_cut())
    }

    pub fn thm8_set(&self, x: &DenseMatrix) -> Vec<usize> {
        diagonal_above(x, self.thm8_cut())
    }
}

/// `{ j : X(j,j) > cut }`, ascending.
pub fn diagonal_above(x: &DenseMatrix, cut: f64) -> Vec<usize> {
    x.diag()
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > cut)
        .map(|(j, _)| j)
        .collect()
}

/// One evaluated method on one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub seed: u64,
    pub eps: f64,
    pub method: String,
    pub accuracy: f64,
    pub d_w: f64,
    pub rel_error: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
}

/// Accuracy, W-error and relative approximation error of a basis `Ŵ`
/// against ground truth. The coefficients are the NNLS fit of `M` on `Ŵ`.
pub fn evaluate_basis(
    m: &DenseMatrix,
    w_hat: &DenseMatrix,
    w_true: &DenseMatrix,
    labels: &[usize],
    j0: &[usize],
) -> Result<(f64, f64, f64)> {
    let nm = m.frobenius_norm();
    if !(nm > 0.0) {
        return Err(CssnmfError::InvalidArgument("M is zero".into()));
    }
    let h = nnls_cd(m, w_hat, 1e-8, 500)?;
    let acc = accuracy(&h, labels, j0)?;
    let d_w = rel_w_error(w_hat, w_true)?;
    let rel = m.sub(&w_hat.matmul(&h)).frobenius_norm() / nm;
    Ok((acc, d_w, rel))
}

//! Euclidean projection onto the weighted self-dictionary feasible set
//!
//! `Ω = { X ≥ 0, X(i,i) ≤ 1, w_i X(i,j) ≤ w_j X(i,i) }`.
//!
//! The constraints couple entries of a single row only, so the projection
//! splits into `n` independent problems. For row `i` with diagonal value
//! `t` and slopes `c_j = w_j / w_i`, the optimal off-diagonal entries are
//! `clip(Y(i,j), 0, c_j t)` and what remains is a strictly convex
//! piecewise-quadratic function of `t` whose breakpoints are
//! `max(Y(i,j), 0) / c_j`.

use crate::error::{CssnmfError, Result};
use crate::matrix::DenseMatrix;

/// Projects `y` onto Ω for the weight vector `w`.
pub fn project_omega(y: &DenseMatrix, w: &[f64]) -> Result<DenseMatrix> {
    let mut x = y.clone();
    project_omega_in_place(&mut x, w)?;
    Ok(x)
}

/// In-place variant used inside the solver loop.
pub fn project_omega_in_place(y: &mut DenseMatrix, w: &[f64]) -> Result<()> {
    let n = y.rows();
    if !y.is_square() || w.len() != n {
        return Err(CssnmfError::Dimension(format!(
            "projection needs an n x n matrix and n weights, got {}x{} and {}",
            y.rows(),
            y.cols(),
            w.len()
        )));
    }
    check_weights(w)?;
    let mut workspace = RowWorkspace::with_capacity(n);
    let mut row = vec![0.0; n];
    for i in 0..n {
        for (j, r) in row.iter_mut().enumerate() {
            *r = y[(i, j)];
        }
        project_row(&mut row, i, w, &mut workspace);
        for (j, &r) in row.iter().enumerate() {
            y[(i, j)] = r;
        }
    }
    Ok(())
}

pub(crate) fn check_weights(w: &[f64]) -> Result<()> {
    match w.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
        Some(index) => Err(CssnmfError::NonPositiveWeight {
            index,
            value: w[index],
        }),
        None => Ok(()),
    }
}

#[derive(Default)]
pub(crate) struct RowWorkspace {
    /// (breakpoint, slope, value) for the positive off-diagonal entries.
    active: Vec<(f64, f64, f64)>,
}

impl RowWorkspace {
    pub(crate) fn with_capacity(n: usize) -> Self {
        RowWorkspace {
            active: Vec::with_capacity(n),
        }
    }
}

/// Projects row `i` (diagonal at position `i`) in place.
pub(crate) fn project_row(row: &mut [f64], i: usize, w: &[f64], ws: &mut RowWorkspace) {
    let diag_target = row[i];
    let wi = w[i];

    // Only positive entries react to t; non-positive ones clip to zero.
    ws.active.clear();
    let mut sum_cy = 0.0;
    let mut sum_cc = 0.0;
    for (j, &yj) in row.iter().enumerate() {
        if j != i && yj > 0.0 {
            let c = w[j] / wi;
            ws.active.push((yj / c, c, yj));
            sum_cy += c * yj;
            sum_cc += c * c;
        }
    }
    ws.active.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

    // On a segment where the entries with breakpoint > t are capped, the
    // derivative vanishes at (a + Σ c y) / (1 + Σ c²). Scan segments left
    // to right until the stationary point falls inside the segment.
    let mut lower = 0.0;
    let mut t = diag_target;
    let mut k = 0;
    let mut found = false;
    while k < ws.active.len() {
        if lower >= 1.0 {
            t = 1.0;
            found = true;
            break;
        }
        let upper = ws.active[k].0;
        let candidate = (diag_target + sum_cy) / (1.0 + sum_cc);
        if candidate <= upper {
            t = candidate.max(lower);
            found = true;
            break;
        }
        // Entries sharing this breakpoint leave the capped set together.
        while k < ws.active.len() && ws.active[k].0 <= upper {
            let (_, c, yj) = ws.active[k];
            sum_cy -= c * yj;
            sum_cc -= c * c;
            k += 1;
        }
        lower = upper;
    }
    if !found {
        t = diag_target.max(lower);
    }
    let t = t.clamp(0.0, 1.0);

    for (j, v) in row.iter_mut().enumerate() {
        if j == i {
            *v = t;
        } else {
            let cap = w[j] / wi * t;
            *v = v.clamp(0.0, cap.max(0.0));
        }
    }
}

/// True when `x` satisfies the Ω constraints up to `tol`.
pub fn is_in_omega(x: &DenseMatrix, w: &[f64], tol: f64) -> bool {
    let n = x.rows();
    for i in 0..n {
        let d = x[(i, i)];
        if d > 1.0 + tol {
            return false;
        }
        for j in 0..n {
            let v = x[(i, j)];
            if v < -tol || w[i] * v > w[j] * d + tol {
                return false;
            }
        }
    }
    true
}

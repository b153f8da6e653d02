//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use cssnmf::metrics::min_cost_assignment;
use cssnmf::solver::{objective, PenaltyKind};
use cssnmf::{DenseMatrix, RngStream};

pub fn random_matrix(rng: &mut RngStream, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.uniform())
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when `A` is numerically singular.
pub fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |s, v| s.max(v.abs()))
        .max(1.0);
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[piv][c].abs() < 1e-11 * scale {
            return None;
        }
        m.swap(c, piv);
        for i in c + 1..n {
            let f = m[i][c] / m[c][c];
            for k in c..=n {
                m[i][k] -= f * m[c][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    Some(x)
}

/// Linear inequality `a·x ≤ b`.
#[derive(Clone, Debug)]
pub struct Halfspace {
    pub a: Vec<f64>,
    pub b: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean projection of `y` onto a small polyhedron by enumerating
/// active sets: each subset of constraints is treated as equalities, the
/// projection onto that affine set is computed in closed form, and the
/// closest feasible candidate wins. Exponential, exact.
pub fn active_set_projection(y: &[f64], cons: &[Halfspace]) -> Vec<f64> {
    let k = cons.len();
    assert!(k < 20, "active-set enumeration is exponential");
    let feasible = |x: &[f64]| cons.iter().all(|c| dot(&c.a, x) <= c.b + 1e-10);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << k) {
        let act: Vec<&Halfspace> = (0..k)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| &cons[i])
            .collect();
        if act.len() > y.len() {
            continue;
        }
        // x = y − Eᵀλ with (EEᵀ)λ = Ey − f.
        let gram: Vec<Vec<f64>> = act
            .iter()
            .map(|ci| act.iter().map(|cj| dot(&ci.a, &cj.a)).collect())
            .collect();
        let rhs: Vec<f64> = act.iter().map(|c| dot(&c.a, y) - c.b).collect();
        let Some(lambda) = solve_dense(&gram, &rhs) else {
            continue;
        };
        let mut x = y.to_vec();
        for (c, l) in act.iter().zip(&lambda) {
            for (xi, ai) in x.iter_mut().zip(&c.a) {
                *xi -= l * ai;
            }
        }
        if !feasible(&x) {
            continue;
        }
        let d: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
        if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
            best = Some((d, x));
        }
    }
    best.expect("the feasible set is nonempty").1
}

/// Constraints of row `i` of the feasible set for column weights `w`:
/// `x ≥ 0`, `x_i ≤ 1`, `w_i x_j ≤ w_j x_i`.
pub fn omega_row_constraints(i: usize, w: &[f64]) -> Vec<Halfspace> {
    let n = w.len();
    let mut cons = Vec::new();
    for j in 0..n {
        let mut a = vec![0.0; n];
        a[j] = -1.0;
        cons.push(Halfspace { a, b: 0.0 });
    }
    let mut a = vec![0.0; n];
    a[i] = 1.0;
    cons.push(Halfspace { a, b: 1.0 });
    for j in (0..n).filter(|&j| j != i) {
        let mut a = vec![0.0; n];
        a[j] = w[i];
        a[i] = -w[j];
        cons.push(Halfspace { a, b: 0.0 });
    }
    cons
}

/// Projection onto an intersection of halfspaces by Dykstra's algorithm.
pub fn dykstra_projection(y: &[f64], cons: &[Halfspace], sweeps: usize) -> Vec<f64> {
    let mut x = y.to_vec();
    let mut incr = vec![vec![0.0; y.len()]; cons.len()];
    for _ in 0..sweeps {
        let before = x.clone();
        for (c, p) in cons.iter().zip(incr.iter_mut()) {
            let z: Vec<f64> = x.iter().zip(p.iter()).map(|(a, b)| a + b).collect();
            let viol = dot(&c.a, &z) - c.b;
            let nrm = dot(&c.a, &c.a);
            let proj: Vec<f64> = if viol > 0.0 {
                z.iter()
                    .zip(&c.a)
                    .map(|(zi, ai)| zi - viol / nrm * ai)
                    .collect()
            } else {
                z.clone()
            };
            for k in 0..x.len() {
                p[k] = z[k] - proj[k];
            }
            x = proj;
        }
        let moved: f64 = x
            .iter()
            .zip(&before)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if moved < 1e-15 {
            break;
        }
    }
    x
}

/// Minimizes `Σ x_i²` over a polyhedron by projected gradient with step
/// `1/(2L)` for `L = 2`, projecting with Dykstra's algorithm.
pub fn projected_gradient_sum_squares(p: usize, cons: &[Halfspace], iters: usize) -> Vec<f64> {
    let mut x = vec![0.0; p];
    for _ in 0..iters {
        let step: Vec<f64> = x.iter().map(|v| v - 0.25 * 2.0 * v).collect();
        let next = dykstra_projection(&step, cons, 100_000);
        let moved: f64 = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        x = next;
        if moved < 1e-14 {
            break;
        }
    }
    x
}

/// Central finite-difference gradient of the solver objective.
pub fn fd_gradient(
    m: &DenseMatrix,
    x: &DenseMatrix,
    mu: f64,
    penalty: PenaltyKind,
    h: f64,
) -> DenseMatrix {
    let n = x.rows();
    DenseMatrix::from_fn(n, n, |i, j| {
        let mut xp = x.clone();
        xp[(i, j)] += h;
        let mut xm = x.clone();
        xm[(i, j)] -= h;
        (objective(m, &xp, mu, penalty).unwrap() - objective(m, &xm, mu, penalty).unwrap())
            / (2.0 * h)
    })
}

/// Cheapest assignment by trying every permutation.
pub fn brute_force_assignment(cost: &[Vec<f64>]) -> (Vec<usize>, f64) {
    fn rec(
        cost: &[Vec<f64>],
        row: usize,
        used: &mut Vec<bool>,
        cur: &mut Vec<usize>,
        best: &mut (Vec<usize>, f64),
    ) {
        if row == cost.len() {
            let c: f64 = cur.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
            if c < best.1 {
                *best = (cur.clone(), c);
            }
            return;
        }
        for j in 0..cost.len() {
            if !used[j] {
                used[j] = true;
                cur.push(j);
                rec(cost, row + 1, used, cur, best);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut best = (Vec::new(), f64::INFINITY);
    rec(
        cost,
        0,
        &mut vec![false; cost.len()],
        &mut Vec::new(),
        &mut best,
    );
    best
}

pub fn assignment_cost(cost: &[Vec<f64>], perm: &[usize]) -> f64 {
    perm.iter().enumerate().map(|(i, &j)| cost[i][j]).sum()
}

/// Hungarian result, for comparison with the brute-force one.
pub fn fast_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    min_cost_assignment(cost)
}

/// `min_{h ≥ 0} ‖a h − b‖₁` for a one-column `a`, by scanning the
/// breakpoints `b_i / a_i` of the convex piecewise-linear objective.
pub fn l1_fit_one_column(a: &[f64], b: &[f64]) -> f64 {
    let f = |h: f64| {
        a.iter()
            .zip(b)
            .map(|(ai, bi)| (ai * h - bi).abs())
            .sum::<f64>()
    };
    let mut best = f(0.0);
    for (ai, bi) in a.iter().zip(b) {
        if *ai > 0.0 && *bi / *ai > 0.0 {
            best = best.min(f(bi / ai));
        }
    }
    best
}

/// `κ(W)` for two columns, from the one-column breakpoint scan.
pub fn kappa_two_columns(w: &DenseMatrix) -> f64 {
    assert_eq!(w.cols(), 2);
    let a = w.col(0).to_vec();
    let b = w.col(1).to_vec();
    l1_fit_one_column(&b, &a).min(l1_fit_one_column(&a, &b))
}

/// Spearman rank correlation of `y` against its index, without ties.
pub fn spearman_vs_index(y: &[f64]) -> f64 {
    let n = y.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
    let mut rank = vec![0.0; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r as f64;
    }
    let nf = n as f64;
    let d2: f64 = rank
        .iter()
        .enumerate()
        .map(|(i, r)| (r - i as f64).powi(2))
        .sum();
    1.0 - 6.0 * d2 / (nf * (nf * nf - 1.0))
}

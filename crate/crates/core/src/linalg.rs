//! Small dense kernels: power iteration for `σ_max(M)²` and a cyclic
//! Jacobi eigensolver for the symmetric similarity matrices of the
//! clustering step.

use crate::error::{CssnmfError, Result};
use crate::matrix::{dot, norm2, DenseMatrix};

/// Outcome of [`spectral_norm_sq`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralEstimate {
    /// Estimate of `σ_max(M)²` (last iterate when not converged).
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Estimates `σ_max(M)²` by power iteration on `MᵀM`.
///
/// The start vector is the normalized all-ones vector so the result, and
/// everything derived from it, is reproducible. Iteration stops once the
/// extrapolated distance to the limit of the (monotone) Rayleigh quotients
/// drops below `tol · λ`.
pub fn spectral_norm_sq(m: &DenseMatrix, tol: f64, max_iter: usize) -> SpectralEstimate {
    let n = m.cols();
    if n == 0 || m.rows() == 0 || m.max_abs() == 0.0 {
        return SpectralEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 0.0;
    let mut prev_step = f64::INFINITY;
    let mut restarted = false;
    for it in 1..=max_iter {
        let u = m.mul_vec(&v);
        let next = dot(&u, &u);
        let z = m.tr_mul_vec(&u);
        let zn = norm2(&z);
        if zn == 0.0 {
            if restarted {
                return SpectralEstimate {
                    value: next,
                    iterations: it,
                    converged: false,
                };
            }
            // All-ones start lies in the null space; fall back to the
            // heaviest column direction.
            let norms = m.col_l2_norms();
            let best = argmax_first(&norms);
            v = vec![0.0; n];
            v[best] = 1.0;
            restarted = true;
            continue;
        }
        let step = (next - lambda).abs();
        lambda = next;
        v = z.into_iter().map(|x| x / zn).collect();
        let ratio = if prev_step.is_finite() && prev_step > 0.0 {
            (step / prev_step).min(0.999_999)
        } else {
            0.999_999
        };
        prev_step = step;
        if step == 0.0 || (it > 1 && step <= tol * lambda * (1.0 - ratio)) {
            // One more Rayleigh quotient with the refined vector.
            let u = m.mul_vec(&v);
            return SpectralEstimate {
                value: dot(&u, &u).max(lambda),
                iterations: it,
                converged: true,
            };
        }
    }
    SpectralEstimate {
        value: lambda,
        iterations: max_iter,
        converged: false,
    }
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymEig {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, column `k` pairs with `values[k]`.
    pub vectors: DenseMatrix,
}

/// Cyclic Jacobi eigensolver.
///
/// Rotations sweep the strict upper triangle until the off-diagonal
/// Frobenius mass is below `1e-12 · ‖S‖_F`.
pub fn sym_eig(s: &DenseMatrix) -> Result<SymEig> {
    if !s.is_square() {
        return Err(CssnmfError::Dimension(format!(
            "sym_eig needs a square matrix, got {}x{}",
            s.rows(),
            s.cols()
        )));
    }
    let n = s.rows();
    let scale = s.frobenius_norm();
    let asym = s.asymmetry();
    if asym > 1e-12 * scale {
        return Err(CssnmfError::NotSymmetric { asymmetry: asym });
    }
    let mut a = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (s[(i, j)] + s[(j, i)]));
    let mut v = DenseMatrix::identity(n);
    let target = 1e-12 * scale;

    const MAX_SWEEPS: usize = 100;
    let mut converged = n <= 1 || scale == 0.0;
    for _ in 0..MAX_SWEEPS {
        if converged || off_diagonal_norm(&a) <= target {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                rotate(&mut a, &mut v, p, q, c, sn);
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > target {
        return Err(CssnmfError::Numerical(
            "Jacobi eigensolver did not converge".into(),
        ));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = v.select_columns(&order);
    Ok(SymEig { values, vectors })
}

/// Applies the Jacobi rotation zeroing `A(p,q)`: `A ← JᵀAJ`, `V ← VJ`.
fn rotate(a: &mut DenseMatrix, v: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

fn off_diagonal_norm(a: &DenseMatrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                acc += a[(i, j)] * a[(i, j)];
            }
        }
    }
    acc.sqrt()
}

/// Index of the largest entry; ties go to the smallest index.
pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

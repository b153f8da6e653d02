//! Fast gradient method for the penalized self-dictionary problem
//!
//! `min_{X ∈ Ω} ‖M − MX‖_F² + μ·P(X)`
//!
//! with `P(X) = ‖diag(X)‖₂²` (smooth-separable model) or `P(X) = tr(X)`
//! (the trace-penalized separable model used by the FGNSR baseline).

mod mu;
mod projection;

pub use mu::{adapt_mu, MuControlConfig, MuDirection, MuStatistic, MuUpdate};
pub use projection::{is_in_omega, project_omega};

use serde::{Deserialize, Serialize};

use crate::error::{CssnmfError, Result};
use crate::linalg::spectral_norm_sq;
use crate::matrix::DenseMatrix;
use projection::{check_weights, project_row, RowWorkspace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyKind {
    /// `μ ‖diag(X)‖₂²`
    SquaredDiag,
    /// `μ eᵀ diag(X)`
    Trace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub mu: f64,
    pub maxiter: usize,
    pub alpha0: f64,
    pub penalty: PenaltyKind,
    /// Momentum restart period in iterations; 0 disables restarts.
    pub restart_period: usize,
    /// Factor ≥ 1 applied to the Lipschitz estimate.
    pub lipschitz_safety: f64,
    pub mu_control: Option<MuControlConfig>,
    /// Geometric decrease of μ at restart points, down to a floor.
    pub mu_continuation: Option<MuContinuation>,
}

/// `μ ← max(final_mu, factor · μ)` at every restart point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuContinuation {
    pub final_mu: f64,
    pub factor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mu: 1.0,
            maxiter: 1000,
            alpha0: 0.05,
            penalty: PenaltyKind::SquaredDiag,
            restart_period: 50,
            lipschitz_safety: 1.0,
            mu_control: None,
            mu_continuation: None,
        }
    }
}

impl SolverConfig {
    pub fn new(mu: f64) -> Self {
        SolverConfig {
            mu,
            ..Default::default()
        }
    }

    pub fn with_maxiter(mut self, maxiter: usize) -> Self {
        self.maxiter = maxiter;
        self
    }

    pub fn with_penalty(mut self, penalty: PenaltyKind) -> Self {
        self.penalty = penalty;
        self
    }

    pub fn with_restart_period(mut self, period: usize) -> Self {
        self.restart_period = period;
        self
    }

    pub fn with_lipschitz_safety(mut self, safety: f64) -> Self {
        self.lipschitz_safety = safety;
        self
    }

    pub fn with_mu_control(mut self, control: MuControlConfig) -> Self {
        self.mu_control = Some(control);
        self
    }

    pub fn with_mu_continuation(mut self, final_mu: f64, factor: f64) -> Self {
        self.mu_continuation = Some(MuContinuation { final_mu, factor });
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(CssnmfError::InvalidArgument(msg.to_string()));
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return bad("mu must be positive");
        }
        if self.maxiter == 0 {
            return bad("maxiter must be at least 1");
        }
        if !(self.alpha0 > 0.0 && self.alpha0 < 1.0) {
            return bad("alpha0 must lie in (0, 1)");
        }
        if !(self.lipschitz_safety >= 1.0) {
            return bad("lipschitz_safety must be >= 1");
        }
        if let Some(c) = &self.mu_control {
            if !(c.target > 0.0) {
                return bad("mu control target must be positive");
            }
            if !(c.sigma0 > 0.0 && c.sigma0 < 1.0) {
                return bad("mu control sigma0 must lie in (0, 1)");
            }
            if c.adjust_every == 0 {
                return bad("mu control adjust_every must be at least 1");
            }
        }
        if let Some(c) = &self.mu_continuation {
            if !(c.final_mu > 0.0) || !(c.factor > 0.0 && c.factor < 1.0) {
                return bad("mu continuation needs final_mu > 0 and factor in (0, 1)");
            }
            if self.mu_control.is_some() {
                return bad("mu continuation and mu control are mutually exclusive");
            }
            if self.restart_period == 0 {
                return bad("mu continuation needs a positive restart period");
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolverResult {
    pub x: DenseMatrix,
    /// Objective value after every iteration, evaluated with the μ in
    /// force during that iteration.
    pub objective_trace: Vec<f64>,
    pub final_mu: f64,
    pub iterations_run: usize,
    pub lipschitz: f64,
}

/// `‖M − MX‖_F² + μ P(X)`.
pub fn objective(m: &DenseMatrix, x: &DenseMatrix, mu: f64, penalty: PenaltyKind) -> Result<f64> {
    check_square_for(m, x)?;
    let residual = m.matmul(x).sub(m);
    Ok(residual.frobenius_norm_sq() + mu * penalty_value(x, penalty))
}

/// `∇F(Y) = 2Mᵀ(MY − M) + μ ∇P(Y)`.
pub fn gradient(
    m: &DenseMatrix,
    y: &DenseMatrix,
    mu: f64,
    penalty: PenaltyKind,
) -> Result<DenseMatrix> {
    check_square_for(m, y)?;
    let residual = m.matmul(y).sub(m);
    let mut g = m.tr_matmul(&residual).scale(2.0);
    add_penalty_gradient(&mut g, y, mu, penalty);
    Ok(g)
}

fn check_square_for(m: &DenseMatrix, x: &DenseMatrix) -> Result<()> {
    if x.shape() != (m.cols(), m.cols()) {
        return Err(CssnmfError::Dimension(format!(
            "X must be {n}x{n} for an input with {n} columns, got {}x{}",
            x.rows(),
            x.cols(),
            n = m.cols()
        )));
    }
    Ok(())
}

fn penalty_value(x: &DenseMatrix, penalty: PenaltyKind) -> f64 {
    match penalty {
        PenaltyKind::SquaredDiag => x.diag().iter().map(|d| d * d).sum(),
        PenaltyKind::Trace => x.trace(),
    }
}

fn add_penalty_gradient(g: &mut DenseMatrix, y: &DenseMatrix, mu: f64, penalty: PenaltyKind) {
    for i in 0..g.rows() {
        g[(i, i)] += match penalty {
            PenaltyKind::SquaredDiag => 2.0 * mu * y[(i, i)],
            PenaltyKind::Trace => mu,
        };
    }
}

/// Positive root of `α_k² = (1 − α_k) α_{k−1}²`.
fn next_alpha(alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    (-a2 + (a2 * a2 + 4.0 * a2).sqrt()) / 2.0
}

/// Runs the fast gradient method from `X = 0`.
pub fn fgm_solve(m: &DenseMatrix, config: &SolverConfig) -> Result<SolverResult> {
    fgm_solve_observed(m, config, |_, _| {})
}

/// Same as [`fgm_solve`], calling `observe(k, X_k)` after every iteration.
/// The iterate passed to the observer lives in the reduced space when the
/// input has all-zero columns.
pub fn fgm_solve_observed(
    m: &DenseMatrix,
    config: &SolverConfig,
    mut observe: impl FnMut(usize, &DenseMatrix),
) -> Result<SolverResult> {
    config.validate()?;
    let n_full = m.cols();
    if n_full < 2 {
        return Err(CssnmfError::InvalidArgument(
            "the solver needs at least two columns".into(),
        ));
    }
    let weights_full = m.col_l1_norms();
    let keep: Vec<usize> = (0..n_full).filter(|&j| weights_full[j] > 0.0).collect();
    if keep.is_empty() {
        return Err(CssnmfError::ZeroLipschitz);
    }
    let reduced;
    let mr = if keep.len() == n_full {
        m
    } else {
        reduced = m.select_columns(&keep);
        &reduced
    };
    let w: Vec<f64> = keep.iter().map(|&j| weights_full[j]).collect();
    check_weights(&w)?;

    let sigma_sq = spectral_norm_sq(mr, 1e-10, 20_000).value;
    if sigma_sq == 0.0 {
        return Err(CssnmfError::ZeroLipschitz);
    }
    let lipschitz_for = |mu: f64| config.lipschitz_safety * (2.0 * sigma_sq + 2.0 * mu);

    let n = mr.cols();
    let mut mu = config.mu;
    let mut lipschitz = lipschitz_for(mu);
    let mut x = DenseMatrix::zeros(n, n);
    let mut x_prev = x.clone();
    let mut y = x.clone();
    let mut alpha = config.alpha0;

    let mut my = DenseMatrix::zeros(mr.rows(), n);
    let mut grad = DenseMatrix::zeros(n, n);
    let mut workspace = RowWorkspace::with_capacity(n);
    let mut row = vec![0.0; n];

    let mut sigma = config.mu_control.map_or(0.0, |c| c.sigma0);
    let mut direction = MuDirection::Hold;

    let mut trace = Vec::with_capacity(config.maxiter);
    let mut quiet_steps = 0;
    let mut iterations = 0;
    for k in 1..=config.maxiter {
        iterations = k;
        std::mem::swap(&mut x_prev, &mut x);

        // ∇F(Y) = 2Mᵀ(MY − M) + μ∇P(Y)
        mr.matmul_into(&y, &mut my);
        for (v, &b) in my.data_mut().iter_mut().zip(mr.data()) {
            *v -= b;
        }
        mr.tr_matmul_into(&my, &mut grad);
        for g in grad.data_mut() {
            *g *= 2.0;
        }
        add_penalty_gradient(&mut grad, &y, mu, config.penalty);

        // X = P_Ω(Y − ∇F(Y)/L), row by row.
        for i in 0..n {
            for (j, r) in row.iter_mut().enumerate() {
                *r = y[(i, j)] - grad[(i, j)] / lipschitz;
            }
            project_row(&mut row, i, &w, &mut workspace);
            for (j, &r) in row.iter().enumerate() {
                x[(i, j)] = r;
            }
        }

        // Y = X + β_k (X − X_prev)
        let alpha_next = next_alpha(alpha);
        let beta = alpha * (1.0 - alpha) / (alpha * alpha + alpha_next);
        alpha = alpha_next;
        for ((yv, &xv), &pv) in y.data_mut().iter_mut().zip(x.data()).zip(x_prev.data()) {
            *yv = xv + beta * (xv - pv);
        }

        mr.matmul_into(&x, &mut my);
        let mut res_sq = 0.0;
        for (&v, &b) in my.data().iter().zip(mr.data()) {
            res_sq += (v - b) * (v - b);
        }
        let obj = res_sq + mu * penalty_value(&x, config.penalty);
        if !obj.is_finite() {
            return Err(CssnmfError::Numerical(format!(
                "objective became non-finite at iteration {k}"
            )));
        }
        trace.push(obj);
        observe(k, &x);

        let mut restart = config.restart_period > 0 && k % config.restart_period == 0;
        if let (true, Some(c)) = (restart, &config.mu_continuation) {
            let next = (mu * c.factor).max(c.final_mu);
            if next != mu {
                mu = next;
                lipschitz = lipschitz_for(mu);
                quiet_steps = 0;
            }
        }
        if let Some(control) = &config.mu_control {
            if k % control.adjust_every == 0 && k < config.maxiter {
                // Residual grows with μ; negate it so the controller rule
                // (statistic falls as μ rises) applies unchanged.
                let (observed, target) = match control.statistic {
                    MuStatistic::Diagonal => (x.trace(), control.target),
                    MuStatistic::Residual => (-res_sq.sqrt(), -control.target),
                };
                let update = adapt_mu(mu, sigma, observed, target, direction);
                mu = update.mu;
                sigma = update.sigma;
                direction = update.direction;
                lipschitz = lipschitz_for(mu);
                restart = true;
            }
        }
        if restart {
            y.data_mut().copy_from_slice(x.data());
            alpha = config.alpha0;
        }

        // Stalling at an intermediate μ of a continuation is not convergence.
        let settled = config.mu_continuation.map_or(true, |c| mu <= c.final_mu);
        let step = x.sub(&x_prev).frobenius_norm();
        if settled && step <= 1e-9 * (1.0 + x.frobenius_norm()) {
            quiet_steps += 1;
            if quiet_steps >= 5 {
                break;
            }
        } else {
            quiet_steps = 0;
        }
    }

    let x_full = if keep.len() == n_full {
        x
    } else {
        let mut full = DenseMatrix::zeros(n_full, n_full);
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                full[(i, j)] = x[(a, b)];
            }
        }
        full
    };
    Ok(SolverResult {
        x: x_full,
        objective_trace: trace,
        final_mu: mu,
        iterations_run: iterations,
        lipschitz,
    })
}

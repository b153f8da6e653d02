//! Multiplicative controller for the penalty parameter μ.

use serde::{Deserialize, Serialize};

/// Which statistic of the iterate steers μ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MuStatistic {
    /// Diagonal mass, measured as `tr(X)`. It decreases as μ grows.
    Diagonal,
    /// Residual `‖M − MX‖_F`. It increases as μ grows.
    Residual,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuControlConfig {
    pub statistic: MuStatistic,
    /// Target value of the statistic.
    pub target: f64,
    /// Initial relative step σ₀ in `(0, 1)`.
    pub sigma0: f64,
    /// Iterations between two updates of μ.
    pub adjust_every: usize,
}

impl MuControlConfig {
    /// Trace target `τ` with the default step and cadence.
    pub fn diagonal(target: f64) -> Self {
        MuControlConfig {
            statistic: MuStatistic::Diagonal,
            target,
            sigma0: 0.5,
            adjust_every: 50,
        }
    }

    pub fn residual(target: f64) -> Self {
        MuControlConfig {
            statistic: MuStatistic::Residual,
            ..Self::diagonal(target)
        }
    }

    /// The nominal trace target `r/2 + 1`.
    pub fn default_for_rank(r: usize) -> Self {
        Self::diagonal(r as f64 / 2.0 + 1.0)
    }
}

/// Direction of the last μ update.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MuDirection {
    Increase,
    Decrease,
    #[default]
    Hold,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MuUpdate {
    pub mu: f64,
    pub sigma: f64,
    pub direction: MuDirection,
}

/// One controller step for a statistic that decreases as μ increases.
///
/// Observed above target pushes μ up, below target pushes it down. When the
/// direction flips relative to `last`, σ is halved before it is applied.
/// An exact hit leaves everything unchanged.
pub fn adapt_mu(
    current_mu: f64,
    sigma: f64,
    observed: f64,
    target: f64,
    last: MuDirection,
) -> MuUpdate {
    let direction = if observed > target {
        MuDirection::Increase
    } else if observed < target {
        MuDirection::Decrease
    } else {
        return MuUpdate {
            mu: current_mu,
            sigma,
            direction: last,
        };
    };
    let sigma = if last != MuDirection::Hold && last != direction {
        sigma / 2.0
    } else {
        sigma
    };
    let mu = match direction {
        MuDirection::Increase => current_mu * (1.0 + sigma),
        MuDirection::Decrease => current_mu * (1.0 - sigma),
        MuDirection::Hold => current_mu,
    };
    MuUpdate {
        mu,
        sigma,
        direction,
    }
}

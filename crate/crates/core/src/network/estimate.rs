//! Mean matching distance on a regular network, split into local matches on
//! the point's own edge and global matches reached through the nodes.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{normal_cdf, upper_inverse_mills};
use crate::error::{ensure, Result};
use crate::estimators::dispatch_estimate;
use crate::types::EdgeParams;

/// Number of search layers summed for the expected hop distance.
pub const DEFAULT_KAPPA: usize = 10;

/// Normal approximation to the per-edge count difference `m_e - n_e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcessMoments {
    /// `Pr{m_e > n_e}`.
    pub p_demand_excess: f64,
    /// `E[m_e - n_e | m_e > n_e]`.
    pub mean_demand_excess: f64,
    /// `Pr{n_e > m_e}`.
    pub p_supply_excess: f64,
    /// `E[n_e - m_e | n_e > m_e]`.
    pub mean_supply_excess: f64,
}

/// Treats `m_e - n_e` as normal with mean `(mu - lambda) L` and variance
/// `(mu + lambda) L`, with a half-unit continuity shift.
pub fn excess_moments(mu: f64, lambda: f64, length: f64) -> ExcessMoments {
    let s = ((lambda + mu) * length).sqrt();
    let diff = (mu - lambda) * length;
    let z_demand = (-0.5 + diff) / s;
    let z_supply = (-0.5 - diff) / s;
    ExcessMoments {
        p_demand_excess: normal_cdf(z_demand),
        mean_demand_excess: diff + s * upper_inverse_mills(z_supply),
        p_supply_excess: normal_cdf(z_supply),
        mean_supply_excess: -diff + s * upper_inverse_mills(z_demand),
    }
}

/// `Pr{d2 = kL}` for `k = 0..=kappa`, with layer `k` holding
/// `(D - 1)^(k + 1)` edges that each have surplus supply with probability
/// `p_supply_excess`.
pub fn d2_layer_probabilities(degree: usize, p_supply_excess: f64, kappa: usize) -> Vec<f64> {
    let q = 1.0 - p_supply_excess;
    let branching = degree.saturating_sub(1) as f64;
    let mut searched = 0.0;
    let mut out = Vec::with_capacity(kappa + 1);
    for k in 0..=kappa {
        let layer = branching.powi(k as i32 + 1);
        out.push(q.powf(searched) * (1.0 - q.powf(layer)));
        searched += layer;
    }
    out
}

/// Probability mass beyond layer `kappa`.
pub fn d2_tail_mass(degree: usize, p_supply_excess: f64, kappa: usize) -> f64 {
    let q = 1.0 - p_supply_excess;
    let branching = degree.saturating_sub(1) as f64;
    let searched: f64 = (0..=kappa).map(|k| branching.powi(k as i32 + 1)).sum();
    q.powf(searched)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkEstimateParts {
    /// Probability that a demand point is matched off its own edge.
    pub alpha: f64,
    /// Expected distance of a match on the point's own edge.
    pub local: f64,
    /// Distance from the point to the nearer end of its edge.
    pub d1: f64,
    /// Hops through the network.
    pub d2: f64,
    /// Distance from the last node to the matched supply point.
    pub d3: f64,
    pub total: f64,
}

/// Expected mean matching distance on a `degree`-regular network with edge
/// length `length`.
pub fn network_estimate(
    degree: usize,
    mu: f64,
    lambda: f64,
    length: f64,
    kappa: usize,
) -> Result<NetworkEstimateParts> {
    ensure!(degree >= 2, InvalidInput, "degree must be at least 2, got {degree}");
    ensure!(kappa >= 1, InvalidInput, "kappa must be at least 1");
    let params = EdgeParams::new(mu, lambda, length)?;
    let local = dispatch_estimate(&params)?.value;

    let mom = excess_moments(mu, lambda, length);
    let raw_alpha = mom.p_demand_excess * mom.mean_demand_excess / (mu * length);
    let alpha = raw_alpha.clamp(0.0, 1.0);
    if alpha != raw_alpha {
        debug!("alpha {raw_alpha} clamped to {alpha} (mu = {mu}, lambda = {lambda}, L = {length})");
    }

    let d1 = mom.mean_demand_excess / (4.0 * mu);
    let d2 = d2_layer_probabilities(degree, mom.p_supply_excess, kappa)
        .iter()
        .enumerate()
        .map(|(k, p)| k as f64 * length * p)
        .sum();
    let d3 = mu / (4.0 * lambda * lambda) * mom.mean_supply_excess;
    let total = (1.0 - alpha) * local + alpha * (d1 + d2 + d3);
    Ok(NetworkEstimateParts {
        alpha,
        local,
        d1,
        d2,
        d3,
        total,
    })
}

//! Closed-form cost model for a D2D storage community under churn.
//!
//! All costs are expected transmit energy per time unit, with the file size
//! and the D2D transfer cost both normalized to 1. Downloading from the base
//! station costs `R` per file.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::ParamError;

/// The parameter quadruple (R, N, ω, T) governing every formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Cost ratio R of a base-station download relative to a D2D download.
    pub cost_ratio: f64,
    /// Expected number of nodes N in the community.
    pub expected_nodes: f64,
    /// Per-node file request rate ω (1/time).
    pub request_rate: f64,
    /// Expected node lifetime T (time).
    pub lifetime: f64,
}

impl SystemParams {
    pub fn new(
        cost_ratio: f64,
        expected_nodes: f64,
        request_rate: f64,
        lifetime: f64,
    ) -> Result<Self, ParamError> {
        if !cost_ratio.is_finite() || cost_ratio <= 1.0 {
            return Err(ParamError::domain("R", cost_ratio, "must be finite and > 1"));
        }
        if !expected_nodes.is_finite() || expected_nodes <= 0.0 {
            return Err(ParamError::domain(
                "N",
                expected_nodes,
                "must be finite and > 0",
            ));
        }
        if !request_rate.is_finite() || request_rate <= 0.0 {
            return Err(ParamError::domain(
                "omega",
                request_rate,
                "must be finite and > 0",
            ));
        }
        if !lifetime.is_finite() || lifetime <= 0.0 {
            return Err(ParamError::domain("T", lifetime, "must be finite and > 0"));
        }
        Ok(SystemParams {
            cost_ratio,
            expected_nodes,
            request_rate,
            lifetime,
        })
    }

    /// Node departure rate λ = 1/T.
    pub fn departure_rate(&self) -> f64 {
        1.0 / self.lifetime
    }

    /// Node arrival rate N/T (Little's law).
    pub fn arrival_rate(&self) -> f64 {
        self.expected_nodes / self.lifetime
    }

    /// Aggregate request rate Nω.
    pub fn aggregate_request_rate(&self) -> f64 {
        self.expected_nodes * self.request_rate
    }
}

/// Which caching strategy a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum PolicySpec {
    /// No caching: every request is served by the base station.
    BaseStationOnly,
    /// A single node holds the whole file; a miss refetches from the BS.
    SimpleCaching,
    /// Two whole-file copies on distinct nodes; one copy is redundant.
    Replication2,
    /// A (k+1, k, k) MBR regenerating code over k+1 block holders.
    ///
    /// k = 1 is by definition identical in cost to 2-replication.
    MbrRegenerating { k: u32 },
}

impl PolicySpec {
    pub fn validate(&self) -> Result<(), ParamError> {
        match self {
            PolicySpec::MbrRegenerating { k } if *k < 1 => {
                Err(ParamError::domain("k", *k as f64, "must be >= 1"))
            }
            _ => Ok(()),
        }
    }

    /// Number of caching nodes the policy occupies, used for tie-breaking.
    pub fn caching_nodes(&self) -> u32 {
        match self {
            PolicySpec::BaseStationOnly => 0,
            PolicySpec::SimpleCaching => 1,
            PolicySpec::Replication2 => 2,
            PolicySpec::MbrRegenerating { k } => k + 1,
        }
    }
}

impl std::fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PolicySpec::BaseStationOnly => write!(f, "bs"),
            PolicySpec::SimpleCaching => write!(f, "simple"),
            PolicySpec::Replication2 => write!(f, "2rep"),
            PolicySpec::MbrRegenerating { k } => write!(f, "mbr(k={k})"),
        }
    }
}

/// Steady-state probability π(i) = N^i e^{-N} / i! of the M/M/∞ population.
///
/// Evaluated in log space so large `i` does not overflow the factorial.
pub fn steady_state_pmf(expected_nodes: f64, i: u64) -> Result<f64, ParamError> {
    if !expected_nodes.is_finite() || expected_nodes <= 0.0 {
        return Err(ParamError::domain(
            "N",
            expected_nodes,
            "must be finite and > 0",
        ));
    }
    let n = expected_nodes;
    let log_pmf = i as f64 * n.ln() - n - ln_gamma(i as f64 + 1.0);
    Ok(log_pmf.exp())
}

/// P(population < m) = Σ_{i=0}^{m-1} π(i). For m = 2 this is (N+1)e^{-N},
/// the probability that 2-replication drops below two live nodes.
pub fn prob_fewer_than(expected_nodes: f64, m: u64) -> Result<f64, ParamError> {
    if m < 1 {
        return Err(ParamError::domain("m", m as f64, "must be >= 1"));
    }
    let mut sum = 0.0;
    for i in 0..m {
        sum += steady_state_pmf(expected_nodes, i)?;
    }
    Ok(sum)
}

/// Cost rate of serving every request from the base station: RNω.
pub fn cost_bs_only(p: &SystemParams) -> f64 {
    p.cost_ratio * p.expected_nodes * p.request_rate
}

/// Cost rate of simple caching: (N²ω²T + RNω) / (1 + NωT).
pub fn cost_simple(p: &SystemParams) -> f64 {
    let agg = p.expected_nodes * p.request_rate;
    (agg * agg * p.lifetime + p.cost_ratio * agg) / (1.0 + agg * p.lifetime)
}

/// Expected repair cost rate of the (k+1, k, k) MBR code:
/// (k+1)/T · 2/(k+1) = 2/T, independent of k.
///
/// Takes `k` so the k-independence is directly testable.
pub fn repair_cost_rate(_k: u32, lifetime: f64) -> f64 {
    2.0 / lifetime
}

/// Cost rate of MBR regenerating-code caching: Nω·2k/(k+1) + 2/T.
pub fn cost_mbr(p: &SystemParams, k: u32) -> f64 {
    let retrieval = 2.0 * k as f64 / (k as f64 + 1.0);
    p.expected_nodes * p.request_rate * retrieval + 2.0 / p.lifetime
}

/// Cost rate of 2-replication: Nω + 2/T.
pub fn cost_2rep(p: &SystemParams) -> f64 {
    p.expected_nodes * p.request_rate * 1.0 + 2.0 / p.lifetime
}

/// Cost-ratio threshold R* = 3 + 2/(NωT) above which redundant caching
/// (2-replication) beats simple caching. The `cost_ratio` field is ignored.
pub fn redundancy_threshold(p: &SystemParams) -> f64 {
    3.0 + 2.0 / (p.expected_nodes * p.request_rate * p.lifetime)
}

/// Evaluates every caching method (MBR over k ∈ [1, k_max]) and returns the
/// cheapest. Ties prefer fewer caching nodes: BS-only, then simple caching,
/// then 2-replication, then MBR with smaller k.
pub fn best_policy(p: &SystemParams, k_max: u32) -> (PolicySpec, f64) {
    let mut candidates = vec![
        (PolicySpec::BaseStationOnly, cost_bs_only(p)),
        (PolicySpec::SimpleCaching, cost_simple(p)),
        (PolicySpec::Replication2, cost_2rep(p)),
    ];
    for k in 1..=k_max.max(1) {
        candidates.push((PolicySpec::MbrRegenerating { k }, cost_mbr(p, k)));
    }
    let mut best = candidates[0];
    for cand in &candidates[1..] {
        if cand.1 < best.1 {
            best = *cand;
        }
    }
    best
}

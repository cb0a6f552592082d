//! Primitives of the builders' game: parameters, Plackett-Luce win
//! probabilities, realized revenues, and the expected-utility objective
//! with its first two derivatives.
//!
//! With `H = sum_j h_j`, builder `i`'s expected utility is
//!
//! ```text
//! pi_i(h) = f_bar_i * h_i/H + v_bar_i * (h_i/H)^2 - h_i^2/H
//! ```
//!
//! All quantities are double-precision currency values. Operations are
//! pure; Monte-Carlo sampling takes an explicit RNG.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-builder expected MEV values and bid-support bounds.
///
/// `f_bar` is the expected standalone MEV, `v_bar` the expected value of
/// winning the order flow. Requires `f_bar >= v_bar > 0` and
/// `0 < r_min <= r_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuilderParams {
    pub f_bar: f64,
    pub v_bar: f64,
    pub r_min: f64,
    pub r_max: f64,
}

impl BuilderParams {
    pub fn new(f_bar: f64, v_bar: f64, r_min: f64, r_max: f64) -> Result<Self> {
        if !(f_bar > 0.0 && v_bar > 0.0) {
            return Err(Error::InvalidParams(format!(
                "f_bar and v_bar must be positive (got f_bar={f_bar}, v_bar={v_bar})"
            )));
        }
        if f_bar < v_bar {
            return Err(Error::InvalidParams(format!(
                "f_bar must be at least v_bar (got f_bar={f_bar} < v_bar={v_bar})"
            )));
        }
        if !(r_min > 0.0 && r_min <= r_max) {
            return Err(Error::InvalidParams(format!(
                "bid support must satisfy 0 < r_min <= r_max (got [{r_min}, {r_max}])"
            )));
        }
        Ok(Self { f_bar, v_bar, r_min, r_max })
    }

    /// Bid support defaulted to the widest range the equilibrium can use:
    /// an arbitrarily small floor up to `f_bar + v_bar`.
    pub fn from_means(f_bar: f64, v_bar: f64) -> Result<Self> {
        let cap = f_bar + v_bar;
        Self::new(f_bar, v_bar, 1e-6 * cap, cap)
    }

    /// Upper bound on any best response: `f_bar + v_bar`.
    pub fn bid_cap(&self) -> f64 {
        self.f_bar + self.v_bar
    }
}

/// The auction environment: split fraction `mu`, strategy-space floor
/// `epsilon`, and the `M >= 2` builders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionConfig {
    pub mu: f64,
    pub epsilon: f64,
    pub builders: Vec<BuilderParams>,
}

impl AuctionConfig {
    pub fn new(mu: f64, epsilon: f64, builders: Vec<BuilderParams>) -> Result<Self> {
        if !(0.0..=1.0).contains(&mu) {
            return Err(Error::InvalidParams(format!("mu must lie in [0, 1], got {mu}")));
        }
        if builders.len() < 2 {
            return Err(Error::InvalidParams(format!(
                "need at least 2 builders, got {}",
                builders.len()
            )));
        }
        let min_cap = builders.iter().map(BuilderParams::bid_cap).fold(f64::INFINITY, f64::min);
        if !(epsilon > 0.0 && epsilon < min_cap) {
            return Err(Error::InvalidParams(format!(
                "epsilon must satisfy 0 < epsilon < min_i (f_bar_i + v_bar_i) = {min_cap}, got {epsilon}"
            )));
        }
        Ok(Self { mu, epsilon, builders })
    }

    /// Build a config with the default floor `1e-6 * min_i (f_bar_i + v_bar_i)`.
    pub fn with_default_epsilon(mu: f64, builders: Vec<BuilderParams>) -> Result<Self> {
        let min_cap = builders.iter().map(BuilderParams::bid_cap).fold(f64::INFINITY, f64::min);
        Self::new(mu, 1e-6 * min_cap, builders)
    }

    pub fn num_builders(&self) -> usize {
        self.builders.len()
    }
}

/// A vector of expected bids, one per builder, all strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub h: Vec<f64>,
}

impl StrategyProfile {
    pub fn new(h: Vec<f64>) -> Result<Self> {
        for (index, &value) in h.iter().enumerate() {
            if !(value > 0.0) {
                return Err(Error::NonPositiveBid { index, value });
            }
        }
        Ok(Self { h })
    }

    pub fn total(&self) -> f64 {
        self.h.iter().sum()
    }

    pub fn total_excluding(&self, i: usize) -> f64 {
        self.total() - self.h[i]
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.h.len() {
            return Err(Error::IndexOutOfRange { index: i, len: self.h.len() });
        }
        Ok(())
    }
}

/// Realized outcome of the two auctions for one builder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuctionOutcome {
    pub won_ofa: bool,
    pub won_block: bool,
    /// Realized standalone MEV.
    pub f: f64,
    /// Realized order-flow value.
    pub v: f64,
    /// Realized total bid.
    pub r: f64,
}

/// Plackett-Luce win probability `h_i / sum_j h_j`.
pub fn win_probability(h: &StrategyProfile, i: usize) -> Result<f64> {
    h.check_index(i)?;
    let total = h.total();
    if total == 0.0 {
        return Err(Error::ZeroTotalBid);
    }
    Ok(h.h[i] / total)
}

/// Revenue of one realized outcome:
/// (win, win) -> f + v - r; (win, lose) -> -mu*r;
/// (lose, win) -> f - (1-mu)*r; (lose, lose) -> 0.
pub fn realized_revenue(outcome: &AuctionOutcome, mu: f64) -> f64 {
    match (outcome.won_ofa, outcome.won_block) {
        (true, true) => outcome.f + outcome.v - outcome.r,
        (true, false) => -mu * outcome.r,
        (false, true) => outcome.f - (1.0 - mu) * outcome.r,
        (false, false) => 0.0,
    }
}

/// Expected utility `pi_i(h)` of builder `i`.
pub fn expected_utility(i: usize, h: &StrategyProfile, params: &AuctionConfig) -> Result<f64> {
    h.check_index(i)?;
    let total = h.total();
    if total == 0.0 {
        return Err(Error::ZeroTotalBid);
    }
    let b = &params.builders[i];
    let share = h.h[i] / total;
    Ok(b.f_bar * share + b.v_bar * share * share - h.h[i] * h.h[i] / total)
}

/// First derivative of `pi_i` with respect to `h_i`.
pub fn utility_gradient(i: usize, h: &StrategyProfile, params: &AuctionConfig) -> Result<f64> {
    h.check_index(i)?;
    let total = h.total();
    if total == 0.0 {
        return Err(Error::ZeroTotalBid);
    }
    let b = &params.builders[i];
    let hi = h.h[i];
    let numerator = -b.f_bar * hi * total + b.f_bar * total * total + 2.0 * b.v_bar * hi * total
        - 2.0 * hi * hi * b.v_bar
        - 2.0 * hi * total * total
        + hi * hi * total;
    Ok(numerator / (total * total * total))
}

/// Second derivative of `pi_i` with respect to `h_i`; strictly negative
/// whenever `f_bar_i >= v_bar_i` and at least one opponent bids.
pub fn utility_second_derivative(
    i: usize,
    h: &StrategyProfile,
    params: &AuctionConfig,
) -> Result<f64> {
    h.check_index(i)?;
    let total = h.total();
    if total == 0.0 {
        return Err(Error::ZeroTotalBid);
    }
    let b = &params.builders[i];
    let hi = h.h[i];
    let rest = total - hi;
    let numerator =
        -2.0 * rest * (b.f_bar * total + rest * (rest - b.v_bar) + hi * (rest + 2.0 * b.v_bar));
    Ok(numerator / (total * total * total * total))
}

/// How realized bids `r_i` are drawn around their means.
///
/// The objective depends only on the means, so the default is a point
/// mass at `h_i`. The uniform spread draws `r_i ~ U[h_i - delta, h_i + delta]`
/// with the interval truncated to the builder's support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum BidSpread {
    #[default]
    PointMass,
    Uniform {
        delta: f64,
    },
}

impl BidSpread {
    pub(crate) fn sample<R: Rng>(&self, mean: f64, support: (f64, f64), rng: &mut R) -> f64 {
        match *self {
            BidSpread::PointMass => mean,
            BidSpread::Uniform { delta } => {
                let lo = (mean - delta).max(support.0);
                let hi = (mean + delta).min(support.1);
                if lo >= hi {
                    lo
                } else {
                    rng.gen_range(lo..hi)
                }
            }
        }
    }
}

/// Monte-Carlo estimate of builder `i`'s expected revenue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RevenueEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub draws: usize,
}

/// Simulate the two independent auctions and average `realized_revenue`.
///
/// Winners of the two auctions are drawn independently, each with
/// Plackett-Luce probabilities; realized `f`, `v` are point masses at
/// their means and `r` follows `spread`. The mean converges to
/// [`expected_utility`] under the point-mass default.
pub fn sample_revenue_monte_carlo<R: Rng>(
    i: usize,
    h: &StrategyProfile,
    params: &AuctionConfig,
    spread: BidSpread,
    draws: usize,
    rng: &mut R,
) -> Result<RevenueEstimate> {
    h.check_index(i)?;
    if draws == 0 {
        return Err(Error::InvalidParams("draws must be at least 1".into()));
    }
    let total = h.total();
    if total == 0.0 {
        return Err(Error::ZeroTotalBid);
    }
    let b = &params.builders[i];
    let win_prob = h.h[i] / total;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..draws {
        let won_ofa = rng.gen::<f64>() < win_prob;
        let won_block = rng.gen::<f64>() < win_prob;
        let r = spread.sample(h.h[i], (b.r_min, b.r_max), rng);
        let outcome = AuctionOutcome { won_ofa, won_block, f: b.f_bar, v: b.v_bar, r };
        let revenue = realized_revenue(&outcome, params.mu);
        sum += revenue;
        sum_sq += revenue * revenue;
    }
    let n = draws as f64;
    let mean = sum / n;
    let variance = ((sum_sq - sum * sum / n) / (n - 1.0).max(1.0)).max(0.0);
    Ok(RevenueEstimate { mean, standard_error: (variance / n).sqrt(), draws })
}

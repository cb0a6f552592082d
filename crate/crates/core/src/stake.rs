//! Validators' stake-share process: a Pólya urn with random rewards and
//! staking costs.
//!
//! At each step a validator is selected with probability equal to its
//! stake share, receives the reward `R_t = max{beta_w, beta_v}` (the
//! winning builder's payment or the validator's self-built block), and
//! every validator pays the cost `alpha * s_j / S^(1+gamma)`. The total
//! then follows `S_t = S_{t-1} + R_t - alpha / S_{t-1}^gamma`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{Error, Result};
use crate::game::BidSpread;
use crate::seed::{derive_rng, task};

/// Which fraction of the winning bid reaches the validator.
///
/// The model's constants (`R_min`, `R_max`, the stability bounds) are all
/// defined with the `mu` fraction; the `1 - mu` reading of the builders'
/// split is kept available as a switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PaymentRule {
    #[default]
    Mu,
    OneMinusMu,
}

/// Distribution of the per-step validator reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardModel {
    /// Split fraction of the builders' bids.
    pub mu: f64,
    /// Value of the block the validator can build itself.
    pub beta_v: f64,
    /// Expected bids `h_i` of the builders.
    pub bids: Vec<f64>,
    /// Bid supports `(r_i_min, r_i_max)`.
    pub supports: Vec<(f64, f64)>,
    /// Spread of realized bids around their means.
    pub spread: BidSpread,
    pub payment_rule: PaymentRule,
}

impl RewardModel {
    /// Point-mass bids with supports collapsed onto the bid values.
    pub fn point_mass(mu: f64, beta_v: f64, bids: Vec<f64>) -> Result<Self> {
        let supports = bids.iter().map(|&h| (h, h)).collect();
        Self::new(mu, beta_v, bids, supports, BidSpread::PointMass, PaymentRule::Mu)
    }

    pub fn new(
        mu: f64,
        beta_v: f64,
        bids: Vec<f64>,
        supports: Vec<(f64, f64)>,
        spread: BidSpread,
        payment_rule: PaymentRule,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&mu) {
            return Err(Error::InvalidParams(format!("mu must lie in [0, 1], got {mu}")));
        }
        if beta_v < 0.0 {
            return Err(Error::InvalidParams(format!("beta_v must be nonnegative, got {beta_v}")));
        }
        if bids.is_empty() || bids.len() != supports.len() {
            return Err(Error::InvalidParams(format!(
                "need matching nonempty bids and supports, got {} and {}",
                bids.len(),
                supports.len()
            )));
        }
        for (i, (&h, &(lo, hi))) in bids.iter().zip(&supports).enumerate() {
            if !(h > 0.0) {
                return Err(Error::NonPositiveBid { index: i, value: h });
            }
            if !(lo > 0.0 && lo <= hi && lo <= h && h <= hi) {
                return Err(Error::InvalidParams(format!(
                    "support [{lo}, {hi}] of builder {i} must be positive and contain its bid {h}"
                )));
            }
        }
        let model = Self { mu, beta_v, bids, supports, spread, payment_rule };
        if !(model.r_min() > 0.0) {
            return Err(Error::InvalidParams("minimum reward must be positive".into()));
        }
        Ok(model)
    }

    fn pay_fraction(&self) -> f64 {
        match self.payment_rule {
            PaymentRule::Mu => self.mu,
            PaymentRule::OneMinusMu => 1.0 - self.mu,
        }
    }

    fn win_probs(&self) -> Vec<f64> {
        let total: f64 = self.bids.iter().sum();
        self.bids.iter().map(|h| h / total).collect()
    }

    /// `R_min = min_i max{beta_v, mu * r_i_min}`.
    pub fn r_min(&self) -> f64 {
        let c = self.pay_fraction();
        self.supports
            .iter()
            .map(|(lo, _)| self.beta_v.max(c * lo))
            .fold(f64::INFINITY, f64::min)
    }

    /// `R_max = max_i max{beta_v, mu * r_i_max}`.
    pub fn r_max(&self) -> f64 {
        let c = self.pay_fraction();
        self.supports.iter().map(|(_, hi)| self.beta_v.max(c * hi)).fold(0.0, f64::max)
    }

    /// Closed-form mean `R = sum_i p_i E[max{beta_v, mu r_i}]`.
    pub fn mean(&self) -> f64 {
        let c = self.pay_fraction();
        self.win_probs()
            .iter()
            .zip(self.bids.iter().zip(&self.supports))
            .map(|(p, (&h, &(s_lo, s_hi)))| {
                let term = match self.spread {
                    BidSpread::PointMass => self.beta_v.max(c * h),
                    BidSpread::Uniform { delta } => {
                        let lo = (h - delta).max(s_lo);
                        let hi = (h + delta).min(s_hi);
                        expected_max_uniform(self.beta_v, c, lo, hi)
                    }
                };
                p * term
            })
            .sum()
    }

    /// Distinct reward values with their probabilities; only defined for
    /// point-mass bids, where the reward distribution is finite.
    pub fn support_points(&self) -> Result<Vec<(f64, f64)>> {
        if self.spread != BidSpread::PointMass {
            return Err(Error::Unsupported {
                required: "point-mass bids",
                actual: "uniform bid spread".into(),
            });
        }
        let c = self.pay_fraction();
        let mut points: Vec<(f64, f64)> = Vec::new();
        for (p, &h) in self.win_probs().iter().zip(&self.bids) {
            let value = self.beta_v.max(c * h);
            match points.iter_mut().find(|(v, _)| (*v - value).abs() <= 1e-12 * value.abs()) {
                Some((_, prob)) => *prob += p,
                None => points.push((value, *p)),
            }
        }
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite rewards"));
        Ok(points)
    }

    /// Draw one reward: the winning builder via Plackett-Luce, its
    /// realized bid via the configured spread, then `max{beta_v, mu r}`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let c = self.pay_fraction();
        let total: f64 = self.bids.iter().sum();
        let mut u = rng.gen::<f64>() * total;
        let mut winner = self.bids.len() - 1;
        for (i, &h) in self.bids.iter().enumerate() {
            if u < h {
                winner = i;
                break;
            }
            u -= h;
        }
        let support = self.supports[winner];
        let (lo, hi) = match self.spread {
            BidSpread::PointMass => (self.bids[winner], self.bids[winner]),
            BidSpread::Uniform { delta } => (
                (self.bids[winner] - delta).max(support.0),
                (self.bids[winner] + delta).min(support.1),
            ),
        };
        let r = if lo >= hi { lo } else { rng.gen_range(lo..hi) };
        self.beta_v.max(c * r)
    }
}

/// `E[max{b, c X}]` for `X ~ Uniform[lo, hi]`.
fn expected_max_uniform(b: f64, c: f64, lo: f64, hi: f64) -> f64 {
    if lo >= hi {
        return b.max(c * lo);
    }
    if c * hi <= b {
        return b;
    }
    if c * lo >= b {
        return c * (lo + hi) / 2.0;
    }
    let threshold = b / c;
    let width = hi - lo;
    b * (threshold - lo) / width + c * (hi * hi - threshold * threshold) / (2.0 * width)
}

pub fn sample_reward<R: Rng>(reward: &RewardModel, rng: &mut R) -> f64 {
    reward.sample(rng)
}

pub fn mean_reward(reward: &RewardModel) -> f64 {
    reward.mean()
}

/// Full configuration of one stake-share simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StakeConfig {
    pub initial_stakes: Vec<f64>,
    /// Cost coefficient; bounded by `min{S0^gamma R_min, S0, R_min}`.
    pub alpha: f64,
    /// Cost exponent, `>= 0`.
    pub gamma: f64,
    pub reward: RewardModel,
    /// Number of steps `T`.
    pub horizon: usize,
}

impl StakeConfig {
    pub fn new(
        initial_stakes: Vec<f64>,
        alpha: f64,
        gamma: f64,
        reward: RewardModel,
        horizon: usize,
    ) -> Result<Self> {
        if initial_stakes.is_empty() {
            return Err(Error::InvalidParams("need at least one validator".into()));
        }
        for (j, &s) in initial_stakes.iter().enumerate() {
            if !(s > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "initial stake of validator {j} must be positive, got {s}"
                )));
            }
        }
        if gamma < 0.0 {
            return Err(Error::InvalidParams(format!("gamma must be nonnegative, got {gamma}")));
        }
        let total: f64 = initial_stakes.iter().sum();
        let r_min = reward.r_min();
        let bound = (total.powf(gamma) * r_min).min(total).min(r_min);
        if !(alpha >= 0.0 && alpha < bound) {
            return Err(Error::InvalidParams(format!(
                "alpha = {alpha} violates the cost bound alpha < min{{S0^gamma R_min, S0, R_min}} = {bound}; \
                 the total stake would not be strictly increasing"
            )));
        }
        Ok(Self { initial_stakes, alpha, gamma, reward, horizon })
    }

    pub fn n_validators(&self) -> usize {
        self.initial_stakes.len()
    }

    pub fn total_initial_stake(&self) -> f64 {
        self.initial_stakes.iter().sum()
    }

    pub fn initial_shares(&self) -> Vec<f64> {
        let total = self.total_initial_stake();
        self.initial_stakes.iter().map(|s| s / total).collect()
    }
}

/// One stake update: the selected validator gains `reward`, everyone pays
/// the proportional cost. The new total equals `S + R - alpha / S^gamma`
/// by construction; monotonicity and positivity are asserted.
pub fn step(
    stakes: &[f64],
    reward: f64,
    selected: usize,
    alpha: f64,
    gamma: f64,
) -> Result<Vec<f64>> {
    if selected >= stakes.len() {
        return Err(Error::IndexOutOfRange { index: selected, len: stakes.len() });
    }
    let total: f64 = stakes.iter().sum();
    let cost_rate = alpha / total.powf(1.0 + gamma);
    let new: Vec<f64> = stakes
        .iter()
        .enumerate()
        .map(|(j, &s)| s + if j == selected { reward } else { 0.0 } - cost_rate * s)
        .collect();
    let new_total: f64 = new.iter().sum();
    // The cost bound keeps the aggregate growing and each stake positive;
    // a violation means the configuration left the model's assumptions.
    if new_total <= total {
        return Err(Error::Domain {
            context: "stake step",
            detail: format!("total stake did not increase: {total} -> {new_total}"),
        });
    }
    if let Some((j, &s)) = new.iter().enumerate().find(|(_, &s)| !(s > 0.0)) {
        return Err(Error::Domain {
            context: "stake step",
            detail: format!("stake of validator {j} became nonpositive: {s}"),
        });
    }
    Ok(new)
}

/// One seeded replication of the process.
///
/// Row `t` of `stakes`/`shares` is the state after `t` steps (row 0 is
/// the initial state, `horizon + 1` rows in total); `rewards[t]` and
/// `selected[t]` describe step `t + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub stakes: Vec<Vec<f64>>,
    pub totals: Vec<f64>,
    pub shares: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub selected: Vec<usize>,
    pub seed: u64,
}

impl Trajectory {
    pub fn final_shares(&self) -> &[f64] {
        self.shares.last().expect("at least the initial row")
    }

    /// CSV export: `t, S_t, R_t, selected, s_1..s_N, w_1..w_N`.
    pub fn write_csv<W: Write>(&self, writer: &mut W) -> Result<()> {
        let n = self.stakes[0].len();
        write!(writer, "t,total,reward,selected")?;
        for j in 1..=n {
            write!(writer, ",s_{j}")?;
        }
        for j in 1..=n {
            write!(writer, ",w_{j}")?;
        }
        writeln!(writer)?;
        for t in 0..self.stakes.len() {
            write!(writer, "{t},{}", self.totals[t])?;
            if t == 0 {
                write!(writer, ",,")?;
            } else {
                write!(writer, ",{},{}", self.rewards[t - 1], self.selected[t - 1])?;
            }
            for s in &self.stakes[t] {
                write!(writer, ",{s}")?;
            }
            for w in &self.shares[t] {
                write!(writer, ",{w}")?;
            }
            writeln!(writer)?;
        }
        Ok(())
    }
}

/// Run one replication with streams derived from `seed`.
pub fn simulate(config: &StakeConfig, seed: u64) -> Result<Trajectory> {
    let selection = derive_rng(seed, task::STAKE_SELECTION, 0);
    let rewards = derive_rng(seed, task::STAKE_REWARD, 0);
    simulate_with_streams(config, seed, selection, rewards)
}

/// Run one replication with explicit selection and reward streams. The
/// two streams are kept separate so tests can vary one while holding the
/// other fixed.
pub fn simulate_with_streams(
    config: &StakeConfig,
    seed: u64,
    mut selection_rng: ChaCha8Rng,
    mut reward_rng: ChaCha8Rng,
) -> Result<Trajectory> {
    let n = config.n_validators();
    let mut stakes = Vec::with_capacity(config.horizon + 1);
    let mut totals = Vec::with_capacity(config.horizon + 1);
    let mut shares = Vec::with_capacity(config.horizon + 1);
    let mut rewards = Vec::with_capacity(config.horizon);
    let mut selected = Vec::with_capacity(config.horizon);

    let mut current = config.initial_stakes.clone();
    let mut total: f64 = current.iter().sum();
    stakes.push(current.clone());
    totals.push(total);
    shares.push(current.iter().map(|s| s / total).collect());

    for _ in 0..config.horizon {
        // Selection is proportional to the previous shares and independent
        // of the reward draw.
        let mut u = selection_rng.gen::<f64>() * total;
        let mut j_sel = n - 1;
        for (j, &s) in current.iter().enumerate() {
            if u < s {
                j_sel = j;
                break;
            }
            u -= s;
        }
        let reward = config.reward.sample(&mut reward_rng);
        current = step(&current, reward, j_sel, config.alpha, config.gamma)?;
        total = current.iter().sum();
        stakes.push(current.clone());
        totals.push(total);
        shares.push(current.iter().map(|s| s / total).collect());
        rewards.push(reward);
        selected.push(j_sel);
    }
    Ok(Trajectory { stakes, totals, shares, rewards, selected, seed })
}

/// Run `replications` independent trajectories in parallel, with
/// per-replication streams derived from `(master_seed, index)`.
pub fn simulate_replications(
    config: &StakeConfig,
    master_seed: u64,
    replications: usize,
) -> Result<Vec<Trajectory>> {
    (0..replications as u64)
        .into_par_iter()
        .map(|rep| {
            let selection = derive_rng(master_seed, task::STAKE_SELECTION, rep);
            let rewards = derive_rng(master_seed, task::STAKE_REWARD, rep);
            simulate_with_streams(config, master_seed ^ rep, selection, rewards)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthRateEstimate {
    /// Tail regression slope of the mean total stake.
    pub slope: f64,
    /// `R` for `gamma > 0`, `R - alpha` for `gamma = 0`.
    pub target: f64,
    /// Fraction of the horizon used for the regression.
    pub tail_fraction: f64,
    /// False when the cost term is still non-negligible over the tail.
    pub horizon_sufficient: bool,
}

/// Estimate `lim S_t / t` by least squares on the tail of the mean total.
pub fn growth_rate(
    config: &StakeConfig,
    trajectories: &[Trajectory],
    tail_fraction: f64,
) -> Result<GrowthRateEstimate> {
    if trajectories.is_empty() {
        return Err(Error::InvalidParams("need at least one trajectory".into()));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "tail fraction must lie in (0, 1], got {tail_fraction}"
        )));
    }
    let len = trajectories[0].totals.len();
    let mut mean_totals = vec![0.0; len];
    for trajectory in trajectories {
        for (acc, &s) in mean_totals.iter_mut().zip(&trajectory.totals) {
            *acc += s;
        }
    }
    for value in &mut mean_totals {
        *value /= trajectories.len() as f64;
    }

    let start = ((len as f64) * (1.0 - tail_fraction)) as usize;
    let (mut sum_t, mut sum_s, mut sum_tt, mut sum_ts) = (0.0, 0.0, 0.0, 0.0);
    let mut count = 0.0;
    for (t, &s) in mean_totals.iter().enumerate().skip(start) {
        let t = t as f64;
        sum_t += t;
        sum_s += s;
        sum_tt += t * t;
        sum_ts += t * s;
        count += 1.0;
    }
    let slope = (count * sum_ts - sum_t * sum_s) / (count * sum_tt - sum_t * sum_t);

    let mean = config.reward.mean();
    let target = if config.gamma > 0.0 { mean } else { mean - config.alpha };
    // Residual cost rate at the start of the tail window.
    let residual_cost = if config.gamma > 0.0 {
        config.alpha / mean_totals[start].powf(config.gamma)
    } else {
        0.0 // exactly absorbed into the target
    };
    Ok(GrowthRateEstimate {
        slope,
        target,
        tail_fraction,
        horizon_sufficient: residual_cost <= 0.01 * mean,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShareStatistic {
    pub validator: usize,
    pub initial_share: f64,
    pub mean_final_share: f64,
    pub standard_error: f64,
}

impl ShareStatistic {
    /// Whether the martingale prediction `E[w_T] = w_0` holds at 3 SE.
    pub fn within_three_se(&self) -> bool {
        (self.mean_final_share - self.initial_share).abs() <= 3.0 * self.standard_error
    }
}

/// Per-validator mean final share with its standard error; the martingale
/// property predicts the mean equals the initial share.
pub fn martingale_statistics(
    config: &StakeConfig,
    trajectories: &[Trajectory],
) -> Result<Vec<ShareStatistic>> {
    if trajectories.len() < 100 {
        return Err(Error::InvalidParams(format!(
            "need at least 100 replications, got {}",
            trajectories.len()
        )));
    }
    let n = config.n_validators();
    let reps = trajectories.len() as f64;
    let initial = config.initial_shares();
    let mut stats = Vec::with_capacity(n);
    for j in 0..n {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for trajectory in trajectories {
            let w = trajectory.final_shares()[j];
            sum += w;
            sum_sq += w * w;
        }
        let mean = sum / reps;
        let variance = ((sum_sq - sum * sum / reps) / (reps - 1.0)).max(0.0);
        stats.push(ShareStatistic {
            validator: j,
            initial_share: initial[j],
            mean_final_share: mean,
            standard_error: (variance / reps).sqrt(),
        });
    }
    Ok(stats)
}

/// How `z_t = E[(R_t / S_t)^2]` is obtained for the variance recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ZEstimator {
    /// Exact enumeration over reward paths; needs a finite reward support
    /// of at most two points (the convolution stays binomial).
    Exact,
    /// Average over sampled reward paths.
    MonteCarlo { paths: usize, seed: u64 },
}

/// The unconditional-variance factors `a_0..a_t_max` for `gamma = 0`,
/// where `Var(w_{j,t}) = a_t w_{j,0} (1 - w_{j,0})` and
/// `a_{t+1} = a_t + z_{t+1} (1 - a_t)`.
pub fn variance_recursion(
    config: &StakeConfig,
    t_max: usize,
    estimator: ZEstimator,
) -> Result<Vec<f64>> {
    if config.gamma != 0.0 {
        return Err(Error::Unsupported {
            required: "gamma = 0",
            actual: format!("gamma = {}", config.gamma),
        });
    }
    let z = match estimator {
        ZEstimator::Exact => exact_z_sequence(config, t_max)?,
        ZEstimator::MonteCarlo { paths, seed } => monte_carlo_z_sequence(config, t_max, paths, seed),
    };
    let mut a = Vec::with_capacity(t_max + 1);
    a.push(0.0);
    for &z_t in &z {
        let prev = *a.last().expect("nonempty");
        a.push(prev + z_t * (1.0 - prev));
    }
    Ok(a)
}

/// Exact `z_t` for a two-point reward: condition on the step-`t` reward
/// and convolve the earlier draws (a binomial count, built iteratively
/// to stay in the probability scale).
fn exact_z_sequence(config: &StakeConfig, t_max: usize) -> Result<Vec<f64>> {
    let points = config.reward.support_points()?;
    if points.len() > 2 {
        return Err(Error::Unsupported {
            required: "a reward support of at most 2 points",
            actual: format!("{} points", points.len()),
        });
    }
    let s0 = config.total_initial_stake();
    let alpha = config.alpha;
    let mut z = Vec::with_capacity(t_max);
    if points.len() == 1 {
        let (value, _) = points[0];
        for t in 1..=t_max {
            let s_t = s0 + (t as f64) * (value - alpha);
            z.push((value / s_t).powi(2));
        }
        return Ok(z);
    }
    let [(c0, p0), (c1, p1)] = [points[0], points[1]];
    // pmf[k] = P(k of the first t-1 rewards equal c1)
    let mut pmf = vec![1.0];
    for t in 1..=t_max {
        let drift = s0 - (t as f64) * alpha;
        let mut z_t = 0.0;
        for (k, &prob) in pmf.iter().enumerate() {
            let partial = drift + (k as f64) * c1 + ((t - 1 - k) as f64) * c0;
            z_t += prob
                * (p0 * (c0 / (partial + c0)).powi(2) + p1 * (c1 / (partial + c1)).powi(2));
        }
        z.push(z_t);
        // convolve one more draw
        let mut next = vec![0.0; pmf.len() + 1];
        for (k, &prob) in pmf.iter().enumerate() {
            next[k] += prob * p0;
            next[k + 1] += prob * p1;
        }
        pmf = next;
    }
    Ok(z)
}

fn monte_carlo_z_sequence(config: &StakeConfig, t_max: usize, paths: usize, seed: u64) -> Vec<f64> {
    let s0 = config.total_initial_stake();
    let alpha = config.alpha;
    let sums: Vec<f64> = (0..paths as u64)
        .into_par_iter()
        .map(|path| {
            let mut rng = derive_rng(seed, task::VARIANCE_PATHS, path);
            let mut total = s0;
            let mut contributions = vec![0.0; t_max];
            for slot in contributions.iter_mut() {
                let reward = config.reward.sample(&mut rng);
                total += reward - alpha;
                *slot = (reward / total).powi(2);
            }
            contributions
        })
        .reduce(
            || vec![0.0; t_max],
            |mut acc, contributions| {
                for (a, c) in acc.iter_mut().zip(&contributions) {
                    *a += c;
                }
                acc
            },
        );
    sums.into_iter().map(|s| s / paths as f64).collect()
}

/// Horizon-uniform upper bound `R_max^2 / (S0 (R_min - alpha))` on `a_t`.
pub fn variance_factor_bound(config: &StakeConfig) -> f64 {
    let r_min = config.reward.r_min();
    let r_max = config.reward.r_max();
    r_max * r_max / (config.total_initial_stake() * (r_min - config.alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub validator: usize,
    /// Chebyshev bound `R_max^2 / ((R_min - alpha) eps^2 s_{j,0})`.
    pub bound: f64,
    /// Fraction of runs with `|w_{j,T}/w_{j,0} - 1| > eps`.
    pub empirical_probability: f64,
    pub binomial_se: f64,
    /// A bound of 1 or more says nothing; reported, not counted as a pass.
    pub vacuous: bool,
}

/// Compare the share-stability tail bound against its empirical frequency.
pub fn chebyshev_stability(
    config: &StakeConfig,
    epsilon_dev: f64,
    trajectories: &[Trajectory],
) -> Result<Vec<StabilityReport>> {
    if config.gamma != 0.0 {
        return Err(Error::Unsupported {
            required: "gamma = 0",
            actual: format!("gamma = {}", config.gamma),
        });
    }
    if !(epsilon_dev > 0.0) {
        return Err(Error::InvalidParams(format!("epsilon_dev must be positive, got {epsilon_dev}")));
    }
    if trajectories.is_empty() {
        return Err(Error::InvalidParams("need at least one trajectory".into()));
    }
    let r_min = config.reward.r_min();
    let r_max = config.reward.r_max();
    let reps = trajectories.len() as f64;
    let initial = config.initial_shares();
    let mut reports = Vec::with_capacity(config.n_validators());
    for j in 0..config.n_validators() {
        let bound = r_max * r_max
            / ((r_min - config.alpha) * epsilon_dev * epsilon_dev * config.initial_stakes[j]);
        let exceed = trajectories
            .iter()
            .filter(|trajectory| {
                (trajectory.final_shares()[j] / initial[j] - 1.0).abs() > epsilon_dev
            })
            .count() as f64;
        let p_hat = exceed / reps;
        reports.push(StabilityReport {
            validator: j,
            bound,
            empirical_probability: p_hat,
            binomial_se: (p_hat * (1.0 - p_hat) / reps).sqrt(),
            vacuous: bound >= 1.0,
        });
    }
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitResidualReport {
    pub grid: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// `|LHS - RHS|` per grid point.
    pub residuals: Vec<f64>,
    /// Combined Monte-Carlo standard error per grid point.
    pub standard_errors: Vec<f64>,
    pub max_residual: f64,
    /// Largest 95% error band, `1.96 * max SE`.
    pub max_error_95: f64,
    pub replications: usize,
}

impl LimitResidualReport {
    /// Whether every residual sits inside its own 95% error band.
    pub fn consistent(&self) -> bool {
        self.residuals
            .iter()
            .zip(&self.standard_errors)
            .all(|(r, se)| *r <= 1.96 * se)
    }
}

/// Self-consistency check of the limiting-share functional equation for
/// `alpha = 0`.
///
/// The share process of validator `j` depends on the initial state only
/// through `(s_j, S - s_j)`, so the left side is estimated from the
/// configured start at horizon `T` and the right side mixes, over the
/// first-step reward `m`, fresh two-validator simulations of horizon
/// `T - 1` started from `(s_j + m, S - s_j)` and `(s_j, S - s_j + m)`,
/// weighted by `w_{j,0}` and `1 - w_{j,0}`.
pub fn limiting_distribution_residual(
    config: &StakeConfig,
    validator: usize,
    grid: &[f64],
    replications: usize,
    master_seed: u64,
) -> Result<LimitResidualReport> {
    if config.alpha != 0.0 {
        return Err(Error::Unsupported {
            required: "alpha = 0",
            actual: format!("alpha = {}", config.alpha),
        });
    }
    if validator >= config.n_validators() {
        return Err(Error::IndexOutOfRange { index: validator, len: config.n_validators() });
    }
    if grid.is_empty() || config.horizon == 0 {
        return Err(Error::InvalidParams("need a nonempty grid and a positive horizon".into()));
    }
    let points = config.reward.support_points()?;
    let s_j = config.initial_stakes[validator];
    let rest = config.total_initial_stake() - s_j;
    let w0 = s_j / (s_j + rest);

    // LHS: the configured process at horizon T (validator `validator`).
    let lhs_trajs = simulate_replications(config, master_seed, replications)?;
    let (lhs, lhs_var): (Vec<f64>, Vec<f64>) =
        cdf_with_variance(grid, lhs_trajs.iter().map(|t| t.final_shares()[validator]));

    // RHS: one two-validator simulation per (reward point, branch).
    let mut rhs = vec![0.0; grid.len()];
    let mut rhs_var = vec![0.0; grid.len()];
    for (branch, weight) in [(0usize, w0), (1usize, 1.0 - w0)] {
        for (point_index, &(m, prob)) in points.iter().enumerate() {
            let stakes = if branch == 0 { vec![s_j + m, rest] } else { vec![s_j, rest + m] };
            let sub = StakeConfig::new(
                stakes,
                0.0,
                config.gamma,
                config.reward.clone(),
                config.horizon - 1,
            )?;
            let stream_seed = master_seed
                .wrapping_add(0x9e37_79b9)
                .wrapping_mul(2 * points.len() as u64 + 1)
                .wrapping_add((branch * points.len() + point_index + 1) as u64);
            let trajs = simulate_replications(&sub, stream_seed, replications)?;
            let (cdf, var) =
                cdf_with_variance(grid, trajs.iter().map(|t| t.final_shares()[0]));
            let coefficient = weight * prob;
            for k in 0..grid.len() {
                rhs[k] += coefficient * cdf[k];
                rhs_var[k] += coefficient * coefficient * var[k];
            }
        }
    }

    let mut residuals = Vec::with_capacity(grid.len());
    let mut standard_errors = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        residuals.push((lhs[k] - rhs[k]).abs());
        standard_errors.push((lhs_var[k] + rhs_var[k]).sqrt());
    }
    let max_residual = residuals.iter().fold(0.0f64, |acc, r| acc.max(*r));
    let max_error_95 = standard_errors.iter().fold(0.0f64, |acc, se| acc.max(1.96 * se));
    Ok(LimitResidualReport {
        grid: grid.to_vec(),
        lhs,
        rhs,
        residuals,
        standard_errors,
        max_residual,
        max_error_95,
        replications,
    })
}

/// Empirical CDF values at `grid` with their binomial variances.
fn cdf_with_variance(grid: &[f64], samples: impl Iterator<Item = f64>) -> (Vec<f64>, Vec<f64>) {
    let samples: Vec<f64> = samples.collect();
    let n = samples.len() as f64;
    let mut cdf = Vec::with_capacity(grid.len());
    let mut var = Vec::with_capacity(grid.len());
    for &x in grid {
        let count = samples.iter().filter(|&&s| s <= x).count() as f64;
        cdf.push(count / n);
        // Agresti-Coull-adjusted proportion for the variance so the error
        // estimate stays positive when the raw count hits 0 or n.
        let p_adj = (count + 2.0) / (n + 4.0);
        var.push(p_adj * (1.0 - p_adj) / n);
    }
    (cdf, var)
}

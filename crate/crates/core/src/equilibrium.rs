//! Nash equilibria of the builders' game.
//!
//! Two players: the first-order conditions reduce, via `h2 = lambda h1`,
//! to a quartic `P(lambda) = 0` with exactly one positive root; the
//! closed form goes through the resolvent-cubic trigonometric solution.
//! General `M`: Gauss-Seidel iterated best response, each inner step a
//! safeguarded 1-D Newton search justified by strict per-coordinate
//! concavity.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{
    expected_utility, utility_gradient, utility_second_derivative, AuctionConfig, BuilderParams,
    StrategyProfile,
};
use crate::quartic::QuarticCoefficients;
use crate::seed::{derive_rng, task};

/// Slack allowed when the arccos argument or a radicand drifts past its
/// domain boundary from roundoff. Larger excursions are hard errors.
const DOMAIN_SLACK: f64 = 1e-12;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// A solved equilibrium with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    /// Equilibrium bids `h_i^NE`.
    pub h_star: Vec<f64>,
    /// Bid ratio `h2*/h1*`; two-player closed form only.
    pub lambda_star: Option<f64>,
    /// Expected utilities at `h_star`.
    pub utilities: Vec<f64>,
    /// `|d pi_i / d h_i|` at `h_star`.
    pub foc_residuals: Vec<f64>,
    /// Whether `h_i^NE = max{h_i', epsilon}` clamped builder `i` to the floor.
    pub clamped: Vec<bool>,
    pub iterations: usize,
    pub converged: bool,
}

impl EquilibriumResult {
    pub fn max_foc_residual(&self) -> f64 {
        self.foc_residuals.iter().fold(0.0, |acc, r| acc.max(*r))
    }
}

/// Quartic `P(lambda)` whose unique positive root is the two-player
/// equilibrium bid ratio.
pub fn build_quartic(b1: &BuilderParams, b2: &BuilderParams) -> QuarticCoefficients {
    QuarticCoefficients {
        a4: b1.f_bar,
        a3: 3.0 * b1.f_bar + 2.0 * b1.v_bar,
        a2: 2.0 * b1.f_bar - 2.0 * b2.f_bar + 4.0 * b1.v_bar - 4.0 * b2.v_bar,
        a1: -(3.0 * b2.f_bar + 2.0 * b2.v_bar),
        a0: -b2.f_bar,
    }
}

/// Intermediates of the closed-form solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventIntermediates {
    pub p: f64,
    pub q: f64,
    pub delta0: f64,
    pub delta1: f64,
    pub phi: f64,
    pub s: f64,
}

impl ResolventIntermediates {
    pub fn compute(b1: &BuilderParams, b2: &BuilderParams) -> Result<Self> {
        let (f1, v1) = (b1.f_bar, b1.v_bar);
        let (f2, v2) = (b2.f_bar, b2.v_bar);

        let p = -((11.0 * f1 * f1
            + 12.0 * v1 * v1
            + 4.0 * f1 * (4.0 * f2 + v1 + 8.0 * v2))
            / (8.0 * f1 * f1));
        let q = (3.0 * f1.powi(3)
            + 8.0 * v1.powi(3)
            + 4.0 * f1 * v1 * (4.0 * f2 + v1 + 8.0 * v2)
            + f1 * f1 * (-10.0 * v1 + 32.0 * v2))
            / (8.0 * f1.powi(3));

        let d = 2.0 * f1 - 2.0 * f2 + 4.0 * v1 - 4.0 * v2;
        let delta0 = d * d + 3.0 * (3.0 * f1 + 2.0 * v1) * (3.0 * f2 + 2.0 * v2) - 12.0 * f1 * f2;
        let delta1 = -27.0 * f2 * (3.0 * f1 + 2.0 * v1).powi(2)
            + 72.0 * f1 * f2 * d
            + 2.0 * d.powi(3)
            + 9.0 * (3.0 * f1 + 2.0 * v1) * d * (3.0 * f2 + 2.0 * v2)
            + 27.0 * f1 * (3.0 * f2 + 2.0 * v2).powi(2);

        if delta0 <= 0.0 {
            return Err(Error::Domain {
                context: "resolvent",
                detail: format!("delta0 = {delta0} is not positive"),
            });
        }
        let cos_arg = clamp_to_unit(delta1 / (2.0 * delta0.powi(3).sqrt()), "arccos argument")?;
        let phi = cos_arg.acos();
        let s_sq_times4 = -2.0 / 3.0 * p + 2.0 / (3.0 * f1) * delta0.sqrt() * (phi / 3.0).cos();
        let s_sq_times4 = nonnegative(s_sq_times4, "S radicand")?;
        let s = 0.5 * s_sq_times4.sqrt();
        if s <= 0.0 {
            return Err(Error::Domain { context: "resolvent", detail: format!("S = {s} is not positive") });
        }
        Ok(Self { p, q, delta0, delta1, phi, s })
    }

    /// The positive real root `lambda*` of the quartic.
    pub fn lambda_star(&self, b1: &BuilderParams) -> Result<f64> {
        let radicand = nonnegative(
            -4.0 * self.s * self.s - 2.0 * self.p - self.q / self.s,
            "lambda radicand",
        )?;
        Ok(-(3.0 * b1.f_bar + 2.0 * b1.v_bar) / (4.0 * b1.f_bar) + self.s + 0.5 * radicand.sqrt())
    }

    /// `8S^3 - q + 4S^2 sqrt(-4S^2 - 2p - q/S)`; positive for all valid
    /// parameters, which is what makes `lambda*` the largest root.
    pub fn positivity_margin(&self) -> Result<f64> {
        let radicand = nonnegative(
            -4.0 * self.s * self.s - 2.0 * self.p - self.q / self.s,
            "lambda radicand",
        )?;
        Ok(8.0 * self.s.powi(3) - self.q + 4.0 * self.s * self.s * radicand.sqrt())
    }
}

fn clamp_to_unit(x: f64, what: &'static str) -> Result<f64> {
    if x.abs() <= 1.0 {
        Ok(x)
    } else if x.abs() <= 1.0 + DOMAIN_SLACK {
        Ok(x.clamp(-1.0, 1.0))
    } else {
        Err(Error::Domain { context: "resolvent", detail: format!("{what} = {x} outside [-1, 1]") })
    }
}

fn nonnegative(x: f64, what: &'static str) -> Result<f64> {
    if x >= 0.0 {
        Ok(x)
    } else if x >= -DOMAIN_SLACK {
        Ok(0.0)
    } else {
        Err(Error::Domain { context: "resolvent", detail: format!("{what} = {x} is negative") })
    }
}

fn require_two_players(params: &AuctionConfig) -> Result<(&BuilderParams, &BuilderParams)> {
    match params.builders.as_slice() {
        [b1, b2] => Ok((b1, b2)),
        other => Err(Error::Unsupported {
            required: "exactly 2 builders",
            actual: format!("{} builders", other.len()),
        }),
    }
}

/// `h1` recovered from `lambda` via both reformulated first-order
/// conditions; they must agree to 1e-9 relative.
fn h1_from_lambda(b1: &BuilderParams, b2: &BuilderParams, lambda: f64) -> Result<f64> {
    let first = lambda * (b1.f_bar * lambda + b1.f_bar + 2.0 * b1.v_bar)
        / ((1.0 + 2.0 * lambda) * (1.0 + lambda));
    let second = (b2.f_bar + (b2.f_bar + 2.0 * b2.v_bar) * lambda)
        / (lambda * (2.0 + lambda) * (1.0 + lambda));
    if (first - second).abs() > 1e-9 * first.abs().max(second.abs()) {
        return Err(Error::Domain {
            context: "closed form",
            detail: format!("the two h1 expressions disagree: {first} vs {second}"),
        });
    }
    Ok(0.5 * (first + second))
}

/// Exact two-player equilibrium through the quartic resolvent.
pub fn solve_two_player_closed_form(params: &AuctionConfig) -> Result<EquilibriumResult> {
    let (b1, b2) = require_two_players(params)?;
    let resolvent = ResolventIntermediates::compute(b1, b2)?;
    let lambda = resolvent.lambda_star(b1)?;
    if lambda <= 0.0 {
        return Err(Error::Domain {
            context: "closed form",
            detail: format!("lambda* = {lambda} is not positive"),
        });
    }
    let quartic = build_quartic(b1, b2);
    let residual = quartic.eval(lambda).abs();
    if residual > 1e-8 * quartic.norm() {
        return Err(Error::Domain {
            context: "closed form",
            detail: format!("P(lambda*) residual {residual:e} exceeds tolerance"),
        });
    }
    let h1 = h1_from_lambda(b1, b2, lambda)?;
    let h2 = lambda * h1;

    let clamped = vec![h1 < params.epsilon, h2 < params.epsilon];
    let h_star = vec![h1.max(params.epsilon), h2.max(params.epsilon)];
    let profile = StrategyProfile::new(h_star.clone())?;
    let utilities = (0..2)
        .map(|i| expected_utility(i, &profile, params))
        .collect::<Result<Vec<_>>>()?;
    let foc = foc_residuals(&profile, params)?;
    Ok(EquilibriumResult {
        h_star,
        lambda_star: Some(lambda),
        utilities,
        foc_residuals: foc,
        clamped,
        iterations: 0,
        converged: true,
    })
}

/// Builder `i`'s unique best response to `h_minus_i` on
/// `[epsilon, f_bar_i + v_bar_i]`.
///
/// Safeguarded Newton on the gradient: the bracket is maintained by
/// gradient signs and any Newton step that leaves it (or meets a
/// non-negative curvature estimate) falls back to bisection.
pub fn best_response(
    i: usize,
    h_minus_i: &[f64],
    params: &AuctionConfig,
    tol: f64,
) -> Result<f64> {
    let m = params.num_builders();
    if h_minus_i.len() != m - 1 {
        return Err(Error::InvalidParams(format!(
            "h_minus_i has length {}, expected {}",
            h_minus_i.len(),
            m - 1
        )));
    }
    let lo = params.epsilon;
    let hi = params.builders[i].bid_cap();

    // Full profile with a placeholder slot for builder i.
    let mut h = Vec::with_capacity(m);
    let mut others = h_minus_i.iter();
    for j in 0..m {
        if j == i {
            h.push(lo);
        } else {
            h.push(*others.next().expect("length checked"));
        }
    }
    let profile_at = |x: f64| -> Result<StrategyProfile> {
        let mut full = h.clone();
        full[i] = x;
        StrategyProfile::new(full)
    };
    let grad_at = |x: f64| -> Result<f64> { utility_gradient(i, &profile_at(x)?, params) };

    let g_lo = grad_at(lo)?;
    if g_lo <= 0.0 {
        return Ok(lo);
    }
    let g_hi = grad_at(hi)?;
    if g_hi >= 0.0 {
        return Ok(hi);
    }

    let (mut lower, mut upper) = (lo, hi);
    let mut x = 0.5 * (lower + upper);
    let max_iter = 200;
    for _ in 0..max_iter {
        let g = grad_at(x)?;
        if g.abs() < tol {
            return Ok(x);
        }
        if g > 0.0 {
            lower = x;
        } else {
            upper = x;
        }
        if upper - lower < 1e-15 * (1.0 + x.abs()) {
            return Ok(x);
        }
        let curvature = utility_second_derivative(i, &profile_at(x)?, params)?;
        let newton = if curvature < 0.0 { x - g / curvature } else { f64::NAN };
        x = if newton.is_finite() && newton > lower && newton < upper {
            newton
        } else {
            0.5 * (lower + upper)
        };
    }
    Err(Error::NonConvergence {
        solver: "best_response",
        iterations: max_iter,
        last_change: upper - lower,
    })
}

/// Gradient of every builder's utility at `h` (the first-order-condition
/// residual vector).
pub fn foc_residuals(h: &StrategyProfile, params: &AuctionConfig) -> Result<Vec<f64>> {
    (0..params.num_builders())
        .map(|i| utility_gradient(i, h, params).map(f64::abs))
        .collect()
}

/// Iterated (Gauss-Seidel) best response for `M >= 2` builders.
///
/// Starts from `h_i = (f_bar_i + v_bar_i) / 3`, the exact symmetric
/// two-player solution, and stops when the largest per-coordinate change
/// drops below `tol * (1 + |h_i|)`.
pub fn solve_m_player(
    params: &AuctionConfig,
    tol: f64,
    max_iter: usize,
) -> Result<EquilibriumResult> {
    let start: Vec<f64> =
        params.builders.iter().map(|b| (b.bid_cap() / 3.0).max(params.epsilon)).collect();
    solve_m_player_from(params, start, tol, max_iter)
}

fn solve_m_player_from(
    params: &AuctionConfig,
    mut h: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<EquilibriumResult> {
    let m = params.num_builders();
    let grad_tol = tol * 1e-2;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut change: f64 = 0.0;
        for i in 0..m {
            let others: Vec<f64> =
                h.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| *v).collect();
            let new = best_response(i, &others, params, grad_tol)?;
            change = change.max((new - h[i]).abs() / (1.0 + h[i].abs()));
            h[i] = new;
        }
        if change < tol {
            converged = true;
            break;
        }
    }

    // Clamp to the floor, then one confirming sweep of best responses.
    let mut clamped = vec![false; m];
    for (i, value) in h.iter_mut().enumerate() {
        if *value <= params.epsilon {
            *value = params.epsilon;
            clamped[i] = true;
        }
    }
    if converged {
        for i in 0..m {
            let others: Vec<f64> =
                h.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| *v).collect();
            let confirm = best_response(i, &others, params, grad_tol)?;
            if (confirm - h[i]).abs() / (1.0 + h[i].abs()) > 10.0 * tol {
                converged = false;
            }
        }
    }

    let profile = StrategyProfile::new(h.clone())?;
    let utilities =
        (0..m).map(|i| expected_utility(i, &profile, params)).collect::<Result<Vec<_>>>()?;
    let foc = foc_residuals(&profile, params)?;
    // Non-convergence is reported in the result, never silently dropped:
    // callers decide whether a partial iterate is usable.
    Ok(EquilibriumResult {
        h_star: h,
        lambda_star: None,
        utilities,
        foc_residuals: foc,
        clamped,
        iterations,
        converged,
    })
}

/// Multi-start variant: the canonical start plus `extra_starts` random
/// interior points, reporting all distinct fixed points found (sorted by
/// first coordinate; deterministic in `seed`).
pub fn solve_m_player_multi_start(
    params: &AuctionConfig,
    tol: f64,
    max_iter: usize,
    extra_starts: usize,
    seed: u64,
) -> Result<Vec<EquilibriumResult>> {
    let mut results: Vec<EquilibriumResult> = Vec::new();
    let push_distinct = |candidate: EquilibriumResult, results: &mut Vec<EquilibriumResult>| {
        let duplicate = results.iter().any(|r| {
            r.h_star
                .iter()
                .zip(&candidate.h_star)
                .all(|(a, b)| (a - b).abs() <= 1e-6 * (1.0 + a.abs()))
        });
        if !duplicate {
            results.push(candidate);
        }
    };
    push_distinct(solve_m_player(params, tol, max_iter)?, &mut results);
    let mut rng = derive_rng(seed, task::MULTI_START, 0);
    for _ in 0..extra_starts {
        let start: Vec<f64> = params
            .builders
            .iter()
            .map(|b| rng.gen_range(params.epsilon..b.bid_cap()))
            .collect();
        if let Ok(result) = solve_m_player_from(params, start, tol, max_iter) {
            if result.converged {
                push_distinct(result, &mut results);
            }
        }
    }
    results.sort_by(|a, b| a.h_star[0].partial_cmp(&b.h_star[0]).expect("finite bids"));
    Ok(results)
}

/// Which branch of the payment-ratio relation held.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RatioBranch {
    /// `k2 < 1` and `h1*/h2* > k2`.
    BelowOne,
    /// `k2 = 1` and `h1*/h2* = 1`.
    Equal,
    /// `k2 > 1` and `h1*/h2* < k2`.
    AboveOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    /// Common ratio `v_bar_i / f_bar_i`.
    pub k1: f64,
    /// Capability ratio `f_bar_1 / f_bar_2`.
    pub k2: f64,
    /// Measured `h1* / h2*`.
    pub h_ratio: f64,
    pub relation: RatioBranch,
}

/// Verify that equilibrium payments do not scale linearly with
/// capability: the more capable builder pays relatively less.
///
/// Requires a common `k1 = v_bar/f_bar` across the two builders.
pub fn ratio_diagnostics(params: &AuctionConfig) -> Result<RatioReport> {
    let (b1, b2) = require_two_players(params)?;
    let k1_first = b1.v_bar / b1.f_bar;
    let k1_second = b2.v_bar / b2.f_bar;
    if (k1_first - k1_second).abs() > 1e-9 * k1_first.abs().max(k1_second.abs()) {
        return Err(Error::InvalidParams(format!(
            "ratio diagnostics need a common v_bar/f_bar ratio, got {k1_first} and {k1_second}"
        )));
    }
    let k1 = k1_first;
    if !(k1 > 0.0 && k1 <= 1.0) {
        return Err(Error::InvalidParams(format!("k1 must lie in (0, 1], got {k1}")));
    }
    let k2 = b1.f_bar / b2.f_bar;
    let solution = solve_two_player_closed_form(params)?;
    let h_ratio = solution.h_star[0] / solution.h_star[1];

    let relation = if (k2 - 1.0).abs() <= 1e-12 {
        if (h_ratio - 1.0).abs() > 1e-9 {
            return Err(Error::Domain {
                context: "ratio_diagnostics",
                detail: format!("k2 = 1 but h1*/h2* = {h_ratio}"),
            });
        }
        RatioBranch::Equal
    } else if k2 < 1.0 {
        if h_ratio <= k2 {
            return Err(Error::Domain {
                context: "ratio_diagnostics",
                detail: format!("k2 = {k2} < 1 but h1*/h2* = {h_ratio} is not above k2"),
            });
        }
        RatioBranch::BelowOne
    } else {
        if h_ratio >= k2 {
            return Err(Error::Domain {
                context: "ratio_diagnostics",
                detail: format!("k2 = {k2} > 1 but h1*/h2* = {h_ratio} is not below k2"),
            });
        }
        RatioBranch::AboveOne
    };
    Ok(RatioReport { k1, k2, h_ratio, relation })
}

/// `8S^3 - q + 4S^2 sqrt(...)` for a two-builder configuration.
pub fn positivity_margin(b1: &BuilderParams, b2: &BuilderParams) -> Result<f64> {
    ResolventIntermediates::compute(b1, b2)?.positivity_margin()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    /// Minimum of `8S^3 - q` over the sampled domain.
    pub min_core_margin: f64,
    /// Minimum of the full margin `8S^3 - q + 4S^2 sqrt(...)`.
    pub min_full_margin: f64,
    /// Parameters `(f1, f2, v1, v2)` attaining `min_core_margin`.
    pub argmin: [f64; 4],
    pub samples: usize,
}

/// Random search of `{f1 >= v1 > 0, f2 >= v2 > 0}` for the minimum of
/// `8S^3 - q`, with scale normalization `f2 = 1` (the margin is
/// scale-free by degree-1 homogeneity).
pub fn minimize_positivity_margin(samples: usize, seed: u64) -> Result<PositivityReport> {
    let mut rng = derive_rng(seed, task::POSITIVITY_SWEEP, 0);
    let mut min_core = f64::INFINITY;
    let mut min_full = f64::INFINITY;
    let mut argmin = [f64::NAN; 4];
    for _ in 0..samples {
        let f2 = 1.0;
        let f1 = (rng.gen_range(0.05f64.ln()..100.0f64.ln())).exp();
        let v1 = rng.gen_range(1e-9..1.0) * f1;
        let v2 = rng.gen_range(1e-9..1.0) * f2;
        let b1 = BuilderParams::from_means(f1, v1)?;
        let b2 = BuilderParams::from_means(f2, v2)?;
        let resolvent = ResolventIntermediates::compute(&b1, &b2)?;
        let core = 8.0 * resolvent.s.powi(3) - resolvent.q;
        let full = resolvent.positivity_margin()?;
        if core < min_core {
            min_core = core;
            argmin = [f1, f2, v1, v2];
        }
        min_full = min_full.min(full);
        if full <= 0.0 {
            return Err(Error::Domain {
                context: "positivity sweep",
                detail: format!("nonpositive margin {full} at (f1={f1}, f2={f2}, v1={v1}, v2={v2})"),
            });
        }
    }
    Ok(PositivityReport { min_core_margin: min_core, min_full_margin: min_full, argmin, samples })
}

/// Draw a random two-builder configuration satisfying the model's
/// parameter assumptions; used by property sweeps and oracles.
pub fn random_two_player<R: Rng>(rng: &mut R) -> AuctionConfig {
    let f1 = (rng.gen_range(0.1f64.ln()..1000.0f64.ln())).exp();
    let f2 = (rng.gen_range(0.1f64.ln()..1000.0f64.ln())).exp();
    let v1 = rng.gen_range(0.01..1.0) * f1;
    let v2 = rng.gen_range(0.01..1.0) * f2;
    AuctionConfig::with_default_epsilon(
        rng.gen_range(0.0..1.0),
        vec![
            BuilderParams::from_means(f1, v1).expect("valid by construction"),
            BuilderParams::from_means(f2, v2).expect("valid by construction"),
        ],
    )
    .expect("valid by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked_example() -> AuctionConfig {
        AuctionConfig::with_default_epsilon(
            0.7,
            vec![
                BuilderParams::from_means(100.0, 40.0).unwrap(),
                BuilderParams::from_means(200.0, 80.0).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn quartic_coefficients_worked_example() {
        let params = worked_example();
        let c = build_quartic(&params.builders[0], &params.builders[1]);
        assert_eq!(
            (c.a4, c.a3, c.a2, c.a1, c.a0),
            (100.0, 380.0, -360.0, -760.0, -200.0)
        );
        assert!(c.eval(0.0) < 0.0);
    }

    #[test]
    fn quartic_symmetric_has_unit_root() {
        let b = BuilderParams::from_means(100.0, 40.0).unwrap();
        let c = build_quartic(&b, &b);
        assert_eq!(c.a2, 0.0);
        assert!(c.eval(1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_worked_example() {
        let result = solve_two_player_closed_form(&worked_example()).unwrap();
        assert!((result.h_star[0] - 49.94).abs() < 0.01, "h1 = {}", result.h_star[0]);
        assert!((result.h_star[1] - 82.17).abs() < 0.01, "h2 = {}", result.h_star[1]);
        assert!((result.utilities[0] - 24.64).abs() < 0.01);
        assert!((result.utilities[1] - 104.23).abs() < 0.01);
        assert!(result.max_foc_residual() < 1e-8);
        let lambda = result.lambda_star.unwrap();
        assert!(lambda > 0.0);
        assert!((lambda - result.h_star[1] / result.h_star[0]).abs() < 1e-9 * lambda);
    }

    #[test]
    fn closed_form_symmetric_case() {
        let params = AuctionConfig::with_default_epsilon(
            0.5,
            vec![
                BuilderParams::from_means(120.0, 30.0).unwrap(),
                BuilderParams::from_means(120.0, 30.0).unwrap(),
            ],
        )
        .unwrap();
        let result = solve_two_player_closed_form(&params).unwrap();
        assert!((result.lambda_star.unwrap() - 1.0).abs() < 1e-9);
        assert!((result.h_star[0] - 50.0).abs() < 1e-8);
        assert!((result.h_star[1] - 50.0).abs() < 1e-8);
    }

    #[test]
    fn best_response_fixed_point_at_equilibrium() {
        let params = worked_example();
        let result = solve_two_player_closed_form(&params).unwrap();
        let br1 = best_response(1, &result.h_star[..1], &params, 1e-12).unwrap();
        assert!((br1 - result.h_star[1]).abs() < 1e-8 * result.h_star[1]);
        let br0 = best_response(0, &result.h_star[1..], &params, 1e-12).unwrap();
        assert!((br0 - result.h_star[0]).abs() < 1e-8 * result.h_star[0]);
    }

    #[test]
    fn m_player_matches_closed_form() {
        let params = worked_example();
        let iterated = solve_m_player(&params, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let closed = solve_two_player_closed_form(&params).unwrap();
        for (a, b) in iterated.h_star.iter().zip(&closed.h_star) {
            assert!((a - b).abs() < 1e-7 * b, "{a} vs {b}");
        }
        assert!(iterated.converged);
    }

    #[test]
    fn three_player_table2_first_column() {
        let v = [150.0, 60.0, 30.0];
        let builders: Vec<_> =
            v.iter().map(|&vi| BuilderParams::from_means(2.0 * vi, vi).unwrap()).collect();
        let params = AuctionConfig::with_default_epsilon(0.5, builders).unwrap();
        let result = solve_m_player(&params, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let expected_h = [138.55, 64.31, 31.58];
        let expected_u = [147.81, 19.79, 4.37];
        for i in 0..3 {
            assert!((result.h_star[i] - expected_h[i]).abs() < 0.01);
            assert!((result.utilities[i] - expected_u[i]).abs() < 0.01);
        }
    }

    #[test]
    fn foc_negative_at_bid_caps() {
        let params = worked_example();
        let h = StrategyProfile::new(
            params.builders.iter().map(BuilderParams::bid_cap).collect(),
        )
        .unwrap();
        for i in 0..2 {
            let grad = utility_gradient(i, &h, &params).unwrap();
            assert!(grad < 0.0, "gradient {grad} should be negative past the bid cap");
        }
    }

    #[test]
    fn ratio_diagnostics_worked_example() {
        let report = ratio_diagnostics(&worked_example()).unwrap();
        assert_eq!(report.relation, RatioBranch::BelowOne);
        assert!((report.k2 - 0.5).abs() < 1e-12);
        assert!((report.h_ratio - 0.6077).abs() < 1e-3);
        assert!(report.h_ratio > report.k2);
    }

    #[test]
    fn ratio_diagnostics_equal_capability() {
        let params = AuctionConfig::with_default_epsilon(
            0.5,
            vec![
                BuilderParams::from_means(80.0, 20.0).unwrap(),
                BuilderParams::from_means(80.0, 20.0).unwrap(),
            ],
        )
        .unwrap();
        let report = ratio_diagnostics(&params).unwrap();
        assert_eq!(report.relation, RatioBranch::Equal);
        assert!((report.h_ratio - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ratio_diagnostics_rejects_unequal_k1() {
        let params = AuctionConfig::with_default_epsilon(
            0.5,
            vec![
                BuilderParams::from_means(100.0, 40.0).unwrap(),
                BuilderParams::from_means(200.0, 30.0).unwrap(),
            ],
        )
        .unwrap();
        assert!(ratio_diagnostics(&params).is_err());
    }

    #[test]
    fn positivity_margin_examples() {
        let unit = BuilderParams::from_means(1.0, 1.0).unwrap();
        assert!(positivity_margin(&unit, &unit).unwrap() > 0.0);
        let params = worked_example();
        let margin = positivity_margin(&params.builders[0], &params.builders[1]).unwrap();
        assert!(margin > 0.0, "margin = {margin}");
    }
}

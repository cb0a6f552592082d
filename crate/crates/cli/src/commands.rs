//! Subcommand implementations. Thin shells: all numbers come from
//! `ofa_core` library calls, so CLI results are bit-identical to direct
//! library use under the same seed.

use std::io::Write;
use std::path::Path;

use anyhow::Context;

use ofa_core::equilibrium::{
    solve_m_player, solve_two_player_closed_form, DEFAULT_MAX_ITER, DEFAULT_TOL, EquilibriumResult,
};
use ofa_core::game::AuctionConfig;
use ofa_core::seed::SeedPolicy;
use ofa_core::stake::{simulate_replications, Trajectory};
use ofa_core::verify::{
    all_passed, run_game_properties, run_stake_properties, run_table_reproduction, write_summary,
    CheckReport, CheckStatus, SuiteSizes,
};

use crate::config::RunConfig;
use crate::output::{full, write_csv, write_json, Meta};
use crate::ConfigError;

fn solve_config(params: &AuctionConfig) -> anyhow::Result<EquilibriumResult> {
    let result = if params.num_builders() == 2 {
        solve_two_player_closed_form(params)?
    } else {
        solve_m_player(params, DEFAULT_TOL, DEFAULT_MAX_ITER)?
    };
    if !result.converged {
        anyhow::bail!("best-response iteration did not converge");
    }
    Ok(result)
}

fn equilibrium_rows(params: &AuctionConfig, result: &EquilibriumResult) -> Vec<String> {
    params
        .builders
        .iter()
        .enumerate()
        .map(|(i, b)| {
            format!(
                "{},{},{},{},{},{},{}",
                i + 1,
                full(b.f_bar),
                full(b.v_bar),
                full(result.h_star[i]),
                full(result.utilities[i]),
                full(result.foc_residuals[i]),
                result.clamped[i]
            )
        })
        .collect()
}

pub fn solve(config: &RunConfig, meta: &Meta, out_dir: &Path) -> anyhow::Result<i32> {
    let game = config
        .game
        .as_ref()
        .ok_or_else(|| ConfigError("solve needs a [game] section".into()))?;
    let params = game.resolve()?;
    let result = solve_config(&params)?;

    write_json(&out_dir.join("equilibrium.json"), meta, &result)?;
    write_csv(
        &out_dir.join("equilibrium.csv"),
        meta,
        "builder,f_bar,v_bar,h_star,utility,foc_residual,clamped",
        equilibrium_rows(&params, &result),
    )?;

    println!("builder     f_bar     v_bar        h*   utility");
    for (i, b) in params.builders.iter().enumerate() {
        println!(
            "{:>7} {:>9.2} {:>9.2} {:>9.2} {:>9.2}",
            i + 1,
            b.f_bar,
            b.v_bar,
            result.h_star[i],
            result.utilities[i]
        );
    }
    Ok(0)
}

pub fn sweep(config: &RunConfig, meta: &Meta, out_dir: &Path) -> anyhow::Result<i32> {
    let game = config
        .game
        .as_ref()
        .ok_or_else(|| ConfigError("sweep needs a [game] section".into()))?;
    let grid = config
        .sweep
        .as_ref()
        .ok_or_else(|| ConfigError("sweep needs a [sweep] section".into()))?;
    if grid.values.is_empty() {
        return Err(ConfigError("sweep grid is empty".into()).into());
    }

    let mut rows = Vec::new();
    for &value in &grid.values {
        let point = game.with_override(&grid.parameter, value)?;
        match point.resolve().and_then(|params| Ok((solve_config(&params)?, params))) {
            Ok((result, params)) => {
                for row in equilibrium_rows(&params, &result) {
                    rows.push(format!("{},{},{},", grid.parameter, full(value), row));
                }
            }
            Err(err) => {
                rows.push(format!(
                    "{},{},,,,,,,,\"{}\"",
                    grid.parameter,
                    full(value),
                    err.to_string().replace('"', "'")
                ));
            }
        }
    }
    write_csv(
        &out_dir.join("sweep.csv"),
        meta,
        "parameter,value,builder,f_bar,v_bar,h_star,utility,foc_residual,clamped,error",
        rows,
    )?;
    println!("wrote {} grid points to {}", grid.values.len(), out_dir.join("sweep.csv").display());
    Ok(0)
}

pub fn simulate(config: &RunConfig, meta: &Meta, out_dir: &Path, seed: u64) -> anyhow::Result<i32> {
    let stakes = config
        .stakes
        .as_ref()
        .ok_or_else(|| ConfigError("simulate needs a [stakes] section".into()))?;
    let stake_config = stakes.resolve()?;
    let (replications, emit_trajectories, bins) = match &config.simulate {
        Some(spec) => {
            if spec.replications == 0 {
                return Err(ConfigError("replications must be positive".into()).into());
            }
            (spec.replications, spec.emit_trajectories, spec.histogram_bins.unwrap_or(40))
        }
        None => (1_000, false, 40),
    };

    let trajectories = simulate_replications(&stake_config, seed, replications)?;
    let n = stake_config.n_validators();
    let horizon = stake_config.horizon;

    // Aggregate: mean and SD of the total and of each share, per step.
    let mut rows = Vec::with_capacity(horizon + 1);
    for t in 0..=horizon {
        let mut row = format!("{t}");
        let totals: Vec<f64> = trajectories.iter().map(|tr| tr.totals[t]).collect();
        let (mean, sd) = mean_sd(&totals);
        row.push_str(&format!(",{},{}", full(mean), full(sd)));
        for j in 0..n {
            let shares: Vec<f64> = trajectories.iter().map(|tr| tr.shares[t][j]).collect();
            let (mean, sd) = mean_sd(&shares);
            row.push_str(&format!(",{},{}", full(mean), full(sd)));
        }
        rows.push(row);
    }
    let mut columns = String::from("t,mean_total,sd_total");
    for j in 1..=n {
        columns.push_str(&format!(",mean_w_{j},sd_w_{j}"));
    }
    write_csv(&out_dir.join("aggregate.csv"), meta, &columns, rows)?;

    // Final-share histogram over [0, 1].
    let mut hist_rows = Vec::new();
    for j in 0..n {
        let mut counts = vec![0usize; bins];
        for tr in &trajectories {
            let w = tr.final_shares()[j];
            let bin = ((w * bins as f64) as usize).min(bins - 1);
            counts[bin] += 1;
        }
        for (b, count) in counts.iter().enumerate() {
            hist_rows.push(format!(
                "{},{},{},{count}",
                j + 1,
                full(b as f64 / bins as f64),
                full((b + 1) as f64 / bins as f64)
            ));
        }
    }
    write_csv(
        &out_dir.join("final_share_histogram.csv"),
        meta,
        "validator,bin_lo,bin_hi,count",
        hist_rows,
    )?;

    if emit_trajectories {
        let dir = out_dir.join("trajectories");
        for (k, tr) in trajectories.iter().enumerate() {
            write_trajectory(&dir.join(format!("rep_{k:05}.csv")), meta, tr)?;
        }
    }

    let final_means: Vec<f64> = (0..n)
        .map(|j| {
            trajectories.iter().map(|tr| tr.final_shares()[j]).sum::<f64>()
                / trajectories.len() as f64
        })
        .collect();
    print!("{replications} replications, T = {horizon}; mean final shares:");
    for m in &final_means {
        print!(" {m:.2}");
    }
    println!();
    Ok(0)
}

fn write_trajectory(path: &Path, meta: &Meta, trajectory: &Trajectory) -> anyhow::Result<()> {
    let mut out = crate::output::create(path)?;
    writeln!(out, "{}", meta.header_line())?;
    trajectory.write_csv(&mut out)?;
    Ok(())
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub struct VerifySelection {
    pub tables: bool,
    pub properties: bool,
    pub stakes: bool,
    pub inject_fault: bool,
}

pub fn verify(
    meta: &Meta,
    out_dir: &Path,
    seed: u64,
    quick: bool,
    selection: VerifySelection,
) -> anyhow::Result<i32> {
    let policy = SeedPolicy::new(seed);
    let sizes = if quick { SuiteSizes::quick() } else { SuiteSizes::standard() };

    let mut reports: Vec<CheckReport> = Vec::new();
    if selection.tables {
        for table in 2..=5 {
            reports.extend(run_table_reproduction(table)?);
        }
    }
    if selection.properties {
        reports.extend(run_game_properties(policy, sizes)?);
    }
    if selection.stakes {
        reports.extend(run_stake_properties(policy, sizes)?);
    }
    if selection.inject_fault {
        reports.push(CheckReport {
            check_id: "injected-fault-self-test".into(),
            claim_ref: "deliberately failing check to exercise the failure path".into(),
            status: CheckStatus::Fail,
            measured: vec![0.0],
            target: vec![1.0],
            tolerance: "always fails".into(),
            runtime_secs: 0.0,
        });
    }

    write_json(&out_dir.join("verify_report.json"), meta, &reports)?;
    let mut text = crate::output::create(&out_dir.join("verify_report.txt"))?;
    writeln!(text, "{}", meta.header_line())?;
    write_summary(&mut text, &reports).context("writing text report")?;

    let mut stdout = Vec::new();
    write_summary(&mut stdout, &reports)?;
    print!("{}", String::from_utf8_lossy(&stdout));

    Ok(if all_passed(&reports) { 0 } else { 1 })
}

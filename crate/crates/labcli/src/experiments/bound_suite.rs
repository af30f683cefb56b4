//! The bound suite: every shipped mixture against every bound that
//! applies to it.
//!
//! For each catalog mixture the suite runs the full inequality chain
//! (cumulative ratio gap, Hellinger sum, divergence, ln(1/w)) and the
//! exponentiated tail bound, once exactly on a short horizon and once by
//! Monte Carlo on a longer one; for each deterministic mixture it runs
//! the cumulative one-step error bound with each member as the true
//! environment. One row per inequality: left side, right side, slack,
//! and the standard error when sampled. The `self-check` mixture
//! predicts with its own environment, so its rows show zero everywhere.
//!
//! `n` sets the exact horizon; the Monte Carlo and deterministic
//! horizons are fixed properties of the suite.

use seqlab_core::bounds::{
    exp_tail_check, kl_divergence_exact, total_hellinger_check, ChainLink, EvalPlan,
};
use seqlab_core::CHAIN_SLACK_TOLERANCE;

use super::{check, stamp, Experiment, Outcome};
use crate::catalog::{chain_mixtures, det_mixtures};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::table::{ResultTable, Value};

const DEFAULT_EXACT_HORIZON: u64 = 10;
const MC_HORIZON: usize = 200;
const DET_HORIZON: usize = 10_000;
const DEFAULT_TRAJECTORIES: u64 = 10_000;

/// Splits one configured seed into independent per-leg streams.
fn leg_seed(seed: u64, leg: u64) -> u64 {
    seed ^ (leg + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn push_link(
    table: &mut ResultTable,
    violations: &mut Vec<String>,
    section: &str,
    mixture: &str,
    mode: &str,
    link: &ChainLink,
) {
    check(violations, link.holds(CHAIN_SLACK_TOLERANCE), || {
        format!(
            "{mixture} ({mode}): {} has lhs {} > rhs {}",
            link.name, link.lhs, link.rhs
        )
    });
    table.push_row(vec![
        Value::Text(section.into()),
        Value::Text(mixture.into()),
        Value::Text(link.name.into()),
        Value::Text(mode.into()),
        Value::Float(link.lhs),
        Value::Float(link.rhs),
        Value::Float(link.slack()),
        Value::Float(link.stderr.unwrap_or(0.0)),
    ]);
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let seed = cfg.require_seed("bound-suite")?;
    let n_exact = cfg.n.unwrap_or(DEFAULT_EXACT_HORIZON) as usize;
    let trajectories = cfg.trajectories.unwrap_or(DEFAULT_TRAJECTORIES);

    let mut table = ResultTable::new(&[
        "section", "mixture", "inequality", "mode", "lhs", "rhs", "slack", "stderr",
    ]);
    stamp(&mut table, Experiment::BoundSuite);
    table.meta("seed", seed.to_string());
    table.meta("n", n_exact.to_string());
    table.meta("traj", trajectories.to_string());
    table.meta("mc_horizon", MC_HORIZON.to_string());
    table.meta("det_horizon", DET_HORIZON.to_string());

    let mut violations = Vec::new();
    let mut leg = 0u64;

    for m in chain_mixtures() {
        let exact = total_hellinger_check(
            m.mu.as_ref(),
            m.xi.as_ref(),
            n_exact,
            Some(m.ln_weight_inv),
            EvalPlan::Exact,
        )?;
        for link in exact.links() {
            push_link(&mut table, &mut violations, "chain", m.name, "exact", &link);
        }

        let kl = kl_divergence_exact(
            m.mu.as_ref(),
            m.xi.as_ref(),
            n_exact,
            Some(m.ln_weight_inv),
        )?;
        let kl_link = ChainLink {
            name: "divergence_at_horizon_le_ln_weight_inv",
            lhs: kl.divergence,
            rhs: m.ln_weight_inv,
            stderr: None,
        };
        push_link(
            &mut table,
            &mut violations,
            "divergence",
            m.name,
            "exact",
            &kl_link,
        );

        let tail = exp_tail_check(
            m.mu.as_ref(),
            m.xi.as_ref(),
            n_exact,
            m.ln_weight_inv,
            EvalPlan::Exact,
        )?;
        let tail_link = ChainLink {
            name: "exp_half_sum_le_root_weight_inv",
            lhs: tail.estimate,
            rhs: tail.bound,
            stderr: tail.stderr,
        };
        push_link(&mut table, &mut violations, "tail", m.name, "exact", &tail_link);

        let sampled = total_hellinger_check(
            m.mu.as_ref(),
            m.xi.as_ref(),
            MC_HORIZON,
            Some(m.ln_weight_inv),
            EvalPlan::MonteCarlo {
                trajectories,
                seed: leg_seed(seed, leg),
            },
        )?;
        leg += 1;
        for link in sampled.links() {
            push_link(&mut table, &mut violations, "chain", m.name, "mc", &link);
        }

        let sampled_tail = exp_tail_check(
            m.mu.as_ref(),
            m.xi.as_ref(),
            MC_HORIZON,
            m.ln_weight_inv,
            EvalPlan::MonteCarlo {
                trajectories,
                seed: leg_seed(seed, leg),
            },
        )?;
        leg += 1;
        let sampled_tail_link = ChainLink {
            name: "exp_half_sum_le_root_weight_inv",
            lhs: sampled_tail.estimate,
            rhs: sampled_tail.bound,
            stderr: sampled_tail.stderr,
        };
        push_link(
            &mut table,
            &mut violations,
            "tail",
            m.name,
            "mc",
            &sampled_tail_link,
        );
    }

    for m in det_mixtures() {
        for (member, generator) in &m.generators {
            let alpha = generator.prefix(DET_HORIZON);
            let report = m.class.det_convergence(&alpha)?;
            check(&mut violations, report.holds(CHAIN_SLACK_TOLERANCE), || {
                format!(
                    "{} playing {member}: cumulative error {} > ln(1/w) = {}",
                    m.name,
                    report.total_error(),
                    report.bound_nominal
                )
            });
            table.push_row(vec![
                Value::Text("deterministic".into()),
                Value::Text(m.name.into()),
                Value::Text(format!("cumulative_error_le_ln_weight_inv[{member}]")),
                Value::Text("exact".into()),
                Value::Float(report.total_error()),
                Value::Float(report.bound_nominal),
                Value::Float(report.bound_nominal - report.total_error()),
                Value::Float(0.0),
            ]);
        }
    }

    Ok(Outcome { table, violations })
}

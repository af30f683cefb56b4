//! On-sequence convergence of the computable mixture along the all-ones
//! sequence.
//!
//! Row n reports the predictor's conditional probability of the n-th one,
//! the cumulative prediction gap sum_{t<=n} (1 - conditional_t), the
//! shortest program covering the first n ones, and the bound that
//! program's length puts on the whole cumulative gap. The checked claim
//! is the deterministic convergence bound: at every row the cumulative
//! gap stays below description_length * ln 2, with only float round-off
//! as grace.

use seqlab_core::solomonoff::{computable_convergence, INSTRUCTION_SET_VERSION};

use super::{check, stamp, Experiment, Outcome};
use crate::cache_admin::{budget_from, estimates_for};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::table::{ResultTable, Value};

const DEFAULT_HORIZON: u64 = 400;
/// Cumulative rounding allowance for a sum of this many terms.
const GAP_TOLERANCE: f64 = 1e-9;

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let n_max = cfg.n.unwrap_or(DEFAULT_HORIZON) as usize;
    let budget = budget_from(cfg)?;
    let estimates = estimates_for(cfg)?;
    let rows = computable_convergence(&estimates, n_max)?;

    let mut table = ResultTable::new(&[
        "n",
        "conditional",
        "cumulative_gap",
        "description_length",
        "bound",
    ]);
    stamp(&mut table, Experiment::ComputableConvergence);
    table.meta("n", n_max.to_string());
    table.meta("L", budget.max_len.to_string());
    table.meta("T", budget.max_steps.to_string());
    table.meta(
        "instruction_set_version",
        INSTRUCTION_SET_VERSION.to_string(),
    );

    let mut violations = Vec::new();
    for row in &rows {
        check(
            &mut violations,
            row.cumulative_gap <= row.bound() + GAP_TOLERANCE,
            || {
                format!(
                    "cumulative gap {} at n = {} above bound {}",
                    row.cumulative_gap,
                    row.n,
                    row.bound()
                )
            },
        );
        check(
            &mut violations,
            (0.0..=1.0 + 1e-12).contains(&row.conditional),
            || format!("conditional {} at n = {} outside [0, 1]", row.conditional, row.n),
        );
        table.push_row(vec![
            Value::Int(row.n as i64),
            Value::Float(row.conditional),
            Value::Float(row.cumulative_gap),
            Value::Int(row.description_length as i64),
            Value::Float(row.bound()),
        ]);
    }

    Ok(Outcome { table, violations })
}

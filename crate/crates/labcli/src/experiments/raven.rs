//! Confirmation of a universal law versus its instances.
//!
//! After n straight ones, the uniform prior happily predicts more ones
//! (any finite run is confirmed) yet assigns the law "all symbols are one"
//! posterior exactly zero forever. Adding a point mass at theta = 1
//! repairs this: the law's posterior climbs as (n+1)/(n+2), and the
//! probability of ever seeing a zero collapses quadratically as 1/(n+2)^2
//! instead of the uniform prior's linear 1/(n+2).
//!
//! Columns: the law's posterior under both priors, a finite-horizon run
//! probability showing instance confirmation is not the issue, and the
//! mixed prior's next-zero probability. Each is checked against its
//! closed form.

use seqlab_core::conjugate::{
    dirac_next_zero, dirac_run_posterior, laplace_run_posterior, Horizon,
};
use seqlab_core::TIGHT_REL_TOLERANCE;

use super::{check, close_to, stamp, Experiment, Outcome};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::table::{ResultTable, Value};

const DEFAULT_MAX_N: u64 = 100;
const INSTANCE_HORIZON: u64 = 1000;

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let n_max = cfg.n.unwrap_or(DEFAULT_MAX_N);

    let mut table = ResultTable::new(&[
        "n",
        "uniform_law",
        "uniform_next_1000",
        "dirac_law",
        "dirac_next_zero",
    ]);
    stamp(&mut table, Experiment::RavenConfirmation);
    table.meta("n", n_max.to_string());
    table.meta("instance_horizon", INSTANCE_HORIZON.to_string());

    let mut violations = Vec::new();
    for n in 0..=n_max {
        let uniform_law = laplace_run_posterior(n, Horizon::Infinite);
        let uniform_run = laplace_run_posterior(n, Horizon::Steps(INSTANCE_HORIZON));
        let dirac_law = dirac_run_posterior(n, Horizon::Infinite);
        let next_zero = dirac_next_zero(n);
        let nf = n as f64;

        check(&mut violations, uniform_law == 0.0, || {
            format!("uniform law posterior at n = {n} is {uniform_law}, not zero")
        });
        check(
            &mut violations,
            close_to(
                uniform_run,
                (nf + 1.0) / (nf + INSTANCE_HORIZON as f64 + 1.0),
                TIGHT_REL_TOLERANCE,
            ),
            || format!("uniform run probability at n = {n} is {uniform_run}"),
        );
        check(
            &mut violations,
            close_to(dirac_law, (nf + 1.0) / (nf + 2.0), TIGHT_REL_TOLERANCE),
            || format!("dirac law posterior at n = {n} is {dirac_law}, not (n+1)/(n+2)"),
        );
        check(
            &mut violations,
            close_to(
                next_zero,
                1.0 / ((nf + 2.0) * (nf + 2.0)),
                TIGHT_REL_TOLERANCE,
            ),
            || format!("next-zero probability at n = {n} is {next_zero}, not 1/(n+2)^2"),
        );

        table.push_row(vec![
            Value::Int(n as i64),
            Value::Float(uniform_law),
            Value::Float(uniform_run),
            Value::Float(dirac_law),
            Value::Float(next_zero),
        ]);
    }

    Ok(Outcome { table, violations })
}

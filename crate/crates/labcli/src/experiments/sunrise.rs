//! The sunrise table: after n sunrises in a row, the uniform prior gives
//! tomorrow's sunrise probability (n+1)/(n+2) and leaves 1/(n+2) for doom.
//!
//! Rows sweep n from zero through configured `n` (default 1826213, one
//! sunrise per day since a commonly quoted antiquity); the two columns
//! always sum to one, and each is checked against its closed form to
//! [`TIGHT_REL_TOLERANCE`].

use seqlab_core::conjugate::{dirichlet_predictive, CountVector, DirichletPrior};
use seqlab_core::TIGHT_REL_TOLERANCE;

use super::{check, close_to, decade_sweep, stamp, Experiment, Outcome};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::table::{ResultTable, Value};

const DEFAULT_DAYS: u64 = 1_826_213;

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let n_max = cfg.n.unwrap_or(DEFAULT_DAYS);
    let prior = DirichletPrior::uniform(2);

    let mut table = ResultTable::new(&["n", "predict_one", "doom"]);
    stamp(&mut table, Experiment::Sunrise);
    table.meta("n", n_max.to_string());
    table.meta("prior", "laplace");

    let mut violations = Vec::new();
    for n in decade_sweep(n_max) {
        let counts = CountVector::binary(0, n);
        let predict_one = dirichlet_predictive(&prior, &counts, 1)?;
        let doom = dirichlet_predictive(&prior, &counts, 0)?;
        let nf = n as f64;

        check(
            &mut violations,
            close_to(predict_one, (nf + 1.0) / (nf + 2.0), TIGHT_REL_TOLERANCE),
            || format!("predict_one at n = {n} is {predict_one}, not (n+1)/(n+2)"),
        );
        check(
            &mut violations,
            close_to(doom, 1.0 / (nf + 2.0), TIGHT_REL_TOLERANCE),
            || format!("doom at n = {n} is {doom}, not 1/(n+2)"),
        );
        check(
            &mut violations,
            (predict_one + doom - 1.0).abs() <= TIGHT_REL_TOLERANCE,
            || format!("columns at n = {n} sum to {}", predict_one + doom),
        );

        table.push_row(vec![
            Value::Int(n as i64),
            Value::Float(predict_one),
            Value::Float(doom),
        ]);
    }

    Ok(Outcome { table, violations })
}

//! Law confirmation in a finite population.
//!
//! Over a population of N exchangeable individuals with a uniform prior
//! on the number of counterexamples, observing n clean individuals gives
//! the law "all N are clean" posterior (n+1)/(N+1): linear climb to
//! certainty at full census, no point mass needed. Rows sweep several
//! populations and sample sizes; each posterior is checked against the
//! closed form.

use seqlab_core::conjugate::finite_population_posterior;
use seqlab_core::TIGHT_REL_TOLERANCE;

use super::{check, close_to, stamp, Experiment, Outcome};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::table::{ResultTable, Value};

const DEFAULT_MAX_POPULATION: u64 = 10_000;

/// Sample sizes worth a row: the empty census, the first observation,
/// quartiles, and the last two steps to completeness.
fn sample_points(population: u64) -> Vec<u64> {
    let mut ns = vec![
        0,
        1,
        population / 4,
        population / 2,
        3 * population / 4,
        population.saturating_sub(1),
        population,
    ];
    ns.sort_unstable();
    ns.dedup();
    ns
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let max_population = cfg.n.unwrap_or(DEFAULT_MAX_POPULATION);

    let mut table = ResultTable::new(&["population", "sample", "law_posterior"]);
    stamp(&mut table, Experiment::FinitePopulation);
    table.meta("n", max_population.to_string());

    let mut populations = vec![];
    let mut p = 10u64.min(max_population.max(1));
    while p <= max_population {
        populations.push(p);
        match p.checked_mul(10) {
            Some(next) => p = next,
            None => break,
        }
    }
    if populations.last() != Some(&max_population) {
        populations.push(max_population);
    }

    let mut violations = Vec::new();
    for &population in &populations {
        for sample in sample_points(population) {
            let posterior = finite_population_posterior(sample, population)?;
            let expected = (sample as f64 + 1.0) / (population as f64 + 1.0);
            check(
                &mut violations,
                close_to(posterior, expected, TIGHT_REL_TOLERANCE),
                || {
                    format!(
                        "posterior at n = {sample} of N = {population} is {posterior}, \
                         not (n+1)/(N+1)"
                    )
                },
            );
            check(
                &mut violations,
                sample < population || posterior == 1.0,
                || format!("full census of N = {population} left posterior {posterior}"),
            );
            table.push_row(vec![
                Value::Int(population as i64),
                Value::Int(sample as i64),
                Value::Float(posterior),
            ]);
        }
    }

    Ok(Outcome { table, violations })
}

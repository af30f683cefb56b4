//! The experiment catalog: each experiment resolves its configuration,
//! produces a [`ResultTable`], and checks its own inequalities.
//!
//! An experiment never prints and never exits; it returns the table plus a
//! list of violated assertions. The caller decides what to do with an
//! unhealthy outcome (the binary maps it to a nonzero exit status). Given
//! equal configuration, every experiment emits byte-identical CSV.

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::table::ResultTable;

mod bound_suite;
mod convergence;
mod finite_population;
mod iid_instantaneous;
mod magic_numbers;
mod raven;
mod regrouping;
mod sunrise;

/// The experiments the binary knows how to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Sunrise,
    RavenConfirmation,
    FinitePopulation,
    Regrouping,
    BoundSuite,
    IidInstantaneous,
    MagicNumbers,
    ComputableConvergence,
}

pub const ALL_EXPERIMENTS: [Experiment; 8] = [
    Experiment::Sunrise,
    Experiment::RavenConfirmation,
    Experiment::FinitePopulation,
    Experiment::Regrouping,
    Experiment::BoundSuite,
    Experiment::IidInstantaneous,
    Experiment::MagicNumbers,
    Experiment::ComputableConvergence,
];

impl Experiment {
    #[must_use]
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Sunrise => "sunrise",
            Experiment::RavenConfirmation => "raven-confirmation",
            Experiment::FinitePopulation => "finite-population",
            Experiment::Regrouping => "regrouping",
            Experiment::BoundSuite => "bound-suite",
            Experiment::IidInstantaneous => "iid-instantaneous",
            Experiment::MagicNumbers => "magic-numbers",
            Experiment::ComputableConvergence => "computable-convergence",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        ALL_EXPERIMENTS
            .into_iter()
            .find(|e| e.name() == name)
            .ok_or_else(|| CliError::UnknownExperiment {
                name: name.to_string(),
                known: ALL_EXPERIMENTS
                    .iter()
                    .map(|e| e.name())
                    .collect::<Vec<_>>()
                    .join(", "),
            })
    }

    /// Whether the experiment draws random numbers and therefore needs a
    /// seed.
    #[must_use]
    pub fn is_stochastic(self) -> bool {
        matches!(self, Experiment::BoundSuite | Experiment::MagicNumbers)
    }
}

/// A finished experiment: the table it produced and every asserted
/// inequality that did not hold.
pub struct Outcome {
    pub table: ResultTable,
    pub violations: Vec<String>,
}

impl Outcome {
    #[must_use]
    pub fn healthy(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Runs one experiment against a resolved configuration.
pub fn run(experiment: Experiment, cfg: &ExperimentConfig) -> Result<Outcome> {
    if experiment.is_stochastic() {
        cfg.require_seed(experiment.name())?;
    }
    match experiment {
        Experiment::Sunrise => sunrise::run(cfg),
        Experiment::RavenConfirmation => raven::run(cfg),
        Experiment::FinitePopulation => finite_population::run(cfg),
        Experiment::Regrouping => regrouping::run(cfg),
        Experiment::BoundSuite => bound_suite::run(cfg),
        Experiment::IidInstantaneous => iid_instantaneous::run(cfg),
        Experiment::MagicNumbers => magic_numbers::run(cfg),
        Experiment::ComputableConvergence => convergence::run(cfg),
    }
}

/// Stamps the metadata every table carries: the experiment's identity and
/// the versions that produced it. Experiment-specific keys follow.
fn stamp(table: &mut ResultTable, experiment: Experiment) {
    table.meta("experiment", experiment.name());
    table.meta("cli_version", env!("CARGO_PKG_VERSION"));
    table.meta("core_version", seqlab_core::VERSION);
}

/// Records `what` as a violation when `ok` is false.
fn check(violations: &mut Vec<String>, ok: bool, what: impl FnOnce() -> String) {
    if !ok {
        violations.push(what());
    }
}

/// Relative agreement against a reference value; exact zeros must match
/// exactly.
fn close_to(value: f64, reference: f64, rel_tol: f64) -> bool {
    if reference == 0.0 {
        value == 0.0
    } else {
        (value - reference).abs() <= rel_tol * reference.abs()
    }
}

/// 0..=9, then decades, then `max` itself: a sweep that shows both ends
/// of a closed-form curve without drowning the table.
fn decade_sweep(max: u64) -> Vec<u64> {
    let mut ns: Vec<u64> = (0..=9).filter(|&n| n <= max).collect();
    let mut decade = 10u64;
    while decade <= max {
        ns.push(decade);
        decade = decade.saturating_mul(10);
    }
    if !ns.contains(&max) {
        ns.push(max);
    }
    ns.sort_unstable();
    ns.dedup();
    ns
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for e in ALL_EXPERIMENTS {
            assert_eq!(Experiment::from_name(e.name()).unwrap(), e);
        }
    }

    #[test]
    fn unknown_names_list_the_catalog() {
        let err = Experiment::from_name("sunset").unwrap_err();
        let message = err.to_string();
        assert!(message.contains("sunset"));
        assert!(message.contains("sunrise"));
        assert!(message.contains("computable-convergence"));
    }

    #[test]
    fn stochastic_experiments_insist_on_a_seed() {
        let cfg = ExperimentConfig::default();
        for e in [Experiment::BoundSuite, Experiment::MagicNumbers] {
            assert!(run(e, &cfg).is_err(), "{} ran seedless", e.name());
        }
    }

    #[test]
    fn decade_sweep_covers_both_ends() {
        assert_eq!(decade_sweep(5), vec![0, 1, 2, 3, 4, 5]);
        let ns = decade_sweep(1_826_213);
        assert!(ns.starts_with(&[0, 1, 2]));
        assert!(ns.contains(&1_000_000));
        assert_eq!(*ns.last().unwrap(), 1_826_213);
    }

    #[test]
    fn close_to_treats_zero_as_exact() {
        assert!(close_to(0.0, 0.0, 1e-12));
        assert!(!close_to(1e-300, 0.0, 1e-12));
        assert!(close_to(1.0 + 1e-13, 1.0, 1e-12));
        assert!(!close_to(1.0 + 1e-11, 1.0, 1e-12));
    }
}

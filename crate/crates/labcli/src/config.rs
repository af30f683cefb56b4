//! Experiment configuration: a flat key-value file plus command-line
//! overrides, command line winning key by key.
//!
//! The file format is one `key = value` pair per line; blank lines and
//! `#` comments are skipped. The key set is exactly the command-line
//! option set (`seed`, `n`, `traj`, `L`, `T`, `prior`, `loss`, `out`);
//! unknown and duplicate keys are rejected rather than ignored, so a typo
//! cannot silently run the wrong experiment.

use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

/// Options an experiment may consume. Each experiment applies its own
/// defaults for fields left unset and ignores fields it has no use for;
/// the metadata block of the result table echoes the resolved values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentConfig {
    /// Random seed; mandatory for experiments that draw random numbers.
    pub seed: Option<u64>,
    /// Horizon or sweep size, experiment-specific.
    pub n: Option<u64>,
    /// Monte Carlo trajectories, or permutations for rank tests.
    pub trajectories: Option<u64>,
    /// Program-length budget for machine-model experiments.
    pub max_len: Option<u32>,
    /// Step budget for machine-model experiments.
    pub max_steps: Option<u64>,
    pub prior: Option<String>,
    pub loss: Option<String>,
    /// Where to write the CSV document; stdout when unset.
    pub out: Option<PathBuf>,
    /// Cache directory for machine-model experiments. Not a config-file
    /// key: the binary fills it from `LAB_CACHE_DIR` or the default.
    pub cache_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Reads `path` and overlays `overrides` on what it finds.
    pub fn from_file(path: &Path, overrides: ExperimentConfig) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = parse_key_values(&text)?;
        Ok(base.overlaid(overrides))
    }

    /// Field-by-field merge; `overrides` wins wherever it is set.
    #[must_use]
    pub fn overlaid(self, overrides: ExperimentConfig) -> Self {
        ExperimentConfig {
            seed: overrides.seed.or(self.seed),
            n: overrides.n.or(self.n),
            trajectories: overrides.trajectories.or(self.trajectories),
            max_len: overrides.max_len.or(self.max_len),
            max_steps: overrides.max_steps.or(self.max_steps),
            prior: overrides.prior.or(self.prior),
            loss: overrides.loss.or(self.loss),
            out: overrides.out.or(self.out),
            cache_dir: overrides.cache_dir.or(self.cache_dir),
        }
    }

    /// The seed, or a configuration error naming the experiment that
    /// needed one.
    pub fn require_seed(&self, experiment: &str) -> Result<u64> {
        self.seed.ok_or_else(|| {
            CliError::Config(format!(
                "{experiment} draws random numbers; set a seed with --seed or `seed = ...`"
            ))
        })
    }
}

/// Parses the flat `key = value` format, rejecting unknown and repeated
/// keys.
pub fn parse_key_values(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut seen: Vec<&str> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("line {}: expected `key = value`, got {raw:?}", i + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        let slot = match key {
            "seed" => {
                cfg.seed = Some(parse_number(key, value, i)?);
                "seed"
            }
            "n" => {
                cfg.n = Some(parse_number(key, value, i)?);
                "n"
            }
            "traj" => {
                cfg.trajectories = Some(parse_number(key, value, i)?);
                "traj"
            }
            "L" => {
                cfg.max_len = Some(parse_number(key, value, i)?);
                "L"
            }
            "T" => {
                cfg.max_steps = Some(parse_number(key, value, i)?);
                "T"
            }
            "prior" => {
                cfg.prior = Some(value.to_string());
                "prior"
            }
            "loss" => {
                cfg.loss = Some(value.to_string());
                "loss"
            }
            "out" => {
                cfg.out = Some(PathBuf::from(value));
                "out"
            }
            other => {
                return Err(CliError::Config(format!(
                    "line {}: unknown key {other:?} (known: seed, n, traj, L, T, prior, loss, out)",
                    i + 1
                )))
            }
        };
        if seen.contains(&slot) {
            return Err(CliError::Config(format!(
                "line {}: key {slot:?} set twice",
                i + 1
            )));
        }
        seen.push(slot);
    }
    Ok(cfg)
}

fn parse_number<T: std::str::FromStr>(key: &str, value: &str, line_index: usize) -> Result<T> {
    value.parse().map_err(|_| {
        CliError::Config(format!(
            "line {}: key {key:?} needs a nonnegative integer, got {value:?}",
            line_index + 1
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_full_key_set() {
        let cfg = parse_key_values(
            "# run profile\n\
             seed = 7\n\
             n=250\n\
             traj = 1000\n\
             L = 18\n\
             T = 5000\n\
             prior = jeffreys\n\
             loss = zero-one\n\
             out = results.csv\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.n, Some(250));
        assert_eq!(cfg.trajectories, Some(1000));
        assert_eq!(cfg.max_len, Some(18));
        assert_eq!(cfg.max_steps, Some(5000));
        assert_eq!(cfg.prior.as_deref(), Some("jeffreys"));
        assert_eq!(cfg.loss.as_deref(), Some("zero-one"));
        assert_eq!(cfg.out, Some(PathBuf::from("results.csv")));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_key_values("sede = 7\n").unwrap_err();
        assert!(err.to_string().contains("unknown key \"sede\""));
    }

    #[test]
    fn repeated_keys_are_rejected() {
        let err = parse_key_values("n = 1\nn = 2\n").unwrap_err();
        assert!(err.to_string().contains("set twice"));
    }

    #[test]
    fn malformed_lines_are_rejected() {
        assert!(parse_key_values("just words\n").is_err());
        assert!(parse_key_values("n = minus-one\n").is_err());
    }

    #[test]
    fn overrides_win_field_by_field() {
        let file = parse_key_values("seed = 1\nn = 10\nprior = laplace\n").unwrap();
        let merged = file.overlaid(ExperimentConfig {
            n: Some(99),
            ..ExperimentConfig::default()
        });
        assert_eq!(merged.seed, Some(1));
        assert_eq!(merged.n, Some(99));
        assert_eq!(merged.prior.as_deref(), Some("laplace"));
    }

    #[test]
    fn require_seed_names_the_experiment() {
        let cfg = ExperimentConfig::default();
        let err = cfg.require_seed("bound-suite").unwrap_err();
        assert!(err.to_string().contains("bound-suite"));
        let cfg = ExperimentConfig {
            seed: Some(3),
            ..ExperimentConfig::default()
        };
        assert_eq!(cfg.require_seed("bound-suite").unwrap(), 3);
    }
}

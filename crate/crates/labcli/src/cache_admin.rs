//! Administration of the enumeration cache behind the machine-model
//! experiments: where it lives, how budgets resolve, and the build,
//! verify, and info operations the `lab cache` subcommand exposes.
//!
//! The cache directory defaults to `.lab-cache` under the working
//! directory; the `LAB_CACHE_DIR` environment variable overrides it.
//! Cache files are named by instruction-set version and budget, so
//! different budgets coexist and a stale file is never misread.

use std::path::{Path, PathBuf};

use seqlab_core::solomonoff::{
    cache, enumerate, Budget, CacheHeader, ComplexityEstimates, Enumeration,
};

use crate::config::ExperimentConfig;
use crate::error::Result;

pub const CACHE_DIR_VAR: &str = "LAB_CACHE_DIR";
const DEFAULT_CACHE_DIR: &str = ".lab-cache";

/// The directory cache files live in.
#[must_use]
pub fn cache_dir() -> PathBuf {
    match std::env::var_os(CACHE_DIR_VAR) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => PathBuf::from(DEFAULT_CACHE_DIR),
    }
}

/// The standard budget with any configured overrides applied.
pub fn budget_from(cfg: &ExperimentConfig) -> Result<Budget> {
    let mut budget = Budget::standard();
    if let Some(max_len) = cfg.max_len {
        budget = budget.with_max_len(max_len as usize);
    }
    if let Some(max_steps) = cfg.max_steps {
        budget = budget.with_max_steps(max_steps);
    }
    budget.validate()?;
    Ok(budget)
}

/// Enumerates from scratch and saves, replacing whatever was cached.
/// Returns the file written and the number of programs in it.
pub fn build(dir: &Path, budget: &Budget) -> Result<(PathBuf, usize)> {
    let table = enumerate(budget)?;
    let path = cache::save(dir, &table)?;
    Ok((path, table.len()))
}

/// Full integrity check of the cached table for this budget: framing,
/// digest, prefix-freeness, and the Kraft sum.
pub fn verify(dir: &Path, budget: &Budget) -> Result<CacheHeader> {
    Ok(cache::verify(&dir.join(cache::cache_file_name(budget)))?)
}

/// Header of the cached table without decoding its records.
pub fn info(dir: &Path, budget: &Budget) -> Result<CacheHeader> {
    Ok(cache::inspect(&dir.join(cache::cache_file_name(budget)))?)
}

/// The enumeration for this budget, from cache when possible.
pub fn load_table(dir: &Path, budget: &Budget) -> Result<Enumeration> {
    Ok(cache::load_or_build(dir, budget)?)
}

/// Estimates backed by the cached enumeration for the configured budget,
/// in the configured cache directory.
pub fn estimates_for(cfg: &ExperimentConfig) -> Result<ComplexityEstimates> {
    let budget = budget_from(cfg)?;
    let dir = cfg.cache_dir.clone().unwrap_or_else(cache_dir);
    let table = load_table(&dir, &budget)?;
    Ok(ComplexityEstimates::new(&table))
}

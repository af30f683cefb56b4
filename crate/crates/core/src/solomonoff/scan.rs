//! Experiments over the enumerated table: convergence along the all-ones
//! run and the relationship between next-bit surprise and description
//! length across whole-number run lengths.
//!
//! The scans are pure functions of the table plus, for the permutation
//! test, one explicit seed; identical inputs give identical reports.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use super::bits::Bits;
use super::estimates::ComplexityEstimates;
use crate::error::{Error, Result};

fn ones(n: usize) -> Bits {
    let mut bits = Bits::new();
    for _ in 0..n {
        bits.push(true);
    }
    bits
}

/// One step of the all-ones convergence scan.
#[derive(Clone, Copy, Debug)]
pub struct ConvergenceRow {
    /// Position being predicted; the prefix has n - 1 ones.
    pub n: usize,
    /// Conditional mass of the next one given the prefix.
    pub conditional: f64,
    /// Running sum of one minus the conditional over steps up to n.
    pub cumulative_gap: f64,
    /// Shortest program covering the first n ones.
    pub description_length: u32,
}

impl ConvergenceRow {
    /// The cumulative prediction gap never exceeds ln 2 times the
    /// description length of the sequence predicted so far.
    #[must_use]
    pub fn bound(&self) -> f64 {
        f64::from(self.description_length) * std::f64::consts::LN_2
    }
}

/// Walks the all-ones sequence, accumulating one-step prediction gaps.
/// `max_n` may not exceed the output cap of the table's budget.
pub fn computable_convergence(
    estimates: &ComplexityEstimates,
    max_n: usize,
) -> Result<Vec<ConvergenceRow>> {
    if max_n == 0 || max_n > estimates.budget().max_output {
        return Err(Error::Domain {
            what: format!(
                "convergence horizon must lie in 1..={}, got {max_n}",
                estimates.budget().max_output
            ),
        });
    }
    let mut rows = Vec::with_capacity(max_n);
    let mut cumulative = 0.0f64;
    let mut compensation = 0.0f64;
    for n in 1..=max_n {
        let den = estimates.mass_numerator(&ones(n - 1));
        if den == 0 {
            return Err(Error::ConditioningOnNull);
        }
        let num = estimates.mass_numerator(&ones(n));
        let conditional = num as f64 / den as f64;
        let term = (1.0 - conditional) - compensation;
        let folded = cumulative + term;
        compensation = (folded - cumulative) - term;
        cumulative = folded;
        let description_length = estimates
            .approx_km(&ones(n))
            .ok_or(Error::ConditioningOnNull)?;
        rows.push(ConvergenceRow {
            n,
            conditional,
            cumulative_gap: cumulative,
            description_length,
        });
    }
    Ok(rows)
}

/// One run length in the magic-number scan.
#[derive(Clone, Copy, Debug)]
pub struct MagicRow {
    pub n: u64,
    /// Conditional mass of a zero after n ones.
    pub surprise: f64,
    /// Two to the minus description length of the number n, zero when no
    /// program prints it within budget.
    pub weight: f64,
    /// surprise / weight where both are positive, else zero.
    pub ratio: f64,
}

/// Joint outcome of the magic-number scan over one range.
#[derive(Clone, Debug)]
pub struct MagicScanReport {
    pub rows: Vec<MagicRow>,
    /// Fraction of powers of two in range whose surprise is at least both
    /// neighbours'.
    pub power_maxima_fraction: f64,
    /// Rank correlation between surprise and weight over the rows.
    pub spearman_rho: f64,
    /// One-sided seeded permutation p-value for positive association.
    pub p_value: f64,
    /// Smallest and largest ratio over rows where both factors are
    /// positive; None if no such row exists.
    pub band: Option<(f64, f64)>,
}

fn surprise_at(estimates: &ComplexityEstimates, n: usize) -> Result<f64> {
    let base = ones(n);
    let den = estimates.mass_numerator(&base);
    if den == 0 {
        return Err(Error::ConditioningOnNull);
    }
    let num = estimates.mass_numerator(&base.appended(false));
    Ok(num as f64 / den as f64)
}

/// Average ranks, one-based, with ties sharing their mean rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - mean_a) * (y - mean_b);
        var_a += (x - mean_a).powi(2);
        var_b += (y - mean_b).powi(2);
    }
    if var_a == 0.0 || var_b == 0.0 {
        return 0.0;
    }
    cov / (var_a * var_b).sqrt()
}

/// Rank correlation with average ranks on ties.
#[must_use]
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "paired samples");
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Scans run lengths `lo..=hi`, relating the surprise of a zero after n
/// ones to the description weight of n. Neighbour surprises for the
/// local-maximum count reach one step outside the range, so `hi + 2` bits
/// must fit inside the table's output cap.
pub fn magic_number_scan(
    estimates: &ComplexityEstimates,
    lo: u64,
    hi: u64,
    permutations: u32,
    seed: u64,
) -> Result<MagicScanReport> {
    let cap = estimates.budget().max_output as u64;
    if lo < 2 || lo >= hi || hi + 2 > cap {
        return Err(Error::Domain {
            what: format!("scan range {lo}..={hi} must satisfy 2 <= lo < hi <= cap - 2 = {}", cap - 2),
        });
    }
    if permutations == 0 {
        return Err(Error::Domain {
            what: "permutation test needs at least one permutation".into(),
        });
    }

    let mut rows = Vec::with_capacity((hi - lo + 1) as usize);
    for n in lo..=hi {
        let surprise = surprise_at(estimates, n as usize)?;
        let weight = match estimates.approx_k_int(n) {
            Some(k) => (-f64::from(k)).exp2(),
            None => 0.0,
        };
        let ratio = if surprise > 0.0 && weight > 0.0 {
            surprise / weight
        } else {
            0.0
        };
        rows.push(MagicRow {
            n,
            surprise,
            weight,
            ratio,
        });
    }

    let mut powers = 0u32;
    let mut maxima = 0u32;
    let mut p = 2u64;
    while p <= hi {
        if p >= lo {
            powers += 1;
            let here = surprise_at(estimates, p as usize)?;
            let left = surprise_at(estimates, (p - 1) as usize)?;
            let right = surprise_at(estimates, (p + 1) as usize)?;
            if here >= left && here >= right {
                maxima += 1;
            }
        }
        p *= 2;
    }

    let surprises: Vec<f64> = rows.iter().map(|r| r.surprise).collect();
    let weights: Vec<f64> = rows.iter().map(|r| r.weight).collect();
    let observed = spearman(&surprises, &weights);

    let surprise_ranks = average_ranks(&surprises);
    let mut weight_ranks = average_ranks(&weights);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut at_least = 0u32;
    for _ in 0..permutations {
        weight_ranks.shuffle(&mut rng);
        if pearson(&surprise_ranks, &weight_ranks) >= observed {
            at_least += 1;
        }
    }
    let p_value = f64::from(1 + at_least) / f64::from(permutations + 1);

    let band = rows
        .iter()
        .filter(|r| r.ratio > 0.0)
        .fold(None, |acc: Option<(f64, f64)>, r| match acc {
            None => Some((r.ratio, r.ratio)),
            Some((min, max)) => Some((min.min(r.ratio), max.max(r.ratio))),
        });

    Ok(MagicScanReport {
        rows,
        power_maxima_fraction: f64::from(maxima) / f64::from(powers.max(1)),
        spearman_rho: observed,
        p_value,
        band,
    })
}

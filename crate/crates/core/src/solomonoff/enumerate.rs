//! Exhaustive enumeration of every minimal program within a length budget.
//!
//! The operator and literal codes are complete, so the set of minimal
//! programs is exactly the set of tapes the parser consumes in full, and
//! no tape has a minimal program as a proper prefix. The walk below grows
//! prefixes bit by bit, records and stops wherever a parse completes, and
//! abandons branches only at the length budget; nothing else can be pruned
//! and nothing is double-counted.
//!
//! Work is partitioned for worker pools by a short serial pre-pass: every
//! still-incomplete prefix of `SPLIT_DEPTH` bits roots an independent
//! subtree, and the merged table is sorted canonically by (length, bits)
//! so the result is identical no matter how many workers ran.

use rayon::prelude::*;

use super::bits::Bits;
use super::vm::{execute, parse_program, Budget, Parse, ProgramRecord};
use crate::error::Result;

/// Serial exploration depth before subtrees are handed to the worker pool.
const SPLIT_DEPTH: usize = 8;

/// Denominator of the exact dyadic Kraft accounting: masses are integer
/// multiples of 2^-64.
pub const DYADIC_ONE: u128 = 1u128 << 64;

/// Exact dyadic sum of 2^-len over a program table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KraftSum {
    /// Numerator at scale 2^-64.
    pub numerator: u128,
}

impl KraftSum {
    pub fn from_lengths<I: IntoIterator<Item = usize>>(lengths: I) -> Self {
        let numerator = lengths
            .into_iter()
            .map(|len| {
                assert!(len <= 64, "program length {len} exceeds the dyadic scale");
                DYADIC_ONE >> len
            })
            .sum();
        KraftSum { numerator }
    }

    /// The sum is at most one, which any prefix-free table satisfies.
    #[must_use]
    pub fn holds(&self) -> bool {
        self.numerator <= DYADIC_ONE
    }

    #[must_use]
    pub fn as_f64(&self) -> f64 {
        self.numerator as f64 / DYADIC_ONE as f64
    }
}

/// The complete minimal-program table for one budget.
#[derive(Clone, Debug)]
pub struct Enumeration {
    budget: Budget,
    /// Sorted by (program length, program bits); every program is unique.
    records: Vec<ProgramRecord>,
}

impl Enumeration {
    /// Wraps an already-built table, re-sorting into canonical order.
    /// Used by the cache loader; `enumerate` is the normal constructor.
    pub(crate) fn from_parts(budget: Budget, mut records: Vec<ProgramRecord>) -> Self {
        sort_canonically(&mut records);
        Enumeration { budget, records }
    }

    #[must_use]
    pub fn budget(&self) -> &Budget {
        &self.budget
    }

    #[must_use]
    pub fn records(&self) -> &[ProgramRecord] {
        &self.records
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.records.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    #[must_use]
    pub fn kraft_sum(&self) -> KraftSum {
        KraftSum::from_lengths(self.records.iter().map(|r| r.program.len()))
    }

    /// True when no program is a proper prefix of another. In the sorted
    /// order a prefix lands immediately before its extensions, so checking
    /// lexicographic neighbours is exhaustive.
    #[must_use]
    pub fn is_prefix_free(&self) -> bool {
        let mut by_bits: Vec<&Bits> = self.records.iter().map(|r| &r.program).collect();
        by_bits.sort_unstable();
        by_bits
            .windows(2)
            .all(|pair| pair[0] != pair[1] && !pair[0].is_prefix_of(pair[1]))
    }
}

fn sort_canonically(records: &mut [ProgramRecord]) {
    records.sort_unstable_by(|a, b| {
        a.program
            .len()
            .cmp(&b.program.len())
            .then_with(|| a.program.cmp(&b.program))
    });
}

/// Extends one prefix to every minimal program below the length budget.
/// The prefix must parse as incomplete.
fn explore(prefix: &Bits, budget: &Budget, out: &mut Vec<ProgramRecord>) {
    for bit in [false, true] {
        let candidate = prefix.appended(bit);
        match parse_program(&candidate) {
            Parse::Complete { expr, consumed } => {
                debug_assert_eq!(consumed, candidate.len());
                out.push(execute(&expr, candidate, budget));
            }
            Parse::NeedsMoreBits => {
                if candidate.len() < budget.max_len {
                    explore(&candidate, budget, out);
                }
            }
        }
    }
}

/// Splits the prefix tree at `SPLIT_DEPTH`, returning finished records and
/// the incomplete prefixes that root the remaining subtrees.
fn serial_prepass(budget: &Budget) -> (Vec<ProgramRecord>, Vec<Bits>) {
    let mut finished = Vec::new();
    let mut frontier = Vec::new();
    let mut stack = vec![Bits::new()];
    while let Some(prefix) = stack.pop() {
        for bit in [false, true] {
            let candidate = prefix.appended(bit);
            match parse_program(&candidate) {
                Parse::Complete { expr, consumed } => {
                    debug_assert_eq!(consumed, candidate.len());
                    finished.push(execute(&expr, candidate, budget));
                }
                Parse::NeedsMoreBits => {
                    if candidate.len() >= budget.max_len {
                        continue;
                    }
                    if candidate.len() >= SPLIT_DEPTH {
                        frontier.push(candidate);
                    } else {
                        stack.push(candidate);
                    }
                }
            }
        }
    }
    (finished, frontier)
}

/// Enumerates every minimal program within the budget and runs each one.
/// The table is complete for the budget, canonically sorted, and
/// independent of worker count.
pub fn enumerate(budget: &Budget) -> Result<Enumeration> {
    budget.validate()?;
    let (mut records, frontier) = serial_prepass(budget);
    let mut extended: Vec<ProgramRecord> = frontier
        .par_iter()
        .map(|prefix| {
            let mut out = Vec::new();
            explore(prefix, budget, &mut out);
            out
        })
        .reduce(Vec::new, |mut acc, mut chunk| {
            acc.append(&mut chunk);
            acc
        });
    records.append(&mut extended);
    sort_canonically(&mut records);
    Ok(Enumeration {
        budget: *budget,
        records,
    })
}

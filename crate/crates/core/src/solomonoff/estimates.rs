//! Mass and description-length estimates over an enumerated program table.
//!
//! The monotone mass of a bit string x is the dyadic sum of 2^-len over
//! every minimal program whose output extends x; the companion figures are
//! the shortest such program (monotone description length) and, for whole
//! numbers, the shortest halting program printing the number exactly.
//! Written with ideal quantities, where M is the monotone mass, Km its
//! description length, and K the halting one:
//!
//! ```text
//! M(x) = sum over p with output extending x of 2^-len(p) >= 2^-Km(x),
//! M(x) >= M(x0) + M(x1),          Km(x) <= Km(xa),
//! ```
//!
//! all of which hold here exactly because every query is evaluated in
//! integer dyadic arithmetic at scale 2^-64 before any float appears.
//!
//! Outputs are kept sorted with prefixes before their extensions, so the
//! programs covering x occupy one contiguous index range found by binary
//! search; cumulative dyadic weights give range masses in constant time
//! and a sparse minimum table gives range description lengths likewise.

use std::collections::HashMap;
use std::sync::Arc;

use super::bits::Bits;
use super::enumerate::{Enumeration, KraftSum, DYADIC_ONE};
use super::vm::Budget;
use crate::error::{Error, Result};
use crate::logmass::LogMass;
use crate::model::{PrefixScanner, Semimeasure};
use crate::seq::{Alphabet, Seq, Symbol};

/// Constant-time range-minimum structure over program lengths.
struct SparseMin {
    /// rows[k][i] = min of lengths[i .. i + 2^k].
    rows: Vec<Vec<u32>>,
}

impl SparseMin {
    fn new(values: &[u32]) -> Self {
        let mut rows = vec![values.to_vec()];
        let mut width = 1;
        while 2 * width <= values.len() {
            let prev = rows.last().unwrap();
            let row: Vec<u32> = (0..prev.len() - width)
                .map(|i| prev[i].min(prev[i + width]))
                .collect();
            rows.push(row);
            width *= 2;
        }
        SparseMin { rows }
    }

    /// Minimum over [lo, hi); empty ranges return None.
    fn min(&self, lo: usize, hi: usize) -> Option<u32> {
        if lo >= hi {
            return None;
        }
        let span = hi - lo;
        let k = usize::BITS as usize - 1 - span.leading_zeros() as usize;
        let row = &self.rows[k];
        Some(row[lo].min(row[hi - (1 << k)]))
    }
}

/// Queryable summary of one enumerated table.
pub struct ComplexityEstimates {
    budget: Budget,
    /// Program outputs sorted with prefixes before extensions; one slot per
    /// program, so repeated outputs appear repeatedly.
    outputs: Vec<Bits>,
    /// Program bit lengths aligned with `outputs`.
    lengths: Vec<u32>,
    /// cum_weight[i] = dyadic sum of 2^-len over the first i slots.
    cum_weight: Vec<u128>,
    min_length: SparseMin,
    /// Shortest halting program per exact output.
    exact_min: HashMap<Bits, u32>,
    kraft: KraftSum,
}

impl ComplexityEstimates {
    #[must_use]
    pub fn new(table: &Enumeration) -> Self {
        let mut pairs: Vec<(Bits, u32)> = table
            .records()
            .iter()
            .map(|r| (r.output.clone(), r.program.len() as u32))
            .collect();
        pairs.sort_unstable_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));

        let mut outputs = Vec::with_capacity(pairs.len());
        let mut lengths = Vec::with_capacity(pairs.len());
        let mut cum_weight = Vec::with_capacity(pairs.len() + 1);
        cum_weight.push(0u128);
        for (output, len) in &pairs {
            outputs.push(output.clone());
            lengths.push(*len);
            cum_weight.push(cum_weight.last().unwrap() + (DYADIC_ONE >> len));
        }

        let mut exact_min: HashMap<Bits, u32> = HashMap::new();
        for record in table.records() {
            if !record.halted {
                continue;
            }
            let len = record.program.len() as u32;
            exact_min
                .entry(record.output.clone())
                .and_modify(|best| *best = (*best).min(len))
                .or_insert(len);
        }

        let min_length = SparseMin::new(&lengths);
        ComplexityEstimates {
            budget: *table.budget(),
            outputs,
            lengths,
            cum_weight,
            min_length,
            exact_min,
            kraft: table.kraft_sum(),
        }
    }

    #[must_use]
    pub fn budget(&self) -> &Budget {
        &self.budget
    }

    #[must_use]
    pub fn kraft_sum(&self) -> KraftSum {
        self.kraft
    }

    /// Index range of programs whose output extends `x`: in prefix-first
    /// order those are exactly the outputs in [x, successor(x)).
    fn range(&self, x: &Bits) -> (usize, usize) {
        let lo = self.outputs.partition_point(|o| o < x);
        let hi = match x.prefix_successor() {
            Some(succ) => self.outputs.partition_point(|o| o < &succ),
            None => self.outputs.len(),
        };
        (lo, hi)
    }

    /// Exact dyadic numerator of the mass of `x`, at scale 2^-64.
    #[must_use]
    pub fn mass_numerator(&self, x: &Bits) -> u128 {
        let (lo, hi) = self.range(x);
        self.cum_weight[hi] - self.cum_weight[lo]
    }

    /// Monotone mass of `x` under this table.
    #[must_use]
    pub fn approx_m(&self, x: &Bits) -> LogMass {
        dyadic_mass(self.mass_numerator(x))
    }

    /// Conditional mass of the next bit given `x`; the ratio is taken on
    /// exact numerators. Errors when `x` itself has mass zero.
    pub fn approx_conditional_m(&self, x: &Bits, bit: bool) -> Result<LogMass> {
        let den = self.mass_numerator(x);
        if den == 0 {
            return Err(Error::ConditioningOnNull);
        }
        let num = self.mass_numerator(&x.appended(bit));
        Ok(LogMass::from_ln((num as f64 / den as f64).ln()))
    }

    /// Length of the shortest program whose output extends `x`; None when
    /// no enumerated program covers it.
    #[must_use]
    pub fn approx_km(&self, x: &Bits) -> Option<u32> {
        let (lo, hi) = self.range(x);
        self.min_length.min(lo, hi)
    }

    /// Length of the shortest halting program printing exactly the binary
    /// expansion of `n`.
    #[must_use]
    pub fn approx_k_int(&self, n: u64) -> Option<u32> {
        self.exact_min.get(&binary_expansion(n)).copied()
    }

    /// Dyadic mass of programs whose output is exactly `x`, halted or cut.
    #[must_use]
    pub fn exact_output_numerator(&self, x: &Bits) -> u128 {
        let (lo, hi) = self.range(x);
        let mut sum = 0u128;
        for i in lo..hi {
            if &self.outputs[i] == x {
                sum += DYADIC_ONE >> self.lengths[i];
            } else {
                break;
            }
        }
        sum
    }
}

fn dyadic_mass(numerator: u128) -> LogMass {
    if numerator == 0 {
        LogMass::ZERO
    } else {
        LogMass::from_ln((numerator as f64).ln() - 64.0 * std::f64::consts::LN_2)
    }
}

/// MSB-first binary expansion, with zero spelled "0".
#[must_use]
pub fn binary_expansion(n: u64) -> Bits {
    let mut bits = Bits::new();
    if n == 0 {
        bits.push(false);
        return bits;
    }
    let top = 63 - n.leading_zeros();
    for shift in (0..=top).rev() {
        bits.push((n >> shift) & 1 == 1);
    }
    bits
}

/// Converts a binary-alphabet sequence to bits; None if any symbol is not
/// zero or one.
fn bits_from_seq(x: &Seq) -> Option<Bits> {
    let mut bits = Bits::new();
    for &symbol in x.symbols() {
        match symbol {
            0 => bits.push(false),
            1 => bits.push(true),
            _ => return None,
        }
    }
    Some(bits)
}

/// The enumerated table viewed as a binary semimeasure, pluggable into
/// every mixture, bound, and audit in the crate. Symbols outside {0, 1}
/// carry mass zero.
#[derive(Clone)]
pub struct ApproxM {
    estimates: Arc<ComplexityEstimates>,
}

impl ApproxM {
    #[must_use]
    pub fn new(estimates: Arc<ComplexityEstimates>) -> Self {
        ApproxM { estimates }
    }

    #[must_use]
    pub fn estimates(&self) -> &ComplexityEstimates {
        &self.estimates
    }
}

impl Semimeasure for ApproxM {
    fn alphabet(&self) -> Alphabet {
        Alphabet::new(2)
    }

    fn mass(&self, x: &Seq) -> LogMass {
        match bits_from_seq(x) {
            Some(bits) => self.estimates.approx_m(&bits),
            None => LogMass::ZERO,
        }
    }

    fn scanner(&self) -> Box<dyn PrefixScanner> {
        Box::new(ApproxMScanner {
            estimates: Arc::clone(&self.estimates),
            prefix: Bits::new(),
        })
    }
}

struct ApproxMScanner {
    estimates: Arc<ComplexityEstimates>,
    prefix: Bits,
}

impl PrefixScanner for ApproxMScanner {
    fn mass(&self) -> LogMass {
        self.estimates.approx_m(&self.prefix)
    }

    fn predictive(&self, a: Symbol) -> LogMass {
        if a > 1 {
            return LogMass::ZERO;
        }
        let den = self.estimates.mass_numerator(&self.prefix);
        if den == 0 {
            return LogMass::ZERO;
        }
        let num = self
            .estimates
            .mass_numerator(&self.prefix.appended(a == 1));
        LogMass::from_ln((num as f64 / den as f64).ln())
    }

    fn advance(&mut self, a: Symbol) {
        debug_assert!(a < 2, "binary alphabet");
        self.prefix.push(a == 1);
    }

    fn clone_box(&self) -> Box<dyn PrefixScanner> {
        Box::new(ApproxMScanner {
            estimates: Arc::clone(&self.estimates),
            prefix: self.prefix.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::semimeasure_audit;
    use crate::solomonoff::enumerate::enumerate;

    fn estimates_for(max_len: usize) -> ComplexityEstimates {
        let budget = Budget::standard().with_max_len(max_len);
        ComplexityEstimates::new(&enumerate(&budget).unwrap())
    }

    fn standard_estimates() -> &'static ComplexityEstimates {
        use std::sync::OnceLock;
        static TABLE: OnceLock<ComplexityEstimates> = OnceLock::new();
        TABLE.get_or_init(|| ComplexityEstimates::new(&enumerate(&Budget::standard()).unwrap()))
    }

    fn all_bits_up_to(len: usize) -> Vec<Bits> {
        let mut out = vec![Bits::new()];
        let mut layer = vec![Bits::new()];
        for _ in 0..len {
            let mut next = Vec::new();
            for b in &layer {
                for bit in [false, true] {
                    let extended = b.appended(bit);
                    out.push(extended.clone());
                    next.push(extended);
                }
            }
            layer = next;
        }
        out
    }

    #[test]
    fn empty_prefix_mass_equals_the_kraft_sum() {
        let est = estimates_for(14);
        assert_eq!(est.mass_numerator(&Bits::new()), est.kraft_sum().numerator);
        assert!(est.approx_m(&Bits::new()).prob() < 1.0);
    }

    /// The three-way split of a prefix's mass is an exact integer identity:
    /// programs covering x either print exactly x or continue with 0 or 1.
    #[test]
    fn mass_splits_exactly_into_children_and_exact_output()  {
        let est = estimates_for(14);
        for x in all_bits_up_to(6) {
            let whole = est.mass_numerator(&x);
            let left = est.mass_numerator(&x.appended(false));
            let right = est.mass_numerator(&x.appended(true));
            let held = est.exact_output_numerator(&x);
            assert_eq!(whole, left + right + held, "at {x}");
        }
    }

    #[test]
    fn mass_dominates_its_shortest_description() {
        let est = estimates_for(14);
        for x in all_bits_up_to(6) {
            if let Some(km) = est.approx_km(&x) {
                assert!(est.mass_numerator(&x) >= DYADIC_ONE >> km, "at {x}");
            } else {
                assert_eq!(est.mass_numerator(&x), 0, "at {x}");
            }
        }
    }

    #[test]
    fn description_length_grows_along_extensions() {
        let est = estimates_for(14);
        for x in all_bits_up_to(5) {
            let here = est.approx_km(&x);
            for bit in [false, true] {
                let there = est.approx_km(&x.appended(bit));
                match (here, there) {
                    (Some(h), Some(t)) => assert!(h <= t, "at {x}"),
                    (None, Some(_)) => panic!("extension gained coverage at {x}"),
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn ones_run_description_settles_at_seven_bits() {
        let est = estimates_for(14);
        assert_eq!(est.approx_km(&Bits::from_str01("1")), Some(2));
        assert_eq!(est.approx_km(&Bits::from_str01("11")), Some(6));
        for n in 3..=40 {
            let run = Bits::from_str01(&"1".repeat(n));
            assert_eq!(est.approx_km(&run), Some(7), "length {n}");
        }
    }

    /// Hand-minimized descriptions of the first whole numbers: emit for 1,
    /// two-emit trees for 2 and 3, then the print instruction, with the
    /// repeat combinator taking over for all-ones expansions like 7.
    #[test]
    fn integer_descriptions_match_hand_minimization() {
        let est = estimates_for(14);
        let expected = [
            (0u64, 2u32),
            (1, 2),
            (2, 6),
            (3, 6),
            (4, 8),
            (5, 9),
            (6, 9),
            (7, 9),
            (8, 9),
        ];
        for (n, len) in expected {
            assert_eq!(est.approx_k_int(n), Some(len), "n = {n}");
        }
    }

    /// Every whole number up to 256 has a print program within the house
    /// budget (the dearest, 255, costs exactly twenty bits), and no
    /// description is ever so short that its weight beats 1/n.
    #[test]
    fn integer_weights_never_beat_the_reciprocal() {
        let est = standard_estimates();
        for n in 1..=256u64 {
            let k = est
                .approx_k_int(n)
                .unwrap_or_else(|| panic!("no program prints {n}"));
            assert!(
                DYADIC_ONE >> k <= DYADIC_ONE / u128::from(n),
                "2^-K beats 1/n at n = {n}"
            );
        }
    }

    #[test]
    fn conditionals_are_exact_ratios_and_error_on_null() {
        let est = estimates_for(14);
        let x = Bits::from_str01("11");
        let cond = est.approx_conditional_m(&x, true).unwrap();
        let expected =
            est.mass_numerator(&Bits::from_str01("111")) as f64 / est.mass_numerator(&x) as f64;
        assert!((cond.prob() - expected).abs() < 1e-15);

        // No fourteen-bit program covers thirty bits opening "00": print
        // instructions never emit leading zeroes and the cheapest zero-
        // zero-then-loop expression tree already costs fifteen bits.
        let dead = Bits::from_str01(&format!("00{}", "1".repeat(28)));
        assert_eq!(est.mass_numerator(&dead), 0);
        assert!(matches!(
            est.approx_conditional_m(&dead, true),
            Err(Error::ConditioningOnNull)
        ));
    }

    #[test]
    fn shrinking_the_budget_only_removes_mass() {
        let narrow = estimates_for(12);
        let wide = estimates_for(14);
        for x in all_bits_up_to(5) {
            assert!(narrow.mass_numerator(&x) <= wide.mass_numerator(&x), "at {x}");
            if let (Some(n), Some(w)) = (narrow.approx_km(&x), wide.approx_km(&x)) {
                assert!(w <= n, "at {x}");
            }
        }
    }

    #[test]
    fn table_passes_a_depth_eight_audit() {
        let est = Arc::new(estimates_for(14));
        let report = semimeasure_audit(&ApproxM::new(est), 8, 1 << 12).unwrap();
        assert!(report.worst_violation <= 1e-12, "{}", report.worst_violation);
        assert!(report.empty_mass.prob() < 1.0);
    }

    #[test]
    fn scanner_tracks_the_mass_function() {
        let est = Arc::new(estimates_for(12));
        let model = ApproxM::new(Arc::clone(&est));
        let mut scanner = model.scanner();
        let path = [1u8, 1, 0, 1];
        let mut prefix = Seq::empty();
        for &symbol in &path {
            let direct = model.mass(&prefix.appended(symbol));
            let here = scanner.mass();
            let stepped = scanner.predictive(symbol);
            if !here.is_zero() {
                assert!((here.ln() + stepped.ln() - direct.ln()).abs() < 1e-12);
            }
            scanner.advance(symbol);
            prefix.push(symbol);
        }
    }

    #[test]
    fn binary_expansions_are_msb_first() {
        assert_eq!(binary_expansion(0).to_string(), "0");
        assert_eq!(binary_expansion(1).to_string(), "1");
        assert_eq!(binary_expansion(6).to_string(), "110");
        assert_eq!(binary_expansion(256).to_string(), "100000000");
    }
}

//! Sequence models: semimeasures, measures, and the operations every other
//! module builds on.
//!
//! A model assigns each finite sequence x a mass rho(x) in [0, 1] with
//!
//! ```text
//! rho(empty) <= 1        and        rho(x) >= sum_a rho(x a).
//! ```
//!
//! Equality in both places makes rho a measure: then rho(a | x) is a proper
//! next-symbol distribution wherever rho(x) > 0. Strict inequality leaves a
//! semimeasure, whose conditionals sum to less than one; the gap is mass the
//! model reserves for "the sequence ends" or simply loses. Semimeasures are
//! first-class citizens here because program-based priors are semimeasures
//! and refuse to be normalized in any computable way.
//!
//! [`semimeasure_audit`] verifies the displayed inequalities over a depth-
//! limited tree. [`sample_sequence`] draws from a model and fails loudly the
//! moment conditionals stop summing to one, so measure-ness is checked where
//! it is actually relied upon, not assumed from the type.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::logmass::LogMass;
use crate::seq::{Alphabet, Seq, Symbol};

/// A sequence semimeasure. Implementations must be deterministic pure
/// functions of the sequence: every caller assumes `mass` can be re-evaluated
/// freely and concurrently.
pub trait Semimeasure: Send + Sync {
    fn alphabet(&self) -> Alphabet;

    /// Mass of the finite prefix `x`.
    fn mass(&self, x: &Seq) -> LogMass;

    /// A fresh incremental evaluator positioned at the empty sequence.
    fn scanner(&self) -> Box<dyn PrefixScanner>;
}

/// Shared-ownership handle used wherever models are composed.
pub type DynModel = Arc<dyn Semimeasure>;

/// Incremental left-to-right evaluator of one model along one sequence.
///
/// `predictive` reports rho(a | current prefix) *before* the symbol is
/// consumed; `advance` consumes it. On a prefix of mass zero, `predictive`
/// returns zero mass for every symbol (there is nothing left to distribute)
/// unless the concrete model documents otherwise.
pub trait PrefixScanner: Send {
    /// Mass of the prefix consumed so far.
    fn mass(&self) -> LogMass;

    /// Conditional mass of `a` given the prefix consumed so far.
    fn predictive(&self, a: Symbol) -> LogMass;

    fn advance(&mut self, a: Symbol);

    fn clone_box(&self) -> Box<dyn PrefixScanner>;
}

impl Clone for Box<dyn PrefixScanner> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

/// rho(a | x) = rho(x a) / rho(x), evaluated from the mass function.
///
/// Errors with [`Error::ConditioningOnNull`] when rho(x) = 0: conditioning
/// on a null prefix has no meaning, and silently returning zero would let a
/// typo in a test sequence masquerade as a confident prediction.
pub fn predictive_from_mass(model: &dyn Semimeasure, x: &Seq, a: Symbol) -> Result<LogMass> {
    model.alphabet().check_symbol(a)?;
    let base = model.mass(x);
    if base.is_zero() {
        return Err(Error::ConditioningOnNull);
    }
    Ok(LogMass::ratio(model.mass(&x.appended(a)), base))
}

/// The full conditional vector [rho(0|x), ..., rho(d-1|x)] in linear form.
pub fn predictive_distribution(scanner: &dyn PrefixScanner, alphabet: Alphabet) -> Vec<f64> {
    alphabet
        .symbols()
        .map(|a| scanner.predictive(a).prob())
        .collect()
}

/// Result of a depth-limited super-additivity audit.
#[derive(Clone, Debug)]
pub struct AuditReport {
    pub depth: usize,
    pub nodes_checked: u64,
    pub empty_mass: LogMass,
    /// Largest relative amount by which sum_a rho(xa) exceeded rho(x);
    /// anything materially above zero breaks the semimeasure contract.
    pub worst_violation: f64,
    /// Largest relative amount by which rho(x) exceeded sum_a rho(xa); a
    /// measure keeps this at zero, a semimeasure may leak arbitrarily.
    pub worst_leak: f64,
}

impl AuditReport {
    /// No child-sum exceeded its parent beyond `tol`.
    #[must_use]
    pub fn is_semimeasure(&self, tol: f64) -> bool {
        self.worst_violation <= tol
    }

    /// Mass one at the root and child sums equal to parents throughout.
    #[must_use]
    pub fn is_measure(&self, tol: f64) -> bool {
        self.is_semimeasure(tol)
            && self.worst_leak <= tol
            && (self.empty_mass.prob() - 1.0).abs() <= tol
    }
}

/// Verifies rho(x) >= sum_a rho(xa) for every x shorter than `depth`,
/// evaluating the model's `mass` function directly at each node so the audit
/// exercises exactly the function other modules consume.
///
/// Violations and leaks are reported relative to max(parent, child sum), so
/// the numbers stay meaningful at depths where absolute masses are tiny.
/// Errors with [`Error::BudgetExceeded`] when the tree has more than
/// `node_cap` nodes.
pub fn semimeasure_audit(
    model: &dyn Semimeasure,
    depth: usize,
    node_cap: u64,
) -> Result<AuditReport> {
    let d = model.alphabet().size() as u64;
    let mut nodes: u64 = 0;
    let mut layer: u64 = 1;
    for _ in 0..depth {
        nodes = nodes.saturating_add(layer);
        layer = layer.saturating_mul(d);
    }
    if nodes.saturating_add(layer) > node_cap {
        return Err(Error::BudgetExceeded {
            task: "semimeasure audit",
            needed: nodes.saturating_add(layer),
            cap: node_cap,
        });
    }

    let mut report = AuditReport {
        depth,
        nodes_checked: 0,
        empty_mass: model.mass(&Seq::empty()),
        worst_violation: 0.0,
        worst_leak: 0.0,
    };
    let mut scratch = Seq::empty();
    audit_node(model, &mut scratch, depth, &mut report);
    Ok(report)
}

fn audit_node(model: &dyn Semimeasure, x: &mut Seq, depth: usize, report: &mut AuditReport) {
    if x.len() >= depth {
        return;
    }
    let parent = model.mass(x).prob();
    let mut child_sum = 0.0;
    for a in model.alphabet().symbols() {
        x.push(a);
        child_sum += model.mass(x).prob();
        x.pop();
    }
    report.nodes_checked += 1;
    let scale = parent.max(child_sum);
    if scale > 0.0 {
        let gap = (parent - child_sum) / scale;
        report.worst_violation = report.worst_violation.max(-gap);
        report.worst_leak = report.worst_leak.max(gap);
    }
    // A zero-mass node with positive children was already caught above
    // (scale = child_sum, gap = -1). Either way nothing below a null prefix
    // can add information.
    if parent == 0.0 {
        return;
    }
    for a in model.alphabet().symbols() {
        x.push(a);
        audit_node(model, x, depth, report);
        x.pop();
    }
}

/// Draws `n` symbols from a model that claims to be a measure.
///
/// Each step checks that the conditional masses sum to at least 1 - `tol`
/// before sampling and errors with [`Error::NotAMeasure`] otherwise, naming
/// the step at which the deficiency appeared. The draw is a deterministic
/// function of `seed`.
pub fn sample_sequence(model: &dyn Semimeasure, n: usize, seed: u64, tol: f64) -> Result<Seq> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    sample_with_rng(model, n, &mut rng, tol)
}

/// As [`sample_sequence`] but advancing a caller-owned generator, so one
/// stream can drive many draws.
pub fn sample_with_rng(
    model: &dyn Semimeasure,
    n: usize,
    rng: &mut impl Rng,
    tol: f64,
) -> Result<Seq> {
    let alphabet = model.alphabet();
    let mut scanner = model.scanner();
    let mut out = Seq::empty();
    for t in 0..n {
        let probs = predictive_distribution(scanner.as_ref(), alphabet);
        let sum: f64 = probs.iter().sum();
        if sum < 1.0 - tol {
            return Err(Error::NotAMeasure { sum, at: t });
        }
        let mut u = rng.random::<f64>() * sum;
        let mut drawn = alphabet.size() as Symbol - 1;
        for (a, p) in probs.iter().enumerate() {
            if u < *p {
                drawn = a as Symbol;
                break;
            }
            u -= *p;
        }
        scanner.advance(drawn);
        out.push(drawn);
    }
    Ok(out)
}

/// Environment that reproduces one fixed infinite sequence: a finite preamble
/// followed by a repeating cycle. Mass one on every prefix of that sequence,
/// zero elsewhere.
#[derive(Clone, Debug)]
pub struct DeterministicEnv {
    alphabet: Alphabet,
    preamble: Seq,
    cycle: Seq,
}

impl DeterministicEnv {
    pub fn new(alphabet: Alphabet, preamble: Seq, cycle: Seq) -> Result<Self> {
        preamble.check_alphabet(alphabet)?;
        cycle.check_alphabet(alphabet)?;
        if cycle.is_empty() {
            return Err(Error::Domain {
                what: "deterministic environment needs a nonempty cycle".into(),
            });
        }
        Ok(DeterministicEnv {
            alphabet,
            preamble,
            cycle,
        })
    }

    /// The constant sequence a^infinity.
    pub fn constant(alphabet: Alphabet, a: Symbol) -> Result<Self> {
        Self::new(alphabet, Seq::empty(), Seq::from_symbols(vec![a]))
    }

    /// Pure repetition of `cycle` from the start.
    pub fn periodic(alphabet: Alphabet, cycle: Seq) -> Result<Self> {
        Self::new(alphabet, Seq::empty(), cycle)
    }

    /// The symbol this environment emits at position `t` (0-based).
    #[must_use]
    pub fn symbol_at(&self, t: usize) -> Symbol {
        if t < self.preamble.len() {
            self.preamble.get(t).expect("t < preamble length")
        } else {
            let i = (t - self.preamble.len()) % self.cycle.len();
            self.cycle.get(i).expect("index reduced mod cycle length")
        }
    }

    /// The first `n` symbols of the generated sequence.
    #[must_use]
    pub fn prefix(&self, n: usize) -> Seq {
        Seq::from_symbols((0..n).map(|t| self.symbol_at(t)).collect())
    }
}

impl Semimeasure for DeterministicEnv {
    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn mass(&self, x: &Seq) -> LogMass {
        for (t, &a) in x.symbols().iter().enumerate() {
            if a != self.symbol_at(t) {
                return LogMass::ZERO;
            }
        }
        LogMass::ONE
    }

    fn scanner(&self) -> Box<dyn PrefixScanner> {
        Box::new(DetScanner {
            env: self.clone(),
            pos: 0,
            alive: true,
        })
    }
}

#[derive(Clone)]
struct DetScanner {
    env: DeterministicEnv,
    pos: usize,
    alive: bool,
}

impl PrefixScanner for DetScanner {
    fn mass(&self) -> LogMass {
        if self.alive {
            LogMass::ONE
        } else {
            LogMass::ZERO
        }
    }

    fn predictive(&self, a: Symbol) -> LogMass {
        if self.alive && a == self.env.symbol_at(self.pos) {
            LogMass::ONE
        } else {
            LogMass::ZERO
        }
    }

    fn advance(&mut self, a: Symbol) {
        if self.alive && a != self.env.symbol_at(self.pos) {
            self.alive = false;
        }
        self.pos += 1;
    }

    fn clone_box(&self) -> Box<dyn PrefixScanner> {
        Box::new(self.clone())
    }
}

/// Binary i.i.d. source emitting symbol 1 with probability theta. The
/// endpoints theta = 0 and theta = 1 are honest point masses on 0^infinity
/// and 1^infinity.
#[derive(Clone, Debug)]
pub struct BernoulliEnv {
    theta: f64,
    l1: LogMass,
    l0: LogMass,
}

impl BernoulliEnv {
    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::Domain {
                what: format!("Bernoulli parameter {theta} outside [0, 1]"),
            });
        }
        Ok(BernoulliEnv {
            theta,
            l1: LogMass::from_prob(theta),
            l0: LogMass::from_prob(1.0 - theta),
        })
    }

    #[must_use]
    pub fn theta(&self) -> f64 {
        self.theta
    }
}

impl Semimeasure for BernoulliEnv {
    fn alphabet(&self) -> Alphabet {
        Alphabet::binary()
    }

    fn mass(&self, x: &Seq) -> LogMass {
        x.symbols()
            .iter()
            .map(|&a| if a == 1 { self.l1 } else { self.l0 })
            .product()
    }

    fn scanner(&self) -> Box<dyn PrefixScanner> {
        Box::new(IidScanner {
            per_symbol: vec![self.l0, self.l1],
            mass: LogMass::ONE,
        })
    }
}

/// General-alphabet i.i.d. source with a fixed symbol distribution.
#[derive(Clone, Debug)]
pub struct CategoricalIid {
    alphabet: Alphabet,
    log_probs: Vec<LogMass>,
}

impl CategoricalIid {
    pub fn new(probs: &[f64]) -> Result<Self> {
        let alphabet = Alphabet::new(probs.len());
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Domain {
                what: format!("categorical probabilities sum to {sum}, need 1"),
            });
        }
        Ok(CategoricalIid {
            alphabet,
            log_probs: probs.iter().map(|&p| LogMass::from_prob(p)).collect(),
        })
    }
}

impl Semimeasure for CategoricalIid {
    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn mass(&self, x: &Seq) -> LogMass {
        x.symbols()
            .iter()
            .map(|&a| self.log_probs[a as usize])
            .product()
    }

    fn scanner(&self) -> Box<dyn PrefixScanner> {
        Box::new(IidScanner {
            per_symbol: self.log_probs.clone(),
            mass: LogMass::ONE,
        })
    }
}

/// Scanner for any i.i.d. source. `predictive` keeps answering with the
/// fixed symbol distribution even on a dead prefix: the conditional of an
/// i.i.d. law does not depend on history, and samplers for endpoint
/// parameters (theta = 0 or 1) never leave the live path anyway.
#[derive(Clone)]
struct IidScanner {
    per_symbol: Vec<LogMass>,
    mass: LogMass,
}

impl PrefixScanner for IidScanner {
    fn mass(&self) -> LogMass {
        self.mass
    }

    fn predictive(&self, a: Symbol) -> LogMass {
        self.per_symbol[a as usize]
    }

    fn advance(&mut self, a: Symbol) {
        self.mass = self.mass * self.per_symbol[a as usize];
    }

    fn clone_box(&self) -> Box<dyn PrefixScanner> {
        Box::new(self.clone())
    }
}

/// Fallback scanner for models whose mass has no cheap incremental form:
/// re-evaluates `mass` on the growing prefix.
pub struct MassScanner {
    model: DynModel,
    prefix: Seq,
}

impl MassScanner {
    #[must_use]
    pub fn new(model: DynModel) -> Self {
        MassScanner {
            model,
            prefix: Seq::empty(),
        }
    }
}

impl PrefixScanner for MassScanner {
    fn mass(&self) -> LogMass {
        self.model.mass(&self.prefix)
    }

    fn predictive(&self, a: Symbol) -> LogMass {
        let base = self.model.mass(&self.prefix);
        if base.is_zero() {
            return LogMass::ZERO;
        }
        LogMass::ratio(self.model.mass(&self.prefix.appended(a)), base)
    }

    fn advance(&mut self, a: Symbol) {
        self.prefix.push(a);
    }

    fn clone_box(&self) -> Box<dyn PrefixScanner> {
        Box::new(MassScanner {
            model: Arc::clone(&self.model),
            prefix: self.prefix.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn deterministic_env_masses() {
        let env = DeterministicEnv::periodic(Alphabet::binary(), Seq::parse("01").unwrap())
            .unwrap();
        assert_eq!(env.mass(&Seq::parse("0101").unwrap()), LogMass::ONE);
        assert!(env.mass(&Seq::parse("0100").unwrap()).is_zero());
        assert_eq!(env.prefix(5), Seq::parse("01010").unwrap());
    }

    #[test]
    fn deterministic_preamble_then_cycle() {
        let env = DeterministicEnv::new(
            Alphabet::binary(),
            Seq::parse("111").unwrap(),
            Seq::parse("0").unwrap(),
        )
        .unwrap();
        assert_eq!(env.prefix(6), Seq::parse("111000").unwrap());
    }

    #[test]
    fn bernoulli_mass_and_predictive() {
        let env = BernoulliEnv::new(0.25).unwrap();
        let x = Seq::parse("110").unwrap();
        assert_relative_eq!(
            env.mass(&x).prob(),
            0.25 * 0.25 * 0.75,
            max_relative = 1e-14
        );
        let p1 = predictive_from_mass(&env, &x, 1).unwrap();
        assert_relative_eq!(p1.prob(), 0.25, max_relative = 1e-12);
    }

    #[test]
    fn bernoulli_endpoint_is_point_mass() {
        let env = BernoulliEnv::new(1.0).unwrap();
        assert_eq!(env.mass(&Seq::repeat(1, 40)), LogMass::ONE);
        assert!(env.mass(&Seq::parse("10").unwrap()).is_zero());
    }

    #[test]
    fn conditioning_on_null_prefix_is_an_error() {
        let env = DeterministicEnv::constant(Alphabet::binary(), 1).unwrap();
        let err = predictive_from_mass(&env, &Seq::parse("0").unwrap(), 1).unwrap_err();
        assert!(matches!(err, Error::ConditioningOnNull));
    }

    #[test]
    fn scanners_track_mass_incrementally() {
        let env = BernoulliEnv::new(0.6).unwrap();
        let x = Seq::parse("1101").unwrap();
        let mut sc = env.scanner();
        for &a in x.symbols() {
            sc.advance(a);
        }
        assert_relative_eq!(sc.mass().ln(), env.mass(&x).ln(), max_relative = 1e-14);
    }

    #[test]
    fn audit_passes_for_measures() {
        let env = BernoulliEnv::new(0.3).unwrap();
        let report = semimeasure_audit(&env, 6, 1 << 20).unwrap();
        assert!(report.is_measure(1e-10), "{report:?}");
        assert_eq!(report.nodes_checked, 63);
    }

    #[test]
    fn audit_flags_broken_model() {
        /// Deliberately superadditive: every child repeats the parent mass.
        struct Broken;
        impl Semimeasure for Broken {
            fn alphabet(&self) -> Alphabet {
                Alphabet::binary()
            }
            fn mass(&self, _x: &Seq) -> LogMass {
                LogMass::ONE
            }
            fn scanner(&self) -> Box<dyn PrefixScanner> {
                MassScanner::new(Arc::new(Broken)).clone_box()
            }
        }
        let report = semimeasure_audit(&Broken, 3, 1 << 20).unwrap();
        assert!(!report.is_semimeasure(1e-10));
        assert_relative_eq!(report.worst_violation, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn audit_budget_is_enforced() {
        let env = BernoulliEnv::new(0.5).unwrap();
        let err = semimeasure_audit(&env, 30, 1 << 20).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }

    #[test]
    fn sampling_deterministic_env_reproduces_it() {
        let env = DeterministicEnv::periodic(Alphabet::binary(), Seq::parse("10").unwrap())
            .unwrap();
        let s = sample_sequence(&env, 8, 7, 1e-10).unwrap();
        assert_eq!(s, Seq::parse("10101010").unwrap());
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let env = BernoulliEnv::new(0.42).unwrap();
        let a = sample_sequence(&env, 64, 123, 1e-10).unwrap();
        let b = sample_sequence(&env, 64, 123, 1e-10).unwrap();
        let c = sample_sequence(&env, 64, 124, 1e-10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c, "distinct seeds should give distinct draws here");
    }

    #[test]
    fn sampling_a_semimeasure_fails() {
        /// Halves all mass at depth one: conditionals sum to 1/2.
        struct Leaky;
        impl Semimeasure for Leaky {
            fn alphabet(&self) -> Alphabet {
                Alphabet::binary()
            }
            fn mass(&self, x: &Seq) -> LogMass {
                if x.is_empty() {
                    LogMass::ONE
                } else {
                    LogMass::from_prob(0.25_f64.powi(x.len() as i32))
                }
            }
            fn scanner(&self) -> Box<dyn PrefixScanner> {
                MassScanner::new(Arc::new(Leaky)).clone_box()
            }
        }
        let err = sample_sequence(&Leaky, 4, 1, 1e-10).unwrap_err();
        assert!(matches!(err, Error::NotAMeasure { at: 0, .. }));
    }

    #[test]
    fn sample_frequencies_track_theta() {
        // Loose law-of-large-numbers check across seeds; 3 sigma of a
        // Binomial(200, 0.7) frequency is about 0.097.
        let env = BernoulliEnv::new(0.7).unwrap();
        let mut ok = 0;
        for seed in 0..100 {
            let s = sample_sequence(&env, 200, seed, 1e-10).unwrap();
            let ones = s.symbols().iter().filter(|&&a| a == 1).count() as f64;
            if (ones / 200.0 - 0.7).abs() < 0.1 {
                ok += 1;
            }
        }
        assert!(ok >= 99, "only {ok}/100 seeds within 3 sigma of theta");
    }
}

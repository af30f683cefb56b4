//! Weighted finite mixtures of sequence models and their posteriors.
//!
//! A class is a finite list of member models nu_i with prior weights w_i > 0,
//! sum_i w_i <= 1. Its mixture mass is
//!
//! ```text
//! xi(x) = sum_i w_i nu_i(x),
//! ```
//!
//! which dominates every member: xi(x) >= w_i nu_i(x), so no member's
//! sequences are ever ruled out a priori. Weights may deliberately sum below
//! one; the gap is the mass of whatever countable tail of models the finite
//! list truncates, and it is carried explicitly rather than renormalized
//! away, so reported bounds can be given in both conventions.
//!
//! The payoff for dominance is [`WeightedClass::det_convergence`]: when some
//! member reproduces the observed sequence exactly with weight w, the total
//! prediction error of the mixture on that sequence is at most ln(1/w),
//! summed over all time. That cumulative bound, not any per-step rate, is
//! what the reports verify.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::logmass::LogMass;
use crate::model::{DynModel, PrefixScanner, Semimeasure};
use crate::seq::{Alphabet, Seq, Symbol};

/// Weight-sum slack accepted at construction; covers float noise in weights
/// like twenty-one copies of 1/21.
const WEIGHT_SUM_SLACK: f64 = 1e-12;

/// One member of a class: a model, its prior weight, and a name used in
/// reports and result tables.
#[derive(Clone)]
pub struct ClassMember {
    pub name: String,
    pub model: DynModel,
    pub weight: f64,
}

impl ClassMember {
    pub fn new(name: impl Into<String>, model: DynModel, weight: f64) -> Self {
        ClassMember {
            name: name.into(),
            model,
            weight,
        }
    }
}

/// A finite weighted class of semimeasures over one alphabet.
#[derive(Clone)]
pub struct WeightedClass {
    members: Vec<ClassMember>,
    alphabet: Alphabet,
    weight_sum: f64,
}

impl WeightedClass {
    /// Validates weights (each positive, total at most one) and alphabet
    /// agreement across members.
    pub fn new(members: Vec<ClassMember>) -> Result<Self> {
        let first = members.first().ok_or(Error::Domain {
            what: "a class needs at least one member".into(),
        })?;
        let alphabet = first.model.alphabet();
        let mut weight_sum = 0.0;
        for m in &members {
            if !(m.weight > 0.0) {
                return Err(Error::Domain {
                    what: format!("member {:?} has non-positive weight {}", m.name, m.weight),
                });
            }
            if m.model.alphabet() != alphabet {
                return Err(Error::Domain {
                    what: format!("member {:?} disagrees on the alphabet", m.name),
                });
            }
            weight_sum += m.weight;
        }
        if weight_sum > 1.0 + WEIGHT_SUM_SLACK {
            return Err(Error::Domain {
                what: format!("weights sum to {weight_sum}, above one"),
            });
        }
        Ok(WeightedClass {
            members,
            alphabet,
            weight_sum: weight_sum.min(1.0),
        })
    }

    /// Convenience constructor giving every model weight 1/k.
    pub fn uniform(named: Vec<(String, DynModel)>) -> Result<Self> {
        let k = named.len().max(1);
        let w = 1.0 / k as f64;
        Self::new(
            named
                .into_iter()
                .map(|(name, model)| ClassMember::new(name, model, w))
                .collect(),
        )
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.members.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    #[must_use]
    pub fn members(&self) -> &[ClassMember] {
        &self.members
    }

    #[must_use]
    pub fn weight(&self, i: usize) -> f64 {
        self.members[i].weight
    }

    #[must_use]
    pub fn weight_sum(&self) -> f64 {
        self.weight_sum
    }

    /// Prior mass not covered by the listed members: the truncated tail of
    /// the class this finite list stands in for.
    #[must_use]
    pub fn tail_mass(&self) -> f64 {
        (1.0 - self.weight_sum).max(0.0)
    }

    /// xi(x) = sum_i w_i nu_i(x).
    #[must_use]
    pub fn mixture_mass(&self, x: &Seq) -> LogMass {
        LogMass::log_sum_all(
            self.members
                .iter()
                .map(|m| LogMass::from_prob(m.weight) * m.model.mass(x)),
        )
    }

    /// Posterior weights w_i(x) = w_i nu_i(x) / xi(x).
    ///
    /// Members that assign `x` mass zero get posterior exactly 0.0, not a
    /// denormal remnant: once the data contradict a model it is gone.
    /// Errors with [`Error::ConditioningOnNull`] if xi(x) = 0.
    pub fn posterior(&self, x: &Seq) -> Result<PosteriorState> {
        let evidence = self.mixture_mass(x);
        if evidence.is_zero() {
            return Err(Error::ConditioningOnNull);
        }
        let weights = self
            .members
            .iter()
            .map(|m| {
                let contrib = LogMass::from_prob(m.weight) * m.model.mass(x);
                if contrib.is_zero() {
                    0.0
                } else {
                    (contrib.ln() - evidence.ln()).exp()
                }
            })
            .collect();
        Ok(PosteriorState {
            conditioning: x.clone(),
            weights,
            evidence,
        })
    }

    /// Verifies xi(x) >= w_i nu_i(x) for one member on one sequence.
    pub fn dominance_check(&self, member: usize, x: &Seq) -> Result<DominanceReport> {
        if member >= self.members.len() {
            return Err(Error::Domain {
                what: format!("member index {member} out of range"),
            });
        }
        let m = &self.members[member];
        let lhs = self.mixture_mass(x);
        let rhs = LogMass::from_prob(m.weight) * m.model.mass(x);
        let log_slack = if rhs.is_zero() {
            f64::INFINITY
        } else {
            lhs.ln() - rhs.ln()
        };
        Ok(DominanceReport {
            member,
            sequence_len: x.len(),
            log_slack,
        })
    }

    /// Cumulative prediction-error report for a deterministically generated
    /// sequence.
    ///
    /// `alpha` is the observed prefix. Some member must reproduce it with
    /// mass one (a deterministic generator of alpha); otherwise the report
    /// has no weight to anchor its bound and [`Error::MissingTrueEnv`] is
    /// returned. When several members qualify, the largest weight gives the
    /// tightest bound and is used.
    ///
    /// Per-step errors are 1 - xi(alpha_t | alpha_<t). Their sum over t <= n
    /// is bounded by ln(1/w) with the weights as given (`bound_nominal`) and
    /// by ln(sum_j w_j / w) after conditioning on the listed members
    /// (`bound_renormalized`); both are valid, the second is tighter when
    /// the class carries tail mass.
    pub fn det_convergence(&self, alpha: &Seq) -> Result<DetConvergenceReport> {
        let true_weight = self
            .members
            .iter()
            .filter(|m| m.model.mass(alpha) == LogMass::ONE)
            .map(|m| m.weight)
            .fold(f64::NEG_INFINITY, f64::max);
        if !true_weight.is_finite() {
            return Err(Error::MissingTrueEnv);
        }

        let mut scanner = self.scanner();
        let mut per_step = Vec::with_capacity(alpha.len());
        let mut cumulative = Vec::with_capacity(alpha.len());
        let mut total = 0.0;
        for &a in alpha.symbols() {
            let p = scanner.predictive(a).prob();
            total += 1.0 - p;
            per_step.push(1.0 - p);
            cumulative.push(total);
            scanner.advance(a);
        }
        let bound_nominal = -true_weight.ln();
        let bound_renormalized = (self.weight_sum / true_weight).ln();
        Ok(DetConvergenceReport {
            per_step,
            cumulative,
            true_weight,
            bound_nominal,
            bound_renormalized,
        })
    }
}

impl Semimeasure for WeightedClass {
    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn mass(&self, x: &Seq) -> LogMass {
        self.mixture_mass(x)
    }

    fn scanner(&self) -> Box<dyn PrefixScanner> {
        Box::new(MixtureScanner {
            parts: self
                .members
                .iter()
                .map(|m| (LogMass::from_prob(m.weight), m.model.scanner()))
                .collect(),
        })
    }
}

/// Turns a class into a shared model handle for nesting inside other classes
/// or passing to bound checkers.
impl From<WeightedClass> for DynModel {
    fn from(c: WeightedClass) -> DynModel {
        Arc::new(c)
    }
}

struct MixtureScanner {
    parts: Vec<(LogMass, Box<dyn PrefixScanner>)>,
}

impl PrefixScanner for MixtureScanner {
    fn mass(&self) -> LogMass {
        LogMass::log_sum_all(self.parts.iter().map(|(w, sc)| *w * sc.mass()))
    }

    fn predictive(&self, a: Symbol) -> LogMass {
        let den = self.mass();
        if den.is_zero() {
            return LogMass::ZERO;
        }
        let num = LogMass::log_sum_all(
            self.parts
                .iter()
                .map(|(w, sc)| *w * sc.mass() * sc.predictive(a)),
        );
        LogMass::ratio(num, den)
    }

    fn advance(&mut self, a: Symbol) {
        for (_, sc) in &mut self.parts {
            sc.advance(a);
        }
    }

    fn clone_box(&self) -> Box<dyn PrefixScanner> {
        Box::new(MixtureScanner {
            parts: self
                .parts
                .iter()
                .map(|(w, sc)| (*w, sc.clone_box()))
                .collect(),
        })
    }
}

/// Posterior over class members after observing a sequence.
#[derive(Clone, Debug)]
pub struct PosteriorState {
    pub conditioning: Seq,
    /// Linear posterior weights, aligned with the member list.
    pub weights: Vec<f64>,
    /// xi(x), the evidence the weights were normalized by.
    pub evidence: LogMass,
}

impl PosteriorState {
    /// Whether the weights form a probability vector; they fall short when
    /// the class itself leaks mass (semimeasure members or a truncated
    /// tail), which is information, not an error.
    #[must_use]
    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.weights.iter().sum::<f64>() - 1.0).abs() <= tol
    }
}

/// Outcome of one dominance check xi(x) >= w nu(x).
#[derive(Clone, Copy, Debug)]
pub struct DominanceReport {
    pub member: usize,
    pub sequence_len: usize,
    /// ln xi(x) - ln(w nu(x)); nonnegative up to rounding iff dominance
    /// holds. Infinite when the member itself puts mass zero on x.
    pub log_slack: f64,
}

impl DominanceReport {
    #[must_use]
    pub fn holds(&self, tol: f64) -> bool {
        self.log_slack >= -tol
    }
}

/// Per-step and cumulative prediction errors of a mixture on a sequence one
/// of its members generates deterministically.
#[derive(Clone, Debug)]
pub struct DetConvergenceReport {
    /// 1 - xi(alpha_t | alpha_<t), t = 1..n.
    pub per_step: Vec<f64>,
    /// Running sums of `per_step`.
    pub cumulative: Vec<f64>,
    /// Weight of the generating member the bound is anchored to.
    pub true_weight: f64,
    /// ln(1 / w): bound with weights as constructed.
    pub bound_nominal: f64,
    /// ln(sum_j w_j / w): bound after conditioning out truncated tail mass.
    pub bound_renormalized: f64,
}

impl DetConvergenceReport {
    #[must_use]
    pub fn total_error(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// The cumulative bound, in its always-valid nominal form.
    #[must_use]
    pub fn holds(&self, tol: f64) -> bool {
        self.total_error() <= self.bound_nominal + tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{semimeasure_audit, BernoulliEnv, DeterministicEnv};
    use approx::assert_relative_eq;

    fn det(pattern: &str) -> DynModel {
        Arc::new(
            DeterministicEnv::periodic(Alphabet::binary(), Seq::parse(pattern).unwrap()).unwrap(),
        )
    }

    fn two_det_class() -> WeightedClass {
        WeightedClass::uniform(vec![("ones".into(), det("1")), ("zeros".into(), det("0"))])
            .unwrap()
    }

    #[test]
    fn equal_weight_disagreeing_members_split_mass() {
        let class = two_det_class();
        let m = class.mixture_mass(&Seq::parse("1").unwrap());
        assert_relative_eq!(m.prob(), 0.5, max_relative = 1e-14);
    }

    #[test]
    fn singleton_class_is_its_member() {
        let env = BernoulliEnv::new(0.3).unwrap();
        let class =
            WeightedClass::new(vec![ClassMember::new("b", Arc::new(env.clone()), 1.0)]).unwrap();
        let x = Seq::parse("0110").unwrap();
        assert_relative_eq!(
            class.mixture_mass(&x).ln(),
            env.mass(&x).ln(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn grid_mixture_matches_direct_summation() {
        // Independent route: plain linear-domain loop over the grid.
        let thetas: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let class = WeightedClass::uniform(
            thetas
                .iter()
                .map(|&t| {
                    (
                        format!("theta={t}"),
                        Arc::new(BernoulliEnv::new(t).unwrap()) as DynModel,
                    )
                })
                .collect(),
        )
        .unwrap();
        let x = Seq::repeat(1, 10);
        let direct: f64 = thetas.iter().map(|&t| t.powi(10) / 21.0).sum();
        assert_relative_eq!(class.mixture_mass(&x).prob(), direct, max_relative = 1e-12);
    }

    #[test]
    fn posterior_eliminates_contradicted_members() {
        let class = WeightedClass::uniform(vec![
            ("alt".into(), det("01")),
            ("zeros".into(), det("0")),
        ])
        .unwrap();
        let post = class.posterior(&Seq::parse("01").unwrap()).unwrap();
        assert_eq!(post.weights, vec![1.0, 0.0]);
        assert!(post.is_normalized(1e-12));
    }

    #[test]
    fn empty_sequence_posterior_is_the_prior() {
        let class = two_det_class();
        let post = class.posterior(&Seq::empty()).unwrap();
        assert_relative_eq!(post.weights[0], 0.5, max_relative = 1e-14);
        assert_relative_eq!(post.weights[1], 0.5, max_relative = 1e-14);
    }

    #[test]
    fn posterior_on_null_evidence_errors() {
        let class = WeightedClass::uniform(vec![("ones".into(), det("1"))]).unwrap();
        let err = class.posterior(&Seq::parse("0").unwrap()).unwrap_err();
        assert!(matches!(err, Error::ConditioningOnNull));
    }

    #[test]
    fn weight_validation_rejects_bad_classes() {
        assert!(WeightedClass::new(vec![]).is_err());
        assert!(
            WeightedClass::new(vec![ClassMember::new("a", det("1"), 0.0)]).is_err(),
            "zero weight must be rejected"
        );
        assert!(WeightedClass::new(vec![
            ClassMember::new("a", det("1"), 0.7),
            ClassMember::new("b", det("0"), 0.7),
        ])
        .is_err());
    }

    #[test]
    fn explicit_tail_mass_is_carried() {
        let class = WeightedClass::new(vec![
            ClassMember::new("a", det("1"), 0.25),
            ClassMember::new("b", det("0"), 0.25),
        ])
        .unwrap();
        assert_relative_eq!(class.tail_mass(), 0.5, max_relative = 1e-14);
    }

    #[test]
    fn dominance_holds_on_sampled_sequences() {
        let class = WeightedClass::uniform(vec![
            (
                "b7".into(),
                Arc::new(BernoulliEnv::new(0.7).unwrap()) as DynModel,
            ),
            (
                "b3".into(),
                Arc::new(BernoulliEnv::new(0.3).unwrap()) as DynModel,
            ),
        ])
        .unwrap();
        for seed in 0..20 {
            let x = crate::model::sample_sequence(
                class.members()[0].model.as_ref(),
                30,
                seed,
                1e-10,
            )
            .unwrap();
            for i in 0..2 {
                let rep = class.dominance_check(i, &x).unwrap();
                assert!(rep.holds(1e-12), "member {i} seed {seed}: {rep:?}");
            }
        }
    }

    #[test]
    fn det_convergence_two_member_class() {
        let class = two_det_class();
        let report = class.det_convergence(&Seq::repeat(1, 50)).unwrap();
        // First step predicts 1 with probability 1/2, afterwards with 1.
        assert_relative_eq!(report.per_step[0], 0.5, max_relative = 1e-12);
        assert!(report.per_step[1..].iter().all(|&e| e.abs() < 1e-12));
        assert_relative_eq!(report.total_error(), 0.5, max_relative = 1e-12);
        assert_relative_eq!(report.bound_nominal, (2.0f64).ln(), max_relative = 1e-12);
        assert!(report.holds(1e-10));
    }

    #[test]
    fn det_convergence_singleton_has_zero_error() {
        let class = WeightedClass::uniform(vec![("ones".into(), det("1"))]).unwrap();
        let report = class.det_convergence(&Seq::repeat(1, 20)).unwrap();
        assert!(report.total_error().abs() < 1e-12);
        assert!(report.bound_nominal.abs() < 1e-12);
    }

    #[test]
    fn det_convergence_without_generator_errors() {
        let class = two_det_class();
        let err = class.det_convergence(&Seq::parse("101").unwrap()).unwrap_err();
        assert!(matches!(err, Error::MissingTrueEnv));
    }

    #[test]
    fn det_convergence_shared_prefix_family() {
        // Three generators agree on 1^10 and then diverge; observing the
        // all-ones continuation costs 2/3 at the split and nothing else.
        let alphabet = Alphabet::binary();
        let ones = Seq::parse("1111111111").unwrap();
        let envs: Vec<DynModel> = vec![
            Arc::new(DeterministicEnv::constant(alphabet, 1).unwrap()),
            Arc::new(
                DeterministicEnv::new(alphabet, ones.clone(), Seq::parse("0").unwrap()).unwrap(),
            ),
            Arc::new(
                DeterministicEnv::new(alphabet, ones.clone(), Seq::parse("01").unwrap()).unwrap(),
            ),
        ];
        let class = WeightedClass::uniform(
            envs.into_iter()
                .enumerate()
                .map(|(i, m)| (format!("env{i}"), m))
                .collect(),
        )
        .unwrap();
        let report = class.det_convergence(&Seq::repeat(1, 14)).unwrap();
        assert_relative_eq!(report.per_step[10], 2.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(report.total_error(), 2.0 / 3.0, max_relative = 1e-12);
        assert!(report.holds(1e-10));
        assert_relative_eq!(report.bound_nominal, 3.0f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn mixture_of_measures_audits_as_measure() {
        let class = WeightedClass::uniform(vec![
            (
                "b6".into(),
                Arc::new(BernoulliEnv::new(0.6).unwrap()) as DynModel,
            ),
            ("alt".into(), det("01")),
        ])
        .unwrap();
        let report = semimeasure_audit(&class, 6, 1 << 20).unwrap();
        assert!(report.is_measure(1e-10), "{report:?}");
    }

    #[test]
    fn posterior_bayes_step_consistency() {
        let class = WeightedClass::uniform(vec![
            (
                "b2".into(),
                Arc::new(BernoulliEnv::new(0.2).unwrap()) as DynModel,
            ),
            (
                "b8".into(),
                Arc::new(BernoulliEnv::new(0.8).unwrap()) as DynModel,
            ),
        ])
        .unwrap();
        let x = Seq::parse("1101").unwrap();
        for a in 0..2u8 {
            let post_x = class.posterior(&x).unwrap();
            let xa = x.appended(a);
            let post_xa = class.posterior(&xa).unwrap();
            // One hand-rolled Bayes step from post_x.
            let preds: Vec<f64> = class
                .members()
                .iter()
                .map(|m| {
                    crate::model::predictive_from_mass(m.model.as_ref(), &x, a)
                        .unwrap()
                        .prob()
                })
                .collect();
            let norm: f64 = post_x
                .weights
                .iter()
                .zip(&preds)
                .map(|(w, p)| w * p)
                .sum();
            for i in 0..2 {
                let stepped = post_x.weights[i] * preds[i] / norm;
                assert_relative_eq!(stepped, post_xa.weights[i], max_relative = 1e-12);
            }
        }
    }
}

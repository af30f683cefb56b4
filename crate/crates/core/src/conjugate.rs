//! Closed-form Bayes predictors for i.i.d. symbol sources.
//!
//! Everything in this module is conjugate analysis: a prior over the unknown
//! symbol probabilities, a count vector as sufficient statistic, and
//! evidence/predictive/posterior in closed form. Three prior families cover
//! the experiments upstairs:
//!
//! * [`DirichletPrior`]: density proportional to prod_a theta_a^(alpha_a - 1).
//!   With alpha identically one this is the uniform prior, whose binary
//!   evidence is the classical n_1! n_0! / (n+1)! and whose predictive is the
//!   rule of succession (n_1 + 1) / (n + 2). The all-zero limit (Haldane) is
//!   kept symbolic: its predictive n_a / n exists only once data has arrived,
//!   and no epsilon stand-in is ever substituted.
//! * [`MixedDiracPrior`]: a uniform continuous component plus point masses.
//!   The standard instance, half uniform and half on theta = 1, is the
//!   textbook fix for confirming universal generalizations: it lets the
//!   posterior of "every future symbol is a one" climb to (n+1)/(n+2)
//!   instead of sticking at zero.
//! * [`GridUniversalPrior`]: finitely many parameter points weighted by
//!   2^(-K(theta)) for a complexity assessment K, either a built-in stub
//!   coder on rationals or externally supplied program-length estimates.
//!
//! Regrouping and reparametrization of priors are exposed as operations so
//! their consistency (and deliberate inconsistency, for non-Jeffreys priors)
//! can be demonstrated rather than asserted.

use std::sync::Arc;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::logmass::LogMass;
use crate::model::{DynModel, PrefixScanner, Semimeasure};
use crate::numerics::rising_ln;
use crate::seq::{Alphabet, Seq, Symbol};

/// Per-symbol observation counts; the sufficient statistic for every prior
/// in this module.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountVector {
    counts: Vec<u64>,
}

impl CountVector {
    #[must_use]
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 2, "count vector needs at least two symbols");
        CountVector {
            counts: vec![0; dim],
        }
    }

    #[must_use]
    pub fn new(counts: Vec<u64>) -> Self {
        assert!(counts.len() >= 2, "count vector needs at least two symbols");
        CountVector { counts }
    }

    /// Binary counts, ordered (zeros, ones).
    #[must_use]
    pub fn binary(zeros: u64, ones: u64) -> Self {
        CountVector {
            counts: vec![zeros, ones],
        }
    }

    pub fn from_seq(x: &Seq, alphabet: Alphabet) -> Result<Self> {
        Ok(CountVector {
            counts: x.counts(alphabet)?,
        })
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    #[must_use]
    pub fn count(&self, a: Symbol) -> u64 {
        self.counts[a as usize]
    }

    /// Total number of observations.
    #[must_use]
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    #[must_use]
    pub fn incremented(&self, a: Symbol) -> Self {
        let mut c = self.clone();
        c.counts[a as usize] += 1;
        c
    }

    /// Binary helper: count of symbol 1.
    #[must_use]
    pub fn ones(&self) -> u64 {
        assert_eq!(self.dim(), 2, "ones() is a binary-alphabet helper");
        self.counts[1]
    }

    /// Coarsen counts along a symbol grouping; `grouping[a]` is the coarse
    /// symbol for fine symbol `a`.
    pub fn regroup(&self, grouping: &[usize], coarse_dim: usize) -> Result<Self> {
        check_grouping(grouping, self.dim(), coarse_dim)?;
        let mut counts = vec![0u64; coarse_dim];
        for (a, &g) in grouping.iter().enumerate() {
            counts[g] += self.counts[a];
        }
        Ok(CountVector { counts })
    }
}

fn check_grouping(grouping: &[usize], fine_dim: usize, coarse_dim: usize) -> Result<()> {
    if grouping.len() != fine_dim {
        return Err(Error::Domain {
            what: format!(
                "grouping covers {} symbols, model has {fine_dim}",
                grouping.len()
            ),
        });
    }
    if coarse_dim < 2 || grouping.iter().any(|&g| g >= coarse_dim) {
        return Err(Error::Domain {
            what: format!("grouping targets must fill 0..{coarse_dim}"),
        });
    }
    for g in 0..coarse_dim {
        if !grouping.contains(&g) {
            return Err(Error::Domain {
                what: format!("coarse symbol {g} receives no fine symbols"),
            });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Dirichlet family
// ---------------------------------------------------------------------------

/// Dirichlet prior over a d-dimensional symbol distribution.
///
/// The all-zero concentration limit is a distinct variant, not a vector of
/// zeros: it has no density and no prior predictive, and code that needs
/// either must confront [`Error::HaldaneUndefined`] instead of silently
/// working with an epsilon.
#[derive(Clone, Debug, PartialEq)]
pub enum DirichletPrior {
    Proper { alphas: Vec<f64> },
    Haldane { dim: usize },
}

impl DirichletPrior {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.len() < 2 {
            return Err(Error::Domain {
                what: "Dirichlet prior needs at least two symbols".into(),
            });
        }
        if alphas.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return Err(Error::Domain {
                what: "concentrations must be positive and finite; use the Haldane \
                       constructor for the all-zero limit"
                    .into(),
            });
        }
        Ok(DirichletPrior::Proper { alphas })
    }

    /// alpha identically 1: the uniform prior over the simplex.
    #[must_use]
    pub fn uniform(dim: usize) -> Self {
        DirichletPrior::Proper {
            alphas: vec![1.0; dim],
        }
    }

    /// alpha identically 1/2.
    #[must_use]
    pub fn jeffreys(dim: usize) -> Self {
        DirichletPrior::Proper {
            alphas: vec![0.5; dim],
        }
    }

    pub fn symmetric(dim: usize, alpha: f64) -> Result<Self> {
        Self::new(vec![alpha; dim])
    }

    /// The improper alpha -> 0 limit, kept symbolic.
    #[must_use]
    pub fn haldane(dim: usize) -> Self {
        assert!(dim >= 2);
        DirichletPrior::Haldane { dim }
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        match self {
            DirichletPrior::Proper { alphas } => alphas.len(),
            DirichletPrior::Haldane { dim } => *dim,
        }
    }

    #[must_use]
    pub fn is_haldane(&self) -> bool {
        matches!(self, DirichletPrior::Haldane { .. })
    }

    /// Concentration of one symbol; `None` in the Haldane limit.
    #[must_use]
    pub fn alpha(&self, a: Symbol) -> Option<f64> {
        match self {
            DirichletPrior::Proper { alphas } => alphas.get(a as usize).copied(),
            DirichletPrior::Haldane { .. } => None,
        }
    }

    #[must_use]
    pub fn alpha_sum(&self) -> Option<f64> {
        match self {
            DirichletPrior::Proper { alphas } => Some(alphas.iter().sum()),
            DirichletPrior::Haldane { .. } => None,
        }
    }

    /// Coarsened prior: concentrations add within groups. The Haldane limit
    /// regroups to itself.
    pub fn regroup(&self, grouping: &[usize], coarse_dim: usize) -> Result<DirichletPrior> {
        check_grouping(grouping, self.dim(), coarse_dim)?;
        match self {
            DirichletPrior::Haldane { .. } => Ok(DirichletPrior::haldane(coarse_dim)),
            DirichletPrior::Proper { alphas } => {
                let mut coarse = vec![0.0; coarse_dim];
                for (a, &g) in grouping.iter().enumerate() {
                    coarse[g] += alphas[a];
                }
                DirichletPrior::new(coarse)
            }
        }
    }
}

/// Evidence of a count vector under a proper Dirichlet prior:
/// prod_a rising(alpha_a, n_a) / rising(sum alpha, n).
///
/// Errors with [`Error::HaldaneUndefined`] in the improper limit, whose
/// evidence normalization does not exist.
pub fn dirichlet_evidence(prior: &DirichletPrior, c: &CountVector) -> Result<LogMass> {
    check_dims(prior.dim(), c.dim())?;
    match prior {
        DirichletPrior::Haldane { .. } => Err(Error::HaldaneUndefined),
        DirichletPrior::Proper { alphas } => {
            let total: f64 = alphas.iter().sum();
            let mut ln = -rising_ln(total, c.total());
            for (a, &alpha) in alphas.iter().enumerate() {
                ln += rising_ln(alpha, c.count(a as Symbol));
            }
            Ok(LogMass::from_ln(ln))
        }
    }
}

/// Predictive probability of symbol `a`: (n_a + alpha_a) / (n + sum alpha).
/// In the Haldane limit this degenerates to the empirical frequency n_a / n,
/// undefined before the first observation.
pub fn dirichlet_predictive(prior: &DirichletPrior, c: &CountVector, a: Symbol) -> Result<f64> {
    check_dims(prior.dim(), c.dim())?;
    if a as usize >= c.dim() {
        return Err(Error::Domain {
            what: format!("symbol {a} outside dimension {}", c.dim()),
        });
    }
    match prior {
        DirichletPrior::Haldane { .. } => {
            let n = c.total();
            if n == 0 {
                Err(Error::HaldaneUndefined)
            } else {
                Ok(c.count(a) as f64 / n as f64)
            }
        }
        DirichletPrior::Proper { alphas } => {
            let total: f64 = alphas.iter().sum();
            Ok((c.count(a) as f64 + alphas[a as usize]) / (c.total() as f64 + total))
        }
    }
}

fn check_dims(prior_dim: usize, count_dim: usize) -> Result<()> {
    if prior_dim == count_dim {
        Ok(())
    } else {
        Err(Error::Domain {
            what: format!("prior dimension {prior_dim} != count dimension {count_dim}"),
        })
    }
}

// ---------------------------------------------------------------------------
// Uniform-prior (Laplace) closed forms, binary alphabet
// ---------------------------------------------------------------------------

/// Evidence n_1! n_0! / (n+1)! of binary counts under the uniform prior.
#[must_use]
pub fn laplace_evidence(c: &CountVector) -> LogMass {
    dirichlet_evidence(&DirichletPrior::uniform(2), c)
        .expect("uniform prior is proper and binary")
}

/// Rule of succession (n_a + 1) / (n + 2).
#[must_use]
pub fn laplace_predictive(c: &CountVector, a: Symbol) -> f64 {
    dirichlet_predictive(&DirichletPrior::uniform(2), c, a)
        .expect("uniform prior is proper and binary")
}

/// Posterior density of theta after binary counts under the uniform prior:
/// Beta(n_1 + 1, n_0 + 1).
#[must_use]
pub fn laplace_posterior_density(c: &CountVector, theta: f64) -> f64 {
    assert_eq!(c.dim(), 2);
    assert!((0.0..=1.0).contains(&theta));
    let (n0, n1) = (c.count(0), c.count(1));
    // ln 1/B(n1+1, n0+1) = ln(n+1) + ln C(n, n1)
    let ln_norm = ((n0 + n1 + 1) as f64).ln() + crate::numerics::ln_binomial(n0 + n1, n1);
    let ln_kernel = xlog(n1, theta) + xlog(n0, 1.0 - theta);
    if ln_kernel == f64::NEG_INFINITY {
        0.0
    } else {
        (ln_norm + ln_kernel).exp()
    }
}

/// k * ln(t) with the 0 * ln(0) = 0 convention.
fn xlog(k: u64, t: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * t.ln()
    }
}

/// Posterior probability, under the uniform prior and data 1^n, that theta
/// exceeds 1 - eps: the "all but epsilon" relaxation of a universal
/// hypothesis. Equals 1 - (1 - eps)^(n+1).
pub fn relaxed_run_posterior(n: u64, eps: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Domain {
            what: format!("eps {eps} outside [0, 1]"),
        });
    }
    Ok(1.0 - (1.0 - eps).powi(n as i32 + 1))
}

/// Prediction horizon for run-continuation probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Horizon {
    Steps(u64),
    Infinite,
}

/// Probability, under the uniform prior, that the next k symbols after 1^n
/// are all ones: (n+1) / (n+k+1). The infinite horizon is exactly zero for
/// every n: the uniform prior can confirm arbitrarily long runs but never
/// the universal statement itself.
#[must_use]
pub fn laplace_run_posterior(n: u64, horizon: Horizon) -> f64 {
    match horizon {
        Horizon::Steps(k) => (n as f64 + 1.0) / ((n + k) as f64 + 1.0),
        Horizon::Infinite => 0.0,
    }
}

// ---------------------------------------------------------------------------
// Uniform-plus-point-mass priors
// ---------------------------------------------------------------------------

/// Prior over theta made of a uniform continuous component and finitely many
/// point masses; total mass one.
#[derive(Clone, Debug)]
pub struct MixedDiracPrior {
    continuous_weight: f64,
    points: Vec<(f64, f64)>,
}

impl MixedDiracPrior {
    pub fn new(continuous_weight: f64, points: Vec<(f64, f64)>) -> Result<Self> {
        let mut total = continuous_weight;
        if !(0.0..=1.0).contains(&continuous_weight) {
            return Err(Error::Domain {
                what: format!("continuous weight {continuous_weight} outside [0, 1]"),
            });
        }
        for &(theta, p) in &points {
            if !(0.0..=1.0).contains(&theta) || !(p > 0.0) {
                return Err(Error::Domain {
                    what: format!("point mass ({theta}, {p}) invalid"),
                });
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain {
                what: format!("prior mass sums to {total}, need 1"),
            });
        }
        Ok(MixedDiracPrior {
            continuous_weight,
            points,
        })
    }

    /// Half uniform, half a point mass at theta = 1.
    #[must_use]
    pub fn standard() -> Self {
        MixedDiracPrior {
            continuous_weight: 0.5,
            points: vec![(1.0, 0.5)],
        }
    }

    #[must_use]
    pub fn continuous_weight(&self) -> f64 {
        self.continuous_weight
    }

    #[must_use]
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Evidence of binary counts: the continuous component contributes its
    /// uniform-prior evidence, each atom its exact likelihood. The atoms are
    /// handled analytically; no density smoothing is involved anywhere.
    #[must_use]
    pub fn evidence(&self, c: &CountVector) -> LogMass {
        assert_eq!(c.dim(), 2);
        let mut terms = Vec::with_capacity(1 + self.points.len());
        if self.continuous_weight > 0.0 {
            terms.push(LogMass::from_prob(self.continuous_weight) * laplace_evidence(c));
        }
        for &(theta, p) in &self.points {
            terms.push(LogMass::from_prob(p) * bernoulli_likelihood(theta, c));
        }
        LogMass::log_sum_all(terms)
    }

    /// Posterior mass of atom `j` given the counts.
    pub fn point_posterior(&self, c: &CountVector, j: usize) -> Result<f64> {
        let (theta, p) = *self.points.get(j).ok_or(Error::Domain {
            what: format!("no point mass with index {j}"),
        })?;
        let evidence = self.evidence(c);
        if evidence.is_zero() {
            return Err(Error::ConditioningOnNull);
        }
        let atom = LogMass::from_prob(p) * bernoulli_likelihood(theta, c);
        Ok((atom.ln() - evidence.ln()).exp())
    }
}

/// theta^(n_1) (1-theta)^(n_0).
#[must_use]
pub fn bernoulli_likelihood(theta: f64, c: &CountVector) -> LogMass {
    assert_eq!(c.dim(), 2);
    let ln = xlog(c.count(1), theta) + xlog(c.count(0), 1.0 - theta);
    if ln == f64::NEG_INFINITY {
        LogMass::ZERO
    } else {
        LogMass::from_ln(ln)
    }
}

/// Evidence of 1^n under the standard half-uniform half-atom prior:
/// (n+2) / (2 (n+1)).
#[must_use]
pub fn dirac_ones_evidence(n: u64) -> f64 {
    (n as f64 + 2.0) / (2.0 * (n as f64 + 1.0))
}

/// Probability that the k symbols after 1^n are all ones, under the standard
/// prior: ((n+k+2)(n+1}) / ((n+k+1)(n+2)); at infinite horizon (n+1)/(n+2).
#[must_use]
pub fn dirac_run_posterior(n: u64, horizon: Horizon) -> f64 {
    let n = n as f64;
    match horizon {
        Horizon::Steps(k) => {
            let m = n + k as f64;
            ((m + 2.0) * (n + 1.0)) / ((m + 1.0) * (n + 2.0))
        }
        Horizon::Infinite => (n + 1.0) / (n + 2.0),
    }
}

/// Posterior mass of the theta = 1 atom after 1^n under the standard prior:
/// (n+1) / (n+2). Identical to the infinite-horizon run probability, as the
/// atom is the only survivor of "ones forever".
#[must_use]
pub fn dirac_point_posterior(n: u64) -> f64 {
    (n as f64 + 1.0) / (n as f64 + 2.0)
}

/// Probability the next symbol after 1^n is a zero under the standard prior:
/// 1 / (n+2)^2. Vanishes quadratically, against the linear 1/(n+2) of the
/// pure uniform prior.
#[must_use]
pub fn dirac_next_zero(n: u64) -> f64 {
    let d = n as f64 + 2.0;
    1.0 / (d * d)
}

// ---------------------------------------------------------------------------
// Hypergeometric (finite population) posterior
// ---------------------------------------------------------------------------

/// Probability that every member of a finite population of size N shares a
/// property after n of them were sampled (without replacement) and all had
/// it, under a uniform prior on the number of carriers: (n+1) / (N+1).
pub fn finite_population_posterior(sample: u64, population: u64) -> Result<f64> {
    if sample > population {
        return Err(Error::InvalidPopulation {
            sample,
            population,
        });
    }
    Ok((sample as f64 + 1.0) / (population as f64 + 1.0))
}

// ---------------------------------------------------------------------------
// Prior densities and reparametrization
// ---------------------------------------------------------------------------

/// Density of P(symbol = a) under a proper binary Dirichlet prior: the Beta
/// marginal with that symbol's concentration first.
pub fn binary_prior_density(prior: &DirichletPrior, a: Symbol, theta: f64) -> Result<f64> {
    check_dims(prior.dim(), 2)?;
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::Domain {
            what: format!("theta {theta} outside [0, 1]"),
        });
    }
    match prior {
        DirichletPrior::Haldane { .. } => Err(Error::HaldaneUndefined),
        DirichletPrior::Proper { alphas } => {
            let (aa, ab) = (alphas[a as usize], alphas[1 - a as usize]);
            let ln_b = ln_gamma(aa) + ln_gamma(ab) - ln_gamma(aa + ab);
            let kernel = (aa - 1.0) * safe_ln(theta) + (ab - 1.0) * safe_ln(1.0 - theta);
            Ok(if kernel == f64::NEG_INFINITY {
                0.0
            } else {
                (kernel - ln_b).exp()
            })
        }
    }
}

fn safe_ln(t: f64) -> f64 {
    if t <= 0.0 {
        f64::NEG_INFINITY
    } else {
        t.ln()
    }
}

/// The Beta(1/2, 1/2) density (1/pi) [theta (1-theta)]^(-1/2); infinite at
/// the endpoints, which is the caller's lookout.
#[must_use]
pub fn jeffreys_density(theta: f64) -> f64 {
    std::f64::consts::FRAC_1_PI / (theta * (1.0 - theta)).sqrt()
}

/// A prior density transported along a parameter substitution
/// theta = map(theta'), carrying the Jacobian: w'(t') = w(map(t')) |map'(t')|.
///
/// The constructor probes the map on a grid over [0, 1] and rejects
/// non-monotone maps ([`Error::NonMonotone`]): a fold would alias two
/// parameter values onto one and the density transport formula would lie.
pub struct ReparamDensity<W, F, D>
where
    W: Fn(f64) -> f64,
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    base: W,
    map: F,
    deriv: D,
}

impl<W, F, D> ReparamDensity<W, F, D>
where
    W: Fn(f64) -> f64,
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    pub fn new(base: W, map: F, deriv: D, probe_points: usize) -> Result<Self> {
        let k = probe_points.max(3);
        let mut prev = map(0.0);
        let mut direction = 0.0;
        for i in 1..k {
            let t = i as f64 / (k - 1) as f64;
            let cur = map(t);
            let step = cur - prev;
            if step * direction < 0.0 {
                return Err(Error::NonMonotone);
            }
            if step != 0.0 {
                direction = step.signum();
            }
            prev = cur;
        }
        Ok(ReparamDensity { base, map, deriv })
    }

    #[must_use]
    pub fn eval(&self, theta_prime: f64) -> f64 {
        (self.base)((self.map)(theta_prime)) * (self.deriv)(theta_prime).abs()
    }
}

// ---------------------------------------------------------------------------
// Grid prior with complexity-based weights
// ---------------------------------------------------------------------------

/// One support point of a grid prior.
#[derive(Clone, Copy, Debug)]
pub struct GridPoint {
    pub theta: f64,
    /// Description-length assessment of theta in bits.
    pub k_hat: u32,
}

impl GridPoint {
    #[must_use]
    pub fn weight(&self) -> f64 {
        // Exact dyadic value for every representable exponent.
        if self.k_hat > 1074 {
            0.0
        } else {
            2f64.powi(-(self.k_hat as i32))
        }
    }
}

/// Finitely supported prior with weights 2^(-K(theta)).
///
/// The weights deliberately do not sum to one; the remainder is the mass of
/// every parameter value the grid leaves out, exactly as in any truncation
/// of a universal mixture.
#[derive(Clone, Debug)]
pub struct GridUniversalPrior {
    points: Vec<GridPoint>,
}

impl GridUniversalPrior {
    /// Builds from explicit complexity assessments (for instance program
    /// lengths found by machine enumeration).
    pub fn from_complexities(points: Vec<GridPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Domain {
                what: "grid prior needs at least one support point".into(),
            });
        }
        let mut weight_sum = 0.0;
        for (i, p) in points.iter().enumerate() {
            if !(0.0..=1.0).contains(&p.theta) {
                return Err(Error::Domain {
                    what: format!("grid theta {} outside [0, 1]", p.theta),
                });
            }
            if points[..i].iter().any(|q| q.theta == p.theta) {
                return Err(Error::Domain {
                    what: format!("duplicate grid theta {}", p.theta),
                });
            }
            if p.weight() <= 0.0 {
                return Err(Error::Domain {
                    what: format!("complexity {} bits underflows to weight zero", p.k_hat),
                });
            }
            weight_sum += p.weight();
        }
        if weight_sum > 1.0 {
            return Err(Error::Domain {
                what: format!("grid weights sum to {weight_sum}, above one"),
            });
        }
        Ok(GridUniversalPrior { points })
    }

    /// Builds with the stub coder: each theta is reduced to its smallest
    /// exactly-representing rational p/q (within 1e-12) and charged
    /// 2 bits(min(p, q-p) + 2) + 2 bits(q + 2) + 1 bits. The code is prefix
    /// free over distinct rationals, so any grid satisfies the weight-sum
    /// constraint by construction, and it is symmetric under theta -> 1 -
    /// theta, which symmetric-grid tests rely on.
    pub fn with_stub_coder(thetas: &[f64]) -> Result<Self> {
        let points = thetas
            .iter()
            .map(|&theta| {
                Ok(GridPoint {
                    theta,
                    k_hat: stub_complexity(theta)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_complexities(points)
    }

    #[must_use]
    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    #[must_use]
    pub fn weight_sum(&self) -> f64 {
        self.points.iter().map(GridPoint::weight).sum()
    }

    /// ln(1/w) for the grid point at exactly this theta, if present.
    #[must_use]
    pub fn ln_weight_inv(&self, theta: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|p| (p.theta - theta).abs() < 1e-12)
            .map(|p| p.k_hat as f64 * std::f64::consts::LN_2)
    }

    /// Mixture evidence sum_j w_j theta_j^(n_1) (1-theta_j)^(n_0).
    #[must_use]
    pub fn evidence(&self, c: &CountVector) -> LogMass {
        LogMass::log_sum_all(self.points.iter().map(|p| {
            LogMass::from_prob(p.weight()) * bernoulli_likelihood(p.theta, c)
        }))
    }

    /// Predictive probability of symbol `a` given the counts.
    pub fn predictive(&self, c: &CountVector, a: Symbol) -> Result<f64> {
        let den = self.evidence(c);
        if den.is_zero() {
            return Err(Error::ConditioningOnNull);
        }
        let num = self.evidence(&c.incremented(a));
        Ok(LogMass::ratio(num, den).prob())
    }

    /// Posterior weights over the grid points.
    pub fn posterior(&self, c: &CountVector) -> Result<Vec<f64>> {
        let den = self.evidence(c);
        if den.is_zero() {
            return Err(Error::ConditioningOnNull);
        }
        Ok(self
            .points
            .iter()
            .map(|p| {
                let contrib = LogMass::from_prob(p.weight()) * bernoulli_likelihood(p.theta, c);
                if contrib.is_zero() {
                    0.0
                } else {
                    (contrib.ln() - den.ln()).exp()
                }
            })
            .collect())
    }
}

/// Stub description length of a parameter value, in bits. See
/// [`GridUniversalPrior::with_stub_coder`].
pub fn stub_complexity(theta: f64) -> Result<u32> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::Domain {
            what: format!("theta {theta} outside [0, 1]"),
        });
    }
    let (p, q) = smallest_rational(theta);
    let m = p.min(q - p);
    Ok(2 * bit_length(m + 2) + 2 * bit_length(q + 2) + 1)
}

fn bit_length(v: u64) -> u32 {
    64 - v.leading_zeros()
}

/// Smallest-denominator fraction within 1e-12 of t, by walking the
/// Stern-Brocot tree.
fn smallest_rational(t: f64) -> (u64, u64) {
    const TOL: f64 = 1e-12;
    let (mut lo, mut hi) = ((0u64, 1u64), (1u64, 1u64));
    if (t - 0.0).abs() <= TOL {
        return (0, 1);
    }
    if (t - 1.0).abs() <= TOL {
        return (1, 1);
    }
    for _ in 0..64 {
        let mid = (lo.0 + hi.0, lo.1 + hi.1);
        let v = mid.0 as f64 / mid.1 as f64;
        if (v - t).abs() <= TOL {
            return mid;
        }
        if v < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Deep in the tree: accept the closest bound reached.
    let (lv, hv) = (lo.0 as f64 / lo.1 as f64, hi.0 as f64 / hi.1 as f64);
    if (lv - t).abs() <= (hv - t).abs() {
        lo
    } else {
        hi
    }
}

// ---------------------------------------------------------------------------
// Sequence-model wrappers
// ---------------------------------------------------------------------------

/// The evidence of a Dirichlet prior as a sequence measure: mass(x) is the
/// prior probability of observing x in i.i.d. draws with unknown symbol
/// distribution. Uniform binary concentration gives the classic rule-of-
/// succession predictor.
#[derive(Clone, Debug)]
pub struct DirichletEvidenceModel {
    prior: DirichletPrior,
    alphabet: Alphabet,
}

impl DirichletEvidenceModel {
    pub fn new(prior: DirichletPrior) -> Result<Self> {
        if prior.is_haldane() {
            return Err(Error::HaldaneUndefined);
        }
        let alphabet = Alphabet::new(prior.dim());
        Ok(DirichletEvidenceModel { prior, alphabet })
    }

    /// Binary uniform prior.
    #[must_use]
    pub fn laplace() -> Self {
        Self::new(DirichletPrior::uniform(2)).expect("uniform prior is proper")
    }

    #[must_use]
    pub fn prior(&self) -> &DirichletPrior {
        &self.prior
    }

    #[must_use]
    pub fn shared(self) -> DynModel {
        Arc::new(self)
    }
}

impl Semimeasure for DirichletEvidenceModel {
    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn mass(&self, x: &Seq) -> LogMass {
        let c = CountVector::from_seq(x, self.alphabet).expect("sequence checked on entry");
        dirichlet_evidence(&self.prior, &c).expect("proper prior")
    }

    fn scanner(&self) -> Box<dyn PrefixScanner> {
        Box::new(CountScanner {
            counts: CountVector::zeros(self.alphabet.size()),
            mass: LogMass::ONE,
            predictive: PredictiveRule::Dirichlet(self.prior.clone()),
        })
    }
}

/// The standard uniform-plus-atom prior as a sequence measure.
#[derive(Clone, Debug)]
pub struct MixedDiracModel {
    prior: MixedDiracPrior,
}

impl MixedDiracModel {
    #[must_use]
    pub fn new(prior: MixedDiracPrior) -> Self {
        MixedDiracModel { prior }
    }

    #[must_use]
    pub fn standard() -> Self {
        MixedDiracModel {
            prior: MixedDiracPrior::standard(),
        }
    }

    #[must_use]
    pub fn shared(self) -> DynModel {
        Arc::new(self)
    }
}

impl Semimeasure for MixedDiracModel {
    fn alphabet(&self) -> Alphabet {
        Alphabet::binary()
    }

    fn mass(&self, x: &Seq) -> LogMass {
        let c = CountVector::from_seq(x, Alphabet::binary()).expect("binary sequence");
        self.prior.evidence(&c)
    }

    fn scanner(&self) -> Box<dyn PrefixScanner> {
        Box::new(CountScanner {
            counts: CountVector::zeros(2),
            mass: LogMass::ONE,
            predictive: PredictiveRule::MixedDirac(self.prior.clone()),
        })
    }
}

/// A grid prior as a sequence semimeasure. Binary alphabet; mass leaks by
/// exactly the grid's missing weight already at the empty sequence.
#[derive(Clone, Debug)]
pub struct GridMixModel {
    prior: GridUniversalPrior,
}

impl GridMixModel {
    #[must_use]
    pub fn new(prior: GridUniversalPrior) -> Self {
        GridMixModel { prior }
    }

    #[must_use]
    pub fn prior(&self) -> &GridUniversalPrior {
        &self.prior
    }

    #[must_use]
    pub fn shared(self) -> DynModel {
        Arc::new(self)
    }
}

impl Semimeasure for GridMixModel {
    fn alphabet(&self) -> Alphabet {
        Alphabet::binary()
    }

    fn mass(&self, x: &Seq) -> LogMass {
        let c = CountVector::from_seq(x, Alphabet::binary()).expect("binary sequence");
        self.prior.evidence(&c)
    }

    fn scanner(&self) -> Box<dyn PrefixScanner> {
        Box::new(CountScanner {
            counts: CountVector::zeros(2),
            // The grid model is subnormalized already at the empty prefix.
            mass: self.prior.evidence(&CountVector::zeros(2)),
            predictive: PredictiveRule::Grid(self.prior.clone()),
        })
    }
}

/// Count-based scanner shared by the conjugate models: the predictive is a
/// function of counts alone, and the prefix mass accumulates step by step.
#[derive(Clone)]
struct CountScanner {
    counts: CountVector,
    mass: LogMass,
    predictive: PredictiveRule,
}

#[derive(Clone)]
enum PredictiveRule {
    Dirichlet(DirichletPrior),
    MixedDirac(MixedDiracPrior),
    Grid(GridUniversalPrior),
}

impl PredictiveRule {
    /// Conditional mass of `a` given counts; zero once the conditioning
    /// evidence has died (possible only for grid priors missing support).
    fn conditional(&self, counts: &CountVector, a: Symbol) -> LogMass {
        match self {
            PredictiveRule::Dirichlet(prior) => LogMass::from_prob(
                dirichlet_predictive(prior, counts, a).expect("proper prior, checked symbol"),
            ),
            PredictiveRule::MixedDirac(prior) => {
                let den = prior.evidence(counts);
                if den.is_zero() {
                    return LogMass::ZERO;
                }
                LogMass::ratio(prior.evidence(&counts.incremented(a)), den)
            }
            PredictiveRule::Grid(prior) => {
                let den = prior.evidence(counts);
                if den.is_zero() {
                    return LogMass::ZERO;
                }
                LogMass::ratio(prior.evidence(&counts.incremented(a)), den)
            }
        }
    }
}

impl PrefixScanner for CountScanner {
    fn mass(&self) -> LogMass {
        self.mass
    }

    fn predictive(&self, a: Symbol) -> LogMass {
        self.predictive.conditional(&self.counts, a)
    }

    fn advance(&mut self, a: Symbol) {
        let step = self.predictive.conditional(&self.counts, a);
        self.mass = self.mass * step;
        self.counts = self.counts.incremented(a);
    }

    fn clone_box(&self) -> Box<dyn PrefixScanner> {
        Box::new(self.clone())
    }
}

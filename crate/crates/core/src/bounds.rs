//! Divergences between a true environment and a predictor, and numeric
//! verification of the inequality chain tying them together.
//!
//! For a true measure mu and a predictor xi, the per-step squared Hellinger
//! distance h_t = sum_a (sqrt(mu(a|x)) - sqrt(xi(a|x)))^2 sits in a chain
//!
//! ```text
//! sum_t E[(sqrt(xi_t/mu_t) - 1)^2] <= sum_t E[h_t] <= D_n(mu||xi) <= ln(1/w)
//! ```
//!
//! where D_n = E[ln mu(x_1:n)/xi(x_1:n)], the final link holding whenever xi
//! dominates mu with coefficient w. A sharper tail statement bounds the
//! exponential moment: E[exp(half the summed h_t)] <= 1/sqrt(w). Everything
//! here evaluates those expectations, exactly by tree enumeration when the
//! sequence tree fits the budget, by seeded Monte Carlo otherwise, and
//! reports each link with enough error information to separate a numeric
//! artifact from a genuine violation.
//!
//! For i.i.d. predictors whose predictive depends on the past only through
//! symbol counts, expectations collapse from 2^n sequences to n+1 count
//! classes with no approximation; that collapse powers the divergence
//! profiles at horizons in the thousands, where the leading behavior
//! D_n ~ (d/2) ln n of a d-parameter continuous class becomes visible.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::conjugate::{
    binary_prior_density, dirichlet_evidence, CountVector, DirichletPrior, GridUniversalPrior,
    MixedDiracPrior,
};
use crate::error::{Error, Result};
use crate::logmass::LogMass;
use crate::model::{predictive_distribution, PrefixScanner, Semimeasure};
use crate::numerics::{linear_fit, ln_binomial, substream_seed, KahanSum};
use crate::seq::Seq;
use crate::MC_SIGMA;

/// Largest number of leaf sequences enumerated exactly; beyond this the
/// automatic plan switches to Monte Carlo.
pub const EXACT_ENUMERATION_CAP: u64 = 1 << 20;

// ---------------------------------------------------------------------------
// Evaluation plans
// ---------------------------------------------------------------------------

/// How an expectation over length-n sequences is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalPlan {
    /// Exact enumeration when the tree fits [`EXACT_ENUMERATION_CAP`],
    /// otherwise Monte Carlo with these parameters.
    Auto { trajectories: u64, seed: u64 },
    /// Exact enumeration or error.
    Exact,
    /// Forced Monte Carlo.
    MonteCarlo { trajectories: u64, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mode {
    Exact,
    Mc { trajectories: u64, seed: u64 },
}

impl EvalPlan {
    pub(crate) fn resolve(
        self,
        alphabet_size: usize,
        n: usize,
        task: &'static str,
    ) -> Result<Mode> {
        let leaves = (alphabet_size as u64).checked_pow(n as u32);
        let fits = leaves.is_some_and(|l| l <= EXACT_ENUMERATION_CAP);
        match self {
            EvalPlan::Exact => {
                if fits {
                    log::info!("{task}: exact enumeration of {} leaves", leaves.unwrap());
                    Ok(Mode::Exact)
                } else {
                    Err(Error::BudgetExceeded {
                        task: task.into(),
                        needed: leaves.unwrap_or(u64::MAX),
                        cap: EXACT_ENUMERATION_CAP,
                    })
                }
            }
            EvalPlan::MonteCarlo { trajectories, seed } => {
                log::info!("{task}: Monte Carlo, {trajectories} trajectories, seed {seed}");
                check_trajectories(trajectories)?;
                Ok(Mode::Mc { trajectories, seed })
            }
            EvalPlan::Auto { trajectories, seed } => {
                if fits {
                    log::info!(
                        "{task}: auto plan picked exact enumeration ({} leaves)",
                        leaves.unwrap()
                    );
                    Ok(Mode::Exact)
                } else {
                    log::info!(
                        "{task}: auto plan picked Monte Carlo ({trajectories} trajectories, \
                         seed {seed})"
                    );
                    check_trajectories(trajectories)?;
                    Ok(Mode::Mc { trajectories, seed })
                }
            }
        }
    }
}

fn check_trajectories(m: u64) -> Result<()> {
    if m < 2 {
        Err(Error::Domain {
            what: format!("{m} trajectories cannot estimate a standard error"),
        })
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Per-step distances
// ---------------------------------------------------------------------------

/// Squared Hellinger distance sum_a (sqrt(p_a) - sqrt(q_a))^2 between two
/// predictive vectors. Zero iff they coincide; at most 2, reached on
/// disjoint support.
#[must_use]
pub fn hellinger_step(mu_pred: &[f64], xi_pred: &[f64]) -> f64 {
    assert_eq!(mu_pred.len(), xi_pred.len());
    let mut acc = 0.0;
    for (&p, &q) in mu_pred.iter().zip(xi_pred) {
        debug_assert!((-1e-12..=1.0 + 1e-9).contains(&p));
        debug_assert!((-1e-12..=1.0 + 1e-9).contains(&q));
        let d = p.max(0.0).sqrt() - q.max(0.0).sqrt();
        acc += d * d;
    }
    acc
}

/// Per-step Hellinger values along one trajectory.
#[derive(Clone, Debug)]
pub struct HellingerSeries {
    per_step: Vec<f64>,
}

impl HellingerSeries {
    #[must_use]
    pub fn new(per_step: Vec<f64>) -> Self {
        for &h in &per_step {
            assert!(
                (0.0..=2.0 + 1e-9).contains(&h),
                "Hellinger step {h} outside [0, 2]"
            );
        }
        HellingerSeries { per_step }
    }

    #[must_use]
    pub fn per_step(&self) -> &[f64] {
        &self.per_step
    }

    /// Running sums; nondecreasing because every step is nonnegative.
    #[must_use]
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = KahanSum::default();
        self.per_step
            .iter()
            .map(|&h| {
                acc.add(h);
                acc.value()
            })
            .collect()
    }

    #[must_use]
    pub fn total(&self) -> f64 {
        let mut acc = KahanSum::default();
        for &h in &self.per_step {
            acc.add(h);
        }
        acc.value()
    }
}

/// The h_t values of mu against xi along a fixed sequence.
#[must_use]
pub fn hellinger_series_along(
    mu: &dyn Semimeasure,
    xi: &dyn Semimeasure,
    x: &Seq,
) -> HellingerSeries {
    let alphabet = mu.alphabet();
    let mut mu_sc = mu.scanner();
    let mut xi_sc = xi.scanner();
    let mut steps = Vec::with_capacity(x.len());
    for &a in x.symbols() {
        let mp = predictive_distribution(mu_sc.as_ref(), alphabet);
        let xp = predictive_distribution(xi_sc.as_ref(), alphabet);
        steps.push(hellinger_step(&mp, &xp));
        mu_sc.advance(a);
        xi_sc.advance(a);
    }
    HellingerSeries::new(steps)
}

// ---------------------------------------------------------------------------
// Joint expectation engine
// ---------------------------------------------------------------------------

/// Everything one pass over the sequence tree (or one batch of sampled
/// trajectories) yields about mu against xi at horizon n.
struct JointStats {
    /// sum_t E[(sqrt(xi_t/mu_t) - 1)^2], the on-sequence ratio form.
    ratio_sum: f64,
    /// sum_t E[h_t].
    hellinger_sum: f64,
    /// D_n = E[ln mu/xi].
    divergence: f64,
    /// E[exp(half sum_t h_t)].
    exp_tail: f64,
    /// Standard errors of, in order: the Hellinger-minus-ratio gap, the
    /// divergence-minus-Hellinger gap, the divergence, the tail moment.
    /// `None` for an exact pass.
    stderrs: Option<McErrors>,
}

struct McErrors {
    ratio_gap: f64,
    kl_gap: f64,
    divergence: f64,
    exp_tail: f64,
}

/// Exact traversal of every mu-reachable path to depth n, accumulating all
/// chain statistics in one walk.
fn exact_joint(mu: &dyn Semimeasure, xi: &dyn Semimeasure, n: usize) -> Result<JointStats> {
    let alphabet = mu.alphabet();
    struct Acc {
        ratio: KahanSum,
        hell: KahanSum,
        kl: KahanSum,
        tail: KahanSum,
        leaf_mass: KahanSum,
    }
    fn walk(
        mu_sc: &dyn PrefixScanner,
        xi_sc: &dyn PrefixScanner,
        depth_left: usize,
        weight: f64,
        ln_ratio: f64,
        half_h: f64,
        alphabet: crate::seq::Alphabet,
        acc: &mut Acc,
    ) {
        if depth_left == 0 {
            acc.kl.add(weight * ln_ratio);
            acc.tail.add(weight * half_h.exp());
            acc.leaf_mass.add(weight);
            return;
        }
        let mp = predictive_distribution(mu_sc, alphabet);
        let xp = predictive_distribution(xi_sc, alphabet);
        let h = hellinger_step(&mp, &xp);
        acc.hell.add(weight * h);
        for a in alphabet.symbols() {
            let p = mp[a as usize];
            if p <= 0.0 {
                continue;
            }
            let q = xp[a as usize];
            let r = (q / p).sqrt() - 1.0;
            acc.ratio.add(weight * p * r * r);
            let mut mu_next = mu_sc.clone_box();
            let mut xi_next = xi_sc.clone_box();
            mu_next.advance(a);
            xi_next.advance(a);
            walk(
                mu_next.as_ref(),
                xi_next.as_ref(),
                depth_left - 1,
                weight * p,
                ln_ratio + p.ln() - q.ln(),
                half_h + 0.5 * h,
                alphabet,
                acc,
            );
        }
    }

    let mut acc = Acc {
        ratio: KahanSum::default(),
        hell: KahanSum::default(),
        kl: KahanSum::default(),
        tail: KahanSum::default(),
        leaf_mass: KahanSum::default(),
    };
    walk(
        mu.scanner().as_ref(),
        xi.scanner().as_ref(),
        n,
        1.0,
        0.0,
        0.0,
        alphabet,
        &mut acc,
    );
    let mass = acc.leaf_mass.value();
    if (mass - 1.0).abs() > 1e-9 {
        return Err(Error::NotAMeasure { sum: mass, at: n });
    }
    Ok(JointStats {
        ratio_sum: acc.ratio.value(),
        hellinger_sum: acc.hell.value(),
        divergence: acc.kl.value(),
        exp_tail: acc.tail.value(),
        stderrs: None,
    })
}

/// One sampled trajectory's contributions: (sum ratio, sum h, ln mu/xi,
/// exp(half sum h)).
fn mc_trajectory(
    mu: &dyn Semimeasure,
    xi: &dyn Semimeasure,
    n: usize,
    rng: &mut impl Rng,
) -> Result<[f64; 4]> {
    let alphabet = mu.alphabet();
    let mut mu_sc = mu.scanner();
    let mut xi_sc = xi.scanner();
    let mut ratio = KahanSum::default();
    let mut hell = KahanSum::default();
    let mut lnr = KahanSum::default();
    for t in 0..n {
        let mp = predictive_distribution(mu_sc.as_ref(), alphabet);
        let sum: f64 = mp.iter().sum();
        if sum < 1.0 - 1e-9 {
            return Err(Error::NotAMeasure { sum, at: t });
        }
        let xp = predictive_distribution(xi_sc.as_ref(), alphabet);
        hell.add(hellinger_step(&mp, &xp));
        let mut u = rng.random::<f64>() * sum;
        let mut drawn = alphabet.size() - 1;
        for a in alphabet.symbols() {
            u -= mp[a as usize];
            if u <= 0.0 {
                drawn = a as usize;
                break;
            }
        }
        let p = mp[drawn];
        let q = xp[drawn];
        let r = (q / p).sqrt() - 1.0;
        ratio.add(r * r);
        lnr.add(p.ln() - q.ln());
        mu_sc.advance(drawn as u8);
        xi_sc.advance(drawn as u8);
    }
    Ok([
        ratio.value(),
        hell.value(),
        lnr.value(),
        (0.5 * hell.value()).exp(),
    ])
}

fn mc_joint(
    mu: &dyn Semimeasure,
    xi: &dyn Semimeasure,
    n: usize,
    trajectories: u64,
    seed: u64,
) -> Result<JointStats> {
    // Each trajectory owns a derived generator, so the estimate is a pure
    // function of (seed, trajectories) no matter how rayon schedules work.
    let rows: Vec<Result<[f64; 4]>> = (0..trajectories)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha12Rng::seed_from_u64(substream_seed(seed, i));
            mc_trajectory(mu, xi, n, &mut rng)
        })
        .collect();
    let mut samples = Vec::with_capacity(trajectories as usize);
    for row in rows {
        samples.push(row?);
    }
    let mean = column_means(&samples);
    // Gaps are estimated per trajectory so their standard errors respect the
    // correlation between chain members.
    let gap_rows: Vec<[f64; 2]> = samples
        .iter()
        .map(|s| [s[1] - s[0], s[2] - s[1]])
        .collect();
    let gap_mean = column_means(&gap_rows);
    Ok(JointStats {
        ratio_sum: mean[0],
        hellinger_sum: mean[1],
        divergence: mean[2],
        exp_tail: mean[3],
        stderrs: Some(McErrors {
            ratio_gap: column_stderr(&gap_rows, 0, gap_mean[0]),
            kl_gap: column_stderr(&gap_rows, 1, gap_mean[1]),
            divergence: column_stderr(&samples, 2, mean[2]),
            exp_tail: column_stderr(&samples, 3, mean[3]),
        }),
    })
}

pub(crate) fn column_means<const K: usize>(rows: &[[f64; K]]) -> [f64; K] {
    let mut acc = [KahanSum::default(); K];
    for row in rows {
        for (a, &v) in acc.iter_mut().zip(row) {
            a.add(v);
        }
    }
    let m = rows.len() as f64;
    acc.map(|a| a.value() / m)
}

pub(crate) fn column_stderr<const K: usize>(rows: &[[f64; K]], col: usize, mean: f64) -> f64 {
    let m = rows.len() as f64;
    let mut acc = KahanSum::default();
    for row in rows {
        let d = row[col] - mean;
        acc.add(d * d);
    }
    (acc.value() / (m * (m - 1.0))).sqrt()
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// One claimed inequality lhs <= rhs, with the standard error of the
/// estimated slack when it came from sampling.
#[derive(Clone, Copy, Debug)]
pub struct ChainLink {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub stderr: Option<f64>,
}

impl ChainLink {
    #[must_use]
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }

    /// An exact link must not dip below -tol; a sampled link gets
    /// [`MC_SIGMA`] standard errors of grace on top.
    #[must_use]
    pub fn holds(&self, tol: f64) -> bool {
        let grace = self.stderr.map_or(0.0, |se| MC_SIGMA * se);
        self.slack() >= -(tol + grace)
    }
}

/// The full chain at one horizon.
#[derive(Clone, Debug)]
pub struct ChainReport {
    pub horizon: usize,
    pub exact: bool,
    pub trajectories: Option<u64>,
    /// sum_t E[(sqrt(xi_t/mu_t) - 1)^2].
    pub ratio_sum: f64,
    /// sum_t E[h_t].
    pub hellinger_sum: f64,
    /// D_n(mu||xi).
    pub divergence: f64,
    /// ln(1/w) when a dominance coefficient was supplied.
    pub bound: Option<f64>,
    pub stderr_ratio_gap: Option<f64>,
    pub stderr_kl_gap: Option<f64>,
    pub stderr_divergence: Option<f64>,
}

impl ChainReport {
    /// The chain as individual links, in order.
    #[must_use]
    pub fn links(&self) -> Vec<ChainLink> {
        let mut links = vec![
            ChainLink {
                name: "ratio_le_hellinger",
                lhs: self.ratio_sum,
                rhs: self.hellinger_sum,
                stderr: self.stderr_ratio_gap,
            },
            ChainLink {
                name: "hellinger_le_divergence",
                lhs: self.hellinger_sum,
                rhs: self.divergence,
                stderr: self.stderr_kl_gap,
            },
        ];
        if let Some(bound) = self.bound {
            links.push(ChainLink {
                name: "divergence_le_ln_weight_inv",
                lhs: self.divergence,
                rhs: bound,
                stderr: self.stderr_divergence,
            });
        }
        links
    }

    /// Every link holds within tolerance (plus sampling grace).
    #[must_use]
    pub fn holds(&self, tol: f64) -> bool {
        self.links().iter().all(|l| l.holds(tol))
    }
}

/// KL divergence at one horizon, with the dominance bound when available.
#[derive(Clone, Copy, Debug)]
pub struct DivergenceReport {
    pub horizon: usize,
    pub divergence: f64,
    pub bound: Option<f64>,
    pub stderr: Option<f64>,
    pub exact: bool,
}

impl DivergenceReport {
    /// bound - divergence, negative on violation.
    #[must_use]
    pub fn slack(&self) -> Option<f64> {
        self.bound.map(|b| b - self.divergence)
    }

    #[must_use]
    pub fn holds(&self, tol: f64) -> bool {
        match self.slack() {
            None => true,
            Some(s) => s >= -(tol + self.stderr.map_or(0.0, |se| MC_SIGMA * se)),
        }
    }
}

/// The exponential-moment tail statistic against its 1/sqrt(w) ceiling.
#[derive(Clone, Copy, Debug)]
pub struct TailReport {
    pub horizon: usize,
    /// Estimate of E[exp(half sum_t h_t)].
    pub estimate: f64,
    /// exp(half ln(1/w)).
    pub bound: f64,
    pub stderr: Option<f64>,
    pub exact: bool,
}

impl TailReport {
    #[must_use]
    pub fn holds(&self, tol: f64) -> bool {
        self.estimate <= self.bound + tol + self.stderr.map_or(0.0, |se| MC_SIGMA * se)
    }
}

/// D_n(mu||xi) by exact enumeration of the full sequence tree.
///
/// `ln_weight_inv` is ln(1/w) for a mixture xi known to contain mu with
/// weight w; it travels into the report so the dominance link can be
/// checked by the caller.
pub fn kl_divergence_exact(
    mu: &dyn Semimeasure,
    xi: &dyn Semimeasure,
    n: usize,
    ln_weight_inv: Option<f64>,
) -> Result<DivergenceReport> {
    EvalPlan::Exact.resolve(mu.alphabet().size(), n, "kl_divergence_exact")?;
    let stats = exact_joint(mu, xi, n)?;
    Ok(DivergenceReport {
        horizon: n,
        divergence: stats.divergence,
        bound: ln_weight_inv,
        stderr: None,
        exact: true,
    })
}

/// The whole inequality chain at horizon n under the given plan.
pub fn total_hellinger_check(
    mu: &dyn Semimeasure,
    xi: &dyn Semimeasure,
    n: usize,
    ln_weight_inv: Option<f64>,
    plan: EvalPlan,
) -> Result<ChainReport> {
    let mode = plan.resolve(mu.alphabet().size(), n, "total_hellinger_check")?;
    let stats = match mode {
        Mode::Exact => exact_joint(mu, xi, n)?,
        Mode::Mc { trajectories, seed } => mc_joint(mu, xi, n, trajectories, seed)?,
    };
    let (exact, trajectories) = match mode {
        Mode::Exact => (true, None),
        Mode::Mc { trajectories, .. } => (false, Some(trajectories)),
    };
    Ok(ChainReport {
        horizon: n,
        exact,
        trajectories,
        ratio_sum: stats.ratio_sum,
        hellinger_sum: stats.hellinger_sum,
        divergence: stats.divergence,
        bound: ln_weight_inv,
        stderr_ratio_gap: stats.stderrs.as_ref().map(|e| e.ratio_gap),
        stderr_kl_gap: stats.stderrs.as_ref().map(|e| e.kl_gap),
        stderr_divergence: stats.stderrs.as_ref().map(|e| e.divergence),
    })
}

/// E[exp(half sum_t h_t)] against 1/sqrt(w).
pub fn exp_tail_check(
    mu: &dyn Semimeasure,
    xi: &dyn Semimeasure,
    n: usize,
    ln_weight_inv: f64,
    plan: EvalPlan,
) -> Result<TailReport> {
    let mode = plan.resolve(mu.alphabet().size(), n, "exp_tail_check")?;
    let stats = match mode {
        Mode::Exact => exact_joint(mu, xi, n)?,
        Mode::Mc { trajectories, seed } => mc_joint(mu, xi, n, trajectories, seed)?,
    };
    Ok(TailReport {
        horizon: n,
        estimate: stats.exp_tail,
        bound: (0.5 * ln_weight_inv).exp(),
        stderr: stats.stderrs.as_ref().map(|e| e.exp_tail),
        exact: matches!(mode, Mode::Exact),
    })
}

// ---------------------------------------------------------------------------
// Count-collapsed exact expectations for binary exchangeable predictors
// ---------------------------------------------------------------------------

/// A binary sequence model whose mass depends on the sequence only through
/// its counts. For such models every expectation under an i.i.d. source
/// collapses from 2^n sequences to n+1 count classes, exactly.
pub trait BinaryExchangeable: Sync {
    fn evidence(&self, c: &CountVector) -> LogMass;

    /// Conditional probability of symbol `a` given counts, as an evidence
    /// ratio; zero when the conditioning class itself has no mass.
    fn conditional(&self, c: &CountVector, a: u8) -> f64 {
        let den = self.evidence(c);
        if den.is_zero() {
            return 0.0;
        }
        LogMass::ratio(self.evidence(&c.incremented(a)), den).prob()
    }
}

/// A proper binary Dirichlet prior's evidence.
pub struct DirichletExchangeable(pub DirichletPrior);

impl BinaryExchangeable for DirichletExchangeable {
    fn evidence(&self, c: &CountVector) -> LogMass {
        dirichlet_evidence(&self.0, c).expect("proper binary prior")
    }
}

impl BinaryExchangeable for MixedDiracPrior {
    fn evidence(&self, c: &CountVector) -> LogMass {
        MixedDiracPrior::evidence(self, c)
    }
}

impl BinaryExchangeable for GridUniversalPrior {
    fn evidence(&self, c: &CountVector) -> LogMass {
        GridUniversalPrior::evidence(self, c)
    }
}

/// A fixed Bernoulli source as its own (degenerate, point-prior) predictor.
pub struct BernoulliExchangeable(pub f64);

impl BinaryExchangeable for BernoulliExchangeable {
    fn evidence(&self, c: &CountVector) -> LogMass {
        crate::conjugate::bernoulli_likelihood(self.0, c)
    }
}

/// ln of the binomial weight C(n, k) theta^k (1-theta)^(n-k).
fn ln_binomial_weight(n: u64, k: u64, theta: f64) -> f64 {
    let mut ln = ln_binomial(n, k);
    if k > 0 {
        ln += k as f64 * theta.ln();
    }
    if k < n {
        ln += (n - k) as f64 * (1.0 - theta).ln();
    }
    ln
}

/// Exact D_n(Bernoulli(theta0) || xi) through the count collapse: all
/// C(n, k) sequences in a count class share both masses, so the 2^n-leaf
/// expectation is an (n+1)-term sum.
#[must_use]
pub fn dn_bernoulli_exact(theta0: f64, xi: &impl BinaryExchangeable, n: u64) -> f64 {
    assert!((0.0..=1.0).contains(&theta0));
    let mut acc = KahanSum::default();
    for k in 0..=n {
        if (theta0 == 0.0 && k > 0) || (theta0 == 1.0 && k < n) {
            continue;
        }
        let ln_w = ln_binomial_weight(n, k, theta0);
        let c = CountVector::binary(n - k, k);
        let ln_mu = ln_w - ln_binomial(n, k);
        let ln_xi = xi.evidence(&c).ln();
        acc.add(ln_w.exp() * (ln_mu - ln_xi));
    }
    acc.value()
}

/// Exact E[h_t] for an i.i.d. Bernoulli(theta0) source against a
/// count-exchangeable predictor, t counted from 1: the prefix has length
/// t - 1 and its counts are binomial.
#[must_use]
pub fn expected_instant_hellinger(theta0: f64, xi: &impl BinaryExchangeable, t: u64) -> f64 {
    assert!(t >= 1);
    let m = t - 1;
    let mu_pred = [1.0 - theta0, theta0];
    let mut acc = KahanSum::default();
    for k in 0..=m {
        if (theta0 == 0.0 && k > 0) || (theta0 == 1.0 && k < m) {
            continue;
        }
        let c = CountVector::binary(m - k, k);
        let xi_pred = [xi.conditional(&c, 0), xi.conditional(&c, 1)];
        acc.add(ln_binomial_weight(m, k, theta0).exp() * hellinger_step(&mu_pred, &xi_pred));
    }
    acc.value()
}

// ---------------------------------------------------------------------------
// Continuous-class divergence profile
// ---------------------------------------------------------------------------

/// One horizon of a divergence profile.
#[derive(Clone, Copy, Debug)]
pub struct DnRow {
    pub n: u64,
    /// Exact D_n.
    pub dn: f64,
    /// The ceiling ln(1/w(theta0)) + (1/2) ln(n/(2 pi))
    /// + (1/2) ln j(theta0), an upper bound on D_n up to o(1).
    pub asymptote: f64,
    /// dn - asymptote. Settles near -d/2: the exact expected redundancy
    /// carries a 2 pi e constant where the ceiling carries 2 pi, leaving
    /// (d/2) ln e of permanent slack.
    pub residual: f64,
}

/// Exact divergence profile of a Bernoulli(theta0) source against the
/// evidence of a continuous prior, with the fitted growth rate.
#[derive(Clone, Debug)]
pub struct DnProfile {
    pub theta0: f64,
    pub rows: Vec<DnRow>,
    /// Slope of D_n against ln n; a d-parameter family should show d/2.
    pub slope: f64,
    pub intercept: f64,
}

/// Computes D_n exactly (via the count collapse) on the given horizons and
/// fits D_n ~ intercept + slope ln n.
///
/// The prior must be proper with positive density at theta0, or the
/// asymptote column would be meaningless.
pub fn continuous_dn_profile(
    theta0: f64,
    prior: &DirichletPrior,
    ns: &[u64],
) -> Result<DnProfile> {
    if !(theta0 > 0.0 && theta0 < 1.0) {
        return Err(Error::Domain {
            what: format!("theta0 {theta0} not in the open interval"),
        });
    }
    if ns.len() < 2 {
        return Err(Error::Domain {
            what: "divergence profile needs at least two horizons".into(),
        });
    }
    let density = binary_prior_density(prior, 1, theta0)?;
    if density <= 0.0 {
        return Err(Error::Domain {
            what: format!("prior density is zero at {theta0}"),
        });
    }
    let fisher = bernoulli_fisher(theta0)?;
    let xi = DirichletExchangeable(prior.clone());
    let rows: Vec<DnRow> = ns
        .iter()
        .map(|&n| {
            let dn = dn_bernoulli_exact(theta0, &xi, n);
            let asymptote = -density.ln()
                + 0.5 * ((n as f64) / (2.0 * std::f64::consts::PI)).ln()
                + 0.5 * fisher.value.ln();
            DnRow {
                n,
                dn,
                asymptote,
                residual: dn - asymptote,
            }
        })
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.dn).collect();
    let (intercept, slope) = linear_fit(&xs, &ys);
    Ok(DnProfile {
        theta0,
        rows,
        slope,
        intercept,
    })
}

// ---------------------------------------------------------------------------
// Fisher information
// ---------------------------------------------------------------------------

/// Average Fisher information of the Bernoulli family at one parameter
/// point.
#[derive(Clone, Copy, Debug)]
pub struct FisherInfo {
    pub theta: f64,
    pub value: f64,
}

/// 1/theta + 1/(1-theta) = 1/(theta (1-theta)); per-observation information
/// of the Bernoulli family, constant in n.
pub fn bernoulli_fisher(theta: f64) -> Result<FisherInfo> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Domain {
            what: format!("Fisher information undefined at theta {theta}"),
        });
    }
    Ok(FisherInfo {
        theta,
        value: 1.0 / (theta * (1.0 - theta)),
    })
}

// ---------------------------------------------------------------------------
// Instantaneous bound check
// ---------------------------------------------------------------------------

/// Scaled instantaneous Hellinger profile n E[h_n] with the fitted constant
/// against a discrete prior weight, when one applies.
#[derive(Clone, Debug)]
pub struct InstantaneousReport {
    pub theta0: f64,
    /// (n, n * E[h_n]) rows, exact.
    pub rows: Vec<(u64, f64)>,
    /// Largest scaled value over the tested range.
    pub sup: f64,
    /// ln(1/w(theta0)) for a discrete prior holding theta0 with positive
    /// weight; `None` for continuous priors, whose density carries no
    /// single-point mass to normalize by.
    pub ln_weight_inv: Option<f64>,
    /// sup / ln(1/w), the fitted multiplicative constant of the
    /// instantaneous bound; requires a strictly positive ln(1/w).
    pub fitted_c: Option<f64>,
}

/// Exact table of n E[h_n] over the horizons, via the count collapse.
pub fn iid_instantaneous_check(
    theta0: f64,
    xi: &impl BinaryExchangeable,
    ns: &[u64],
    ln_weight_inv: Option<f64>,
) -> Result<InstantaneousReport> {
    if ns.is_empty() || ns.contains(&0) {
        return Err(Error::Domain {
            what: "instantaneous check needs horizons >= 1".into(),
        });
    }
    let rows: Vec<(u64, f64)> = ns
        .iter()
        .map(|&n| (n, n as f64 * expected_instant_hellinger(theta0, xi, n)))
        .collect();
    let sup = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let fitted_c = match ln_weight_inv {
        Some(lw) if lw > 0.0 => Some(sup / lw),
        _ => None,
    };
    Ok(InstantaneousReport {
        theta0,
        rows,
        sup,
        ln_weight_inv,
        fitted_c,
    })
}

// ---------------------------------------------------------------------------
// Monte Carlo expectation engine
// ---------------------------------------------------------------------------

/// A seeded Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trajectories: u64,
}

impl McEstimate {
    /// |mean - reference| within [`MC_SIGMA`] standard errors.
    #[must_use]
    pub fn consistent_with(&self, reference: f64) -> bool {
        (self.mean - reference).abs() <= MC_SIGMA * self.stderr
    }
}

/// Mean and standard error of `statistic` over i.i.d. length-`horizon`
/// trajectories of `env`. Trajectory i draws from its own generator seeded
/// by a pure function of (seed, i), and the reduction runs in index order,
/// so a fixed seed gives a bit-identical estimate at any worker count.
pub fn mc_expectation<F>(
    env: &dyn Semimeasure,
    statistic: F,
    trajectories: u64,
    horizon: usize,
    seed: u64,
) -> Result<McEstimate>
where
    F: Fn(&Seq) -> f64 + Sync,
{
    check_trajectories(trajectories)?;
    let rows: Vec<Result<f64>> = (0..trajectories)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha12Rng::seed_from_u64(substream_seed(seed, i));
            let x = crate::model::sample_with_rng(env, horizon, &mut rng, 1e-9)?;
            Ok(statistic(&x))
        })
        .collect();
    let mut samples = Vec::with_capacity(trajectories as usize);
    for row in rows {
        samples.push([row?]);
    }
    let mean = column_means(&samples)[0];
    Ok(McEstimate {
        mean,
        stderr: column_stderr(&samples, 0, mean),
        trajectories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conjugate::{DirichletEvidenceModel, MixedDiracModel};
    use crate::mixture::{ClassMember, WeightedClass};
    use crate::model::{BernoulliEnv, DeterministicEnv, DynModel};
    use crate::seq::Alphabet;
    use crate::CHAIN_SLACK_TOLERANCE;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn bernoulli(theta: f64) -> DynModel {
        Arc::new(BernoulliEnv::new(theta).unwrap())
    }

    fn two_member_mixture(w0: f64, t0: f64, t1: f64) -> DynModel {
        Arc::new(
            WeightedClass::new(vec![
                ClassMember::new("first", bernoulli(t0), w0),
                ClassMember::new("second", bernoulli(t1), 1.0 - w0),
            ])
            .unwrap(),
        )
    }

    #[test]
    fn hellinger_step_identities() {
        assert_abs_diff_eq!(hellinger_step(&[0.3, 0.7], &[0.3, 0.7]), 0.0);
        assert_abs_diff_eq!(hellinger_step(&[1.0, 0.0], &[0.0, 1.0]), 2.0);
        // Symbolic expansion of the point-mass-vs-(p, 1-p) case.
        let p = 0.81f64;
        assert_relative_eq!(
            hellinger_step(&[1.0, 0.0], &[p, 1.0 - p]),
            (1.0 - p.sqrt()).powi(2) + (1.0 - p),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            hellinger_step(&[1.0, 0.0], &[0.81, 0.19]),
            0.2,
            max_relative = 1e-12
        );
    }

    proptest! {
        #[test]
        fn hellinger_step_stays_in_range(
            p in 0.0f64..=1.0, q in 0.0f64..=1.0,
        ) {
            let h = hellinger_step(&[p, 1.0 - p], &[q, 1.0 - q]);
            prop_assert!((0.0..=2.0 + 1e-12).contains(&h));
        }

        /// Gibbs: D_n >= 0 whenever both sides are measures.
        #[test]
        fn kl_nonnegative_for_measures(
            t0 in 0.05f64..0.95, t1 in 0.05f64..0.95, n in 1usize..6,
        ) {
            let mu = bernoulli(t0);
            let xi = bernoulli(t1);
            let report = kl_divergence_exact(mu.as_ref(), xi.as_ref(), n, None).unwrap();
            prop_assert!(report.divergence >= -1e-12);
        }
    }

    #[test]
    fn kl_zero_against_itself() {
        let mu = bernoulli(0.7);
        for n in [1usize, 4, 8] {
            let report = kl_divergence_exact(mu.as_ref(), mu.as_ref(), n, None).unwrap();
            assert_abs_diff_eq!(report.divergence, 0.0, epsilon = 1e-12);
            assert!(report.exact);
        }
    }

    /// Independent oracle: D_8 for Bernoulli(0.7) against the uniform-prior
    /// evidence, summing mu(x) ln(mu(x)/xi(x)) over all 256 sequences with
    /// direct mass evaluations, no scanners involved.
    #[test]
    fn kl_matches_brute_force_mass_sum() {
        let mu = bernoulli(0.7);
        let xi: DynModel = DirichletEvidenceModel::laplace().shared();
        let n = 8;
        let mut oracle = KahanSum::default();
        for bits in 0u32..(1 << n) {
            let symbols: Vec<u8> = (0..n).map(|i| ((bits >> i) & 1) as u8).collect();
            let x = Seq::from_symbols(symbols);
            let lm = mu.mass(&x);
            let lx = xi.mass(&x);
            oracle.add(lm.prob() * (lm.ln() - lx.ln()));
        }
        let report = kl_divergence_exact(mu.as_ref(), xi.as_ref(), n, None).unwrap();
        assert_relative_eq!(report.divergence, oracle.value(), max_relative = 1e-10);
        // The count collapse agrees with the tree walk.
        let collapsed = dn_bernoulli_exact(
            0.7,
            &DirichletExchangeable(DirichletPrior::uniform(2)),
            n as u64,
        );
        assert_relative_eq!(report.divergence, collapsed, max_relative = 1e-10);
    }

    #[test]
    fn kl_bounded_by_mixture_weight() {
        let mu = bernoulli(0.7);
        let xi = two_member_mixture(0.5, 0.7, 0.3);
        let bound = (2.0f64).ln();
        let mut prev = 0.0;
        for n in 1usize..=8 {
            let report =
                kl_divergence_exact(mu.as_ref(), xi.as_ref(), n, Some(bound)).unwrap();
            assert!(report.holds(CHAIN_SLACK_TOLERANCE));
            assert!(report.slack().unwrap() >= -1e-12);
            // Nondecreasing in n for a mixture of measures.
            assert!(report.divergence >= prev - 1e-12);
            prev = report.divergence;
        }
    }

    #[test]
    fn kl_budget_is_enforced() {
        let mu = bernoulli(0.5);
        assert!(matches!(
            kl_divergence_exact(mu.as_ref(), mu.as_ref(), 21, None),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn chain_holds_exactly_small_horizon() {
        let mu = bernoulli(0.7);
        let xi = two_member_mixture(0.25, 0.7, 0.3);
        let bound = (4.0f64).ln();
        let report = total_hellinger_check(
            mu.as_ref(),
            xi.as_ref(),
            8,
            Some(bound),
            EvalPlan::Exact,
        )
        .unwrap();
        assert!(report.exact);
        assert!(report.holds(CHAIN_SLACK_TOLERANCE), "chain: {report:?}");
        assert!(report.ratio_sum <= report.hellinger_sum + 1e-12);
        assert!(report.hellinger_sum <= report.divergence + 1e-12);
        assert!(report.divergence <= bound + 1e-12);
        assert!(report.hellinger_sum > 0.0);
    }

    #[test]
    fn chain_is_zero_against_itself() {
        let mu = bernoulli(0.4);
        let report =
            total_hellinger_check(mu.as_ref(), mu.as_ref(), 8, None, EvalPlan::Exact).unwrap();
        assert_abs_diff_eq!(report.ratio_sum, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(report.hellinger_sum, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(report.divergence, 0.0, epsilon = 1e-12);
    }

    /// The exact per-step Hellinger expectations from the tree walk match
    /// the count collapse term by term.
    #[test]
    fn hellinger_sum_matches_count_collapse() {
        let mu = bernoulli(0.6);
        let xi: DynModel = DirichletEvidenceModel::laplace().shared();
        let report =
            total_hellinger_check(mu.as_ref(), xi.as_ref(), 10, None, EvalPlan::Exact).unwrap();
        let ex = DirichletExchangeable(DirichletPrior::uniform(2));
        let mut collapsed = KahanSum::default();
        for t in 1..=10u64 {
            collapsed.add(expected_instant_hellinger(0.6, &ex, t));
        }
        assert_relative_eq!(
            report.hellinger_sum,
            collapsed.value(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn chain_monte_carlo_agrees_with_exact() {
        let mu = bernoulli(0.7);
        let xi = two_member_mixture(0.5, 0.7, 0.3);
        let exact = total_hellinger_check(
            mu.as_ref(),
            xi.as_ref(),
            8,
            Some((2.0f64).ln()),
            EvalPlan::Exact,
        )
        .unwrap();
        let mc = total_hellinger_check(
            mu.as_ref(),
            xi.as_ref(),
            8,
            Some((2.0f64).ln()),
            EvalPlan::MonteCarlo {
                trajectories: 4000,
                seed: 11,
            },
        )
        .unwrap();
        assert!(!mc.exact);
        assert!(
            (mc.divergence - exact.divergence).abs()
                <= MC_SIGMA * mc.stderr_divergence.unwrap()
        );
        assert!(mc.holds(CHAIN_SLACK_TOLERANCE));
    }

    #[test]
    fn chain_monte_carlo_is_seed_deterministic() {
        let mu = bernoulli(0.3);
        let xi = two_member_mixture(0.5, 0.3, 0.8);
        let plan = EvalPlan::MonteCarlo {
            trajectories: 500,
            seed: 42,
        };
        let a = total_hellinger_check(mu.as_ref(), xi.as_ref(), 40, None, plan).unwrap();
        let b = total_hellinger_check(mu.as_ref(), xi.as_ref(), 40, None, plan).unwrap();
        assert_eq!(a.divergence.to_bits(), b.divergence.to_bits());
        assert_eq!(a.hellinger_sum.to_bits(), b.hellinger_sum.to_bits());
        assert_eq!(
            a.stderr_divergence.unwrap().to_bits(),
            b.stderr_divergence.unwrap().to_bits()
        );
    }

    #[test]
    fn chain_holds_at_long_horizon_by_sampling() {
        let mu = bernoulli(0.7);
        let xi = two_member_mixture(0.5, 0.7, 0.3);
        let report = total_hellinger_check(
            mu.as_ref(),
            xi.as_ref(),
            200,
            Some((2.0f64).ln()),
            EvalPlan::Auto {
                trajectories: 2000,
                seed: 7,
            },
        )
        .unwrap();
        assert!(!report.exact, "2^200 leaves cannot be exact");
        assert!(report.holds(CHAIN_SLACK_TOLERANCE), "chain: {report:?}");
    }

    #[test]
    fn auto_plan_prefers_exact_when_affordable() {
        let mu = bernoulli(0.5);
        let report = total_hellinger_check(
            mu.as_ref(),
            mu.as_ref(),
            10,
            None,
            EvalPlan::Auto {
                trajectories: 100,
                seed: 1,
            },
        )
        .unwrap();
        assert!(report.exact);
        assert!(report.trajectories.is_none());
    }

    #[test]
    fn exp_tail_exact_two_member() {
        let mu = bernoulli(0.7);
        let xi = two_member_mixture(0.5, 0.7, 0.3);
        let report = exp_tail_check(
            mu.as_ref(),
            xi.as_ref(),
            10,
            (2.0f64).ln(),
            EvalPlan::Exact,
        )
        .unwrap();
        assert!(report.exact);
        assert_relative_eq!(report.bound, (2.0f64).sqrt(), max_relative = 1e-14);
        assert!(report.holds(CHAIN_SLACK_TOLERANCE), "tail: {report:?}");
        // Jensen from below: the tail moment of a nonnegative sum is at
        // least one.
        assert!(report.estimate >= 1.0 - 1e-12);
        assert!(report.estimate < report.bound);
    }

    #[test]
    fn exp_tail_is_one_against_itself() {
        let mu = bernoulli(0.6);
        let report =
            exp_tail_check(mu.as_ref(), mu.as_ref(), 10, 0.0, EvalPlan::Exact).unwrap();
        assert_relative_eq!(report.estimate, 1.0, max_relative = 1e-12);
        assert_relative_eq!(report.bound, 1.0, max_relative = 1e-15);
        assert!(report.holds(CHAIN_SLACK_TOLERANCE));
    }

    #[test]
    fn exp_tail_monte_carlo_holds() {
        let mu = bernoulli(0.7);
        let xi = two_member_mixture(0.5, 0.7, 0.3);
        let report = exp_tail_check(
            mu.as_ref(),
            xi.as_ref(),
            120,
            (2.0f64).ln(),
            EvalPlan::MonteCarlo {
                trajectories: 3000,
                seed: 5,
            },
        )
        .unwrap();
        assert!(!report.exact);
        assert!(report.holds(CHAIN_SLACK_TOLERANCE), "tail: {report:?}");
    }

    #[test]
    fn dn_profile_slope_is_near_half() {
        let ns: Vec<u64> = (6..=12).map(|k| 1u64 << k).collect();
        let profile =
            continuous_dn_profile(0.5, &DirichletPrior::uniform(2), &ns).unwrap();
        assert!(
            (0.4..=0.6).contains(&profile.slope),
            "slope {} outside [0.4, 0.6]",
            profile.slope
        );
        // The ceiling holds at every tested horizon, and the residual
        // converges to -1/2: the (d/2) ln e gap between the ceiling's 2 pi
        // and the 2 pi e of the exact expected redundancy.
        for row in &profile.rows {
            assert!(row.residual <= 0.0, "ceiling broken at n {}", row.n);
        }
        let last = profile.rows.last().unwrap();
        assert!(
            (last.residual + 0.5).abs() < 0.01,
            "residual {} at n {} far from -1/2",
            last.residual,
            last.n
        );
        let prev = profile.rows[profile.rows.len() - 2];
        assert!(
            (last.residual - prev.residual).abs() < 0.01,
            "residual still moving: {} then {}",
            prev.residual,
            last.residual
        );
    }

    #[test]
    fn dn_profile_offset_tracks_prior_density() {
        // At theta0 = 0.3 the uniform prior's density term vanishes and the
        // Jeffreys prior's does not; the asymptote column captures exactly
        // that difference, and measured D_n follows it.
        let ns: Vec<u64> = (8..=12).map(|k| 1u64 << k).collect();
        let uniform =
            continuous_dn_profile(0.3, &DirichletPrior::uniform(2), &ns).unwrap();
        let jeffreys =
            continuous_dn_profile(0.3, &DirichletPrior::jeffreys(2), &ns).unwrap();
        let wu = binary_prior_density(&DirichletPrior::uniform(2), 1, 0.3).unwrap();
        let wj = binary_prior_density(&DirichletPrior::jeffreys(2), 1, 0.3).unwrap();
        // D_n carries ln(1/w(theta0)), so the sparser prior at theta0 pays
        // more: uniform minus Jeffreys is ln wj - ln wu.
        let predicted_gap = wj.ln() - wu.ln();
        let last = ns.len() - 1;
        let measured_gap = uniform.rows[last].dn - jeffreys.rows[last].dn;
        assert_relative_eq!(measured_gap, predicted_gap, max_relative = 0.05);
    }

    #[test]
    fn dn_degenerate_point_prior_is_zero() {
        for n in [1u64, 16, 256] {
            let dn = dn_bernoulli_exact(0.5, &BernoulliExchangeable(0.5), n);
            assert_abs_diff_eq!(dn, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn dn_profile_rejects_bad_inputs() {
        let prior = DirichletPrior::uniform(2);
        assert!(continuous_dn_profile(0.0, &prior, &[2, 4]).is_err());
        assert!(continuous_dn_profile(0.5, &prior, &[8]).is_err());
    }

    #[test]
    fn fisher_closed_forms() {
        assert_relative_eq!(
            bernoulli_fisher(0.5).unwrap().value,
            4.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            bernoulli_fisher(0.1).unwrap().value,
            100.0 / 9.0,
            max_relative = 1e-14
        );
        for t in [0.1, 0.25, 0.4] {
            assert_relative_eq!(
                bernoulli_fisher(t).unwrap().value,
                bernoulli_fisher(1.0 - t).unwrap().value,
                max_relative = 1e-12
            );
        }
        assert!(bernoulli_fisher(0.0).is_err());
        assert!(bernoulli_fisher(1.0).is_err());
    }

    /// Finite-difference oracle: j(theta) = -g''(theta) for
    /// g(t) = E_theta[ln p(x|t)] = theta ln t + (1-theta) ln(1-t).
    #[test]
    fn fisher_matches_finite_difference() {
        let eps = 5e-5;
        for i in 1..=9u32 {
            let theta = i as f64 / 10.0;
            let g = |t: f64| theta * t.ln() + (1.0 - theta) * (1.0 - t).ln();
            let second = (g(theta + eps) - 2.0 * g(theta) + g(theta - eps)) / (eps * eps);
            assert_relative_eq!(
                bernoulli_fisher(theta).unwrap().value,
                -second,
                max_relative = 1e-6
            );
        }
    }

    /// Oracle for the count collapse: E[h_t] from the collapsed sum equals
    /// the exact tree-walk value embedded in the chain check.
    #[test]
    fn instant_hellinger_matches_tree_walk() {
        let mu = bernoulli(0.35);
        let xi: DynModel = MixedDiracModel::standard().shared();
        let prior = MixedDiracPrior::standard();
        for n in [4usize, 8] {
            let tree =
                total_hellinger_check(mu.as_ref(), xi.as_ref(), n, None, EvalPlan::Exact)
                    .unwrap();
            let mut collapsed = KahanSum::default();
            for t in 1..=n as u64 {
                collapsed.add(expected_instant_hellinger(0.35, &prior, t));
            }
            assert_relative_eq!(
                tree.hellinger_sum,
                collapsed.value(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn instantaneous_scaled_profile_is_bounded() {
        let ns: Vec<u64> = (1..=11).map(|k| 1u64 << k).collect();
        let report = iid_instantaneous_check(
            0.5,
            &DirichletExchangeable(DirichletPrior::uniform(2)),
            &ns,
            None,
        )
        .unwrap();
        assert!(report.fitted_c.is_none());
        assert!(report.sup.is_finite());
        // The scaled profile climbs monotonically toward its d/4 = 1/4
        // limit and flattens out; boundedness is the content of the
        // instantaneous bound.
        let scaled: Vec<f64> = report.rows.iter().map(|r| r.1).collect();
        for w in scaled.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "scaled profile fell: {scaled:?}");
        }
        assert!(
            report.sup <= 0.25 + 1e-6,
            "n E[h_n] = {} above the d/4 limit",
            report.sup
        );
        let k = scaled.len();
        assert!((scaled[k - 1] - scaled[k - 2]).abs() < 1e-3, "not settled: {scaled:?}");
    }

    #[test]
    fn instantaneous_zero_against_itself() {
        let report = iid_instantaneous_check(
            0.5,
            &BernoulliExchangeable(0.5),
            &[1, 2, 4, 8, 64],
            None,
        )
        .unwrap();
        assert_abs_diff_eq!(report.sup, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn instantaneous_fitted_constant_against_grid_weight() {
        let grid =
            GridUniversalPrior::with_stub_coder(&[0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        let k_half = grid.ln_weight_inv(0.5).unwrap();
        let report = iid_instantaneous_check(
            0.5,
            &grid,
            &[1, 2, 4, 8, 16, 32, 64, 128],
            Some(k_half),
        )
        .unwrap();
        let c = report.fitted_c.expect("positive ln weight inverse");
        assert!(c > 0.0 && c.is_finite());
        assert!(report.sup <= c * k_half + 1e-12);
    }

    /// On a grid holding a cheap point and an expensive point, the fitted
    /// constant of the instantaneous bound comes out smaller for the cheap
    /// point: its excess sup n E[h_n] and its ln(1/w) shrink together, and
    /// the ratio moves the same way.  The sup for the expensive point lands
    /// near n = 128 (the horizon where its posterior finally overtakes the
    /// cheaper neighbour), so the horizon scan must run well past it.
    #[test]
    fn instantaneous_fitted_constant_favors_short_description() {
        let grid =
            GridUniversalPrior::with_stub_coder(&[0.0, 0.35, 0.5, 1.0]).unwrap();
        let ns: Vec<u64> = (0..=9).map(|k| 1u64 << k).collect();
        let mut fitted = Vec::new();
        for theta0 in [0.5, 0.35] {
            let lw = grid.ln_weight_inv(theta0).unwrap();
            let report =
                iid_instantaneous_check(theta0, &grid, &ns, Some(lw)).unwrap();
            fitted.push((lw, report.sup, report.fitted_c.unwrap()));
        }
        let (lw_cheap, sup_cheap, c_cheap) = fitted[0];
        let (lw_deep, sup_deep, c_deep) = fitted[1];
        assert!(lw_cheap < lw_deep);
        assert!(sup_cheap < sup_deep);
        assert!(c_cheap < c_deep);
        assert_abs_diff_eq!(sup_cheap, 0.583809, epsilon = 1e-5);
        assert_abs_diff_eq!(sup_deep, 1.088069, epsilon = 1e-5);
    }

    #[test]
    fn mc_expectation_constant_statistic() {
        let env = bernoulli(0.5);
        let est = mc_expectation(env.as_ref(), |_x| 2.5, 100, 5, 3).unwrap();
        assert_abs_diff_eq!(est.mean, 2.5);
        assert_abs_diff_eq!(est.stderr, 0.0);
    }

    #[test]
    fn mc_expectation_indicator_matches_binomial() {
        let env = bernoulli(0.3);
        let est = mc_expectation(
            env.as_ref(),
            |x| f64::from(x.symbols()[0] == 1),
            10_000,
            1,
            99,
        )
        .unwrap();
        assert!(est.consistent_with(0.3), "mean {} pm {}", est.mean, est.stderr);
        // Binomial standard error at m = 10^4.
        assert_relative_eq!(est.stderr, (0.3 * 0.7 / 10_000.0f64).sqrt(), max_relative = 0.1);
    }

    #[test]
    fn mc_expectation_stderr_halves_with_quadrupled_sample() {
        let env = bernoulli(0.5);
        let stat = |x: &Seq| f64::from(x.symbols().iter().filter(|&&s| s == 1).count() as u32);
        let small = mc_expectation(env.as_ref(), stat, 2_000, 20, 17).unwrap();
        let large = mc_expectation(env.as_ref(), stat, 8_000, 20, 17).unwrap();
        let ratio = small.stderr * small.stderr / (large.stderr * large.stderr);
        assert!(
            (2.5..=6.5).contains(&ratio),
            "variance ratio {ratio} far from 4"
        );
    }

    #[test]
    fn mc_expectation_requires_two_trajectories() {
        let env = bernoulli(0.5);
        assert!(mc_expectation(env.as_ref(), |_| 0.0, 1, 4, 0).is_err());
    }

    #[test]
    fn hellinger_series_along_deterministic_env() {
        let alphabet = Alphabet::binary();
        let mu: DynModel = Arc::new(DeterministicEnv::constant(alphabet, 1).unwrap());
        let xi: DynModel = DirichletEvidenceModel::laplace().shared();
        let x = Seq::parse("11111").unwrap();
        let series = hellinger_series_along(mu.as_ref(), xi.as_ref(), &x);
        // h_t against the succession rule on all-ones data:
        // (1 - sqrt((t+1)/(t+2)))^2 + 1/(t+2).
        for (t, &h) in series.per_step().iter().enumerate() {
            let p1 = (t as f64 + 1.0) / (t as f64 + 2.0);
            let expect = (1.0 - p1.sqrt()).powi(2) + (1.0 - p1);
            assert_relative_eq!(h, expect, max_relative = 1e-12);
        }
        let cum = series.cumulative();
        for w in cum.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert_relative_eq!(series.total(), cum[cum.len() - 1], max_relative = 1e-14);
    }
}

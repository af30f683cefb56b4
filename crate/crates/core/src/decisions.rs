//! Loss-driven prediction: best-response actions, loss accounting along a
//! true environment, and the numeric bridge from prediction error to
//! decision regret.
//!
//! A predictor rho facing loss entries l_{xy} in [0, 1] plays the best
//! response y* = argmin_y sum_x rho(x|past) l_{xy}. Playing the best
//! response to a predictor xi instead of to the true measure mu costs, in
//! cumulative mu-expected loss L_n,
//!
//! ```text
//! (sqrt(L_n^xi) - sqrt(L_n^mu))^2
//!     <= sum_t E[(sqrt(l_t^xi) - sqrt(l_t^mu))^2]
//!     <= 2 sum_t E[h_t]
//! ```
//!
//! with h_t the per-step squared Hellinger distance between mu and xi, so a
//! dominance coefficient w for xi yields the closed regret ceiling
//! sqrt(L_n^xi) <= sqrt(L_n^mu) + sqrt(2 ln(1/w)). Everything here evaluates
//! those quantities exactly by tree enumeration when the budget allows and
//! by seeded Monte Carlo otherwise, mirroring [`crate::bounds`].
//!
//! The middle inequality rests on a scalar fact about mixtures: for
//! nonnegative weights v and nonnegative vectors a, b,
//! (sqrt(sum v a) - sqrt(sum v b))^2 <= sum v (sqrt a - sqrt b)^2, exposed
//! directly as [`hellinger_mixture_inequality`].

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::bounds::{column_means, column_stderr, ChainLink, EvalPlan, Mode};
use crate::error::{Error, Result};
use crate::model::{predictive_distribution, DynModel, PrefixScanner, Semimeasure};
use crate::numerics::{substream_seed, KahanSum};
use crate::seq::Alphabet;
use crate::MEASURE_TOLERANCE;

// ---------------------------------------------------------------------------
// Loss matrices
// ---------------------------------------------------------------------------

/// A loss table l_{xy} over observation rows x and action columns y, every
/// entry in [0, 1]. The action alphabet may differ in size from the
/// observation alphabet, and may be empty (acting then fails, constructing
/// does not).
#[derive(Clone, Debug, PartialEq)]
pub struct LossMatrix {
    observations: usize,
    actions: usize,
    entries: Vec<f64>,
}

impl LossMatrix {
    /// Builds from one row per observation; rows must be equal length and
    /// every entry must lie in [0, 1].
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Domain {
                what: "loss matrix needs at least one observation row".into(),
            });
        }
        let actions = rows[0].len();
        let mut entries = Vec::with_capacity(rows.len() * actions);
        for row in rows {
            if row.len() != actions {
                return Err(Error::Domain {
                    what: format!(
                        "ragged loss matrix: rows of length {} and {}",
                        actions,
                        row.len()
                    ),
                });
            }
            for &l in row {
                if !(0.0..=1.0).contains(&l) {
                    return Err(Error::Domain {
                        what: format!("loss entry {l} outside [0, 1]"),
                    });
                }
                entries.push(l);
            }
        }
        Ok(LossMatrix {
            observations: rows.len(),
            actions,
            entries,
        })
    }

    /// The k-ary 0-1 loss: zero on the diagonal, one off it.
    #[must_use]
    pub fn zero_one(k: usize) -> Self {
        assert!(k >= 1, "0-1 loss needs at least one symbol");
        let mut entries = vec![1.0; k * k];
        for x in 0..k {
            entries[x * k + x] = 0.0;
        }
        LossMatrix {
            observations: k,
            actions: k,
            entries,
        }
    }

    /// A 2x2 table from its four entries, first index the observation.
    pub fn binary(l00: f64, l01: f64, l10: f64, l11: f64) -> Result<Self> {
        LossMatrix::from_rows(&[vec![l00, l01], vec![l10, l11]])
    }

    #[must_use]
    pub fn observations(&self) -> usize {
        self.observations
    }

    #[must_use]
    pub fn actions(&self) -> usize {
        self.actions
    }

    /// l_{xy} for observation x and action y.
    #[must_use]
    pub fn entry(&self, x: usize, y: usize) -> f64 {
        assert!(x < self.observations && y < self.actions);
        self.entries[x * self.actions + y]
    }

    /// Expected loss of action y under a normalized observation vector.
    fn expected(&self, p: &[f64], y: usize) -> f64 {
        let mut acc = 0.0;
        for (x, &px) in p.iter().enumerate() {
            acc += px * self.entry(x, y);
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// Acting
// ---------------------------------------------------------------------------

/// The outcome of one best-response decision.
#[derive(Clone, Copy, Debug)]
pub struct ActionChoice {
    /// Lowest-index action achieving minimal expected loss.
    pub action: usize,
    /// That minimal expected loss under the (renormalized) predictive.
    pub expected_loss: f64,
    /// The predictive arrived with mass away from one beyond
    /// [`MEASURE_TOLERANCE`] and was renormalized before acting.
    pub renormalized: bool,
    /// Every action ties at the optimum, so the choice carries no
    /// information beyond the tie-break rule.
    pub degenerate: bool,
}

/// Best response to a predictive vector: argmin_y sum_x rho(x|past) l_{xy},
/// ties broken toward the lowest action index.
///
/// The predictive may be a deficient semimeasure conditional; it is
/// renormalized and the choice is flagged. A vector with no mass at all
/// admits no best response and errors.
pub fn bayes_act(predictive: &[f64], loss: &LossMatrix) -> Result<ActionChoice> {
    if loss.actions() == 0 {
        return Err(Error::EmptyActionSet);
    }
    if predictive.len() != loss.observations() {
        return Err(Error::Domain {
            what: format!(
                "predictive over {} observations against a loss matrix with {} rows",
                predictive.len(),
                loss.observations()
            ),
        });
    }
    let mut sum = 0.0;
    for &p in predictive {
        if p < 0.0 {
            return Err(Error::Domain {
                what: format!("negative predictive mass {p}"),
            });
        }
        sum += p;
    }
    if sum <= 0.0 {
        return Err(Error::Domain {
            what: "predictive vector has no mass to act on".into(),
        });
    }
    let renormalized = (sum - 1.0).abs() > MEASURE_TOLERANCE;
    if renormalized {
        log::debug!("acting on a deficient predictive with mass {sum}");
    }
    let normalized: Vec<f64> = predictive.iter().map(|&p| p / sum).collect();
    let mut action = 0;
    let mut best = loss.expected(&normalized, 0);
    let mut all_tied = true;
    for y in 1..loss.actions() {
        let e = loss.expected(&normalized, y);
        if e < best {
            action = y;
            best = e;
            all_tied = false;
        } else if e != best {
            all_tied = false;
        }
    }
    // A later action below `best` resets the tie scan, so re-verify.
    let degenerate =
        all_tied || (0..loss.actions()).all(|y| loss.expected(&normalized, y) == best);
    Ok(ActionChoice {
        action,
        expected_loss: best,
        renormalized,
        degenerate,
    })
}

/// The binary decision threshold gamma = (l01 - l00) / (l01 - l00 + l10 - l11):
/// the best response to probability p of observing 1 is action 1 exactly when
/// p exceeds gamma.
///
/// Defined for 2x2 matrices in which each wrong action strictly loses, that
/// is l01 > l00 and l10 > l11; degenerate tables have no threshold.
pub fn gamma_threshold(loss: &LossMatrix) -> Result<f64> {
    if loss.observations() != 2 || loss.actions() != 2 {
        return Err(Error::Domain {
            what: format!(
                "threshold needs a 2x2 loss matrix, got {}x{}",
                loss.observations(),
                loss.actions()
            ),
        });
    }
    let d0 = loss.entry(0, 1) - loss.entry(0, 0);
    let d1 = loss.entry(1, 0) - loss.entry(1, 1);
    if d0 <= 0.0 || d1 <= 0.0 {
        return Err(Error::Domain {
            what: format!("threshold undefined: wrong-action margins {d0} and {d1} not both positive"),
        });
    }
    Ok(d0 / (d0 + d1))
}

/// The threshold form of the binary best response: 1 when p(1) > gamma,
/// else 0 (equality falls to the lower index, matching [`bayes_act`]).
pub fn threshold_act(p_one: f64, loss: &LossMatrix) -> Result<usize> {
    let gamma = gamma_threshold(loss)?;
    Ok(usize::from(p_one > gamma))
}

// ---------------------------------------------------------------------------
// Actors and ledgers
// ---------------------------------------------------------------------------

/// A named predictor whose predictive distribution drives the best response.
#[derive(Clone)]
pub struct Actor {
    name: String,
    model: DynModel,
}

impl Actor {
    #[must_use]
    pub fn new(name: impl Into<String>, model: DynModel) -> Self {
        Actor {
            name: name.into(),
            model,
        }
    }

    /// The actor that acts on the true environment's own predictive.
    #[must_use]
    pub fn informed(model: DynModel) -> Self {
        Actor::new("informed", model)
    }

    #[must_use]
    pub fn name(&self) -> &str {
        &self.name
    }

    #[must_use]
    pub fn model(&self) -> &DynModel {
        &self.model
    }
}

/// Per-step expected instantaneous losses l_t of one actor, with the
/// cumulative totals derived from them. Every l_t lies in [0, 1] because
/// loss entries do, so cumulative totals are nondecreasing.
#[derive(Clone, Debug)]
pub struct ActorLedger {
    name: String,
    per_step: Vec<f64>,
    stderr_total: Option<f64>,
}

impl ActorLedger {
    fn new(name: String, per_step: Vec<f64>, stderr_total: Option<f64>) -> Self {
        for &l in &per_step {
            debug_assert!(
                (-1e-12..=1.0 + 1e-12).contains(&l),
                "instantaneous loss {l} outside [0, 1]"
            );
        }
        ActorLedger {
            name,
            per_step,
            stderr_total,
        }
    }

    #[must_use]
    pub fn name(&self) -> &str {
        &self.name
    }

    /// l_t for t = 1..n.
    #[must_use]
    pub fn per_step(&self) -> &[f64] {
        &self.per_step
    }

    /// Running totals L_1..L_n; nondecreasing.
    #[must_use]
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = KahanSum::default();
        self.per_step
            .iter()
            .map(|&l| {
                acc.add(l);
                acc.value()
            })
            .collect()
    }

    /// L_n.
    #[must_use]
    pub fn total(&self) -> f64 {
        let mut acc = KahanSum::default();
        for &l in &self.per_step {
            acc.add(l);
        }
        acc.value()
    }

    /// Standard error of the total in Monte Carlo mode.
    #[must_use]
    pub fn stderr_total(&self) -> Option<f64> {
        self.stderr_total
    }
}

/// Loss accounts for a set of actors against one true environment.
#[derive(Clone, Debug)]
pub struct LossLedger {
    pub horizon: usize,
    pub exact: bool,
    pub trajectories: Option<u64>,
    actors: Vec<ActorLedger>,
}

impl LossLedger {
    #[must_use]
    pub fn actors(&self) -> &[ActorLedger] {
        &self.actors
    }

    /// First account carrying the given name.
    #[must_use]
    pub fn actor(&self, name: &str) -> Option<&ActorLedger> {
        self.actors.iter().find(|a| a.name() == name)
    }
}

/// The mu-expected instantaneous loss of each actor's best response at one
/// node: l = sum_a mu(a|past) l_{a, y*}.
fn step_losses(
    mp: &[f64],
    actor_scanners: &[Box<dyn PrefixScanner>],
    loss: &LossMatrix,
    alphabet: Alphabet,
) -> Result<Vec<f64>> {
    actor_scanners
        .iter()
        .map(|sc| {
            let pred = predictive_distribution(sc.as_ref(), alphabet);
            let choice = bayes_act(&pred, loss)?;
            Ok(loss.expected(mp, choice.action))
        })
        .collect()
}

fn exact_ledger(
    mu: &dyn Semimeasure,
    actors: &[Actor],
    loss: &LossMatrix,
    n: usize,
) -> Result<Vec<Vec<f64>>> {
    let alphabet = mu.alphabet();
    struct Acc {
        per_step: Vec<Vec<KahanSum>>,
        leaf_mass: KahanSum,
    }
    fn walk(
        mu_sc: &dyn PrefixScanner,
        actor_scs: &[Box<dyn PrefixScanner>],
        t: usize,
        n: usize,
        weight: f64,
        alphabet: Alphabet,
        loss: &LossMatrix,
        acc: &mut Acc,
    ) -> Result<()> {
        if t == n {
            acc.leaf_mass.add(weight);
            return Ok(());
        }
        let mp = predictive_distribution(mu_sc, alphabet);
        for (k, l) in step_losses(&mp, actor_scs, loss, alphabet)?
            .into_iter()
            .enumerate()
        {
            acc.per_step[k][t].add(weight * l);
        }
        for a in alphabet.symbols() {
            let p = mp[a as usize];
            if p <= 0.0 {
                continue;
            }
            let mut mu_next = mu_sc.clone_box();
            mu_next.advance(a);
            let mut next: Vec<Box<dyn PrefixScanner>> =
                actor_scs.iter().map(|sc| sc.clone_box()).collect();
            for sc in &mut next {
                sc.advance(a);
            }
            walk(
                mu_next.as_ref(),
                &next,
                t + 1,
                n,
                weight * p,
                alphabet,
                loss,
                acc,
            )?;
        }
        Ok(())
    }

    let mut acc = Acc {
        per_step: vec![vec![KahanSum::default(); n]; actors.len()],
        leaf_mass: KahanSum::default(),
    };
    let scanners: Vec<Box<dyn PrefixScanner>> =
        actors.iter().map(|a| a.model().scanner()).collect();
    walk(
        mu.scanner().as_ref(),
        &scanners,
        0,
        n,
        1.0,
        alphabet,
        loss,
        &mut acc,
    )?;
    let mass = acc.leaf_mass.value();
    if (mass - 1.0).abs() > 1e-9 {
        return Err(Error::NotAMeasure { sum: mass, at: n });
    }
    Ok(acc
        .per_step
        .into_iter()
        .map(|row| row.into_iter().map(|k| k.value()).collect())
        .collect())
}

/// One sampled trajectory's conditional losses, actor-major: element
/// k * n + t is actor k's l_t given the sampled past, an unbiased and
/// variance-reduced stand-in for the realized loss.
fn mc_ledger_trajectory(
    mu: &dyn Semimeasure,
    actors: &[Actor],
    loss: &LossMatrix,
    n: usize,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    let alphabet = mu.alphabet();
    let mut mu_sc = mu.scanner();
    let mut actor_scs: Vec<Box<dyn PrefixScanner>> =
        actors.iter().map(|a| a.model().scanner()).collect();
    let mut row = vec![0.0; actors.len() * n];
    for t in 0..n {
        let mp = predictive_distribution(mu_sc.as_ref(), alphabet);
        let sum: f64 = mp.iter().sum();
        if sum < 1.0 - 1e-9 {
            return Err(Error::NotAMeasure { sum, at: t });
        }
        for (k, l) in step_losses(&mp, &actor_scs, loss, alphabet)?
            .into_iter()
            .enumerate()
        {
            row[k * n + t] = l;
        }
        let mut u = rng.random::<f64>() * sum;
        let mut drawn = alphabet.size() - 1;
        for a in alphabet.symbols() {
            u -= mp[a as usize];
            if u <= 0.0 {
                drawn = a as usize;
                break;
            }
        }
        mu_sc.advance(drawn as u8);
        for sc in &mut actor_scs {
            sc.advance(drawn as u8);
        }
    }
    Ok(row)
}

fn mc_ledger(
    mu: &dyn Semimeasure,
    actors: &[Actor],
    loss: &LossMatrix,
    n: usize,
    trajectories: u64,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    // Derived per-trajectory generators keep the estimate a pure function of
    // (seed, trajectories) regardless of scheduling.
    let rows: Vec<Result<Vec<f64>>> = (0..trajectories)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha12Rng::seed_from_u64(substream_seed(seed, i));
            mc_ledger_trajectory(mu, actors, loss, n, &mut rng)
        })
        .collect();
    let mut samples = Vec::with_capacity(trajectories as usize);
    for row in rows {
        samples.push(row?);
    }
    let m = trajectories as f64;
    let mut per_step = vec![vec![0.0; n]; actors.len()];
    let mut totals = vec![Vec::with_capacity(samples.len()); actors.len()];
    for (k, steps) in per_step.iter_mut().enumerate() {
        for t in 0..n {
            let mut acc = KahanSum::default();
            for row in &samples {
                acc.add(row[k * n + t]);
            }
            steps[t] = acc.value() / m;
        }
        for row in &samples {
            let mut acc = KahanSum::default();
            for t in 0..n {
                acc.add(row[k * n + t]);
            }
            totals[k].push(acc.value());
        }
    }
    let stderrs = totals
        .iter()
        .zip(&per_step)
        .map(|(tots, steps)| {
            let mean: f64 = {
                let mut acc = KahanSum::default();
                for &l in steps {
                    acc.add(l);
                }
                acc.value()
            };
            let mut sq = KahanSum::default();
            for &t in tots {
                let d = t - mean;
                sq.add(d * d);
            }
            (sq.value() / (m * (m - 1.0))).sqrt()
        })
        .collect();
    Ok((per_step, stderrs))
}

/// Loss accounts for every actor against the true environment mu, exactly
/// when the sequence tree fits the enumeration budget, by seeded Monte
/// Carlo otherwise.
pub fn loss_ledger(
    mu: &dyn Semimeasure,
    actors: &[Actor],
    loss: &LossMatrix,
    n: usize,
    plan: EvalPlan,
) -> Result<LossLedger> {
    if actors.is_empty() {
        return Err(Error::Domain {
            what: "loss ledger needs at least one actor".into(),
        });
    }
    if loss.observations() != mu.alphabet().size() {
        return Err(Error::Domain {
            what: format!(
                "loss matrix covers {} observations but the alphabet has {}",
                loss.observations(),
                mu.alphabet().size()
            ),
        });
    }
    match plan.resolve(mu.alphabet().size(), n, "loss ledger")? {
        Mode::Exact => {
            let per_step = exact_ledger(mu, actors, loss, n)?;
            Ok(LossLedger {
                horizon: n,
                exact: true,
                trajectories: None,
                actors: actors
                    .iter()
                    .zip(per_step)
                    .map(|(a, steps)| ActorLedger::new(a.name().into(), steps, None))
                    .collect(),
            })
        }
        Mode::Mc { trajectories, seed } => {
            let (per_step, stderrs) = mc_ledger(mu, actors, loss, n, trajectories, seed)?;
            Ok(LossLedger {
                horizon: n,
                exact: false,
                trajectories: Some(trajectories),
                actors: actors
                    .iter()
                    .zip(per_step.into_iter().zip(stderrs))
                    .map(|(a, (steps, se))| {
                        ActorLedger::new(a.name().into(), steps, Some(se))
                    })
                    .collect(),
            })
        }
    }
}

// ---------------------------------------------------------------------------
// The loss bound
// ---------------------------------------------------------------------------

/// Verified quantities of the regret chain at one horizon: cumulative losses
/// of the informed and mixture actors, the summed per-step root-loss gaps,
/// and the summed Hellinger distances, with enough error information to
/// separate sampling noise from violation.
#[derive(Clone, Debug)]
pub struct LossBoundReport {
    pub horizon: usize,
    pub exact: bool,
    pub trajectories: Option<u64>,
    /// L_n of the actor playing the true measure's best response.
    pub informed_total: f64,
    /// L_n of the actor playing the predictor's best response.
    pub mixture_total: f64,
    /// sum_t E[(sqrt(l_t^xi) - sqrt(l_t^mu))^2].
    pub sqrt_gap_sum: f64,
    /// sum_t E[h_t] between mu and xi.
    pub hellinger_sum: f64,
    /// ln(1/w) when a dominance coefficient was supplied.
    pub ln_weight_inv: Option<f64>,
    pub stderr_informed: Option<f64>,
    pub stderr_mixture: Option<f64>,
    pub stderr_gap: Option<f64>,
    /// Standard error of the per-trajectory statistic 2 sum h - sum gap.
    pub stderr_hell_link: Option<f64>,
}

/// Largest change in f over the corner combinations of x +- dx, y +- dy:
/// a derivative-free error envelope for the nonlinear link endpoints.
fn corner_spread(f: impl Fn(f64, f64) -> f64, x: f64, dx: f64, y: f64, dy: f64) -> f64 {
    let base = f(x, y);
    let mut worst = 0.0f64;
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            let v = f((x + sx * dx).max(0.0), (y + sy * dy).max(0.0));
            worst = worst.max((v - base).abs());
        }
    }
    worst
}

impl LossBoundReport {
    /// The chain as individual links, in order; the corollary ceiling
    /// appears when a dominance coefficient was supplied.
    #[must_use]
    pub fn links(&self) -> Vec<ChainLink> {
        let regret = |l_xi: f64, l_mu: f64| {
            let d = l_xi.sqrt() - l_mu.sqrt();
            d * d
        };
        let lhs_stderr = match (self.stderr_mixture, self.stderr_informed) {
            (Some(se_xi), Some(se_mu)) => Some(corner_spread(
                regret,
                self.mixture_total,
                se_xi,
                self.informed_total,
                se_mu,
            )),
            _ => None,
        };
        let mut links = vec![
            ChainLink {
                name: "regret_le_step_gaps",
                lhs: regret(self.mixture_total, self.informed_total),
                rhs: self.sqrt_gap_sum,
                stderr: match (lhs_stderr, self.stderr_gap) {
                    (Some(a), Some(b)) => Some(a + b),
                    _ => None,
                },
            },
            ChainLink {
                name: "step_gaps_le_twice_hellinger",
                lhs: self.sqrt_gap_sum,
                rhs: 2.0 * self.hellinger_sum,
                stderr: self.stderr_hell_link,
            },
        ];
        if let Some(lw) = self.ln_weight_inv {
            let root_gap = |l_xi: f64, l_mu: f64| l_xi.sqrt() - l_mu.sqrt();
            links.push(ChainLink {
                name: "root_regret_le_root_weight",
                lhs: root_gap(self.mixture_total, self.informed_total),
                rhs: (2.0 * lw).sqrt(),
                stderr: match (self.stderr_mixture, self.stderr_informed) {
                    (Some(se_xi), Some(se_mu)) => Some(corner_spread(
                        root_gap,
                        self.mixture_total,
                        se_xi,
                        self.informed_total,
                        se_mu,
                    )),
                    _ => None,
                },
            });
        }
        links
    }

    /// Every link holds within tolerance, sampled links with
    /// [`crate::MC_SIGMA`] standard errors of grace.
    #[must_use]
    pub fn holds(&self, tol: f64) -> bool {
        self.links().iter().all(|l| l.holds(tol))
    }
}

fn exact_loss_bound(
    mu: &dyn Semimeasure,
    xi: &dyn Semimeasure,
    loss: &LossMatrix,
    n: usize,
) -> Result<[f64; 4]> {
    let alphabet = mu.alphabet();
    struct Acc {
        l_mu: KahanSum,
        l_xi: KahanSum,
        gap: KahanSum,
        hell: KahanSum,
        leaf_mass: KahanSum,
    }
    fn walk(
        mu_sc: &dyn PrefixScanner,
        xi_sc: &dyn PrefixScanner,
        depth_left: usize,
        weight: f64,
        alphabet: Alphabet,
        loss: &LossMatrix,
        acc: &mut Acc,
    ) -> Result<()> {
        if depth_left == 0 {
            acc.leaf_mass.add(weight);
            return Ok(());
        }
        let mp = predictive_distribution(mu_sc, alphabet);
        let xp = predictive_distribution(xi_sc, alphabet);
        let l_mu = loss.expected(&mp, bayes_act(&mp, loss)?.action);
        let l_xi = loss.expected(&mp, bayes_act(&xp, loss)?.action);
        let d = l_xi.sqrt() - l_mu.sqrt();
        acc.l_mu.add(weight * l_mu);
        acc.l_xi.add(weight * l_xi);
        acc.gap.add(weight * d * d);
        acc.hell
            .add(weight * crate::bounds::hellinger_step(&mp, &xp));
        for a in alphabet.symbols() {
            let p = mp[a as usize];
            if p <= 0.0 {
                continue;
            }
            let mut mu_next = mu_sc.clone_box();
            let mut xi_next = xi_sc.clone_box();
            mu_next.advance(a);
            xi_next.advance(a);
            walk(
                mu_next.as_ref(),
                xi_next.as_ref(),
                depth_left - 1,
                weight * p,
                alphabet,
                loss,
                acc,
            )?;
        }
        Ok(())
    }

    let mut acc = Acc {
        l_mu: KahanSum::default(),
        l_xi: KahanSum::default(),
        gap: KahanSum::default(),
        hell: KahanSum::default(),
        leaf_mass: KahanSum::default(),
    };
    walk(
        mu.scanner().as_ref(),
        xi.scanner().as_ref(),
        n,
        1.0,
        alphabet,
        loss,
        &mut acc,
    )?;
    let mass = acc.leaf_mass.value();
    if (mass - 1.0).abs() > 1e-9 {
        return Err(Error::NotAMeasure { sum: mass, at: n });
    }
    Ok([
        acc.l_mu.value(),
        acc.l_xi.value(),
        acc.gap.value(),
        acc.hell.value(),
    ])
}

/// Per-trajectory sums of conditional [l_mu, l_xi, gap, h].
fn mc_loss_bound_trajectory(
    mu: &dyn Semimeasure,
    xi: &dyn Semimeasure,
    loss: &LossMatrix,
    n: usize,
    rng: &mut impl Rng,
) -> Result<[f64; 4]> {
    let alphabet = mu.alphabet();
    let mut mu_sc = mu.scanner();
    let mut xi_sc = xi.scanner();
    let mut sums = [KahanSum::default(); 4];
    for t in 0..n {
        let mp = predictive_distribution(mu_sc.as_ref(), alphabet);
        let sum: f64 = mp.iter().sum();
        if sum < 1.0 - 1e-9 {
            return Err(Error::NotAMeasure { sum, at: t });
        }
        let xp = predictive_distribution(xi_sc.as_ref(), alphabet);
        let l_mu = loss.expected(&mp, bayes_act(&mp, loss)?.action);
        let l_xi = loss.expected(&mp, bayes_act(&xp, loss)?.action);
        let d = l_xi.sqrt() - l_mu.sqrt();
        sums[0].add(l_mu);
        sums[1].add(l_xi);
        sums[2].add(d * d);
        sums[3].add(crate::bounds::hellinger_step(&mp, &xp));
        let mut u = rng.random::<f64>() * sum;
        let mut drawn = alphabet.size() - 1;
        for a in alphabet.symbols() {
            u -= mp[a as usize];
            if u <= 0.0 {
                drawn = a as usize;
                break;
            }
        }
        mu_sc.advance(drawn as u8);
        xi_sc.advance(drawn as u8);
    }
    Ok([sums[0].value(), sums[1].value(), sums[2].value(), sums[3].value()])
}

/// Verifies the regret chain for the best responders to mu and to xi,
/// together with the dominance corollary when ln(1/w) is supplied.
pub fn loss_bound_check(
    mu: &dyn Semimeasure,
    xi: &dyn Semimeasure,
    loss: &LossMatrix,
    n: usize,
    ln_weight_inv: Option<f64>,
    plan: EvalPlan,
) -> Result<LossBoundReport> {
    if mu.alphabet() != xi.alphabet() {
        return Err(Error::Domain {
            what: "loss bound needs matching alphabets".into(),
        });
    }
    if loss.observations() != mu.alphabet().size() {
        return Err(Error::Domain {
            what: format!(
                "loss matrix covers {} observations but the alphabet has {}",
                loss.observations(),
                mu.alphabet().size()
            ),
        });
    }
    match plan.resolve(mu.alphabet().size(), n, "loss bound check")? {
        Mode::Exact => {
            let [l_mu, l_xi, gap, hell] = exact_loss_bound(mu, xi, loss, n)?;
            Ok(LossBoundReport {
                horizon: n,
                exact: true,
                trajectories: None,
                informed_total: l_mu,
                mixture_total: l_xi,
                sqrt_gap_sum: gap,
                hellinger_sum: hell,
                ln_weight_inv,
                stderr_informed: None,
                stderr_mixture: None,
                stderr_gap: None,
                stderr_hell_link: None,
            })
        }
        Mode::Mc { trajectories, seed } => {
            let rows: Vec<Result<[f64; 4]>> = (0..trajectories)
                .into_par_iter()
                .map(|i| {
                    let mut rng = ChaCha12Rng::seed_from_u64(substream_seed(seed, i));
                    mc_loss_bound_trajectory(mu, xi, loss, n, &mut rng)
                })
                .collect();
            let mut samples = Vec::with_capacity(trajectories as usize);
            for row in rows {
                samples.push(row?);
            }
            let mean = column_means(&samples);
            let link_rows: Vec<[f64; 1]> =
                samples.iter().map(|s| [2.0 * s[3] - s[2]]).collect();
            let link_mean = column_means(&link_rows);
            Ok(LossBoundReport {
                horizon: n,
                exact: false,
                trajectories: Some(trajectories),
                informed_total: mean[0],
                mixture_total: mean[1],
                sqrt_gap_sum: mean[2],
                hellinger_sum: mean[3],
                ln_weight_inv,
                stderr_informed: Some(column_stderr(&samples, 0, mean[0])),
                stderr_mixture: Some(column_stderr(&samples, 1, mean[1])),
                stderr_gap: Some(column_stderr(&samples, 2, mean[2])),
                stderr_hell_link: Some(column_stderr(&link_rows, 0, link_mean[0])),
            })
        }
    }
}

// ---------------------------------------------------------------------------
// The mixture root inequality
// ---------------------------------------------------------------------------

/// Slack of (sqrt(sum v a) - sqrt(sum v b))^2 <= sum v (sqrt a - sqrt b)^2
/// for nonnegative v, a, b: returns the right side minus the left side,
/// nonnegative up to rounding.
pub fn hellinger_mixture_inequality(v: &[f64], a: &[f64], b: &[f64]) -> Result<f64> {
    if v.len() != a.len() || v.len() != b.len() {
        return Err(Error::Domain {
            what: format!(
                "mismatched lengths: {} weights, {} and {} values",
                v.len(),
                a.len(),
                b.len()
            ),
        });
    }
    let mut va = KahanSum::default();
    let mut vb = KahanSum::default();
    let mut spread = KahanSum::default();
    for ((&vi, &ai), &bi) in v.iter().zip(a).zip(b) {
        if vi < 0.0 || ai < 0.0 || bi < 0.0 {
            return Err(Error::Domain {
                what: "mixture inequality needs nonnegative entries".into(),
            });
        }
        va.add(vi * ai);
        vb.add(vi * bi);
        let d = ai.sqrt() - bi.sqrt();
        spread.add(vi * d * d);
    }
    let lhs_root = va.value().sqrt() - vb.value().sqrt();
    Ok(spread.value() - lhs_root * lhs_root)
}

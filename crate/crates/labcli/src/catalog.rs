//! The shipped model classes, priors, and loss matrices that experiments
//! refer to by name.
//!
//! Everything here is a fixed, named configuration: the point of the
//! catalog is that a result table's metadata can identify its inputs by
//! name alone and a rerun reconstructs them exactly.

use std::sync::Arc;

use seqlab_core::bounds::DirichletExchangeable;
use seqlab_core::conjugate::{
    DirichletPrior, GridMixModel, GridUniversalPrior, MixedDiracPrior,
};
use seqlab_core::decisions::LossMatrix;
use seqlab_core::mixture::{ClassMember, WeightedClass};
use seqlab_core::model::{BernoulliEnv, DeterministicEnv, DynModel};
use seqlab_core::seq::{Alphabet, Seq};

use crate::error::{CliError, Result};

/// Support points of the shipped grid prior; weights come from the stub
/// coder, so 1/2 is the cheapest interior point.
pub const GRID_THETAS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

fn bernoulli(theta: f64) -> DynModel {
    Arc::new(BernoulliEnv::new(theta).expect("catalog thetas lie in [0, 1]"))
}

fn periodic(pattern: &str) -> DeterministicEnv {
    DeterministicEnv::periodic(
        Alphabet::binary(),
        Seq::parse(pattern).expect("catalog patterns are binary"),
    )
    .expect("catalog patterns are nonempty")
}

/// An environment, a mixture dominating it, and the dominance coefficient
/// connecting them: one row of the bound suite.
pub struct ChainMixture {
    pub name: &'static str,
    /// Name of the generating member inside the mixture.
    pub mu_name: &'static str,
    pub mu: DynModel,
    pub xi: DynModel,
    /// ln(1/w) for the generating member.
    pub ln_weight_inv: f64,
}

/// The shipped mixture/environment pairs. The last one predicts with the
/// environment itself, so every gap in its report is exactly zero.
pub fn chain_mixtures() -> Vec<ChainMixture> {
    let pair = WeightedClass::uniform(vec![
        ("theta-0.7".to_string(), bernoulli(0.7)),
        ("theta-0.3".to_string(), bernoulli(0.3)),
    ])
    .expect("two members, equal weights");

    let grid = GridUniversalPrior::with_stub_coder(&GRID_THETAS)
        .expect("grid thetas lie in [0, 1]");
    let grid_lw = grid
        .ln_weight_inv(0.5)
        .expect("0.5 is a support point of the shipped grid");
    let grid_model = GridMixModel::new(grid).shared();

    let mixed = WeightedClass::new(vec![
        ClassMember::new("theta-0.9", bernoulli(0.9), 0.5),
        ClassMember::new("all-ones", Arc::new(periodic("1")), 0.25),
        ClassMember::new("theta-0.2", bernoulli(0.2), 0.25),
    ])
    .expect("weights sum to one");

    let self_model = bernoulli(0.6);

    vec![
        ChainMixture {
            name: "bernoulli-pair",
            mu_name: "theta-0.7",
            mu: bernoulli(0.7),
            xi: Arc::new(pair),
            ln_weight_inv: std::f64::consts::LN_2,
        },
        ChainMixture {
            name: "grid-stub",
            mu_name: "theta-0.5",
            mu: bernoulli(0.5),
            xi: grid_model,
            ln_weight_inv: grid_lw,
        },
        ChainMixture {
            name: "det-plus-bernoulli",
            mu_name: "theta-0.9",
            mu: bernoulli(0.9),
            xi: Arc::new(mixed),
            ln_weight_inv: std::f64::consts::LN_2,
        },
        ChainMixture {
            name: "self-check",
            mu_name: "theta-0.6",
            mu: self_model.clone(),
            xi: self_model,
            ln_weight_inv: 0.0,
        },
    ]
}

/// A countable class of deterministic environments with the generators
/// kept alongside, so each member can produce the sequence it believes in.
pub struct DetMixture {
    pub name: &'static str,
    pub class: WeightedClass,
    pub generators: Vec<(&'static str, DeterministicEnv)>,
}

/// The shipped deterministic mixtures.
pub fn det_mixtures() -> Vec<DetMixture> {
    let uniform_members = [("ones", "1"), ("zeros", "0"), ("alt-01", "01"), ("alt-10", "10")];
    let uniform = DetMixture {
        name: "det-uniform-4",
        class: WeightedClass::uniform(
            uniform_members
                .iter()
                .map(|&(name, p)| (name.to_string(), Arc::new(periodic(p)) as DynModel))
                .collect(),
        )
        .expect("four members, equal weights"),
        generators: uniform_members
            .iter()
            .map(|&(name, p)| (name, periodic(p)))
            .collect(),
    };

    let weighted_members = [("ones", "1", 0.5), ("alt-01", "01", 0.25), ("zeros", "0", 0.25)];
    let weighted = DetMixture {
        name: "det-weighted-3",
        class: WeightedClass::new(
            weighted_members
                .iter()
                .map(|&(name, p, w)| ClassMember::new(name, Arc::new(periodic(p)) as DynModel, w))
                .collect(),
        )
        .expect("weights sum to one"),
        generators: weighted_members
            .iter()
            .map(|&(name, p, _)| (name, periodic(p)))
            .collect(),
    };

    vec![uniform, weighted]
}

/// A named prior over Bernoulli parameters together with the reference
/// parameter its experiments condition on, and the weight that parameter
/// carries when the prior is discrete.
pub enum IidPrior {
    Dirichlet(DirichletExchangeable),
    MixedDirac(MixedDiracPrior),
    Grid(GridUniversalPrior),
}

pub struct NamedIidPrior {
    pub name: &'static str,
    pub prior: IidPrior,
    pub theta0: f64,
    /// ln(1/w(theta0)); `None` for continuous priors.
    pub ln_weight_inv: Option<f64>,
}

/// Looks up a prior for the i.i.d. experiments. `grid-stub` is the
/// default: a discrete prior whose reference point carries positive
/// weight, so the fitted constant of the instantaneous bound exists.
pub fn iid_prior_by_name(name: &str) -> Result<NamedIidPrior> {
    match name {
        "grid-stub" => {
            let grid = GridUniversalPrior::with_stub_coder(&GRID_THETAS)
                .expect("grid thetas lie in [0, 1]");
            let lw = grid
                .ln_weight_inv(0.5)
                .expect("0.5 is a support point of the shipped grid");
            Ok(NamedIidPrior {
                name: "grid-stub",
                prior: IidPrior::Grid(grid),
                theta0: 0.5,
                ln_weight_inv: Some(lw),
            })
        }
        "mixed-dirac" => Ok(NamedIidPrior {
            name: "mixed-dirac",
            prior: IidPrior::MixedDirac(MixedDiracPrior::standard()),
            theta0: 1.0,
            // The standard prior puts mass 1/2 on theta = 1.
            ln_weight_inv: Some(std::f64::consts::LN_2),
        }),
        "laplace" => Ok(NamedIidPrior {
            name: "laplace",
            prior: IidPrior::Dirichlet(DirichletExchangeable(DirichletPrior::uniform(2))),
            theta0: 0.5,
            ln_weight_inv: None,
        }),
        "jeffreys" => Ok(NamedIidPrior {
            name: "jeffreys",
            prior: IidPrior::Dirichlet(DirichletExchangeable(DirichletPrior::jeffreys(2))),
            theta0: 0.5,
            ln_weight_inv: None,
        }),
        other => Err(CliError::Config(format!(
            "unknown prior {other:?} (known: grid-stub, mixed-dirac, laplace, jeffreys)"
        ))),
    }
}

/// Looks up a loss matrix by name. `asymmetric` prices a false alarm at
/// a fifth of a miss; `abstain` adds a third action with flat cost.
pub fn loss_by_name(name: &str) -> Result<LossMatrix> {
    match name {
        "zero-one" => Ok(LossMatrix::zero_one(2)),
        "asymmetric" => Ok(LossMatrix::binary(0.0, 0.2, 1.0, 0.0)
            .expect("entries are nonnegative")),
        "abstain" => Ok(LossMatrix::from_rows(&[
            vec![0.0, 1.0, 0.3],
            vec![1.0, 0.0, 0.3],
        ])
        .expect("entries are nonnegative")),
        other => Err(CliError::Config(format!(
            "unknown loss {other:?} (known: zero-one, asymmetric, abstain)"
        ))),
    }
}

/// Every shipped loss matrix, for suites that sweep all of them.
pub fn all_losses() -> Vec<(&'static str, LossMatrix)> {
    ["zero-one", "asymmetric", "abstain"]
        .into_iter()
        .map(|name| (name, loss_by_name(name).expect("shipped names resolve")))
        .collect()
}

#[cfg(test)]
mod tests {
    use seqlab_core::model::semimeasure_audit;
    use seqlab_core::LogMass;

    use super::*;

    #[test]
    fn chain_mixtures_dominate_their_environments() {
        // xi >= w mu on every sequence up to depth 6, with w from the
        // catalog's own ln(1/w).
        for m in chain_mixtures() {
            let w = (-m.ln_weight_inv).exp();
            for len in 0..=6usize {
                for code in 0..(1u32 << len) {
                    let x = Seq::from_symbols(
                        (0..len).map(|i| ((code >> i) & 1) as u8).collect(),
                    );
                    let xi = m.xi.mass(&x).prob();
                    let mu = m.mu.mass(&x).prob();
                    assert!(
                        xi + 1e-13 >= w * mu,
                        "{}: dominance broken at {:?}: {xi} < {w} * {mu}",
                        m.name,
                        x
                    );
                }
            }
        }
    }

    #[test]
    fn chain_environments_are_measures() {
        for m in chain_mixtures() {
            let report = semimeasure_audit(m.mu.as_ref(), 5, 1 << 12).unwrap();
            assert!(report.is_measure(1e-10), "{} environment leaks", m.name);
        }
    }

    #[test]
    fn self_check_mixture_is_its_own_environment() {
        let mixtures = chain_mixtures();
        let last = mixtures.last().unwrap();
        assert_eq!(last.name, "self-check");
        assert_eq!(last.ln_weight_inv, 0.0);
        let x = Seq::parse("0110").unwrap();
        assert_eq!(last.mu.mass(&x).ln(), last.xi.mass(&x).ln());
    }

    #[test]
    fn det_generators_match_their_class_members() {
        for m in det_mixtures() {
            assert_eq!(m.class.members().len(), m.generators.len());
            for (member, (gname, generator)) in
                m.class.members().iter().zip(&m.generators)
            {
                assert_eq!(&member.name, gname);
                let alpha = generator.prefix(16);
                assert_eq!(
                    member.model.mass(&alpha),
                    LogMass::ONE,
                    "{}: member {gname} rejects its own sequence",
                    m.name
                );
            }
        }
    }

    #[test]
    fn losses_resolve_and_unknown_names_do_not() {
        assert_eq!(loss_by_name("zero-one").unwrap().actions(), 2);
        assert_eq!(loss_by_name("abstain").unwrap().actions(), 3);
        assert!(loss_by_name("hinge").is_err());
        assert!(iid_prior_by_name("improper").is_err());
        assert_eq!(all_losses().len(), 3);
    }

    #[test]
    fn grid_prior_reference_point_is_the_cheap_interior_point() {
        let named = iid_prior_by_name("grid-stub").unwrap();
        let lw = named.ln_weight_inv.unwrap();
        assert!(lw > 0.0);
        let IidPrior::Grid(grid) = &named.prior else {
            panic!("grid-stub resolves to a grid prior");
        };
        for &theta in &GRID_THETAS {
            if theta != 0.5 && theta != 0.0 && theta != 1.0 {
                assert!(
                    grid.ln_weight_inv(theta).unwrap() >= lw,
                    "interior point {theta} cheaper than 0.5"
                );
            }
        }
    }
}

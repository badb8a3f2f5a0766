//! Serializable descriptions of proposal towers.
//!
//! A `StackSpec` is what configuration files carry: a little tree like
//! "SIR with 64 particles over the prior" or "a tempered sequential
//! sampler with resimulation moves over a trained regression". Building
//! a spec resolves it against a model and observed selection (training
//! proposals that need it) and yields the boxed weight pair the
//! estimators consume.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{JointModel, TargetSelection};
use crate::proposal::regression::GaussianRegressionProposal;
use crate::proposal::sir::SirPair;
use crate::proposal::smc::{IdentityKernel, MoveKernel, ResimulationSweep, SmcPair, SmcPath};
use crate::proposal::{BasicPair, BasicProposal, PriorProposal, ProposalStack};
use crate::stream::{domain, fold_label, substream};

/// Ladder choice for sequential samplers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PathSpec {
    /// Evenly spaced geometric blends, `steps` rungs ending at 1.
    Tempered { steps: usize },
    /// One observed-site factor per rung, in model address order.
    ObservationPrefix,
}

impl PathSpec {
    fn build(&self) -> Result<SmcPath> {
        match self {
            PathSpec::Tempered { steps } => {
                if *steps == 0 {
                    return Err(Error::Config("temper steps must be at least 1".into()));
                }
                Ok(SmcPath::tempered_linear(*steps))
            }
            PathSpec::ObservationPrefix => Ok(SmcPath::ObservationPrefix),
        }
    }
}

/// Move kernel choice for sequential samplers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSpec {
    Identity,
    ResimulationSweep,
}

impl KernelSpec {
    fn build(&self) -> Box<dyn MoveKernel> {
        match self {
            KernelSpec::Identity => Box::new(IdentityKernel),
            KernelSpec::ResimulationSweep => Box::new(ResimulationSweep),
        }
    }
}

/// A proposal tower, as written in configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StackSpec {
    /// Ancestral sampling from the model's own conditionals.
    Prior,
    /// The model's exact conditional (Gaussian models only).
    ExactConditional,
    /// Per-latent linear regression trained on `train` simulations.
    Regression { train: usize },
    /// Sampling-importance-resampling over a base tower.
    Sir { particles: usize, base: Box<StackSpec> },
    /// Sequential sampler over a simple base proposal.
    Smc {
        particles: usize,
        path: PathSpec,
        kernel: KernelSpec,
        base: Box<StackSpec>,
    },
}

impl StackSpec {
    /// Convenience tower: SIR with `particles` candidates over the prior.
    pub fn sir_prior(particles: usize) -> Self {
        StackSpec::Sir {
            particles,
            base: Box::new(StackSpec::Prior),
        }
    }

    /// Convenience tower: SIR over a trained regression proposal.
    pub fn sir_regression(particles: usize, train: usize) -> Self {
        StackSpec::Sir {
            particles,
            base: Box::new(StackSpec::Regression { train }),
        }
    }

    /// Resolve the spec against a model and observed selection. `seed`
    /// feeds proposal training only; run-time draws come from the rng the
    /// estimator hands each weight call.
    pub fn build(
        &self,
        model: &dyn JointModel,
        observed: &TargetSelection,
        seed: u64,
    ) -> Result<ProposalStack> {
        Ok(match self {
            StackSpec::Prior => Box::new(BasicPair::new(PriorProposal)),
            StackSpec::ExactConditional => {
                Box::new(BasicPair::new(crate::builtin::ExactConditionalProposal))
            }
            StackSpec::Regression { train } => {
                Box::new(BasicPair::new(self.train_regression(model, observed, seed, *train)?))
            }
            StackSpec::Sir { particles, base } => {
                if *particles == 0 {
                    return Err(Error::Config("sir particles must be at least 1".into()));
                }
                Box::new(SirPair::new(base.build(model, observed, seed)?, *particles))
            }
            StackSpec::Smc { particles, path, kernel, base } => {
                if *particles == 0 {
                    return Err(Error::Config("smc particles must be at least 1".into()));
                }
                let basic = base.build_basic(model, observed, seed)?;
                Box::new(SmcPair::new(basic, kernel.build(), path.build()?, *particles))
            }
        })
    }

    fn train_regression(
        &self,
        model: &dyn JointModel,
        observed: &TargetSelection,
        seed: u64,
        train: usize,
    ) -> Result<GaussianRegressionProposal> {
        let mut rng = substream(
            seed,
            fold_label(domain::TRAIN, observed.fingerprint()),
            0,
        );
        GaussianRegressionProposal::fit(model, observed, train, &mut rng)
    }

    fn build_basic(
        &self,
        model: &dyn JointModel,
        observed: &TargetSelection,
        seed: u64,
    ) -> Result<Box<dyn BasicProposal>> {
        Ok(match self {
            StackSpec::Prior => Box::new(PriorProposal),
            StackSpec::ExactConditional => Box::new(crate::builtin::ExactConditionalProposal),
            StackSpec::Regression { train } => {
                Box::new(self.train_regression(model, observed, seed, *train)?)
            }
            StackSpec::Sir { .. } | StackSpec::Smc { .. } => {
                return Err(Error::Config(
                    "sequential samplers take a simple base proposal, not another tower".into(),
                ))
            }
        })
    }
}

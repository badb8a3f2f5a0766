//! Proposals and the paired weight oracles that drive the entropy bounds.
//!
//! Everything here estimates one quantity, the marginal density p(y) of an
//! observed assignment, from two directions:
//!
//! * `lower_weight` proposes latents and returns a log weight lw with
//!   E[exp(lw)] = p(y). By Jensen, the mean of lw sits at or below
//!   log p(y), so negated it yields the *upper* entropy bound.
//! * `upper_weight` takes latents that came from a joint draw (hence are
//!   an exact conditional sample) and returns a log weight uw with
//!   E[exp(-uw)] = 1/p(y); the mean of uw sits at or above log p(y), so
//!   negated it yields the *lower* entropy bound.
//!
//! Both weights are the same quantity — log p(x, y) + log r(v; x, y) -
//! log q(v, x; y) for a proposal q over auxiliaries v and latents x with
//! matching inference distribution r — evaluated on draws from q (lower)
//! or on conditional latents with v drawn from r (upper). Simple
//! proposals have no auxiliaries and the ratio collapses to
//! log p(x, y) - log q(x; y).
//!
//! `StackSpec` (in `stack`) is the serializable description of a proposal
//! tower; building one yields a boxed [`ProposalPair`].

pub mod regression;
pub mod sir;
pub mod smc;
pub mod stack;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::model::{Assignment, JointModel};

pub use regression::GaussianRegressionProposal;
pub use sir::SirPair;
pub use smc::{MoveKernel, SmcPair, SmcPath};
pub use stack::{KernelSpec, PathSpec, StackSpec};

/// A tractable distribution over the latent sites given observed sites:
/// can both sample and evaluate its own log density.
pub trait BasicProposal: Send + Sync {
    /// Draw latents x ~ q(. ; y); returns (x, log q(x; y)).
    fn propose(
        &self,
        model: &dyn JointModel,
        rng: &mut dyn RngCore,
        y: &Assignment,
    ) -> Result<(Assignment, f64)>;

    /// Evaluate log q(x; y) at given latents.
    fn assess(&self, model: &dyn JointModel, x: &Assignment, y: &Assignment) -> Result<f64>;

    /// Short human-readable identifier for reports.
    fn describe(&self) -> String;
}

/// The paired weight oracles; see the module notes for their contracts.
pub trait ProposalPair: Send + Sync {
    /// Propose latents for `y` and return them with a log weight whose
    /// exponential is unbiased for p(y).
    fn lower_weight(
        &self,
        model: &dyn JointModel,
        rng: &mut dyn RngCore,
        y: &Assignment,
    ) -> Result<(Assignment, f64)>;

    /// Score conditional latents `x` for `y`: returns a log weight whose
    /// negated exponential is unbiased for 1/p(y).
    fn upper_weight(
        &self,
        model: &dyn JointModel,
        rng: &mut dyn RngCore,
        x: &Assignment,
        y: &Assignment,
    ) -> Result<f64>;

    fn describe(&self) -> String;
}

/// A boxed proposal tower, as produced by [`StackSpec::build`].
pub type ProposalStack = Box<dyn ProposalPair>;

/// Ancestral sampling from the model's own conditionals with the observed
/// sites clamped — the canonical default proposal.
#[derive(Clone, Copy, Debug, Default)]
pub struct PriorProposal;

impl BasicProposal for PriorProposal {
    fn propose(
        &self,
        model: &dyn JointModel,
        rng: &mut dyn RngCore,
        y: &Assignment,
    ) -> Result<(Assignment, f64)> {
        model.simulate_latents_given(rng, y)
    }

    fn assess(&self, model: &dyn JointModel, x: &Assignment, y: &Assignment) -> Result<f64> {
        model.assess_latents_given(x, y)
    }

    fn describe(&self) -> String {
        "prior".into()
    }
}

/// Wraps a [`BasicProposal`] into a [`ProposalPair`]; the weight is the
/// plain importance ratio p(x, y) / q(x; y).
pub struct BasicPair<Q: BasicProposal> {
    q: Q,
}

impl<Q: BasicProposal> BasicPair<Q> {
    pub fn new(q: Q) -> Self {
        BasicPair { q }
    }
}

impl<Q: BasicProposal> ProposalPair for BasicPair<Q> {
    fn lower_weight(
        &self,
        model: &dyn JointModel,
        rng: &mut dyn RngCore,
        y: &Assignment,
    ) -> Result<(Assignment, f64)> {
        let (x, lq) = self.q.propose(model, rng, y)?;
        let joint = x.merge(y)?;
        let lj = model.log_joint(&joint)?;
        Ok((x, lj - lq))
    }

    fn upper_weight(
        &self,
        model: &dyn JointModel,
        _rng: &mut dyn RngCore,
        x: &Assignment,
        y: &Assignment,
    ) -> Result<f64> {
        let joint = x.merge(y)?;
        let lj = model.log_joint(&joint)?;
        if lj == f64::NEG_INFINITY {
            // The conditioning point itself has zero density; no proposal
            // can repair that.
            return Err(Error::ZeroDensityConditioningPoint);
        }
        let lq = self.q.assess(model, x, y)?;
        Ok(lj - lq)
    }

    fn describe(&self) -> String {
        self.q.describe()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::synth::two_node_net;
    use crate::builtin::MvnModel;
    use crate::model::{Address, TargetSelection, Value};
    use crate::stream::substream;

    #[test]
    fn prior_proposal_round_trips_propose_and_assess() {
        let m = MvnModel::random_correlated(4, 5);
        let sel = TargetSelection::parse(&["x2", "x4"]).unwrap();
        let mut rng = substream(1, 2, 3);
        let joint = m.simulate(&mut rng);
        let (y, _x) = joint.split(&sel).unwrap();
        let q = PriorProposal;
        let (x, lq) = q.propose(&m, &mut rng, &y).unwrap();
        let back = q.assess(&m, &x, &y).unwrap();
        assert!((lq - back).abs() < 1e-9, "{lq} vs {back}");
    }

    #[test]
    fn basic_pair_weight_is_joint_minus_proposal() {
        let net = two_node_net();
        let mut y = Assignment::new();
        y.insert(Address::new("B"), Value::Discrete(1));
        let pair = BasicPair::new(PriorProposal);
        let mut rng = substream(9, 2, 0);
        let (x, lw) = pair.lower_weight(&net, &mut rng, &y).unwrap();
        // With the prior proposal lw = log p(y | x's ancestors path) ...
        // = log p(x, y) - log p(x), here simply log p(B = 1 | A).
        let a = x.expect(&Address::new("A")).unwrap().as_discrete().unwrap();
        let expect = if a == 1 { 0.9f64.ln() } else { 0.2f64.ln() };
        assert!((lw - expect).abs() < 1e-12);
    }

    #[test]
    fn upper_weight_on_joint_draw_matches_ratio() {
        let net = two_node_net();
        let sel = TargetSelection::parse(&["B"]).unwrap();
        let mut rng = substream(4, 1, 0);
        let joint = net.simulate(&mut rng);
        let (y, x) = joint.clone().split(&sel).unwrap();
        let pair = BasicPair::new(PriorProposal);
        let uw = pair.upper_weight(&net, &mut rng, &x, &y).unwrap();
        let lj = net.log_joint(&joint).unwrap();
        let lq = PriorProposal.assess(&net, &x, &y).unwrap();
        assert!((uw - (lj - lq)).abs() < 1e-12);
    }

    #[test]
    fn zero_density_conditioning_point_is_reported() {
        let net = two_node_net();
        let mut x = Assignment::new();
        x.insert(Address::new("A"), Value::Discrete(9)); // outside support
        let mut y = Assignment::new();
        y.insert(Address::new("B"), Value::Discrete(1));
        let pair = BasicPair::new(PriorProposal);
        let mut rng = substream(4, 1, 1);
        let err = pair.upper_weight(&net, &mut rng, &x, &y).unwrap_err();
        assert!(matches!(err, Error::ZeroDensityConditioningPoint));
    }
}

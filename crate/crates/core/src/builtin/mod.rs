//! Ready-made joint models: discrete networks (with generators), a
//! multivariate normal with closed-form oracles, and a linear-Gaussian
//! state-space model with Kalman/posterior-sampling oracles.

pub mod bayesnet;
pub mod mvn;
pub mod ssm;
pub mod synth;

pub use bayesnet::DiscreteBayesNet;
pub use mvn::{gaussian_entropy, gaussian_kl, ExactConditionalProposal, MvnModel};
pub use ssm::{GainPrior, LinearGaussianSsm};
pub use synth::{
    copy_pair_net, independent_coins_net, layered_net, pinned_disease_net, two_node_net,
    xor_triple_net, LayeredNetConfig,
};

//! Sampling-importance-resampling over any weight pair.
//!
//! The lower direction draws P candidates through the base pair, keeps one
//! chosen proportionally to its weight, and reports the log-mean-exp of
//! the candidate weights; in linear space that mean is an unbiased
//! estimate of p(y) whenever the base weights are, so the construction
//! nests (SIR over SIR over a basic proposal behaves like a two-level
//! tower).
//!
//! The upper direction mirrors it conditionally: one slot is pinned to the
//! given latents and scored through the base pair's conditional path, the
//! other P-1 slots are fresh base draws, and the reported weight is again
//! the log-mean-exp over all P slots. The unconditional slots are
//! exchangeable, so the pinned slot always sits first; no placement
//! randomness is needed, and the zero-step sequential sampler consumes
//! the stream identically.

use rand::RngCore;

use crate::error::Result;
use crate::logspace::{categorical_from_log_weights, log_mean_exp};
use crate::model::{Assignment, JointModel};
use crate::proposal::ProposalPair;

/// SIR tower layer over a base weight pair.
pub struct SirPair {
    base: Box<dyn ProposalPair>,
    particles: usize,
}

impl SirPair {
    pub fn new(base: Box<dyn ProposalPair>, particles: usize) -> Self {
        assert!(particles >= 1, "need at least one candidate");
        SirPair { base, particles }
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    /// The lower-direction draw with the per-candidate weights exposed,
    /// for tests that check the reported weight against its definition.
    pub fn lower_weight_with_ratios(
        &self,
        model: &dyn JointModel,
        rng: &mut dyn RngCore,
        y: &Assignment,
    ) -> Result<(Assignment, f64, Vec<f64>)> {
        let mut candidates = Vec::with_capacity(self.particles);
        let mut ratios = Vec::with_capacity(self.particles);
        for _ in 0..self.particles {
            let (x, lw) = self.base.lower_weight(model, rng, y)?;
            candidates.push(x);
            ratios.push(lw);
        }
        let pick = categorical_from_log_weights(rng, &ratios)?;
        let lw = log_mean_exp(&ratios);
        Ok((candidates.swap_remove(pick), lw, ratios))
    }
}

impl ProposalPair for SirPair {
    fn lower_weight(
        &self,
        model: &dyn JointModel,
        rng: &mut dyn RngCore,
        y: &Assignment,
    ) -> Result<(Assignment, f64)> {
        let (x, lw, _) = self.lower_weight_with_ratios(model, rng, y)?;
        Ok((x, lw))
    }

    fn upper_weight(
        &self,
        model: &dyn JointModel,
        rng: &mut dyn RngCore,
        x: &Assignment,
        y: &Assignment,
    ) -> Result<f64> {
        let mut ratios = Vec::with_capacity(self.particles);
        ratios.push(self.base.upper_weight(model, rng, x, y)?);
        for _ in 1..self.particles {
            let (_x, lw) = self.base.lower_weight(model, rng, y)?;
            ratios.push(lw);
        }
        Ok(log_mean_exp(&ratios))
    }

    fn describe(&self) -> String {
        format!("sir(p={}, base={})", self.particles, self.base.describe())
    }
}

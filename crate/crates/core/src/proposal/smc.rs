//! Sequential samplers over a ladder of intermediate targets, and their
//! conditional counterparts.
//!
//! A run carries P particles from the base proposal to the joint density
//! through intermediate targets: either geometric blends
//! p(x, y)^beta * q0(x; y)^(1-beta) over a rising beta schedule, or the
//! prefix ladder that adds one observed-site factor at a time in model
//! address order. Between reweighting steps the particles are multinomial
//! resampled and refreshed by a target-invariant move kernel.
//!
//! Because the kernels leave each rung invariant and are built from
//! reversible per-site updates, the incremental weight at a step is just
//! the ratio of successive rungs at the ancestor — no kernel densities
//! enter. The returned log weight is the sum over steps of the
//! log-mean-exp of incremental weights; its exponential is unbiased for
//! p(y).
//!
//! The conditional direction retraces a retained trajectory backward from
//! given latents (reversing each move kernel), pins it in slot zero, runs
//! the other P-1 particles forward as usual, and reports the same
//! sum-of-log-mean-exp form; its negated exponential is unbiased for
//! 1/p(y). With zero intermediate steps both directions reduce exactly —
//! stream draw for stream draw — to sampling-importance-resampling.

use rand::Rng;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::logspace::{categorical_from_log_weights, log_mean_exp};
use crate::model::{Address, Assignment, JointModel};
use crate::proposal::{BasicProposal, ProposalPair};

/// The ladder of intermediate targets.
#[derive(Clone, Debug)]
pub enum SmcPath {
    /// Geometric blends p^beta * q0^(1-beta). `betas` lists the schedule
    /// after the initial proposal draw; strictly increasing, within
    /// (0, 1], ending at exactly 1.
    Tempered { betas: Vec<f64> },
    /// Add observed-site factors one at a time, in model address order.
    /// Requires per-site densities on the model.
    ObservationPrefix,
}

impl SmcPath {
    /// Evenly spaced schedule with `steps` rungs ending at 1.
    pub fn tempered_linear(steps: usize) -> Self {
        let steps = steps.max(1);
        SmcPath::Tempered {
            betas: (1..=steps).map(|s| s as f64 / steps as f64).collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        if let SmcPath::Tempered { betas } = self {
            if betas.is_empty() {
                return Err(Error::Config("temper schedule is empty".into()));
            }
            let mut prev = 0.0;
            for &b in betas {
                if !(b > prev && b <= 1.0) {
                    return Err(Error::Config(format!(
                        "temper schedule must rise strictly through (0, 1], got {betas:?}"
                    )));
                }
                prev = b;
            }
            if betas.last() != Some(&1.0) {
                return Err(Error::Config("temper schedule must end at 1".into()));
            }
        }
        Ok(())
    }
}

/// Blend log densities safely: handles the 0 * -inf corners explicitly.
fn blend(beta: f64, lj: f64, lq: f64) -> f64 {
    if beta == 0.0 {
        lq
    } else if beta == 1.0 {
        lj
    } else if lj == f64::NEG_INFINITY || lq == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        beta * lj + (1.0 - beta) * lq
    }
}

/// Resolved ladder for one (model, base, y) context.
struct Ladder<'a> {
    model: &'a dyn JointModel,
    base: &'a dyn BasicProposal,
    y: &'a Assignment,
    kind: LadderKind,
}

enum LadderKind {
    Tempered { betas: Vec<f64> },
    Prefix { obs: Vec<Address> },
}

impl<'a> Ladder<'a> {
    fn new(
        path: &SmcPath,
        model: &'a dyn JointModel,
        base: &'a dyn BasicProposal,
        y: &'a Assignment,
    ) -> Result<Self> {
        path.validate()?;
        let kind = match path {
            SmcPath::Tempered { betas } => LadderKind::Tempered { betas: betas.clone() },
            SmcPath::ObservationPrefix => {
                if !model.has_site_structure() {
                    return Err(Error::CapabilityMissing(
                        "the prefix ladder needs per-site densities",
                    ));
                }
                let obs: Vec<Address> = model
                    .addresses()
                    .iter()
                    .filter(|a| y.contains(a))
                    .cloned()
                    .collect();
                if obs.len() != y.len() {
                    return Err(Error::InvalidSelection(
                        "observed assignment holds addresses outside the model".into(),
                    ));
                }
                LadderKind::Prefix { obs }
            }
        };
        Ok(Ladder { model, base, y, kind })
    }

    /// Index of the last rung; rung `last` is the full joint.
    fn last(&self) -> usize {
        match &self.kind {
            LadderKind::Tempered { betas } => betas.len() - 1,
            LadderKind::Prefix { obs } => obs.len(),
        }
    }

    /// Log density of rung `s` at latents `x` (unnormalized).
    fn log_rung(&self, s: usize, x: &Assignment) -> Result<f64> {
        match &self.kind {
            LadderKind::Tempered { betas } => {
                let beta = betas[s];
                let full = x.merge(self.y)?;
                let lj = self.model.log_joint(&full)?;
                if beta == 1.0 {
                    return Ok(lj);
                }
                let lq = self.base.assess(self.model, x, self.y)?;
                Ok(blend(beta, lj, lq))
            }
            LadderKind::Prefix { obs } => {
                let full = x.merge(self.y)?;
                let mut total = self.model.assess_latents_given(x, self.y)?;
                for addr in obs.iter().take(s) {
                    if total == f64::NEG_INFINITY {
                        return Ok(total);
                    }
                    total += self.model.site_log_density(addr, &full)?;
                }
                Ok(total)
            }
        }
    }
}

/// A move that leaves a given (unnormalized) target invariant, with a
/// time reversal for conditional runs.
pub trait MoveKernel: Send + Sync {
    fn forward(
        &self,
        model: &dyn JointModel,
        rng: &mut dyn RngCore,
        log_target: &dyn Fn(&Assignment) -> Result<f64>,
        particle: &mut Assignment,
        y: &Assignment,
    ) -> Result<()>;

    /// The reversal of `forward` with respect to the same target. The
    /// default refuses, for kernels with no tractable reversal.
    fn backward(
        &self,
        _model: &dyn JointModel,
        _rng: &mut dyn RngCore,
        _log_target: &dyn Fn(&Assignment) -> Result<f64>,
        _particle: &mut Assignment,
        _y: &Assignment,
    ) -> Result<()> {
        Err(Error::BackwardKernelUnavailable { step: 0 })
    }

    fn describe(&self) -> String;
}

/// Leaves particles untouched (valid for any target, trivially its own
/// reversal). Useful to isolate reweighting behavior.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityKernel;

impl MoveKernel for IdentityKernel {
    fn forward(
        &self,
        _model: &dyn JointModel,
        _rng: &mut dyn RngCore,
        _log_target: &dyn Fn(&Assignment) -> Result<f64>,
        _particle: &mut Assignment,
        _y: &Assignment,
    ) -> Result<()> {
        Ok(())
    }

    fn backward(
        &self,
        _model: &dyn JointModel,
        _rng: &mut dyn RngCore,
        _log_target: &dyn Fn(&Assignment) -> Result<f64>,
        _particle: &mut Assignment,
        _y: &Assignment,
    ) -> Result<()> {
        Ok(())
    }

    fn describe(&self) -> String {
        "identity".into()
    }
}

/// One Metropolis-Hastings sweep over the latent sites in model order,
/// proposing each site from the model's own conditional given its
/// parents. Each per-site update is reversible for the target, so the
/// reversal of the sweep is the same sweep in the opposite site order.
#[derive(Clone, Copy, Debug, Default)]
pub struct ResimulationSweep;

impl ResimulationSweep {
    fn sweep(
        &self,
        model: &dyn JointModel,
        rng: &mut dyn RngCore,
        log_target: &dyn Fn(&Assignment) -> Result<f64>,
        particle: &mut Assignment,
        y: &Assignment,
        reverse: bool,
    ) -> Result<()> {
        if !model.has_site_structure() {
            return Err(Error::CapabilityMissing(
                "resimulation moves need per-site conditionals",
            ));
        }
        let mut order: Vec<Address> = model
            .addresses()
            .iter()
            .filter(|a| particle.contains(a))
            .cloned()
            .collect();
        if reverse {
            order.reverse();
        }
        for addr in &order {
            let full = particle.merge(y)?;
            let (new_value, lq_new) = model.site_resimulate(rng, addr, &full)?;
            let lq_old = model.site_log_density(addr, &full)?;
            let t_old = log_target(particle)?;
            let old_value = particle
                .insert(addr.clone(), new_value)
                .expect("site was present");
            let t_new = log_target(particle)?;
            let log_alpha = if t_new == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else if t_old == f64::NEG_INFINITY {
                f64::INFINITY
            } else {
                (t_new - lq_new) - (t_old - lq_old)
            };
            let u: f64 = rng.gen::<f64>();
            if !(u.ln() < log_alpha) {
                particle.insert(addr.clone(), old_value);
            }
        }
        Ok(())
    }
}

impl MoveKernel for ResimulationSweep {
    fn forward(
        &self,
        model: &dyn JointModel,
        rng: &mut dyn RngCore,
        log_target: &dyn Fn(&Assignment) -> Result<f64>,
        particle: &mut Assignment,
        y: &Assignment,
    ) -> Result<()> {
        self.sweep(model, rng, log_target, particle, y, false)
    }

    fn backward(
        &self,
        model: &dyn JointModel,
        rng: &mut dyn RngCore,
        log_target: &dyn Fn(&Assignment) -> Result<f64>,
        particle: &mut Assignment,
        y: &Assignment,
    ) -> Result<()> {
        self.sweep(model, rng, log_target, particle, y, true)
    }

    fn describe(&self) -> String {
        "resimulation-sweep".into()
    }
}

/// Sequential-sampler weight pair; see the module notes.
pub struct SmcPair {
    base: Box<dyn BasicProposal>,
    kernel: Box<dyn MoveKernel>,
    path: SmcPath,
    particles: usize,
}

impl SmcPair {
    pub fn new(
        base: Box<dyn BasicProposal>,
        kernel: Box<dyn MoveKernel>,
        path: SmcPath,
        particles: usize,
    ) -> Self {
        assert!(particles >= 1, "need at least one particle");
        SmcPair { base, kernel, path, particles }
    }
}

impl ProposalPair for SmcPair {
    fn lower_weight(
        &self,
        model: &dyn JointModel,
        rng: &mut dyn RngCore,
        y: &Assignment,
    ) -> Result<(Assignment, f64)> {
        let ladder = Ladder::new(&self.path, model, self.base.as_ref(), y)?;
        let last = ladder.last();
        let p = self.particles;
        let mut particles = Vec::with_capacity(p);
        let mut weights = Vec::with_capacity(p);
        for _ in 0..p {
            let (x, lq) = self.base.propose(model, rng, y)?;
            let u0 = ladder.log_rung(0, &x)? - lq;
            particles.push(x);
            weights.push(u0);
        }
        let mut acc = log_mean_exp(&weights);
        for s in 1..=last {
            if acc == f64::NEG_INFINITY {
                return Ok((particles.swap_remove(0), acc));
            }
            // Multinomial resample against the current weights, then move
            // under the rung the particles currently represent.
            let mut next = Vec::with_capacity(p);
            for _ in 0..p {
                let a = categorical_from_log_weights(rng, &weights)
                    .map_err(|_| Error::ParticleCollapse { step: s })?;
                next.push(particles[a].clone());
            }
            let target = |x: &Assignment| ladder.log_rung(s - 1, x);
            for x in next.iter_mut() {
                self.kernel.forward(model, rng, &target, x, y)?;
            }
            particles = next;
            for (k, x) in particles.iter().enumerate() {
                weights[k] = ladder.log_rung(s, x)? - ladder.log_rung(s - 1, x)?;
            }
            acc += log_mean_exp(&weights);
        }
        if acc == f64::NEG_INFINITY {
            return Ok((particles.swap_remove(0), acc));
        }
        let pick = categorical_from_log_weights(rng, &weights)
            .map_err(|_| Error::ParticleCollapse { step: last })?;
        Ok((particles.swap_remove(pick), acc))
    }

    fn upper_weight(
        &self,
        model: &dyn JointModel,
        rng: &mut dyn RngCore,
        x: &Assignment,
        y: &Assignment,
    ) -> Result<f64> {
        let ladder = Ladder::new(&self.path, model, self.base.as_ref(), y)?;
        let last = ladder.last();
        let p = self.particles;
        // Retrace the retained trajectory: retained[s] enters weighting
        // step s, so walking back from the given latents reverses each
        // move kernel under the rung it targeted.
        let mut retained = vec![x.clone(); last + 1];
        for s in (1..=last).rev() {
            let mut z = retained[s].clone();
            let target = |q: &Assignment| ladder.log_rung(s - 1, q);
            self.kernel
                .backward(model, rng, &target, &mut z, y)
                .map_err(|e| match e {
                    Error::BackwardKernelUnavailable { .. } => {
                        Error::BackwardKernelUnavailable { step: s }
                    }
                    other => other,
                })?;
            retained[s - 1] = z;
        }
        // Conditional forward pass with the retained path pinned at slot 0.
        let mut particles = Vec::with_capacity(p);
        let mut weights = Vec::with_capacity(p);
        let lq0 = self.base.assess(model, &retained[0], y)?;
        particles.push(retained[0].clone());
        weights.push(ladder.log_rung(0, &retained[0])? - lq0);
        for _ in 1..p {
            let (xq, lq) = self.base.propose(model, rng, y)?;
            let u0 = ladder.log_rung(0, &xq)? - lq;
            particles.push(xq);
            weights.push(u0);
        }
        let mut acc = log_mean_exp(&weights);
        for s in 1..=last {
            let mut next = Vec::with_capacity(p);
            next.push(retained[s].clone());
            let target = |q: &Assignment| ladder.log_rung(s - 1, q);
            for _ in 1..p {
                let a = categorical_from_log_weights(rng, &weights)
                    .map_err(|_| Error::ParticleCollapse { step: s })?;
                let mut z = particles[a].clone();
                self.kernel.forward(model, rng, &target, &mut z, y)?;
                next.push(z);
            }
            particles = next;
            for (k, q) in particles.iter().enumerate() {
                weights[k] = ladder.log_rung(s, q)? - ladder.log_rung(s - 1, q)?;
            }
            acc += log_mean_exp(&weights);
        }
        Ok(acc)
    }

    fn describe(&self) -> String {
        let path = match &self.path {
            SmcPath::Tempered { betas } => format!("tempered[{}]", betas.len()),
            SmcPath::ObservationPrefix => "prefix".into(),
        };
        format!(
            "smc(p={}, path={}, kernel={}, base={})",
            self.particles,
            path,
            self.kernel.describe(),
            self.base.describe()
        )
    }
}

//! Interval estimators for the entropy of a selected subset of sites.
//!
//! For a strict-subset selection Y the two sides run the importance
//! machinery in opposite directions:
//!
//! * upper side: draw Y from the joint, then average -lw over fresh
//!   proposal draws; E[exp(lw)] = p(y) makes the mean an upper bound on
//!   H(Y) in expectation.
//! * lower side: reuse the latents that came with the same joint draw (an
//!   exact conditional sample), score them through the conditional path,
//!   and average -uw; E[exp(-uw)] = 1/p(y) makes the mean a lower bound.
//!
//! A full selection needs no inference: both sides collapse to the exact
//! plug-in average of -log p(x, y) over joint draws, and the interval
//! width is exactly zero.
//!
//! Each replicate derives its own named random substream, replicates are
//! reduced with a fixed-shape pairwise tree, and the parallel path
//! collects replicates in index order — so results are bit-identical for
//! a given seed no matter how many workers run.

pub mod diagnostics;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::logspace::{pairwise_mean, sample_variance};
use crate::model::{Assignment, JointModel, TargetSelection};
use crate::proposal::smc::{MoveKernel, ResimulationSweep};
use crate::proposal::{ProposalPair, StackSpec};
use crate::stream::{domain, substream};

/// Replicate layout and seeding for one estimation run.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    /// Outer replicates (independent joint draws).
    pub replicates: usize,
    /// Weight terms per replicate and side.
    pub inner: usize,
    /// Resimulation sweeps between consecutive lower-side terms of one
    /// replicate. With zero sweeps and `inner > 1` the same conditional
    /// latents are rescored every term (documented, cheaper, still valid;
    /// the terms are just correlated).
    pub refresh_moves: usize,
    pub seed: u64,
    /// Spread replicates across threads. Results are identical either way.
    pub parallel: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            replicates: 128,
            inner: 1,
            refresh_moves: 1,
            seed: 0,
            parallel: true,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("need at least one replicate".into()));
        }
        if self.inner == 0 {
            return Err(Error::Config("need at least one term per replicate".into()));
        }
        Ok(())
    }
}

/// Which side of the sandwich a bound estimate sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Lower,
    Upper,
}

/// One side of an interval: the averaged terms plus enough structure to
/// audit them.
#[derive(Clone, Debug)]
pub struct BoundEstimate {
    pub kind: BoundKind,
    /// Mean of every term (equals the mean of replicate means).
    pub point: f64,
    /// Standard error of the replicate means.
    pub std_error: f64,
    /// Per-replicate term averages, replicate order.
    pub replicate_means: Vec<f64>,
    /// All terms, replicate-major.
    pub terms: Vec<f64>,
    /// Number of non-finite terms (kept in the averages; a zero-weight
    /// draw honestly pushes its side toward the conservative infinity).
    pub invalid: usize,
    pub replicates: usize,
    pub inner: usize,
}

impl BoundEstimate {
    /// Assemble the summary statistics from replicate-major terms.
    pub fn from_terms(kind: BoundKind, terms: Vec<f64>, replicates: usize, inner: usize) -> Self {
        debug_assert_eq!(terms.len(), replicates * inner);
        let replicate_means: Vec<f64> = (0..replicates)
            .map(|i| pairwise_mean(&terms[i * inner..(i + 1) * inner]))
            .collect();
        let point = pairwise_mean(&replicate_means);
        let std_error = if replicates > 1 {
            (sample_variance(&replicate_means) / replicates as f64).sqrt()
        } else {
            f64::INFINITY
        };
        let invalid = terms.iter().filter(|t| !t.is_finite()).count();
        BoundEstimate {
            kind,
            point,
            std_error,
            replicate_means,
            terms,
            invalid,
            replicates,
            inner,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.invalid == 0 && self.point.is_finite()
    }
}

/// A paired lower/upper estimate of one entropy.
#[derive(Clone, Debug)]
pub struct IntervalEstimate {
    pub lower: BoundEstimate,
    pub upper: BoundEstimate,
}

impl IntervalEstimate {
    pub fn width(&self) -> f64 {
        self.upper.point - self.lower.point
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.upper.point + self.lower.point)
    }

    /// Point-estimate containment (no stderr slack).
    pub fn contains(&self, value: f64) -> bool {
        self.lower.point <= value && value <= self.upper.point
    }

    /// Containment with `sigmas` standard errors of slack on each side.
    pub fn contains_within(&self, value: f64, sigmas: f64) -> bool {
        self.lower.point - sigmas * self.lower.std_error <= value
            && value <= self.upper.point + sigmas * self.upper.std_error
    }

    pub fn is_valid(&self) -> bool {
        self.lower.is_valid() && self.upper.is_valid()
    }
}

/// Refresh conditional latents with `sweeps` resimulation sweeps that
/// leave the conditional distribution given `y` invariant.
pub fn refresh_latents(
    model: &dyn JointModel,
    rng: &mut dyn rand::RngCore,
    x: &mut Assignment,
    y: &Assignment,
    sweeps: usize,
) -> Result<()> {
    if sweeps == 0 {
        return Ok(());
    }
    let target = |latents: &Assignment| {
        let full = latents.merge(y)?;
        model.log_joint(&full)
    };
    let kernel = ResimulationSweep;
    for _ in 0..sweeps {
        kernel.forward(model, rng, &target, x, y)?;
    }
    Ok(())
}

/// The stream domains one bound run draws from. Single-entropy runs use
/// the crate defaults; composed measures give every term its own weight
/// domains and either share or fork the outer domain.
#[derive(Clone, Copy, Debug)]
pub(crate) struct DomainPlan {
    pub outer: u64,
    pub upper: u64,
    pub lower: u64,
}

impl Default for DomainPlan {
    fn default() -> Self {
        DomainPlan {
            outer: domain::OUTER,
            upper: domain::UPPER,
            lower: domain::LOWER,
        }
    }
}

fn upper_terms_for_replicate(
    model: &dyn JointModel,
    pair: &dyn ProposalPair,
    cfg: &EstimatorConfig,
    plan: DomainPlan,
    i: usize,
    y: &Assignment,
) -> Result<Vec<f64>> {
    let mut rng = substream(cfg.seed, plan.upper, i as u64);
    let mut terms = Vec::with_capacity(cfg.inner);
    for _ in 0..cfg.inner {
        let (_x, lw) = pair.lower_weight(model, &mut rng, y)?;
        terms.push(-lw);
    }
    Ok(terms)
}

fn lower_terms_for_replicate(
    model: &dyn JointModel,
    pair: &dyn ProposalPair,
    cfg: &EstimatorConfig,
    plan: DomainPlan,
    i: usize,
    x0: Assignment,
    y: &Assignment,
) -> Result<Vec<f64>> {
    let mut rng = substream(cfg.seed, plan.lower, i as u64);
    let mut x = x0;
    let mut terms = Vec::with_capacity(cfg.inner);
    for j in 0..cfg.inner {
        if j > 0 {
            refresh_latents(model, &mut rng, &mut x, y, cfg.refresh_moves)?;
        }
        let uw = pair.upper_weight(model, &mut rng, &x, y)?;
        terms.push(-uw);
    }
    Ok(terms)
}

/// Outer joint draw for replicate `i`, split into (observed, latents).
fn outer_draw(
    model: &dyn JointModel,
    sel: &TargetSelection,
    cfg: &EstimatorConfig,
    plan: DomainPlan,
    i: usize,
) -> Result<(Assignment, Assignment)> {
    let mut rng = substream(cfg.seed, plan.outer, i as u64);
    let joint = model.simulate(&mut rng);
    joint.split(sel)
}

fn run_replicates<T: Send>(
    cfg: &EstimatorConfig,
    work: impl Fn(usize) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    if cfg.parallel {
        (0..cfg.replicates)
            .into_par_iter()
            .map(|i| work(i))
            .collect()
    } else {
        (0..cfg.replicates).map(work).collect()
    }
}

/// Plug-in terms for a full selection: -log p of fresh joint draws.
fn plugin_terms(
    model: &dyn JointModel,
    cfg: &EstimatorConfig,
    plan: DomainPlan,
) -> Result<Vec<f64>> {
    let per: Vec<Vec<f64>> = run_replicates(cfg, |i| {
        let mut rng = substream(cfg.seed, plan.outer, i as u64);
        let mut terms = Vec::with_capacity(cfg.inner);
        for _ in 0..cfg.inner {
            let joint = model.simulate(&mut rng);
            terms.push(-model.log_joint(&joint)?);
        }
        Ok(terms)
    })?;
    Ok(per.into_iter().flatten().collect())
}

/// Full interval on explicit stream domains; the engine under both the
/// public single-entropy entry points and the composed-measure runner.
pub(crate) fn interval_with_plan(
    model: &dyn JointModel,
    sel: &TargetSelection,
    pair: &dyn ProposalPair,
    cfg: &EstimatorConfig,
    plan: DomainPlan,
) -> Result<IntervalEstimate> {
    cfg.validate()?;
    sel.validate(model)?;
    if sel.is_full(model) {
        let terms = plugin_terms(model, cfg, plan)?;
        let lower =
            BoundEstimate::from_terms(BoundKind::Lower, terms.clone(), cfg.replicates, cfg.inner);
        let upper = BoundEstimate::from_terms(BoundKind::Upper, terms, cfg.replicates, cfg.inner);
        return Ok(IntervalEstimate { lower, upper });
    }
    let per: Vec<(Vec<f64>, Vec<f64>)> = run_replicates(cfg, |i| {
        let (y, x) = outer_draw(model, sel, cfg, plan, i)?;
        let up = upper_terms_for_replicate(model, pair, cfg, plan, i, &y)?;
        let lo = lower_terms_for_replicate(model, pair, cfg, plan, i, x, &y)?;
        Ok((up, lo))
    })?;
    let mut upper_terms = Vec::with_capacity(cfg.replicates * cfg.inner);
    let mut lower_terms = Vec::with_capacity(cfg.replicates * cfg.inner);
    for (up, lo) in per {
        upper_terms.extend(up);
        lower_terms.extend(lo);
    }
    Ok(IntervalEstimate {
        lower: BoundEstimate::from_terms(BoundKind::Lower, lower_terms, cfg.replicates, cfg.inner),
        upper: BoundEstimate::from_terms(BoundKind::Upper, upper_terms, cfg.replicates, cfg.inner),
    })
}

/// Both bounds at once, sharing each replicate's outer draw.
pub fn entropy_interval_with(
    model: &dyn JointModel,
    sel: &TargetSelection,
    pair: &dyn ProposalPair,
    cfg: &EstimatorConfig,
) -> Result<IntervalEstimate> {
    interval_with_plan(model, sel, pair, cfg, DomainPlan::default())
}

/// Upper bound only (skips the conditional side).
pub fn entropy_upper_with(
    model: &dyn JointModel,
    sel: &TargetSelection,
    pair: &dyn ProposalPair,
    cfg: &EstimatorConfig,
) -> Result<BoundEstimate> {
    cfg.validate()?;
    sel.validate(model)?;
    let plan = DomainPlan::default();
    if sel.is_full(model) {
        let terms = plugin_terms(model, cfg, plan)?;
        return Ok(BoundEstimate::from_terms(
            BoundKind::Upper,
            terms,
            cfg.replicates,
            cfg.inner,
        ));
    }
    let per: Vec<Vec<f64>> = run_replicates(cfg, |i| {
        let (y, _x) = outer_draw(model, sel, cfg, plan, i)?;
        upper_terms_for_replicate(model, pair, cfg, plan, i, &y)
    })?;
    let terms: Vec<f64> = per.into_iter().flatten().collect();
    Ok(BoundEstimate::from_terms(
        BoundKind::Upper,
        terms,
        cfg.replicates,
        cfg.inner,
    ))
}

/// Lower bound only (skips the fresh-proposal side).
pub fn entropy_lower_with(
    model: &dyn JointModel,
    sel: &TargetSelection,
    pair: &dyn ProposalPair,
    cfg: &EstimatorConfig,
) -> Result<BoundEstimate> {
    cfg.validate()?;
    sel.validate(model)?;
    let plan = DomainPlan::default();
    if sel.is_full(model) {
        let terms = plugin_terms(model, cfg, plan)?;
        return Ok(BoundEstimate::from_terms(
            BoundKind::Lower,
            terms,
            cfg.replicates,
            cfg.inner,
        ));
    }
    let per: Vec<Vec<f64>> = run_replicates(cfg, |i| {
        let (y, x) = outer_draw(model, sel, cfg, plan, i)?;
        lower_terms_for_replicate(model, pair, cfg, plan, i, x, &y)
    })?;
    let terms: Vec<f64> = per.into_iter().flatten().collect();
    Ok(BoundEstimate::from_terms(
        BoundKind::Lower,
        terms,
        cfg.replicates,
        cfg.inner,
    ))
}

/// Build the proposal tower from its spec, then run both bounds.
pub fn entropy_interval(
    model: &dyn JointModel,
    sel: &TargetSelection,
    spec: &StackSpec,
    cfg: &EstimatorConfig,
) -> Result<IntervalEstimate> {
    cfg.validate()?;
    sel.validate(model)?;
    if sel.is_full(model) {
        // No proposal needed; avoid building (and training) one.
        let terms = plugin_terms(model, cfg, DomainPlan::default())?;
        let lower =
            BoundEstimate::from_terms(BoundKind::Lower, terms.clone(), cfg.replicates, cfg.inner);
        let upper = BoundEstimate::from_terms(BoundKind::Upper, terms, cfg.replicates, cfg.inner);
        return Ok(IntervalEstimate { lower, upper });
    }
    let pair = spec.build(model, sel, cfg.seed)?;
    entropy_interval_with(model, sel, pair.as_ref(), cfg)
}

/// Spec-building variant of [`entropy_upper_with`].
pub fn entropy_upper(
    model: &dyn JointModel,
    sel: &TargetSelection,
    spec: &StackSpec,
    cfg: &EstimatorConfig,
) -> Result<BoundEstimate> {
    sel.validate(model)?;
    if sel.is_full(model) {
        return entropy_upper_with(model, sel, &NoPair, cfg);
    }
    let pair = spec.build(model, sel, cfg.seed)?;
    entropy_upper_with(model, sel, pair.as_ref(), cfg)
}

/// Spec-building variant of [`entropy_lower_with`].
pub fn entropy_lower(
    model: &dyn JointModel,
    sel: &TargetSelection,
    spec: &StackSpec,
    cfg: &EstimatorConfig,
) -> Result<BoundEstimate> {
    sel.validate(model)?;
    if sel.is_full(model) {
        return entropy_lower_with(model, sel, &NoPair, cfg);
    }
    let pair = spec.build(model, sel, cfg.seed)?;
    entropy_lower_with(model, sel, pair.as_ref(), cfg)
}

/// Placeholder pair for code paths that provably never call it (full
/// selections short-circuit to the plug-in average).
pub(crate) struct NoPair;

impl ProposalPair for NoPair {
    fn lower_weight(
        &self,
        _model: &dyn JointModel,
        _rng: &mut dyn rand::RngCore,
        _y: &Assignment,
    ) -> Result<(Assignment, f64)> {
        unreachable!("full selections never reach the proposal")
    }

    fn upper_weight(
        &self,
        _model: &dyn JointModel,
        _rng: &mut dyn rand::RngCore,
        _x: &Assignment,
        _y: &Assignment,
    ) -> Result<f64> {
        unreachable!("full selections never reach the proposal")
    }

    fn describe(&self) -> String {
        "plug-in".into()
    }
}

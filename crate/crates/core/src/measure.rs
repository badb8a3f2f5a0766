//! Interval estimates for entropy-derived dependence measures.
//!
//! Every measure here is a signed sum of subset entropies. Writing the
//! measure as sum_t c_t * H(S_t), a lower bound takes each positive-
//! coefficient term at its entropy lower bound and each negative term at
//! its upper bound; the upper bound flips the choice. Because each
//! entropy bound holds in expectation, so do the composed bounds.
//!
//! Terms can share their outer joint draws ([`SharingMode::SharedOuter`]):
//! replicate i of every term then sees the same simulated world, the
//! errors of overlapping terms correlate positively, and the differences
//! that make up the measure get cheaper — often much cheaper — without
//! changing any expectation. The interval endpoints are assembled per
//! replicate before averaging, so the reported standard errors honestly
//! reflect whatever correlation the sharing induced.

use crate::enumerate::Enumeration;
use crate::error::{Error, Result};
use crate::estimate::{
    interval_with_plan, BoundKind, DomainPlan, EstimatorConfig, IntervalEstimate, NoPair,
};
use crate::logspace::{pairwise_mean, sample_variance};
use crate::model::{JointModel, TargetSelection};
use crate::proposal::StackSpec;
use crate::stream::{domain, fold_label};

/// The dependence measures expressible as signed entropy sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    /// H(A): one group, no conditioning.
    Entropy,
    /// H(A | C) = H(A u C) - H(C).
    ConditionalEntropy,
    /// I(A; B | C); with empty conditioning, plain mutual information.
    ConditionalMutualInformation,
    /// sum_i H(A_i | C) - H(A_1..A_k | C): total correlation.
    TotalCorrelation,
    /// Co-information: alternating-sign sum over all nonempty group
    /// subsets. Positive for redundant interaction, negative for
    /// synergistic (three fair bits with C = A xor B give -ln 2).
    InteractionInformation,
    /// H(A_1..A_k | C) - sum_i H(A_i | rest, C): dual total correlation.
    DualTotalCorrelation,
}

impl MeasureKind {
    pub fn name(&self) -> &'static str {
        match self {
            MeasureKind::Entropy => "entropy",
            MeasureKind::ConditionalEntropy => "conditional_entropy",
            MeasureKind::ConditionalMutualInformation => "conditional_mutual_information",
            MeasureKind::TotalCorrelation => "total_correlation",
            MeasureKind::InteractionInformation => "interaction_information",
            MeasureKind::DualTotalCorrelation => "dual_total_correlation",
        }
    }
}

/// How a composed measure's terms source their outer joint draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SharingMode {
    /// Replicate i of every term reuses one joint draw. Expectations are
    /// unchanged; differences of overlapping terms lose variance.
    SharedOuter,
    /// Every term draws its own outer replicates.
    Independent,
}

/// A measure applied to concrete variable groups.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureQuery {
    pub kind: MeasureKind,
    /// The related groups (one for entropy/conditional entropy, two for
    /// mutual information, two or more for the multivariate measures).
    pub groups: Vec<TargetSelection>,
    /// Optional conditioning set, disjoint from every group.
    pub conditioning: Option<TargetSelection>,
}

impl MeasureQuery {
    pub fn entropy(target: TargetSelection) -> Self {
        MeasureQuery {
            kind: MeasureKind::Entropy,
            groups: vec![target],
            conditioning: None,
        }
    }

    pub fn conditional_entropy(target: TargetSelection, given: TargetSelection) -> Self {
        MeasureQuery {
            kind: MeasureKind::ConditionalEntropy,
            groups: vec![target],
            conditioning: Some(given),
        }
    }

    pub fn mutual_information(a: TargetSelection, b: TargetSelection) -> Self {
        MeasureQuery {
            kind: MeasureKind::ConditionalMutualInformation,
            groups: vec![a, b],
            conditioning: None,
        }
    }

    pub fn conditional_mutual_information(
        a: TargetSelection,
        b: TargetSelection,
        given: TargetSelection,
    ) -> Self {
        MeasureQuery {
            kind: MeasureKind::ConditionalMutualInformation,
            groups: vec![a, b],
            conditioning: Some(given),
        }
    }

    pub fn total_correlation(
        groups: Vec<TargetSelection>,
        given: Option<TargetSelection>,
    ) -> Self {
        MeasureQuery {
            kind: MeasureKind::TotalCorrelation,
            groups,
            conditioning: given,
        }
    }

    pub fn interaction_information(
        groups: Vec<TargetSelection>,
        given: Option<TargetSelection>,
    ) -> Self {
        MeasureQuery {
            kind: MeasureKind::InteractionInformation,
            groups,
            conditioning: given,
        }
    }

    pub fn dual_total_correlation(
        groups: Vec<TargetSelection>,
        given: Option<TargetSelection>,
    ) -> Self {
        MeasureQuery {
            kind: MeasureKind::DualTotalCorrelation,
            groups,
            conditioning: given,
        }
    }

    /// Check group counts, disjointness, and address existence.
    pub fn validate(&self, model: &dyn JointModel) -> Result<()> {
        let (min, max) = match self.kind {
            MeasureKind::Entropy | MeasureKind::ConditionalEntropy => (1, 1),
            MeasureKind::ConditionalMutualInformation => (2, 2),
            MeasureKind::InteractionInformation => (2, 10),
            MeasureKind::TotalCorrelation | MeasureKind::DualTotalCorrelation => (2, usize::MAX),
        };
        if self.groups.len() < min || self.groups.len() > max {
            return Err(Error::InvalidSelection(format!(
                "{} takes between {min} and {max} groups, got {}",
                self.kind.name(),
                self.groups.len()
            )));
        }
        if self.kind == MeasureKind::Entropy && self.conditioning.is_some() {
            return Err(Error::InvalidSelection(
                "entropy takes no conditioning set; use conditional entropy".into(),
            ));
        }
        for g in &self.groups {
            g.validate(model)?;
        }
        if let Some(c) = &self.conditioning {
            c.validate(model)?;
        }
        let mut seen = std::collections::BTreeSet::new();
        let all = self
            .groups
            .iter()
            .chain(self.conditioning.iter())
            .flat_map(|g| g.addresses());
        for a in all {
            if !seen.insert(a.clone()) {
                return Err(Error::InvalidSelection(format!(
                    "address {a} appears in more than one group"
                )));
            }
        }
        Ok(())
    }

    /// Expand into the signed entropy sum.
    pub fn plan(&self) -> Result<CompositionPlan> {
        let cond: Option<&TargetSelection> = self.conditioning.as_ref();
        let with_cond = |sel: TargetSelection| -> Result<TargetSelection> {
            match cond {
                Some(c) => sel.union(c.addresses()),
                None => Ok(sel),
            }
        };
        let union_of = |idxs: &[usize]| -> Result<TargetSelection> {
            let mut sel = self.groups[idxs[0]].clone();
            for &i in &idxs[1..] {
                sel = sel.union(self.groups[i].addresses())?;
            }
            with_cond(sel)
        };
        let k = self.groups.len();
        let all_idx: Vec<usize> = (0..k).collect();
        let mut raw: Vec<(i32, TargetSelection)> = Vec::new();
        match self.kind {
            MeasureKind::Entropy => {
                raw.push((1, self.groups[0].clone()));
            }
            MeasureKind::ConditionalEntropy => {
                raw.push((1, union_of(&[0])?));
                if let Some(c) = cond {
                    raw.push((-1, c.clone()));
                }
            }
            MeasureKind::ConditionalMutualInformation => {
                raw.push((1, union_of(&[0])?));
                raw.push((1, union_of(&[1])?));
                raw.push((-1, union_of(&[0, 1])?));
                if let Some(c) = cond {
                    raw.push((-1, c.clone()));
                }
            }
            MeasureKind::TotalCorrelation => {
                for i in 0..k {
                    raw.push((1, union_of(&[i])?));
                }
                raw.push((-1, union_of(&all_idx)?));
                if let Some(c) = cond {
                    raw.push((-((k as i32) - 1), c.clone()));
                }
            }
            MeasureKind::InteractionInformation => {
                // Alternating signs over every nonempty subset of groups;
                // conditioning joins every union and contributes the
                // subset-size-zero term -H(C).
                for mask in 1u32..(1u32 << k) {
                    let idxs: Vec<usize> =
                        (0..k).filter(|i| mask & (1 << i) != 0).collect();
                    let sign = if idxs.len() % 2 == 1 { 1 } else { -1 };
                    raw.push((sign, union_of(&idxs)?));
                }
                if let Some(c) = cond {
                    raw.push((-1, c.clone()));
                }
            }
            MeasureKind::DualTotalCorrelation => {
                raw.push((1 - k as i32, union_of(&all_idx)?));
                for i in 0..k {
                    let rest: Vec<usize> = (0..k).filter(|&j| j != i).collect();
                    raw.push((1, union_of(&rest)?));
                }
                if let Some(c) = cond {
                    raw.push((-1, c.clone()));
                }
            }
        }
        Ok(CompositionPlan::from_raw(raw))
    }

    /// Human-readable form, e.g. `I({A}; {B} | {C})`.
    pub fn describe(&self) -> String {
        let fmt_sel = |s: &TargetSelection| {
            let names: Vec<String> = s.addresses().iter().map(|a| a.to_string()).collect();
            format!("{{{}}}", names.join(","))
        };
        let groups: Vec<String> = self.groups.iter().map(&fmt_sel).collect();
        let cond = self
            .conditioning
            .as_ref()
            .map(|c| format!(" | {}", fmt_sel(c)))
            .unwrap_or_default();
        match self.kind {
            MeasureKind::Entropy => format!("H({})", groups[0]),
            MeasureKind::ConditionalEntropy => format!("H({}{cond})", groups[0]),
            MeasureKind::ConditionalMutualInformation => {
                format!("I({}; {}{cond})", groups[0], groups[1])
            }
            MeasureKind::TotalCorrelation => format!("TC({}{cond})", groups.join(", ")),
            MeasureKind::InteractionInformation => format!("CoI({}{cond})", groups.join("; ")),
            MeasureKind::DualTotalCorrelation => format!("DTC({}{cond})", groups.join(", ")),
        }
    }
}

/// One signed entropy term of an expanded measure.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanTerm {
    pub coeff: i32,
    pub selection: TargetSelection,
}

/// A measure written out as sum_t coeff_t * H(selection_t): like terms
/// merged, zero coefficients dropped, first-appearance order kept.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositionPlan {
    pub terms: Vec<PlanTerm>,
}

impl CompositionPlan {
    fn from_raw(raw: Vec<(i32, TargetSelection)>) -> Self {
        let mut terms: Vec<PlanTerm> = Vec::new();
        let mut keys: Vec<Vec<String>> = Vec::new();
        for (coeff, selection) in raw {
            let mut key: Vec<String> =
                selection.addresses().iter().map(|a| a.to_string()).collect();
            key.sort();
            if let Some(pos) = keys.iter().position(|k| *k == key) {
                terms[pos].coeff += coeff;
            } else {
                keys.push(key);
                terms.push(PlanTerm { coeff, selection });
            }
        }
        let mut kept = Vec::new();
        for (term, _) in terms.into_iter().zip(keys) {
            if term.coeff != 0 {
                kept.push(term);
            }
        }
        CompositionPlan { terms: kept }
    }

    /// Evaluate the plan against exact subset entropies.
    pub fn evaluate(&self, entropy_of: impl Fn(&TargetSelection) -> Result<f64>) -> Result<f64> {
        let mut total = 0.0;
        for t in &self.terms {
            total += t.coeff as f64 * entropy_of(&t.selection)?;
        }
        Ok(total)
    }
}

/// One term's contribution to a composed estimate.
#[derive(Clone, Debug)]
pub struct TermEstimate {
    pub coeff: i32,
    pub selection: TargetSelection,
    pub interval: IntervalEstimate,
}

/// Interval estimate of a composed measure.
#[derive(Clone, Debug)]
pub struct MeasureEstimate {
    pub kind: MeasureKind,
    pub sharing: SharingMode,
    pub lower: f64,
    pub lower_std_error: f64,
    pub upper: f64,
    pub upper_std_error: f64,
    /// Per-replicate assembled endpoint values (the endpoints are their
    /// means, the standard errors their spread).
    pub replicate_lower: Vec<f64>,
    pub replicate_upper: Vec<f64>,
    pub terms: Vec<TermEstimate>,
    /// Non-finite assembled replicate values across both sides.
    pub invalid: usize,
    pub replicates: usize,
}

impl MeasureEstimate {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.upper + self.lower)
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    pub fn contains_within(&self, value: f64, sigmas: f64) -> bool {
        self.lower - sigmas * self.lower_std_error <= value
            && value <= self.upper + sigmas * self.upper_std_error
    }

    pub fn is_valid(&self) -> bool {
        self.invalid == 0 && self.lower.is_finite() && self.upper.is_finite()
    }

    /// Variance-identity report between two terms' per-replicate bound
    /// means. Pairing replicates across terms is only meaningful when the
    /// terms shared their outer draws.
    pub fn term_covariance_report(
        &self,
        a: usize,
        b: usize,
        side: BoundKind,
    ) -> Result<CovarianceReport> {
        if self.sharing != SharingMode::SharedOuter {
            return Err(Error::SharingModeMismatch);
        }
        let pick = |i: usize| -> Result<&[f64]> {
            let t = self
                .terms
                .get(i)
                .ok_or_else(|| Error::Config(format!("no term {i} in this measure")))?;
            Ok(match side {
                BoundKind::Lower => &t.interval.lower.replicate_means,
                BoundKind::Upper => &t.interval.upper.replicate_means,
            })
        };
        covariance_report(pick(a)?, pick(b)?)
    }
}

/// Estimate a composed measure with every term bounded from both sides.
pub fn estimate_measure(
    model: &dyn JointModel,
    query: &MeasureQuery,
    spec: &StackSpec,
    cfg: &EstimatorConfig,
    sharing: SharingMode,
) -> Result<MeasureEstimate> {
    cfg.validate()?;
    query.validate(model)?;
    let plan = query.plan()?;
    let n = cfg.replicates;
    let mut terms = Vec::with_capacity(plan.terms.len());
    for (t, term) in plan.terms.iter().enumerate() {
        let domains = DomainPlan {
            outer: match sharing {
                SharingMode::SharedOuter => domain::OUTER,
                SharingMode::Independent => fold_label(domain::OUTER, 1 + t as u64),
            },
            upper: domain::term(t, 0),
            lower: domain::term(t, 1),
        };
        let interval = if term.selection.is_full(model) {
            interval_with_plan(model, &term.selection, &NoPair, cfg, domains)?
        } else {
            let pair = spec.build(model, &term.selection, cfg.seed)?;
            interval_with_plan(model, &term.selection, pair.as_ref(), cfg, domains)?
        };
        terms.push(TermEstimate {
            coeff: term.coeff,
            selection: term.selection.clone(),
            interval,
        });
    }
    let mut replicate_lower = vec![0.0; n];
    let mut replicate_upper = vec![0.0; n];
    for te in &terms {
        let c = te.coeff as f64;
        let (for_lower, for_upper) = if te.coeff > 0 {
            (&te.interval.lower, &te.interval.upper)
        } else {
            (&te.interval.upper, &te.interval.lower)
        };
        for i in 0..n {
            replicate_lower[i] += c * for_lower.replicate_means[i];
            replicate_upper[i] += c * for_upper.replicate_means[i];
        }
    }
    let lower = pairwise_mean(&replicate_lower);
    let upper = pairwise_mean(&replicate_upper);
    let stderr = |v: &[f64]| {
        if n > 1 {
            (sample_variance(v) / n as f64).sqrt()
        } else {
            f64::INFINITY
        }
    };
    let invalid = replicate_lower
        .iter()
        .chain(replicate_upper.iter())
        .filter(|v| !v.is_finite())
        .count();
    Ok(MeasureEstimate {
        kind: query.kind,
        sharing,
        lower,
        lower_std_error: stderr(&replicate_lower),
        upper,
        upper_std_error: stderr(&replicate_upper),
        replicate_lower,
        replicate_upper,
        terms,
        invalid,
        replicates: n,
    })
}

/// H(target | given) with shared outer draws.
pub fn conditional_entropy_interval(
    model: &dyn JointModel,
    target: TargetSelection,
    given: TargetSelection,
    spec: &StackSpec,
    cfg: &EstimatorConfig,
) -> Result<MeasureEstimate> {
    estimate_measure(
        model,
        &MeasureQuery::conditional_entropy(target, given),
        spec,
        cfg,
        SharingMode::SharedOuter,
    )
}

/// I(a; b | given), or plain I(a; b) when `given` is `None`.
pub fn cmi_interval(
    model: &dyn JointModel,
    a: TargetSelection,
    b: TargetSelection,
    given: Option<TargetSelection>,
    spec: &StackSpec,
    cfg: &EstimatorConfig,
) -> Result<MeasureEstimate> {
    let query = match given {
        Some(c) => MeasureQuery::conditional_mutual_information(a, b, c),
        None => MeasureQuery::mutual_information(a, b),
    };
    estimate_measure(model, &query, spec, cfg, SharingMode::SharedOuter)
}

/// Total correlation of the groups (optionally conditional).
pub fn total_correlation_interval(
    model: &dyn JointModel,
    groups: Vec<TargetSelection>,
    given: Option<TargetSelection>,
    spec: &StackSpec,
    cfg: &EstimatorConfig,
) -> Result<MeasureEstimate> {
    estimate_measure(
        model,
        &MeasureQuery::total_correlation(groups, given),
        spec,
        cfg,
        SharingMode::SharedOuter,
    )
}

/// Interaction information (co-information) of the groups.
pub fn interaction_information_interval(
    model: &dyn JointModel,
    groups: Vec<TargetSelection>,
    given: Option<TargetSelection>,
    spec: &StackSpec,
    cfg: &EstimatorConfig,
) -> Result<MeasureEstimate> {
    estimate_measure(
        model,
        &MeasureQuery::interaction_information(groups, given),
        spec,
        cfg,
        SharingMode::SharedOuter,
    )
}

/// Dual total correlation of the groups (optionally conditional).
pub fn dual_correlation_interval(
    model: &dyn JointModel,
    groups: Vec<TargetSelection>,
    given: Option<TargetSelection>,
    spec: &StackSpec,
    cfg: &EstimatorConfig,
) -> Result<MeasureEstimate> {
    estimate_measure(
        model,
        &MeasureQuery::dual_total_correlation(groups, given),
        spec,
        cfg,
        SharingMode::SharedOuter,
    )
}

/// A candidate's position after ranking.
#[derive(Clone, Debug)]
pub struct RankedCandidate {
    /// Index into the caller's candidate list.
    pub index: usize,
    pub estimate: MeasureEstimate,
}

/// Rank candidate variable sets by estimated H(candidate | given),
/// ascending (most predictable first), sorting on interval midpoints.
///
/// All candidates run under the same seed, so their outer draws are
/// common random numbers — comparisons between candidates are paired,
/// which stabilizes the ranking itself.
pub fn rank_by_conditional_entropy(
    model: &dyn JointModel,
    candidates: &[TargetSelection],
    given: &TargetSelection,
    spec: &StackSpec,
    cfg: &EstimatorConfig,
) -> Result<Vec<RankedCandidate>> {
    let mut ranked = Vec::with_capacity(candidates.len());
    for (index, cand) in candidates.iter().enumerate() {
        let estimate =
            conditional_entropy_interval(model, cand.clone(), given.clone(), spec, cfg)?;
        ranked.push(RankedCandidate { index, estimate });
    }
    ranked.sort_by(|a, b| {
        a.estimate
            .midpoint()
            .partial_cmp(&b.estimate.midpoint())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.index.cmp(&b.index))
    });
    Ok(ranked)
}

/// Empirical check that Var[A - B] = Var[A] + Var[B] - 2 Cov[A, B] on
/// paired samples (exact in algebra; the report shows the numerical gap).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovarianceReport {
    pub var_a: f64,
    pub var_b: f64,
    pub covariance: f64,
    /// Sample variance of the elementwise difference.
    pub var_difference: f64,
    /// var_a + var_b - 2*covariance.
    pub identity_value: f64,
    /// |var_difference - identity_value|.
    pub discrepancy: f64,
}

/// Compute the variance-of-difference identity report for paired samples.
pub fn covariance_report(a: &[f64], b: &[f64]) -> Result<CovarianceReport> {
    if a.len() != b.len() {
        return Err(Error::Config(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::Config(
            "need at least two paired samples for a covariance".into(),
        ));
    }
    let n = a.len() as f64;
    let mean_a = pairwise_mean(a);
    let mean_b = pairwise_mean(b);
    let centered_a: Vec<f64> = a.iter().map(|v| v - mean_a).collect();
    let centered_b: Vec<f64> = b.iter().map(|v| v - mean_b).collect();
    let dot = |x: &[f64], y: &[f64]| -> f64 {
        let prods: Vec<f64> = x.iter().zip(y).map(|(u, v)| u * v).collect();
        crate::logspace::pairwise_sum(&prods) / (n - 1.0)
    };
    let var_a = dot(&centered_a, &centered_a);
    let var_b = dot(&centered_b, &centered_b);
    let covariance = dot(&centered_a, &centered_b);
    let diff_centered: Vec<f64> = centered_a
        .iter()
        .zip(&centered_b)
        .map(|(u, v)| u - v)
        .collect();
    let var_difference = dot(&diff_centered, &diff_centered);
    let identity_value = var_a + var_b - 2.0 * covariance;
    Ok(CovarianceReport {
        var_a,
        var_b,
        covariance,
        var_difference,
        identity_value,
        discrepancy: (var_difference - identity_value).abs(),
    })
}

/// Evaluate a measure exactly against an enumerated joint table.
pub fn exact_measure(table: &Enumeration, query: &MeasureQuery) -> Result<f64> {
    query.plan()?.evaluate(|sel| table.entropy(sel))
}

//! `squint experiment-rank` — order variables by conditional entropy.
//!
//! On the built-in diagnosis network, ranks every non-evidence variable by
//! its estimated conditional entropy given the evidence set (ascending:
//! most predictable first) and places the exact enumerated value and exact
//! rank beside each interval, so disagreements between the estimated and
//! true orderings are visible at a glance.

use std::path::PathBuf;

use clap::Args;

use squint::baseline::runtime_profile;
use squint::builtin::synth;
use squint::enumerate::Enumeration;
use squint::measure::{exact_measure, rank_by_conditional_entropy};
use squint::{EstimatorConfig, JointModel, MeasureQuery, StackSpec, TargetSelection};

use crate::config::{parse_name_list, parse_selection};
use crate::rows::{write_rows, RankRow};
use crate::Failure;

#[derive(Args, Debug)]
pub struct RankArgs {
    /// Comma-separated evidence variable names.
    #[arg(long, default_value = "s5")]
    evidence: String,
    /// Replicates per candidate interval.
    #[arg(long, default_value_t = 48)]
    replicates: usize,
    /// SIR particles per weight.
    #[arg(long, default_value_t = 32)]
    particles: usize,
    /// Seed shared by every candidate (common random numbers).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Fill the wall_time_ms column (whole-ranking duration on every row).
    #[arg(long)]
    timing: bool,
}

pub fn run(args: RankArgs) -> Result<(), Failure> {
    if args.replicates == 0 || args.particles == 0 {
        return Err(Failure::Config(
            "replicates and particles must be at least 1".into(),
        ));
    }
    let model = synth::pinned_disease_net();
    let evidence = parse_selection(&parse_name_list(&args.evidence))?;
    evidence.validate(&model).map_err(Failure::from)?;

    let evidence_names: Vec<String> =
        evidence.addresses().iter().map(|a| a.to_string()).collect();
    let candidates: Vec<TargetSelection> = model
        .addresses()
        .iter()
        .filter(|a| !evidence_names.contains(&a.to_string()))
        .map(|a| TargetSelection::new(vec![a.clone()]))
        .collect::<squint::Result<_>>()
        .map_err(Failure::from)?;
    if candidates.is_empty() {
        return Err(Failure::Config(
            "evidence covers every variable; nothing left to rank".into(),
        ));
    }

    let spec = StackSpec::sir_prior(args.particles);
    let cfg = EstimatorConfig {
        replicates: args.replicates,
        seed: args.seed,
        ..EstimatorConfig::default()
    };
    let (result, timing) = runtime_profile("rank", candidates.len(), || {
        rank_by_conditional_entropy(&model, &candidates, &evidence, &spec, &cfg)
    });
    let ranked = result?;
    if let Some(bad) = ranked.iter().find(|r| !r.estimate.is_valid()) {
        return Err(Failure::Invalid(format!(
            "candidate {} produced an unusable interval",
            candidates[bad.index].addresses()[0]
        )));
    }

    let table = Enumeration::from_model(&model).map_err(Failure::from)?;
    let exact: Vec<f64> = candidates
        .iter()
        .map(|c| {
            let query = MeasureQuery::conditional_entropy(c.clone(), evidence.clone());
            exact_measure(&table, &query)
        })
        .collect::<squint::Result<_>>()
        .map_err(Failure::from)?;
    let mut exact_order: Vec<usize> = (0..candidates.len()).collect();
    exact_order.sort_by(|&a, &b| {
        exact[a]
            .partial_cmp(&exact[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let exact_rank_of = |index: usize| 1 + exact_order.iter().position(|&i| i == index).unwrap();

    let evidence_label = evidence_names.join("+");
    let wall = args.timing.then_some(timing.wall_ms);
    let out: Vec<RankRow> = ranked
        .iter()
        .enumerate()
        .map(|(pos, r)| RankRow {
            rank: pos + 1,
            candidate: candidates[r.index].addresses()[0].to_string(),
            evidence: evidence_label.clone(),
            lower: r.estimate.lower,
            upper: r.estimate.upper,
            midpoint: r.estimate.midpoint(),
            width: r.estimate.width(),
            exact: exact[r.index],
            exact_rank: exact_rank_of(r.index),
            replicates: args.replicates,
            particles: args.particles,
            seed: args.seed,
            wall_time_ms: wall,
        })
        .collect();
    write_rows(&out, args.output.as_deref())
}

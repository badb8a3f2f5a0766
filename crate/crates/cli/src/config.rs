//! JSON run configuration and its resolution into library objects.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use squint::builtin::{synth, DiscreteBayesNet, LinearGaussianSsm, MvnModel};
use squint::{
    EstimatorConfig, JointModel, MeasureKind, MeasureQuery, SharingMode, StackSpec,
    TargetSelection,
};

use crate::Failure;

/// Which generative model a run operates on.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// Discrete Bayesian network loaded from a JSON file.
    BayesNet { path: PathBuf },
    /// The built-in 12-node diagnosis-style network.
    PinnedDiseaseNet,
    /// Seeded random layered network (attributes/diseases/symptoms).
    LayeredNet {
        attributes: usize,
        diseases: usize,
        symptoms: usize,
        #[serde(default = "default_cardinality")]
        cardinality: u32,
        #[serde(default = "default_max_parents")]
        max_parents: usize,
        seed: u64,
    },
    /// Three fair bits with C = A xor B, plus a padding coin.
    XorTriple,
    /// Independent biased coins c1..ck.
    IndependentCoins { count: usize },
    /// A coin, an exact copy, and a padding coin.
    CopyPair,
    /// Isotropic standard normal.
    MvnStandard { dim: usize },
    /// Two unit-variance coordinates with correlation rho.
    MvnBivariate { rho: f64 },
    /// Seeded random correlated Gaussian.
    MvnRandom { dim: usize, seed: u64 },
    /// Linear-Gaussian state space model; with `gain_prior` the dynamics
    /// gain is itself a latent discrete variable.
    Ssm {
        horizon: usize,
        #[serde(default)]
        gain_prior: bool,
    },
}

fn default_cardinality() -> u32 {
    2
}

fn default_max_parents() -> usize {
    2
}

impl ModelSpec {
    pub fn build(&self) -> Result<Box<dyn JointModel>, Failure> {
        Ok(match self {
            ModelSpec::BayesNet { path } => Box::new(
                DiscreteBayesNet::from_path(path).map_err(|e| Failure::Model(e.to_string()))?,
            ),
            ModelSpec::PinnedDiseaseNet => Box::new(synth::pinned_disease_net()),
            ModelSpec::LayeredNet {
                attributes,
                diseases,
                symptoms,
                cardinality,
                max_parents,
                seed,
            } => {
                if *attributes == 0 || *diseases == 0 || *symptoms == 0 {
                    return Err(Failure::Config(
                        "layered_net needs at least one node per layer".into(),
                    ));
                }
                if *cardinality < 2 || *max_parents == 0 {
                    return Err(Failure::Config(
                        "layered_net needs cardinality >= 2 and max_parents >= 1".into(),
                    ));
                }
                let cfg = synth::LayeredNetConfig {
                    attributes: *attributes,
                    diseases: *diseases,
                    symptoms: *symptoms,
                    cardinality: *cardinality,
                    max_parents: *max_parents,
                    seed: *seed,
                };
                Box::new(synth::layered_net(&cfg).map_err(|e| Failure::Model(e.to_string()))?)
            }
            ModelSpec::XorTriple => Box::new(synth::xor_triple_net()),
            ModelSpec::IndependentCoins { count } => {
                if *count == 0 {
                    return Err(Failure::Config("independent_coins needs count >= 1".into()));
                }
                Box::new(synth::independent_coins_net(*count))
            }
            ModelSpec::CopyPair => Box::new(synth::copy_pair_net()),
            ModelSpec::MvnStandard { dim } => {
                if *dim == 0 {
                    return Err(Failure::Config("mvn_standard needs dim >= 1".into()));
                }
                Box::new(MvnModel::standard(*dim))
            }
            ModelSpec::MvnBivariate { rho } => {
                Box::new(MvnModel::bivariate(*rho).map_err(|e| Failure::Model(e.to_string()))?)
            }
            ModelSpec::MvnRandom { dim, seed } => {
                if *dim == 0 {
                    return Err(Failure::Config("mvn_random needs dim >= 1".into()));
                }
                Box::new(MvnModel::random_correlated(*dim, *seed))
            }
            ModelSpec::Ssm {
                horizon,
                gain_prior,
            } => {
                if *horizon == 0 {
                    return Err(Failure::Config("ssm needs horizon >= 1".into()));
                }
                if *gain_prior {
                    Box::new(LinearGaussianSsm::with_gain_prior(*horizon))
                } else {
                    Box::new(LinearGaussianSsm::plain(*horizon))
                }
            }
        })
    }

    /// Short provenance tag for CSV output.
    pub fn id(&self) -> String {
        match self {
            ModelSpec::BayesNet { path } => format!("bayes_net({})", path.display()),
            ModelSpec::PinnedDiseaseNet => "pinned_disease_net".into(),
            ModelSpec::LayeredNet {
                attributes,
                diseases,
                symptoms,
                seed,
                ..
            } => format!("layered_net({attributes},{diseases},{symptoms};seed={seed})"),
            ModelSpec::XorTriple => "xor_triple".into(),
            ModelSpec::IndependentCoins { count } => format!("independent_coins({count})"),
            ModelSpec::CopyPair => "copy_pair".into(),
            ModelSpec::MvnStandard { dim } => format!("mvn_standard({dim})"),
            ModelSpec::MvnBivariate { rho } => format!("mvn_bivariate({rho})"),
            ModelSpec::MvnRandom { dim, seed } => format!("mvn_random({dim};seed={seed})"),
            ModelSpec::Ssm {
                horizon,
                gain_prior,
            } => format!("ssm(horizon={horizon},gain_prior={gain_prior})"),
        }
    }
}

/// Which measure a run computes, over named variable groups.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub kind: MeasureKind,
    /// Variable groups as address strings (`"gain"`, `"y@3"`).
    pub groups: Vec<Vec<String>>,
    #[serde(default)]
    pub conditioning: Vec<String>,
}

pub fn parse_selection(names: &[String]) -> Result<TargetSelection, Failure> {
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    TargetSelection::parse(&refs).map_err(|e| Failure::Config(e.to_string()))
}

impl MeasureSpec {
    pub fn to_query(&self) -> Result<MeasureQuery, Failure> {
        let groups = self
            .groups
            .iter()
            .map(|g| parse_selection(g))
            .collect::<Result<Vec<_>, _>>()?;
        let conditioning = if self.conditioning.is_empty() {
            None
        } else {
            Some(parse_selection(&self.conditioning)?)
        };
        Ok(MeasureQuery {
            kind: self.kind,
            groups,
            conditioning,
        })
    }
}

fn default_proposal() -> StackSpec {
    StackSpec::sir_prior(64)
}

fn default_sharing() -> SharingMode {
    SharingMode::SharedOuter
}

/// Top-level JSON configuration for `squint run`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub measure: MeasureSpec,
    #[serde(default = "default_proposal")]
    pub proposal: StackSpec,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default = "default_sharing")]
    pub sharing: SharingMode,
}

impl RunConfig {
    pub fn from_path(path: &std::path::Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Failure::Config(format!("bad configuration {}: {e}", path.display())))
    }
}

/// Compact provenance tag for a proposal tower.
pub fn stack_id(spec: &StackSpec) -> String {
    match spec {
        StackSpec::Prior => "prior".into(),
        StackSpec::ExactConditional => "exact-conditional".into(),
        StackSpec::Regression { train } => format!("regression(train={train})"),
        StackSpec::Sir { particles, base } => {
            format!("sir(p={particles},base={})", stack_id(base))
        }
        StackSpec::Smc {
            particles,
            path,
            kernel,
            base,
        } => {
            let path_id = match path {
                squint::proposal::PathSpec::Tempered { steps } => format!("tempered{steps}"),
                squint::proposal::PathSpec::ObservationPrefix => "obs-prefix".into(),
            };
            let kernel_id = match kernel {
                squint::proposal::KernelSpec::Identity => "identity",
                squint::proposal::KernelSpec::ResimulationSweep => "resim",
            };
            format!(
                "smc(p={particles},path={path_id},kernel={kernel_id},base={})",
                stack_id(base)
            )
        }
    }
}

/// The outermost particle count of a tower, if it has one.
pub fn outer_particles(spec: &StackSpec) -> Option<usize> {
    match spec {
        StackSpec::Sir { particles, .. } | StackSpec::Smc { particles, .. } => Some(*particles),
        _ => None,
    }
}

/// Label for the sharing mode in CSV cells.
pub fn sharing_id(mode: SharingMode) -> &'static str {
    match mode {
        SharingMode::SharedOuter => "shared_outer",
        SharingMode::Independent => "independent",
    }
}

/// Parse a comma-separated list of positive integers.
pub fn parse_usize_list(text: &str, what: &str) -> Result<Vec<usize>, Failure> {
    let vals = text
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::Config(format!("bad {what} list '{text}': {e}")))?;
    if vals.is_empty() || vals.contains(&0) {
        return Err(Failure::Config(format!(
            "{what} list must be nonempty positive integers"
        )));
    }
    Ok(vals)
}

/// Parse a comma-separated list of positive reals.
pub fn parse_f64_list(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    let vals = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::Config(format!("bad {what} list '{text}': {e}")))?;
    if vals.is_empty() || vals.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(Failure::Config(format!(
            "{what} list must be nonempty positive numbers"
        )));
    }
    Ok(vals)
}

/// Parse a comma-separated list of address names.
pub fn parse_name_list(text: &str) -> Vec<String> {
    text.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

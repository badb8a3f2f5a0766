//! Synthetic discrete networks for experiments and tests.
//!
//! The layered generator builds attribute → disease → symptom networks of
//! configurable width with randomized (but seeded, hence reproducible)
//! tables. The small fixed nets are hand-checkable: their entropies and
//! information measures can be computed on paper or by exhaustive
//! enumeration.

use rand::Rng;

use crate::builtin::bayesnet::DiscreteBayesNet;
use crate::error::Result;
use crate::stream::{domain, substream};

/// Shape of a three-layer network: independent attribute roots, diseases
/// with attribute parents, symptoms with disease parents.
#[derive(Clone, Debug)]
pub struct LayeredNetConfig {
    pub attributes: usize,
    pub diseases: usize,
    pub symptoms: usize,
    /// Cardinality shared by every node.
    pub cardinality: u32,
    /// Upper bound on parents per non-root node (at least one is drawn).
    pub max_parents: usize,
    pub seed: u64,
}

impl Default for LayeredNetConfig {
    fn default() -> Self {
        LayeredNetConfig {
            attributes: 3,
            diseases: 4,
            symptoms: 5,
            cardinality: 2,
            max_parents: 2,
            seed: 0x5EED,
        }
    }
}

/// Draw one CPT row: a smoothed point on the simplex. Smoothing keeps every
/// entry at least 0.1/cardinality so importance ratios stay bounded.
fn random_row(rng: &mut crate::stream::Stream, card: u32) -> Vec<f64> {
    let gammas: Vec<f64> = (0..card)
        .map(|_| {
            // Exp(1) via inverse CDF; u in [0, 1) keeps the log finite.
            let u: f64 = rng.gen::<f64>();
            -(1.0 - u).ln()
        })
        .collect();
    let total: f64 = gammas.iter().sum();
    let card_f = card as f64;
    gammas
        .iter()
        .map(|g| 0.9 * (g / total) + 0.1 / card_f)
        .collect()
}

/// Pick `k` distinct indexes from `0..pool` in increasing order.
fn pick_parents(rng: &mut crate::stream::Stream, pool: usize, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pool).collect();
    for i in 0..k {
        let j = rng.gen_range(i..pool);
        idx.swap(i, j);
    }
    let mut chosen = idx[..k].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Build a layered attribute/disease/symptom network.
pub fn layered_net(cfg: &LayeredNetConfig) -> Result<DiscreteBayesNet> {
    assert!(cfg.attributes > 0 && cfg.diseases > 0 && cfg.symptoms > 0);
    assert!(cfg.cardinality >= 2 && cfg.max_parents >= 1);
    let mut names = Vec::new();
    for i in 0..cfg.attributes {
        names.push(format!("a{}", i + 1));
    }
    for i in 0..cfg.diseases {
        names.push(format!("d{}", i + 1));
    }
    for i in 0..cfg.symptoms {
        names.push(format!("s{}", i + 1));
    }
    let n = names.len();
    let cards = vec![cfg.cardinality; n];

    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut parent_counts = vec![0usize; n];
    let disease_base = cfg.attributes;
    let symptom_base = cfg.attributes + cfg.diseases;
    for i in 0..cfg.diseases {
        let node = disease_base + i;
        let mut rng = substream(cfg.seed, domain::SETUP, node as u64);
        let k = rng.gen_range(1..=cfg.max_parents.min(cfg.attributes));
        for p in pick_parents(&mut rng, cfg.attributes, k) {
            edges.push((p, node));
        }
        parent_counts[node] = edges.iter().filter(|e| e.1 == node).count();
    }
    for i in 0..cfg.symptoms {
        let node = symptom_base + i;
        let mut rng = substream(cfg.seed, domain::SETUP, node as u64);
        let k = rng.gen_range(1..=cfg.max_parents.min(cfg.diseases));
        for p in pick_parents(&mut rng, cfg.diseases, k) {
            edges.push((disease_base + p, node));
        }
        parent_counts[node] = edges.iter().filter(|e| e.1 == node).count();
    }

    let mut cpts = Vec::with_capacity(n);
    for node in 0..n {
        let mut rng = substream(cfg.seed, domain::SETUP, 0x1000 + node as u64);
        let rows = (cfg.cardinality as usize).pow(parent_counts[node] as u32);
        let mut table = Vec::with_capacity(rows * cfg.cardinality as usize);
        for _ in 0..rows {
            table.extend(random_row(&mut rng, cfg.cardinality));
        }
        cpts.push(table);
    }
    DiscreteBayesNet::new(names, cards, edges, cpts)
}

/// The fixed 12-node diagnosis-style network used across tests: three
/// binary attributes, four diseases, five symptoms, at most two parents.
pub fn pinned_disease_net() -> DiscreteBayesNet {
    layered_net(&LayeredNetConfig::default()).expect("pinned configuration is valid")
}

/// Two binary nodes A -> B with
/// P(A=1)=0.3, P(B=1|A=0)=0.2, P(B=1|A=1)=0.9, so P(B=1)=0.41.
pub fn two_node_net() -> DiscreteBayesNet {
    DiscreteBayesNet::new(
        vec!["A".into(), "B".into()],
        vec![2, 2],
        vec![(0, 1)],
        vec![vec![0.7, 0.3], vec![0.8, 0.2, 0.1, 0.9]],
    )
    .expect("two-node net is valid")
}

/// Fair coins A and B, C = A xor B, plus an independent padding coin so
/// that strict-subset selections can still cover {A, B, C}.
///
/// Every pair of A, B, C is independent, yet jointly any one is a function
/// of the other two — the canonical case where three-way interaction is
/// -ln 2 while all pairwise mutual informations are zero.
pub fn xor_triple_net() -> DiscreteBayesNet {
    let half = vec![0.5, 0.5];
    let xor = vec![
        1.0, 0.0, // A=0 B=0 -> C=0
        0.0, 1.0, // A=0 B=1 -> C=1
        0.0, 1.0, // A=1 B=0 -> C=1
        1.0, 0.0, // A=1 B=1 -> C=0
    ];
    DiscreteBayesNet::new(
        vec!["A".into(), "B".into(), "C".into(), "pad".into()],
        vec![2, 2, 2, 2],
        vec![(0, 2), (1, 2)],
        vec![half.clone(), half.clone(), xor, half],
    )
    .expect("xor net is valid")
}

/// `k` independent fair coins named c1..ck.
pub fn independent_coins_net(k: usize) -> DiscreteBayesNet {
    assert!(k >= 1);
    let names = (0..k).map(|i| format!("c{}", i + 1)).collect();
    let cpts = vec![vec![0.5, 0.5]; k];
    DiscreteBayesNet::new(names, vec![2; k], vec![], cpts).expect("coin net is valid")
}

/// A fair coin A, a deterministic copy B, and an independent padding coin.
/// H(B | A) is exactly zero, which exercises bounds around a boundary
/// value that estimates must bracket.
pub fn copy_pair_net() -> DiscreteBayesNet {
    DiscreteBayesNet::new(
        vec!["A".into(), "B".into(), "pad".into()],
        vec![2, 2, 2],
        vec![(0, 1)],
        vec![
            vec![0.5, 0.5],
            vec![1.0, 0.0, 0.0, 1.0],
            vec![0.5, 0.5],
        ],
    )
    .expect("copy net is valid")
}

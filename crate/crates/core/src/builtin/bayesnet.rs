//! Discrete Bayesian networks with explicit conditional probability tables.
//!
//! Networks load from a JSON document:
//!
//! ```json
//! {
//!   "variables": [{"name": "A", "cardinality": 2}, ...],
//!   "edges": [["A", "B"], ...],
//!   "cpts": {"A": [0.7, 0.3], "B": [0.8, 0.2, 0.1, 0.9], ...}
//! }
//! ```
//!
//! Each node's table is row-major: one row of `cardinality` probabilities
//! per configuration of its parents, rows ordered with the first declared
//! parent varying slowest. Parent order is the order edges are declared.
//! Loading validates acyclicity, table shapes, and that every row sums to
//! one within 1e-9; serialization preserves the declared variable and edge
//! order, so load → serialize is byte-stable.

use std::any::Any;
use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Address, Assignment, JointModel, Support, Value};

/// Row-sum tolerance for CPT validation.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize)]
struct VariableJson {
    name: String,
    cardinality: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct NetJson {
    variables: Vec<VariableJson>,
    edges: Vec<(String, String)>,
    cpts: BTreeMap<String, Vec<f64>>,
}

/// A discrete Bayesian network.
#[derive(Clone, Debug)]
pub struct DiscreteBayesNet {
    /// Declared order (serialization order).
    names: Vec<String>,
    cards: Vec<u32>,
    supports: Vec<Support>,
    /// Parent indexes per node, in declared edge order.
    parents: Vec<Vec<usize>>,
    /// Row-major tables, one per node.
    cpts: Vec<Vec<f64>>,
    /// Declared edge list, for byte-stable serialization.
    edges: Vec<(usize, usize)>,
    /// Topological order over declared indexes (stable Kahn).
    topo: Vec<usize>,
    /// Addresses in topological order (what `addresses()` exposes).
    addrs_topo: Vec<Address>,
}

impl DiscreteBayesNet {
    /// Build a network from parts. `parents` lists each node's parents in
    /// CPT row order; `edges` order defines that order when loading JSON.
    pub fn new(
        names: Vec<String>,
        cards: Vec<u32>,
        edges: Vec<(usize, usize)>,
        cpts: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = names.len();
        if cards.len() != n || cpts.len() != n {
            return Err(Error::ModelLoad(
                "variables, cardinalities, and cpts must align".into(),
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        for name in &names {
            if name.is_empty() {
                return Err(Error::ModelLoad("empty variable name".into()));
            }
            if !seen.insert(name.clone()) {
                return Err(Error::ModelLoad(format!("duplicate variable name '{name}'")));
            }
        }
        for &c in &cards {
            if c == 0 {
                return Err(Error::ModelLoad("cardinality must be at least 1".into()));
            }
        }
        let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(p, c) in &edges {
            if p >= n || c >= n {
                return Err(Error::ModelLoad("edge references unknown variable".into()));
            }
            if p == c {
                return Err(Error::ModelLoad(format!("self edge on '{}'", names[p])));
            }
            if parents[c].contains(&p) {
                return Err(Error::ModelLoad(format!(
                    "duplicate edge {} -> {}",
                    names[p], names[c]
                )));
            }
            parents[c].push(p);
        }
        // Stable topological order: Kahn's algorithm, smallest declared
        // index first.
        let mut indeg: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(p, c) in &edges {
            children[p].push(c);
        }
        let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(&next) = ready.iter().min() {
            ready.retain(|&i| i != next);
            topo.push(next);
            for &ch in &children[next] {
                indeg[ch] -= 1;
                if indeg[ch] == 0 {
                    ready.push(ch);
                }
            }
        }
        if topo.len() != n {
            let stuck: Vec<&str> = (0..n)
                .filter(|i| !topo.contains(i))
                .map(|i| names[i].as_str())
                .collect();
            return Err(Error::ModelLoad(format!(
                "cycle through nodes [{}]",
                stuck.join(", ")
            )));
        }
        // CPT shapes and row sums.
        for i in 0..n {
            let rows: usize = parents[i].iter().map(|&p| cards[p] as usize).product();
            let expect = rows * cards[i] as usize;
            if cpts[i].len() != expect {
                return Err(Error::ModelLoad(format!(
                    "cpt for node '{}' has {} entries, expected {}",
                    names[i],
                    cpts[i].len(),
                    expect
                )));
            }
            for row in 0..rows {
                let slice = &cpts[i][row * cards[i] as usize..(row + 1) * cards[i] as usize];
                if slice.iter().any(|&p| !(0.0..=1.0 + ROW_SUM_TOLERANCE).contains(&p)) {
                    return Err(Error::ModelLoad(format!(
                        "cpt for node '{}' has an entry outside [0, 1] in row {row}",
                        names[i]
                    )));
                }
                let s: f64 = slice.iter().sum();
                if (s - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(Error::ModelLoad(format!(
                        "cpt row {row} of node '{}' sums to {s}",
                        names[i]
                    )));
                }
            }
        }
        let supports = cards
            .iter()
            .map(|&c| Support::Discrete { cardinality: c })
            .collect();
        let addrs_topo = topo.iter().map(|&i| Address::new(&names[i])).collect();
        Ok(DiscreteBayesNet {
            names,
            cards,
            supports,
            parents,
            cpts,
            edges,
            topo,
            addrs_topo,
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: NetJson = serde_json::from_str(s)
            .map_err(|e| Error::ModelLoad(format!("bad network JSON: {e}")))?;
        let names: Vec<String> = raw.variables.iter().map(|v| v.name.clone()).collect();
        let cards: Vec<u32> = raw.variables.iter().map(|v| v.cardinality).collect();
        let index_of = |name: &str| -> Result<usize> {
            names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::ModelLoad(format!("unknown variable '{name}' in edges")))
        };
        let mut edges = Vec::with_capacity(raw.edges.len());
        for (p, c) in &raw.edges {
            edges.push((index_of(p)?, index_of(c)?));
        }
        let mut cpts = Vec::with_capacity(names.len());
        for name in &names {
            let t = raw.cpts.get(name).ok_or_else(|| {
                Error::ModelLoad(format!("missing cpt for node '{name}'"))
            })?;
            cpts.push(t.clone());
        }
        for extra in raw.cpts.keys() {
            if !names.iter().any(|n| n == extra) {
                return Err(Error::ModelLoad(format!("cpt for unknown node '{extra}'")));
            }
        }
        DiscreteBayesNet::new(names, cards, edges, cpts)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::ModelLoad(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&s)
    }

    /// Canonical JSON form (declared order preserved; cpts sorted by name).
    pub fn to_json_string(&self) -> String {
        let raw = NetJson {
            variables: self
                .names
                .iter()
                .zip(self.cards.iter())
                .map(|(n, &c)| VariableJson { name: n.clone(), cardinality: c })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|&(p, c)| (self.names[p].clone(), self.names[c].clone()))
                .collect(),
            cpts: self
                .names
                .iter()
                .zip(self.cpts.iter())
                .map(|(n, t)| (n.clone(), t.clone()))
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("network serialization cannot fail")
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    fn index_of(&self, addr: &Address) -> Result<usize> {
        if addr.time().is_some() {
            return Err(Error::InvalidSelection(format!(
                "network variables carry no time index: {addr}"
            )));
        }
        self.names
            .iter()
            .position(|n| n == addr.name())
            .ok_or_else(|| Error::InvalidSelection(format!("unknown address {addr}")))
    }

    /// CPT row index for node `i` given parent values in `a`.
    fn row_of(&self, i: usize, a: &Assignment) -> Result<usize> {
        let mut row = 0usize;
        for &p in &self.parents[i] {
            let addr = Address::new(&self.names[p]);
            let v = a.expect(&addr)?.expect_discrete(&addr)?;
            if v >= self.cards[p] {
                return Err(Error::InvalidValue(format!(
                    "parent value {v} out of range at {addr}"
                )));
            }
            row = row * self.cards[p] as usize + v as usize;
        }
        Ok(row)
    }

    fn row_slice(&self, i: usize, row: usize) -> &[f64] {
        let c = self.cards[i] as usize;
        &self.cpts[i][row * c..(row + 1) * c]
    }
}

impl JointModel for DiscreteBayesNet {
    fn addresses(&self) -> &[Address] {
        &self.addrs_topo
    }

    fn support(&self, addr: &Address) -> Option<&Support> {
        self.index_of(addr).ok().map(|i| &self.supports[i])
    }

    fn simulate(&self, rng: &mut dyn RngCore) -> Assignment {
        let mut a = Assignment::new();
        for &i in &self.topo {
            let addr = Address::new(&self.names[i]);
            let row = self.row_of(i, &a).expect("parents precede children");
            let probs = self.row_slice(i, row);
            let u: f64 = rng.gen::<f64>();
            let mut cum = 0.0;
            let mut v = self.cards[i] - 1;
            for (k, &p) in probs.iter().enumerate() {
                cum += p;
                if u < cum {
                    v = k as u32;
                    break;
                }
            }
            a.insert(addr, Value::Discrete(v));
        }
        a
    }

    fn log_joint(&self, a: &Assignment) -> Result<f64> {
        crate::model::require_complete(self, a)?;
        let mut total = 0.0;
        for (i, name) in self.names.iter().enumerate() {
            let addr = Address::new(name);
            let v = a.expect(&addr)?;
            if !self.supports[i].contains(v) {
                // Out of declared support: zero density, not an error.
                return Ok(f64::NEG_INFINITY);
            }
            let row = self.row_of(i, a)?;
            let p = self.row_slice(i, row)[v.expect_discrete(&addr)? as usize];
            if p <= 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            total += p.ln();
        }
        Ok(total)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn has_site_structure(&self) -> bool {
        true
    }

    fn site_resimulate(
        &self,
        rng: &mut dyn RngCore,
        addr: &Address,
        ctx: &Assignment,
    ) -> Result<(Value, f64)> {
        let i = self.index_of(addr)?;
        let row = self.row_of(i, ctx)?;
        let probs = self.row_slice(i, row);
        let u: f64 = rng.gen::<f64>();
        let mut cum = 0.0;
        let mut v = self.cards[i] - 1;
        for (k, &p) in probs.iter().enumerate() {
            cum += p;
            if u < cum {
                v = k as u32;
                break;
            }
        }
        let p = probs[v as usize];
        Ok((Value::Discrete(v), p.ln()))
    }

    fn site_log_density(&self, addr: &Address, a: &Assignment) -> Result<f64> {
        let i = self.index_of(addr)?;
        let v = a.expect(addr)?;
        if !self.supports[i].contains(v) {
            return Ok(f64::NEG_INFINITY);
        }
        let row = self.row_of(i, a)?;
        let p = self.row_slice(i, row)[v.expect_discrete(addr)? as usize];
        Ok(if p <= 0.0 { f64::NEG_INFINITY } else { p.ln() })
    }
}

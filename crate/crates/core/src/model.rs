//! Generative-model abstraction: addresses, values, assignments, target
//! selections, and the [`JointModel`] trait.
//!
//! A joint model is anything that can (a) simulate a complete assignment of
//! its variables and (b) evaluate the log joint density of a complete
//! assignment, in nats, against the product base measure (counting measure
//! for discrete sites, Lebesgue for real ones). That pair is all the bound
//! estimators need. Models may additionally expose per-site ancestral
//! structure, which unlocks prior proposals, single-site refresh moves, and
//! observation-prefix tempering for sequential Monte Carlo.

use std::any::Any;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::RngCore;

use crate::error::{Error, Result};

/// Name of a random variable, optionally carrying a time index
/// (`"y@3"` in display form).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Address {
    name: Arc<str>,
    time: Option<u32>,
}

impl Address {
    pub fn new(name: impl AsRef<str>) -> Self {
        Address { name: Arc::from(name.as_ref()), time: None }
    }

    pub fn indexed(name: impl AsRef<str>, time: u32) -> Self {
        Address { name: Arc::from(name.as_ref()), time: Some(time) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn time(&self) -> Option<u32> {
        self.time
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.time {
            Some(t) => write!(f, "{}@{}", self.name, t),
            None => write!(f, "{}", self.name),
        }
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Address {
    type Err = Error;

    /// Parse `"name"` or `"name@index"`.
    fn from_str(s: &str) -> Result<Self> {
        match s.rsplit_once('@') {
            None => {
                if s.is_empty() {
                    return Err(Error::InvalidValue("empty address".into()));
                }
                Ok(Address::new(s))
            }
            Some((name, idx)) => {
                if name.is_empty() {
                    return Err(Error::InvalidValue(format!("empty name in address '{s}'")));
                }
                let t: u32 = idx
                    .parse()
                    .map_err(|_| Error::InvalidValue(format!("bad time index in address '{s}'")))?;
                Ok(Address::indexed(name, t))
            }
        }
    }
}

impl serde::Serialize for Address {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Address {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Value of one variable.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    /// Category index in `0..cardinality`.
    Discrete(u32),
    /// Finite real scalar.
    Real(f64),
    /// Finite real vector of fixed length.
    RealVec(Vec<f64>),
}

impl Value {
    /// Construct a real scalar, rejecting non-finite input.
    pub fn real(v: f64) -> Result<Value> {
        if v.is_finite() {
            Ok(Value::Real(v))
        } else {
            Err(Error::InvalidValue(format!("non-finite real value {v}")))
        }
    }

    pub fn as_discrete(&self) -> Option<u32> {
        match self {
            Value::Discrete(k) => Some(*k),
            _ => None,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Value::Real(v) => Some(*v),
            _ => None,
        }
    }

    pub fn expect_discrete(&self, at: &Address) -> Result<u32> {
        self.as_discrete()
            .ok_or_else(|| Error::InvalidValue(format!("expected discrete value at {at}")))
    }

    pub fn expect_real(&self, at: &Address) -> Result<f64> {
        self.as_real()
            .ok_or_else(|| Error::InvalidValue(format!("expected real value at {at}")))
    }

    /// Scalar dimensionality when flattened into ℝ^k.
    pub fn real_dim(&self) -> Option<usize> {
        match self {
            Value::Discrete(_) => None,
            Value::Real(_) => Some(1),
            Value::RealVec(v) => Some(v.len()),
        }
    }
}

/// Declared support of one variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Support {
    Discrete { cardinality: u32 },
    Real,
    RealVec { len: usize },
}

impl Support {
    /// Does `v` lie in this support (shape and range check only)?
    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Support::Discrete { cardinality }, Value::Discrete(k)) => k < cardinality,
            (Support::Real, Value::Real(_)) => true,
            (Support::RealVec { len }, Value::RealVec(v)) => v.len() == *len,
            _ => false,
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Support::Discrete { .. })
    }

    pub fn is_real(&self) -> bool {
        !self.is_discrete()
    }
}

/// A (partial or complete) map from addresses to values.
///
/// Iteration order is the address order, so every walk over an assignment is
/// deterministic.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Assignment {
    values: BTreeMap<Address, Value>,
}

impl Assignment {
    pub fn new() -> Self {
        Assignment { values: BTreeMap::new() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn contains(&self, addr: &Address) -> bool {
        self.values.contains_key(addr)
    }

    pub fn get(&self, addr: &Address) -> Option<&Value> {
        self.values.get(addr)
    }

    /// Fetch a value that must be present.
    pub fn expect(&self, addr: &Address) -> Result<&Value> {
        self.get(addr)
            .ok_or_else(|| Error::IncompleteAssignment(format!("missing address {addr}")))
    }

    pub fn insert(&mut self, addr: Address, value: Value) -> Option<Value> {
        self.values.insert(addr, value)
    }

    pub fn remove(&mut self, addr: &Address) -> Option<Value> {
        self.values.remove(addr)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Address, &Value)> {
        self.values.iter()
    }

    pub fn addresses(&self) -> impl Iterator<Item = &Address> {
        self.values.keys()
    }

    /// Disjoint union. Errors if any address appears on both sides.
    pub fn merge(&self, other: &Assignment) -> Result<Assignment> {
        let mut out = self.clone();
        for (addr, v) in other.iter() {
            if out.insert(addr.clone(), v.clone()).is_some() {
                return Err(Error::InvalidSelection(format!(
                    "merge collision at address {addr}"
                )));
            }
        }
        Ok(out)
    }

    /// Split a complete assignment into (selected part, remainder).
    ///
    /// Errors when the selection mentions an address not present, or when the
    /// remainder would be empty (the selection must be a strict subset).
    pub fn split(&self, sel: &TargetSelection) -> Result<(Assignment, Assignment)> {
        let mut selected = Assignment::new();
        let mut rest = self.clone();
        for addr in sel.addresses() {
            match rest.remove(addr) {
                Some(v) => {
                    selected.insert(addr.clone(), v);
                }
                None => {
                    return Err(Error::InvalidSelection(format!(
                        "selection address {addr} not present in assignment"
                    )))
                }
            }
        }
        if rest.is_empty() {
            return Err(Error::InvalidSelection(
                "selection covers every address; a strict subset is required".into(),
            ));
        }
        Ok((selected, rest))
    }

    /// Flatten the real-valued content in address order. Errors on any
    /// discrete value.
    pub fn flatten_real(&self) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for (addr, v) in self.iter() {
            match v {
                Value::Real(x) => out.push(*x),
                Value::RealVec(xs) => out.extend_from_slice(xs),
                Value::Discrete(_) => {
                    return Err(Error::NonRealVariables(format!("{addr} is discrete")))
                }
            }
        }
        Ok(out)
    }
}

impl FromIterator<(Address, Value)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (Address, Value)>>(iter: I) -> Self {
        Assignment { values: iter.into_iter().collect() }
    }
}

/// An ordered set of target addresses — the "Y" whose entropy is estimated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetSelection {
    addrs: Vec<Address>,
}

impl TargetSelection {
    /// Build from an address list; rejects empty input and duplicates.
    pub fn new(addrs: Vec<Address>) -> Result<Self> {
        if addrs.is_empty() {
            return Err(Error::InvalidSelection("selection is empty".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for a in &addrs {
            if !seen.insert(a.clone()) {
                return Err(Error::InvalidSelection(format!("duplicate address {a}")));
            }
        }
        Ok(TargetSelection { addrs })
    }

    /// Parse from display strings (`["gain", "y@3"]`).
    pub fn parse(names: &[&str]) -> Result<Self> {
        TargetSelection::new(names.iter().map(|s| s.parse()).collect::<Result<_>>()?)
    }

    pub fn addresses(&self) -> &[Address] {
        &self.addrs
    }

    pub fn len(&self) -> usize {
        self.addrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.addrs.is_empty()
    }

    pub fn contains(&self, addr: &Address) -> bool {
        self.addrs.contains(addr)
    }

    /// Check every address exists in the model.
    pub fn validate(&self, model: &dyn JointModel) -> Result<()> {
        for a in &self.addrs {
            if model.support(a).is_none() {
                return Err(Error::InvalidSelection(format!(
                    "address {a} not in the model"
                )));
            }
        }
        Ok(())
    }

    /// Does the selection cover every model address?
    pub fn is_full(&self, model: &dyn JointModel) -> bool {
        self.addrs.len() == model.addresses().len()
    }

    /// The complementary (latent) addresses, in model order.
    pub fn latents(&self, model: &dyn JointModel) -> Vec<Address> {
        model
            .addresses()
            .iter()
            .filter(|a| !self.contains(a))
            .cloned()
            .collect()
    }

    /// Union with another address list, deduplicated, in model order where
    /// possible.
    pub fn union(&self, other: &[Address]) -> Result<TargetSelection> {
        let mut addrs = self.addrs.clone();
        for a in other {
            if !addrs.contains(a) {
                addrs.push(a.clone());
            }
        }
        TargetSelection::new(addrs)
    }

    /// Stable fingerprint for stream derivation and caching.
    pub fn fingerprint(&self) -> u64 {
        let mut sorted: Vec<String> = self.addrs.iter().map(|a| a.to_string()).collect();
        sorted.sort();
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for s in sorted {
            for b in s.as_bytes() {
                h ^= *b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
            h ^= 0xff;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }
}

/// A simulable joint distribution with pointwise-evaluable log density.
///
/// Densities are natural-log values against the product base measure; zero
/// density is `-inf`. `log_joint` must be a pure function of the assignment.
///
/// The `site_*` methods are optional capabilities for models with ancestral
/// (DAG) structure, keyed by the convention that `addresses()` lists sites
/// in a topological order. Implementing the two site methods unlocks the
/// provided ancestral-proposal methods, single-site refresh, and
/// observation-prefix SMC.
pub trait JointModel: Send + Sync {
    /// All addresses, in a fixed (for DAG models: topological) order.
    fn addresses(&self) -> &[Address];

    /// Declared support of one address, or `None` if unknown.
    fn support(&self, addr: &Address) -> Option<&Support>;

    /// Draw a complete assignment from the joint distribution.
    fn simulate(&self, rng: &mut dyn RngCore) -> Assignment;

    /// Log joint density of a complete assignment, `-inf` for zero density.
    fn log_joint(&self, a: &Assignment) -> Result<f64>;

    /// Concrete-type escape hatch for model-specific proposals.
    fn as_any(&self) -> &dyn Any;

    /// Does this model implement the per-site capabilities?
    fn has_site_structure(&self) -> bool {
        false
    }

    /// Sample `addr` from its ancestral conditional given the (at least
    /// parental) context `ctx`, returning the value and its log density.
    fn site_resimulate(
        &self,
        _rng: &mut dyn RngCore,
        _addr: &Address,
        _ctx: &Assignment,
    ) -> Result<(Value, f64)> {
        Err(Error::CapabilityMissing("site_resimulate"))
    }

    /// Log density of `a[addr]` under its ancestral conditional given the
    /// parent values in `a`.
    fn site_log_density(&self, _addr: &Address, _a: &Assignment) -> Result<f64> {
        Err(Error::CapabilityMissing("site_log_density"))
    }

    /// Ancestral proposal for the latents: walk the non-target addresses in
    /// model order, sampling each from its ancestral conditional with the
    /// target addresses clamped to `y`. Returns the latent assignment and
    /// its log proposal density.
    fn simulate_latents_given(
        &self,
        rng: &mut dyn RngCore,
        y: &Assignment,
    ) -> Result<(Assignment, f64)> {
        for addr in y.addresses() {
            if self.support(addr).is_none() {
                return Err(Error::InvalidSelection(format!("unknown address {addr}")));
            }
        }
        let mut merged = y.clone();
        let mut latents = Assignment::new();
        let mut log_q = 0.0;
        for addr in self.addresses() {
            if y.contains(addr) {
                continue;
            }
            let (v, ld) = self.site_resimulate(rng, addr, &merged)?;
            merged.insert(addr.clone(), v.clone());
            latents.insert(addr.clone(), v);
            log_q += ld;
        }
        Ok((latents, log_q))
    }

    /// Density of the ancestral latent proposal at `x` given clamped `y`.
    fn assess_latents_given(&self, x: &Assignment, y: &Assignment) -> Result<f64> {
        let merged = x.merge(y)?;
        let mut log_q = 0.0;
        for addr in x.addresses() {
            log_q += self.site_log_density(addr, &merged)?;
        }
        Ok(log_q)
    }

    /// True when the assignment covers exactly the model's addresses.
    fn is_complete(&self, a: &Assignment) -> bool {
        a.len() == self.addresses().len() && self.addresses().iter().all(|ad| a.contains(ad))
    }
}

/// Validate that `a` is complete for `model`, with a readable error.
pub fn require_complete(model: &dyn JointModel, a: &Assignment) -> Result<()> {
    if model.is_complete(a) {
        return Ok(());
    }
    let missing: Vec<String> = model
        .addresses()
        .iter()
        .filter(|ad| !a.contains(ad))
        .map(|ad| ad.to_string())
        .collect();
    let extra: Vec<String> = a
        .addresses()
        .filter(|ad| model.support(ad).is_none())
        .map(|ad| ad.to_string())
        .collect();
    Err(Error::IncompleteAssignment(format!(
        "missing [{}], unknown [{}]",
        missing.join(", "),
        extra.join(", ")
    )))
}

/// Simulate a complete assignment and split it by the selection:
/// `(selected part, latent part)`.
pub fn simulate_joint_split(
    model: &dyn JointModel,
    sel: &TargetSelection,
    rng: &mut dyn RngCore,
) -> Result<(Assignment, Assignment)> {
    let a = model.simulate(rng);
    a.split(sel)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn addr(s: &str) -> Address {
        s.parse().unwrap()
    }

    #[test]
    fn address_parse_and_display_round_trip() {
        for s in ["a", "state@3", "y@0"] {
            assert_eq!(addr(s).to_string(), s);
        }
        assert!(Address::from_str("@3").is_err());
        assert!(Address::from_str("y@x").is_err());
        assert!(Address::from_str("").is_err());
    }

    #[test]
    fn address_order_is_name_then_time() {
        let mut v = vec![addr("y@1"), addr("s@0"), addr("y@0"), addr("gain")];
        v.sort();
        let shown: Vec<String> = v.iter().map(|a| a.to_string()).collect();
        assert_eq!(shown, ["gain", "s@0", "y@0", "y@1"]);
    }

    #[test]
    fn merge_rejects_collisions() {
        let mut a = Assignment::new();
        a.insert(addr("x"), Value::Real(1.0));
        let mut b = Assignment::new();
        b.insert(addr("x"), Value::Real(2.0));
        assert!(matches!(a.merge(&b), Err(Error::InvalidSelection(_))));
    }

    #[test]
    fn split_then_merge_round_trips() {
        let mut a = Assignment::new();
        a.insert(addr("x"), Value::Real(1.0));
        a.insert(addr("y"), Value::Discrete(1));
        a.insert(addr("z"), Value::Real(-2.0));
        let sel = TargetSelection::parse(&["y"]).unwrap();
        let (sel_part, rest) = a.split(&sel).unwrap();
        assert_eq!(sel_part.len(), 1);
        assert_eq!(rest.len(), 2);
        assert_eq!(rest.merge(&sel_part).unwrap(), a);
    }

    #[test]
    fn split_rejects_full_and_unknown_selections() {
        let mut a = Assignment::new();
        a.insert(addr("x"), Value::Real(1.0));
        a.insert(addr("y"), Value::Real(2.0));
        let full = TargetSelection::parse(&["x", "y"]).unwrap();
        assert!(matches!(a.split(&full), Err(Error::InvalidSelection(_))));
        let unknown = TargetSelection::parse(&["q"]).unwrap();
        assert!(matches!(a.split(&unknown), Err(Error::InvalidSelection(_))));
    }

    #[test]
    fn selection_rejects_empty_and_duplicates() {
        assert!(TargetSelection::new(vec![]).is_err());
        assert!(TargetSelection::parse(&["a", "a"]).is_err());
    }

    #[test]
    fn value_real_rejects_non_finite() {
        assert!(Value::real(f64::NAN).is_err());
        assert!(Value::real(f64::INFINITY).is_err());
        assert!(Value::real(1.5).is_ok());
    }

    #[test]
    fn support_contains_checks_shape_and_range() {
        let d = Support::Discrete { cardinality: 3 };
        assert!(d.contains(&Value::Discrete(2)));
        assert!(!d.contains(&Value::Discrete(3)));
        assert!(!d.contains(&Value::Real(0.5)));
        assert!(Support::Real.contains(&Value::Real(0.5)));
        assert!(Support::RealVec { len: 2 }.contains(&Value::RealVec(vec![1.0, 2.0])));
        assert!(!Support::RealVec { len: 2 }.contains(&Value::RealVec(vec![1.0])));
    }

    #[test]
    fn selection_fingerprint_ignores_order() {
        let a = TargetSelection::parse(&["x", "y@2"]).unwrap();
        let b = TargetSelection::parse(&["y@2", "x"]).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = TargetSelection::parse(&["x", "y@3"]).unwrap();
        assert_ne!(a.fingerprint(), c.fingerprint());
    }
}

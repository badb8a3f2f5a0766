//! Exact enumeration oracle for small discrete models.
//!
//! Tabulates the full joint distribution of a model whose variables are all
//! discrete, by walking the mixed-radix state space and exponentiating the
//! log joint density. Everything downstream — subset entropies, marginal
//! probabilities, exact conditionals, KL divergences — is then straight
//! arithmetic over the table. The table is built from `simulate`-free
//! density evaluations only, so it is independent of every sampling code
//! path it is used to check.

use rand::Rng;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::logspace::pairwise_sum;
use crate::model::{Address, Assignment, JointModel, Support, TargetSelection, Value};

/// Hard cap on the number of joint states (2^20).
pub const MAX_STATES: u128 = 1 << 20;

/// Full joint table of an enumerable discrete model.
#[derive(Clone, Debug)]
pub struct Enumeration {
    addrs: Vec<Address>,
    cards: Vec<u32>,
    /// Joint probabilities; the last address varies fastest.
    probs: Vec<f64>,
}

/// An exact conditional distribution p(x | y) extracted from a table.
#[derive(Clone, Debug)]
pub struct Conditional {
    x_addrs: Vec<Address>,
    x_cards: Vec<u32>,
    /// Normalized probabilities over the complement states.
    probs: Vec<f64>,
    /// Marginal probability of the conditioning assignment.
    prob_y: f64,
}

fn decode(mut index: usize, cards: &[u32], out: &mut [u32]) {
    for k in (0..cards.len()).rev() {
        let c = cards[k] as usize;
        out[k] = (index % c) as u32;
        index /= c;
    }
}

impl Enumeration {
    /// Tabulate the joint distribution of `model`.
    ///
    /// Errors with [`Error::CapabilityMissing`] when any support is not
    /// discrete and [`Error::TooLargeToEnumerate`] past [`MAX_STATES`].
    pub fn from_model(model: &dyn JointModel) -> Result<Self> {
        let addrs: Vec<Address> = model.addresses().to_vec();
        let mut cards = Vec::with_capacity(addrs.len());
        for a in &addrs {
            match model.support(a) {
                Some(Support::Discrete { cardinality }) => cards.push(*cardinality),
                _ => return Err(Error::CapabilityMissing("enumeration requires discrete supports")),
            }
        }
        let states: u128 = cards.iter().map(|&c| c as u128).product();
        if states > MAX_STATES {
            return Err(Error::TooLargeToEnumerate { states, limit: MAX_STATES });
        }
        let states = states as usize;
        let mut probs = vec![0.0; states];
        let mut digits = vec![0u32; cards.len()];
        let mut a: Assignment = addrs
            .iter()
            .map(|ad| (ad.clone(), Value::Discrete(0)))
            .collect();
        for (i, p) in probs.iter_mut().enumerate() {
            decode(i, &cards, &mut digits);
            for (ad, &d) in addrs.iter().zip(digits.iter()) {
                a.insert(ad.clone(), Value::Discrete(d));
            }
            *p = model.log_joint(&a)?.exp();
        }
        Ok(Enumeration { addrs, cards, probs })
    }

    pub fn addresses(&self) -> &[Address] {
        &self.addrs
    }

    /// Total probability mass of the table (should be 1 for a proper model).
    pub fn total_mass(&self) -> f64 {
        pairwise_sum(&self.probs)
    }

    fn positions(&self, addrs: &[Address]) -> Result<Vec<usize>> {
        addrs
            .iter()
            .map(|a| {
                self.addrs
                    .iter()
                    .position(|b| b == a)
                    .ok_or_else(|| Error::InvalidSelection(format!("address {a} not in the model")))
            })
            .collect()
    }

    /// Marginal table over the given addresses (in model order), returning
    /// `(cards, probs)` with the last listed address varying fastest.
    pub fn marginal(&self, sel: &TargetSelection) -> Result<(Vec<u32>, Vec<f64>)> {
        let mut pos = self.positions(sel.addresses())?;
        pos.sort_unstable();
        let sub_cards: Vec<u32> = pos.iter().map(|&p| self.cards[p]).collect();
        let size: usize = sub_cards.iter().map(|&c| c as usize).product();
        let mut out = vec![0.0; size];
        let mut digits = vec![0u32; self.cards.len()];
        for (i, &p) in self.probs.iter().enumerate() {
            decode(i, &self.cards, &mut digits);
            let mut idx = 0usize;
            for (&pk, &ck) in pos.iter().zip(sub_cards.iter()) {
                idx = idx * ck as usize + digits[pk] as usize;
            }
            out[idx] += p;
        }
        Ok((sub_cards, out))
    }

    /// Exact Shannon entropy (nats) of the marginal over `sel`.
    pub fn entropy(&self, sel: &TargetSelection) -> Result<f64> {
        let (_, probs) = self.marginal(sel)?;
        Ok(table_entropy(&probs))
    }

    /// Exact entropy of the full joint.
    pub fn joint_entropy(&self) -> f64 {
        table_entropy(&self.probs)
    }

    /// Marginal probability of a partial assignment (all addresses of the
    /// assignment must exist; values must be discrete).
    pub fn prob_of(&self, partial: &Assignment) -> Result<f64> {
        let addrs: Vec<Address> = partial.addresses().cloned().collect();
        let pos = self.positions(&addrs)?;
        let mut want = Vec::with_capacity(pos.len());
        for (a, &_p) in addrs.iter().zip(pos.iter()) {
            want.push(partial.expect(a)?.expect_discrete(a)?);
        }
        let mut digits = vec![0u32; self.cards.len()];
        let mut total = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            decode(i, &self.cards, &mut digits);
            if pos.iter().zip(want.iter()).all(|(&k, &w)| digits[k] == w) {
                total += p;
            }
        }
        Ok(total)
    }

    /// Exact conditional distribution over the complement of `y`'s addresses.
    pub fn conditional_given(&self, y: &Assignment) -> Result<Conditional> {
        let y_addrs: Vec<Address> = y.addresses().cloned().collect();
        let y_pos = self.positions(&y_addrs)?;
        let mut y_digit = vec![u32::MAX; self.cards.len()];
        for (a, &p) in y_addrs.iter().zip(y_pos.iter()) {
            y_digit[p] = y.expect(a)?.expect_discrete(a)?;
        }
        let x_pos: Vec<usize> =
            (0..self.cards.len()).filter(|p| !y_pos.contains(p)).collect();
        if x_pos.is_empty() {
            return Err(Error::InvalidSelection(
                "conditioning on every address leaves nothing to condition".into(),
            ));
        }
        let x_addrs: Vec<Address> = x_pos.iter().map(|&p| self.addrs[p].clone()).collect();
        let x_cards: Vec<u32> = x_pos.iter().map(|&p| self.cards[p]).collect();
        let size: usize = x_cards.iter().map(|&c| c as usize).product();
        let mut probs = vec![0.0; size];
        let mut digits = vec![0u32; self.cards.len()];
        for (i, &p) in self.probs.iter().enumerate() {
            decode(i, &self.cards, &mut digits);
            if y_pos.iter().all(|&k| digits[k] == y_digit[k]) {
                let mut idx = 0usize;
                for (&pk, &ck) in x_pos.iter().zip(x_cards.iter()) {
                    idx = idx * ck as usize + digits[pk] as usize;
                }
                probs[idx] += p;
            }
        }
        let prob_y = pairwise_sum(&probs);
        if prob_y <= 0.0 {
            return Err(Error::ZeroDensityConditioningPoint);
        }
        for p in &mut probs {
            *p /= prob_y;
        }
        Ok(Conditional { x_addrs, x_cards, probs, prob_y })
    }
}

impl Conditional {
    pub fn prob_y(&self) -> f64 {
        self.prob_y
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of one complement assignment.
    pub fn prob_of(&self, x: &Assignment) -> Result<f64> {
        let mut idx = 0usize;
        for (a, &c) in self.x_addrs.iter().zip(self.x_cards.iter()) {
            let d = x.expect(a)?.expect_discrete(a)?;
            if d >= c {
                return Err(Error::InvalidValue(format!("value out of range at {a}")));
            }
            idx = idx * c as usize + d as usize;
        }
        Ok(self.probs[idx])
    }

    /// Draw one exact conditional sample (inverse CDF on a single uniform).
    pub fn sample(&self, rng: &mut dyn RngCore) -> Assignment {
        let u: f64 = rng.gen::<f64>();
        let mut cum = 0.0;
        let mut chosen = self.probs.len() - 1;
        for (i, &p) in self.probs.iter().enumerate() {
            cum += p;
            if u < cum {
                chosen = i;
                break;
            }
        }
        let mut digits = vec![0u32; self.x_cards.len()];
        decode(chosen, &self.x_cards, &mut digits);
        self.x_addrs
            .iter()
            .zip(digits.iter())
            .map(|(a, &d)| (a.clone(), Value::Discrete(d)))
            .collect()
    }
}

/// Shannon entropy (nats) of a probability table; zero entries contribute 0.
pub fn table_entropy(probs: &[f64]) -> f64 {
    let terms: Vec<f64> = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .collect();
    pairwise_sum(&terms)
}

/// KL divergence Σ p ln(p/q) between two aligned tables; `+inf` when p puts
/// mass where q has none.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Config(format!(
            "KL tables have mismatched sizes {} and {}",
            p.len(),
            q.len()
        )));
    }
    let mut terms = Vec::with_capacity(p.len());
    for (&pi, &qi) in p.iter().zip(q.iter()) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Ok(f64::INFINITY);
        }
        terms.push(pi * (pi / qi).ln());
    }
    Ok(pairwise_sum(&terms))
}

/// Exact entropy of `sel` by full enumeration — the plug-in path for
/// enumerable models.
pub fn exact_entropy_plugin(model: &dyn JointModel, sel: &TargetSelection) -> Result<f64> {
    sel.validate(model)?;
    let table = Enumeration::from_model(model)?;
    if sel.is_full(model) {
        Ok(table.joint_entropy())
    } else {
        table.entropy(sel)
    }
}

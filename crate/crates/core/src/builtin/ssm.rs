//! Scalar linear-Gaussian state-space model with exact oracles.
//!
//! Dynamics, for t = 0 .. horizon-1 with exogenous input u_t:
//!
//!   s_0 ~ N(init_mean + u_0, init_var)
//!   s_t ~ N(gain * trans_coeff * s_{t-1} + u_t, trans_var)
//!   y_t ~ N(obs_coeff * s_t, obs_var)
//!
//! The optional `gain` site is a discrete prior over a few scalar values
//! multiplying the transition coefficient; conditioned on it the model is
//! linear-Gaussian, so a Kalman filter gives the exact observation
//! marginal, forward-filter backward-sampling gives exact posterior state
//! draws, and observation covariances assemble in closed form. Those three
//! oracles back the sequential-sampler tests, and the Rao-Blackwellized
//! mixture oracle gives ground truth for how much a set of measurement
//! times reveals about the gain.
//!
//! Addresses sort name-then-time ("gain", then "s"@0.., then "y"@0..),
//! which is simultaneously a topological order and the order sequential
//! samplers add observation factors in.

use std::any::Any;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::RngCore;
use rand_distr::StandardNormal;

use crate::builtin::mvn::{gaussian_entropy, mvn_logpdf};
use crate::error::{Error, Result};
use crate::logspace::{log_sum_exp, pairwise_mean, sample_variance};
use crate::model::{Address, Assignment, JointModel, Support, Value};
use crate::special::normal_logpdf;
use crate::stream::{domain, substream};

/// Discrete prior over the transition gain multiplier.
#[derive(Clone, Debug)]
pub struct GainPrior {
    pub values: Vec<f64>,
    pub probs: Vec<f64>,
}

impl GainPrior {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() || self.values.len() != self.probs.len() {
            return Err(Error::ModelLoad("gain prior values/probs must align".into()));
        }
        if self.probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::ModelLoad("gain prior probabilities outside [0,1]".into()));
        }
        let s: f64 = self.probs.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::ModelLoad(format!("gain prior sums to {s}")));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::ModelLoad("gain prior values must be finite".into()));
        }
        Ok(())
    }

    fn index_of(&self, g: f64) -> Option<usize> {
        self.values.iter().position(|&v| v == g)
    }
}

/// Scalar linear-Gaussian state-space model; see the module notes.
#[derive(Clone, Debug)]
pub struct LinearGaussianSsm {
    pub horizon: usize,
    pub init_mean: f64,
    pub init_var: f64,
    pub trans_coeff: f64,
    pub trans_var: f64,
    pub obs_coeff: f64,
    pub obs_var: f64,
    /// Additive state-mean input per step (empty means all zeros).
    pub inputs: Vec<f64>,
    pub gain: Option<GainPrior>,
    addrs: Vec<Address>,
}

impl LinearGaussianSsm {
    pub fn new(
        horizon: usize,
        init_mean: f64,
        init_var: f64,
        trans_coeff: f64,
        trans_var: f64,
        obs_coeff: f64,
        obs_var: f64,
        inputs: Vec<f64>,
        gain: Option<GainPrior>,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::ModelLoad("horizon must be at least 1".into()));
        }
        if init_var <= 0.0 || trans_var <= 0.0 || obs_var <= 0.0 {
            return Err(Error::ModelLoad("variances must be positive".into()));
        }
        let inputs = if inputs.is_empty() { vec![0.0; horizon] } else { inputs };
        if inputs.len() != horizon {
            return Err(Error::ModelLoad(format!(
                "input schedule has {} entries for horizon {horizon}",
                inputs.len()
            )));
        }
        if let Some(g) = &gain {
            g.validate()?;
        }
        let mut addrs = Vec::with_capacity(2 * horizon + 1);
        if gain.is_some() {
            addrs.push(Address::new("gain"));
        }
        for t in 0..horizon {
            addrs.push(Address::indexed("s", t as u32));
        }
        for t in 0..horizon {
            addrs.push(Address::indexed("y", t as u32));
        }
        Ok(LinearGaussianSsm {
            horizon,
            init_mean,
            init_var,
            trans_coeff,
            trans_var,
            obs_coeff,
            obs_var,
            inputs,
            gain,
            addrs,
        })
    }

    /// Fixed-gain model used by the sequential-sampler tests.
    pub fn plain(horizon: usize) -> Self {
        LinearGaussianSsm::new(horizon, 0.0, 1.0, 0.9, 0.4, 1.0, 0.5, vec![], None)
            .expect("pinned configuration is valid")
    }

    /// Model with a three-valued gain prior, for information-gain studies.
    pub fn with_gain_prior(horizon: usize) -> Self {
        LinearGaussianSsm::new(
            horizon,
            0.0,
            1.0,
            1.0,
            0.3,
            1.0,
            0.4,
            vec![],
            Some(GainPrior {
                values: vec![0.3, 0.7, 1.1],
                probs: vec![0.25, 0.5, 0.25],
            }),
        )
        .expect("pinned configuration is valid")
    }

    pub fn observation_addresses(&self) -> Vec<Address> {
        (0..self.horizon)
            .map(|t| Address::indexed("y", t as u32))
            .collect()
    }

    fn gain_value(&self, a: &Assignment) -> Result<f64> {
        match &self.gain {
            None => Ok(1.0),
            Some(_) => {
                let addr = Address::new("gain");
                a.expect(&addr)?.expect_real(&addr)
            }
        }
    }

    fn state(&self, a: &Assignment, t: usize) -> Result<f64> {
        let addr = Address::indexed("s", t as u32);
        a.expect(&addr)?.expect_real(&addr)
    }

    /// Conditional (mean, sd) for the site; context must hold its parents.
    fn site_conditional(&self, addr: &Address, ctx: &Assignment) -> Result<(f64, f64)> {
        match (addr.name(), addr.time()) {
            ("s", Some(0)) => Ok((self.init_mean + self.inputs[0], self.init_var.sqrt())),
            ("s", Some(t)) => {
                let t = t as usize;
                if t >= self.horizon {
                    return Err(Error::IndexOutOfHorizon { index: t, horizon: self.horizon });
                }
                let g = self.gain_value(ctx)?;
                let prev = self.state(ctx, t - 1)?;
                Ok((
                    g * self.trans_coeff * prev + self.inputs[t],
                    self.trans_var.sqrt(),
                ))
            }
            ("y", Some(t)) => {
                let t = t as usize;
                if t >= self.horizon {
                    return Err(Error::IndexOutOfHorizon { index: t, horizon: self.horizon });
                }
                let s = self.state(ctx, t)?;
                Ok((self.obs_coeff * s, self.obs_var.sqrt()))
            }
            _ => Err(Error::InvalidSelection(format!("unknown address {addr}"))),
        }
    }

    /// Effective transition multiplier for a fixed gain.
    fn phi(&self, gain: f64) -> f64 {
        gain * self.trans_coeff
    }

    /// State means under a fixed gain (no noise).
    fn state_means(&self, gain: f64) -> Vec<f64> {
        let phi = self.phi(gain);
        let mut m = Vec::with_capacity(self.horizon);
        m.push(self.init_mean + self.inputs[0]);
        for t in 1..self.horizon {
            m.push(phi * m[t - 1] + self.inputs[t]);
        }
        m
    }

    /// Mean vector and covariance of the selected observation times under
    /// a fixed gain, assembled in closed form:
    /// Var s_0 = init_var; Var s_t = phi^2 Var s_{t-1} + trans_var;
    /// Cov(s_t, s_tau) = phi^(t-tau) Var s_tau for t >= tau;
    /// Cov(y_t, y_tau) = obs_coeff^2 Cov(s_t, s_tau) + [t = tau] obs_var.
    pub fn observation_moments(
        &self,
        gain: f64,
        times: &[usize],
    ) -> Result<(DVector<f64>, DMatrix<f64>)> {
        for &t in times {
            if t >= self.horizon {
                return Err(Error::IndexOutOfHorizon { index: t, horizon: self.horizon });
            }
        }
        let phi = self.phi(gain);
        let means = self.state_means(gain);
        let mut var_s = Vec::with_capacity(self.horizon);
        var_s.push(self.init_var);
        for _t in 1..self.horizon {
            var_s.push(phi * phi * var_s.last().unwrap() + self.trans_var);
        }
        let c = self.obs_coeff;
        let mean = DVector::from_fn(times.len(), |i, _| c * means[times[i]]);
        let cov = DMatrix::from_fn(times.len(), times.len(), |i, j| {
            let (t, tau) = (times[i].max(times[j]), times[i].min(times[j]));
            let cov_s = phi.powi((t - tau) as i32) * var_s[tau];
            c * c * cov_s + if times[i] == times[j] { self.obs_var } else { 0.0 }
        });
        Ok((mean, cov))
    }

    /// Exact log marginal density of the observed `y` sites under a fixed
    /// gain: scalar Kalman filter that predicts at every step and updates
    /// only at observed times, so any subset of times is supported.
    pub fn kalman_log_marginal_fixed(&self, gain: f64, y: &Assignment) -> Result<f64> {
        let phi = self.phi(gain);
        let mut ll = 0.0;
        let mut m = 0.0;
        let mut p = 0.0;
        for t in 0..self.horizon {
            if t == 0 {
                m = self.init_mean + self.inputs[0];
                p = self.init_var;
            } else {
                m = phi * m + self.inputs[t];
                p = phi * phi * p + self.trans_var;
            }
            let addr = Address::indexed("y", t as u32);
            if let Some(v) = y.get(&addr) {
                let obs = v.expect_real(&addr)?;
                let c = self.obs_coeff;
                let s = c * c * p + self.obs_var;
                ll += normal_logpdf(obs, c * m, s.sqrt());
                let k = p * c / s;
                m += k * (obs - c * m);
                p *= 1.0 - k * c;
            }
        }
        for addr in y.addresses() {
            if addr.name() != "y" {
                return Err(Error::InvalidSelection(format!(
                    "marginal oracle only covers observation sites, got {addr}"
                )));
            }
        }
        Ok(ll)
    }

    /// Exact log marginal of observed sites, mixing over the gain prior
    /// when one is declared.
    pub fn kalman_log_marginal(&self, y: &Assignment) -> Result<f64> {
        match &self.gain {
            None => self.kalman_log_marginal_fixed(1.0, y),
            Some(g) => {
                let comps: Vec<f64> = g
                    .values
                    .iter()
                    .zip(&g.probs)
                    .map(|(&v, &p)| {
                        Ok(if p > 0.0 {
                            p.ln() + self.kalman_log_marginal_fixed(v, y)?
                        } else {
                            f64::NEG_INFINITY
                        })
                    })
                    .collect::<Result<_>>()?;
                Ok(log_sum_exp(&comps))
            }
        }
    }

    /// Exact posterior draw of the latent sites given observations:
    /// forward filter, backward sample. With a gain prior the gain is
    /// drawn from its exact posterior first. Observations may cover any
    /// subset of times.
    pub fn posterior_latents(
        &self,
        y: &Assignment,
        rng: &mut dyn RngCore,
    ) -> Result<Assignment> {
        let (gain, mut out) = match &self.gain {
            None => (1.0, Assignment::new()),
            Some(g) => {
                let logits: Vec<f64> = g
                    .values
                    .iter()
                    .zip(&g.probs)
                    .map(|(&v, &p)| {
                        Ok(if p > 0.0 {
                            p.ln() + self.kalman_log_marginal_fixed(v, y)?
                        } else {
                            f64::NEG_INFINITY
                        })
                    })
                    .collect::<Result<_>>()?;
                let k = crate::logspace::categorical_from_log_weights(rng, &logits)?;
                let mut a = Assignment::new();
                a.insert(Address::new("gain"), Value::Real(g.values[k]));
                (g.values[k], a)
            }
        };
        let phi = self.phi(gain);
        // Forward filter, remembering filtered and predicted moments.
        let mut fm = vec![0.0; self.horizon];
        let mut fp = vec![0.0; self.horizon];
        let mut pm = vec![0.0; self.horizon];
        let mut pp = vec![0.0; self.horizon];
        for t in 0..self.horizon {
            if t == 0 {
                pm[0] = self.init_mean + self.inputs[0];
                pp[0] = self.init_var;
            } else {
                pm[t] = phi * fm[t - 1] + self.inputs[t];
                pp[t] = phi * phi * fp[t - 1] + self.trans_var;
            }
            let addr = Address::indexed("y", t as u32);
            if let Some(v) = y.get(&addr) {
                let obs = v.expect_real(&addr)?;
                let c = self.obs_coeff;
                let s = c * c * pp[t] + self.obs_var;
                let k = pp[t] * c / s;
                fm[t] = pm[t] + k * (obs - c * pm[t]);
                fp[t] = pp[t] * (1.0 - k * c);
            } else {
                fm[t] = pm[t];
                fp[t] = pp[t];
            }
        }
        // Backward sample.
        let mut states = vec![0.0; self.horizon];
        let last = self.horizon - 1;
        let z: f64 = rng.sample(StandardNormal);
        states[last] = fm[last] + fp[last].sqrt() * z;
        for t in (0..last).rev() {
            let j = fp[t] * phi / pp[t + 1];
            let mean = fm[t] + j * (states[t + 1] - pm[t + 1]);
            let var = (fp[t] - j * j * pp[t + 1]).max(0.0);
            let z: f64 = rng.sample(StandardNormal);
            states[t] = mean + var.sqrt() * z;
        }
        for (t, s) in states.iter().enumerate() {
            out.insert(Address::indexed("s", t as u32), Value::Real(*s));
        }
        Ok(out)
    }

    /// Ground truth for how much the observations at `times` reveal about
    /// the gain: I(gain : y_times) = H(y_times) - H(y_times | gain).
    ///
    /// The conditional term is a probability-weighted sum of Gaussian
    /// entropies (closed form). The marginal term is a seeded Monte Carlo
    /// average of the negative log mixture density; the returned stderr is
    /// that average's standard error.
    pub fn gain_information_oracle(
        &self,
        times: &[usize],
        samples: usize,
        seed: u64,
    ) -> Result<(f64, f64)> {
        let g = self
            .gain
            .as_ref()
            .ok_or(Error::CapabilityMissing("model has no gain site"))?;
        let mut comps = Vec::new();
        for (&v, &p) in g.values.iter().zip(&g.probs) {
            let (mean, cov) = self.observation_moments(v, times)?;
            let chol = nalgebra::Cholesky::new(cov.clone()).ok_or(Error::SingularSubmatrix)?;
            comps.push((p, mean, cov, chol.l()));
        }
        let h_cond: f64 = comps
            .iter()
            .map(|(p, _, cov, _)| Ok(p * gaussian_entropy(cov)?))
            .sum::<Result<f64>>()?;
        let mut rng = substream(seed, domain::ORACLE, 0x55);
        let mut terms = Vec::with_capacity(samples);
        for _ in 0..samples {
            // Draw a component, then a draw from it.
            let u: f64 = rng.gen::<f64>();
            let mut cum = 0.0;
            let mut pick = comps.len() - 1;
            for (k, (p, _, _, _)) in comps.iter().enumerate() {
                cum += p;
                if u < cum {
                    pick = k;
                    break;
                }
            }
            let (_, mean, _, l) = &comps[pick];
            let z = DVector::from_fn(times.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
            let yv = mean + l * z;
            let mix: Vec<f64> = comps
                .iter()
                .map(|(p, m, _, l)| {
                    Ok(if *p > 0.0 {
                        p.ln() + mvn_logpdf(&yv, m, l)?
                    } else {
                        f64::NEG_INFINITY
                    })
                })
                .collect::<Result<_>>()?;
            terms.push(-log_sum_exp(&mix));
        }
        let h_marg = pairwise_mean(&terms);
        let se = (sample_variance(&terms) / samples as f64).sqrt();
        Ok((h_marg - h_cond, se))
    }
}

impl JointModel for LinearGaussianSsm {
    fn addresses(&self) -> &[Address] {
        &self.addrs
    }

    fn support(&self, addr: &Address) -> Option<&Support> {
        if self.addrs.contains(addr) {
            Some(&Support::Real)
        } else {
            None
        }
    }

    fn simulate(&self, rng: &mut dyn RngCore) -> Assignment {
        let mut a = Assignment::new();
        if let Some(g) = &self.gain {
            let u: f64 = rng.gen::<f64>();
            let mut cum = 0.0;
            let mut pick = g.values.len() - 1;
            for (k, &p) in g.probs.iter().enumerate() {
                cum += p;
                if u < cum {
                    pick = k;
                    break;
                }
            }
            a.insert(Address::new("gain"), Value::Real(g.values[pick]));
        }
        for t in 0..self.horizon {
            let addr = Address::indexed("s", t as u32);
            let (m, sd) = self.site_conditional(&addr, &a).expect("parents present");
            let z: f64 = rng.sample(StandardNormal);
            a.insert(addr, Value::Real(m + sd * z));
        }
        for t in 0..self.horizon {
            let addr = Address::indexed("y", t as u32);
            let (m, sd) = self.site_conditional(&addr, &a).expect("parents present");
            let z: f64 = rng.sample(StandardNormal);
            a.insert(addr, Value::Real(m + sd * z));
        }
        a
    }

    fn log_joint(&self, a: &Assignment) -> Result<f64> {
        crate::model::require_complete(self, a)?;
        let mut total = 0.0;
        for addr in &self.addrs {
            total += self.site_log_density(addr, a)?;
            if total == f64::NEG_INFINITY {
                return Ok(total);
            }
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
        if addr.name() == "gain" {
            let g = self
                .gain
                .as_ref()
                .ok_or(Error::CapabilityMissing("model has no gain site"))?;
            let u: f64 = rng.gen::<f64>();
            let mut cum = 0.0;
            let mut pick = g.values.len() - 1;
            for (k, &p) in g.probs.iter().enumerate() {
                cum += p;
                if u < cum {
                    pick = k;
                    break;
                }
            }
            return Ok((Value::Real(g.values[pick]), g.probs[pick].ln()));
        }
        let (m, sd) = self.site_conditional(addr, ctx)?;
        let z: f64 = rng.sample(StandardNormal);
        let x = m + sd * z;
        Ok((Value::Real(x), normal_logpdf(x, m, sd)))
    }

    fn site_log_density(&self, addr: &Address, a: &Assignment) -> Result<f64> {
        if addr.name() == "gain" {
            let g = self
                .gain
                .as_ref()
                .ok_or(Error::CapabilityMissing("model has no gain site"))?;
            let v = a.expect(addr)?.expect_real(addr)?;
            return Ok(match g.index_of(v) {
                Some(k) if g.probs[k] > 0.0 => g.probs[k].ln(),
                _ => f64::NEG_INFINITY,
            });
        }
        let (m, sd) = self.site_conditional(addr, a)?;
        let x = a.expect(addr)?.expect_real(addr)?;
        Ok(normal_logpdf(x, m, sd))
    }
}

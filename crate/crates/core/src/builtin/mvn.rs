//! Multivariate normal joint model with closed-form oracles.
//!
//! Sites are scalar, ordered as declared; site i conditioned on the prefix
//! before it is the usual sequential Gaussian conditional, read directly
//! off the Cholesky factor: with x = mean + L eps, site i has conditional
//! mean mean_i + sum_{j<i} L_ij eps_j and standard deviation L_ii.
//!
//! Because every marginal and conditional is Gaussian, subset entropies,
//! conditional distributions, and subset log-marginals are all available
//! in closed form — this model is the continuous ground-truth source for
//! interval tests, and `ExactConditionalProposal` exposes the posterior
//! itself as a proposal, which collapses both entropy bounds onto the
//! plug-in estimate.

use std::any::Any;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::RngCore;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{Address, Assignment, JointModel, Support, TargetSelection, Value};
use crate::stream::{domain, substream};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Log-density of N(mean, L Lᵀ) at x, given the lower Cholesky factor.
pub(crate) fn mvn_logpdf(
    x: &DVector<f64>,
    mean: &DVector<f64>,
    chol_l: &DMatrix<f64>,
) -> Result<f64> {
    let diff = x - mean;
    let sol = chol_l
        .solve_lower_triangular(&diff)
        .ok_or(Error::SingularSubmatrix)?;
    let logdet: f64 = chol_l.diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
    Ok(-0.5 * (x.len() as f64 * LN_2PI + logdet + sol.norm_squared()))
}

/// Entropy of a Gaussian with the given covariance: (k/2) ln(2*pi*e) plus
/// half the log determinant.
pub fn gaussian_entropy(cov: &DMatrix<f64>) -> Result<f64> {
    let chol = nalgebra::Cholesky::new(cov.clone()).ok_or(Error::SingularSubmatrix)?;
    let logdet: f64 = chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
    Ok(0.5 * (cov.nrows() as f64 * (LN_2PI + 1.0) + logdet))
}

/// KL(N(m0, S0) || N(m1, S1)) in nats.
pub fn gaussian_kl(
    m0: &DVector<f64>,
    s0: &DMatrix<f64>,
    m1: &DVector<f64>,
    s1: &DMatrix<f64>,
) -> Result<f64> {
    let k = m0.len() as f64;
    let chol1 = nalgebra::Cholesky::new(s1.clone()).ok_or(Error::SingularSubmatrix)?;
    let chol0 = nalgebra::Cholesky::new(s0.clone()).ok_or(Error::SingularSubmatrix)?;
    let logdet1: f64 = chol1.l().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
    let logdet0: f64 = chol0.l().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
    let s1_inv = chol1.inverse();
    let trace = (&s1_inv * s0).trace();
    let diff = m1 - m0;
    let quad = (diff.transpose() * &s1_inv * &diff)[(0, 0)];
    Ok(0.5 * (trace + quad - k + logdet1 - logdet0))
}

/// A jointly Gaussian model over named scalar sites.
#[derive(Clone, Debug)]
pub struct MvnModel {
    addrs: Vec<Address>,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    chol_l: DMatrix<f64>,
    support: Support,
}

impl MvnModel {
    pub fn new(names: Vec<String>, mean: Vec<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = names.len();
        if mean.len() != n || cov.nrows() != n || cov.ncols() != n {
            return Err(Error::ModelLoad(
                "mean and covariance must match the variable count".into(),
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        for name in &names {
            if name.is_empty() || !seen.insert(name.clone()) {
                return Err(Error::ModelLoad(format!("bad variable name '{name}'")));
            }
        }
        for i in 0..n {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-9 {
                    return Err(Error::ModelLoad("covariance is not symmetric".into()));
                }
            }
        }
        let chol =
            nalgebra::Cholesky::new(cov.clone()).ok_or_else(|| {
                Error::ModelLoad("covariance is not positive definite".into())
            })?;
        Ok(MvnModel {
            addrs: names.iter().map(|n| Address::new(n)).collect(),
            mean: DVector::from_vec(mean),
            cov,
            chol_l: chol.l(),
            support: Support::Real,
        })
    }

    /// Standard normal in `dim` dimensions with zero-padded site names, so
    /// lexicographic address order equals declared order.
    pub fn standard(dim: usize) -> Self {
        let cov = DMatrix::identity(dim, dim);
        MvnModel::new(site_names(dim), vec![0.0; dim], cov).expect("identity is valid")
    }

    /// Bivariate normal with unit variances and correlation `rho`; its
    /// mutual information is -0.5 ln(1 - rho^2).
    pub fn bivariate(rho: f64) -> Result<Self> {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
        MvnModel::new(vec!["x1".into(), "x2".into()], vec![0.0; 2], cov)
    }

    /// A seeded random covariance with substantial cross-correlations:
    /// G Gᵀ / dim + 0.25 I for standard-normal G, random means.
    pub fn random_correlated(dim: usize, seed: u64) -> Self {
        let mut rng = substream(seed, domain::SETUP, 0x4D56);
        let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let cov = &g * g.transpose() / dim as f64 + DMatrix::identity(dim, dim) * 0.25;
        let mean = (0..dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        MvnModel::new(site_names(dim), mean, cov).expect("constructed SPD covariance")
    }

    pub fn dim(&self) -> usize {
        self.addrs.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    fn index_of(&self, addr: &Address) -> Result<usize> {
        self.addrs
            .iter()
            .position(|a| a == addr)
            .ok_or_else(|| Error::InvalidSelection(format!("unknown address {addr}")))
    }

    fn indexes_of(&self, sel: &TargetSelection) -> Result<Vec<usize>> {
        sel.addresses().iter().map(|a| self.index_of(a)).collect()
    }

    fn vector_of(&self, a: &Assignment, idx: &[usize]) -> Result<DVector<f64>> {
        let mut v = DVector::zeros(idx.len());
        for (k, &i) in idx.iter().enumerate() {
            v[k] = a.expect(&self.addrs[i])?.expect_real(&self.addrs[i])?;
        }
        Ok(v)
    }

    fn submatrix(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.cov[(rows[i], cols[j])])
    }

    /// Exact entropy of the marginal over the selected sites.
    pub fn subset_entropy(&self, sel: &TargetSelection) -> Result<f64> {
        let idx = self.indexes_of(sel)?;
        gaussian_entropy(&self.submatrix(&idx, &idx))
    }

    /// Exact log density of the observed sites under their marginal.
    pub fn log_marginal_of(&self, partial: &Assignment) -> Result<f64> {
        let idx: Vec<usize> = partial
            .addresses()
            .map(|a| self.index_of(a))
            .collect::<Result<_>>()?;
        let x = self.vector_of(partial, &idx)?;
        let mut mean = DVector::zeros(idx.len());
        for (k, &i) in idx.iter().enumerate() {
            mean[k] = self.mean[i];
        }
        let sub = self.submatrix(&idx, &idx);
        let chol = nalgebra::Cholesky::new(sub).ok_or(Error::SingularSubmatrix)?;
        mvn_logpdf(&x, &mean, &chol.l())
    }

    /// Exact conditional of the unobserved sites given `obs`. Returns the
    /// remaining addresses in declared order with the conditional mean and
    /// covariance.
    pub fn conditional_given(
        &self,
        obs: &Assignment,
    ) -> Result<(Vec<Address>, DVector<f64>, DMatrix<f64>)> {
        let obs_idx: Vec<usize> = obs
            .addresses()
            .map(|a| self.index_of(a))
            .collect::<Result<_>>()?;
        let rest_idx: Vec<usize> = (0..self.dim()).filter(|i| !obs_idx.contains(i)).collect();
        if rest_idx.is_empty() {
            return Err(Error::InvalidSelection(
                "conditioning on every site leaves nothing to propose".into(),
            ));
        }
        let y = self.vector_of(obs, &obs_idx)?;
        let mean_b = DVector::from_fn(obs_idx.len(), |i, _| self.mean[obs_idx[i]]);
        let mean_a = DVector::from_fn(rest_idx.len(), |i, _| self.mean[rest_idx[i]]);
        let s_bb = self.submatrix(&obs_idx, &obs_idx);
        let s_ab = self.submatrix(&rest_idx, &obs_idx);
        let s_aa = self.submatrix(&rest_idx, &rest_idx);
        let chol = nalgebra::Cholesky::new(s_bb).ok_or(Error::SingularSubmatrix)?;
        let gain = chol.solve(&(y - mean_b));
        let cond_mean = mean_a + &s_ab * gain;
        let cond_cov = &s_aa - &s_ab * chol.solve(&s_ab.transpose());
        let addrs = rest_idx.iter().map(|&i| self.addrs[i].clone()).collect();
        Ok((addrs, cond_mean, cond_cov))
    }

    /// Sequential conditional parameters of site `i` given the prefix of
    /// sites before it: (mean, stddev).
    fn prefix_conditional(&self, i: usize, ctx: &Assignment) -> Result<(f64, f64)> {
        // Solve L[..i, ..i] eps = x[..i] - mean[..i] by forward substitution.
        let mut eps = vec![0.0; i];
        for j in 0..i {
            let xj = ctx.expect(&self.addrs[j])?.expect_real(&self.addrs[j])?;
            let mut acc = xj - self.mean[j];
            for (k, ek) in eps.iter().enumerate().take(j) {
                acc -= self.chol_l[(j, k)] * ek;
            }
            eps[j] = acc / self.chol_l[(j, j)];
        }
        let mut m = self.mean[i];
        for (j, ej) in eps.iter().enumerate() {
            m += self.chol_l[(i, j)] * ej;
        }
        Ok((m, self.chol_l[(i, i)]))
    }
}

fn site_names(dim: usize) -> Vec<String> {
    let width = dim.to_string().len();
    (1..=dim).map(|i| format!("x{i:0width$}")).collect()
}

impl JointModel for MvnModel {
    fn addresses(&self) -> &[Address] {
        &self.addrs
    }

    fn support(&self, addr: &Address) -> Option<&Support> {
        if self.addrs.contains(addr) {
            Some(&self.support)
        } else {
            None
        }
    }

    fn simulate(&self, rng: &mut dyn RngCore) -> Assignment {
        let dim = self.dim();
        let eps = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = &self.mean + &self.chol_l * eps;
        self.addrs
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), Value::Real(x[i])))
            .collect()
    }

    fn log_joint(&self, a: &Assignment) -> Result<f64> {
        crate::model::require_complete(self, a)?;
        let idx: Vec<usize> = (0..self.dim()).collect();
        let x = self.vector_of(a, &idx)?;
        mvn_logpdf(&x, &self.mean, &self.chol_l)
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
        let (m, s) = self.prefix_conditional(i, ctx)?;
        let z: f64 = rng.sample(StandardNormal);
        let x = m + s * z;
        Ok((Value::Real(x), crate::special::normal_logpdf(x, m, s)))
    }

    fn site_log_density(&self, addr: &Address, a: &Assignment) -> Result<f64> {
        let i = self.index_of(addr)?;
        let (m, s) = self.prefix_conditional(i, a)?;
        let x = a.expect(addr)?.expect_real(addr)?;
        Ok(crate::special::normal_logpdf(x, m, s))
    }
}

/// Proposes latents from the model's exact Gaussian conditional given the
/// observed sites. With this proposal the importance weight is exactly the
/// marginal likelihood, so upper and lower entropy bounds coincide with
/// the plug-in estimate term by term.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactConditionalProposal;

impl ExactConditionalProposal {
    fn require_mvn<'m>(model: &'m dyn JointModel) -> Result<&'m MvnModel> {
        model
            .as_any()
            .downcast_ref::<MvnModel>()
            .ok_or(Error::CapabilityMissing(
                "the exact conditional proposal only applies to the Gaussian model",
            ))
    }
}

impl crate::proposal::BasicProposal for ExactConditionalProposal {
    fn propose(
        &self,
        model: &dyn JointModel,
        rng: &mut dyn RngCore,
        y: &Assignment,
    ) -> Result<(Assignment, f64)> {
        let mvn = Self::require_mvn(model)?;
        let (addrs, mean, cov) = mvn.conditional_given(y)?;
        let chol = nalgebra::Cholesky::new(cov).ok_or(Error::SingularSubmatrix)?;
        let l = chol.l();
        let z = DVector::from_fn(addrs.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = &mean + &l * z;
        let lq = mvn_logpdf(&x, &mean, &l)?;
        let out: Assignment = addrs
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), Value::Real(x[i])))
            .collect();
        Ok((out, lq))
    }

    fn assess(&self, model: &dyn JointModel, x: &Assignment, y: &Assignment) -> Result<f64> {
        let mvn = Self::require_mvn(model)?;
        let (addrs, mean, cov) = mvn.conditional_given(y)?;
        let chol = nalgebra::Cholesky::new(cov).ok_or(Error::SingularSubmatrix)?;
        let mut v = DVector::zeros(addrs.len());
        for (i, a) in addrs.iter().enumerate() {
            v[i] = x.expect(a)?.expect_real(a)?;
        }
        mvn_logpdf(&v, &mean, &chol.l())
    }

    fn describe(&self) -> String {
        "exact-conditional".into()
    }
}

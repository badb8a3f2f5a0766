//! A trained proposal: per-latent Gaussian regressions on the observed
//! values.
//!
//! Fitting simulates joint draws, then for every latent site runs an
//! ordinary least-squares regression of that site on the centered
//! observed vector (intercept included). Proposing draws each latent
//! independently from its predictive normal with the fitted residual
//! scale. On jointly Gaussian models the conditional means are exactly
//! linear, so this proposal closes most of the gap the ancestral-prior
//! proposal leaves; elsewhere it is a cheap moment-matched approximation.
//!
//! The least-squares solve uses the singular value decomposition, so a
//! degenerate design (a constant observed coordinate, say) falls back to
//! the minimum-norm solution: zero slope and an intercept at the sample
//! mean, never a crash.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::RngCore;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{Address, Assignment, JointModel, Support, TargetSelection, Value};
use crate::proposal::BasicProposal;
use crate::special::normal_logpdf;

/// Residual variances are floored here to keep densities proper.
const VAR_FLOOR: f64 = 1e-8;

/// How many training draws the fit demands per observed coordinate
/// (plus intercept).
const TRAIN_FACTOR: usize = 10;

/// Per-latent linear-Gaussian proposal fitted by simulation.
#[derive(Clone, Debug)]
pub struct GaussianRegressionProposal {
    y_addrs: Vec<Address>,
    x_addrs: Vec<Address>,
    y_center: DVector<f64>,
    /// Row `i` holds latent i's regression slopes over the centered
    /// observed vector.
    coeffs: DMatrix<f64>,
    intercepts: DVector<f64>,
    sds: DVector<f64>,
}

impl GaussianRegressionProposal {
    /// Fit against `train` simulated joint draws. The selection lists the
    /// observed sites; every site on both sides must be scalar real.
    pub fn fit(
        model: &dyn JointModel,
        observed: &TargetSelection,
        train: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Self> {
        let y_addrs: Vec<Address> = observed.addresses().to_vec();
        let x_addrs = observed.latents(model);
        if x_addrs.is_empty() {
            return Err(Error::InvalidSelection(
                "selection covers every site; nothing to propose".into(),
            ));
        }
        for addr in y_addrs.iter().chain(x_addrs.iter()) {
            match model.support(addr) {
                Some(Support::Real) => {}
                _ => {
                    return Err(Error::NonRealVariables(format!(
                        "regression proposal needs scalar real sites, {addr} is not"
                    )))
                }
            }
        }
        let (yd, xd) = (y_addrs.len(), x_addrs.len());
        let need = TRAIN_FACTOR * (yd + 1);
        if train < need {
            return Err(Error::InsufficientTrainingData { need, got: train });
        }
        let mut ys = DMatrix::zeros(train, yd);
        let mut xs = DMatrix::zeros(train, xd);
        for row in 0..train {
            let joint = model.simulate(rng);
            for (j, addr) in y_addrs.iter().enumerate() {
                ys[(row, j)] = joint.expect(addr)?.expect_real(addr)?;
            }
            for (j, addr) in x_addrs.iter().enumerate() {
                xs[(row, j)] = joint.expect(addr)?.expect_real(addr)?;
            }
        }
        let y_center = DVector::from_fn(yd, |j, _| ys.column(j).mean());
        // Design matrix [1 | y - center].
        let design = DMatrix::from_fn(train, yd + 1, |r, c| {
            if c == 0 {
                1.0
            } else {
                ys[(r, c - 1)] - y_center[c - 1]
            }
        });
        let svd = design.clone().svd(true, true);
        let sol = svd
            .solve(&xs, 1e-10)
            .map_err(|e| Error::Config(format!("regression solve failed: {e}")))?;
        // sol is (yd+1) x xd: first row intercepts, rest slopes.
        let intercepts = DVector::from_fn(xd, |j, _| sol[(0, j)]);
        let coeffs = DMatrix::from_fn(xd, yd, |i, j| sol[(j + 1, i)]);
        let resid = &design * &sol - &xs;
        let dof = (train - (yd + 1)).max(1) as f64;
        let sds = DVector::from_fn(xd, |j, _| {
            (resid.column(j).norm_squared() / dof).max(VAR_FLOOR).sqrt()
        });
        Ok(GaussianRegressionProposal {
            y_addrs,
            x_addrs,
            y_center,
            coeffs,
            intercepts,
            sds,
        })
    }

    fn predict(&self, y: &Assignment) -> Result<DVector<f64>> {
        let mut centered = DVector::zeros(self.y_addrs.len());
        for (j, addr) in self.y_addrs.iter().enumerate() {
            centered[j] = y.expect(addr)?.expect_real(addr)? - self.y_center[j];
        }
        Ok(&self.intercepts + &self.coeffs * centered)
    }
}

impl BasicProposal for GaussianRegressionProposal {
    fn propose(
        &self,
        _model: &dyn JointModel,
        rng: &mut dyn RngCore,
        y: &Assignment,
    ) -> Result<(Assignment, f64)> {
        let mean = self.predict(y)?;
        let mut out = Assignment::new();
        let mut lq = 0.0;
        for (i, addr) in self.x_addrs.iter().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            let v = mean[i] + self.sds[i] * z;
            lq += normal_logpdf(v, mean[i], self.sds[i]);
            out.insert(addr.clone(), Value::Real(v));
        }
        Ok((out, lq))
    }

    fn assess(&self, _model: &dyn JointModel, x: &Assignment, y: &Assignment) -> Result<f64> {
        let mean = self.predict(y)?;
        let mut lq = 0.0;
        for (i, addr) in self.x_addrs.iter().enumerate() {
            let v = x.expect(addr)?.expect_real(addr)?;
            lq += normal_logpdf(v, mean[i], self.sds[i]);
        }
        Ok(lq)
    }

    fn describe(&self) -> String {
        "regression".into()
    }
}

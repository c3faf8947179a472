//! Training objectives as plain numerical kernels with analytic gradients.
//!
//! * [`vib_loss`]: temporal-distance regression + weighted action regression
//!   + weighted KL of the latent goal posterior to `N(0, I)`.
//! * [`focal_loss`]: `-alpha * (1 - p_t)^gamma * ln(p_t)`.
//!
//! Regressions use the mean over elements so the term weights do not depend
//! on the prediction horizon.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Clamp applied to probabilities by the batched focal loss.
pub const PROB_EPS: f64 = 1e-7;

pub const DEFAULT_LAMBDA: f64 = 1.0;
pub const DEFAULT_BETA: f64 = 0.01;
pub const DEFAULT_FOCAL_ALPHA: f64 = 0.25;
pub const DEFAULT_FOCAL_GAMMA: f64 = 2.0;

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch { left: a, right: b });
    }
    Ok(())
}

/// Mean squared error. Empty inputs give 0.
pub fn l2_regression(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_len(pred.len(), target.len())?;
    if pred.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / pred.len() as f64)
}

/// Gradient of [`l2_regression`] with respect to `pred`.
pub fn l2_regression_grad(pred: &[f64], target: &[f64]) -> Result<Vec<f64>> {
    check_len(pred.len(), target.len())?;
    let n = pred.len().max(1) as f64;
    Ok(pred.iter().zip(target).map(|(p, t)| 2.0 * (p - t) / n).collect())
}

/// `KL(N(mu, exp(logvar)) || N(0, I))` for a diagonal Gaussian.
pub fn kl_to_standard_normal(mu: &[f64], logvar: &[f64]) -> Result<f64> {
    check_len(mu.len(), logvar.len())?;
    Ok(0.5 * mu.iter().zip(logvar).map(|(m, lv)| m * m + lv.exp() - 1.0 - lv).sum::<f64>())
}

/// `(d/d mu, d/d logvar)` of [`kl_to_standard_normal`].
pub fn kl_to_standard_normal_grad(mu: &[f64], logvar: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_len(mu.len(), logvar.len())?;
    Ok((mu.to_vec(), logvar.iter().map(|lv| 0.5 * (lv.exp() - 1.0)).collect()))
}

/// Reparameterized latent goal sample `z = mu + exp(logvar / 2) * eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentGoal {
    pub mu: Vec<f64>,
    pub logvar: Vec<f64>,
    pub eps: Vec<f64>,
    pub sample: Vec<f64>,
}

impl LatentGoal {
    pub fn from_eps(mu: Vec<f64>, logvar: Vec<f64>, eps: Vec<f64>) -> Result<Self> {
        check_len(mu.len(), logvar.len())?;
        check_len(mu.len(), eps.len())?;
        if mu.is_empty() {
            return Err(Error::InvalidArgument("latent dimension must be at least 1".into()));
        }
        let sample = mu.iter().zip(&logvar).zip(&eps).map(|((m, lv), e)| m + (0.5 * lv).exp() * e).collect();
        Ok(Self { mu, logvar, eps, sample })
    }

    pub fn sample<R: Rng + ?Sized>(mu: Vec<f64>, logvar: Vec<f64>, rng: &mut R) -> Result<Self> {
        let eps = (0..mu.len()).map(|_| rng.sample(StandardNormal)).collect();
        Self::from_eps(mu, logvar, eps)
    }

    /// Draw from the prior `N(0, I)` (exploration mode).
    pub fn from_prior<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Self> {
        Self::sample(vec![0.0; dim], vec![0.0; dim], rng)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

/// One training example for the local planner objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VibBatch {
    pub pred_dist: f64,
    pub target_dist: f64,
    pub pred_waypoints: Vec<[f64; 2]>,
    pub target_waypoints: Vec<[f64; 2]>,
    pub pred_offset: [f64; 2],
    pub target_offset: [f64; 2],
    pub latent: LatentGoal,
    pub lambda: f64,
    pub beta: f64,
}

impl VibBatch {
    pub fn validate(&self) -> Result<()> {
        if self.pred_waypoints.is_empty() {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        check_len(self.pred_waypoints.len(), self.target_waypoints.len())?;
        if !(self.lambda >= 0.0 && self.beta >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda and beta must be non-negative (lambda={}, beta={})",
                self.lambda, self.beta
            )));
        }
        Ok(())
    }

    fn actions(waypoints: &[[f64; 2]], offset: &[f64; 2]) -> Vec<f64> {
        waypoints.iter().flatten().chain(offset).copied().collect()
    }

    pub fn pred_actions(&self) -> Vec<f64> {
        Self::actions(&self.pred_waypoints, &self.pred_offset)
    }

    pub fn target_actions(&self) -> Vec<f64> {
        Self::actions(&self.target_waypoints, &self.target_offset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VibTerms {
    pub total: f64,
    pub dist_term: f64,
    pub action_term: f64,
    pub kl_term: f64,
}

pub fn vib_loss(batch: &VibBatch) -> Result<VibTerms> {
    batch.validate()?;
    let dist_term = l2_regression(&[batch.pred_dist], &[batch.target_dist])?;
    let action_term = l2_regression(&batch.pred_actions(), &batch.target_actions())?;
    let kl_term = kl_to_standard_normal(&batch.latent.mu, &batch.latent.logvar)?;
    Ok(VibTerms {
        total: dist_term + batch.lambda * action_term + batch.beta * kl_term,
        dist_term,
        action_term,
        kl_term,
    })
}

/// Gradient of the VIB total with respect to the prediction-side inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct VibGrad {
    pub pred_dist: f64,
    /// Waypoints flattened `x0, y0, x1, y1, ...` followed by the offset.
    pub pred_actions: Vec<f64>,
    pub mu: Vec<f64>,
    pub logvar: Vec<f64>,
}

pub fn vib_loss_grad(batch: &VibBatch) -> Result<VibGrad> {
    batch.validate()?;
    let pred_dist = 2.0 * (batch.pred_dist - batch.target_dist);
    let pred_actions = l2_regression_grad(&batch.pred_actions(), &batch.target_actions())?
        .into_iter()
        .map(|g| batch.lambda * g)
        .collect();
    let (gm, gl) = kl_to_standard_normal_grad(&batch.latent.mu, &batch.latent.logvar)?;
    Ok(VibGrad {
        pred_dist,
        pred_actions,
        mu: gm.into_iter().map(|g| batch.beta * g).collect(),
        logvar: gl.into_iter().map(|g| batch.beta * g).collect(),
    })
}

/// Binary cross-entropy of the true-class probability, `-ln(p_t)`.
pub fn binary_cross_entropy(p_t: f64) -> Result<f64> {
    check_prob(p_t)?;
    Ok(-p_t.ln())
}

fn check_prob(p_t: f64) -> Result<()> {
    if !(p_t > 0.0 && p_t < 1.0) {
        return Err(Error::ProbabilityOutOfRange(p_t));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocalParams {
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for FocalParams {
    fn default() -> Self {
        Self { alpha: DEFAULT_FOCAL_ALPHA, gamma: DEFAULT_FOCAL_GAMMA }
    }
}

fn focal_unchecked(p_t: f64, alpha: f64, gamma: f64) -> f64 {
    -alpha * (1.0 - p_t).powf(gamma) * p_t.ln()
}

fn focal_grad_unchecked(p_t: f64, alpha: f64, gamma: f64) -> f64 {
    let q = 1.0 - p_t;
    let modulating = if gamma == 0.0 { 0.0 } else { gamma * q.powf(gamma - 1.0) * p_t.ln() };
    alpha * (modulating - q.powf(gamma) / p_t)
}

pub fn focal_loss(p_t: f64, alpha: f64, gamma: f64) -> Result<f64> {
    check_prob(p_t)?;
    Ok(focal_unchecked(p_t, alpha, gamma))
}

/// `d focal / d p_t`.
pub fn focal_loss_grad(p_t: f64, alpha: f64, gamma: f64) -> Result<f64> {
    check_prob(p_t)?;
    Ok(focal_grad_unchecked(p_t, alpha, gamma))
}

fn true_class_prob(p_fg: f64, label: bool) -> f64 {
    let p = if label { p_fg } else { 1.0 - p_fg };
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Mean focal loss over a raster. `probs` are foreground probabilities,
/// clamped to `[1e-7, 1 - 1e-7]` after selecting the true class.
pub fn focal_loss_batched(probs: &[f64], labels: &[bool], params: FocalParams) -> Result<f64> {
    check_len(probs.len(), labels.len())?;
    if probs.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = probs
        .iter()
        .zip(labels)
        .map(|(p, l)| focal_unchecked(true_class_prob(*p, *l), params.alpha, params.gamma))
        .sum();
    Ok(sum / probs.len() as f64)
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Mean focal loss on logits with its gradient per logit
/// (`p = sigmoid(logit)` is the foreground probability).
pub fn focal_loss_logits(logits: &[f64], labels: &[bool], params: FocalParams) -> Result<(f64, Vec<f64>)> {
    check_len(logits.len(), labels.len())?;
    let n = logits.len().max(1) as f64;
    let mut total = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for (&s, &label) in logits.iter().zip(labels) {
        let p = sigmoid(s);
        let raw_pt = if label { p } else { 1.0 - p };
        let p_t = raw_pt.clamp(PROB_EPS, 1.0 - PROB_EPS);
        total += focal_unchecked(p_t, params.alpha, params.gamma);
        // clamped region has zero gradient
        let dpt_ds = if raw_pt != p_t {
            0.0
        } else if label {
            p * (1.0 - p)
        } else {
            -p * (1.0 - p)
        };
        grad.push(focal_grad_unchecked(p_t, params.alpha, params.gamma) * dpt_ds / n);
    }
    Ok((total / n, grad))
}

pub(crate) fn logistic(x: f64) -> f64 {
    sigmoid(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central_diff(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-4;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn l2_examples() {
        assert_eq!(l2_regression(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(l2_regression(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 12.5);
        assert!(l2_regression(&[0.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_to_standard_normal(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(kl_to_standard_normal(&[1.0], &[0.0]).unwrap(), 0.5);
    }

    #[test]
    fn focal_examples() {
        assert!((focal_loss(0.5, 1.0, 0.0).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
        let v = focal_loss(0.9, 0.25, 2.0).unwrap();
        assert!((v - 2.6341e-4).abs() < 1e-8, "{v}");
        assert!(focal_loss(0.0, 1.0, 2.0).is_err());
        assert!(focal_loss(1.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn focal_gradient_matches_central_difference() {
        for &(alpha, gamma) in &[(1.0, 0.0), (0.25, 2.0), (0.5, 0.5), (2.0, 3.0)] {
            for &p in &[0.1, 0.5, 0.9] {
                let g = focal_loss_grad(p, alpha, gamma).unwrap();
                let fd = central_diff(|x| focal_loss(x, alpha, gamma).unwrap(), p);
                assert!((g - fd).abs() < 1e-5, "alpha={alpha} gamma={gamma} p={p}: {g} vs {fd}");
            }
        }
    }

    #[test]
    fn batched_focal_clamps_extremes() {
        let v = focal_loss_batched(&[0.0, 1.0], &[true, false], FocalParams { alpha: 1.0, gamma: 0.0 }).unwrap();
        assert!((v - (-(PROB_EPS).ln())).abs() < 1e-9);
        assert!(v.is_finite());
    }

    #[test]
    fn logit_gradient_matches_central_difference() {
        let logits = [-2.0, -0.3, 0.0, 0.7, 3.1];
        let labels = [true, false, true, true, false];
        let params = FocalParams::default();
        let (_, g) = focal_loss_logits(&logits, &labels, params).unwrap();
        for i in 0..logits.len() {
            let fd = central_diff(
                |x| {
                    let mut l = logits;
                    l[i] = x;
                    focal_loss_logits(&l, &labels, params).unwrap().0
                },
                logits[i],
            );
            assert!((g[i] - fd).abs() < 1e-5, "{i}: {} vs {fd}", g[i]);
        }
    }

    #[test]
    fn vib_examples() {
        let latent = LatentGoal::from_eps(vec![0.0], vec![0.0], vec![0.3]).unwrap();
        let mut b = VibBatch {
            pred_dist: 4.0,
            target_dist: 4.0,
            pred_waypoints: vec![[1.0, 0.0], [2.0, 0.1]],
            target_waypoints: vec![[1.0, 0.0], [2.0, 0.1]],
            pred_offset: [5.0, 1.0],
            target_offset: [5.0, 1.0],
            latent,
            lambda: 1.0,
            beta: 2.0,
        };
        assert_eq!(vib_loss(&b).unwrap().total, 0.0);
        b.latent = LatentGoal::from_eps(vec![1.0], vec![0.0], vec![0.0]).unwrap();
        assert_eq!(vib_loss(&b).unwrap().total, 1.0);

        b.lambda = 0.0;
        let before = vib_loss(&b).unwrap().total;
        b.pred_waypoints[1] = [-7.0, 3.0];
        b.pred_offset = [0.0, 0.0];
        assert_eq!(vib_loss(&b).unwrap().total, before);

        b.target_waypoints.pop();
        assert!(vib_loss(&b).is_err());
    }

    #[test]
    fn latent_sample_uses_recorded_eps() {
        let g = LatentGoal::from_eps(vec![1.0, -1.0], vec![0.0, 2f64.ln() * 2.0], vec![0.5, 1.0]).unwrap();
        assert!((g.sample[0] - 1.5).abs() < 1e-12);
        assert!((g.sample[1] - 1.0).abs() < 1e-12);
        assert!(LatentGoal::from_eps(vec![], vec![], vec![]).is_err());
    }
}

//! Clipped-surrogate policy optimization.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use super::optim::{clip_grad_norm, Adam};
use super::policy::ActorCritic;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub clip: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub max_grad_norm: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self { clip: 0.2, learning_rate: 3e-4, epochs: 10, minibatch_size: 1024, entropy_coef: 1e-3, value_coef: 0.5, max_grad_norm: 0.5 }
    }
}

/// Flattened rollout data. Observations are already normalized, one per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub obs: DMatrix<f64>,
    pub actions: DMatrix<f64>,
    pub logp_old: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.logp_old.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logp_old.is_empty()
    }

    pub fn select(&self, idx: &[usize]) -> Batch {
        Batch {
            obs: self.obs.select_columns(idx),
            actions: self.actions.select_columns(idx),
            logp_old: idx.iter().map(|&i| self.logp_old[i]).collect(),
            advantages: idx.iter().map(|&i| self.advantages[i]).collect(),
            returns: idx.iter().map(|&i| self.returns[i]).collect(),
        }
    }
}

/// `min(ρA, clip(ρ, 1-ε, 1+ε)A)`.
pub fn clipped_objective(ratio: f64, advantage: f64, eps: f64) -> f64 {
    (ratio * advantage).min(ratio.clamp(1.0 - eps, 1.0 + eps) * advantage)
}

#[derive(Debug, Clone)]
pub struct Gradients {
    pub policy: Mlp,
    pub log_std: DVector<f64>,
    pub value: Mlp,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Losses {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

impl Losses {
    pub fn total(&self, cfg: &PpoConfig) -> f64 {
        self.policy + cfg.value_coef * self.value - cfg.entropy_coef * self.entropy
    }
}

/// Loss terms and exact gradients on one minibatch.
///
/// Total loss is `policy + value_coef·value − entropy_coef·entropy`, with
/// `policy = −mean(min(ρA, clip(ρ)A))` and `value = mean((V − R)²)`.
pub fn loss_and_gradients(model: &ActorCritic, mb: &Batch, cfg: &PpoConfig) -> Result<(Losses, Gradients)> {
    let b = mb.len() as f64;
    let (mean, pcache) = model.policy.forward_cached(&mb.obs)?;
    let (values, vcache) = model.value.forward_cached(&mb.obs)?;
    let sigma: Vec<f64> = model.log_std.iter().map(|s| s.exp()).collect();
    let n_act = mean.nrows();

    let mut d_mean = DMatrix::zeros(n_act, mb.len());
    let mut d_log_std = DVector::from_element(n_act, -cfg.entropy_coef);
    let mut losses = Losses { entropy: super::policy::entropy(model.log_std.as_slice()), ..Losses::default() };
    let mut clipped = 0usize;
    for j in 0..mb.len() {
        let mut lp = 0.0;
        for k in 0..n_act {
            let z = (mb.actions[(k, j)] - mean[(k, j)]) / sigma[k];
            lp += -0.5 * z * z - model.log_std[k] - 0.5 * (2.0 * std::f64::consts::PI).ln();
        }
        let log_ratio = lp - mb.logp_old[j];
        let ratio = log_ratio.exp();
        let a = mb.advantages[j];
        let unclipped = ratio * a;
        let clip_term = ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip) * a;
        losses.policy -= unclipped.min(clip_term) / b;
        losses.approx_kl += ((ratio - 1.0) - log_ratio) / b;
        if (ratio - 1.0).abs() > cfg.clip {
            clipped += 1;
        }
        // the clipped branch is flat in θ
        let d_lp = if unclipped <= clip_term { -unclipped / b } else { 0.0 };
        if d_lp != 0.0 {
            for k in 0..n_act {
                let diff = mb.actions[(k, j)] - mean[(k, j)];
                let var = sigma[k] * sigma[k];
                d_mean[(k, j)] = d_lp * diff / var;
                d_log_std[k] += d_lp * (diff * diff / var - 1.0);
            }
        }
    }
    losses.clip_fraction = clipped as f64 / b;

    let mut d_value = DMatrix::zeros(1, mb.len());
    for j in 0..mb.len() {
        let e = values[(0, j)] - mb.returns[j];
        losses.value += e * e / b;
        d_value[(0, j)] = cfg.value_coef * 2.0 * e / b;
    }
    let (gp, _) = model.policy.backward(&pcache, &d_mean);
    let (gv, _) = model.value.backward(&vcache, &d_value);
    Ok((losses, Gradients { policy: gp, log_std: d_log_std, value: gv }))
}

/// Adam states for the actor (network + log-std) and the critic.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizers {
    pub policy: Adam,
    pub value: Adam,
}

impl Optimizers {
    pub fn new(model: &ActorCritic, lr: f64) -> Self {
        let mut ps: Vec<usize> = model.policy.slices().iter().map(|s| s.len()).collect();
        ps.push(model.log_std.len());
        let vs: Vec<usize> = model.value.slices().iter().map(|s| s.len()).collect();
        Self { policy: Adam::new(lr, &ps), value: Adam::new(lr, &vs) }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub minibatches: usize,
    pub aborted: bool,
}

/// Epochs of shuffled minibatch Adam steps on `batch`. A non-finite loss or
/// parameter restores the model and optimizer state from before the call and
/// returns [`Error::NonFiniteLoss`].
pub fn ppo_update<R: Rng + ?Sized>(model: &mut ActorCritic, opt: &mut Optimizers, batch: &Batch, cfg: &PpoConfig, rng: &mut R) -> Result<UpdateStats> {
    let backup = (model.clone(), opt.clone());
    let mut stats = UpdateStats::default();
    let mut order: Vec<usize> = (0..batch.len()).collect();
    let mb_size = cfg.minibatch_size.clamp(1, batch.len().max(1));
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(mb_size) {
            let mb = batch.select(chunk);
            let (losses, mut g) = loss_and_gradients(model, &mb, cfg)?;
            if !losses.total(cfg).is_finite() {
                log::warn!("non-finite PPO loss, update discarded");
                *model = backup.0;
                *opt = backup.1;
                return Err(Error::NonFiniteLoss);
            }
            let mut pg = g.policy.slices_mut();
            pg.push(g.log_std.as_mut_slice());
            clip_grad_norm(pg, cfg.max_grad_norm);
            clip_grad_norm(g.value.slices_mut(), cfg.max_grad_norm);

            let mut pp = model.policy.slices_mut();
            pp.push(model.log_std.as_mut_slice());
            let mut gp = g.policy.slices();
            gp.push(g.log_std.as_slice());
            opt.policy.step(pp, gp);
            opt.value.step(model.value.slices_mut(), g.value.slices());

            stats.policy_loss += losses.policy;
            stats.value_loss += losses.value;
            stats.entropy += losses.entropy;
            stats.approx_kl += losses.approx_kl;
            stats.clip_fraction += losses.clip_fraction;
            stats.minibatches += 1;
        }
    }
    if !model.is_finite() {
        log::warn!("non-finite parameters after PPO update, update discarded");
        *model = backup.0;
        *opt = backup.1;
        return Err(Error::NonFiniteLoss);
    }
    let n = stats.minibatches.max(1) as f64;
    stats.policy_loss /= n;
    stats.value_loss /= n;
    stats.entropy /= n;
    stats.approx_kl /= n;
    stats.clip_fraction /= n;
    Ok(stats)
}

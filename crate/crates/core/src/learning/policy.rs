//! Diagonal-Gaussian actor and scalar critic as two separate MLPs, plus the
//! observation normalizer they were trained with.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::mlp::Mlp;
use super::normalizer::RunningNorm;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ActorCritic {
    pub policy: Mlp,
    /// State-independent log standard deviations, one per action dimension.
    pub log_std: DVector<f64>,
    pub value: Mlp,
    pub normalizer: RunningNorm,
}

impl ActorCritic {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, action_dim: usize, hidden: &[usize], init_log_std: f64, normalize: bool, rng: &mut R) -> Self {
        let mut sizes = vec![obs_dim];
        sizes.extend_from_slice(hidden);
        let mut psizes = sizes.clone();
        psizes.push(action_dim);
        sizes.push(1);
        let policy = Mlp::random(&psizes, 0.01, rng);
        let value = Mlp::random(&sizes, 1.0, rng);
        Self { policy, log_std: DVector::from_element(action_dim, init_log_std), value, normalizer: RunningNorm::new(obs_dim, normalize) }
    }

    pub fn obs_dim(&self) -> usize {
        self.policy.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.policy.output_dim()
    }

    pub fn check_obs(&self, obs: &[f64]) -> Result<()> {
        if obs.len() != self.obs_dim() {
            return Err(Error::ShapeMismatch { expected: self.obs_dim(), got: obs.len() });
        }
        Ok(())
    }

    /// `(action mean, log-std, value)` for one raw observation.
    pub fn forward(&self, obs: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        self.check_obs(obs)?;
        let x = DMatrix::from_column_slice(obs.len(), 1, &self.normalizer.normalize(obs));
        let mean = self.policy.forward(&x)?;
        let value = self.value.forward(&x)?;
        Ok((mean.as_slice().to_vec(), self.log_std.as_slice().to_vec(), value[0]))
    }

    pub fn value_of(&self, obs: &[f64]) -> Result<f64> {
        self.check_obs(obs)?;
        let x = DMatrix::from_column_slice(obs.len(), 1, &self.normalizer.normalize(obs));
        Ok(self.value.forward(&x)?[0])
    }

    /// Deterministic action (the mean).
    pub fn act(&self, obs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(obs)?.0)
    }

    /// Sampled action with its log-probability and the value estimate.
    pub fn sample<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Result<(Vec<f64>, f64, f64)> {
        let (mean, log_std, value) = self.forward(obs)?;
        let action: Vec<f64> = mean
            .iter()
            .zip(&log_std)
            .map(|(m, s)| {
                let z: f64 = StandardNormal.sample(rng);
                m + s.exp() * z
            })
            .collect();
        let lp = log_prob(&action, &mean, &log_std);
        Ok((action, lp, value))
    }

    pub fn is_finite(&self) -> bool {
        self.policy.is_finite() && self.value.is_finite() && self.log_std.iter().all(|v| v.is_finite())
    }
}

pub fn log_prob(action: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
    action
        .iter()
        .zip(mean)
        .zip(log_std)
        .map(|((a, m), s)| {
            let z = (a - m) / s.exp();
            -0.5 * z * z - s - 0.5 * (2.0 * PI).ln()
        })
        .sum()
}

pub fn entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|s| 0.5 + 0.5 * (2.0 * PI).ln() + s).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_networks_give_zero_mean_and_value() {
        let mut ac = ActorCritic::new(4, 2, &[8, 8], 0.3f64.ln(), false, &mut ChaCha8Rng::seed_from_u64(0));
        ac.policy = Mlp::zeros(&ac.policy.sizes());
        ac.value = Mlp::zeros(&ac.value.sizes());
        let (m, s, v) = ac.forward(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m, vec![0.0, 0.0]);
        assert_eq!(v, 0.0);
        assert!((s[0] - 0.3f64.ln()).abs() < 1e-15);
        assert!(matches!(ac.forward(&[1.0]), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn standard_normal_log_density() {
        let lp = log_prob(&[0.0], &[0.0], &[0.0]);
        assert!((lp + 0.5 * (2.0 * PI).ln()).abs() < 1e-15);
    }

    #[test]
    fn sampling_is_seeded() {
        let ac = ActorCritic::new(3, 2, &[4], 0.0, false, &mut ChaCha8Rng::seed_from_u64(0));
        let a = ac.sample(&[0.1, 0.2, 0.3], &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = ac.sample(&[0.1, 0.2, 0.3], &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }
}

//! Running per-feature mean/variance for observation standardization.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningNorm {
    pub count: f64,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub clip: f64,
    pub enabled: bool,
}

impl RunningNorm {
    pub fn new(dim: usize, enabled: bool) -> Self {
        Self { count: 0.0, mean: vec![0.0; dim], var: vec![1.0; dim], clip: 10.0, enabled }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Merges a batch of samples (Chan et al. parallel update).
    pub fn update(&mut self, samples: &[Vec<f64>]) {
        if !self.enabled || samples.is_empty() {
            return;
        }
        let n = samples.len() as f64;
        let d = self.dim();
        let mut mean = vec![0.0; d];
        for s in samples {
            for (m, v) in mean.iter_mut().zip(s) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; d];
        for s in samples {
            for i in 0..d {
                var[i] += (s[i] - mean[i]).powi(2) / n;
            }
        }
        if self.count == 0.0 {
            self.mean = mean;
            self.var = var;
            self.count = n;
            return;
        }
        let total = self.count + n;
        for i in 0..d {
            let delta = mean[i] - self.mean[i];
            let m2 = self.var[i] * self.count + var[i] * n + delta * delta * self.count * n / total;
            self.mean[i] += delta * n / total;
            self.var[i] = m2 / total;
        }
        self.count = total;
    }

    pub fn normalize_into(&self, x: &[f64], out: &mut [f64]) {
        if !self.enabled {
            out.copy_from_slice(x);
            return;
        }
        for i in 0..x.len() {
            out[i] = ((x[i] - self.mean[i]) / (self.var[i] + 1e-8).sqrt()).clamp(-self.clip, self.clip);
        }
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.normalize_into(x, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batched_updates_match_one_pass() {
        let data: Vec<Vec<f64>> = (0..50).map(|i| vec![(i as f64).sin() * 3.0 + 1.0, i as f64]).collect();
        let mut once = RunningNorm::new(2, true);
        once.update(&data);
        let mut split = RunningNorm::new(2, true);
        split.update(&data[..7]);
        split.update(&data[7..30]);
        split.update(&data[30..]);
        for i in 0..2 {
            assert!((once.mean[i] - split.mean[i]).abs() < 1e-12);
            assert!((once.var[i] - split.var[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn disabled_is_identity() {
        let n = RunningNorm::new(2, false);
        assert_eq!(n.normalize(&[3.0, -50.0]), vec![3.0, -50.0]);
    }

    #[test]
    fn output_is_clipped() {
        let mut n = RunningNorm::new(1, true);
        n.update(&[vec![0.0], vec![1e-3]]);
        assert_eq!(n.normalize(&[100.0]), vec![10.0]);
    }
}

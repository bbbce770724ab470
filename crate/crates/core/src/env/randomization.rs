//! Per-episode sampling of physical parameters.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hand::dynamics::World;
use crate::hand::model::{HandModel, StickModel, N_ACTUATED};

/// Normal distribution truncated to strictly positive values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedNormal {
    pub mean: f64,
    pub std: f64,
}

impl TruncatedNormal {
    pub fn fixed(mean: f64) -> Self {
        Self { mean, std: 0.0 }
    }

    pub fn relative(mean: f64, fraction: f64) -> Self {
        Self { mean, std: mean.abs() * fraction }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if !(self.mean > 0.0) || !(self.std >= 0.0) || !self.mean.is_finite() || !self.std.is_finite() {
            return Err(Error::InvalidConfig(format!("{name}: need mean > 0 and std >= 0, got {self:?}")));
        }
        Ok(())
    }

    /// Rejection sampling; std 0 returns the mean without consuming randomness.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.std == 0.0 {
            return self.mean;
        }
        for _ in 0..10_000 {
            let z: f64 = StandardNormal.sample(rng);
            let x = self.mean + self.std * z;
            if x > 0.0 {
                return x;
            }
        }
        self.mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointGains {
    /// Joint id (0, 1, 3, 4, 6 or 7).
    pub joint: usize,
    pub kp: TruncatedNormal,
    pub kd: TruncatedNormal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomizationSpec {
    pub gains: Vec<JointGains>,
    /// Calibrated backlash ranges of the worm-gear joints (J0, J3, J6); the
    /// hand model's ranges are used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backlash_range: Option<Vec<[f64; 2]>>,
    pub backlash_stiffness: TruncatedNormal,
    pub backlash_damping: TruncatedNormal,
    pub stick_mass: TruncatedNormal,
    pub stick_radius: TruncatedNormal,
    pub friction_mu: TruncatedNormal,
    /// Path of the initial-state CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_states: Option<String>,
    /// Policy steps per episode.
    pub episode_length: usize,
    /// Episode terminates when the stick center drops below this height (m).
    pub drop_height: f64,
}

impl RandomizationSpec {
    /// Distributions centered on `hand` and `stick` with the given relative spread.
    pub fn around(hand: &HandModel, stick: &StickModel, spread: f64) -> Self {
        let gains = hand
            .actuated()
            .iter()
            .map(|j| JointGains { joint: j.id, kp: TruncatedNormal::relative(j.kp, spread), kd: TruncatedNormal::relative(j.kd, spread) })
            .collect();
        Self {
            gains,
            backlash_range: None,
            backlash_stiffness: TruncatedNormal::relative(hand.backlash_stiffness, 2.0 * spread),
            backlash_damping: TruncatedNormal::relative(hand.backlash_damping, 2.0 * spread),
            stick_mass: TruncatedNormal::relative(stick.mass, spread),
            stick_radius: TruncatedNormal::relative(stick.radius, spread),
            friction_mu: TruncatedNormal::relative(stick.friction_mu, spread),
            initial_states: None,
            episode_length: 500,
            drop_height: crate::hand::grasp::nominal_stick_center(stick.length).z - 0.05,
        }
    }

    /// Every distribution collapsed onto its mean.
    pub fn degenerate(&self) -> Self {
        let fix = |d: TruncatedNormal| TruncatedNormal::fixed(d.mean);
        Self {
            gains: self.gains.iter().map(|g| JointGains { joint: g.joint, kp: fix(g.kp), kd: fix(g.kd) }).collect(),
            backlash_stiffness: fix(self.backlash_stiffness),
            backlash_damping: fix(self.backlash_damping),
            stick_mass: fix(self.stick_mass),
            stick_radius: fix(self.stick_radius),
            friction_mu: fix(self.friction_mu),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for g in &self.gains {
            g.kp.validate(&format!("kp of J{}", g.joint))?;
            g.kd.validate(&format!("kd of J{}", g.joint))?;
        }
        self.backlash_stiffness.validate("backlash_stiffness")?;
        self.backlash_damping.validate("backlash_damping")?;
        self.stick_mass.validate("stick_mass")?;
        self.stick_radius.validate("stick_radius")?;
        self.friction_mu.validate("friction_mu")?;
        if let Some(r) = &self.backlash_range {
            if r.len() != 3 || r.iter().any(|[lo, hi]| *lo > 0.0 || *hi < 0.0) {
                return Err(Error::InvalidConfig("backlash_range needs three [lo <= 0, hi >= 0] pairs".into()));
            }
        }
        if self.episode_length == 0 {
            return Err(Error::InvalidConfig("episode_length must be positive".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Draws one set of physical parameters. The draw order is fixed.
    pub fn sample<R: Rng + ?Sized>(&self, hand: &HandModel, rng: &mut R) -> PhysicalParams {
        let joints = hand.actuated();
        let mut kp: [f64; N_ACTUATED] = std::array::from_fn(|i| joints[i].kp);
        let mut kd: [f64; N_ACTUATED] = std::array::from_fn(|i| joints[i].kd);
        for g in &self.gains {
            let (p, d) = (g.kp.sample(rng), g.kd.sample(rng));
            if let Some(i) = hand.actuated_index(g.joint) {
                kp[i] = p;
                kd[i] = d;
            }
        }
        PhysicalParams {
            kp,
            kd,
            backlash_range: self.backlash_range.clone(),
            backlash_stiffness: self.backlash_stiffness.sample(rng),
            backlash_damping: self.backlash_damping.sample(rng),
            stick_mass: self.stick_mass.sample(rng),
            stick_radius: self.stick_radius.sample(rng),
            friction_mu: self.friction_mu.sample(rng),
        }
    }
}

/// One draw from a [`RandomizationSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    pub kp: [f64; N_ACTUATED],
    pub kd: [f64; N_ACTUATED],
    pub backlash_range: Option<Vec<[f64; 2]>>,
    pub backlash_stiffness: f64,
    pub backlash_damping: f64,
    pub stick_mass: f64,
    pub stick_radius: f64,
    pub friction_mu: f64,
}

impl PhysicalParams {
    pub fn apply(&self, world: &mut World) {
        for i in 0..N_ACTUATED {
            let j = world.hand.actuated_mut(i);
            j.kp = self.kp[i];
            j.kd = self.kd[i];
        }
        if let Some(ranges) = &self.backlash_range {
            for (f, r) in ranges.iter().enumerate() {
                world.hand.fingers[f].proximal.backlash_range = *r;
            }
        }
        world.hand.backlash_stiffness = self.backlash_stiffness;
        world.hand.backlash_damping = self.backlash_damping;
        world.stick.mass = self.stick_mass;
        world.stick.radius = self.stick_radius;
        world.stick.friction_mu = self.friction_mu;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn truncated_normal_statistics() {
        let d = TruncatedNormal { mean: 10.0, std: 2.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..10_000).map(|_| d.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - 10.0).abs() < 0.1, "{mean}");
        assert!(xs.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn zero_std_always_gives_the_mean() {
        let d = TruncatedNormal::fixed(0.7);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!((0..100).all(|_| d.sample(&mut rng) == 0.7));
    }

    #[test]
    fn toml_round_trip() {
        let spec = RandomizationSpec::around(&HandModel::canonical(), &StickModel::default(), 0.1);
        let text = spec.to_toml().unwrap();
        assert_eq!(RandomizationSpec::from_toml(&text).unwrap(), spec);
    }
}

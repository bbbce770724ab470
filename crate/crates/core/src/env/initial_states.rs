//! Initial grasp states: sample a finger posture and a stick pose, hold the
//! stick fixed and close the proximal joints at constant speed until every
//! fingertip reports tactile contact.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::{Quaternion, Unit, UnitQuaternion, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hand::dynamics::World;
use crate::hand::grasp;
use crate::hand::model::{N_ACTUATED, N_FINGERS};
use crate::hand::state::SimState;
use crate::seed::{rng_for, Subsystem};
use crate::tactile::signal::{binarize, synthesize_raw, SensorModel, TactileFrame};

/// Sampling boxes around the nominal grasp and closing settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    /// Joint offsets are uniform in ± this (rad) around the nominal posture.
    pub joint_halfwidth: f64,
    /// Stick center offsets: uniform in ± `lateral` (x, y) and ± `vertical` (z), m.
    pub lateral: f64,
    pub vertical: f64,
    /// Stick axis tilt from vertical, uniform over the spherical cap (deg).
    pub max_tilt_deg: f64,
    /// Shift of the sampling box from the nominal stick center (m).
    pub center_offset: [f64; 3],
    /// Proximal closing speed (rad/s).
    pub close_speed: f64,
    pub dt: f64,
    /// Closing gives up after this long (s).
    pub max_close_time: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            joint_halfwidth: 0.3,
            lateral: 0.01,
            vertical: 0.02,
            max_tilt_deg: 15.0,
            center_offset: [0.0; 3],
            close_speed: 1.0,
            dt: 1e-3,
            max_close_time: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialState {
    pub q: [f64; N_ACTUATED],
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl InitialState {
    pub fn to_sim_state(&self) -> SimState {
        SimState::new(self.q, self.position, self.orientation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub sampler: SamplerConfig,
    pub seed: u64,
    pub attempts: usize,
    pub accepted: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialStateSet {
    pub records: Vec<InitialState>,
    pub provenance: Provenance,
}

/// Per-finger tactile contact for a static configuration: penetration forces
/// without damping, noise-free readings with crosstalk, thresholded.
pub fn tactile_contact(world: &World, state: &SimState, sensor: &SensorModel) -> [bool; N_FINGERS] {
    let kin = world.kinematics(state);
    let mut contacts = world.contacts(state, &kin);
    for c in contacts.iter_mut() {
        c.normal_force = world.contact.stiffness * c.penetration;
    }
    let mut rng = rng_for(0, Subsystem::SensorNoise, 0);
    let raw = synthesize_raw(&contacts, &world.layout, sensor.gain, &sensor.crosstalk, 0.0, None, &mut rng);
    let mut frame = TactileFrame::new(raw, vec![0.0; crate::tactile::layout::N_TAXELS], sensor.threshold);
    binarize(&mut frame);
    std::array::from_fn(|f| frame.any_active(f))
}

fn sample_pose<R: Rng + ?Sized>(world: &World, cfg: &SamplerConfig, rng: &mut R) -> (Vector3<f64>, UnitQuaternion<f64>) {
    let mut u = |h: f64| if h > 0.0 { rng.random_range(-h..=h) } else { 0.0 };
    let offset = Vector3::from(cfg.center_offset) + Vector3::new(u(cfg.lateral), u(cfg.lateral), u(cfg.vertical));
    let cos_max = cfg.max_tilt_deg.to_radians().cos();
    let cos_tilt = if cos_max < 1.0 { rng.random_range(cos_max..=1.0) } else { 1.0 };
    let azimuth = rng.random_range(0.0..std::f64::consts::TAU);
    let tilt = cos_tilt.clamp(-1.0, 1.0).acos();
    let axis = Unit::new_normalize(Vector3::new(-azimuth.sin(), azimuth.cos(), 0.0));
    let orientation = UnitQuaternion::from_axis_angle(&axis, tilt);
    (grasp::nominal_stick_center(world.stick.length) + offset, orientation)
}

/// Closes the not-yet-touching fingers of `state` until all touch. Returns
/// `None` when a proximal joint reaches its limit or time runs out.
fn close_until_contact(world: &World, mut state: SimState, cfg: &SamplerConfig, sensor: &SensorModel) -> Option<SimState> {
    let steps = (cfg.max_close_time / cfg.dt).ceil() as usize;
    let dq = cfg.close_speed * cfg.dt;
    for _ in 0..=steps {
        let touching = tactile_contact(world, &state, sensor);
        if touching.iter().all(|&t| t) {
            return Some(state);
        }
        for f in 0..N_FINGERS {
            if !touching[f] {
                let upper = world.hand.fingers[f].proximal.upper();
                if state.q[2 * f] + dq > upper {
                    return None;
                }
                state.q[2 * f] += dq;
            }
        }
    }
    None
}

/// Runs the sampler until `n` states are accepted. Fails with
/// `ExhaustedSampling` once 1000 attempts have been made at an acceptance
/// rate below 1%.
pub fn generate_initial_states(world: &World, cfg: &SamplerConfig, sensor: &SensorModel, n: usize, seed: u64) -> Result<InitialStateSet> {
    if !(cfg.close_speed > 0.0 && cfg.dt > 0.0) {
        return Err(Error::InvalidConfig("closing speed and dt must be positive".into()));
    }
    let mut rng = rng_for(seed, Subsystem::InitialStates, 0);
    let nominal = grasp::nominal_joints(world);
    let lower = world.hand.lower_limits();
    let upper = world.hand.upper_limits();
    let mut records = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while records.len() < n {
        if attempts >= 1000 && (records.len() as f64) < 0.01 * attempts as f64 {
            return Err(Error::ExhaustedSampling { accepted: records.len(), attempts });
        }
        attempts += 1;
        let q: [f64; N_ACTUATED] = std::array::from_fn(|i| {
            let h = cfg.joint_halfwidth;
            let d = if h > 0.0 { rng.random_range(-h..=h) } else { 0.0 };
            (nominal[i] + d).clamp(lower[i], upper[i])
        });
        let (position, orientation) = sample_pose(world, cfg, &mut rng);
        let start = SimState::new(q, position, orientation);
        if tactile_contact(world, &start, sensor).iter().any(|&t| t) {
            log::debug!("attempt {attempts}: fingers start inside the stick; resampled");
            continue;
        }
        match close_until_contact(world, start, cfg, sensor) {
            Some(s) => records.push(InitialState { q: s.q, position: s.stick_position, orientation: s.stick_orientation }),
            None => log::debug!("attempt {attempts}: no three-finger contact; resampled"),
        }
    }
    log::info!("initial states: accepted {} of {} attempts", records.len(), attempts);
    let accepted = records.len();
    Ok(InitialStateSet { records, provenance: Provenance { sampler: cfg.clone(), seed, attempts, accepted } })
}

pub const STATES_HEADER: [&str; 14] = ["record", "q0", "q1", "q2", "q3", "q4", "q5", "x", "y", "z", "qw", "qx", "qy", "qz"];

impl InitialStateSet {
    pub fn acceptance_rate(&self) -> f64 {
        if self.provenance.attempts == 0 {
            0.0
        } else {
            self.provenance.accepted as f64 / self.provenance.attempts as f64
        }
    }

    /// CSV with the provenance as leading `#` comment lines (TOML).
    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        for line in toml::to_string(&self.provenance)?.lines() {
            writeln!(writer, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(STATES_HEADER)?;
        for (i, r) in self.records.iter().enumerate() {
            let q = r.orientation.quaternion();
            let mut row = vec![i.to_string()];
            row.extend(r.q.iter().map(|v| v.to_string()));
            row.extend(r.position.iter().map(|v| v.to_string()));
            row.extend([q.w, q.i, q.j, q.k].iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut buf = BufReader::new(reader);
        let mut meta = String::new();
        let mut body = String::new();
        let mut line = String::new();
        while buf.read_line(&mut line)? > 0 {
            match line.strip_prefix('#') {
                Some(rest) => meta.push_str(rest.strip_prefix(' ').unwrap_or(rest)),
                None => body.push_str(&line),
            }
            line.clear();
        }
        let provenance: Provenance = toml::from_str(&meta).map_err(|e| Error::Malformed(format!("state-set provenance: {e}")))?;
        let mut r = csv::Reader::from_reader(body.as_bytes());
        if r.headers()?.iter().collect::<Vec<_>>() != STATES_HEADER {
            return Err(Error::Malformed("unexpected initial-state header".into()));
        }
        let mut records = Vec::new();
        for row in r.records() {
            let row = row?;
            let v: Vec<f64> = row
                .iter()
                .skip(1)
                .map(|s| s.parse::<f64>().map_err(|e| Error::Malformed(format!("initial-state value `{s}`: {e}"))))
                .collect::<Result<_>>()?;
            if v.len() != 13 || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Malformed("initial-state row needs 13 finite values".into()));
            }
            let q: [f64; N_ACTUATED] = std::array::from_fn(|i| v[i]);
            let quat = Quaternion::new(v[9], v[10], v[11], v[12]);
            records.push(InitialState {
                q,
                position: Vector3::new(v[6], v[7], v[8]),
                orientation: UnitQuaternion::new_unchecked(quat),
            });
        }
        Ok(Self { records, provenance })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    /// Fraction of records that show contact on all three fingertips.
    pub fn verify(&self, world: &World, sensor: &SensorModel) -> f64 {
        if self.records.is_empty() {
            return 1.0;
        }
        let ok = self.records.iter().filter(|r| tactile_contact(world, &r.to_sim_state(), sensor).iter().all(|&t| t)).count();
        ok as f64 / self.records.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hand::model::{HandModel, StickModel};
    use crate::tactile::contact::ContactParams;

    fn world() -> World {
        World::new(HandModel::canonical(), StickModel::default(), ContactParams::default()).unwrap()
    }

    #[test]
    fn symmetric_configuration_gives_mirror_fingers() {
        let w = world();
        let cfg = SamplerConfig { joint_halfwidth: 0.0, lateral: 0.0, vertical: 0.0, max_tilt_deg: 0.0, ..Default::default() };
        // open every finger by the same amount first
        let mut start = grasp::nominal_state(&w);
        for f in 0..N_FINGERS {
            start.q[2 * f] -= 0.2;
        }
        let s = close_until_contact(&w, start, &cfg, &SensorModel::default()).unwrap();
        assert!((s.q[2] - s.q[4]).abs() <= cfg.close_speed * cfg.dt + 1e-12);
        assert_eq!(s.q[3], s.q[5]);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let w = world();
        let set = generate_initial_states(&w, &SamplerConfig::default(), &SensorModel::default(), 5, 7).unwrap();
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        let back = InitialStateSet::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, set);
        assert_eq!(back.verify(&w, &SensorModel::default()), 1.0);
    }

    #[test]
    fn impossible_pose_box_exhausts() {
        let mut w = world();
        w.stick.length = 0.01;
        let cfg = SamplerConfig { vertical: 0.0, ..Default::default() };
        // a 1 cm stick at the nominal center sits below every pad
        let r = generate_initial_states(&w, &cfg, &SensorModel::default(), 3, 0);
        assert!(matches!(r, Err(Error::ExhaustedSampling { .. })));
    }
}

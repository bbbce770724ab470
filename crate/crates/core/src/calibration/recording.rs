//! Joint position recordings and the trajectory-matching loss used to fit PD gains.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hand::joint_rig::JointRig;
use crate::hand::model::HandModel;

/// Commanded and measured positions of one joint on a fixed time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRecording {
    pub times: Vec<f64>,
    pub q_target: Vec<f64>,
    pub q_measured: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Row {
    t: f64,
    q_target: f64,
    q_measured: f64,
}

impl ReferenceRecording {
    pub fn new(times: Vec<f64>, q_target: Vec<f64>, q_measured: Vec<f64>) -> Result<Self> {
        let r = Self { times, q_target, q_measured };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if self.q_target.len() != n || self.q_measured.len() != n {
            return Err(Error::Malformed("recording columns differ in length".into()));
        }
        if n < 2 {
            return Err(Error::Malformed("recording needs at least two samples".into()));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Malformed("recording times must be strictly increasing".into()));
        }
        if self.q_target.iter().chain(&self.q_measured).any(|v| !v.is_finite()) {
            return Err(Error::Malformed("non-finite position in recording".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for i in 0..self.len() {
            w.serialize(Row { t: self.times[i], q_target: self.q_target[i], q_measured: self.q_measured[i] })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let (mut times, mut q_target, mut q_measured) = (Vec::new(), Vec::new(), Vec::new());
        for row in r.deserialize() {
            let row: Row = row?;
            times.push(row.t);
            q_target.push(row.q_target);
            q_measured.push(row.q_measured);
        }
        Self::new(times, q_target, q_measured)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Step sequence followed by a sinusoid, around a working angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSignal {
    pub center: f64,
    pub step_amplitude: f64,
    /// Duration of each constant step level (s).
    pub step_hold: f64,
    pub step_count: usize,
    pub sine_amplitude: f64,
    pub sine_frequency: f64,
    pub duration: f64,
    pub dt: f64,
}

impl Default for ReferenceSignal {
    fn default() -> Self {
        Self {
            center: 0.5,
            step_amplitude: 0.08,
            step_hold: 1.0,
            step_count: 5,
            sine_amplitude: 0.2,
            sine_frequency: 1.0,
            duration: 10.0,
            dt: 1e-3,
        }
    }
}

impl ReferenceSignal {
    pub fn value(&self, t: f64) -> f64 {
        let step_end = self.step_hold * self.step_count as f64;
        if t < step_end {
            let k = (t / self.step_hold).floor() as i64;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            self.center + sign * self.step_amplitude
        } else {
            let phase = 2.0 * std::f64::consts::PI * self.sine_frequency * (t - step_end);
            self.center + self.sine_amplitude * phase.sin()
        }
    }

    pub fn samples(&self) -> (Vec<f64>, Vec<f64>) {
        let n = (self.duration / self.dt).round() as usize;
        let times: Vec<f64> = (0..n).map(|i| i as f64 * self.dt).collect();
        let q = times.iter().map(|&t| self.value(t)).collect();
        (times, q)
    }
}

/// Replays `q_target` on a bench copy of actuated joint `joint` with the given
/// gains, starting at rest at the first measured position. Each returned
/// sample is the actuated position after the step that starts at that time.
pub fn simulate_joint(model: &HandModel, joint: usize, kp: f64, kd: f64, times: &[f64], q_target: &[f64], q0: f64) -> Result<Vec<f64>> {
    let mut rig = JointRig::from_model(model, joint).with_gains(kp, kd);
    rig.reset(q0);
    let mut out = Vec::with_capacity(times.len());
    for i in 0..times.len() {
        let dt = if i + 1 < times.len() { times[i + 1] - times[i] } else { times[i] - times[i - 1] };
        rig.step(q_target[i], 0.0, dt)?;
        out.push(rig.q);
    }
    Ok(out)
}

/// Sum over samples of the absolute position error between the simulated
/// joint with gains `(kp, kd)` and the recording. Simulation failure maps to +∞.
pub fn trajectory_loss(kp: f64, kd: f64, recording: &ReferenceRecording, model: &HandModel, joint: usize) -> Result<f64> {
    if !(kp > 0.0 && kd > 0.0) {
        return Err(Error::InvalidConfig(format!("gains must be positive (kp = {kp}, kd = {kd})")));
    }
    let sim = match simulate_joint(model, joint, kp, kd, &recording.times, &recording.q_target, recording.q_measured[0]) {
        Ok(s) => s,
        Err(Error::NonFiniteState { .. }) => return Ok(f64::INFINITY),
        Err(e) => return Err(e),
    };
    Ok(sim.iter().zip(&recording.q_measured).map(|(s, m)| (s - m).abs()).sum())
}

/// Recording from a simulated joint with hidden gains plus Gaussian
/// measurement noise, standing in for hardware logs.
pub fn synthetic_recording<R: Rng + ?Sized>(
    model: &HandModel,
    joint: usize,
    hidden_kp: f64,
    hidden_kd: f64,
    signal: &ReferenceSignal,
    noise_std: f64,
    rng: &mut R,
) -> Result<ReferenceRecording> {
    let (times, q_target) = signal.samples();
    let q0 = q_target[0];
    let clean = simulate_joint(model, joint, hidden_kp, hidden_kd, &times, &q_target, q0)?;
    let noise = Normal::new(0.0, noise_std.max(0.0)).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut measured: Vec<f64> = clean.iter().map(|q| q + noise.sample(rng)).collect();
    // the first sample doubles as the replay start; keep it noise-free
    measured[0] = clean[0];
    ReferenceRecording::new(times, q_target, measured)
}

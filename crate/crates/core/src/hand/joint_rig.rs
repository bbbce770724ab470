//! A single finger joint on a test bench, used for gain calibration and
//! backlash characterization. Same joint model as [`super::World`], without
//! the stick.

use nalgebra::{Matrix2, Vector2};

use super::dynamics::{commanded_direction, pd_torque, self_lock_allows};
use super::model::{HandModel, JointSpec};
use super::state::BacklashState;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct JointRig {
    pub spec: JointSpec,
    /// Link inertia carried by the link-side angle (zero for distal joints).
    pub link_inertia: f64,
    pub backlash_stiffness: f64,
    pub backlash_damping: f64,
    pub torque_cap: f64,
    pub q: f64,
    pub qdot: f64,
    pub backlash: BacklashState,
    pub t: f64,
}

impl JointRig {
    /// Bench copy of actuated joint `index` (0..6) of `model`.
    pub fn from_model(model: &HandModel, index: usize) -> Self {
        let finger = &model.fingers[index / 2];
        let proximal = index % 2 == 0;
        let spec = if proximal { finger.proximal.clone() } else { finger.distal.clone() };
        Self {
            spec,
            link_inertia: if proximal { finger.link_inertia } else { 0.0 },
            backlash_stiffness: model.backlash_stiffness,
            backlash_damping: model.backlash_damping,
            torque_cap: model.torque_cap(index / 2),
            q: 0.0,
            qdot: 0.0,
            backlash: BacklashState::default(),
            t: 0.0,
        }
    }

    pub fn with_gains(mut self, kp: f64, kd: f64) -> Self {
        self.spec.kp = kp;
        self.spec.kd = kd;
        self
    }

    pub fn reset(&mut self, q: f64) {
        self.q = q;
        self.qdot = 0.0;
        self.backlash = BacklashState::default();
        self.t = 0.0;
    }

    /// Link-side angle.
    pub fn effective(&self) -> f64 {
        self.q + self.backlash.offset
    }

    /// One step toward `q_target` with `external_torque` applied to the link.
    pub fn step(&mut self, q_target: f64, external_torque: f64, dt: f64) -> Result<()> {
        let target = self.spec.clamp(q_target);
        let ia = self.spec.armature;
        let il = self.link_inertia;
        let c = self.spec.damping;
        let mass = Matrix2::new(ia + il, il, il, il);
        let mut damp = Matrix2::new(c, c, c, c);
        let mut stiff = Matrix2::zeros();
        let v0 = Vector2::new(self.qdot, self.backlash.offset_velocity);
        let link_rate = v0[0] + v0[1];
        let mut force = Vector2::new(external_torque - c * link_rate, external_torque - c * link_rate);

        let tau = pd_torque(&self.spec, target, self.q, self.qdot);
        if tau.abs() <= self.torque_cap {
            force[0] += tau;
            stiff[(0, 0)] += self.spec.kp;
            damp[(0, 0)] += self.spec.kd;
        } else {
            force[0] += self.torque_cap.copysign(tau);
        }
        stiff[(1, 1)] += self.backlash_stiffness;
        damp[(1, 1)] += self.backlash_damping;
        force[1] -= self.backlash_stiffness * self.backlash.offset + self.backlash_damping * v0[1];

        let system = mass + damp * dt + stiff * (dt * dt);
        let rhs = mass * v0 + (force + damp * v0) * dt;

        let mut prescribed: [Option<f64>; 2] = [None, if self.spec.has_backlash() { None } else { Some(0.0) }];
        let mut v = Vector2::zeros();
        for _ in 0..4 {
            v = solve2(&system, &rhs, &prescribed).ok_or(Error::NonFiniteState { t: self.t })?;
            let mut changed = false;
            if prescribed[0].is_none() {
                let dir = commanded_direction(target, self.q);
                if self.spec.self_lock && !self_lock_allows(dir, v[0]) {
                    prescribed[0] = Some(0.0);
                    changed = true;
                } else if let Some(p) = bound_velocity(self.q, v[0], self.spec.limits, dt) {
                    prescribed[0] = Some(p);
                    changed = true;
                }
            }
            if prescribed[1].is_none() {
                if let Some(p) = bound_velocity(self.backlash.offset, v[1], self.spec.backlash_range, dt) {
                    prescribed[1] = Some(p);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        self.qdot = v[0];
        self.backlash.offset_velocity = v[1];
        self.q = self.spec.clamp(self.q + dt * v[0]);
        let [lo, hi] = self.spec.backlash_range;
        self.backlash.offset = (self.backlash.offset + dt * v[1]).clamp(lo, hi);
        self.t += dt;
        if !(self.q.is_finite() && self.qdot.is_finite() && self.backlash.offset.is_finite()) {
            return Err(Error::NonFiniteState { t: self.t });
        }
        Ok(())
    }
}

fn bound_velocity(x: f64, v: f64, bounds: [f64; 2], dt: f64) -> Option<f64> {
    let next = x + dt * v;
    if next > bounds[1] {
        Some((bounds[1] - x) / dt)
    } else if next < bounds[0] {
        Some((bounds[0] - x) / dt)
    } else {
        None
    }
}

fn solve2(a: &Matrix2<f64>, b: &Vector2<f64>, prescribed: &[Option<f64>; 2]) -> Option<Vector2<f64>> {
    match (prescribed[0], prescribed[1]) {
        (Some(x), Some(y)) => Some(Vector2::new(x, y)),
        (Some(x), None) => Some(Vector2::new(x, (b[1] - a[(1, 0)] * x) / a[(1, 1)])),
        (None, Some(y)) => Some(Vector2::new((b[0] - a[(0, 1)] * y) / a[(0, 0)], y)),
        (None, None) => a.lu().solve(b),
    }
    .filter(|v| v.iter().all(|x| x.is_finite()))
}

//! Forward dynamics of the hand-plus-stick system.
//!
//! Generalized coordinates per finger are the gear-side proximal angle `a`, the
//! backlash offset `b` and the distal angle `d`; the link-side proximal angle
//! is `a + b`. The stick adds six velocity coordinates (linear, then angular,
//! both in world frame). Joint inertia is diagonal armature on `a` and `d` plus
//! the finger link inertia on `a + b`.
//!
//! Integration is semi-implicit Euler in which the velocity update treats the
//! stiffness and damping of PD control, passive elements and penalty contacts
//! implicitly (linearized about the current state), then advances joint
//! positions and the stick orientation with the new velocities and the stick
//! position with the mean of old and new velocity. Self-lock, backlash range
//! and joint limits are kinematic: a violating coordinate gets a prescribed velocity and the
//! remaining system is re-solved.

use std::ops::AddAssign;

use nalgebra::{Matrix3, SMatrix, SVector, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::kinematics::{forward_kinematics, HandKinematics};
use super::model::{HandModel, JointSpec, StickModel, N_ACTUATED, N_FINGERS};
use super::state::{BacklashState, SimState};
use crate::error::{Error, Result};
use crate::tactile::contact::{detect_contacts, penalty_force, ContactParams, ContactSet};
use crate::tactile::layout::TaxelLayout;

pub const N_DOF: usize = 3 * N_FINGERS + 6;
const STICK: usize = 3 * N_FINGERS;

type MatN = SMatrix<f64, N_DOF, N_DOF>;
type VecN = SVector<f64, N_DOF>;

/// `K_P (q_d - q) - K_D q̇`, unsaturated.
pub fn pd_torque(spec: &JointSpec, q_d: f64, q: f64, qdot: f64) -> f64 {
    spec.kp * (q_d - q) - spec.kd * qdot
}

pub fn effective_joint_angle(q_actuated: f64, backlash: &BacklashState) -> f64 {
    q_actuated + backlash.offset
}

/// Direction the actuator is driving a joint in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Backward,
    Hold,
    Forward,
}

pub fn commanded_direction(q_target: f64, q: f64) -> Direction {
    let e = q_target - q;
    if e > 1e-12 {
        Direction::Forward
    } else if e < -1e-12 {
        Direction::Backward
    } else {
        Direction::Hold
    }
}

/// Whether a worm-gear joint may move with `velocity` while driven in `direction`.
pub fn self_lock_allows(direction: Direction, velocity: f64) -> bool {
    match direction {
        Direction::Forward => velocity >= 0.0,
        Direction::Backward => velocity <= 0.0,
        Direction::Hold => velocity == 0.0,
    }
}

/// Kinematic self-lock: motion of the actuated coordinate against the
/// actuation direction is undone (position back to `q_prev`, velocity zero).
/// Joints without the self-lock flag are untouched.
pub fn apply_self_lock(spec: &JointSpec, q_prev: f64, q: &mut f64, qdot: &mut f64, direction: Direction) {
    if !spec.self_lock {
        return;
    }
    let moved = *q - q_prev;
    if !self_lock_allows(direction, moved) || !self_lock_allows(direction, *qdot) {
        *q = q_prev;
        *qdot = 0.0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    /// When false the stick feels no gravity (start-of-episode compensation).
    pub gravity: bool,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self { gravity: true }
    }
}

/// Everything needed to advance a [`SimState`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub hand: HandModel,
    pub stick: StickModel,
    pub contact: ContactParams,
    #[serde(skip, default = "default_layout")]
    pub layout: TaxelLayout,
}

fn default_layout() -> TaxelLayout {
    TaxelLayout::from_pad(&HandModel::canonical().pad)
}

impl World {
    pub fn new(hand: HandModel, stick: StickModel, contact: ContactParams) -> Result<Self> {
        hand.validate()?;
        stick.validate()?;
        let layout = TaxelLayout::from_pad(&hand.pad);
        Ok(Self { hand, stick, contact, layout })
    }

    pub fn kinematics(&self, state: &SimState) -> HandKinematics {
        let offsets = state.backlash.map(|b| b.offset);
        forward_kinematics(&self.hand, &self.layout, &state.q, &offsets)
    }

    /// Geometric contacts (no forces) for the current state.
    pub fn contacts(&self, state: &SimState, kin: &HandKinematics) -> ContactSet {
        detect_contacts(
            kin,
            self.layout.sensing_radius,
            self.hand.pad.bounding_radius(),
            &state.stick_position,
            &state.stick_orientation,
            &self.stick,
        )
    }

    fn velocity_vector(state: &SimState) -> VecN {
        let mut v = VecN::zeros();
        for f in 0..N_FINGERS {
            v[3 * f] = state.qdot[2 * f];
            v[3 * f + 1] = state.backlash[f].offset_velocity;
            v[3 * f + 2] = state.qdot[2 * f + 1];
        }
        v.fixed_rows_mut::<3>(STICK).copy_from(&state.stick_linear_velocity);
        v.fixed_rows_mut::<3>(STICK + 3).copy_from(&state.stick_angular_velocity);
        v
    }

    fn stick_world_inertia(&self, orientation: &UnitQuaternion<f64>) -> Matrix3<f64> {
        let [it, _, ia] = self.stick.principal_inertia();
        let r = orientation.to_rotation_matrix();
        r.matrix() * Matrix3::from_diagonal(&Vector3::new(it, it, ia)) * r.matrix().transpose()
    }

    /// Advances `state` by `dt` toward the actuated joint targets `q_target`
    /// (clamped to the joint limits). Returns the contacts at the start of the
    /// step with the forces that were applied.
    pub fn step(&self, state: &mut SimState, q_target: &[f64; N_ACTUATED], dt: f64, opts: StepOptions) -> Result<ContactSet> {
        let joints = self.hand.actuated();
        let target: [f64; N_ACTUATED] = std::array::from_fn(|i| joints[i].clamp(q_target[i]));
        let kin = self.kinematics(state);
        let mut contacts = self.contacts(state, &kin);

        let v0 = Self::velocity_vector(state);
        let mut mass = MatN::zeros();
        let mut damp = MatN::zeros();
        let mut stiff = MatN::zeros();
        let mut force = VecN::zeros();

        for f in 0..N_FINGERS {
            let spec = &self.hand.fingers[f];
            let (ia, ib, id) = (3 * f, 3 * f + 1, 3 * f + 2);
            let cap = self.hand.torque_cap(f);
            let il = spec.link_inertia;
            mass[(ia, ia)] += spec.proximal.armature + il;
            mass[(ia, ib)] += il;
            mass[(ib, ia)] += il;
            mass[(ib, ib)] += il;
            mass[(id, id)] += spec.distal.armature;

            // passive damping acts on the link-side angle a + b
            let c = spec.proximal.damping;
            let link_rate = v0[ia] + v0[ib];
            for &(r, s) in &[(ia, ia), (ia, ib), (ib, ia), (ib, ib)] {
                damp[(r, s)] += c;
            }
            force[ia] -= c * link_rate;
            force[ib] -= c * link_rate;

            let b = state.backlash[f].offset;
            stiff[(ib, ib)] += self.hand.backlash_stiffness;
            damp[(ib, ib)] += self.hand.backlash_damping;
            force[ib] -= self.hand.backlash_stiffness * b + self.hand.backlash_damping * v0[ib];

            for (dof, joint, q_index) in [(ia, &spec.proximal, 2 * f), (id, &spec.distal, 2 * f + 1)] {
                let tau = pd_torque(joint, target[q_index], state.q[q_index], v0[dof]);
                if tau.abs() <= cap {
                    force[dof] += tau;
                    stiff[(dof, dof)] += joint.kp;
                    damp[(dof, dof)] += joint.kd;
                } else {
                    force[dof] += cap.copysign(tau);
                }
            }
            let cd = spec.distal.damping;
            damp[(id, id)] += cd;
            force[id] -= cd * v0[id];
        }

        let inertia = self.stick_world_inertia(&state.stick_orientation);
        for k in 0..3 {
            mass[(STICK + k, STICK + k)] = self.stick.mass;
        }
        mass.fixed_view_mut::<3, 3>(STICK + 3, STICK + 3).copy_from(&inertia);
        let omega = state.stick_angular_velocity;
        let gyro = -omega.cross(&(inertia * omega));
        force.fixed_rows_mut::<3>(STICK + 3).add_assign(&gyro);
        if opts.gravity {
            force[STICK + 2] -= self.stick.mass * self.hand.gravity;
        }

        let center = state.stick_position;
        for contact in contacts.iter_mut() {
            let f = contact.finger();
            let pose = &kin.fingers[f];
            let p = kin.taxel_positions[contact.taxel];
            let axis = pose.flexion_axis;
            let r = contact.point - center;
            let mut g = SMatrix::<f64, 3, 9>::zeros();
            let col_prox = axis.cross(&(p - pose.proximal_origin()));
            let col_dist = axis.cross(&(p - pose.distal_origin()));
            g.set_column(0, &col_prox);
            g.set_column(1, &col_prox);
            g.set_column(2, &col_dist);
            for k in 0..3 {
                let e = Vector3::ith(k, 1.0);
                g.set_column(3 + k, &(-e));
                g.set_column(6 + k, &(-e.cross(&r)));
            }
            let idx = [3 * f, 3 * f + 1, 3 * f + 2, STICK, STICK + 1, STICK + 2, STICK + 3, STICK + 4, STICK + 5];
            let local_v = SVector::<f64, 9>::from_fn(|i, _| v0[idx[i]]);
            let v_rel = g * local_v;

            let (fn_, ft) = penalty_force(contact, &self.contact, self.stick.friction_mu, &v_rel);
            contact.normal_force = fn_;
            contact.tangential_force = ft;

            let n = contact.normal;
            let nn = n * n.transpose();
            let proj = Matrix3::identity() - nn;
            let mut d_local = Matrix3::zeros();
            if -n.dot(&v_rel) > 0.0 {
                d_local += self.contact.damping * nn;
            }
            let vt = proj * v_rel;
            let speed = vt.norm();
            let ct = self.contact.tangential_damping;
            if ct * speed <= self.stick.friction_mu * fn_ || speed < 1e-15 {
                d_local += ct * proj;
            } else {
                d_local += (self.stick.friction_mu * fn_ / speed) * proj;
            }
            let k_local = self.contact.stiffness * nn;

            let total = n * fn_ + ft;
            let gen = g.transpose() * total;
            let dg = g.transpose() * d_local * g;
            let kg = g.transpose() * k_local * g;
            for i in 0..9 {
                force[idx[i]] += gen[i];
                for j in 0..9 {
                    damp[(idx[i], idx[j])] += dg[(i, j)];
                    stiff[(idx[i], idx[j])] += kg[(i, j)];
                }
            }
        }

        let system = mass + damp * dt + stiff * (dt * dt);
        let rhs = mass * v0 + (force + damp * v0) * dt;
        let v1 = self.solve_constrained(state, &target, &system, &rhs, dt)?;

        for f in 0..N_FINGERS {
            state.qdot[2 * f] = v1[3 * f];
            state.backlash[f].offset_velocity = v1[3 * f + 1];
            state.qdot[2 * f + 1] = v1[3 * f + 2];
            state.q[2 * f] += dt * v1[3 * f];
            state.backlash[f].offset += dt * v1[3 * f + 1];
            state.q[2 * f + 1] += dt * v1[3 * f + 2];
        }
        let v_old = state.stick_linear_velocity;
        state.stick_linear_velocity = v1.fixed_rows::<3>(STICK).into_owned();
        state.stick_angular_velocity = v1.fixed_rows::<3>(STICK + 3).into_owned();
        // velocity-averaged translation: exact for ballistic flight, and the
        // stick carries no kinematic constraints that need x1 = x0 + dt v1
        state.stick_position += 0.5 * dt * (v_old + state.stick_linear_velocity);
        let spin = UnitQuaternion::from_scaled_axis(state.stick_angular_velocity * dt);
        state.stick_orientation = UnitQuaternion::new_normalize((spin * state.stick_orientation).into_inner());
        self.restore_limits(state);
        state.t += dt;

        if !state.is_finite() {
            return Err(Error::NonFiniteState { t: state.t });
        }
        Ok(contacts)
    }

    /// Solves the velocity system, prescribing velocities on coordinates that
    /// would violate self-lock, backlash range or joint limits.
    fn solve_constrained(
        &self,
        state: &SimState,
        target: &[f64; N_ACTUATED],
        system: &MatN,
        rhs: &VecN,
        dt: f64,
    ) -> Result<VecN> {
        let mut prescribed: [Option<f64>; N_DOF] = [None; N_DOF];
        for _ in 0..2 * N_DOF {
            let v = solve_with_prescribed(system, rhs, &prescribed).ok_or(Error::NonFiniteState { t: state.t })?;
            let mut changed = false;
            for f in 0..N_FINGERS {
                let spec = &self.hand.fingers[f];
                let (ia, ib, id) = (3 * f, 3 * f + 1, 3 * f + 2);
                if prescribed[ia].is_none() {
                    let a = state.q[2 * f];
                    let dir = commanded_direction(target[2 * f], a);
                    if spec.proximal.self_lock && !self_lock_allows(dir, v[ia]) {
                        prescribed[ia] = Some(0.0);
                        changed = true;
                    } else if let Some(p) = limit_velocity(a, v[ia], spec.proximal.limits, dt) {
                        prescribed[ia] = Some(p);
                        changed = true;
                    }
                }
                if prescribed[ib].is_none() {
                    let range = spec.proximal.backlash_range;
                    if let Some(p) = limit_velocity(state.backlash[f].offset, v[ib], range, dt) {
                        prescribed[ib] = Some(p);
                        changed = true;
                    }
                }
                if prescribed[id].is_none() {
                    if let Some(p) = limit_velocity(state.q[2 * f + 1], v[id], spec.distal.limits, dt) {
                        prescribed[id] = Some(p);
                        changed = true;
                    }
                }
            }
            if !changed {
                return Ok(v);
            }
        }
        solve_with_prescribed(system, rhs, &prescribed).ok_or(Error::NonFiniteState { t: state.t })
    }

    /// Hard clamps after integration; velocities pointing outward are zeroed.
    fn restore_limits(&self, state: &mut SimState) {
        for f in 0..N_FINGERS {
            let spec = &self.hand.fingers[f];
            for (i, joint) in [(2 * f, &spec.proximal), (2 * f + 1, &spec.distal)] {
                let clamped = joint.clamp(state.q[i]);
                if clamped != state.q[i] {
                    state.q[i] = clamped;
                    state.qdot[i] = 0.0;
                }
            }
            let [lo, hi] = spec.proximal.backlash_range;
            let b = &mut state.backlash[f];
            if b.offset < lo || b.offset > hi {
                b.offset = b.offset.clamp(lo, hi);
                b.offset_velocity = 0.0;
            }
        }
    }

    /// Kinetic + gravitational energy of the stick plus the joint kinetic
    /// energy and the quadratic potentials of PD springs and backlash springs.
    pub fn mechanical_energy(&self, state: &SimState, q_target: &[f64; N_ACTUATED], gravity: bool) -> f64 {
        let v = Self::velocity_vector(state);
        let mut e = 0.0;
        for f in 0..N_FINGERS {
            let spec = &self.hand.fingers[f];
            let (va, vb, vd) = (v[3 * f], v[3 * f + 1], v[3 * f + 2]);
            e += 0.5 * spec.proximal.armature * va * va
                + 0.5 * spec.link_inertia * (va + vb).powi(2)
                + 0.5 * spec.distal.armature * vd * vd;
            e += 0.5 * spec.proximal.kp * (q_target[2 * f] - state.q[2 * f]).powi(2);
            e += 0.5 * spec.distal.kp * (q_target[2 * f + 1] - state.q[2 * f + 1]).powi(2);
            e += 0.5 * self.hand.backlash_stiffness * state.backlash[f].offset.powi(2);
        }
        let inertia = self.stick_world_inertia(&state.stick_orientation);
        let w = state.stick_angular_velocity;
        e += 0.5 * self.stick.mass * state.stick_linear_velocity.norm_squared() + 0.5 * w.dot(&(inertia * w));
        if gravity {
            e += self.stick.mass * self.hand.gravity * state.stick_position.z;
        }
        e
    }
}

/// Velocity that lands exactly on the violated bound, if the step would cross it.
fn limit_velocity(x: f64, v: f64, bounds: [f64; 2], dt: f64) -> Option<f64> {
    let next = x + dt * v;
    if next > bounds[1] {
        Some((bounds[1] - x) / dt)
    } else if next < bounds[0] {
        Some((bounds[0] - x) / dt)
    } else {
        None
    }
}

fn solve_with_prescribed(system: &MatN, rhs: &VecN, prescribed: &[Option<f64>; N_DOF]) -> Option<VecN> {
    let mut a = *system;
    let mut b = *rhs;
    for (i, p) in prescribed.iter().enumerate() {
        if let Some(value) = *p {
            for j in 0..N_DOF {
                if j != i {
                    b[j] -= a[(j, i)] * value;
                }
            }
            a.row_mut(i).fill(0.0);
            a.column_mut(i).fill(0.0);
            a[(i, i)] = 1.0;
            b[i] = value;
        }
    }
    let chol = a.cholesky()?;
    let x = chol.solve(&b);
    x.iter().all(|v| v.is_finite()).then_some(x)
}

//! Desired stick poses. The lower endpoint traces a planar curve below the
//! grasp; the axis always points from it toward the grasp pivot.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit vector from `p2` to `p1`.
pub fn desired_axis(p1: &Vector3<f64>, p2: &Vector3<f64>) -> Result<Vector3<f64>> {
    let d = p1 - p2;
    let n = d.norm();
    if n < 1e-9 {
        return Err(Error::DegeneratePoints(n));
    }
    Ok(d / n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceKind {
    Line,
    Circle,
    Spiral,
    Eight,
}

impl ReferenceKind {
    pub const ALL: [ReferenceKind; 4] = [Self::Line, Self::Circle, Self::Spiral, Self::Eight];

    pub fn name(self) -> &'static str {
        match self {
            Self::Line => "line",
            Self::Circle => "circle",
            Self::Spiral => "spiral",
            Self::Eight => "eight",
        }
    }
}

impl fmt::Display for ReferenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReferenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| Error::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReferenceParams {
    /// Angular velocity of the circle and spiral (rad/s).
    pub omega: f64,
    /// Circle radius (m).
    pub radius: f64,
    pub spiral_r0: f64,
    pub spiral_r_max: f64,
    /// Turns taken to grow from `spiral_r0` to `spiral_r_max`.
    pub spiral_laps: f64,
    /// Half-width of the figure eight (m).
    pub eight_half_width: f64,
    pub eight_period: f64,
    pub line_speed: f64,
    /// The line reflects at ± this distance from the center (m).
    pub line_half_length: f64,
    /// Direction of the line in the horizontal plane (rad from +x).
    pub line_angle: f64,
}

impl Default for ReferenceParams {
    fn default() -> Self {
        Self {
            omega: PI,
            radius: 0.02,
            spiral_r0: 0.005,
            spiral_r_max: 0.02,
            spiral_laps: 3.0,
            eight_half_width: 0.02,
            eight_period: 4.0,
            line_speed: 0.02,
            line_half_length: 0.02,
            line_angle: 0.0,
        }
    }
}

/// Where the reference lives: the grasp pivot and the plane of the lower endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchor {
    pub pivot: Vector3<f64>,
    /// Height of the plane traced by the lower endpoint.
    pub plane_z: f64,
    pub stick_length: f64,
}

impl Anchor {
    /// Pivot at the origin, plane at the lower end of the nominally held stick.
    pub fn nominal(stick_length: f64) -> Self {
        let center = crate::hand::grasp::nominal_stick_center(stick_length);
        Self { pivot: Vector3::zeros(), plane_z: center.z - 0.5 * stick_length, stick_length }
    }
}

/// Desired endpoints and axis at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSample {
    pub p1: Vector3<f64>,
    pub p2: Vector3<f64>,
    pub u: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory {
    pub kind: ReferenceKind,
    pub params: ReferenceParams,
    pub anchor: Anchor,
}

fn triangle(x: f64) -> f64 {
    // period 4, range [-1, 1], tri(0) = 0 rising
    let y = (x + 1.0).rem_euclid(4.0);
    if y < 2.0 {
        y - 1.0
    } else {
        3.0 - y
    }
}

impl ReferenceTrajectory {
    pub fn new(kind: ReferenceKind, params: ReferenceParams, anchor: Anchor) -> Self {
        Self { kind, params, anchor }
    }

    /// Planar offset of the lower endpoint from below the pivot.
    pub fn planar(&self, t: f64) -> [f64; 2] {
        let p = &self.params;
        match self.kind {
            ReferenceKind::Circle => {
                let th = p.omega * t;
                [p.radius * th.cos(), p.radius * th.sin()]
            }
            ReferenceKind::Spiral => {
                let th = p.omega * t;
                let span = 2.0 * PI * p.spiral_laps;
                let k = (p.spiral_r_max - p.spiral_r0) / span;
                let phase = th.rem_euclid(2.0 * span);
                let r = if phase <= span { p.spiral_r0 + k * phase } else { p.spiral_r0 + k * (2.0 * span - phase) };
                [r * th.cos(), r * th.sin()]
            }
            ReferenceKind::Eight => {
                let phi = 2.0 * PI * t / p.eight_period;
                let a = p.eight_half_width;
                [a * phi.sin(), a * phi.sin() * phi.cos()]
            }
            ReferenceKind::Line => {
                let s = p.line_half_length * triangle(p.line_speed * t / p.line_half_length);
                [s * p.line_angle.cos(), s * p.line_angle.sin()]
            }
        }
    }

    pub fn sample(&self, t: f64) -> ReferenceSample {
        let [x, y] = self.planar(t.max(0.0));
        let a = &self.anchor;
        let p2 = Vector3::new(a.pivot.x + x, a.pivot.y + y, a.plane_z);
        let u = desired_axis(&a.pivot, &p2).expect("pivot lies above the plane");
        ReferenceSample { p1: p2 + a.stick_length * u, p2, u }
    }

    /// Upper bound on the speed of the lower endpoint (m/s).
    pub fn lipschitz(&self) -> f64 {
        let p = &self.params;
        match self.kind {
            ReferenceKind::Circle => p.radius * p.omega.abs(),
            ReferenceKind::Spiral => {
                let k = (p.spiral_r_max - p.spiral_r0) / (2.0 * PI * p.spiral_laps);
                p.omega.abs() * (p.spiral_r_max.powi(2) + k * k).sqrt()
            }
            ReferenceKind::Eight => p.eight_half_width * 2.0f64.sqrt() * 2.0 * PI / p.eight_period,
            ReferenceKind::Line => p.line_speed,
        }
    }
}

/// Desired `(P1, P2, u)` of `kind` at time `t` around the nominal anchor.
pub fn sample_reference(kind: ReferenceKind, params: &ReferenceParams, stick_length: f64, t: f64) -> ReferenceSample {
    ReferenceTrajectory::new(kind, params.clone(), Anchor::nominal(stick_length)).sample(t)
}

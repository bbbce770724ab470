//! Observation vectors for the five sensing variants.
//!
//! Every variant starts with the six normalized joint positions and the
//! desired axis `uᵈ`. Contact centers are pad-local, multiplied by the scale
//! factor; a finger without active taxels contributes `(0, 0, 0)` and a zero
//! validity bit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hand::model::{HandModel, N_ACTUATED, N_FINGERS};
use crate::hand::state::SimState;
use crate::tactile::layout::{TaxelLayout, N_TAXELS};
use crate::tactile::signal::{contact_center, TactileFrame};
use nalgebra::Vector3;

/// Patch length; maps pad-local coordinates to roughly [-1, 1].
pub const CONTACT_SCALE: f64 = 1.0 / 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationVariant {
    ContactCenters,
    ObjectPose,
    PosePlusCenters,
    RawTactile,
    PosePlusBinary,
}

const BASE: usize = N_ACTUATED + 3;
const CENTERS: usize = 3 * N_FINGERS + N_FINGERS;
const POSE: usize = 6;

impl ObservationVariant {
    pub const ALL: [ObservationVariant; 5] =
        [Self::ContactCenters, Self::ObjectPose, Self::PosePlusCenters, Self::RawTactile, Self::PosePlusBinary];

    pub fn name(self) -> &'static str {
        match self {
            Self::ContactCenters => "contact_centers",
            Self::ObjectPose => "object_pose",
            Self::PosePlusCenters => "pose_plus_centers",
            Self::RawTactile => "raw_tactile",
            Self::PosePlusBinary => "pose_plus_binary",
        }
    }

    pub fn dim(self) -> usize {
        BASE + match self {
            Self::ContactCenters => CENTERS,
            Self::ObjectPose => POSE,
            Self::PosePlusCenters => POSE + CENTERS,
            Self::RawTactile => N_TAXELS,
            Self::PosePlusBinary => POSE + N_FINGERS,
        }
    }
}

impl fmt::Display for ObservationVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObservationVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|v| v.name() == s).ok_or_else(|| Error::UnknownVariant(s.to_string()))
    }
}

/// Scaled contact centers of all fingers, `None` where no taxel is active.
pub fn scaled_contact_centers(frame: &TactileFrame, layout: &TaxelLayout, scale: f64) -> [Option<Vector3<f64>>; N_FINGERS] {
    std::array::from_fn(|f| contact_center(frame, layout, f).map(|c| c * scale))
}

/// Assembles the observation of `variant`. `frame` must already be binarized.
pub fn build_observation(
    variant: ObservationVariant,
    model: &HandModel,
    state: &SimState,
    frame: &TactileFrame,
    layout: &TaxelLayout,
    desired_axis: &Vector3<f64>,
    scale: f64,
) -> Vec<f64> {
    let mut obs = Vec::with_capacity(variant.dim());
    obs.extend(state.normalized_joints(model).iter().map(|v| v.clamp(0.0, 1.0)));
    obs.extend(desired_axis.iter());
    let pose = |obs: &mut Vec<f64>| {
        obs.extend((state.stick_position * scale).iter());
        obs.extend(state.stick_axis().iter());
    };
    let centers = |obs: &mut Vec<f64>| {
        let c = scaled_contact_centers(frame, layout, scale);
        for v in &c {
            obs.extend(v.unwrap_or_else(Vector3::zeros).iter());
        }
        obs.extend(c.iter().map(|v| if v.is_some() { 1.0 } else { 0.0 }));
    };
    match variant {
        ObservationVariant::ContactCenters => centers(&mut obs),
        ObservationVariant::ObjectPose => pose(&mut obs),
        ObservationVariant::PosePlusCenters => {
            pose(&mut obs);
            centers(&mut obs);
        }
        ObservationVariant::RawTactile => obs.extend(frame.active.iter().map(|&a| if a { 1.0 } else { 0.0 })),
        ObservationVariant::PosePlusBinary => {
            pose(&mut obs);
            obs.extend((0..N_FINGERS).map(|f| if frame.any_active(f) { 1.0 } else { 0.0 }));
        }
    }
    debug_assert_eq!(obs.len(), variant.dim());
    obs
}

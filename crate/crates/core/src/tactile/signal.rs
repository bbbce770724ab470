use std::io::Write;

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::contact::ContactSet;
use super::layout::{TaxelLayout, N_TAXELS, TAXELS_PER_PAD};
use crate::error::{Error, Result};

/// Spatial crosstalk between taxels of one pad: a contact with normal force
/// `f` on taxel `i` adds `gain · f · amplitude · exp(-d²/2σ²)` to every other
/// taxel of the same pad within `cutoff` (pad-local distance `d`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crosstalk {
    pub amplitude: f64,
    pub sigma: f64,
    pub cutoff: f64,
}

impl Crosstalk {
    pub fn none() -> Self {
        Self { amplitude: 0.0, sigma: 1.0, cutoff: 0.0 }
    }

    pub fn weight(&self, distance: f64) -> f64 {
        if distance <= 0.0 || distance > self.cutoff {
            return 0.0;
        }
        self.amplitude * (-(distance * distance) / (2.0 * self.sigma * self.sigma)).exp()
    }
}

impl Default for Crosstalk {
    /// σ is one taxel pitch along the finger (1.875 mm for the default pad).
    fn default() -> Self {
        let pitch = 0.03 / 16.0;
        Self { amplitude: 0.2, sigma: pitch, cutoff: 2.0 * pitch }
    }
}

/// Taxel transduction and processing settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    /// Sensor units per newton of normal force.
    pub gain: f64,
    pub noise_std: f64,
    /// Binarization threshold on calibrated values (strict `>`).
    pub threshold: f64,
    pub crosstalk: Crosstalk,
}

impl Default for SensorModel {
    fn default() -> Self {
        let noise_std = 0.05;
        Self { gain: 10.0, noise_std, threshold: 3.0 * noise_std, crosstalk: Crosstalk::default() }
    }
}

/// Raw readings `gain·f + crosstalk + drift + noise`, floored at zero, for all
/// 384 taxels.
pub fn synthesize_raw<R: Rng + ?Sized>(
    contacts: &ContactSet,
    layout: &TaxelLayout,
    gain: f64,
    crosstalk: &Crosstalk,
    noise_std: f64,
    drift: Option<&[f64]>,
    rng: &mut R,
) -> Vec<f64> {
    let mut raw = vec![0.0; N_TAXELS];
    for c in contacts {
        if c.normal_force <= 0.0 {
            continue;
        }
        raw[c.taxel] += gain * c.normal_force;
        if crosstalk.amplitude > 0.0 && crosstalk.cutoff > 0.0 {
            let pad_start = c.finger() * TAXELS_PER_PAD;
            let source = layout.positions[c.taxel % TAXELS_PER_PAD];
            for (j, p) in layout.positions.iter().enumerate() {
                let w = crosstalk.weight((p - source).norm());
                if w > 0.0 {
                    raw[pad_start + j] += gain * c.normal_force * w;
                }
            }
        }
    }
    if let Some(drift) = drift {
        for (r, d) in raw.iter_mut().zip(drift) {
            *r += d;
        }
    }
    if noise_std > 0.0 {
        let normal = Normal::new(0.0, noise_std).expect("finite noise std");
        for r in raw.iter_mut() {
            *r += normal.sample(rng);
        }
    }
    for r in raw.iter_mut() {
        *r = r.max(0.0);
    }
    raw
}

/// Per-taxel mean over frames captured without contact.
pub fn calibrate_offsets(no_contact_frames: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = no_contact_frames.first().ok_or(Error::EmptyWindow)?;
    let mut sum = vec![0.0; first.len()];
    for frame in no_contact_frames {
        if frame.len() != sum.len() {
            return Err(Error::ShapeMismatch { expected: sum.len(), got: frame.len() });
        }
        for (s, v) in sum.iter_mut().zip(frame) {
            *s += v;
        }
    }
    let n = no_contact_frames.len() as f64;
    Ok(sum.into_iter().map(|s| s / n).collect())
}

/// One reading of all three pads.
#[derive(Debug, Clone, PartialEq)]
pub struct TactileFrame {
    pub raw: Vec<f64>,
    pub offsets: Vec<f64>,
    pub calibrated: Vec<f64>,
    pub active: Vec<bool>,
    pub threshold: f64,
}

impl TactileFrame {
    pub fn new(raw: Vec<f64>, offsets: Vec<f64>, threshold: f64) -> Self {
        let n = raw.len();
        Self { raw, offsets, calibrated: vec![0.0; n], active: vec![false; n], threshold }
    }

    /// Frame with zero offsets, binarized.
    pub fn from_raw(raw: Vec<f64>, threshold: f64) -> Self {
        let n = raw.len();
        let mut frame = Self::new(raw, vec![0.0; n], threshold);
        binarize(&mut frame);
        frame
    }

    pub fn any_active(&self, finger: usize) -> bool {
        self.active[finger * TAXELS_PER_PAD..(finger + 1) * TAXELS_PER_PAD].iter().any(|&a| a)
    }

    /// CSV rows `t,finger,taxel,raw,calibrated,active`.
    pub fn write_rows<W: Write>(&self, writer: &mut csv::Writer<W>, t: f64) -> Result<()> {
        for (i, ((raw, cal), active)) in self.raw.iter().zip(&self.calibrated).zip(&self.active).enumerate() {
            writer.write_record([
                t.to_string(),
                (i / TAXELS_PER_PAD).to_string(),
                (i % TAXELS_PER_PAD).to_string(),
                raw.to_string(),
                cal.to_string(),
                u8::from(*active).to_string(),
            ])?;
        }
        Ok(())
    }
}

pub const TACTILE_DUMP_HEADER: [&str; 6] = ["t", "finger", "taxel", "raw", "calibrated", "active"];

/// `calibrated = max(raw - offset, 0)`, `active = calibrated > threshold`.
pub fn binarize(frame: &mut TactileFrame) -> &[bool] {
    let n = frame.raw.len();
    frame.calibrated.resize(n, 0.0);
    frame.active.resize(n, false);
    for i in 0..n {
        let offset = frame.offsets.get(i).copied().unwrap_or(0.0);
        let c = (frame.raw[i] - offset).max(0.0);
        frame.calibrated[i] = c;
        frame.active[i] = c > frame.threshold;
    }
    &frame.active
}

/// Mean pad-local position of the active taxels on `finger`, unscaled.
pub fn contact_center(frame: &TactileFrame, layout: &TaxelLayout, finger: usize) -> Option<Vector3<f64>> {
    let start = finger * TAXELS_PER_PAD;
    let mut sum = Vector3::zeros();
    let mut count = 0usize;
    for (i, p) in layout.positions.iter().enumerate() {
        if frame.active[start + i] {
            sum += p;
            count += 1;
        }
    }
    (count > 0).then(|| sum / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hand::model::PadGeometry;
    use crate::tactile::contact::Contact;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn layout() -> TaxelLayout {
        TaxelLayout::from_pad(&PadGeometry::default())
    }

    fn contact_on(taxel: usize, force: f64) -> Contact {
        Contact {
            taxel,
            point: Vector3::zeros(),
            normal: Vector3::x(),
            penetration: 1e-4,
            normal_force: force,
            tangential_force: Vector3::zeros(),
        }
    }

    #[test]
    fn raw_is_proportional_to_normal_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let raw = synthesize_raw(&vec![contact_on(5, 2.0)], &layout(), 10.0, &Crosstalk::none(), 0.0, None, &mut rng);
        assert_eq!(raw[5], 20.0);
        assert_eq!(raw.iter().filter(|&&v| v != 0.0).count(), 1);
    }

    #[test]
    fn drift_shows_on_untouched_taxel() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut drift = vec![0.0; N_TAXELS];
        drift[200] = 3.0;
        let raw = synthesize_raw(&vec![], &layout(), 10.0, &Crosstalk::none(), 0.0, Some(&drift), &mut rng);
        assert_eq!(raw[200], 3.0);
    }

    #[test]
    fn crosstalk_reaches_one_neighbor_at_half_weight() {
        // Neighbors along the finger sit one column pitch apart; a cutoff just
        // above that pitch and an amplitude chosen so the kernel equals 0.5 there
        // leaves exactly the two column neighbors (or one at the pad edge).
        let layout = layout();
        let pitch = 0.03 / 16.0;
        let sigma = pitch;
        let amplitude = 0.5 / (-0.5f64).exp();
        let crosstalk = Crosstalk { amplitude, sigma, cutoff: pitch * 1.01 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // taxel 0 is in the first column: its only in-cutoff neighbor is taxel 1
        let raw = synthesize_raw(&vec![contact_on(0, 2.0)], &layout, 10.0, &crosstalk, 0.0, None, &mut rng);
        assert!((raw[1] - 10.0).abs() < 1e-12);
        assert_eq!(raw[0], 20.0);
        assert_eq!(raw.iter().filter(|&&v| v != 0.0).count(), 2);
    }

    #[test]
    fn offsets_are_means() {
        assert_eq!(calibrate_offsets(&[vec![2.0], vec![4.0]]).unwrap(), vec![3.0]);
        assert_eq!(calibrate_offsets(&[vec![1.5, 7.0]]).unwrap(), vec![1.5, 7.0]);
        assert_eq!(calibrate_offsets(&[vec![0.0; 3], vec![0.0; 3]]).unwrap(), vec![0.0; 3]);
        assert!(matches!(calibrate_offsets(&[]), Err(Error::EmptyWindow)));
    }

    #[test]
    fn binarize_applies_offset_then_strict_threshold() {
        let mut frame = TactileFrame::new(vec![5.0, 1.0, 3.0], vec![2.0, 2.0, 2.0], 1.0);
        let mask = binarize(&mut frame).to_vec();
        assert_eq!(frame.calibrated, vec![3.0, 0.0, 1.0]);
        assert_eq!(mask, vec![true, false, false]);
        // idempotent
        let again = binarize(&mut frame).to_vec();
        assert_eq!(mask, again);
        assert_eq!(frame.calibrated, vec![3.0, 0.0, 1.0]);
    }

    #[test]
    fn contact_center_is_the_mean_of_active_sites() {
        let layout = layout();
        let mut active = vec![false; N_TAXELS];
        assert!(contact_center(&TactileFrame { active: active.clone(), ..TactileFrame::new(vec![0.0; N_TAXELS], vec![], 0.0) }, &layout, 0).is_none());
        active[128 + 3] = true;
        let frame = TactileFrame { active: active.clone(), ..TactileFrame::new(vec![0.0; N_TAXELS], vec![], 0.0) };
        assert_eq!(contact_center(&frame, &layout, 1).unwrap(), layout.positions[3]);
        active[128 + 20] = true;
        let frame = TactileFrame { active, ..TactileFrame::new(vec![0.0; N_TAXELS], vec![], 0.0) };
        let expected = 0.5 * (layout.positions[3] + layout.positions[20]);
        assert!((contact_center(&frame, &layout, 1).unwrap() - expected).norm() < 1e-15);
        assert!(contact_center(&frame, &layout, 0).is_none());
    }
}

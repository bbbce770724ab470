use std::io::{Read, Write};

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::hand::model::{PadGeometry, N_FINGERS};

pub const TAXELS_PER_PAD: usize = 128;
pub const N_TAXELS: usize = TAXELS_PER_PAD * N_FINGERS;

/// Taxel sites on one fingertip pad, identical for every finger.
///
/// Taxel `id = row * columns + column`; global ids add `finger * 128`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaxelLayout {
    pub positions: Vec<Vector3<f64>>,
    pub normals: Vec<Vector3<f64>>,
    pub sensing_radius: f64,
    pub columns: usize,
    pub rows: usize,
}

impl TaxelLayout {
    /// Wraps a `rows × columns` grid on the pad's cylindrical patch. Sites sit
    /// at cell centers in both directions.
    pub fn from_pad(pad: &PadGeometry) -> Self {
        let mut positions = Vec::with_capacity(pad.taxels());
        let mut normals = Vec::with_capacity(pad.taxels());
        for row in 0..pad.rows {
            let phi = -0.5 * pad.arc + pad.arc * (row as f64 + 0.5) / pad.rows as f64;
            let (s, c) = phi.sin_cos();
            for col in 0..pad.columns {
                let x = -0.5 * pad.length + pad.length * (col as f64 + 0.5) / pad.columns as f64;
                positions.push(Vector3::new(x, pad.radius * s, pad.radius * (c - 1.0)));
                normals.push(Vector3::new(0.0, s, c));
            }
        }
        Self { positions, normals, sensing_radius: pad.taxel_radius, columns: pad.columns, rows: pad.rows }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn finger_of(global_id: usize) -> usize {
        global_id / TAXELS_PER_PAD
    }

    pub fn local_of(global_id: usize) -> usize {
        global_id % TAXELS_PER_PAD
    }

    /// Writes `taxel_id,finger_id,x,y,z` rows (pad-local meters) for all fingers.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["taxel_id", "finger_id", "x", "y", "z"])?;
        for finger in 0..N_FINGERS {
            for (i, p) in self.positions.iter().enumerate() {
                w.write_record([
                    (finger * TAXELS_PER_PAD + i).to_string(),
                    finger.to_string(),
                    p.x.to_string(),
                    p.y.to_string(),
                    p.z.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads positions written by [`TaxelLayout::write_csv`] (or a world-frame
    /// golden file of the same shape), returning `(taxel_id, finger_id, xyz)` rows.
    pub fn read_csv_rows<R: Read>(reader: R) -> Result<Vec<(usize, usize, Vector3<f64>)>> {
        let mut r = csv::Reader::from_reader(reader);
        let mut rows = Vec::new();
        for record in r.records() {
            let record = record?;
            if record.len() != 5 {
                return Err(Error::Malformed(format!("taxel row has {} fields", record.len())));
            }
            let parse = |i: usize| -> Result<f64> {
                record[i].trim().parse::<f64>().map_err(|e| Error::Malformed(format!("taxel field {i}: {e}")))
            };
            let id = record[0].trim().parse::<usize>().map_err(|e| Error::Malformed(e.to_string()))?;
            let finger = record[1].trim().parse::<usize>().map_err(|e| Error::Malformed(e.to_string()))?;
            rows.push((id, finger, Vector3::new(parse(2)?, parse(3)?, parse(4)?)));
        }
        Ok(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_128_unit_normal_sites_inside_the_pad() {
        let pad = PadGeometry::default();
        let layout = TaxelLayout::from_pad(&pad);
        assert_eq!(layout.len(), TAXELS_PER_PAD);
        for (p, n) in layout.positions.iter().zip(&layout.normals) {
            assert!((n.norm() - 1.0).abs() < 1e-12);
            assert!(p.x.abs() <= 0.5 * pad.length);
            // on the cylinder of radius `pad.radius` whose axis is at z = -radius
            let r = (p.y * p.y + (p.z + pad.radius).powi(2)).sqrt();
            assert!((r - pad.radius).abs() < 1e-12);
            assert!(p.norm() + pad.taxel_radius <= pad.bounding_radius() + 1e-12);
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let layout = TaxelLayout::from_pad(&PadGeometry::default());
        let mut buf = Vec::new();
        layout.write_csv(&mut buf).unwrap();
        let rows = TaxelLayout::read_csv_rows(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), N_TAXELS);
        for (id, finger, p) in rows {
            assert_eq!(finger, id / TAXELS_PER_PAD);
            assert_eq!(p, layout.positions[id % TAXELS_PER_PAD]);
        }
    }
}

//! Plain-text checkpoint format.
//!
//! ```text
//! STICKHAND-CKPT 1
//! tensors <n>
//! <name> <rows> <cols>      (n lines: the shape table)
//! data
//! <row-major values, one tensor row per line, space separated>
//! ```
//!
//! Tensors, in order: `policy.<k>.w`, `policy.<k>.b` for each layer,
//! `policy.log_std`, `value.<k>.w`, `value.<k>.b`, `norm.mean`, `norm.var`,
//! and `norm.meta` = `[count, clip, enabled]`. Biases and vectors are
//! `len × 1`. Values use Rust's shortest round-trip float formatting, so a
//! load reproduces the saved model exactly.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::mlp::{Layer, Mlp};
use super::normalizer::RunningNorm;
use super::policy::ActorCritic;
use crate::error::{Error, Result};

pub const MAGIC: &str = "STICKHAND-CKPT 1";

fn tensors(model: &ActorCritic) -> Vec<(String, DMatrix<f64>)> {
    let mut out = Vec::new();
    let push_net = |prefix: &str, net: &Mlp, out: &mut Vec<(String, DMatrix<f64>)>| {
        for (k, l) in net.layers.iter().enumerate() {
            out.push((format!("{prefix}.{k}.w"), l.w.clone()));
            out.push((format!("{prefix}.{k}.b"), DMatrix::from_column_slice(l.b.len(), 1, l.b.as_slice())));
        }
    };
    push_net("policy", &model.policy, &mut out);
    out.push(("policy.log_std".into(), DMatrix::from_column_slice(model.log_std.len(), 1, model.log_std.as_slice())));
    push_net("value", &model.value, &mut out);
    let n = &model.normalizer;
    out.push(("norm.mean".into(), DMatrix::from_column_slice(n.mean.len(), 1, &n.mean)));
    out.push(("norm.var".into(), DMatrix::from_column_slice(n.var.len(), 1, &n.var)));
    out.push(("norm.meta".into(), DMatrix::from_column_slice(3, 1, &[n.count, n.clip, if n.enabled { 1.0 } else { 0.0 }])));
    out
}

pub fn to_text(model: &ActorCritic) -> String {
    let ts = tensors(model);
    let mut s = format!("{MAGIC}\ntensors {}\n", ts.len());
    for (name, m) in &ts {
        s += &format!("{name} {} {}\n", m.nrows(), m.ncols());
    }
    s += "data\n";
    for (_, m) in &ts {
        for r in 0..m.nrows() {
            let row: Vec<String> = (0..m.ncols()).map(|c| m[(r, c)].to_string()).collect();
            s += &row.join(" ");
            s += "\n";
        }
    }
    s
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::Malformed(format!("checkpoint: {}", msg.into()))
}

pub fn from_text(text: &str) -> Result<ActorCritic> {
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err(malformed("missing magic line"));
    }
    let count: usize = lines
        .next()
        .and_then(|l| l.strip_prefix("tensors "))
        .and_then(|n| n.trim().parse().ok())
        .ok_or_else(|| malformed("missing tensor count"))?;
    let mut table = Vec::with_capacity(count);
    for _ in 0..count {
        let line = lines.next().ok_or_else(|| malformed("truncated shape table"))?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(malformed(format!("bad shape line `{line}`")));
        }
        let rows: usize = parts[1].parse().map_err(|_| malformed("bad row count"))?;
        let cols: usize = parts[2].parse().map_err(|_| malformed("bad column count"))?;
        table.push((parts[0].to_string(), rows, cols));
    }
    if lines.next() != Some("data") {
        return Err(malformed("missing data marker"));
    }
    let mut mats = std::collections::BTreeMap::new();
    for (name, rows, cols) in &table {
        let mut m = DMatrix::zeros(*rows, *cols);
        for r in 0..*rows {
            let line = lines.next().ok_or_else(|| malformed(format!("truncated data in {name}")))?;
            let vals: Vec<f64> = line.split_whitespace().map(|v| v.parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| malformed(format!("bad number in {name}")))?;
            if vals.len() != *cols {
                return Err(malformed(format!("row {r} of {name} has {} values, expected {cols}", vals.len())));
            }
            for (c, v) in vals.into_iter().enumerate() {
                m[(r, c)] = v;
            }
        }
        mats.insert(name.clone(), m);
    }
    let take = |name: &str| mats.get(name).cloned().ok_or_else(|| malformed(format!("missing tensor {name}")));
    let vec_of = |m: DMatrix<f64>| DVector::from_column_slice(m.as_slice());
    let net = |prefix: &str| -> Result<Mlp> {
        let mut layers = Vec::new();
        while let (Some(w), Some(b)) = (mats.get(&format!("{prefix}.{}.w", layers.len())), mats.get(&format!("{prefix}.{}.b", layers.len()))) {
            if b.nrows() != w.nrows() {
                return Err(malformed(format!("bias/weight mismatch in {prefix}")));
            }
            if let Some(prev) = layers.last() {
                let prev: &Layer = prev;
                if prev.w.nrows() != w.ncols() {
                    return Err(malformed(format!("layer shapes do not chain in {prefix}")));
                }
            }
            layers.push(Layer { w: w.clone(), b: DVector::from_column_slice(b.as_slice()) });
        }
        if layers.is_empty() {
            return Err(malformed(format!("no layers for {prefix}")));
        }
        Ok(Mlp { layers })
    };
    let policy = net("policy")?;
    let value = net("value")?;
    let log_std = vec_of(take("policy.log_std")?);
    let meta = take("norm.meta")?;
    if meta.len() != 3 {
        return Err(malformed("norm.meta must have 3 entries"));
    }
    let normalizer = RunningNorm {
        count: meta[0],
        clip: meta[1],
        enabled: meta[2] != 0.0,
        mean: take("norm.mean")?.as_slice().to_vec(),
        var: take("norm.var")?.as_slice().to_vec(),
    };
    let dim = policy.input_dim();
    if value.input_dim() != dim || normalizer.mean.len() != dim || normalizer.var.len() != dim {
        return Err(Error::ShapeMismatch { expected: dim, got: value.input_dim() });
    }
    if log_std.len() != policy.output_dim() || value.output_dim() != 1 {
        return Err(malformed("head sizes inconsistent"));
    }
    Ok(ActorCritic { policy, log_std, value, normalizer })
}

pub fn save(path: &Path, model: &ActorCritic) -> Result<()> {
    std::fs::write(path, to_text(model))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<ActorCritic> {
    from_text(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_exact() {
        let mut model = ActorCritic::new(7, 3, &[5, 4], -1.2, true, &mut ChaCha8Rng::seed_from_u64(2));
        model.normalizer.update(&[vec![0.1; 7], vec![0.7; 7], vec![1.0 / 3.0; 7]]);
        let back = from_text(&to_text(&model)).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn rejects_garbage() {
        assert!(from_text("hello").is_err());
        let model = ActorCritic::new(2, 1, &[3], 0.0, false, &mut ChaCha8Rng::seed_from_u64(2));
        let text = to_text(&model);
        let cut: String = text.lines().take(10).collect::<Vec<_>>().join("\n");
        assert!(from_text(&cut).is_err());
    }
}

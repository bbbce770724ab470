//! Policy evaluation on the hand task and per-step episode logs.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;

use crate::env::task::{HandEnv, StepInfo};
use crate::error::{Error, Result};
use crate::hand::model::{N_ACTUATED, N_FINGERS};
use crate::seed::{rng_for, Subsystem};

/// One logged policy step.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub reward: f64,
    pub p_err_lower: f64,
    pub p_err_upper: f64,
    pub q_err_deg: f64,
    /// Lower-endpoint x, y of the reference and of the stick (m).
    pub ref_lower: [f64; 2],
    pub act_lower: [f64; 2],
    pub q: [f64; N_ACTUATED],
    /// Pad-local contact centers (m); NaN where the pad reads no contact.
    pub centers: [[f64; 3]; N_FINGERS],
    pub valid: [bool; N_FINGERS],
    pub action: [f64; N_ACTUATED],
}

impl LogRow {
    pub fn from_step(info: &StepInfo, reward: f64, action: &[f64]) -> Self {
        let mut centers = [[f64::NAN; 3]; N_FINGERS];
        let mut valid = [false; N_FINGERS];
        for f in 0..N_FINGERS {
            if let Some(c) = info.contact_centers[f] {
                centers[f] = [c.x, c.y, c.z];
                valid[f] = true;
            }
        }
        Self {
            t: info.t,
            reward,
            p_err_lower: info.p_err_lower,
            p_err_upper: info.p_err_upper,
            q_err_deg: info.q_err_deg,
            ref_lower: [info.reference.p2.x, info.reference.p2.y],
            act_lower: [info.actual.p2.x, info.actual.p2.y],
            q: info.q,
            centers,
            valid,
            action: std::array::from_fn(|i| action.get(i).copied().unwrap_or(f64::NAN)),
        }
    }
}

pub fn log_header() -> Vec<String> {
    let mut h: Vec<String> = ["t", "reward", "p_err_lower", "p_err_upper", "q_err_deg", "ref_x", "ref_y", "act_x", "act_y"].iter().map(|s| s.to_string()).collect();
    h.extend((0..N_ACTUATED).map(|i| format!("q{i}")));
    for f in 0..N_FINGERS {
        h.extend(["x", "y", "z"].iter().map(|c| format!("c{f}_{c}")));
        h.push(format!("c{f}_valid"));
    }
    h.extend((0..N_ACTUATED).map(|i| format!("a{i}")));
    h
}

pub fn write_log<W: Write>(writer: W, rows: &[LogRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(log_header())?;
    for r in rows {
        let mut rec: Vec<String> = vec![r.t, r.reward, r.p_err_lower, r.p_err_upper, r.q_err_deg, r.ref_lower[0], r.ref_lower[1], r.act_lower[0], r.act_lower[1]]
            .into_iter()
            .map(|v| v.to_string())
            .collect();
        rec.extend(r.q.iter().map(|v| v.to_string()));
        for f in 0..N_FINGERS {
            rec.extend(r.centers[f].iter().map(|v| v.to_string()));
            rec.push(u8::from(r.valid[f]).to_string());
        }
        rec.extend(r.action.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_log<R: Read>(reader: R) -> Result<Vec<LogRow>> {
    let mut rd = csv::Reader::from_reader(reader);
    let header: Vec<String> = rd.headers()?.iter().map(|s| s.to_string()).collect();
    if header != log_header() {
        return Err(Error::Malformed("episode log header does not match".into()));
    }
    let mut rows = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        let v: Vec<f64> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Malformed(format!("episode log row {}: not a number", line + 1)))?;
        let mut k = 9;
        let mut take = |n: usize| {
            let s = &v[k..k + n];
            k += n;
            s.to_vec()
        };
        let q: [f64; N_ACTUATED] = take(N_ACTUATED).try_into().expect("sized");
        let mut centers = [[0.0; 3]; N_FINGERS];
        let mut valid = [false; N_FINGERS];
        for f in 0..N_FINGERS {
            centers[f] = take(3).try_into().expect("sized");
            valid[f] = take(1)[0] != 0.0;
        }
        let action: [f64; N_ACTUATED] = take(N_ACTUATED).try_into().expect("sized");
        rows.push(LogRow {
            t: v[0],
            reward: v[1],
            p_err_lower: v[2],
            p_err_upper: v[3],
            q_err_deg: v[4],
            ref_lower: [v[5], v[6]],
            act_lower: [v[7], v[8]],
            q,
            centers,
            valid,
            action,
        });
    }
    Ok(rows)
}

pub fn save_log(path: &Path, rows: &[LogRow]) -> Result<()> {
    write_log(std::fs::File::create(path)?, rows)
}

pub fn load_log(path: &Path) -> Result<Vec<LogRow>> {
    read_log(std::fs::File::open(path)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub episode: usize,
    pub seed: u64,
    pub steps: usize,
    /// The stick stayed above the drop height for the whole horizon.
    pub retained: bool,
    pub ret: f64,
    /// Mean lower-endpoint position error (cm).
    pub p_err_cm: f64,
    /// Mean axis angle error (deg).
    pub q_err_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub episodes: Vec<EpisodeResult>,
}

impl EvalReport {
    pub fn retention(&self) -> f64 {
        self.episodes.iter().filter(|e| e.retained).count() as f64 / self.episodes.len().max(1) as f64
    }

    pub fn retained(&self) -> usize {
        self.episodes.iter().filter(|e| e.retained).count()
    }

    fn mean(&self, f: impl Fn(&EpisodeResult) -> f64) -> f64 {
        self.episodes.iter().map(f).sum::<f64>() / self.episodes.len().max(1) as f64
    }

    pub fn mean_p_err_cm(&self) -> f64 {
        self.mean(|e| e.p_err_cm)
    }

    pub fn mean_q_err_deg(&self) -> f64 {
        self.mean(|e| e.q_err_deg)
    }

    pub fn mean_return(&self) -> f64 {
        self.mean(|e| e.ret)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["episode", "seed", "steps", "retained", "return", "p_err_cm", "q_err_deg"])?;
        for e in &self.episodes {
            w.write_record([
                e.episode.to_string(),
                e.seed.to_string(),
                e.steps.to_string(),
                u8::from(e.retained).to_string(),
                e.ret.to_string(),
                e.p_err_cm.to_string(),
                e.q_err_deg.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs `episodes` episodes with `policy`. Episode `i` is reset with a seed
/// drawn from the evaluation stream `i` of `seed`. `on_episode` receives each
/// episode's log.
pub fn evaluate(
    env: &mut HandEnv,
    mut policy: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    episodes: usize,
    seed: u64,
    mut on_episode: impl FnMut(usize, &[LogRow]) -> Result<()>,
) -> Result<EvalReport> {
    let mut results = Vec::with_capacity(episodes);
    for i in 0..episodes {
        let ep_seed: u64 = rng_for(seed, Subsystem::Evaluation, i as u32).random();
        let mut obs = env.reset(ep_seed)?;
        let mut rows = Vec::new();
        let mut retained = true;
        loop {
            let action = policy(&obs)?;
            let out = env.step(&action)?;
            rows.push(LogRow::from_step(&out.info, out.reward, &action));
            obs = out.observation;
            if out.terminated {
                retained = false;
                break;
            }
            if out.truncated {
                break;
            }
        }
        let n = rows.len().max(1) as f64;
        results.push(EpisodeResult {
            episode: i,
            seed: ep_seed,
            steps: rows.len(),
            retained,
            ret: rows.iter().map(|r| r.reward).sum(),
            p_err_cm: 100.0 * rows.iter().map(|r| r.p_err_lower).sum::<f64>() / n,
            q_err_deg: rows.iter().map(|r| r.q_err_deg).sum::<f64>() / n,
        });
        on_episode(i, &rows)?;
    }
    Ok(EvalReport { episodes: results })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64, valid: bool) -> LogRow {
        LogRow {
            t,
            reward: 0.25,
            p_err_lower: 0.01,
            p_err_upper: 0.02,
            q_err_deg: 3.0,
            ref_lower: [0.02, 0.0],
            act_lower: [0.019, 0.001],
            q: [0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
            centers: if valid { [[0.001, -0.002, 0.0]; 3] } else { [[f64::NAN; 3]; 3] },
            valid: [valid; 3],
            action: [0.0, 1.0, -1.0, 0.5, 0.25, 1.0 / 3.0],
        }
    }

    #[test]
    fn log_round_trip() {
        let rows = vec![row(0.02, true), row(0.04, false)];
        let mut buf = Vec::new();
        write_log(&mut buf, &rows).unwrap();
        let back = read_log(buf.as_slice()).unwrap();
        assert_eq!(back[0], rows[0]);
        assert!(back[1].centers[0][0].is_nan() && !back[1].valid[0]);
        assert_eq!(back[1].action, rows[1].action);
    }

    #[test]
    fn malformed_log_is_rejected() {
        assert!(read_log("a,b\n1,2\n".as_bytes()).is_err());
        let mut text = log_header().join(",");
        text += "\n";
        text += &vec!["x"; log_header().len()].join(",");
        assert!(read_log(text.as_bytes()).is_err());
    }
}

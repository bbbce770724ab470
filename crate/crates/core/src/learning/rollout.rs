//! Environment interface and parallel on-policy rollout collection.
//!
//! Each worker owns one environment and its own action-sampling and
//! episode-seed streams, so the collected data depends only on the root seed
//! and the worker count, not on the thread count. Worker segments are always
//! concatenated in worker order.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::policy::ActorCritic;
use crate::error::Result;
use crate::seed::{rng_for, Subsystem};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    /// Task-specific tracking errors `(position, orientation)`, if any.
    pub errors: Option<(f64, f64)>,
}

pub trait Environment: Send {
    fn observation_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn reset(&mut self, seed: u64) -> Result<Vec<f64>>;
    fn step(&mut self, action: &[f64]) -> Result<Transition>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStats {
    pub ret: f64,
    pub length: usize,
    pub mean_p_err: f64,
    pub mean_q_err: f64,
    pub terminated: bool,
}

#[derive(Debug, Clone, Default)]
struct Accumulator {
    ret: f64,
    length: usize,
    p_err: f64,
    q_err: f64,
    n_err: usize,
}

impl Accumulator {
    fn finish(&mut self, terminated: bool) -> EpisodeStats {
        let n = self.n_err.max(1) as f64;
        let (p, q) = if self.n_err == 0 { (f64::NAN, f64::NAN) } else { (self.p_err / n, self.q_err / n) };
        let s = EpisodeStats { ret: self.ret, length: self.length, mean_p_err: p, mean_q_err: q, terminated };
        *self = Self::default();
        s
    }
}

pub struct Worker<E> {
    pub env: E,
    pub index: u32,
    obs: Option<Vec<f64>>,
    action_rng: ChaCha8Rng,
    reset_rng: ChaCha8Rng,
    acc: Accumulator,
}

/// Steps collected by one worker in one iteration.
#[derive(Debug, Clone, Default)]
pub struct Segment {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub logp: Vec<f64>,
    /// Includes `γ·V(s')` for time-limit truncations.
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub dones: Vec<bool>,
    pub last_value: f64,
    pub episodes: Vec<EpisodeStats>,
    pub discarded: usize,
}

impl<E: Environment> Worker<E> {
    pub fn new(env: E, index: u32, seed: u64) -> Self {
        Self {
            env,
            index,
            obs: None,
            action_rng: rng_for(seed, Subsystem::ActionSampling, index),
            reset_rng: rng_for(seed, Subsystem::EnvReset, index),
            acc: Accumulator::default(),
        }
    }

    fn reset(&mut self) -> Result<Vec<f64>> {
        let mut last = None;
        for _ in 0..10 {
            let seed: u64 = self.reset_rng.random();
            match self.env.reset(seed) {
                Ok(o) => return Ok(o),
                Err(e) => {
                    log::warn!("worker {}: reset failed ({e}), retrying", self.index);
                    last = Some(e);
                }
            }
        }
        Err(last.expect("at least one attempt"))
    }

    pub fn collect(&mut self, model: &ActorCritic, steps: usize, gamma: f64) -> Result<Segment> {
        let mut seg = Segment::default();
        for _ in 0..steps {
            let obs = match self.obs.take() {
                Some(o) => o,
                None => self.reset()?,
            };
            let (action, lp, value) = model.sample(&obs, &mut self.action_rng)?;
            let (reward, done) = match self.env.step(&action) {
                Ok(tr) => {
                    self.acc.ret += tr.reward;
                    self.acc.length += 1;
                    if let Some((p, q)) = tr.errors {
                        self.acc.p_err += p;
                        self.acc.q_err += q;
                        self.acc.n_err += 1;
                    }
                    let mut r = tr.reward;
                    if tr.truncated && !tr.terminated {
                        r += gamma * model.value_of(&tr.observation)?;
                    }
                    let done = tr.terminated || tr.truncated;
                    if done {
                        seg.episodes.push(self.acc.finish(tr.terminated));
                    } else {
                        self.obs = Some(tr.observation);
                    }
                    (r, done)
                }
                Err(e) => {
                    log::warn!("worker {}: episode discarded ({e})", self.index);
                    self.acc = Accumulator::default();
                    seg.discarded += 1;
                    (0.0, true)
                }
            };
            seg.obs.push(obs);
            seg.actions.push(action);
            seg.logp.push(lp);
            seg.rewards.push(reward);
            seg.values.push(value);
            seg.dones.push(done);
        }
        seg.last_value = match &self.obs {
            Some(o) => model.value_of(o)?,
            None => 0.0,
        };
        Ok(seg)
    }
}

/// Runs every worker for `steps` steps with a frozen `model`, spreading
/// workers over `threads` OS threads. Results are in worker order.
pub fn collect_parallel<E: Environment>(workers: &mut [Worker<E>], model: &ActorCritic, steps: usize, gamma: f64, threads: usize) -> Result<Vec<Segment>> {
    let threads = threads.clamp(1, workers.len().max(1));
    if threads == 1 {
        return workers.iter_mut().map(|w| w.collect(model, steps, gamma)).collect();
    }
    let per = workers.len().div_ceil(threads);
    let results: Vec<Result<Vec<Segment>>> = std::thread::scope(|s| {
        let handles: Vec<_> = workers
            .chunks_mut(per)
            .map(|chunk| s.spawn(move || chunk.iter_mut().map(|w| w.collect(model, steps, gamma)).collect::<Result<Vec<_>>>()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("rollout thread panicked")).collect()
    });
    let mut out = Vec::with_capacity(workers.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

//! Command-line front end. Every command writes `manifest.toml` into the run
//! directory before computing anything, and every output lands in that
//! directory.
//!
//! Exit codes: 0 success, 2 input error, 3 sampling or convergence failure,
//! 4 numerical failure.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::calibration::{
    estimate_backlash, export_randomization, fit_gains, probe_positions, synthetic_recording, CalibrationResult, CmaOptions, JointCalibration, ProbeOptions,
    ReferenceRecording, ReferenceSignal,
};
use crate::config::Config;
use crate::env::initial_states::{generate_initial_states, InitialState, InitialStateSet};
use crate::env::observation::ObservationVariant;
use crate::env::randomization::TruncatedNormal;
use crate::env::reference::ReferenceKind;
use crate::env::task::HandEnv;
use crate::error::{Error, Result};
use crate::eval::{evaluate, load_log, save_log};
use crate::hand::joint_rig::JointRig;
use crate::learning::toy::{mean_return, ReachTask};
use crate::learning::{checkpoint, train, ActorCritic};
use crate::plot;
use crate::seed::{rng_for, Subsystem};

#[derive(Debug, Parser)]
#[command(name = "stickhand", version, about = "Tactile three-finger hand: calibration, initial states, training, evaluation and plots")]
pub struct Cli {
    /// TOML configuration, or a manifest.toml from an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed (overrides the configuration).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Run directory.
    #[arg(long, global = true, default_value = "run")]
    pub out: PathBuf,
    /// Rollout threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit PD gains or measure backlash of one joint.
    Calibrate(CalibrateArgs),
    /// Generate initial grasp states.
    Genstates(GenstatesArgs),
    /// Train a policy with PPO.
    Train(TrainArgs),
    /// Evaluate a checkpoint.
    Eval(EvalArgs),
    /// Render SVG plots of an episode log.
    Plot(PlotArgs),
    /// Run the built-in oracle and property checks.
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CalibrationKind {
    Pd,
    Backlash,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    pub kind: CalibrationKind,
    /// Actuated joint, e.g. J0.
    #[arg(long, default_value = "J0")]
    pub joint: String,
    /// Recording CSV (t, q_target, q_measured).
    #[arg(long)]
    pub recording: Option<PathBuf>,
    /// Generate the recording from hidden gains instead of reading one.
    #[arg(long)]
    pub synthetic: bool,
    /// Measurement noise std of synthetic recordings (rad).
    #[arg(long, default_value_t = 1e-3)]
    pub noise: f64,
    /// CMA-ES generation budget.
    #[arg(long, default_value_t = 300)]
    pub budget: usize,
    /// Backlash probe count.
    #[arg(long, default_value_t = 5)]
    pub probes: usize,
    /// Backlash probe torque (N·m).
    #[arg(long, default_value_t = 0.02)]
    pub push: f64,
}

#[derive(Debug, Args)]
pub struct GenstatesArgs {
    #[arg(long, short = 'n', default_value_t = 100)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct TaskArgs {
    #[arg(long)]
    pub task: Option<ReferenceKind>,
    #[arg(long)]
    pub obs: Option<ObservationVariant>,
    /// Initial-state CSV; generated into the run directory when absent.
    #[arg(long)]
    pub states: Option<PathBuf>,
    /// Circle/spiral angular speed, e.g. `3.14`, `pi`, `0.5pi`.
    #[arg(long, value_parser = parse_angle_rate)]
    pub omega: Option<f64>,
    /// Circle radius (m).
    #[arg(long)]
    pub radius: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub task: TaskArgs,
    /// Total environment steps.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Save a checkpoint every this many iterations (0: only at the end).
    #[arg(long, default_value_t = 10)]
    pub checkpoint_every: usize,
    /// Train on the one-joint reach task instead of the hand.
    #[arg(long)]
    pub toy: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub task: TaskArgs,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Evaluate the all-zero action policy instead of a checkpoint.
    #[arg(long)]
    pub zero_policy: bool,
    #[arg(long, default_value_t = 10)]
    pub episodes: usize,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Episode log CSV.
    #[arg(long)]
    pub log: PathBuf,
}

/// `3.14`, `pi`, `0.5pi`, `1.5*pi`.
pub fn parse_angle_rate(s: &str) -> std::result::Result<f64, String> {
    let t = s.trim().to_ascii_lowercase();
    let v = if let Some(head) = t.strip_suffix("pi") {
        let head = head.trim_end_matches('*').trim();
        let k = if head.is_empty() { 1.0 } else { head.parse::<f64>().map_err(|e| format!("bad multiple of pi `{s}`: {e}"))? };
        k * std::f64::consts::PI
    } else {
        t.parse::<f64>().map_err(|e| format!("bad angular speed `{s}`: {e}"))?
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("angular speed must be finite: `{s}`"))
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::ExhaustedSampling { .. } | Error::SaturatedProbe { .. } | Error::DegenerateCovariance => 3,
        Error::NonFiniteState { .. } | Error::NonFiniteLoss | Error::DegeneratePoints(_) | Error::CheckFailed(_) => 4,
        _ => 2,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub seed: u64,
    pub version: String,
    pub started_unix: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished_unix: Option<u64>,
    pub outputs: Vec<String>,
    pub config: Config,
}

pub fn version_string() -> String {
    match option_env!("STICKHAND_GIT_DESCRIBE") {
        Some(d) => d.to_string(),
        None => format!("v{}", env!("CARGO_PKG_VERSION")),
    }
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// A configuration file is either a plain config or an earlier manifest, in
/// which case its resolved config and seed are reused.
fn load_config(path: Option<&Path>) -> Result<(Config, Option<u64>)> {
    let Some(path) = path else { return Ok((Config::default(), None)) };
    let text = std::fs::read_to_string(path)?;
    let value: toml::Table = toml::from_str(&text)?;
    if value.contains_key("command") && value.contains_key("config") {
        let m: RunManifest = toml::from_str(&text)?;
        m.config.validate()?;
        Ok((m.config, Some(m.seed)))
    } else {
        Ok((Config::from_toml(&text)?, None))
    }
}

struct Run {
    dir: PathBuf,
    manifest: RunManifest,
}

impl Run {
    fn start(dir: &Path, argv: &[String], seed: u64, config: &Config) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let run = Run {
            dir: dir.to_path_buf(),
            manifest: RunManifest { command: argv.to_vec(), seed, version: version_string(), started_unix: now(), finished_unix: None, outputs: Vec::new(), config: config.resolved() },
        };
        run.write_manifest()?;
        Ok(run)
    }

    fn write_manifest(&self) -> Result<()> {
        std::fs::write(self.dir.join("manifest.toml"), toml::to_string(&self.manifest)?)?;
        Ok(())
    }

    fn output(&mut self, name: &str) -> PathBuf {
        if !self.manifest.outputs.iter().any(|o| o == name) {
            self.manifest.outputs.push(name.to_string());
        }
        self.dir.join(name)
    }

    fn finish(mut self) -> Result<()> {
        self.manifest.finished_unix = Some(now());
        self.write_manifest()
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run_from_args(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli, &argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: Cli, argv: &[String]) -> Result<()> {
    let (mut config, manifest_seed) = load_config(cli.config.as_deref())?;
    let seed = cli.seed.or(manifest_seed).unwrap_or(config.train.seed);
    config.train.seed = seed;
    if let Some(t) = cli.threads {
        config.train.threads = t.max(1);
    }
    match &cli.command {
        Command::Calibrate(a) => cmd_calibrate(a, &cli.out, argv, seed, config),
        Command::Genstates(a) => cmd_genstates(a, &cli.out, argv, seed, config),
        Command::Train(a) => cmd_train(a, &cli.out, argv, seed, config),
        Command::Eval(a) => cmd_eval(a, &cli.out, argv, seed, config),
        Command::Plot(a) => cmd_plot(a, &cli.out, argv, seed, config),
        Command::Selftest => cmd_selftest(&cli.out, argv, seed, config),
    }
}

fn parse_joint(config: &Config, name: &str) -> Result<usize> {
    let id: usize = name
        .trim()
        .trim_start_matches(['J', 'j'])
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("joint must look like J0, got `{name}`")))?;
    config.hand.actuated_index(id).ok_or_else(|| Error::InvalidConfig(format!("J{id} is not an actuated joint")))
}

fn load_report(path: &Path) -> Result<CalibrationResult> {
    if path.exists() {
        CalibrationResult::from_report(&std::fs::read_to_string(path)?)
    } else {
        Ok(CalibrationResult::default())
    }
}

pub fn cmd_calibrate(a: &CalibrateArgs, out: &Path, argv: &[String], seed: u64, config: Config) -> Result<()> {
    let index = parse_joint(&config, &a.joint)?;
    let joint = config.hand.actuated()[index].clone();
    if a.kind == CalibrationKind::Pd && !a.synthetic {
        match &a.recording {
            None => return Err(Error::InvalidConfig("calibrate pd needs --recording or --synthetic".into())),
            Some(p) if !p.exists() => return Err(Error::Malformed(format!("recording {} not found", p.display()))),
            _ => {}
        }
    }
    let recording = match (&a.kind, &a.recording, a.synthetic) {
        (CalibrationKind::Pd, Some(p), false) => Some(ReferenceRecording::load(p)?),
        _ => None,
    };
    let mut run = Run::start(out, argv, seed, &config)?;
    let report_path = run.output("calibration_report.toml");
    let mut report = load_report(&report_path)?;
    let mut rng = rng_for(seed, Subsystem::Calibration, index as u32);
    match a.kind {
        CalibrationKind::Pd => {
            let (recording, hidden) = match recording {
                Some(r) => (r, None),
                None => {
                    let kp = joint.kp * rng.random_range(0.7..1.3);
                    let kd = joint.kd * rng.random_range(0.7..1.3);
                    let mut rec_rng = rng_for(seed, Subsystem::Recording, index as u32);
                    let rec = synthetic_recording(&config.hand, index, kp, kd, &ReferenceSignal::default(), a.noise, &mut rec_rng)?;
                    rec.save(&run.output(&format!("recording_J{}.csv", joint.id)))?;
                    (rec, Some((kp, kd)))
                }
            };
            let opts = CmaOptions { max_generations: a.budget, tol_x: 1e-6, seed, threads: config.train.threads, ..CmaOptions::default() };
            let fit = fit_gains(&config.hand, index, &recording, &opts)?;
            println!("J{}: kp = {:.5} (std {:.2e}), kd = {:.5} (std {:.2e}), residual {:.4e}, {} generations", joint.id, fit.kp.mean, fit.kp.std, fit.kd.mean, fit.kd.std, fit.residual, fit.generations);
            if let Some((kp, kd)) = hidden {
                println!(
                    "hidden truth: kp = {kp:.5}, kd = {kd:.5}; relative error kp {:.2}%, kd {:.2}%",
                    100.0 * (fit.kp.mean - kp).abs() / kp,
                    100.0 * (fit.kd.mean - kd).abs() / kd
                );
            }
            let backlash_range = report.joints.iter().find(|j| j.joint == joint.id).and_then(|j| j.backlash_range);
            report.merge(JointCalibration { backlash_range, ..fit });
        }
        CalibrationKind::Backlash => {
            if !joint.has_backlash() {
                return Err(Error::InvalidConfig(format!("J{} has no backlash", joint.id)));
            }
            let rig = JointRig::from_model(&config.hand, index);
            let est = estimate_backlash(&rig, &probe_positions(&rig, a.probes), a.push, &ProbeOptions::default(), &mut rng)?;
            println!(
                "J{}: backlash range [{:.5}, {:.5}] rad from {} probes ({} discarded)",
                joint.id,
                est.range[0],
                est.range[1],
                est.per_probe.len(),
                est.discarded.len()
            );
            let mut entry = report.joints.iter().find(|j| j.joint == joint.id).cloned().unwrap_or(JointCalibration {
                joint: joint.id,
                kp: TruncatedNormal::fixed(joint.kp),
                kd: TruncatedNormal::fixed(joint.kd),
                backlash_range: None,
                residual: f64::NAN,
                generations: 0,
            });
            entry.backlash_range = Some(est.range);
            report.merge(entry);
        }
    }
    std::fs::write(&report_path, report.to_report()?)?;
    let spec = export_randomization(&report, &config.randomization(), 0.02)?;
    std::fs::write(run.output("randomization.toml"), spec.to_toml()?)?;
    run.finish()
}

pub fn cmd_genstates(a: &GenstatesArgs, out: &Path, argv: &[String], seed: u64, config: Config) -> Result<()> {
    let mut run = Run::start(out, argv, seed, &config)?;
    let world = config.world()?;
    if a.n == 0 {
        log::warn!("n = 0: writing an empty initial-state file");
        eprintln!("warning: n = 0, writing an empty initial-state file");
    }
    let set = generate_initial_states(&world, &config.sampler, &config.task.sensor, a.n, seed)?;
    set.save(&run.output("initial_states.csv"))?;
    println!("{} states, {} attempts, acceptance rate {:.2}%", set.records.len(), set.provenance.attempts, 100.0 * set.acceptance_rate());
    run.finish()
}

fn apply_task_args(config: &mut Config, t: &TaskArgs) -> Result<()> {
    if let Some(k) = t.task {
        config.task.kind = k;
    }
    if let Some(o) = t.obs {
        config.task.observation = o;
    }
    if let Some(w) = t.omega {
        config.task.reference.omega = w;
    }
    if let Some(r) = t.radius {
        if !(r > 0.0) {
            return Err(Error::InvalidConfig("radius must be positive".into()));
        }
        config.task.reference.radius = r;
    }
    config.validate()
}

fn initial_states(run: &mut Run, config: &Config, path: Option<&Path>, seed: u64) -> Result<Arc<Vec<InitialState>>> {
    let set = match path.map(PathBuf::from).or_else(|| config.randomization().initial_states.map(PathBuf::from)) {
        Some(p) => InitialStateSet::load(&p)?,
        None => {
            let set = generate_initial_states(&config.world()?, &config.sampler, &config.task.sensor, 300, seed)?;
            set.save(&run.output("initial_states.csv"))?;
            set
        }
    };
    if set.records.is_empty() {
        return Err(Error::InvalidConfig("initial-state set is empty".into()));
    }
    Ok(Arc::new(set.records))
}

pub fn cmd_train(a: &TrainArgs, out: &Path, argv: &[String], seed: u64, mut config: Config) -> Result<()> {
    apply_task_args(&mut config, &a.task)?;
    if let Some(s) = a.steps {
        config.train.total_steps = s;
    }
    if let Some(p) = &a.task.states {
        if !p.exists() {
            return Err(Error::Malformed(format!("initial-state file {} not found", p.display())));
        }
    }
    let mut run = Run::start(out, argv, seed, &config)?;
    let ckpt_path = run.output("checkpoint.txt");
    let curve_path = run.output("curve.csv");
    let every = a.checkpoint_every;
    let mut curve = Vec::new();
    let mut on_iter = |c: &crate::learning::CurvePoint, m: &ActorCritic| -> Result<()> {
        curve.push(*c);
        println!(
            "iter {:>4} steps {:>9} return {:>9.3} p_err {:.4} q_err {:.3} episodes {}",
            c.iteration, c.env_steps, c.mean_return, c.mean_p_err, c.mean_q_err, c.episodes
        );
        if every > 0 && (c.iteration + 1) % every == 0 {
            checkpoint::save(&ckpt_path, m)?;
            crate::learning::train::save_curve(&curve_path, &curve)?;
        }
        Ok(())
    };
    let outcome = if a.toy {
        let out = train(|_| Ok(ReachTask::new()), &config.train, &mut on_iter)?;
        let task = ReachTask::new();
        let oracle = mean_return(&task, 100, |_, t| Ok(t.oracle_action()))?;
        let learned = mean_return(&task, 100, |o, _| Ok(out.model.act(o)?[0]))?;
        println!("reach task: learned return {learned:.3}, PD oracle {oracle:.3} ({:.1}%)", 100.0 * learned / oracle);
        out
    } else {
        let states = initial_states(&mut run, &config, a.task.states.as_deref(), seed)?;
        let world = config.world()?;
        let rand = config.randomization();
        train(|_| HandEnv::new(world.clone(), config.task.clone(), config.reward, rand.clone(), states.clone()), &config.train, &mut on_iter)?
    };
    checkpoint::save(&ckpt_path, &outcome.model)?;
    crate::learning::train::save_curve(&curve_path, &outcome.curve)?;
    run.finish()
}

pub fn cmd_eval(a: &EvalArgs, out: &Path, argv: &[String], seed: u64, mut config: Config) -> Result<()> {
    apply_task_args(&mut config, &a.task)?;
    let model = match (&a.checkpoint, a.zero_policy) {
        (_, true) => None,
        (Some(p), false) => {
            if !p.exists() {
                return Err(Error::Malformed(format!("checkpoint {} not found", p.display())));
            }
            Some(checkpoint::load(p)?)
        }
        (None, false) => return Err(Error::InvalidConfig("eval needs --checkpoint or --zero-policy".into())),
    };
    if let Some(m) = &model {
        if m.obs_dim() != config.task.observation.dim() {
            return Err(Error::ShapeMismatch { expected: config.task.observation.dim(), got: m.obs_dim() });
        }
    }
    let mut run = Run::start(out, argv, seed, &config)?;
    let states = initial_states(&mut run, &config, a.task.states.as_deref(), seed)?;
    let mut env = HandEnv::new(config.world()?, config.task.clone(), config.reward, config.randomization(), states)?;
    let mut log_paths = Vec::new();
    for i in 0..a.episodes {
        log_paths.push(run.output(&format!("episode_{i:02}.csv")));
    }
    let report = evaluate(
        &mut env,
        |o| match &model {
            Some(m) => m.act(o),
            None => Ok(vec![0.0; 6]),
        },
        a.episodes,
        seed,
        |i, rows| save_log(&log_paths[i], rows),
    )?;
    report.write_csv(std::fs::File::create(run.output("eval_episodes.csv"))?)?;
    let summary = format!(
        "task = \"{}\"\nobservation = \"{}\"\nomega = {}\nradius = {}\nepisodes = {}\nretained = {}\nretention = {}\nmean_p_err_cm = {}\nmean_q_err_deg = {}\nmean_return = {}\n",
        config.task.kind,
        config.task.observation.name(),
        config.task.reference.omega,
        config.task.reference.radius,
        report.episodes.len(),
        report.retained(),
        report.retention(),
        report.mean_p_err_cm(),
        report.mean_q_err_deg(),
        report.mean_return()
    );
    std::fs::write(run.output("eval_summary.toml"), &summary)?;
    println!(
        "{} episodes: grasp retained in {} ({:.0}%), mean p_err {:.3} cm, mean q_err {:.2} deg",
        report.episodes.len(),
        report.retained(),
        100.0 * report.retention(),
        report.mean_p_err_cm(),
        report.mean_q_err_deg()
    );
    run.finish()
}

pub fn cmd_plot(a: &PlotArgs, out: &Path, argv: &[String], seed: u64, config: Config) -> Result<()> {
    if !a.log.exists() {
        return Err(Error::Malformed(format!("episode log {} not found", a.log.display())));
    }
    let rows = load_log(&a.log)?;
    let mut run = Run::start(out, argv, seed, &config)?;
    if rows.is_empty() {
        eprintln!("warning: {} has no rows", a.log.display());
    }
    let stem = a.log.file_stem().and_then(|s| s.to_str()).unwrap_or("episode").to_string();
    std::fs::write(run.output(&format!("{stem}_xy.svg")), plot::xy_trace_svg(&rows))?;
    std::fs::write(run.output(&format!("{stem}_joints.svg")), plot::joint_timelines_svg(&rows))?;
    std::fs::write(run.output(&format!("{stem}_contacts.svg")), plot::contact_timelines_svg(&rows))?;
    run.finish()
}

pub fn cmd_selftest(out: &Path, argv: &[String], seed: u64, config: Config) -> Result<()> {
    let mut run = Run::start(out, argv, seed, &config)?;
    let results = crate::selftest::run_all();
    let mut text = String::new();
    for r in &results {
        let line = format!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        println!("{line}");
        text += &line;
        text += "\n";
    }
    std::fs::write(run.output("selftest.txt"), text)?;
    run.finish()?;
    if results.iter().all(|r| r.passed) {
        Ok(())
    } else {
        Err(Error::CheckFailed(results.iter().filter(|r| !r.passed).count()))
    }
}

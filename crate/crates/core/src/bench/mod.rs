//! Monte Carlo experiment harness.
//!
//! Each trial draws a fresh connected random geometric graph and fresh
//! initial states, builds the requested weight matrices and range schedules,
//! and runs every (codec, bits, weights) combination on the same draw.
//! Per-iteration metrics are then averaged across trials.
//!
//! Seeding: trial `k` reads ChaCha8 stream `k` of the base seed. The first
//! word drawn from that stream seeds the graph (see
//! [`crate::network::connected_rgg`] for resampling), the next `m` uniform
//! draws are the initial states. Trials are independent of execution order
//! and are merged in index order.

pub mod cli;
mod table;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{self, AdaptCodec, CodecState, LosslessCodec, ProgressiveCodec, UniformCodec, ZoomCodec};
use crate::engine::{self, MetricSeries, RunTrace};
use crate::network::{self, WeightMatrix};
use crate::schedule::{self, RangeSchedule, ScheduleInputs};
use crate::{Error, Result};

pub use table::{parse_table_csv, parse_table_json, to_csv, to_json, write_table, ResultTable, TableFormat, TableRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
pub enum CodecKind {
    /// Progressive quantizer, exponential range model.
    #[serde(rename = "progq")]
    #[value(name = "progq")]
    ProgQ,
    /// Progressive quantizer, recursively computed ranges.
    #[serde(rename = "progq-rec")]
    #[value(name = "progq-rec")]
    ProgQRecursive,
    /// Uniform quantizer on the fixed initial interval.
    #[serde(rename = "unifq")]
    #[value(name = "unifq")]
    UnifQ,
    /// Zoom-in/zoom-out differential quantizer.
    #[serde(rename = "zoomq")]
    #[value(name = "zoomq")]
    ZoomQ,
    /// Delta modulation with adaptive step.
    #[serde(rename = "adaptq")]
    #[value(name = "adaptq")]
    AdaptQ,
    /// Unquantized exchange.
    #[serde(rename = "noquant")]
    #[value(name = "noquant")]
    NoQuant,
}

impl CodecKind {
    pub fn name(self) -> &'static str {
        match self {
            CodecKind::ProgQ => "progq",
            CodecKind::ProgQRecursive => "progq-rec",
            CodecKind::UnifQ => "unifq",
            CodecKind::ZoomQ => "zoomq",
            CodecKind::AdaptQ => "adaptq",
            CodecKind::NoQuant => "noquant",
        }
    }
}

impl fmt::Display for CodecKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Weight construction. `Laplacian(None)` uses `0.99 / d_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum WeightKind {
    Metropolis,
    Laplacian(Option<f64>),
}

impl WeightKind {
    pub fn build(self, g: &network::Graph) -> Result<WeightMatrix> {
        match self {
            WeightKind::Metropolis => network::metropolis_weights(g),
            WeightKind::Laplacian(a) => {
                network::laplacian_weights(g, a.unwrap_or_else(|| network::default_laplacian_step(g)))
            }
        }
    }
}

impl fmt::Display for WeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightKind::Metropolis => f.write_str("metropolis"),
            WeightKind::Laplacian(None) => f.write_str("laplacian"),
            WeightKind::Laplacian(Some(a)) => write!(f, "laplacian:{a}"),
        }
    }
}

impl FromStr for WeightKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "metropolis" => Ok(WeightKind::Metropolis),
            "laplacian" => Ok(WeightKind::Laplacian(None)),
            other => match other.strip_prefix("laplacian:").map(str::parse::<f64>) {
                Some(Ok(a)) if a > 0.0 && a.is_finite() => Ok(WeightKind::Laplacian(Some(a))),
                Some(Ok(a)) => Err(format!("laplacian step must be positive and finite, got {a}")),
                _ => Err(format!(
                    "unknown weights `{other}` (expected metropolis, laplacian or laplacian:<a>)"
                )),
            },
        }
    }
}

impl TryFrom<String> for WeightKind {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl From<WeightKind> for String {
    fn from(w: WeightKind) -> String {
        w.to_string()
    }
}

/// Connection radius of the random geometric graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RadiusRule {
    Fixed(f64),
    /// `"connectivity"`: `√(ln m / m)`.
    Named(NamedRadius),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedRadius {
    Connectivity,
}

impl RadiusRule {
    pub fn radius(self, m: usize) -> f64 {
        match self {
            RadiusRule::Fixed(r) => r,
            RadiusRule::Named(NamedRadius::Connectivity) => network::connectivity_radius(m),
        }
    }
}

impl Default for RadiusRule {
    fn default() -> Self {
        RadiusRule::Named(NamedRadius::Connectivity)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub nodes: usize,
    pub radius: RadiusRule,
    pub weights: Vec<WeightKind>,
    pub codecs: Vec<CodecKind>,
    pub bits: Vec<u32>,
    pub trials: usize,
    pub horizon: usize,
    pub seed: u64,
    pub clamp_delta: f64,
    /// Initial states are uniform on `[lo, hi]`; this is also the interval
    /// the codecs start from.
    pub initial_interval: [f64; 2],
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            nodes: 40,
            radius: RadiusRule::default(),
            weights: vec![WeightKind::Metropolis],
            codecs: vec![CodecKind::ProgQ, CodecKind::UnifQ],
            bits: vec![2, 4, 6],
            trials: 200,
            horizon: 100,
            seed: 0,
            clamp_delta: schedule::DEFAULT_CLAMP_DELTA,
            initial_interval: [0.0, 1.0],
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 2 {
            return Err(Error::out_of_range("nodes", "need at least 2 nodes"));
        }
        if self.trials == 0 {
            return Err(Error::out_of_range("trials", "need at least one trial"));
        }
        if self.horizon == 0 {
            return Err(Error::out_of_range("horizon", "need at least one iteration"));
        }
        if self.bits.is_empty() || self.bits.iter().any(|&n| !(1..=32).contains(&n)) {
            return Err(Error::out_of_range("bits", format!("{:?}: each must be in 1..=32", self.bits)));
        }
        if self.codecs.is_empty() || self.weights.is_empty() {
            return Err(Error::out_of_range("codecs", "need at least one codec and one weight kind"));
        }
        let [lo, hi] = self.initial_interval;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::out_of_range("initial_interval", format!("[{lo}, {hi}]")));
        }
        if !(self.clamp_delta >= 0.0) {
            return Err(Error::out_of_range("clamp_delta", format!("{}", self.clamp_delta)));
        }
        Ok(())
    }

    /// Combinations in table order: codec, then bits, then weights.
    pub fn combinations(&self) -> Vec<RunKey> {
        let mut keys = Vec::new();
        for &codec in &self.codecs {
            for &bits in &self.bits {
                for &weights in &self.weights {
                    keys.push(RunKey { codec, bits, weights });
                }
            }
        }
        keys
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunKey {
    pub codec: CodecKind,
    pub bits: u32,
    pub weights: WeightKind,
}

impl fmt::Display for RunKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_n{}_{}", self.codec, self.bits, self.weights)
    }
}

/// A combination skipped in one trial because the exponential model has
/// no valid `γ` for that topology and bit budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exclusion {
    pub trial: usize,
    pub key: RunKey,
    /// `None` when no budget works (e.g. `λ₂ = 0`).
    pub min_bits: Option<u32>,
}

/// Everything one trial produced.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub trial: usize,
    /// Seed of the accepted graph draw.
    pub graph_seed: u64,
    /// Disconnected draws rejected before it.
    pub rejections: u32,
    /// One entry per combination, in [`ExperimentConfig::combinations`] order;
    /// `None` when excluded.
    pub series: Vec<Option<MetricSeries>>,
    pub exclusions: Vec<Exclusion>,
}

/// Inputs shared by all runs of a trial on one weight matrix.
pub struct TrialSetup {
    pub graph: network::Graph,
    pub graph_seed: u64,
    pub rejections: u32,
    pub z0: Vec<f64>,
}

/// Draws trial `k`'s graph and initial states.
pub fn trial_setup(cfg: &ExperimentConfig, k: usize) -> Result<TrialSetup> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(k as u64);
    let base = rng.next_u64();
    let (graph, rejections) = network::connected_rgg(cfg.nodes, cfg.radius.radius(cfg.nodes), base)?;
    let graph_seed = base.wrapping_add(u64::from(rejections).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let [lo, hi] = cfg.initial_interval;
    let z0 = (0..cfg.nodes).map(|_| rng.random_range(lo..=hi)).collect();
    Ok(TrialSetup {
        graph,
        graph_seed,
        rejections,
        z0,
    })
}

/// Builds the per-node codec for a combination, or reports why it cannot run.
pub(crate) enum Plan {
    Run {
        factory: Box<dyn Fn(usize) -> CodecState + Sync>,
        schedule: Option<RangeSchedule>,
    },
    Infeasible {
        min_bits: Option<u32>,
    },
}

pub(crate) fn plan(cfg: &ExperimentConfig, key: RunKey, w: &WeightMatrix, z0: &[f64]) -> Result<Plan> {
    let [lo, hi] = cfg.initial_interval;
    let (center, s0, n) = ((lo + hi) / 2.0, hi - lo, key.bits);
    let z0_inf = z0.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let horizon = cfg.horizon;
    let summary = w.summary();
    let progressive = move |_: usize| CodecState::Progressive(ProgressiveCodec::new(n, center));

    let plan = match key.codec {
        // the exponential model needs λ₂ > 0; a one-step-consensus matrix has no decay rate
        CodecKind::ProgQ if summary.lambda2 <= 0.0 => Plan::Infeasible { min_bits: None },
        CodecKind::ProgQ => match schedule::exponential_params(summary.lambda2, summary.lambda_min, n, z0_inf) {
            Ok((alpha, gamma)) => Plan::Run {
                factory: Box::new(progressive),
                schedule: Some(schedule::exponential_ranges(alpha, gamma, horizon, cfg.clamp_delta, s0)?),
            },
            Err(Error::NonPositiveLogArgument { min_bits, .. }) => Plan::Infeasible {
                min_bits: (min_bits != u32::MAX).then_some(min_bits),
            },
            Err(e) => return Err(e),
        },
        CodecKind::ProgQRecursive => {
            let inp = ScheduleInputs::from_summary(summary, n, z0_inf, s0, horizon).with_clamp(cfg.clamp_delta);
            Plan::Run {
                factory: Box::new(progressive),
                schedule: Some(schedule::recursive_ranges(&inp, horizon)?),
            }
        }
        CodecKind::UnifQ => Plan::Run {
            factory: Box::new(move |_| CodecState::Uniform(UniformCodec::new(n, lo, s0))),
            schedule: None,
        },
        CodecKind::ZoomQ => Plan::Run {
            factory: Box::new(move |_| CodecState::Zoom(ZoomCodec::with_defaults(n, center))),
            schedule: None,
        },
        CodecKind::AdaptQ => {
            let step = codec::step_size(s0, n);
            Plan::Run {
                factory: Box::new(move |_| CodecState::Adapt(AdaptCodec::new(n, center, step, codec::DEFAULT_K))),
                schedule: None,
            }
        }
        CodecKind::NoQuant => Plan::Run {
            factory: Box::new(|_| CodecState::Lossless(LosslessCodec { prev_hat: 0.0 })),
            schedule: None,
        },
    };
    Ok(plan)
}

/// Runs one combination on a prepared trial. The inner `Err` carries the
/// minimal workable bit budget when the combination is infeasible.
pub fn run_combination(
    cfg: &ExperimentConfig,
    key: RunKey,
    w: &WeightMatrix,
    z0: &[f64],
) -> Result<std::result::Result<RunTrace, Option<u32>>> {
    match plan(cfg, key, w, z0)? {
        Plan::Run { factory, schedule } => {
            Ok(Ok(engine::run_consensus(w, z0, factory, schedule.as_ref(), cfg.horizon)?))
        }
        Plan::Infeasible { min_bits } => Ok(Err(min_bits)),
    }
}

/// Runs every combination of trial `k`.
pub fn run_trial(cfg: &ExperimentConfig, k: usize) -> Result<TrialRecord> {
    let setup = trial_setup(cfg, k)?;
    let mut matrices = Vec::with_capacity(cfg.weights.len());
    for &kind in &cfg.weights {
        matrices.push((kind, kind.build(&setup.graph)?));
    }
    let mut series = Vec::new();
    let mut exclusions = Vec::new();
    for key in cfg.combinations() {
        let (_, w) = matrices
            .iter()
            .find(|(kind, _)| *kind == key.weights)
            .expect("every weight kind was built");
        match run_combination(cfg, key, w, &setup.z0)? {
            Ok(trace) => series.push(Some(engine::metrics(&trace))),
            Err(min_bits) => {
                exclusions.push(Exclusion { trial: k, key, min_bits });
                series.push(None);
            }
        }
    }
    Ok(TrialRecord {
        trial: k,
        graph_seed: setup.graph_seed,
        rejections: setup.rejections,
        series,
        exclusions,
    })
}

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Sample standard deviation; 0 for a single observation.
    fn std(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).sqrt()
        }
    }
}

/// Merges trial records (in trial-index order, whatever order they arrive in).
pub fn aggregate(cfg: &ExperimentConfig, mut records: Vec<TrialRecord>) -> Result<ResultTable> {
    records.sort_by_key(|r| r.trial);
    let keys = cfg.combinations();
    let steps = cfg.horizon + 1;
    let mut rows = Vec::with_capacity(keys.len() * steps);
    for (c, key) in keys.iter().enumerate() {
        let mut err = vec![Moments::default(); steps];
        let mut var = vec![Moments::default(); steps];
        let mut clip = vec![Moments::default(); steps];
        for rec in &records {
            if let Some(s) = &rec.series[c] {
                for t in 0..steps {
                    err[t].push(s.err[t]);
                    var[t].push(s.noise_var[t]);
                    clip[t].push(s.clip[t] as f64);
                }
            }
        }
        if err[0].count == 0 {
            let min_bits = records
                .iter()
                .flat_map(|r| &r.exclusions)
                .filter(|e| e.key == *key)
                .map(|e| e.min_bits)
                .max()
                .flatten();
            return Err(Error::InfeasibleBits {
                combination: key.to_string(),
                bits: key.bits,
                min_bits,
            });
        }
        for t in 0..steps {
            rows.push(TableRow {
                codec: key.codec.name().to_string(),
                n: key.bits,
                weights: key.weights.to_string(),
                t,
                err_mean: err[t].mean,
                err_std: err[t].std(),
                var_mean: var[t].mean,
                clip_mean: clip[t].mean,
            });
        }
    }
    Ok(ResultTable {
        rows,
        trial_seeds: records.iter().map(|r| (r.trial, r.graph_seed)).collect(),
        rejections: records.iter().map(|r| r.rejections).sum(),
        exclusions: records.into_iter().flat_map(|r| r.exclusions).collect(),
    })
}

/// Runs all trials on the rayon pool and aggregates them.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let records = (0..cfg.trials)
        .into_par_iter()
        .map(|k| run_trial(cfg, k))
        .collect::<Result<Vec<_>>>()?;
    aggregate(cfg, records)
}

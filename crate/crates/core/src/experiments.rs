//! Seeded Monte Carlo harness: per-user rate against SNR, the feedback bits
//! needed for a rate-gap target, and the suite of bound checks.
//!
//! Every trial is a pure function of `(config, trial index)`. Trials run on a
//! rayon pool, results are collected in trial order and summed pairwise, so
//! the output does not depend on the number of workers.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::{self, BoundReport};
use crate::channel::{draw_channel, make_correlation, ChannelSample, CorrelationModel, PowerCalibration, SingularValueProfile};
use crate::codebook::{
    build_eigen_baseline, build_rvq_guarded, build_statistics_guarded, order_statistic_quantize, quantize,
    streaming_quantize, CodebookFamily, QuantizationOutcome,
};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::precoding::{evaluate_rates, interference_witness, zf_precoder, PrecoderSource};
use crate::rng::{self, Role};
use crate::stats::{self, LinearFit};

/// Transmission scheme compared in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Zero-forcing on the true channel matrix.
    Ideal,
    /// Channel-statistics codebook.
    Statistics,
    /// Random vector quantization.
    Rvq,
    /// Zero-bit feedback of the principal eigenvector of each user's `R`.
    #[serde(rename = "eigen")]
    EigenBaseline,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Ideal, Scheme::Statistics, Scheme::Rvq, Scheme::EigenBaseline];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Ideal => "ideal",
            Scheme::Statistics => "statistics",
            Scheme::Rvq => "rvq",
            Scheme::EigenBaseline => "eigen",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ideal" => Ok(Scheme::Ideal),
            "statistics" | "stats" => Ok(Scheme::Statistics),
            "rvq" => Ok(Scheme::Rvq),
            "eigen" | "eigen-baseline" => Ok(Scheme::EigenBaseline),
            other => Err(Error::InvalidArgument(format!(
                "unknown scheme '{other}' (expected ideal, statistics, rvq or eigen)"
            ))),
        }
    }
}

/// How many feedback bits each SNR point gets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BitRule {
    /// `B = ceil((r - 1)/3 * SNR_dB + offset)`, clamped at zero.
    Scaled { offset: f64 },
    Fixed { bits: u32 },
    /// One entry per SNR grid point.
    PerPoint { bits: Vec<u32> },
}

impl BitRule {
    pub const DEFAULT_OFFSET: f64 = 3.17;

    pub fn scaled() -> Self {
        BitRule::Scaled {
            offset: Self::DEFAULT_OFFSET,
        }
    }

    /// Real-valued bit count before rounding, where the rule has one.
    pub fn unrounded(&self, rank: usize, snr_db: f64) -> Option<f64> {
        match self {
            BitRule::Scaled { offset } => Some((rank as f64 - 1.0) / 3.0 * snr_db + offset),
            _ => None,
        }
    }

    pub fn bits(&self, rank: usize, snr_db: f64, point: usize) -> Result<u32> {
        match self {
            BitRule::Scaled { .. } => {
                let value = self.unrounded(rank, snr_db).unwrap_or(0.0).max(0.0).ceil();
                if value > u32::MAX as f64 {
                    return Err(Error::InvalidArgument(format!("bit rule gives {value} bits")));
                }
                Ok(value as u32)
            }
            BitRule::Fixed { bits } => Ok(*bits),
            BitRule::PerPoint { bits } => bits.get(point).copied().ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "per-point bit list has {} entries but grid point {point} was requested",
                    bits.len()
                ))
            }),
        }
    }
}

impl fmt::Display for BitRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BitRule::Scaled { offset } if *offset == Self::DEFAULT_OFFSET => f.write_str("scaled"),
            BitRule::Scaled { offset } => write!(f, "scaled:{offset}"),
            BitRule::Fixed { bits } => write!(f, "{bits}"),
            BitRule::PerPoint { bits } => {
                let list: Vec<String> = bits.iter().map(u32::to_string).collect();
                write!(f, "list:{}", list.join(","))
            }
        }
    }
}

impl FromStr for BitRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |detail: &str| Error::InvalidArgument(format!("invalid bit rule '{s}': {detail}"));
        if s == "scaled" {
            return Ok(BitRule::scaled());
        }
        if let Some(offset) = s.strip_prefix("scaled:") {
            let offset: f64 = offset.parse().map_err(|_| bad("offset is not a number"))?;
            if !offset.is_finite() {
                return Err(bad("offset must be finite"));
            }
            return Ok(BitRule::Scaled { offset });
        }
        if let Some(list) = s.strip_prefix("list:") {
            let bits = list
                .split(',')
                .map(|b| b.trim().parse::<u32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad("entries must be non-negative integers"))?;
            return Ok(BitRule::PerPoint { bits });
        }
        let fixed = s.strip_prefix("fixed:").unwrap_or(s);
        fixed
            .parse::<u32>()
            .map(|bits| BitRule::Fixed { bits })
            .map_err(|_| bad("expected scaled, scaled:<offset>, <bits> or list:<b1,b2,...>"))
    }
}

/// How the best codeword is found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantizerMode {
    /// Materialize the codebook and scan it.
    Exhaustive,
    /// Generate codewords one at a time and keep the best.
    Streaming,
    /// Draw the best-of-`2^B` outcome directly (isotropic codebooks only).
    OrderStatistic,
    /// Exhaustive up to `exhaustive_max_bits`, then order-statistic when the
    /// codebook is isotropic and streaming otherwise.
    Auto,
}

impl fmt::Display for QuantizerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QuantizerMode::Exhaustive => "exhaustive",
            QuantizerMode::Streaming => "streaming",
            QuantizerMode::OrderStatistic => "order-statistic",
            QuantizerMode::Auto => "auto",
        })
    }
}

impl FromStr for QuantizerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exhaustive" => Ok(QuantizerMode::Exhaustive),
            "streaming" => Ok(QuantizerMode::Streaming),
            "order-statistic" => Ok(QuantizerMode::OrderStatistic),
            "auto" => Ok(QuantizerMode::Auto),
            other => Err(Error::InvalidArgument(format!(
                "unknown quantizer '{other}' (expected exhaustive, streaming, order-statistic or auto)"
            ))),
        }
    }
}

/// Largest codebook the order-statistic engine accepts (`2^B` must fit in a `u64`).
const ORDER_STATISTIC_MAX_BITS: u32 = 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Engine {
    Exhaustive,
    Streaming,
    OrderStatistic,
}

/// Parameters of one experiment. `threads` only affects scheduling and is
/// left out of the serialized form and the config hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub antennas: usize,
    pub users: usize,
    pub rank: usize,
    pub profile: SingularValueProfile,
    pub snr_grid_db: Vec<f64>,
    pub bit_rule: BitRule,
    /// Bit rule for RVQ; `None` uses `bit_rule`.
    pub rvq_bit_rule: Option<BitRule>,
    pub schemes: Vec<Scheme>,
    pub trials: usize,
    pub seed: u64,
    pub gap_target_bps: Option<f64>,
    /// One correlation matrix for every user and trial instead of a fresh
    /// Haar eigenbasis per user per trial.
    pub shared_correlation: bool,
    pub quantizer: QuantizerMode,
    pub exhaustive_max_bits: u32,
    /// Memory guard for materialized codebooks.
    pub max_bits: u32,
    /// Check the per-sample interference factorization on every trial.
    pub check_interference: bool,
    #[serde(skip)]
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            antennas: 64,
            users: 10,
            rank: 4,
            profile: SingularValueProfile::Equal,
            snr_grid_db: (0..=6).map(|i| 3.0 * i as f64).collect(),
            bit_rule: BitRule::scaled(),
            rvq_bit_rule: None,
            schemes: Scheme::ALL.to_vec(),
            trials: 500,
            seed: 42,
            gap_target_bps: None,
            shared_correlation: false,
            quantizer: QuantizerMode::Auto,
            exhaustive_max_bits: 8,
            max_bits: crate::codebook::DEFAULT_MAX_BITS,
            check_interference: false,
            threads: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidArgument(msg));
        if self.antennas == 0 {
            return invalid("antennas must be positive".into());
        }
        if self.users == 0 || self.users > self.antennas {
            return invalid(format!(
                "users must satisfy 1 <= K <= M (K={}, M={})",
                self.users, self.antennas
            ));
        }
        if self.rank == 0 || self.rank > self.antennas {
            return invalid(format!(
                "rank must satisfy 1 <= r <= M (r={}, M={})",
                self.rank, self.antennas
            ));
        }
        if self.trials == 0 {
            return invalid("trials must be at least 1".into());
        }
        if self.snr_grid_db.is_empty() {
            return invalid("SNR grid is empty".into());
        }
        if let Some(bad) = self.snr_grid_db.iter().find(|s| !s.is_finite()) {
            return invalid(format!("SNR grid contains {bad}"));
        }
        if self.schemes.is_empty() {
            return invalid("no schemes selected".into());
        }
        if let Some(target) = self.gap_target_bps {
            if !(target > 0.0 && target.is_finite()) {
                return invalid(format!("gap target must be positive, got {target}"));
            }
        }
        self.profile.singular_values(self.rank, self.antennas as f64)?;
        for rule in std::iter::once(&self.bit_rule).chain(self.rvq_bit_rule.as_ref()) {
            if let BitRule::PerPoint { bits } = rule {
                if bits.len() != self.snr_grid_db.len() {
                    return invalid(format!(
                        "per-point bit list has {} entries for {} SNR points",
                        bits.len(),
                        self.snr_grid_db.len()
                    ));
                }
            }
        }
        Ok(())
    }

    /// Feedback bits used by `scheme` at grid point `point`.
    pub fn bits_for(&self, scheme: Scheme, snr_db: f64, point: usize) -> Result<u32> {
        match scheme {
            Scheme::Ideal | Scheme::EigenBaseline => Ok(0),
            Scheme::Statistics => self.bit_rule.bits(self.rank, snr_db, point),
            Scheme::Rvq => self
                .rvq_bit_rule
                .as_ref()
                .unwrap_or(&self.bit_rule)
                .bits(self.rank, snr_db, point),
        }
    }

    fn unrounded_bits(&self, scheme: Scheme, snr_db: f64) -> Option<f64> {
        match scheme {
            Scheme::Statistics => self.bit_rule.unrounded(self.rank, snr_db),
            Scheme::Rvq => self.rvq_bit_rule.as_ref().unwrap_or(&self.bit_rule).unrounded(self.rank, snr_db),
            _ => None,
        }
    }

    /// SHA-256 of the JSON serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            config_hash: self.hash(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.seed,
        }
    }

    fn statistics_isotropic(&self) -> bool {
        self.profile
            .singular_values(self.rank, self.antennas as f64)
            .map(|s| s.iter().all(|v| (v - s[0]).abs() <= 1e-12 * s[0]))
            .unwrap_or(false)
    }

    fn engine(&self, scheme: Scheme, bits: u32) -> Result<Engine> {
        let isotropic = match scheme {
            Scheme::Rvq => true,
            Scheme::Statistics => self.statistics_isotropic(),
            Scheme::Ideal | Scheme::EigenBaseline => return Ok(Engine::Exhaustive),
        };
        let guarded = |engine: Engine, max_bits: u32| {
            if bits > max_bits {
                Err(Error::ResourceLimit { bits, max_bits })
            } else {
                Ok(engine)
            }
        };
        match self.quantizer {
            QuantizerMode::Exhaustive => guarded(Engine::Exhaustive, self.max_bits),
            QuantizerMode::Streaming => guarded(Engine::Streaming, self.max_bits),
            QuantizerMode::OrderStatistic if isotropic => guarded(Engine::OrderStatistic, ORDER_STATISTIC_MAX_BITS),
            QuantizerMode::OrderStatistic => Err(Error::InvalidArgument(
                "order-statistic quantizer needs an isotropic codebook (equal singular values)".into(),
            )),
            QuantizerMode::Auto => {
                if bits <= self.exhaustive_max_bits.min(self.max_bits) {
                    Ok(Engine::Exhaustive)
                } else if isotropic {
                    guarded(Engine::OrderStatistic, ORDER_STATISTIC_MAX_BITS)
                } else {
                    guarded(Engine::Streaming, self.max_bits)
                }
            }
        }
    }
}

/// Where a result came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub code_version: String,
    pub seed: u64,
}

/// Aggregate for one `(SNR, scheme)` grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub snr_db: f64,
    pub scheme: Scheme,
    pub bits: u32,
    pub bits_unrounded: Option<f64>,
    pub mean_rate: f64,
    pub rate_stderr: f64,
    /// Mean of the per-trial average quantization error; absent for ideal CSIT.
    pub mean_quant_error: Option<f64>,
    pub quant_error_stderr: Option<f64>,
    /// Mean paired difference `rate_ideal - rate_scheme` over trials valid for both.
    pub gap_vs_ideal: Option<f64>,
    pub gap_stderr: Option<f64>,
    /// Closed-form rate-gap bound for this point.
    pub gap_bound: Option<f64>,
    pub trials: usize,
    pub valid: usize,
    pub discarded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: ExperimentConfig,
    pub provenance: Provenance,
    pub records: Vec<SweepRecord>,
}

impl SweepResult {
    pub fn record(&self, snr_db: f64, scheme: Scheme) -> Option<&SweepRecord> {
        self.records.iter().find(|r| r.snr_db == snr_db && r.scheme == scheme)
    }
}

/// One scheme's outcome in one trial. `rate` is `None` when the fed-back
/// matrix was too ill-conditioned to zero-force.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeTrial {
    pub scheme: Scheme,
    pub bits: u32,
    pub rate: Option<f64>,
    pub quant_error: Option<f64>,
}

#[derive(Debug, Clone)]
struct PointSpec {
    snr_db: f64,
    bits: Vec<(Scheme, u32)>,
}

struct TrialDraw {
    models: Vec<Arc<CorrelationModel>>,
    channels: Vec<ChannelSample>,
    matrix: CMatrix,
}

fn shared_model(cfg: &ExperimentConfig) -> Result<Option<Arc<CorrelationModel>>> {
    if !cfg.shared_correlation {
        return Ok(None);
    }
    let seed = rng::derive_seed(cfg.seed, u64::MAX, Role::Eigenbasis.tag(0));
    Ok(Some(Arc::new(make_correlation(cfg.antennas, cfg.rank, &cfg.profile, seed)?)))
}

fn draw_trial(cfg: &ExperimentConfig, trial: u64, shared: Option<&Arc<CorrelationModel>>) -> Result<TrialDraw> {
    let mut models = Vec::with_capacity(cfg.users);
    let mut channels = Vec::with_capacity(cfg.users);
    for user in 0..cfg.users as u64 {
        let model = match shared {
            Some(model) => Arc::clone(model),
            None => {
                let seed = rng::derive_seed(cfg.seed, trial, Role::Eigenbasis.tag(user));
                Arc::new(make_correlation(cfg.antennas, cfg.rank, &cfg.profile, seed)?)
            }
        };
        let mut channel_rng = rng::stream(cfg.seed, trial, Role::Channel.tag(user));
        channels.push(draw_channel(&model, &mut channel_rng));
        models.push(model);
    }
    let columns: Vec<_> = channels.iter().map(|c| c.h.clone()).collect();
    let matrix = CMatrix::from_columns(&columns);
    Ok(TrialDraw {
        models,
        channels,
        matrix,
    })
}

fn quantize_user(
    cfg: &ExperimentConfig,
    model: &CorrelationModel,
    h: &ChannelSample,
    scheme: Scheme,
    bits: u32,
    seed: u64,
) -> Result<QuantizationOutcome> {
    match scheme {
        Scheme::EigenBaseline => quantize(h, &build_eigen_baseline(model)),
        Scheme::Statistics => match cfg.engine(scheme, bits)? {
            Engine::Exhaustive => quantize(h, &build_statistics_guarded(model, bits, seed, cfg.max_bits)?),
            Engine::Streaming => streaming_quantize(h, CodebookFamily::Statistics(model), bits, seed),
            Engine::OrderStatistic => order_statistic_quantize(h, CodebookFamily::Statistics(model), bits, seed),
        },
        Scheme::Rvq => match cfg.engine(scheme, bits)? {
            Engine::Exhaustive => quantize(h, &build_rvq_guarded(cfg.antennas, bits, seed, cfg.max_bits)?),
            Engine::Streaming => streaming_quantize(h, CodebookFamily::Rvq, bits, seed),
            Engine::OrderStatistic => order_statistic_quantize(h, CodebookFamily::Rvq, bits, seed),
        },
        Scheme::Ideal => Err(Error::InvalidArgument("ideal CSIT has no quantizer".into())),
    }
}

fn codebook_role(scheme: Scheme) -> Role {
    match scheme {
        Scheme::Rvq => Role::RvqCodebook,
        _ => Role::StatisticsCodebook,
    }
}

fn evaluate_point(cfg: &ExperimentConfig, draw: &TrialDraw, trial: u64, spec: &PointSpec) -> Result<Vec<SchemeTrial>> {
    let cal = PowerCalibration::new(spec.snr_db, cfg.users, cfg.antennas as f64)?;
    let mut out = Vec::with_capacity(spec.bits.len());
    for &(scheme, bits) in &spec.bits {
        if scheme == Scheme::Ideal {
            let rate = match zf_precoder(&draw.matrix, PrecoderSource::Ideal) {
                Ok(precoder) => Some(evaluate_rates(&draw.matrix, &precoder, &cal)?.mean_rate),
                Err(Error::SingularChannel { .. }) => None,
                Err(e) => return Err(e),
            };
            out.push(SchemeTrial {
                scheme,
                bits,
                rate,
                quant_error: None,
            });
            continue;
        }
        // Codebook seeds depend on neither SNR nor B: nested codebooks give
        // common random numbers along both axes.
        let outcomes = draw
            .channels
            .iter()
            .zip(&draw.models)
            .enumerate()
            .map(|(user, (h, model))| {
                let seed = rng::derive_seed(cfg.seed, trial, codebook_role(scheme).tag(user as u64));
                quantize_user(cfg, model, h, scheme, bits, seed)
            })
            .collect::<Result<Vec<_>>>()?;
        let errors: Vec<f64> = outcomes.iter().map(|o| o.quantization_error).collect();
        let quant_error = stats::pairwise_sum(&errors) / errors.len() as f64;
        let feedback: Vec<_> = outcomes.iter().map(|o| o.feedback.clone()).collect();
        let estimate = CMatrix::from_columns(&feedback);
        let rate = match zf_precoder(&estimate, PrecoderSource::Feedback) {
            Ok(precoder) => {
                if cfg.check_interference {
                    for (k, (h, outcome)) in draw.channels.iter().zip(&outcomes).enumerate() {
                        interference_witness(h, outcome, &precoder, k)?;
                    }
                }
                Some(evaluate_rates(&draw.matrix, &precoder, &cal)?.mean_rate)
            }
            Err(Error::SingularChannel { .. }) => None,
            Err(e) => return Err(e),
        };
        out.push(SchemeTrial {
            scheme,
            bits,
            rate,
            quant_error: Some(quant_error),
        });
    }
    Ok(out)
}

fn point_specs(cfg: &ExperimentConfig) -> Result<Vec<PointSpec>> {
    cfg.snr_grid_db
        .iter()
        .enumerate()
        .map(|(point, &snr_db)| {
            let bits = cfg
                .schemes
                .iter()
                .map(|&s| {
                    let b = cfg.bits_for(s, snr_db, point)?;
                    cfg.engine(s, b)?;
                    Ok((s, b))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(PointSpec { snr_db, bits })
        })
        .collect()
}

/// Runs `f` on a pool with `threads` workers (`0` uses the global pool).
pub fn with_workers<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {threads} workers: {e}")))?;
    Ok(pool.install(f))
}

/// Outcomes of one trial at SNR `snr_db` for every configured scheme.
pub fn run_trial(cfg: &ExperimentConfig, snr_db: f64, trial_index: u64) -> Result<Vec<SchemeTrial>> {
    cfg.validate()?;
    let point = cfg.snr_grid_db.iter().position(|s| *s == snr_db).unwrap_or(0);
    let bits = cfg
        .schemes
        .iter()
        .map(|&s| Ok((s, cfg.bits_for(s, snr_db, point)?)))
        .collect::<Result<Vec<_>>>()?;
    let spec = PointSpec { snr_db, bits };
    let shared = shared_model(cfg)?;
    let draw = draw_trial(cfg, trial_index, shared.as_ref())?;
    evaluate_point(cfg, &draw, trial_index, &spec)
}

fn run_points(cfg: &ExperimentConfig, specs: &[PointSpec]) -> Result<Vec<SweepRecord>> {
    let shared = shared_model(cfg)?;
    let per_trial: Vec<Result<Vec<Vec<SchemeTrial>>>> = with_workers(cfg.threads, || {
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(|trial| {
                let draw = draw_trial(cfg, trial, shared.as_ref())?;
                specs.iter().map(|spec| evaluate_point(cfg, &draw, trial, spec)).collect()
            })
            .collect()
    })?;
    let per_trial = per_trial.into_iter().collect::<Result<Vec<_>>>()?;

    let mut records = Vec::new();
    for (p, spec) in specs.iter().enumerate() {
        let ideal_slot = spec.bits.iter().position(|(s, _)| *s == Scheme::Ideal);
        let cal = PowerCalibration::new(spec.snr_db, cfg.users, cfg.antennas as f64)?;
        for (slot, &(scheme, bits)) in spec.bits.iter().enumerate() {
            let trials: Vec<&SchemeTrial> = per_trial.iter().map(|t| &t[p][slot]).collect();
            let rates: Vec<f64> = trials.iter().filter_map(|t| t.rate).collect();
            let valid = rates.len();
            let (mean_rate, rate_stderr) = stats::mean_and_stderr(&rates);
            let errors: Vec<f64> = trials.iter().filter_map(|t| t.quant_error).collect();
            let (mean_quant_error, quant_error_stderr) = if errors.is_empty() {
                (None, None)
            } else {
                let (m, s) = stats::mean_and_stderr(&errors);
                (Some(m), Some(s))
            };
            let (gap_vs_ideal, gap_stderr) = match ideal_slot {
                Some(i) if i != slot => {
                    let gaps: Vec<f64> = per_trial
                        .iter()
                        .filter_map(|t| Some(t[p][i].rate? - t[p][slot].rate?))
                        .collect();
                    if gaps.is_empty() {
                        (None, None)
                    } else {
                        let (m, s) = stats::mean_and_stderr(&gaps);
                        (Some(m), Some(s))
                    }
                }
                _ => (None, None),
            };
            let gap_bound = match scheme {
                Scheme::Statistics => Some(bounds::rate_gap_bound(&cal, bits, cfg.rank as u32)?),
                Scheme::Rvq => Some(bounds::rate_gap_bound(&cal, bits, cfg.antennas as u32)?),
                _ => None,
            };
            let record = SweepRecord {
                snr_db: spec.snr_db,
                scheme,
                bits,
                bits_unrounded: cfg.unrounded_bits(scheme, spec.snr_db),
                mean_rate: if valid == 0 { 0.0 } else { mean_rate },
                rate_stderr: if valid == 0 { 0.0 } else { rate_stderr },
                mean_quant_error,
                quant_error_stderr,
                gap_vs_ideal,
                gap_stderr,
                gap_bound,
                trials: cfg.trials,
                valid,
                discarded: cfg.trials - valid,
            };
            log::info!(
                "snr={} dB scheme={} B={}{} rate={:.4} (+/- {:.4}) discarded={}",
                record.snr_db,
                scheme,
                bits,
                record
                    .bits_unrounded
                    .map(|b| format!(" (rule {b:.3})"))
                    .unwrap_or_default(),
                record.mean_rate,
                record.rate_stderr,
                record.discarded
            );
            records.push(record);
        }
    }
    Ok(records)
}

/// Per-user rate for every `(SNR, scheme)` pair of the configuration.
/// Channels are shared across SNR points.
pub fn run_rate_curve(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let specs = point_specs(cfg)?;
    let records = run_points(cfg, &specs)?;
    Ok(SweepResult {
        config: cfg.clone(),
        provenance: cfg.provenance(),
        records,
    })
}

/// Measured gap for one candidate bit count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchStep {
    pub bits: u32,
    pub gap: Option<f64>,
    pub gap_stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequiredBitsRecord {
    pub rank: usize,
    /// Smallest `B` whose measured gap met the target.
    pub required_bits: Option<u32>,
    pub measured_gap: Option<f64>,
    pub gap_stderr: Option<f64>,
    /// Closed-form requirement for the same target, real valued.
    pub bound_bits: Option<f64>,
    pub reachable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub search: Vec<SearchStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequiredBitsResult {
    pub config: ExperimentConfig,
    pub provenance: Provenance,
    pub snr_db: f64,
    pub gap_target_bps: f64,
    pub records: Vec<RequiredBitsRecord>,
    /// Least-squares line through `(rank, required_bits)` over reachable ranks.
    pub fit: Option<LinearFit>,
}

/// Candidate bit counts evaluated per pass over the trials.
const SEARCH_BATCH: u32 = 4;

/// For each rank, the smallest `B >= 1` whose measured statistics-codebook
/// gap to ideal CSIT is at most the configured target.
pub fn find_required_bits(cfg: &ExperimentConfig, ranks: &[usize]) -> Result<RequiredBitsResult> {
    cfg.validate()?;
    let target = cfg
        .gap_target_bps
        .ok_or_else(|| Error::InvalidArgument("required-bits search needs a gap target".into()))?;
    if cfg.snr_grid_db.len() != 1 {
        return Err(Error::InvalidArgument(format!(
            "required-bits search runs at one SNR point, got {}",
            cfg.snr_grid_db.len()
        )));
    }
    if ranks.is_empty() {
        return Err(Error::InvalidArgument("no ranks to search".into()));
    }
    let snr_db = cfg.snr_grid_db[0];
    let mut records = Vec::with_capacity(ranks.len());
    for &rank in ranks {
        let mut sub = cfg.clone();
        sub.rank = rank;
        sub.schemes = vec![Scheme::Ideal, Scheme::Statistics];
        sub.validate()?;
        let bound_bits = if cfg.users >= 2 {
            Some(bounds::required_bits(snr_db, cfg.users, rank as u32, target.exp2())?)
        } else {
            None
        };
        if rank == 1 {
            records.push(RequiredBitsRecord {
                rank,
                required_bits: Some(0),
                measured_gap: None,
                gap_stderr: None,
                bound_bits,
                reachable: true,
                note: Some("rank one: every statistics codeword matches the channel direction".into()),
                search: Vec::new(),
            });
            continue;
        }
        let mut search = Vec::new();
        let mut found = None;
        let mut next = 1u32;
        while found.is_none() && next <= cfg.max_bits {
            let last = (next + SEARCH_BATCH - 1).min(cfg.max_bits);
            let specs: Vec<PointSpec> = (next..=last)
                .map(|bits| {
                    sub.engine(Scheme::Statistics, bits)?;
                    Ok(PointSpec {
                        snr_db,
                        bits: vec![(Scheme::Ideal, 0), (Scheme::Statistics, bits)],
                    })
                })
                .collect::<Result<_>>()?;
            let results = run_points(&sub, &specs)?;
            for record in results.iter().filter(|r| r.scheme == Scheme::Statistics) {
                search.push(SearchStep {
                    bits: record.bits,
                    gap: record.gap_vs_ideal,
                    gap_stderr: record.gap_stderr,
                });
                if found.is_none() && record.gap_vs_ideal.is_some_and(|g| g <= target) {
                    found = Some((record.bits, record.gap_vs_ideal, record.gap_stderr));
                }
            }
            next = last + 1;
        }
        log::info!("rank={rank} required bits={:?} (closed form {bound_bits:?})", found.map(|f| f.0));
        records.push(match found {
            Some((bits, gap, stderr)) => RequiredBitsRecord {
                rank,
                required_bits: Some(bits),
                measured_gap: gap,
                gap_stderr: stderr,
                bound_bits,
                reachable: true,
                note: None,
                search,
            },
            None => RequiredBitsRecord {
                rank,
                required_bits: None,
                measured_gap: search.last().and_then(|s| s.gap),
                gap_stderr: search.last().and_then(|s| s.gap_stderr),
                bound_bits,
                reachable: false,
                note: Some(format!("not reachable with B <= {}", cfg.max_bits)),
                search,
            },
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter_map(|r| Some((r.rank as f64, r.required_bits? as f64)))
        .unzip();
    let fit = stats::linear_fit(&xs, &ys);
    Ok(RequiredBitsResult {
        config: cfg.clone(),
        provenance: cfg.provenance(),
        snr_db,
        gap_target_bps: target,
        records,
        fit,
    })
}

/// One distributional or closed-form check.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundCheck {
    SphereCdf { r: u32, n: usize, max_distance: f64 },
    MaxZCdf { antennas: usize, r: u32, bits: u32, trials: usize, profile: SingularValueProfile },
    QuantError { antennas: usize, r: u32, bits: u32, trials: usize, profile: SingularValueProfile },
    OrderStatistic { r: u32, bits: u32, n: usize },
    Dominance { gamma: Vec<f64>, n: usize },
    ExtremeCase { r: u32, epsilon: f64, n: usize, max_distance: f64 },
    BetaChain { bits: u32, r: u32 },
    Monotonicity,
}

impl BoundCheck {
    pub fn run(&self, seed: u64) -> Result<BoundReport> {
        match self {
            BoundCheck::SphereCdf { r, n, max_distance } => bounds::check_sphere_cdf(*r, *n, seed, *max_distance),
            BoundCheck::MaxZCdf { antennas, r, bits, trials, profile } => {
                bounds::check_max_z_cdf(*antennas, *r, *bits, *trials, profile, seed)
            }
            BoundCheck::QuantError { antennas, r, bits, trials, profile } => {
                bounds::check_quant_error(*antennas, *r, *bits, *trials, profile, seed)
            }
            BoundCheck::OrderStatistic { r, bits, n } => bounds::check_order_statistic(*r, *bits, *n, seed),
            BoundCheck::Dominance { gamma, n } => bounds::check_dominance(gamma, *n, seed),
            BoundCheck::ExtremeCase { r, epsilon, n, max_distance } => {
                bounds::check_extreme_case(*r, *epsilon, *n, seed, *max_distance)
            }
            BoundCheck::BetaChain { bits, r } => bounds::beta_chain_check(*bits, *r),
            BoundCheck::Monotonicity => bounds::check_monotonicity(),
        }
    }
}

/// Declared parameter lattice for `run_bound_suite`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundLattice {
    pub checks: Vec<BoundCheck>,
}

/// Seed of the stream that draws the randomized stretching matrices. Fixed so
/// the lattice is the same for every suite seed.
const GAMMA_LATTICE_SEED: u64 = 0x05ee_d0f6_a33a;

impl BoundLattice {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Randomized stretching diagonals: `count` draws cycling over `ranks`.
    pub fn random_gammas(count: usize, ranks: &[usize]) -> Vec<Vec<f64>> {
        let mut rng = rng::from_seed(GAMMA_LATTICE_SEED);
        (0..count)
            .map(|i| bounds::random_gamma(ranks[i % ranks.len()], &mut rng))
            .collect()
    }

    pub fn full() -> Self {
        let n = 100_000;
        let mut checks = Vec::new();
        for r in [2, 4, 6] {
            checks.push(BoundCheck::SphereCdf { r, n, max_distance: 0.006 });
        }
        checks.push(BoundCheck::MaxZCdf {
            antennas: 64,
            r: 4,
            bits: 8,
            trials: 10_000,
            profile: SingularValueProfile::Exponential { rho: 0.5 },
        });
        checks.push(BoundCheck::MaxZCdf {
            antennas: 16,
            r: 3,
            bits: 4,
            trials: 10_000,
            profile: SingularValueProfile::Equal,
        });
        for r in [2, 3, 4] {
            for bits in [2, 4, 6, 8, 10] {
                checks.push(BoundCheck::QuantError {
                    antennas: 64,
                    r,
                    bits,
                    trials: 10_000,
                    profile: SingularValueProfile::Equal,
                });
            }
        }
        for bits in [4, 8] {
            checks.push(BoundCheck::QuantError {
                antennas: 64,
                r: 4,
                bits,
                trials: 10_000,
                profile: SingularValueProfile::Exponential { rho: 0.5 },
            });
        }
        for bits in [2, 4] {
            checks.push(BoundCheck::OrderStatistic { r: 3, bits, n: 20_000 });
        }
        checks.push(BoundCheck::Dominance {
            gamma: vec![2.0, 1.0, 0.5, 0.25],
            n,
        });
        for gamma in Self::random_gammas(20, &[2, 3, 4, 6]) {
            checks.push(BoundCheck::Dominance { gamma, n });
        }
        for r in [3, 4] {
            checks.push(BoundCheck::ExtremeCase {
                r,
                epsilon: 1e-6,
                n,
                max_distance: 0.02,
            });
        }
        for bits in 0..=20 {
            for r in 2..=8 {
                checks.push(BoundCheck::BetaChain { bits, r });
            }
        }
        checks.push(BoundCheck::Monotonicity);
        Self { checks }
    }
}

/// Runs every check of `lattice`; check `i` samples from a stream derived
/// from `(seed, i)`.
pub fn run_bound_suite(seed: u64, lattice: &BoundLattice, threads: usize) -> Result<Vec<BoundReport>> {
    let reports: Vec<Result<BoundReport>> = with_workers(threads, || {
        lattice
            .checks
            .par_iter()
            .enumerate()
            .map(|(i, check)| check.run(rng::derive_seed(seed, i as u64, Role::Sampler.tag(0))))
            .collect()
    })?;
    reports.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            antennas: 8,
            users: 3,
            rank: 2,
            snr_grid_db: vec![0.0, 10.0],
            trials: 20,
            seed: 9,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn scheme_and_rule_strings_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert_eq!("eigen-baseline".parse::<Scheme>().unwrap(), Scheme::EigenBaseline);
        for text in ["scaled", "scaled:2.5", "7", "list:1,2,3"] {
            assert_eq!(text.parse::<BitRule>().unwrap().to_string(), text);
        }
        assert!("list:1,x".parse::<BitRule>().is_err());
        for text in ["exhaustive", "streaming", "order-statistic", "auto"] {
            assert_eq!(text.parse::<QuantizerMode>().unwrap().to_string(), text);
        }
    }

    #[test]
    fn scaled_rule_rounds_up() {
        let rule = BitRule::scaled();
        assert_eq!(rule.bits(4, 0.0, 0).unwrap(), 4);
        assert_eq!(rule.bits(4, 6.0, 0).unwrap(), 10);
        assert_eq!(rule.bits(4, 18.0, 0).unwrap(), 22);
        assert!((rule.unrounded(4, 18.0).unwrap() - 21.17).abs() < 1e-12);
        assert_eq!(rule.bits(4, -30.0, 0).unwrap(), 0);
    }

    #[test]
    fn ideal_single_user_rate_is_log_of_channel_gain() {
        let cfg = ExperimentConfig {
            users: 1,
            schemes: vec![Scheme::Ideal],
            ..small_config()
        };
        let out = run_trial(&cfg, 10.0, 3).unwrap();
        let draw = draw_trial(&cfg, 3, None).unwrap();
        let gamma = PowerCalibration::new(10.0, 1, 8.0).unwrap().transmit_power;
        let expected = (1.0 + gamma * draw.channels[0].norm_sq).log2();
        assert!((out[0].rate.unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn trials_are_deterministic() {
        let cfg = small_config();
        assert_eq!(run_trial(&cfg, 10.0, 5).unwrap(), run_trial(&cfg, 10.0, 5).unwrap());
        assert_ne!(run_trial(&cfg, 10.0, 5).unwrap(), run_trial(&cfg, 10.0, 6).unwrap());
    }

    #[test]
    fn feedback_rates_stay_below_ideal() {
        let cfg = ExperimentConfig {
            bit_rule: BitRule::Fixed { bits: 0 },
            trials: 200,
            ..small_config()
        };
        let result = run_rate_curve(&cfg).unwrap();
        for snr in &cfg.snr_grid_db {
            let ideal = result.record(*snr, Scheme::Ideal).unwrap().mean_rate;
            for scheme in [Scheme::Statistics, Scheme::EigenBaseline, Scheme::Rvq] {
                let rec = result.record(*snr, scheme).unwrap();
                assert!(rec.mean_rate >= 0.0 && rec.mean_rate <= 1.05 * ideal, "{scheme}: {rec:?}");
            }
        }
    }

    #[test]
    fn accounting_and_grid_coverage() {
        let cfg = small_config();
        let result = run_rate_curve(&cfg).unwrap();
        assert_eq!(result.records.len(), cfg.snr_grid_db.len() * cfg.schemes.len());
        for rec in &result.records {
            assert_eq!(rec.valid + rec.discarded, rec.trials);
            assert!(rec.rate_stderr >= 0.0 && rec.mean_rate >= 0.0);
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut cfg = small_config();
        cfg.threads = 1;
        let one = run_rate_curve(&cfg).unwrap();
        cfg.threads = 3;
        let three = run_rate_curve(&cfg).unwrap();
        assert_eq!(one.records, three.records);
        assert_eq!(one.provenance, three.provenance);
    }

    #[test]
    fn engines_agree_on_small_codebooks() {
        let mut cfg = small_config();
        cfg.bit_rule = BitRule::Fixed { bits: 3 };
        cfg.quantizer = QuantizerMode::Exhaustive;
        let exhaustive = run_trial(&cfg, 10.0, 2).unwrap();
        cfg.quantizer = QuantizerMode::Streaming;
        let streaming = run_trial(&cfg, 10.0, 2).unwrap();
        // Streaming RVQ reproduces the materialized book exactly.
        let rvq = |v: &[SchemeTrial]| *v.iter().find(|t| t.scheme == Scheme::Rvq).unwrap();
        assert_eq!(rvq(&exhaustive), rvq(&streaming));
    }

    #[test]
    fn memory_guard_is_reported() {
        let cfg = ExperimentConfig {
            bit_rule: BitRule::Fixed { bits: 30 },
            quantizer: QuantizerMode::Exhaustive,
            ..small_config()
        };
        assert!(matches!(run_rate_curve(&cfg), Err(Error::ResourceLimit { bits: 30, .. })));
        let cfg = ExperimentConfig {
            profile: SingularValueProfile::Exponential { rho: 0.5 },
            quantizer: QuantizerMode::OrderStatistic,
            ..small_config()
        };
        assert!(matches!(run_rate_curve(&cfg), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn interference_check_mode_runs_clean() {
        let cfg = ExperimentConfig {
            check_interference: true,
            bit_rule: BitRule::Fixed { bits: 4 },
            ..small_config()
        };
        run_rate_curve(&cfg).unwrap();
    }

    #[test]
    fn config_hash_ignores_threads() {
        let mut a = small_config();
        let h = a.hash();
        a.threads = 7;
        assert_eq!(a.hash(), h);
        a.seed += 1;
        assert_ne!(a.hash(), h);
        assert_eq!(h.len(), 64);
    }

    #[test]
    fn required_bits_handles_rank_one_and_bad_input() {
        let mut cfg = small_config();
        cfg.snr_grid_db = vec![6.0];
        assert!(find_required_bits(&cfg, &[1]).is_err());
        cfg.gap_target_bps = Some(1.0);
        let result = find_required_bits(&cfg, &[1]).unwrap();
        assert_eq!(result.records[0].required_bits, Some(0));
        assert!(result.records[0].note.is_some());
        cfg.snr_grid_db = vec![0.0, 6.0];
        assert!(find_required_bits(&cfg, &[2]).is_err());
    }

    #[test]
    fn loose_target_needs_no_more_than_the_scaled_rule() {
        let mut cfg = small_config();
        cfg.snr_grid_db = vec![6.0];
        cfg.gap_target_bps = Some(3.0);
        let result = find_required_bits(&cfg, &[2]).unwrap();
        let rec = &result.records[0];
        assert!(rec.reachable);
        assert!(rec.required_bits.unwrap() <= BitRule::scaled().bits(2, 6.0, 0).unwrap());
    }

    #[test]
    fn unreachable_target_is_reported() {
        let mut cfg = small_config();
        cfg.snr_grid_db = vec![30.0];
        cfg.gap_target_bps = Some(1e-9);
        cfg.max_bits = 3;
        let result = find_required_bits(&cfg, &[2]).unwrap();
        assert!(!result.records[0].reachable);
        assert_eq!(result.records[0].search.len(), 3);
    }

    #[test]
    fn empty_lattice_gives_no_reports() {
        assert!(run_bound_suite(1, &BoundLattice::empty(), 0).unwrap().is_empty());
    }
}

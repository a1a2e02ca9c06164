//! Command-line front end: argument parsing, key=value config files and
//! CSV/JSON output.
//!
//! Settings are resolved in three layers: built-in defaults for the
//! subcommand, then the config file, then command-line flags. Config files
//! use the flag names as keys:
//!
//! ```text
//! # rates.cfg
//! antennas = 64
//! snr = 0:18:3
//! schemes = ideal,statistics,rvq,eigen
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bounds::{quant_error_bound, BoundReport};
use crate::channel::{draw_channel, make_correlation, SingularValueProfile};
use crate::codebook::{build_eigen_baseline, build_rvq_guarded, build_statistics_guarded, quantize, CodebookKind};
use crate::error::{Error, Result};
use crate::experiments::{
    find_required_bits, run_bound_suite, run_rate_curve, BitRule, BoundLattice, ExperimentConfig, QuantizerMode,
    RequiredBitsResult, Scheme, SweepRecord, SweepResult,
};
use crate::rng::{self, Role};

/// Environment variable that caps the worker count (`0` = all cores).
pub const THREADS_ENV: &str = "MIMO_FB_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "mimofb",
    version,
    about = "Limited-feedback multiuser MIMO simulator: channel-statistics codebooks, zero-forcing, rate-gap bounds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-user rate against SNR for each scheme.
    RateCurve(RunArgs),
    /// Smallest feedback bit count whose measured rate gap meets a target, per rank.
    RequiredBits(RunArgs),
    /// Run the bound checks on the built-in parameter lattice.
    BoundSuite(SuiteArgs),
    /// Quantize one channel draw and print the outcome.
    QuantizeDemo(DemoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Key=value config file; flags given on the command line take precedence.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output file [default: standard output].
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads, 0 = all cores [default: $MIMO_FB_THREADS or 0].
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Transmit antennas M [default: 64].
    #[arg(long, value_name = "M", value_parser = positive_int)]
    pub antennas: Option<String>,
    /// Users K [default: 10].
    #[arg(long, value_name = "K", value_parser = positive_int)]
    pub users: Option<String>,
    /// Correlation rank r [default: 4].
    #[arg(long, value_name = "R", value_parser = positive_int)]
    pub rank: Option<String>,
    /// Singular-value profile: equal, exp:<rho> or list:<s1,s2,...> [default: equal].
    #[arg(long, value_parser = profile_arg)]
    pub profile: Option<String>,
    /// SNR grid in dB: start:stop:step, a single value, or a comma list
    /// [default: 0:18:3 for rate-curve, 6 for required-bits].
    #[arg(long, value_name = "GRID", value_parser = snr_arg, allow_hyphen_values = true)]
    pub snr: Option<String>,
    /// Feedback bits: scaled, scaled:<offset>, <B> or list:<B1,B2,...> [default: scaled, i.e. ceil((r-1)/3*SNR+3.17)].
    #[arg(long, value_name = "RULE", value_parser = bit_rule_arg)]
    pub bits: Option<String>,
    /// Bit rule for RVQ [default: same as --bits].
    #[arg(long, value_name = "RULE", value_parser = bit_rule_arg)]
    pub rvq_bits: Option<String>,
    /// Comma-separated subset of ideal,statistics,rvq,eigen [default: all four].
    #[arg(long, value_parser = schemes_arg)]
    pub schemes: Option<String>,
    /// Monte Carlo trials per grid point [default: 500].
    #[arg(long, value_name = "N", value_parser = positive_int)]
    pub trials: Option<String>,
    /// Master seed [default: 42].
    #[arg(long, value_parser = seed_arg)]
    pub seed: Option<String>,
    /// Rate-gap target in bits/s/Hz [default: 0.5 for required-bits].
    #[arg(long, value_name = "BPS", value_parser = positive_real)]
    pub gap_target: Option<String>,
    /// Ranks searched by required-bits [default: 2,3,4].
    #[arg(long, value_parser = ranks_arg)]
    pub ranks: Option<String>,
    /// exhaustive, streaming, order-statistic or auto [default: auto].
    #[arg(long, value_parser = quantizer_arg)]
    pub quantizer: Option<String>,
    /// Largest B searched exhaustively in auto mode [default: 8].
    #[arg(long, value_name = "B", value_parser = bits_arg)]
    pub exhaustive_max_bits: Option<String>,
    /// Memory guard for materialized codebooks [default: 26].
    #[arg(long, value_name = "B", value_parser = bits_arg)]
    pub max_bits: Option<String>,
    /// Use one correlation matrix for all users and trials [default: off].
    #[arg(long)]
    pub shared_correlation: bool,
    /// Check the per-sample interference factorization on every trial [default: off].
    #[arg(long)]
    pub check_interference: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SuiteArgs {
    /// Master seed [default: 1].
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    pub antennas: u64,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    pub rank: u64,
    #[arg(long, default_value = "equal", value_parser = profile_arg)]
    pub profile: String,
    #[arg(long, default_value_t = 8)]
    pub bits: u32,
    /// statistics, rvq or eigen.
    #[arg(long, default_value = "statistics", value_parser = demo_scheme_arg)]
    pub scheme: String,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Memory guard for the materialized codebook.
    #[arg(long, default_value_t = crate::codebook::DEFAULT_MAX_BITS)]
    pub max_bits: u32,
    /// Also write the codebook in binary form to this path.
    #[arg(long, value_name = "PATH")]
    pub dump_codebook: Option<PathBuf>,
    /// Output file [default: standard output].
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

fn positive_int(s: &str) -> std::result::Result<String, String> {
    match s.trim().parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(_) => Ok(s.trim().to_string()),
        Err(e) => Err(e.to_string()),
    }
}

fn bits_arg(s: &str) -> std::result::Result<String, String> {
    s.trim().parse::<u32>().map(|_| s.trim().to_string()).map_err(|e| e.to_string())
}

fn seed_arg(s: &str) -> std::result::Result<String, String> {
    s.trim().parse::<u64>().map(|_| s.trim().to_string()).map_err(|e| e.to_string())
}

fn positive_real(s: &str) -> std::result::Result<String, String> {
    match s.trim().parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(s.trim().to_string()),
        Ok(_) => Err("must be a positive number".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn checked<T: FromStr<Err = Error>>(s: &str) -> std::result::Result<String, String> {
    s.parse::<T>().map(|_| s.trim().to_string()).map_err(|e| e.to_string())
}

fn profile_arg(s: &str) -> std::result::Result<String, String> {
    s.parse::<SingularValueProfile>()
        .map(|_| s.trim().to_string())
        .map_err(|e| e.to_string())
}

fn bit_rule_arg(s: &str) -> std::result::Result<String, String> {
    checked::<BitRule>(s)
}

fn quantizer_arg(s: &str) -> std::result::Result<String, String> {
    checked::<QuantizerMode>(s)
}

fn schemes_arg(s: &str) -> std::result::Result<String, String> {
    parse_schemes(s).map(|_| s.trim().to_string()).map_err(|e| e.to_string())
}

fn demo_scheme_arg(s: &str) -> std::result::Result<String, String> {
    match s.parse::<Scheme>() {
        Ok(Scheme::Ideal) => Err("ideal CSIT has no codebook".into()),
        Ok(_) => Ok(s.trim().to_string()),
        Err(e) => Err(e.to_string()),
    }
}

fn snr_arg(s: &str) -> std::result::Result<String, String> {
    parse_snr_range(s).map(|_| s.trim().to_string()).map_err(|e| e.to_string())
}

fn ranks_arg(s: &str) -> std::result::Result<String, String> {
    parse_ranks(s).map(|_| s.trim().to_string()).map_err(|e| e.to_string())
}

const MAX_GRID_POINTS: usize = 100_000;

/// Parses `start:stop:step` (stop included when reachable up to rounding),
/// a single value, or a comma-separated list.
pub fn parse_snr_range(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    let bad = |detail: &str| Error::Usage(format!("invalid SNR grid '{s}': {detail}"));
    let number = |t: &str| {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| bad("not a finite number"))
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.len() {
        1 => s.split(',').map(number).collect(),
        3 => {
            let (start, stop, step) = (number(parts[0])?, number(parts[1])?, number(parts[2])?);
            if step <= 0.0 {
                return Err(bad("step must be positive"));
            }
            if stop < start {
                return Err(bad("stop is below start"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            if count > MAX_GRID_POINTS {
                return Err(bad("too many points"));
            }
            Ok((0..count).map(|i| start + i as f64 * step).collect())
        }
        _ => Err(bad("expected start:stop:step")),
    }
}

pub fn parse_schemes(s: &str) -> Result<Vec<Scheme>> {
    let mut schemes = Vec::new();
    for item in s.split(',') {
        let scheme: Scheme = item.parse()?;
        if !schemes.contains(&scheme) {
            schemes.push(scheme);
        }
    }
    Ok(schemes)
}

pub fn parse_ranks(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|r| match r.trim().parse::<usize>() {
            Ok(v) if v >= 1 => Ok(v),
            _ => Err(Error::Usage(format!("invalid rank '{}' in '{s}'", r.trim()))),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubcommandKind {
    RateCurve,
    RequiredBits,
    BoundSuite,
    QuantizeDemo,
}

/// A parsed command line.
#[derive(Debug)]
pub struct CliInvocation {
    pub subcommand: SubcommandKind,
    pub config_path: Option<PathBuf>,
    /// Settings given as flags, keyed by flag name.
    pub overrides: BTreeMap<String, String>,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
    command: Command,
}

impl From<Cli> for CliInvocation {
    fn from(cli: Cli) -> Self {
        let (subcommand, output) = match &cli.command {
            Command::RateCurve(a) => (SubcommandKind::RateCurve, Some(&a.output)),
            Command::RequiredBits(a) => (SubcommandKind::RequiredBits, Some(&a.output)),
            Command::BoundSuite(a) => (SubcommandKind::BoundSuite, Some(&a.output)),
            Command::QuantizeDemo(_) => (SubcommandKind::QuantizeDemo, None),
        };
        let mut overrides = BTreeMap::new();
        if let Command::RateCurve(a) | Command::RequiredBits(a) = &cli.command {
            let fields = [
                ("antennas", &a.antennas),
                ("users", &a.users),
                ("rank", &a.rank),
                ("profile", &a.profile),
                ("snr", &a.snr),
                ("bits", &a.bits),
                ("rvq-bits", &a.rvq_bits),
                ("schemes", &a.schemes),
                ("trials", &a.trials),
                ("seed", &a.seed),
                ("gap-target", &a.gap_target),
                ("ranks", &a.ranks),
                ("quantizer", &a.quantizer),
                ("exhaustive-max-bits", &a.exhaustive_max_bits),
                ("max-bits", &a.max_bits),
            ];
            for (key, value) in fields {
                if let Some(v) = value {
                    overrides.insert(key.to_string(), v.clone());
                }
            }
            if a.shared_correlation {
                overrides.insert("shared-correlation".into(), "true".into());
            }
            if a.check_interference {
                overrides.insert("check-interference".into(), "true".into());
            }
        }
        let (config_path, output_path, format, threads) = match (output, &cli.command) {
            (Some(o), _) => (o.config.clone(), o.out.clone(), o.format, o.threads),
            (None, Command::QuantizeDemo(d)) => (None, d.out.clone(), Format::Json, None),
            (None, _) => (None, None, Format::Csv, None),
        };
        Self {
            subcommand,
            config_path,
            overrides,
            output_path,
            format,
            threads,
            command: cli.command,
        }
    }
}

/// Parses an argument vector (including the program name).
pub fn parse_cli<I, T>(argv: I) -> Result<CliInvocation>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Cli::try_parse_from(argv)
        .map(CliInvocation::from)
        .map_err(|e| Error::Usage(e.to_string()))
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("config line {}: expected key = value", n + 1)))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

/// Experiment settings after defaults, config file and flags are merged.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub config: ExperimentConfig,
    pub ranks: Vec<usize>,
}

impl RunSettings {
    pub fn defaults(subcommand: SubcommandKind) -> Self {
        let mut config = ExperimentConfig::default();
        if subcommand == SubcommandKind::RequiredBits {
            config.snr_grid_db = vec![6.0];
            config.gap_target_bps = Some(0.5);
        }
        Self {
            config,
            ranks: vec![2, 3, 4],
        }
    }

    /// Applies one `key = value` setting.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let cfg = &mut self.config;
        let usage = |e: String| Error::Usage(format!("{key} = {value}: {e}"));
        fn num<T: FromStr>(value: &str) -> std::result::Result<T, String>
        where
            T::Err: std::fmt::Display,
        {
            value.trim().parse::<T>().map_err(|e| e.to_string())
        }
        fn flag(value: &str) -> std::result::Result<bool, String> {
            match value.trim() {
                "true" | "yes" | "on" | "1" => Ok(true),
                "false" | "no" | "off" | "0" => Ok(false),
                other => Err(format!("expected true or false, got '{other}'")),
            }
        }
        match key {
            "antennas" => cfg.antennas = num(value).map_err(usage)?,
            "users" => cfg.users = num(value).map_err(usage)?,
            "rank" => cfg.rank = num(value).map_err(usage)?,
            "profile" => cfg.profile = value.parse().map_err(|e: Error| usage(e.to_string()))?,
            "snr" => cfg.snr_grid_db = parse_snr_range(value).map_err(|e| usage(e.to_string()))?,
            "bits" => cfg.bit_rule = value.parse().map_err(|e: Error| usage(e.to_string()))?,
            "rvq-bits" => cfg.rvq_bit_rule = Some(value.parse().map_err(|e: Error| usage(e.to_string()))?),
            "schemes" => cfg.schemes = parse_schemes(value).map_err(|e| usage(e.to_string()))?,
            "trials" => cfg.trials = num(value).map_err(usage)?,
            "seed" => cfg.seed = num(value).map_err(usage)?,
            "gap-target" => cfg.gap_target_bps = Some(num(value).map_err(usage)?),
            "ranks" => self.ranks = parse_ranks(value).map_err(|e| usage(e.to_string()))?,
            "quantizer" => cfg.quantizer = value.parse().map_err(|e: Error| usage(e.to_string()))?,
            "exhaustive-max-bits" => cfg.exhaustive_max_bits = num(value).map_err(usage)?,
            "max-bits" => cfg.max_bits = num(value).map_err(usage)?,
            "shared-correlation" => cfg.shared_correlation = flag(value).map_err(usage)?,
            "check-interference" => cfg.check_interference = flag(value).map_err(usage)?,
            "threads" => cfg.threads = num(value).map_err(usage)?,
            other => return Err(Error::Usage(format!("unknown setting '{other}'"))),
        }
        Ok(())
    }
}

fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Usage(format!("{THREADS_ENV} must be a non-negative integer, got '{v}'"))),
        Err(_) => Ok(None),
    }
}

/// Merges defaults, the config file and flag overrides, then validates.
pub fn resolve_settings(inv: &CliInvocation) -> Result<RunSettings> {
    let mut settings = RunSettings::defaults(inv.subcommand);
    if let Some(path) = &inv.config_path {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        for (key, value) in parse_config_text(&text)? {
            settings.apply(&key, &value)?;
        }
    }
    for (key, value) in &inv.overrides {
        settings.apply(key, value)?;
    }
    if let Some(threads) = inv.threads {
        settings.config.threads = threads;
    } else if let Some(threads) = threads_from_env()? {
        settings.config.threads = threads;
    }
    settings.config.validate().map_err(|e| match e {
        Error::InvalidArgument(msg) => Error::Usage(msg),
        other => other,
    })?;
    Ok(settings)
}

/// Formats with six significant digits, `%g` style.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exponent) = sci.split_once('e').expect("scientific format");
    let exponent: i32 = exponent.parse().expect("exponent");
    if (-4..6).contains(&exponent) {
        let decimals = (5 - exponent) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exponent}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

pub const SWEEP_HEADER: [&str; 9] = [
    "snr_db",
    "scheme",
    "bits",
    "mean_rate",
    "rate_stderr",
    "mean_quant_error",
    "gap_vs_ideal",
    "gap_bound",
    "discarded",
];

/// One CSV row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub scheme: Scheme,
    pub bits: u32,
    pub mean_rate: f64,
    pub rate_stderr: f64,
    pub mean_quant_error: Option<f64>,
    pub gap_vs_ideal: Option<f64>,
    pub gap_bound: Option<f64>,
    pub discarded: usize,
}

impl From<&SweepRecord> for SweepRow {
    fn from(r: &SweepRecord) -> Self {
        Self {
            snr_db: r.snr_db,
            scheme: r.scheme,
            bits: r.bits,
            mean_rate: r.mean_rate,
            rate_stderr: r.rate_stderr,
            mean_quant_error: r.mean_quant_error,
            gap_vs_ideal: r.gap_vs_ideal,
            gap_bound: r.gap_bound,
            discarded: r.discarded,
        }
    }
}

fn optional(x: Option<f64>) -> String {
    x.map(format_sig6).unwrap_or_default()
}

fn provenance_line(hash: &str, seed: u64, extra: &[(&str, String)]) -> String {
    let mut line = format!("# config-hash={hash}, seed={seed}, code-version={}", env!("CARGO_PKG_VERSION"));
    for (k, v) in extra {
        let _ = write!(line, ", {k}={v}");
    }
    line.push('\n');
    line
}

fn csv_error(e: csv::Error) -> Error {
    Error::Numeric(format!("CSV encoding failed: {e}"))
}

fn csv_body<F>(header: &[&str], rows: usize, mut row: F) -> Result<String>
where
    F: FnMut(usize) -> Vec<String>,
{
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header).map_err(csv_error)?;
    for i in 0..rows {
        writer.write_record(row(i)).map_err(csv_error)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Numeric(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

/// Rows sorted by `(snr_db, scheme name)`, preceded by the provenance line.
pub fn render_sweep_rows(hash: &str, seed: u64, rows: &[SweepRow]) -> Result<String> {
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| {
        a.snr_db
            .total_cmp(&b.snr_db)
            .then_with(|| a.scheme.name().cmp(b.scheme.name()))
    });
    let body = csv_body(&SWEEP_HEADER, rows.len(), |i| {
        let r = &rows[i];
        vec![
            format_sig6(r.snr_db),
            r.scheme.to_string(),
            r.bits.to_string(),
            format_sig6(r.mean_rate),
            format_sig6(r.rate_stderr),
            optional(r.mean_quant_error),
            optional(r.gap_vs_ideal),
            optional(r.gap_bound),
            r.discarded.to_string(),
        ]
    })?;
    Ok(provenance_line(hash, seed, &[]) + &body)
}

pub fn render_sweep_csv(result: &SweepResult) -> Result<String> {
    let rows: Vec<SweepRow> = result.records.iter().map(SweepRow::from).collect();
    render_sweep_rows(&result.provenance.config_hash, result.provenance.seed, &rows)
}

/// Parses sweep CSV text. Returns the provenance comment (if any) and rows.
pub fn parse_sweep_csv(text: &str) -> Result<(Option<String>, Vec<SweepRow>)> {
    let provenance = text
        .lines()
        .find(|l| l.starts_with('#'))
        .map(|l| l.trim_start_matches('#').trim().to_string());
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let header = reader.headers().map_err(csv_error)?.clone();
    if header.iter().collect::<Vec<_>>() != SWEEP_HEADER {
        return Err(Error::Usage(format!("unexpected sweep header: {:?}", header)));
    }
    let bad = |field: &str, value: &str| Error::Usage(format!("invalid {field} '{value}'"));
    let real = |field: &str, value: &str| value.parse::<f64>().map_err(|_| bad(field, value));
    let opt = |field: &str, value: &str| {
        if value.is_empty() {
            Ok(None)
        } else {
            real(field, value).map(Some)
        }
    };
    let mut rows = Vec::new();
    for record in reader.records() {
        let r = record.map_err(csv_error)?;
        let f = |i: usize| r.get(i).unwrap_or("");
        rows.push(SweepRow {
            snr_db: real("snr_db", f(0))?,
            scheme: f(1).parse()?,
            bits: f(2).parse().map_err(|_| bad("bits", f(2)))?,
            mean_rate: real("mean_rate", f(3))?,
            rate_stderr: real("rate_stderr", f(4))?,
            mean_quant_error: opt("mean_quant_error", f(5))?,
            gap_vs_ideal: opt("gap_vs_ideal", f(6))?,
            gap_bound: opt("gap_bound", f(7))?,
            discarded: f(8).parse().map_err(|_| bad("discarded", f(8)))?,
        });
    }
    Ok((provenance, rows))
}

pub const REQUIRED_BITS_HEADER: [&str; 7] = [
    "rank",
    "required_bits",
    "measured_gap",
    "gap_stderr",
    "bound_bits",
    "reachable",
    "note",
];

pub fn render_required_bits_csv(result: &RequiredBitsResult) -> Result<String> {
    let body = csv_body(&REQUIRED_BITS_HEADER, result.records.len(), |i| {
        let r = &result.records[i];
        vec![
            r.rank.to_string(),
            r.required_bits.map(|b| b.to_string()).unwrap_or_default(),
            optional(r.measured_gap),
            optional(r.gap_stderr),
            optional(r.bound_bits),
            r.reachable.to_string(),
            r.note.clone().unwrap_or_default(),
        ]
    })?;
    let extra = [
        ("snr_db", format_sig6(result.snr_db)),
        ("gap_target_bps", format_sig6(result.gap_target_bps)),
    ];
    Ok(provenance_line(&result.provenance.config_hash, result.provenance.seed, &extra) + &body)
}

pub fn render_bound_reports_csv(seed: u64, reports: &[BoundReport]) -> Result<String> {
    let header = ["name", "inputs", "bound", "empirical", "slack", "satisfied"];
    let body = csv_body(&header, reports.len(), |i| {
        let r = &reports[i];
        let inputs: Vec<String> = r.inputs.iter().map(|(k, v)| format!("{k}={}", format_sig6(*v))).collect();
        vec![
            r.name.clone(),
            inputs.join(";"),
            format_sig6(r.bound),
            optional(r.empirical),
            format_sig6(r.slack),
            r.satisfied.to_string(),
        ]
    })?;
    Ok(format!("# seed={seed}, code-version={}\n", env!("CARGO_PKG_VERSION")) + &body)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Error::Numeric(format!("JSON encoding failed: {e}")))
}

/// Writes `text` to `path`, or to standard output when `path` is `None`.
pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

pub fn write_sweep(result: &SweepResult, format: Format, path: Option<&Path>) -> Result<()> {
    let text = match format {
        Format::Csv => render_sweep_csv(result)?,
        Format::Json => to_json(result)?,
    };
    emit(&text, path)
}

#[derive(Serialize)]
struct DemoOutput {
    scheme: Scheme,
    bits: u32,
    index: usize,
    squared_cosine: f64,
    quantization_error: f64,
    error_bound: f64,
    channel_norm_sq: f64,
    correlation: crate::channel::CorrelationRecord,
}

fn quantize_demo(args: &DemoArgs) -> Result<()> {
    let profile: SingularValueProfile = args.profile.parse()?;
    let scheme: Scheme = args.scheme.parse()?;
    let (antennas, rank) = (args.antennas as usize, args.rank as usize);
    let model = make_correlation(antennas, rank, &profile, rng::derive_seed(args.seed, 0, Role::Eigenbasis.tag(0)))?;
    let h = draw_channel(&model, &mut rng::stream(args.seed, 0, Role::Channel.tag(0)));
    let codebook_seed = rng::derive_seed(args.seed, 0, Role::StatisticsCodebook.tag(0));
    let codebook = match scheme {
        Scheme::Rvq => build_rvq_guarded(antennas, args.bits, codebook_seed, args.max_bits)?,
        Scheme::EigenBaseline => build_eigen_baseline(&model),
        _ => build_statistics_guarded(&model, args.bits, codebook_seed, args.max_bits)?,
    };
    let outcome = quantize(&h, &codebook)?;
    if let Some(path) = &args.dump_codebook {
        std::fs::write(path, codebook.to_bytes()).map_err(|e| Error::io(path, e))?;
    }
    let effective_rank = match codebook.kind() {
        CodebookKind::Rvq => antennas,
        _ => rank,
    };
    let output = DemoOutput {
        scheme,
        bits: codebook.bits(),
        index: outcome.index,
        squared_cosine: outcome.squared_cosine,
        quantization_error: outcome.quantization_error,
        error_bound: quant_error_bound(codebook.bits(), effective_rank as u32)?,
        channel_norm_sq: h.norm_sq,
        correlation: model.record(),
    };
    emit(&to_json(&output)?, args.out.as_deref())
}

/// Executes a parsed invocation.
pub fn run(inv: CliInvocation) -> Result<()> {
    match &inv.command {
        Command::RateCurve(_) => {
            let settings = resolve_settings(&inv)?;
            let result = run_rate_curve(&settings.config)?;
            write_sweep(&result, inv.format, inv.output_path.as_deref())
        }
        Command::RequiredBits(_) => {
            let settings = resolve_settings(&inv)?;
            let result = find_required_bits(&settings.config, &settings.ranks)?;
            let text = match inv.format {
                Format::Csv => render_required_bits_csv(&result)?,
                Format::Json => to_json(&result)?,
            };
            emit(&text, inv.output_path.as_deref())
        }
        Command::BoundSuite(args) => {
            let threads = match inv.threads {
                Some(t) => t,
                None => threads_from_env()?.unwrap_or(0),
            };
            let reports = run_bound_suite(args.seed, &BoundLattice::full(), threads)?;
            let satisfied = reports.iter().filter(|r| r.satisfied).count();
            log::info!("{satisfied}/{} bound checks satisfied", reports.len());
            for r in reports.iter().filter(|r| !r.satisfied) {
                log::warn!("unsatisfied: {} {:?}", r.name, r.inputs);
            }
            let text = match inv.format {
                Format::Csv => render_bound_reports_csv(args.seed, &reports)?,
                Format::Json => to_json(&reports)?,
            };
            emit(&text, inv.output_path.as_deref())
        }
        Command::QuantizeDemo(args) => quantize_demo(args),
    }
}

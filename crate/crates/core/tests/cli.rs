//! Command-line parsing, config layering, output files and exit codes.

use std::process::Command;

use mimofb::bounds::rate_gap_bound;
use mimofb::channel::PowerCalibration;
use mimofb::cli::{parse_cli, parse_sweep_csv, resolve_settings, write_sweep, Format, SubcommandKind};
use mimofb::experiments::{run_rate_curve, BitRule, ExperimentConfig, Provenance, Scheme, SweepResult};
use mimofb::Error;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mimofb"))
}

#[test]
fn reference_invocation_matches_defaults() {
    let inv = parse_cli([
        "mimofb", "rate-curve", "--antennas", "64", "--users", "10", "--rank", "4", "--snr", "0:18:3", "--trials",
        "500", "--seed", "42", "--schemes", "ideal,statistics,rvq,eigen", "--out", "rates.csv",
    ])
    .unwrap();
    assert_eq!(inv.subcommand, SubcommandKind::RateCurve);
    assert_eq!(inv.output_path.as_deref(), Some(std::path::Path::new("rates.csv")));
    let settings = resolve_settings(&inv).unwrap();
    assert_eq!(settings.config, ExperimentConfig::default());
}

#[test]
fn single_snr_point_and_bad_rank() {
    let inv = parse_cli(["mimofb", "rate-curve", "--snr", "6"]).unwrap();
    assert_eq!(resolve_settings(&inv).unwrap().config.snr_grid_db, vec![6.0]);
    let inv = parse_cli(["mimofb", "rate-curve", "--snr", "-3"]).unwrap();
    assert_eq!(resolve_settings(&inv).unwrap().config.snr_grid_db, vec![-3.0]);
    assert!(matches!(parse_cli(["mimofb", "rate-curve", "--rank", "0"]), Err(Error::Usage(_))));
    assert!(matches!(parse_cli(["mimofb", "rate-curve", "--bogus"]), Err(Error::Usage(_))));
    assert!(matches!(parse_cli(["mimofb", "rate-curve", "--trials", "x"]), Err(Error::Usage(_))));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "antennas = 16\nusers = 4\ntrials = 9\nbits = 5\n").unwrap();
    let inv = parse_cli(["mimofb", "rate-curve", "--config", path.to_str().unwrap(), "--trials", "3"]).unwrap();
    let cfg = resolve_settings(&inv).unwrap().config;
    assert_eq!((cfg.antennas, cfg.users, cfg.trials), (16, 4, 3));
    assert_eq!(cfg.bit_rule, BitRule::Fixed { bits: 5 });
}

#[test]
fn required_bits_defaults() {
    let inv = parse_cli(["mimofb", "required-bits"]).unwrap();
    let settings = resolve_settings(&inv).unwrap();
    assert_eq!(settings.config.snr_grid_db, vec![6.0]);
    assert_eq!(settings.config.gap_target_bps, Some(0.5));
    assert_eq!(settings.ranks, vec![2, 3, 4]);
}

#[test]
fn empty_result_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    let cfg = ExperimentConfig::default();
    let result = SweepResult {
        provenance: Provenance {
            config_hash: cfg.hash(),
            code_version: "0".into(),
            seed: cfg.seed,
        },
        config: cfg,
        records: Vec::new(),
    };
    write_sweep(&result, Format::Csv, Some(&path)).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("# config-hash="));
    assert_eq!(
        lines[1],
        "snr_db,scheme,bits,mean_rate,rate_stderr,mean_quant_error,gap_vs_ideal,gap_bound,discarded"
    );
    let err = write_sweep(&result, Format::Csv, Some(&dir.path().join("missing/x.csv"))).unwrap_err();
    assert!(err.to_string().contains("missing"));
}

#[test]
fn gap_bound_column_matches_closed_form() {
    let cfg = ExperimentConfig {
        antennas: 8,
        users: 3,
        rank: 2,
        snr_grid_db: vec![0.0, 6.0, 12.0],
        trials: 10,
        ..ExperimentConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    write_sweep(&run_rate_curve(&cfg).unwrap(), Format::Csv, Some(&path)).unwrap();
    let (_, rows) = parse_sweep_csv(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(rows.len(), 12);
    for row in rows.iter().filter(|r| r.scheme == Scheme::Statistics) {
        let cal = PowerCalibration::new(row.snr_db, cfg.users, cfg.antennas as f64).unwrap();
        let expected = rate_gap_bound(&cal, row.bits, cfg.rank as u32).unwrap();
        let got = row.gap_bound.unwrap();
        assert!((got - expected).abs() <= 5e-6 * expected, "{got} vs {expected}");
    }
}

#[test]
fn binary_exit_codes() {
    let help = bin().args(["rate-curve", "--help"]).output().unwrap();
    assert_eq!(help.status.code(), Some(0));
    let text = String::from_utf8_lossy(&help.stdout);
    for flag in ["--antennas", "--users", "--rank", "--snr", "--trials", "--seed", "--schemes", "--bits"] {
        assert!(text.contains(flag), "help lacks {flag}");
    }
    assert!(text.contains("[default: 64]") && text.contains("[default: 500]"));

    let usage = bin().args(["rate-curve", "--rank", "0"]).output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
    let mismatch = bin().args(["rate-curve", "--users", "5", "--antennas", "4"]).output().unwrap();
    assert_eq!(mismatch.status.code(), Some(2));

    let guard = bin()
        .args(["quantize-demo", "--bits", "27", "--antennas", "4", "--rank", "2"])
        .output()
        .unwrap();
    assert_eq!(guard.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&guard.stderr).contains("B=27"));
}

#[test]
fn binary_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let path = dir.path().join(name);
        let status = bin()
            .args([
                "rate-curve", "--antennas", "8", "--users", "3", "--rank", "2", "--snr", "0:10:5", "--trials", "15",
                "--out",
            ])
            .arg(&path)
            .env("MIMO_FB_THREADS", threads)
            .env("RUST_LOG", "warn")
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(path).unwrap()
    };
    assert_eq!(run("a.csv", "1"), run("b.csv", "3"));
}

#[test]
fn quantize_demo_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("cb.bin");
    let out = bin()
        .args(["quantize-demo", "--antennas", "8", "--rank", "2", "--bits", "4", "--dump-codebook"])
        .arg(&dump)
        .output()
        .unwrap();
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let x = json["quantization_error"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&x));
    assert_eq!(json["correlation"]["M"], 8);
    let book = mimofb::codebook::Codebook::from_bytes(&std::fs::read(dump).unwrap()).unwrap();
    assert_eq!(book.len(), 16);
}

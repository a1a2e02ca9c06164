//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use mimofb::bounds::{self, BoundReport};
use mimofb::channel::{draw_channel, make_correlation, SingularValueProfile};
use mimofb::cli::render_sweep_csv;
use mimofb::codebook::{build_statistics, quantize};
use mimofb::experiments::{
    find_required_bits, run_bound_suite, run_rate_curve, BoundCheck, BoundLattice, ExperimentConfig, Scheme,
};
use mimofb::linalg::CMatrix;
use mimofb::precoding::{interference_witness, zf_precoder, PrecoderSource};
use mimofb::rng::{self, Role};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn failed_reports(reports: &[BoundReport]) -> Vec<String> {
    reports
        .iter()
        .filter(|r| !r.satisfied)
        .map(|r| format!("{} {:?} empirical={:?} bound={} slack={}", r.name, r.inputs, r.empirical, r.bound, r.slack))
        .collect()
}

fn suite(checks: Vec<BoundCheck>) -> Vec<BoundReport> {
    run_bound_suite(1, &BoundLattice { checks }, 0).expect("bound suite runs")
}

/// Criteria 1 and 2 share one run at the reference configuration.
fn rate_curve_criteria() -> (Outcome, Outcome) {
    let cfg = ExperimentConfig {
        schemes: vec![Scheme::Ideal, Scheme::Statistics, Scheme::Rvq],
        ..ExperimentConfig::default()
    };
    let result = run_rate_curve(&cfg).expect("rate curve runs");
    let gap = |snr: f64, scheme: Scheme| {
        result
            .record(snr, scheme)
            .and_then(|r| r.gap_vs_ideal)
            .expect("gap recorded")
    };
    let stats: Vec<f64> = cfg.snr_grid_db.iter().map(|s| gap(*s, Scheme::Statistics)).collect();
    let max = stats.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = stats.iter().cloned().fold(f64::INFINITY, f64::min);
    let c1 = outcome(
        max - min <= 0.5 && max <= 2.42,
        format!(
            "statistics gap per SNR {:?}; variation {:.4} (<= 0.5), max {:.4} (<= 2.42)",
            stats.iter().map(|g| format!("{g:.4}")).collect::<Vec<_>>(),
            max - min,
            max
        ),
    );
    let (low, high) = (gap(3.0, Scheme::Rvq), gap(18.0, Scheme::Rvq));
    let c2 = outcome(
        high > low,
        format!("rvq gap {low:.4} at 3 dB, {high:.4} at 18 dB"),
    );
    (c1, c2)
}

fn criterion3() -> Outcome {
    let mut checks = Vec::new();
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
    let reports = suite(checks);
    let worst = reports
        .iter()
        .map(|r| r.empirical.unwrap() - r.bound - r.slack)
        .fold(f64::NEG_INFINITY, f64::max);
    let failures = failed_reports(&reports);
    outcome(
        failures.is_empty(),
        format!("{} (r,B) points, worst mean - bound - 3 stderr = {worst:.3e} {failures:?}", reports.len()),
    )
}

fn criterion4() -> Outcome {
    let report = bounds::check_sphere_cdf(4, 100_000, 4, 0.006).expect("sphere check runs");
    outcome(
        report.satisfied,
        format!("KS distance {:.5} (< 0.006)", report.empirical.unwrap()),
    )
}

fn criterion5() -> Outcome {
    let n = 100_000;
    let mut checks: Vec<BoundCheck> = BoundLattice::random_gammas(20, &[2, 3, 4, 6])
        .into_iter()
        .map(|gamma| BoundCheck::Dominance { gamma, n })
        .collect();
    checks.push(BoundCheck::ExtremeCase {
        r: 4,
        epsilon: 1e-6,
        n,
        max_distance: 0.02,
    });
    let reports = suite(checks);
    let worst = reports
        .iter()
        .filter(|r| r.name == "ellipse-dominance")
        .map(|r| r.empirical.unwrap().max(r.diagnostics["paired_excess"]))
        .fold(f64::NEG_INFINITY, f64::max);
    let extreme = reports.last().unwrap().empirical.unwrap();
    let failures = failed_reports(&reports);
    outcome(
        failures.is_empty(),
        format!(
            "20 stretchings, worst CDF excess {worst:.5} (slack {:.5}); extreme-case KS {extreme:.5} (< 0.02) {failures:?}",
            bounds::dkw_slack(n)
        ),
    )
}

fn criterion6() -> Outcome {
    let mut worst_gap = 0.0f64;
    let mut failures = Vec::new();
    for bits in 0..=20 {
        for r in 2..=8 {
            let report = bounds::beta_chain_check(bits, r).expect("beta chain runs");
            worst_gap = worst_gap.max(report.diagnostics["chain_gap"]);
            if !report.satisfied {
                failures.push((bits, r));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("147 (B,r) pairs, worst |integral - 2^B beta| = {worst_gap:.2e} (< 1e-8) {failures:?}"),
    )
}

fn criterion7() -> Outcome {
    let (m, k, r, bits, trials) = (64, 10, 4, 6, 1_000u64);
    let seed = 7;
    let mut draws = 0usize;
    let mut worst_bound = f64::NEG_INFINITY;
    let mut worst_factor = 0.0f64;
    let mut error = None;
    for trial in 0..trials {
        let mut channels = Vec::new();
        let mut outcomes = Vec::new();
        for user in 0..k as u64 {
            let model = make_correlation(
                m,
                r,
                &SingularValueProfile::Equal,
                rng::derive_seed(seed, trial, Role::Eigenbasis.tag(user)),
            )
            .unwrap();
            let h = draw_channel(&model, &mut rng::stream(seed, trial, Role::Channel.tag(user)));
            let cb = build_statistics(&model, bits, rng::derive_seed(seed, trial, Role::StatisticsCodebook.tag(user)))
                .unwrap();
            outcomes.push(quantize(&h, &cb).unwrap());
            channels.push(h);
        }
        let feedback: Vec<_> = outcomes.iter().map(|o| o.feedback.clone()).collect();
        let precoder = match zf_precoder(&CMatrix::from_columns(&feedback), PrecoderSource::Feedback) {
            Ok(p) => p,
            Err(_) => continue,
        };
        for user in 0..k {
            let (h, o) = (&channels[user], &outcomes[user]);
            match interference_witness(h, o, &precoder, user) {
                Ok(terms) => {
                    draws += 1;
                    let scale = h.norm_sq * o.quantization_error;
                    for t in terms {
                        worst_bound = worst_bound.max(t.cross_power - scale);
                        let factor = (t.cross_power - t.error_scale * t.residual_alignment).abs();
                        worst_factor = worst_factor.max(factor / h.norm_sq.max(1.0));
                    }
                }
                Err(e) => error = Some(e.to_string()),
            }
        }
    }
    outcome(
        error.is_none() && draws >= 10_000 && worst_bound <= 1e-9 && worst_factor <= 1e-9,
        format!(
            "{draws} user draws; max |h^H v_i|^2 - ||h||^2 X = {worst_bound:.2e}; max factorization defect {worst_factor:.2e}{}",
            error.map(|e| format!("; {e}")).unwrap_or_default()
        ),
    )
}

fn criterion8() -> Outcome {
    let cfg = ExperimentConfig {
        snr_grid_db: vec![6.0],
        gap_target_bps: Some(0.5),
        ..ExperimentConfig::default()
    };
    let result = find_required_bits(&cfg, &[2, 3, 4]).expect("required-bits search runs");
    let bits: Vec<Option<u32>> = result.records.iter().map(|r| r.required_bits).collect();
    let fit = result.fit;
    let passed = bits.iter().all(Option::is_some) && fit.is_some_and(|f| f.slope > 0.0 && f.r_squared >= 0.9);
    outcome(
        passed,
        format!(
            "required B for r=2,3,4: {bits:?}; fit slope {:.3}, R^2 {:.3} (>= 0.9)",
            fit.map_or(f64::NAN, |f| f.slope),
            fit.map_or(f64::NAN, |f| f.r_squared)
        ),
    )
}

fn criterion9() -> Outcome {
    let b = 0.09f64.exp2();
    let value = bounds::required_bits(6.0, 10, 4, b).unwrap();
    // Independent evaluation in natural logarithms.
    let oracle = 6.0 + 3.0 * ((9.0f64).ln() - (b - 1.0).ln()) / std::f64::consts::LN_2;
    outcome(
        (value - oracle).abs() < 1e-9 && (value - 27.4).abs() < 0.05,
        format!("required_bits(6, 10, 4, 2^0.09) = {value:.4} (oracle {oracle:.4}, expected ~27.4)"),
    )
}

fn criterion10() -> Outcome {
    let mut cfg = ExperimentConfig {
        trials: 60,
        ..ExperimentConfig::default()
    };
    let mut outputs = Vec::new();
    for threads in [1, 4, 8] {
        cfg.threads = threads;
        outputs.push(render_sweep_csv(&run_rate_curve(&cfg).unwrap()).unwrap());
    }
    let identical = outputs.windows(2).all(|w| w[0].as_bytes() == w[1].as_bytes());
    outcome(
        identical,
        format!("CSV at 1, 4, 8 workers: {} bytes each, identical={identical}", outputs[0].len()),
    )
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |id: usize, name: &str, start: Instant, o: Outcome| {
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!(
            "{status} criterion {id:>2} ({name}): {} [{:.1}s]",
            o.detail,
            start.elapsed().as_secs_f64()
        );
        all &= o.passed;
    };
    let start = Instant::now();
    let (c1, c2) = rate_curve_criteria();
    report(1, "constant gap, statistics codebook", start, c1);
    report(2, "RVQ gap grows with SNR", start, c2);
    let start = Instant::now();
    report(3, "quantization-error bound", start, criterion3());
    let start = Instant::now();
    report(4, "sphere CDF", start, criterion4());
    let start = Instant::now();
    report(5, "stretched-sphere dominance", start, criterion5());
    let start = Instant::now();
    report(6, "beta chain", start, criterion6());
    let start = Instant::now();
    report(7, "per-sample interference inequality", start, criterion7());
    let start = Instant::now();
    report(8, "linear bit scaling", start, criterion8());
    let start = Instant::now();
    report(9, "closed-form required bits", start, criterion9());
    let start = Instant::now();
    report(10, "determinism across workers", start, criterion10());
    if all {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: some criteria failed");
        ExitCode::FAILURE
    }
}

//! Acceptance suite. Each criterion prints one PASS/FAIL line; the test fails
//! if any criterion fails. Run with `cargo test -p posthoc-cli --test acceptance -- --nocapture`.

use std::process::Command;
use std::time::{Duration, Instant};

use posthoc_cli::commands::{self, CompareReport, SimulateOptions};
use posthoc_core::analytic::continuum_truncated_expected_ratio;
use posthoc_core::evidence::draw_null_p;
use posthoc_core::rng::TrialRng;
use posthoc_core::{reject, Alpha, Cell, EvidenceModel, PValue, SimulationReport, StrategySpec, Verdict};

const BIN: &str = env!("CARGO_BIN_EXE_posthoc");

struct Outcome {
    id: u32,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn posthoc(args: &[&str]) -> (i32, String) {
    let out = Command::new(BIN)
        .args(args)
        .env_remove("POSTHOC_WORKERS")
        .output()
        .expect("run posthoc binary");
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap())
}

fn simulate(strategy: &str, evidence: EvidenceModel, n: u64, seed: u64) -> SimulationReport {
    let opts = SimulateOptions {
        strategy: strategy.parse().unwrap(),
        evidence,
        n_trials: n,
        seed,
        workers: 8,
        bin_edges: None,
    };
    commands::simulate(&opts).unwrap().report
}

fn rel_digits_equal(x: f64, y: f64, digits: i32) -> bool {
    (x - y).abs() <= 10f64.powi(-digits) * y.abs().max(f64::MIN_POSITIVE)
}

/// 1. `exact two:0.005,0.05`: E r = 1.9, rates 1 and (0.05-0.005)/(1-0.005), 12 digits, < 0.1 s.
fn exact_oracle() -> Outcome {
    let start = Instant::now();
    let out = commands::exact("two:0.005,0.05").unwrap();
    let elapsed = start.elapsed();
    let er = out.report.expected_ratio.finite().unwrap();
    let r1 = out.report.rates[0].cond_rate;
    let r2 = out.report.rates[1].cond_rate;
    let expected_r2 = (0.05 - 0.005) / (1.0 - 0.005);

    let (code, stdout) = posthoc(&["exact", "two:0.005,0.05", "--format", "json"]);
    let cli: commands::ExactOutput = serde_json::from_str(&stdout).unwrap();
    let cli_er = cli.report.expected_ratio.finite().unwrap();

    let passed = rel_digits_equal(er, 1.9, 12)
        && r1 == 1.0
        && rel_digits_equal(r2, expected_r2, 12)
        && code == 0
        && rel_digits_equal(cli_er, 1.9, 12)
        && elapsed < Duration::from_millis(100);
    Outcome {
        id: 1,
        name: "exact oracle, two thresholds",
        passed,
        detail: format!("E r = {er}, rate|a1 = {r1}, rate|a2 = {r2}, {elapsed:?}"),
    }
}

/// 2. Two-threshold Monte Carlo at n = 10^6.
fn two_threshold_monte_carlo() -> Outcome {
    let start = Instant::now();
    let report = simulate("two:0.005,0.05", EvidenceModel::ExactUniform, 1_000_000, 1);
    let elapsed = start.elapsed();
    let mean = report.expected_ratio.mean;
    let low = report.rows[0].cond_rate.unwrap();
    let high = report.rows[1].cond_rate.unwrap();
    let passed = (mean - 1.9).abs() <= 0.05
        && low == 1.0
        && (high - 0.0452261).abs() <= 0.001
        && elapsed < Duration::from_secs(5);
    Outcome {
        id: 2,
        name: "Monte-Carlo agreement, two thresholds",
        passed,
        detail: format!(
            "E r = {mean:.4} ± {:.4}, rate|0.005 = {low}, rate|0.05 = {high:.6}, {elapsed:?}",
            report.expected_ratio.std_error
        ),
    }
}

/// 3 and 4. Continuum divergence signature and pointwise conditional failure.
fn continuum() -> (Outcome, Outcome) {
    let cap = Alpha::new(0.05).unwrap();
    let start = Instant::now();
    let mut within = true;
    let mut closed = Vec::new();
    let mut details = Vec::new();
    let mut interior_ok = true;
    let mut interior_bins = 0;
    for eps in [1e-2, 1e-3, 1e-4] {
        let exact = continuum_truncated_expected_ratio(cap, eps).unwrap();
        let target = 1.0 + (0.05f64 / eps).ln();
        let strategy = format!("cont:0.05,{eps}");
        let report = simulate(&strategy, EvidenceModel::ExactUniform, 10_000_000, 3);
        let est = report.expected_ratio;
        within &= (exact - target).abs() <= 1e-12 && (est.mean - exact).abs() <= 4.0 * est.std_error;
        details.push(format!("eps={eps:e}: {:.4} ± {:.4} vs {exact:.4}", est.mean, est.std_error));
        closed.push(exact);
        for row in report.rows.iter().filter(|r| r.cell.is_bin()) {
            if let Cell::Bin { lo, hi } = row.cell {
                if lo >= eps && hi <= 0.05 {
                    interior_bins += 1;
                    interior_ok &= row.cond_rate == Some(1.0);
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let log_steps = closed
        .windows(2)
        .all(|w| (w[1] - w[0] - std::f64::consts::LN_10).abs() <= 1e-12);
    let divergence = Outcome {
        id: 3,
        name: "continuum divergence signature",
        passed: within && log_steps && elapsed < Duration::from_secs(60),
        detail: format!("{}; ln10 steps: {log_steps}; {elapsed:?}", details.join(", ")),
    };
    let pointwise = Outcome {
        id: 4,
        name: "pointwise conditional failure",
        passed: interior_ok && interior_bins == 60,
        detail: format!("{interior_bins} interior bins, all with rate 1: {interior_ok}"),
    };
    (divergence, pointwise)
}

/// 5. E-value validity at delta = 0.5.
fn e_value_validity() -> Outcome {
    let report = simulate("fixed:0.05", EvidenceModel::CalibratedE { delta_design: 0.5 }, 1_000_000, 5);
    let e_mean = report.e_value_mean.unwrap().mean;
    let p_star_rate = report.overall_rejection_rate.mean;
    Outcome {
        id: 5,
        name: "e-value validity",
        passed: (e_mean - 1.0).abs() <= 0.002 && p_star_rate <= 0.051,
        detail: format!("mean e = {e_mean:.5}, P(p* <= 0.05) = {p_star_rate}"),
    }
}

/// 6. Post-hoc repair through the `compare` command.
fn post_hoc_repair() -> Outcome {
    let (code, stdout) = posthoc(&[
        "compare", "--strategy", "cont:0.05,1e-4", "--delta", "0.5", "--n", "1000000", "--format", "json",
    ]);
    let cmp: CompareReport = serde_json::from_str(&stdout).unwrap();
    let raw = cmp.raw.expected_ratio;
    let cal = cmp.calibrated.expected_ratio;
    let passed = code == 0
        && matches!(cmp.raw_verdict, Verdict::Violated { .. })
        && (raw.mean - 7.215).abs() <= 0.5
        && cmp.calibrated_verdict == Verdict::Valid
        && cal.mean <= 1.0 + 3.0 * cal.std_error;
    Outcome {
        id: 6,
        name: "post-hoc repair with e-values",
        passed,
        detail: format!(
            "raw {:.4} ± {:.4} ({:?}), p* {:.4} ± {:.4} ({:?})",
            raw.mean, raw.std_error, cmp.raw_verdict, cal.mean, cal.std_error, cmp.calibrated_verdict
        ),
    }
}

/// 7. Fixed level on raw p.
fn calibrated_control() -> Outcome {
    let report = simulate("fixed:0.05", EvidenceModel::ExactUniform, 1_000_000, 7);
    let mean = report.expected_ratio.mean;
    let d_a = report.rows[0].d_a.unwrap();
    Outcome {
        id: 7,
        name: "calibrated control",
        passed: (mean - 1.0).abs() <= 0.01 && d_a.abs() <= 0.001,
        detail: format!("E r = {mean:.5}, d_a = {d_a:.6}"),
    }
}

/// 8. Byte-identical JSON for workers = 1 and workers = 8.
fn determinism() -> Outcome {
    let mut identical = true;
    for strategy in ["two:0.005,0.05", "cont:0.05,1e-4"] {
        let run = |workers: &str| {
            posthoc(&[
                "simulate", "--strategy", strategy, "--n", "1000000", "--seed", "42", "--workers", workers,
                "--format", "json",
            ])
        };
        let (c1, one) = run("1");
        let (c8, eight) = run("8");
        identical &= c1 == 0 && c8 == 0 && !one.is_empty() && one == eight;
    }
    Outcome {
        id: 8,
        name: "determinism across worker counts",
        passed: identical,
        detail: format!("byte-identical: {identical}"),
    }
}

/// 9. Property suite.
fn properties() -> Outcome {
    let grid: Vec<f64> = (1..=10_000).map(|i| i as f64 / 10_000.0).collect();

    let levels = [0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0];
    let monotone = grid.iter().all(|&x| {
        let p = PValue::new(x).unwrap();
        let decisions: Vec<bool> = levels.iter().map(|&a| reject(p, Alpha::new(a).unwrap())).collect();
        let smaller = PValue::new(x / 2.0).unwrap();
        decisions.windows(2).all(|w| w[0] <= w[1])
            && levels
                .iter()
                .all(|&a| !reject(p, Alpha::new(a).unwrap()) || reject(smaller, Alpha::new(a).unwrap()))
    });

    let two = StrategySpec::two_threshold(0.005, 0.05).unwrap();
    let step = StrategySpec::step_greedy(&[0.005, 0.05]).unwrap();
    let equivalent = grid.iter().all(|&x| {
        let p = PValue::new(x).unwrap();
        two.select_alpha(p) == step.select_alpha(p)
    });

    let n = 1_000_000u64;
    let ps: Vec<f64> = (0..n)
        .map(|i| draw_null_p(&EvidenceModel::ExactUniform, &mut TrialRng::new(9, i)).unwrap().value())
        .collect();
    let uniform = [0.005, 0.01, 0.05, 0.1, 0.5].iter().all(|&a| {
        let frac = ps.iter().filter(|&&p| p <= a).count() as f64 / n as f64;
        (frac - a).abs() <= 4.0 * (a * (1.0 - a) / n as f64).sqrt()
    });

    let mut identity_gap = 0.0f64;
    for strategy in ["fixed:0.05", "two:0.005,0.05", "step:0.001,0.005,0.05"] {
        let report = simulate(strategy, EvidenceModel::ExactUniform, 1_000_000, 11);
        let gap = (report.expected_ratio_from_table().unwrap() - report.expected_ratio.mean).abs();
        identity_gap = identity_gap.max(gap);
    }
    let identity = identity_gap <= 1e-12;

    Outcome {
        id: 9,
        name: "property suite",
        passed: monotone && equivalent && uniform && identity,
        detail: format!(
            "monotone {monotone}, step==two {equivalent}, uniform {uniform}, table identity gap {identity_gap:e}"
        ),
    }
}

#[test]
fn acceptance_criteria() {
    let (divergence, pointwise) = continuum();
    let outcomes = vec![
        exact_oracle(),
        two_threshold_monte_carlo(),
        divergence,
        pointwise,
        e_value_validity(),
        post_hoc_repair(),
        calibrated_control(),
        determinism(),
        properties(),
    ];
    for o in &outcomes {
        println!(
            "criterion {}: {} - {} ({})",
            o.id,
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.detail
        );
    }
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

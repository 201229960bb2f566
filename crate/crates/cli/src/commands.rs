//! The four subcommands, independent of argument parsing and output format.

use posthoc_core::analytic::{
    continuum_truncated_expected_ratio, two_threshold_expected_ratio,
};
use posthoc_core::{
    closed_form, closed_form_limit, run_simulation, verify_post_hoc_validity, Alpha,
    ClosedFormReport, EvidenceModel, SimulationConfig, SimulationReport, StrategyExpr,
    StrategySpec, Verdict,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Simulations whose estimate sits further than this many standard errors
/// from the closed form fail the self-test.
pub const ORACLE_Z_LIMIT: f64 = 6.0;

pub fn parse_strategy(text: &str) -> Result<StrategyExpr, CliError> {
    text.parse::<StrategyExpr>().map_err(|e| match e {
        posthoc_core::Error::Parse { .. } => CliError::Usage(e.to_string()),
        other => CliError::Config(other),
    })
}

/// A strategy that can be simulated; rejects the `cont:<C>,0` limit.
pub fn parse_runnable_strategy(text: &str) -> Result<StrategySpec, CliError> {
    match parse_strategy(text)? {
        StrategyExpr::Spec(spec) => Ok(spec),
        StrategyExpr::ContinuumLimit { cap } => Err(CliError::Usage(format!(
            "`cont:{cap},0` is the divergent analytic limit; it can be shown with `exact` but not simulated"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactOutput {
    pub strategy: String,
    pub report: ClosedFormReport,
}

pub fn exact(strategy: &str) -> Result<ExactOutput, CliError> {
    let report = match parse_strategy(strategy)? {
        StrategyExpr::Spec(spec) => closed_form(&spec)?,
        StrategyExpr::ContinuumLimit { cap } => closed_form_limit(cap),
    };
    Ok(ExactOutput {
        strategy: strategy.to_string(),
        report,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateOptions {
    pub strategy: StrategySpec,
    pub evidence: EvidenceModel,
    pub n_trials: u64,
    pub seed: u64,
    pub workers: usize,
    pub bin_edges: Option<Vec<f64>>,
}

impl SimulateOptions {
    fn config(&self) -> SimulationConfig {
        let config = SimulationConfig::new(self.strategy.clone(), self.evidence, self.n_trials, self.seed)
            .with_workers(self.workers);
        match &self.bin_edges {
            Some(edges) => config.with_bin_edges(edges.clone()),
            None => config,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateOutput {
    pub report: SimulationReport,
    /// `|estimate - closed form|` in standard errors, when a closed form exists.
    pub oracle_z: Option<f64>,
}

impl SimulateOutput {
    pub fn oracle_failed(&self) -> bool {
        self.oracle_z.is_some_and(|z| z > ORACLE_Z_LIMIT)
    }
}

pub fn simulate(opts: &SimulateOptions) -> Result<SimulateOutput, CliError> {
    let report = run_simulation(&opts.config())?;
    Ok(SimulateOutput {
        oracle_z: report.oracle_z(),
        report,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOptions {
    pub strategy: StrategySpec,
    pub delta: f64,
    pub n_trials: u64,
    pub seed: u64,
    pub workers: usize,
    pub z_slack: f64,
    pub bin_edges: Option<Vec<f64>>,
}

/// The same strategy applied to the z-test p-value and to `min(1, 1/e)` for
/// the likelihood-ratio e-value of the same statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub z_slack: f64,
    pub raw: SimulationReport,
    pub raw_verdict: Verdict,
    pub calibrated: SimulationReport,
    pub calibrated_verdict: Verdict,
}

impl CompareReport {
    pub fn oracle_failed(&self) -> bool {
        self.raw.oracle_z().is_some_and(|z| z > ORACLE_Z_LIMIT)
    }
}

pub fn compare(opts: &CompareOptions) -> Result<CompareReport, CliError> {
    if opts.z_slack.is_nan() || opts.z_slack < 0.0 {
        return Err(CliError::Usage(format!("z-slack must be >= 0, got {}", opts.z_slack)));
    }
    // Same seed: trial i sees the same z-statistic in both arms.
    let arm = |evidence| SimulateOptions {
        strategy: opts.strategy.clone(),
        evidence,
        n_trials: opts.n_trials,
        seed: opts.seed,
        workers: opts.workers,
        bin_edges: opts.bin_edges.clone(),
    };
    let raw = simulate(&arm(EvidenceModel::GaussianZ { delta_design: opts.delta }))?.report;
    let calibrated = simulate(&arm(EvidenceModel::CalibratedE { delta_design: opts.delta }))?.report;
    Ok(CompareReport {
        z_slack: opts.z_slack,
        raw_verdict: verify_post_hoc_validity(&raw, opts.z_slack),
        calibrated_verdict: verify_post_hoc_validity(&calibrated, opts.z_slack),
        raw,
        calibrated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Truncation floor of a `cont` strategy.
    Eps,
    /// Lower threshold of a `two` strategy.
    A1,
    /// Design shift of the likelihood-ratio e-value.
    Delta,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Eps => "eps",
            SweepAxis::A1 => "a1",
            SweepAxis::Delta => "delta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridScale {
    Linear,
    Geometric,
}

/// `points` values from `from` to `to`, both included.
pub fn grid(from: f64, to: f64, points: usize, scale: GridScale) -> Result<Vec<f64>, CliError> {
    if points < 2 {
        return Err(CliError::Usage(format!("a grid needs at least 2 points, got {points}")));
    }
    let last = (points - 1) as f64;
    let values = match scale {
        GridScale::Linear => (0..points)
            .map(|k| from + (to - from) * k as f64 / last)
            .collect(),
        GridScale::Geometric => {
            if !(from > 0.0 && to > 0.0) {
                return Err(CliError::Usage(format!(
                    "a geometric grid needs positive endpoints, got {from} and {to}"
                )));
            }
            let log_ratio = (to / from).ln();
            (0..points)
                .map(|k| from * (log_ratio * k as f64 / last).exp())
                .collect()
        }
    };
    let mut values: Vec<f64> = values;
    values[0] = from;
    values[points - 1] = to;
    Ok(values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// Base strategy; the swept parameter replaces its counterpart.
    pub strategy: StrategySpec,
    /// Evidence for the `eps` and `a1` axes; the `delta` axis always uses e-values.
    pub evidence: EvidenceModel,
    pub n_trials: u64,
    pub seed: u64,
    pub workers: usize,
    pub z_slack: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub n: u64,
    pub mean: f64,
    pub std_error: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub closed_form: Option<f64>,
    pub z_vs_closed_form: Option<f64>,
    /// `E r_alpha <= 1` within the slack.
    pub valid: bool,
}

fn sweep_point(opts: &SweepOptions, value: f64) -> Result<(StrategySpec, EvidenceModel, Option<f64>), CliError> {
    let exact = opts.evidence.is_exact();
    match (opts.axis, &opts.strategy) {
        (SweepAxis::Eps, StrategySpec::ContinuumGreedy { cap, .. }) => {
            let spec = StrategySpec::continuum(cap.value(), value)?;
            let closed = exact.then(|| continuum_truncated_expected_ratio(*cap, value)).transpose()?;
            Ok((spec, opts.evidence, closed))
        }
        (SweepAxis::A1, StrategySpec::TwoThreshold { a2, .. }) => {
            let a1 = Alpha::new(value)?;
            let closed = exact.then(|| two_threshold_expected_ratio(a1, *a2)).transpose()?;
            let spec = if a1 == *a2 {
                StrategySpec::Fixed { a: *a2 }
            } else {
                StrategySpec::two_threshold(value, a2.value())?
            };
            Ok((spec, opts.evidence, closed))
        }
        (SweepAxis::Delta, spec) => {
            let evidence = EvidenceModel::CalibratedE { delta_design: value };
            evidence.validate()?;
            Ok((spec.clone(), evidence, None))
        }
        (SweepAxis::Eps, other) => Err(CliError::Usage(format!(
            "the eps axis needs a `cont` base strategy, got `{other}`"
        ))),
        (SweepAxis::A1, other) => Err(CliError::Usage(format!(
            "the a1 axis needs a `two` base strategy, got `{other}`"
        ))),
    }
}

/// One simulation per grid value, all with the same seed.
pub fn sweep(opts: &SweepOptions) -> Result<Vec<SweepRow>, CliError> {
    if opts.values.len() < 2 {
        return Err(CliError::Usage(format!(
            "a sweep needs at least 2 grid points, got {}",
            opts.values.len()
        )));
    }
    opts.values
        .iter()
        .map(|&value| {
            let (strategy, evidence, closed_form) = sweep_point(opts, value)?;
            let config = SimulationConfig::new(strategy, evidence, opts.n_trials, opts.seed)
                .with_workers(opts.workers);
            let report = run_simulation(&config)?;
            let est = report.expected_ratio;
            let z_vs_closed_form = closed_form.map(|c| {
                let diff = (est.mean - c).abs();
                if diff == 0.0 {
                    0.0
                } else {
                    diff / est.std_error
                }
            });
            Ok(SweepRow {
                axis: opts.axis,
                value,
                n: est.n,
                mean: est.mean,
                std_error: est.std_error,
                ci95_low: est.ci95_low,
                ci95_high: est.ci95_high,
                closed_form,
                z_vs_closed_form,
                valid: verify_post_hoc_validity(&report, opts.z_slack).is_valid(),
            })
        })
        .collect()
}

pub fn sweep_oracle_failed(rows: &[SweepRow]) -> bool {
    rows.iter()
        .any(|r| r.z_vs_closed_form.is_some_and(|z| z > ORACLE_Z_LIMIT))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_two_threshold() {
        let out = exact("two:0.005,0.05").unwrap();
        assert!((out.report.expected_ratio.finite().unwrap() - 1.9).abs() < 1e-12);
    }

    #[test]
    fn exact_limit_diverges() {
        let out = exact("cont:0.05,0").unwrap();
        assert_eq!(out.report.expected_ratio, posthoc_core::ExpectedRatio::Diverges);
    }

    #[test]
    fn error_classes() {
        assert!(matches!(exact("nope"), Err(CliError::Usage(_))));
        assert!(matches!(exact("two:0.05,0.005"), Err(CliError::Config(_))));
        assert!(matches!(parse_runnable_strategy("cont:0.05,0"), Err(CliError::Usage(_))));
    }

    #[test]
    fn grids() {
        let g = grid(1e-2, 1e-5, 4, GridScale::Geometric).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!((g[0], g[3]), (1e-2, 1e-5));
        assert!((g[1] - 1e-3).abs() < 1e-15 && (g[2] - 1e-4).abs() < 1e-16);
        let g = grid(0.0, 1.0, 5, GridScale::Linear).unwrap();
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(grid(0.0, 1.0, 1, GridScale::Linear).is_err());
        assert!(grid(0.0, 1.0, 3, GridScale::Geometric).is_err());
    }

    #[test]
    fn sweep_axis_must_match_strategy() {
        let opts = SweepOptions {
            axis: SweepAxis::Eps,
            values: vec![1e-2, 1e-3],
            strategy: "two:0.005,0.05".parse().unwrap(),
            evidence: EvidenceModel::ExactUniform,
            n_trials: 100,
            seed: 0,
            workers: 1,
            z_slack: 3.0,
        };
        assert!(matches!(sweep(&opts), Err(CliError::Usage(_))));
        let opts = SweepOptions { values: vec![1e-2], strategy: "cont:0.05,1e-3".parse().unwrap(), ..opts };
        assert!(matches!(sweep(&opts), Err(CliError::Usage(_))));
    }

    #[test]
    fn compare_arms_share_statistics() {
        let opts = CompareOptions {
            strategy: "two:0.005,0.05".parse().unwrap(),
            delta: 0.5,
            n_trials: 10_000,
            seed: 3,
            workers: 2,
            z_slack: 3.0,
            bin_edges: None,
        };
        let out = compare(&opts).unwrap();
        let raw = SimulationConfig::new(opts.strategy.clone(), EvidenceModel::GaussianZ { delta_design: 0.5 }, 10, 3);
        let cal = SimulationConfig::new(opts.strategy.clone(), EvidenceModel::CalibratedE { delta_design: 0.5 }, 10, 3);
        for i in 0..10 {
            let r = posthoc_core::montecarlo::simulate_trial(&raw, i).unwrap();
            let c = posthoc_core::montecarlo::simulate_trial(&cal, i).unwrap();
            assert_eq!(r.statistic, c.statistic);
            // the calibrated p-value is never smaller than the z-test's
            assert!(c.p.value() >= r.p.value());
        }
        assert!(out.raw.analytic_reference.is_some());
        assert!(out.calibrated.analytic_reference.is_none());
    }
}

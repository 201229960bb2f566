//! Closed forms under an exactly uniform null p-value.
//!
//! These are the reference values the Monte-Carlo engine is checked against.
//! The untruncated continuum rule has an infinite expected ratio; it is
//! reported as [`ExpectedRatio::Diverges`], never as a floating-point infinity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Alpha, Cell};
use crate::strategy::StrategySpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Derivation {
    Fixed,
    TwoThreshold,
    StepGreedy,
    ContinuumTruncated,
    ContinuumLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExpectedRatio {
    Finite { value: f64 },
    Diverges,
}

impl ExpectedRatio {
    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExpectedRatio::Finite { value } => Some(value),
            ExpectedRatio::Diverges => None,
        }
    }
}

/// Exact conditional rejection rate for one cell.
///
/// For an interval of levels the rate is constant but `r_a = 1/a` varies
/// pointwise, so `d_a` and `r_a` are left empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormRate {
    pub cell: Cell,
    pub cond_rate: f64,
    pub d_a: Option<f64>,
    pub r_a: Option<f64>,
}

impl ClosedFormRate {
    fn point(a: Alpha, cond_rate: f64) -> Self {
        Self {
            cell: Cell::Point { a },
            cond_rate,
            d_a: Some(cond_rate - a.value()),
            r_a: Some(cond_rate / a.value()),
        }
    }

    fn interval(lo: f64, hi: f64, cond_rate: f64) -> Self {
        Self {
            cell: Cell::Bin { lo, hi },
            cond_rate,
            d_a: None,
            r_a: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormReport {
    pub derivation: Derivation,
    pub rates: Vec<ClosedFormRate>,
    pub expected_ratio: ExpectedRatio,
}

/// `P(reject | alpha = a1)` and `P(reject | alpha = a2)` for the two-threshold rule:
/// `1` and `(a2 - a1) / (1 - a1)`.
pub fn two_threshold_conditional_rates(a1: Alpha, a2: Alpha) -> Result<(f64, f64)> {
    if a1 >= a2 {
        return Err(Error::InvalidStrategy(format!(
            "two-threshold rule needs a1 < a2, got a1 = {a1}, a2 = {a2}"
        )));
    }
    let (a1, a2) = (a1.value(), a2.value());
    Ok((1.0, (a2 - a1) / (1.0 - a1)))
}

/// `E(phi/alpha) = 1 + (a2 - a1) / a2` for the two-threshold rule.
///
/// `a1 == a2` is accepted (it is a fixed-level test, value 1) with a warning.
pub fn two_threshold_expected_ratio(a1: Alpha, a2: Alpha) -> Result<f64> {
    if a1 > a2 {
        return Err(Error::InvalidStrategy(format!(
            "two-threshold rule needs a1 <= a2, got a1 = {a1}, a2 = {a2}"
        )));
    }
    if a1 == a2 {
        log::warn!("degenerate two-threshold rule a1 = a2 = {a1}; this is a fixed-level test");
        return Ok(1.0);
    }
    Ok(1.0 + (a2.value() - a1.value()) / a2.value())
}

/// `E(phi/alpha) = sum_j (t_j - t_{j-1}) / t_j` with `t_0 = 0`.
pub fn step_expected_ratio(thresholds: &[Alpha]) -> Result<f64> {
    StrategySpec::StepGreedy { thresholds: thresholds.to_vec() }.validate()?;
    let mut prev = 0.0;
    let mut total = 0.0;
    for t in thresholds.iter().map(|t| t.value()) {
        total += (t - prev) / t;
        prev = t;
    }
    Ok(total)
}

/// `E(phi/alpha) = 1 + ln(C / eps)` for the continuum rule floored at `eps`.
///
/// The mass `eps` below the floor contributes `eps * (1/eps) = 1`; levels in
/// `(eps, C]` contribute `int_eps^C dx/x`.
pub fn continuum_truncated_expected_ratio(cap: Alpha, floor: f64) -> Result<f64> {
    if !(floor > 0.0 && floor <= cap.value()) {
        return Err(Error::InvalidParameter(format!(
            "truncated continuum needs 0 < eps <= C, got C = {cap}, eps = {floor}"
        )));
    }
    Ok(1.0 + (cap.value() / floor).ln())
}

/// A fixed level is calibrated: `P(p <= a) / a = 1`.
pub fn fixed_alpha_expected_ratio(_a: Alpha) -> f64 {
    1.0
}

/// Full closed-form report for a runnable strategy.
pub fn closed_form(spec: &StrategySpec) -> Result<ClosedFormReport> {
    spec.validate()?;
    let report = match spec {
        StrategySpec::Fixed { a } => ClosedFormReport {
            derivation: Derivation::Fixed,
            rates: vec![ClosedFormRate::point(*a, a.value())],
            expected_ratio: ExpectedRatio::Finite { value: fixed_alpha_expected_ratio(*a) },
        },
        StrategySpec::TwoThreshold { a1, a2 } => {
            let (r1, r2) = two_threshold_conditional_rates(*a1, *a2)?;
            ClosedFormReport {
                derivation: Derivation::TwoThreshold,
                rates: vec![ClosedFormRate::point(*a1, r1), ClosedFormRate::point(*a2, r2)],
                expected_ratio: ExpectedRatio::Finite {
                    value: two_threshold_expected_ratio(*a1, *a2)?,
                },
            }
        }
        StrategySpec::StepGreedy { thresholds } => {
            let k = thresholds.len();
            let rates = thresholds
                .iter()
                .enumerate()
                .map(|(j, &t)| {
                    let rate = match (j, k) {
                        (_, 1) => t.value(),
                        (j, k) if j + 1 < k => 1.0,
                        _ => {
                            let below = thresholds[j - 1].value();
                            (t.value() - below) / (1.0 - below)
                        }
                    };
                    ClosedFormRate::point(t, rate)
                })
                .collect();
            ClosedFormReport {
                derivation: Derivation::StepGreedy,
                rates,
                expected_ratio: ExpectedRatio::Finite { value: step_expected_ratio(thresholds)? },
            }
        }
        StrategySpec::ContinuumGreedy { cap, floor } => {
            let value = continuum_truncated_expected_ratio(*cap, *floor)?;
            let rates = if *floor < cap.value() {
                let floor_alpha = Alpha::new(*floor)?;
                vec![
                    ClosedFormRate::point(floor_alpha, 1.0),
                    ClosedFormRate::interval(*floor, cap.value(), 1.0),
                    ClosedFormRate::point(*cap, 0.0),
                ]
            } else {
                vec![ClosedFormRate::point(*cap, cap.value())]
            };
            ClosedFormReport {
                derivation: Derivation::ContinuumTruncated,
                rates,
                expected_ratio: ExpectedRatio::Finite { value },
            }
        }
    };
    Ok(report)
}

/// Closed form of the untruncated rule `alpha = p` capped at `C`.
pub fn closed_form_limit(cap: Alpha) -> ClosedFormReport {
    ClosedFormReport {
        derivation: Derivation::ContinuumLimit,
        rates: vec![
            ClosedFormRate::interval(0.0, cap.value(), 1.0),
            ClosedFormRate::point(cap, 0.0),
        ],
        expected_ratio: ExpectedRatio::Diverges,
    }
}

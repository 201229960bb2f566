//! Domain values shared by every other module.
//!
//! All probabilities and expectations in this crate are taken under the null
//! hypothesis. A test at level `alpha` rejects when `p <= alpha`; ties reject.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An exact p-value in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PValue(f64);

impl PValue {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value <= 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidPValue(value))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for PValue {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<PValue> for f64 {
    fn from(p: PValue) -> f64 {
        p.0
    }
}

impl fmt::Display for PValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A significance level in `(0, 1]`.
///
/// Also used for the threshold parameters of the strategies (the two
/// standard levels, the cap of the continuum rule).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value <= 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidAlpha(value))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Alpha {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A finite, non-negative e-value.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct EValue(f64);

impl EValue {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value >= 0.0 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidEValue(value))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for EValue {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<EValue> for f64 {
    fn from(e: EValue) -> f64 {
        e.0
    }
}

/// The test decision `phi_alpha`: reject iff `p <= alpha`.
#[inline]
pub fn reject(p: PValue, alpha: Alpha) -> bool {
    p.0 <= alpha.0
}

/// One simulated study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Scalar summary of the data. The z-statistic for Gaussian models, the
    /// p-value itself for the exact-uniform model.
    pub statistic: f64,
    /// The p-value the strategy sees (the calibrated `min(1, 1/e)` for e-value models).
    pub p: PValue,
    /// The e-value behind `p`, for e-value models only.
    pub e: Option<EValue>,
    pub alpha: Alpha,
    pub rejected: bool,
    /// `phi_alpha / alpha`: `1/alpha` on rejection, otherwise 0.
    pub ratio_term: f64,
}

impl TrialRecord {
    pub fn new(statistic: f64, p: PValue, e: Option<EValue>, alpha: Alpha) -> Self {
        let rejected = reject(p, alpha);
        let ratio_term = if rejected { 1.0 / alpha.value() } else { 0.0 };
        Self {
            statistic,
            p,
            e,
            alpha,
            rejected,
            ratio_term,
        }
    }
}

/// A conditioning cell of the data-dependent level: a single reachable value,
/// or a bin `(lo, hi]` of a continuum of values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Cell {
    Point { a: Alpha },
    Bin { lo: f64, hi: f64 },
}

impl Cell {
    /// The level a row is reported against: the point itself, or the
    /// geometric midpoint of a bin.
    pub fn representative(&self) -> f64 {
        match *self {
            Cell::Point { a } => a.value(),
            Cell::Bin { lo, hi } => (lo * hi).sqrt(),
        }
    }

    pub fn contains(&self, alpha: f64) -> bool {
        match *self {
            Cell::Point { a } => alpha == a.value(),
            Cell::Bin { lo, hi } => lo < alpha && alpha <= hi,
        }
    }

    pub fn is_bin(&self) -> bool {
        matches!(self, Cell::Bin { .. })
    }
}

/// Conditional type-I error summary for one cell.
///
/// `cond_rate`, `d_a` and `r_a` are `None` when no trial landed in the cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyRow {
    pub cell: Cell,
    pub a: f64,
    pub n_conditional: u64,
    pub n_rejected: u64,
    pub cond_rate: Option<f64>,
    pub d_a: Option<f64>,
    pub r_a: Option<f64>,
}

impl DiscrepancyRow {
    pub fn from_counts(cell: Cell, n_conditional: u64, n_rejected: u64) -> Self {
        debug_assert!(n_rejected <= n_conditional);
        let a = cell.representative();
        let cond_rate = (n_conditional > 0).then(|| n_rejected as f64 / n_conditional as f64);
        Self {
            cell,
            a,
            n_conditional,
            n_rejected,
            cond_rate,
            d_a: cond_rate.map(|rate| rate - a),
            r_a: cond_rate.map(|rate| rate / a),
        }
    }
}

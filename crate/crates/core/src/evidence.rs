//! Null-hypothesis generators for p-values and e-values.
//!
//! The Gaussian models observe one statistic `Z ~ N(0, 1)` under the null. The
//! e-value model scores it with the likelihood ratio of `N(delta, 1)` against
//! `N(0, 1)` and turns that into the conservative p-value `min(1, 1/e)`.

use rand::distr::OpenClosed01;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EValue, PValue};

pub const DEFAULT_DELTA: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvidenceModel {
    /// `p` drawn directly from the uniform distribution on `(0, 1]`.
    #[default]
    ExactUniform,
    /// One-sided z-test: `p = 1 - Phi(Z)`. `delta_design` is carried but unused.
    GaussianZ { delta_design: f64 },
    /// Likelihood-ratio e-value of `Z`, seen through `p* = min(1, 1/e)`.
    CalibratedE { delta_design: f64 },
}

/// One null draw from an evidence model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub statistic: f64,
    pub p: PValue,
    pub e: Option<EValue>,
}

impl EvidenceModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EvidenceModel::ExactUniform => Ok(()),
            EvidenceModel::GaussianZ { delta_design } if delta_design >= 0.0 && delta_design.is_finite() => Ok(()),
            EvidenceModel::CalibratedE { delta_design } if delta_design > 0.0 && delta_design.is_finite() => Ok(()),
            EvidenceModel::GaussianZ { delta_design } => Err(Error::InvalidParameter(format!(
                "gaussian delta must be finite and >= 0, got {delta_design}"
            ))),
            EvidenceModel::CalibratedE { delta_design } => Err(Error::InvalidParameter(format!(
                "e-value delta must be finite and > 0, got {delta_design}"
            ))),
        }
    }

    /// Whether `p` is exactly uniform under the null, so the closed forms apply.
    pub fn is_exact(&self) -> bool {
        !matches!(self, EvidenceModel::CalibratedE { .. })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Draw> {
        match *self {
            EvidenceModel::ExactUniform => {
                let p = uniform_open_closed(rng)?;
                Ok(Draw { statistic: p.value(), p, e: None })
            }
            EvidenceModel::GaussianZ { .. } => {
                let z: f64 = rng.sample(StandardNormal);
                let p = PValue::new(normal_sf(z)).map_err(|_| Error::ZeroPValue)?;
                Ok(Draw { statistic: z, p, e: None })
            }
            EvidenceModel::CalibratedE { delta_design } => {
                let z: f64 = rng.sample(StandardNormal);
                let e = likelihood_ratio_e(z, delta_design)?;
                Ok(Draw { statistic: z, p: calibrate_to_p(e), e: Some(e) })
            }
        }
    }
}

fn uniform_open_closed<R: Rng + ?Sized>(rng: &mut R) -> Result<PValue> {
    let u: f64 = rng.sample(OpenClosed01);
    if u == 0.0 {
        return Err(Error::ZeroPValue);
    }
    PValue::new(u)
}

/// Draws an exact p-value under the null.
///
/// Only the exact models qualify; asking a calibrated e-value model for a null
/// p-value is a parameter error.
pub fn draw_null_p<R: Rng + ?Sized>(model: &EvidenceModel, rng: &mut R) -> Result<PValue> {
    if !model.is_exact() {
        return Err(Error::InvalidParameter(
            "draw_null_p needs an exact p-value model".into(),
        ));
    }
    model.draw(rng).map(|d| d.p)
}

/// Likelihood ratio `exp(delta * z - delta^2 / 2)` of `N(delta, 1)` to `N(0, 1)` at `z`.
pub fn likelihood_ratio_e(z: f64, delta: f64) -> Result<EValue> {
    if !z.is_finite() || delta < 0.0 || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "likelihood ratio needs finite z and delta >= 0, got z = {z}, delta = {delta}"
        )));
    }
    let e = (delta * z - 0.5 * delta * delta).exp();
    if e.is_finite() {
        EValue::new(e)
    } else {
        Err(Error::EValueOverflow { z, delta })
    }
}

/// The conservative p-value `min(1, 1/e)`; `e = 0` maps to 1.
pub fn calibrate_to_p(e: EValue) -> PValue {
    let e = e.value();
    let p = if e <= 1.0 { 1.0 } else { 1.0 / e };
    // 1/e of a finite e > 1 is in (0, 1)
    PValue::new(p).expect("calibrated p-value in (0, 1]")
}

/// Upper tail `1 - Phi(z)` of the standard normal, via `erfc`.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

//! Type-I error accounting for significance levels chosen after the p-value
//! has been seen.
//!
//! A researcher who picks `alpha` as a function of `p` no longer controls the
//! conditional rejection rate `P(reject | alpha = a)`, nor its average ratio
//! to the level, `E r_alpha = E(phi_alpha / alpha)`. This crate computes those
//! quantities exactly ([`analytic`]) and by simulation ([`montecarlo`]) for a
//! family of level-selection rules ([`strategy`]), and shows that p-values
//! obtained as `1/e` from an e-value ([`evidence`]) keep `E r_alpha <= 1`.
//!
//! ```
//! use posthoc_core::{run_simulation, EvidenceModel, SimulationConfig, StrategySpec};
//!
//! let strategy: StrategySpec = "two:0.005,0.05".parse().unwrap();
//! let config = SimulationConfig::new(strategy, EvidenceModel::ExactUniform, 100_000, 1);
//! let report = run_simulation(&config).unwrap();
//! assert!((report.expected_ratio.mean - 1.9).abs() < 0.1);
//! ```

pub mod analytic;
pub mod error;
pub mod evidence;
pub mod model;
pub mod montecarlo;
pub mod rng;
pub mod strategy;
pub mod summation;

pub use analytic::{closed_form, closed_form_limit, ClosedFormReport, Derivation, ExpectedRatio};
pub use error::{Error, Result};
pub use evidence::{calibrate_to_p, draw_null_p, likelihood_ratio_e, EvidenceModel};
pub use model::{reject, Alpha, Cell, DiscrepancyRow, EValue, PValue, TrialRecord};
pub use montecarlo::{
    conditional_rate_table, run_simulation, verify_post_hoc_validity, Estimate, SimulationConfig,
    SimulationReport, Verdict,
};
pub use strategy::{Reachable, StrategyExpr, StrategySpec};

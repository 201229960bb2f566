//! Rules that pick the significance level after the p-value is known.
//!
//! Textual form, used on the command line and in serialized configs:
//!
//! ```text
//! fixed:<a>              always a
//! two:<a1>,<a2>          a1 if p <= a1, else a2
//! step:<a1>,...,<ak>     smallest threshold >= p, else the largest
//! cont:<C>,<eps>         max(eps, p) if p <= C, else C
//! ```
//!
//! Numbers may be plain decimals or scientific notation. `cont:<C>,0` denotes
//! the untruncated continuum rule; it only exists as an analytic limit and is
//! parsed into [`StrategyExpr::ContinuumLimit`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Alpha, PValue};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StrategySpec {
    Fixed { a: Alpha },
    TwoThreshold { a1: Alpha, a2: Alpha },
    StepGreedy { thresholds: Vec<Alpha> },
    /// The "alpha = p" rule, truncated below at `floor` so the ratio `1/alpha` stays bounded.
    ContinuumGreedy { cap: Alpha, floor: f64 },
}

/// The set of levels a strategy can end up at.
#[derive(Debug, Clone, PartialEq)]
pub enum Reachable {
    Finite(Vec<Alpha>),
    /// The closed interval `[lo, hi]`.
    Interval { lo: f64, hi: Alpha },
}

impl StrategySpec {
    pub fn fixed(a: f64) -> Result<Self> {
        Ok(StrategySpec::Fixed { a: Alpha::new(a)? })
    }

    pub fn two_threshold(a1: f64, a2: f64) -> Result<Self> {
        let spec = StrategySpec::TwoThreshold {
            a1: Alpha::new(a1)?,
            a2: Alpha::new(a2)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn step_greedy(thresholds: &[f64]) -> Result<Self> {
        let thresholds = thresholds
            .iter()
            .map(|&t| Alpha::new(t))
            .collect::<Result<Vec<_>>>()?;
        let spec = StrategySpec::StepGreedy { thresholds };
        spec.validate()?;
        Ok(spec)
    }

    pub fn continuum(cap: f64, floor: f64) -> Result<Self> {
        let spec = StrategySpec::ContinuumGreedy {
            cap: Alpha::new(cap)?,
            floor,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            StrategySpec::Fixed { .. } => Ok(()),
            StrategySpec::TwoThreshold { a1, a2 } => {
                if a1 < a2 {
                    Ok(())
                } else {
                    Err(Error::InvalidStrategy(format!(
                        "two-threshold rule needs a1 < a2, got a1 = {a1}, a2 = {a2}"
                    )))
                }
            }
            StrategySpec::StepGreedy { thresholds } => {
                if thresholds.is_empty() {
                    return Err(Error::InvalidStrategy(
                        "step rule needs at least one threshold".into(),
                    ));
                }
                if let Some(w) = thresholds.windows(2).find(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidStrategy(format!(
                        "step thresholds must be strictly increasing, got {} then {}",
                        w[0], w[1]
                    )));
                }
                Ok(())
            }
            StrategySpec::ContinuumGreedy { cap, floor } => {
                if *floor > 0.0 && *floor <= cap.value() {
                    Ok(())
                } else {
                    Err(Error::InvalidStrategy(format!(
                        "continuum rule needs 0 < eps <= C, got C = {cap}, eps = {floor}"
                    )))
                }
            }
        }
    }

    /// The level chosen after seeing `p`.
    pub fn select_alpha(&self, p: PValue) -> Alpha {
        let pv = p.value();
        match self {
            StrategySpec::Fixed { a } => *a,
            StrategySpec::TwoThreshold { a1, a2 } => {
                if pv <= a1.value() {
                    *a1
                } else {
                    *a2
                }
            }
            StrategySpec::StepGreedy { thresholds } => {
                let idx = thresholds.partition_point(|t| t.value() < pv);
                thresholds
                    .get(idx)
                    .or_else(|| thresholds.last())
                    .copied()
                    .expect("validated step rule is non-empty")
            }
            StrategySpec::ContinuumGreedy { cap, floor } => {
                if pv <= cap.value() {
                    // floor <= cap <= 1 and p in (0, 1]
                    Alpha::new(pv.max(*floor)).expect("level within (0, 1]")
                } else {
                    *cap
                }
            }
        }
    }

    pub fn reachable_alphas(&self) -> Reachable {
        match self {
            StrategySpec::Fixed { a } => Reachable::Finite(vec![*a]),
            StrategySpec::TwoThreshold { a1, a2 } => Reachable::Finite(vec![*a1, *a2]),
            StrategySpec::StepGreedy { thresholds } => Reachable::Finite(thresholds.clone()),
            StrategySpec::ContinuumGreedy { cap, floor } => Reachable::Interval {
                lo: *floor,
                hi: *cap,
            },
        }
    }

    pub fn is_continuum(&self) -> bool {
        matches!(self, StrategySpec::ContinuumGreedy { .. })
    }
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values
        .into_iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategySpec::Fixed { a } => write!(f, "fixed:{a}"),
            StrategySpec::TwoThreshold { a1, a2 } => write!(f, "two:{a1},{a2}"),
            StrategySpec::StepGreedy { thresholds } => {
                write!(f, "step:{}", join(thresholds.iter().map(|t| t.value())))
            }
            StrategySpec::ContinuumGreedy { cap, floor } => write!(f, "cont:{cap},{floor}"),
        }
    }
}

/// A parsed strategy string: either a runnable rule or the divergent
/// untruncated continuum rule `cont:<C>,0`.
#[derive(Debug, Clone, PartialEq)]
pub enum StrategyExpr {
    Spec(StrategySpec),
    ContinuumLimit { cap: Alpha },
}

fn parse_number(token: &str) -> Result<f64> {
    let value: f64 = token.trim().parse().map_err(|_| Error::Parse {
        token: token.to_string(),
        reason: "expected a decimal or scientific-notation number".into(),
    })?;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Parse {
            token: token.to_string(),
            reason: "number must be finite".into(),
        })
    }
}

fn parse_alpha(token: &str) -> Result<Alpha> {
    Alpha::new(parse_number(token)?)
}

impl FromStr for StrategyExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s.split_once(':').ok_or_else(|| Error::Parse {
            token: s.to_string(),
            reason: "expected <kind>:<params>, kind one of fixed, two, step, cont".into(),
        })?;
        let args: Vec<&str> = args.split(',').collect();
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::Parse {
                    token: s.to_string(),
                    reason: format!("`{kind}` takes {n} parameter(s), got {}", args.len()),
                })
            }
        };
        let spec = match kind {
            "fixed" => {
                arity(1)?;
                StrategySpec::Fixed { a: parse_alpha(args[0])? }
            }
            "two" => {
                arity(2)?;
                StrategySpec::TwoThreshold {
                    a1: parse_alpha(args[0])?,
                    a2: parse_alpha(args[1])?,
                }
            }
            "step" => StrategySpec::StepGreedy {
                thresholds: args.iter().map(|t| parse_alpha(t)).collect::<Result<_>>()?,
            },
            "cont" => {
                arity(2)?;
                let cap = parse_alpha(args[0])?;
                let floor = parse_number(args[1])?;
                if floor == 0.0 {
                    return Ok(StrategyExpr::ContinuumLimit { cap });
                }
                StrategySpec::ContinuumGreedy { cap, floor }
            }
            other => {
                return Err(Error::Parse {
                    token: other.to_string(),
                    reason: "unknown strategy kind; expected fixed, two, step or cont".into(),
                })
            }
        };
        spec.validate()?;
        Ok(StrategyExpr::Spec(spec))
    }
}

impl FromStr for StrategySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<StrategyExpr>()? {
            StrategyExpr::Spec(spec) => Ok(spec),
            StrategyExpr::ContinuumLimit { cap } => Err(Error::InvalidStrategy(format!(
                "cont:{cap},0 is the divergent analytic limit and cannot be simulated"
            ))),
        }
    }
}

impl TryFrom<String> for StrategySpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<StrategySpec> for String {
    fn from(spec: StrategySpec) -> String {
        spec.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: f64) -> PValue {
        PValue::new(x).unwrap()
    }

    fn sel(spec: &StrategySpec, x: f64) -> f64 {
        spec.select_alpha(p(x)).value()
    }

    #[test]
    fn selection_examples() {
        let two = StrategySpec::two_threshold(0.005, 0.05).unwrap();
        assert_eq!(sel(&two, 0.003), 0.005);
        assert_eq!(sel(&two, 0.02), 0.05);
        assert_eq!(sel(&two, 0.005), 0.005);
        assert_eq!(sel(&two, 0.9), 0.05);

        let cont = StrategySpec::continuum(0.05, 1e-6).unwrap();
        assert_eq!(sel(&cont, 0.2), 0.05);
        assert_eq!(sel(&cont, 0.01), 0.01);
        assert_eq!(sel(&cont, 1e-9), 1e-6);
        assert_eq!(sel(&cont, 0.05), 0.05);

        let step = StrategySpec::step_greedy(&[0.001, 0.005, 0.05]).unwrap();
        assert_eq!(sel(&step, 0.0005), 0.001);
        assert_eq!(sel(&step, 0.003), 0.005);
        assert_eq!(sel(&step, 0.005), 0.005);
        assert_eq!(sel(&step, 0.04), 0.05);
        assert_eq!(sel(&step, 0.7), 0.05);
    }

    #[test]
    fn reachable_examples() {
        let a = |x| Alpha::new(x).unwrap();
        assert_eq!(
            StrategySpec::two_threshold(0.005, 0.05).unwrap().reachable_alphas(),
            Reachable::Finite(vec![a(0.005), a(0.05)])
        );
        assert_eq!(
            StrategySpec::fixed(0.05).unwrap().reachable_alphas(),
            Reachable::Finite(vec![a(0.05)])
        );
        assert_eq!(
            StrategySpec::continuum(0.05, 1e-6).unwrap().reachable_alphas(),
            Reachable::Interval { lo: 1e-6, hi: a(0.05) }
        );
    }

    #[test]
    fn validation_errors() {
        assert!(StrategySpec::two_threshold(0.05, 0.005).is_err());
        assert!(StrategySpec::two_threshold(0.05, 0.05).is_err());
        assert!(StrategySpec::two_threshold(0.005, 1.0).is_ok());
        assert!(StrategySpec::step_greedy(&[]).is_err());
        assert!(StrategySpec::step_greedy(&[0.01, 0.01]).is_err());
        assert!(StrategySpec::continuum(0.05, 0.0).is_err());
        assert!(StrategySpec::continuum(0.05, 0.06).is_err());
        assert!(StrategySpec::continuum(0.05, 0.05).is_ok());
        assert!(StrategySpec::fixed(0.0).is_err());
    }

    #[test]
    fn grammar() {
        let parse = |s: &str| s.parse::<StrategyExpr>();
        assert_eq!(
            parse("two:0.005,0.05").unwrap(),
            StrategyExpr::Spec(StrategySpec::two_threshold(0.005, 0.05).unwrap())
        );
        assert_eq!(
            parse("cont:5e-2,1e-6").unwrap(),
            StrategyExpr::Spec(StrategySpec::continuum(0.05, 1e-6).unwrap())
        );
        assert_eq!(
            parse("cont:0.05,0").unwrap(),
            StrategyExpr::ContinuumLimit { cap: Alpha::new(0.05).unwrap() }
        );
        assert_eq!(
            parse("step:0.001,0.005,0.05").unwrap(),
            StrategyExpr::Spec(StrategySpec::step_greedy(&[0.001, 0.005, 0.05]).unwrap())
        );
        assert!(matches!(parse("two:0.005"), Err(Error::Parse { .. })));
        assert!(matches!(parse("bogus:1"), Err(Error::Parse { token, .. }) if token == "bogus"));
        assert!(matches!(parse("fixed:abc"), Err(Error::Parse { token, .. }) if token == "abc"));
        assert!(matches!(parse("fixed"), Err(Error::Parse { .. })));
        assert!(matches!(parse("fixed:1.5"), Err(Error::InvalidAlpha(_))));
        assert!(matches!(parse("two:0.05,0.005"), Err(Error::InvalidStrategy(_))));
        assert!("cont:0.05,0".parse::<StrategySpec>().is_err());
    }

    #[test]
    fn serde_uses_textual_form() {
        let spec = StrategySpec::continuum(0.05, 1e-6).unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, "\"cont:0.05,0.000001\"");
        assert_eq!(serde_json::from_str::<StrategySpec>(&json).unwrap(), spec);
    }

    /// 10^4 evenly spaced p-values in (0, 1], plus the thresholds themselves.
    fn grid(extra: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = (1..=10_000).map(|i| i as f64 / 10_000.0).collect();
        g.extend_from_slice(extra);
        g
    }

    #[test]
    fn step_reduces_to_fixed_and_two() {
        for (a1, a2) in [(0.005, 0.05), (0.01, 0.05), (0.0001, 0.5), (0.3, 1.0)] {
            let two = StrategySpec::two_threshold(a1, a2).unwrap();
            let step = StrategySpec::step_greedy(&[a1, a2]).unwrap();
            for x in grid(&[a1, a2]) {
                assert_eq!(sel(&two, x), sel(&step, x), "p = {x}");
            }
            let fixed = StrategySpec::fixed(a1).unwrap();
            let single = StrategySpec::step_greedy(&[a1]).unwrap();
            for x in grid(&[a1]) {
                assert_eq!(sel(&fixed, x), sel(&single, x), "p = {x}");
            }
        }
    }

    proptest! {
        #[test]
        fn textual_form_round_trips(a1 in 1e-8f64..0.5, gap in 1e-8f64..0.5, floor_frac in 1e-6f64..=1.0) {
            let a2 = a1 + gap;
            for spec in [
                StrategySpec::two_threshold(a1, a2).unwrap(),
                StrategySpec::step_greedy(&[a1, a2]).unwrap(),
                StrategySpec::fixed(a2).unwrap(),
                StrategySpec::continuum(a2, a2 * floor_frac).unwrap(),
            ] {
                let back: StrategySpec = spec.to_string().parse().unwrap();
                prop_assert_eq!(back, spec);
            }
        }

        #[test]
        fn greedy_picks_smallest_rejecting_threshold(
            mut ts in proptest::collection::btree_set(1u32..1000, 1..6),
            x in 1e-6f64..=1.0,
        ) {
            let thresholds: Vec<f64> = std::mem::take(&mut ts).into_iter().map(|t| t as f64 / 1000.0).collect();
            let spec = StrategySpec::step_greedy(&thresholds).unwrap();
            let chosen = sel(&spec, x);
            let rejecting: Vec<f64> = thresholds.iter().copied().filter(|&t| x <= t).collect();
            if let Some(&smallest) = rejecting.first() {
                prop_assert!(x <= chosen);
                prop_assert_eq!(chosen, smallest);
            } else {
                prop_assert_eq!(chosen, *thresholds.last().unwrap());
            }
        }

        #[test]
        fn continuum_rejects_iff_below_cap(cap in 1e-4f64..=1.0, frac in 1e-6f64..=1.0, x in 1e-9f64..=1.0) {
            let spec = StrategySpec::continuum(cap, cap * frac).unwrap();
            let chosen = spec.select_alpha(p(x));
            prop_assert_eq!(crate::model::reject(p(x), chosen), x <= cap);
        }

        #[test]
        fn selection_is_a_function_of_p(x in 1e-9f64..=1.0) {
            let spec = StrategySpec::continuum(0.05, 1e-4).unwrap();
            prop_assert_eq!(spec.select_alpha(p(x)), spec.select_alpha(p(x)));
        }
    }
}

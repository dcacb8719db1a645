//! Sequential policies for two-outcome partial-monitoring games.
//!
//! A policy interacts with the runner in strict alternation: `choose` picks
//! an action using the injected random source, the runner feeds back the
//! normalized feedback via `observe`, and so on. With two outcomes the
//! feedback either names the outcome (the played action was revealing) or
//! carries nothing.

mod appletree;
mod baselines;

use rand::RngCore;
use thiserror::Error;

use crate::games::{Game, GameClass};

pub use appletree::{leaf_parameters, root_band, AppleTree, LeafParameters};
pub use baselines::{ConstantPolicy, EwaPolicy, ForcedExploration, UniformPolicy};

/// Feedback for one round after normalization: either the outcome index
/// (0-based) revealed by a revealing action, or nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feedback {
    Reveal(usize),
    Hidden,
}

/// A sequential decision policy.
///
/// `choose` and `observe` must alternate, starting with `choose`;
/// implementations panic on protocol violations since only the runner
/// drives them.
pub trait Policy {
    /// Picks the action (index into the original game) for the next round.
    fn choose(&mut self, rng: &mut dyn RngCore) -> usize;

    /// Consumes the feedback for the round chosen last.
    fn observe(&mut self, feedback: Feedback);

    /// Probability, fixed at `choose` time, that this round's feedback
    /// reveals the outcome.
    fn reveal_prob(&self) -> f64;

    /// Number of times the policy restarted its top-level state so far.
    fn reset_count(&self) -> u64 {
        0
    }
}

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("policy requires an easy game, got {0}")]
    NotEasy(String),
    #[error("policy requires at least {needed} chain actions, game has {got}")]
    ChainTooShort { needed: usize, got: usize },
    #[error("policy requires a revealing action but the game has none")]
    NoRevealingAction,
    #[error("policy requires every action to be revealing; action {action} is not")]
    NotFullInformation { action: usize },
    #[error("action {given} out of range for a game with {n} actions")]
    BadAction { given: usize, n: usize },
    #[error("horizon must be at least 1")]
    BadHorizon,
    #[error("confidence delta must lie in (0, 1), got {0}")]
    BadDelta(f64),
    #[error("boundary band collapsed to zero width in floating point")]
    BandCollapsed,
    #[error("unknown policy spec {0:?}; expected appletree, forced[:c=..], constant:i, uniform, or ewa")]
    BadSpec(String),
}

/// Confidence parameter for policies that take one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaSpec {
    /// Resolve to 1/sqrt(T), the choice that turns the high-probability
    /// regret bound into an expected-regret bound.
    Auto,
    Fixed(f64),
}

impl DeltaSpec {
    pub fn resolve(self, t_horizon: u64) -> f64 {
        match self {
            DeltaSpec::Auto => 1.0 / (t_horizon as f64).sqrt(),
            DeltaSpec::Fixed(d) => d,
        }
    }
}

impl std::str::FromStr for DeltaSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(DeltaSpec::Auto);
        }
        s.parse::<f64>()
            .map(DeltaSpec::Fixed)
            .map_err(|_| format!("expected a number or \"auto\", got {s:?}"))
    }
}

/// Parsed policy selector, as written on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    AppleTree,
    /// Forced exploration with rate min(1, c * T^(-1/3)).
    Forced { c: f64 },
    /// Constant play of one action (stored 0-based).
    Constant { action: usize },
    Uniform,
    Ewa,
}

impl PolicySpec {
    /// Parses `appletree`, `forced`, `forced:c=0.5`, `constant:i` (1-based),
    /// `uniform`, or `ewa`.
    pub fn parse(s: &str) -> Result<PolicySpec, PolicyError> {
        let bad = || PolicyError::BadSpec(s.to_owned());
        let mut parts = s.split(':');
        let head = parts.next().ok_or_else(bad)?;
        match head {
            "appletree" => match parts.next() {
                None => Ok(PolicySpec::AppleTree),
                Some(_) => Err(bad()),
            },
            "forced" => {
                let mut c = 1.0;
                for part in parts {
                    let value = part.strip_prefix("c=").ok_or_else(bad)?;
                    c = value.parse().map_err(|_| bad())?;
                }
                Ok(PolicySpec::Forced { c })
            }
            "constant" => {
                let idx: usize = parts
                    .next()
                    .and_then(|p| p.parse().ok())
                    .filter(|&i| i >= 1)
                    .ok_or_else(bad)?;
                if parts.next().is_some() {
                    return Err(bad());
                }
                Ok(PolicySpec::Constant { action: idx - 1 })
            }
            "uniform" => match parts.next() {
                None => Ok(PolicySpec::Uniform),
                Some(_) => Err(bad()),
            },
            "ewa" => match parts.next() {
                None => Ok(PolicySpec::Ewa),
                Some(_) => Err(bad()),
            },
            _ => Err(bad()),
        }
    }

    /// Instantiates a fresh policy for one run.
    pub fn build(
        &self,
        game: &Game,
        t_horizon: u64,
        delta: f64,
    ) -> Result<Box<dyn Policy>, PolicyError> {
        match *self {
            PolicySpec::AppleTree => Ok(Box::new(AppleTree::new(game, t_horizon, delta)?)),
            PolicySpec::Forced { c } => {
                Ok(Box::new(ForcedExploration::new(game, t_horizon, c)?))
            }
            PolicySpec::Constant { action } => Ok(Box::new(ConstantPolicy::new(game, action)?)),
            PolicySpec::Uniform => Ok(Box::new(UniformPolicy::new(game)?)),
            PolicySpec::Ewa => Ok(Box::new(EwaPolicy::new(game, t_horizon)?)),
        }
    }

    pub fn label(&self) -> String {
        match self {
            PolicySpec::AppleTree => "appletree".into(),
            PolicySpec::Forced { c } => format!("forced:c={c}"),
            PolicySpec::Constant { action } => format!("constant:{}", action + 1),
            PolicySpec::Uniform => "uniform".into(),
            PolicySpec::Ewa => "ewa".into(),
        }
    }
}

pub(crate) fn class_display(class: &GameClass) -> String {
    class.name().to_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_policy_specs() {
        assert_eq!(PolicySpec::parse("appletree").unwrap(), PolicySpec::AppleTree);
        assert_eq!(PolicySpec::parse("forced").unwrap(), PolicySpec::Forced { c: 1.0 });
        assert_eq!(
            PolicySpec::parse("forced:c=0.5").unwrap(),
            PolicySpec::Forced { c: 0.5 }
        );
        assert_eq!(
            PolicySpec::parse("constant:2").unwrap(),
            PolicySpec::Constant { action: 1 }
        );
        assert_eq!(PolicySpec::parse("uniform").unwrap(), PolicySpec::Uniform);
        assert_eq!(PolicySpec::parse("ewa").unwrap(), PolicySpec::Ewa);
    }

    #[test]
    fn rejects_malformed_policy_specs() {
        for bad in ["", "apple", "constant", "constant:0", "constant:x", "forced:q=1", "uniform:3"] {
            assert!(PolicySpec::parse(bad).is_err(), "{bad:?} should not parse");
        }
    }

    #[test]
    fn delta_spec_resolves() {
        assert_eq!(DeltaSpec::Fixed(0.25).resolve(100), 0.25);
        assert_eq!(DeltaSpec::Auto.resolve(10_000), 0.01);
        assert_eq!("auto".parse::<DeltaSpec>().unwrap(), DeltaSpec::Auto);
        assert_eq!("0.1".parse::<DeltaSpec>().unwrap(), DeltaSpec::Fixed(0.1));
        assert!("xyz".parse::<DeltaSpec>().is_err());
    }
}

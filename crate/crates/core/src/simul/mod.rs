//! Oblivious environments, the game runner, and batch execution.
//!
//! Every environment commits to its full outcome sequence up front as a
//! deterministic function of (kind, seed, horizon), so nothing the learner
//! does can influence future outcomes. Outcomes are stored 0-based: value 0
//! is the first outcome column, value 1 the second.

mod batch;
mod runner;

use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::games::{chain, rational_to_f64, Chain, Game, Rational};
use crate::policies::{root_band, PolicyError};

pub use batch::{batch, batch_sequential, summarize, BatchConfig, BatchPoint, SummaryRow};
pub use runner::{run, run_prepared, RunRecord};

/// Per-run horizon cap; five per-step arrays at this length stay around a
/// gigabyte, anything larger is almost certainly a typo.
pub const MAX_HORIZON: u64 = 1 << 26;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("cannot read outcome file {path:?}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("unknown environment spec {0:?}; expected iid:p, fixed:@file or fixed:1,2,..., epspair:easy|hard[:k=1|2][:scale=s], or resetforcer[:switch=f]")]
    BadSpec(String),
    #[error("fixed outcome sequence has {got} entries but the horizon is {needed}")]
    FixedTooShort { needed: u64, got: usize },
    #[error("outcome token {0:?} is not 1 or 2")]
    BadOutcomeToken(String),
    #[error("outcome probability must lie in [0, 1], got {0}")]
    BadProbability(f64),
    #[error("perturbation {epsilon} around boundary {rho_star} leaves (0, 1)")]
    EpsilonOutOfRange { rho_star: f64, epsilon: f64 },
    #[error("environment {env} is not applicable: {what}")]
    EnvNotApplicable { env: String, what: String },
    #[error("horizon {0} exceeds the per-run limit {MAX_HORIZON}")]
    HorizonTooLarge(u64),
    #[error("horizon must be at least 1")]
    BadHorizon,
    #[error("switch fraction must lie in [0, 1], got {0}")]
    BadSwitch(f64),
    #[error("{0} must not be empty")]
    EmptyGrid(&'static str),
    #[error("cannot build thread pool: {0}")]
    ThreadPool(String),
}

/// Splitmix64 finalizer; full-avalanche 64-bit mixer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a per-run seed from the master seed, horizon, replicate index and
/// stream id (0 = environment, 1 = policy). The chain of mixes is fixed, so
/// batch results do not depend on execution order.
pub fn derive_seed(master: u64, t_horizon: u64, replicate: u64, stream: u64) -> u64 {
    let mut s = mix(master);
    s = mix(s ^ t_horizon);
    s = mix(s ^ replicate);
    mix(s ^ stream)
}

/// A fully resolved environment: concrete parameters plus the seed that
/// fixes its outcome sequence.
#[derive(Debug, Clone)]
pub struct Environment {
    pub kind: EnvKind,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub enum EnvKind {
    /// Outcome 2 drawn i.i.d. with the given probability.
    Iid { rho: f64 },
    /// A fixed sequence, replayed as-is; must cover the horizon.
    Fixed { outcomes: Arc<Vec<u8>> },
    /// I.i.d. draws from one of two models straddling a chain boundary:
    /// model 1 puts the outcome-2 probability at `rho_star - epsilon` (the
    /// earlier chain action of the pair is optimal), model 2 at
    /// `rho_star + epsilon`.
    EpsilonPair {
        rho_star: Rational,
        epsilon: Rational,
        model: u8,
    },
    /// Deterministic blocks that drive the running outcome-2 frequency
    /// alternately above `rho2 + margin` and below `rho1 - margin` with
    /// margin (rho2 - rho1)/6, then switch to constant outcome 2 after the
    /// `switch_time` fraction of the horizon.
    ResetForcer {
        rho1: Rational,
        rho2: Rational,
        switch_time: f64,
    },
}

impl Environment {
    /// The model distribution's outcome-2 probability, for kinds that have
    /// one.
    pub fn outcome2_prob(&self) -> Option<f64> {
        match &self.kind {
            EnvKind::Iid { rho } => Some(*rho),
            EnvKind::EpsilonPair { .. } => Some(rational_to_f64(&self.epsilon_pair_prob()?)),
            _ => None,
        }
    }

    /// Exact outcome-2 probability of an epsilon-pair model.
    pub fn epsilon_pair_prob(&self) -> Option<Rational> {
        match &self.kind {
            EnvKind::EpsilonPair {
                rho_star,
                epsilon,
                model,
            } => Some(if *model == 1 {
                rho_star - epsilon
            } else {
                rho_star + epsilon
            }),
            _ => None,
        }
    }
}

/// Generates the full outcome sequence for one run.
pub fn generate_outcomes(env: &Environment, t_horizon: u64) -> Result<Vec<u8>, SimError> {
    if t_horizon == 0 {
        return Err(SimError::BadHorizon);
    }
    if t_horizon > MAX_HORIZON {
        return Err(SimError::HorizonTooLarge(t_horizon));
    }
    let t = t_horizon as usize;
    match &env.kind {
        EnvKind::Iid { rho } => {
            if !(0.0..=1.0).contains(rho) {
                return Err(SimError::BadProbability(*rho));
            }
            Ok(bernoulli(*rho, t, env.seed))
        }
        EnvKind::Fixed { outcomes } => {
            if outcomes.len() < t {
                return Err(SimError::FixedTooShort {
                    needed: t_horizon,
                    got: outcomes.len(),
                });
            }
            Ok(outcomes[..t].to_vec())
        }
        EnvKind::EpsilonPair {
            rho_star, epsilon, ..
        } => {
            let p = env.epsilon_pair_prob().expect("kind checked above");
            if p <= Rational::zero() || p >= Rational::one() || epsilon.is_negative() {
                return Err(SimError::EpsilonOutOfRange {
                    rho_star: rational_to_f64(rho_star),
                    epsilon: rational_to_f64(epsilon),
                });
            }
            Ok(bernoulli(rational_to_f64(&p), t, env.seed))
        }
        EnvKind::ResetForcer {
            rho1,
            rho2,
            switch_time,
        } => {
            if !(0.0..=1.0).contains(switch_time) {
                return Err(SimError::BadSwitch(*switch_time));
            }
            Ok(reset_forcer(rho1, rho2, *switch_time, t))
        }
    }
}

fn bernoulli(p: f64, t: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..t).map(|_| u8::from(rng.gen::<f64>() < p)).collect()
}

/// Greedy oscillation schedule. The running frequency count2/t is compared
/// exactly in rationals against the targets, so the crossing points are
/// reproducible and independent of float rounding.
fn reset_forcer(rho1: &Rational, rho2: &Rational, switch_time: f64, t: usize) -> Vec<u8> {
    let margin = (rho2 - rho1) / Rational::from_integer(6.into());
    let lo = rho1 - &margin;
    let hi = rho2 + &margin;
    let cutoff = (switch_time * t as f64).floor() as usize;
    let mut out = Vec::with_capacity(t);
    let mut count2: i64 = 0;
    let mut pushing_twos = true;
    for step in 1..=t {
        if step > cutoff {
            out.push(1);
            continue;
        }
        out.push(u8::from(pushing_twos));
        count2 += i64::from(pushing_twos);
        let freq = Rational::new(count2.into(), (step as i64).into());
        if pushing_twos && freq > hi {
            pushing_twos = false;
        } else if !pushing_twos && freq < lo {
            pushing_twos = true;
        }
    }
    out
}

/// Environment selector as written on the command line; resolves to a
/// concrete [`Environment`] once the game, horizon and seed are known.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvTemplate {
    Iid {
        rho: f64,
    },
    Fixed {
        outcomes: Arc<Vec<u8>>,
        label: String,
    },
    /// `hard` selects the boundary between the first consecutive pair of
    /// non-revealing chain actions and scales epsilon like T^(-1/3); the
    /// easy variant uses the first chain boundary and T^(-1/2).
    EpsilonPair {
        hard: bool,
        model: u8,
        scale: f64,
    },
    ResetForcer {
        switch_time: f64,
    },
}

impl EnvTemplate {
    pub fn parse(s: &str) -> Result<EnvTemplate, SimError> {
        let bad = || SimError::BadSpec(s.to_owned());
        let mut parts = s.split(':');
        match parts.next().ok_or_else(bad)? {
            "iid" => {
                let rho: f64 = parts
                    .next()
                    .and_then(|p| p.parse().ok())
                    .ok_or_else(bad)?;
                if parts.next().is_some() {
                    return Err(bad());
                }
                if !(0.0..=1.0).contains(&rho) {
                    return Err(SimError::BadProbability(rho));
                }
                Ok(EnvTemplate::Iid { rho })
            }
            "fixed" => {
                let rest = parts.next().ok_or_else(bad)?;
                if parts.next().is_some() {
                    return Err(bad());
                }
                if let Some(path) = rest.strip_prefix('@') {
                    let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
                        path: PathBuf::from(path),
                        source,
                    })?;
                    Ok(EnvTemplate::Fixed {
                        outcomes: Arc::new(parse_outcome_tokens(&text)?),
                        label: format!("fixed:@{path}"),
                    })
                } else {
                    Ok(EnvTemplate::Fixed {
                        outcomes: Arc::new(parse_outcome_tokens(rest)?),
                        label: format!("fixed:{rest}"),
                    })
                }
            }
            "epspair" => {
                let hard = match parts.next() {
                    Some("easy") => false,
                    Some("hard") => true,
                    _ => return Err(bad()),
                };
                let mut model = 1u8;
                let mut scale = 0.3f64;
                for part in parts {
                    if let Some(k) = part.strip_prefix("k=") {
                        model = match k {
                            "1" => 1,
                            "2" => 2,
                            _ => return Err(bad()),
                        };
                    } else if let Some(v) = part.strip_prefix("scale=") {
                        scale = v.parse().map_err(|_| bad())?;
                    } else {
                        return Err(bad());
                    }
                }
                if !(scale > 0.0) || !scale.is_finite() {
                    return Err(bad());
                }
                Ok(EnvTemplate::EpsilonPair { hard, model, scale })
            }
            "resetforcer" => {
                let mut switch_time = 0.5f64;
                for part in parts {
                    if let Some(v) = part.strip_prefix("switch=") {
                        switch_time = v.parse().map_err(|_| bad())?;
                    } else {
                        return Err(bad());
                    }
                }
                if !(0.0..=1.0).contains(&switch_time) {
                    return Err(SimError::BadSwitch(switch_time));
                }
                Ok(EnvTemplate::ResetForcer { switch_time })
            }
            _ => Err(bad()),
        }
    }

    /// Reads a fixed sequence from a file of whitespace- or
    /// comma-separated outcome labels (1 or 2).
    pub fn fixed_from_file(path: &Path) -> Result<EnvTemplate, SimError> {
        let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
            path: path.to_owned(),
            source,
        })?;
        Ok(EnvTemplate::Fixed {
            outcomes: Arc::new(parse_outcome_tokens(&text)?),
            label: format!("fixed:@{}", path.display()),
        })
    }

    /// Canonical spec string, used in sweep metadata and CSV headers.
    pub fn label(&self) -> String {
        match self {
            EnvTemplate::Iid { rho } => format!("iid:{rho}"),
            EnvTemplate::Fixed { label, .. } => label.clone(),
            EnvTemplate::EpsilonPair { hard, model, scale } => format!(
                "epspair:{}:k={model}:scale={scale}",
                if *hard { "hard" } else { "easy" }
            ),
            EnvTemplate::ResetForcer { switch_time } => {
                format!("resetforcer:switch={switch_time}")
            }
        }
    }

    /// Resolves the template against a game and horizon.
    pub fn resolve(
        &self,
        game: &Game,
        t_horizon: u64,
        seed: u64,
    ) -> Result<Environment, SimError> {
        if t_horizon == 0 {
            return Err(SimError::BadHorizon);
        }
        let kind = match self {
            EnvTemplate::Iid { rho } => EnvKind::Iid { rho: *rho },
            EnvTemplate::Fixed { outcomes, .. } => EnvKind::Fixed {
                outcomes: Arc::clone(outcomes),
            },
            EnvTemplate::EpsilonPair { hard, model, scale } => {
                let ch = chain(game);
                let rho_star = if *hard {
                    hard_pair_boundary(game, &ch).ok_or_else(|| SimError::EnvNotApplicable {
                        env: self.label(),
                        what: "a consecutive pair of non-revealing chain actions".into(),
                    })?
                } else {
                    ch.boundaries
                        .first()
                        .cloned()
                        .ok_or_else(|| SimError::EnvNotApplicable {
                            env: self.label(),
                            what: "a chain with at least two actions".into(),
                        })?
                };
                let exponent = if *hard { -1.0 / 3.0 } else { -0.5 };
                let eps_f64 = scale * (t_horizon as f64).powf(exponent);
                let epsilon = Rational::from_float(eps_f64).expect("finite epsilon");
                let p1 = &rho_star - &epsilon;
                let p2 = &rho_star + &epsilon;
                if p1 <= Rational::zero() || p2 >= Rational::one() {
                    return Err(SimError::EpsilonOutOfRange {
                        rho_star: rational_to_f64(&rho_star),
                        epsilon: eps_f64,
                    });
                }
                EnvKind::EpsilonPair {
                    rho_star,
                    epsilon,
                    model: *model,
                }
            }
            EnvTemplate::ResetForcer { switch_time } => {
                let ch = chain(game);
                let (rho1, rho2) = forcer_band(&ch).ok_or_else(|| SimError::EnvNotApplicable {
                    env: self.label(),
                    what: "a chain with at least two actions".into(),
                })?;
                EnvKind::ResetForcer {
                    rho1,
                    rho2,
                    switch_time: *switch_time,
                }
            }
        };
        Ok(Environment { kind, seed })
    }
}

/// Boundary between the first consecutive pair of non-revealing chain
/// actions, if any.
fn hard_pair_boundary(game: &Game, ch: &Chain) -> Option<Rational> {
    ch.actions
        .windows(2)
        .position(|pair| !game.is_revealing(pair[0]) && !game.is_revealing(pair[1]))
        .map(|k| ch.boundaries[k].clone())
}

/// Band the reset forcer oscillates around: the shrunken root band when the
/// chain has three or more actions, otherwise a band of one third the
/// distance to the nearest endpoint on each side of the single boundary.
fn forcer_band(ch: &Chain) -> Option<(Rational, Rational)> {
    if let Some(band) = root_band(ch) {
        return Some(band);
    }
    let rho_star = ch.boundaries.first()?;
    let one = Rational::one();
    let gap = (&one - rho_star).min(rho_star.clone()) / Rational::from_integer(3.into());
    Some((rho_star - &gap, rho_star + &gap))
}

fn parse_outcome_tokens(text: &str) -> Result<Vec<u8>, SimError> {
    let mut out = Vec::new();
    for token in text.split(|c: char| c.is_whitespace() || c == ',') {
        match token {
            "" => continue,
            "1" => out.push(0),
            "2" => out.push(1),
            other => return Err(SimError::BadOutcomeToken(other.to_owned())),
        }
    }
    Ok(out)
}

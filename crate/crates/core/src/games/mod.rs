//! Finite partial-monitoring games with two outcomes.
//!
//! A game is given by an N x 2 loss matrix L and an N x 2 feedback matrix H.
//! Loss entries are exact rationals; feedback entries are opaque symbols that
//! are only ever compared for equality. With two outcomes an action `i` is
//! *revealing* iff its two feedback symbols differ, in which case observing
//! the feedback identifies the outcome.
//!
//! All structural analysis (domination, degeneracy, chains, classification)
//! is carried out in exact rational arithmetic; floating point appears only
//! when policies consume the results.

mod analyze;
mod classify;
pub mod examples;

use std::fmt;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Deserialize;
use thiserror::Error;

pub use analyze::{analyze, purify, remove_degenerate_nonrevealing, ActionAnalysis, PurifyMap};
pub use classify::{chain, classify, separation_holds, validate_certificate, Chain, GameClass};

/// Exact rational scalar used throughout game analysis.
pub type Rational = num_rational::BigRational;

/// Parses a rational from `"p/q"`, `"p"`, or a plain integer string.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (text, None),
    };
    let num: BigInt = num.parse().ok()?;
    let den: BigInt = match den {
        Some(d) => d.parse().ok()?,
        None => BigInt::one(),
    };
    if den.is_zero() {
        return None;
    }
    Some(Rational::new(num, den))
}

#[derive(Debug, Error)]
pub enum GameError {
    #[error("cannot read game file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed game document: {0}")]
    Parse(String),
    #[error("game has no actions")]
    Empty,
    #[error("loss row {row} has {len} entries, expected exactly 2 outcomes")]
    RaggedLoss { row: usize, len: usize },
    #[error("feedback row {row} has {len} entries, expected exactly 2 outcomes")]
    RaggedFeedback { row: usize, len: usize },
    #[error("loss matrix has {loss} rows but feedback matrix has {feedback}")]
    RowCountMismatch { loss: usize, feedback: usize },
    #[error("{names} action names given for {actions} actions")]
    NameCountMismatch { names: usize, actions: usize },
    #[error("loss entry at row {row}, column {col} is not a rational: {text}")]
    BadRational { row: usize, col: usize, text: String },
    #[error("action {action} is degenerate and revealing; the game is degenerate")]
    DegenerateGame { action: usize },
}

/// A finite two-outcome partial-monitoring game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Game {
    loss: Vec<[Rational; 2]>,
    feedback: Vec<[String; 2]>,
    names: Option<Vec<String>>,
}

impl Game {
    pub fn new(loss: Vec<[Rational; 2]>, feedback: Vec<[String; 2]>) -> Result<Self, GameError> {
        if loss.is_empty() {
            return Err(GameError::Empty);
        }
        if loss.len() != feedback.len() {
            return Err(GameError::RowCountMismatch {
                loss: loss.len(),
                feedback: feedback.len(),
            });
        }
        Ok(Game {
            loss,
            feedback,
            names: None,
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self, GameError> {
        if names.len() != self.loss.len() {
            return Err(GameError::NameCountMismatch {
                names: names.len(),
                actions: self.loss.len(),
            });
        }
        self.names = Some(names);
        Ok(self)
    }

    /// Builds a game from integer loss entries, handy in tests.
    pub fn from_ints(loss: &[[i64; 2]], feedback: &[[&str; 2]]) -> Result<Self, GameError> {
        let loss = loss
            .iter()
            .map(|row| [Rational::from_integer(row[0].into()), Rational::from_integer(row[1].into())])
            .collect();
        let feedback = feedback
            .iter()
            .map(|row| [row[0].to_owned(), row[1].to_owned()])
            .collect();
        Game::new(loss, feedback)
    }

    pub fn n_actions(&self) -> usize {
        self.loss.len()
    }

    pub fn loss(&self, action: usize, outcome: usize) -> &Rational {
        &self.loss[action][outcome]
    }

    pub fn loss_row(&self, action: usize) -> &[Rational; 2] {
        &self.loss[action]
    }

    pub fn feedback_row(&self, action: usize) -> &[String; 2] {
        &self.feedback[action]
    }

    /// An action is revealing iff its two feedback symbols differ.
    pub fn is_revealing(&self, action: usize) -> bool {
        self.feedback[action][0] != self.feedback[action][1]
    }

    pub fn name(&self, action: usize) -> Option<&str> {
        self.names.as_ref().map(|n| n[action].as_str())
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Expected loss of `action` when outcome 2 has frequency `rho`.
    pub fn expected_loss(&self, action: usize, rho: &Rational) -> Rational {
        let one = Rational::one();
        (&one - rho) * &self.loss[action][0] + rho * &self.loss[action][1]
    }

    /// Loss matrix converted to floating point, for policy runtime use.
    pub fn loss_f64(&self) -> Vec<[f64; 2]> {
        self.loss
            .iter()
            .map(|row| [rational_to_f64(&row[0]), rational_to_f64(&row[1])])
            .collect()
    }

    /// Keeps only the listed actions, in the given order.
    pub fn restrict(&self, actions: &[usize]) -> Result<Game, GameError> {
        let loss = actions.iter().map(|&i| self.loss[i].clone()).collect();
        let feedback = actions.iter().map(|&i| self.feedback[i].clone()).collect();
        let game = Game::new(loss, feedback)?;
        match &self.names {
            Some(names) => game.with_names(actions.iter().map(|&i| names[i].clone()).collect()),
            None => Ok(game),
        }
    }
}

impl fmt::Display for Game {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n_actions() {
            let label = match self.name(i) {
                Some(n) => n.to_owned(),
                None => format!("action {}", i + 1),
            };
            writeln!(
                f,
                "{label}: loss ({}, {}), feedback ({}, {}){}",
                self.loss[i][0],
                self.loss[i][1],
                self.feedback[i][0],
                self.feedback[i][1],
                if self.is_revealing(i) { " [revealing]" } else { "" },
            )?;
        }
        Ok(())
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().expect("rational representable as f64")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGame {
    loss: Vec<Vec<serde_json::Value>>,
    feedback: Vec<Vec<String>>,
    #[serde(default)]
    actions: Option<Vec<String>>,
}

fn loss_entry(value: &serde_json::Value, row: usize, col: usize) -> Result<Rational, GameError> {
    let bad = || GameError::BadRational {
        row: row + 1,
        col: col + 1,
        text: value.to_string(),
    };
    match value {
        serde_json::Value::Number(n) => {
            let i = n.as_i64().ok_or_else(bad)?;
            Ok(Rational::from_integer(i.into()))
        }
        serde_json::Value::String(s) => parse_rational(s).ok_or_else(bad),
        _ => Err(bad()),
    }
}

/// Parses a game from its JSON document form.
///
/// The document has a `loss` field (rows of integers or `"p/q"` strings),
/// a `feedback` field (rows of symbols), and an optional `actions` field
/// with one name per action.
pub fn parse_game(text: &str) -> Result<Game, GameError> {
    let raw: RawGame = serde_json::from_str(text).map_err(|e| GameError::Parse(e.to_string()))?;
    if raw.loss.is_empty() {
        return Err(GameError::Empty);
    }
    if raw.loss.len() != raw.feedback.len() {
        return Err(GameError::RowCountMismatch {
            loss: raw.loss.len(),
            feedback: raw.feedback.len(),
        });
    }
    let mut loss = Vec::with_capacity(raw.loss.len());
    for (i, row) in raw.loss.iter().enumerate() {
        if row.len() != 2 {
            return Err(GameError::RaggedLoss {
                row: i + 1,
                len: row.len(),
            });
        }
        loss.push([loss_entry(&row[0], i, 0)?, loss_entry(&row[1], i, 1)?]);
    }
    let mut feedback = Vec::with_capacity(raw.feedback.len());
    for (i, row) in raw.feedback.iter().enumerate() {
        if row.len() != 2 {
            return Err(GameError::RaggedFeedback {
                row: i + 1,
                len: row.len(),
            });
        }
        feedback.push([row[0].clone(), row[1].clone()]);
    }
    let game = Game::new(loss, feedback)?;
    match raw.actions {
        Some(names) => game.with_names(names),
        None => Ok(game),
    }
}

/// Loads a game from a JSON file on disk.
pub fn load_game(path: impl AsRef<Path>) -> Result<Game, GameError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| GameError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_game(&text)
}

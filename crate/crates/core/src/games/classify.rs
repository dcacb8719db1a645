//! Chains, separation, and the five-way minimax classification.

use std::fmt;

use num_traits::Zero;

use super::analyze::structure;
use super::{Game, Rational};

/// The non-dominated actions in play order.
///
/// Actions are the duplicate-group representatives of the hull vertices,
/// sorted by ascending loss on outcome 1 (equivalently descending loss on
/// outcome 2). `boundaries[k]` is the outcome-2 frequency where actions `k`
/// and `k + 1` have equal expected loss; below it the earlier action is
/// strictly better, above it the later one is.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    pub actions: Vec<usize>,
    pub boundaries: Vec<Rational>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Computes the chain of a game.
///
/// Dominated actions are skipped and duplicate groups are collapsed onto
/// their representative, so the indices refer to the game as given; on a
/// purified game this is simply all actions in chain order.
pub fn chain(game: &Game) -> Chain {
    let st = structure(game);
    let actions: Vec<usize> = st
        .hull_groups
        .iter()
        .map(|&gi| st.groups[gi].representative)
        .collect();
    let mut boundaries = Vec::with_capacity(actions.len().saturating_sub(1));
    for w in st.hull_groups.windows(2) {
        let a = &st.groups[w[0]].point;
        let b = &st.groups[w[1]].point;
        // Solve (1-rho) a1 + rho a2 = (1-rho) b1 + rho b2 exactly.
        let dx = &b[0] - &a[0];
        let dy = &a[1] - &b[1];
        let denom = &dx + &dy;
        debug_assert!(dx > Rational::zero() && dy > Rational::zero());
        boundaries.push(dx / denom);
    }
    debug_assert!(boundaries.windows(2).all(|w| w[0] < w[1]));
    Chain { actions, boundaries }
}

/// The separation condition: no two neighbouring chain actions are both
/// non-revealing. When it holds, every adjacent boundary can be tracked by
/// playing a revealing action from the pair that straddles it.
pub fn separation_holds(game: &Game) -> bool {
    let ch = chain(game);
    ch.actions
        .windows(2)
        .all(|w| game.is_revealing(w[0]) || game.is_revealing(w[1]))
}

/// Minimax-regret class of a game, with the witness that certifies it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GameClass {
    /// One action is optimal at every frequency; regret 0 is achievable.
    Trivial { optimal_action: usize },
    /// Regret grows as sqrt(T) up to logarithmic factors.
    Easy,
    /// Regret grows as T^(2/3); the pair is a neighbouring non-revealing pair.
    Hard { pair: (usize, usize) },
    /// No feedback ever reveals anything; regret grows linearly.
    Hopeless,
    /// A revealing action is dominated yet optimal somewhere; minimax regret
    /// sits between the easy and hard rates.
    Degenerate { action: usize },
}

impl GameClass {
    pub fn name(&self) -> &'static str {
        match self {
            GameClass::Trivial { .. } => "Trivial",
            GameClass::Easy => "Easy",
            GameClass::Hard { .. } => "Hard",
            GameClass::Hopeless => "Hopeless",
            GameClass::Degenerate { .. } => "Degenerate",
        }
    }

    /// Human-readable growth rate of the minimax regret.
    pub fn regret_rate(&self) -> &'static str {
        match self {
            GameClass::Trivial { .. } => "0",
            GameClass::Easy => "Θ̃(√T)",
            GameClass::Hard { .. } => "Θ(T^{2/3})",
            GameClass::Hopeless => "Θ(T)",
            GameClass::Degenerate { .. } => "between Ω(√T) and O(T^{2/3})",
        }
    }
}

impl fmt::Display for GameClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Classifies a game by its minimax regret growth rate.
///
/// The checks apply in a fixed order: a single-vertex chain is trivial no
/// matter what else holds, a game without revealing actions is hopeless, a
/// degenerate revealing action preempts the easy/hard split, and otherwise
/// the separation condition decides between easy and hard.
pub fn classify(game: &Game) -> GameClass {
    let ch = chain(game);
    if ch.len() == 1 {
        return GameClass::Trivial {
            optimal_action: ch.actions[0],
        };
    }
    if !(0..game.n_actions()).any(|i| game.is_revealing(i)) {
        return GameClass::Hopeless;
    }
    let analysis = super::analyze(game);
    if let Some(action) =
        (0..game.n_actions()).find(|&i| analysis.degenerate[i] && analysis.revealing[i])
    {
        return GameClass::Degenerate { action };
    }
    for w in ch.actions.windows(2) {
        if !game.is_revealing(w[0]) && !game.is_revealing(w[1]) {
            return GameClass::Hard { pair: (w[0], w[1]) };
        }
    }
    GameClass::Easy
}

/// Checks that the certificate carried by a classification actually holds in
/// the game. Used by tests and by consumers that re-load stored results.
pub fn validate_certificate(game: &Game, class: &GameClass) -> bool {
    match class {
        GameClass::Trivial { optimal_action } => {
            let a = *optimal_action;
            a < game.n_actions()
                && (0..game.n_actions()).all(|i| {
                    game.loss(a, 0) <= game.loss(i, 0) && game.loss(a, 1) <= game.loss(i, 1)
                })
        }
        GameClass::Hard { pair } => {
            let ch = chain(game);
            ch.actions
                .windows(2)
                .any(|w| (w[0], w[1]) == *pair)
                && !game.is_revealing(pair.0)
                && !game.is_revealing(pair.1)
        }
        GameClass::Degenerate { action } => {
            let analysis = super::analyze(game);
            *action < game.n_actions()
                && analysis.degenerate[*action]
                && analysis.revealing[*action]
        }
        GameClass::Easy => matches!(classify(game), GameClass::Easy),
        GameClass::Hopeless => matches!(classify(game), GameClass::Hopeless),
    }
}

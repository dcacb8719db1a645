//! The six classic two-outcome games bundled as constructors.
//!
//! The same games ship as JSON documents in the repository's `fixtures/`
//! directory; a test pins the files to these constructors.

use super::Game;

/// Losses and feedback coincide; only the second action's loss varies with
/// the outcome, and playing it reveals the outcome. Easy.
pub fn one_armed_bandit() -> Game {
    Game::from_ints(&[[0, 0], [-1, 1]], &[["0", "0"], ["-1", "1"]])
        .unwrap()
        .with_names(vec!["idle".into(), "arm".into()])
        .unwrap()
}

/// Sell an apple blindly or taste it (destroying it) to learn whether it was
/// rotten. Easy.
pub fn apple_tasting() -> Game {
    Game::from_ints(&[[1, 0], [0, 1]], &[["a", "a"], ["b", "c"]])
        .unwrap()
        .with_names(vec!["sale".into(), "taste".into()])
        .unwrap()
}

/// Classify emails, optionally paying one unit to request the true label;
/// only the label request reveals anything. Hard.
pub fn label_efficient() -> Game {
    Game::from_ints(&[[1, 1], [0, 1], [1, 0]], &[["a", "b"], ["c", "c"], ["d", "d"]])
        .unwrap()
        .with_names(vec!["request".into(), "spam".into(), "legit".into()])
        .unwrap()
}

/// A matching-pennies loss matrix whose feedback never reveals anything.
/// Hopeless.
pub fn hopeless() -> Game {
    Game::from_ints(&[[1, 0], [0, 1]], &[["a", "a"], ["b", "b"]]).unwrap()
}

/// Action 2 is at least as good as every other action under both outcomes,
/// so constant play achieves zero regret. Trivial.
pub fn trivial() -> Game {
    Game::from_ints(&[[2, 1], [1, 0], [1, 1]], &[["a", "b"], ["c", "d"], ["e", "f"]]).unwrap()
}

/// The revealing middle action lies on the segment between the outer two:
/// dominated, yet optimal at the crossing frequency. Degenerate.
pub fn degenerate() -> Game {
    Game::from_ints(&[[2, 0], [1, 1], [0, 2]], &[["a", "a"], ["b", "c"], ["d", "d"]]).unwrap()
}

/// All six examples with stable labels, in presentation order.
pub fn all() -> Vec<(&'static str, Game)> {
    vec![
        ("one_armed_bandit", one_armed_bandit()),
        ("apple_tasting", apple_tasting()),
        ("label_efficient", label_efficient()),
        ("hopeless", hopeless()),
        ("trivial", trivial()),
        ("degenerate", degenerate()),
    ]
}
